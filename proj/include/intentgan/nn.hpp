#pragma once

// Fixed-topology MLP engine: dense layers, leaky-ReLU, inverted dropout,
// hand-written reverse pass and Adam. Templated on the scalar so the same code
// trains in float and is checked against finite differences in double.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intentgan/errors.hpp"
#include "intentgan/rng.hpp"

namespace intentgan::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kLeakySlope = 0.2;

struct MlpSpec {
    std::vector<std::size_t> layer_dims;  // [d_in, h_1, ..., d_out]
    double dropout_rate = 0.2;
    double leaky_slope = kLeakySlope;

    void validate() const {
        if (layer_dims.size() < 2) throw ConfigError("MLP needs at least input and output dims");
        for (auto d : layer_dims) {
            if (d == 0) throw ConfigError("MLP layer dims must be positive");
        }
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw ConfigError("dropout rate must be in [0, 1)");
        }
    }

    friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

template <typename Scalar>
struct DenseLayer {
    Matrix<Scalar> weight;  // out x in
    Vector<Scalar> bias;    // out

    template <typename Other>
    DenseLayer<Other> cast() const {
        return {weight.template cast<Other>(), bias.template cast<Other>()};
    }
};

template <typename Scalar>
struct Mlp {
    MlpSpec spec;
    std::vector<DenseLayer<Scalar>> layers;

    std::size_t input_dim() const { return spec.layer_dims.front(); }
    std::size_t output_dim() const { return spec.layer_dims.back(); }

    template <typename Other>
    Mlp<Other> cast() const {
        Mlp<Other> out{spec, {}};
        for (const auto& l : layers) out.layers.push_back(l.template cast<Other>());
        return out;
    }
};

/// Glorot-uniform weights, zero biases. Draws are taken in double and cast,
/// so float and double models built from the same seed agree.
template <typename Scalar>
Mlp<Scalar> init_mlp(const MlpSpec& spec, Rng& rng) {
    spec.validate();
    Mlp<Scalar> mlp{spec, {}};
    for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        const auto fan_in = spec.layer_dims[l];
        const auto fan_out = spec.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer<Scalar> layer;
        layer.weight.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
            layer.weight.data()[i] = static_cast<Scalar>(bound * (2.0 * rng.uniform() - 1.0));
        }
        layer.bias = Vector<Scalar>::Zero(static_cast<Eigen::Index>(fan_out));
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

enum class Mode { train, eval };

template <typename Scalar>
struct ForwardCache {
    // inputs[l] is what layer l consumed; inputs[0] is the batch and
    // inputs.back() the penultimate activations (after dropout).
    std::vector<Matrix<Scalar>> inputs;
    std::vector<Matrix<Scalar>> pre_activations;  // hidden layers only
    std::vector<Matrix<Scalar>> masks;            // hidden layers, train mode with dropout > 0
    Matrix<Scalar> output;

    const Matrix<Scalar>& penultimate() const { return inputs.back(); }
};

template <typename Scalar>
struct Gradients {
    std::vector<DenseLayer<Scalar>> layers;
    Matrix<Scalar> input;
};

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

/// In train mode, each hidden activation is multiplied by a mask whose
/// entries are 0 (probability dropout_rate) or 1/(1 - dropout_rate); mask
/// draws are one rng.uniform() per entry in row-major order. Eval mode and
/// dropout_rate = 0 never touch `rng`.
template <typename Scalar>
ForwardCache<Scalar> forward(const Mlp<Scalar>& mlp, const Matrix<Scalar>& batch, Mode mode, Rng& rng) {
    if (static_cast<std::size_t>(batch.cols()) != mlp.input_dim()) {
        throw DataError("forward: batch has " + std::to_string(batch.cols()) +
                        " columns, network expects " + std::to_string(mlp.input_dim()));
    }
    ForwardCache<Scalar> cache;
    cache.inputs.push_back(batch);
    const auto slope = static_cast<Scalar>(mlp.spec.leaky_slope);
    const double rate = mlp.spec.dropout_rate;
    const bool use_dropout = mode == Mode::train && rate > 0.0;
    const auto keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));

    for (std::size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
        const auto& layer = mlp.layers[l];
        Matrix<Scalar> z = cache.inputs.back() * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        Matrix<Scalar> a = z.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? v : slope * v; });
        if (use_dropout) {
            Matrix<Scalar> mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < mask.size(); ++i) {
                mask.data()[i] = rng.uniform() >= rate ? keep_scale : Scalar(0);
            }
            a.array() *= mask.array();
            cache.masks.push_back(std::move(mask));
        }
        cache.pre_activations.push_back(std::move(z));
        cache.inputs.push_back(std::move(a));
    }
    const auto& last = mlp.layers.back();
    cache.output = cache.inputs.back() * last.weight.transpose();
    cache.output.rowwise() += last.bias.transpose();
    require_finite(cache.output, "network output");
    return cache;
}

/// Reverse pass. `grad_penultimate`, when given, is an extra upstream
/// gradient on the penultimate activations (the feature-matching path).
template <typename Scalar>
Gradients<Scalar> backward(const Mlp<Scalar>& mlp, const ForwardCache<Scalar>& cache,
                           const Matrix<Scalar>& grad_output,
                           const Matrix<Scalar>* grad_penultimate = nullptr) {
    if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
        throw DataError("backward: upstream gradient shape does not match network output");
    }
    if (grad_penultimate && (grad_penultimate->rows() != cache.penultimate().rows() ||
                             grad_penultimate->cols() != cache.penultimate().cols())) {
        throw DataError("backward: penultimate gradient shape mismatch");
    }
    const auto slope = static_cast<Scalar>(mlp.spec.leaky_slope);
    const bool has_masks = !cache.masks.empty();
    Gradients<Scalar> grads;
    grads.layers.resize(mlp.layers.size());

    Matrix<Scalar> upstream = grad_output;
    for (std::size_t l = mlp.layers.size(); l-- > 0;) {
        const auto& x = cache.inputs[l];
        auto& g = grads.layers[l];
        g.weight = upstream.transpose() * x;
        g.bias = upstream.colwise().sum().transpose();
        Matrix<Scalar> dx = upstream * mlp.layers[l].weight;
        if (l + 1 == mlp.layers.size() && grad_penultimate) dx += *grad_penultimate;
        if (l == 0) {
            grads.input = std::move(dx);
            break;
        }
        if (has_masks) dx.array() *= cache.masks[l - 1].array();
        const auto& z = cache.pre_activations[l - 1];
        dx.array() *= z.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? Scalar(1) : slope; }).array();
        upstream = std::move(dx);
    }
    for (const auto& g : grads.layers) {
        require_finite(g.weight, "weight gradient");
        require_finite(g.bias, "bias gradient");
    }
    return grads;
}

/// max + ln(sum(exp(x - max))), accumulated in double.
template <typename Derived>
double logsumexp(const Eigen::DenseBase<Derived>& row) {
    const double m = static_cast<double>(row.maxCoeff());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        sum += std::exp(static_cast<double>(row.derived().coeff(i)) - m);
    }
    return m + std::log(sum);
}

template <typename Scalar>
struct LossAndGrad {
    double loss = 0.0;
    Matrix<Scalar> grad;
};

/// Mean cross-entropy over rows; grad = (softmax - onehot) / rows.
template <typename Scalar>
LossAndGrad<Scalar> softmax_xent(const Matrix<Scalar>& logits, std::span<const std::size_t> targets) {
    if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
        throw DataError("softmax_xent: one target per row required");
    }
    LossAndGrad<Scalar> out{0.0, Matrix<Scalar>::Zero(logits.rows(), logits.cols())};
    if (logits.rows() == 0) return out;
    const double inv_n = 1.0 / static_cast<double>(logits.rows());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)]);
        if (t >= logits.cols()) throw DataError("softmax_xent: target index out of range");
        const double lse = logsumexp(logits.row(r));
        out.loss += lse - static_cast<double>(logits(r, t));
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            const double p = std::exp(static_cast<double>(logits(r, c)) - lse);
            out.grad(r, c) = static_cast<Scalar>((p - (c == t ? 1.0 : 0.0)) * inv_n);
        }
    }
    out.loss *= inv_n;
    return out;
}

template <typename Scalar>
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<DenseLayer<Scalar>> m;
    std::vector<DenseLayer<Scalar>> v;
};

template <typename Scalar>
AdamState<Scalar> make_adam(const Mlp<Scalar>& mlp, double lr) {
    AdamState<Scalar> state;
    state.lr = lr;
    for (const auto& l : mlp.layers) {
        DenseLayer<Scalar> zero{Matrix<Scalar>::Zero(l.weight.rows(), l.weight.cols()),
                                Vector<Scalar>::Zero(l.bias.size())};
        state.m.push_back(zero);
        state.v.push_back(std::move(zero));
    }
    return state;
}

namespace detail {

template <typename Param>
Param adam_update(Param& m, Param& v, const Param& param, const Param& grad, double beta1,
                  double beta2, double lr_m, double correction2, double eps) {
    using Scalar = typename Param::Scalar;
    m = Scalar(beta1) * m + Scalar(1.0 - beta1) * grad;
    v = Scalar(beta2) * v + Scalar(1.0 - beta2) * grad.cwiseProduct(grad);
    Param step = (m.array() / ((v.array() / Scalar(correction2)).sqrt() + Scalar(eps))).matrix();
    return param - Scalar(lr_m) * step;
}

}  // namespace detail

/// Bias-corrected Adam:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// Nothing is written if any updated value is non-finite.
template <typename Scalar>
void adam_step(Mlp<Scalar>& mlp, const Gradients<Scalar>& grads, AdamState<Scalar>& state) {
    if (grads.layers.size() != mlp.layers.size() || state.m.size() != mlp.layers.size()) {
        throw DataError("adam_step: parameter/gradient layer count mismatch");
    }
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        if (grads.layers[l].weight.rows() != mlp.layers[l].weight.rows() ||
            grads.layers[l].weight.cols() != mlp.layers[l].weight.cols() ||
            grads.layers[l].bias.size() != mlp.layers[l].bias.size()) {
            throw DataError("adam_step: gradient shape mismatch in layer " + std::to_string(l));
        }
    }
    const std::uint64_t t = state.step + 1;
    const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
    const double lr_m = state.lr / correction1;

    auto m = state.m;
    auto v = state.v;
    std::vector<DenseLayer<Scalar>> updated(mlp.layers.size());
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        updated[l].weight = detail::adam_update(m[l].weight, v[l].weight, mlp.layers[l].weight,
                                                grads.layers[l].weight, state.beta1, state.beta2,
                                                lr_m, correction2, state.eps);
        updated[l].bias = detail::adam_update(m[l].bias, v[l].bias, mlp.layers[l].bias,
                                              grads.layers[l].bias, state.beta1, state.beta2, lr_m,
                                              correction2, state.eps);
        if (!updated[l].weight.allFinite() || !updated[l].bias.allFinite()) {
            throw NumericError("adam_step: non-finite update in layer " + std::to_string(l));
        }
    }
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) mlp.layers[l] = std::move(updated[l]);
    state.m = std::move(m);
    state.v = std::move(v);
    state.step = t;
}

/// Row-wise stacking helper.
template <typename Scalar>
Matrix<Scalar> vstack(std::initializer_list<const Matrix<Scalar>*> parts) {
    Eigen::Index rows = 0;
    Eigen::Index cols = -1;
    for (const auto* p : parts) {
        if (p->rows() == 0) continue;
        if (cols >= 0 && p->cols() != cols) throw DataError("vstack: column mismatch");
        cols = p->cols();
        rows += p->rows();
    }
    if (cols < 0) cols = parts.size() ? (*parts.begin())->cols() : 0;
    Matrix<Scalar> out(rows, cols);
    Eigen::Index r = 0;
    for (const auto* p : parts) {
        if (p->rows() == 0) continue;
        out.middleRows(r, p->rows()) = *p;
        r += p->rows();
    }
    return out;
}

}  // namespace intentgan::nn
