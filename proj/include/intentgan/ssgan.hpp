#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentgan/dataset.hpp"
#include "intentgan/encoder.hpp"
#include "intentgan/nn.hpp"
#include "intentgan/rng.hpp"

namespace intentgan {

struct NoiseSpec {
    std::size_t dim = 100;
    double mean = 0.0;
    double stddev = 1.0;

    void validate() const;
    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Defaults: Adam, lr 0.01, 50 epochs, batch 64, dropout 0.2.
struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double lr = 0.01;
    std::optional<double> generator_lr;  // falls back to lr
    double dropout = 0.2;
    NoiseSpec noise;
    std::size_t generator_hidden = 512;
    std::size_t discriminator_hidden = 512;
    std::uint64_t seed = 0;
    double labeled_fraction = 1.0;

    void validate() const;
    double effective_generator_lr() const { return generator_lr.value_or(lr); }
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// i.i.d. Normal(mean, stddev^2) via Rng::normal, filled row-major.
template <typename Scalar>
nn::Matrix<Scalar> sample_noise(std::size_t batch_size, const NoiseSpec& spec, Rng& rng) {
    spec.validate();
    if (batch_size < 1) throw ConfigError("sample_noise: batch_size must be >= 1");
    nn::Matrix<Scalar> out(static_cast<Eigen::Index>(batch_size), static_cast<Eigen::Index>(spec.dim));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        out.data()[i] = static_cast<Scalar>(spec.mean + spec.stddev * rng.normal());
    }
    return out;
}

/// ln(1 - p(fake | row)) = logsumexp(real logits) - logsumexp(all logits); the
/// fake logit is the last column.
template <typename Derived>
double log_not_fake(const Eigen::DenseBase<Derived>& logits_row) {
    const auto k = logits_row.size() - 1;
    return nn::logsumexp(logits_row.head(k)) - nn::logsumexp(logits_row);
}

struct DiscriminatorLoss {
    double sup = 0.0;
    double unsup_real = 0.0;
    double unsup_fake = 0.0;
    double total() const { return sup + unsup_real + unsup_fake; }
};

struct GeneratorLoss {
    double feature_matching = 0.0;
    double fool = 0.0;
    double total() const { return feature_matching + fool; }
};

template <typename Scalar>
struct DiscriminatorStep {
    DiscriminatorLoss loss;
    nn::Gradients<Scalar> grads;  // grads.input: gradient w.r.t. the stacked [labeled; unlabeled; fake] rows
};

template <typename Scalar>
struct GeneratorStep {
    GeneratorLoss loss;
    nn::Gradients<Scalar> grads;  // generator parameters; grads.input is w.r.t. the noise
};

namespace detail {

// Adds w * d/dz [logsumexp(all) - logsumexp(real)] for one row.
template <typename Scalar, typename Row, typename GradRow>
void add_not_fake_grad(const Row& logits, GradRow&& grad, double weight) {
    const auto k = logits.size() - 1;
    const double lse_all = nn::logsumexp(logits);
    const double lse_real = nn::logsumexp(logits.head(k));
    for (Eigen::Index j = 0; j < logits.size(); ++j) {
        const double z = static_cast<double>(logits(j));
        double g = std::exp(z - lse_all);
        if (j < k) g -= std::exp(z - lse_real);
        grad(j) += static_cast<Scalar>(weight * g);
    }
}

}  // namespace detail

/// Discriminator objective L_D = L_sup + L_unsup_real + L_unsup_fake with
///   L_sup        = -mean_labeled ln p(y | x)
///   L_unsup_real = -mean_{labeled + unlabeled} ln(1 - p(fake | x))
///   L_unsup_fake = -mean_fake ln p(fake | x)
/// Empty groups contribute 0. One forward pass over the stacked rows.
template <typename Scalar>
DiscriminatorStep<Scalar> d_loss(const nn::Mlp<Scalar>& disc, const nn::Matrix<Scalar>& labeled,
                                 std::span<const std::size_t> labels,
                                 const nn::Matrix<Scalar>& unlabeled, const nn::Matrix<Scalar>& fake,
                                 nn::Mode mode, Rng& rng) {
    if (static_cast<std::size_t>(labeled.rows()) != labels.size()) {
        throw DataError("d_loss: one label per labeled row required");
    }
    const Eigen::Index num_classes = static_cast<Eigen::Index>(disc.output_dim()) - 1;
    for (auto y : labels) {
        if (static_cast<Eigen::Index>(y) >= num_classes) throw DataError("d_loss: label out of range");
    }
    const auto batch = nn::vstack<Scalar>({&labeled, &unlabeled, &fake});
    const auto cache = nn::forward(disc, batch, mode, rng);
    const auto& logits = cache.output;

    const Eigen::Index n_l = labeled.rows();
    const Eigen::Index n_real = n_l + unlabeled.rows();
    const Eigen::Index n_fake = fake.rows();
    DiscriminatorStep<Scalar> step;
    nn::Matrix<Scalar> grad = nn::Matrix<Scalar>::Zero(logits.rows(), logits.cols());

    for (Eigen::Index r = 0; r < n_l; ++r) {
        const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
        const double lse = nn::logsumexp(logits.row(r));
        step.loss.sup += lse - static_cast<double>(logits(r, y));
        const double w = 1.0 / static_cast<double>(n_l);
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double p = std::exp(static_cast<double>(logits(r, j)) - lse);
            grad(r, j) += static_cast<Scalar>(w * (p - (j == y ? 1.0 : 0.0)));
        }
    }
    if (n_l > 0) step.loss.sup /= static_cast<double>(n_l);

    for (Eigen::Index r = 0; r < n_real; ++r) {
        step.loss.unsup_real -= log_not_fake(logits.row(r));
        detail::add_not_fake_grad<Scalar>(logits.row(r), grad.row(r), 1.0 / static_cast<double>(n_real));
    }
    if (n_real > 0) step.loss.unsup_real /= static_cast<double>(n_real);

    for (Eigen::Index r = n_real; r < n_real + n_fake; ++r) {
        const double lse = nn::logsumexp(logits.row(r));
        step.loss.unsup_fake += lse - static_cast<double>(logits(r, num_classes));
        const double w = 1.0 / static_cast<double>(n_fake);
        for (Eigen::Index j = 0; j < logits.cols(); ++j) {
            const double p = std::exp(static_cast<double>(logits(r, j)) - lse);
            grad(r, j) += static_cast<Scalar>(w * (p - (j == num_classes ? 1.0 : 0.0)));
        }
    }
    if (n_fake > 0) step.loss.unsup_fake /= static_cast<double>(n_fake);

    step.grads = nn::backward(disc, cache, grad);
    return step;
}

/// Generator objective L_G = L_fm + L_fool with
///   L_fm   = || real_feature_mean - mean_fake f(G(z)) ||_2^2
///   L_fool = -mean_fake ln(1 - p(fake | G(z)))
/// where f is the discriminator's penultimate activation. The discriminator
/// is only read; gradients are returned for the generator.
template <typename Scalar>
GeneratorStep<Scalar> g_loss(const nn::Mlp<Scalar>& disc, const nn::Mlp<Scalar>& gen,
                             const nn::Vector<Scalar>& real_feature_mean,
                             const nn::Matrix<Scalar>& noise, nn::Mode mode, Rng& rng) {
    const auto gen_cache = nn::forward(gen, noise, mode, rng);
    const auto disc_cache = nn::forward(disc, gen_cache.output, mode, rng);
    const auto& features = disc_cache.penultimate();
    const auto& logits = disc_cache.output;
    if (real_feature_mean.size() != features.cols()) {
        throw DataError("g_loss: real feature mean has wrong dimension");
    }
    const Eigen::Index n = noise.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    GeneratorStep<Scalar> step;
    Eigen::VectorXd diff = real_feature_mean.template cast<double>();
    diff -= features.template cast<double>().colwise().mean().transpose();
    step.loss.feature_matching = diff.squaredNorm();
    nn::Matrix<Scalar> grad_features(features.rows(), features.cols());
    grad_features.rowwise() = (-2.0 * inv_n * diff).template cast<Scalar>().transpose();

    nn::Matrix<Scalar> grad_logits = nn::Matrix<Scalar>::Zero(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
        step.loss.fool -= log_not_fake(logits.row(r));
        detail::add_not_fake_grad<Scalar>(logits.row(r), grad_logits.row(r), inv_n);
    }
    step.loss.fool *= inv_n;

    const auto disc_grads = nn::backward(disc, disc_cache, grad_logits, &grad_features);
    step.grads = nn::backward(gen, gen_cache, disc_grads.input);
    return step;
}

/// Probabilities over the K real classes: softmax over all K+1 logits, then
/// renormalized over the first K. Computed in double; rows sum to 1.
template <typename Scalar>
Eigen::MatrixXd real_class_probabilities(const nn::Matrix<Scalar>& logits) {
    const Eigen::Index k = logits.cols() - 1;
    Eigen::MatrixXd out(logits.rows(), k);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const Eigen::VectorXd row = logits.row(r).template cast<double>().transpose();
        auto shifted_exp = [&row](double shift) {
            Eigen::VectorXd p(row.size());
            for (Eigen::Index j = 0; j < row.size(); ++j) p(j) = std::exp(row(j) - shift);
            return p;
        };
        Eigen::VectorXd p = shifted_exp(row.maxCoeff());
        p /= p.sum();
        double real_mass = p.head(k).sum();
        if (real_mass < 1e-200) {
            // Real mass is (near) underflow; shifting on the real maximum
            // leaves the renormalized distribution unchanged.
            p = shifted_exp(row.head(k).maxCoeff());
            real_mass = p.head(k).sum();
        }
        out.row(r) = (p.head(k) / real_mass).transpose();
    }
    return out;
}

/// Feature-space GAN: generator [noise, hidden, d] and discriminator
/// [d, hidden, K+1] (fake class = index K).
struct GanModel {
    nn::Mlp<float> generator;
    nn::Mlp<float> discriminator;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    TrainConfig config;
    std::vector<std::string> class_names;
    std::optional<HashedNgramConfig> encoder;  // set when trained on hashed features
};

GanModel init_gan(std::size_t feature_dim, std::size_t num_classes, const TrainConfig& config);

/// Eval-mode discriminator forward, returning real-class probabilities.
Eigen::MatrixXd predict(const GanModel& model, const FeatureMatrix& features);
Eigen::VectorXd predict(const GanModel& model, const FeatureVector& feature);

std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& probabilities);

struct EpochLog {
    std::size_t epoch = 0;
    double l_sup = 0.0;
    double l_unsup_real = 0.0;
    double l_unsup_fake = 0.0;
    double l_d = 0.0;
    double l_fm = 0.0;
    double l_fool = 0.0;
    double l_g = 0.0;
    double train_accuracy = 0.0;
    std::optional<double> validation_accuracy;

    friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

/// In-memory training inputs. Train rows without a label are unlabeled.
struct TrainingSet {
    FeatureMatrix train_features;
    std::vector<std::optional<std::size_t>> train_labels;
    FeatureMatrix validation_features;
    std::vector<std::size_t> validation_labels;
    std::size_t num_classes = 0;
};

/// Train rows are the train-split ids in ascending order; labels are kept
/// only for ids in `view.labeled_ids`.
TrainingSet make_training_set(const FeatureSource& source, const DatasetBundle& bundle,
                              const SemiSupervisedView& view);

struct TrainResult {
    GanModel model;
    std::vector<EpochLog> logs;
};

/// Alternating updates per batch: discriminator step on (labeled, unlabeled,
/// batch_size fakes), then a generator step on fresh noise against the
/// updated discriminator. Deterministic in (inputs, config).
TrainResult train(const TrainingSet& data, const TrainConfig& config);

/// Plain supervised MLP head [d, discriminator_hidden, K] trained with
/// cross-entropy on the labeled rows only, same epochs/batch/lr/dropout.
struct BaselineResult {
    nn::Mlp<float> head;
    std::vector<double> epoch_losses;
};
BaselineResult train_supervised_baseline(const TrainingSet& data, const TrainConfig& config);
Eigen::MatrixXd predict_baseline(const nn::Mlp<float>& head, const FeatureMatrix& features);

double accuracy(const Eigen::MatrixXd& probabilities, std::span<const std::size_t> labels);

}  // namespace intentgan
