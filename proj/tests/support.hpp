#pragma once

// Test-only helpers: a central finite-difference oracle, the Gaussian-blob
// fixture and scratch directories. Nothing here calls into the reverse pass.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "intentgan/nn.hpp"
#include "intentgan/rng.hpp"
#include "intentgan/ssgan.hpp"

namespace testing {

/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences of `loss` w.r.t. every entry of `values`, compared to
/// `analytic` (same layout). Returns the maximum relative error.
template <typename Derived, typename AnalyticDerived>
double max_fd_error(Eigen::MatrixBase<Derived>& values, const Eigen::MatrixBase<AnalyticDerived>& analytic,
                    const std::function<double()>& loss, double h = 1e-4) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            const double saved = values(r, c);
            values(r, c) = saved + h;
            const double up = loss();
            values(r, c) = saved - h;
            const double down = loss();
            values(r, c) = saved;
            worst = std::max(worst, relative_error(analytic(r, c), (up - down) / (2.0 * h)));
        }
    }
    return worst;
}

/// Max relative error over every weight and bias of `mlp`.
inline double max_fd_error(intentgan::nn::Mlp<double>& mlp, const intentgan::nn::Gradients<double>& grads,
                           const std::function<double()>& loss, double h = 1e-4) {
    double worst = 0.0;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        worst = std::max(worst, max_fd_error(mlp.layers[l].weight, grads.layers[l].weight, loss, h));
        worst = std::max(worst, max_fd_error(mlp.layers[l].bias, grads.layers[l].bias, loss, h));
    }
    return worst;
}

/// Smallest |pre-activation| in a forward pass; central differences are only
/// meaningful when no leaky-ReLU input sits within a step of its kink.
inline double min_abs_preactivation(const intentgan::nn::ForwardCache<double>& cache) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : cache.pre_activations) {
        if (z.size() > 0) m = std::min(m, z.cwiseAbs().minCoeff());
    }
    return m;
}

/// Gaussian blobs: `classes` unit-norm means in R^dim (normalized N(0, I)
/// draws), within-class noise N(0, sigma^2 I). Per class: `labeled` labeled
/// and `unlabeled` unlabeled train rows, `test` test rows.
struct Blobs {
    intentgan::TrainingSet train;
    intentgan::FeatureMatrix test_features;
    std::vector<std::size_t> test_labels;
    std::vector<std::size_t> labeled_rows;
};

inline Blobs make_blobs(std::size_t classes, std::size_t dim, double sigma, std::uint64_t seed,
                        std::size_t labeled, std::size_t unlabeled, std::size_t test) {
    intentgan::Rng root(seed);
    auto mean_rng = root.split("blobs/means");
    auto point_rng = root.split("blobs/points");
    std::vector<Eigen::VectorXd> means;
    for (std::size_t c = 0; c < classes; ++c) {
        Eigen::VectorXd m(static_cast<Eigen::Index>(dim));
        for (auto& v : m) v = mean_rng.normal();
        means.push_back(m.normalized());
    }
    auto draw = [&](std::size_t c) {
        Eigen::VectorXd x = means[c];
        for (auto& v : x) v += sigma * point_rng.normal();
        return x;
    };
    Blobs b;
    const auto n_train = classes * (labeled + unlabeled);
    b.train.num_classes = classes;
    b.train.train_features.resize(static_cast<Eigen::Index>(n_train), static_cast<Eigen::Index>(dim));
    b.train.validation_features.resize(0, static_cast<Eigen::Index>(dim));
    std::size_t row = 0;
    for (std::size_t i = 0; i < labeled + unlabeled; ++i) {
        for (std::size_t c = 0; c < classes; ++c, ++row) {
            b.train.train_features.row(static_cast<Eigen::Index>(row)) = draw(c).cast<float>().transpose();
            if (i < labeled) {
                b.train.train_labels.push_back(c);
                b.labeled_rows.push_back(row);
            } else {
                b.train.train_labels.push_back(std::nullopt);
            }
        }
    }
    b.test_features.resize(static_cast<Eigen::Index>(classes * test), static_cast<Eigen::Index>(dim));
    row = 0;
    for (std::size_t i = 0; i < test; ++i) {
        for (std::size_t c = 0; c < classes; ++c, ++row) {
            b.test_features.row(static_cast<Eigen::Index>(row)) = draw(c).cast<float>().transpose();
            b.test_labels.push_back(c);
        }
    }
    return b;
}

/// Nearest-centroid classifier built from the labeled rows only.
inline double nearest_centroid_accuracy(const Blobs& b) {
    const auto k = b.train.num_classes;
    const auto dim = b.train.train_features.cols();
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), dim);
    std::vector<double> counts(k, 0.0);
    for (auto r : b.labeled_rows) {
        const auto c = *b.train.train_labels[r];
        centroids.row(static_cast<Eigen::Index>(c)) += b.train.train_features.row(static_cast<Eigen::Index>(r)).cast<double>();
        counts[c] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) centroids.row(static_cast<Eigen::Index>(c)) /= counts[c];
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < b.test_features.rows(); ++r) {
        Eigen::Index best = 0;
        (centroids.rowwise() - b.test_features.row(r).cast<double>()).rowwise().squaredNorm().minCoeff(&best);
        correct += static_cast<std::size_t>(best) == b.test_labels[static_cast<std::size_t>(r)] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(b.test_labels.size());
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("intentgan-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
