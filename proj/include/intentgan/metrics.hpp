#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "intentgan/dataset.hpp"
#include "intentgan/encoder.hpp"
#include "intentgan/ssgan.hpp"

namespace intentgan {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// counts(i, j) = number of examples of true class i predicted as j.
struct ConfusionMatrix {
    CountMatrix counts;

    std::size_t num_classes() const noexcept { return static_cast<std::size_t>(counts.rows()); }
    std::int64_t total() const { return counts.sum(); }
};

ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> truths, std::size_t num_classes);

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double mcc = 0.0;
    // Support-weighted variants, reported alongside the macro averages.
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
};

/// Macro averages are unweighted means over all K classes; a 0/0 class
/// metric is 0. MCC is the multiclass R_K statistic
///   (c s - sum_k p_k t_k) / sqrt((s^2 - sum_k p_k^2)(s^2 - sum_k t_k^2))
/// with c = trace, s = total, t = row sums, p = column sums; 0 when the
/// denominator is 0. Throws DataError for an empty matrix.
MetricsReport report(const ConfusionMatrix& cm);

struct MisclassRecord {
    std::size_t id = 0;
    std::string text;
    std::size_t true_class = 0;
    std::size_t predicted = 0;
    double p_predicted = 0.0;
    std::size_t runner_up = 0;
    double p_runner_up = 0.0;
};

/// Misclassified rows only, sorted by p_predicted descending (ties by id).
std::vector<MisclassRecord> misclass_records(const Eigen::MatrixXd& probabilities,
                                             const DatasetBundle& bundle,
                                             std::span<const std::size_t> ids);

std::vector<MisclassRecord> misclass_report(const GanModel& model, const DatasetBundle& bundle,
                                            Split split, const FeatureSource& source);

/// printf("%.9g").
std::string format_number(double value);

std::string format_curves(std::span<const EpochLog> logs);
void export_curves(std::span<const EpochLog> logs, const std::filesystem::path& path);
std::vector<EpochLog> parse_curves(std::string_view csv);
std::vector<EpochLog> read_curves(const std::filesystem::path& path);

/// (K+1) x (K+1) grid: header row and column carry class names.
std::string format_confusion_csv(const ConfusionMatrix& cm, const LabelVocab& vocab);
void export_confusion_csv(const ConfusionMatrix& cm, const LabelVocab& vocab,
                          const std::filesystem::path& path);

}  // namespace intentgan
