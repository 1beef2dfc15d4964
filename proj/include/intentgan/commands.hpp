#pragma once

// Subcommand bodies of the command-line tool. Each throws an intentgan::Error
// subclass on failure; the tool maps Error::exit_code() to the process status.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "intentgan/metrics.hpp"
#include "intentgan/run_config.hpp"
#include "intentgan/ssgan.hpp"

namespace intentgan::commands {

// Fixed artifact names inside the output directory.
inline constexpr const char* kCheckpointFile = "checkpoint.gbnb";
inline constexpr const char* kCurvesFile = "curves.csv";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kConfusionFile = "confusion.csv";
inline constexpr const char* kMisclassifiedFile = "misclassified.jsonl";
inline constexpr const char* kResolvedConfigFile = "resolved-config.json";
inline constexpr const char* kReportFile = "report.md";

/// load_clinc_json -> select_classes -> clean_min_length -> save_canonical_jsonl.
DatasetBundle prepare_data(const std::filesystem::path& clinc_json,
                           const std::filesystem::path& class_list,
                           const std::filesystem::path& jsonl_out, std::size_t min_tokens = 2);

/// Writes {"labeled_fraction", "seed", "labeled_ids", "unlabeled_ids"}.
SemiSupervisedView mask_labels(const std::filesystem::path& dataset,
                               const std::optional<std::filesystem::path>& class_list,
                               double labeled_fraction, std::uint64_t seed,
                               const std::filesystem::path& out);

SemiSupervisedView read_mask_file(const std::filesystem::path& path);

/// Writes checkpoint.gbnb, curves.csv and resolved-config.json.
TrainResult train(const RunConfig& config);

/// Writes metrics.json, confusion.csv and misclassified.jsonl.
MetricsReport evaluate(const RunConfig& config, const std::filesystem::path& checkpoint);

/// One JSON object per non-empty input line:
/// {"text", "intent", "prob", "runner_up", "runner_up_prob"}.
std::size_t predict(const std::filesystem::path& checkpoint, std::istream& texts, std::ostream& out);

/// Summarizes an output directory's artifacts into report.md.
void export_report(const std::filesystem::path& output_dir);

std::string metrics_json(const MetricsReport& report, const LabelVocab& vocab, Split split,
                         std::int64_t examples);

}  // namespace intentgan::commands
