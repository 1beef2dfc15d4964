#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace intentgan {

enum class Split { train, validation, test };

std::string_view to_string(Split split) noexcept;
/// Accepts "train", "validation", "test" (and "val" as an alias).
std::optional<Split> parse_split(std::string_view name) noexcept;

struct Utterance {
    std::size_t id = 0;
    std::string text;
    std::optional<std::size_t> label;
    Split split = Split::train;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Ordered class names; a name's position is its class index.
class LabelVocab {
public:
    LabelVocab() = default;
    /// Throws DataError on duplicate names.
    explicit LabelVocab(std::vector<std::string> names);

    std::size_t size() const noexcept { return names_.size(); }
    bool empty() const noexcept { return names_.empty(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(std::size_t index) const { return names_.at(index); }
    std::optional<std::size_t> index_of(std::string_view name) const noexcept;

    friend bool operator==(const LabelVocab&, const LabelVocab&) = default;

private:
    std::vector<std::string> names_;
};

struct DatasetBundle {
    LabelVocab vocab;
    std::vector<Utterance> utterances;
    std::string provenance;

    std::size_t num_classes() const noexcept { return vocab.size(); }
    std::vector<std::size_t> ids_in(Split split) const;
    std::size_t count(Split split) const;
};

/// Field-level equality of vocab and utterances; provenance is ignored.
bool same_content(const DatasetBundle& a, const DatasetBundle& b);

struct SemiSupervisedView {
    std::vector<std::size_t> labeled_ids;    // ascending
    std::vector<std::size_t> unlabeled_ids;  // ascending
};

struct DatasetStats {
    std::size_t total_words = 0;
    std::size_t unique_words = 0;
    std::size_t max_len = 0;
    std::size_t min_len = 0;
    double avg_len = 0.0;
    // Same length statistics measured in Unicode scalars.
    std::size_t max_chars = 0;
    std::size_t min_chars = 0;
    double avg_chars = 0.0;
};

/// Published CLINC150 layout: {"train": [[text, label], ...], "val": ..., "test": ...}.
/// Vocab is the lexicographically sorted set of label names; ids run train, val, test.
DatasetBundle load_clinc_json(const std::filesystem::path& path);
DatasetBundle parse_clinc_json(std::string_view json_text, std::string source = "<memory>");

/// One {"text", "label", "split"} object per line, line i = utterance id i.
/// A train item may carry "label": null. When `vocab` is given it fixes the
/// class order (labels outside it are an error); otherwise the sorted set of
/// label names is used.
DatasetBundle load_canonical_jsonl(const std::filesystem::path& path,
                                   const std::optional<LabelVocab>& vocab = std::nullopt);
void save_canonical_jsonl(const DatasetBundle& bundle, const std::filesystem::path& path);

DatasetBundle select_classes(const DatasetBundle& bundle, const std::vector<std::string>& names);

DatasetBundle clean_min_length(const DatasetBundle& bundle, std::size_t min_tokens = 2);

/// Per-class stratified labeled subset. Class c with n_c labeled train items
/// keeps max(1, round(fraction * n_c)) of them: the class's ids in ascending
/// order are shuffled by Rng(seed).split("mask/<c>") and the prefix is kept.
SemiSupervisedView mask_labels(const DatasetBundle& bundle, double labeled_fraction,
                               std::uint64_t seed);

DatasetStats stats(const DatasetBundle& bundle);

/// One class name per non-empty line; leading/trailing whitespace trimmed.
std::vector<std::string> read_class_list(const std::filesystem::path& path);

}  // namespace intentgan
