#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "intentgan/dataset.hpp"

namespace intentgan {

using FeatureVector = Eigen::VectorXf;
/// One feature vector per row.
using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kDefaultFeatureDim = 768;

struct HashedNgramConfig {
    std::size_t dim = kDefaultFeatureDim;
    std::size_t ngram_min = 2;
    std::size_t ngram_max = 4;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless 1 <= ngram_min <= ngram_max and dim >= 1.
    void validate() const;

    friend bool operator==(const HashedNgramConfig&, const HashedNgramConfig&) = default;
};

/// FNV-1a 64 over the 8 little-endian bytes of `seed` followed by `bytes`.
std::uint64_t fnv1a64_seeded(std::span<const unsigned char> bytes, std::uint64_t seed) noexcept;

/// Signed hashed character n-grams over the Unicode scalars of `text`
/// (bytes, if `text` is not valid UTF-8). Each n-gram adds +1 or -1 (bit 63 of
/// its hash) to bucket hash % dim; the result is L2-normalized unless all zero.
FeatureVector encode_hashed(std::string_view text, const HashedNgramConfig& config);

struct PrecomputedEmbeddings {
    FeatureMatrix rows;

    std::size_t count() const noexcept { return static_cast<std::size_t>(rows.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(rows.cols()); }
};

// EMB1: "EMB1" | u32 version=1 | u32 count | u32 dim | count*dim binary32, row-major, little-endian.
std::vector<unsigned char> serialize_embeddings(const FeatureMatrix& rows);
PrecomputedEmbeddings parse_embeddings(std::span<const unsigned char> bytes);
void save_embeddings(const FeatureMatrix& rows, const std::filesystem::path& path);
PrecomputedEmbeddings load_embeddings(const std::filesystem::path& path);

using FeatureSource = std::variant<PrecomputedEmbeddings, HashedNgramConfig>;

std::size_t feature_dim(const FeatureSource& source) noexcept;

/// Row `utterance.id` of a precomputed table, or encode_hashed(utterance.text).
FeatureVector get_feature(const FeatureSource& source, const Utterance& utterance);

/// Stacks get_feature for the given utterance ids of `bundle`, in order.
FeatureMatrix gather_features(const FeatureSource& source, const DatasetBundle& bundle,
                              std::span<const std::size_t> ids);

/// Throws BindingError unless a precomputed table has exactly one row per utterance.
void check_binding(const FeatureSource& source, const DatasetBundle& bundle);

}  // namespace intentgan
