#include "intentgan/encoder.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "intentgan/errors.hpp"
#include "intentgan/utf8.hpp"

namespace intentgan {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr std::uint32_t kEmbVersion = 1;
constexpr std::size_t kEmbHeader = 16;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const unsigned char> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

}  // namespace

void HashedNgramConfig::validate() const {
    if (dim < 1) throw ConfigError("hashed encoder: dim must be >= 1");
    if (ngram_min < 1 || ngram_min > ngram_max) {
        throw ConfigError("hashed encoder: need 1 <= ngram_min <= ngram_max");
    }
}

std::uint64_t fnv1a64_seeded(std::span<const unsigned char> bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = kFnvOffset;
    for (int i = 0; i < 8; ++i) {
        h ^= (seed >> (8 * i)) & 0xFF;
        h *= kFnvPrime;
    }
    for (unsigned char b : bytes) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

FeatureVector encode_hashed(std::string_view text, const HashedNgramConfig& config) {
    config.validate();
    std::vector<char32_t> cps;
    if (!utf8::decode(text, cps)) {
        cps.assign(text.begin(), text.end());
        for (auto& cp : cps) cp &= 0xFF;
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.dim));
    std::string gram;
    for (std::size_t n = config.ngram_min; n <= config.ngram_max; ++n) {
        if (cps.size() < n) break;
        for (std::size_t i = 0; i + n <= cps.size(); ++i) {
            gram = utf8::encode(cps, i, i + n);
            const auto h = fnv1a64_seeded(
                std::span(reinterpret_cast<const unsigned char*>(gram.data()), gram.size()),
                config.seed);
            const auto bucket = static_cast<Eigen::Index>(h % config.dim);
            acc[bucket] += (h >> 63) ? -1.0 : 1.0;
        }
    }
    const double norm = acc.norm();
    if (norm > 0.0) acc /= norm;
    return acc.cast<float>();
}

std::vector<unsigned char> serialize_embeddings(const FeatureMatrix& rows) {
    if (!rows.allFinite()) throw DataError("EMB1: refusing to write non-finite values");
    std::vector<unsigned char> out;
    out.reserve(kEmbHeader + 4 * static_cast<std::size_t>(rows.size()));
    for (char c : std::string_view("EMB1")) out.push_back(static_cast<unsigned char>(c));
    put_u32(out, kEmbVersion);
    put_u32(out, static_cast<std::uint32_t>(rows.rows()));
    put_u32(out, static_cast<std::uint32_t>(rows.cols()));
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
        put_u32(out, std::bit_cast<std::uint32_t>(rows.data()[i]));
    }
    return out;
}

PrecomputedEmbeddings parse_embeddings(std::span<const unsigned char> bytes) {
    if (bytes.size() < kEmbHeader) {
        throw DataError("EMB1: truncated header at byte offset " + std::to_string(bytes.size()));
    }
    if (bytes[0] != 'E' || bytes[1] != 'M' || bytes[2] != 'B' || bytes[3] != '1') {
        throw DataError("EMB1: bad magic at byte offset 0");
    }
    const auto version = get_u32(bytes, 4);
    if (version != kEmbVersion) {
        throw DataError("EMB1: unsupported version " + std::to_string(version) + " at byte offset 4");
    }
    const std::uint64_t count = get_u32(bytes, 8);
    const std::uint64_t dim = get_u32(bytes, 12);
    if (dim == 0 && count > 0) throw DataError("EMB1: dim 0 with non-empty table at byte offset 12");
    const std::uint64_t expected = kEmbHeader + 4 * count * dim;
    if (bytes.size() < expected) {
        throw DataError("EMB1: truncated payload at byte offset " + std::to_string(bytes.size()) +
                        " (expected " + std::to_string(expected) + " bytes)");
    }
    if (bytes.size() > expected) {
        throw DataError("EMB1: trailing data at byte offset " + std::to_string(expected));
    }
    PrecomputedEmbeddings emb;
    emb.rows.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < count * dim; ++i) {
        const std::size_t offset = kEmbHeader + 4 * i;
        const float v = std::bit_cast<float>(get_u32(bytes, offset));
        if (!std::isfinite(v)) {
            throw DataError("EMB1: non-finite value at byte offset " + std::to_string(offset));
        }
        emb.rows.data()[i] = v;
    }
    return emb;
}

void save_embeddings(const FeatureMatrix& rows, const std::filesystem::path& path) {
    const auto bytes = serialize_embeddings(rows);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

PrecomputedEmbeddings load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    try {
        return parse_embeddings(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::size_t feature_dim(const FeatureSource& source) noexcept {
    return std::visit(
        [](const auto& s) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, PrecomputedEmbeddings>) {
                return s.dim();
            } else {
                return s.dim;
            }
        },
        source);
}

FeatureVector get_feature(const FeatureSource& source, const Utterance& utterance) {
    if (const auto* table = std::get_if<PrecomputedEmbeddings>(&source)) {
        if (utterance.id >= table->count()) {
            throw BindingError("utterance id " + std::to_string(utterance.id) +
                               " out of range for embedding table with " +
                               std::to_string(table->count()) + " rows");
        }
        return table->rows.row(static_cast<Eigen::Index>(utterance.id)).transpose();
    }
    return encode_hashed(utterance.text, std::get<HashedNgramConfig>(source));
}

FeatureMatrix gather_features(const FeatureSource& source, const DatasetBundle& bundle,
                              std::span<const std::size_t> ids) {
    FeatureMatrix out(static_cast<Eigen::Index>(ids.size()),
                      static_cast<Eigen::Index>(feature_dim(source)));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= bundle.utterances.size()) {
            throw BindingError("utterance id " + std::to_string(ids[i]) + " not in dataset");
        }
        out.row(static_cast<Eigen::Index>(i)) = get_feature(source, bundle.utterances[ids[i]]).transpose();
    }
    return out;
}

void check_binding(const FeatureSource& source, const DatasetBundle& bundle) {
    if (const auto* table = std::get_if<PrecomputedEmbeddings>(&source)) {
        if (table->count() != bundle.utterances.size()) {
            throw BindingError("embedding table has " + std::to_string(table->count()) +
                               " rows but dataset has " + std::to_string(bundle.utterances.size()) +
                               " utterances");
        }
    }
}

}  // namespace intentgan
