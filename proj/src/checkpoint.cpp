#include "intentgan/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "intentgan/errors.hpp"
#include "json.hpp"

namespace intentgan {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const unsigned char> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

template <typename Derived>
void put_floats(std::vector<unsigned char>& out, const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(m.derived().data()[i]));
}

ordered_json header_for(const GanModel& model) {
    const auto& c = model.config;
    ordered_json h;
    h["format"] = "GBNB";
    h["feature_dim"] = model.feature_dim;
    h["num_classes"] = model.num_classes;
    h["classes"] = model.class_names;
    h["generator_dims"] = model.generator.spec.layer_dims;
    h["discriminator_dims"] = model.discriminator.spec.layer_dims;
    h["leaky_slope"] = model.discriminator.spec.leaky_slope;
    h["noise"] = {{"dim", c.noise.dim}, {"mean", c.noise.mean}, {"stddev", c.noise.stddev}};
    ordered_json cfg;
    cfg["epochs"] = c.epochs;
    cfg["batch_size"] = c.batch_size;
    cfg["lr"] = c.lr;
    cfg["generator_lr"] = c.generator_lr ? ordered_json(*c.generator_lr) : ordered_json(nullptr);
    cfg["dropout"] = c.dropout;
    cfg["generator_hidden"] = c.generator_hidden;
    cfg["discriminator_hidden"] = c.discriminator_hidden;
    cfg["labeled_fraction"] = c.labeled_fraction;
    h["config"] = cfg;
    h["seed"] = c.seed;
    if (model.encoder) {
        h["encoder"] = {{"kind", "hashed_ngram"},
                        {"dim", model.encoder->dim},
                        {"ngram_min", model.encoder->ngram_min},
                        {"ngram_max", model.encoder->ngram_max},
                        {"seed", model.encoder->seed}};
    } else {
        h["encoder"] = nullptr;
    }
    h["parameter_order"] =
        "generator layers then discriminator layers; per layer weight (out x in, row-major) "
        "then bias; binary32 little-endian";
    return h;
}

nn::Mlp<float> shaped_mlp(const std::vector<std::size_t>& dims, double dropout, double slope) {
    nn::Mlp<float> mlp{{dims, dropout, slope}, {}};
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        mlp.layers.push_back({nn::Matrix<float>(static_cast<Eigen::Index>(dims[l + 1]),
                                                static_cast<Eigen::Index>(dims[l])),
                              nn::Vector<float>(static_cast<Eigen::Index>(dims[l + 1]))});
    }
    return mlp;
}

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const GanModel& model) {
    const std::string header = header_for(model).dump();
    std::vector<unsigned char> out;
    for (char c : std::string_view("GBNB")) out.push_back(static_cast<unsigned char>(c));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out.insert(out.end(), header.begin(), header.end());
    for (const auto* mlp : {&model.generator, &model.discriminator}) {
        for (const auto& layer : mlp->layers) {
            put_floats(out, layer.weight);
            put_floats(out, layer.bias);
        }
    }
    return out;
}

GanModel parse_checkpoint(std::span<const unsigned char> bytes,
                          std::optional<std::size_t> expected_classes) {
    if (bytes.size() < 12) throw CheckpointError("checkpoint: truncated preamble");
    if (bytes[0] != 'G' || bytes[1] != 'B' || bytes[2] != 'N' || bytes[3] != 'B') {
        throw CheckpointError("checkpoint: bad magic");
    }
    const auto version = get_u32(bytes, 4);
    if (version != kVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
    const std::size_t header_len = get_u32(bytes, 8);
    if (bytes.size() < 12 + header_len) throw CheckpointError("checkpoint: truncated header");

    GanModel model;
    try {
        const auto h = ordered_json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(header_len));
        if (h.at("format").get<std::string>() != "GBNB") throw CheckpointError("checkpoint: header format tag mismatch");
        model.feature_dim = h.at("feature_dim").get<std::size_t>();
        model.num_classes = h.at("num_classes").get<std::size_t>();
        model.class_names = h.at("classes").get<std::vector<std::string>>();
        const auto g_dims = h.at("generator_dims").get<std::vector<std::size_t>>();
        const auto d_dims = h.at("discriminator_dims").get<std::vector<std::size_t>>();
        const double slope = h.at("leaky_slope").get<double>();
        auto& c = model.config;
        const auto& noise = h.at("noise");
        c.noise = {noise.at("dim").get<std::size_t>(), noise.at("mean").get<double>(),
                   noise.at("stddev").get<double>()};
        const auto& cfg = h.at("config");
        c.epochs = cfg.at("epochs").get<std::size_t>();
        c.batch_size = cfg.at("batch_size").get<std::size_t>();
        c.lr = cfg.at("lr").get<double>();
        if (!cfg.at("generator_lr").is_null()) c.generator_lr = cfg.at("generator_lr").get<double>();
        c.dropout = cfg.at("dropout").get<double>();
        c.generator_hidden = cfg.at("generator_hidden").get<std::size_t>();
        c.discriminator_hidden = cfg.at("discriminator_hidden").get<std::size_t>();
        c.labeled_fraction = cfg.at("labeled_fraction").get<double>();
        c.seed = h.at("seed").get<std::uint64_t>();
        const auto& enc = h.at("encoder");
        if (!enc.is_null()) {
            model.encoder = HashedNgramConfig{enc.at("dim").get<std::size_t>(),
                                              enc.at("ngram_min").get<std::size_t>(),
                                              enc.at("ngram_max").get<std::size_t>(),
                                              enc.at("seed").get<std::uint64_t>()};
        }
        if (g_dims.size() < 2 || d_dims.size() < 2 || g_dims.front() != c.noise.dim ||
            g_dims.back() != model.feature_dim || d_dims.front() != model.feature_dim ||
            d_dims.back() != model.num_classes + 1 ||
            (!model.class_names.empty() && model.class_names.size() != model.num_classes)) {
            throw CheckpointError("checkpoint: inconsistent layer shapes in header");
        }
        model.generator = shaped_mlp(g_dims, c.dropout, slope);
        model.discriminator = shaped_mlp(d_dims, c.dropout, slope);
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
    }
    if (expected_classes && *expected_classes != model.num_classes) {
        throw CheckpointError("checkpoint: shape mismatch, checkpoint has K=" +
                              std::to_string(model.num_classes) + " but K=" +
                              std::to_string(*expected_classes) + " was expected");
    }

    std::size_t offset = 12 + header_len;
    auto read_into = [&](float* dst, Eigen::Index n) {
        const std::size_t need = 4 * static_cast<std::size_t>(n);
        if (bytes.size() < offset + need) throw CheckpointError("checkpoint: truncated parameters");
        for (Eigen::Index i = 0; i < n; ++i) {
            dst[i] = std::bit_cast<float>(get_u32(bytes, offset));
            offset += 4;
        }
    };
    for (auto* mlp : {&model.generator, &model.discriminator}) {
        for (auto& layer : mlp->layers) {
            read_into(layer.weight.data(), layer.weight.size());
            read_into(layer.bias.data(), layer.bias.size());
            if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
                throw CheckpointError("checkpoint: non-finite parameter");
            }
        }
    }
    if (offset != bytes.size()) throw CheckpointError("checkpoint: trailing bytes after parameters");
    return model;
}

void save_checkpoint(const GanModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for '" + path.string() + "'");
}

GanModel load_checkpoint(const std::filesystem::path& path, std::optional<std::size_t> expected_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open '" + path.string() + "'");
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                           std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes, expected_classes);
}

}  // namespace intentgan
