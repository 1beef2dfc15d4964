#include "intentgan/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "intentgan/errors.hpp"
#include "intentgan/metrics.hpp"
#include "json.hpp"

namespace intentgan {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"dataset", "path", "canonical JSONL dataset"},
        {"class_list", "path|null", "class-name file fixing the label order (default: sorted names)"},
        {"embeddings", "path|null", "EMB1 embedding file; when null the hashed n-gram encoder is used"},
        {"mask_file", "path|null", "labeled-id file written by mask-labels (default: mask from labeled_fraction/seed)"},
        {"output_dir", "path", "directory for all artifacts (env INTENTGAN_OUTPUT_DIR overrides)"},
        {"encoder_dim", "int", "hashed encoder bucket count d (768)"},
        {"encoder_ngram_min", "int", "smallest character n-gram (2)"},
        {"encoder_ngram_max", "int", "largest character n-gram (4)"},
        {"encoder_seed", "int", "hash seed (0)"},
        {"epochs", "int", "training epochs (50)"},
        {"batch_size", "int", "real examples per batch and fakes per step (64)"},
        {"lr", "real", "Adam learning rate for both networks (0.01)"},
        {"generator_lr", "real|null", "generator learning rate override (null = lr)"},
        {"dropout", "real", "dropout after each hidden activation (0.2)"},
        {"noise_dim", "int", "generator noise dimension (100)"},
        {"noise_mean", "real", "noise mean (0)"},
        {"noise_stddev", "real", "noise standard deviation (1)"},
        {"generator_hidden", "int", "generator hidden width (512)"},
        {"discriminator_hidden", "int", "discriminator hidden width (512)"},
        {"seed", "int", "run seed (0)"},
        {"labeled_fraction", "real", "fraction of train labels kept per class, in (0, 1] (1.0)"},
        {"eval_split", "string", "split scored by evaluate: train, validation or test (test)"},
    };
    return keys;
}

namespace {

template <typename T>
T get_as(const json& v, std::string_view key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
    }
}

std::size_t get_count(const json& v, std::string_view key) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("config key '" + std::string(key) + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

double get_real(const json& v, std::string_view key) {
    if (!v.is_number()) throw ConfigError("config key '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

std::optional<std::filesystem::path> get_opt_path(const json& v, std::string_view key) {
    if (v.is_null()) return std::nullopt;
    return std::filesystem::path(get_as<std::string>(v, key));
}

double round9(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

}  // namespace

void apply_config_json(RunConfig& c, std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : doc.items()) {
        if (key == "dataset") c.dataset = get_as<std::string>(v, key);
        else if (key == "class_list") c.class_list = get_opt_path(v, key);
        else if (key == "embeddings") c.embeddings = get_opt_path(v, key);
        else if (key == "mask_file") c.mask_file = get_opt_path(v, key);
        else if (key == "output_dir") c.output_dir = get_as<std::string>(v, key);
        else if (key == "encoder_dim") c.encoder.dim = get_count(v, key);
        else if (key == "encoder_ngram_min") c.encoder.ngram_min = get_count(v, key);
        else if (key == "encoder_ngram_max") c.encoder.ngram_max = get_count(v, key);
        else if (key == "encoder_seed") c.encoder.seed = get_as<std::uint64_t>(v, key);
        else if (key == "epochs") c.train.epochs = get_count(v, key);
        else if (key == "batch_size") c.train.batch_size = get_count(v, key);
        else if (key == "lr") c.train.lr = get_real(v, key);
        else if (key == "generator_lr") {
            if (v.is_null()) c.train.generator_lr.reset();
            else c.train.generator_lr = get_real(v, key);
        }
        else if (key == "dropout") c.train.dropout = get_real(v, key);
        else if (key == "noise_dim") c.train.noise.dim = get_count(v, key);
        else if (key == "noise_mean") c.train.noise.mean = get_real(v, key);
        else if (key == "noise_stddev") c.train.noise.stddev = get_real(v, key);
        else if (key == "generator_hidden") c.train.generator_hidden = get_count(v, key);
        else if (key == "discriminator_hidden") c.train.discriminator_hidden = get_count(v, key);
        else if (key == "seed") c.train.seed = get_as<std::uint64_t>(v, key);
        else if (key == "labeled_fraction") c.train.labeled_fraction = get_real(v, key);
        else if (key == "eval_split") {
            const auto s = parse_split(get_as<std::string>(v, key));
            if (!s) throw ConfigError("eval_split must be train, validation or test");
            c.eval_split = *s;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         std::string_view flag_overrides_json) {
    RunConfig c;
    if (config_file) {
        std::ifstream in(*config_file);
        if (!in) throw ConfigError("cannot open config '" + config_file->string() + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        apply_config_json(c, buf.str());
    }
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) c.output_dir = env;
    if (!flag_overrides_json.empty()) apply_config_json(c, flag_overrides_json);
    c.encoder.validate();
    c.train.validate();
    return c;
}

std::string resolved_config_json(const RunConfig& c) {
    auto opt_path = [](const std::optional<std::filesystem::path>& p) {
        return p ? ordered_json(p->string()) : ordered_json(nullptr);
    };
    ordered_json j;
    j["dataset"] = c.dataset.string();
    j["class_list"] = opt_path(c.class_list);
    j["embeddings"] = opt_path(c.embeddings);
    j["mask_file"] = opt_path(c.mask_file);
    j["output_dir"] = c.output_dir.string();
    j["encoder_dim"] = c.encoder.dim;
    j["encoder_ngram_min"] = c.encoder.ngram_min;
    j["encoder_ngram_max"] = c.encoder.ngram_max;
    j["encoder_seed"] = c.encoder.seed;
    j["epochs"] = c.train.epochs;
    j["batch_size"] = c.train.batch_size;
    j["lr"] = round9(c.train.lr);
    j["generator_lr"] = c.train.generator_lr ? ordered_json(round9(*c.train.generator_lr)) : ordered_json(nullptr);
    j["dropout"] = round9(c.train.dropout);
    j["noise_dim"] = c.train.noise.dim;
    j["noise_mean"] = round9(c.train.noise.mean);
    j["noise_stddev"] = round9(c.train.noise.stddev);
    j["generator_hidden"] = c.train.generator_hidden;
    j["discriminator_hidden"] = c.train.discriminator_hidden;
    j["seed"] = c.train.seed;
    j["labeled_fraction"] = round9(c.train.labeled_fraction);
    j["eval_split"] = std::string(to_string(c.eval_split));
    return j.dump(2) + "\n";
}

std::string config_help() {
    std::string out = "Config keys (JSON object; every key optional, flags --<key-with-dashes> override):\n";
    for (const auto& k : config_keys()) {
        out += "  " + std::string(k.name) + " <" + std::string(k.type) + ">  " + std::string(k.description) + "\n";
    }
    return out;
}

}  // namespace intentgan
