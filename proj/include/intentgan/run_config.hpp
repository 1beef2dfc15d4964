#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intentgan/encoder.hpp"
#include "intentgan/ssgan.hpp"

namespace intentgan {

/// Environment variable that overrides "output_dir" (and nothing else).
inline constexpr const char* kOutputDirEnv = "INTENTGAN_OUTPUT_DIR";

struct RunConfig {
    std::filesystem::path dataset;
    std::optional<std::filesystem::path> class_list;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> mask_file;
    std::filesystem::path output_dir = "out";
    HashedNgramConfig encoder;
    TrainConfig train;
    Split eval_split = Split::test;
};

struct ConfigKey {
    std::string_view name;
    std::string_view type;
    std::string_view description;
};

/// Every accepted top-level key, in the order used by resolved-config.json.
const std::vector<ConfigKey>& config_keys();

/// Applies a JSON object onto `config`. Unknown keys and wrong types throw ConfigError.
void apply_config_json(RunConfig& config, std::string_view json_text);

/// Reads the config file (if any), then the environment override, then the
/// flag overrides (a JSON object built from command-line flags).
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         std::string_view flag_overrides_json);

/// Canonical JSON echo of a resolved config (fixed key order, 9 significant digits).
std::string resolved_config_json(const RunConfig& config);

std::string config_help();

}  // namespace intentgan
