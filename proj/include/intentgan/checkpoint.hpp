#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "intentgan/ssgan.hpp"

namespace intentgan {

// GBNB layout, little-endian:
//   "GBNB" | u32 version = 1 | u32 header_len | header_len bytes of UTF-8 JSON
//   | parameters as binary32
// Parameter order: generator layers, then discriminator layers (the last one
// is the K+1 logit layer); per layer the weight matrix (out x in, row-major)
// followed by the bias vector.

std::vector<unsigned char> serialize_checkpoint(const GanModel& model);

/// Throws CheckpointError on bad magic/version, malformed header, size
/// mismatch, or when `expected_classes` is given and differs from K.
GanModel parse_checkpoint(std::span<const unsigned char> bytes,
                          std::optional<std::size_t> expected_classes = std::nullopt);

void save_checkpoint(const GanModel& model, const std::filesystem::path& path);
GanModel load_checkpoint(const std::filesystem::path& path,
                         std::optional<std::size_t> expected_classes = std::nullopt);

}  // namespace intentgan
