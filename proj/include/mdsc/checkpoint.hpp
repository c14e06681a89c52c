#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdsc/config.hpp"
#include "mdsc/denoiser.hpp"

namespace mdsc {

/// Binary checkpoint layout (all integers little-endian):
///   "MDSC" | u32 version | u64 config length | config text (UTF-8)
///   | per array: u64 element count, count x f32
///   | u64 checksum = sum of all preceding bytes mod 2^64
/// Arrays are the parameters in declared order, followed by the Adam first
/// and second moments when the config sets state.has_optimizer = 1.
inline constexpr char kCheckpointMagic[4] = {'M', 'D', 'S', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    Config config;  // model.* keys must describe params
    DenoiserParams<float> params;
    std::optional<AdamState<float>> optimizer;
};

/// model.* keys of a config <-> ModelConfig
void write_model_config(Config& c, const ModelConfig& m);
ModelConfig read_model_config(const Config& c);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes to a temporary sibling and renames, so a failed write never
/// clobbers the previous file. PersistenceError on failure.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace mdsc
