#pragma once

#include <filesystem>
#include <iosfwd>

#include "hsinoise/model.hpp"

namespace hsinoise {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "HDNM" little-endian checkpoint: magic, version u32, then a sequence of
/// blocks (name length u32, name bytes, rank u32, extents u32..., f64
/// payload) until end of file. Blocks are written in a fixed order: "config",
/// the network parameters, "noise_space.bases" [k, d], "centers" [C, d].
void write_checkpoint(std::ostream& os, const ModelState& state);
ModelState read_checkpoint(std::istream& is);

void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace hsinoise
