#pragma once

#include <filesystem>

#include "normalfield/model.hpp"

namespace nf {

/// Binary little-endian field dump: "NFLD", u32 version, then one block per
/// grid (u32 name length, name, u32 x3 resolution, f64 x6 box, u32 channels,
/// f32 vertex data x-fastest, channels interleaved) and a final "env_sh" block
/// (u32 name length, name, u32 degree, f32 RGB per coefficient).
/// Values are stored as f32, so a round trip rounds them to single precision.
void save_checkpoint(const std::filesystem::path& path, const SceneFields& fields);
SceneFields load_checkpoint(const std::filesystem::path& path);

}  // namespace nf
