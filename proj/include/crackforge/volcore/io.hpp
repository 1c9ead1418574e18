#pragma once

#include <filesystem>
#include <string>

#include "crackforge/volcore/grid.hpp"

namespace crackforge {

/// On-disk sample type of a raw volume.
enum class Dtype { f32, u8, u16 };

[[nodiscard]] std::string to_string(Dtype t);
[[nodiscard]] Dtype parse_dtype(const std::string& s);
[[nodiscard]] std::size_t dtype_size(Dtype t);

/// Contents of the JSON sidecar next to a `.raw` file:
/// {"dims":[nx,ny,nz],"dtype":"f32|u8|u16","spacing_um":s,"order":"zyx"}.
struct Sidecar {
  Dims dims;
  Dtype dtype = Dtype::f32;
  double spacing_um = 1.0;
};

/// `<stem>.json` for `<stem>.raw` (or for any other extension).
[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& raw);

[[nodiscard]] Sidecar read_sidecar(const std::filesystem::path& raw);

/// Loads any supported dtype as float voxels. Data is little-endian, x fastest.
[[nodiscard]] VoxelVolume load_volume(const std::filesystem::path& raw);

/// Loads a u8 volume whose values are all 0 or 1.
[[nodiscard]] BinaryMask load_mask(const std::filesystem::path& raw);

/// Writes the raw file and its sidecar. Values are converted to `dtype`
/// (integer dtypes round and saturate).
void save_volume(const VoxelVolume& v, const std::filesystem::path& raw, Dtype dtype = Dtype::f32);

/// Masks are always written as u8 with values {0,1}.
void save_mask(const BinaryMask& m, const std::filesystem::path& raw);

}  // namespace crackforge
