#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crackforge {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Voxel counts along x, y, z.  nz == 1 denotes a 2D image.
struct Dims {
  std::int64_t nx = 0;
  std::int64_t ny = 0;
  std::int64_t nz = 0;

  [[nodiscard]] std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  [[nodiscard]] std::int64_t operator[](int axis) const {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  [[nodiscard]] std::int64_t& operator[](int axis) {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  [[nodiscard]] bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
  /// Spatial dimensionality: 2 when nz == 1, else 3.
  [[nodiscard]] int dimensionality() const { return nz == 1 ? 2 : 3; }
  [[nodiscard]] std::int64_t min_extent() const;
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Stride of one step along `axis` in z-y-x row-major storage.
[[nodiscard]] inline std::size_t axis_stride(const Dims& d, int axis) {
  if (axis == 0) return 1;
  if (axis == 1) return static_cast<std::size_t>(d.nx);
  return static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny);
}

/// Dense scalar grid stored z-major (x fastest), with isotropic voxel spacing.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Dims dims, T fill = T{}, double spacing_um = 1.0)
      : dims_(dims), spacing_um_(spacing_um), data_(checked_size(dims), fill) {}
  Grid(Dims dims, std::vector<T> data, double spacing_um = 1.0)
      : dims_(dims), spacing_um_(spacing_um), data_(std::move(data)) {
    if (data_.size() != checked_size(dims_)) {
      throw Error("grid data length does not match dims " + dims_.str());
    }
  }

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] double spacing_um() const { return spacing_um_; }
  void set_spacing_um(double s) {
    if (!(s > 0.0)) throw Error("spacing_um must be positive");
    spacing_um_ = s;
  }

  [[nodiscard]] std::size_t index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_.ny) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(dims_.nx) +
           static_cast<std::size_t>(x);
  }
  [[nodiscard]] bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) { return data_[index(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[index(x, y, z)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::span<T> data() { return data_; }
  [[nodiscard]] std::span<const T> data() const { return data_; }
  [[nodiscard]] std::vector<T>& storage() { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const { return data_; }

  [[nodiscard]] bool same_shape(const auto& other) const { return dims_ == other.dims(); }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(const Dims& d) {
    if (!d.valid()) throw Error("invalid dims " + d.str());
    return d.voxels();
  }

  Dims dims_{};
  double spacing_um_ = 1.0;
  std::vector<T> data_;
};

using VoxelVolume = Grid<float>;
using BinaryMask = Grid<std::uint8_t>;

/// Throws unless every value is finite.
void ensure_finite(const VoxelVolume& v, const char* where);

[[nodiscard]] std::size_t count_foreground(const BinaryMask& m);

/// Throws `Error(what + ": dim mismatch")` unless a and b share dims.
void require_same_dims(const Dims& a, const Dims& b, const char* what);

/// Copy of a single x-, y-, or z-slice as a 2D grid (nz == 1).
/// Axis x yields (ny, nz), axis y yields (nx, nz), axis z yields (nx, ny).
template <typename T>
[[nodiscard]] Grid<T> extract_slice(const Grid<T>& g, int axis, std::int64_t index);

/// Inverse of extract_slice: writes a 2D grid back into slice `index`.
template <typename T>
void insert_slice(Grid<T>& g, int axis, std::int64_t index, const Grid<T>& slice);

}  // namespace crackforge
