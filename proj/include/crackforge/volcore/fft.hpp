#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace crackforge::fft {

struct FftwDeleter {
  void operator()(void* p) const;
};

/// SIMD-aligned buffer from the FFTW allocator. All arrays handed to a Plan must
/// come from here so that cached plans can be reused with new arrays.
template <typename T>
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t n);
  [[nodiscard]] T* data() { return ptr_.get(); }
  [[nodiscard]] const T* data() const { return ptr_.get(); }
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] std::span<T> span() { return {ptr_.get(), n_}; }
  [[nodiscard]] std::span<const T> span() const { return {ptr_.get(), n_}; }
  T& operator[](std::size_t i) { return ptr_.get()[i]; }
  const T& operator[](std::size_t i) const { return ptr_.get()[i]; }

 private:
  std::unique_ptr<T, FftwDeleter> ptr_;
  std::size_t n_ = 0;
};

using RealBuffer = Buffer<double>;
using ComplexBuffer = Buffer<std::complex<double>>;

/// Cached real<->complex plan pair for one row-major shape (slowest axis first).
/// Transforms are unnormalised; inverse(forward(x)) == x * real_size().
class RealPlan {
 public:
  /// Thread-safe lookup; plans are created once per shape with FFTW_ESTIMATE.
  [[nodiscard]] static std::shared_ptr<const RealPlan> get(const std::vector<int>& shape);

  ~RealPlan();
  RealPlan(const RealPlan&) = delete;
  RealPlan& operator=(const RealPlan&) = delete;

  [[nodiscard]] const std::vector<int>& shape() const { return shape_; }
  [[nodiscard]] std::size_t real_size() const { return real_size_; }
  /// Half spectrum: last axis holds n/2+1 bins.
  [[nodiscard]] std::size_t complex_size() const { return complex_size_; }

  void forward(const RealBuffer& in, ComplexBuffer& out) const;
  /// `in` is clobbered (FFTW c2r semantics).
  void inverse(ComplexBuffer& in, RealBuffer& out) const;

 private:
  explicit RealPlan(std::vector<int> shape);

  std::vector<int> shape_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  void* forward_ = nullptr;
  void* inverse_ = nullptr;
};

/// In-place complex 2D transform of an n0 x n1 row-major array, unnormalised.
/// sign = -1 forward, +1 inverse.
void complex_2d(std::vector<std::complex<double>>& data, int n0, int n1, int sign);

/// Signed angular frequency 2*pi*k/n for DFT bin k (negative for k > n/2).
[[nodiscard]] double angular_frequency(std::size_t k, std::size_t n);

}  // namespace crackforge::fft
