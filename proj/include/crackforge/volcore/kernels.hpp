#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two are
// required to agree bit for bit (tests/unit/test_kernels.cpp, bench/).

#include <cstdint>
#include <span>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::kernels {

enum class Exec { serial, parallel };

/// Number of worker threads, capped by the CRACKFORGE_THREADS env variable.
[[nodiscard]] int worker_threads();
/// Applies the CRACKFORGE_THREADS cap to the OpenMP runtime.
void apply_thread_cap();

/// Sliding OR along one axis: out[i] = OR of in[j], j in [i-back, i+fwd] (clipped).
/// back = fwd = r is one step of a separable Chebyshev (box) dilation.
using WindowOrFn = void (*)(std::span<const std::uint8_t> in, std::span<std::uint8_t> out,
                            const Dims& dims, int axis, std::int64_t back, std::int64_t fwd);

/// In-place cubic B-spline prefilter along one axis, mirror boundary.
using PrefilterFn = void (*)(std::span<double> data, const Dims& dims, int axis);

/// Samples along one axis at fractional `positions`. `in` are B-spline
/// coefficients (cubic) or plain samples (linear). The output has the same dims
/// except dims[axis] = positions.size().
using SampleAxisFn = void (*)(std::span<const double> in, const Dims& dims, int axis,
                              std::span<const double> positions, std::span<double> out);

/// 1x1 channel mixing: out[j][v] = bias[j] + sum_{i,m} coeff[(j*cin + i)*m_per + m] * feat[(i*m_per + m)][v].
/// `feat` holds cin*m_per maps of `voxels` samples, `out` holds cout maps.
using ChannelMixFn = void (*)(std::span<const double> feat, std::span<const double> coeff,
                              std::span<const double> bias, std::size_t cin, std::size_t cout,
                              std::size_t m_per, std::size_t voxels, std::span<double> out);

namespace serial {
void window_or(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& dims,
               int axis, std::int64_t back, std::int64_t fwd);
void bspline_prefilter(std::span<double> data, const Dims& dims, int axis);
void cubic_sample(std::span<const double> in, const Dims& dims, int axis,
                  std::span<const double> positions, std::span<double> out);
void linear_sample(std::span<const double> in, const Dims& dims, int axis,
                   std::span<const double> positions, std::span<double> out);
void channel_mix(std::span<const double> feat, std::span<const double> coeff,
                 std::span<const double> bias, std::size_t cin, std::size_t cout,
                 std::size_t m_per, std::size_t voxels, std::span<double> out);
}  // namespace serial

namespace parallel {
void window_or(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& dims,
               int axis, std::int64_t back, std::int64_t fwd);
void bspline_prefilter(std::span<double> data, const Dims& dims, int axis);
void cubic_sample(std::span<const double> in, const Dims& dims, int axis,
                  std::span<const double> positions, std::span<double> out);
void linear_sample(std::span<const double> in, const Dims& dims, int axis,
                   std::span<const double> positions, std::span<double> out);
void channel_mix(std::span<const double> feat, std::span<const double> coeff,
                 std::span<const double> bias, std::size_t cin, std::size_t cout,
                 std::size_t m_per, std::size_t voxels, std::span<double> out);
}  // namespace parallel

[[nodiscard]] WindowOrFn window_or(Exec e);
[[nodiscard]] PrefilterFn bspline_prefilter(Exec e);
[[nodiscard]] SampleAxisFn cubic_sample(Exec e);
[[nodiscard]] SampleAxisFn linear_sample(Exec e);
[[nodiscard]] ChannelMixFn channel_mix(Exec e);

/// Mirror index (reflection about the end samples, no repeat): -1 -> 1, n -> n-2.
[[nodiscard]] std::int64_t mirror_index(std::int64_t i, std::int64_t n);

/// Cubic B-spline basis value at offset t, |t| < 2.
[[nodiscard]] double bspline3(double t);

}  // namespace crackforge::kernels
