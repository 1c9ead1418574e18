#include "crackforge/volcore/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace crackforge::kernels {

int worker_threads() {
  int n = omp_get_num_procs();
  if (const char* env = std::getenv("CRACKFORGE_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = std::min(n, cap);
    } catch (const std::exception&) {
      // unparsable cap is ignored
    }
  }
  return std::max(1, n);
}

void apply_thread_cap() { omp_set_num_threads(worker_threads()); }

std::int64_t mirror_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

double bspline3(double t) {
  t = std::abs(t);
  if (t < 1.0) return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  if (t < 2.0) {
    const double u = 2.0 - t;
    return u * u * u / 6.0;
  }
  return 0.0;
}

namespace {

// Walks every 1D line of `dims` along `axis`.
struct LineLayout {
  std::size_t lines;
  std::size_t length;
  std::size_t stride;
  Dims dims;
  int axis;

  LineLayout(const Dims& d, int a)
      : lines(d.voxels() / static_cast<std::size_t>(d[a])),
        length(static_cast<std::size_t>(d[a])),
        stride(axis_stride(d, a)),
        dims(d),
        axis(a) {}

  [[nodiscard]] std::size_t base(std::size_t line) const {
    const auto nx = static_cast<std::size_t>(dims.nx);
    const auto ny = static_cast<std::size_t>(dims.ny);
    switch (axis) {
      case 0: return line * nx;
      case 1: return (line / nx) * nx * ny + (line % nx);
      default: return line;
    }
  }
};

void window_or_line(const std::uint8_t* in, std::uint8_t* out, std::size_t n, std::size_t stride,
                    std::int64_t back, std::int64_t fwd, std::vector<std::uint32_t>& prefix) {
  prefix.assign(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + (in[k * stride] ? 1u : 0u);
  const auto sn = static_cast<std::int64_t>(n);
  for (std::int64_t i = 0; i < sn; ++i) {
    const std::int64_t lo = std::max<std::int64_t>(0, i - back);
    const std::int64_t hi = std::min<std::int64_t>(sn, i + fwd + 1);
    out[static_cast<std::size_t>(i) * stride] = (hi > lo && prefix[hi] > prefix[lo]) ? 1 : 0;
  }
}

constexpr double kPole = -0.26794919243112270;  // sqrt(3) - 2

void prefilter_line(double* c, std::size_t n, std::size_t stride) {
  if (n == 1) return;
  const double z = kPole;
  for (std::size_t k = 0; k < n; ++k) c[k * stride] *= 6.0;
  // causal initialisation, whole-sample mirror boundary
  double z1 = z;
  double zn = std::pow(z, static_cast<double>(n - 1));
  const double iz = 1.0 / z;
  double sum = c[0] + zn * c[(n - 1) * stride];
  zn *= zn * iz;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    sum += (z1 + zn) * c[k * stride];
    z1 *= z;
    zn *= iz;
  }
  c[0] = sum / (1.0 - z1 * z1);
  for (std::size_t k = 1; k < n; ++k) c[k * stride] += z * c[(k - 1) * stride];
  c[(n - 1) * stride] = (z / (z * z - 1.0)) * (z * c[(n - 2) * stride] + c[(n - 1) * stride]);
  for (std::size_t k = n - 1; k-- > 0;) c[k * stride] = z * (c[(k + 1) * stride] - c[k * stride]);
}

double cubic_at(const double* c, std::int64_t n, std::size_t stride, double t) {
  if (n == 1) return c[0];
  const auto j0 = static_cast<std::int64_t>(std::floor(t)) - 1;
  double v = 0.0;
  for (std::int64_t j = j0; j < j0 + 4; ++j) {
    v += c[static_cast<std::size_t>(mirror_index(j, n)) * stride] *
         bspline3(t - static_cast<double>(j));
  }
  return v;
}

double linear_at(const double* s, std::int64_t n, std::size_t stride, double t) {
  if (n == 1) return s[0];
  t = std::clamp(t, 0.0, static_cast<double>(n - 1));
  const auto i0 = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t)), n - 2);
  const double f = t - static_cast<double>(i0);
  return (1.0 - f) * s[static_cast<std::size_t>(i0) * stride] +
         f * s[static_cast<std::size_t>(i0 + 1) * stride];
}

template <typename Eval>
void sample_lines(std::span<const double> in, const Dims& dims, int axis,
                  std::span<const double> positions, std::span<double> out, bool parallel,
                  Eval eval) {
  Dims od = dims;
  od[axis] = static_cast<std::int64_t>(positions.size());
  const LineLayout li(dims, axis);
  const LineLayout lo(od, axis);
  const auto lines = static_cast<std::int64_t>(li.lines);
  const auto n = static_cast<std::int64_t>(li.length);
  const std::size_t np = positions.size();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t line = 0; line < lines; ++line) {
    const double* src = in.data() + li.base(static_cast<std::size_t>(line));
    double* dst = out.data() + lo.base(static_cast<std::size_t>(line));
    for (std::size_t k = 0; k < np; ++k) dst[k * lo.stride] = eval(src, n, li.stride, positions[k]);
  }
}

void window_or_impl(std::span<const std::uint8_t> in, std::span<std::uint8_t> out,
                    const Dims& dims, int axis, std::int64_t back, std::int64_t fwd,
                    bool parallel) {
  const LineLayout l(dims, axis);
  const auto lines = static_cast<std::int64_t>(l.lines);
#pragma omp parallel if (parallel)
  {
    std::vector<std::uint32_t> prefix;
#pragma omp for schedule(static)
    for (std::int64_t line = 0; line < lines; ++line) {
      const std::size_t b = l.base(static_cast<std::size_t>(line));
      window_or_line(in.data() + b, out.data() + b, l.length, l.stride, back, fwd, prefix);
    }
  }
}

void prefilter_impl(std::span<double> data, const Dims& dims, int axis, bool parallel) {
  const LineLayout l(dims, axis);
  const auto lines = static_cast<std::int64_t>(l.lines);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t line = 0; line < lines; ++line) {
    prefilter_line(data.data() + l.base(static_cast<std::size_t>(line)), l.length, l.stride);
  }
}

void channel_mix_block(const double* feat, const double* coeff, const double* bias,
                       std::size_t cin, std::size_t cout, std::size_t m_per, std::size_t voxels,
                       double* out, std::size_t v0, std::size_t v1) {
  for (std::size_t j = 0; j < cout; ++j) {
    double* o = out + j * voxels;
    for (std::size_t v = v0; v < v1; ++v) o[v] = bias[j];
    for (std::size_t i = 0; i < cin; ++i) {
      for (std::size_t m = 0; m < m_per; ++m) {
        const double c = coeff[(j * cin + i) * m_per + m];
        const double* f = feat + (i * m_per + m) * voxels;
        for (std::size_t v = v0; v < v1; ++v) o[v] += c * f[v];
      }
    }
  }
}

}  // namespace

namespace serial {

void window_or(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& dims,
               int axis, std::int64_t back, std::int64_t fwd) {
  window_or_impl(in, out, dims, axis, back, fwd, false);
}
void bspline_prefilter(std::span<double> data, const Dims& dims, int axis) {
  prefilter_impl(data, dims, axis, false);
}
void cubic_sample(std::span<const double> in, const Dims& dims, int axis,
                  std::span<const double> positions, std::span<double> out) {
  sample_lines(in, dims, axis, positions, out, false, cubic_at);
}
void linear_sample(std::span<const double> in, const Dims& dims, int axis,
                   std::span<const double> positions, std::span<double> out) {
  sample_lines(in, dims, axis, positions, out, false, linear_at);
}
void channel_mix(std::span<const double> feat, std::span<const double> coeff,
                 std::span<const double> bias, std::size_t cin, std::size_t cout,
                 std::size_t m_per, std::size_t voxels, std::span<double> out) {
  channel_mix_block(feat.data(), coeff.data(), bias.data(), cin, cout, m_per, voxels, out.data(),
                    0, voxels);
}

}  // namespace serial

namespace parallel {

void window_or(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Dims& dims,
               int axis, std::int64_t back, std::int64_t fwd) {
  window_or_impl(in, out, dims, axis, back, fwd, true);
}
void bspline_prefilter(std::span<double> data, const Dims& dims, int axis) {
  prefilter_impl(data, dims, axis, true);
}
void cubic_sample(std::span<const double> in, const Dims& dims, int axis,
                  std::span<const double> positions, std::span<double> out) {
  sample_lines(in, dims, axis, positions, out, true, cubic_at);
}
void linear_sample(std::span<const double> in, const Dims& dims, int axis,
                   std::span<const double> positions, std::span<double> out) {
  sample_lines(in, dims, axis, positions, out, true, linear_at);
}
void channel_mix(std::span<const double> feat, std::span<const double> coeff,
                 std::span<const double> bias, std::size_t cin, std::size_t cout,
                 std::size_t m_per, std::size_t voxels, std::span<double> out) {
  constexpr std::size_t kBlock = 4096;
  const auto blocks = static_cast<std::int64_t>((voxels + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    const std::size_t v0 = static_cast<std::size_t>(b) * kBlock;
    const std::size_t v1 = std::min(voxels, v0 + kBlock);
    channel_mix_block(feat.data(), coeff.data(), bias.data(), cin, cout, m_per, voxels,
                      out.data(), v0, v1);
  }
}

}  // namespace parallel

WindowOrFn window_or(Exec e) { return e == Exec::serial ? serial::window_or : parallel::window_or; }
PrefilterFn bspline_prefilter(Exec e) {
  return e == Exec::serial ? serial::bspline_prefilter : parallel::bspline_prefilter;
}
SampleAxisFn cubic_sample(Exec e) {
  return e == Exec::serial ? serial::cubic_sample : parallel::cubic_sample;
}
SampleAxisFn linear_sample(Exec e) {
  return e == Exec::serial ? serial::linear_sample : parallel::linear_sample;
}
ChannelMixFn channel_mix(Exec e) {
  return e == Exec::serial ? serial::channel_mix : parallel::channel_mix;
}

}  // namespace crackforge::kernels
