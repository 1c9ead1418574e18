#pragma once

#include <memory>
#include <span>
#include <vector>

#include "crackforge/volcore/fft.hpp"
#include "crackforge/volcore/grid.hpp"

namespace crackforge::riesz {

/// First-order R_k (l < 0) or second-order R_(k,l), k <= l. Axes are spatial:
/// 0 = x, 1 = y, 2 = z.
struct RieszIndex {
  int k = 0;
  int l = -1;
  [[nodiscard]] bool second_order() const { return l >= 0; }
  bool operator==(const RieszIndex&) const = default;
};

/// d + d(d+1)/2: number of Riesz feature maps per input channel.
[[nodiscard]] int feature_count(int d);

/// Feature order used everywhere (banks, model files): R_0..R_{d-1}, then
/// R_(k,l) for k <= l in lexicographic order.
[[nodiscard]] std::vector<RieszIndex> feature_order(int d);

/// Multiplier value at angular frequency xi (d components): -i xi_k/|xi| or
/// -xi_k xi_l/|xi|^2, 0 at xi = 0. `nyquist[a]` marks components sitting on the
/// Nyquist bin; multipliers odd in such a component are zeroed, which is what
/// taking the real part of the complex result would do. Returned as (re, im).
[[nodiscard]] std::pair<double, double> multiplier(RieszIndex idx, std::span<const double> xi,
                                                   std::span<const bool> nyquist);

/// All Riesz feature maps of one shape, computed with one forward FFT and one
/// inverse per feature. With pad > 0 the input is mirror-padded by `pad` voxels
/// on every non-singleton axis before the (periodic) transform and cropped
/// after; pad = 0 is the plain periodic transform.
class FeatureBank {
 public:
  /// Cached per (dims, pad); thread-safe.
  [[nodiscard]] static std::shared_ptr<const FeatureBank> get(const Dims& dims, int pad);

  FeatureBank(const Dims& dims, int pad);

  [[nodiscard]] const Dims& dims() const { return dims_; }
  [[nodiscard]] int d() const { return d_; }
  [[nodiscard]] int pad() const { return pad_; }
  [[nodiscard]] std::size_t features() const { return order_.size(); }
  [[nodiscard]] const std::vector<RieszIndex>& order() const { return order_; }

  /// out holds features() maps of dims().voxels() samples, in feature order.
  void forward(std::span<const double> in, std::span<double> out) const;
  /// Exact adjoint of forward: gin = sum_f T_f^T gout_f (gin is overwritten).
  void adjoint(std::span<const double> gout, std::span<double> gin) const;
  /// Single feature.
  void apply(std::span<const double> in, std::size_t feature, std::span<double> out) const;

 private:
  void pad_into(std::span<const double> in, fft::RealBuffer& buf) const;
  void crop_from(const fft::RealBuffer& buf, double scale, std::span<double> out) const;

  Dims dims_;
  Dims padded_;
  int d_ = 3;
  int pad_ = 0;
  std::vector<RieszIndex> order_;
  std::shared_ptr<const fft::RealPlan> plan_;
  // Per feature: either the imaginary part (first order) or the real part
  // (second order) of the multiplier over the half spectrum.
  std::vector<std::vector<double>> mult_;
  std::vector<std::size_t> src_;  // padded index -> source voxel
};

/// Riesz transform of a volume, periodic boundary (pad 0) unless `pad` > 0.
/// nz == 1 volumes are treated as 2D (d = 2).
[[nodiscard]] VoxelVolume riesz_transform(const VoxelVolume& f, RieszIndex idx, int pad = 0);

/// L_a f(x) = f(x / a): cubic-spline resampling onto round(n * a) samples per
/// non-singleton axis, output voxel y taken at input coordinate y / a.
[[nodiscard]] VoxelVolume rescale(const VoxelVolume& f, double a);

}  // namespace crackforge::riesz
