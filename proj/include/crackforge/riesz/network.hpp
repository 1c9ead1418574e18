#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::riesz {

/// Channel tuple (c0, ..., cK) with c0 = 1 (gray input) and cK = 1 (probability).
/// Layers 1..K-1 are Riesz layers c(l-1) -> c(l); the head maps c(K-1) -> 1.
struct NetworkConfig {
  std::vector<int> channels{1, 16, 16, 32, 1};
  int d = 3;

  void validate() const;
  [[nodiscard]] std::size_t riesz_layers() const { return channels.size() - 2; }
};

/// Trainable scalars in banks and head: sum over Riesz layers of
/// cin * m * cout + cout, plus c(K-1) + 1 for the head, m = d + d(d+1)/2.
[[nodiscard]] std::int64_t count_params(const NetworkConfig& cfg);
/// Batch-norm scale and shift: 2 * cin per Riesz layer (reported separately).
[[nodiscard]] std::int64_t count_bn_params(const NetworkConfig& cfg);

enum class Mode { train, eval };

/// Offsets of one Riesz layer inside the flat parameter vectors.
struct LayerView {
  int cin = 0, cout = 0;
  std::size_t coeff = 0;  // cout * cin * m, index (j * cin + i) * m + f
  std::size_t bias = 0;   // cout
  std::size_t gamma = 0;  // cin, in the batch-norm vector
  std::size_t beta = 0;   // cin
};

/// Riesz network: per layer batch norm -> Riesz layer -> ReLU, then a linear
/// head and a sigmoid. All trainable scalars live in two flat vectors:
/// `weights` (count_params scalars, layer order: coeff, bias; head w, head b)
/// and `bn` (per layer gamma then beta). Running statistics are not trainable.
class RieszNetwork {
 public:
  static constexpr int kPad = 16;  // mirror pad around every transform
  static constexpr double kBnEps = 1e-5;
  static constexpr double kBnMomentum = 0.9;  // running = 0.9 running + 0.1 batch

  /// All weights zero, gamma 1, beta 0, running mean 0, running var 1.
  explicit RieszNetwork(NetworkConfig cfg);
  /// He-style random coefficients, zero biases.
  static RieszNetwork initialized(const NetworkConfig& cfg, std::uint64_t seed);

  [[nodiscard]] const NetworkConfig& config() const { return cfg_; }
  [[nodiscard]] int m() const { return m_; }
  [[nodiscard]] const std::vector<LayerView>& layers() const { return views_; }
  [[nodiscard]] std::size_t head_w() const { return head_w_; }
  [[nodiscard]] std::size_t head_b() const { return head_w_ + static_cast<std::size_t>(cfg_.channels[cfg_.channels.size() - 2]); }

  std::vector<double> weights;
  std::vector<double> bn;
  std::vector<std::vector<double>> running_mean;  // per layer, cin
  std::vector<std::vector<double>> running_var;

 private:
  NetworkConfig cfg_;
  int m_ = 0;
  std::vector<LayerView> views_;
  std::size_t head_w_ = 0;
};

struct Gradients {
  std::vector<double> weights;
  std::vector<double> bn;
  std::vector<std::vector<double>> input;  // per sample, when requested
};

/// Probability map of one volume.
[[nodiscard]] std::vector<double> network_forward(const RieszNetwork& net, const VoxelVolume& f,
                                                  Mode mode = Mode::eval);

/// Riesz layer applied to a stack of channels (cin maps of dims.voxels()):
/// out_j = bias_j + sum_i sum_f coeff[(j*cin+i)*m+f] * R_f(in_i).
[[nodiscard]] std::vector<double> riesz_layer_forward(std::span<const double> coeff,
                                                      std::span<const double> bias, int cin,
                                                      int cout, std::span<const double> input,
                                                      const Dims& dims, int pad);

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d pred
};

/// Mean over voxels of -[w y log p + (1 - y) log(1 - p)], p clamped to
/// [1e-7, 1 - 1e-7]; the gradient is zero where the clamp is active.
[[nodiscard]] LossValue weighted_bce_loss(std::span<const double> pred,
                                          std::span<const std::uint8_t> gt, double w);

struct StepOptions {
  double class_weight = 1.0;
  bool update_running_stats = true;  // only in train mode
  bool input_gradients = false;
};

/// Train-mode forward on a batch (batch-norm statistics over all voxels of all
/// samples), loss averaged over samples, full backward pass. Samples may have
/// different dims. Parallel over samples; per-sample gradients are merged in
/// sample order, so results do not depend on the thread count.
[[nodiscard]] double forward_backward(RieszNetwork& net, std::span<const VoxelVolume> images,
                                      std::span<const BinaryMask> masks, const StepOptions& opts,
                                      Gradients& grads);

/// The loss forward_backward would return, without the backward pass and
/// without touching running statistics.
[[nodiscard]] double batch_loss(const RieszNetwork& net, std::span<const VoxelVolume> images,
                                std::span<const BinaryMask> masks, double class_weight);

}  // namespace crackforge::riesz
