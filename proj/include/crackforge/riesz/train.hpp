#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "crackforge/riesz/network.hpp"

namespace crackforge::riesz {

struct TrainSample {
  VoxelVolume image;
  BinaryMask mask;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double lr_decay = 0.5;  // multiplied in every decay_period epochs
  int decay_period = 5;
  /// Fixed crack-voxel loss weight; unset means p0 / p1 over the whole dataset.
  std::optional<double> class_weight;
  bool augment = false;  // random flips / axis swaps of whole samples
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  [[nodiscard]] static TrainConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // mean batch loss
  double learning_rate = 0.0;
};

struct TrainResult {
  std::vector<double> loss_history;  // per epoch
  double class_weight = 1.0;
};

class TrainingDiverged : public Error {
 public:
  using Error::Error;
};

/// Mini-batch Adam with a step learning-rate schedule. Batches are drawn from a
/// per-epoch shuffle seeded by split_seed(seed, epoch); the last batch may be
/// short. Throws TrainingDiverged on a non-finite loss.
TrainResult train(RieszNetwork& net, std::span<const TrainSample> data, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& log = {});

struct Prediction {
  VoxelVolume prob;
  BinaryMask mask;  // prob >= threshold
};

/// Eval-mode forward; probabilities lie in [1e-7, 1 - 1e-7].
[[nodiscard]] Prediction predict(const RieszNetwork& net, const VoxelVolume& v,
                                 double threshold = 0.5);

[[nodiscard]] BinaryMask threshold_map(const VoxelVolume& prob, double threshold);

/// Model file: 8-byte magic "CFRIESZ1", u64 little-endian header length, JSON
/// header (config, d, param_count, batch-norm parameters and statistics,
/// `metadata`), then param_count little-endian f32 weights in the network's
/// flat layer order.
void save_model(const RieszNetwork& net, const std::filesystem::path& path,
                const nlohmann::json& metadata = nlohmann::json::object());

struct LoadedModel {
  RieszNetwork net;
  nlohmann::json metadata;
};

[[nodiscard]] LoadedModel load_model(const std::filesystem::path& path);

}  // namespace crackforge::riesz
