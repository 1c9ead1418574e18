#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crackforge/volcore/grid.hpp"

namespace crackforge::evalmetrics {

struct ToleranceScore {
  int tolerance = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t pred_hits = 0;  // |P ∩ dilate(G, t)|
  std::uint64_t gt_hits = 0;    // |G ∩ dilate(P, t)|
};

struct EvalReport {
  std::string id;
  std::uint64_t voxels = 0;
  std::uint64_t pred_count = 0;  // |P|
  std::uint64_t gt_count = 0;    // |G|
  double p0 = 0.0;               // background fraction of G
  double p1 = 0.0;               // foreground fraction of G
  double weight = 0.0;           // p0 / p1, 0 when G is empty
  std::vector<ToleranceScore> scores;

  [[nodiscard]] const ToleranceScore& at(int tolerance) const;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Tolerant precision / recall / F1: a voxel counts as hit when the other set
/// has a voxel within Chebyshev distance t. Empty P scores precision 1 iff G is
/// empty too, and likewise for recall.
[[nodiscard]] EvalReport score(const BinaryMask& pred, const BinaryMask& gt,
                               std::span<const int> tolerances, std::string id = {});
[[nodiscard]] EvalReport score(const BinaryMask& pred, const BinaryMask& gt);

/// 2 p r / (p + r), 0 when p + r == 0.
[[nodiscard]] double f1_score(double precision, double recall);

/// Count of zeros over count of ones; throws "undefined weight" without ones.
[[nodiscard]] double class_weight(const BinaryMask& gt);
[[nodiscard]] double class_weight(std::span<const BinaryMask> gts);

struct MeasureStats {
  double min = 0.0;
  double mean = 0.0;
  double median = 0.0;  // lower median
  std::string argmin_id;
};

/// Keyed "precision@t", "recall@t", "f1@t".
struct Summary {
  std::map<std::string, MeasureStats> measures;
  std::size_t count = 0;
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Statistics are invariant under permutation of `reports`: values are summed
/// in sorted order and ties for the minimum go to the smallest id.
[[nodiscard]] Summary summarize(std::span<const EvalReport> reports);

}  // namespace crackforge::evalmetrics
