#include "crackforge/evalmetrics/metrics.hpp"

#include <algorithm>
#include <array>

#include "crackforge/volcore/morphology.hpp"

namespace crackforge::evalmetrics {

namespace {

std::uint64_t count_ones(const BinaryMask& m) {
  std::uint64_t n = 0;
  for (auto v : m.data()) n += v ? 1 : 0;
  return n;
}

std::uint64_t count_overlap(const BinaryMask& a, const BinaryMask& b) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
  return n;
}

}  // namespace

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

const ToleranceScore& EvalReport::at(int tolerance) const {
  for (const auto& s : scores) {
    if (s.tolerance == tolerance) return s;
  }
  throw Error("eval report has no tolerance " + std::to_string(tolerance));
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["voxels"] = voxels;
  j["pred_count"] = pred_count;
  j["gt_count"] = gt_count;
  j["p0"] = p0;
  j["p1"] = p1;
  j["weight"] = weight;
  auto& arr = j["tolerances"] = nlohmann::json::array();
  for (const auto& s : scores) {
    arr.push_back({{"tolerance", s.tolerance},
                   {"precision", s.precision},
                   {"recall", s.recall},
                   {"f1", s.f1},
                   {"pred_hits", s.pred_hits},
                   {"gt_hits", s.gt_hits}});
  }
  return j;
}

EvalReport score(const BinaryMask& pred, const BinaryMask& gt, std::span<const int> tolerances,
                 std::string id) {
  require_same_dims(pred.dims(), gt.dims(), "score");
  EvalReport r;
  r.id = std::move(id);
  r.voxels = gt.size();
  r.pred_count = count_ones(pred);
  r.gt_count = count_ones(gt);
  r.p1 = r.voxels ? static_cast<double>(r.gt_count) / static_cast<double>(r.voxels) : 0.0;
  r.p0 = 1.0 - r.p1;
  r.weight = r.gt_count ? static_cast<double>(r.voxels - r.gt_count) / static_cast<double>(r.gt_count) : 0.0;
  for (int t : tolerances) {
    if (t < 0) throw ConfigError("tolerance must be >= 0");
    ToleranceScore s;
    s.tolerance = t;
    s.pred_hits = t == 0 ? count_overlap(pred, gt) : count_overlap(pred, dilate_box(gt, t));
    s.gt_hits = t == 0 ? s.pred_hits : count_overlap(gt, dilate_box(pred, t));
    s.precision = r.pred_count ? static_cast<double>(s.pred_hits) / static_cast<double>(r.pred_count)
                               : (r.gt_count ? 0.0 : 1.0);
    s.recall = r.gt_count ? static_cast<double>(s.gt_hits) / static_cast<double>(r.gt_count)
                          : (r.pred_count ? 0.0 : 1.0);
    s.f1 = f1_score(s.precision, s.recall);
    r.scores.push_back(s);
  }
  return r;
}

EvalReport score(const BinaryMask& pred, const BinaryMask& gt) {
  static constexpr std::array<int, 3> def{0, 1, 2};
  return score(pred, gt, def);
}

double class_weight(const BinaryMask& gt) { return class_weight(std::span<const BinaryMask>(&gt, 1)); }

double class_weight(std::span<const BinaryMask> gts) {
  std::uint64_t ones = 0, total = 0;
  for (const auto& g : gts) {
    ones += count_ones(g);
    total += g.size();
  }
  if (ones == 0) throw Error("undefined weight");
  return static_cast<double>(total - ones) / static_cast<double>(ones);
}

nlohmann::json Summary::to_json() const {
  nlohmann::json j;
  j["count"] = count;
  for (const auto& [k, s] : measures) {
    j["measures"][k] = {{"min", s.min}, {"mean", s.mean}, {"median", s.median}, {"argmin_id", s.argmin_id}};
  }
  return j;
}

Summary summarize(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("summarize: empty report list");
  Summary out;
  out.count = reports.size();
  const auto& first = reports.front().scores;
  for (const auto& ref : first) {
    for (int which = 0; which < 3; ++which) {
      static constexpr const char* names[3] = {"precision", "recall", "f1"};
      std::vector<std::pair<double, std::string>> vals;
      for (const auto& r : reports) {
        const auto& s = r.at(ref.tolerance);
        vals.emplace_back(which == 0 ? s.precision : which == 1 ? s.recall : s.f1, r.id);
      }
      std::sort(vals.begin(), vals.end());
      MeasureStats st;
      st.min = vals.front().first;
      st.argmin_id = vals.front().second;
      double sum = 0.0;
      for (const auto& v : vals) sum += v.first;
      st.mean = sum / static_cast<double>(vals.size());
      st.median = vals[(vals.size() - 1) / 2].first;
      out.measures[std::string(names[which]) + "@" + std::to_string(ref.tolerance)] = st;
    }
  }
  return out;
}

}  // namespace crackforge::evalmetrics
