#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "crackforge/multiscale/fusion.hpp"
#include "crackforge/volcore/resample.hpp"
#include "test_util.hpp"

namespace crackforge::multiscale {
namespace {

// Dark voxels are likely crack voxels; the map stays inside (0, 1).
VoxelVolume darkness(const VoxelVolume& v) {
  VoxelVolume p(v.dims());
  for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::clamp(1.0f - v[i], 0.001f, 0.999f);
  return p;
}

// Reference fusion written directly from the contract: pyramid, threshold,
// nearest upsampling, OR.
BinaryMask reference(const Segmenter& seg, const VoxelVolume& v, const FusionConfig& cfg) {
  const Pyramid pyr = build_pyramid(v, cfg.levels, cfg.factor);
  BinaryMask out(v.dims(), 0);
  for (const auto& level : pyr.levels) {
    const VoxelVolume p = seg(level);
    BinaryMask m(level.dims(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = p[i] >= cfg.threshold;
    const BinaryMask up = upsample_to(m, v.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] |= up[i];
  }
  return out;
}

TEST(FusionConfig, Validation) {
  FusionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.levels = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.threshold = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.threshold = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.factor = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW((void)segment_multiscale(Segmenter{}, VoxelVolume({4, 4, 4})), ConfigError);
}

TEST(Fusion, SingleLevelIsPlainThreshold) {
  const VoxelVolume v = testing::random_volume({20, 18, 6}, 1);
  FusionConfig cfg;
  cfg.levels = 1;
  cfg.threshold = 0.7;
  const BinaryMask m = segment_multiscale(darkness, v, cfg);
  const VoxelVolume p = darkness(v);
  for (std::size_t i = 0; i < m.size(); ++i) ASSERT_EQ(m[i], p[i] >= 0.7f ? 1 : 0);
}

TEST(Fusion, MatchesReferenceExactly) {
  for (const Dims d : {Dims{33, 30, 17}, Dims{64, 64, 64}, Dims{45, 50, 1}}) {
    const VoxelVolume v = testing::random_volume(d, 2);
    for (int levels : {1, 2, 3}) {
      FusionConfig cfg;
      cfg.levels = levels;
      cfg.threshold = 0.6;
      const FusionResult r = segment_multiscale_detailed(darkness, v, cfg);
      const BinaryMask ref = reference(darkness, v, cfg);
      ASSERT_EQ(r.mask.dims(), d);
      ASSERT_EQ(r.level_masks.size(), static_cast<std::size_t>(levels));
      for (std::size_t i = 0; i < ref.size(); ++i) {
        ASSERT_EQ(r.mask[i], ref[i]) << d.str() << " levels " << levels;
        std::uint8_t any = 0;
        for (const auto& lm : r.level_masks) any |= lm[i];
        ASSERT_EQ(r.mask[i], any);
        // The fused probability reproduces the fused mask.
        ASSERT_EQ(r.prob[i] >= cfg.threshold, r.mask[i] != 0);
      }
    }
  }
}

TEST(Fusion, AddingLevelsNeverRemovesVoxels) {
  const VoxelVolume v = testing::random_volume({40, 36, 20}, 3);
  BinaryMask prev = segment_multiscale(darkness, v, {1, 2, 0.55});
  for (int levels = 2; levels <= 4; ++levels) {
    const BinaryMask cur = segment_multiscale(darkness, v, {levels, 2, 0.55});
    for (std::size_t i = 0; i < cur.size(); ++i) ASSERT_GE(cur[i], prev[i]);
    prev = cur;
  }
}

TEST(Fusion, DuplicateLevelIsIdempotent) {
  const VoxelVolume v = testing::random_volume({24, 24, 24}, 4);
  const FusionResult r = segment_multiscale_detailed(darkness, v, {3, 2, 0.6});
  BinaryMask twice = r.mask;
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] |= r.level_masks[1][i];
  EXPECT_TRUE(std::ranges::equal(twice.data(), r.mask.data()));
}

TEST(Fusion, ZeroSegmenterGivesEmptyMask) {
  const Segmenter zero = [](const VoxelVolume& lv) { return VoxelVolume(lv.dims(), 0.0f); };
  const VoxelVolume v = testing::random_volume({30, 30, 30}, 5);
  for (int levels : {1, 2, 3, 5}) {
    const BinaryMask m = segment_multiscale(zero, v, {levels, 2, 0.5});
    for (auto x : m.data()) ASSERT_EQ(x, 0);
  }
}

TEST(Fusion, SegmenterSeesEveryPyramidLevel) {
  const VoxelVolume v = testing::random_volume({32, 20, 12}, 6);
  std::vector<Dims> seen;
  const Segmenter rec = [&](const VoxelVolume& lv) {
    seen.push_back(lv.dims());
    return darkness(lv);
  };
  (void)segment_multiscale(rec, v, {3, 2, 0.5});
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0], (Dims{32, 20, 12}));
  EXPECT_EQ(seen[1], (Dims{16, 10, 6}));
  EXPECT_EQ(seen[2], (Dims{8, 5, 3}));
}

TEST(Fusion, SegmenterErrorsPropagate) {
  const Segmenter bad = [](const VoxelVolume&) -> VoxelVolume { throw Error("model failed"); };
  EXPECT_THROW((void)segment_multiscale(bad, VoxelVolume({8, 8, 8})), Error);
  const Segmenter wrong = [](const VoxelVolume&) { return VoxelVolume({3, 3, 3}); };
  EXPECT_THROW((void)segment_multiscale(wrong, VoxelVolume({8, 8, 8})), Error);
}

// A segmenter that only fires on the coarse level still contributes to the
// fused mask.
TEST(Fusion, CoarseLevelContributes) {
  VoxelVolume v({32, 32, 1}, 1.0f);
  for (std::int64_t y = 0; y < 32; ++y) {
    for (std::int64_t x = 12; x < 20; ++x) v(x, y, 0) = 0.0f;
  }
  const Segmenter coarse_only = [](const VoxelVolume& lv) {
    VoxelVolume p = darkness(lv);
    if (lv.dims().nx == 32) std::fill(p.data().begin(), p.data().end(), 0.001f);
    return p;
  };
  const FusionResult r = segment_multiscale_detailed(coarse_only, v, {2, 2, 0.5});
  EXPECT_EQ(r.mask(15, 10, 0), 1);
  EXPECT_EQ(r.mask(2, 10, 0), 0);
  for (auto x : r.level_masks[0].data()) ASSERT_EQ(x, 0);
}

}  // namespace
}  // namespace crackforge::multiscale
