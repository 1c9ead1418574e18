#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "crackforge/volcore/augment.hpp"
#include "crackforge/volcore/io.hpp"
#include "crackforge/volcore/morphology.hpp"
#include "crackforge/volcore/normalize.hpp"
#include "crackforge/volcore/patches.hpp"
#include "crackforge/volcore/resample.hpp"
#include "temp_dir.hpp"
#include "test_util.hpp"

namespace crackforge {
namespace {

using testing::random_mask;
using testing::random_volume;
using testing::temp_dir;

std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(VolumeIo, ZerosRoundTrip) {
  const auto dir = temp_dir("io");
  VoxelVolume v({4, 4, 4}, 0.0f, 23.5);
  save_volume(v, dir / "zeros.raw");
  const VoxelVolume back = load_volume(dir / "zeros.raw");
  EXPECT_EQ(back.size(), 64u);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.spacing_um(), 23.5);
}

TEST(VolumeIo, BitExactForEveryDtype) {
  const auto dir = temp_dir("io");
  const VoxelVolume f = random_volume({5, 3, 2}, 7, -3.0f, 9.0f);
  save_volume(f, dir / "f.raw", Dtype::f32);
  EXPECT_EQ(load_volume(dir / "f.raw"), f);

  for (Dtype t : {Dtype::u8, Dtype::u16}) {
    VoxelVolume ints({5, 3, 2});
    for (std::size_t i = 0; i < ints.size(); ++i) ints[i] = static_cast<float>((i * 37) % 250);
    const auto p1 = dir / ("a_" + to_string(t) + ".raw");
    const auto p2 = dir / ("b_" + to_string(t) + ".raw");
    save_volume(ints, p1, t);
    save_volume(load_volume(p1), p2, t);
    EXPECT_EQ(file_bytes(p1), file_bytes(p2));
    EXPECT_EQ(load_volume(p2), ints);
  }
}

TEST(VolumeIo, SpacingPreservedExactly) {
  const auto dir = temp_dir("io");
  VoxelVolume v({2, 2, 2}, 1.0f, 0.1 + 0.2);
  save_volume(v, dir / "s.raw");
  EXPECT_EQ(load_volume(dir / "s.raw").spacing_um(), 0.1 + 0.2);
}

TEST(VolumeIo, MaskIsU8ZeroOne) {
  const auto dir = temp_dir("io");
  const BinaryMask m = random_mask({6, 5, 4}, 3, 0.3);
  save_mask(m, dir / "m.raw");
  EXPECT_EQ(read_sidecar(dir / "m.raw").dtype, Dtype::u8);
  for (char c : file_bytes(dir / "m.raw")) EXPECT_TRUE(c == 0 || c == 1);
  EXPECT_EQ(load_mask(dir / "m.raw"), m);
}

TEST(VolumeIo, SizeMismatchIsRejected) {
  const auto dir = temp_dir("io");
  save_volume(VoxelVolume({2, 2, 2}), dir / "v.raw");
  {
    std::ofstream out(dir / "v.raw", std::ios::binary | std::ios::trunc);
    const float seven[7] = {};
    out.write(reinterpret_cast<const char*>(seven), sizeof seven);
  }
  try {
    (void)load_volume(dir / "v.raw");
    FAIL() << "expected size mismatch";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("size mismatch"), std::string::npos);
  }
}

TEST(VolumeIo, MissingSidecarAndBadDtype) {
  const auto dir = temp_dir("io");
  { std::ofstream(dir / "lonely.raw") << "x"; }
  EXPECT_THROW((void)load_volume(dir / "lonely.raw"), Error);
  save_volume(VoxelVolume({1, 1, 1}), dir / "d.raw");
  { std::ofstream(dir / "d.json") << R"({"dims":[1,1,1],"dtype":"f64","spacing_um":1})"; }
  EXPECT_THROW((void)load_volume(dir / "d.raw"), Error);
}

TEST(Normalize, AffineInvariant) {
  const VoxelVolume v = random_volume({16, 16, 8}, 11);
  VoxelVolume w = v;
  for (float& x : w.data()) x = 2.0f * x + 5.0f;
  const VoxelVolume a = normalize_gray(v);
  const VoxelVolume b = normalize_gray(w);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 2e-6);
}

TEST(Normalize, UnitRangeUnchangedUpToClipping) {
  VoxelVolume v({11, 1, 1});
  for (int i = 0; i < 11; ++i) v[static_cast<std::size_t>(i)] = static_cast<float>(i) / 10.0f;
  const VoxelVolume n = normalize_gray(v, 0.0, 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(n[i], v[i], 1e-6);
}

TEST(Normalize, ConstantVolumeIsDegenerate) {
  EXPECT_THROW((void)normalize_gray(VoxelVolume({4, 4, 4}, 3.0f)), Error);
}

TEST(Downsample, ConstantStaysConstant) {
  const VoxelVolume v({17, 12, 9}, 0.37f);
  const VoxelVolume d = downsample(v, 2);
  EXPECT_EQ(d.dims(), (Dims{9, 6, 5}));
  for (float x : d.data()) EXPECT_NEAR(x, 0.37f, 1e-6);
}

TEST(Downsample, LinearRampExactOnInterior) {
  VoxelVolume v({32, 4, 4});
  for (std::int64_t z = 0; z < 4; ++z)
    for (std::int64_t y = 0; y < 4; ++y)
      for (std::int64_t x = 0; x < 32; ++x) v(x, y, z) = 0.5f * static_cast<float>(x) - 3.0f;
  const VoxelVolume d = downsample(v, 2);
  for (std::int64_t x = 2; x < d.dims().nx - 2; ++x) {
    EXPECT_NEAR(d(x, 1, 1), 0.5 * static_cast<double>(2 * x) - 3.0, 1e-5) << x;
  }
}

TEST(Downsample, TwiceGivesQuarterExtentAndFourfoldSpacing) {
  const VoxelVolume v({256, 256, 256}, 1.0f, 23.5);
  const Pyramid p = build_pyramid(v, 3, 2);
  ASSERT_EQ(p.levels.size(), 3u);
  EXPECT_EQ(p.levels[2].dims(), (Dims{64, 64, 64}));
  EXPECT_DOUBLE_EQ(p.levels[2].spacing_um(), 4 * 23.5);
}

TEST(Downsample, RejectsSmallFactor) {
  EXPECT_THROW((void)downsample(VoxelVolume({4, 4, 4}), 1), ConfigError);
}

TEST(Downsample, PyramidDimsAreCeilings) {
  const Pyramid p = build_pyramid(VoxelVolume({65, 33, 1}), 3, 2);
  EXPECT_EQ(p.levels[1].dims(), (Dims{33, 17, 1}));
  EXPECT_EQ(p.levels[2].dims(), (Dims{17, 9, 1}));
}

TEST(Upsample, SameDimsIsIdentity) {
  const VoxelVolume v = random_volume({7, 6, 5}, 2);
  EXPECT_EQ(upsample_to(v, v.dims()), v);
  const BinaryMask m = random_mask({7, 6, 5}, 2, 0.5);
  EXPECT_EQ(upsample_to(m, m.dims()), m);
}

TEST(Upsample, ConstantStaysConstant) {
  const VoxelVolume u = upsample_to(VoxelVolume({5, 5, 5}, 0.25f), {10, 10, 10});
  for (float x : u.data()) EXPECT_FLOAT_EQ(x, 0.25f);
}

TEST(Upsample, MaskForegroundScalesByEight) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const BinaryMask m = random_mask({16, 16, 16}, seed, 0.2 + 0.05 * static_cast<double>(seed));
    const BinaryMask u = upsample_to(m, {32, 32, 32});
    // oracle: brute-force count of fine voxels whose nearest coarse voxel is set
    std::size_t brute = 0;
    for (std::int64_t z = 0; z < 32; ++z)
      for (std::int64_t y = 0; y < 32; ++y)
        for (std::int64_t x = 0; x < 32; ++x) {
          auto near = [](std::int64_t i) { return std::min<std::int64_t>((i + 1) / 2, 15); };
          brute += m(near(x), near(y), near(z));
        }
    EXPECT_EQ(count_foreground(u), brute);
    const double ratio = static_cast<double>(count_foreground(u)) /
                         (8.0 * static_cast<double>(count_foreground(m)));
    EXPECT_NEAR(ratio, 1.0, 0.10);
  }
}

TEST(Patches, Tiling256With64Patches) {
  EXPECT_EQ(patch_offsets(256, 64, 14), (std::vector<std::int64_t>{0, 50, 100, 150, 192}));
  const VoxelVolume v({256, 256, 256}, 0.0f);
  // offsets only: avoid materialising 125 copies in the enumeration check
  std::size_t total = 1;
  for (int a = 0; a < 3; ++a) total *= patch_offsets(v.dims()[a], 64, 14).size();
  EXPECT_EQ(total, 125u);
}

TEST(Patches, SingleWholePatch) {
  const VoxelVolume v = random_volume({8, 8, 8}, 1);
  const auto ps = extract_patches(v, 8, 0);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].data, v);
}

TEST(Patches, CoverEveryVoxelAndStayInside) {
  for (auto [n, size, overlap] : {std::tuple{37, 10, 3}, {20, 7, 0}, {64, 64, 14}, {50, 13, 12}}) {
    const VoxelVolume v = random_volume({n, n / 2 + size, size}, 5);
    const auto ps = extract_patches(v, size, overlap);
    BinaryMask covered(v.dims(), 0);
    for (const auto& p : ps) {
      for (int a = 0; a < 3; ++a) {
        ASSERT_GE(p.offset[a], 0);
        ASSERT_LE(p.offset[a] + p.data.dims()[a], v.dims()[a]);
      }
      for (std::int64_t z = 0; z < size; ++z)
        for (std::int64_t y = 0; y < size; ++y)
          for (std::int64_t x = 0; x < size; ++x) {
            covered(x + p.offset[0], y + p.offset[1], z + p.offset[2]) = 1;
            ASSERT_EQ(p.data(x, y, z), v(x + p.offset[0], y + p.offset[1], z + p.offset[2]));
          }
    }
    EXPECT_EQ(count_foreground(covered), covered.size());
  }
}

TEST(Patches, TwoDimensionalVolumes) {
  const VoxelVolume v = random_volume({30, 30, 1}, 5);
  const auto ps = extract_patches(v, 16, 4);
  EXPECT_EQ(ps.size(), 9u);  // offsets 0, 12, 14 per axis
  EXPECT_EQ(ps[0].data.dims(), (Dims{16, 16, 1}));
}

TEST(Augment, IdentityPlanLeavesDataUnchanged) {
  const VoxelVolume v = random_volume({8, 8, 8}, 3);
  const BinaryMask m = random_mask({8, 8, 8}, 3, 0.2);
  const auto [img, mask] = apply_augmentation(v, m, AugmentPlan{});
  EXPECT_EQ(img, v);
  EXPECT_EQ(mask, m);
}

TEST(Augment, FlipIsAnInvolution) {
  const VoxelVolume v = random_volume({5, 6, 7}, 4);
  for (int a = 0; a < 3; ++a) EXPECT_EQ(flip_axis(flip_axis(v, a), a), v);
}

TEST(Augment, RigidMotionsPreserveMaskCount) {
  const BinaryMask m = random_mask({9, 9, 9}, 8, 0.1);
  const VoxelVolume v = random_volume({9, 9, 9}, 8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AugmentPlan p = random_augment_plan(m.dims(), seed);
    p.zoom = 1.0;
    const auto [img, mask] = apply_augmentation(v, m, p);
    EXPECT_EQ(count_foreground(mask), count_foreground(m));
  }
}

TEST(Augment, RigidMotionCommutesWithChebyshevDilation) {
  const BinaryMask m = random_mask({10, 10, 10}, 9, 0.03);
  const VoxelVolume v({10, 10, 10});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AugmentPlan rigid;
    const AugmentPlan r = random_augment_plan(m.dims(), seed);
    rigid.permutation = r.permutation;
    rigid.flip = r.flip;
    const BinaryMask a = apply_augmentation(v, dilate_box(m, 1), rigid).second;
    const BinaryMask b = dilate_box(apply_augmentation(v, m, rigid).second, 1);
    EXPECT_EQ(a, b);
  }
}

TEST(Augment, DeterministicGivenSeed) {
  const VoxelVolume v = random_volume({12, 12, 12}, 4);
  const BinaryMask m = random_mask({12, 12, 12}, 4, 0.1);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto a = augment(v, m, seed);
    const auto b = augment(v, m, seed);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    for (float x : a.first.data()) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(Morphology, BoxDilationOfSinglePixel) {
  BinaryMask m({9, 9, 9}, 0);
  m(4, 4, 4) = 1;
  EXPECT_EQ(count_foreground(dilate_box(m, 1)), 27u);
  EXPECT_EQ(count_foreground(dilate_box(m, 2)), 125u);
  EXPECT_EQ(count_foreground(dilate_cross(m)), 7u);
  EXPECT_EQ(count_foreground(erode_cross(dilate_cross(m))), 1u);
}

}  // namespace
}  // namespace crackforge
