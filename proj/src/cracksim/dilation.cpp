#include "crackforge/cracksim/dilation.hpp"

#include <random>

#include "crackforge/volcore/morphology.hpp"
#include "crackforge/volcore/rng.hpp"

namespace crackforge::cracksim {

Anchor parse_anchor(const std::string& s) {
  if (s == "top_left") return Anchor::top_left;
  if (s == "bottom_right") return Anchor::bottom_right;
  throw ConfigError("unknown dilation anchor: " + s);
}

std::string to_string(Anchor a) { return a == Anchor::top_left ? "top_left" : "bottom_right"; }

DilationProfile draw_dilation_profile(std::int64_t slices, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("dilation probability must lie in (0, 1)");
  if (slices < 1) throw ConfigError("dilation profile needs at least one slice");
  DilationProfile prof{p, seed, std::vector<std::int64_t>(static_cast<std::size_t>(slices), 0)};
  Rng rng(seed);
  std::bernoulli_distribution step(p);
  for (std::size_t i = 1; i < prof.counts.size(); ++i) {
    prof.counts[i] = prof.counts[i - 1] + (step(rng) ? 1 : 0);
  }
  return prof;
}

BinaryMask dilate_slices(const BinaryMask& mask, const DilationProfile& profile, Anchor anchor) {
  const Dims d = mask.dims();
  if (static_cast<std::int64_t>(profile.counts.size()) != d.nx) {
    throw Error("dilation profile length does not match the x extent");
  }
  BinaryMask out = mask;
  for (std::int64_t x = 0; x < d.nx; ++x) {
    const std::int64_t k = profile.counts[static_cast<std::size_t>(x)];
    if (k < 0) throw Error("negative dilation count");
    if (k == 0) continue;
    const BinaryMask slice = extract_slice(mask, 0, x);
    const std::array<std::int64_t, 3> grow{k, k, 0};
    const std::array<std::int64_t, 3> none{0, 0, 0};
    const BinaryMask grown = anchor == Anchor::top_left
                                 ? dilate_window(slice, grow, none, kernels::Exec::serial)
                                 : dilate_window(slice, none, grow, kernels::Exec::serial);
    insert_slice(out, 0, x, grown);
  }
  return out;
}

AdaptiveResult adaptive_dilate(const BinaryMask& mask, double p, std::uint64_t seed,
                               Anchor anchor) {
  AdaptiveResult r{BinaryMask{}, draw_dilation_profile(mask.dims().nx, p, seed)};
  r.mask = dilate_slices(mask, r.profile, anchor);
  return r;
}

BinaryMask dilate_fixed_width(const BinaryMask& mask, int width) {
  if (width < 1) throw ConfigError("crack width must be >= 1");
  BinaryMask out = dilate_box(mask, (width - 1) / 2);
  if (width % 2 == 0) out = dilate_window(out, {1, 1, 1}, {0, 0, 0});
  return out;
}

}  // namespace crackforge::cracksim
