// Serial reference vs OpenMP versions of the data-parallel kernels, plus the
// operations built on them. Thread count follows CRACKFORGE_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "crackforge/evalmetrics/metrics.hpp"
#include "crackforge/riesz/network.hpp"
#include "crackforge/riesz/train.hpp"
#include "crackforge/volcore/kernels.hpp"
#include "crackforge/volcore/resample.hpp"

namespace {

using namespace crackforge;
using kernels::Exec;

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

std::vector<double> random_doubles(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

BinaryMask random_mask(const Dims& d, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  BinaryMask m(d);
  for (auto& x : m.data()) x = b(rng) ? 1 : 0;
  return m;
}

const Dims kVol{128, 128, 128};

void BM_WindowOr(benchmark::State& s) {
  const auto fn = kernels::window_or(exec_of(s));
  const BinaryMask in = random_mask(kVol, 1, 0.01);
  std::vector<std::uint8_t> out(in.size());
  for (auto _ : s) {
    for (int axis = 0; axis < 3; ++axis) fn(in.data(), out, kVol, axis, 2, 2);
    benchmark::DoNotOptimize(out.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(3 * in.size()));
}

void BM_BsplinePrefilter(benchmark::State& s) {
  const auto fn = kernels::bspline_prefilter(exec_of(s));
  const auto src = random_doubles(kVol.voxels(), 2);
  std::vector<double> data;
  for (auto _ : s) {
    data = src;
    for (int axis = 0; axis < 3; ++axis) fn(data, kVol, axis);
    benchmark::DoNotOptimize(data.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(3 * src.size()));
}

void BM_CubicSample(benchmark::State& s) {
  const auto fn = kernels::cubic_sample(exec_of(s));
  const auto in = random_doubles(kVol.voxels(), 3);
  std::vector<double> pos(64);
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = 2.0 * static_cast<double>(i) + 0.5;
  Dims od = kVol;
  od.nx = static_cast<std::int64_t>(pos.size());
  std::vector<double> out(od.voxels());
  for (auto _ : s) {
    fn(in, kVol, 0, pos, out);
    benchmark::DoNotOptimize(out.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(out.size()));
}

void BM_ChannelMix(benchmark::State& s) {
  const auto fn = kernels::channel_mix(exec_of(s));
  const std::size_t cin = 16, cout = 16, m = 9, voxels = 64 * 64 * 64;
  const auto feat = random_doubles(cin * m * voxels, 4);
  const auto coeff = random_doubles(cin * cout * m, 5);
  const auto bias = random_doubles(cout, 6);
  std::vector<double> out(cout * voxels);
  for (auto _ : s) {
    fn(feat, coeff, bias, cin, cout, m, voxels, out);
    benchmark::DoNotOptimize(out.data());
  }
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(cout * cin * m * voxels));
}

BENCHMARK(BM_WindowOr)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BsplinePrefilter)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CubicSample)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChannelMix)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Library operations on the default execution path.

void BM_Pyramid(benchmark::State& s) {
  VoxelVolume v(kVol);
  const auto r = random_doubles(v.size(), 7);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(r[i]);
  for (auto _ : s) benchmark::DoNotOptimize(build_pyramid(v, 3, 2, exec_of(s)));
}

void BM_RieszForward(benchmark::State& s) {
  const auto n = s.range(0);
  const riesz::RieszNetwork net = riesz::RieszNetwork::initialized({{1, 16, 16, 32, 1}, 3}, 8);
  VoxelVolume v({n, n, n});
  const auto r = random_doubles(v.size(), 9);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(r[i]);
  for (auto _ : s) benchmark::DoNotOptimize(riesz::predict(net, v, 0.5));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(v.size()));
}

void BM_TolerantScore(benchmark::State& s) {
  const BinaryMask p = random_mask(kVol, 10, 0.01), g = random_mask(kVol, 11, 0.01);
  const std::vector<int> tols{0, 1, 2};
  for (auto _ : s) benchmark::DoNotOptimize(evalmetrics::score(p, g, tols));
}

BENCHMARK(BM_Pyramid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RieszForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TolerantScore)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
