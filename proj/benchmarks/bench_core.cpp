#include <benchmark/benchmark.h>

#include <random>

#include "mmcyto/cmif.hpp"
#include "mmcyto/focus.hpp"
#include "mmcyto/illum.hpp"
#include "mmcyto/image.hpp"
#include "mmcyto/peaks.hpp"

using namespace mmcyto;

namespace {

Plane noise(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0F, 1.0F);
  Plane p(n, n);
  for (auto& v : p.pixels()) v = u(rng);
  return gaussian_filter(p, 1.5);
}

}  // namespace

static void BM_Gaussian(benchmark::State& st) {
  const Plane p = noise(static_cast<int>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(gaussian_filter(p, 6.4));
}
BENCHMARK(BM_Gaussian)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_Quantize(benchmark::State& st) {
  const Plane p = noise(static_cast<int>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(quantize_equal_count(p, 16));
}
BENCHMARK(BM_Quantize)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

// Per-nucleus refinement size: 256 patch inside a 288 region, Q = 16.
static void BM_MiSurfaceRefine(benchmark::State& st) {
  const Plane big = noise(288, 3);
  const auto f = quantize_equal_count(big.crop(16, 16, 256, 256), static_cast<int>(st.range(0)));
  const auto m = quantize_equal_count(big, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(mi_surface(f, m, {0, 32, 0, 32}, 1));
}
BENCHMARK(BM_MiSurfaceRefine)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_MiSurfaceDirect(benchmark::State& st) {
  const Plane big = noise(96, 4);
  const auto f = quantize_equal_count(big.crop(8, 8, 64, 64), 8);
  const auto m = quantize_equal_count(big, 8);
  for (auto _ : st) benchmark::DoNotOptimize(mi_surface_direct(f, m, {12, 20, 12, 20}, 1));
}
BENCHMARK(BM_MiSurfaceDirect)->Unit(benchmark::kMillisecond);

static void BM_RefineTranslation(benchmark::State& st) {
  const Plane big = noise(320, 5);
  const Plane fixed = big.crop(32, 32, 256, 256);
  const Plane region = big.crop(16, 20, 288, 288);
  for (auto _ : st) benchmark::DoNotOptimize(refine_translation(fixed, region, {}));
}
BENCHMARK(BM_RefineTranslation)->Unit(benchmark::kMillisecond);

static void BM_Lap2(benchmark::State& st) {
  const Plane p = noise(256, 6);
  for (auto _ : st) benchmark::DoNotOptimize(lap2_score(p, 64.0));
}
BENCHMARK(BM_Lap2)->Unit(benchmark::kMicrosecond);

static void BM_IlluminationCorrect(benchmark::State& st) {
  const Plane p = noise(static_cast<int>(st.range(0)), 7);
  for (auto _ : st) benchmark::DoNotOptimize(correct_channel(p));
}
BENCHMARK(BM_IlluminationCorrect)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_DetectPeaks(benchmark::State& st) {
  const Plane h = baseline_blob_detector(noise(512, 8), 2.0);
  for (auto _ : st) benchmark::DoNotOptimize(detect_peaks(h));
}
BENCHMARK(BM_DetectPeaks)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
