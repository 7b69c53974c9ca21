// OpenMP kernels against their serial references. Set OMP_NUM_THREADS to
// compare scaling; on one core the pairs show the threading overhead only.

#include <benchmark/benchmark.h>

#include <random>

#include "siegelnet/data/graph.hpp"
#include "siegelnet/data/radar.hpp"
#include "siegelnet/diff/kernels.hpp"

using namespace siegelnet;

namespace {

data::Dataset radar(int samples) {
  data::RadarDatasetConfig rc;
  rc.ar.samples = samples;
  rc.ar.q = 3;
  return data::make_radar_dataset(rc);
}

struct Batch {
  diff::Model model;
  Vec raw;
  std::vector<diff::Sample> samples;
  std::vector<std::size_t> idx;
};

Batch batch(int n) {
  const auto d = radar(n);
  Batch b{diff::Model({diff::ModelKind::AfcQmlr, d.signature, 3, {}}), {}, {}, {}};
  b.raw = b.model.init(1);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    b.samples.push_back({d.points[i], d.labels[i]});
    b.idx.push_back(i);
  }
  return b;
}

void BM_BatchGradient(benchmark::State& st) {
  const auto b = batch(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::batch_gradient(b.model, b.raw, b.samples, b.idx));
}
void BM_BatchGradientSerial(benchmark::State& st) {
  const auto b = batch(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::batch_gradient_reference(b.model, b.raw, b.samples, b.idx));
}

void BM_CrossDistances(benchmark::State& st) {
  const auto d = radar(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::cross_distances(d.points, d.points));
}
void BM_CrossDistancesSerial(benchmark::State& st) {
  const auto d = radar(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::cross_distances_reference(d.points, d.points));
}

struct Graph {
  Mat g;
  Vec raw;
};

Graph graph(int n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec> f;
  for (int i = 0; i < n; ++i) f.push_back(Vec::NullaryExpr(4, [&] { return std::abs(gauss(rng)); }));
  Graph out{data::cosine_graph(f), Vec(n * 6)};
  for (Eigen::Index k = 0; k < out.raw.size(); ++k) out.raw(k) = 0.1 * gauss(rng);
  return out;
}

void BM_Distortion(benchmark::State& st) {
  const auto g = graph(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::distortion(g.raw, 2, g.g));
}
void BM_DistortionSerial(benchmark::State& st) {
  const auto g = graph(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(diff::distortion_reference(g.raw, 2, g.g));
}

void BM_RadarDataset(benchmark::State& st) {
  data::RadarDatasetConfig rc;
  rc.ar.samples = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(data::make_radar_dataset(rc));
}
void BM_RadarDatasetSerial(benchmark::State& st) {
  data::RadarDatasetConfig rc;
  rc.ar.samples = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(data::make_radar_dataset_serial(rc));
}

}  // namespace

BENCHMARK(BM_BatchGradient)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientSerial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossDistances)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossDistancesSerial)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distortion)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistortionSerial)->Arg(50)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadarDataset)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadarDatasetSerial)->Arg(600)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
