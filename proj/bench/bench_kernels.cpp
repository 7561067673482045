// Serial reference kernels against their OpenMP counterparts. The Omp
// variants take the thread count as the benchmark argument.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "evdi/blur.hpp"
#include "evdi/crf.hpp"
#include "evdi/dataset.hpp"
#include "evdi/edi.hpp"
#include "evdi/eventsim.hpp"
#include "evdi/metrics.hpp"
#include "reference.hpp"

using namespace evdi;

namespace {

struct Fixture {
  RunConfig cfg;
  SceneModel truth;
  Trajectory traj;
  FrameSequence seq;
  EventStream stream;
  std::vector<Image> frames;
  Image a, b;

  Fixture() {
    const auto specs = standard_trajectories();
    truth = make_scene("builtin:standard", cfg, specs);
    const auto& s = specs[0];
    traj = Trajectory::from_endpoints(s.view_id, s.window, s.first, s.last, 64);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      frames.push_back(render(truth, traj.poses()[k]).image);
      seq.frames.push_back(luma(frames.back()));
      seq.timestamps.push_back(traj.timestep(k));
    }
    stream = simulate_events(seq, cfg.theta);
    a = frames.front();
    b = frames.back();
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void set_threads(benchmark::State& state) { omp_set_num_threads(static_cast<int>(state.range(0))); }

void BM_RenderSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  const Pose2 p = f.traj.poses()[10];
  for (auto _ : state) benchmark::DoNotOptimize(reference::render(f.truth, p));
}
void BM_RenderOmp(benchmark::State& state) {
  set_threads(state);
  const Fixture& f = fixture();
  const Pose2 p = f.traj.poses()[10];
  for (auto _ : state) benchmark::DoNotOptimize(render(f.truth, p));
}

void BM_EdiWeightsSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  const ExposureWindow& w = f.stream.window();
  for (auto _ : state) benchmark::DoNotOptimize(reference::edi_weights(f.stream, w, 0.2, w.mid));
}
void BM_EdiWeightsOmp(benchmark::State& state) {
  set_threads(state);
  const Fixture& f = fixture();
  const ExposureWindow& w = f.stream.window();
  for (auto _ : state) benchmark::DoNotOptimize(edi_weights(f.stream, w, 0.2, w.mid));
}

void BM_SimulateSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::simulate_events(f.seq, 0.2));
}
void BM_SimulateOmp(benchmark::State& state) {
  set_threads(state);
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_events(f.seq, 0.2));
}

void BM_SsimSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::ssim(f.a, f.b));
}
void BM_SsimOmp(benchmark::State& state) {
  set_threads(state);
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(ssim(f.a, f.b));
}

void BM_BlurAverageSerial(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(reference::blur_average(f.frames));
}
void BM_BlurAverageOmp(benchmark::State& state) {
  set_threads(state);
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(blur_average(f.frames));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int max = omp_get_num_procs();
  for (int t = 1; t <= max; t *= 2) b->Arg(t);
  if ((max & (max - 1)) != 0) b->Arg(max);
}

}  // namespace

BENCHMARK(BM_RenderSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RenderOmp)->Apply(thread_counts)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_EdiWeightsSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EdiWeightsOmp)->Apply(thread_counts)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateOmp)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SsimSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SsimOmp)->Apply(thread_counts)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_BlurAverageSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BlurAverageOmp)->Apply(thread_counts)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
