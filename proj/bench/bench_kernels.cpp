// Serial reference vs OpenMP kernel: per-pixel raycast and per-sample modal sum.

#include "hullsim/audio/impact.hpp"
#include "hullsim/sensors/render.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace hullsim;

namespace {

struct Scene {
  sensors::RenderScene scene;
  sensors::Camera camera;
};

const Scene& cluttered() {
  static const Scene s = [] {
    auto lib = std::make_shared<const ModelLibrary>(ModelLibrary::bundled());
    World w(lib);
    w.create_empty_room(12, 12);
    const char* names[] = {"small_table_green_marble", "iron_box", "ceramic_mug", "toy_pyramid", "block",
                           "ball_rubber", "basket", "toy_cylinder"};
    for (int i = 0; i < 24; ++i)
      w.add_object(lib->get(names[i % 8]), Vec3(-2.5 + 0.9 * (i % 6), 0.0, -1.5 + 0.9 * (i / 6)),
                   Vec3(0, 15.0 * i, 0), lib->get(names[i % 8]).scale_factor, static_cast<std::uint64_t>(i + 1));
    Scene out;
    out.scene = sensors::snapshot(w);
    out.camera.pose.position = Vec3(0, 2.5, -5);
    out.camera.pose.orientation = look_rotation((Vec3(0, 0.3, 0) - out.camera.pose.position).normalized());
    return out;
  }();
  return s;
}

void set_resolution(sensors::Camera& c, int res) {
  c.intrinsics.width = res;
  c.intrinsics.height = res;
}

void BM_render_serial(benchmark::State& state) {
  auto cam = cluttered().camera;
  set_resolution(cam, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sensors::render_serial(cluttered().scene, cam));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_render(benchmark::State& state) {
  auto cam = cluttered().camera;
  set_resolution(cam, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sensors::render(cluttered().scene, cam));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

std::vector<audio::Mode> modes(int count) {
  std::vector<audio::Mode> m;
  for (int i = 0; i < count; ++i) m.push_back({200.0 + 173.0 * i, 5.0 + i, 1.0 / (1 + i)});
  return m;
}

void BM_synth_serial(benchmark::State& state) {
  const auto m = modes(static_cast<int>(state.range(0)));
  std::vector<double> out(44100);
  for (auto _ : state) {
    audio::synth_serial(m, 44100, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

void BM_synth(benchmark::State& state) {
  const auto m = modes(static_cast<int>(state.range(0)));
  std::vector<double> out(44100);
  for (auto _ : state) {
    audio::synth(m, 44100, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

}  // namespace

BENCHMARK(BM_render_serial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_render)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synth_serial)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_synth)->Arg(4)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
