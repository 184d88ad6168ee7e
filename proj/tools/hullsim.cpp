// hullsim: server, dataset drivers and transcript replay.

#include "hullsim/commands/session.hpp"
#include "hullsim/scenarios/capture.hpp"
#include "hullsim/scenarios/scenario.hpp"
#include "hullsim/server/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace hullsim;
namespace fs = std::filesystem;

namespace {

server::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

struct Common {
  std::uint64_t seed = 0;
  double dt = 0.01;
  std::string library;
  std::string audio_materials;
  std::string out_dir;
};

std::shared_ptr<const ModelLibrary> load_library(const Common& c) {
  return std::make_shared<const ModelLibrary>(c.library.empty() ? ModelLibrary::bundled() : ModelLibrary::load(c.library));
}

std::shared_ptr<const audio::MaterialTables> load_tables(const Common& c) {
  return std::make_shared<const audio::MaterialTables>(c.audio_materials.empty() ? audio::MaterialTables::bundled()
                                                                                 : audio::MaterialTables::load(c.audio_materials));
}

commands::Session make_session(const Common& c) {
  WorldConfig cfg;
  cfg.seed = c.seed;
  cfg.solver.dt = c.dt;
  return commands::Session(std::make_shared<World>(load_library(c), cfg), load_tables(c));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Headless rigid-body simulation server and dataset tools"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--seed", common.seed, "World and dataset seed")->capture_default_str();
  app.add_option("--dt", common.dt, "Physics step, seconds")->capture_default_str();
  app.add_option("--library", common.library, "Model records file (defaults to the bundled library)");
  app.add_option("--audio-materials", common.audio_materials, "Audio mode tables (defaults to the bundled tables)");
  app.add_option("--out-dir", common.out_dir, "Output directory");

  auto* serve = app.add_subcommand("serve", "Run the TCP server for one controller");
  int port = 1071;
  std::string host = "127.0.0.1";
  std::string transcript;
  bool bench = false;
  int bench_steps = 2000;
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--transcript", transcript, "Record every round trip as JSON lines");
  serve->add_flag("--bench", bench, "Measure round-trip throughput in-process and exit");
  serve->add_option("--bench-steps", bench_steps, "Round trips for --bench")->capture_default_str();

  auto* capture = app.add_subcommand("capture", "Two-loop image capture");
  scenarios::CaptureConfig ccfg;
  std::vector<std::string> models = scenarios::default_capture_models();
  std::string criterion = "ratio";
  capture->add_option("--models", models, "Model names")->capture_default_str();
  capture->add_option("--shots", ccfg.shots_per_model, "Shots per model")->capture_default_str();
  capture->add_option("--threshold", ccfg.grayscale_threshold, "Grayscale threshold")->capture_default_str();
  capture->add_option("--criterion", criterion, "ratio or difference")->capture_default_str();
  capture->add_option("--max-attempts", ccfg.max_attempts, "Attempts per shot")->capture_default_str();

  auto* scenario = app.add_subcommand("scenario", "Generate a rigid-body scenario dataset");
  std::string kind;
  scenarios::ScenarioSpec spec;
  scenario->add_option("kind", kind, "Scenario kind")->required();
  scenario->add_option("--trials", spec.trials, "Trial count")->capture_default_str();
  scenario->add_option("--steps", spec.steps_per_trial, "Steps per trial")->capture_default_str();
  scenario->add_flag("--audio", spec.audio, "Write a WAV per audible impact");

  auto* replay = app.add_subcommand("replay", "Replay a transcript against a fresh world");
  std::string replay_path;
  replay->add_option("transcript", replay_path, "JSON-lines transcript")->required();

  auto* schema = app.add_subcommand("schema", "Print the command reference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      if (bench) {
        const auto rep = server::run_bench(load_library(common), load_tables(common), bench_steps);
        std::cout << "bodies " << rep.bodies << "  steps " << rep.steps << "  " << rep.steps_per_second
                  << " steps/s (transforms every frame)\n"
                  << "images 256x256  " << rep.image_fps << " frames/s\n";
        if (!common.out_dir.empty()) {
          fs::create_directories(common.out_dir);
          std::ofstream(fs::path(common.out_dir) / "bench.json") << rep.to_json().dump(2) << "\n";
        }
        return 0;
      }
      auto session = make_session(common);
      server::ServerOptions opts;
      opts.host = host;
      opts.port = port;
      if (!transcript.empty()) opts.transcript = transcript;
      server::Server srv(session, opts);
      g_server = &srv;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << srv.port() << std::endl;
      srv.run();
      g_server = nullptr;
      return 0;
    }
    if (*capture) {
      ccfg.seed = common.seed;
      ccfg.criterion = scenarios::criterion_from_string(criterion);
      const auto result = scenarios::capture_dataset(ccfg, models, load_library(common));
      const fs::path out = common.out_dir.empty() ? fs::path("capture_out") : fs::path(common.out_dir);
      scenarios::write_capture(result, ccfg, out);
      std::cout << result.shots.size() << " images written to " << out.string() << "\n";
      return 0;
    }
    if (*scenario) {
      spec.kind = scenarios::scenario_kind_from_string(kind);
      spec.seed = common.seed;
      spec.dt = common.dt;
      const auto trials = scenarios::generate_scenario(spec, load_library(common), load_tables(common));
      const fs::path out = common.out_dir.empty() ? fs::path(std::string("scenario_") + scenarios::to_string(spec.kind))
                                                  : fs::path(common.out_dir);
      scenarios::write_scenario(spec, trials, out);
      std::cout << trials.size() << " trials written to " << out.string() << "\n";
      return 0;
    }
    if (*replay) {
      auto session = make_session(common);
      const auto rep = server::replay(session, replay_path);
      if (!common.out_dir.empty()) {
        fs::create_directories(common.out_dir);
        std::ofstream out(fs::path(common.out_dir) / "responses.jsonl");
        for (const auto& r : rep.responses) out << r << "\n";
      }
      std::cout << rep.rounds << " rounds, " << rep.compared << " compared, " << rep.mismatches << " mismatches\n";
      if (rep.first_mismatch) std::cout << "first mismatch at round " << *rep.first_mismatch << "\n";
      return rep.mismatches == 0 ? 0 : 1;
    }
    if (*schema) {
      auto session = make_session(common);
      std::cout << protocol::schema_reference_markdown(session.registry());
      return 0;
    }
  } catch (const server::PortInUse& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const LibraryNotFound& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
