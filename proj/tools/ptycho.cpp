/* PTYCHO.CPP  Command-line front end: synthetic dataset generation, classic
 *             and live reconstruction, metric evaluation, and manifest
 *             replay.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#include <atomic>
#include <chrono>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ptycho/analysis.hpp"
#include "ptycho/engine.hpp"
#include "ptycho/image.hpp"
#include "ptycho/io.hpp"
#include "ptycho/solvers.hpp"
#include "ptycho/synth.hpp"
#include "ptycho/version.hpp"

namespace {

using namespace ptycho;

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  int object_size = 256;
  int probe_size = 32;
  int positions = 400;
  double pitch = 5.0;
  std::string object_mode = "procedural";
  std::vector<std::string> images;
  std::uint64_t seed = 1;
  std::string sampling = "arc-length";
  std::string frame_dtype = "f32";
  double radius_fraction = 0.0;  // 0: draw uniformly from [1/11, 1/7]

  json to_json() const {
    return json{{"object_size", object_size},
                {"probe_size", probe_size},
                {"positions", positions},
                {"pitch", pitch},
                {"object_mode", object_mode},
                {"images", images},
                {"seed", seed},
                {"sampling", sampling},
                {"frame_dtype", frame_dtype},
                {"radius_fraction", radius_fraction}};
  }
  static SimulateOptions from_json(const json& j) {
    SimulateOptions o;
    o.object_size = j.at("object_size").get<int>();
    o.probe_size = j.at("probe_size").get<int>();
    o.positions = j.at("positions").get<int>();
    o.pitch = j.at("pitch").get<double>();
    o.object_mode = j.at("object_mode").get<std::string>();
    o.images = j.at("images").get<std::vector<std::string>>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.sampling = j.at("sampling").get<std::string>();
    o.frame_dtype = j.at("frame_dtype").get<std::string>();
    o.radius_fraction = j.at("radius_fraction").get<double>();
    return o;
  }
};

ObjectMode object_mode_from_string(const std::string& s) {
  if (s == "hsv") return ObjectMode::hsv;
  if (s == "phase-only") return ObjectMode::phase_only;
  if (s == "pair") return ObjectMode::pair;
  if (s == "procedural") return ObjectMode::procedural;
  throw ConfigError("unknown object mode: " + s);
}

void run_simulate(const SimulateOptions& opts, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t need_images =
      opts.object_mode == "pair" ? 2 : (opts.object_mode == "procedural" ? 0 : 1);
  if (opts.images.size() != need_images)
    throw ConfigError("object mode '" + opts.object_mode + "' needs " +
                      std::to_string(need_images) + " --image argument(s)");

  ObjectSpec ospec;
  ospec.mode = object_mode_from_string(opts.object_mode);
  ospec.size = opts.object_size;
  for (const auto& p : opts.images)
    ospec.source_images.push_back(load_image_rgb(p, opts.object_size));
  Rng param_rng(derive_seed(opts.seed, "object-params"));
  ospec.amp_offset = param_rng.uniform(0.0, 1.0);
  ospec.phase_scale = param_rng.uniform(0.3, 0.99);

  Rng texture_rng(derive_seed(opts.seed, "object-texture"));
  ComplexGrid object = make_object(ospec, texture_rng);

  ProbeSpec pspec;
  pspec.size = opts.probe_size;
  pspec.seed = derive_seed(opts.seed, "probe");
  if (opts.radius_fraction > 0.0) {
    pspec.radius_fraction = opts.radius_fraction;
  } else {
    Rng radius_rng(derive_seed(opts.seed, "probe-radius"));
    pspec.radius_fraction = radius_rng.uniform(1.0 / 11.0, 1.0 / 7.0);
  }
  ComplexGrid probe = make_zernike_probe(pspec);

  ScanSpec sspec;
  sspec.count = opts.positions;
  sspec.pitch = opts.pitch;
  if (opts.sampling == "arc-length")
    sspec.sampling = SpiralSampling::arc_length;
  else if (opts.sampling == "uniform-theta")
    sspec.sampling = SpiralSampling::uniform_theta;
  else
    throw ConfigError("unknown sampling: " + opts.sampling);
  SpiralPath path;
  try {
    path = make_spiral_positions(sspec, object.shape(), probe.shape());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  ScanDataset ds;
  ds.object_shape = object.shape();
  ds.probe_shape = probe.shape();
  ds.positions = path.positions;
  ds.centers = path.centers;
  ds.intensities = forward_model(object, probe, path.positions);

  fs::create_directories(out_dir);
  write_dataset(out_dir, ds, frame_dtype_from_string(opts.frame_dtype));
  write_cgrid(out_dir / "object_truth.cgrid", object);
  write_cgrid(out_dir / "probe_truth.cgrid", probe);
  write_manifest(out_dir, "simulate", opts.to_json(), kVersion);
  std::cout << "simulate: " << ds.size() << " frames, object " << opts.object_size << "^2, probe "
            << opts.probe_size << "^2 -> " << out_dir.string() << " ("
            << elapsed_seconds(start) << " s)\n";
}

// --------------------------------------------------------------- reconstruct

struct ReconstructOptions {
  std::string data;
  std::string alg = "dm";
  double beta = 1.0;
  int iters = 100;
  std::string probe = "retrieve";
  std::uint64_t seed = 1;

  json to_json() const {
    return json{{"data", data}, {"alg", alg},   {"beta", beta},
                {"iters", iters}, {"probe", probe}, {"seed", seed}};
  }
  static ReconstructOptions from_json(const json& j) {
    ReconstructOptions o;
    o.data = j.at("data").get<std::string>();
    o.alg = j.at("alg").get<std::string>();
    o.beta = j.at("beta").get<double>();
    o.iters = j.at("iters").get<int>();
    o.probe = j.at("probe").get<std::string>();
    o.seed = j.at("seed").get<std::uint64_t>();
    return o;
  }
};

void run_reconstruct(const ReconstructOptions& opts, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ScanDataset ds = read_dataset(opts.data);
  std::vector<RealGrid> amps;
  amps.reserve(ds.size());
  for (const auto& frame : ds.intensities) amps.push_back(sqrt_grid(frame));

  SolverConfig config;
  config.beta = opts.beta;
  config.iterations = opts.iters;
  config.probe_mode = (opts.probe == "retrieve") ? ProbeMode::retrieve : ProbeMode::known;
  Algorithm alg;
  if (opts.alg == "er")
    alg = Algorithm::ER;
  else if (opts.alg == "dm")
    alg = Algorithm::DM;
  else
    throw ConfigError("unknown algorithm: " + opts.alg);

  ComplexGrid probe;
  if (config.probe_mode == ProbeMode::known) {
    probe = read_cgrid(opts.probe);
    if (!(probe.shape() == ds.probe_shape)) throw DataError("probe file shape mismatch");
  } else {
    probe = random_probe_guess(amps, ds.probe_shape, derive_seed(opts.seed, "probe-guess"));
  }

  ClassicProblem problem{std::move(amps), ds.positions, ds.object_shape, ds.probe_shape};
  ClassicResult result = run_classic(problem, config, alg, probe);

  fs::create_directories(out_dir);
  write_cgrid(out_dir / "recon_object.cgrid", result.object);
  write_cgrid(out_dir / "recon_probe.cgrid", result.probe);
  ReconReport report;
  report.projections_evaluated =
      result.ops.amplitude_projections + result.ops.consistency_projections;
  write_json_file(out_dir / "report.json", report_to_json(report));
  write_manifest(out_dir, "reconstruct", opts.to_json(), kVersion);
  std::cout << "reconstruct: " << opts.alg << " x" << opts.iters << " on " << ds.size()
            << " frames -> " << out_dir.string() << " (" << elapsed_seconds(start) << " s)\n";
}

// ---------------------------------------------------------------------- live

struct LiveOptions {
  std::string data;
  int buffer = 10;
  int iters_per_shift = 10;
  std::string schedule;  // empty: ldm:<J>
  double beta = 1.0;
  std::string probe = "retrieve";
  int bootstrap_frames = 20;
  int bootstrap_iters = 200;
  std::string init = "informed";
  int snapshot_every = 0;
  std::uint64_t seed = 1;

  json to_json() const {
    return json{{"data", data},
                {"buffer", buffer},
                {"iters_per_shift", iters_per_shift},
                {"schedule", schedule},
                {"beta", beta},
                {"probe", probe},
                {"bootstrap_frames", bootstrap_frames},
                {"bootstrap_iters", bootstrap_iters},
                {"init", init},
                {"snapshot_every", snapshot_every},
                {"seed", seed}};
  }
  static LiveOptions from_json(const json& j) {
    LiveOptions o;
    o.data = j.at("data").get<std::string>();
    o.buffer = j.at("buffer").get<int>();
    o.iters_per_shift = j.at("iters_per_shift").get<int>();
    o.schedule = j.at("schedule").get<std::string>();
    o.beta = j.at("beta").get<double>();
    o.probe = j.at("probe").get<std::string>();
    o.bootstrap_frames = j.at("bootstrap_frames").get<int>();
    o.bootstrap_iters = j.at("bootstrap_iters").get<int>();
    o.init = j.at("init").get<std::string>();
    o.snapshot_every = j.at("snapshot_every").get<int>();
    o.seed = j.at("seed").get<std::uint64_t>();
    return o;
  }
};

std::string snapshot_name(std::int64_t frontier) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snap_%06lld.png", static_cast<long long>(frontier));
  return buf;
}

void run_live(const LiveOptions& opts, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ScanDataset ds = read_dataset(opts.data);

  EngineConfig config;
  config.buffer_size = opts.buffer;
  config.iters_per_shift = opts.iters_per_shift;
  try {
    config.schedule = opts.schedule.empty()
                          ? Schedule::uniform(LiveAlgorithm::LDM, opts.iters_per_shift)
                          : parse_schedule(opts.schedule);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  config.beta = opts.beta;
  config.probe_mode = (opts.probe == "retrieve") ? ProbeMode::retrieve : ProbeMode::known;
  config.bootstrap_frames = opts.bootstrap_frames;
  config.bootstrap_iters = opts.bootstrap_iters;
  if (opts.init == "informed")
    config.init_mode = InitMode::informed;
  else if (opts.init == "naive")
    config.init_mode = InitMode::naive;
  else
    throw ConfigError("unknown init mode: " + opts.init);

  std::optional<ComplexGrid> known_probe;
  if (config.probe_mode == ProbeMode::known) {
    known_probe = read_cgrid(opts.probe);
    if (!(known_probe->shape() == ds.probe_shape)) throw DataError("probe file shape mismatch");
  }

  const OpCountersSnapshot ops_before = snapshot_counters();
  LiveEngine engine(config, ds.object_shape, ds.probe_shape, std::move(known_probe),
                    derive_seed(opts.seed, "probe-guess"));

  fs::create_directories(out_dir);
  auto maybe_snapshot = [&](const FreezeEvent&) {
    const std::int64_t frontier = engine.frontier();
    if (opts.snapshot_every > 0 && frontier % opts.snapshot_every == 0)
      emit_snapshot(engine.snapshot().object, out_dir / snapshot_name(frontier));
  };

  // a feeder thread emulates the detector stream; results do not depend on
  // the interleaving, only on frame order
  std::atomic<bool> fed{false};
  std::thread feeder([&] {
    for (std::size_t k = 0; k < ds.size(); ++k)
      engine.push_frame(ds.intensities[k], ds.positions[k]);
    fed.store(true);
  });
  try {
    while (true) {
      auto event = engine.advance();
      if (event) {
        maybe_snapshot(*event);
        continue;
      }
      if (fed.load() && engine.pending_size() == 0) break;
      std::this_thread::sleep_for(std::chrono::microseconds(100));
    }
  } catch (...) {
    feeder.join();
    throw;
  }
  feeder.join();
  engine.close_intake();
  while (engine.phase() != EnginePhase::done) {
    auto event = engine.advance();
    if (event) maybe_snapshot(*event);
  }

  EngineSnapshot snap = engine.snapshot();
  write_cgrid(out_dir / "recon_object.cgrid", snap.object);
  write_cgrid(out_dir / "recon_probe.cgrid", snap.probe);
  emit_snapshot(snap.object, out_dir / "final_object.png");
  ReconReport report;
  const OpCountersSnapshot ops = snapshot_counters() - ops_before;
  report.projections_evaluated = ops.amplitude_projections + ops.consistency_projections;
  write_json_file(out_dir / "report.json", report_to_json(report));
  write_manifest(out_dir, "live", opts.to_json(), kVersion);
  std::cout << "live: " << ds.size() << " frames, B=" << opts.buffer
            << ", J=" << opts.iters_per_shift << " -> " << out_dir.string() << " ("
            << elapsed_seconds(start) << " s)\n";
}

// ---------------------------------------------------------------------- eval

struct EvalOptions {
  std::string truth;
  std::string recon;
  int region = 300;

  json to_json() const {
    return json{{"truth", truth}, {"recon", recon}, {"region", region}};
  }
  static EvalOptions from_json(const json& j) {
    EvalOptions o;
    o.truth = j.at("truth").get<std::string>();
    o.recon = j.at("recon").get<std::string>();
    o.region = j.at("region").get<int>();
    return o;
  }
};

void run_eval(const EvalOptions& opts, const fs::path& out_path) {
  ComplexGrid truth = read_cgrid(fs::path(opts.truth) / "object_truth.cgrid");
  ComplexGrid truth_probe = read_cgrid(fs::path(opts.truth) / "probe_truth.cgrid");
  ScanDataset ds = read_dataset(opts.truth);
  ComplexGrid recon = read_cgrid(opts.recon);
  if (!(recon.shape() == truth.shape())) throw DataError("eval: object shape mismatch");
  if (opts.region <= 0 || opts.region > truth.height() || opts.region > truth.width())
    throw ConfigError("eval: region does not fit the object");

  const Region full = Region::full(truth.shape());
  const Region central = Region::central(truth.shape(), opts.region);
  ReconReport report;
  report.e0_full = e0_metric(truth, recon, full);
  report.e0_central = e0_metric(truth, recon, central);
  report.psnr_amp_full = psnr_amplitude(truth, recon, full);
  report.psnr_amp_central = psnr_amplitude(truth, recon, central);
  report.overlap_ratio = overlap_ratio(ds.centers, probe_diameter_90(truth_probe));

  const json j = report_to_json(report);
  std::cout << j.dump(2) << "\n";
  if (!out_path.empty()) {
    write_json_file(out_path, j);
    write_manifest(out_path.parent_path(), "eval", opts.to_json(), kVersion);
  }
}

// -------------------------------------------------------------------- replay

void dispatch(const std::string& command, const json& args, const fs::path& out) {
  if (command == "simulate")
    run_simulate(SimulateOptions::from_json(args), out);
  else if (command == "reconstruct")
    run_reconstruct(ReconstructOptions::from_json(args), out);
  else if (command == "live")
    run_live(LiveOptions::from_json(args), out);
  else if (command == "eval")
    run_eval(EvalOptions::from_json(args), out);
  else
    throw ConfigError("manifest has unknown command: " + command);
}

void run_replay(const fs::path& manifest_path, const fs::path& out) {
  const json m = read_json_file(manifest_path);
  try {
    dispatch(m.at("command").get<std::string>(), m.at("args"), out);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liveptycho: streaming ptychographic phase retrieval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ptycho::kVersion));

  SimulateOptions sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic scan dataset");
  simulate->add_option("--out", sim_out, "output directory")->required();
  simulate->add_option("--object-size", sim.object_size, "object canvas size in pixels");
  simulate->add_option("--probe-size", sim.probe_size, "probe/detector size in pixels");
  simulate->add_option("--positions", sim.positions, "number of scan positions");
  simulate->add_option("--pitch", sim.pitch, "spiral pitch (r = pitch * theta, pixels)");
  simulate->add_option("--object-mode", sim.object_mode, "hsv|phase-only|pair|procedural");
  simulate->add_option("--image", sim.images, "source image(s) for image-based modes");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--sampling", sim.sampling, "arc-length|uniform-theta");
  simulate->add_option("--frame-dtype", sim.frame_dtype, "f32|f64 frame storage");
  simulate->add_option("--radius-fraction", sim.radius_fraction,
                       "aperture radius as a fraction of the probe size (0: random in [1/11,1/7])");

  ReconstructOptions rec;
  std::string rec_out;
  auto* reconstruct = app.add_subcommand("reconstruct", "classic batch reconstruction");
  reconstruct->add_option("--data", rec.data, "dataset directory")->required();
  reconstruct->add_option("--out", rec_out, "output directory")->required();
  reconstruct->add_option("--alg", rec.alg, "er|dm");
  reconstruct->add_option("--beta", rec.beta, "difference-map relaxation");
  reconstruct->add_option("--iters", rec.iters, "iteration count");
  reconstruct->add_option("--probe", rec.probe, "'retrieve' or path to a probe .cgrid");
  reconstruct->add_option("--seed", rec.seed, "RNG seed (probe guess)");

  LiveOptions live;
  std::string live_out;
  auto* live_cmd = app.add_subcommand("live", "streaming reconstruction");
  live_cmd->add_option("--data", live.data, "dataset directory")->required();
  live_cmd->add_option("--out", live_out, "output directory")->required();
  live_cmd->add_option("--buffer", live.buffer, "fluid buffer size B");
  live_cmd->add_option("--iters-per-shift", live.iters_per_shift, "iterations J per shift");
  live_cmd->add_option("--schedule", live.schedule, "e.g. ldm:8,ler:2 (default ldm:J)");
  live_cmd->add_option("--beta", live.beta, "difference-map relaxation");
  live_cmd->add_option("--probe", live.probe, "'retrieve' or path to a probe .cgrid");
  live_cmd->add_option("--bootstrap-frames", live.bootstrap_frames,
                       "frames pre-reconstructed in batch mode (0 disables)");
  live_cmd->add_option("--bootstrap-iters", live.bootstrap_iters, "bootstrap DM iterations");
  live_cmd->add_option("--init", live.init, "informed|naive phase init for admitted waves");
  live_cmd->add_option("--snapshot-every", live.snapshot_every,
                       "emit a PNG every E freezes (0: final only)");
  live_cmd->add_option("--seed", live.seed, "RNG seed (probe guess)");

  EvalOptions eval;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a reconstruction against ground truth");
  eval_cmd->add_option("--truth", eval.truth, "dataset directory with ground-truth files")
      ->required();
  eval_cmd->add_option("--recon", eval.recon, "reconstructed object .cgrid")->required();
  eval_cmd->add_option("--region", eval.region, "central region side length for ^c metrics");
  eval_cmd->add_option("--out", eval_out, "also write the report JSON here");

  std::string replay_manifest, replay_out;
  auto* replay = app.add_subcommand("replay", "re-run a recorded manifest");
  replay->add_option("manifest", replay_manifest, "manifest.json path")->required();
  replay->add_option("--out", replay_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) run_simulate(sim, sim_out);
    if (reconstruct->parsed()) run_reconstruct(rec, rec_out);
    if (live_cmd->parsed()) run_live(live, live_out);
    if (eval_cmd->parsed()) run_eval(eval, eval_out);
    if (replay->parsed()) run_replay(replay_manifest, replay_out);
  } catch (const ptycho::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ptycho::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
