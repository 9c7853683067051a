/* ENGINE.HPP  Streaming reconstruction engine: a fixed-size buffer of fluid
 *             exit waves is iterated J times per scan shift against frozen
 *             partial sums, then the oldest wave is frozen and the buffer
 *             moves forward. Supports informed phase initialization of newly
 *             admitted waves, an optional batch bootstrap on the first frames
 *             of the scan, and stabilized live probe retrieval.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <deque>
#include <mutex>
#include <optional>

#include "ptycho/solvers.hpp"

namespace ptycho {

enum class InitMode { informed, naive };
enum class EnginePhase { bootstrapping, streaming, draining, done };

struct EngineConfig {
  int buffer_size = 5;       // B
  int iters_per_shift = 20;  // J
  Schedule schedule = Schedule::uniform(LiveAlgorithm::LDM, 20);
  double beta = 1.0;
  ProbeMode probe_mode = ProbeMode::known;
  int bootstrap_frames = 20;
  int bootstrap_iters = 200;
  ClipConfig clip;
  InitMode init_mode = InitMode::informed;

  void validate() const {
    if (buffer_size < 1) throw std::invalid_argument("EngineConfig: buffer_size must be >= 1");
    if (iters_per_shift < 1)
      throw std::invalid_argument("EngineConfig: iters_per_shift must be >= 1");
    schedule.validate();
    if (schedule.total() != iters_per_shift)
      throw std::invalid_argument("EngineConfig: schedule total != iters_per_shift");
    if (beta == 0.0) throw std::invalid_argument("EngineConfig: beta must be nonzero");
    if (bootstrap_frames < 0 || bootstrap_iters < 0)
      throw std::invalid_argument("EngineConfig: bootstrap settings must be non-negative");
    clip.validate();
  }
};

struct FreezeEvent {
  std::int64_t frozen_index = 0;  // scan-order index of the wave just frozen
};

struct EngineSnapshot {
  ComplexGrid object;
  ComplexGrid probe;
  std::int64_t frontier = 0;
};

struct ProbeGuess {
  ComplexGrid probe;
  double norm_target = 0.0;
};

/// Random complex-Gaussian probe scaled to the l2 norm of the brightest
/// diffraction pattern (largest sqrt-intensity norm) among the given frames.
inline ProbeGuess init_probe_guess(const std::vector<RealGrid>& intensity_frames,
                                   std::uint64_t rng_seed) {
  if (intensity_frames.empty()) throw std::invalid_argument("init_probe_guess: no frames");
  std::vector<RealGrid> amps;
  amps.reserve(intensity_frames.size());
  for (const auto& f : intensity_frames) amps.push_back(sqrt_grid(f));
  double target = 0.0;
  for (const auto& a : amps) target = std::max(target, norm2(a));
  ComplexGrid probe = random_probe_guess(amps, intensity_frames.front().shape(), rng_seed);
  return {std::move(probe), target};
}

/// Seeds a new wave's Fourier phases from the current object and probe
/// estimates: Psi0 = ifft2(A * exp(i arg(fft2(probe * object_window)))).
/// A zero past (object_est = 0) degenerates to the naive init ifft2(A).
inline ComplexGrid informed_phase_init(const RealGrid& amps, const ComplexGrid& object_est,
                                       const ComplexGrid& probe_est, ScanPosition pos) {
  ComplexGrid wave = extract_window(object_est, pos, probe_est.height(), probe_est.width());
  for (std::int64_t i = 0; i < wave.size(); ++i) wave[i] *= probe_est[i];
  return project_amplitudes(wave, amps);
}

/// Naive zero-phase init of a single wave.
inline ComplexGrid naive_phase_init(const RealGrid& amps) {
  ComplexGrid spec(amps.height(), amps.width());
  for (std::int64_t i = 0; i < spec.size(); ++i) spec[i] = cdouble(amps[i], 0.0);
  return ifft2(spec);
}

class LiveEngine {
 public:
  LiveEngine(EngineConfig config, GridShape object_shape, GridShape probe_shape,
             std::optional<ComplexGrid> known_probe, std::uint64_t seed)
      : config_(std::move(config)),
        object_shape_(object_shape),
        probe_shape_(probe_shape),
        seed_(seed),
        acc_(object_shape, probe_shape),
        object_est_(object_shape.height, object_shape.width) {
    config_.validate();
    if (config_.probe_mode == ProbeMode::known) {
      if (!known_probe) throw std::invalid_argument("LiveEngine: known probe mode needs a probe");
      require_same_shape(known_probe->shape(), probe_shape_, "LiveEngine probe");
      probe_est_ = std::move(*known_probe);
      probe_norm_target_ = norm2(probe_est_);
    }
    phase_ = (config_.bootstrap_frames > 0) ? EnginePhase::bootstrapping : EnginePhase::streaming;
    snap_.object = object_est_;
    snap_.probe = probe_est_.empty() ? ComplexGrid(probe_shape_.height, probe_shape_.width)
                                     : probe_est_;
  }

  /// Queues one diffraction frame; no solver work happens here. Safe to call
  /// from a producer thread while a consumer advances.
  void push_frame(const RealGrid& intensity, ScanPosition pos) {
    require_same_shape(intensity.shape(), probe_shape_, "push_frame");
    if (!all_finite(intensity) || !all_nonnegative(intensity))
      throw std::invalid_argument("push_frame: intensities must be finite and non-negative");
    require_window_in_bounds(object_shape_, pos, probe_shape_.height, probe_shape_.width);
    std::lock_guard<std::mutex> lock(pending_mu_);
    if (closed_) throw std::logic_error("push_frame: engine already finalized");
    pending_.push_back({sqrt_grid(intensity), pos});
  }

  /// Batch pre-reconstruction of the scan start: DM with beta=1 for
  /// bootstrap_iters over the first bootstrap_frames frames. The result seeds
  /// the object, the probe, the frozen sums and the fluid buffer.
  void bootstrap() {
    if (phase_ != EnginePhase::bootstrapping)
      throw std::logic_error("bootstrap: engine is not in the bootstrapping phase");
    const int nb = config_.bootstrap_frames;
    if (nb == 0) {
      phase_ = EnginePhase::streaming;
      return;
    }
    std::vector<RealGrid> amps;
    std::vector<ScanPosition> positions;
    {
      std::lock_guard<std::mutex> lock(pending_mu_);
      if (std::int64_t(pending_.size()) < nb)
        throw std::invalid_argument("bootstrap: fewer pending frames than bootstrap_frames");
      for (int i = 0; i < nb; ++i) {
        amps.push_back(std::move(pending_.front().amplitudes));
        positions.push_back(pending_.front().position);
        pending_.pop_front();
      }
    }
    if (config_.probe_mode == ProbeMode::retrieve) {
      probe_est_ = random_probe_guess(amps, probe_shape_, seed_);
      probe_norm_target_ = norm2(probe_est_);
    }

    ExitWaveSet waves;
    if (config_.bootstrap_iters > 0) {
      SolverConfig sc{1.0, config_.bootstrap_iters, config_.probe_mode, config_.clip};
      ClassicProblem problem{amps, positions, object_shape_, probe_shape_};
      ClassicResult result = run_classic(problem, sc, Algorithm::DM, probe_est_);
      object_est_ = std::move(result.object);
      probe_est_ = std::move(result.probe);
      waves = std::move(result.waves);
    } else {
      waves = zero_phase_waves(amps, positions);
      object_est_ = object_update(waves, probe_est_, object_shape_, config_.clip);
    }

    const int keep = std::min(config_.buffer_size, nb);
    for (int k = 0; k < nb - keep; ++k)
      accumulate_frozen(acc_, probe_est_, object_est_, waves.waves[k], waves.positions[k],
                        config_.clip);
    for (int k = nb - keep; k < nb; ++k) {
      fluid_.waves.push_back(std::move(waves.waves[k]));
      fluid_.positions.push_back(waves.positions[k]);
      fluid_amps_.push_back(std::move(amps[k]));
    }
    admitted_ = nb;
    bootstrap_ran_ = true;
    phase_ = EnginePhase::streaming;
    publish_snapshot();
  }

  /// One buffer shift: admit pending frames up to B, run the schedule on the
  /// buffer, freeze the oldest wave, refresh the object estimate. Returns
  /// NotReady (nullopt) when there is not enough data to work on yet.
  std::optional<FreezeEvent> advance() {
    if (phase_ == EnginePhase::done) throw std::logic_error("advance: engine is done");
    if (phase_ == EnginePhase::bootstrapping) {
      if (pending_size() < config_.bootstrap_frames) return std::nullopt;
      bootstrap();
    }

    admit_frames();
    if (phase_ == EnginePhase::streaming &&
        std::int64_t(fluid_.size()) < config_.buffer_size)
      return std::nullopt;
    if (fluid_.waves.empty()) {
      if (phase_ == EnginePhase::draining && pending_size() == 0) phase_ = EnginePhase::done;
      return std::nullopt;
    }
    ensure_probe_initialized();

    for (const auto& seg : config_.schedule.segments) {
      for (int it = 0; it < seg.count; ++it) {
        fluid_ = (seg.algorithm == LiveAlgorithm::LDM)
                     ? ldm_step(fluid_, fluid_amps_, acc_, probe_est_, config_.beta, config_.clip)
                     : ler_step(fluid_, fluid_amps_, acc_, probe_est_, config_.clip);
        if (config_.probe_mode == ProbeMode::retrieve) {
          object_est_ = partial_object_update(fluid_, acc_, probe_est_, config_.clip);
          probe_est_ =
              partial_probe_update(fluid_, acc_, object_est_, config_.clip, probe_norm_target_);
        }
      }
    }

    accumulate_frozen(acc_, probe_est_, object_est_, fluid_.waves.front(),
                      fluid_.positions.front(), config_.clip);
    fluid_.waves.erase(fluid_.waves.begin());
    fluid_.positions.erase(fluid_.positions.begin());
    fluid_amps_.erase(fluid_amps_.begin());
    object_est_ = partial_object_update(fluid_, acc_, probe_est_, config_.clip);
    publish_snapshot();
    return FreezeEvent{acc_.frozen_count - 1};
  }

  /// Marks the scan complete: no more pushes, and advance() keeps shifting
  /// with a shrinking buffer until every wave is frozen.
  void close_intake() {
    if (phase_ == EnginePhase::done) return;
    if (phase_ == EnginePhase::bootstrapping) {
      if (pending_size() >= config_.bootstrap_frames)
        bootstrap();
      else
        phase_ = EnginePhase::streaming;  // short scan: fall back to a naive start
    }
    {
      std::lock_guard<std::mutex> lock(pending_mu_);
      closed_ = true;
    }
    phase_ = EnginePhase::draining;
  }

  /// close_intake plus a full drain.
  void finalize_scan() {
    if (phase_ == EnginePhase::done) return;
    close_intake();
    while (phase_ != EnginePhase::done) advance();
    publish_snapshot();
  }

  /// Internally consistent copies of the current estimates. Callable from any
  /// thread.
  EngineSnapshot snapshot() const {
    std::lock_guard<std::mutex> lock(snap_mu_);
    return snap_;
  }

  EnginePhase phase() const { return phase_; }
  std::int64_t frontier() const { return acc_.frozen_count; }
  std::int64_t fluid_size() const { return std::int64_t(fluid_.size()); }
  std::int64_t pending_size() const {
    std::lock_guard<std::mutex> lock(pending_mu_);
    return std::int64_t(pending_.size());
  }
  std::int64_t admitted_count() const { return admitted_; }
  double probe_norm_target() const { return probe_norm_target_; }
  const ComplexGrid& probe_estimate() const { return probe_est_; }
  const ComplexGrid& object_estimate() const { return object_est_; }
  const FrozenAccumulators& accumulators() const { return acc_; }

  /// Bytes held by the sliding reconstruction state: fluid waves and
  /// amplitudes, probe estimate, and the probe-shaped accumulator grids.
  /// Object-canvas grids and the ingest queue are excluded.
  std::size_t reconstruction_state_bytes() const {
    std::size_t bytes = 0;
    for (const auto& w : fluid_.waves) bytes += sizeof(cdouble) * std::size_t(w.size());
    for (const auto& a : fluid_amps_) bytes += sizeof(double) * std::size_t(a.size());
    bytes += fluid_.positions.size() * sizeof(ScanPosition);
    bytes += sizeof(cdouble) * std::size_t(probe_est_.size());
    bytes += sizeof(cdouble) * std::size_t(acc_.probe_num.size());
    bytes += sizeof(double) * std::size_t(acc_.probe_den.size());
    return bytes;
  }

 private:
  struct PendingFrame {
    RealGrid amplitudes;
    ScanPosition position;
  };

  void admit_frames() {
    while (std::int64_t(fluid_.size()) < config_.buffer_size) {
      PendingFrame frame;
      {
        std::lock_guard<std::mutex> lock(pending_mu_);
        if (pending_.empty()) return;
        frame = std::move(pending_.front());
        pending_.pop_front();
      }
      const bool informed = config_.init_mode == InitMode::informed &&
                            (bootstrap_ran_ || admitted_ >= config_.buffer_size);
      ComplexGrid wave =
          informed ? informed_phase_init(frame.amplitudes, object_est_, probe_est_.empty()
                                             ? ComplexGrid(probe_shape_.height, probe_shape_.width)
                                             : probe_est_,
                                         frame.position)
                   : naive_phase_init(frame.amplitudes);
      fluid_.waves.push_back(std::move(wave));
      fluid_.positions.push_back(frame.position);
      fluid_amps_.push_back(std::move(frame.amplitudes));
      ++admitted_;
    }
  }

  void ensure_probe_initialized() {
    if (!probe_est_.empty()) return;
    // retrieve mode without bootstrap: guess from the first buffer
    probe_est_ = random_probe_guess(fluid_amps_, probe_shape_, seed_);
    probe_norm_target_ = norm2(probe_est_);
  }

  void publish_snapshot() {
    std::lock_guard<std::mutex> lock(snap_mu_);
    snap_.object = object_est_;
    snap_.probe = probe_est_;
    snap_.frontier = acc_.frozen_count;
  }

  EngineConfig config_;
  GridShape object_shape_;
  GridShape probe_shape_;
  std::uint64_t seed_ = 0;

  mutable std::mutex pending_mu_;
  std::deque<PendingFrame> pending_;
  bool closed_ = false;

  ExitWaveSet fluid_;
  std::vector<RealGrid> fluid_amps_;
  FrozenAccumulators acc_;
  ComplexGrid object_est_;
  ComplexGrid probe_est_;
  double probe_norm_target_ = 0.0;
  std::int64_t admitted_ = 0;
  bool bootstrap_ran_ = false;
  EnginePhase phase_ = EnginePhase::streaming;

  mutable std::mutex snap_mu_;
  EngineSnapshot snap_;
};

}  // namespace ptycho
