/* SOLVERS.HPP  Projection-based reconstruction steps: Error Reduction and
 *              Difference Map over full exit-wave sets, their live variants
 *              over a fluid buffer backed by frozen partial sums, and the
 *              classic batch runner used for baselines and bootstrapping.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptycho/projections.hpp"
#include "ptycho/rng.hpp"

namespace ptycho {

enum class Algorithm { ER, DM };
enum class LiveAlgorithm { LER, LDM };
enum class ProbeMode { known, retrieve };

/// Ordered (algorithm, count) segments executed once per buffer shift, e.g.
/// 8 LDM iterations followed by 2 LER iterations.
struct Schedule {
  struct Segment {
    LiveAlgorithm algorithm = LiveAlgorithm::LDM;
    int count = 0;
  };
  std::vector<Segment> segments;

  int total() const {
    int t = 0;
    for (const auto& s : segments) t += s.count;
    return t;
  }
  static Schedule uniform(LiveAlgorithm alg, int count) {
    return Schedule{{{alg, count}}};
  }
  void validate() const {
    if (segments.empty()) throw std::invalid_argument("Schedule: empty");
    for (const auto& s : segments)
      if (s.count <= 0) throw std::invalid_argument("Schedule: counts must be positive");
  }
};

/// Parses "ldm:8,ler:2" style schedule strings.
inline Schedule parse_schedule(const std::string& text) {
  Schedule schedule;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("schedule: expected alg:count, got '" + item + "'");
    const std::string name = item.substr(0, colon);
    LiveAlgorithm alg;
    if (name == "ldm")
      alg = LiveAlgorithm::LDM;
    else if (name == "ler")
      alg = LiveAlgorithm::LER;
    else
      throw std::invalid_argument("schedule: unknown algorithm '" + name + "'");
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(item.substr(colon + 1), &used);
      if (used != item.size() - colon - 1) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw std::invalid_argument("schedule: bad count in '" + item + "'");
    }
    schedule.segments.push_back({alg, count});
    if (end == text.size()) break;
    start = end + 1;
  }
  schedule.validate();
  return schedule;
}

struct SolverConfig {
  double beta = 1.0;
  int iterations = 100;
  ProbeMode probe_mode = ProbeMode::known;
  ClipConfig clip;

  void validate() const {
    if (beta == 0.0) throw std::invalid_argument("SolverConfig: beta must be nonzero");
    if (iterations <= 0) throw std::invalid_argument("SolverConfig: iterations must be positive");
    clip.validate();
  }
};

namespace detail {

inline void check_amps(const ExitWaveSet& ews, const std::vector<RealGrid>& amps) {
  if (amps.size() != ews.waves.size())
    throw std::invalid_argument("solver step: amplitude/wave count mismatch");
  for (std::size_t k = 0; k < amps.size(); ++k)
    require_same_shape(amps[k].shape(), ews.waves[k].shape(), "solver step");
}

inline ExitWaveSet project_amplitudes_all(const ExitWaveSet& ews,
                                          const std::vector<RealGrid>& amps) {
  ExitWaveSet out;
  out.positions = ews.positions;
  out.waves.reserve(ews.size());
  for (std::size_t k = 0; k < ews.size(); ++k)
    out.waves.push_back(project_amplitudes(ews.waves[k], amps[k]));
  return out;
}

// Ψ_out = a + s*(a - b), element-wise over all waves.
inline ExitWaveSet relax(const ExitWaveSet& a, const ExitWaveSet& b, double s) {
  ExitWaveSet out;
  out.positions = a.positions;
  out.waves.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ComplexGrid w = a.waves[k];
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] += s * (a.waves[k][i] - b.waves[k][i]);
    out.waves.push_back(std::move(w));
  }
  return out;
}

template <typename ConsistencyFn>
ExitWaveSet er_step_impl(const ExitWaveSet& ews, const std::vector<RealGrid>& amps,
                         ConsistencyFn&& pc) {
  check_amps(ews, amps);
  return project_amplitudes_all(pc(ews), amps);
}

// Ψ <- Ψ + β [ P_A(f_C(Ψ)) − P_C(f_A(Ψ)) ]
//   f_C(Ψ) = P_C(Ψ) + (P_C(Ψ) − Ψ)/β
//   f_A(Ψ) = P_A(Ψ) − (P_A(Ψ) − Ψ)/β
template <typename ConsistencyFn>
ExitWaveSet dm_step_impl(const ExitWaveSet& ews, const std::vector<RealGrid>& amps,
                         double beta, ConsistencyFn&& pc) {
  if (beta == 0.0) throw std::invalid_argument("dm_step: beta must be nonzero");
  check_amps(ews, amps);
  ExitWaveSet pc_psi = pc(ews);
  ExitWaveSet f_c = relax(pc_psi, ews, 1.0 / beta);
  ExitWaveSet pa_fc = project_amplitudes_all(f_c, amps);
  ExitWaveSet pa_psi = project_amplitudes_all(ews, amps);
  ExitWaveSet f_a = relax(pa_psi, ews, -1.0 / beta);
  ExitWaveSet pc_fa = pc(f_a);
  ExitWaveSet out;
  out.positions = ews.positions;
  out.waves.reserve(ews.size());
  for (std::size_t k = 0; k < ews.size(); ++k) {
    ComplexGrid w = ews.waves[k];
    for (std::int64_t i = 0; i < w.size(); ++i)
      w[i] += beta * (pa_fc.waves[k][i] - pc_fa.waves[k][i]);
    out.waves.push_back(std::move(w));
  }
  return out;
}

}  // namespace detail

/// One Error Reduction iteration: P_A(P_C(Ψ)).
inline ExitWaveSet er_step(const ExitWaveSet& ews, const std::vector<RealGrid>& amps,
                           const ComplexGrid& probe, const ClipConfig& clip = {}) {
  return detail::er_step_impl(
      ews, amps, [&](const ExitWaveSet& s) { return project_consistency(s, probe, clip); });
}

/// One Difference Map iteration with relaxation beta.
inline ExitWaveSet dm_step(const ExitWaveSet& ews, const std::vector<RealGrid>& amps,
                           const ComplexGrid& probe, double beta,
                           const ClipConfig& clip = {}) {
  return detail::dm_step_impl(ews, amps, beta, [&](const ExitWaveSet& s) {
    return project_consistency(s, probe, clip);
  });
}

/// Live ER: the consistency projection is replaced by its partial variant
/// against the frozen accumulators. Updates only the fluid buffer.
inline ExitWaveSet ler_step(const ExitWaveSet& fluid, const std::vector<RealGrid>& fluid_amps,
                            const FrozenAccumulators& acc, const ComplexGrid& probe,
                            const ClipConfig& clip = {}) {
  return detail::er_step_impl(fluid, fluid_amps, [&](const ExitWaveSet& s) {
    return project_consistency_partial(s, acc, probe, clip);
  });
}

/// Live DM, same substitution.
inline ExitWaveSet ldm_step(const ExitWaveSet& fluid, const std::vector<RealGrid>& fluid_amps,
                            const FrozenAccumulators& acc, const ComplexGrid& probe,
                            double beta, const ClipConfig& clip = {}) {
  return detail::dm_step_impl(fluid, fluid_amps, beta, [&](const ExitWaveSet& s) {
    return project_consistency_partial(s, acc, probe, clip);
  });
}

/// Residual used to monitor ER: amplitude mismatch of the consistency-
/// projected iterate (the post-amplitude iterate satisfies the measured
/// amplitudes exactly, so its mismatch is trivially zero).
inline double amplitude_mismatch(const ExitWaveSet& ews, const std::vector<RealGrid>& amps) {
  detail::check_amps(ews, amps);
  double total = 0.0;
  for (std::size_t k = 0; k < ews.size(); ++k) {
    ComplexGrid spectrum = fft2(ews.waves[k]);
    for (std::int64_t i = 0; i < spectrum.size(); ++i) {
      const double d = std::abs(spectrum[i]) - amps[k][i];
      total += d * d;
    }
  }
  return total;
}

/// Everything the batch runner needs from a dataset: detector amplitudes with
/// positions on a fixed object canvas.
struct ClassicProblem {
  std::vector<RealGrid> amplitudes;
  std::vector<ScanPosition> positions;
  GridShape object_shape;
  GridShape probe_shape;
};

struct ClassicResult {
  ComplexGrid object;
  ComplexGrid probe;
  ExitWaveSet waves;
  OpCountersSnapshot ops;
};

/// Zero-phase initialization: Ψ_k = ifft2(A_k).
inline ExitWaveSet zero_phase_waves(const std::vector<RealGrid>& amps,
                                    const std::vector<ScanPosition>& positions) {
  ExitWaveSet out;
  out.positions = positions;
  out.waves.reserve(amps.size());
  for (const auto& a : amps) {
    ComplexGrid spec(a.height(), a.width());
    for (std::int64_t i = 0; i < spec.size(); ++i) spec[i] = cdouble(a[i], 0.0);
    out.waves.push_back(ifft2(spec));
  }
  return out;
}

/// Random complex-Gaussian probe scaled so its l2 norm matches the brightest
/// diffraction pattern (largest amplitude norm) among the given frames.
inline ComplexGrid random_probe_guess(const std::vector<RealGrid>& amps, GridShape probe_shape,
                                      std::uint64_t seed) {
  if (amps.empty()) throw std::invalid_argument("random_probe_guess: no frames");
  double target = 0.0;
  for (const auto& a : amps) target = std::max(target, norm2(a));
  if (target <= 0.0) throw std::invalid_argument("random_probe_guess: all frames empty");
  Rng rng(seed);
  ComplexGrid probe(probe_shape.height, probe_shape.width);
  for (auto& v : probe.data()) v = rng.complex_gaussian();
  scale(probe, target / norm2(probe));
  return probe;
}

/// Runs a classic batch reconstruction: `iterations` ER or DM steps over all
/// waves; in retrieval mode the probe update (rescaled to the initial probe
/// norm) follows each step.
inline ClassicResult run_classic(const ClassicProblem& problem, const SolverConfig& config,
                                 Algorithm alg, const ComplexGrid& initial_probe) {
  config.validate();
  if (problem.amplitudes.empty() || problem.amplitudes.size() != problem.positions.size())
    throw std::invalid_argument("run_classic: invalid dataset");
  require_same_shape(initial_probe.shape(), problem.probe_shape, "run_classic probe");

  const OpCountersSnapshot before = snapshot_counters();
  ExitWaveSet waves = zero_phase_waves(problem.amplitudes, problem.positions);
  ComplexGrid probe = initial_probe;
  const double norm_target = norm2(probe);
  ComplexGrid object;

  for (int j = 0; j < config.iterations; ++j) {
    waves = (alg == Algorithm::ER)
                ? er_step(waves, problem.amplitudes, probe, config.clip)
                : dm_step(waves, problem.amplitudes, probe, config.beta, config.clip);
    if (config.probe_mode == ProbeMode::retrieve) {
      object = object_update(waves, probe, problem.object_shape, config.clip);
      probe = probe_update(waves, object, config.clip);
      const double n = norm2(probe);
      if (n == 0.0) throw std::domain_error("run_classic: zero probe estimate");
      scale(probe, norm_target / n);
    }
  }
  object = object_update(waves, probe, problem.object_shape, config.clip);
  return {std::move(object), std::move(probe), std::move(waves),
          snapshot_counters() - before};
}

}  // namespace ptycho
