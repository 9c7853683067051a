/* PROJECTIONS.HPP  Constraint projections and closed-form updates for
 *                  ptychographic phase retrieval: the amplitude (modulus)
 *                  projection, segmentation and its pseudoinverse (object
 *                  update), the consistency projection, the probe update,
 *                  and the partial variants over frozen/fluid splits that
 *                  make streaming reconstruction possible.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ptycho/counters.hpp"
#include "ptycho/fft.hpp"
#include "ptycho/grid.hpp"

namespace ptycho {

/// Ordered exit waves with their scan positions. All waves share the probe
/// shape.
struct ExitWaveSet {
  std::vector<ComplexGrid> waves;
  std::vector<ScanPosition> positions;

  std::size_t size() const { return waves.size(); }

  void validate() const {
    if (waves.empty() || waves.size() != positions.size())
      throw std::invalid_argument("ExitWaveSet: waves/positions length mismatch or empty");
    for (const auto& w : waves)
      require_same_shape(w.shape(), waves.front().shape(), "ExitWaveSet");
  }
};

/// Denominator floor and the amplitude-percentile used to clip probe-update
/// summands.
struct ClipConfig {
  double eps_denominator = 1e-12;
  double amp_percentile = 0.95;

  void validate() const {
    if (eps_denominator <= 0.0)
      throw std::invalid_argument("ClipConfig: eps_denominator must be positive");
    if (amp_percentile <= 0.0 || amp_percentile > 1.0)
      throw std::invalid_argument("ClipConfig: amp_percentile must be in (0,1]");
  }
};

/// Running partial sums over frozen exit waves: numerator/denominator of the
/// object update (object-shaped) and of the probe update (probe-shaped).
/// Terms are evaluated with the estimates current at freeze time and never
/// recomputed.
struct FrozenAccumulators {
  ComplexGrid obj_num;
  RealGrid obj_den;
  ComplexGrid probe_num;
  RealGrid probe_den;
  std::int64_t frozen_count = 0;

  FrozenAccumulators() = default;
  FrozenAccumulators(GridShape object_shape, GridShape probe_shape)
      : obj_num(object_shape.height, object_shape.width),
        obj_den(object_shape.height, object_shape.width),
        probe_num(probe_shape.height, probe_shape.width),
        probe_den(probe_shape.height, probe_shape.width) {}
};

/// Nearest-rank percentile of the amplitude image of g. fraction in (0,1].
inline double amplitude_percentile(const ComplexGrid& g, double fraction) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("amplitude_percentile: fraction must be in (0,1]");
  std::vector<double> amps(g.size());
  for (std::int64_t i = 0; i < g.size(); ++i) amps[std::size_t(i)] = std::abs(g[i]);
  std::sort(amps.begin(), amps.end());
  auto rank = std::size_t(std::ceil(fraction * double(amps.size())));
  rank = std::clamp<std::size_t>(rank, 1, amps.size());
  return amps[rank - 1];
}

/// Clips amplitudes above the grid's own nearest-rank percentile, preserving
/// phases. Guarantees |out| <= threshold as evaluated by std::abs.
inline ComplexGrid clip_to_amplitude_percentile(const ComplexGrid& g, double fraction) {
  const double threshold = amplitude_percentile(g, fraction);
  ComplexGrid out = g;
  if (threshold <= 0.0) return out;
  for (auto& v : out.data()) {
    double a = std::abs(v);
    if (a > threshold) {
      v *= threshold / a;
      // guard against a last-ulp overshoot of the rescale
      for (int guard = 0; guard < 4 && std::abs(v) > threshold; ++guard)
        v *= threshold / std::abs(v);
    }
  }
  return out;
}

/// Replaces the Fourier amplitudes of wave with the measured ones, keeping
/// phases; zero spectrum samples take phase 0.
inline ComplexGrid project_amplitudes(const ComplexGrid& wave, const RealGrid& amps) {
  require_same_shape(wave.shape(), amps.shape(), "project_amplitudes");
  if (!all_nonnegative(amps))
    throw std::invalid_argument("project_amplitudes: negative amplitude");
  ComplexGrid spectrum = fft2(wave);
  for (std::int64_t i = 0; i < spectrum.size(); ++i) {
    const cdouble s = spectrum[i];
    const double mag = std::abs(s);
    spectrum[i] = (mag == 0.0) ? cdouble(amps[i], 0.0) : s * (amps[i] / mag);
  }
  op_counters().amplitude_projections.fetch_add(1, std::memory_order_relaxed);
  return ifft2(spectrum);
}

/// Cuts the object into probe-sized windows at the given positions and
/// multiplies each with the probe.
inline ExitWaveSet segment(const ComplexGrid& obj, const ComplexGrid& probe,
                           const std::vector<ScanPosition>& positions) {
  ExitWaveSet out;
  out.waves.reserve(positions.size());
  out.positions = positions;
  for (const auto& pos : positions) {
    ComplexGrid wave = extract_window(obj, pos, probe.height(), probe.width());
    for (std::int64_t i = 0; i < wave.size(); ++i) wave[i] *= probe[i];
    out.waves.push_back(std::move(wave));
  }
  return out;
}

namespace detail {

inline void add_object_terms(ComplexGrid& num, RealGrid& den, const ComplexGrid& probe,
                             const ComplexGrid& wave, ScanPosition pos) {
  require_window_in_bounds(num.shape(), pos, probe.height(), probe.width());
  require_same_shape(wave.shape(), probe.shape(), "object update");
  for (int y = 0; y < probe.height(); ++y)
    for (int x = 0; x < probe.width(); ++x) {
      const cdouble p = probe.at(y, x);
      num.at(pos.y + y, pos.x + x) += std::conj(p) * wave.at(y, x);
      den.at(pos.y + y, pos.x + x) += std::norm(p);
    }
}

inline ComplexGrid divide_with_floor(const ComplexGrid& num, const RealGrid& den,
                                     double eps) {
  ComplexGrid out(num.height(), num.width());
  for (std::int64_t i = 0; i < num.size(); ++i) out[i] = num[i] / std::max(den[i], eps);
  return out;
}

}  // namespace detail

/// Least-squares object estimate from exit waves: overlap-add of
/// conj(probe)*wave divided by the summed probe intensity (floored at
/// eps_denominator). Pixels never covered by a window come out as 0.
inline ComplexGrid object_update(const ExitWaveSet& ews, const ComplexGrid& probe,
                                 GridShape object_shape, const ClipConfig& clip = {}) {
  ews.validate();
  clip.validate();
  ComplexGrid num(object_shape.height, object_shape.width);
  RealGrid den(object_shape.height, object_shape.width);
  for (std::size_t k = 0; k < ews.size(); ++k)
    detail::add_object_terms(num, den, probe, ews.waves[k], ews.positions[k]);
  op_counters().object_updates.fetch_add(1, std::memory_order_relaxed);
  return detail::divide_with_floor(num, den, clip.eps_denominator);
}

namespace detail {

/// Canvas spanning all windows of the set; the consistency projection is
/// invariant to the surrounding canvas, so the bounding box suffices.
inline std::pair<GridShape, std::vector<ScanPosition>> bounding_canvas(
    const ExitWaveSet& ews) {
  int min_y = ews.positions.front().y, min_x = ews.positions.front().x;
  int max_y = min_y, max_x = min_x;
  for (const auto& p : ews.positions) {
    min_y = std::min(min_y, p.y);
    min_x = std::min(min_x, p.x);
    max_y = std::max(max_y, p.y);
    max_x = std::max(max_x, p.x);
  }
  const int h = ews.waves.front().height(), w = ews.waves.front().width();
  GridShape canvas{max_y - min_y + h, max_x - min_x + w};
  std::vector<ScanPosition> shifted;
  shifted.reserve(ews.positions.size());
  for (const auto& p : ews.positions) shifted.push_back({p.y - min_y, p.x - min_x});
  return {canvas, shifted};
}

}  // namespace detail

/// Consistency projection: object update followed by re-segmentation. Maps an
/// exit-wave set onto the nearest set explainable by a single object.
inline ExitWaveSet project_consistency(const ExitWaveSet& ews, const ComplexGrid& probe,
                                       const ClipConfig& clip = {}) {
  ews.validate();
  auto [canvas, shifted] = detail::bounding_canvas(ews);
  ExitWaveSet local{ews.waves, shifted};
  ComplexGrid obj = object_update(local, probe, canvas, clip);
  ExitWaveSet out = segment(obj, probe, shifted);
  out.positions = ews.positions;
  op_counters().consistency_projections.fetch_add(1, std::memory_order_relaxed);
  return out;
}

/// Object update over frozen partial sums plus the fluid buffer. The
/// accumulators are read-only; only the fluid terms are recomputed.
inline ComplexGrid partial_object_update(const ExitWaveSet& fluid,
                                         const FrozenAccumulators& acc,
                                         const ComplexGrid& probe,
                                         const ClipConfig& clip = {}) {
  clip.validate();
  if (acc.obj_num.empty()) throw std::invalid_argument("partial_object_update: empty accumulators");
  require_same_shape(acc.obj_num.shape(), acc.obj_den.shape(), "partial_object_update");
  ComplexGrid num = acc.obj_num;
  RealGrid den = acc.obj_den;
  if (!fluid.waves.empty()) {
    fluid.validate();
    for (std::size_t k = 0; k < fluid.size(); ++k)
      detail::add_object_terms(num, den, probe, fluid.waves[k], fluid.positions[k]);
  }
  op_counters().object_updates.fetch_add(1, std::memory_order_relaxed);
  return detail::divide_with_floor(num, den, clip.eps_denominator);
}

/// Partial consistency projection: partial object update, then segmentation
/// restricted to the fluid positions. Frozen waves are never touched.
inline ExitWaveSet project_consistency_partial(const ExitWaveSet& fluid,
                                               const FrozenAccumulators& acc,
                                               const ComplexGrid& probe,
                                               const ClipConfig& clip = {}) {
  ComplexGrid obj = partial_object_update(fluid, acc, probe, clip);
  ExitWaveSet out = segment(obj, probe, fluid.positions);
  op_counters().consistency_projections.fetch_add(1, std::memory_order_relaxed);
  return out;
}

/// Least-squares probe estimate: the object update with the roles of object
/// and probe exchanged. Probe-shaped.
inline ComplexGrid probe_update(const ExitWaveSet& ews, const ComplexGrid& obj,
                                const ClipConfig& clip = {}) {
  ews.validate();
  clip.validate();
  const GridShape pshape = ews.waves.front().shape();
  ComplexGrid num(pshape.height, pshape.width);
  RealGrid den(pshape.height, pshape.width);
  for (std::size_t k = 0; k < ews.size(); ++k) {
    ComplexGrid win = extract_window(obj, ews.positions[k], pshape.height, pshape.width);
    const ComplexGrid& wave = ews.waves[k];
    for (std::int64_t i = 0; i < num.size(); ++i) {
      num[i] += std::conj(win[i]) * wave[i];
      den[i] += std::norm(win[i]);
    }
  }
  op_counters().probe_updates.fetch_add(1, std::memory_order_relaxed);
  return detail::divide_with_floor(num, den, clip.eps_denominator);
}

/// Probe update over frozen partial sums plus the fluid buffer, with the two
/// stabilizations used during live retrieval: every fluid numerator summand
/// conj(obj_window)*wave is clipped at its own 95th-percentile amplitude
/// before summation, and the result is rescaled to norm_target.
inline ComplexGrid partial_probe_update(const ExitWaveSet& fluid,
                                        const FrozenAccumulators& acc,
                                        const ComplexGrid& obj, const ClipConfig& clip,
                                        double norm_target) {
  clip.validate();
  if (norm_target <= 0.0)
    throw std::invalid_argument("partial_probe_update: norm_target must be positive");
  if (acc.probe_num.empty()) throw std::invalid_argument("partial_probe_update: empty accumulators");
  ComplexGrid num = acc.probe_num;
  RealGrid den = acc.probe_den;
  const GridShape pshape = num.shape();
  if (!fluid.waves.empty()) {
    fluid.validate();
    require_same_shape(fluid.waves.front().shape(), pshape, "partial_probe_update");
    for (std::size_t k = 0; k < fluid.size(); ++k) {
      ComplexGrid win = extract_window(obj, fluid.positions[k], pshape.height, pshape.width);
      ComplexGrid summand(pshape.height, pshape.width);
      for (std::int64_t i = 0; i < summand.size(); ++i) {
        summand[i] = std::conj(win[i]) * fluid.waves[k][i];
        den[i] += std::norm(win[i]);
      }
      summand = clip_to_amplitude_percentile(summand, clip.amp_percentile);
      for (std::int64_t i = 0; i < summand.size(); ++i) num[i] += summand[i];
    }
  }
  ComplexGrid probe = detail::divide_with_floor(num, den, clip.eps_denominator);
  const double n = norm2(probe);
  if (n == 0.0)
    throw std::domain_error("partial_probe_update: zero probe estimate, cannot rescale");
  scale(probe, norm_target / n);
  op_counters().probe_updates.fetch_add(1, std::memory_order_relaxed);
  return probe;
}

/// Folds one exit wave into the frozen partial sums using the estimates
/// current at freeze time. The probe-update summand gets the same percentile
/// clip as fluid summands so partial and full probe updates stay equivalent.
inline void accumulate_frozen(FrozenAccumulators& acc, const ComplexGrid& probe,
                              const ComplexGrid& obj, const ComplexGrid& wave,
                              ScanPosition pos, const ClipConfig& clip = {}) {
  require_same_shape(wave.shape(), probe.shape(), "accumulate_frozen");
  detail::add_object_terms(acc.obj_num, acc.obj_den, probe, wave, pos);
  ComplexGrid win = extract_window(obj, pos, probe.height(), probe.width());
  ComplexGrid summand(probe.height(), probe.width());
  for (std::int64_t i = 0; i < summand.size(); ++i) {
    summand[i] = std::conj(win[i]) * wave[i];
    acc.probe_den[i] += std::norm(win[i]);
  }
  summand = clip_to_amplitude_percentile(summand, clip.amp_percentile);
  for (std::int64_t i = 0; i < summand.size(); ++i) acc.probe_num[i] += summand[i];
  acc.frozen_count += 1;
}

}  // namespace ptycho
