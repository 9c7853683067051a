/* ORACLES.HPP  Test-only reference implementations, kept independent of the
 *              library's computation paths: direct quadratic-time DFTs and
 *              naive per-pixel evaluations of the update formulas.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <numbers>

#include "ptycho/grid.hpp"
#include "ptycho/projections.hpp"
#include "ptycho/rng.hpp"

namespace oracles {

using ptycho::cdouble;
using ptycho::ComplexGrid;
using ptycho::ExitWaveSet;
using ptycho::RealGrid;
using ptycho::Rng;
using ptycho::ScanPosition;

/// Direct O(N^2) unitary DFT.
inline ComplexGrid direct_dft(const ComplexGrid& g, bool forward) {
  const int h = g.height(), w = g.width();
  ComplexGrid out(h, w);
  const double sign = forward ? -1.0 : 1.0;
  const double scale = 1.0 / std::sqrt(double(h) * w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      cdouble acc(0.0, 0.0);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double angle = 2.0 * std::numbers::pi *
                               (double(u) * y / h + double(v) * x / w);
          acc += g.at(y, x) * std::polar(1.0, sign * angle);
        }
      out.at(u, v) = acc * scale;
    }
  return out;
}

/// Direct evaluation of the amplitude projection through the direct DFT.
inline ComplexGrid direct_project_amplitudes(const ComplexGrid& wave, const RealGrid& amps) {
  ComplexGrid spectrum = direct_dft(wave, true);
  for (std::int64_t i = 0; i < spectrum.size(); ++i) {
    const double mag = std::abs(spectrum[i]);
    spectrum[i] = (mag == 0.0) ? cdouble(amps[i], 0.0) : spectrum[i] * (amps[i] / mag);
  }
  return direct_dft(spectrum, false);
}

/// Naive per-object-pixel evaluation of the object update.
inline ComplexGrid naive_object_update(const ExitWaveSet& ews, const ComplexGrid& probe,
                                       ptycho::GridShape object_shape, double eps) {
  ComplexGrid out(object_shape.height, object_shape.width);
  for (int y = 0; y < object_shape.height; ++y)
    for (int x = 0; x < object_shape.width; ++x) {
      cdouble num(0.0, 0.0);
      double den = 0.0;
      for (std::size_t k = 0; k < ews.size(); ++k) {
        const ScanPosition pos = ews.positions[k];
        const int ly = y - pos.y, lx = x - pos.x;
        if (ly < 0 || lx < 0 || ly >= probe.height() || lx >= probe.width()) continue;
        num += std::conj(probe.at(ly, lx)) * ews.waves[k].at(ly, lx);
        den += std::norm(probe.at(ly, lx));
      }
      out.at(y, x) = num / std::max(den, eps);
    }
  return out;
}

/// Naive per-probe-pixel evaluation of the probe update, optionally clipping
/// each numerator summand at its own nearest-rank amplitude percentile.
inline ComplexGrid naive_probe_update(const ExitWaveSet& ews, const ComplexGrid& obj,
                                      double eps, bool clip_summands, double percentile) {
  const int h = ews.waves.front().height(), w = ews.waves.front().width();
  ComplexGrid num(h, w);
  RealGrid den(h, w);
  for (std::size_t k = 0; k < ews.size(); ++k) {
    const ScanPosition pos = ews.positions[k];
    ComplexGrid summand(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const cdouble o = obj.at(pos.y + y, pos.x + x);
        summand.at(y, x) = std::conj(o) * ews.waves[k].at(y, x);
        den.at(y, x) += std::norm(o);
      }
    if (clip_summands)
      summand = ptycho::clip_to_amplitude_percentile(summand, percentile);
    for (std::int64_t i = 0; i < num.size(); ++i) num[i] += summand[i];
  }
  ComplexGrid out(h, w);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = num[i] / std::max(den[i], eps);
  return out;
}

inline ComplexGrid random_complex_grid(int h, int w, Rng& rng) {
  ComplexGrid g(h, w);
  for (auto& v : g.data()) v = rng.complex_gaussian();
  return g;
}

inline RealGrid random_amplitude_grid(int h, int w, Rng& rng) {
  RealGrid g(h, w);
  for (auto& v : g.data()) v = rng.uniform(0.0, 2.0);
  return g;
}

/// Random in-bounds window positions on an object canvas.
inline std::vector<ScanPosition> random_positions(int count, ptycho::GridShape object_shape,
                                                  ptycho::GridShape probe_shape, Rng& rng) {
  std::vector<ScanPosition> out;
  for (int k = 0; k < count; ++k)
    out.push_back({int(rng.uniform() * (object_shape.height - probe_shape.height + 1)),
                   int(rng.uniform() * (object_shape.width - probe_shape.width + 1))});
  return out;
}

/// Random exit-wave problem instance: object, probe, positions and waves.
struct RandomInstance {
  ComplexGrid object;
  ComplexGrid probe;
  ExitWaveSet waves;
  std::vector<RealGrid> amps;
};

inline RandomInstance random_instance(int object_size, int probe_size, int wave_count,
                                      Rng& rng, bool waves_from_object = false) {
  RandomInstance inst;
  inst.object = random_complex_grid(object_size, object_size, rng);
  inst.probe = random_complex_grid(probe_size, probe_size, rng);
  inst.waves.positions = random_positions(wave_count, inst.object.shape(), inst.probe.shape(), rng);
  if (waves_from_object) {
    inst.waves = ptycho::segment(inst.object, inst.probe, inst.waves.positions);
  } else {
    for (int k = 0; k < wave_count; ++k)
      inst.waves.waves.push_back(random_complex_grid(probe_size, probe_size, rng));
  }
  for (int k = 0; k < wave_count; ++k)
    inst.amps.push_back(random_amplitude_grid(probe_size, probe_size, rng));
  return inst;
}

}  // namespace oracles
