/* ANALYSIS.HPP  Quantitative evaluation of reconstructions: ambiguity-aware
 *               normalized error (E0), amplitude PSNR, phase-ramp removal,
 *               and the scan overlap ratio. Ptychographic solutions are only
 *               defined up to a global complex scale and a linear phase
 *               ramp; every metric here aligns those out first.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "ptycho/fft.hpp"
#include "ptycho/grid.hpp"

namespace ptycho {

/// Rectangular evaluation region inside a grid.
struct Region {
  int y0 = 0;
  int x0 = 0;
  int height = 0;
  int width = 0;

  static Region full(GridShape shape) { return {0, 0, shape.height, shape.width}; }
  /// Centered n-by-n window.
  static Region central(GridShape shape, int n) {
    if (n <= 0 || n > shape.height || n > shape.width)
      throw std::invalid_argument("Region::central: size out of range");
    return {(shape.height - n) / 2, (shape.width - n) / 2, n, n};
  }
  void check_inside(GridShape shape) const {
    if (height <= 0 || width <= 0 || y0 < 0 || x0 < 0 || y0 + height > shape.height ||
        x0 + width > shape.width)
      throw std::invalid_argument("Region: not inside grid");
  }
};

inline ComplexGrid crop(const ComplexGrid& g, Region region) {
  region.check_inside(g.shape());
  return extract_window(g, {region.y0, region.x0}, region.height, region.width);
}

namespace detail {

/// Integer peak of |g| with wraparound 3x3 centroid refinement; returns
/// fractional (fy, fx) in cycles-per-pixel units times the grid size (bins).
inline std::array<double, 2> spectral_peak(const ComplexGrid& spectrum) {
  const int h = spectrum.height(), w = spectrum.width();
  int py = 0, px = 0;
  double best = -1.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double mag = std::abs(spectrum.at(y, x));
      if (mag > best) {
        best = mag;
        py = y;
        px = x;
      }
    }
  double wsum = 0.0, ysum = 0.0, xsum = 0.0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const double mag = std::abs(spectrum.at((py + dy + h) % h, (px + dx + w) % w));
      wsum += mag;
      ysum += mag * dy;
      xsum += mag * dx;
    }
  double fy = py + (wsum > 0.0 ? ysum / wsum : 0.0);
  double fx = px + (wsum > 0.0 ? xsum / wsum : 0.0);
  // map to signed bins
  if (fy > h / 2.0) fy -= h;
  if (fx > w / 2.0) fx -= w;
  return {fy, fx};
}

inline void apply_ramp(ComplexGrid& g, double fy_bins, double fx_bins) {
  const double ky = 2.0 * std::numbers::pi * fy_bins / g.height();
  const double kx = 2.0 * std::numbers::pi * fx_bins / g.width();
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) g.at(y, x) *= std::polar(1.0, -(ky * y + kx * x));
}

}  // namespace detail

/// Removes the linear phase ramp of est (spectral-peak recentering, iterated
/// to a sub-bin fixed point) and zeroes the mean phase. Idempotent up to the
/// iteration tolerance.
inline ComplexGrid remove_phase_ramp(const ComplexGrid& est) {
  if (norm2_squared(est) == 0.0) throw std::invalid_argument("remove_phase_ramp: all-zero input");
  ComplexGrid out = est;
  for (int it = 0; it < 100; ++it) {
    auto [fy, fx] = detail::spectral_peak(fft2(out));
    detail::apply_ramp(out, fy, fx);
    if (std::abs(fy) < 1e-12 && std::abs(fx) < 1e-12) break;
  }
  cdouble mean(0.0, 0.0);
  for (const auto& v : out.data()) mean += v;
  if (std::abs(mean) > 0.0) {
    const cdouble rot = std::conj(mean) / std::abs(mean);
    for (auto& v : out.data()) v *= rot;
  }
  return out;
}

namespace detail {

/// Relative linear phase ramp between est and truth over a common region,
/// estimated from the spectrum of conj(est)*truth and iterated to a fixed
/// point. For est proportional to truth the product is real-nonnegative up
/// to a constant phase, its spectrum magnitude is symmetric, and the
/// estimate is exactly zero.
inline std::array<double, 2> relative_ramp(const ComplexGrid& truth, const ComplexGrid& est) {
  ComplexGrid cross(truth.height(), truth.width());
  double fy_total = 0.0, fx_total = 0.0;
  for (int it = 0; it < 100; ++it) {
    for (std::int64_t i = 0; i < cross.size(); ++i)
      cross[i] = std::conj(est[i] * std::polar(1.0, -2.0 * std::numbers::pi *
                                                        (fy_total * double(i / cross.width()) / cross.height() +
                                                         fx_total * double(i % cross.width()) / cross.width()))) *
                 truth[i];
    auto [fy, fx] = spectral_peak(fft2(cross));
    fy_total -= fy;
    fx_total -= fx;
    if (std::abs(fy) < 1e-12 && std::abs(fx) < 1e-12) break;
  }
  return {fy_total, fx_total};
}

struct Alignment {
  ComplexGrid est_aligned;  // region crop of est with ramp applied and gamma folded in
  ComplexGrid truth_region;
  cdouble gamma{0.0, 0.0};
};

/// Crops both grids to the region, removes the relative ramp from est, and
/// computes the optimal complex scale gamma = <truth, est>/|est|^2.
inline Alignment align_to_truth(const ComplexGrid& truth, const ComplexGrid& est,
                                Region region) {
  require_same_shape(truth.shape(), est.shape(), "align_to_truth");
  ComplexGrid t = crop(truth, region);
  ComplexGrid e = crop(est, region);
  auto [fy, fx] = relative_ramp(t, e);
  apply_ramp(e, fy, fx);
  cdouble num(0.0, 0.0);
  double den = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) {
    num += t[i] * std::conj(e[i]);
    den += std::norm(e[i]);
  }
  const cdouble gamma = (den > 0.0) ? num / den : cdouble(0.0, 0.0);
  for (auto& v : e.data()) v *= gamma;
  return {std::move(e), std::move(t), gamma};
}

}  // namespace detail

/// Normalized mean-squared error after optimal complex scaling and ramp
/// alignment: E0 = sum |O - gamma*O_est|^2 / sum |O|^2 over the region.
inline double e0_metric(const ComplexGrid& truth, const ComplexGrid& est, Region region) {
  auto a = detail::align_to_truth(truth, est, region);
  const double den = norm2_squared(a.truth_region);
  if (den == 0.0) throw std::invalid_argument("e0_metric: zero-energy truth region");
  double num = 0.0;
  for (std::int64_t i = 0; i < a.truth_region.size(); ++i)
    num += std::norm(a.truth_region[i] - a.est_aligned[i]);
  return num / den;
}

/// PSNR between two amplitude images with an explicit peak value; +infinity
/// when the images coincide.
inline double psnr_from_amplitudes(const RealGrid& truth_amp, const RealGrid& est_amp,
                                   double peak) {
  require_same_shape(truth_amp.shape(), est_amp.shape(), "psnr_from_amplitudes");
  if (peak <= 0.0) throw std::invalid_argument("psnr_from_amplitudes: peak must be positive");
  double mse = 0.0;
  for (std::int64_t i = 0; i < truth_amp.size(); ++i) {
    const double d = truth_amp[i] - est_amp[i];
    mse += d * d;
  }
  mse /= double(truth_amp.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Amplitude PSNR over the region after the same alignment as e0_metric;
/// dynamic range is the maximum ground-truth amplitude over the region.
inline double psnr_amplitude(const ComplexGrid& truth, const ComplexGrid& est, Region region) {
  auto a = detail::align_to_truth(truth, est, region);
  RealGrid ta = amplitudes(a.truth_region);
  RealGrid ea = amplitudes(a.est_aligned);
  double peak = 0.0;
  for (double v : ta.data()) peak = std::max(peak, v);
  if (peak <= 0.0) throw std::invalid_argument("psnr_amplitude: zero-energy truth region");
  return psnr_from_amplitudes(ta, ea, peak);
}

/// Mean overlap of scan-order-adjacent illuminated disks:
/// sigma = mean(max(0, 1 - d/diameter)).
inline double overlap_ratio(const std::vector<std::array<double, 2>>& centers,
                            double probe_diameter) {
  if (centers.size() < 2) throw std::invalid_argument("overlap_ratio: need at least 2 positions");
  if (probe_diameter <= 0.0)
    throw std::invalid_argument("overlap_ratio: probe_diameter must be positive");
  double total = 0.0;
  for (std::size_t k = 1; k < centers.size(); ++k) {
    const double dy = centers[k][0] - centers[k - 1][0];
    const double dx = centers[k][1] - centers[k - 1][1];
    const double d = std::sqrt(dy * dy + dx * dx);
    total += std::max(0.0, 1.0 - d / probe_diameter);
  }
  return total / double(centers.size() - 1);
}

/// Default probe diameter: twice the radius (about the intensity centroid)
/// enclosing 90% of the probe energy.
inline double probe_diameter_90(const ComplexGrid& probe, double energy_fraction = 0.9) {
  double total = 0.0, cy = 0.0, cx = 0.0;
  for (int y = 0; y < probe.height(); ++y)
    for (int x = 0; x < probe.width(); ++x) {
      const double e = std::norm(probe.at(y, x));
      total += e;
      cy += e * y;
      cx += e * x;
    }
  if (total <= 0.0) throw std::invalid_argument("probe_diameter_90: zero probe");
  cy /= total;
  cx /= total;
  std::vector<std::pair<double, double>> by_radius;  // (radius, energy)
  by_radius.reserve(std::size_t(probe.size()));
  for (int y = 0; y < probe.height(); ++y)
    for (int x = 0; x < probe.width(); ++x) {
      const double dy = y - cy, dx = x - cx;
      by_radius.emplace_back(std::sqrt(dy * dy + dx * dx), std::norm(probe.at(y, x)));
    }
  std::sort(by_radius.begin(), by_radius.end());
  double cumulative = 0.0;
  for (const auto& [radius, energy] : by_radius) {
    cumulative += energy;
    if (cumulative >= energy_fraction * total) return 2.0 * radius;
  }
  return 2.0 * by_radius.back().first;
}

/// Metric bundle persisted with each evaluation / reconstruction run.
struct ReconReport {
  std::optional<double> e0_full;
  std::optional<double> e0_central;
  std::optional<double> psnr_amp_full;
  std::optional<double> psnr_amp_central;
  std::optional<double> overlap_ratio;
  std::uint64_t projections_evaluated = 0;
  std::optional<double> wall_time_sec;  // volatile; kept out of persisted files
};

}  // namespace ptycho
