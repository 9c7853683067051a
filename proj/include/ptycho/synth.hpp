/* SYNTH.HPP  Synthetic experiment generation: complex test objects from RGB
 *            images or procedural textures, Zernike-aberrated focused
 *            probes, Archimedes-spiral scan paths, and the noiseless
 *            far-field forward model.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <algorithm>
#include <array>
#include <numbers>

#include "ptycho/fft.hpp"
#include "ptycho/grid.hpp"
#include "ptycho/rng.hpp"
#include "ptycho/zernike.hpp"

namespace ptycho {

/// Interleaved RGB float image in [0,1].
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<float> rgb;  // 3 * height * width

  float channel(int y, int x, int c) const {
    return rgb[(std::size_t(y) * width + x) * 3 + c];
  }
};

enum class ObjectMode { hsv, phase_only, pair, procedural };

struct ObjectSpec {
  ObjectMode mode = ObjectMode::procedural;
  std::vector<RgbImage> source_images;  // 0-2 depending on mode
  double amp_offset = 0.0;              // a in [0,1]
  double phase_scale = 0.9;             // b in [0.3, 0.99]
  int size = 512;

  void validate() const {
    if (amp_offset < 0.0 || amp_offset > 1.0)
      throw std::invalid_argument("ObjectSpec: amp_offset must be in [0,1]");
    if (phase_scale < 0.3 || phase_scale > 0.99)
      throw std::invalid_argument("ObjectSpec: phase_scale must be in [0.3, 0.99]");
    if (size <= 0) throw std::invalid_argument("ObjectSpec: size must be positive");
    const std::size_t needed =
        mode == ObjectMode::pair ? 2 : (mode == ObjectMode::procedural ? 0 : 1);
    if (source_images.size() < needed)
      throw std::invalid_argument("ObjectSpec: missing source images for this mode");
  }
};

struct ProbeSpec {
  int size = 64;
  int max_degree = 4;
  double coeff_sigma = 0.2;
  double radius_fraction = 1.0 / 9.0;  // of the array size, in [1/11, 1/7]
  std::uint64_t seed = 0;
};

enum class SpiralSampling { arc_length, uniform_theta };

struct ScanSpec {
  int count = 1500;
  double pitch = 10.0;  // r = pitch * theta, in pixels
  SpiralSampling sampling = SpiralSampling::arc_length;
};

namespace detail {

inline double srgb_gray(float r, float g, float b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;  // ITU-R BT.601 luma
}

/// Hue in [0,1) and value in [0,1] of an RGB triple.
inline std::pair<double, double> hue_value(float r, float g, float b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double hue = 0.0;
  if (delta > 0.0) {
    if (mx == r)
      hue = std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
      hue = (b - r) / delta + 2.0;
    else
      hue = (r - g) / delta + 4.0;
    hue /= 6.0;
    if (hue < 0.0) hue += 1.0;
  }
  return {hue, mx};
}

inline void require_image_size(const RgbImage& img, int size) {
  if (img.height != size || img.width != size)
    throw std::invalid_argument("make_object: source image does not match object size");
  if (img.rgb.size() != std::size_t(size) * size * 3)
    throw std::invalid_argument("make_object: bad channel count in source image");
}

/// Smooth random field in [0,1]: complex Gaussian spectrum under a radial
/// low-pass envelope, inverse transformed and min-max normalized.
inline RealGrid band_limited_texture(int size, Rng& rng, double cutoff_fraction = 0.08) {
  ComplexGrid spectrum(size, size);
  const double cutoff = cutoff_fraction * size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double fy = std::min(y, size - y);
      const double fx = std::min(x, size - x);
      const double rho2 = (fy * fy + fx * fx) / (cutoff * cutoff);
      spectrum.at(y, x) = rng.complex_gaussian() * std::exp(-rho2);
    }
  }
  ComplexGrid field = ifft2(spectrum);
  RealGrid out(size, size);
  double lo = field[0].real(), hi = lo;
  for (std::int64_t i = 0; i < field.size(); ++i) {
    out[i] = field[i].real();
    lo = std::min(lo, out[i]);
    hi = std::max(hi, out[i]);
  }
  const double span = hi - lo;
  for (auto& v : out.data()) v = (span > 0.0) ? (v - lo) / span : 0.5;
  return out;
}

}  // namespace detail

/// Builds a complex test object. Amplitudes go through (base + a)/(1 + a), so
/// they land in (0,1]; phases are 2*pi*base scaled by b.
inline ComplexGrid make_object(const ObjectSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.size;
  RealGrid amp_base(n, n), phase_base(n, n);

  switch (spec.mode) {
    case ObjectMode::hsv: {
      const RgbImage& img = spec.source_images[0];
      detail::require_image_size(img, n);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          auto [hue, value] =
              detail::hue_value(img.channel(y, x, 0), img.channel(y, x, 1), img.channel(y, x, 2));
          phase_base.at(y, x) = hue;
          amp_base.at(y, x) = value;
        }
      break;
    }
    case ObjectMode::phase_only: {
      const RgbImage& img = spec.source_images[0];
      detail::require_image_size(img, n);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          phase_base.at(y, x) =
              detail::srgb_gray(img.channel(y, x, 0), img.channel(y, x, 1), img.channel(y, x, 2));
          amp_base.at(y, x) = 1.0;
        }
      break;
    }
    case ObjectMode::pair: {
      const RgbImage& phase_img = spec.source_images[0];
      const RgbImage& amp_img = spec.source_images[1];
      detail::require_image_size(phase_img, n);
      detail::require_image_size(amp_img, n);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          phase_base.at(y, x) = detail::srgb_gray(phase_img.channel(y, x, 0),
                                                  phase_img.channel(y, x, 1),
                                                  phase_img.channel(y, x, 2));
          amp_base.at(y, x) = detail::srgb_gray(amp_img.channel(y, x, 0),
                                                amp_img.channel(y, x, 1),
                                                amp_img.channel(y, x, 2));
        }
      break;
    }
    case ObjectMode::procedural: {
      amp_base = detail::band_limited_texture(n, rng);
      phase_base = detail::band_limited_texture(n, rng);
      break;
    }
  }

  ComplexGrid object(n, n);
  const double a = spec.amp_offset;
  for (std::int64_t i = 0; i < object.size(); ++i) {
    const double amp = (amp_base[i] + a) / (1.0 + a);
    const double phase = 2.0 * std::numbers::pi * spec.phase_scale * phase_base[i];
    object[i] = std::polar(amp, phase);
  }
  return object;
}

/// Unit-modulus circular aperture exp(i Z(rho, phi)) centered in a size^2
/// array; coeffs are Noll-ordered Zernike coefficients in radians.
inline ComplexGrid zernike_aperture(int size, double radius_px,
                                    const std::vector<double>& coeffs) {
  if (radius_px < 2.0) throw std::invalid_argument("zernike_aperture: radius below 2 px");
  const auto indices = noll_indices(std::max<int>(1, int(coeffs.size())));
  const double cy = size / 2.0, cx = size / 2.0;
  ComplexGrid aperture(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dy = y - cy, dx = x - cx;
      const double rho = std::sqrt(dy * dy + dx * dx) / radius_px;
      if (rho > 1.0) continue;
      const double phi = std::atan2(dy, dx);
      double phase = 0.0;
      for (std::size_t j = 0; j < coeffs.size(); ++j)
        if (coeffs[j] != 0.0) phase += coeffs[j] * zernike_eval(indices[j], rho, phi);
      aperture.at(y, x) = std::polar(1.0, phase);
    }
  }
  return aperture;
}

/// Centered unitary DFT of an aperture; the focal-plane illumination.
inline ComplexGrid probe_from_aperture(const ComplexGrid& aperture) {
  return fftshift(fft2(ifftshift(aperture)));
}

/// Aberrated focused beam: exp(i Z(rho, phi)) on a circular aperture with
/// Gaussian Zernike coefficients (piston fixed to 0, degree <= max_degree),
/// transformed by a centered unitary DFT.
inline ComplexGrid make_zernike_probe(const ProbeSpec& spec) {
  const auto indices = noll_indices(zernike_term_count(spec.max_degree));
  Rng rng(spec.seed);
  std::vector<double> coeffs(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const double c = spec.coeff_sigma * rng.gaussian();
    coeffs[j] = (indices[j].n == 0) ? 0.0 : c;  // piston fixed, draw consumed either way
  }
  return probe_from_aperture(zernike_aperture(spec.size, spec.radius_fraction * spec.size, coeffs));
}

/// Scan positions along an Archimedes spiral r = pitch*theta about the canvas
/// center, converted to integer top-left window corners. The spiral is sized
/// to the largest radius that keeps every window inside the object; a spiral
/// that cannot fit `count` positions raises instead of clipping.
struct SpiralPath {
  std::vector<ScanPosition> positions;          // top-left corners
  std::vector<std::array<double, 2>> centers;   // (y, x) rounded window centers
};

namespace detail {

/// Arc length of r = a*theta from 0 to theta (closed form).
inline double spiral_arc_length(double a, double theta) {
  const double root = std::sqrt(1.0 + theta * theta);
  return 0.5 * a * (theta * root + std::asinh(theta));
}

/// Inverts spiral_arc_length by Newton iteration (monotone, well conditioned).
inline double spiral_theta_for_arc(double a, double s, double theta_max) {
  double theta = std::min(theta_max, std::sqrt(2.0 * s / a));  // small-angle seed
  for (int it = 0; it < 60; ++it) {
    const double f = spiral_arc_length(a, theta) - s;
    const double df = a * std::sqrt(1.0 + theta * theta);
    const double step = f / df;
    theta -= step;
    theta = std::clamp(theta, 0.0, theta_max);
    if (std::abs(step) < 1e-13 * std::max(1.0, theta_max)) break;
  }
  return theta;
}

}  // namespace detail

inline SpiralPath make_spiral_positions(const ScanSpec& spec, GridShape object_shape,
                                        GridShape probe_shape) {
  if (spec.count < 1) throw std::invalid_argument("make_spiral_positions: count must be >= 1");
  if (spec.pitch <= 0.0) throw std::invalid_argument("make_spiral_positions: pitch must be positive");
  const double max_radius =
      0.5 * std::min(object_shape.height - probe_shape.height, object_shape.width - probe_shape.width);
  if (max_radius < 0.0)
    throw std::invalid_argument("make_spiral_positions: probe larger than object");

  const double theta_max = max_radius / spec.pitch;
  if (spec.count > 1 && theta_max <= 0.0)
    throw std::invalid_argument("make_spiral_positions: spiral does not fit the canvas");

  const double cy = object_shape.height / 2.0, cx = object_shape.width / 2.0;
  const double total_arc = detail::spiral_arc_length(spec.pitch, theta_max);

  SpiralPath path;
  path.positions.reserve(std::size_t(spec.count));
  path.centers.reserve(std::size_t(spec.count));
  for (int k = 0; k < spec.count; ++k) {
    double theta = 0.0;
    if (spec.count > 1) {
      const double frac = double(k) / double(spec.count - 1);
      theta = (spec.sampling == SpiralSampling::uniform_theta)
                  ? frac * theta_max
                  : detail::spiral_theta_for_arc(spec.pitch, frac * total_arc, theta_max);
    }
    const double r = spec.pitch * theta;
    const double wy = cy + r * std::sin(theta);
    const double wx = cx + r * std::cos(theta);
    const ScanPosition pos{int(std::llround(wy - probe_shape.height / 2.0)),
                           int(std::llround(wx - probe_shape.width / 2.0))};
    if (pos.y < 0 || pos.x < 0 || pos.y + probe_shape.height > object_shape.height ||
        pos.x + probe_shape.width > object_shape.width)
      throw std::invalid_argument("make_spiral_positions: position out of bounds");
    path.positions.push_back(pos);
    path.centers.push_back({pos.y + probe_shape.height / 2.0, pos.x + probe_shape.width / 2.0});
  }
  return path;
}

/// Noiseless far-field intensities I_k = |fft2(probe * object_window_k)|^2.
inline std::vector<RealGrid> forward_model(const ComplexGrid& obj, const ComplexGrid& probe,
                                           const std::vector<ScanPosition>& positions) {
  std::vector<RealGrid> intensities;
  intensities.reserve(positions.size());
  for (const auto& pos : positions) {
    ComplexGrid wave = extract_window(obj, pos, probe.height(), probe.width());
    for (std::int64_t i = 0; i < wave.size(); ++i) wave[i] *= probe[i];
    ComplexGrid spectrum = fft2(wave);
    RealGrid frame(probe.height(), probe.width());
    for (std::int64_t i = 0; i < frame.size(); ++i) frame[i] = std::norm(spectrum[i]);
    intensities.push_back(std::move(frame));
  }
  return intensities;
}

}  // namespace ptycho
