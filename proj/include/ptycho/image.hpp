/* IMAGE.HPP  Image-file edges of the pipeline: decoding RGB source images
 *            for object synthesis and rendering complex estimates to PNG
 *            (brightness encodes amplitude, color encodes phase). File
 *            decode/encode is delegated to OpenCV; color math stays here.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <numbers>
#include <optional>

#include "ptycho/io.hpp"
#include "ptycho/synth.hpp"

namespace ptycho {

/// Loads an RGB image, resizes the short side to target_size and center-crops
/// a target_size square. Values in [0,1].
inline RgbImage load_image_rgb(const fs::path& path, int target_size) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image: " + path.string());
  const double scale = double(target_size) / std::min(bgr.rows, bgr.cols);
  cv::Mat resized;
  cv::resize(bgr, resized, cv::Size(), scale, scale,
             scale < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR);
  if (resized.rows < target_size || resized.cols < target_size)
    cv::resize(bgr, resized, cv::Size(std::max(target_size, resized.cols),
                                      std::max(target_size, resized.rows)),
               0, 0, cv::INTER_LINEAR);
  const int y0 = (resized.rows - target_size) / 2;
  const int x0 = (resized.cols - target_size) / 2;
  cv::Mat crop = resized(cv::Rect(x0, y0, target_size, target_size));

  RgbImage img;
  img.height = target_size;
  img.width = target_size;
  img.rgb.resize(std::size_t(target_size) * target_size * 3);
  for (int y = 0; y < target_size; ++y)
    for (int x = 0; x < target_size; ++x) {
      const auto& px = crop.at<cv::Vec3b>(y, x);  // BGR
      const std::size_t base = (std::size_t(y) * target_size + x) * 3;
      img.rgb[base + 0] = float(px[2]) / 255.0f;
      img.rgb[base + 1] = float(px[1]) / 255.0f;
      img.rgb[base + 2] = float(px[0]) / 255.0f;
    }
  return img;
}

namespace detail {

/// HSV (s=1) to RGB in [0,1].
inline std::array<double, 3> hsv_to_rgb(double hue, double value) {
  const double h6 = hue * 6.0;
  const int i = int(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double q = value * (1.0 - f);
  const double t = value * f;
  switch (i) {
    case 0: return {value, t, 0.0};
    case 1: return {q, value, 0.0};
    case 2: return {0.0, value, t};
    case 3: return {0.0, q, value};
    case 4: return {t, 0.0, value};
    default: return {value, 0.0, q};
  }
}

}  // namespace detail

/// Renders a complex field to an 8-bit RGB PNG: hue = (phase+pi)/2pi,
/// saturation 1, value = amplitude / max amplitude. max_amplitude pins the
/// brightness scale across snapshots; by default each snapshot normalizes to
/// its own maximum.
inline void emit_snapshot(const ComplexGrid& estimate, const fs::path& path,
                          std::optional<double> max_amplitude = std::nullopt) {
  double peak = 0.0;
  if (max_amplitude.has_value()) {
    peak = *max_amplitude;
    if (peak <= 0.0) throw ConfigError("emit_snapshot: max amplitude must be positive");
  } else {
    for (const auto& v : estimate.data()) peak = std::max(peak, std::abs(v));
  }
  cv::Mat bgr(estimate.height(), estimate.width(), CV_8UC3);
  for (int y = 0; y < estimate.height(); ++y)
    for (int x = 0; x < estimate.width(); ++x) {
      const cdouble v = estimate.at(y, x);
      const double amp = std::abs(v);
      double r = 0.0, g = 0.0, b = 0.0;
      if (peak > 0.0 && amp > 0.0) {
        double hue = (std::arg(v) + std::numbers::pi) / (2.0 * std::numbers::pi);
        if (hue >= 1.0) hue -= 1.0;
        const double value = std::min(1.0, amp / peak);
        auto rgb = detail::hsv_to_rgb(hue, value);
        r = rgb[0];
        g = rgb[1];
        b = rgb[2];
      }
      bgr.at<cv::Vec3b>(y, x) =
          cv::Vec3b(uchar(std::llround(255.0 * b)), uchar(std::llround(255.0 * g)),
                    uchar(std::llround(255.0 * r)));
    }
  if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write PNG: " + path.string());
}

}  // namespace ptycho
