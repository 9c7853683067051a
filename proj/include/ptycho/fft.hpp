/* FFT.HPP  Unitary 2-D FFTs on ComplexGrid, backed by FFTW3 with a small
 *          per-shape plan cache. Both directions scale by 1/sqrt(N) so that
 *          energy is preserved and probe norms can be compared with detector
 *          amplitude norms via Parseval.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "ptycho/grid.hpp"

namespace ptycho {

namespace detail {

// Plans are created once per shape with FFTW_ESTIMATE (deterministic plan
// choice) and FFTW_UNALIGNED (safe to execute on vector storage). Executing a
// cached plan on fresh non-overlapping arrays is thread-safe; only creation
// is serialized.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  std::pair<fftw_plan, fftw_plan> plans_for(int height, int width) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(height, width);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    ComplexGrid in(height, width), out(height, width);
    auto* src = reinterpret_cast<fftw_complex*>(in.data().data());
    auto* dst = reinterpret_cast<fftw_complex*>(out.data().data());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_2d(height, width, src, dst, FFTW_FORWARD, flags);
    fftw_plan bwd = fftw_plan_dft_2d(height, width, src, dst, FFTW_BACKWARD, flags);
    if (!fwd || !bwd) throw std::runtime_error("fftw plan creation failed");
    auto entry = std::make_pair(fwd, bwd);
    plans_.emplace(key, entry);
    return entry;
  }

 private:
  FftPlanCache() = default;
  std::mutex mu_;
  std::map<std::pair<int, int>, std::pair<fftw_plan, fftw_plan>> plans_;
};

inline ComplexGrid transform(const ComplexGrid& g, bool forward) {
  if (g.empty()) throw std::invalid_argument("fft2: empty grid");
  if (!all_finite(g)) throw std::invalid_argument("fft2: non-finite input");
  auto [fwd, bwd] = FftPlanCache::instance().plans_for(g.height(), g.width());
  ComplexGrid out(g.height(), g.width());
  // const_cast is safe: FFTW does not write to the input of an out-of-place plan.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(g.data().data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data().data());
  fftw_execute_dft(forward ? fwd : bwd, src, dst);
  const double inv_sqrt_n = 1.0 / std::sqrt(double(g.size()));
  for (auto& v : out.data()) v *= inv_sqrt_n;
  return out;
}

}  // namespace detail

inline ComplexGrid fft2(const ComplexGrid& g) { return detail::transform(g, true); }
inline ComplexGrid ifft2(const ComplexGrid& g) { return detail::transform(g, false); }

/// Circular shift by (height/2, width/2); for even sizes this is its own
/// inverse and maps the DC bin to the array center.
inline ComplexGrid fftshift(const ComplexGrid& g) {
  ComplexGrid out(g.height(), g.width());
  const int sy = g.height() / 2, sx = g.width() / 2;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      out.at((y + sy) % g.height(), (x + sx) % g.width()) = g.at(y, x);
  return out;
}

inline ComplexGrid ifftshift(const ComplexGrid& g) {
  ComplexGrid out(g.height(), g.width());
  const int sy = (g.height() + 1) / 2, sx = (g.width() + 1) / 2;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      out.at((y + sy) % g.height(), (x + sx) % g.width()) = g.at(y, x);
  return out;
}

}  // namespace ptycho
