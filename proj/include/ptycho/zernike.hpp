/* ZERNIKE.HPP  Zernike polynomials on the unit disk with Noll single
 *              indexing; used to synthesize aberrated probe apertures.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ptycho {

struct ZernikeIndex {
  int n = 0;  // radial degree
  int m = 0;  // azimuthal frequency, signed (m<0 selects the sine term)
};

/// (n, m) pairs for Noll indices j = 1..count, in Noll order: within each
/// degree |m| ascends and the sign is chosen so that even j carry cos terms
/// (m >= 0) and odd j carry sin terms (m < 0).
inline std::vector<ZernikeIndex> noll_indices(int count) {
  if (count < 1) throw std::invalid_argument("noll_indices: count must be >= 1");
  std::vector<ZernikeIndex> out;
  out.reserve(std::size_t(count));
  for (int n = 0; int(out.size()) < count; ++n) {
    std::vector<int> row;
    for (int m = (n % 2 == 0) ? 0 : 1; m <= n; m += 2) row.push_back(m);
    for (int m : row) {
      if (m == 0) {
        out.push_back({n, 0});
        continue;
      }
      const int j_next = int(out.size()) + 1;  // Noll index this slot will take
      const int first = (j_next % 2 == 0) ? m : -m;
      out.push_back({n, first});
      out.push_back({n, -first});
    }
  }
  out.resize(std::size_t(count));
  return out;
}

/// Number of Zernike terms with radial degree <= max_degree.
inline int zernike_term_count(int max_degree) {
  return (max_degree + 1) * (max_degree + 2) / 2;
}

/// Radial polynomial R_n^|m|(rho) from the explicit factorial expansion.
inline double zernike_radial(int n, int m_abs, double rho) {
  if (m_abs > n || (n - m_abs) % 2 != 0)
    throw std::invalid_argument("zernike_radial: invalid (n, m)");
  double value = 0.0;
  const int half = (n - m_abs) / 2;
  for (int s = 0; s <= half; ++s) {
    double coeff = (s % 2 == 0) ? 1.0 : -1.0;
    coeff *= std::tgamma(double(n - s) + 1.0);
    coeff /= std::tgamma(double(s) + 1.0);
    coeff /= std::tgamma(double((n + m_abs) / 2 - s) + 1.0);
    coeff /= std::tgamma(double(half - s) + 1.0);
    value += coeff * std::pow(rho, double(n - 2 * s));
  }
  return value;
}

/// Unnormalized Zernike polynomial Z_n^m(rho, phi).
inline double zernike_eval(ZernikeIndex idx, double rho, double phi) {
  const int m_abs = std::abs(idx.m);
  const double radial = zernike_radial(idx.n, m_abs, rho);
  if (idx.m == 0) return radial;
  return radial * (idx.m > 0 ? std::cos(m_abs * phi) : std::sin(m_abs * phi));
}

}  // namespace ptycho
