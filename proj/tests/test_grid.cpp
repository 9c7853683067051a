/* TEST_GRID.CPP  Field container, window primitives, and FFT contracts.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "ptycho/fft.hpp"
#include "ptycho/grid.hpp"

using namespace ptycho;

TEST_CASE("fft2 of all-zero grid is all-zero") {
  ComplexGrid g(8, 8);
  ComplexGrid f = fft2(g);
  REQUIRE(max_abs_diff(f, g) == 0.0);
}

TEST_CASE("fft2 of a unit delta is the flat unitary constant") {
  ComplexGrid g(4, 4);
  g.at(0, 0) = 1.0;
  ComplexGrid f = fft2(g);
  for (std::int64_t i = 0; i < f.size(); ++i) {
    REQUIRE(f[i].real() == Catch::Approx(0.25).margin(1e-14));
    REQUIRE(f[i].imag() == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("ifft2(fft2(g)) round-trips a random 16x16 grid") {
  Rng rng(7);
  ComplexGrid g = oracles::random_complex_grid(16, 16, rng);
  ComplexGrid back = ifft2(fft2(g));
  REQUIRE(rel_error(back, g) <= 1e-12);
}

TEST_CASE("fft2/ifft2 agree with the direct DFT on grids up to 8x8") {
  Rng rng(11);
  for (int h = 1; h <= 8; ++h)
    for (int w = 1; w <= 8; ++w) {
      ComplexGrid g = oracles::random_complex_grid(h, w, rng);
      REQUIRE(rel_error(fft2(g), oracles::direct_dft(g, true)) <= 1e-10);
      REQUIRE(rel_error(ifft2(g), oracles::direct_dft(g, false)) <= 1e-10);
    }
}

TEST_CASE("Parseval holds over 200 random grids") {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const int h = 2 + int(rng.uniform() * 15);
    const int w = 2 + int(rng.uniform() * 15);
    ComplexGrid g = oracles::random_complex_grid(h, w, rng);
    const double in = norm2_squared(g);
    const double out = norm2_squared(fft2(g));
    REQUIRE(std::abs(out - in) <= 1e-10 * in);
  }
}

TEST_CASE("fft2 rejects non-finite input") {
  ComplexGrid g(4, 4);
  g.at(1, 2) = cdouble(std::numeric_limits<double>::quiet_NaN(), 0.0);
  REQUIRE_THROWS_AS(fft2(g), std::invalid_argument);
}

TEST_CASE("extract_window basics") {
  ComplexGrid obj(4, 4);
  for (auto& v : obj.data()) v = cdouble(1.0, 0.0);
  ComplexGrid win = extract_window(obj, {0, 0}, 2, 2);
  for (std::int64_t i = 0; i < win.size(); ++i) REQUIRE(win[i] == cdouble(1.0, 0.0));

  ComplexGrid obj2(4, 4);
  obj2.at(1, 1) = cdouble(0.0, 5.0);
  ComplexGrid win2 = extract_window(obj2, {1, 1}, 2, 2);
  REQUIRE(win2.at(0, 0) == cdouble(0.0, 5.0));
  REQUIRE(win2.at(1, 1) == cdouble(0.0, 0.0));
}

TEST_CASE("extract_window matches an element loop on a random instance") {
  Rng rng(17);
  ComplexGrid obj = oracles::random_complex_grid(10, 10, rng);
  ComplexGrid win = extract_window(obj, {3, 2}, 4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) REQUIRE(win.at(y, x) == obj.at(3 + y, 2 + x));
}

TEST_CASE("extract_window rejects out-of-bounds windows") {
  ComplexGrid obj(4, 4);
  REQUIRE_THROWS_AS(extract_window(obj, {3, 0}, 2, 2), std::out_of_range);
  REQUIRE_THROWS_AS(extract_window(obj, {-1, 0}, 2, 2), std::out_of_range);
}

TEST_CASE("accumulate_window adds in place") {
  ComplexGrid target(2, 4);
  ComplexGrid patch(2, 2);
  for (auto& v : patch.data()) v = cdouble(1.0, 0.0);

  SECTION("zero patch leaves the target unchanged") {
    ComplexGrid zeros(2, 2);
    accumulate_window(target, {0, 1}, zeros);
    REQUIRE(norm2(target) == 0.0);
  }

  SECTION("two accumulations double the region") {
    accumulate_window(target, {0, 0}, patch);
    accumulate_window(target, {0, 0}, patch);
    REQUIRE(target.at(0, 0) == cdouble(2.0, 0.0));
    REQUIRE(target.at(1, 1) == cdouble(2.0, 0.0));
    REQUIRE(target.at(0, 2) == cdouble(0.0, 0.0));
  }

  SECTION("overlapping accumulations produce the hand overlap-add result") {
    accumulate_window(target, {0, 0}, patch);
    accumulate_window(target, {0, 1}, patch);
    for (int y = 0; y < 2; ++y) {
      REQUIRE(target.at(y, 0) == cdouble(1.0, 0.0));
      REQUIRE(target.at(y, 1) == cdouble(2.0, 0.0));
      REQUIRE(target.at(y, 2) == cdouble(1.0, 0.0));
      REQUIRE(target.at(y, 3) == cdouble(0.0, 0.0));
    }
  }

  SECTION("overlapping 2x3 accumulations give column sums 1,2,2,1") {
    ComplexGrid wide(2, 3);
    for (auto& v : wide.data()) v = cdouble(1.0, 0.0);
    accumulate_window(target, {0, 0}, wide);
    accumulate_window(target, {0, 1}, wide);
    for (int y = 0; y < 2; ++y) {
      REQUIRE(target.at(y, 0) == cdouble(1.0, 0.0));
      REQUIRE(target.at(y, 1) == cdouble(2.0, 0.0));
      REQUIRE(target.at(y, 2) == cdouble(2.0, 0.0));
      REQUIRE(target.at(y, 3) == cdouble(1.0, 0.0));
    }
  }
}

TEST_CASE("extract after accumulate into zeros recovers the patch exactly") {
  Rng rng(23);
  ComplexGrid patch = oracles::random_complex_grid(3, 5, rng);
  ComplexGrid target(9, 9);
  accumulate_window(target, {4, 2}, patch);
  ComplexGrid back = extract_window(target, {4, 2}, 3, 5);
  REQUIRE(max_abs_diff(back, patch) == 0.0);
}
