/* TEST_PROJECTIONS.CPP  Projection operators, closed-form updates, and the
 *                       frozen/fluid partial variants against naive oracles.
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "ptycho/projections.hpp"

using namespace ptycho;

namespace {

/// Probe whose amplitudes stay away from zero, so least-squares recoveries
/// are exact and the eps floor stays inactive.
ComplexGrid safe_probe(int h, int w, Rng& rng) {
  ComplexGrid p(h, w);
  for (auto& v : p.data())
    v = std::polar(0.4 + rng.uniform(), 2.0 * std::numbers::pi * rng.uniform());
  return p;
}

ExitWaveSet clone_with_waves(const ExitWaveSet& like, std::vector<ComplexGrid> waves) {
  return ExitWaveSet{std::move(waves), like.positions};
}

double set_rel_error(const ExitWaveSet& a, const ExitWaveSet& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::int64_t i = 0; i < a.waves[k].size(); ++i) {
      num += std::norm(a.waves[k][i] - b.waves[k][i]);
      den += std::norm(b.waves[k][i]);
    }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

TEST_CASE("project_amplitudes keeps a wave already on the constraint set") {
  Rng rng(1);
  ComplexGrid wave = oracles::random_complex_grid(8, 8, rng);
  RealGrid amps = amplitudes(fft2(wave));
  ComplexGrid out = project_amplitudes(wave, amps);
  REQUIRE(rel_error(out, wave) <= 1e-12);
}

TEST_CASE("project_amplitudes of a zero wave is ifft2(amps)") {
  Rng rng(2);
  ComplexGrid wave(6, 6);
  RealGrid amps = oracles::random_amplitude_grid(6, 6, rng);
  ComplexGrid expected(6, 6);
  for (std::int64_t i = 0; i < expected.size(); ++i) expected[i] = cdouble(amps[i], 0.0);
  expected = ifft2(expected);
  REQUIRE(rel_error(project_amplitudes(wave, amps), expected) <= 1e-12);
}

TEST_CASE("project_amplitudes satisfies the constraint and matches the direct-DFT oracle") {
  Rng rng(3);
  ComplexGrid wave = oracles::random_complex_grid(8, 8, rng);
  RealGrid amps = oracles::random_amplitude_grid(8, 8, rng);
  ComplexGrid out = project_amplitudes(wave, amps);
  RealGrid out_amps = amplitudes(fft2(out));
  double max_amp = 0.0, max_dev = 0.0;
  for (std::int64_t i = 0; i < amps.size(); ++i) {
    max_amp = std::max(max_amp, amps[i]);
    max_dev = std::max(max_dev, std::abs(out_amps[i] - amps[i]));
  }
  REQUIRE(max_dev <= 1e-10 * std::max(1.0, max_amp));
  REQUIRE(rel_error(out, oracles::direct_project_amplitudes(wave, amps)) <= 1e-10);
}

TEST_CASE("project_amplitudes error paths") {
  ComplexGrid wave(4, 4);
  RealGrid amps(4, 5);
  REQUIRE_THROWS_AS(project_amplitudes(wave, amps), std::invalid_argument);
  RealGrid neg(4, 4);
  neg.at(0, 0) = -1.0;
  REQUIRE_THROWS_AS(project_amplitudes(wave, neg), std::invalid_argument);
}

TEST_CASE("project_amplitudes is idempotent over 100 random instances") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + int(rng.uniform() * 15);
    ComplexGrid wave = oracles::random_complex_grid(n, n, rng);
    RealGrid amps = oracles::random_amplitude_grid(n, n, rng);
    ComplexGrid once = project_amplitudes(wave, amps);
    ComplexGrid twice = project_amplitudes(once, amps);
    const double scale = std::max(1.0, norm2(once));
    double dev = 0.0;
    for (std::int64_t i = 0; i < once.size(); ++i) dev += std::norm(twice[i] - once[i]);
    REQUIRE(std::sqrt(dev) <= 1e-10 * scale);
  }
}

TEST_CASE("segment basics and oracle") {
  Rng rng(5);
  ComplexGrid obj = oracles::random_complex_grid(9, 9, rng);
  ComplexGrid probe = oracles::random_complex_grid(3, 3, rng);
  std::vector<ScanPosition> positions{{0, 0}, {2, 3}, {6, 6}};

  SECTION("all-ones probe returns raw windows") {
    ComplexGrid ones(3, 3);
    for (auto& v : ones.data()) v = cdouble(1.0, 0.0);
    ExitWaveSet ews = segment(obj, ones, positions);
    for (std::size_t k = 0; k < ews.size(); ++k)
      REQUIRE(max_abs_diff(ews.waves[k], extract_window(obj, positions[k], 3, 3)) == 0.0);
  }

  SECTION("zero object gives zero waves") {
    ComplexGrid zeros(9, 9);
    ExitWaveSet ews = segment(zeros, probe, positions);
    for (const auto& w : ews.waves) REQUIRE(norm2(w) == 0.0);
  }

  SECTION("per-element loop oracle") {
    ExitWaveSet ews = segment(obj, probe, positions);
    for (std::size_t k = 0; k < ews.size(); ++k)
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
          REQUIRE(ews.waves[k].at(y, x) ==
                  probe.at(y, x) * obj.at(positions[k].y + y, positions[k].x + x));
  }
}

TEST_CASE("object_update single wave with all-ones probe") {
  Rng rng(6);
  ComplexGrid wave = oracles::random_complex_grid(2, 2, rng);
  ComplexGrid ones(2, 2);
  for (auto& v : ones.data()) v = cdouble(1.0, 0.0);
  ExitWaveSet ews{{wave}, {{1, 1}}};
  ComplexGrid obj = object_update(ews, ones, {4, 4});
  REQUIRE(max_abs_diff(extract_window(obj, {1, 1}, 2, 2), wave) <= 1e-15);
  REQUIRE(obj.at(0, 0) == cdouble(0.0, 0.0));
  REQUIRE(obj.at(3, 3) == cdouble(0.0, 0.0));
}

TEST_CASE("object_update recovers the true object on covered pixels") {
  Rng rng(7);
  ComplexGrid truth = oracles::random_complex_grid(10, 10, rng);
  ComplexGrid probe = safe_probe(4, 4, rng);
  std::vector<ScanPosition> positions{{0, 0}, {0, 4}, {3, 2}, {6, 6}, {5, 0}};
  ExitWaveSet ews = segment(truth, probe, positions);
  ComplexGrid est = object_update(ews, probe, truth.shape());
  for (const auto& pos : positions) {
    ComplexGrid got = extract_window(est, pos, 4, 4);
    ComplexGrid want = extract_window(truth, pos, 4, 4);
    REQUIRE(rel_error(got, want) <= 1e-10);
  }
}

TEST_CASE("object_update matches the naive weighted-average oracle") {
  Rng rng(8);
  ComplexGrid probe = oracles::random_complex_grid(2, 2, rng);
  ExitWaveSet ews;
  ews.positions = {{0, 0}, {1, 1}};
  ews.waves = {oracles::random_complex_grid(2, 2, rng), oracles::random_complex_grid(2, 2, rng)};
  ClipConfig clip;
  ComplexGrid got = object_update(ews, probe, {4, 4}, clip);
  ComplexGrid want = oracles::naive_object_update(ews, probe, {4, 4}, clip.eps_denominator);
  REQUIRE(rel_error(got, want) <= 1e-13);
}

TEST_CASE("object_update stays finite when the probe has zero pixels") {
  Rng rng(9);
  ComplexGrid probe(3, 3);  // identically zero
  ExitWaveSet ews{{oracles::random_complex_grid(3, 3, rng)}, {{0, 0}}};
  ComplexGrid obj = object_update(ews, probe, {5, 5});
  REQUIRE(all_finite(obj));
  REQUIRE(norm2(obj) == 0.0);
}

TEST_CASE("project_consistency fixed points and idempotence") {
  Rng rng(10);

  SECTION("segment output is unchanged") {
    ComplexGrid truth = oracles::random_complex_grid(8, 8, rng);
    ComplexGrid probe = safe_probe(3, 3, rng);
    std::vector<ScanPosition> positions{{0, 0}, {2, 2}, {4, 1}};
    ExitWaveSet ews = segment(truth, probe, positions);
    REQUIRE(set_rel_error(project_consistency(ews, probe), ews) <= 1e-10);
  }

  SECTION("K=1 with a nowhere-zero probe is the identity") {
    ComplexGrid probe = safe_probe(4, 4, rng);
    ExitWaveSet ews{{oracles::random_complex_grid(4, 4, rng)}, {{2, 3}}};
    REQUIRE(set_rel_error(project_consistency(ews, probe), ews) <= 1e-10);
  }

  SECTION("idempotence and direct oracle on a random 3-wave set") {
    ComplexGrid probe = safe_probe(3, 3, rng);
    ExitWaveSet ews;
    ews.positions = {{0, 0}, {1, 2}, {3, 3}};
    for (int k = 0; k < 3; ++k) ews.waves.push_back(oracles::random_complex_grid(3, 3, rng));
    ExitWaveSet once = project_consistency(ews, probe);
    ExitWaveSet twice = project_consistency(once, probe);
    REQUIRE(set_rel_error(twice, once) <= 1e-10);

    ClipConfig clip;
    ComplexGrid obj = oracles::naive_object_update(ews, probe, {6, 6}, clip.eps_denominator);
    ExitWaveSet want = segment(obj, probe, ews.positions);
    REQUIRE(set_rel_error(once, want) <= 1e-12);
  }
}

TEST_CASE("partial_object_update reductions and equivalences") {
  Rng rng(11);
  const GridShape object_shape{10, 10};
  ComplexGrid probe = safe_probe(3, 3, rng);

  SECTION("zero accumulators reduce to the full object update") {
    FrozenAccumulators acc(object_shape, probe.shape());
    ExitWaveSet fluid;
    fluid.positions = {{0, 0}, {4, 4}};
    fluid.waves = {oracles::random_complex_grid(3, 3, rng),
                   oracles::random_complex_grid(3, 3, rng)};
    REQUIRE(rel_error(partial_object_update(fluid, acc, probe),
                      object_update(fluid, probe, object_shape)) <= 1e-15);
  }

  SECTION("zero fluid waves contribute only to the denominator") {
    FrozenAccumulators acc(object_shape, probe.shape());
    accumulate_frozen(acc, probe, oracles::random_complex_grid(10, 10, rng),
                      oracles::random_complex_grid(3, 3, rng), {2, 2});
    ExitWaveSet fluid{{ComplexGrid(3, 3)}, {{2, 2}}};
    ComplexGrid got = partial_object_update(fluid, acc, probe);
    RealGrid den = acc.obj_den;
    RealGrid probe_intensity(3, 3);
    for (std::int64_t i = 0; i < probe_intensity.size(); ++i)
      probe_intensity[i] = std::norm(probe[i]);
    accumulate_window(den, {2, 2}, probe_intensity);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x)
        REQUIRE(got.at(y, x) == acc.obj_num.at(y, x) / std::max(den.at(y, x), 1e-12));
  }

  SECTION("F=2 frozen + B=2 fluid equals the full 4-wave object update") {
    ComplexGrid obj_for_freeze = oracles::random_complex_grid(10, 10, rng);
    ExitWaveSet all;
    all.positions = {{0, 0}, {1, 2}, {2, 4}, {5, 5}};
    for (int k = 0; k < 4; ++k) all.waves.push_back(oracles::random_complex_grid(3, 3, rng));

    FrozenAccumulators acc(object_shape, probe.shape());
    accumulate_frozen(acc, probe, obj_for_freeze, all.waves[0], all.positions[0]);
    accumulate_frozen(acc, probe, obj_for_freeze, all.waves[1], all.positions[1]);
    ExitWaveSet fluid{{all.waves[2], all.waves[3]}, {all.positions[2], all.positions[3]}};

    REQUIRE(rel_error(partial_object_update(fluid, acc, probe),
                      object_update(all, probe, object_shape)) <= 1e-12);
  }
}

TEST_CASE("project_consistency_partial reductions and fixed point") {
  Rng rng(12);
  const GridShape object_shape{10, 10};
  ComplexGrid probe = safe_probe(3, 3, rng);

  SECTION("F=0 equals the full consistency projection") {
    FrozenAccumulators acc(object_shape, probe.shape());
    ExitWaveSet fluid;
    fluid.positions = {{0, 0}, {2, 2}, {6, 3}};
    for (int k = 0; k < 3; ++k) fluid.waves.push_back(oracles::random_complex_grid(3, 3, rng));
    REQUIRE(set_rel_error(project_consistency_partial(fluid, acc, probe),
                          project_consistency(fluid, probe)) <= 1e-12);
  }

  SECTION("fluid consistent with frozen content is a fixed point (idempotence regime)") {
    ComplexGrid shared_object = oracles::random_complex_grid(10, 10, rng);
    std::vector<ScanPosition> positions{{0, 0}, {1, 1}, {2, 3}, {4, 4}, {6, 5}};
    ExitWaveSet all = segment(shared_object, probe, positions);
    FrozenAccumulators acc(object_shape, probe.shape());
    for (int k = 0; k < 3; ++k)
      accumulate_frozen(acc, probe, shared_object, all.waves[k], all.positions[k]);
    ExitWaveSet fluid{{all.waves[3], all.waves[4]}, {all.positions[3], all.positions[4]}};
    ExitWaveSet once = project_consistency_partial(fluid, acc, probe);
    REQUIRE(set_rel_error(once, fluid) <= 1e-10);
    ExitWaveSet twice = project_consistency_partial(once, acc, probe);
    REQUIRE(set_rel_error(twice, once) <= 1e-10);
  }

  SECTION("random F=3/B=2 matches full consistency on all 5 sliced to the last 2") {
    ComplexGrid obj_for_freeze = oracles::random_complex_grid(10, 10, rng);
    ExitWaveSet all;
    all.positions = {{0, 0}, {1, 2}, {3, 1}, {4, 4}, {6, 6}};
    for (int k = 0; k < 5; ++k) all.waves.push_back(oracles::random_complex_grid(3, 3, rng));
    FrozenAccumulators acc(object_shape, probe.shape());
    for (int k = 0; k < 3; ++k)
      accumulate_frozen(acc, probe, obj_for_freeze, all.waves[k], all.positions[k]);
    ExitWaveSet fluid{{all.waves[3], all.waves[4]}, {all.positions[3], all.positions[4]}};

    ExitWaveSet got = project_consistency_partial(fluid, acc, probe);
    ExitWaveSet full = project_consistency(all, probe);
    ExitWaveSet want = clone_with_waves(fluid, {full.waves[3], full.waves[4]});
    REQUIRE(set_rel_error(got, want) <= 1e-12);
  }
}

TEST_CASE("probe_update basics and oracle") {
  Rng rng(13);

  SECTION("all-ones object gives the mean of the waves") {
    ComplexGrid ones(8, 8);
    for (auto& v : ones.data()) v = cdouble(1.0, 0.0);
    ExitWaveSet ews;
    ews.positions = {{0, 0}, {3, 3}, {5, 1}};
    for (int k = 0; k < 3; ++k) ews.waves.push_back(oracles::random_complex_grid(3, 3, rng));
    ComplexGrid got = probe_update(ews, ones);
    for (std::int64_t i = 0; i < got.size(); ++i) {
      cdouble mean = (ews.waves[0][i] + ews.waves[1][i] + ews.waves[2][i]) / 3.0;
      REQUIRE(std::abs(got[i] - mean) <= 1e-13);
    }
  }

  SECTION("segmented waves recover the true probe") {
    ComplexGrid obj(8, 8);
    for (auto& v : obj.data())
      v = std::polar(0.4 + rng.uniform(), 2.0 * std::numbers::pi * rng.uniform());
    ComplexGrid truth = oracles::random_complex_grid(3, 3, rng);
    std::vector<ScanPosition> positions{{0, 0}, {2, 2}, {4, 1}, {5, 5}};
    ExitWaveSet ews = segment(obj, truth, positions);
    REQUIRE(rel_error(probe_update(ews, obj), truth) <= 1e-10);
  }

  SECTION("2-wave instance matches the naive oracle") {
    ComplexGrid obj = oracles::random_complex_grid(8, 8, rng);
    ExitWaveSet ews;
    ews.positions = {{1, 1}, {4, 3}};
    ews.waves = {oracles::random_complex_grid(3, 3, rng),
                 oracles::random_complex_grid(3, 3, rng)};
    ClipConfig clip;
    ComplexGrid want =
        oracles::naive_probe_update(ews, obj, clip.eps_denominator, false, clip.amp_percentile);
    REQUIRE(rel_error(probe_update(ews, obj, clip), want) <= 1e-13);
  }
}

TEST_CASE("amplitude percentile clip") {
  SECTION("uniform amplitudes are untouched") {
    ComplexGrid g(5, 5);
    Rng rng(14);
    for (auto& v : g.data()) v = std::polar(2.0, 2.0 * std::numbers::pi * rng.uniform());
    ComplexGrid clipped = clip_to_amplitude_percentile(g, 0.95);
    REQUIRE(max_abs_diff(clipped, g) == 0.0);
  }

  SECTION("a single outlier on a 100-pixel grid is clipped to the common amplitude") {
    ComplexGrid g(10, 10);
    Rng rng(15);
    for (auto& v : g.data()) v = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    g.at(4, 7) *= 100.0;
    const cdouble outlier_phase = g.at(4, 7) / std::abs(g.at(4, 7));
    ComplexGrid clipped = clip_to_amplitude_percentile(g, 0.95);
    REQUIRE(std::abs(clipped.at(4, 7)) == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(std::abs(clipped.at(4, 7) / std::abs(clipped.at(4, 7)) - outlier_phase) <= 1e-12);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 10; ++x)
        if (y != 4 || x != 7) REQUIRE(clipped.at(y, x) == g.at(y, x));
  }

  SECTION("clip is an exact contraction to the pre-clip percentile") {
    Rng rng(16);
    for (int t = 0; t < 20; ++t) {
      ComplexGrid g = oracles::random_complex_grid(8, 8, rng);
      const double threshold = amplitude_percentile(g, 0.95);
      ComplexGrid clipped = clip_to_amplitude_percentile(g, 0.95);
      for (std::int64_t i = 0; i < clipped.size(); ++i)
        REQUIRE(std::abs(clipped[i]) <= threshold);
    }
  }
}

TEST_CASE("partial_probe_update behavior") {
  Rng rng(17);
  const GridShape object_shape{8, 8};
  const GridShape probe_shape{3, 3};

  SECTION("single constant-amplitude wave with all-ones object rescales to the target") {
    FrozenAccumulators acc(object_shape, probe_shape);
    ComplexGrid ones(8, 8);
    for (auto& v : ones.data()) v = cdouble(1.0, 0.0);
    ComplexGrid wave(3, 3);
    for (auto& v : wave.data()) v = std::polar(3.0, 2.0 * std::numbers::pi * rng.uniform());
    ExitWaveSet fluid{{wave}, {{2, 2}}};
    const double target = 7.5;
    ComplexGrid got = partial_probe_update(fluid, acc, ones, {}, target);
    REQUIRE(norm2(got) == Catch::Approx(target).epsilon(1e-12));
    ComplexGrid expected = wave;
    scale(expected, target / norm2(wave));
    REQUIRE(rel_error(got, expected) <= 1e-12);
  }

  SECTION("F=2/B=2 matches the full-sum-with-clip oracle after rescale") {
    ComplexGrid obj = oracles::random_complex_grid(8, 8, rng);
    ComplexGrid probe_at_freeze = safe_probe(3, 3, rng);
    ExitWaveSet all;
    all.positions = {{0, 0}, {2, 2}, {3, 4}, {5, 5}};
    for (int k = 0; k < 4; ++k) all.waves.push_back(oracles::random_complex_grid(3, 3, rng));

    ClipConfig clip;
    FrozenAccumulators acc(object_shape, probe_shape);
    accumulate_frozen(acc, probe_at_freeze, obj, all.waves[0], all.positions[0], clip);
    accumulate_frozen(acc, probe_at_freeze, obj, all.waves[1], all.positions[1], clip);
    ExitWaveSet fluid{{all.waves[2], all.waves[3]}, {all.positions[2], all.positions[3]}};

    const double target = 3.0;
    ComplexGrid got = partial_probe_update(fluid, acc, obj, clip, target);
    ComplexGrid want =
        oracles::naive_probe_update(all, obj, clip.eps_denominator, true, clip.amp_percentile);
    scale(want, target / norm2(want));
    REQUIRE(rel_error(got, want) <= 1e-12);
    REQUIRE(norm2(got) == Catch::Approx(target).epsilon(1e-9));
  }

  SECTION("non-positive norm target is rejected") {
    FrozenAccumulators acc(object_shape, probe_shape);
    ExitWaveSet fluid{{oracles::random_complex_grid(3, 3, rng)}, {{0, 0}}};
    ComplexGrid obj = oracles::random_complex_grid(8, 8, rng);
    REQUIRE_THROWS_AS(partial_probe_update(fluid, acc, obj, {}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("accumulate_frozen bookkeeping") {
  Rng rng(18);
  const GridShape object_shape{8, 8};
  ComplexGrid probe = safe_probe(3, 3, rng);
  ComplexGrid obj = oracles::random_complex_grid(8, 8, rng);

  SECTION("one freeze then an empty-fluid partial update equals a K=1 object update") {
    FrozenAccumulators acc(object_shape, probe.shape());
    ComplexGrid wave = oracles::random_complex_grid(3, 3, rng);
    accumulate_frozen(acc, probe, obj, wave, {2, 3});
    REQUIRE(acc.frozen_count == 1);
    ExitWaveSet empty;
    ComplexGrid got = partial_object_update(empty, acc, probe);
    ExitWaveSet single{{wave}, {{2, 3}}};
    REQUIRE(rel_error(got, object_update(single, probe, object_shape)) <= 1e-15);
  }

  SECTION("two identical freezes double the accumulators") {
    FrozenAccumulators once(object_shape, probe.shape());
    FrozenAccumulators twice(object_shape, probe.shape());
    ComplexGrid wave = oracles::random_complex_grid(3, 3, rng);
    accumulate_frozen(once, probe, obj, wave, {1, 1});
    accumulate_frozen(twice, probe, obj, wave, {1, 1});
    accumulate_frozen(twice, probe, obj, wave, {1, 1});
    for (std::int64_t i = 0; i < once.obj_num.size(); ++i) {
      REQUIRE(std::abs(twice.obj_num[i] - 2.0 * once.obj_num[i]) <= 1e-15);
      REQUIRE(std::abs(twice.obj_den[i] - 2.0 * once.obj_den[i]) <= 1e-15);
    }
    for (std::int64_t i = 0; i < once.probe_num.size(); ++i) {
      REQUIRE(std::abs(twice.probe_num[i] - 2.0 * once.probe_num[i]) <= 1e-15);
      REQUIRE(std::abs(twice.probe_den[i] - 2.0 * once.probe_den[i]) <= 1e-15);
    }
  }

  SECTION("a freeze sequence equals batch loop-oracle sums") {
    ClipConfig clip;
    FrozenAccumulators acc(object_shape, probe.shape());
    ExitWaveSet all;
    all.positions = {{0, 0}, {2, 2}, {4, 4}};
    for (int k = 0; k < 3; ++k) all.waves.push_back(oracles::random_complex_grid(3, 3, rng));
    for (int k = 0; k < 3; ++k)
      accumulate_frozen(acc, probe, obj, all.waves[k], all.positions[k], clip);
    REQUIRE(acc.frozen_count == 3);

    ComplexGrid num_want(object_shape.height, object_shape.width);
    RealGrid den_want(object_shape.height, object_shape.width);
    for (std::size_t k = 0; k < all.size(); ++k)
      for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
          num_want.at(all.positions[k].y + y, all.positions[k].x + x) +=
              std::conj(probe.at(y, x)) * all.waves[k].at(y, x);
          den_want.at(all.positions[k].y + y, all.positions[k].x + x) +=
              std::norm(probe.at(y, x));
        }
    REQUIRE(rel_error(acc.obj_num, num_want) <= 1e-14);
    for (std::int64_t i = 0; i < den_want.size(); ++i)
      REQUIRE(std::abs(acc.obj_den[i] - den_want[i]) <= 1e-14);

    ComplexGrid probe_num_want(3, 3);
    RealGrid probe_den_want(3, 3);
    for (std::size_t k = 0; k < all.size(); ++k) {
      ComplexGrid win = extract_window(obj, all.positions[k], 3, 3);
      ComplexGrid summand(3, 3);
      for (std::int64_t i = 0; i < summand.size(); ++i) {
        summand[i] = std::conj(win[i]) * all.waves[k][i];
        probe_den_want[i] += std::norm(win[i]);
      }
      summand = clip_to_amplitude_percentile(summand, clip.amp_percentile);
      for (std::int64_t i = 0; i < summand.size(); ++i) probe_num_want[i] += summand[i];
    }
    REQUIRE(rel_error(acc.probe_num, probe_num_want) <= 1e-14);
    for (std::int64_t i = 0; i < probe_den_want.size(); ++i)
      REQUIRE(std::abs(acc.probe_den[i] - probe_den_want[i]) <= 1e-14);
  }
}

TEST_CASE("config validation") {
  ClipConfig bad_eps;
  bad_eps.eps_denominator = 0.0;
  REQUIRE_THROWS_AS(bad_eps.validate(), std::invalid_argument);
  ClipConfig bad_pct;
  bad_pct.amp_percentile = 1.5;
  REQUIRE_THROWS_AS(bad_pct.validate(), std::invalid_argument);
}
