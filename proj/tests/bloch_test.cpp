#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ncx/bloch.hpp"
#include "ncx/gpt.hpp"
#include "oracles.hpp"

using namespace ncx;
using Catch::Matchers::WithinAbs;

TEST_CASE("ideal procedures") {
  const auto [states, effects] = ideal_procedures();
  REQUIRE(states.size() == 8);
  REQUIRE(effects.size() == 4);

  SECTION("P_{1,0} sits on +z") {
    CHECK(states[0].r() == Vec3{0.0, 0.0, 1.0});
    CHECK(states[1].r() == Vec3{0.0, 0.0, -1.0});
  }
  SECTION("planar axes are 120 degrees apart") {
    for (int t = 0; t < 3; ++t)
      for (int s = t + 1; s < 3; ++s)
        CHECK_THAT(dot(states[2 * t].r(), states[2 * s].r()), WithinAbs(-0.5, 1e-15));
  }
  SECTION("planar axes sum to zero") {
    Vec3 sum{0, 0, 0};
    for (int t = 0; t < 3; ++t)
      for (int k = 0; k < 3; ++k) sum[k] += states[2 * t].r()[k];
    CHECK_THAT(norm(sum), WithinAbs(0.0, 1e-15));
  }
  SECTION("effects are sharp projectors") {
    for (const auto& e : effects) {
      CHECK(e.e0() == 1.0);
      CHECK_THAT(norm(e.e()), WithinAbs(1.0, 1e-15));
    }
  }
}

TEST_CASE("born rule against the trace oracle") {
  const auto [states, effects] = ideal_procedures();
  CHECK_THAT(born(effects[0], states[0]).value(), WithinAbs(1.0, 1e-15));

  // cross terms between planar axes: 1/4 and 3/4
  CHECK_THAT(born(effects[0], states[2]).value(),
             WithinAbs(oracles::born_trace(1.0, effects[0].e(), states[2].r()), 1e-14));
  CHECK_THAT(born(effects[0], states[2]).value(), WithinAbs(0.25, 1e-14));
  CHECK_THAT(born(effects[0], states[3]).value(), WithinAbs(0.75, 1e-14));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vec3 r{unif(rng), unif(rng), unif(rng)};
    const double n = norm(r);
    if (n > 1.0)
      for (auto& x : r) x /= n;
    Vec3 e{unif(rng), unif(rng), unif(rng)};
    const double e0 = 0.5 + 0.5 * std::abs(unif(rng));
    const double cap = std::min(e0, 2.0 - e0);
    if (norm(e) > cap)
      for (auto& x : e) x *= cap / norm(e) * 0.999;
    CHECK_THAT(born(BlochEffect(e0, e), BlochState(r)).value(),
               WithinAbs(oracles::born_trace(e0, e, r), 1e-13));
  }
}

TEST_CASE("born is invariant under simultaneous rotation") {
  const auto [states, effects] = ideal_procedures();
  const Vec3 angles{0.3, -0.7, 1.1};
  for (const auto& s : states)
    for (const auto& e : effects) {
      const BlochState rs(rotate_euler(angles, s.r()));
      const BlochEffect re(e.e0(), rotate_euler(angles, e.e()));
      CHECK_THAT(born(re, rs).value(), WithinAbs(born(e, s).value(), 1e-13));
    }
}

TEST_CASE("apply_noise") {
  const auto [states, effects] = ideal_procedures();

  SECTION("identity model is the identity") {
    const auto [s2, e2] = apply_noise(states, effects, NoiseModel{}, 1);
    for (std::size_t i = 0; i < states.size(); ++i) CHECK(s2[i].r() == states[i].r());
    for (std::size_t i = 0; i < effects.size(); ++i) CHECK(e2[i].e() == effects[i].e());
  }

  SECTION("depolarization shrinks diagonal probabilities to (1+v)/2") {
    NoiseModel m;
    m.depolarize_v = 0.8;
    const auto [s2, e2] = apply_noise(states, effects, m, 1);
    for (int t = 0; t < 4; ++t)
      CHECK_THAT(born(e2[t], s2[2 * t]).value(), WithinAbs(0.9, 1e-14));
  }

  SECTION("rotating states and effects together leaves born probabilities alone") {
    NoiseModel m;
    m.rotation = Vec3{0.0, 0.4, 0.0};  // about y
    const auto [s2, e2] = apply_noise(states, effects, m, 1);
    for (std::size_t p = 0; p < states.size(); ++p)
      for (std::size_t t = 0; t < effects.size(); ++t) {
        const BlochEffect rotated(effects[t].e0(),
                                  rotate_euler(m.rotation, effects[t].e()));
        CHECK_THAT(born(rotated, s2[p]).value(),
                   WithinAbs(born(effects[t], states[p]).value(), 1e-13));
      }
  }

  SECTION("deterministic given the seed") {
    NoiseModel m;
    m.per_procedure_jitter = 0.05;
    const auto [a1, b1] = apply_noise(states, effects, m, 42);
    const auto [a2, b2] = apply_noise(states, effects, m, 42);
    for (std::size_t i = 0; i < a1.size(); ++i) CHECK(a1[i].r() == a2[i].r());
    for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].e() == b2[i].e());
    const auto [a3, b3] = apply_noise(states, effects, m, 43);
    CHECK(a3[0].r() != a1[0].r());
  }

  SECTION("cone-violating parameters are rejected") {
    NoiseModel m;
    m.effect_bias = 1.5;  // pushes e0 to 2.5
    CHECK_THROWS_AS(apply_noise(states, effects, m, 1), ValidationError);
  }
}

TEST_CASE("true matrix of the ideal procedures") {
  const auto [states, effects] = ideal_procedures();
  const DataMatrix m = true_matrix(states, effects);
  m.require_shape(4, 8, "test");

  for (int t = 0; t < 4; ++t) {
    CHECK_THAT(m.at(t, 2 * t), WithinAbs(1.0, 1e-14));   // eigenstate, b=0
    CHECK_THAT(m.at(t, 2 * t + 1), WithinAbs(0.0, 1e-14));
  }
  // cross cells within the plane are 1/4 or 3/4 (trace oracle values)
  CHECK_THAT(m.at(0, 2), WithinAbs(0.25, 1e-14));
  CHECK_THAT(m.at(0, 3), WithinAbs(0.75, 1e-14));
  CHECK_THAT(m.at(1, 0), WithinAbs(0.25, 1e-14));
  // the y-axis measurement row is 1/2 on every planar preparation
  for (int p = 0; p < 6; ++p) CHECK_THAT(m.at(3, p), WithinAbs(0.5, 1e-14));

  SECTION("ideal data satisfies both operational equivalences") {
    CHECK(check_prep_equivalence(m.leading_columns(6)) <= 1e-12);
    CHECK(check_coinflip_equivalence(m.row(0), m.row(1), m.row(2)) <= 1e-12);
  }
}

TEST_CASE("sample_counts") {
  const auto [states, effects] = ideal_procedures();
  const DataMatrix truth = true_matrix(states, effects);

  SECTION("p = 1 gives r = 1 and no outcome-1 counts") {
    Grid ones(1, std::vector<double>(1, 1.0));
    const DataMatrix t({"M1"}, {"P1,0"}, ones);
    const auto [counts, m] = sample_counts(t, 1000, 7);
    CHECK(m.at(0, 0) == 1.0);
    CHECK(counts.n1[0][0] == 0);
    CHECK(counts.n0[0][0] > 0);
  }

  SECTION("binomial tail: r stays within 0.01 of 1/2 at N = 1e5") {
    // At N ~ 1e5 the deviation 0.01 is more than 6 sigma, so a handful of
    // seeds all landing inside is an overwhelming-probability event.
    Grid half(1, std::vector<double>(1, 0.5));
    const DataMatrix t({"M1"}, {"P1,0"}, half);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const auto [counts, m] = sample_counts(t, 100000, seed);
      CHECK(std::abs(m.at(0, 0) - 0.5) < 0.01);
    }
  }

  SECTION("identical seeds give identical counts") {
    const auto a = sample_counts(truth, 100, 42);
    const auto b = sample_counts(truth, 100, 42);
    CHECK(a.first.n0 == b.first.n0);
    CHECK(a.first.n1 == b.first.n1);
    CHECK(a.second.values() == b.second.values());
  }

  SECTION("uncertainty floor applies at r in {0,1}") {
    Grid ones(1, std::vector<double>(1, 1.0));
    const DataMatrix t({"M1"}, {"P1,0"}, ones);
    const auto [counts, m] = sample_counts(t, 1000, 7);
    const double n = static_cast<double>(counts.n0[0][0]);
    CHECK(m.sigma(0, 0) == 1.0 / (2.0 * n));
  }

  SECTION("zero-count policy") {
    Grid half(1, std::vector<double>(1, 0.5));
    const DataMatrix t({"M1"}, {"P1,0"}, half);
    // mean_total = 1: zero totals happen with probability 1/e per draw
    bool threw = false;
    for (std::uint64_t seed = 1; seed <= 30 && !threw; ++seed) {
      try {
        sample_counts(t, 1, seed, ZeroCountPolicy::error);
      } catch (const NumericalError&) {
        threw = true;
      }
    }
    CHECK(threw);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const auto [counts, m] = sample_counts(t, 1, seed, ZeroCountPolicy::resample);
      CHECK(counts.n0[0][0] + counts.n1[0][0] > 0);
    }
  }
}

TEST_CASE("sampling is unbiased (fixed seed batch, 3 sigma)") {
  NoiseModel noise;
  noise.depolarize_v = 0.95;  // keep cells away from the endpoints
  const auto [states0, effects0] = ideal_procedures();
  const auto [states, effects] = apply_noise(states0, effects0, noise, 1);
  const DataMatrix truth = true_matrix(states, effects);

  const int n_seeds = 1000;
  const std::int64_t n_counts = 10000;
  Grid sum(4, std::vector<double>(8, 0.0));
  for (int s = 1; s <= n_seeds; ++s) {
    const auto [counts, m] = sample_counts(truth, n_counts, 1000 + s);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 8; ++c) sum[r][c] += m.at(r, c);
  }
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) {
      const double mean = sum[r][c] / n_seeds;
      const double p = truth.at(r, c);
      const double sigma_mean =
          std::sqrt(p * (1.0 - p) / static_cast<double>(n_counts) / n_seeds);
      CHECK(std::abs(mean - p) <= 3.0 * sigma_mean + 1e-12);
    }
}
