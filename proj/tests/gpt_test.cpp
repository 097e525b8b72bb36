#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ncx/bloch.hpp"
#include "ncx/gpt.hpp"
#include "oracles.hpp"

using namespace ncx;
using Catch::Matchers::WithinAbs;

namespace {

// GPT state of a Bloch state: leading 1 plus the outcome-0 probabilities of
// the three planar fiducial measurements.
GptState gpt_state_of(const BlochState& s) {
  const auto effects = ideal_procedures().second;
  return GptState::from_fiducials(born(effects[0], s), born(effects[1], s),
                                  born(effects[2], s));
}

}  // namespace

TEST_CASE("predict is the dot product") {
  const GptState s(Vec4{1.0, 0.25, 0.5, 0.5});
  CHECK(predict(GptEffect::unit(), s).value() == 1.0);
  CHECK(predict(GptEffect(Vec4{0.0, 1.0, 0.0, 0.0}), s).value() == 0.25);
}

TEST_CASE("predict fiducial-3 on the ideal P_{1,0} state matches the trace oracle") {
  const auto [states, effects] = ideal_procedures();
  const GptState p10 = gpt_state_of(states[0]);
  const double expected =
      oracles::born_trace(1.0, effects[2].e(), states[0].r());  // third fiducial
  REQUIRE_THAT(expected, WithinAbs(0.25, 1e-15));
  CHECK_THAT(predict(GptEffect(Vec4{0.0, 0.0, 0.0, 1.0}), p10).value(),
             WithinAbs(0.25, 1e-15));
}

TEST_CASE("predict rejects inconsistent pairs") {
  const GptState s(Vec4{1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(predict(GptEffect(Vec4{0.0, 1.0, 1.0, 1.0}), s), NumericalError);
  CHECK_THROWS_AS(predict(GptEffect(Vec4{0.0, -1.0, 0.0, 0.0}), s), NumericalError);
}

TEST_CASE("mix_states basics") {
  const GptState a(Vec4{1.0, 1.0, 0.0, 0.0});
  const GptState b(Vec4{1.0, 0.0, 1.0, 0.0});
  const std::vector<GptState> states{a, b};

  SECTION("identity mixture") {
    const std::vector<double> w{1.0, 0.0};
    CHECK(mix_states(w, states).components() == a.components());
  }
  SECTION("midpoint") {
    const std::vector<double> w{0.5, 0.5};
    const GptState mid = mix_states(w, states);
    CHECK(mid.components() == Vec4{1.0, 0.5, 0.5, 0.0});
  }
  SECTION("bad weights") {
    CHECK_THROWS_AS(mix_states(std::vector<double>{0.6, 0.6}, states), ValidationError);
    CHECK_THROWS_AS(mix_states(std::vector<double>{1.5, -0.5}, states), ValidationError);
  }
}

TEST_CASE("uniform mixture of the three ideal P_{t,0} states has fiducials 1/2") {
  // Oracle: the three Bloch vectors average to zero, so each fiducial
  // probability is (1 + n.0)/2 = 1/2.
  const auto [states, effects] = ideal_procedures();
  Vec3 avg{0, 0, 0};
  for (int t = 0; t < 3; ++t)
    for (int k = 0; k < 3; ++k) avg[k] += states[2 * t].r()[k] / 3.0;
  REQUIRE_THAT(norm(avg), WithinAbs(0.0, 1e-15));

  const std::vector<GptState> planar{gpt_state_of(states[0]), gpt_state_of(states[2]),
                                     gpt_state_of(states[4])};
  const std::vector<double> w{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const GptState mixed = mix_states(w, planar);
  for (int k = 1; k < 4; ++k) CHECK_THAT(mixed[k], WithinAbs(0.5, 1e-12));
}

TEST_CASE("post-processings of effects") {
  const GptEffect e(Vec4{1.0, 0.2, -0.3, 0.4});
  const GptEffect flipped = post_process_effect(e, PostProcess::flip);
  CHECK(flipped.components() == Vec4{0.0, -0.2, 0.3, -0.4});
  CHECK(post_process_effect(e, PostProcess::always0).components() ==
        GptEffect::zero().components());
  CHECK(post_process_effect(e, PostProcess::always1).components() ==
        GptEffect::unit().components());

  SECTION("flip is an involution, constants are absorbing") {
    const GptEffect twice =
        post_process_effect(post_process_effect(e, PostProcess::flip), PostProcess::flip);
    CHECK(twice.components() == e.components());
    const GptEffect zero_then_flip = post_process_effect(
        post_process_effect(e, PostProcess::always0), PostProcess::always1);
    CHECK(zero_then_flip.components() == GptEffect::unit().components());
  }
}

TEST_CASE("post-processings of measurement rows") {
  const std::vector<double> row{0.1, 0.9, 0.5};
  CHECK(post_process_row(row, PostProcess::flip) == std::vector<double>{0.9, 0.1, 0.5});
  CHECK(post_process_row(post_process_row(row, PostProcess::flip), PostProcess::flip) ==
        row);
  CHECK(post_process_row(row, PostProcess::always0) ==
        std::vector<double>(3, 0.0));
}

TEST_CASE("preparation equivalence check") {
  const auto [states, effects] = ideal_procedures();
  const DataMatrix ideal = true_matrix(states, effects);

  SECTION("exact on ideal quantum data") {
    CHECK(check_prep_equivalence(ideal.leading_columns(6)) <= 1e-12);
  }
  SECTION("detects a constructed offset") {
    Grid v = ideal.leading_columns(6).values();
    v[0][0] += 0.01;
    v[0][1] += 0.01;  // shifts the t=1 pair average by 0.01 in row M1
    const DataMatrix shifted(DataMatrix::measurement_ids(4),
                             DataMatrix::preparation_ids(3), v);
    CHECK_THAT(check_prep_equivalence(shifted), WithinAbs(0.01, 1e-12));
  }
  SECTION("rejects wrong column count") {
    CHECK_THROWS_AS(check_prep_equivalence(ideal), ValidationError);
  }
}

TEST_CASE("coin-flip equivalence check") {
  const auto [states, effects] = ideal_procedures();
  const DataMatrix ideal = true_matrix(states, effects);
  CHECK(check_coinflip_equivalence(ideal.row(0), ideal.row(1), ideal.row(2)) <= 1e-12);

  const std::vector<double> biased(8, 0.6);
  CHECK_THAT(check_coinflip_equivalence(biased, biased, biased),
             WithinAbs(0.1, 1e-12));
}

TEST_CASE("predict is bilinear and commutes with mixing") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GptState> states;
    for (int i = 0; i < 3; ++i)
      states.push_back(GptState::from_fiducials(unif(rng), unif(rng), unif(rng)));
    std::vector<double> w(3);
    double sum = 0.0;
    for (auto& x : w) sum += (x = unif(rng));
    for (auto& x : w) x /= sum;
    const double weight_slack = std::abs(w[0] + w[1] + w[2] - 1.0);
    REQUIRE(weight_slack <= 1e-12);

    const GptEffect e(Vec4{0.5 * unif(rng), 0.25 * unif(rng), 0.25 * unif(rng),
                           0.25 * unif(rng)});
    const GptState mixed = mix_states(w, states);
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) expected += w[i] * predict(e, states[i]).value();
    CHECK_THAT(predict(e, mixed).value(), WithinAbs(expected, 1e-12));

    // bilinearity in the effect argument
    const GptEffect e2(Vec4{0.25, 0.1, 0.2, 0.3});
    const GptEffect e_sum(Vec4{e[0] + e2[0], e[1] + e2[1], e[2] + e2[2], e[3] + e2[3]});
    CHECK_THAT(predict(e_sum, states[0]).value(),
               WithinAbs(predict(e, states[0]).value() + predict(e2, states[0]).value(),
                         1e-12));
  }
}

TEST_CASE("DataMatrix JSON round-trip preserves values bit-exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Grid v(4, std::vector<double>(8)), s(4, std::vector<double>(8));
  for (auto& row : v)
    for (auto& x : row) x = unif(rng);
  for (auto& row : s)
    for (auto& x : row) x = 1e-4 + 1e-3 * unif(rng);
  const DataMatrix m(DataMatrix::measurement_ids(4), DataMatrix::preparation_ids(4), v,
                     s);
  const DataMatrix back = DataMatrix::from_json(nlohmann::json::parse(m.to_json_string()));
  CHECK(back.values() == m.values());
  CHECK(*back.uncertainties() == *m.uncertainties());
  CHECK(back.row_ids() == m.row_ids());
  CHECK(back.col_ids() == m.col_ids());
}

TEST_CASE("DataMatrix validates its invariants") {
  Grid bad{{0.5, 1.2}};
  CHECK_THROWS_AS(DataMatrix({"M1"}, {"a", "b"}, bad), NumericalError);
  Grid tiny_excursion{{1.0 + 1e-10, -1e-10}};
  const DataMatrix clamped({"M1"}, {"a", "b"}, tiny_excursion);
  CHECK(clamped.at(0, 0) == 1.0);
  CHECK(clamped.at(0, 1) == 0.0);
  CHECK_THROWS_AS(DataMatrix({"M1", "M2"}, {"a"}, Grid{{0.5}}), ValidationError);
}
