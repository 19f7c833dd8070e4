#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "crowdlab/rng.hpp"
#include "crowdlab/veritistic.hpp"
#include "oracles.hpp"
#include "random_models.hpp"

using namespace crowdlab;

TEST(Veritistic, ValueFunction) {
  EXPECT_EQ(veritistic_value(1, 1.0), 1.0);
  EXPECT_EQ(veritistic_value(0, 1.0), 0.0);
  EXPECT_EQ(veritistic_value(1, 0.75), 0.75);
  EXPECT_EQ(veritistic_value(0, 0.25), 0.75);
  EXPECT_THROW(veritistic_value(1, 1.5), ValidationError);
  EXPECT_THROW(veritistic_value(2, 0.5), ValidationError);
}

TEST(Veritistic, BayesUpdate) {
  EXPECT_NEAR(bayes_update(0.5, 3.0), 0.75, 1e-15);
  EXPECT_NEAR(bayes_update(0.2, 16.0), 0.8, 1e-15);
  for (double c : {0.01, 0.3, 0.5, 0.97}) EXPECT_NEAR(bayes_update(c, 1.0), c, 1e-15);
  EXPECT_THROW(bayes_update(0.5, 0.0), ValidationError);
  EXPECT_THROW(bayes_update(0.5, -1.0), ValidationError);
}

TEST(Shaked, ConditionExamples) {
  EvidenceModel good{0.5, {{0.8, 0.2}}};
  EXPECT_TRUE(check_shaked_conditions(good).all_ok());

  EvidenceModel flat{0.5, {{0.5, 0.5}}};
  const auto r = check_shaked_conditions(flat);
  EXPECT_FALSE(r.relevance.ok);
  EXPECT_NE(r.relevance.violated.find("P(h)"), std::string::npos);

  EvidenceModel biased{0.5, {{0.8, 0.2}}, 0.6};
  const auto b = check_shaked_conditions(biased);
  EXPECT_FALSE(b.accuracy.ok);
  EXPECT_NE(b.accuracy.violated.find("C_A(h)"), std::string::npos);

  EvidenceModel certain{0.5, {{0.8, 0.2}}, 1.0};
  EXPECT_FALSE(check_shaked_conditions(certain).bounds.ok);
}

TEST(Shaked, WorkedExample) {
  EvidenceModel m{0.5, {{0.8, 0.2}}};
  EXPECT_NEAR(expected_value_before(m), 0.5, 1e-15);
  EXPECT_NEAR(expected_value_after(m), 0.68, 1e-12);
  EXPECT_NEAR(expected_delta_v(m), 0.18, 1e-12);
  EXPECT_NEAR(*check_shaked_conditions(m).expected_delta_v, 0.18, 1e-12);
}

TEST(Shaked, DegenerateGains) {
  EXPECT_EQ(expected_delta_v(EvidenceModel{0.3, {}}), 0.0);
  EXPECT_EQ(expected_delta_v(EvidenceModel{0.3, {{0.5, 0.5}}}), 0.0);
  EXPECT_EQ(expected_delta_v(EvidenceModel{0.3, {{0.5, 0.5}, {0.9, 0.9}}}), 0.0);
}

TEST(Shaked, TooManySignalsForExactMode) {
  EvidenceModel m{0.5, std::vector<SignalLikelihood>(21, {0.7, 0.4})};
  EXPECT_THROW(expected_delta_v(m), ValidationError);
  EXPECT_FALSE(check_shaked_conditions(m).expected_delta_v.has_value());
  const auto mc = expected_delta_v_monte_carlo(m, 20000, 1);
  EXPECT_GT(mc.mean, 0.0);
}

TEST(Shaked, MatchesEnumerationOracle) {
  auto rng = CounterRng::derive(808);
  for (int i = 0; i < 300; ++i) {
    auto m = testmodels::random_accurate(rng, 1 + rng.below(8));
    if (i % 3 == 1) m.agent_prior = 0.05 + 0.9 * rng.uniform();  // miscalibrated credence
    if (i % 3 == 2) m.signals.push_back({0.5, 0.5});             // flat signal mixed in
    EXPECT_NEAR(expected_delta_v(m), oracle::delta_v(m), 1e-12);
  }
}

TEST(Shaked, PositivityProperty) {
  auto rng = CounterRng::derive(4242);
  for (int i = 0; i < 400; ++i) {
    const auto m = testmodels::random_accurate(rng, 1 + rng.below(8));
    ASSERT_TRUE(check_shaked_conditions(m).all_ok());
    EXPECT_GT(expected_delta_v(m), 0.0);
  }
}

TEST(Shaked, Martingale) {
  auto rng = CounterRng::derive(17);
  for (int i = 0; i < 200; ++i) {
    const auto m = testmodels::random_accurate(rng, 1 + rng.below(8));
    EXPECT_NEAR(expected_posterior(m), m.prior, 1e-12);
  }
}

TEST(Shaked, MonteCarloAgreesWithExact) {
  EvidenceModel m{0.35, {{0.7, 0.3}, {0.6, 0.1}, {0.2, 0.5}}};
  const auto mc = expected_delta_v_monte_carlo(m, 200000, 5);
  EXPECT_NEAR(mc.mean, expected_delta_v(m), 4.0 * mc.std_error);
  const auto again = expected_delta_v_monte_carlo(m, 200000, 5);
  EXPECT_EQ(mc.mean, again.mean);
}

TEST(TotalEvidence, WorkedExample) {
  EvidenceModel m{0.5, {{0.8, 0.2}, {0.8, 0.2}}};
  const auto r = total_evidence_gain(m, {0}, {0, 1});
  EXPECT_NEAR(r.value_small, 0.68, 1e-12);
  EXPECT_NEAR(r.value_large, 13.0 / 17.0, 1e-12);
  EXPECT_NEAR(r.gain, 0.0847, 1e-4);
}

TEST(TotalEvidence, EqualAndIrrelevant) {
  EvidenceModel m{0.4, {{0.8, 0.2}, {0.5, 0.5}}};
  EXPECT_EQ(total_evidence_gain(m, {0}, {0}).gain, 0.0);
  EXPECT_EQ(total_evidence_gain(m, {0}, {1, 0}).gain, 0.0);
  EXPECT_EQ(total_evidence_gain(m, {}, {1}).gain, 0.0);
  EXPECT_THROW(total_evidence_gain(m, {1}, {0}), ValidationError);
  EXPECT_THROW(total_evidence_gain(m, {0}, {0, 7}), ValidationError);
}

TEST(TotalEvidence, PositivityProperty) {
  auto rng = CounterRng::derive(2718);
  for (int i = 0; i < 300; ++i) {
    const std::size_t m = 2 + rng.below(7);
    const auto model = testmodels::random_accurate(rng, m);
    const auto [small, large] = testmodels::random_nested(rng, m);
    const auto r = total_evidence_gain(model, small, large);
    EXPECT_GT(r.gain, 0.0);
    EXPECT_TRUE(r.large_conditions.all_ok());
  }
}

TEST(TotalEvidence, IrrelevantAdditionIsExactlyZero) {
  auto rng = CounterRng::derive(3141);
  for (int i = 0; i < 300; ++i) {
    auto model = testmodels::random_accurate(rng, 1 + rng.below(6));
    const double flat = 0.05 + 0.9 * rng.uniform();
    model.signals.push_back({flat, flat});
    std::vector<std::size_t> small(model.signals.size() - 1);
    std::iota(small.begin(), small.end(), std::size_t{0});
    auto large = small;
    large.push_back(model.signals.size() - 1);
    EXPECT_EQ(total_evidence_gain(model, small, large).gain, 0.0);
  }
}
