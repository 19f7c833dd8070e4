#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "crowdlab/crowd_model.hpp"
#include "crowdlab/rng.hpp"

using namespace crowdlab;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.n_classes = 4;
  s.n_subjects = 50;
  s.gold_count = 20;
  s.n_annotators = 30;
  s.redundancy = 7;
  s.skill_mixture = {{0.7, 0.9, std::nullopt}, {0.3, 0.5, std::nullopt}};
  s.seed = 11;
  return s;
}

std::map<double, std::size_t> accuracy_counts(const std::vector<Annotator>& pool) {
  std::map<double, std::size_t> out;
  for (const auto& a : pool) ++out[a.confusion.at(0, 0)];
  return out;
}

}  // namespace

TEST(Rng, DerivedStreamsAreReproducibleAndDistinct) {
  auto a = CounterRng::derive(7, 1, 2);
  auto b = CounterRng::derive(7, 1, 2);
  auto c = CounterRng::derive(7, 2, 1);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Rng, BelowStaysInRange) {
  auto r = CounterRng::derive(3);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++seen[v];
  }
  for (int n : seen) EXPECT_GT(n, 800);
}

TEST(ConfusionMatrix, AccuracyExpansion) {
  const auto m = ConfusionMatrix::from_accuracy(6, 0.85);
  for (std::size_t t = 0; t < 6; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; l < 6; ++l) {
      sum += m.at(t, l);
      EXPECT_DOUBLE_EQ(m.at(t, l), t == l ? 0.85 : 0.03);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_NEAR(m.mean_accuracy(), 0.85, 1e-12);
}

TEST(ConfusionMatrix, RejectsNonStochasticRows) {
  EXPECT_THROW(ConfusionMatrix::from_rows({{0.5, 0.4}, {0.0, 1.0}}), ValidationError);
  EXPECT_THROW(ConfusionMatrix::from_rows({{1.2, -0.2}, {0.0, 1.0}}), ValidationError);
  EXPECT_THROW(ConfusionMatrix::from_rows({{1.0, 0.0}}), ValidationError);
  EXPECT_THROW(ConfusionMatrix::from_accuracy(3, 1.5), ValidationError);
}

TEST(Annotator, FilteredMeansZeroWeight) {
  Annotator a{"a1", ConfusionMatrix::identity(2)};
  a.set_status(AnnotatorStatus::filtered);
  EXPECT_EQ(a.weight, 0.0);
}

TEST(BuildPopulation, IdentityMixture) {
  Scenario s;
  s.n_classes = 6;
  s.n_annotators = 12;
  s.skill_mixture = {{1.0, 1.0, std::nullopt}};
  for (const auto& a : build_population(s, 1)) {
    for (std::size_t t = 0; t < 6; ++t) {
      for (std::size_t l = 0; l < 6; ++l) EXPECT_EQ(a.confusion.at(t, l), t == l ? 1.0 : 0.0);
    }
  }
}

TEST(BuildPopulation, ExactHalves) {
  Scenario s;
  s.n_classes = 6;
  s.n_annotators = 10;
  s.skill_mixture = {{0.5, 0.9, std::nullopt}, {0.5, 0.4, std::nullopt}};
  const auto counts = accuracy_counts(build_population(s, 5));
  EXPECT_EQ(counts.at(0.9), 5u);
  EXPECT_EQ(counts.at(0.4), 5u);
}

TEST(BuildPopulation, LargestRemainder) {
  EXPECT_EQ(apportion({0.33, 0.33, 0.34}, 100), (std::vector<std::size_t>{33, 33, 34}));
  EXPECT_EQ(apportion({0.5, 0.5}, 3), (std::vector<std::size_t>{2, 1}));  // tie goes to the first
  EXPECT_EQ(apportion({0.1, 0.2, 0.7}, 7), (std::vector<std::size_t>{1, 1, 5}));
  Scenario s;
  s.n_classes = 3;
  s.n_annotators = 100;
  s.skill_mixture = {{0.33, 0.9, std::nullopt}, {0.33, 0.6, std::nullopt}, {0.34, 0.3, std::nullopt}};
  const auto counts = accuracy_counts(build_population(s, 9));
  EXPECT_EQ(counts.at(0.9), 33u);
  EXPECT_EQ(counts.at(0.6), 33u);
  EXPECT_EQ(counts.at(0.3), 34u);
}

TEST(BuildPopulation, ApportionSumsToTotalOnRandomMixtures) {
  auto rng = CounterRng::derive(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t parts = 1 + rng.below(6);
    std::vector<double> f(parts);
    double sum = 0.0;
    for (auto& x : f) sum += (x = rng.uniform() + 0.01);
    for (auto& x : f) x /= sum;
    const std::size_t total = rng.below(300);
    const auto counts = apportion(f, total);
    std::size_t got = 0;
    for (std::size_t i = 0; i < parts; ++i) {
      got += counts[i];
      EXPECT_LE(std::abs(static_cast<double>(counts[i]) - f[i] * total), 1.0 + 1e-9);
    }
    EXPECT_EQ(got, total);
  }
}

TEST(BuildPopulation, InvalidMixture) {
  Scenario s;
  s.n_classes = 2;
  s.n_annotators = 4;
  s.skill_mixture = {{0.5, 0.9, std::nullopt}, {0.4, 0.4, std::nullopt}};
  EXPECT_THROW(build_population(s, 1), ValidationError);
}

TEST(SimulateClassification, IdentityAndForcedOffDiagonal) {
  auto rng = CounterRng::derive(1);
  Annotator perfect{"a", ConfusionMatrix::identity(6)};
  Annotator wrong{"b", ConfusionMatrix::from_accuracy(2, 0.0)};
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(simulate_classification(perfect, Subject{"s", 3}, rng), 3u);
    EXPECT_EQ(simulate_classification(wrong, Subject{"s", 0}, rng), 1u);
  }
}

TEST(SimulateClassification, EmpiricalAccuracy) {
  Annotator a{"a", ConfusionMatrix::from_accuracy(6, 0.9)};
  auto rng = CounterRng::derive(2024);
  int correct = 0;
  for (int i = 0; i < 100000; ++i) correct += simulate_classification(a, Subject{"s", 2}, rng) == 2;
  EXPECT_NEAR(correct / 100000.0, 0.9, 0.01);
}

TEST(RunScenario, StructuralContract) {
  const auto s = small_scenario();
  const auto run = run_scenario(s);
  ASSERT_EQ(run.subjects.size(), s.gold_count + s.n_subjects);
  EXPECT_EQ(run.log.size(), s.n_annotators * s.probation.window + s.n_subjects * s.redundancy);
  EXPECT_NO_THROW(run.log.validate(s.n_classes));

  std::map<std::string, const Subject*> by_id;
  for (const auto& sub : run.subjects) by_id[sub.id] = &sub;
  std::map<std::string, std::set<std::string>> voters;
  std::map<std::string, std::vector<const ClassificationRecord*>> per_annotator;
  for (const auto& r : run.log.records) {
    voters[r.subject_id].insert(r.annotator_id);
    per_annotator[r.annotator_id].push_back(&r);
  }
  for (const auto& sub : run.subjects) {
    if (!sub.is_gold) {
      EXPECT_EQ(voters[sub.id].size(), s.redundancy) << sub.id;
    }
  }
  for (auto& [id, recs] : per_annotator) {
    std::sort(recs.begin(), recs.end(), [](auto* x, auto* y) { return x->seq < y->seq; });
    ASSERT_GE(recs.size(), s.probation.window);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      EXPECT_EQ(by_id.at(recs[i]->subject_id)->is_gold, i < s.probation.window) << id << " seq " << i;
    }
  }
}

TEST(RunScenario, PerfectAnnotatorsLabelTruth) {
  auto s = small_scenario();
  s.skill_mixture = {{1.0, 1.0, std::nullopt}};
  const auto run = run_scenario(s);
  std::map<std::string, ClassLabel> truth;
  for (const auto& sub : run.subjects) truth[sub.id] = sub.true_class;
  for (const auto& r : run.log.records) EXPECT_EQ(r.label, truth.at(r.subject_id));
}

TEST(RunScenario, Deterministic) {
  const auto s = small_scenario();
  EXPECT_EQ(run_scenario(s).log, run_scenario(s).log);
  auto other = s;
  other.seed = 12;
  EXPECT_NE(run_scenario(s).log, run_scenario(other).log);
}

TEST(RunScenario, Infeasible) {
  auto s = small_scenario();
  s.redundancy = s.n_annotators + 1;
  EXPECT_THROW(run_scenario(s), ConfigurationError);
  s = small_scenario();
  s.gold_count = 5;  // fewer gold items than the probation window
  EXPECT_THROW(run_scenario(s), ConfigurationError);
}

TEST(RunScenario, ReferenceMajorityAccuracy) {
  Scenario s;
  s.n_classes = 6;
  s.n_subjects = 1000;
  s.gold_count = 60;
  s.n_annotators = 200;
  s.redundancy = 38;
  s.skill_mixture = {{0.9, 0.85, std::nullopt}, {0.1, 0.4, std::nullopt}};
  s.seed = 2024;
  const auto run = run_scenario(s);
  std::map<std::string, std::vector<int>> hist;
  for (const auto& r : run.log.records) {
    auto& h = hist[r.subject_id];
    h.resize(6);
    ++h[r.label];
  }
  int right = 0;
  for (const auto& sub : run.subjects) {
    if (sub.is_gold) continue;
    const auto& h = hist.at(sub.id);
    right += static_cast<ClassLabel>(std::max_element(h.begin(), h.end()) - h.begin()) == sub.true_class;
  }
  EXPECT_GE(right / 1000.0, 0.99);
}

TEST(ClassificationLog, ValidateCatchesDuplicatesAndRange) {
  ClassificationLog log{{{"a", "s1", 0, 0}, {"a", "s1", 1, 1}}};
  EXPECT_THROW(log.validate(2), ValidationError);
  ClassificationLog bad_label{{{"a", "s1", 5, 0}}};
  EXPECT_THROW(bad_label.validate(2), ValidationError);
  ClassificationLog bad_seq{{{"a", "s1", 0, 3}, {"a", "s2", 0, 3}}};
  EXPECT_THROW(bad_seq.validate(2), ValidationError);
}
