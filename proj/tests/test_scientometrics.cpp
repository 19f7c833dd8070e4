#include <gtest/gtest.h>

#include <cmath>

#include "crowdlab/io.hpp"
#include "crowdlab/scientometrics.hpp"
#include "synthetic.hpp"

using namespace crowdlab;
using namespace crowdlab::scimetrics;

namespace {

CatalogSeries series(std::vector<std::uint64_t> counts, Method last = Method::crowdsourcing) {
  CatalogSeries s;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.push_back({"x", i + 1 == counts.size() ? last : Method::traditional, counts[i]});
  }
  return s;
}

std::vector<PublicationRecord> with_counts(std::vector<std::uint64_t> counts, const std::string& group = "g") {
  std::vector<PublicationRecord> out;
  for (std::size_t i = 0; i < counts.size(); ++i) out.push_back({"p" + std::to_string(i), 2010, group, "J", counts[i]});
  return out;
}

}  // namespace

TEST(PercentIncreases, Examples) {
  EXPECT_NEAR(percent_increases(series({25, 1990}))[0], 7860.0, 1e-9);
  const auto ib = percent_increases(series({322, 591, 5106}));
  EXPECT_NEAR(display_percent(ib[0]), 83.54, 1e-9);
  EXPECT_NEAR(display_percent(ib[1]), 763.96, 1e-9);
  EXPECT_EQ(percent_increases(series({7, 7}))[0], 0.0);
  EXPECT_TRUE(percent_increases(series({7})).empty());
  EXPECT_THROW(percent_increases(series({0, 7})), ValidationError);
}

TEST(PercentIncreases, CatalogueFixture) {
  const auto tagged = tagged_increases(split_series(io::read_catalog(CROWDLAB_DATA_DIR "/catalogue.csv")));
  const auto expected = io::read_csv(CROWDLAB_DATA_DIR "/catalogue_expected.csv", {"label", "method", "percent"});
  ASSERT_EQ(tagged.size(), expected.rows.size());
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    EXPECT_EQ(tagged[i].label, expected.rows[i][0]);
    EXPECT_EQ(tagged[i].method, parse_method(expected.rows[i][1]));
    EXPECT_NEAR(tagged[i].percent, std::stod(expected.rows[i][2]), 0.01) << tagged[i].label;
  }
}

TEST(GroupSummary, Catalogue) {
  const auto s = group_increase_summary(split_series(io::read_catalog(CROWDLAB_DATA_DIR "/catalogue.csv")));
  EXPECT_TRUE(s.warnings.empty());
  EXPECT_NEAR(s.groups.at(Method::traditional).mean, 83.86, 0.01);
  EXPECT_NEAR(s.groups.at(Method::crowdsourcing).mean, 2465.47, 0.01);
  EXPECT_EQ(s.groups.at(Method::traditional).count, 7u);
  EXPECT_EQ(s.groups.at(Method::crowdsourcing).count, 5u);
}

TEST(GroupSummary, SingleMethodAndEqualIncreases) {
  std::vector<CatalogSeries> only_trad{series({10, 20, 40}, Method::traditional)};
  const auto s = group_increase_summary(only_trad);
  EXPECT_FALSE(s.groups.contains(Method::crowdsourcing));
  EXPECT_EQ(s.warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(s.groups.at(Method::traditional).mean, 100.0);
  EXPECT_DOUBLE_EQ(s.groups.at(Method::traditional).median, 100.0);
}

TEST(Citations, PerArticle) {
  auto s = citations_per_article(with_counts({1, 2, 9}), "g");
  EXPECT_DOUBLE_EQ(s.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.median, 2.0);
  s = citations_per_article(with_counts({5}), "g");
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.median, 5.0);
  s = citations_per_article(with_counts({0, 0, 0, 100}), "g");
  EXPECT_DOUBLE_EQ(s.mean, 25.0);
  EXPECT_DOUBLE_EQ(s.median, 0.0);
  EXPECT_THROW(citations_per_article(with_counts({1}), "other"), ValidationError);
  EXPECT_THROW(citations_per_article(with_counts({1}), "g", 1999), ValidationError);
}

TEST(Citations, Percentiles) {
  std::vector<PublicationRecord> reference;
  for (std::uint64_t c = 0; c < 60; ++c) reference.push_back({"r" + std::to_string(c), 2012, "ref", "J", c});
  const std::vector<PublicationRecord> top{{"t", 2012, "sub", "J", 1000}};
  EXPECT_GT(citation_percentiles(top, reference).results.at(0).percentile, 99.0);

  std::vector<PublicationRecord> flat;
  for (int i = 0; i < 10; ++i) flat.push_back({"f" + std::to_string(i), 2012, "ref", "J", 7});
  const std::vector<PublicationRecord> tied{{"t", 2012, "sub", "J", 7}};
  EXPECT_DOUBLE_EQ(citation_percentiles(tied, flat).results.at(0).percentile, 50.0);

  const std::vector<PublicationRecord> orphan{{"o", 1990, "sub", "J", 3}};
  const auto out = citation_percentiles(orphan, reference);
  EXPECT_TRUE(out.results.empty());
  EXPECT_EQ(out.excluded, std::vector<std::string>{"o"});
}

TEST(Citations, SubjectInsideReferenceCountedOnce) {
  auto reference = with_counts({1, 2, 3, 4});
  const auto out = citation_percentiles({reference[3]}, reference);
  EXPECT_DOUBLE_EQ(out.results.at(0).percentile, 100.0 * 3.5 / 4.0);
}

TEST(Citations, SkewSignFollowsConstruction) {
  // Left-skewed: most papers near the top, a tail towards zero.
  auto left = synthetic::percentile_fixture(21, 200, [](CounterRng& r) { return 100.0 - 30.0 * -std::log(1.0 - r.uniform()); });
  auto right = synthetic::percentile_fixture(22, 200, [](CounterRng& r) { return 30.0 * -std::log(1.0 - r.uniform()); });
  EXPECT_LT(stats::skewness(synthetic::percentiles(left)), 0.0);
  EXPECT_GT(stats::skewness(synthetic::percentiles(right)), 0.0);
}

TEST(JournalMetrics, HIndex) {
  EXPECT_EQ(h_index({10, 8, 5, 4, 3}), 4u);
  EXPECT_EQ(h_index({}), 0u);
  EXPECT_EQ(h_index({1, 1, 1, 1}), 1u);
  EXPECT_EQ(h_index({0, 0}), 0u);
  EXPECT_EQ(h_index({100}), 1u);
}

TEST(JournalMetrics, ImpactFactor) {
  EXPECT_DOUBLE_EQ(impact_factor(25, 10), 2.5);
  EXPECT_DOUBLE_EQ(impact_factor(0, 4), 0.0);
  EXPECT_DOUBLE_EQ(impact_factor(7, 3), 7.0 / 3.0);
  EXPECT_THROW(impact_factor(5, 0), ValidationError);
}

TEST(JournalMetrics, OutputWeighted) {
  std::vector<PublicationRecord> recs{{"a", 2010, "g", "J1", 9}, {"b", 2010, "g", "J1", 3},
                                      {"c", 2010, "g", "J2", 1}, {"d", 2010, "h", "J2", 4}};
  const auto h = journal_h_indices(recs);
  EXPECT_EQ(h.at("J1"), 2u);
  EXPECT_EQ(h.at("J2"), 1u);
  const auto output = journal_output(recs, "g");
  EXPECT_EQ(output.at("J1"), 2u);
  EXPECT_EQ(output.at("J2"), 1u);
  const std::vector<JournalMetrics> metrics{{"J1", 3.0, 2}, {"J2", 6.0, 1}, {"J3", 100.0, 50}};
  const auto w = output_weighted_means(metrics, output);
  EXPECT_DOUBLE_EQ(w.impact_factor, 4.0);
  EXPECT_DOUBLE_EQ(w.h_index, 5.0 / 3.0);
  EXPECT_EQ(w.total_output, 3u);
  EXPECT_THROW(output_weighted_means(metrics, {}), ValidationError);
}
