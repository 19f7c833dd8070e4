#pragma once

// Catalogue growth and publication impact arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/stats.hpp"

namespace crowdlab::scimetrics {

enum class Method { traditional, crowdsourcing };

inline const char* to_string(Method m) { return m == Method::traditional ? "traditional" : "crowdsourcing"; }

inline Method parse_method(const std::string& s) {
  if (s == "traditional") return Method::traditional;
  if (s == "crowdsourcing" || s == "crowdsourced") return Method::crowdsourcing;
  throw ValidationError("unknown catalogue method '" + s + "'");
}

struct CatalogEntry {
  std::string label;
  Method method = Method::traditional;
  std::uint64_t observations = 0;
};

/// Successive catalogues of one kind, oldest first.
using CatalogSeries = std::vector<CatalogEntry>;

/// Splits a flat catalogue table into series of consecutive rows sharing a label.
inline std::vector<CatalogSeries> split_series(const std::vector<CatalogEntry>& rows) {
  std::vector<CatalogSeries> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().front().label != r.label) out.emplace_back();
    out.back().push_back(r);
  }
  return out;
}

/// 100 * (count - previous) / previous for every entry after the first.
inline std::vector<double> percent_increases(const CatalogSeries& series) {
  std::vector<double> out;
  for (const auto& e : series) {
    if (e.observations == 0) throw ValidationError("catalogue '" + e.label + "' has a zero observation count");
  }
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto prev = static_cast<double>(series[i - 1].observations);
    out.push_back(100.0 * (static_cast<double>(series[i].observations) - prev) / prev);
  }
  return out;
}

/// Rounds to two decimals for display.
inline double display_percent(double v) { return std::round(v * 100.0) / 100.0; }

struct TaggedIncrease {
  std::string label;
  Method method = Method::traditional;  // method of the newer catalogue
  std::uint64_t from = 0;
  std::uint64_t to = 0;
  double percent = 0.0;
};

inline std::vector<TaggedIncrease> tagged_increases(const std::vector<CatalogSeries>& all) {
  std::vector<TaggedIncrease> out;
  for (const auto& series : all) {
    const auto inc = percent_increases(series);
    for (std::size_t i = 0; i < inc.size(); ++i) {
      out.push_back({series[i + 1].label, series[i + 1].method, series[i].observations, series[i + 1].observations,
                     inc[i]});
    }
  }
  return out;
}

inline std::vector<double> increases_for(const std::vector<TaggedIncrease>& tagged, Method m) {
  std::vector<double> out;
  for (const auto& t : tagged) {
    if (t.method == m) out.push_back(t.percent);
  }
  return out;
}

struct GroupSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct IncreaseSummary {
  std::map<Method, GroupSummary> groups;
  std::vector<std::string> warnings;
};

inline IncreaseSummary group_increase_summary(const std::vector<CatalogSeries>& all) {
  const auto tagged = tagged_increases(all);
  IncreaseSummary out;
  for (Method m : {Method::traditional, Method::crowdsourcing}) {
    const auto values = increases_for(tagged, m);
    if (values.empty()) {
      out.warnings.push_back(std::string("no increases for method ") + to_string(m));
      continue;
    }
    out.groups[m] = {values.size(), stats::mean(values), stats::median(values)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Publications

struct PublicationRecord {
  std::string id;
  int year = 0;
  std::string group;
  std::string journal;
  std::uint64_t citations = 0;
};

struct CitationSummary {
  double mean = 0.0;
  double median = 0.0;
  std::size_t articles = 0;
};

inline CitationSummary citations_per_article(const std::vector<PublicationRecord>& records, const std::string& group,
                                             std::optional<int> year = std::nullopt) {
  std::vector<double> counts;
  for (const auto& r : records) {
    if (r.group == group && (!year || r.year == *year)) counts.push_back(static_cast<double>(r.citations));
  }
  if (counts.empty()) throw ValidationError("no publication records match group '" + group + "'");
  return {stats::mean(counts), stats::median(counts), counts.size()};
}

struct PercentileResult {
  std::string id;
  int year = 0;
  double percentile = 0.0;
};

struct PercentileOutcome {
  std::vector<PercentileResult> results;
  std::vector<std::string> excluded;  // subject ids with no reference cohort
};

/// Citation percentile of each subject record within its publication-year
/// cohort: 100 * (below + 0.5 * tied) / size, where the cohort is the
/// reference records of that year plus the subject itself (midrank).
inline PercentileOutcome citation_percentiles(const std::vector<PublicationRecord>& subjects,
                                              const std::vector<PublicationRecord>& reference) {
  std::map<int, std::vector<const PublicationRecord*>> cohorts;
  for (const auto& r : reference) cohorts[r.year].push_back(&r);
  PercentileOutcome out;
  for (const auto& s : subjects) {
    auto it = cohorts.find(s.year);
    if (it == cohorts.end() || it->second.empty()) {
      out.excluded.push_back(s.id);
      continue;
    }
    double below = 0.0;
    double tied = 1.0;  // the subject itself
    double size = 1.0;
    for (const auto* r : it->second) {
      if (!s.id.empty() && r->id == s.id) continue;
      size += 1.0;
      if (r->citations < s.citations) below += 1.0;
      else if (r->citations == s.citations) tied += 1.0;
    }
    out.results.push_back({s.id, s.year, 100.0 * (below + 0.5 * tied) / size});
  }
  return out;
}

/// Largest h such that at least h counts are >= h.
inline std::uint64_t h_index(std::vector<std::uint64_t> counts) {
  std::sort(counts.begin(), counts.end(), std::greater<>());
  std::uint64_t h = 0;
  while (h < counts.size() && counts[h] >= h + 1) ++h;
  return h;
}

/// Citations received this year by the previous two years' articles,
/// divided by the number of those articles.
inline double impact_factor(std::uint64_t citations_to_prev_two_years, std::uint64_t articles_prev_two_years) {
  if (articles_prev_two_years == 0) throw ValidationError("impact factor needs a positive article count");
  return static_cast<double>(citations_to_prev_two_years) / static_cast<double>(articles_prev_two_years);
}

struct JournalMetrics {
  std::string journal;
  double impact_factor = 0.0;
  std::uint64_t h_index = 0;
};

/// Per-journal h-index from the citation counts of its records.
inline std::map<std::string, std::uint64_t> journal_h_indices(const std::vector<PublicationRecord>& records) {
  std::map<std::string, std::vector<std::uint64_t>> by_journal;
  for (const auto& r : records) by_journal[r.journal].push_back(r.citations);
  std::map<std::string, std::uint64_t> out;
  for (auto& [j, counts] : by_journal) out[j] = h_index(std::move(counts));
  return out;
}

struct WeightedJournalMeans {
  double impact_factor = 0.0;
  double h_index = 0.0;
  std::uint64_t total_output = 0;
};

/// Journal metrics averaged with each journal weighted by how many of a
/// group's articles it published.
inline WeightedJournalMeans output_weighted_means(const std::vector<JournalMetrics>& journals,
                                                  const std::map<std::string, std::uint64_t>& output) {
  WeightedJournalMeans out;
  double wif = 0.0;
  double wh = 0.0;
  for (const auto& j : journals) {
    auto it = output.find(j.journal);
    if (it == output.end() || it->second == 0) continue;
    const auto w = static_cast<double>(it->second);
    wif += w * j.impact_factor;
    wh += w * static_cast<double>(j.h_index);
    out.total_output += it->second;
  }
  if (out.total_output == 0) throw ValidationError("no journal output to weight by");
  out.impact_factor = wif / static_cast<double>(out.total_output);
  out.h_index = wh / static_cast<double>(out.total_output);
  return out;
}

/// Articles per journal for one group, for use as output weights.
inline std::map<std::string, std::uint64_t> journal_output(const std::vector<PublicationRecord>& records,
                                                          const std::string& group) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& r : records) {
    if (r.group == group) ++out[r.journal];
  }
  return out;
}

}  // namespace crowdlab::scimetrics
