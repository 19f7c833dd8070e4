#pragma once

// Probation gate, agreement-based vote weights, tiered consensus and a
// gold-standard confusion corrector.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crowdlab/crowd_model.hpp"
#include "crowdlab/error.hpp"

namespace crowdlab {

// ---------------------------------------------------------------------------
// Probation

enum class Verdict { pass, fail, provisional };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::provisional: return "provisional";
  }
  return "?";
}

struct ProbationEntry {
  std::size_t correct = 0;  // within the first `window` gold items
  std::size_t seen = 0;     // gold items seen, capped at `window`
  Verdict verdict = Verdict::provisional;
};

struct ProbationReport {
  std::map<AnnotatorId, ProbationEntry> entries;
  std::vector<std::string> warnings;

  std::size_t count(Verdict v) const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [v](const auto& e) { return e.second.verdict == v; }));
  }
};

struct ProbationOutcome {
  ProbationReport report;
  ClassificationLog filtered;     // live records of passing annotators
  ClassificationLog quarantined;  // live records of provisional annotators
};

namespace detail {

inline std::unordered_map<SubjectId, const Subject*> index_subjects(std::span<const Subject> subjects) {
  std::unordered_map<SubjectId, const Subject*> index;
  index.reserve(subjects.size());
  for (const auto& s : subjects) index.emplace(s.id, &s);
  return index;
}

inline const Subject& lookup(const std::unordered_map<SubjectId, const Subject*>& index,
                             const SubjectId& id) {
  auto it = index.find(id);
  if (it == index.end()) throw ValidationError("record references unknown subject " + id);
  return *it->second;
}

}  // namespace detail

/// Screens annotators on their first `policy.window` gold items.
///
/// Passing requires at least `pass_threshold` correct (inclusive). Failing
/// annotators lose every record. Annotators who have not yet seen a full
/// window are provisional and their live records go to the quarantine log.
/// Gold records never reach the filtered log. With no gold subjects at all
/// the gate cannot run: everyone stays provisional and the live log passes
/// through unchanged.
inline ProbationOutcome probation_filter(const ClassificationLog& log, std::span<const Subject> subjects,
                                         const ProbationPolicy& policy) {
  if (policy.pass_threshold > policy.window) {
    throw ValidationError("pass_threshold exceeds window");
  }
  const auto index = detail::index_subjects(subjects);
  const bool any_gold = std::any_of(subjects.begin(), subjects.end(), [](const Subject& s) { return s.is_gold; });

  ProbationOutcome out;
  auto& entries = out.report.entries;

  // Gold records in seq order per annotator.
  std::map<AnnotatorId, std::vector<std::pair<std::uint64_t, bool>>> gold_results;
  for (const auto& r : log.records) {
    entries.try_emplace(r.annotator_id);
    const Subject& s = detail::lookup(index, r.subject_id);
    if (s.is_gold) gold_results[r.annotator_id].emplace_back(r.seq, r.label == s.true_class);
  }
  for (auto& [id, results] : gold_results) {
    std::sort(results.begin(), results.end());
    auto& e = entries[id];
    e.seen = std::min(results.size(), policy.window);
    for (std::size_t i = 0; i < e.seen; ++i) e.correct += results[i].second ? 1 : 0;
  }
  for (auto& [id, e] : entries) {
    if (!any_gold || e.seen < policy.window) {
      e.verdict = Verdict::provisional;
    } else {
      e.verdict = e.correct >= policy.pass_threshold ? Verdict::pass : Verdict::fail;
    }
  }

  if (!any_gold) {
    out.report.warnings.emplace_back("no gold subjects: probation gate disabled, all annotators provisional");
  }
  for (const auto& r : log.records) {
    const Subject& s = detail::lookup(index, r.subject_id);
    if (s.is_gold) continue;
    const Verdict v = entries.at(r.annotator_id).verdict;
    if (!any_gold || v == Verdict::pass) {
      out.filtered.records.push_back(r);
    } else if (v == Verdict::provisional) {
      out.quarantined.records.push_back(r);
    }
  }
  return out;
}

/// Applies probation verdicts to annotator statuses.
inline void apply_verdicts(std::vector<Annotator>& annotators, const ProbationReport& report) {
  for (auto& a : annotators) {
    auto it = report.entries.find(a.id);
    if (it == report.entries.end()) continue;
    switch (it->second.verdict) {
      case Verdict::pass: a.set_status(AnnotatorStatus::active); break;
      case Verdict::fail: a.set_status(AnnotatorStatus::filtered); break;
      case Verdict::provisional: a.set_status(AnnotatorStatus::provisional); break;
    }
  }
}

// ---------------------------------------------------------------------------
// Consensus weights

enum class WeightMode {
  /// partial = (# others agreeing on this subject) / (subjects classified by k)
  per_annotator_total,
  /// partial = (# others agreeing on this subject) / (# others on this subject)
  agreement_fraction,
};

struct WeightTable {
  std::map<AnnotatorId, double> weights;
  std::vector<std::string> warnings;

  /// Annotators absent from the table weigh 0.
  double weight(const AnnotatorId& id) const {
    auto it = weights.find(id);
    return it == weights.end() ? 0.0 : it->second;
  }

  double mean() const {
    if (weights.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [id, w] : weights) sum += w;
    return sum / static_cast<double>(weights.size());
  }
};

/// Agreement-based vote weights, rescaled to mean 1.
///
/// For every record (k, x, F) the partial weight is the number of other
/// annotators who also labelled x as F, divided by the number of subjects k
/// classified (or, in `agreement_fraction` mode, by the number of other
/// annotators of x). A volunteer's raw weight is the sum of their partials.
/// If every raw weight is zero the table falls back to all ones.
inline WeightTable user_weights(const ClassificationLog& log,
                                WeightMode mode = WeightMode::per_annotator_total) {
  WeightTable table;
  if (log.empty()) return table;

  std::unordered_map<SubjectId, std::map<ClassLabel, std::size_t>> votes;
  std::unordered_map<SubjectId, std::size_t> voters;
  std::map<AnnotatorId, std::size_t> classified;
  for (const auto& r : log.records) {
    ++votes[r.subject_id][r.label];
    ++voters[r.subject_id];
    ++classified[r.annotator_id];
  }

  std::map<AnnotatorId, double> raw;
  for (const auto& [id, n] : classified) raw[id] = 0.0;
  for (const auto& r : log.records) {
    const double agree = static_cast<double>(votes[r.subject_id][r.label] - 1);
    double denom = 0.0;
    if (mode == WeightMode::per_annotator_total) {
      denom = static_cast<double>(classified[r.annotator_id]);
    } else {
      denom = static_cast<double>(voters[r.subject_id] - 1);
    }
    if (denom > 0.0) raw[r.annotator_id] += agree / denom;
  }

  double sum = 0.0;
  for (const auto& [id, w] : raw) sum += w;
  if (sum <= 0.0) {
    table.warnings.emplace_back("no inter-annotator agreement in log: all weights set to 1");
    for (const auto& [id, w] : raw) table.weights[id] = 1.0;
    return table;
  }
  const double mean = sum / static_cast<double>(raw.size());
  for (const auto& [id, w] : raw) table.weights[id] = w / mean;
  return table;
}

// ---------------------------------------------------------------------------
// Aggregation

enum class Tier { none, clean, superclean };

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::none: return "none";
    case Tier::clean: return "clean";
    case Tier::superclean: return "superclean";
  }
  return "?";
}

/// Inclusive thresholds: fraction >= superclean is superclean, and so on.
inline Tier assign_tier(double fraction, const Tiers& tiers) {
  if (fraction >= tiers.superclean) return Tier::superclean;
  if (fraction >= tiers.clean) return Tier::clean;
  return Tier::none;
}

struct AggregateResult {
  SubjectId subject_id;
  std::vector<std::size_t> histogram;       // raw vote count per label
  std::vector<double> weighted_histogram;   // summed weight per label
  ClassLabel consensus_label = 0;           // weighted argmax, ties to smallest label
  ClassLabel consensus_label_unweighted = 0;
  double consensus_fraction = 0.0;          // modal weighted mass / total weighted mass
  Tier tier = Tier::none;

  std::size_t votes() const {
    std::size_t n = 0;
    for (auto c : histogram) n += c;
    return n;
  }
};

struct AggregateOutcome {
  std::vector<AggregateResult> results;  // ordered by subject id
  std::vector<std::string> warnings;
};

namespace detail {

template <typename T>
ClassLabel argmax_low(const std::vector<T>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<ClassLabel>(best);
}

inline void settle(AggregateResult& r, const Tiers& tiers) {
  r.consensus_label_unweighted = argmax_low(r.histogram);
  double total = 0.0;
  for (double w : r.weighted_histogram) total += w;
  if (total > 0.0) {
    r.consensus_label = argmax_low(r.weighted_histogram);
    r.consensus_fraction = r.weighted_histogram[r.consensus_label] / total;
  } else {
    // Every voter weighs zero: no weighted consensus exists.
    r.consensus_label = r.consensus_label_unweighted;
    r.consensus_fraction = 0.0;
  }
  r.tier = assign_tier(r.consensus_fraction, tiers);
}

}  // namespace detail

/// Per-subject consensus. Without a weight table every vote weighs 1.
/// Subjects listed in `expected` that received no votes are reported as
/// warnings and left out of the results.
inline AggregateOutcome aggregate(const ClassificationLog& log, std::size_t n_classes,
                                  const WeightTable* weights, const Tiers& tiers,
                                  std::span<const Subject> expected = {}) {
  if (!(tiers.clean > 0.0 && tiers.clean <= tiers.superclean && tiers.superclean <= 1.0)) {
    throw ValidationError("tiers must satisfy 0 < clean <= superclean <= 1");
  }
  AggregateOutcome out;
  std::map<SubjectId, AggregateResult> by_subject;
  for (const auto& r : log.records) {
    if (r.label >= n_classes) {
      throw ValidationError("label " + std::to_string(r.label) + " out of range for subject " + r.subject_id);
    }
    auto [it, fresh] = by_subject.try_emplace(r.subject_id);
    auto& agg = it->second;
    if (fresh) {
      agg.subject_id = r.subject_id;
      agg.histogram.assign(n_classes, 0);
      agg.weighted_histogram.assign(n_classes, 0.0);
    }
    ++agg.histogram[r.label];
    agg.weighted_histogram[r.label] += weights ? weights->weight(r.annotator_id) : 1.0;
  }
  for (const auto& s : expected) {
    if (s.is_gold) continue;
    if (!by_subject.contains(s.id)) out.warnings.push_back("subject " + s.id + " received no votes");
  }
  out.results.reserve(by_subject.size());
  for (auto& [id, agg] : by_subject) {
    detail::settle(agg, tiers);
    out.results.push_back(std::move(agg));
  }
  return out;
}

inline AggregateOutcome aggregate(const ClassificationLog& log, std::size_t n_classes, const Tiers& tiers,
                                  std::span<const Subject> expected = {}) {
  return aggregate(log, n_classes, nullptr, tiers, expected);
}

inline AggregateOutcome aggregate(const ClassificationLog& log, std::size_t n_classes,
                                  const WeightTable& weights, const Tiers& tiers,
                                  std::span<const Subject> expected = {}) {
  return aggregate(log, n_classes, &weights, tiers, expected);
}

// ---------------------------------------------------------------------------
// Bias estimation and correction

inline constexpr double kMaxConditionNumber = 1e8;

struct ConfusionEstimate {
  std::size_t classes = 0;
  std::vector<double> matrix;            // row-major K x K
  std::vector<std::size_t> row_samples;  // gold votes per true class

  double at(std::size_t truth, std::size_t label) const { return matrix[truth * classes + label]; }
  bool estimated(std::size_t truth) const { return row_samples[truth] > 0; }
};

/// Pools gold-item votes into a row-normalized confusion matrix.
/// Rows without samples are left as zero and flagged unestimated.
inline ConfusionEstimate estimate_bias(const ClassificationLog& log, std::span<const Subject> subjects,
                                       std::size_t n_classes) {
  const auto index = detail::index_subjects(subjects);
  ConfusionEstimate est{n_classes, std::vector<double>(n_classes * n_classes, 0.0),
                        std::vector<std::size_t>(n_classes, 0)};
  std::vector<std::size_t> counts(n_classes * n_classes, 0);
  for (const auto& r : log.records) {
    const Subject& s = detail::lookup(index, r.subject_id);
    if (!s.is_gold) continue;
    if (s.true_class >= n_classes || r.label >= n_classes) {
      throw ValidationError("gold record out of class range for subject " + s.id);
    }
    ++counts[s.true_class * n_classes + r.label];
    ++est.row_samples[s.true_class];
  }
  std::size_t total = 0;
  for (auto c : est.row_samples) total += c;
  if (total == 0) throw ValidationError("bias estimation needs at least one gold record");
  for (std::size_t t = 0; t < n_classes; ++t) {
    if (est.row_samples[t] == 0) continue;
    for (std::size_t l = 0; l < n_classes; ++l) {
      est.matrix[t * n_classes + l] =
          static_cast<double>(counts[t * n_classes + l]) / static_cast<double>(est.row_samples[t]);
    }
  }
  return est;
}

struct CorrectionOutcome {
  std::vector<AggregateResult> results;
  bool fallback = false;  // estimate was ill-conditioned; results are unchanged
  double condition_number = 0.0;
  std::vector<std::string> warnings;
};

/// Undoes systematic confusion in each subject's weighted histogram.
///
/// The observed label mass h relates to the true-class mass x by
/// h = x * M, so x is recovered with the pseudo-inverse of M. Unestimated
/// rows are taken as identity rows. Negative recovered mass is clipped. If
/// the condition number of M exceeds 1e8 the identity is used instead.
inline CorrectionOutcome apply_correction(const std::vector<AggregateResult>& results,
                                          const ConfusionEstimate& estimate, const Tiers& tiers) {
  const auto k = static_cast<Eigen::Index>(estimate.classes);
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index t = 0; t < k; ++t) {
    for (Eigen::Index l = 0; l < k; ++l) {
      const auto tu = static_cast<std::size_t>(t);
      m(t, l) = estimate.estimated(tu) ? estimate.at(tu, static_cast<std::size_t>(l)) : (t == l ? 1.0 : 0.0);
    }
  }
  CorrectionOutcome out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  out.condition_number = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < estimate.classes; ++t) {
    if (!estimate.estimated(t)) {
      out.warnings.push_back("class " + std::to_string(t) + " has no gold samples; treated as unbiased");
    }
  }
  if (!(out.condition_number <= kMaxConditionNumber)) {
    out.fallback = true;
    out.warnings.emplace_back("confusion estimate ill-conditioned; correction skipped");
    out.results = results;
    return out;
  }
  const Eigen::MatrixXd left_inverse = m.completeOrthogonalDecomposition().pseudoInverse();

  out.results.reserve(results.size());
  for (const auto& r : results) {
    if (static_cast<Eigen::Index>(r.weighted_histogram.size()) != k) {
      throw ValidationError("histogram size does not match the confusion estimate for subject " + r.subject_id);
    }
    Eigen::RowVectorXd observed(k);
    for (Eigen::Index l = 0; l < k; ++l) observed(l) = r.weighted_histogram[static_cast<std::size_t>(l)];
    const Eigen::RowVectorXd recovered = observed * left_inverse;
    AggregateResult c = r;
    for (Eigen::Index t = 0; t < k; ++t) {
      c.weighted_histogram[static_cast<std::size_t>(t)] = std::max(0.0, recovered(t));
    }
    double total = 0.0;
    for (double w : c.weighted_histogram) total += w;
    if (total > 0.0) {
      c.consensus_label = detail::argmax_low(c.weighted_histogram);
      c.consensus_fraction = c.weighted_histogram[c.consensus_label] / total;
    } else {
      c.consensus_fraction = 0.0;
    }
    c.tier = assign_tier(c.consensus_fraction, tiers);
    out.results.push_back(std::move(c));
  }
  return out;
}

}  // namespace crowdlab
