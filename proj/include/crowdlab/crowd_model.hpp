#pragma once

// Simulated volunteer population, subjects, and classification logs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/rng.hpp"

namespace crowdlab {

using AnnotatorId = std::string;
using SubjectId = std::string;
using ClassLabel = std::uint32_t;

inline constexpr double kStochasticTolerance = 1e-9;

/// K x K row-stochastic matrix; at(t, l) is P(emit l | true class t).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;

  ConfusionMatrix(std::size_t classes, std::vector<double> entries)
      : classes_(classes), entries_(std::move(entries)) {
    validate();
  }

  static ConfusionMatrix identity(std::size_t classes) {
    return from_accuracy(classes, 1.0);
  }

  /// Accuracy on the diagonal, the remainder spread evenly off it.
  static ConfusionMatrix from_accuracy(std::size_t classes, double accuracy) {
    if (classes < 1) throw ValidationError("confusion matrix needs at least one class");
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
      throw ValidationError("accuracy must lie in [0, 1], got " + std::to_string(accuracy));
    }
    if (classes == 1 && accuracy != 1.0) {
      throw ValidationError("a single-class confusion matrix must have accuracy 1");
    }
    const double off = classes == 1 ? 0.0 : (1.0 - accuracy) / static_cast<double>(classes - 1);
    std::vector<double> entries(classes * classes, off);
    for (std::size_t t = 0; t < classes; ++t) entries[t * classes + t] = accuracy;
    return ConfusionMatrix(classes, std::move(entries));
  }

  static ConfusionMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t k = rows.size();
    std::vector<double> entries;
    entries.reserve(k * k);
    for (const auto& row : rows) {
      if (row.size() != k) throw ValidationError("confusion matrix must be square");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    return ConfusionMatrix(k, std::move(entries));
  }

  std::size_t classes() const noexcept { return classes_; }
  double at(std::size_t truth, std::size_t label) const { return entries_[truth * classes_ + label]; }

  std::vector<double> row(std::size_t truth) const {
    auto first = entries_.begin() + static_cast<std::ptrdiff_t>(truth * classes_);
    return {first, first + static_cast<std::ptrdiff_t>(classes_)};
  }

  /// Mean of the diagonal.
  double mean_accuracy() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < classes_; ++t) sum += at(t, t);
    return classes_ == 0 ? 0.0 : sum / static_cast<double>(classes_);
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  void validate() const {
    if (classes_ < 1) throw ValidationError("confusion matrix needs at least one class");
    if (entries_.size() != classes_ * classes_) {
      throw ValidationError("confusion matrix has " + std::to_string(entries_.size()) +
                            " entries, expected " + std::to_string(classes_ * classes_));
    }
    for (std::size_t t = 0; t < classes_; ++t) {
      double sum = 0.0;
      for (std::size_t l = 0; l < classes_; ++l) {
        const double v = at(t, l);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ValidationError("confusion entry outside [0, 1] in row " + std::to_string(t));
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kStochasticTolerance) {
        throw ValidationError("confusion row " + std::to_string(t) + " sums to " + std::to_string(sum));
      }
    }
  }

  std::size_t classes_ = 0;
  std::vector<double> entries_;
};

enum class AnnotatorStatus { provisional, active, filtered };

inline const char* to_string(AnnotatorStatus s) {
  switch (s) {
    case AnnotatorStatus::provisional: return "provisional";
    case AnnotatorStatus::active: return "active";
    case AnnotatorStatus::filtered: return "filtered";
  }
  return "?";
}

struct Annotator {
  AnnotatorId id;
  ConfusionMatrix confusion;
  AnnotatorStatus status = AnnotatorStatus::provisional;
  double weight = 1.0;

  /// Filtered annotators carry zero weight.
  void set_status(AnnotatorStatus s) {
    status = s;
    if (s == AnnotatorStatus::filtered) weight = 0.0;
  }
};

struct Subject {
  SubjectId id;
  ClassLabel true_class = 0;
  bool is_gold = false;

  bool operator==(const Subject&) const = default;
};

struct ClassificationRecord {
  AnnotatorId annotator_id;
  SubjectId subject_id;
  ClassLabel label = 0;
  std::uint64_t seq = 0;

  bool operator==(const ClassificationRecord&) const = default;
};

/// Ordered classification records; the single source of observations.
struct ClassificationLog {
  std::vector<ClassificationRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  bool operator==(const ClassificationLog&) const = default;

  /// Checks label range, pair uniqueness and per-annotator seq monotonicity.
  void validate(std::size_t classes) const {
    std::set<std::pair<AnnotatorId, SubjectId>> pairs;
    std::unordered_map<AnnotatorId, std::uint64_t> last_seq;
    for (const auto& r : records) {
      if (r.label >= classes) {
        throw ValidationError("label " + std::to_string(r.label) + " out of range for " +
                              std::to_string(classes) + " classes");
      }
      if (!pairs.emplace(r.annotator_id, r.subject_id).second) {
        throw ValidationError("annotator " + r.annotator_id + " classified subject " + r.subject_id +
                              " twice");
      }
      auto [it, fresh] = last_seq.try_emplace(r.annotator_id, r.seq);
      if (!fresh) {
        if (r.seq <= it->second) {
          throw ValidationError("seq not strictly increasing for annotator " + r.annotator_id);
        }
        it->second = r.seq;
      }
    }
  }
};

/// One component of the skill mixture: a scalar accuracy or a full matrix.
struct SkillComponent {
  double fraction = 0.0;
  std::optional<double> accuracy;
  std::optional<ConfusionMatrix> confusion;

  ConfusionMatrix matrix(std::size_t classes) const {
    if (confusion) {
      if (confusion->classes() != classes) {
        throw ValidationError("skill confusion matrix is " + std::to_string(confusion->classes()) +
                              "x" + std::to_string(confusion->classes()) + ", expected " +
                              std::to_string(classes));
      }
      return *confusion;
    }
    if (!accuracy) throw ValidationError("skill component needs an accuracy or a confusion matrix");
    return ConfusionMatrix::from_accuracy(classes, *accuracy);
  }
};

struct ProbationPolicy {
  std::size_t window = 15;
  std::size_t pass_threshold = 11;
};

struct Tiers {
  double clean = 0.80;
  double superclean = 0.95;
};

struct Scenario {
  std::size_t n_classes = 2;
  std::size_t n_subjects = 0;  // live (scientific) subjects; gold items are extra
  std::size_t gold_count = 0;
  std::size_t n_annotators = 0;
  std::vector<SkillComponent> skill_mixture;
  std::size_t redundancy = 38;
  ProbationPolicy probation;
  Tiers tiers;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_classes < 1) throw ValidationError("n_classes must be at least 1");
    if (n_annotators < 1) throw ValidationError("n_annotators must be at least 1");
    if (skill_mixture.empty()) throw ValidationError("skill_mixture must not be empty");
    double total = 0.0;
    for (const auto& c : skill_mixture) {
      if (!(c.fraction >= 0.0)) throw ValidationError("skill_mixture fraction must be non-negative");
      total += c.fraction;
      (void)c.matrix(n_classes);
    }
    if (std::abs(total - 1.0) > kStochasticTolerance) {
      throw ValidationError("skill_mixture fractions sum to " + std::to_string(total) + ", expected 1");
    }
    if (redundancy < 1) throw ValidationError("redundancy must be at least 1");
    if (probation.window < 1) throw ValidationError("probation.window must be at least 1");
    if (probation.pass_threshold > probation.window) {
      throw ValidationError("probation.pass_threshold exceeds probation.window");
    }
    if (!(tiers.clean > 0.0 && tiers.clean <= tiers.superclean && tiers.superclean <= 1.0)) {
      throw ValidationError("tiers must satisfy 0 < clean <= superclean <= 1");
    }
  }

  /// Feasibility of the assignment plan, beyond structural validity.
  void check_feasible() const {
    validate();
    if (redundancy > n_annotators) {
      throw ConfigurationError("redundancy " + std::to_string(redundancy) + " exceeds n_annotators " +
                               std::to_string(n_annotators));
    }
    if (gold_count > 0 && gold_count < probation.window) {
      throw ConfigurationError("gold_count " + std::to_string(gold_count) +
                               " cannot fill a probation window of " +
                               std::to_string(probation.window) + " distinct gold items");
    }
  }
};

namespace detail {

inline std::string padded_id(char prefix, std::size_t index, std::size_t count) {
  std::size_t width = 1;
  for (std::size_t c = count > 0 ? count - 1 : 0; c >= 10; c /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

// Stream tags keep the substreams of different stages disjoint.
enum StreamTag : std::uint64_t {
  kPopulationStream = 1,
  kSubjectStream = 2,
  kGoldStream = 3,
  kAssignStream = 4,
  kLabelStream = 5,
};

}  // namespace detail

/// Largest-remainder apportionment of `total` seats over `fractions`.
/// Ties in the remainder go to the earlier component.
inline std::vector<std::size_t> apportion(const std::vector<double>& fractions, std::size_t total) {
  std::vector<std::size_t> counts(fractions.size(), 0);
  std::vector<double> remainders(fractions.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double quota = fractions[i] * static_cast<double>(total);
    // Snap quotas that are integral up to rounding noise (0.33 * 100).
    const double snapped = std::floor(quota + 1e-9);
    counts[i] = static_cast<std::size_t>(snapped);
    remainders[i] = std::max(0.0, quota - snapped);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < total && !order.empty(); ++i, ++assigned) {
    ++counts[order[i % order.size()]];
  }
  while (assigned > total) {
    // Only reachable if the fractions overshoot 1 within tolerance.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

/// Builds the annotator pool; skill components are apportioned exactly and
/// then shuffled over annotator ids with `rng_seed`.
inline std::vector<Annotator> build_population(const Scenario& scenario, std::uint64_t rng_seed) {
  scenario.validate();
  std::vector<double> fractions;
  for (const auto& c : scenario.skill_mixture) fractions.push_back(c.fraction);
  const auto counts = apportion(fractions, scenario.n_annotators);

  std::vector<std::size_t> component_of;
  component_of.reserve(scenario.n_annotators);
  for (std::size_t c = 0; c < counts.size(); ++c) component_of.insert(component_of.end(), counts[c], c);

  auto rng = CounterRng::derive(rng_seed, detail::kPopulationStream);
  for (std::size_t i = component_of.size(); i > 1; --i) {
    std::swap(component_of[i - 1], component_of[rng.below(i)]);
  }

  std::vector<ConfusionMatrix> matrices;
  for (const auto& c : scenario.skill_mixture) matrices.push_back(c.matrix(scenario.n_classes));

  std::vector<Annotator> pool;
  pool.reserve(scenario.n_annotators);
  for (std::size_t i = 0; i < scenario.n_annotators; ++i) {
    pool.push_back(Annotator{detail::padded_id('a', i, scenario.n_annotators),
                             matrices[component_of[i]], AnnotatorStatus::provisional, 1.0});
  }
  return pool;
}

/// Draws one label from row `confusion[true_class]`.
inline ClassLabel simulate_classification(const Annotator& annotator, const Subject& subject,
                                          CounterRng& rng) {
  const auto& m = annotator.confusion;
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t l = 0; l < m.classes(); ++l) {
    const double p = m.at(subject.true_class, l);
    if (p <= 0.0) continue;
    last_positive = l;
    cumulative += p;
    if (u < cumulative) return static_cast<ClassLabel>(l);
  }
  // Row sums may fall short of 1 by rounding; the residue goes to the last
  // label with positive mass.
  return static_cast<ClassLabel>(last_positive);
}

struct ScenarioRun {
  std::vector<Annotator> annotators;
  std::vector<Subject> subjects;  // gold first, then live
  ClassificationLog log;
};

/// Generates the population, subjects and the full classification log.
///
/// Each annotator's first `probation.window` tasks are distinct gold items.
/// Each live subject then receives exactly `redundancy` votes from distinct
/// annotators drawn uniformly without replacement. Labels are drawn from the
/// substream keyed by (annotator index, seq), so the log is a pure function
/// of the scenario.
inline ScenarioRun run_scenario(const Scenario& scenario) {
  scenario.check_feasible();
  const std::uint64_t seed = scenario.seed;
  ScenarioRun run;
  run.annotators = build_population(scenario, seed);

  const std::size_t n_subjects = scenario.gold_count + scenario.n_subjects;
  run.subjects.reserve(n_subjects);
  for (std::size_t g = 0; g < scenario.gold_count; ++g) {
    auto rng = CounterRng::derive(seed, detail::kSubjectStream, 0, g);
    run.subjects.push_back(Subject{detail::padded_id('g', g, scenario.gold_count),
                                   static_cast<ClassLabel>(rng.below(scenario.n_classes)), true});
  }
  for (std::size_t s = 0; s < scenario.n_subjects; ++s) {
    auto rng = CounterRng::derive(seed, detail::kSubjectStream, 1, s);
    run.subjects.push_back(Subject{detail::padded_id('s', s, scenario.n_subjects),
                                   static_cast<ClassLabel>(rng.below(scenario.n_classes)), false});
  }

  // tasks[a] lists subject indices in the order annotator a sees them.
  std::vector<std::vector<std::size_t>> tasks(scenario.n_annotators);
  if (scenario.gold_count > 0) {
    std::vector<std::size_t> gold(scenario.gold_count);
    for (std::size_t a = 0; a < scenario.n_annotators; ++a) {
      std::iota(gold.begin(), gold.end(), std::size_t{0});
      auto rng = CounterRng::derive(seed, detail::kGoldStream, a);
      for (std::size_t i = 0; i < scenario.probation.window; ++i) {
        std::swap(gold[i], gold[i + rng.below(gold.size() - i)]);
        tasks[a].push_back(gold[i]);
      }
    }
  }
  std::vector<std::size_t> pool(scenario.n_annotators);
  for (std::size_t s = 0; s < scenario.n_subjects; ++s) {
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    auto rng = CounterRng::derive(seed, detail::kAssignStream, s);
    for (std::size_t i = 0; i < scenario.redundancy; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      tasks[pool[i]].push_back(scenario.gold_count + s);
    }
  }

  std::size_t total = 0;
  for (const auto& t : tasks) total += t.size();
  run.log.records.reserve(total);
  for (std::size_t a = 0; a < scenario.n_annotators; ++a) {
    const auto& annotator = run.annotators[a];
    for (std::size_t seq = 0; seq < tasks[a].size(); ++seq) {
      const auto& subject = run.subjects[tasks[a][seq]];
      auto rng = CounterRng::derive(seed, detail::kLabelStream, a, seq);
      run.log.records.push_back(ClassificationRecord{annotator.id, subject.id,
                                                     simulate_classification(annotator, subject, rng),
                                                     seq});
    }
  }
  return run;
}

}  // namespace crowdlab
