#pragma once

// End-to-end run: generate -> probation filter -> weight -> aggregate ->
// bias-correct -> report. Every stage's output is persisted so any later
// stage can be re-run from files.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdlab/crowd_model.hpp"
#include "crowdlab/io.hpp"
#include "crowdlab/quality_control.hpp"

namespace crowdlab {

struct TierCounts {
  std::size_t none = 0;
  std::size_t clean = 0;
  std::size_t superclean = 0;

  std::size_t total() const { return none + clean + superclean; }
  std::size_t selected() const { return clean + superclean; }
};

struct AccuracySummary {
  double overall = 0.0;
  double clean_only = 0.0;
  double superclean_only = 0.0;
  double clean_and_superclean = 0.0;
};

struct RunReport {
  Scenario scenario;
  WeightMode weight_mode = WeightMode::per_annotator_total;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t provisional = 0;
  std::size_t records_total = 0;
  std::size_t records_kept = 0;
  std::size_t records_quarantined = 0;
  std::size_t subjects_aggregated = 0;
  TierCounts weighted_tiers;
  TierCounts unweighted_tiers;
  AccuracySummary weighted_accuracy;
  AccuracySummary unweighted_accuracy;
  double modal_agreement = 0.0;
  std::size_t weights_count = 0;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double weight_mean = 0.0;
  bool correction_applied = false;
  double correction_condition_number = 0.0;
  double corrected_accuracy = 0.0;
  std::vector<std::string> warnings;
};

/// Everything downstream of the classification log.
struct AggregationStage {
  ProbationOutcome probation;
  WeightTable weights;
  AggregateOutcome weighted;
  AggregateOutcome unweighted;
  std::optional<CorrectionOutcome> correction;
  RunReport report;
};

struct PipelineResult {
  ScenarioRun run;
  AggregationStage stage;
};

namespace detail {

inline TierCounts count_tiers(const std::vector<AggregateResult>& results) {
  TierCounts c;
  for (const auto& r : results) {
    switch (r.tier) {
      case Tier::none: ++c.none; break;
      case Tier::clean: ++c.clean; break;
      case Tier::superclean: ++c.superclean; break;
    }
  }
  return c;
}

inline double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline AccuracySummary accuracy(const std::vector<AggregateResult>& results,
                                const std::unordered_map<SubjectId, const Subject*>& truth) {
  std::size_t all = 0, all_ok = 0, clean = 0, clean_ok = 0, super = 0, super_ok = 0;
  for (const auto& r : results) {
    const bool ok = lookup(truth, r.subject_id).true_class == r.consensus_label;
    ++all;
    all_ok += ok;
    if (r.tier == Tier::clean) {
      ++clean;
      clean_ok += ok;
    } else if (r.tier == Tier::superclean) {
      ++super;
      super_ok += ok;
    }
  }
  return {ratio(all_ok, all), ratio(clean_ok, clean), ratio(super_ok, super),
          ratio(clean_ok + super_ok, clean + super)};
}

}  // namespace detail

/// Runs every stage after generation. `subjects` carries ground truth, which
/// is used for the probation gate (gold items) and for scoring the report.
inline AggregationStage run_aggregation(const Scenario& scenario, const ClassificationLog& log,
                                        std::span<const Subject> subjects,
                                        WeightMode mode = WeightMode::per_annotator_total) {
  AggregationStage st;
  st.probation = probation_filter(log, subjects, scenario.probation);
  st.weights = user_weights(st.probation.filtered, mode);
  st.weighted = aggregate(st.probation.filtered, scenario.n_classes, st.weights, scenario.tiers, subjects);
  st.unweighted = aggregate(st.probation.filtered, scenario.n_classes, scenario.tiers);

  // Gold votes of annotators who passed probation calibrate the corrector.
  ClassificationLog calibration;
  const auto index = detail::index_subjects(subjects);
  for (const auto& r : log.records) {
    if (!detail::lookup(index, r.subject_id).is_gold) continue;
    if (st.probation.report.entries.at(r.annotator_id).verdict == Verdict::pass) calibration.records.push_back(r);
  }

  auto& rep = st.report;
  rep.scenario = scenario;
  rep.weight_mode = mode;
  rep.passed = st.probation.report.count(Verdict::pass);
  rep.failed = st.probation.report.count(Verdict::fail);
  rep.provisional = st.probation.report.count(Verdict::provisional);
  rep.records_total = log.size();
  rep.records_kept = st.probation.filtered.size();
  rep.records_quarantined = st.probation.quarantined.size();
  rep.subjects_aggregated = st.weighted.results.size();
  rep.weighted_tiers = detail::count_tiers(st.weighted.results);
  rep.unweighted_tiers = detail::count_tiers(st.unweighted.results);
  rep.weighted_accuracy = detail::accuracy(st.weighted.results, index);
  rep.unweighted_accuracy = detail::accuracy(st.unweighted.results, index);

  std::size_t agree = 0;
  for (const auto& r : st.weighted.results) agree += r.consensus_label == r.consensus_label_unweighted;
  rep.modal_agreement = detail::ratio(agree, st.weighted.results.size());

  rep.weights_count = st.weights.weights.size();
  if (!st.weights.weights.empty()) {
    rep.weight_min = rep.weight_max = st.weights.weights.begin()->second;
    for (const auto& [id, w] : st.weights.weights) {
      rep.weight_min = std::min(rep.weight_min, w);
      rep.weight_max = std::max(rep.weight_max, w);
    }
    rep.weight_mean = st.weights.mean();
  }

  if (!calibration.empty() && !st.weighted.results.empty()) {
    const auto estimate = estimate_bias(calibration, subjects, scenario.n_classes);
    st.correction = apply_correction(st.weighted.results, estimate, scenario.tiers);
    rep.correction_applied = !st.correction->fallback;
    rep.correction_condition_number = st.correction->condition_number;
    rep.corrected_accuracy = detail::accuracy(st.correction->results, index).overall;
  } else {
    rep.warnings.emplace_back("no calibration gold votes: bias correction skipped");
  }

  for (const auto* list : {&st.probation.report.warnings, &st.weights.warnings, &st.weighted.warnings}) {
    rep.warnings.insert(rep.warnings.end(), list->begin(), list->end());
  }
  if (st.correction) {
    rep.warnings.insert(rep.warnings.end(), st.correction->warnings.begin(), st.correction->warnings.end());
  }
  return st;
}

inline PipelineResult run_pipeline(const Scenario& scenario, WeightMode mode = WeightMode::per_annotator_total) {
  PipelineResult out;
  out.run = run_scenario(scenario);
  out.stage = run_aggregation(scenario, out.run.log, out.run.subjects, mode);
  apply_verdicts(out.run.annotators, out.stage.probation.report);
  for (auto& a : out.run.annotators) {
    if (a.status == AnnotatorStatus::active) a.weight = out.stage.weights.weight(a.id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization

inline const char* to_string(WeightMode m) {
  return m == WeightMode::per_annotator_total ? "per_annotator_total" : "agreement_fraction";
}

inline io::json report_to_json(const RunReport& r) {
  using io::json;
  auto tiers = [](const TierCounts& t) {
    return json{{"none", t.none}, {"clean", t.clean}, {"superclean", t.superclean}};
  };
  auto acc = [](const AccuracySummary& a) {
    return json{{"overall", a.overall},
                {"clean_only", a.clean_only},
                {"superclean_only", a.superclean_only},
                {"clean_and_superclean", a.clean_and_superclean}};
  };
  return json{
      {"scenario", io::scenario_to_json(r.scenario)},
      {"seed", r.scenario.seed},
      {"weight_mode", to_string(r.weight_mode)},
      {"annotators", {{"passed", r.passed}, {"failed", r.failed}, {"provisional", r.provisional}}},
      {"records", {{"total", r.records_total}, {"kept", r.records_kept}, {"quarantined", r.records_quarantined}}},
      {"subjects_aggregated", r.subjects_aggregated},
      {"tiers", {{"weighted", tiers(r.weighted_tiers)}, {"unweighted", tiers(r.unweighted_tiers)}}},
      {"accuracy", {{"weighted", acc(r.weighted_accuracy)}, {"unweighted", acc(r.unweighted_accuracy)}}},
      {"modal_agreement", r.modal_agreement},
      {"weights", {{"count", r.weights_count}, {"min", r.weight_min}, {"max", r.weight_max}, {"mean", r.weight_mean}}},
      {"bias_correction",
       {{"applied", r.correction_applied},
        {"condition_number", r.correction_condition_number},
        {"corrected_accuracy", r.corrected_accuracy}}},
      {"warnings", r.warnings},
  };
}

inline std::string annotators_csv(const std::vector<Annotator>& annotators, const ProbationReport& probation) {
  std::string out = "annotator_id,status,probation_correct,weight\n";
  for (const auto& a : annotators) {
    auto it = probation.entries.find(a.id);
    const std::size_t correct = it == probation.entries.end() ? 0 : it->second.correct;
    out += a.id + ',' + to_string(a.status) + ',' + std::to_string(correct) + ',' + io::format_double(a.weight) + '\n';
  }
  return out;
}

/// Output file names inside a run directory.
struct RunFiles {
  static constexpr const char* log = "log.csv";
  static constexpr const char* subjects = "subjects.csv";
  static constexpr const char* annotators = "annotators.csv";
  static constexpr const char* weights = "weights.csv";
  static constexpr const char* aggregates = "aggregates.csv";
  static constexpr const char* unweighted = "aggregates_unweighted.csv";
  static constexpr const char* corrected = "aggregates_corrected.csv";
  static constexpr const char* report = "report.json";
  static constexpr const char* scenario = "scenario.json";
};

inline void write_generation(const std::filesystem::path& dir, const Scenario& scenario, const ScenarioRun& run) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / RunFiles::scenario, io::scenario_to_json(scenario).dump(2) + "\n");
  io::write_file(dir / RunFiles::log, io::log_csv(run.log));
  io::write_file(dir / RunFiles::subjects, io::subjects_csv(run.subjects));
}

inline void write_aggregation(const std::filesystem::path& dir, const AggregationStage& st) {
  std::filesystem::create_directories(dir);
  io::write_file(dir / RunFiles::weights, io::weights_csv(st.weights));
  io::write_file(dir / RunFiles::aggregates, io::aggregates_csv(st.weighted.results));
  io::write_file(dir / RunFiles::unweighted, io::aggregates_csv(st.unweighted.results));
  if (st.correction) io::write_file(dir / RunFiles::corrected, io::aggregates_csv(st.correction->results));
  io::write_file(dir / RunFiles::report, report_to_json(st.report).dump(2) + "\n");
}

inline void write_pipeline(const std::filesystem::path& dir, const PipelineResult& result) {
  write_generation(dir, result.stage.report.scenario, result.run);
  io::write_file(dir / RunFiles::annotators, annotators_csv(result.run.annotators, result.stage.probation.report));
  write_aggregation(dir, result.stage);
}

}  // namespace crowdlab
