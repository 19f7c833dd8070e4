// crowdlab command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crowdlab/crowdlab.hpp"

namespace fs = std::filesystem;
using crowdlab::io::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("CROWDLAB_OUT_DIR"); env && *env) return env;
  return "crowdlab-out";
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

crowdlab::WeightMode parse_weight_mode(const std::string& s) {
  if (s == "per_annotator_total" || s == "literal") return crowdlab::WeightMode::per_annotator_total;
  if (s == "agreement_fraction" || s == "fraction") return crowdlab::WeightMode::agreement_fraction;
  throw crowdlab::ValidationError("unknown weight mode '" + s + "'");
}

json ks_json(const crowdlab::stats::KsResult& r) {
  json out{{"statistic", r.statistic}, {"p", r.p_value}, {"method", crowdlab::stats::to_string(r.method)}};
  if (r.permutations > 0) out["permutations"] = r.permutations;
  return out;
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (!cell.empty()) out.push_back(crowdlab::io::parse_number<std::size_t>(cell, "signal index"));
  }
  return out;
}

// Options shared by several subcommands live here so CLI11 can bind to them.
struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string weight_mode = "per_annotator_total";
  std::string log;
  std::string subjects;

  std::uint64_t jury_n = 1;
  double jury_p = 0.5;
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> grid_n;
  std::vector<double> grid_p;
  std::optional<double> target;

  std::string model;
  std::string small_set;
  std::string large_set;
  std::uint64_t mc_samples = 0;

  std::string formula;
  std::string world;
  std::string group;

  std::string sample_a;
  std::string sample_b;
  double normal_mean = 50.0;
  double normal_sd = 16.67;

  std::string catalog;
  std::string records;
  std::string pub_group;
  std::optional<int> year;
  std::string reference_group;
  std::string journal;
  std::uint64_t cites = 0;
  std::uint64_t articles = 0;
};

int cmd_simulate(const Options& o) {
  auto scenario = crowdlab::io::read_scenario(o.scenario);
  if (o.seed) scenario.seed = *o.seed;
  const auto run = crowdlab::run_scenario(scenario);
  const auto dir = output_dir(o.out);
  crowdlab::write_generation(dir, scenario, run);
  std::cout << "wrote " << run.log.size() << " records to " << (dir / crowdlab::RunFiles::log).string() << '\n';
  return 0;
}

int cmd_aggregate(const Options& o) {
  const auto scenario = crowdlab::io::read_scenario(o.scenario);
  const auto log = crowdlab::io::read_log(o.log);
  const auto subjects = crowdlab::io::read_subjects(o.subjects);
  log.validate(scenario.n_classes);
  const auto stage = crowdlab::run_aggregation(scenario, log, subjects, parse_weight_mode(o.weight_mode));
  crowdlab::write_aggregation(output_dir(o.out), stage);
  print_warnings(stage.report.warnings);
  std::cout << crowdlab::report_to_json(stage.report).dump(2) << '\n';
  return 0;
}

int cmd_run(const Options& o) {
  auto scenario = crowdlab::io::read_scenario(o.scenario);
  if (o.seed) scenario.seed = *o.seed;
  const auto result = crowdlab::run_pipeline(scenario, parse_weight_mode(o.weight_mode));
  crowdlab::write_pipeline(output_dir(o.out), result);
  print_warnings(result.stage.report.warnings);
  std::cout << crowdlab::report_to_json(result.stage.report).dump(2) << '\n';
  return 0;
}

int cmd_jury(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  if (o.target) {
    std::cout << crowdlab::min_jury_size(o.jury_p, *o.target) << '\n';
    return 0;
  }
  if (o.grid_n.empty() && o.grid_p.empty()) {
    std::cout << fmt(crowdlab::majority_prob(o.jury_n, o.jury_p)) << '\n';
    if (o.trials > 0) std::cout << fmt(crowdlab::simulate_jury(o.jury_n, o.jury_p, o.trials, seed)) << '\n';
    return 0;
  }
  const auto ns = o.grid_n.empty() ? std::vector<std::uint64_t>{o.jury_n} : o.grid_n;
  const auto ps = o.grid_p.empty() ? std::vector<double>{o.jury_p} : o.grid_p;
  std::cout << "n,p,exact,simulated\n";
  for (auto n : ns) {
    for (double p : ps) {
      std::cout << n << ',' << fmt(p) << ',' << fmt(crowdlab::majority_prob(n, p)) << ',';
      if (o.trials > 0) std::cout << fmt(crowdlab::simulate_jury(n, p, o.trials, seed));
      std::cout << '\n';
    }
  }
  return 0;
}

int cmd_shaked(const Options& o) {
  const auto model = crowdlab::io::read_evidence_model(o.model);
  json out = crowdlab::io::report_to_json(crowdlab::check_shaked_conditions(model));
  if (o.mc_samples > 0) {
    const auto mc = crowdlab::expected_delta_v_monte_carlo(model, o.mc_samples, o.seed.value_or(0));
    out["monte_carlo"] = {{"expected_delta_v", mc.mean}, {"std_error", mc.std_error}, {"samples", mc.samples}};
  }
  if (!o.large_set.empty()) {
    const auto te = crowdlab::total_evidence_gain(model, parse_indices(o.small_set), parse_indices(o.large_set));
    out["total_evidence"] = {{"gain", te.gain},
                             {"value_small", te.value_small},
                             {"value_large", te.value_large},
                             {"small_conditions", crowdlab::io::report_to_json(te.small_conditions)},
                             {"large_conditions", crowdlab::io::report_to_json(te.large_conditions)}};
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

std::vector<std::string> split_group(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

int cmd_epistemic_check(const Options& o) {
  namespace ep = crowdlab::epistemic;
  const auto file = crowdlab::io::read_kripke(o.model);
  const auto formula = ep::parse_formula(o.formula);
  std::string world = o.world;
  if (world.empty()) {
    if (!file.actual) throw crowdlab::ValidationError("model has no 'actual' world; pass --world");
    world = *file.actual;
  }
  std::vector<std::string> group_warnings;
  std::function<void(const ep::Formula&)> scan = [&](const ep::Formula& f) {
    if (f.kind == ep::Formula::Kind::distributed && file.model.world_count() > 0) {
      for (auto w : ep::vacuous_worlds(file.model, f.agents)) {
        group_warnings.push_back("pooled relation of the group is empty at world " + file.model.world_name(w) +
                                 "; distributed knowledge there is vacuous");
      }
    }
    if (f.lhs) scan(*f.lhs);
    if (f.rhs) scan(*f.rhs);
  };
  ep::check_vocabulary(file.model, *formula);
  scan(*formula);
  print_warnings(group_warnings);
  std::cout << (ep::eval(file.model, world, *formula) ? "true" : "false") << '\n';
  return 0;
}

int cmd_epistemic_relation(const Options& o) {
  namespace ep = crowdlab::epistemic;
  const auto file = crowdlab::io::read_kripke(o.model);
  const auto group = split_group(o.group);
  const auto rel = ep::distributed_relation(file.model, group);
  json edges = json::array();
  for (std::size_t w = 0; w < rel.worlds(); ++w) {
    for (auto v : rel.successors(w)) edges.push_back({file.model.world_name(w), file.model.world_name(v)});
  }
  std::vector<std::string> warnings;
  for (auto w : ep::vacuous_worlds(file.model, group)) {
    warnings.push_back("empty pooled relation at world " + file.model.world_name(w));
  }
  print_warnings(warnings);
  std::cout << json{{"group", group}, {"edges", edges}}.dump(2) << '\n';
  return 0;
}

int cmd_stats(const std::string& which, const Options& o) {
  namespace st = crowdlab::stats;
  const auto a = crowdlab::io::read_sample(o.sample_a);
  if (which == "ks1") {
    const double mu = o.normal_mean;
    const double sd = o.normal_sd;
    std::cout << ks_json(st::ks_one_sample(a, [&](double x) { return st::normal_cdf(x, mu, sd); })).dump(2) << '\n';
    return 0;
  }
  if (which == "skewness") {
    std::cout << json{{"skewness", st::skewness(a)}, {"n", a.size()}}.dump(2) << '\n';
    return 0;
  }
  const auto b = crowdlab::io::read_sample(o.sample_b);
  if (which == "ks2") {
    std::cout << ks_json(st::ks_two_sample(a, b)).dump(2) << '\n';
  } else if (which == "cohens-d") {
    std::cout << json{{"cohens_d", st::cohens_d(a, b)}}.dump(2) << '\n';
  } else {
    const auto fit = st::ols_loglog(a, b);
    std::cout << json{{"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"r_squared", fit.r_squared},
                      {"slope_std_error", fit.slope_std_error},
                      {"n", fit.n}}
                     .dump(2)
              << '\n';
  }
  return 0;
}

int cmd_scimetrics(const std::string& which, const Options& o) {
  namespace sm = crowdlab::scimetrics;
  if (which == "increases" || which == "summary") {
    const auto series = sm::split_series(crowdlab::io::read_catalog(o.catalog));
    if (which == "increases") {
      json rows = json::array();
      for (const auto& t : sm::tagged_increases(series)) {
        rows.push_back({{"label", t.label},
                        {"method", sm::to_string(t.method)},
                        {"from", t.from},
                        {"to", t.to},
                        {"percent", sm::display_percent(t.percent)}});
      }
      std::cout << rows.dump(2) << '\n';
    } else {
      const auto summary = sm::group_increase_summary(series);
      print_warnings(summary.warnings);
      json out = json::object();
      for (const auto& [m, g] : summary.groups) {
        out[sm::to_string(m)] = {{"count", g.count}, {"mean", g.mean}, {"median", g.median}};
      }
      std::cout << out.dump(2) << '\n';
    }
    return 0;
  }
  if (which == "impact-factor") {
    std::cout << fmt(sm::impact_factor(o.cites, o.articles)) << '\n';
    return 0;
  }
  const auto records = crowdlab::io::read_records(o.records);
  if (which == "citations") {
    const auto s = sm::citations_per_article(records, o.pub_group, o.year);
    std::cout << json{{"group", o.pub_group}, {"articles", s.articles}, {"mean", s.mean}, {"median", s.median}}.dump(2)
              << '\n';
  } else if (which == "hindex") {
    json out = json::object();
    for (const auto& [j, h] : sm::journal_h_indices(records)) {
      if (o.journal.empty() || o.journal == j) out[j] = h;
    }
    std::cout << out.dump(2) << '\n';
  } else {
    std::vector<sm::PublicationRecord> subjects;
    std::vector<sm::PublicationRecord> reference;
    for (const auto& r : records) {
      if (r.group == o.pub_group) subjects.push_back(r);
      if (r.group == o.reference_group) reference.push_back(r);
    }
    const auto pct = sm::citation_percentiles(subjects, reference);
    std::vector<double> values;
    json rows = json::array();
    for (const auto& p : pct.results) {
      rows.push_back({{"id", p.id}, {"year", p.year}, {"percentile", p.percentile}});
      values.push_back(p.percentile);
    }
    for (const auto& id : pct.excluded) std::cerr << "warning: no reference cohort for record " << id << '\n';
    json out{{"percentiles", rows}};
    if (values.size() >= 3) out["skewness"] = crowdlab::stats::skewness(values);
    if (!values.empty()) {
      out["ks_vs_normal_50_16.67"] = ks_json(crowdlab::stats::ks_one_sample(
          values, [](double x) { return crowdlab::stats::normal_cdf(x, 50.0, 16.67); }));
    }
    std::cout << out.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdlab: crowdsourced classification aggregation and verification harness"};
  app.require_subcommand(1);
  Options o;
  std::string selected;

  auto* run = app.add_subcommand("run", "Full pipeline: simulate, filter, weight, aggregate, correct, report");
  run->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  run->add_option("--seed", o.seed, "Root seed (overrides the scenario's)");
  run->add_option("--out", o.out, "Output directory (default $CROWDLAB_OUT_DIR or ./crowdlab-out)");
  run->add_option("--weight-mode", o.weight_mode, "per_annotator_total | agreement_fraction");

  auto* sim = app.add_subcommand("simulate", "Generate a classification log from a scenario");
  sim->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  sim->add_option("--seed", o.seed, "Root seed (overrides the scenario's)");
  sim->add_option("--out", o.out, "Output directory");

  auto* agg = app.add_subcommand("aggregate", "Run every stage after generation on persisted files");
  agg->add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  agg->add_option("--log", o.log, "Classification log CSV")->required();
  agg->add_option("--subjects", o.subjects, "Subjects CSV (ground truth)")->required();
  agg->add_option("--out", o.out, "Output directory");
  agg->add_option("--weight-mode", o.weight_mode, "per_annotator_total | agreement_fraction");

  auto* jury = app.add_subcommand("jury", "Majority-vote reliability of n jurors of competence p");
  jury->add_option("--n", o.jury_n, "Odd jury size")->default_val(1);
  jury->add_option("--p", o.jury_p, "Juror competence")->default_val(0.5);
  jury->add_option("--trials", o.trials, "Monte-Carlo trials (0 = exact only)");
  jury->add_option("--seed", o.seed, "Monte-Carlo seed");
  jury->add_option("--grid-n", o.grid_n, "Jury sizes for a CSV grid")->delimiter(',');
  jury->add_option("--grid-p", o.grid_p, "Competences for a CSV grid")->delimiter(',');
  jury->add_option("--target", o.target, "Print the smallest odd jury reaching this probability");

  auto* shaked = app.add_subcommand("shaked", "Check Shaked conditions and expected veritistic gain");
  shaked->add_option("model", o.model, "Evidence model JSON")->required();
  shaked->add_option("--small", o.small_set, "Smaller signal set for the total-evidence gain, e.g. 0");
  shaked->add_option("--large", o.large_set, "Larger signal set for the total-evidence gain, e.g. 0,1");
  shaked->add_option("--mc-samples", o.mc_samples, "Also estimate the gain by Monte-Carlo");
  shaked->add_option("--seed", o.seed, "Monte-Carlo seed");

  auto* epi = app.add_subcommand("epistemic", "Evaluate epistemic formulas on a Kripke model");
  epi->require_subcommand(1);
  auto* check = epi->add_subcommand("check", "Evaluate a formula at a world");
  check->add_option("model", o.model, "Kripke model JSON")->required();
  check->add_option("formula", o.formula, "Formula, e.g. \"D{alice,bob} p3\"")->required();
  check->add_option("--world", o.world, "World name (default: the model's actual world)");
  auto* relation = epi->add_subcommand("relation", "Print the pooled accessibility relation of a group");
  relation->add_option("model", o.model, "Kripke model JSON")->required();
  relation->add_option("--group", o.group, "Comma-separated agents")->required();

  auto* stats = app.add_subcommand("stats", "Statistical tests on single-column CSV samples");
  stats->require_subcommand(1);
  auto* ks2 = stats->add_subcommand("ks2", "Two-sample Kolmogorov-Smirnov test");
  auto* ks1 = stats->add_subcommand("ks1", "One-sample Kolmogorov-Smirnov test against a normal");
  auto* cd = stats->add_subcommand("cohens-d", "Cohen's d effect size");
  auto* sk = stats->add_subcommand("skewness", "Adjusted Fisher-Pearson skewness");
  auto* ols = stats->add_subcommand("ols", "OLS of log y on log x");
  for (auto* c : {ks2, cd}) {
    c->add_option("a", o.sample_a, "First sample CSV")->required();
    c->add_option("b", o.sample_b, "Second sample CSV")->required();
  }
  ols->add_option("x", o.sample_a, "x sample CSV")->required();
  ols->add_option("y", o.sample_b, "y sample CSV")->required();
  ks1->add_option("a", o.sample_a, "Sample CSV")->required();
  ks1->add_option("--mean", o.normal_mean, "Reference normal mean")->default_val(50.0);
  ks1->add_option("--sd", o.normal_sd, "Reference normal standard deviation")->default_val(16.67);
  sk->add_option("a", o.sample_a, "Sample CSV")->required();

  auto* sci = app.add_subcommand("scimetrics", "Catalogue growth and citation metrics");
  sci->require_subcommand(1);
  auto* inc = sci->add_subcommand("increases", "Percent increases per catalogue series");
  auto* summ = sci->add_subcommand("summary", "Mean and median increase per method");
  for (auto* c : {inc, summ}) c->add_option("catalog", o.catalog, "Catalogue CSV (label,method,observations)")->required();
  auto* cites = sci->add_subcommand("citations", "Citations per article for a group");
  cites->add_option("records", o.records, "Records CSV (id,year,group,journal,citations)")->required();
  cites->add_option("--group", o.pub_group, "Group tag")->required();
  cites->add_option("--year", o.year, "Restrict to one publication year");
  auto* pct = sci->add_subcommand("percentiles", "Citation percentiles of a group against a reference group");
  pct->add_option("records", o.records, "Records CSV")->required();
  pct->add_option("--group", o.pub_group, "Group whose percentiles are reported")->required();
  pct->add_option("--reference-group", o.reference_group, "Group forming the yearly cohorts")->required();
  auto* hidx = sci->add_subcommand("hindex", "h-index per journal");
  hidx->add_option("records", o.records, "Records CSV")->required();
  hidx->add_option("--journal", o.journal, "Only this journal");
  auto* ifac = sci->add_subcommand("impact-factor", "Impact factor from citation and article counts");
  ifac->add_option("--cites", o.cites, "Citations this year to the previous two years' articles")->required();
  ifac->add_option("--articles", o.articles, "Articles published in the previous two years")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sim) return cmd_simulate(o);
    if (*agg) return cmd_aggregate(o);
    if (*jury) return cmd_jury(o);
    if (*shaked) return cmd_shaked(o);
    if (*check) return cmd_epistemic_check(o);
    if (*relation) return cmd_epistemic_relation(o);
    for (auto* c : {ks2, ks1, cd, sk, ols}) {
      if (*c) return cmd_stats(c->get_name(), o);
    }
    for (auto* c : {inc, summ, cites, pct, hidx, ifac}) {
      if (*c) return cmd_scimetrics(c->get_name(), o);
    }
  } catch (const crowdlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
