#pragma once

// CSV and JSON readers/writers for every file the tools exchange.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "crowdlab/crowd_model.hpp"
#include "crowdlab/epistemic.hpp"
#include "crowdlab/error.hpp"
#include "crowdlab/quality_control.hpp"
#include "crowdlab/scientometrics.hpp"
#include "crowdlab/veritistic.hpp"

namespace crowdlab::io {

using json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("failed to format number");
  return {buf, end};
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

inline CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  auto in = open_input(path);
  auto t = parse_csv(in, path.string());
  if (t.header != expected_header) {
    std::string want;
    for (std::size_t i = 0; i < expected_header.size(); ++i) want += (i ? "," : "") + expected_header[i];
    throw ValidationError(path.string() + ": expected header '" + want + "'");
  }
  return t;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw ValidationError("invalid " + what + " '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ValidationError("invalid " + what + " '" + text + "'");
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Classification log -------------------------------------------------------

inline std::string log_csv(const ClassificationLog& log) {
  std::string out = "annotator_id,subject_id,label,seq\n";
  for (const auto& r : log.records) {
    out += r.annotator_id + ',' + r.subject_id + ',' + std::to_string(r.label) + ',' + std::to_string(r.seq) + '\n';
  }
  return out;
}

inline ClassificationLog read_log(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"annotator_id", "subject_id", "label", "seq"});
  ClassificationLog log;
  log.records.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    log.records.push_back({row[0], row[1], parse_number<ClassLabel>(row[2], "label"),
                           parse_number<std::uint64_t>(row[3], "seq")});
  }
  return log;
}

// Subjects (ground truth) --------------------------------------------------

inline std::string subjects_csv(const std::vector<Subject>& subjects) {
  std::string out = "subject_id,true_class,is_gold\n";
  for (const auto& s : subjects) {
    out += s.id + ',' + std::to_string(s.true_class) + ',' + (s.is_gold ? "1" : "0") + '\n';
  }
  return out;
}

inline std::vector<Subject> read_subjects(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"subject_id", "true_class", "is_gold"});
  std::vector<Subject> out;
  for (const auto& row : t.rows) {
    out.push_back({row[0], parse_number<ClassLabel>(row[1], "true_class"), parse_bool(row[2], "is_gold")});
  }
  return out;
}

// Weights -------------------------------------------------------------------

inline std::string weights_csv(const WeightTable& table) {
  std::string out = "annotator_id,weight\n";
  for (const auto& [id, w] : table.weights) out += id + ',' + format_double(w) + '\n';
  return out;
}

inline WeightTable read_weights(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"annotator_id", "weight"});
  WeightTable table;
  for (const auto& row : t.rows) {
    const double w = parse_number<double>(row[1], "weight");
    if (!(w >= 0.0)) throw ValidationError("negative weight for annotator " + row[0]);
    table.weights[row[0]] = w;
  }
  return table;
}

// Aggregates ------------------------------------------------------------------

inline std::string aggregates_csv(const std::vector<AggregateResult>& results) {
  std::string out = "subject_id,consensus_label,consensus_fraction,tier,unweighted_label\n";
  for (const auto& r : results) {
    out += r.subject_id + ',' + std::to_string(r.consensus_label) + ',' + format_double(r.consensus_fraction) + ',' +
           to_string(r.tier) + ',' + std::to_string(r.consensus_label_unweighted) + '\n';
  }
  return out;
}

struct AggregateRow {
  SubjectId subject_id;
  ClassLabel consensus_label = 0;
  double consensus_fraction = 0.0;
  std::string tier;
  ClassLabel unweighted_label = 0;

  bool operator==(const AggregateRow&) const = default;
};

inline std::vector<AggregateRow> read_aggregates(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"subject_id", "consensus_label", "consensus_fraction", "tier", "unweighted_label"});
  std::vector<AggregateRow> out;
  for (const auto& row : t.rows) {
    out.push_back({row[0], parse_number<ClassLabel>(row[1], "consensus_label"),
                   parse_number<double>(row[2], "consensus_fraction"), row[3],
                   parse_number<ClassLabel>(row[4], "unweighted_label")});
  }
  return out;
}

// Samples -------------------------------------------------------------------

/// Single-column numeric file; a non-numeric first line is taken as a header.
inline std::vector<double> read_sample(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<double> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    const bool numeric = ec == std::errc{} && ptr == line.data() + line.size();
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ValidationError(path.string() + ": invalid number '" + line + "'");
    }
    first = false;
    out.push_back(v);
  }
  return out;
}

// Catalogues and publications ---------------------------------------------

inline std::vector<scimetrics::CatalogEntry> read_catalog(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"label", "method", "observations"});
  std::vector<scimetrics::CatalogEntry> out;
  for (const auto& row : t.rows) {
    out.push_back({row[0], scimetrics::parse_method(row[1]), parse_number<std::uint64_t>(row[2], "observations")});
  }
  return out;
}

inline std::vector<scimetrics::PublicationRecord> read_records(const std::filesystem::path& path) {
  const auto t = read_csv(path, {"id", "year", "group", "journal", "citations"});
  std::vector<scimetrics::PublicationRecord> out;
  for (const auto& row : t.rows) {
    out.push_back({row[0], parse_number<int>(row[1], "year"), row[2], row[3],
                   parse_number<std::uint64_t>(row[4], "citations")});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

template <typename T>
T field(const json& obj, const std::string& context, const char* name) {
  if (!obj.is_object()) throw ValidationError(context + ": expected a JSON object");
  auto it = obj.find(name);
  if (it == obj.end()) throw ValidationError(context + " field '" + name + "' is missing");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw ValidationError(context + " field '" + name + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& obj, const std::string& context, const char* name, T fallback) {
  if (!obj.contains(name)) return fallback;
  return field<T>(obj, context, name);
}

template <typename T>
T nonnegative(const json& obj, const std::string& context, const char* name, T fallback) {
  if (!obj.contains(name)) return fallback;
  const auto& v = obj.at(name);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ValidationError(context + " field '" + name + "' must be a non-negative integer");
  }
  return static_cast<T>(v.get<std::uint64_t>());
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace detail

// Scenario --------------------------------------------------------------------

inline Scenario scenario_from_json(const json& j) {
  const std::string ctx = "scenario";
  if (!j.is_object()) throw ValidationError("scenario: expected a JSON object");
  Scenario s;
  s.n_classes = detail::nonnegative<std::size_t>(j, ctx, "n_classes", 0);
  if (!j.contains("n_classes")) throw ValidationError("scenario field 'n_classes' is missing");
  if (!j.contains("n_subjects")) throw ValidationError("scenario field 'n_subjects' is missing");
  if (!j.contains("n_annotators")) throw ValidationError("scenario field 'n_annotators' is missing");
  s.n_subjects = detail::nonnegative<std::size_t>(j, ctx, "n_subjects", 0);
  s.gold_count = detail::nonnegative<std::size_t>(j, ctx, "gold_count", 0);
  s.n_annotators = detail::nonnegative<std::size_t>(j, ctx, "n_annotators", 0);
  s.redundancy = detail::nonnegative<std::size_t>(j, ctx, "redundancy", 38);
  s.seed = detail::nonnegative<std::uint64_t>(j, ctx, "seed", 0);

  if (!j.contains("skill_mixture") || !j.at("skill_mixture").is_array()) {
    throw ValidationError("scenario field 'skill_mixture' must be an array");
  }
  std::size_t idx = 0;
  for (const auto& c : j.at("skill_mixture")) {
    const std::string cctx = "scenario skill_mixture[" + std::to_string(idx++) + "]";
    SkillComponent comp;
    comp.fraction = detail::field<double>(c, cctx, "fraction");
    if (c.contains("accuracy")) comp.accuracy = detail::field<double>(c, cctx, "accuracy");
    if (c.contains("confusion")) {
      try {
        comp.confusion = ConfusionMatrix::from_rows(detail::field<std::vector<std::vector<double>>>(c, cctx, "confusion"));
      } catch (const ValidationError& e) {
        throw ValidationError(cctx + " field 'confusion': " + e.what());
      }
    }
    if (!comp.accuracy && !comp.confusion) {
      throw ValidationError(cctx + " needs field 'accuracy' or 'confusion'");
    }
    s.skill_mixture.push_back(std::move(comp));
  }
  if (j.contains("probation")) {
    const auto& p = j.at("probation");
    s.probation.window = detail::nonnegative<std::size_t>(p, "scenario probation", "window", 15);
    s.probation.pass_threshold = detail::nonnegative<std::size_t>(p, "scenario probation", "pass_threshold", 11);
  }
  if (j.contains("tiers")) {
    const auto& t = j.at("tiers");
    s.tiers.clean = detail::field_or<double>(t, "scenario tiers", "clean", 0.80);
    s.tiers.superclean = detail::field_or<double>(t, "scenario tiers", "superclean", 0.95);
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json mixture = json::array();
  for (const auto& c : s.skill_mixture) {
    json comp{{"fraction", c.fraction}};
    if (c.accuracy) comp["accuracy"] = *c.accuracy;
    if (c.confusion) {
      json rows = json::array();
      for (std::size_t t = 0; t < c.confusion->classes(); ++t) rows.push_back(c.confusion->row(t));
      comp["confusion"] = rows;
    }
    mixture.push_back(comp);
  }
  return json{{"n_classes", s.n_classes},
              {"n_subjects", s.n_subjects},
              {"gold_count", s.gold_count},
              {"n_annotators", s.n_annotators},
              {"skill_mixture", mixture},
              {"redundancy", s.redundancy},
              {"probation", {{"window", s.probation.window}, {"pass_threshold", s.probation.pass_threshold}}},
              {"tiers", {{"clean", s.tiers.clean}, {"superclean", s.tiers.superclean}}},
              {"seed", s.seed}};
}

inline Scenario read_scenario(const std::filesystem::path& path) {
  return scenario_from_json(detail::parse_json(read_file(path), path.string()));
}

// Evidence model ----------------------------------------------------------------

namespace detail {

inline std::vector<SignalLikelihood> signals_from_json(const json& arr, const std::string& ctx) {
  if (!arr.is_array()) throw ValidationError(ctx + " must be an array");
  std::vector<SignalLikelihood> out;
  std::size_t i = 0;
  for (const auto& s : arr) {
    const std::string sctx = ctx + "[" + std::to_string(i++) + "]";
    if (s.is_array()) {
      if (s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
        throw ValidationError(sctx + " must be [P(e|h), P(e|~h)]");
      }
      out.push_back({s[0].get<double>(), s[1].get<double>()});
    } else {
      out.push_back({field<double>(s, sctx, "if_true"), field<double>(s, sctx, "if_false")});
    }
  }
  return out;
}

}  // namespace detail

/// {"prior": p, "signals": [[P(e|h), P(e|~h)], ...],
///  "agent": {"prior": c, "signals": [...]}}   -- agent part optional
inline EvidenceModel evidence_model_from_json(const json& j) {
  EvidenceModel m;
  m.prior = detail::field<double>(j, "evidence model", "prior");
  if (j.contains("signals")) m.signals = detail::signals_from_json(j.at("signals"), "evidence model signals");
  if (j.contains("agent")) {
    const auto& a = j.at("agent");
    if (a.contains("prior")) m.agent_prior = detail::field<double>(a, "evidence model agent", "prior");
    if (a.contains("signals")) m.agent_signals = detail::signals_from_json(a.at("signals"), "evidence model agent signals");
  }
  m.validate();
  return m;
}

inline EvidenceModel read_evidence_model(const std::filesystem::path& path) {
  return evidence_model_from_json(detail::parse_json(read_file(path), path.string()));
}

inline json report_to_json(const ShakedReport& r) {
  auto cond = [](const ConditionCheck& c) {
    json out{{"ok", c.ok}};
    if (!c.ok) out["violated"] = c.violated;
    return out;
  };
  json out{{"relevance", cond(r.relevance)}, {"bounds", cond(r.bounds)}, {"model_accuracy", cond(r.accuracy)}};
  out["expected_delta_v"] = r.expected_delta_v ? json(*r.expected_delta_v) : json(nullptr);
  return out;
}

// Kripke model ------------------------------------------------------------------

/// {"atoms": [...], "worlds": [{"name": "w0", "true": ["p"]}, ...],
///  "relations": {"alice": [["w0", "w1"], ...]},
///  "partitions": {"bob": [["w0", "w1"], ["w2"]]},
///  "actual": "w0"}
inline epistemic::KripkeModel kripke_from_json(const json& j) {
  epistemic::KripkeModel m;
  if (!j.is_object()) throw ValidationError("kripke model: expected a JSON object");
  if (j.contains("atoms")) {
    for (const auto& a : detail::field<std::vector<std::string>>(j, "kripke model", "atoms")) m.declare_atom(a);
  }
  if (!j.contains("worlds") || !j.at("worlds").is_array()) {
    throw ValidationError("kripke model field 'worlds' must be an array");
  }
  for (const auto& w : j.at("worlds")) {
    const auto name = detail::field<std::string>(w, "kripke world", "name");
    auto atoms = detail::field_or<std::vector<std::string>>(w, "kripke world " + name, "true", {});
    m.add_world(name, {atoms.begin(), atoms.end()});
  }
  if (j.contains("relations")) {
    for (const auto& [agent, edges] : j.at("relations").items()) {
      m.declare_agent(agent);
      for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 2) throw ValidationError("kripke relation edge for " + agent + " must be a pair");
        m.add_edge(agent, e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
  }
  if (j.contains("partitions")) {
    for (const auto& [agent, cells] : j.at("partitions").items()) {
      m.declare_agent(agent);
      for (const auto& cell : cells) {
        const auto names = cell.get<std::vector<std::string>>();
        for (const auto& a : names) {
          for (const auto& b : names) m.add_edge(agent, a, b);
        }
      }
    }
  }
  return m;
}

struct KripkeFile {
  epistemic::KripkeModel model;
  std::optional<std::string> actual;
};

inline KripkeFile read_kripke(const std::filesystem::path& path) {
  const auto j = detail::parse_json(read_file(path), path.string());
  KripkeFile f{kripke_from_json(j), std::nullopt};
  if (j.contains("actual")) f.actual = detail::field<std::string>(j, "kripke model", "actual");
  return f;
}

}  // namespace crowdlab::io
