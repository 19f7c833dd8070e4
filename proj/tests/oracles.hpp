#pragma once

// Independent reference implementations used only by the tests. None of
// these share code with the library; they trade speed for obviousness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crowdlab/crowd_model.hpp"
#include "crowdlab/epistemic.hpp"
#include "crowdlab/veritistic.hpp"

namespace oracle {

// Binomial -------------------------------------------------------------------

inline long double choose(unsigned n, unsigned k) {
  long double c = 1.0L;
  for (unsigned i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

/// P(more than half of n independent p-coins land heads), summed term by term.
inline long double majority(unsigned n, long double p) {
  long double total = 0.0L;
  for (unsigned k = n / 2 + 1; k <= n; ++k) total += choose(n, k) * std::pow(p, k) * std::pow(1.0L - p, n - k);
  return total;
}

// Kolmogorov-Smirnov ------------------------------------------------------------

inline double ecdf_gap(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> points(a);
  points.insert(points.end(), b.begin(), b.end());
  double d = 0.0;
  for (double x : points) {
    const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= x; })) / a.size();
    const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= x; })) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

/// Permutation p-value by listing every split of the pooled sample.
inline double ks_permutation_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = a.size();
  const std::size_t total = pooled.size();
  const double observed = ecdf_gap(a, b);
  std::uint64_t hits = 0;
  std::uint64_t splits = 0;
  for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < total; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
    ++splits;
    if (ecdf_gap(x, y) >= observed - 1e-12) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(splits);
}

// Consensus weights -------------------------------------------------------------

/// Weights by direct pairwise comparison of records, literal or fraction mode.
inline std::map<std::string, double> weights(const crowdlab::ClassificationLog& log, bool fraction_mode) {
  std::map<std::string, double> raw;
  std::map<std::string, double> classified;
  for (const auto& r : log.records) classified[r.annotator_id] += 1.0;
  for (const auto& r : log.records) {
    double agree = 0.0;
    double others = 0.0;
    for (const auto& q : log.records) {
      if (q.subject_id != r.subject_id || q.annotator_id == r.annotator_id) continue;
      others += 1.0;
      if (q.label == r.label) agree += 1.0;
    }
    const double denom = fraction_mode ? others : classified[r.annotator_id];
    raw[r.annotator_id] += denom > 0.0 ? agree / denom : 0.0;
  }
  double sum = 0.0;
  for (const auto& [id, w] : raw) sum += w;
  for (auto& [id, w] : raw) w = sum > 0.0 ? w * raw.size() / sum : 1.0;
  return raw;
}

// Veritistic value --------------------------------------------------------------

/// E[1 - |T - posterior|] - E[1 - |T - prior credence|], enumerating truth and
/// every signal outcome including flat ones. Agent beliefs are taken from the
/// model's agent fields when present.
inline double delta_v(const crowdlab::EvidenceModel& m) {
  const std::size_t k = m.signals.size();
  const double c = m.agent_prior.value_or(m.prior);
  double after = 0.0;
  for (std::uint64_t o = 0; o < (std::uint64_t{1} << k); ++o) {
    double ph = m.prior;
    double pn = 1.0 - m.prior;
    double ah = c;
    double an = 1.0 - c;
    for (std::size_t i = 0; i < k; ++i) {
      const bool fired = (o >> i) & 1u;
      const auto& s = m.signals[i];
      const auto& g = m.agent_signals ? (*m.agent_signals)[i] : s;
      ph *= fired ? s.if_true : 1.0 - s.if_true;
      pn *= fired ? s.if_false : 1.0 - s.if_false;
      ah *= fired ? g.if_true : 1.0 - g.if_true;
      an *= fired ? g.if_false : 1.0 - g.if_false;
    }
    if (ah + an <= 0.0) continue;
    const double post = ah / (ah + an);
    after += ph * post + pn * (1.0 - post);  // truth 1 scores post, truth 0 scores 1 - post
  }
  const double before = m.prior * c + (1.0 - m.prior) * (1.0 - c);
  return after - before;
}

// Kripke semantics --------------------------------------------------------------

/// Small Kripke structure with worlds 0..n-1, atoms as bit positions and
/// relations as explicit edge sets.
struct Frame {
  int worlds = 0;
  std::vector<unsigned> valuation;                     // bit a set => atom a true
  std::map<std::string, std::set<std::pair<int, int>>> edges;
};

/// Plain recursive evaluation world by world.
inline bool holds(const Frame& f, int w, const crowdlab::epistemic::Formula& phi,
                  const std::map<std::string, int>& atom_bits) {
  using K = crowdlab::epistemic::Formula::Kind;
  switch (phi.kind) {
    case K::atom: return (f.valuation[w] >> atom_bits.at(phi.atom)) & 1u;
    case K::negation: return !holds(f, w, *phi.lhs, atom_bits);
    case K::conjunction: return holds(f, w, *phi.lhs, atom_bits) && holds(f, w, *phi.rhs, atom_bits);
    case K::disjunction: return holds(f, w, *phi.lhs, atom_bits) || holds(f, w, *phi.rhs, atom_bits);
    case K::implication: return !holds(f, w, *phi.lhs, atom_bits) || holds(f, w, *phi.rhs, atom_bits);
    case K::knows:
    case K::distributed: {
      for (int v = 0; v < f.worlds; ++v) {
        bool every = true;
        for (const auto& a : phi.agents) every = every && f.edges.at(a).contains({w, v});
        if (every && !holds(f, v, *phi.lhs, atom_bits)) return false;
      }
      return true;
    }
  }
  return false;
}

inline crowdlab::epistemic::KripkeModel to_model(const Frame& f, const std::vector<std::string>& atoms) {
  crowdlab::epistemic::KripkeModel m;
  for (const auto& a : atoms) m.declare_atom(a);
  for (int w = 0; w < f.worlds; ++w) {
    std::set<std::string> t;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if ((f.valuation[w] >> a) & 1u) t.insert(atoms[a]);
    }
    m.add_world("w" + std::to_string(w), t);
  }
  for (const auto& [agent, es] : f.edges) {
    m.declare_agent(agent);
    for (auto [x, y] : es) m.add_edge(agent, static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  }
  return m;
}

}  // namespace oracle
