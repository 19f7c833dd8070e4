#pragma once

// Veritistic value of credences, Bayesian conditionalization on binary
// signals, and the expected-value gains of updating on more evidence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crowdlab/error.hpp"
#include "crowdlab/rng.hpp"

namespace crowdlab {

inline constexpr double kStructuralTolerance = 1e-12;
inline constexpr double kModelAccuracyTolerance = 1e-9;
inline constexpr std::size_t kMaxExactSignals = 20;

/// 1 - |truth - credence|: 1 for full credence in a truth, 0 for full
/// credence in a falsehood.
inline double veritistic_value(int truth, double credence) {
  if (truth != 0 && truth != 1) throw ValidationError("truth value must be 0 or 1");
  if (!(credence >= 0.0 && credence <= 1.0)) {
    throw ValidationError("credence must lie in [0, 1], got " + std::to_string(credence));
  }
  return 1.0 - std::abs(static_cast<double>(truth) - credence);
}

/// Posterior credence from prior credence and a Bayes factor
/// P(e|h) / P(e|~h), via posterior odds = prior odds * factor.
inline double bayes_update(double credence, double bayes_factor) {
  if (!(credence > 0.0 && credence < 1.0)) throw ValidationError("credence must be strictly inside (0, 1)");
  if (!(bayes_factor > 0.0) || std::isinf(bayes_factor)) {
    throw ValidationError("Bayes factor must be a positive finite number");
  }
  const double odds = credence / (1.0 - credence) * bayes_factor;
  return odds / (1.0 + odds);
}

/// Binary signal with P(e=1 | h) and P(e=1 | ~h).
struct SignalLikelihood {
  double if_true = 0.5;
  double if_false = 0.5;

  /// Likelihoods of the observed outcome.
  double given_h(bool fired) const { return fired ? if_true : 1.0 - if_true; }
  double given_not_h(bool fired) const { return fired ? if_false : 1.0 - if_false; }
  bool irrelevant() const { return std::abs(if_true - if_false) <= kStructuralTolerance; }
};

/// A hypothesis h with objective prior, conditionally independent binary
/// signals, and the agent's subjective version of both. Agent fields left
/// empty mean the agent's model matches the objective one.
struct EvidenceModel {
  double prior = 0.5;
  std::vector<SignalLikelihood> signals;
  std::optional<double> agent_prior;
  std::optional<std::vector<SignalLikelihood>> agent_signals;

  double credence() const { return agent_prior.value_or(prior); }
  const SignalLikelihood& agent_signal(std::size_t i) const {
    return agent_signals ? (*agent_signals)[i] : signals[i];
  }

  void validate() const {
    if (!(prior > 0.0 && prior < 1.0)) throw ValidationError("prior must lie strictly inside (0, 1)");
    if (agent_prior && !(*agent_prior >= 0.0 && *agent_prior <= 1.0)) {
      throw ValidationError("agent prior credence must lie in [0, 1]");
    }
    if (agent_signals && agent_signals->size() != signals.size()) {
      throw ValidationError("agent likelihood list must match the signal list in length");
    }
    auto check = [](const SignalLikelihood& s, const char* who) {
      if (!(s.if_true >= 0.0 && s.if_true <= 1.0 && s.if_false >= 0.0 && s.if_false <= 1.0)) {
        throw ValidationError(std::string(who) + " signal likelihood outside [0, 1]");
      }
    };
    for (const auto& s : signals) check(s, "objective");
    if (agent_signals) {
      for (const auto& s : *agent_signals) check(s, "agent");
    }
  }

  /// Same model restricted to the listed signal indices.
  EvidenceModel restricted(const std::vector<std::size_t>& indices) const {
    EvidenceModel out{prior, {}, agent_prior, std::nullopt};
    if (agent_signals) out.agent_signals.emplace();
    for (auto i : indices) {
      if (i >= signals.size()) throw ValidationError("signal index " + std::to_string(i) + " out of range");
      out.signals.push_back(signals[i]);
      if (agent_signals) out.agent_signals->push_back((*agent_signals)[i]);
    }
    return out;
  }
};

struct ConditionCheck {
  bool ok = false;
  std::string violated;  // empty when ok
};

struct ShakedReport {
  ConditionCheck relevance;
  ConditionCheck bounds;
  ConditionCheck accuracy;
  std::optional<double> expected_delta_v;

  bool all_ok() const { return relevance.ok && bounds.ok && accuracy.ok; }
};

namespace detail {

inline bool ratios_equal(double num_a, double den_a, double num_b, double den_b) {
  // a_num / a_den == b_num / b_den, cross-multiplied so zero denominators work.
  return std::abs(num_a * den_b - num_b * den_a) <= kModelAccuracyTolerance;
}

// Indices of signals that can move either credence. A signal whose
// objective and subjective likelihoods are both flat leaves every posterior
// unchanged and its outcome probabilities sum to 1, so it is marginalized
// out exactly.
inline std::vector<std::size_t> informative_signals(const EvidenceModel& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.signals.size(); ++i) {
    const auto& s = m.signals[i];
    const auto& a = m.agent_signal(i);
    if (s.if_true == s.if_false && a.if_true == a.if_false) continue;
    out.push_back(i);
  }
  return out;
}

struct OutcomeWeights {
  double given_h = 1.0;
  double given_not_h = 1.0;
  double agent_given_h = 1.0;
  double agent_given_not_h = 1.0;
};

inline OutcomeWeights outcome_weights(const EvidenceModel& m, const std::vector<std::size_t>& used,
                                      std::uint64_t outcome) {
  OutcomeWeights w;
  for (std::size_t j = 0; j < used.size(); ++j) {
    const bool fired = ((outcome >> j) & 1U) != 0;
    const auto& s = m.signals[used[j]];
    const auto& a = m.agent_signal(used[j]);
    w.given_h *= s.given_h(fired);
    w.given_not_h *= s.given_not_h(fired);
    w.agent_given_h *= a.given_h(fired);
    w.agent_given_not_h *= a.given_not_h(fired);
  }
  return w;
}

inline double agent_posterior(double credence, const OutcomeWeights& w) {
  const double num = credence * w.agent_given_h;
  const double den = num + (1.0 - credence) * w.agent_given_not_h;
  // The agent deems this outcome impossible; it keeps its prior.
  return den > 0.0 ? num / den : credence;
}

inline std::vector<std::size_t> checked_informative(const EvidenceModel& m) {
  m.validate();
  auto used = informative_signals(m);
  if (used.size() > kMaxExactSignals) {
    throw ValidationError("exact enumeration supports at most " + std::to_string(kMaxExactSignals) +
                          " informative signals; use the Monte-Carlo estimator");
  }
  return used;
}

}  // namespace detail

inline double expected_delta_v(const EvidenceModel& model);

/// Checks relevance, bounds and model accuracy for the model's signal set.
inline ShakedReport check_shaked_conditions(const EvidenceModel& model) {
  model.validate();
  ShakedReport r;

  bool relevant = false;
  for (const auto& s : model.signals) relevant = relevant || !s.irrelevant();
  r.relevance.ok = relevant;
  if (!relevant) r.relevance.violated = "P(h) != P(h|e): no signal has a Bayes factor different from 1";

  const double c = model.credence();
  if (!(c > 0.0 && c < 1.0)) {
    r.bounds.violated = "0 < C_A(h) < 1";
  } else if (model.signals.empty()) {
    r.bounds.violated = "P(e|h)/P(e|~h) != 1: empty evidence";
  } else {
    for (std::size_t i = 0; i < model.signals.size(); ++i) {
      if (model.signals[i].irrelevant()) {
        r.bounds.violated = "P(e|h)/P(e|~h) != 1 fails for signal " + std::to_string(i);
        break;
      }
    }
  }
  r.bounds.ok = r.bounds.violated.empty();

  if (std::abs(c - model.prior) > kModelAccuracyTolerance) {
    r.accuracy.violated = "C_A(h) = P(h)";
  } else {
    for (std::size_t i = 0; i < model.signals.size(); ++i) {
      const auto& s = model.signals[i];
      const auto& a = model.agent_signal(i);
      const bool fired_ok = detail::ratios_equal(a.if_true, a.if_false, s.if_true, s.if_false);
      const bool silent_ok =
          detail::ratios_equal(1.0 - a.if_true, 1.0 - a.if_false, 1.0 - s.if_true, 1.0 - s.if_false);
      if (!fired_ok || !silent_ok) {
        r.accuracy.violated = "C_A(e|h)/C_A(e|~h) = P(e|h)/P(e|~h) fails for signal " + std::to_string(i);
        break;
      }
    }
  }
  r.accuracy.ok = r.accuracy.violated.empty();
  if (detail::informative_signals(model).size() <= kMaxExactSignals) {
    r.expected_delta_v = expected_delta_v(model);
  }
  return r;
}

/// Expected veritistic value of the agent's credence in h after updating on
/// all signals, by exact enumeration of outcomes under the objective model.
inline double expected_value_after(const EvidenceModel& model) {
  const auto used = detail::checked_informative(model);
  const double c = model.credence();
  double total = 0.0;
  const std::uint64_t outcomes = std::uint64_t{1} << used.size();
  for (std::uint64_t o = 0; o < outcomes; ++o) {
    const auto w = detail::outcome_weights(model, used, o);
    const double p_h = model.prior * w.given_h;
    const double p_not_h = (1.0 - model.prior) * w.given_not_h;
    if (p_h + p_not_h <= 0.0) continue;
    const double post = detail::agent_posterior(c, w);
    total += p_h * post + p_not_h * (1.0 - post);
  }
  return total;
}

/// Expected veritistic value of the agent's prior credence.
inline double expected_value_before(const EvidenceModel& model) {
  model.validate();
  const double c = model.credence();
  return model.prior * c + (1.0 - model.prior) * (1.0 - c);
}

/// E[V(h) after conditionalizing on e] - E[V(h) before], exact.
inline double expected_delta_v(const EvidenceModel& model) {
  return expected_value_after(model) - expected_value_before(model);
}

/// E over outcomes of the agent's posterior; equals the prior for an
/// accurate agent.
inline double expected_posterior(const EvidenceModel& model) {
  const auto used = detail::checked_informative(model);
  const double c = model.credence();
  double total = 0.0;
  const std::uint64_t outcomes = std::uint64_t{1} << used.size();
  for (std::uint64_t o = 0; o < outcomes; ++o) {
    const auto w = detail::outcome_weights(model, used, o);
    const double p = model.prior * w.given_h + (1.0 - model.prior) * w.given_not_h;
    if (p > 0.0) total += p * detail::agent_posterior(c, w);
  }
  return total;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Monte-Carlo estimate of expected_delta_v; no limit on signal count.
inline MonteCarloEstimate expected_delta_v_monte_carlo(const EvidenceModel& model, std::uint64_t samples,
                                                       std::uint64_t seed) {
  model.validate();
  if (samples < 2) throw ValidationError("Monte-Carlo estimate needs at least 2 samples");
  const double c = model.credence();
  auto rng = CounterRng::derive(seed, 0x5eedULL);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const bool truth = rng.bernoulli(model.prior);
    double lh = 1.0;
    double lnh = 1.0;
    for (std::size_t j = 0; j < model.signals.size(); ++j) {
      const auto& s = model.signals[j];
      const bool fired = rng.bernoulli(truth ? s.if_true : s.if_false);
      const auto& a = model.agent_signal(j);
      lh *= a.given_h(fired);
      lnh *= a.given_not_h(fired);
    }
    const double num = c * lh;
    const double den = num + (1.0 - c) * lnh;
    const double post = den > 0.0 ? num / den : c;
    const int t = truth ? 1 : 0;
    const double delta = veritistic_value(t, post) - veritistic_value(t, c);
    sum += delta;
    sum_sq += delta * delta;
  }
  const auto n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

struct TotalEvidenceResult {
  double gain = 0.0;
  double value_small = 0.0;
  double value_large = 0.0;
  ShakedReport small_conditions;
  ShakedReport large_conditions;
};

/// E[V | larger evidence set] - E[V | smaller evidence set], exact.
/// `small` must be a subset of `large`. The condition reports for both sets
/// are returned rather than enforced, so flat signals can be probed.
inline TotalEvidenceResult total_evidence_gain(const EvidenceModel& model, const std::vector<std::size_t>& small,
                                               const std::vector<std::size_t>& large) {
  model.validate();
  for (auto i : small) {
    bool found = false;
    for (auto j : large) found = found || i == j;
    if (!found) {
      throw ValidationError("signal " + std::to_string(i) + " of the smaller set is missing from the larger set");
    }
  }
  // Canonical order keeps enumeration over a shared subset bit-identical.
  auto canonical = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto small_model = model.restricted(canonical(small));
  const auto large_model = model.restricted(canonical(large));
  TotalEvidenceResult r;
  r.small_conditions = check_shaked_conditions(small_model);
  r.large_conditions = check_shaked_conditions(large_model);
  r.value_small = expected_value_after(small_model);
  r.value_large = expected_value_after(large_model);
  r.gain = r.value_large - r.value_small;
  return r;
}

}  // namespace crowdlab
