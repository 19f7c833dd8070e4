#pragma once

// Finite Kripke structures with individual (K) and distributed (D)
// knowledge operators.
//
// Formula text notation:
//   atom          p3, rain, x_1
//   negation      !phi   (or ~phi)
//   binary        (phi & psi)  (phi | psi)  (phi -> psi)
//   knowledge     K{alice} phi
//   distributed   D{alice,bob} phi

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdlab/error.hpp"

namespace crowdlab::epistemic {

class EpistemicError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Dense binary relation over worlds 0..n-1.
class Relation {
 public:
  Relation() = default;
  explicit Relation(std::size_t worlds) : n_(worlds), bits_(worlds * worlds, 0) {}

  std::size_t worlds() const noexcept { return n_; }
  bool contains(std::size_t from, std::size_t to) const { return bits_[from * n_ + to] != 0; }
  void add(std::size_t from, std::size_t to) {
    if (from >= n_ || to >= n_) throw EpistemicError("relation edge references a world out of range");
    bits_[from * n_ + to] = 1;
  }

  std::vector<std::size_t> successors(std::size_t from) const {
    std::vector<std::size_t> out;
    for (std::size_t to = 0; to < n_; ++to) {
      if (contains(from, to)) out.push_back(to);
    }
    return out;
  }

  Relation& operator&=(const Relation& other) {
    if (other.n_ != n_) throw EpistemicError("relations over different world sets");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] = bits_[i] & other.bits_[i];
    return *this;
  }

  bool operator==(const Relation&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> bits_;
};

class KripkeModel {
 public:
  /// Adds a world with the atoms true at it; returns its index.
  std::size_t add_world(std::string name, std::set<std::string> true_atoms) {
    if (index_.contains(name)) throw EpistemicError("duplicate world " + name);
    for (const auto& a : true_atoms) atoms_.insert(a);
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    valuation_.push_back(std::move(true_atoms));
    for (auto& [agent, rel] : access_) rel = widen(rel);
    return names_.size() - 1;
  }

  /// Declares an atom that may be false everywhere.
  void declare_atom(const std::string& atom) { atoms_.insert(atom); }

  void declare_agent(const std::string& agent) { access_.try_emplace(agent, Relation(names_.size())); }

  void add_edge(const std::string& agent, std::size_t from, std::size_t to) {
    declare_agent(agent);
    access_.at(agent).add(from, to);
  }
  void add_edge(const std::string& agent, const std::string& from, const std::string& to) {
    add_edge(agent, world(from), world(to));
  }

  std::size_t world_count() const noexcept { return names_.size(); }
  const std::string& world_name(std::size_t w) const { return names_.at(w); }
  std::size_t world(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw EpistemicError("unknown world " + name);
    return it->second;
  }

  bool holds(std::size_t w, const std::string& atom) const { return valuation_.at(w).contains(atom); }
  const std::set<std::string>& true_atoms(std::size_t w) const { return valuation_.at(w); }
  const std::set<std::string>& atoms() const noexcept { return atoms_; }
  bool has_atom(const std::string& a) const { return atoms_.contains(a); }

  std::vector<std::string> agents() const {
    std::vector<std::string> out;
    for (const auto& [a, r] : access_) out.push_back(a);
    return out;
  }
  bool has_agent(const std::string& a) const { return access_.contains(a); }
  const Relation& relation(const std::string& agent) const {
    auto it = access_.find(agent);
    if (it == access_.end()) throw EpistemicError("undeclared agent " + agent);
    return it->second;
  }

 private:
  Relation widen(const Relation& r) const {
    Relation out(names_.size());
    for (std::size_t i = 0; i < r.worlds(); ++i) {
      for (std::size_t j = 0; j < r.worlds(); ++j) {
        if (r.contains(i, j)) out.add(i, j);
      }
    }
    return out;
  }

  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::set<std::string>> valuation_;
  std::set<std::string> atoms_;
  std::map<std::string, Relation> access_;
};

/// Equivalence relation grouping worlds with equal `key(world)`.
template <typename Key>
Relation partition_relation(const KripkeModel& model, Key&& key) {
  Relation r(model.world_count());
  for (std::size_t i = 0; i < model.world_count(); ++i) {
    for (std::size_t j = 0; j < model.world_count(); ++j) {
      if (key(i) == key(j)) r.add(i, j);
    }
  }
  return r;
}

/// Installs `relation` as the accessibility relation of `agent`.
inline void set_relation(KripkeModel& model, const std::string& agent, const Relation& relation) {
  if (relation.worlds() != model.world_count()) throw EpistemicError("relation size does not match model");
  model.declare_agent(agent);
  for (std::size_t i = 0; i < relation.worlds(); ++i) {
    for (std::size_t j : relation.successors(i)) model.add_edge(agent, i, j);
  }
}

// ---------------------------------------------------------------------------
// Formulas

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind { atom, negation, conjunction, disjunction, implication, knows, distributed };

  Kind kind = Kind::atom;
  std::string atom;
  std::vector<std::string> agents;  // one for knows, the group for distributed
  FormulaPtr lhs;
  FormulaPtr rhs;
};

inline FormulaPtr atom(std::string name) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::atom, std::move(name), {}, nullptr, nullptr});
}
inline FormulaPtr negation(FormulaPtr f) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::negation, {}, {}, std::move(f), nullptr});
}
inline FormulaPtr conjunction(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::conjunction, {}, {}, std::move(a), std::move(b)});
}
inline FormulaPtr disjunction(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::disjunction, {}, {}, std::move(a), std::move(b)});
}
inline FormulaPtr implication(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::implication, {}, {}, std::move(a), std::move(b)});
}
inline FormulaPtr knows(std::string agent, FormulaPtr f) {
  return std::make_shared<const Formula>(Formula{Formula::Kind::knows, {}, {std::move(agent)}, std::move(f), nullptr});
}
inline FormulaPtr distributed(std::vector<std::string> group, FormulaPtr f) {
  if (group.empty()) throw EpistemicError("distributed knowledge needs a non-empty group");
  return std::make_shared<const Formula>(Formula{Formula::Kind::distributed, {}, std::move(group), std::move(f), nullptr});
}

inline std::string to_string(const Formula& f) {
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
  };
  switch (f.kind) {
    case Formula::Kind::atom: return f.atom;
    case Formula::Kind::negation: return "!" + to_string(*f.lhs);
    case Formula::Kind::conjunction: return "(" + to_string(*f.lhs) + " & " + to_string(*f.rhs) + ")";
    case Formula::Kind::disjunction: return "(" + to_string(*f.lhs) + " | " + to_string(*f.rhs) + ")";
    case Formula::Kind::implication: return "(" + to_string(*f.lhs) + " -> " + to_string(*f.rhs) + ")";
    case Formula::Kind::knows: return "K{" + f.agents.front() + "} " + to_string(*f.lhs);
    case Formula::Kind::distributed: return "D{" + join(f.agents) + "} " + to_string(*f.lhs);
  }
  return "?";
}

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  FormulaPtr parse() {
    auto f = formula();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw EpistemicError("formula parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    }
    if (pos_ == start) fail("expected an identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::vector<std::string> agent_list() {
    std::vector<std::string> out{identifier()};
    while (accept(",")) out.push_back(identifier());
    expect("}");
    return out;
  }

  bool modal_prefix(char op) {
    skip_space();
    if (pos_ + 1 < text_.size() && text_[pos_] == op) {
      std::size_t look = pos_ + 1;
      while (look < text_.size() && std::isspace(static_cast<unsigned char>(text_[look]))) ++look;
      if (look < text_.size() && text_[look] == '{') {
        pos_ = look + 1;
        return true;
      }
    }
    return false;
  }

  FormulaPtr formula() {
    if (accept("!") || accept("~")) return negation(formula());
    if (modal_prefix('K')) {
      auto agents = agent_list();
      if (agents.size() != 1) fail("K takes exactly one agent; use D for groups");
      return knows(agents.front(), formula());
    }
    if (modal_prefix('D')) {
      auto group = agent_list();
      return distributed(std::move(group), formula());
    }
    if (accept("(")) {
      auto lhs = formula();
      FormulaPtr out;
      if (accept("&")) {
        out = conjunction(lhs, formula());
      } else if (accept("->")) {
        out = implication(lhs, formula());
      } else if (accept("|")) {
        out = disjunction(lhs, formula());
      } else {
        fail("expected '&', '|' or '->'");
      }
      expect(")");
      return out;
    }
    return atom(identifier());
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline FormulaPtr parse_formula(std::string_view text) { return detail::FormulaParser(text).parse(); }

// ---------------------------------------------------------------------------
// Semantics

/// Intersection of the group's accessibility relations.
inline Relation distributed_relation(const KripkeModel& model, const std::vector<std::string>& group) {
  if (group.empty()) throw EpistemicError("distributed knowledge needs a non-empty group");
  Relation r = model.relation(group.front());
  for (std::size_t i = 1; i < group.size(); ++i) r &= model.relation(group[i]);
  return r;
}

/// Worlds where every member has some successor but the pooled relation has
/// none. There D_G holds of every formula, including contradictions.
inline std::vector<std::size_t> vacuous_worlds(const KripkeModel& model, const std::vector<std::string>& group) {
  const Relation pooled = distributed_relation(model, group);
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < model.world_count(); ++w) {
    if (!pooled.successors(w).empty()) continue;
    bool members_live = true;
    for (const auto& a : group) members_live = members_live && !model.relation(a).successors(w).empty();
    if (members_live) out.push_back(w);
  }
  return out;
}

/// Throws naming the first atom or agent the model does not declare.
inline void check_vocabulary(const KripkeModel& model, const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::atom:
      if (!model.has_atom(f.atom)) throw EpistemicError("undeclared atom " + f.atom);
      return;
    case Formula::Kind::knows:
    case Formula::Kind::distributed:
      for (const auto& a : f.agents) {
        if (!model.has_agent(a)) throw EpistemicError("undeclared agent " + a);
      }
      check_vocabulary(model, *f.lhs);
      return;
    default:
      check_vocabulary(model, *f.lhs);
      if (f.rhs) check_vocabulary(model, *f.rhs);
  }
}

namespace detail {

inline std::vector<bool> box(const Relation& r, const std::vector<bool>& inner) {
  std::vector<bool> out(r.worlds(), true);
  for (std::size_t w = 0; w < r.worlds(); ++w) {
    for (std::size_t v = 0; v < r.worlds() && out[w]; ++v) {
      if (r.contains(w, v) && !inner[v]) out[w] = false;
    }
  }
  return out;
}

inline std::vector<bool> truth_set(const KripkeModel& model, const Formula& f) {
  const std::size_t n = model.world_count();
  std::vector<bool> out(n);
  switch (f.kind) {
    case Formula::Kind::atom:
      for (std::size_t w = 0; w < n; ++w) out[w] = model.holds(w, f.atom);
      return out;
    case Formula::Kind::negation: {
      auto inner = truth_set(model, *f.lhs);
      for (std::size_t w = 0; w < n; ++w) out[w] = !inner[w];
      return out;
    }
    case Formula::Kind::conjunction:
    case Formula::Kind::disjunction:
    case Formula::Kind::implication: {
      auto a = truth_set(model, *f.lhs);
      auto b = truth_set(model, *f.rhs);
      for (std::size_t w = 0; w < n; ++w) {
        if (f.kind == Formula::Kind::conjunction) out[w] = a[w] && b[w];
        else if (f.kind == Formula::Kind::disjunction) out[w] = a[w] || b[w];
        else out[w] = !a[w] || b[w];
      }
      return out;
    }
    case Formula::Kind::knows:
      return box(model.relation(f.agents.front()), truth_set(model, *f.lhs));
    case Formula::Kind::distributed:
      return box(distributed_relation(model, f.agents), truth_set(model, *f.lhs));
  }
  return out;
}

}  // namespace detail

/// Set of worlds where `f` holds, as a mask indexed by world.
inline std::vector<bool> satisfying_worlds(const KripkeModel& model, const Formula& f) {
  check_vocabulary(model, f);
  return detail::truth_set(model, f);
}

inline bool eval(const KripkeModel& model, std::size_t world, const Formula& f) {
  if (world >= model.world_count()) throw EpistemicError("world index out of range");
  return satisfying_worlds(model, f)[world];
}

inline bool eval(const KripkeModel& model, const std::string& world, const Formula& f) {
  return eval(model, model.world(world), f);
}

}  // namespace crowdlab::epistemic
