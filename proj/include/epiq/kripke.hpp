#ifndef EPIQ_KRIPKE_HPP
#define EPIQ_KRIPKE_HPP

// Finite Kripke structures for multi-agent knowledge, with:
//   * plain possible-world evaluation (Knows = truth in every accessible
//     world),
//   * public announcements (world elimination),
//   * semantic spot-checks of the classical knowledge axioms,
//   * a contextual variant where truth is relative to a tag vector and
//     knowledge operators carry local/global modes.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"

namespace epiq {

// ── Worlds and models ───────────────────────────────────────────────────────

/// A possible world: an id plus a truth assignment keyed by printed atom
/// ("p", "a=1", "Ged=white").
struct World {
  std::string id;
  std::map<std::string, bool> valuation;

  friend bool operator==(const World& a, const World& b) {
    return a.id == b.id && a.valuation == b.valuation;
  }
};

using EdgeSet = std::set<std::pair<std::string, std::string>>;
using AccessMap = std::map<AgentInstance, EdgeSet>;

class EvalError : public Error {
 public:
  using Error::Error;
};

/// Raised by contextual evaluation when the model has no entry for a
/// (world, formula, context) triple: the model is incomplete there, which is
/// different from the formula being false.
class IncompleteModelError : public Error {
 public:
  using Error::Error;
};

class KripkeModel {
 public:
  /// Validates that every edge endpoint names a world and, when `s5` is set,
  /// that each relation is an equivalence (the error names the offending
  /// agent and pair).
  KripkeModel(std::vector<World> worlds, AccessMap access, bool s5)
      : access_(std::move(access)), s5_(s5) {
    for (auto& w : worlds) {
      if (!worlds_.emplace(w.id, w).second)
        throw Error("duplicate world id '" + w.id + "'");
      order_.push_back(w.id);
    }
    for (const auto& [agent, edges] : access_) validate_relation(agent, edges);
  }

  bool s5() const { return s5_; }
  const std::vector<std::string>& world_ids() const { return order_; }
  const AccessMap& access() const { return access_; }

  bool has_world(const std::string& id) const { return worlds_.count(id); }

  const World& world(const std::string& id) const {
    auto it = worlds_.find(id);
    if (it == worlds_.end()) throw EvalError("unknown world id '" + id + "'");
    return it->second;
  }

  std::vector<AgentInstance> agents() const {
    std::vector<AgentInstance> out;
    for (const auto& [agent, _] : access_) out.push_back(agent);
    return out;
  }

  const EdgeSet& edges(const AgentInstance& agent) const {
    auto it = access_.find(agent);
    if (it == access_.end())
      throw EvalError("unknown agent instance '" + agent.str() + "'");
    return it->second;
  }

  std::vector<std::string> successors(const AgentInstance& agent,
                                      const std::string& from) const {
    std::vector<std::string> out;
    for (const auto& [s, t] : edges(agent))
      if (s == from) out.push_back(t);
    return out;
  }

  friend bool operator==(const KripkeModel& a, const KripkeModel& b) {
    return a.worlds_ == b.worlds_ && a.access_ == b.access_ && a.s5_ == b.s5_;
  }

 private:
  void validate_relation(const AgentInstance& agent,
                         const EdgeSet& edges) const {
    auto pair_str = [](const std::string& s, const std::string& t) {
      return "(" + s + ", " + t + ")";
    };
    for (const auto& [s, t] : edges) {
      if (!worlds_.count(s) || !worlds_.count(t))
        throw Error("relation for " + agent.str() +
                    " references a missing world in " + pair_str(s, t));
    }
    if (!s5_) return;
    for (const auto& [id, _] : worlds_) {
      if (!edges.count({id, id}))
        throw Error("relation for " + agent.str() + " is not reflexive at " +
                    pair_str(id, id));
    }
    for (const auto& [s, t] : edges) {
      if (!edges.count({t, s}))
        throw Error("relation for " + agent.str() + " is not symmetric: " +
                    pair_str(s, t) + " present, " + pair_str(t, s) +
                    " missing");
    }
    for (const auto& [s, t] : edges) {
      for (const auto& [t2, u] : edges) {
        if (t2 != t) continue;
        if (!edges.count({s, u}))
          throw Error("relation for " + agent.str() + " is not transitive: " +
                      pair_str(s, t) + " and " + pair_str(t, u) + " need " +
                      pair_str(s, u));
      }
    }
  }

  std::map<std::string, World> worlds_;
  std::vector<std::string> order_;  // declaration order, kept for output
  AccessMap access_;
  bool s5_;
};

// ── Evaluation ──────────────────────────────────────────────────────────────

/// Truth of `f` at world `id`. `f` must be mode- and context-free (use
/// evaluate_contextual for those); atoms must be valuated in every world
/// reached.
inline bool evaluate(const KripkeModel& m, const std::string& id,
                     const FormulaPtr& f) {
  const World& w = m.world(id);
  switch (f->kind) {
    case Kind::Atom: {
      const std::string key = print(f);
      auto it = w.valuation.find(key);
      if (it == w.valuation.end())
        throw EvalError("atom '" + key + "' has no valuation in world '" + id +
                        "'");
      return it->second;
    }
    case Kind::Not:
      return !evaluate(m, id, f->lhs);
    case Kind::And:
      return evaluate(m, id, f->lhs) && evaluate(m, id, f->rhs);
    case Kind::Or:
      return evaluate(m, id, f->lhs) || evaluate(m, id, f->rhs);
    case Kind::Implies:
      return !evaluate(m, id, f->lhs) || evaluate(m, id, f->rhs);
    case Kind::Iff:
      return evaluate(m, id, f->lhs) == evaluate(m, id, f->rhs);
    case Kind::Knows: {
      if (f->mode)
        throw EvalError(
            "mode-annotated knowledge needs a contextual model: " + print(f));
      for (const auto& t : m.successors(f->agent, id))
        if (!evaluate(m, t, f->lhs)) return false;
      return true;
    }
    case Kind::Tagged:
      throw EvalError("tagged formula needs a contextual model: " + print(f));
  }
  throw EvalError("unreachable formula kind");
}

/// Truth of `f` in every world of `m`.
inline bool valid(const KripkeModel& m, const FormulaPtr& f) {
  for (const auto& id : m.world_ids())
    if (!evaluate(m, id, f)) return false;
  return true;
}

// ── Public announcement ─────────────────────────────────────────────────────

/// Publicly announcing `f` removes every world where `f` is false and
/// restricts all relations to the survivors. Announcing something true
/// nowhere is an error rather than an empty model.
inline KripkeModel announce(const KripkeModel& m, const FormulaPtr& f) {
  std::vector<World> kept;
  std::set<std::string> alive;
  for (const auto& id : m.world_ids()) {
    if (evaluate(m, id, f)) {
      kept.push_back(m.world(id));
      alive.insert(id);
    }
  }
  if (kept.empty())
    throw Error("announcement '" + print(f) + "' eliminates every world");
  AccessMap access;
  for (const auto& [agent, edges] : m.access()) {
    EdgeSet restricted;
    for (const auto& [s, t] : edges)
      if (alive.count(s) && alive.count(t)) restricted.insert({s, t});
    access[agent] = std::move(restricted);
  }
  return KripkeModel(std::move(kept), std::move(access), m.s5());
}

// ── Axiom spot checks ───────────────────────────────────────────────────────

enum class Axiom {
  Distribution,
  Generalization,
  Truth,
  PosIntrospection,
  NegIntrospection,
};

inline const char* axiom_name(Axiom a) {
  switch (a) {
    case Axiom::Distribution: return "distribution";
    case Axiom::Generalization: return "generalization";
    case Axiom::Truth: return "truth";
    case Axiom::PosIntrospection: return "pos_introspection";
    case Axiom::NegIntrospection: return "neg_introspection";
  }
  return "?";
}

/// Outcome of a semantic axiom check: either the axiom held on every probed
/// instance, or `world`/`instance` name a counterexample.
struct AxiomReport {
  bool holds = true;
  std::optional<std::string> world;
  FormulaPtr instance;
};

namespace detail {

/// Probe formulas: the model's atoms plus every single-operator combination
/// of them (depth <= 2), including one knowledge layer per agent.
inline std::vector<FormulaPtr> probe_formulas(const KripkeModel& m) {
  FormulaSet atom_set;
  for (const auto& id : m.world_ids()) {
    for (const auto& [key, _] : m.world(id).valuation) {
      // Valuation keys are printed atoms; rebuild the node.
      auto eq = key.find('=');
      if (eq == std::string::npos)
        atom_set.insert(prop(key));
      else
        atom_set.insert(outcome(key.substr(0, eq), key.substr(eq + 1)));
    }
  }
  std::vector<FormulaPtr> atoms(atom_set.begin(), atom_set.end());
  std::vector<FormulaPtr> out = atoms;
  for (const auto& a : atoms) out.push_back(negation(a));
  for (const auto& a : atoms)
    for (const auto& b : atoms) {
      out.push_back(conjunction(a, b));
      out.push_back(disjunction(a, b));
      out.push_back(implication(a, b));
    }
  for (const auto& agent : m.agents())
    for (const auto& a : atoms) out.push_back(knows(agent, a));
  return out;
}

inline AxiomReport counterexample(const std::string& world, FormulaPtr inst) {
  AxiomReport r;
  r.holds = false;
  r.world = world;
  r.instance = std::move(inst);
  return r;
}

}  // namespace detail

/// Check one knowledge axiom over all probe instantiations (atoms and
/// depth-2 combinations). Returns the first counterexample found.
inline AxiomReport check_axiom(const KripkeModel& m, Axiom axiom) {
  const std::vector<FormulaPtr> probes = detail::probe_formulas(m);
  const std::vector<AgentInstance> agents = m.agents();

  auto check_everywhere = [&](const FormulaPtr& inst) -> AxiomReport {
    for (const auto& id : m.world_ids())
      if (!evaluate(m, id, inst)) return detail::counterexample(id, inst);
    return {};
  };

  switch (axiom) {
    case Axiom::Truth:
      for (const auto& i : agents)
        for (const auto& f : probes) {
          AxiomReport r = check_everywhere(implication(knows(i, f), f));
          if (!r.holds) return r;
        }
      return {};
    case Axiom::PosIntrospection:
      for (const auto& i : agents)
        for (const auto& f : probes) {
          AxiomReport r = check_everywhere(
              implication(knows(i, f), knows(i, knows(i, f))));
          if (!r.holds) return r;
        }
      return {};
    case Axiom::NegIntrospection:
      for (const auto& i : agents)
        for (const auto& f : probes) {
          AxiomReport r = check_everywhere(implication(
              negation(knows(i, f)), knows(i, negation(knows(i, f)))));
          if (!r.holds) return r;
        }
      return {};
    case Axiom::Distribution:
      for (const auto& i : agents)
        for (const auto& f : probes)
          for (const auto& g : probes) {
            FormulaPtr inst = implication(
                conjunction(knows(i, f), knows(i, implication(f, g))),
                knows(i, g));
            AxiomReport r = check_everywhere(inst);
            if (!r.holds) return r;
          }
      return {};
    case Axiom::Generalization:
      for (const auto& f : probes) {
        if (!valid(m, f)) continue;
        for (const auto& i : agents) {
          FormulaPtr inst = knows(i, f);
          for (const auto& id : m.world_ids())
            if (!evaluate(m, id, inst))
              return detail::counterexample(id, inst);
        }
      }
      return {};
  }
  return {};
}

// ── Contextual models ───────────────────────────────────────────────────────

/// One explicit contextual truth entry: formula `payload` read in context
/// `context` has truth value `value` at world `world`.
struct ContextualEntry {
  std::string world;
  FormulaPtr payload;
  ContextVector context;
  bool value;
};

/// A Kripke model whose valuation depends on a context vector, with one
/// accessibility relation per (agent, mode) pair. Empty-context entries are
/// seeded from (and must agree with) the base valuation.
class ContextualModel {
 public:
  using ModeAccessMap = std::map<std::pair<AgentInstance, Mode>, EdgeSet>;

  ContextualModel(KripkeModel base, ModeAccessMap mode_access,
                  std::vector<ContextualEntry> entries)
      : base_(std::move(base)), mode_access_(std::move(mode_access)) {
    for (const auto& [pair, edges] : mode_access_) {
      for (const auto& [s, t] : edges)
        if (!base_.has_world(s) || !base_.has_world(t))
          throw Error("mode relation for " + pair.first.str() +
                      " references a missing world");
    }
    // Base valuation doubles as the empty-context valuation.
    for (const auto& id : base_.world_ids())
      for (const auto& [atom_key, v] : base_.world(id).valuation)
        values_[{id, atom_key, ""}] = v;
    for (const auto& e : entries) {
      if (!base_.has_world(e.world))
        throw Error("contextual entry references missing world '" + e.world +
                    "'");
      Key k{e.world, print(e.payload), context_str(e.context)};
      auto [it, inserted] = values_.emplace(k, e.value);
      if (!inserted && it->second != e.value)
        throw Error(e.context.empty()
                        ? "empty-context entry disagrees with base valuation "
                          "for '" + print(e.payload) + "' at '" + e.world + "'"
                        : "conflicting contextual entries for '" +
                          print(e.payload) + "' at '" + e.world + "'");
    }
  }

  const KripkeModel& base() const { return base_; }

  std::vector<std::string> mode_successors(const AgentInstance& agent,
                                           Mode mode,
                                           const std::string& from) const {
    auto it = mode_access_.find({agent, mode});
    if (it == mode_access_.end())
      throw EvalError("no accessibility relation for " + agent.str() + "," +
                      mode_char(mode));
    std::vector<std::string> out;
    for (const auto& [s, t] : it->second)
      if (s == from) out.push_back(t);
    return out;
  }

  bool lookup(const std::string& world, const FormulaPtr& payload,
              const ContextVector& ctx) const {
    Key k{world, print(payload), context_str(ctx)};
    auto it = values_.find(k);
    if (it == values_.end())
      throw IncompleteModelError("no contextual valuation for '" +
                                 print(payload) + "' in context [" +
                                 context_str(ctx) + "] at world '" + world +
                                 "'");
    return it->second;
  }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  KripkeModel base_;
  ModeAccessMap mode_access_;
  std::map<Key, bool> values_;
};

/// Contextual truth. Boolean connectives are classical; a tagged formula
/// reads the valuation at its context; K[A,e] g holds at s when the payload
/// of g — its tag vector extended by (A,e) — is true at every (A,e)-accessible
/// world. An untagged payload under K[A,e] is read as carrying the empty tag.
inline bool evaluate_contextual(const ContextualModel& m, const std::string& id,
                                const FormulaPtr& f) {
  m.base().world(id);  // world existence check
  switch (f->kind) {
    case Kind::Atom:
      return m.lookup(id, f, {});
    case Kind::Not:
      return !evaluate_contextual(m, id, f->lhs);
    case Kind::And:
      return evaluate_contextual(m, id, f->lhs) &&
             evaluate_contextual(m, id, f->rhs);
    case Kind::Or:
      return evaluate_contextual(m, id, f->lhs) ||
             evaluate_contextual(m, id, f->rhs);
    case Kind::Implies:
      return !evaluate_contextual(m, id, f->lhs) ||
             evaluate_contextual(m, id, f->rhs);
    case Kind::Iff:
      return evaluate_contextual(m, id, f->lhs) ==
             evaluate_contextual(m, id, f->rhs);
    case Kind::Tagged:
      return m.lookup(id, f->lhs, f->context);
    case Kind::Knows: {
      if (!f->mode)
        throw EvalError("contextual evaluation needs a mode on " + print(f));
      ContextVector ctx;
      FormulaPtr payload = f->lhs;
      if (payload->kind == Kind::Tagged) {
        ctx = payload->context;
        payload = payload->lhs;
      }
      ctx.push_back(ContextEntry{f->agent, *f->mode});
      for (const auto& t : m.mode_successors(f->agent, *f->mode, id))
        if (!m.lookup(t, payload, ctx)) return false;
      return true;
    }
  }
  throw EvalError("unreachable formula kind");
}

}  // namespace epiq

#endif  // EPIQ_KRIPKE_HPP
