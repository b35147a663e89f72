#ifndef EPIQ_INFERENCE_HPP
#define EPIQ_INFERENCE_HPP

// Forward-chaining syntactic derivation over knowledge judgments.
//
// A Judgment is a formula together with a scope: either "valid in every
// world" or "holds at one named world". A KnowledgeBase is an append-only,
// structurally deduplicated list of judgments; ids are list positions.
//
// Rules are schema scans: each apply_* function looks for judgments of a
// given shape and returns the conclusions it can produce, without mutating
// anything. `saturate` runs the enabled rules in a fixed, documented order
// until nothing new appears (or a contradiction is found, or every remaining
// conclusion would exceed the depth bound), recording one trace step per
// appended judgment so the derivation can be replayed and audited.
//
// Prefixes. Most rules may fire under a common chain of knowledge
// operators: from K_W K_U (phi -> psi) and K_W K_U (phi) one may conclude
// K_W K_U (psi), the outer K_W being inert context. The chain above the
// operator a rule manipulates is called the prefix; rule appliers take it
// explicitly, and saturate enumerates every prefix occurring in the
// knowledge base (innermost first — longest prefixes before shorter ones —
// except single-outcome scanning, which prefers the barest form and runs
// shortest first). With `prefix_rules` off, saturate only ever passes the
// empty prefix.
//
// Mode discipline. Distribution, conjunction and introspection treat a
// moded operator K[A,l] like any other operator as long as both premises
// carry the same mode. Truth and trust, which *remove* an operator, are
// restricted to mode-free operators: stripping a mode-annotated layer is
// exactly the move the context machinery regulates, and only
// compress_context (and the experimental context_trust) may do it.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"

namespace epiq {

// ── Scopes and judgments ────────────────────────────────────────────────────

/// Where a judgment holds: everywhere (`all()`) or at one named world.
struct Scope {
  std::optional<std::string> world;

  static Scope all() { return Scope{}; }
  static Scope at(std::string world_id) { return Scope{std::move(world_id)}; }

  bool all_worlds() const { return !world.has_value(); }

  /// "*" for the all-worlds scope, otherwise the world id.
  std::string str() const { return world ? *world : "*"; }

  friend bool operator==(const Scope& a, const Scope& b) {
    return a.world == b.world;
  }
  friend bool operator!=(const Scope& a, const Scope& b) { return !(a == b); }
};

/// Scope of a conclusion drawn from two premises: an all-worlds premise
/// never narrows anything, two world-scoped premises must name the same
/// world. Disagreeing worlds cannot be combined.
inline std::optional<Scope> combine_scopes(const Scope& a, const Scope& b) {
  if (a.all_worlds()) return b;
  if (b.all_worlds()) return a;
  if (a == b) return a;
  return std::nullopt;
}

struct Judgment {
  FormulaPtr formula;
  Scope scope;

  /// Dedup key: scope and canonical printed form.
  std::string key() const { return scope.str() + "|" + print(formula); }

  friend bool operator==(const Judgment& a, const Judgment& b) {
    return a.scope == b.scope && equal(a.formula, b.formula);
  }
  friend bool operator!=(const Judgment& a, const Judgment& b) {
    return !(a == b);
  }
};

/// Append-only, structurally deduplicated judgment store. Ids are stable
/// positions in insertion order; re-adding an existing judgment returns the
/// original id and changes nothing.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(const std::vector<Judgment>& premises) {
    for (const auto& j : premises) add(j);
  }

  /// Returns (id, true) for a new judgment, (existing id, false) otherwise.
  std::pair<std::size_t, bool> add(Judgment j) {
    std::string key = j.key();
    auto it = index_.find(key);
    if (it != index_.end()) return {it->second, false};
    std::size_t id = items_.size();
    items_.push_back(std::move(j));
    index_.emplace(std::move(key), id);
    return {id, true};
  }

  bool contains(const Judgment& j) const {
    return index_.count(j.key()) > 0;
  }
  std::optional<std::size_t> find(const Judgment& j) const {
    auto it = index_.find(j.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const Judgment& at(std::size_t id) const {
    if (id >= items_.size())
      throw Error("judgment id " + std::to_string(id) + " out of range");
    return items_[id];
  }

  std::size_t size() const { return items_.size(); }
  const std::vector<Judgment>& items() const { return items_; }

 private:
  std::vector<Judgment> items_;
  std::map<std::string, std::size_t> index_;
};

// ── Trust structure ─────────────────────────────────────────────────────────

/// Directed trust between agent instances. `trusts(i, j)` reads "i adopts
/// what it knows j knows": K_i K_j phi entitles i to K_i phi. Edges are
/// stored as (truster, trusted) pairs; nothing is symmetrized and nothing
/// is composed — trust is not transitive. Every instance trivially trusts
/// itself (its own simultaneous knowledge), so (i, i) never needs listing.
struct TrustStructure {
  std::set<std::pair<AgentInstance, AgentInstance>> edges;

  void add(AgentInstance truster, AgentInstance trusted) {
    edges.emplace(std::move(truster), std::move(trusted));
  }

  bool trusts(const AgentInstance& truster, const AgentInstance& trusted) const {
    if (truster == trusted) return true;
    return edges.count({truster, trusted}) > 0;
  }
};

/// Trace label for one trust application: drawn trusted-to-truster, the
/// direction along which the adopted statement travels. "A@1~>B@2" marks
/// the step where B@2, trusting A@1, absorbed an inner K[A@1].
inline std::string trust_edge_label(const AgentInstance& truster,
                                    const AgentInstance& trusted) {
  return trusted.str() + "~>" + truster.str();
}

// ── Axiom sets ──────────────────────────────────────────────────────────────

/// Rule toggles for `saturate`. Flags gate whole rule families; the free
/// apply_* functions below are mechanical and ignore the flags.
struct AxiomSet {
  bool distribution = false;        // modus ponens + implication chaining
  bool conjunction = false;         // pairing and splitting under a prefix
  bool trust = false;               // K_i K_j phi => K_i phi per TrustStructure
  bool truth = false;               // K_i phi => phi
  bool generalization = false;      // all-worlds phi => K_i phi, every agent
  bool pos_introspection = false;   // K_i phi => K_i K_i phi
  bool neg_introspection = false;   // !K_i phi => K_i !K_i phi
  bool context_compression = false;  // fold K[A,e] into a context tag
  bool context_distribution = false; // distribution requiring equal contexts
  bool context_trust = false;        // experimental: trust across context tags
  bool single_outcome = false;       // one value per outcome variable
  bool prefix_rules = true;          // rules may fire under a K-prefix

  /// Knowledge with the truth axiom: the strongest reading, under which the
  /// nested-observer premises collapse into an outright contradiction.
  static AxiomSet truth_axioms() {
    AxiomSet a;
    a.distribution = true;
    a.truth = true;
    a.generalization = true;
    a.single_outcome = true;
    return a;
  }

  /// Truth replaced by directed trust: weaker, but still contradictory for
  /// a cyclic trust structure over the nested-observer premises.
  static AxiomSet trust_axioms() {
    AxiomSet a;
    a.distribution = true;
    a.trust = true;
    a.single_outcome = true;
    return a;
  }

  /// Context semantics: knowledge operators are folded into explicit
  /// context vectors and may only combine when those vectors agree.
  static AxiomSet context_axioms() {
    AxiomSet a;
    a.context_compression = true;
    a.context_distribution = true;
    a.single_outcome = true;
    return a;
  }
};

// ── Prefixes ────────────────────────────────────────────────────────────────

/// One layer of a knowledge-operator chain: agent plus optional mode.
struct PrefixEntry {
  AgentInstance agent;
  std::optional<Mode> mode;

  std::string str() const {
    std::string s = agent.str();
    if (mode) s += std::string("^") + mode_char(*mode);
    return s;
  }

  friend bool operator==(const PrefixEntry& a, const PrefixEntry& b) {
    return a.agent == b.agent && a.mode == b.mode;
  }
};

using Prefix = std::vector<PrefixEntry>;

inline std::string prefix_str(const Prefix& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ",";
    out += p[i].str();
  }
  return out;
}

/// Body of `f` under `prefix`, or null when `f` does not start with exactly
/// that chain of knowledge operators (agents and modes must both match).
inline FormulaPtr strip_prefix(const FormulaPtr& f, const Prefix& prefix) {
  FormulaPtr cur = f;
  for (const auto& e : prefix) {
    if (cur->kind != Kind::Knows || !(cur->agent == e.agent) ||
        cur->mode != e.mode)
      return nullptr;
    cur = cur->lhs;
  }
  return cur;
}

/// Rebuild prefix·body.
inline FormulaPtr wrap_prefix(const Prefix& prefix, FormulaPtr body) {
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it)
    body = knows(it->agent, std::move(body), it->mode);
  return body;
}

/// Every knowledge-operator prefix of `f`, from the empty chain up to the
/// maximal one (the run of Knows nodes from the root).
inline std::vector<Prefix> chain_prefixes(const FormulaPtr& f) {
  std::vector<Prefix> out;
  out.push_back({});
  Prefix p;
  FormulaPtr cur = f;
  while (cur->kind == Kind::Knows) {
    p.push_back({cur->agent, cur->mode});
    out.push_back(p);
    cur = cur->lhs;
  }
  return out;
}

// ── Derivations ─────────────────────────────────────────────────────────────

/// One rule application: the conclusion plus its provenance. Premise ids
/// refer to the knowledge base the applier scanned.
struct Derivation {
  std::string rule;
  std::vector<std::size_t> premises;
  Prefix prefix;
  Judgment conclusion;
  std::optional<std::string> edge;  // trust steps: "trusted~>truster"
};

/// Two judgments that a context-aware rule would have combined, had their
/// context vectors agreed. Kept as a diagnostic: the mismatch is the whole
/// point of context semantics.
struct BlockedPair {
  std::size_t first = 0;
  std::size_t second = 0;
  ContextVector first_context;
  ContextVector second_context;
};

namespace detail {

/// Group judgments by the knowledge operator directly under `prefix`.
/// Entry: (id, head agent, head mode, body under the head).
struct HeadEntry {
  std::size_t id;
  AgentInstance agent;
  std::optional<Mode> mode;
  FormulaPtr body;
};

inline std::map<std::string, std::vector<HeadEntry>> heads_under(
    const KnowledgeBase& kb, const Prefix& prefix) {
  std::map<std::string, std::vector<HeadEntry>> groups;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s || s->kind != Kind::Knows) continue;
    PrefixEntry head{s->agent, s->mode};
    groups[head.str()].push_back({id, s->agent, s->mode, s->lhs});
  }
  return groups;
}

}  // namespace detail

// ── Rule appliers ───────────────────────────────────────────────────────────
//
// Each applier scans `kb` for instances of its schema at one prefix and
// returns every conclusion, in a deterministic order (groups by printed
// head, judgments by id). Appliers do not deduplicate against the knowledge
// base; saturate does that when appending.

/// Distribution: from P·K_i(phi -> psi) and P·K_i(phi) conclude P·K_i(psi)
/// ("distribution"); from P·K_i(chi -> phi) and P·K_i(phi -> psi) conclude
/// P·K_i(chi -> psi) ("distribution_chain"). Premises are recorded
/// implication-first for modus ponens, antecedent-side-first for chains.
inline std::vector<Derivation> apply_distribution(const KnowledgeBase& kb,
                                                  const Prefix& prefix) {
  std::vector<Derivation> out;
  for (auto& [head_key, entries] : detail::heads_under(kb, prefix)) {
    (void)head_key;
    std::vector<const detail::HeadEntry*> impls;
    for (const auto& e : entries)
      if (e.body->kind == Kind::Implies) impls.push_back(&e);

    for (const auto* impl : impls) {
      const Judgment& impl_judgment = kb.at(impl->id);
      // Modus ponens.
      for (const auto& fact : entries) {
        if (!equal(fact.body, impl->body->lhs)) continue;
        auto scope = combine_scopes(impl_judgment.scope, kb.at(fact.id).scope);
        if (!scope) continue;
        Judgment conclusion{
            wrap_prefix(prefix,
                        knows(impl->agent, impl->body->rhs, impl->mode)),
            *scope};
        out.push_back({"distribution",
                       {impl->id, fact.id},
                       prefix,
                       std::move(conclusion),
                       std::nullopt});
      }
      // Chaining: this implication's consequent feeds another's antecedent.
      for (const auto* next : impls) {
        if (next == impl) continue;
        if (!equal(impl->body->rhs, next->body->lhs)) continue;
        auto scope = combine_scopes(impl_judgment.scope, kb.at(next->id).scope);
        if (!scope) continue;
        Judgment conclusion{
            wrap_prefix(prefix,
                        knows(impl->agent,
                              implication(impl->body->lhs, next->body->rhs),
                              impl->mode)),
            *scope};
        out.push_back({"distribution_chain",
                       {impl->id, next->id},
                       prefix,
                       std::move(conclusion),
                       std::nullopt});
      }
    }
  }
  return out;
}

/// Conjunction, both directions. Splitting ("conjunction_elim") fires at any
/// prefix, including the empty one. Pairing ("conjunction_intro") requires a
/// non-empty prefix: the schema joins two bodies inside at least one
/// knowledge operator; bare pairing of unrelated judgments is not a rule.
inline std::vector<Derivation> apply_conjunction(const KnowledgeBase& kb,
                                                 const Prefix& prefix) {
  std::vector<Derivation> out;
  struct Entry {
    std::size_t id;
    FormulaPtr body;
  };
  std::vector<Entry> entries;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (s) entries.push_back({id, s});
  }
  for (const auto& e : entries) {
    if (e.body->kind != Kind::And) continue;
    const Judgment& j = kb.at(e.id);
    out.push_back({"conjunction_elim",
                   {e.id},
                   prefix,
                   Judgment{wrap_prefix(prefix, e.body->lhs), j.scope},
                   std::nullopt});
    out.push_back({"conjunction_elim",
                   {e.id},
                   prefix,
                   Judgment{wrap_prefix(prefix, e.body->rhs), j.scope},
                   std::nullopt});
  }
  if (prefix.empty()) return out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      auto scope = combine_scopes(kb.at(entries[i].id).scope,
                                  kb.at(entries[j].id).scope);
      if (!scope) continue;
      Judgment conclusion{
          wrap_prefix(prefix,
                      conjunction(entries[i].body, entries[j].body)),
          *scope};
      out.push_back({"conjunction_intro",
                     {entries[i].id, entries[j].id},
                     prefix,
                     std::move(conclusion),
                     std::nullopt});
    }
  }
  return out;
}

/// Trust: from P·K_i(K_j(phi)) with i trusting j, conclude P·K_i(phi).
/// Restricted to mode-free operators on both layers; moded knowledge is the
/// context machinery's business. Each conclusion carries the edge label
/// "j~>i" for the trace.
inline std::vector<Derivation> apply_trust(const KnowledgeBase& kb,
                                           const TrustStructure& trust,
                                           const Prefix& prefix) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s || s->kind != Kind::Knows || s->mode) continue;
    FormulaPtr inner = s->lhs;
    if (inner->kind != Kind::Knows || inner->mode) continue;
    if (!trust.trusts(s->agent, inner->agent)) continue;
    Judgment conclusion{wrap_prefix(prefix, knows(s->agent, inner->lhs)),
                        kb.at(id).scope};
    out.push_back({"trust",
                   {id},
                   prefix,
                   std::move(conclusion),
                   trust_edge_label(s->agent, inner->agent)});
  }
  return out;
}

/// Truth: from P·K_i(phi) conclude P·phi. The stripped operator must be
/// mode-free (see the header note on mode discipline).
inline std::vector<Derivation> apply_truth(const KnowledgeBase& kb,
                                           const Prefix& prefix) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s || s->kind != Kind::Knows || s->mode) continue;
    out.push_back({"truth",
                   {id},
                   prefix,
                   Judgment{wrap_prefix(prefix, s->lhs), kb.at(id).scope},
                   std::nullopt});
  }
  return out;
}

/// Generalization: an all-worlds judgment is known to every listed agent.
/// Fires only at the empty prefix and only on all-worlds scopes; a judgment
/// about one world is not a validity and generalizes to nothing.
inline std::vector<Derivation> apply_generalization(
    const KnowledgeBase& kb, const std::vector<AgentInstance>& agents) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    const Judgment& j = kb.at(id);
    if (!j.scope.all_worlds()) continue;
    for (const auto& agent : agents) {
      out.push_back({"generalization",
                     {id},
                     Prefix{},
                     Judgment{knows(agent, j.formula), Scope::all()},
                     std::nullopt});
    }
  }
  return out;
}

/// Positive introspection: from P·K_i(phi) conclude P·K_i(K_i(phi)).
inline std::vector<Derivation> apply_pos_introspection(const KnowledgeBase& kb,
                                                       const Prefix& prefix) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s || s->kind != Kind::Knows || s->mode) continue;
    out.push_back({"pos_introspection",
                   {id},
                   prefix,
                   Judgment{wrap_prefix(prefix, knows(s->agent, s)),
                            kb.at(id).scope},
                   std::nullopt});
  }
  return out;
}

/// Negative introspection: from P·!K_i(phi) conclude P·K_i(!K_i(phi)).
inline std::vector<Derivation> apply_neg_introspection(const KnowledgeBase& kb,
                                                       const Prefix& prefix) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s || s->kind != Kind::Not) continue;
    FormulaPtr inner = s->lhs;
    if (inner->kind != Kind::Knows || inner->mode) continue;
    out.push_back({"neg_introspection",
                   {id},
                   prefix,
                   Judgment{wrap_prefix(prefix, knows(inner->agent, s)),
                            kb.at(id).scope},
                   std::nullopt});
  }
  return out;
}

/// Context compression: a mode-annotated operator over a statement is folded
/// into the statement's context vector, innermost tags first:
/// P·K[A,e](ctx[c] phi) becomes P·ctx[c;(A,e)] phi, and a plain body counts
/// as carrying the empty context. Scans every judgment at every chain
/// position, deepest first.
inline std::vector<Derivation> compress_context(const KnowledgeBase& kb) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    const Judgment& j = kb.at(id);
    std::vector<std::pair<Prefix, FormulaPtr>> sites;  // (prefix, moded K)
    Prefix p;
    FormulaPtr cur = j.formula;
    while (cur->kind == Kind::Knows) {
      if (cur->mode) sites.push_back({p, cur});
      p.push_back({cur->agent, cur->mode});
      cur = cur->lhs;
    }
    for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
      const auto& [prefix, node] = *it;
      FormulaPtr folded =
          tagged({ContextEntry{node->agent, *node->mode}}, node->lhs);
      out.push_back({"context_compression",
                     {id},
                     prefix,
                     Judgment{wrap_prefix(prefix, folded), j.scope},
                     std::nullopt});
    }
  }
  return out;
}

/// Context-aware distribution. Three schemas, all demanding exact context
/// agreement:
///   * modus ponens over tagged statements ("context_distribution"):
///     P·ctx[c](phi -> psi) and P·ctx[c](phi) give P·ctx[c](psi);
///   * chaining ("context_chain"): P·ctx[c](chi -> phi) and
///     P·ctx[c](phi -> psi) give P·ctx[c](chi -> psi);
///   * tagged-implication modus ponens ("context_distribution"): from
///     P·(ctx[c](phi) -> ctx[c'](psi)) and P·ctx[c](phi), conclude
///     P·ctx[c'](psi).
/// When a pair matches a schema in every respect except the context vectors,
/// nothing is concluded and the pair is appended to `blocked` (if given) —
/// that refusal is the machinery's defining behavior.
inline std::vector<Derivation> apply_context_distribution(
    const KnowledgeBase& kb, const Prefix& prefix,
    std::vector<BlockedPair>* blocked = nullptr) {
  std::vector<Derivation> out;
  struct TaggedEntry {
    std::size_t id;
    ContextVector context;
    FormulaPtr payload;
  };
  std::vector<TaggedEntry> statements;
  struct TaggedImpl {
    std::size_t id;
    FormulaPtr antecedent;  // Tagged
    FormulaPtr consequent;  // Tagged
  };
  std::vector<TaggedImpl> tagged_impls;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s) continue;
    if (s->kind == Kind::Tagged)
      statements.push_back({id, s->context, s->lhs});
    else if (s->kind == Kind::Implies && s->lhs->kind == Kind::Tagged &&
             s->rhs->kind == Kind::Tagged)
      tagged_impls.push_back({id, s->lhs, s->rhs});
  }
  auto note_blocked = [&](std::size_t a, std::size_t b, const ContextVector& ca,
                          const ContextVector& cb) {
    if (blocked) blocked->push_back({a, b, ca, cb});
  };

  for (const auto& impl : statements) {
    if (impl.payload->kind != Kind::Implies) continue;
    const Judgment& impl_judgment = kb.at(impl.id);
    // Modus ponens over tagged statements.
    for (const auto& fact : statements) {
      if (!equal(fact.payload, impl.payload->lhs)) continue;
      if (fact.context != impl.context) {
        note_blocked(impl.id, fact.id, impl.context, fact.context);
        continue;
      }
      auto scope = combine_scopes(impl_judgment.scope, kb.at(fact.id).scope);
      if (!scope) continue;
      out.push_back(
          {"context_distribution",
           {impl.id, fact.id},
           prefix,
           Judgment{wrap_prefix(prefix, tagged(impl.context, impl.payload->rhs)),
                    *scope},
           std::nullopt});
    }
    // Chaining between tagged implications.
    for (const auto& next : statements) {
      if (next.id == impl.id || next.payload->kind != Kind::Implies) continue;
      if (!equal(impl.payload->rhs, next.payload->lhs)) continue;
      if (next.context != impl.context) {
        note_blocked(impl.id, next.id, impl.context, next.context);
        continue;
      }
      auto scope = combine_scopes(impl_judgment.scope, kb.at(next.id).scope);
      if (!scope) continue;
      out.push_back({"context_chain",
                     {impl.id, next.id},
                     prefix,
                     Judgment{wrap_prefix(prefix,
                                          tagged(impl.context,
                                                 implication(
                                                     impl.payload->lhs,
                                                     next.payload->rhs))),
                              *scope},
                     std::nullopt});
    }
  }
  // Implications between tagged statements.
  for (const auto& impl : tagged_impls) {
    for (const auto& fact : statements) {
      if (!equal(fact.payload, impl.antecedent->lhs)) continue;
      if (fact.context != impl.antecedent->context) {
        note_blocked(impl.id, fact.id, impl.antecedent->context, fact.context);
        continue;
      }
      auto scope = combine_scopes(kb.at(impl.id).scope, kb.at(fact.id).scope);
      if (!scope) continue;
      out.push_back({"context_distribution",
                     {impl.id, fact.id},
                     prefix,
                     Judgment{wrap_prefix(prefix, impl.consequent), *scope},
                     std::nullopt});
    }
  }
  return out;
}

/// Experimental: trust applied across adjacent context tags. In a context
/// vector (innermost first), entry k+1 belongs to the agent who asserted the
/// statement already carrying entry k; if that outer agent trusts the inner
/// one, the inner tag may be dropped. Off by default in every canonical
/// axiom set; no soundness is claimed for the combination.
inline std::vector<Derivation> apply_context_trust(const KnowledgeBase& kb,
                                                   const TrustStructure& trust) {
  std::vector<Derivation> out;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    const Judgment& j = kb.at(id);
    for (const auto& prefix : chain_prefixes(j.formula)) {
      FormulaPtr s = strip_prefix(j.formula, prefix);
      if (!s || s->kind != Kind::Tagged || s->context.size() < 2) continue;
      for (std::size_t k = 0; k + 1 < s->context.size(); ++k) {
        const AgentInstance& trusted = s->context[k].agent;
        const AgentInstance& truster = s->context[k + 1].agent;
        if (!trust.trusts(truster, trusted)) continue;
        ContextVector reduced = s->context;
        reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(k));
        out.push_back({"context_trust",
                       {id},
                       prefix,
                       Judgment{wrap_prefix(prefix, tagged(reduced, s->lhs)),
                                j.scope},
                       trust_edge_label(truster, trusted)});
      }
    }
  }
  return out;
}

/// Result of one single-outcome scan: negation rewrites, plus the first
/// value conflict found (if any) with its ready-made conjunction conclusion.
struct OutcomeScan {
  std::vector<Derivation> derivations;
  std::optional<std::pair<std::size_t, std::size_t>> conflict;
  std::optional<Derivation> conflict_conclusion;
  std::string variable;  // conflicting variable, when conflict is set
};

namespace detail {

/// Every value each outcome variable takes anywhere in the knowledge base,
/// in subformulas included. Feeds the negation rewrite.
inline std::map<std::string, std::set<std::string>> outcome_inventory(
    const KnowledgeBase& kb) {
  std::map<std::string, std::set<std::string>> inv;
  for (const auto& j : kb.items())
    for (const auto& a : atoms(j.formula))
      if (a->value) inv[a->var].insert(*a->value);
  return inv;
}

}  // namespace detail

/// Single outcome per variable. Judgments P·(x=v) and P·(x=v') with v != v',
/// identical prefix, identical context tag (or both untagged) and identical
/// scope are a contradiction: the scan stops at the first such pair (by id
/// order) and returns its conjunction as a "contradiction" conclusion.
/// Otherwise every P·(x=v) is rewritten to P·!(x=v') for each other value v'
/// the knowledge base mentions for x ("single_outcome_negation").
inline OutcomeScan apply_single_outcome(const KnowledgeBase& kb,
                                        const Prefix& prefix) {
  OutcomeScan scan;
  struct Entry {
    std::size_t id;
    ContextVector context;  // empty when untagged
    bool is_tagged = false;
    FormulaPtr atom;
  };
  std::vector<Entry> entries;
  for (std::size_t id = 0; id < kb.size(); ++id) {
    FormulaPtr s = strip_prefix(kb.at(id).formula, prefix);
    if (!s) continue;
    if (s->kind == Kind::Atom && s->value)
      entries.push_back({id, {}, false, s});
    else if (s->kind == Kind::Tagged && s->lhs->kind == Kind::Atom &&
             s->lhs->value)
      entries.push_back({id, s->context, true, s->lhs});
  }
  auto same_group = [&](const Entry& a, const Entry& b) {
    return a.is_tagged == b.is_tagged && a.context == b.context &&
           kb.at(a.id).scope == kb.at(b.id).scope;
  };
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const Entry& a = entries[i];
      const Entry& b = entries[j];
      if (a.atom->var != b.atom->var || *a.atom->value == *b.atom->value)
        continue;
      if (!same_group(a, b)) continue;
      FormulaPtr pair = conjunction(a.atom, b.atom);
      if (a.is_tagged) pair = tagged(a.context, pair);
      scan.conflict = {a.id, b.id};
      scan.variable = a.atom->var;
      scan.conflict_conclusion =
          Derivation{"contradiction",
                     {a.id, b.id},
                     prefix,
                     Judgment{wrap_prefix(prefix, pair), kb.at(a.id).scope},
                     std::nullopt};
      return scan;
    }
  }
  auto inventory = detail::outcome_inventory(kb);
  for (const auto& e : entries) {
    const auto& values = inventory[e.atom->var];
    for (const auto& other : values) {
      if (other == *e.atom->value) continue;
      FormulaPtr negated = negation(outcome(e.atom->var, other));
      if (e.is_tagged) negated = tagged(e.context, negated);
      scan.derivations.push_back(
          {"single_outcome_negation",
           {e.id},
           prefix,
           Judgment{wrap_prefix(prefix, negated), kb.at(e.id).scope},
           std::nullopt});
    }
  }
  return scan;
}

// ── Traces ──────────────────────────────────────────────────────────────────

/// One appended judgment with its provenance. `id` is the judgment's
/// knowledge-base id; premise ids always point at earlier judgments.
struct TraceStep {
  std::size_t id = 0;
  std::string rule;
  std::vector<std::size_t> premises;
  Prefix prefix;
  Judgment conclusion;
  std::optional<std::string> edge;
};

/// The witnessing pair of a derived contradiction, plus the conjunction
/// judgment recorded for it.
struct ContradictionWitness {
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t conclusion = 0;
  std::string variable;
};

/// Complete audit trail of one saturation run.
struct DerivationTrace {
  std::vector<Judgment> premises;
  std::vector<TraceStep> steps;
  std::vector<BlockedPair> blocked;
  std::optional<ContradictionWitness> contradiction;
  bool bounded = false;  // true when the depth bound suppressed a conclusion
  std::size_t depth_bound = 0;  // the bound the run was made under
};

struct SaturationResult {
  KnowledgeBase kb;
  DerivationTrace trace;

  bool contradictory() const { return trace.contradiction.has_value(); }
};

/// Every agent instance mentioned in the premises (knowledge operators and
/// context tags alike), sorted and deduplicated. This is the agent pool
/// generalization ranges over.
inline std::vector<AgentInstance> agents_of(
    const std::vector<Judgment>& premises) {
  std::set<AgentInstance> agents;
  for (const auto& j : premises) {
    for (const auto& g : subformulas(j.formula)) {
      if (g->kind == Kind::Knows) agents.insert(g->agent);
      if (g->kind == Kind::Tagged)
        for (const auto& e : g->context) agents.insert(e.agent);
    }
  }
  return {agents.begin(), agents.end()};
}

namespace detail {

/// Candidate prefixes in the snapshot, deduplicated. `innermost_first`
/// sorts longest-first (combination rules work innermost-out); otherwise
/// shortest-first (the single-outcome scan prefers the barest statement).
/// Ties break on the printed prefix.
inline std::vector<Prefix> candidate_prefixes(const KnowledgeBase& kb,
                                              std::size_t snapshot,
                                              bool innermost_first) {
  std::map<std::string, Prefix> seen;
  for (std::size_t id = 0; id < snapshot; ++id)
    for (auto& p : chain_prefixes(kb.at(id).formula))
      seen.emplace(prefix_str(p), std::move(p));
  std::vector<Prefix> out;
  out.reserve(seen.size());
  for (auto& [key, p] : seen) {
    (void)key;
    out.push_back(std::move(p));
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](const Prefix& a, const Prefix& b) {
                     if (a.size() != b.size())
                       return innermost_first ? a.size() > b.size()
                                              : a.size() < b.size();
                     return prefix_str(a) < prefix_str(b);
                   });
  return out;
}

}  // namespace detail

/// Run the enabled rules to a fixpoint, depth-bounded.
///
/// Each round executes the passes in a fixed order — distribution,
/// conjunction, trust, truth, generalization, positive then negative
/// introspection, context compression, context distribution, context trust,
/// single outcome — where every pass scans the knowledge base as it stood
/// when the pass began and appends its conclusions afterwards, so later
/// passes of the same round see earlier passes' output. Within a pass,
/// prefixes are visited innermost (longest) first, except the single-outcome
/// pass, which scans shortest first; judgments are visited in id order.
/// Conclusions whose formula depth exceeds `depth_bound` are suppressed and
/// the trace is marked `bounded`. The first value conflict found stops the
/// run immediately; its conjunction is the final step.
inline SaturationResult saturate(const std::vector<Judgment>& premises,
                                 const AxiomSet& axioms,
                                 const TrustStructure& trust = {},
                                 std::size_t depth_bound = 12) {
  if (depth_bound < 1) throw Error("depth bound must be at least 1");
  SaturationResult result;
  KnowledgeBase& kb = result.kb;
  DerivationTrace& trace = result.trace;
  for (const auto& j : premises) kb.add(j);
  trace.premises = kb.items();
  trace.depth_bound = depth_bound;

  const std::vector<AgentInstance> agents = agents_of(trace.premises);
  std::set<std::string> blocked_seen;
  bool suppressed = false;
  bool stop = false;

  // Append one pass's conclusions: dedup, depth-check, record steps.
  auto append = [&](const std::vector<Derivation>& batch) {
    std::size_t added = 0;
    for (const auto& d : batch) {
      if (depth(d.conclusion.formula) > depth_bound) {
        suppressed = true;
        continue;
      }
      auto [id, fresh] = kb.add(d.conclusion);
      if (!fresh) continue;
      trace.steps.push_back(
          {id, d.rule, d.premises, d.prefix, d.conclusion, d.edge});
      ++added;
    }
    return added;
  };
  auto note_blocked = [&](const std::vector<BlockedPair>& pairs) {
    for (const auto& p : pairs) {
      std::string key = std::to_string(std::min(p.first, p.second)) + ":" +
                        std::to_string(std::max(p.first, p.second));
      if (blocked_seen.insert(key).second) trace.blocked.push_back(p);
    }
  };

  while (!stop) {
    std::size_t added_this_round = 0;

    // Pass driver for prefix-parameterized rules: collect against the
    // snapshot across all candidate prefixes, then append.
    auto run_pass = [&](auto&& collect, bool innermost_first = true) {
      std::size_t snapshot = kb.size();
      std::vector<Derivation> batch;
      if (axioms.prefix_rules) {
        for (const auto& p :
             detail::candidate_prefixes(kb, snapshot, innermost_first)) {
          auto found = collect(p);
          batch.insert(batch.end(), found.begin(), found.end());
        }
      } else {
        auto found = collect(Prefix{});
        batch.insert(batch.end(), found.begin(), found.end());
      }
      added_this_round += append(batch);
    };

    if (axioms.distribution)
      run_pass([&](const Prefix& p) { return apply_distribution(kb, p); });
    if (axioms.conjunction)
      run_pass([&](const Prefix& p) { return apply_conjunction(kb, p); });
    if (axioms.trust)
      run_pass([&](const Prefix& p) { return apply_trust(kb, trust, p); });
    if (axioms.truth)
      run_pass([&](const Prefix& p) { return apply_truth(kb, p); });
    if (axioms.generalization)
      added_this_round += append(apply_generalization(kb, agents));
    if (axioms.pos_introspection)
      run_pass([&](const Prefix& p) { return apply_pos_introspection(kb, p); });
    if (axioms.neg_introspection)
      run_pass([&](const Prefix& p) { return apply_neg_introspection(kb, p); });
    if (axioms.context_compression)
      added_this_round += append(compress_context(kb));
    if (axioms.context_distribution)
      run_pass([&](const Prefix& p) {
        std::vector<BlockedPair> blocked;
        auto found = apply_context_distribution(kb, p, &blocked);
        note_blocked(blocked);
        return found;
      });
    if (axioms.context_trust)
      added_this_round += append(apply_context_trust(kb, trust));

    if (axioms.single_outcome) {
      std::size_t snapshot = kb.size();
      std::vector<Prefix> prefixes =
          axioms.prefix_rules
              ? detail::candidate_prefixes(kb, snapshot, false)
              : std::vector<Prefix>{Prefix{}};
      std::vector<Derivation> rewrites;
      for (const auto& p : prefixes) {
        OutcomeScan scan = apply_single_outcome(kb, p);
        if (scan.conflict) {
          // Inconsistency ends the run; pending rewrites are moot.
          append({*scan.conflict_conclusion});
          auto id = kb.find(scan.conflict_conclusion->conclusion);
          trace.contradiction = ContradictionWitness{
              scan.conflict->first, scan.conflict->second, *id, scan.variable};
          stop = true;
          break;
        }
        rewrites.insert(rewrites.end(), scan.derivations.begin(),
                        scan.derivations.end());
      }
      if (!stop) added_this_round += append(rewrites);
    }

    if (stop || added_this_round == 0) break;
  }

  trace.bounded = suppressed;
  return result;
}

// ── Replay ──────────────────────────────────────────────────────────────────

/// A trace that does not re-execute: a step's rule fails to fire, a premise
/// is missing, or a recorded conclusion disagrees with the recomputation.
class ReplayError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void replay_fail(std::size_t step_index, const std::string& why) {
  throw ReplayError("trace step " + std::to_string(step_index) + ": " + why);
}

/// Recompute the conclusion a step must produce from its recorded premises,
/// or fail. Mirrors the appliers, one instance at a time.
inline Judgment recompute_step(const KnowledgeBase& kb, const TraceStep& step,
                               std::size_t step_index) {
  auto fail = [&](const std::string& why) -> Judgment {
    replay_fail(step_index, why);
    throw ReplayError("unreachable");
  };
  auto premise = [&](std::size_t slot) -> const Judgment& {
    if (slot >= step.premises.size())
      replay_fail(step_index, "missing premise slot");
    std::size_t id = step.premises[slot];
    if (id >= kb.size()) replay_fail(step_index, "premise id out of range");
    return kb.at(id);
  };
  auto stripped = [&](std::size_t slot) -> FormulaPtr {
    FormulaPtr s = strip_prefix(premise(slot).formula, step.prefix);
    if (!s) replay_fail(step_index, "premise does not carry the prefix");
    return s;
  };
  auto joint_scope = [&]() -> Scope {
    auto scope = combine_scopes(premise(0).scope, premise(1).scope);
    if (!scope) replay_fail(step_index, "premise scopes do not combine");
    return *scope;
  };

  const std::string& rule = step.rule;
  if (rule == "distribution") {
    FormulaPtr impl = stripped(0);
    FormulaPtr fact = stripped(1);
    if (impl->kind == Kind::Knows && fact->kind == Kind::Knows &&
        impl->agent == fact->agent && impl->mode == fact->mode &&
        impl->lhs->kind == Kind::Implies && equal(fact->lhs, impl->lhs->lhs))
      return {wrap_prefix(step.prefix,
                          knows(impl->agent, impl->lhs->rhs, impl->mode)),
              joint_scope()};
    // Tagged-implication form recorded by the context machinery.
    if (impl->kind == Kind::Tagged || fact->kind == Kind::Tagged)
      return fail("not a distribution instance");
    return fail("not a distribution instance");
  }
  if (rule == "distribution_chain") {
    FormulaPtr first = stripped(0);
    FormulaPtr second = stripped(1);
    if (first->kind != Kind::Knows || second->kind != Kind::Knows ||
        !(first->agent == second->agent) || first->mode != second->mode ||
        first->lhs->kind != Kind::Implies ||
        second->lhs->kind != Kind::Implies ||
        !equal(first->lhs->rhs, second->lhs->lhs))
      return fail("not a chaining instance");
    return {wrap_prefix(step.prefix,
                        knows(first->agent,
                              implication(first->lhs->lhs, second->lhs->rhs),
                              first->mode)),
            joint_scope()};
  }
  if (rule == "conjunction_intro") {
    if (step.prefix.empty()) return fail("pairing requires a prefix");
    return {wrap_prefix(step.prefix, conjunction(stripped(0), stripped(1))),
            joint_scope()};
  }
  if (rule == "conjunction_elim") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::And) return fail("premise is not a conjunction");
    Judgment left{wrap_prefix(step.prefix, s->lhs), premise(0).scope};
    Judgment right{wrap_prefix(step.prefix, s->rhs), premise(0).scope};
    if (step.conclusion == left) return left;
    if (step.conclusion == right) return right;
    return fail("conclusion is neither conjunct");
  }
  if (rule == "trust") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Knows || s->mode || s->lhs->kind != Kind::Knows ||
        s->lhs->mode)
      return fail("not a nested knowledge statement");
    if (!step.edge || *step.edge != trust_edge_label(s->agent, s->lhs->agent))
      return fail("edge label does not match the operators");
    return {wrap_prefix(step.prefix, knows(s->agent, s->lhs->lhs)),
            premise(0).scope};
  }
  if (rule == "truth") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Knows || s->mode)
      return fail("premise head is not a plain knowledge operator");
    return {wrap_prefix(step.prefix, s->lhs), premise(0).scope};
  }
  if (rule == "generalization") {
    if (!premise(0).scope.all_worlds())
      return fail("generalization premise is world-scoped");
    const Judgment& c = step.conclusion;
    if (c.formula->kind != Kind::Knows || c.formula->mode ||
        !equal(c.formula->lhs, premise(0).formula) || !c.scope.all_worlds())
      return fail("conclusion is not a generalization of the premise");
    return c;
  }
  if (rule == "pos_introspection") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Knows || s->mode)
      return fail("premise head is not a plain knowledge operator");
    return {wrap_prefix(step.prefix, knows(s->agent, s)), premise(0).scope};
  }
  if (rule == "neg_introspection") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Not || s->lhs->kind != Kind::Knows || s->lhs->mode)
      return fail("premise is not a negated knowledge statement");
    return {wrap_prefix(step.prefix, knows(s->lhs->agent, s)),
            premise(0).scope};
  }
  if (rule == "context_compression") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Knows || !s->mode)
      return fail("premise head is not a moded knowledge operator");
    return {wrap_prefix(step.prefix,
                        tagged({ContextEntry{s->agent, *s->mode}}, s->lhs)),
            premise(0).scope};
  }
  if (rule == "context_distribution") {
    FormulaPtr impl = stripped(0);
    FormulaPtr fact = stripped(1);
    if (impl->kind == Kind::Tagged && fact->kind == Kind::Tagged &&
        impl->lhs->kind == Kind::Implies && impl->context == fact->context &&
        equal(fact->lhs, impl->lhs->lhs))
      return {wrap_prefix(step.prefix, tagged(impl->context, impl->lhs->rhs)),
              joint_scope()};
    if (impl->kind == Kind::Implies && impl->lhs->kind == Kind::Tagged &&
        impl->rhs->kind == Kind::Tagged && fact->kind == Kind::Tagged &&
        fact->context == impl->lhs->context &&
        equal(fact->lhs, impl->lhs->lhs))
      return {wrap_prefix(step.prefix, impl->rhs), joint_scope()};
    return fail("not a context-distribution instance");
  }
  if (rule == "context_chain") {
    FormulaPtr first = stripped(0);
    FormulaPtr second = stripped(1);
    if (first->kind != Kind::Tagged || second->kind != Kind::Tagged ||
        first->context != second->context ||
        first->lhs->kind != Kind::Implies ||
        second->lhs->kind != Kind::Implies ||
        !equal(first->lhs->rhs, second->lhs->lhs))
      return fail("not a context-chaining instance");
    return {wrap_prefix(step.prefix,
                        tagged(first->context,
                               implication(first->lhs->lhs,
                                           second->lhs->rhs))),
            joint_scope()};
  }
  if (rule == "context_trust") {
    FormulaPtr s = stripped(0);
    if (s->kind != Kind::Tagged || s->context.size() < 2)
      return fail("premise carries no reducible context");
    const Judgment& c = step.conclusion;
    FormulaPtr cs = strip_prefix(c.formula, step.prefix);
    if (!cs || cs->kind != Kind::Tagged ||
        cs->context.size() + 1 != s->context.size() ||
        !equal(cs->lhs, s->lhs) || c.scope != premise(0).scope)
      return fail("conclusion does not drop exactly one tag");
    for (std::size_t k = 0; k + 1 < s->context.size(); ++k) {
      ContextVector reduced = s->context;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(k));
      if (reduced == cs->context &&
          step.edge == std::optional<std::string>(trust_edge_label(
                           s->context[k + 1].agent, s->context[k].agent)))
        return c;
    }
    return fail("dropped tag does not match the edge label");
  }
  if (rule == "single_outcome_negation") {
    FormulaPtr s = stripped(0);
    FormulaPtr atom = s->kind == Kind::Tagged ? s->lhs : s;
    if (atom->kind != Kind::Atom || !atom->value)
      return fail("premise is not an outcome statement");
    FormulaPtr cs = strip_prefix(step.conclusion.formula, step.prefix);
    if (!cs) return fail("conclusion does not carry the prefix");
    if (s->kind == Kind::Tagged) {
      if (cs->kind != Kind::Tagged || cs->context != s->context)
        return fail("conclusion drops or alters the context");
      cs = cs->lhs;
    }
    if (cs->kind != Kind::Not || cs->lhs->kind != Kind::Atom ||
        !cs->lhs->value || cs->lhs->var != atom->var ||
        *cs->lhs->value == *atom->value ||
        step.conclusion.scope != premise(0).scope)
      return fail("conclusion is not a same-variable negation");
    return step.conclusion;
  }
  if (rule == "contradiction") {
    FormulaPtr a = stripped(0);
    FormulaPtr b = stripped(1);
    ContextVector context;
    bool is_tagged = a->kind == Kind::Tagged;
    if (is_tagged != (b->kind == Kind::Tagged))
      return fail("witnesses disagree on tagging");
    if (is_tagged) {
      if (a->context != b->context)
        return fail("witnesses carry different contexts");
      context = a->context;
      a = a->lhs;
      b = b->lhs;
    }
    if (a->kind != Kind::Atom || b->kind != Kind::Atom || !a->value ||
        !b->value || a->var != b->var || *a->value == *b->value)
      return fail("witnesses are not conflicting outcome values");
    if (premise(0).scope != premise(1).scope)
      return fail("witnesses hold in different scopes");
    FormulaPtr pair = conjunction(a, b);
    if (is_tagged) pair = tagged(context, pair);
    return {wrap_prefix(step.prefix, pair), premise(0).scope};
  }
  return fail("unknown rule '" + rule + "'");
}

}  // namespace detail

/// Re-execute a trace against its premises. Every recorded step must fire
/// and must reproduce its recorded conclusion at its recorded id; any
/// disagreement raises ReplayError. Premises beyond those the trace names
/// are tolerated but take no part. Returns the reconstructed knowledge base.
inline KnowledgeBase replay(const DerivationTrace& trace,
                            const std::vector<Judgment>& premises) {
  KnowledgeBase given(premises);
  for (const auto& p : trace.premises)
    if (!given.contains(p))
      throw ReplayError("trace premise not among the given premises: " +
                        p.key());
  KnowledgeBase kb(trace.premises);
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& step = trace.steps[i];
    Judgment recomputed = detail::recompute_step(kb, step, i);
    if (!(recomputed == step.conclusion))
      detail::replay_fail(i, "recorded conclusion differs from recomputation");
    auto [id, fresh] = kb.add(recomputed);
    if (!fresh) detail::replay_fail(i, "conclusion already present");
    if (id != step.id) detail::replay_fail(i, "judgment id drifted");
  }
  return kb;
}

}  // namespace epiq

#endif  // EPIQ_INFERENCE_HPP
