#ifndef EPIQ_FORMULA_HPP
#define EPIQ_FORMULA_HPP

// Immutable formula trees for a multi-agent epistemic language.
//
// The language is propositional logic plus two modal devices:
//   * Knows(agent, f)        -- K[A@2] f, optionally carrying a local/global
//                               reading mode: K[A@2,l] f
//   * Tagged(context, f)     -- ctx[(A@1,l);(B@2,l)] f, a formula whose truth
//                               is relative to a vector of (agent, mode) tags
//
// Atoms are either bare propositions ("p") or outcome equalities ("a=1",
// "w=fail"). Nodes are immutable and shared; equality is structural.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace epiq {

// ── Errors ──────────────────────────────────────────────────────────────────

/// Base class for every error this library throws on bad input or bad use.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ── Agents, modes, contexts ─────────────────────────────────────────────────

/// An agent, optionally pinned to a clock tick: "A" or "A@2".
/// Two instances are the same agent only if name and tick both agree;
/// A and A@2 are distinct.
struct AgentInstance {
  std::string name;
  std::optional<int> time;

  AgentInstance() = default;
  AgentInstance(std::string n) : name(std::move(n)) {}
  AgentInstance(std::string n, int t) : name(std::move(n)), time(t) {}

  friend bool operator==(const AgentInstance& a, const AgentInstance& b) {
    return a.name == b.name && a.time == b.time;
  }
  friend bool operator!=(const AgentInstance& a, const AgentInstance& b) {
    return !(a == b);
  }
  friend bool operator<(const AgentInstance& a, const AgentInstance& b) {
    if (a.name != b.name) return a.name < b.name;
    if (a.time.has_value() != b.time.has_value()) return !a.time.has_value();
    return a.time < b.time;
  }

  std::string str() const {
    return time ? name + "@" + std::to_string(*time) : name;
  }
};

/// Reading mode for a knowledge operator or context tag: local ("l") means
/// the statement is asserted within the agent's own perspective, global ("g")
/// from outside it.
enum class Mode { Local, Global };

inline char mode_char(Mode m) { return m == Mode::Local ? 'l' : 'g'; }

/// One context tag: which agent asserted the enclosed formula, and in which
/// mode they did so.
struct ContextEntry {
  AgentInstance agent;
  Mode mode = Mode::Local;

  friend bool operator==(const ContextEntry& a, const ContextEntry& b) {
    return a.agent == b.agent && a.mode == b.mode;
  }
  friend bool operator!=(const ContextEntry& a, const ContextEntry& b) {
    return !(a == b);
  }
  friend bool operator<(const ContextEntry& a, const ContextEntry& b) {
    if (a.agent != b.agent) return a.agent < b.agent;
    return a.mode < b.mode;
  }

  std::string str() const {
    return "(" + agent.str() + "," + mode_char(mode) + ")";
  }
};

/// Ordered list of context tags. Order is meaningful: tags accumulate
/// innermost-first as knowledge operators are folded into the context.
using ContextVector = std::vector<ContextEntry>;

inline std::string context_str(const ContextVector& ctx) {
  std::string out;
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (i) out += ";";
    out += ctx[i].str();
  }
  return out;
}

// ── Outcome domains ─────────────────────────────────────────────────────────

/// Declared finite value domains for outcome variables, e.g. a -> {0,1},
/// w -> {ok,fail}. Orders are as declared and meaningful for output.
using OutcomeDomains = std::map<std::string, std::vector<std::string>>;

// ── Formula nodes ───────────────────────────────────────────────────────────

enum class Kind { Atom, Not, And, Or, Implies, Iff, Knows, Tagged };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// One immutable formula node. Build through the factory functions below;
/// they maintain the invariants (Tagged never nests directly, hashes cached).
class Formula {
 public:
  Kind kind;

  // Kind::Atom — `value` absent means a bare proposition.
  std::string var;
  std::optional<std::string> value;

  // Children: unary nodes (Not, Knows, Tagged) use `lhs` only.
  FormulaPtr lhs;
  FormulaPtr rhs;

  // Kind::Knows
  AgentInstance agent;
  std::optional<Mode> mode;

  // Kind::Tagged
  ContextVector context;

  std::size_t hash = 0;

  // Constructed via factories; this type is an open struct on purpose so
  // pattern-matching code can read fields directly.
};

namespace detail {

inline void hash_mix(std::size_t& h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

inline std::size_t hash_agent(const AgentInstance& a) {
  std::size_t h = std::hash<std::string>{}(a.name);
  hash_mix(h, a.time ? static_cast<std::size_t>(*a.time) + 1 : 0);
  return h;
}

inline std::size_t hash_formula(const Formula& f) {
  std::size_t h = static_cast<std::size_t>(f.kind) * 0x100000001b3ULL;
  switch (f.kind) {
    case Kind::Atom:
      hash_mix(h, std::hash<std::string>{}(f.var));
      hash_mix(h, f.value ? std::hash<std::string>{}(*f.value) : 0);
      break;
    case Kind::Knows:
      hash_mix(h, hash_agent(f.agent));
      hash_mix(h, f.mode ? static_cast<std::size_t>(*f.mode) + 1 : 0);
      hash_mix(h, f.lhs->hash);
      break;
    case Kind::Tagged:
      for (const auto& e : f.context) {
        hash_mix(h, hash_agent(e.agent));
        hash_mix(h, static_cast<std::size_t>(e.mode));
      }
      hash_mix(h, f.lhs->hash);
      break;
    case Kind::Not:
      hash_mix(h, f.lhs->hash);
      break;
    default:
      hash_mix(h, f.lhs->hash);
      hash_mix(h, f.rhs->hash);
      break;
  }
  return h;
}

inline FormulaPtr make_node(Formula&& f) {
  f.hash = hash_formula(f);
  return std::make_shared<const Formula>(std::move(f));
}

}  // namespace detail

// ── Factories ───────────────────────────────────────────────────────────────

/// Bare proposition atom, e.g. prop("p").
inline FormulaPtr prop(std::string name) {
  Formula f;
  f.kind = Kind::Atom;
  f.var = std::move(name);
  return detail::make_node(std::move(f));
}

/// Outcome atom `var=value`, e.g. outcome("w", "fail").
inline FormulaPtr outcome(std::string var, std::string value) {
  Formula f;
  f.kind = Kind::Atom;
  f.var = std::move(var);
  f.value = std::move(value);
  return detail::make_node(std::move(f));
}

/// Outcome atom validated against declared domains; rejects unknown variables
/// and out-of-domain values.
inline FormulaPtr outcome(const OutcomeDomains& domains, const std::string& var,
                          const std::string& value) {
  auto it = domains.find(var);
  if (it == domains.end())
    throw Error("undeclared outcome variable '" + var + "'");
  if (std::find(it->second.begin(), it->second.end(), value) ==
      it->second.end())
    throw Error("value '" + value + "' not in the declared domain of '" + var +
                "'");
  return outcome(var, value);
}

inline FormulaPtr negation(FormulaPtr f) {
  Formula n;
  n.kind = Kind::Not;
  n.lhs = std::move(f);
  return detail::make_node(std::move(n));
}

namespace detail {
inline FormulaPtr binary(Kind k, FormulaPtr a, FormulaPtr b) {
  Formula n;
  n.kind = k;
  n.lhs = std::move(a);
  n.rhs = std::move(b);
  return make_node(std::move(n));
}
}  // namespace detail

inline FormulaPtr conjunction(FormulaPtr a, FormulaPtr b) {
  return detail::binary(Kind::And, std::move(a), std::move(b));
}
inline FormulaPtr disjunction(FormulaPtr a, FormulaPtr b) {
  return detail::binary(Kind::Or, std::move(a), std::move(b));
}
inline FormulaPtr implication(FormulaPtr a, FormulaPtr b) {
  return detail::binary(Kind::Implies, std::move(a), std::move(b));
}
inline FormulaPtr equivalence(FormulaPtr a, FormulaPtr b) {
  return detail::binary(Kind::Iff, std::move(a), std::move(b));
}

inline FormulaPtr knows(AgentInstance agent, FormulaPtr f,
                        std::optional<Mode> mode = std::nullopt) {
  Formula n;
  n.kind = Kind::Knows;
  n.agent = std::move(agent);
  n.mode = mode;
  n.lhs = std::move(f);
  return detail::make_node(std::move(n));
}

/// Tag `f` with a context. Tagged nodes never nest: tagging an already tagged
/// formula concatenates the vectors, inner tags first (the inner tags were
/// accumulated earlier, so they stay closest to the payload). An empty tag is
/// the identity.
inline FormulaPtr tagged(ContextVector ctx, FormulaPtr f) {
  Formula n;
  n.kind = Kind::Tagged;
  if (f->kind == Kind::Tagged) {
    n.context = f->context;
    n.context.insert(n.context.end(), ctx.begin(), ctx.end());
    n.lhs = f->lhs;
  } else {
    n.context = std::move(ctx);
    n.lhs = std::move(f);
  }
  if (n.context.empty()) return n.lhs;
  return detail::make_node(std::move(n));
}

// ── Structural comparison ───────────────────────────────────────────────────

namespace detail {

inline int cmp3(int a, int b) { return a < b ? -1 : a > b ? 1 : 0; }

template <typename T>
inline int cmp3v(const T& a, const T& b) {
  return a < b ? -1 : b < a ? 1 : 0;
}

inline int compare_agent(const AgentInstance& a, const AgentInstance& b) {
  if (int c = cmp3v(a.name, b.name)) return c;
  return cmp3v(a.time, b.time);
}

}  // namespace detail

/// Total structural order; 0 means equal.
inline int compare(const Formula& a, const Formula& b) {
  if (int c = detail::cmp3(static_cast<int>(a.kind), static_cast<int>(b.kind)))
    return c;
  switch (a.kind) {
    case Kind::Atom:
      if (int c = detail::cmp3v(a.var, b.var)) return c;
      return detail::cmp3v(a.value, b.value);
    case Kind::Knows: {
      if (int c = detail::compare_agent(a.agent, b.agent)) return c;
      if (int c = detail::cmp3v(a.mode, b.mode)) return c;
      return compare(*a.lhs, *b.lhs);
    }
    case Kind::Tagged: {
      if (int c = detail::cmp3v(a.context.size(), b.context.size())) return c;
      for (std::size_t i = 0; i < a.context.size(); ++i) {
        if (int c = detail::compare_agent(a.context[i].agent,
                                          b.context[i].agent))
          return c;
        if (int c = detail::cmp3(static_cast<int>(a.context[i].mode),
                                 static_cast<int>(b.context[i].mode)))
          return c;
      }
      return compare(*a.lhs, *b.lhs);
    }
    case Kind::Not:
      return compare(*a.lhs, *b.lhs);
    default:
      if (int c = compare(*a.lhs, *b.lhs)) return c;
      return compare(*a.rhs, *b.rhs);
  }
}

inline bool equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash) return false;
  return compare(*a, *b) == 0;
}

/// Strict weak order over shared formula nodes, for deterministic sets/maps.
struct FormulaLess {
  bool operator()(const FormulaPtr& a, const FormulaPtr& b) const {
    return compare(*a, *b) < 0;
  }
};

using FormulaSet = std::set<FormulaPtr, FormulaLess>;

// ── Printing ────────────────────────────────────────────────────────────────

// Canonical form: operands of every operator are parenthesised, so
// print . parse == id and parse . print == id hold with no precedence
// bookkeeping. A top-level atom prints bare.

inline std::string print(const FormulaPtr& f);

namespace detail {
inline std::string print_operand(const FormulaPtr& f) {
  return "(" + print(f) + ")";
}
}  // namespace detail

inline std::string print(const FormulaPtr& f) {
  switch (f->kind) {
    case Kind::Atom:
      return f->value ? f->var + "=" + *f->value : f->var;
    case Kind::Not:
      return "!" + detail::print_operand(f->lhs);
    case Kind::And:
      return detail::print_operand(f->lhs) + " & " +
             detail::print_operand(f->rhs);
    case Kind::Or:
      return detail::print_operand(f->lhs) + " | " +
             detail::print_operand(f->rhs);
    case Kind::Implies:
      return detail::print_operand(f->lhs) + " -> " +
             detail::print_operand(f->rhs);
    case Kind::Iff:
      return detail::print_operand(f->lhs) + " <-> " +
             detail::print_operand(f->rhs);
    case Kind::Knows: {
      std::string head = "K[" + f->agent.str();
      if (f->mode) head += std::string(",") + mode_char(*f->mode);
      head += "]";
      return head + " " + detail::print_operand(f->lhs);
    }
    case Kind::Tagged:
      return "ctx[" + context_str(f->context) + "] " +
             detail::print_operand(f->lhs);
  }
  throw Error("unreachable formula kind");
}

// ── Traversal ───────────────────────────────────────────────────────────────

/// All subformulas of `f`, including `f` itself, as a structural set.
inline FormulaSet subformulas(const FormulaPtr& f) {
  FormulaSet out;
  std::vector<FormulaPtr> stack{f};
  while (!stack.empty()) {
    FormulaPtr cur = stack.back();
    stack.pop_back();
    if (!out.insert(cur).second) continue;
    if (cur->lhs) stack.push_back(cur->lhs);
    if (cur->rhs) stack.push_back(cur->rhs);
  }
  return out;
}

/// Number of nodes in the tree (shared subtrees counted per occurrence).
inline std::size_t node_count(const FormulaPtr& f) {
  std::size_t n = 1;
  if (f->lhs) n += node_count(f->lhs);
  if (f->rhs) n += node_count(f->rhs);
  return n;
}

/// Tree depth; an atom has depth 1. Knows and Tagged each add one level.
inline std::size_t depth(const FormulaPtr& f) {
  std::size_t d = 0;
  if (f->lhs) d = depth(f->lhs);
  if (f->rhs) d = std::max(d, depth(f->rhs));
  return d + 1;
}

/// Every atom occurring in `f`.
inline FormulaSet atoms(const FormulaPtr& f) {
  FormulaSet out;
  for (const auto& g : subformulas(f))
    if (g->kind == Kind::Atom) out.insert(g);
  return out;
}

}  // namespace epiq

#endif  // EPIQ_FORMULA_HPP
