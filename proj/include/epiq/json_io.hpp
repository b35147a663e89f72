#ifndef EPIQ_JSON_IO_HPP
#define EPIQ_JSON_IO_HPP

// JSON documents for Kripke models, derivation traces, and scenario files.
//
// All emitters build insertion-ordered JSON with a fixed field order, and
// every container serialized here iterates deterministically, so repeated
// runs over the same inputs produce byte-identical documents — golden files
// diff cleanly.
//
// Formulas travel as their canonical printed form and are parsed back on
// load; a round trip through JSON preserves structural equality.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epiq/formula.hpp"
#include "epiq/inference.hpp"
#include "epiq/kripke.hpp"
#include "epiq/parser.hpp"
#include "epiq/quantum.hpp"
#include "epiq/scenarios.hpp"

namespace epiq {

using Json = nlohmann::ordered_json;

/// Structurally malformed or inconsistent JSON document.
class JsonError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline const Json& require(const Json& doc, const std::string& key,
                           const std::string& what) {
  if (!doc.is_object() || !doc.contains(key))
    throw JsonError(what + ": missing field '" + key + "'");
  return doc.at(key);
}

template <typename T>
T get_as(const Json& value, const std::string& what) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw JsonError(what + ": wrong type for value " + value.dump());
  }
}

template <typename T>
T field(const Json& doc, const std::string& key, const std::string& what) {
  return get_as<T>(require(doc, key, what), what + "." + key);
}

// "A" or "A@3" back into an agent instance.
inline AgentInstance agent_from_str(const std::string& s) {
  const auto at = s.find('@');
  if (at == std::string::npos) {
    if (s.empty()) throw JsonError("empty agent name");
    return AgentInstance{s};
  }
  const std::string name = s.substr(0, at);
  const std::string tick = s.substr(at + 1);
  if (name.empty() || tick.empty() ||
      tick.find_first_not_of("0123456789") != std::string::npos)
    throw JsonError("bad agent instance '" + s + "'");
  return AgentInstance{name, std::stoi(tick)};
}

inline Mode mode_from_char(const std::string& m, const std::string& where) {
  if (m == "l") return Mode::Local;
  if (m == "g") return Mode::Global;
  throw JsonError("bad mode '" + m + "' in " + where);
}

// "A@1" or "A@1^l" back into a prefix entry.
inline PrefixEntry prefix_entry_from_str(const std::string& s) {
  PrefixEntry e;
  const auto caret = s.find('^');
  if (caret == std::string::npos) {
    e.agent = agent_from_str(s);
  } else {
    e.agent = agent_from_str(s.substr(0, caret));
    e.mode = mode_from_char(s.substr(caret + 1), "prefix '" + s + "'");
  }
  return e;
}

// Comma-joined prefix entries; "" is the empty prefix.
inline Prefix prefix_from_str(const std::string& s) {
  Prefix p;
  std::size_t start = 0;
  while (start < s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    p.push_back(prefix_entry_from_str(s.substr(start, comma - start)));
    start = comma + 1;
  }
  return p;
}

// "(A@1,l)" back into a context entry.
inline ContextEntry context_entry_from_str(const std::string& s) {
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    throw JsonError("bad context entry '" + s + "'");
  const std::string inner = s.substr(1, s.size() - 2);
  const auto comma = inner.rfind(',');
  if (comma == std::string::npos)
    throw JsonError("bad context entry '" + s + "'");
  ContextEntry e;
  e.agent = agent_from_str(inner.substr(0, comma));
  e.mode = mode_from_char(inner.substr(comma + 1), "context '" + s + "'");
  return e;
}

// Semicolon-joined context entries; "" is the empty vector.
inline ContextVector context_from_str(const std::string& s) {
  ContextVector ctx;
  std::size_t start = 0;
  while (start < s.size()) {
    auto semi = s.find(';', start);
    if (semi == std::string::npos) semi = s.size();
    ctx.push_back(context_entry_from_str(s.substr(start, semi - start)));
    start = semi + 1;
  }
  return ctx;
}

inline FormulaPtr formula_from_str(const std::string& s,
                                   const std::string& what) {
  try {
    return parse(s);
  } catch (const ParseError& e) {
    throw JsonError(what + ": unparsable formula '" + s + "' (" + e.what() +
                    ")");
  }
}

}  // namespace detail

/// "*" is the all-worlds scope; anything else names a world.
inline Scope scope_from_str(const std::string& s) {
  return s == "*" ? Scope::all() : Scope::at(s);
}

// ── Kripke models ───────────────────────────────────────────────────────────

inline Json model_to_json(const KripkeModel& m) {
  Json worlds = Json::array();
  for (const auto& id : m.world_ids()) {
    Json w;
    w["id"] = id;
    Json valuation = Json::object();
    for (const auto& [atom, truth] : m.world(id).valuation)
      valuation[atom] = truth;
    w["valuation"] = std::move(valuation);
    worlds.push_back(std::move(w));
  }
  Json relations = Json::object();
  for (const auto& [agent, edges] : m.access()) {
    Json pairs = Json::array();
    for (const auto& [s, t] : edges) pairs.push_back(Json::array({s, t}));
    relations[agent.str()] = std::move(pairs);
  }
  Json doc;
  doc["worlds"] = std::move(worlds);
  doc["relations"] = std::move(relations);
  doc["s5"] = m.s5();
  return doc;
}

/// Builds the model, running the same validation as the in-memory
/// constructor: unknown edge endpoints and S5 violations throw `Error`
/// naming the offending agent and world pair.
inline KripkeModel model_from_json(const Json& doc) {
  std::vector<World> worlds;
  for (const auto& w : detail::require(doc, "worlds", "model")) {
    World world;
    world.id = detail::field<std::string>(w, "id", "world");
    if (w.contains("valuation")) {
      const Json& valuation = w.at("valuation");
      if (!valuation.is_object())
        throw JsonError("world '" + world.id + "': valuation is not a map");
      for (const auto& [atom, truth] : valuation.items())
        world.valuation[atom] =
            detail::get_as<bool>(truth, "valuation of '" + atom + "'");
    }
    worlds.push_back(std::move(world));
  }
  AccessMap access;
  if (doc.contains("relations")) {
    const Json& relations = doc.at("relations");
    if (!relations.is_object())
      throw JsonError("model: relations is not a map");
    for (const auto& [name, pairs] : relations.items()) {
      EdgeSet edges;
      for (const auto& pair : pairs) {
        if (!pair.is_array() || pair.size() != 2)
          throw JsonError("relation for " + name +
                          ": edges must be [from, to] pairs");
        edges.insert({detail::get_as<std::string>(pair[0], "edge endpoint"),
                      detail::get_as<std::string>(pair[1], "edge endpoint")});
      }
      access[detail::agent_from_str(name)] = std::move(edges);
    }
  }
  const bool s5 = doc.contains("s5")
                      ? detail::field<bool>(doc, "s5", "model")
                      : true;
  return KripkeModel(std::move(worlds), std::move(access), s5);
}

// ── Judgments and derivation traces ─────────────────────────────────────────

inline Json judgment_to_json(const Judgment& j, std::size_t id) {
  Json out;
  out["id"] = id;
  out["formula"] = print(j.formula);
  out["scope"] = j.scope.str();
  return out;
}

inline Judgment judgment_from_json(const Json& doc) {
  return Judgment{
      detail::formula_from_str(
          detail::field<std::string>(doc, "formula", "judgment"), "judgment"),
      scope_from_str(detail::field<std::string>(doc, "scope", "judgment"))};
}

inline Json trace_to_json(const DerivationTrace& trace) {
  Json premises = Json::array();
  for (std::size_t i = 0; i < trace.premises.size(); ++i)
    premises.push_back(judgment_to_json(trace.premises[i], i));

  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    Json step;
    step["id"] = s.id;
    step["rule"] = s.rule;
    step["premises"] = s.premises;
    step["prefix"] = prefix_str(s.prefix);
    step["conclusion"] = print(s.conclusion.formula);
    step["scope"] = s.conclusion.scope.str();
    if (s.edge) step["edge"] = *s.edge;
    steps.push_back(std::move(step));
  }

  Json doc;
  doc["premises"] = std::move(premises);
  doc["steps"] = std::move(steps);
  doc["verdict"] = trace.contradiction ? "contradiction" : "consistent";
  doc["bounded"] = trace.bounded;
  doc["depth_bound"] = trace.depth_bound;

  Json blocked = Json::array();
  for (const auto& b : trace.blocked) {
    Json pair;
    pair["first"] = b.first;
    pair["second"] = b.second;
    pair["first_context"] = context_str(b.first_context);
    pair["second_context"] = context_str(b.second_context);
    blocked.push_back(std::move(pair));
  }
  doc["blocked"] = std::move(blocked);

  if (trace.contradiction) {
    const auto& w = *trace.contradiction;
    Json witness;
    witness["first"] = w.first;
    witness["second"] = w.second;
    witness["conclusion"] = w.conclusion;
    witness["variable"] = w.variable;
    doc["contradiction"] = std::move(witness);
  }
  return doc;
}

inline DerivationTrace trace_from_json(const Json& doc) {
  DerivationTrace trace;
  for (const auto& p : detail::require(doc, "premises", "trace"))
    trace.premises.push_back(judgment_from_json(p));

  for (const auto& s : detail::require(doc, "steps", "trace")) {
    TraceStep step;
    step.id = detail::field<std::size_t>(s, "id", "step");
    step.rule = detail::field<std::string>(s, "rule", "step");
    for (const auto& pid : detail::require(s, "premises", "step"))
      step.premises.push_back(detail::get_as<std::size_t>(pid, "premise id"));
    step.prefix = detail::prefix_from_str(
        detail::field<std::string>(s, "prefix", "step"));
    step.conclusion = Judgment{
        detail::formula_from_str(
            detail::field<std::string>(s, "conclusion", "step"), "step"),
        scope_from_str(detail::field<std::string>(s, "scope", "step"))};
    if (s.contains("edge"))
      step.edge = detail::field<std::string>(s, "edge", "step");
    trace.steps.push_back(std::move(step));
  }

  trace.bounded = detail::field<bool>(doc, "bounded", "trace");
  trace.depth_bound = detail::field<std::size_t>(doc, "depth_bound", "trace");

  if (doc.contains("blocked")) {
    for (const auto& b : doc.at("blocked")) {
      BlockedPair pair;
      pair.first = detail::field<std::size_t>(b, "first", "blocked");
      pair.second = detail::field<std::size_t>(b, "second", "blocked");
      pair.first_context = detail::context_from_str(
          detail::field<std::string>(b, "first_context", "blocked"));
      pair.second_context = detail::context_from_str(
          detail::field<std::string>(b, "second_context", "blocked"));
      trace.blocked.push_back(std::move(pair));
    }
  }

  const auto verdict = detail::field<std::string>(doc, "verdict", "trace");
  if (verdict == "contradiction") {
    const Json& w = detail::require(doc, "contradiction", "trace");
    ContradictionWitness witness;
    witness.first = detail::field<std::size_t>(w, "first", "contradiction");
    witness.second = detail::field<std::size_t>(w, "second", "contradiction");
    witness.conclusion =
        detail::field<std::size_t>(w, "conclusion", "contradiction");
    witness.variable =
        detail::field<std::string>(w, "variable", "contradiction");
    trace.contradiction = std::move(witness);
  } else if (verdict == "consistent") {
    if (doc.contains("contradiction"))
      throw JsonError("trace: verdict is consistent but a contradiction "
                      "witness is present");
  } else {
    throw JsonError("trace: unknown verdict '" + verdict + "'");
  }
  return trace;
}

// ── Scenario documents ──────────────────────────────────────────────────────

/// One directed trust edge: `truster` adopts what it knows `trusted` knows.
struct TrustEdgeSpec {
  AgentInstance truster;
  AgentInstance trusted;
};

/// A scenario file: which experiment, under which reading of the knowledge
/// operator, which measurement model, an optional trust override, and the
/// saturation depth. Custom experiments carry registers, amplitudes,
/// schedule, and measurement families inline; their `initial` state is taken
/// as already prepared (all records written).
struct ScenarioDoc {
  std::string experiment = "fr";  // "fr" | "hats" | "custom"
  Semantics semantics = Semantics::Truth;
  std::string model = "unitary";  // "unitary" | "collapse"
  std::optional<std::vector<TrustEdgeSpec>> trust_edges;
  std::size_t depth_bound = 12;
  std::optional<FRExperiment> custom;
};

namespace detail {

inline Json amplitudes_to_json(const Amplitudes& amp) {
  Json out = Json::array();
  for (const auto& c : amp)
    out.push_back(Json::array({c.real(), c.imag()}));
  return out;
}

inline Amplitudes amplitudes_from_json(const Json& doc,
                                       const std::string& what) {
  Amplitudes amp;
  if (!doc.is_array()) throw JsonError(what + ": expected an array");
  for (const auto& entry : doc) {
    if (!entry.is_array() || entry.size() != 2)
      throw JsonError(what + ": amplitudes are [re, im] pairs");
    amp.emplace_back(get_as<double>(entry[0], what),
                     get_as<double>(entry[1], what));
  }
  return amp;
}

// A basis vector in a family declaration: either a [re, im]-pair array or
// one of the built-in names "okminus" / "failplus".
inline Amplitudes basis_vector_from_json(const Json& doc,
                                         const std::string& what) {
  if (doc.is_string()) {
    const auto name = doc.get<std::string>();
    if (name == "okminus") return okminus_vector();
    if (name == "failplus") return failplus_vector();
    throw JsonError(what + ": unknown built-in vector '" + name + "'");
  }
  return amplitudes_from_json(doc, what);
}

inline Json family_to_json(const ProjectorFamily& family) {
  Json regs = Json::array();
  for (const auto& r : family.registers) {
    Json reg;
    reg["label"] = r.label;
    reg["dim"] = r.dim;
    regs.push_back(std::move(reg));
  }
  Json projectors = Json::object();
  for (const auto& [label, p] : family.projectors) {
    Json rows = Json::array();
    for (int i = 0; i < p.rows; ++i) {
      Json row = Json::array();
      for (int j = 0; j < p.cols; ++j)
        row.push_back(Json::array({p.at(i, j).real(), p.at(i, j).imag()}));
      rows.push_back(std::move(row));
    }
    projectors[label] = std::move(rows);
  }
  Json out;
  out["registers"] = std::move(regs);
  out["projectors"] = std::move(projectors);
  return out;
}

inline std::vector<Register> registers_from_json(const Json& doc,
                                                 const std::string& what) {
  std::vector<Register> regs;
  for (const auto& r : doc) {
    Register reg;
    reg.label = field<std::string>(r, "label", what);
    reg.dim = r.contains("dim") ? field<int>(r, "dim", what) : 2;
    regs.push_back(std::move(reg));
  }
  return regs;
}

// Family declaration forms:
//   {"type": "z", "register": "A"}
//   {"type": "okfail", "registers": ["R", "A"]}
//   {"type": "basis", "registers": [...decls...],
//    "vectors": {"label": [[re,im],...] | "okminus" | "failplus", ...}}
// and the resolved form emitted by scenario_to_json:
//   {"registers": [...decls...], "projectors": {"label": [[[re,im],...],...]}}
inline ProjectorFamily family_from_json(const Json& doc,
                                        const FRExperiment& exp,
                                        const std::string& what) {
  if (!doc.contains("type") && doc.contains("projectors")) {
    auto regs = registers_from_json(require(doc, "registers", what), what);
    std::vector<std::pair<std::string, Matrix>> projs;
    for (const auto& [label, rows] : doc.at("projectors").items()) {
      const int n = static_cast<int>(rows.size());
      Matrix p(n, n);
      for (int i = 0; i < n; ++i) {
        const Json& row = rows[i];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
          throw JsonError(what + ": projector '" + label +
                          "' is not a square matrix");
        for (int j = 0; j < n; ++j) {
          const Json& entry = row[j];
          if (!entry.is_array() || entry.size() != 2)
            throw JsonError(what + ": matrix entries are [re, im] pairs");
          p.at(i, j) = Complex(get_as<double>(entry[0], what),
                               get_as<double>(entry[1], what));
        }
      }
      projs.emplace_back(label, std::move(p));
    }
    return ProjectorFamily(std::move(regs), std::move(projs));
  }
  const auto type = field<std::string>(doc, "type", what);
  if (type == "z")
    return z_family(exp.reg(field<std::string>(doc, "register", what)));
  if (type == "okfail") {
    const Json& regs = require(doc, "registers", what);
    if (!regs.is_array() || regs.size() != 2)
      throw JsonError(what + ": okfail needs exactly two registers");
    return okfail_family(exp.reg(regs[0].get<std::string>()),
                         exp.reg(regs[1].get<std::string>()));
  }
  if (type == "basis") {
    auto regs = registers_from_json(require(doc, "registers", what), what);
    std::vector<std::pair<std::string, Amplitudes>> basis;
    for (const auto& [label, vec] :
         require(doc, "vectors", what).items())
      basis.emplace_back(
          label, basis_vector_from_json(vec, what + ".vectors." + label));
    return basis_family(std::move(regs), basis);
  }
  throw JsonError(what + ": unknown family type '" + type + "'");
}

inline std::vector<ScheduleStep> schedule_from_json(const Json& doc,
                                                    const std::string& what) {
  std::vector<ScheduleStep> schedule;
  for (const auto& s : doc) {
    ScheduleStep step;
    step.tick = field<int>(s, "tick", what);
    step.agent = field<std::string>(s, "agent", what);
    if (s.contains("variable"))
      step.variable = field<std::string>(s, "variable", what);
    if (s.contains("measured"))
      for (const auto& label : s.at("measured"))
        step.measured.push_back(get_as<std::string>(label, what));
    if (s.contains("compare"))
      step.compare = field<bool>(s, "compare", what);
    schedule.push_back(std::move(step));
  }
  return schedule;
}

}  // namespace detail

inline std::vector<TrustEdgeSpec> trust_edges_from_json(const Json& edges) {
  std::vector<TrustEdgeSpec> out;
  for (const auto& e : edges)
    out.push_back(
        {detail::agent_from_str(
             detail::field<std::string>(e, "truster", "trust edge")),
         detail::agent_from_str(
             detail::field<std::string>(e, "trusted", "trust edge"))});
  return out;
}

inline Json scenario_to_json(const ScenarioDoc& doc) {
  Json out;
  out["experiment"] = doc.experiment;
  out["semantics"] = semantics_name(doc.semantics);
  out["model"] = doc.model;
  out["depth_bound"] = doc.depth_bound;
  if (doc.trust_edges) {
    Json edges = Json::array();
    for (const auto& e : *doc.trust_edges) {
      Json edge;
      edge["truster"] = e.truster.str();
      edge["trusted"] = e.trusted.str();
      edges.push_back(std::move(edge));
    }
    out["trust_edges"] = std::move(edges);
  }
  if (doc.custom) {
    const FRExperiment& exp = *doc.custom;
    Json regs = Json::array();
    for (const auto& r : exp.registers) {
      Json reg;
      reg["label"] = r.label;
      reg["dim"] = r.dim;
      regs.push_back(std::move(reg));
    }
    out["registers"] = std::move(regs);
    out["initial"] = detail::amplitudes_to_json(exp.initial.amplitudes);
    Json schedule = Json::array();
    for (const auto& s : exp.schedule) {
      Json step;
      step["tick"] = s.tick;
      step["agent"] = s.agent;
      step["variable"] = s.variable;
      step["measured"] = s.measured;
      step["compare"] = s.compare;
      schedule.push_back(std::move(step));
    }
    out["schedule"] = std::move(schedule);
    Json families = Json::object();
    for (const auto& [variable, family] : exp.declared_families)
      families[variable] = detail::family_to_json(family);
    out["families"] = std::move(families);
  }
  return out;
}

inline ScenarioDoc scenario_from_json(const Json& doc) {
  ScenarioDoc out;
  out.experiment = detail::field<std::string>(doc, "experiment", "scenario");
  if (out.experiment != "fr" && out.experiment != "hats" &&
      out.experiment != "custom")
    throw JsonError("scenario: unknown experiment '" + out.experiment + "'");
  if (doc.contains("semantics"))
    out.semantics = semantics_from_name(
        detail::field<std::string>(doc, "semantics", "scenario"));
  if (doc.contains("model")) {
    out.model = detail::field<std::string>(doc, "model", "scenario");
    if (out.model != "unitary" && out.model != "collapse")
      throw JsonError("scenario: unknown model '" + out.model + "'");
  }
  if (doc.contains("depth_bound"))
    out.depth_bound =
        detail::field<std::size_t>(doc, "depth_bound", "scenario");
  if (doc.contains("trust_edges"))
    out.trust_edges = trust_edges_from_json(doc.at("trust_edges"));
  if (out.experiment == "custom") {
    auto registers = detail::registers_from_json(
        detail::require(doc, "registers", "scenario"), "register");
    PureState initial(
        registers,
        detail::amplitudes_from_json(
            detail::require(doc, "initial", "scenario"), "scenario.initial"));
    FRExperiment exp{std::move(registers), std::move(initial), {}};
    if (doc.contains("schedule"))
      exp.schedule = detail::schedule_from_json(doc.at("schedule"), "step");
    if (doc.contains("families"))
      for (const auto& [variable, family] : doc.at("families").items())
        exp.declared_families.emplace_back(
            variable, detail::family_from_json(
                          family, exp, "family '" + variable + "'"));
    exp.prepared = true;
    out.custom = std::move(exp);
  }
  return out;
}

/// Trust structure from an override list (used when a scenario document
/// replaces the built-in edges).
inline TrustStructure trust_from_edges(const std::vector<TrustEdgeSpec>& edges) {
  TrustStructure trust;
  for (const auto& e : edges) trust.add(e.truster, e.trusted);
  return trust;
}

}  // namespace epiq

#endif  // EPIQ_JSON_IO_HPP
