#ifndef EPIQ_SCENARIOS_HPP
#define EPIQ_SCENARIOS_HPP

// Two worked scenarios assembled from the library's parts.
//
// The first is a nested-observer experiment: a spin is measured by Alice,
// who prepares a second spin for Bob depending on her record; two outside
// agents then measure each friend's entire lab in an entangled basis. The
// quantum side is simulated exactly (states, isometries, Born weights); the
// reasoning side generates premise batteries for the derivation engine under
// three readings of the knowledge operator — knowledge-implies-truth,
// directed trust, and context tags — which respectively yield an outright
// contradiction, a contradiction localized in a cyclic trust structure, and
// a consistent knowledge base whose would-be contradiction is blocked by a
// context mismatch.
//
// The second is the classic hat puzzle: three wizards in a line, five hats
// of which two are black (1) and three are white (0), and two public
// announcements of ignorance that let the wizard who sees nothing name his
// own hat color.

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"
#include "epiq/inference.hpp"
#include "epiq/kripke.hpp"
#include "epiq/quantum.hpp"

namespace epiq {

// ── Semantics selection ─────────────────────────────────────────────────────

enum class Semantics { Truth, Trust, Context };

inline std::string semantics_name(Semantics s) {
  switch (s) {
    case Semantics::Truth: return "truth";
    case Semantics::Trust: return "trust";
    case Semantics::Context: return "context";
  }
  throw Error("unknown semantics");
}

inline Semantics semantics_from_name(const std::string& name) {
  if (name == "truth") return Semantics::Truth;
  if (name == "trust") return Semantics::Trust;
  if (name == "context") return Semantics::Context;
  throw Error("unknown semantics '" + name + "'");
}

inline AxiomSet axioms_for(Semantics s) {
  switch (s) {
    case Semantics::Truth: return AxiomSet::truth_axioms();
    case Semantics::Trust: return AxiomSet::trust_axioms();
    case Semantics::Context: return AxiomSet::context_axioms();
  }
  throw Error("unknown semantics");
}

// ── The nested-observer experiment ──────────────────────────────────────────

/// One scheduled action: at `tick`, `agent` measures the `measured`
/// registers and records the outcome variable `variable`. The final step is
/// the comparison of the two outside records and measures nothing new.
struct ScheduleStep {
  int tick = 0;
  std::string agent;
  std::string variable;               // empty for the comparison step
  std::vector<std::string> measured;  // register labels
  bool compare = false;
};

struct OutcomeAssignment {
  std::string variable;
  std::string value;
};

/// Registers R (Alice's spin), A (Alice's record), S (Bob's spin), B (Bob's
/// record), the initial product state, and the five-step schedule.
struct FRExperiment {
  std::vector<Register> registers;  // R, A, S, B in tensor order
  PureState initial;
  std::vector<ScheduleStep> schedule;

  // Custom experiments loaded from scenario files declare their families
  // inline and give the post-measurement state directly as `initial`.
  std::vector<std::pair<std::string, ProjectorFamily>> declared_families;
  bool prepared = false;

  const Register& reg(const std::string& label) const {
    for (const auto& r : registers)
      if (r.label == label) return r;
    throw Error("no register labeled '" + label + "'");
  }

  /// Measurement family for an outcome variable. Declared families take
  /// precedence; otherwise the built-in wiring applies: a and b are the
  /// friends' records in the computational basis, u and w the outside
  /// ok/fail measurements of the labs (R,A) and (S,B).
  ProjectorFamily family(const std::string& variable) const {
    for (const auto& [name, fam] : declared_families)
      if (name == variable) return fam;
    if (!declared_families.empty())
      throw Error("no declared family for variable '" + variable + "'");
    if (variable == "a") return z_family(reg("A"));
    if (variable == "b") return z_family(reg("B"));
    if (variable == "u") return okfail_family(reg("R"), reg("A"));
    if (variable == "w") return okfail_family(reg("S"), reg("B"));
    throw Error("no outcome variable '" + variable + "'");
  }

  /// The agent instance that records a variable, stamped with its tick.
  AgentInstance observer(const std::string& variable) const {
    for (const auto& step : schedule)
      if (step.variable == variable) return {step.agent, step.tick};
    throw Error("no outcome variable '" + variable + "'");
  }
};

/// The experiment: spin R starts in sqrt(1/3)|0> + sqrt(2/3)|1>, all records
/// ready, and the five steps run at ticks 1..5.
inline FRExperiment build_fr() {
  std::vector<Register> regs = {{"R", 2}, {"A", 2}, {"S", 2}, {"B", 2}};
  Amplitudes amp(16);
  amp[0] = std::sqrt(1.0 / 3.0);   // |0000>
  amp[8] = std::sqrt(2.0 / 3.0);   // |1000>
  PureState initial(regs, std::move(amp));
  std::vector<ScheduleStep> schedule = {
      {1, "A", "a", {"R"}, false},
      {2, "B", "b", {"S"}, false},
      {3, "U", "u", {"R", "A"}, false},
      {4, "W", "w", {"S", "B"}, false},
      {5, "U,W", "", {"R", "A", "S", "B"}, true},
  };
  return {std::move(regs), std::move(initial), std::move(schedule)};
}

/// State after both friends have measured (end of tick 2): Alice's spin
/// measurement is recorded unitarily into A, she prepares S as |0> or
/// |0>+|1> depending on her record, and Bob records S into B. The outside
/// agents' later measurements are the ok/fail families and add no evolution.
inline PureState prepared_state(const FRExperiment& exp) {
  if (exp.prepared) return exp.initial;
  PureState st = apply_isometry(
      exp.initial, measurement_isometry(z_family(exp.reg("R")), exp.reg("A")));
  const double h = 1.0 / std::sqrt(2.0);
  Matrix ch(4, 4);  // on (A, S): prepare S = |+> when the record reads 1
  ch.at(0, 0) = 1.0;
  ch.at(1, 1) = 1.0;
  ch.at(2, 2) = h;
  ch.at(2, 3) = h;
  ch.at(3, 2) = h;
  ch.at(3, 3) = -h;
  st = apply_unitary(st, ch, {"A", "S"});
  return apply_isometry(
      st, measurement_isometry(z_family(exp.reg("S")), exp.reg("B")));
}

/// Probability that both outside measurements read ok — the halting event.
inline double halt_probability(const FRExperiment& exp) {
  PureState psi = prepared_state(exp);
  ProjectorFamily fu = exp.family("u");
  ProjectorFamily fw = exp.family("w");
  const double pu = born_probability(psi, fu, "ok");
  if (pu < kZeroProb) return 0.0;
  return pu * born_probability(condition(psi, fu, "ok"), fw, "ok");
}

/// Joint distribution of the outside records, keyed "(u,w)".
inline std::map<std::string, double> joint_record_distribution(
    const FRExperiment& exp) {
  PureState psi = prepared_state(exp);
  ProjectorFamily fu = exp.family("u");
  ProjectorFamily fw = exp.family("w");
  std::map<std::string, double> dist;
  for (const std::string u : {"ok", "fail"}) {
    const double pu = born_probability(psi, fu, u);
    for (const std::string w : {"ok", "fail"}) {
      double p = 0.0;
      if (pu >= kZeroProb)
        p = pu * born_probability(condition(psi, fu, u), fw, w);
      dist["(" + u + "," + w + ")"] = p;
    }
  }
  return dist;
}

/// If conditioning the prepared state on `given` makes `query_variable`
/// certain, returns the certain outcome. Conditioning on an impossible
/// record raises ZeroProbabilityError.
inline std::optional<std::string> deterministic_implication(
    const FRExperiment& exp, const OutcomeAssignment& given,
    const std::string& query_variable) {
  PureState psi = prepared_state(exp);
  PureState conditioned =
      condition(psi, exp.family(given.variable), given.value);
  return certainty(conditioned, exp.family(query_variable));
}

/// P[query | given] when `collapse_variable`'s measurement collapses the
/// state into a classical mixture before the other two are evaluated.
inline double collapse_conditional(const FRExperiment& exp,
                                   const std::string& collapse_variable,
                                   const OutcomeAssignment& given,
                                   const OutcomeAssignment& query) {
  PureState psi = prepared_state(exp);
  Ensemble ens = collapse_measure(psi, exp.family(collapse_variable));
  ProjectorFamily fg = exp.family(given.variable);
  ProjectorFamily fq = exp.family(query.variable);
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& [p, branch] : ens.branches) {
    const double pg = born_probability(branch, fg, given.value);
    denominator += p * pg;
    if (pg >= kZeroProb)
      numerator += p * pg *
                   born_probability(condition(branch, fg, given.value), fq,
                                    query.value);
  }
  if (denominator < kZeroProb)
    throw ZeroProbabilityError("conditioning on a zero-probability record");
  return numerator / denominator;
}

/// The split prediction for Wigner's outcome given Alice saw 1: treating
/// Bob's measurement as a collapse yields 1/2, while the unitary record
/// model makes w=ok impossible.
inline double collapse_prediction(const FRExperiment& exp) {
  return collapse_conditional(exp, "b", {"a", "1"}, {"w", "ok"});
}

inline double unitary_prediction(const FRExperiment& exp) {
  PureState psi = prepared_state(exp);
  PureState given = condition(psi, exp.family("a"), "1");
  return born_probability(given, exp.family("w"), "ok");
}

// ── Reasoning premises for the experiment ───────────────────────────────────

/// The world the observations are scoped at: both outside records read ok.
inline const std::string& fr_observation_world() {
  static const std::string id = "(ok,ok)";
  return id;
}

/// Four-world model of the outside records (u,w). Each outside agent knows
/// its own record and nothing else, so U's relation groups worlds by u and
/// W's by w.
inline KripkeModel fr_kripke_model() {
  const std::vector<std::string> values = {"ok", "fail"};
  std::vector<World> worlds;
  for (const auto& u : values)
    for (const auto& w : values)
      worlds.push_back(World{"(" + u + "," + w + ")",
                             {{"u=ok", u == "ok"},
                              {"u=fail", u == "fail"},
                              {"w=ok", w == "ok"},
                              {"w=fail", w == "fail"}}});
  auto same = [&](int field) {
    EdgeSet edges;
    for (const auto& x : worlds)
      for (const auto& y : worlds) {
        const bool agree = field == 0
                               ? x.valuation.at("u=ok") == y.valuation.at("u=ok")
                               : x.valuation.at("w=ok") == y.valuation.at("w=ok");
        if (agree) edges.insert({x.id, y.id});
      }
    return edges;
  };
  AccessMap access;
  access[AgentInstance{"U"}] = same(0);
  access[AgentInstance{"W"}] = same(1);
  return KripkeModel(std::move(worlds), std::move(access), /*s5=*/true);
}

/// The cyclic trust structure of the experiment, as (truster, trusted)
/// pairs: Bob trusts Alice's reasoning at ticks 0..2, the first outside
/// agent trusts Bob, the second trusts the first, and Alice trusts the
/// second — closing the cycle.
inline TrustStructure fr_trust_structure() {
  const AgentInstance a0{"A", 0}, a1{"A", 1}, a2{"A", 2};
  const AgentInstance b2{"B", 2}, u3{"U", 3}, w4{"W", 4};
  TrustStructure t;
  t.add(b2, a0);
  t.add(b2, a1);
  t.add(b2, a2);
  t.add(u3, b2);
  t.add(w4, u3);
  t.add(a0, w4);
  t.add(a1, w4);
  t.add(a2, w4);
  return t;
}

struct PremiseSet {
  std::vector<Judgment> premises;
  TrustStructure trust;
};

/// Premise battery for one reading of the knowledge operator.
///
/// Truth: each agent (untimed) knows the three experiment lemmas
/// u=ok -> b=1, b=1 -> a=1, a=1 -> w=fail, plus the observations that both
/// outside records can read ok. Every lemma is certified by
/// `deterministic_implication` on the quantum side.
///
/// Trust: the timed higher-order battery — who knows at which tick what the
/// earlier agents knew — together with the same observations and the cyclic
/// trust structure.
///
/// Context: the trust battery with every knowledge operator carrying the
/// local mode, ready for compression into context vectors.
inline PremiseSet generate_premises(const FRExperiment& exp, Semantics s) {
  const std::string& obs = fr_observation_world();
  PremiseSet out;
  auto all_of = [](FormulaPtr f) { return Judgment{std::move(f), Scope::all()}; };
  auto observed = [&](FormulaPtr f) {
    return Judgment{std::move(f), Scope::at(obs)};
  };

  if (s == Semantics::Truth) {
    const std::vector<FormulaPtr> lemmas = {
        implication(outcome("u", "ok"), outcome("b", "1")),
        implication(outcome("b", "1"), outcome("a", "1")),
        implication(outcome("a", "1"), outcome("w", "fail")),
    };
    for (const auto& name : {"A", "B", "U", "W"}) {
      const AgentInstance agent{name};
      for (const auto& lemma : lemmas)
        out.premises.push_back(all_of(knows(agent, lemma)));
    }
    const AgentInstance u{"U"}, w{"W"};
    out.premises.push_back(observed(knows(u, outcome("u", "ok"))));
    out.premises.push_back(observed(knows(w, outcome("w", "ok"))));
    out.premises.push_back(observed(knows(w, knows(u, outcome("u", "ok")))));
    return out;
  }

  // Timed instances for the trust and context batteries. Ticks follow the
  // schedule: the friends' records at 1 and 2, the outside agents at 3 and
  // 4; A@2 and B@3 appear where a record is still held one tick later.
  const AgentInstance a1 = exp.observer("a");          // A@1
  const AgentInstance a2{a1.name, 2};
  const AgentInstance b2 = exp.observer("b");          // B@2
  const AgentInstance b3{b2.name, 3};
  const AgentInstance u3 = exp.observer("u");          // U@3
  const AgentInstance w4 = exp.observer("w");          // W@4

  const bool local = (s == Semantics::Context);
  const std::optional<Mode> mode =
      local ? std::optional<Mode>(Mode::Local) : std::nullopt;
  auto k = [&](const AgentInstance& agent, FormulaPtr f) {
    return knows(agent, std::move(f), mode);
  };

  FormulaPtr impl1 =
      implication(k(a1, outcome("a", "1")), k(w4, outcome("w", "fail")));
  FormulaPtr implb1 =
      implication(k(b2, outcome("b", "1")), k(a1, outcome("a", "1")));
  FormulaPtr implb2 =
      implication(k(b2, outcome("b", "1")), k(a2, outcome("a", "1")));
  FormulaPtr implu2 =
      implication(k(u3, outcome("u", "ok")), k(b2, outcome("b", "1")));
  FormulaPtr implu3 =
      implication(k(u3, outcome("u", "ok")), k(b3, outcome("b", "1")));

  out.premises.push_back(all_of(k(b2, k(a1, impl1))));
  out.premises.push_back(all_of(k(u3, k(b2, implb1))));
  out.premises.push_back(all_of(k(u3, k(b2, implb2))));
  out.premises.push_back(all_of(k(w4, k(u3, implu2))));
  out.premises.push_back(all_of(k(w4, k(u3, implu3))));
  out.premises.push_back(all_of(k(u3, k(b2, k(a1, impl1)))));
  out.premises.push_back(all_of(k(w4, k(u3, k(b2, k(a1, impl1))))));
  out.premises.push_back(all_of(k(w4, k(u3, k(b2, implb1)))));
  out.premises.push_back(all_of(k(w4, k(u3, k(b2, implb2)))));
  out.premises.push_back(observed(k(u3, outcome("u", "ok"))));
  out.premises.push_back(observed(k(w4, outcome("w", "ok"))));
  out.premises.push_back(observed(k(w4, k(u3, outcome("u", "ok")))));

  out.trust = fr_trust_structure();
  return out;
}

/// Saturate the premise battery of one semantics with its canonical axioms.
inline SaturationResult run_fr(Semantics s, std::size_t depth_bound = 12) {
  FRExperiment exp = build_fr();
  PremiseSet ps = generate_premises(exp, s);
  return saturate(ps.premises, axioms_for(s), ps.trust, depth_bound);
}

// ── The hat puzzle ──────────────────────────────────────────────────────────

/// Three wizards in a line with five hats, two black (1) and three white
/// (0). Ged sees Tehanu and Arren, Tehanu sees Arren, Arren sees nobody.
/// Worlds are hat assignments "(g,t,a)"; all three black is impossible.
struct HatPuzzle {
  KripkeModel model;
  std::vector<AgentInstance> wizards;  // Ged, Tehanu, Arren
};

inline HatPuzzle build_hats() {
  std::vector<World> worlds;
  std::vector<std::array<int, 3>> hats;
  for (int g = 0; g <= 1; ++g)
    for (int t = 0; t <= 1; ++t)
      for (int a = 0; a <= 1; ++a) {
        if (g == 1 && t == 1 && a == 1) continue;  // only two black hats
        std::string id = "(" + std::to_string(g) + "," + std::to_string(t) +
                         "," + std::to_string(a) + ")";
        std::map<std::string, bool> val;
        val["g=0"] = g == 0;
        val["g=1"] = g == 1;
        val["t=0"] = t == 0;
        val["t=1"] = t == 1;
        val["a=0"] = a == 0;
        val["a=1"] = a == 1;
        worlds.push_back(World{std::move(id), std::move(val)});
        hats.push_back({g, t, a});
      }
  // A wizard cannot distinguish worlds that agree on every hat it sees.
  auto relation = [&](const std::vector<int>& sees) {
    EdgeSet edges;
    for (std::size_t i = 0; i < worlds.size(); ++i)
      for (std::size_t j = 0; j < worlds.size(); ++j) {
        bool agree = true;
        for (int pos : sees) agree = agree && hats[i][pos] == hats[j][pos];
        if (agree) edges.insert({worlds[i].id, worlds[j].id});
      }
    return edges;
  };
  AccessMap access;
  access[AgentInstance{"Ged"}] = relation({1, 2});
  access[AgentInstance{"Tehanu"}] = relation({2});
  access[AgentInstance{"Arren"}] = relation({});
  HatPuzzle puzzle{KripkeModel(std::move(worlds), std::move(access), true),
                   {AgentInstance{"Ged"}, AgentInstance{"Tehanu"},
                    AgentInstance{"Arren"}}};
  return puzzle;
}

struct HatsSolution {
  // Surviving worlds before any announcement, after Ged's "I don't know",
  // and after Tehanu's.
  std::vector<std::vector<std::string>> stages;
  bool arren_knows_white = false;
  std::string conclusion;
};

/// Run the two ignorance announcements and read off Arren's knowledge.
inline HatsSolution solve_hats() {
  HatPuzzle puzzle = build_hats();
  auto ignorant = [](const AgentInstance& wizard, const std::string& var) {
    return negation(disjunction(knows(wizard, outcome(var, "0")),
                                knows(wizard, outcome(var, "1"))));
  };
  HatsSolution sol;
  KripkeModel m0 = puzzle.model;
  sol.stages.push_back(m0.world_ids());
  KripkeModel m1 = announce(m0, ignorant(AgentInstance{"Ged"}, "g"));
  sol.stages.push_back(m1.world_ids());
  KripkeModel m2 = announce(m1, ignorant(AgentInstance{"Tehanu"}, "t"));
  sol.stages.push_back(m2.world_ids());
  sol.arren_knows_white =
      valid(m2, knows(AgentInstance{"Arren"}, outcome("a", "0")));
  sol.conclusion = "Arren announces: white (t=3)";
  return sol;
}

}  // namespace epiq

#endif  // EPIQ_SCENARIOS_HPP
