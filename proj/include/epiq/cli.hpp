#ifndef EPIQ_CLI_HPP
#define EPIQ_CLI_HPP

// Command-line front end: run the shipped scenarios, model-check formulas,
// saturate user premises, and compare the relative-state record rule with
// the Born rule. Implemented against abstract streams so the whole surface
// is testable in-process.
//
// Exit codes: 0 on success or a consistent knowledge base, 2 when a
// derivation ends in a contradiction, 1 on usage or input errors.

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "epiq/formula.hpp"
#include "epiq/inference.hpp"
#include "epiq/json_io.hpp"
#include "epiq/kripke.hpp"
#include "epiq/parser.hpp"
#include "epiq/quantum.hpp"
#include "epiq/scenarios.hpp"

namespace epiq {

namespace cli_detail {

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

inline std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

inline void print_trace(const DerivationTrace& trace, std::ostream& out) {
  out << "Premises\n";
  for (std::size_t i = 0; i < trace.premises.size(); ++i) {
    const Judgment& j = trace.premises[i];
    out << "  [" << i << "] " << j.scope.str() << " | " << print(j.formula)
        << "\n";
  }
  if (!trace.steps.empty()) out << "Steps\n";
  for (const auto& s : trace.steps) {
    out << "  [" << s.id << "] " << s.rule;
    if (s.edge) out << " (" << *s.edge << ")";
    out << " from {";
    for (std::size_t i = 0; i < s.premises.size(); ++i) {
      if (i) out << ", ";
      out << s.premises[i];
    }
    out << "}";
    if (!s.prefix.empty()) out << " under " << prefix_str(s.prefix);
    out << ": " << print(s.conclusion.formula) << " @ "
        << s.conclusion.scope.str() << "\n";
  }
  if (trace.bounded)
    out << "Note: the depth bound " << trace.depth_bound
        << " suppressed at least one conclusion\n";
  for (const auto& b : trace.blocked)
    out << "Blocked: [" << b.first << "] ctx " << context_str(b.first_context)
        << " vs [" << b.second << "] ctx " << context_str(b.second_context)
        << " — contexts differ, no joint conclusion\n";
  if (trace.contradiction) {
    const auto& w = *trace.contradiction;
    out << "Verdict: contradiction on '" << w.variable << "' from judgments ["
        << w.first << "] and [" << w.second << "]\n";
  } else {
    out << "Verdict: consistent (saturated at depth " << trace.depth_bound
        << ")\n";
  }
}

// ── fr ──────────────────────────────────────────────────────────────────────

inline int cmd_fr_custom(const FRExperiment& exp, const std::string& format,
                         std::ostream& out) {
  const PureState st = prepared_state(exp);

  // Outcome distributions of every declared family, in declaration order.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>
      distributions;
  for (const auto& [variable, family] : exp.declared_families) {
    std::vector<std::pair<std::string, double>> dist;
    for (const auto& label : family.labels())
      dist.emplace_back(label, born_probability(st, family, label));
    distributions.emplace_back(variable, std::move(dist));
  }

  // Deterministic implications among declared variables.
  struct Implication {
    std::string variable, value, query, forces;
  };
  std::vector<Implication> implications;
  for (const auto& [v1, family] : exp.declared_families) {
    for (const auto& label : family.labels()) {
      if (born_probability(st, family, label) < kZeroProb) continue;
      for (const auto& [v2, _] : exp.declared_families) {
        if (v1 == v2) continue;
        if (auto forced = deterministic_implication(exp, {v1, label}, v2))
          implications.push_back({v1, label, v2, *forced});
      }
    }
  }

  if (format == "json") {
    Json doc;
    doc["experiment"] = "custom";
    Json dists = Json::object();
    for (const auto& [variable, dist] : distributions) {
      Json d = Json::object();
      for (const auto& [label, p] : dist) d[label] = p;
      dists[variable] = std::move(d);
    }
    doc["distributions"] = std::move(dists);
    Json imps = Json::array();
    for (const auto& imp : implications) {
      Json entry;
      entry["given"] = imp.variable + "=" + imp.value;
      entry["query"] = imp.query;
      entry["forces"] = imp.forces;
      imps.push_back(std::move(entry));
    }
    doc["implications"] = std::move(imps);
    out << doc.dump(2) << "\n";
    return 0;
  }

  out << "Custom experiment (" << st.dim()
      << "-dimensional prepared state; derivation batteries apply to the "
         "built-in experiment only)\n";
  out << "Outcome distributions\n";
  for (const auto& [variable, dist] : distributions) {
    for (const auto& [label, p] : dist)
      out << "  P(" << variable << "=" << label << ") = " << num(p) << "\n";
  }
  out << "Deterministic implications\n";
  if (implications.empty()) out << "  (none)\n";
  for (const auto& imp : implications)
    out << "  " << imp.variable << "=" << imp.value << " forces " << imp.query
        << "=" << imp.forces << "\n";
  return 0;
}

inline int cmd_fr(const ScenarioDoc& doc, const std::string& format,
                  std::ostream& out) {
  if (doc.experiment == "custom") {
    if (!doc.custom) throw Error("custom scenario carries no experiment");
    return cmd_fr_custom(*doc.custom, format, out);
  }

  const FRExperiment exp = build_fr();
  const auto records = joint_record_distribution(exp);
  const double halt = halt_probability(exp);
  const bool collapse = doc.model == "collapse";
  const double prediction =
      collapse ? collapse_prediction(exp) : unitary_prediction(exp);

  // The premise battery encodes the agents' unitary-model reasoning; under
  // the collapse model it is not derivable, so only the quantum analysis is
  // reported and the run is trivially consistent.
  std::optional<SaturationResult> result;
  if (!collapse) {
    PremiseSet battery = generate_premises(exp, doc.semantics);
    if (doc.trust_edges) battery.trust = trust_from_edges(*doc.trust_edges);
    result = saturate(battery.premises, axioms_for(doc.semantics),
                      battery.trust, doc.depth_bound);
  }
  const bool contradictory = result && result->contradictory();

  if (format == "json") {
    Json j;
    j["experiment"] = "fr";
    j["semantics"] = semantics_name(doc.semantics);
    j["model"] = doc.model;
    Json rec = Json::object();
    for (const auto& [key, p] : records) rec[key] = p;
    j["records"] = std::move(rec);
    j["halt_probability"] = halt;
    j["w_ok_given_a1"] = prediction;
    if (result) j["trace"] = trace_to_json(result->trace);
    j["verdict"] = contradictory ? "contradiction" : "consistent";
    out << j.dump(2) << "\n";
  } else {
    out << "Nested-observer experiment\n";
    out << "  semantics: " << semantics_name(doc.semantics)
        << " | model: " << doc.model << " | depth bound: " << doc.depth_bound
        << "\n\n";
    out << "Records of the outside measurements (u over lab R+A, w over lab "
           "S+B)\n";
    for (const auto& [key, p] : records)
      out << "  P(u,w) = " << key << ": " << num(p) << "\n";
    out << "  halt probability P(u=ok, w=ok) = " << num(halt) << "\n";
    out << "  P(w=ok | a=1) under the " << doc.model
        << " model = " << num(prediction) << "\n\n";
    if (result) {
      out << "Derivation under the '" << semantics_name(doc.semantics)
          << "' reading\n";
      print_trace(result->trace, out);
      if (contradictory) {
        const auto& w = *result->trace.contradiction;
        const Judgment& conclusion = result->kb.at(w.conclusion);
        out << "Final judgment: " << print(conclusion.formula) << " @ "
            << conclusion.scope.str() << "\n";
      }
    } else {
      out << "No derivation: the premise battery describes unitary-model "
             "reasoning.\n";
    }
  }
  return contradictory ? 2 : 0;
}

// ── hats ────────────────────────────────────────────────────────────────────

inline int cmd_hats(const std::string& format, std::ostream& out) {
  const HatsSolution sol = solve_hats();

  if (format == "json") {
    Json doc;
    doc["stages"] = sol.stages;
    doc["arren_knows_white"] = sol.arren_knows_white;
    doc["conclusion"] = sol.conclusion;
    out << doc.dump(2) << "\n";
    return 0;
  }

  out << "Hat puzzle: three wizards in a line, two black hats (1), three "
         "white (0)\n";
  out << "Worlds are (Ged,Tehanu,Arren); Ged sees the two ahead, Tehanu sees "
         "Arren, Arren sees no one.\n\n";
  const std::vector<std::string> titles = {
      "t=0: initial possible worlds",
      "t=1: after Ged announces ignorance",
      "t=2: after Tehanu announces ignorance",
  };
  for (std::size_t i = 0; i < sol.stages.size(); ++i) {
    out << titles[i] << " — " << sol.stages[i].size() << " worlds\n  ";
    for (std::size_t k = 0; k < sol.stages[i].size(); ++k) {
      if (k) out << " ";
      out << sol.stages[i][k];
    }
    out << "\n";
  }
  out << sol.conclusion << "\n";
  return 0;
}

// ── check ───────────────────────────────────────────────────────────────────

inline int cmd_check(const std::string& model_path,
                     const std::string& formula_text,
                     const std::optional<std::string>& world,
                     const std::string& format, std::ostream& out) {
  const KripkeModel m = model_from_json(load_json(model_path));
  const FormulaPtr f = parse(formula_text);

  if (world) {
    const bool value = evaluate(m, *world, f);
    if (format == "json") {
      Json doc;
      doc["formula"] = print(f);
      doc["world"] = *world;
      doc["value"] = value;
      out << doc.dump(2) << "\n";
    } else {
      out << print(f) << " is " << (value ? "true" : "false") << " at "
          << *world << "\n";
    }
    return 0;
  }

  std::optional<std::string> counterexample;
  for (const auto& id : m.world_ids())
    if (!evaluate(m, id, f)) {
      counterexample = id;
      break;
    }
  if (format == "json") {
    Json doc;
    doc["formula"] = print(f);
    doc["valid"] = !counterexample.has_value();
    if (counterexample) doc["counterexample"] = *counterexample;
    out << doc.dump(2) << "\n";
  } else if (counterexample) {
    out << print(f) << " fails at " << *counterexample << "\n";
  } else {
    out << print(f) << " is valid in all " << m.world_ids().size()
        << " worlds\n";
  }
  return 0;
}

// ── derive ──────────────────────────────────────────────────────────────────

inline int cmd_derive(const std::string& input_path,
                      const std::optional<std::string>& semantics_flag,
                      const std::optional<std::size_t>& depth_flag,
                      const std::string& format, std::ostream& out) {
  const Json doc = load_json(input_path);

  std::vector<Judgment> premises;
  for (const auto& p : detail::require(doc, "premises", "derive input"))
    premises.push_back(judgment_from_json(p));

  Semantics semantics = Semantics::Truth;
  if (doc.contains("semantics"))
    semantics = semantics_from_name(
        detail::field<std::string>(doc, "semantics", "derive input"));
  if (semantics_flag) semantics = semantics_from_name(*semantics_flag);

  TrustStructure trust;
  if (doc.contains("trust_edges"))
    trust = trust_from_edges(trust_edges_from_json(doc.at("trust_edges")));

  std::size_t depth = 12;
  if (doc.contains("depth_bound"))
    depth = detail::field<std::size_t>(doc, "depth_bound", "derive input");
  if (depth_flag) depth = *depth_flag;

  const SaturationResult result =
      saturate(premises, axioms_for(semantics), trust, depth);
  if (format == "json") {
    out << trace_to_json(result.trace).dump(2) << "\n";
  } else {
    out << "Derivation under the '" << semantics_name(semantics)
        << "' reading\n";
    print_trace(result.trace, out);
  }
  return result.contradictory() ? 2 : 0;
}

// ── relstate ────────────────────────────────────────────────────────────────

inline Amplitudes random_unit2(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Amplitudes v(2);
  double n2 = 0.0;
  do {
    for (auto& c : v) c = Complex(gauss(rng), gauss(rng));
    n2 = std::norm(v[0]) + std::norm(v[1]);
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& c : v) c *= inv;
  return v;
}

inline std::pair<Amplitudes, Amplitudes> random_basis2(std::mt19937_64& rng) {
  Amplitudes v = random_unit2(rng);
  Amplitudes w = {-std::conj(v[1]), std::conj(v[0])};
  return {v, w};
}

inline int cmd_relstate(unsigned long long seed, std::size_t count,
                        const std::string& format, std::ostream& out) {
  std::mt19937_64 rng(seed);
  const Register x{"X", 2};

  struct Row {
    std::size_t instance;
    int a, b;
    double q, p;
  };
  std::vector<Row> rows;
  double max_delta = 0.0;

  for (std::size_t n = 1; n <= count; ++n) {
    const PureState phi({x}, random_unit2(rng));
    const auto [a0, a1] = random_basis2(rng);
    const auto [b0, b1] = random_basis2(rng);
    const std::vector<ObserverStep> observers = {
        {basis_family({x}, {{"0", a0}, {"1", a1}}), Register{"O1", 2}},
        {basis_family({x}, {{"0", b0}, {"1", b1}}), Register{"O2", 2}},
    };
    const Amplitudes as[2] = {a0, a1};
    const Amplitudes bs[2] = {b0, b1};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        double q;
        try {
          q = relstate_conditional(phi, observers,
                                   {{"O2", std::to_string(b)}},
                                   {{"O1", std::to_string(a)}});
        } catch (const ZeroProbabilityError&) {
          continue;  // the first record value never occurs for this state
        }
        const Complex inner = std::conj(bs[b][0]) * as[a][0] +
                              std::conj(bs[b][1]) * as[a][1];
        const double p = std::norm(inner);
        rows.push_back({n, a, b, q, p});
        max_delta = std::max(max_delta, std::abs(q - p));
      }
    }
  }

  if (format == "json") {
    Json doc;
    doc["seed"] = seed;
    doc["count"] = count;
    Json instances = Json::array();
    for (const auto& r : rows) {
      Json row;
      row["instance"] = r.instance;
      row["given"] = "a=" + std::to_string(r.a);
      row["query"] = "b=" + std::to_string(r.b);
      row["q"] = r.q;
      row["p"] = r.p;
      instances.push_back(std::move(row));
    }
    doc["rows"] = std::move(instances);
    doc["max_delta"] = max_delta;
    out << doc.dump(2) << "\n";
    return 0;
  }

  out << "One qubit measured twice: record conditional q(b|a) vs Born "
         "|<b|a>|^2\n";
  out << "  seed " << seed << ", " << count << " random instances\n";
  out << "  #  pair     q(record)      p(Born)        |q-p|\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line << "  " << r.instance << "  b=" << r.b << "|a=" << r.a << "  "
         << std::setw(13) << std::left << num(r.q) << "  " << std::setw(13)
         << std::left << num(r.p) << "  " << num(std::abs(r.q - r.p));
    out << line.str() << "\n";
  }
  out << "max |q - p| = " << num(max_delta) << "\n";
  return 0;
}

// ── parse ───────────────────────────────────────────────────────────────────

inline int cmd_parse(const std::string& text, const std::string& format,
                     std::ostream& out) {
  const FormulaPtr f = parse(text);
  if (format == "json") {
    Json doc;
    doc["input"] = text;
    doc["formula"] = print(f);
    out << doc.dump(2) << "\n";
  } else {
    out << print(f) << "\n";
  }
  return 0;
}

}  // namespace cli_detail

/// Full command dispatch against abstract streams. `args` excludes the
/// program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Multi-agent knowledge reasoning and exact quantum simulation "
               "for nested-observer experiments",
               "epiq"};
  app.require_subcommand(1);

  std::string format = "human";
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"human", "json"}));
  std::size_t depth = 0;
  app.add_option("--depth", depth, "saturation depth bound (default 12)");
  unsigned long long seed = 1;
  app.add_option("--seed", seed, "seed for randomized suites");
  std::string scenario_path;
  app.add_option("--scenario", scenario_path, "scenario file (JSON)");

  auto* fr = app.add_subcommand(
      "fr", "run the nested-observer experiment and its derivation");
  fr->fallthrough();
  std::string semantics = "truth";
  fr->add_option("--semantics", semantics,
                 "reading of the knowledge operator")
      ->check(CLI::IsMember({"truth", "trust", "context"}));
  std::string model = "unitary";
  fr->add_option("--model", model, "measurement model for predictions")
      ->check(CLI::IsMember({"unitary", "collapse"}));

  auto* hats = app.add_subcommand("hats", "solve the hat puzzle");
  hats->fallthrough();

  auto* check =
      app.add_subcommand("check", "model-check a formula against a model file");
  check->fallthrough();
  std::string model_path, check_formula, check_world;
  check->add_option("model_file", model_path, "Kripke model (JSON)")
      ->required();
  check->add_option("formula", check_formula, "formula to check")->required();
  check->add_option("--world", check_world,
                    "evaluate at one world instead of checking validity");

  auto* derive =
      app.add_subcommand("derive", "saturate premises from an input file");
  derive->fallthrough();
  std::string derive_path, derive_semantics;
  derive->add_option("input_file", derive_path, "premises document (JSON)")
      ->required();
  derive->add_option("--semantics", derive_semantics,
                     "override the input file's axiom preset")
      ->check(CLI::IsMember({"truth", "trust", "context"}));

  auto* relstate = app.add_subcommand(
      "relstate",
      "compare the relative-state record rule with the Born rule");
  relstate->fallthrough();
  std::size_t relstate_count = 5;
  relstate->add_option("--count", relstate_count, "number of random instances")
      ->check(CLI::PositiveNumber);

  auto* parse_cmd =
      app.add_subcommand("parse", "echo a formula in canonical printed form");
  parse_cmd->fallthrough();
  std::string parse_text;
  parse_cmd->add_option("formula", parse_text, "formula text")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (app.got_subcommand(fr)) {
      ScenarioDoc doc;
      if (!scenario_path.empty())
        doc = scenario_from_json(cli_detail::load_json(scenario_path));
      if (doc.experiment == "hats")
        throw Error("scenario declares experiment 'hats'; run the hats "
                    "command instead");
      if (fr->count("--semantics"))
        doc.semantics = semantics_from_name(semantics);
      if (fr->count("--model")) doc.model = model;
      if (app.count("--depth")) doc.depth_bound = depth;
      return cli_detail::cmd_fr(doc, format, out);
    }
    if (app.got_subcommand(hats)) return cli_detail::cmd_hats(format, out);
    if (app.got_subcommand(check)) {
      std::optional<std::string> world;
      if (check->count("--world")) world = check_world;
      return cli_detail::cmd_check(model_path, check_formula, world, format,
                                   out);
    }
    if (app.got_subcommand(derive)) {
      std::optional<std::string> semantics_flag;
      if (derive->count("--semantics")) semantics_flag = derive_semantics;
      std::optional<std::size_t> depth_flag;
      if (app.count("--depth")) depth_flag = depth;
      return cli_detail::cmd_derive(derive_path, semantics_flag, depth_flag,
                                    format, out);
    }
    if (app.got_subcommand(relstate))
      return cli_detail::cmd_relstate(seed, relstate_count, format, out);
    if (app.got_subcommand(parse_cmd))
      return cli_detail::cmd_parse(parse_text, format, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const JsonError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand dispatched\n";
  return 1;
}

}  // namespace epiq

#endif  // EPIQ_CLI_HPP
