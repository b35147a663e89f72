#ifndef EPIQ_TESTS_HELPERS_HPP
#define EPIQ_TESTS_HELPERS_HPP

// Shared fixtures for the test suite: seeded random formula and model
// generators, plus independent oracles kept deliberately separate from the
// library implementations they check.

#include <complex>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "epiq/formula.hpp"
#include "epiq/kripke.hpp"
#include "epiq/quantum.hpp"

namespace epiq_tests {

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// ── Random formulas ─────────────────────────────────────────────────────────

struct FormulaGenOptions {
  std::vector<std::string> props = {"p", "q", "r"};
  std::vector<std::pair<std::string, std::string>> outcomes = {
      {"a", "0"}, {"a", "1"}, {"w", "ok"}, {"w", "fail"}};
  std::vector<epiq::AgentInstance> agents = {epiq::AgentInstance("A"),
                                             epiq::AgentInstance("B", 2),
                                             epiq::AgentInstance("U", 3)};
  bool allow_knows = true;
  bool allow_modes = true;
  bool allow_tagged = true;
};

inline epiq::FormulaPtr random_formula(Rng& rng, int max_depth,
                                       const FormulaGenOptions& opt = {}) {
  using namespace epiq;
  if (max_depth <= 1) {
    if (!opt.outcomes.empty() && pick(rng, 0, 1) == 0) {
      const auto& [var, value] = opt.outcomes[pick(
          rng, 0, static_cast<int>(opt.outcomes.size()) - 1)];
      return outcome(var, value);
    }
    return prop(opt.props[pick(rng, 0, static_cast<int>(opt.props.size()) - 1)]);
  }
  int choice = pick(rng, 0, 9);
  switch (choice) {
    case 0:
    case 1:
      return random_formula(rng, 1, opt);
    case 2:
      return negation(random_formula(rng, max_depth - 1, opt));
    case 3:
      return conjunction(random_formula(rng, max_depth - 1, opt),
                         random_formula(rng, max_depth - 1, opt));
    case 4:
      return disjunction(random_formula(rng, max_depth - 1, opt),
                         random_formula(rng, max_depth - 1, opt));
    case 5:
      return implication(random_formula(rng, max_depth - 1, opt),
                         random_formula(rng, max_depth - 1, opt));
    case 6:
      return equivalence(random_formula(rng, max_depth - 1, opt),
                         random_formula(rng, max_depth - 1, opt));
    default: {
      if (opt.allow_knows) {
        const auto& agent =
            opt.agents[pick(rng, 0, static_cast<int>(opt.agents.size()) - 1)];
        std::optional<Mode> mode;
        if (opt.allow_modes && pick(rng, 0, 2) == 0)
          mode = pick(rng, 0, 1) ? Mode::Global : Mode::Local;
        if (opt.allow_tagged && pick(rng, 0, 3) == 0) {
          ContextVector ctx;
          int n = pick(rng, 1, 2);
          for (int i = 0; i < n; ++i) {
            ContextEntry e;
            e.agent = opt.agents[pick(
                rng, 0, static_cast<int>(opt.agents.size()) - 1)];
            e.mode = pick(rng, 0, 1) ? Mode::Global : Mode::Local;
            ctx.push_back(e);
          }
          return tagged(std::move(ctx),
                        random_formula(rng, max_depth - 1, opt));
        }
        return knows(agent, random_formula(rng, max_depth - 1, opt), mode);
      }
      return random_formula(rng, max_depth - 1, opt);
    }
  }
}

// ── Random Kripke models ────────────────────────────────────────────────────

// Neutral model description from which both the library model and the naive
// oracle below are built independently.
struct ModelSpec {
  std::vector<std::string> ids;
  std::vector<epiq::AgentInstance> agents;
  std::map<std::string, std::map<std::string, bool>> valuations;
  std::vector<std::set<std::pair<int, int>>> edges;  // parallel to agents
};

inline const std::vector<std::string>& spec_atoms() {
  static const std::vector<std::string> atoms = {"p", "q", "a=1"};
  return atoms;
}

inline ModelSpec random_model_spec(Rng& rng, bool equivalence,
                                   int max_worlds = 6) {
  ModelSpec spec;
  spec.agents = {epiq::AgentInstance("A"), epiq::AgentInstance("B", 2)};
  const int n = pick(rng, 2, max_worlds);
  for (int i = 0; i < n; ++i) spec.ids.push_back("w" + std::to_string(i));
  for (const auto& id : spec.ids)
    for (const auto& atom : spec_atoms())
      spec.valuations[id][atom] = pick(rng, 0, 1) == 1;
  for (std::size_t k = 0; k < spec.agents.size(); ++k) {
    std::set<std::pair<int, int>> es;
    if (equivalence) {
      std::vector<int> block(n);
      for (int i = 0; i < n; ++i) block[i] = pick(rng, 0, n - 1);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (block[i] == block[j]) es.insert({i, j});
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (pick(rng, 0, 9) < 4) es.insert({i, j});
    }
    spec.edges.push_back(std::move(es));
  }
  return spec;
}

inline epiq::KripkeModel to_kripke(const ModelSpec& spec, bool s5) {
  std::vector<epiq::World> worlds;
  for (const auto& id : spec.ids)
    worlds.push_back(epiq::World{id, spec.valuations.at(id)});
  epiq::AccessMap access;
  for (std::size_t k = 0; k < spec.agents.size(); ++k) {
    epiq::EdgeSet edges;
    for (const auto& [i, j] : spec.edges[k])
      edges.insert({spec.ids[i], spec.ids[j]});
    access[spec.agents[k]] = std::move(edges);
  }
  return epiq::KripkeModel(std::move(worlds), std::move(access), s5);
}

// Independent oracle: computes the extension (set of world indices where a
// formula holds) bottom-up, instead of recursing per world like the library.
inline std::set<int> naive_extension(const ModelSpec& spec,
                                     const epiq::FormulaPtr& f) {
  using epiq::Kind;
  const int n = static_cast<int>(spec.ids.size());
  auto all = [&] {
    std::set<int> s;
    for (int i = 0; i < n; ++i) s.insert(i);
    return s;
  };
  auto complement = [&](const std::set<int>& s) {
    std::set<int> out;
    for (int i = 0; i < n; ++i)
      if (!s.count(i)) out.insert(i);
    return out;
  };
  switch (f->kind) {
    case Kind::Atom: {
      std::set<int> out;
      const std::string key = epiq::print(f);
      for (int i = 0; i < n; ++i)
        if (spec.valuations.at(spec.ids[i]).at(key)) out.insert(i);
      return out;
    }
    case Kind::Not:
      return complement(naive_extension(spec, f->lhs));
    case Kind::And: {
      std::set<int> out;
      auto l = naive_extension(spec, f->lhs);
      auto r = naive_extension(spec, f->rhs);
      for (int i : l)
        if (r.count(i)) out.insert(i);
      return out;
    }
    case Kind::Or: {
      std::set<int> out = naive_extension(spec, f->lhs);
      for (int i : naive_extension(spec, f->rhs)) out.insert(i);
      return out;
    }
    case Kind::Implies: {
      std::set<int> out = complement(naive_extension(spec, f->lhs));
      for (int i : naive_extension(spec, f->rhs)) out.insert(i);
      return out;
    }
    case Kind::Iff: {
      auto l = naive_extension(spec, f->lhs);
      auto r = naive_extension(spec, f->rhs);
      std::set<int> out;
      for (int i = 0; i < n; ++i)
        if (l.count(i) == r.count(i)) out.insert(i);
      return out;
    }
    case Kind::Knows: {
      std::size_t k = 0;
      while (k < spec.agents.size() && !(spec.agents[k] == f->agent)) ++k;
      if (k == spec.agents.size()) throw std::runtime_error("oracle: agent");
      auto body = naive_extension(spec, f->lhs);
      std::set<int> out = all();
      for (const auto& [i, j] : spec.edges[k])
        if (!body.count(j)) out.erase(i);
      return out;
    }
    case Kind::Tagged:
      throw std::runtime_error("oracle: tagged unsupported");
  }
  throw std::runtime_error("oracle: kind");
}

// ── Random quantum data ─────────────────────────────────────────────────────

inline epiq::Amplitudes random_state_vector(Rng& rng, int dim) {
  std::normal_distribution<double> g;
  while (true) {
    epiq::Amplitudes v(dim);
    double n2 = 0;
    for (auto& z : v) {
      z = epiq::Complex(g(rng), g(rng));
      n2 += std::norm(z);
    }
    if (n2 < 1e-6) continue;  // resample a degenerate draw
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& z : v) z *= scale;
    return v;
  }
}

inline epiq::Amplitudes random_qubit(Rng& rng) {
  return random_state_vector(rng, 2);
}

// A Haar-ish random orthonormal qubit basis (exact orthonormality).
inline std::pair<epiq::Amplitudes, epiq::Amplitudes> random_onb(Rng& rng) {
  epiq::Amplitudes v = random_qubit(rng);
  epiq::Amplitudes w = {-std::conj(v[1]), std::conj(v[0])};
  return {v, w};
}

// ── Density-matrix oracle ───────────────────────────────────────────────────
// Independent matrix-based path: embeds an operator on a register subset into
// the full space element-by-element, forms the density matrix of an ensemble
// explicitly, and evaluates the trace formula. Shares no index machinery with
// the library's vector-based implementation.

inline epiq::Matrix embed_full_oracle(const std::vector<epiq::Register>& regs,
                                      const epiq::Matrix& op,
                                      const std::vector<std::string>& labels) {
  const int nregs = static_cast<int>(regs.size());
  std::vector<long> stride(nregs, 1);
  long total = 1;
  for (int k = nregs - 1; k >= 0; --k) {
    stride[k] = total;
    total *= regs[k].dim;
  }
  std::vector<int> pos;
  for (const auto& label : labels)
    for (int k = 0; k < nregs; ++k)
      if (regs[k].label == label) pos.push_back(k);
  auto sub_of = [&](long i) {
    long s = 0;
    for (int p : pos) s = s * regs[p].dim + (i / stride[p]) % regs[p].dim;
    return s;
  };
  auto rest_of = [&](long i) {
    long r = i;
    for (int p : pos) r -= ((i / stride[p]) % regs[p].dim) * stride[p];
    return r;
  };
  epiq::Matrix full(static_cast<int>(total), static_cast<int>(total));
  for (long i = 0; i < total; ++i)
    for (long j = 0; j < total; ++j)
      if (rest_of(i) == rest_of(j))
        full.at(static_cast<int>(i), static_cast<int>(j)) =
            op.at(static_cast<int>(sub_of(i)), static_cast<int>(sub_of(j)));
  return full;
}

inline double density_oracle(const epiq::Ensemble& e, const epiq::Matrix& op,
                             const std::vector<std::string>& labels) {
  const auto& regs = e.branches.front().second.registers;
  const long n = e.branches.front().second.dim();
  epiq::Matrix rho(static_cast<int>(n), static_cast<int>(n));
  for (const auto& [p, state] : e.branches)
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        rho.at(static_cast<int>(i), static_cast<int>(j)) +=
            p * state.amplitudes[i] * std::conj(state.amplitudes[j]);
  epiq::Matrix full = embed_full_oracle(regs, op, labels);
  epiq::Matrix prod = rho * full;
  epiq::Complex tr = 0;
  for (long i = 0; i < n; ++i)
    tr += prod.at(static_cast<int>(i), static_cast<int>(i));
  return tr.real();
}

}  // namespace epiq_tests

#endif  // EPIQ_TESTS_HELPERS_HPP
