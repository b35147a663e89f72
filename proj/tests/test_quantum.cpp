#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "epiq/quantum.hpp"
#include "helpers.hpp"

using namespace epiq;
using epiq_tests::density_oracle;
using epiq_tests::random_onb;
using epiq_tests::random_qubit;
using epiq_tests::random_state_vector;
using epiq_tests::Rng;

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

std::vector<Register> rasb() {
  return {{"R", 2}, {"A", 2}, {"S", 2}, {"B", 2}};
}

// The three-branch entangled state over (R, A, S, B), built directly from
// its amplitudes: 1/sqrt(3) (|0000> + |1100> + |1111>).
PureState hardy() {
  Amplitudes a(16);
  a[0b0000] = 1.0 / kSqrt3;
  a[0b1100] = 1.0 / kSqrt3;
  a[0b1111] = 1.0 / kSqrt3;
  return PureState(rasb(), std::move(a));
}

Matrix ok_ra() { return projector_onto(okminus_vector()); }
Matrix fail_ra() { return projector_onto(failplus_vector()); }

ProjectorFamily x_family(const Register& r) {
  return basis_family({r}, {{"+", {kInvSqrt2, kInvSqrt2}},
                            {"-", {kInvSqrt2, -kInvSqrt2}}});
}

}  // namespace

TEST_CASE("tensor products concatenate registers big-endian") {
  const Complex alpha(0.6, 0.0), beta(0.0, 0.8);
  PureState x({{"R", 2}}, {alpha, beta});
  PureState y = basis_state({{"A", 2}}, {0});
  PureState xy = tensor(x, y);
  REQUIRE(xy.registers.size() == 2);
  REQUIRE(xy.dim() == 4);
  REQUIRE(xy.amplitudes[0] == alpha);
  REQUIRE(xy.amplitudes[1] == Complex{});
  REQUIRE(xy.amplitudes[2] == beta);
  REQUIRE(xy.amplitudes[3] == Complex{});

  PureState z = basis_state({{"R", 2}}, {1});
  REQUIRE_THROWS_WITH(tensor(x, z),
                      Catch::Matchers::ContainsSubstring("both sides"));
}

TEST_CASE("state construction validates shape and norm") {
  REQUIRE_THROWS_WITH(PureState({{"R", 2}}, {1.0, 1.0}),
                      Catch::Matchers::ContainsSubstring("not normalized"));
  REQUIRE_THROWS_WITH(PureState({{"R", 2}}, {1.0, 0.0, 0.0}),
                      Catch::Matchers::ContainsSubstring("length"));
  REQUIRE_THROWS_WITH(PureState({{"R", 2}, {"R", 2}}, {1, 0, 0, 0}),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  REQUIRE_THROWS_WITH(PureState({{"R", 1}}, {1.0}),
                      Catch::Matchers::ContainsSubstring("dim >= 2"));
}

TEST_CASE("operator application respects the listed register order") {
  // |s=0, b=1> probed with the rank-1 projector onto sub-basis |01>.
  PureState sb = basis_state({{"S", 2}, {"B", 2}}, {0, 1});
  Matrix p01 = projector_onto({0.0, 1.0, 0.0, 0.0});
  REQUIRE(born_probability(sb, p01, {"S", "B"}) == Catch::Approx(1.0));
  REQUIRE(born_probability(sb, p01, {"B", "S"}) == Catch::Approx(0.0));
}

TEST_CASE("halt-style joint probabilities on the three-branch state") {
  PureState psi = hardy();
  const Matrix ok = ok_ra();
  const Matrix fail = fail_ra();

  // Joint (u, w) table: project RA with ok/fail, then SB with ok/fail.
  auto joint = [&](const Matrix& u, const Matrix& w) {
    PureState after_u = condition(psi, u, {"R", "A"});
    const double pu = born_probability(psi, u, {"R", "A"});
    return pu * born_probability(after_u, w, {"S", "B"});
  };
  const double tol = 1e-9;
  REQUIRE(joint(ok, ok) == Catch::Approx(1.0 / 12).epsilon(0).margin(tol));
  REQUIRE(joint(ok, fail) == Catch::Approx(1.0 / 12).epsilon(0).margin(tol));
  REQUIRE(joint(fail, ok) == Catch::Approx(1.0 / 12).epsilon(0).margin(tol));
  REQUIRE(joint(fail, fail) == Catch::Approx(3.0 / 4).epsilon(0).margin(tol));
  REQUIRE(joint(ok, ok) + joint(ok, fail) + joint(fail, ok) +
              joint(fail, fail) ==
          Catch::Approx(1.0).epsilon(0).margin(tol));

  // Direct joint projector: product of commuting projectors on RA and SB.
  PureState through = condition(psi, ok, {"R", "A"});
  REQUIRE(born_probability(psi, ok, {"R", "A"}) *
              born_probability(through, ok, {"S", "B"}) ==
          Catch::Approx(1.0 / 12).epsilon(0).margin(tol));

  // Marginal of the fail projector alone (identity padding on S, B).
  REQUIRE(born_probability(psi, fail, {"R", "A"}) ==
          Catch::Approx(5.0 / 6).epsilon(0).margin(tol));

  // Overlap of the state with |failplus>_RA |00>_SB is sqrt(2/3).
  Amplitudes fail00(16);
  fail00[0b0000] = kInvSqrt2;
  fail00[0b1100] = kInvSqrt2;
  REQUIRE(std::abs(inner(fail00, psi.amplitudes)) ==
          Catch::Approx(std::sqrt(2.0 / 3.0)).epsilon(0).margin(tol));
}

TEST_CASE("eigenstates and orthogonal conditioning") {
  PureState zero = basis_state({{"Q", 2}}, {0});
  Matrix p0 = projector_onto({1.0, 0.0});
  Matrix p1 = projector_onto({0.0, 1.0});
  REQUIRE(born_probability(zero, p0, {"Q"}) == Catch::Approx(1.0));
  PureState same = condition(zero, p0, {"Q"});
  REQUIRE(same.amplitudes[0] == Complex{1.0});
  REQUIRE_THROWS_AS(condition(zero, p1, {"Q"}), ZeroProbabilityError);
}

TEST_CASE("conditioning on the ok record removes the fail-branch component") {
  PureState psi = hardy();
  PureState post = condition(psi, ok_ra(), {"R", "A"});
  // The surviving SB content is |11>: nothing remains on s=0 or b=0.
  for (int i = 0; i < 16; ++i) {
    const int s = (i >> 1) & 1, b = i & 1;
    if (s == 1 && b == 1) continue;
    REQUIRE(std::abs(post.amplitudes[i]) < 1e-9);
  }
  Amplitudes fail00(16);
  fail00[0b0000] = kInvSqrt2;
  fail00[0b1100] = kInvSqrt2;
  REQUIRE(std::abs(inner(fail00, post.amplitudes)) < 1e-9);
}

TEST_CASE("projector families are validated") {
  const Register q{"Q", 2};
  Matrix p0 = projector_onto({1.0, 0.0});
  Matrix p1 = projector_onto({0.0, 1.0});
  SECTION("a complete orthogonal family passes") {
    REQUIRE_NOTHROW(ProjectorFamily({q}, {{"0", p0}, {"1", p1}}));
    REQUIRE_NOTHROW(okfail_family({"R", 2}, {"A", 2}));
  }
  SECTION("incomplete") {
    REQUIRE_THROWS_WITH(ProjectorFamily({q}, {{"0", p0}}),
                        Catch::Matchers::ContainsSubstring("not complete"));
  }
  SECTION("not idempotent") {
    Matrix half(2, 2);
    half.at(0, 0) = 0.5;
    half.at(1, 1) = 0.5;
    Matrix rest = Matrix::identity(2) - half;
    REQUIRE_THROWS_WITH(ProjectorFamily({q}, {{"a", half}, {"b", rest}}),
                        Catch::Matchers::ContainsSubstring("idempotent"));
  }
  SECTION("not Hermitian") {
    Matrix skew(2, 2);
    skew.at(0, 1) = 1.0;
    REQUIRE_THROWS_WITH(
        ProjectorFamily({q}, {{"a", skew}, {"b", Matrix::identity(2) - skew}}),
        Catch::Matchers::ContainsSubstring("Hermitian"));
  }
  SECTION("duplicate labels") {
    REQUIRE_THROWS_WITH(ProjectorFamily({q}, {{"0", p0}, {"0", p1}}),
                        Catch::Matchers::ContainsSubstring("duplicate"));
  }
  SECTION("completeness probability sums to one on random states") {
    Rng rng(5150);
    ProjectorFamily fam = okfail_family({"R", 2}, {"A", 2});
    for (int t = 0; t < 50; ++t) {
      PureState psi({{"R", 2}, {"A", 2}}, random_state_vector(rng, 4));
      double total = 0;
      for (const auto& label : fam.labels())
        total += born_probability(psi, fam, label);
      REQUIRE(total == Catch::Approx(1.0).epsilon(0).margin(1e-9));
    }
  }
}

TEST_CASE("measurement isometries record outcomes on a fresh register") {
  const Register q{"Q", 2};
  const Register o{"O", 2};
  Isometry iso = measurement_isometry(z_family(q), o);
  // Columns are e0 (x) e0 and e1 (x) e1.
  REQUIRE(iso.v.rows == 4);
  REQUIRE(iso.v.cols == 2);
  REQUIRE(iso.v.at(0, 0) == Complex{1.0});
  REQUIRE(iso.v.at(3, 1) == Complex{1.0});
  REQUIRE(iso.v.at(1, 0) == Complex{});
  REQUIRE(iso.v.at(2, 1) == Complex{});

  SECTION("entangling a biased system state with its record") {
    const double a0 = std::sqrt(1.0 / 3.0), a1 = std::sqrt(2.0 / 3.0);
    PureState sys({{"Q", 2}}, {a0, a1});
    PureState out = apply_isometry(sys, iso);
    REQUIRE(out.registers.size() == 2);
    REQUIRE(out.amplitudes[0b00].real() == Catch::Approx(a0));
    REQUIRE(out.amplitudes[0b11].real() == Catch::Approx(a1));
    REQUIRE(std::abs(out.amplitudes[0b01]) + std::abs(out.amplitudes[0b10]) <
            1e-12);
  }
  SECTION("in-place application on a pre-allocated ready register") {
    const double a0 = std::sqrt(1.0 / 3.0), a1 = std::sqrt(2.0 / 3.0);
    PureState sys({{"Q", 2}}, {a0, a1});
    PureState with_obs = tensor(sys, basis_state({o}, {0}));
    PureState in_place = apply_isometry(with_obs, iso);
    PureState appended = apply_isometry(sys, iso);
    REQUIRE(in_place.registers.size() == 2);
    for (int i = 0; i < 4; ++i)
      REQUIRE(std::abs(in_place.amplitudes[i] - appended.amplitudes[i]) <
              1e-12);
  }
  SECTION("a dirty observer register is rejected") {
    PureState sys = basis_state({{"Q", 2}}, {0});
    PureState dirty = tensor(sys, basis_state({o}, {1}));
    REQUIRE_THROWS_WITH(apply_isometry(dirty, iso),
                        Catch::Matchers::ContainsSubstring("ready state"));
  }
  SECTION("record statistics equal system statistics") {
    Rng rng(31415);
    for (int t = 0; t < 50; ++t) {
      PureState sys({{"Q", 2}}, random_qubit(rng));
      const double before = born_probability(sys, z_family(q), "1");
      PureState out = apply_isometry(sys, iso);
      const double after = born_probability(out, z_family(o), "1");
      REQUIRE(after == Catch::Approx(before).epsilon(0).margin(1e-9));
      REQUIRE(norm2(out.amplitudes) ==
              Catch::Approx(1.0).epsilon(0).margin(1e-9));
    }
  }
  SECTION("observer register must be large enough") {
    REQUIRE_THROWS_WITH(measurement_isometry(z_family({"T", 3}), o),
                        Catch::Matchers::ContainsSubstring("too small"));
  }
  SECTION("only rank-1 families can be recorded") {
    ProjectorFamily lab = okfail_family({"R", 2}, {"A", 2});
    REQUIRE_THROWS_WITH(measurement_isometry(lab, {"O", 3}),
                        Catch::Matchers::ContainsSubstring("rank-1"));
  }
}

TEST_CASE("unitary application") {
  Matrix h(2, 2);
  h.at(0, 0) = h.at(0, 1) = h.at(1, 0) = kInvSqrt2;
  h.at(1, 1) = -kInvSqrt2;
  PureState zero = basis_state({{"Q", 2}}, {0});
  PureState plus = apply_unitary(zero, h, {"Q"});
  REQUIRE(plus.amplitudes[0].real() == Catch::Approx(kInvSqrt2));
  REQUIRE(plus.amplitudes[1].real() == Catch::Approx(kInvSqrt2));

  Matrix notu(2, 2);
  notu.at(0, 0) = 2.0;
  notu.at(1, 1) = 1.0;
  REQUIRE_THROWS_WITH(apply_unitary(zero, notu, {"Q"}),
                      Catch::Matchers::ContainsSubstring("not unitary"));
}

TEST_CASE("collapse ensembles") {
  SECTION("an eigenstate collapses to a single branch") {
    PureState zero = basis_state({{"Q", 2}}, {0});
    Ensemble e = collapse_measure(zero, z_family({"Q", 2}));
    REQUIRE(e.branches.size() == 1);
    REQUIRE(e.branches[0].first == Catch::Approx(1.0));
  }
  SECTION("the a=1 branch splits evenly and mixes the ok record") {
    PureState psi = hardy();
    // Condition on the A record being 1, then collapse the B record.
    PureState a1 = condition(psi, z_family({"A", 2}), "1");
    Ensemble e = collapse_measure(a1, z_family({"B", 2}));
    REQUIRE(e.branches.size() == 2);
    REQUIRE(e.branches[0].first == Catch::Approx(0.5).epsilon(0).margin(1e-9));
    REQUIRE(e.branches[1].first == Catch::Approx(0.5).epsilon(0).margin(1e-9));
    // With collapsed branches the ok outcome on (S, B) has probability 1/2,
    // though the uncollapsed state gives 0.
    const double collapsed = ensemble_probability(e, ok_ra(), {"S", "B"});
    REQUIRE(collapsed == Catch::Approx(0.5).epsilon(0).margin(1e-9));
    REQUIRE(born_probability(a1, ok_ra(), {"S", "B"}) ==
            Catch::Approx(0.0).epsilon(0).margin(1e-9));
    // ok and fail exhaust the collapsed branches.
    const double failed = ensemble_probability(e, fail_ra(), {"S", "B"});
    REQUIRE(collapsed + failed == Catch::Approx(1.0).epsilon(0).margin(1e-9));
  }
}

TEST_CASE("ensemble expectations match a density-matrix oracle") {
  Rng rng(20260816);
  const std::vector<Register> regs = {{"X", 2}, {"Y", 2}, {"Z", 2}};
  for (int t = 0; t < 60; ++t) {
    PureState psi(regs, random_state_vector(rng, 8));
    // Collapse one register, then probe another subset.
    Ensemble e = collapse_measure(psi, z_family({"Y", 2}));
    auto [v, w] = random_onb(rng);
    Matrix probe = projector_onto(v);
    const std::vector<std::string> target = {t % 2 == 0 ? "X" : "Z"};
    const double lib = ensemble_probability(e, probe, target);
    const double oracle = density_oracle(e, probe, target);
    REQUIRE(lib == Catch::Approx(oracle).epsilon(0).margin(1e-9));

    // Two-register probe with the lab family.
    ProjectorFamily lab = okfail_family({"X", 2}, {"Z", 2});
    const double lib2 = ensemble_probability(e, lab, "fail");
    const double oracle2 =
        density_oracle(e, lab.projector("fail"), {"X", "Z"});
    REQUIRE(lib2 == Catch::Approx(oracle2).epsilon(0).margin(1e-9));
  }
}

TEST_CASE("certainty returns the forced outcome or nothing") {
  PureState psi = hardy();
  SECTION("after the ok record, the B record is forced to 1") {
    PureState post = condition(psi, ok_ra(), {"R", "A"});
    auto out = certainty(post, z_family({"B", 2}));
    REQUIRE(out.has_value());
    REQUIRE(*out == "1");
  }
  SECTION("after a=1 the lab outcome on (S, B) is forced to fail") {
    PureState a1 = condition(psi, z_family({"A", 2}), "1");
    auto out = certainty(a1, okfail_family({"S", 2}, {"B", 2}));
    REQUIRE(out.has_value());
    REQUIRE(*out == "fail");
  }
  SECTION("a uniform superposition is certain of nothing") {
    PureState plus({{"Q", 2}}, {kInvSqrt2, kInvSqrt2});
    REQUIRE_FALSE(certainty(plus, z_family({"Q", 2})).has_value());
  }
}

TEST_CASE("record-state probabilities for nested observers") {
  const Register q{"Q", 2};
  SECTION("a single observer of an eigenstate is deterministic") {
    PureState zero = basis_state({q}, {0});
    std::vector<ObserverStep> obs = {{z_family(q), {"O1", 2}}};
    REQUIRE(relstate_probability(zero, obs, {{"O1", "0"}}) ==
            Catch::Approx(1.0).epsilon(0).margin(1e-9));
    REQUIRE(relstate_probability(zero, obs, {{"O1", "1"}}) ==
            Catch::Approx(0.0).epsilon(0).margin(1e-9));
  }
  SECTION("consecutive Z then X measurements of |0>") {
    PureState zero = basis_state({q}, {0});
    std::vector<ObserverStep> obs = {{z_family(q), {"O1", 2}},
                                     {x_family(q), {"O2", 2}}};
    REQUIRE(relstate_conditional(zero, obs, {{"O2", "+"}}, {{"O1", "0"}}) ==
            Catch::Approx(0.5).epsilon(0).margin(1e-9));
  }
  SECTION("conditioning on an impossible record fails") {
    PureState zero = basis_state({q}, {0});
    std::vector<ObserverStep> obs = {{z_family(q), {"O1", 2}},
                                     {x_family(q), {"O2", 2}}};
    REQUIRE_THROWS_AS(
        relstate_conditional(zero, obs, {{"O2", "+"}}, {{"O1", "1"}}),
        ZeroProbabilityError);
  }
  SECTION("the record conditional equals the direct transition probability") {
    Rng rng(271828);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
      PureState phi({q}, random_qubit(rng));
      auto [a0, a1] = random_onb(rng);
      auto [b0, b1] = random_onb(rng);
      ProjectorFamily fa = basis_family({q}, {{"a0", a0}, {"a1", a1}});
      ProjectorFamily fb = basis_family({q}, {{"b0", b0}, {"b1", b1}});
      std::vector<ObserverStep> obs = {{fa, {"O1", 2}}, {fb, {"O2", 2}}};
      const double pa = std::norm(inner(a0, phi.amplitudes));
      if (pa < 1e-6) continue;  // skip near-impossible conditioning draws
      const double q_cond =
          relstate_conditional(phi, obs, {{"O2", "b1"}}, {{"O1", "a0"}});
      const double direct = std::norm(inner(b1, a0));
      REQUIRE(q_cond == Catch::Approx(direct).epsilon(0).margin(1e-9));
      ++checked;
    }
    REQUIRE(checked >= 195);
  }
  SECTION("unknown observers and outcomes are rejected") {
    PureState zero = basis_state({q}, {0});
    std::vector<ObserverStep> obs = {{z_family(q), {"O1", 2}}};
    REQUIRE_THROWS_WITH(relstate_probability(zero, obs, {{"OX", "0"}}),
                        Catch::Matchers::ContainsSubstring("no observer"));
    REQUIRE_THROWS_WITH(relstate_probability(zero, obs, {{"O1", "7"}}),
                        Catch::Matchers::ContainsSubstring("no outcome"));
  }
}

TEST_CASE("norm preservation across operations") {
  Rng rng(1729);
  for (int t = 0; t < 30; ++t) {
    PureState x({{"X", 2}}, random_qubit(rng));
    PureState y({{"Y", 2}}, random_qubit(rng));
    PureState xy = tensor(x, y);
    REQUIRE(norm2(xy.amplitudes) == Catch::Approx(1.0).epsilon(0).margin(1e-9));
    Isometry iso = measurement_isometry(z_family({"X", 2}), {"O", 2});
    PureState rec = apply_isometry(xy, iso);
    REQUIRE(norm2(rec.amplitudes) ==
            Catch::Approx(1.0).epsilon(0).margin(1e-9));
    auto [v, w] = random_onb(rng);
    const double p = born_probability(xy, projector_onto(v), {"Y"});
    if (p > 1e-6) {
      PureState cond = condition(xy, projector_onto(v), {"Y"});
      REQUIRE(norm2(cond.amplitudes) ==
              Catch::Approx(1.0).epsilon(0).margin(1e-9));
    }
  }
}
