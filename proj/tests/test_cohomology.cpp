#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "cohomology.hpp"
#include "doctest.h"
#include "freq.hpp"
#include "symbol.hpp"

using namespace qbnf;
using freq::FrequencyMatrix;
using sym::Key;
using sym::NormParams;
using sym::PGenerators;
using sym::Symbol;
using sym::VectorSymbol;

namespace {

constexpr double kPhi = 1.6180339887498948482;

struct World {
  FrequencyMatrix om;
  std::shared_ptr<const PGenerators> gens;
};

World golden_world() {
  return {FrequencyMatrix({{1.0, kPhi}}),
          PGenerators::make(1, {{0.7}, {-0.3}})};
}

World pair_world() {
  return {FrequencyMatrix({{1.0, 0.3}, {0.2, 1.0}}),
          PGenerators::make(2, {{0.5, 0.1}, {0.2, -0.4}})};
}

Symbol zero_symbol(const World& w) { return Symbol(w.gens, w.om.l()); }

VectorSymbol zero_vector(const World& w) {
  VectorSymbol V;
  V.comp.assign(w.om.m(), zero_symbol(w));
  return V;
}

Symbol random_offdiag(std::mt19937_64& rng, const World& w, int n_atoms,
                      int qmax, int pmax, double scale, bool hermitian) {
  std::uniform_int_distribution<int> Q(-qmax, qmax), P(-pmax, pmax);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Symbol F(w.gens, w.om.l());
  int placed = 0;
  while (placed < n_atoms) {
    Key key(F.s() + F.l());
    for (int j = 0; j < F.s(); ++j) key[j] = P(rng);
    bool qzero = true;
    for (int j = 0; j < F.l(); ++j) {
      key[F.s() + j] = Q(rng);
      qzero = qzero && key[F.s() + j] == 0;
    }
    if (qzero) continue;
    const cplx c = scale * cplx(U(rng), U(rng));
    F.add(key, c);
    if (hermitian) {
      Key neg(key.size());
      for (size_t j = 0; j < key.size(); ++j) neg[j] = -key[j];
      F.add(neg, std::conj(c));
    }
    ++placed;
  }
  F.hermitian_hint = hermitian;
  return F;
}

Symbol random_diag(std::mt19937_64& rng, const World& w, int n_atoms,
                   int pmax, double scale) {
  std::uniform_int_distribution<int> P(-pmax, pmax);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Symbol F(w.gens, w.om.l());
  for (int t = 0; t < n_atoms; ++t) {
    Key key(F.s() + F.l(), 0);
    for (int j = 0; j < F.s(); ++j) key[j] = P(rng);
    const cplx c = scale * cplx(U(rng), U(rng));
    F.add(key, c);
    Key neg(key.size(), 0);
    for (int j = 0; j < F.s(); ++j) neg[j] = -key[j];
    F.add(neg, std::conj(c));
  }
  F.hermitian_hint = true;
  return F;
}

}  // namespace

TEST_CASE("mixing operator matches the diagonal bracket atom-exactly") {
  // identity: bracket(G_a, X) = sum_b (A e_b [L_b-bracket of X])_a,
  // i.e. feeding -i<omega_b,q> X through A reproduces the exact bracket.
  World w = pair_world();
  std::mt19937_64 rng(101);
  VectorSymbol G = zero_vector(w);
  G.comp[0] = random_diag(rng, w, 3, 2, 0.3);
  G.comp[1] = random_diag(rng, w, 3, 2, 0.3);
  Symbol X = random_offdiag(rng, w, 6, 2, 2, 1.0, false);

  for (double hb : {0.0, 0.7, 1.0}) {
    VectorSymbol fed = zero_vector(w);
    VectorSymbol acc = zero_vector(w);
    for (int b = 0; b < 2; ++b) {
      VectorSymbol unit = zero_vector(w);
      unit.comp[b] = sym::bracket_linear(w.om, b, X);
      VectorSymbol img = coho::neumann_apply_A(G, unit, w.om, hb);
      for (int a = 0; a < 2; ++a) sym::axpy(acc.comp[a], 1.0, img.comp[a]);
    }
    for (int a = 0; a < 2; ++a) {
      Symbol direct = sym::bracket(G.comp[a], X, w.om, hb);
      Symbol diff = sym::lincomb(1.0, direct, -1.0, acc.comp[a], 0.0);
      NormParams np{0.5, w.om.underomega()};
      CHECK(sym::norm(diff, np) <= 1e-13 * std::max(1.0, sym::norm(direct, np)));
    }
  }
}

TEST_CASE("resolvent with no diagonal part is the identity") {
  World w = pair_world();
  std::mt19937_64 rng(103);
  VectorSymbol V = zero_vector(w);
  V.comp[0] = random_offdiag(rng, w, 5, 2, 2, 1.0, false);
  V.comp[1] = random_offdiag(rng, w, 5, 2, 2, 1.0, false);
  NormParams np{1.0, w.om.underomega()};
  auto nr = coho::neumann_resolve(V, zero_vector(w), w.om, 1.0, 1e-16, np);
  CHECK(nr.terms == 1);  // the first correction is exactly zero
  for (int a = 0; a < 2; ++a)
    CHECK(sym::lincomb(1.0, nr.Vtilde.comp[a], -1.0, V.comp[a], 0.0).empty());
}

TEST_CASE("scalar resolvent equals the geometric series") {
  // m = 1, single diagonal atom, single target atom: (-A)^k V is exactly
  // geometric with ratio -a, a = i p_g g sinc(hbar p_g <w,q> / 2).
  World w = golden_world();
  const double hbar = 1.0;
  VectorSymbol G = zero_vector(w);
  const cplx g(0.12, -0.05);
  G.comp[0].add({1, 0}, {0, 0}, g);         // p_real = 0.7
  VectorSymbol V = zero_vector(w);
  const cplx c(0.8, 0.3);
  V.comp[0].add({0, 1}, {1, -1}, c);        // p_real = -0.3, q = (1,-1)

  const double theta = 0.7 * (1.0 - kPhi);  // p_g . <omega, q>
  const cplx a = cplx(0.0, 0.7) * g * sinc(0.5 * hbar * theta);

  NormParams np{0.4, w.om.underomega()};
  auto nr = coho::neumann_resolve(V, G, w.om, hbar, 1e-14, np);
  REQUIRE(nr.terms >= 2);
  // k-th term sits at p-index (k, 1) with coefficient c (-a)^k
  cplx expect = c;
  for (int k = 0; k <= nr.terms; ++k) {
    const Key key{static_cast<int32_t>(k), 1, 1, -1};
    const auto it = nr.Vtilde.comp[0].atoms().find(key);
    REQUIRE(it != nr.Vtilde.comp[0].atoms().end());
    CHECK(std::abs(it->second - expect) <= 1e-15 * std::abs(c));
    expect *= -a;
  }
  CHECK(nr.Vtilde.comp[0].size() == static_cast<size_t>(nr.terms + 1));

  // pointwise: sum equals the closed form c e^{i p' Xi} / (1 + a e^{i pg Xi})
  for (double Xi : {0.0, 0.9, -2.3}) {
    cplx num(0.0, 0.0);
    for (const auto& [k, cc] : nr.Vtilde.comp[0].atoms()) {
      const double p = w.gens->p_real(k.data())[0];
      num += cc * std::polar(1.0, p * Xi);
    }
    const cplx closed = c * std::polar(1.0, -0.3 * Xi) /
                        (1.0 + a * std::polar(1.0, 0.7 * Xi));
    const double trunc = std::abs(c) * std::pow(std::abs(a), nr.terms + 1) /
                         (1.0 - std::abs(a));
    CHECK(std::abs(num - closed) <= trunc + 1e-13);
  }
}

TEST_CASE("resolvent norm bound and contraction refusal") {
  World w = pair_world();
  std::mt19937_64 rng(107);
  NormParams np{0.8, w.om.underomega()};
  for (int trial = 0; trial < 30; ++trial) {
    VectorSymbol G = zero_vector(w);
    G.comp[0] = random_diag(rng, w, 2, 1, 0.05);
    G.comp[1] = random_diag(rng, w, 2, 1, 0.05);
    const double gradn = sym::grad_matrix_norm(G, np);
    if (2.0 * gradn >= 1.0) continue;
    VectorSymbol V = zero_vector(w);
    V.comp[0] = random_offdiag(rng, w, 4, 2, 1, 1.0, false);
    V.comp[1] = random_offdiag(rng, w, 4, 2, 1, 1.0, false);
    auto nr = coho::neumann_resolve(V, G, w.om, 1.0, 1e-14, np);
    CHECK(sym::norm(nr.Vtilde, np) <=
          sym::norm(V, np) / (1.0 - 2.0 * gradn) * (1.0 + 1e-12));
    // term norms decay geometrically from the first correction on
    for (size_t k = 2; k < nr.term_norms.size(); ++k)
      CHECK(nr.term_norms[k] <= nr.term_norms[k - 1] * 2.0 * gradn * 1.0001);
  }

  VectorSymbol big = zero_vector(w);
  big.comp[0] = random_diag(rng, w, 3, 3, 10.0);
  big.comp[1] = random_diag(rng, w, 3, 3, 10.0);
  VectorSymbol V = zero_vector(w);
  V.comp[0] = random_offdiag(rng, w, 3, 1, 1, 1.0, false);
  V.comp[1] = random_offdiag(rng, w, 3, 1, 1, 1.0, false);
  CHECK_THROWS_AS(coho::neumann_resolve(V, big, w.om, 1.0, 1e-14, np),
                  InvariantError);

  VectorSymbol off_in_G = zero_vector(w);
  off_in_G.comp[0] = random_offdiag(rng, w, 2, 1, 1, 0.01, false);
  off_in_G.comp[1] = zero_symbol(w);
  CHECK_THROWS_AS(coho::neumann_resolve(V, off_in_G, w.om, 1.0, 1e-14, np),
                  ConfigError);
}

TEST_CASE("small-divisor division: sign, kernel row, resonance guard") {
  World w = golden_world();
  VectorSymbol V = zero_vector(w);
  V.comp[0].add({1, 0}, {1, -1}, cplx(1.0, 0.0));  // q = (1,-1), d = 1-phi
  double worst = 0.0;
  Symbol W = coho::solve_W(V, w.om, &worst);
  REQUIRE(W.size() == 1);
  // w = c / (i d) with d = 1 - phi < 0: w = i / (phi - 1) = i phi
  CHECK(std::abs(W.atoms().begin()->second - cplx(0.0, kPhi)) < 1e-13);
  CHECK(worst == doctest::Approx(kPhi).epsilon(1e-13));

  // first-order equation closes: [L,W]/ih + V has empty off-average part
  Symbol lhs = sym::bracket_linear(w.om, 0, W);
  sym::axpy(lhs, 1.0, V.comp[0]);
  CHECK(sym::norm(lhs, NormParams{1.0, w.om.underomega()}) < 1e-13);

  // q = 0 input refused
  VectorSymbol bad = zero_vector(w);
  bad.comp[0].add({1, 0}, {0, 0}, cplx(1.0, 0.0));
  CHECK_THROWS_AS(coho::solve_W(bad, w.om), ConfigError);

  // exact resonance guarded (identity rows, q orthogonal to the best row is
  // impossible; force it with a 1-row matrix and orthogonal q)
  FrequencyMatrix skew({{1.0, 0.0}});
  VectorSymbol res;
  res.comp.assign(1, Symbol(w.gens, 2));
  res.comp[0].add({0, 0}, {0, 1}, cplx(1.0, 0.0));  // <omega, q> = 0
  CHECK_THROWS_AS(coho::solve_W(res, skew), InvariantError);
}

TEST_CASE("division keeps only best-row atoms; the rest feeds the residual") {
  World w = pair_world();
  VectorSymbol V = zero_vector(w);
  const std::vector<int32_t> q{1, 1};
  // row divisors: <w_0,q> = 1.3, <w_1,q> = 1.2 -> best row 0
  V.comp[0].add({0, 0}, q, cplx(2.0, 0.0));
  V.comp[1].add({0, 0}, q, cplx(5.0, 0.0));
  Symbol W = coho::solve_W(V, w.om);
  REQUIRE(W.size() == 1);
  CHECK(std::abs(W.atoms().begin()->second - cplx(2.0, 0.0) / cplx(0.0, 1.3)) <
        1e-15);

  // residual with B = 0: component 0 cancels exactly, component 1 keeps
  // v_1 - (d_1/d_0) v_0
  VectorSymbol R = coho::exact_residual(w.om, zero_vector(w), W, V, 1.0);
  NormParams np{0.7, w.om.underomega()};
  CHECK(sym::norm(R.comp[0], np) < 1e-13);
  REQUIRE(R.comp[1].size() == 1);
  CHECK(std::abs(R.comp[1].atoms().begin()->second -
                 cplx(5.0 - 1.2 / 1.3 * 2.0, 0.0)) < 1e-13);
}

TEST_CASE("division norm chains under both divisor hypotheses") {
  World w = golden_world();
  std::mt19937_64 rng(109);
  const double rho = 1.0;
  for (int trial = 0; trial < 50; ++trial) {
    VectorSymbol V = zero_vector(w);
    V.comp[0] = random_offdiag(rng, w, 6, 3, 2, 1.0, false);
    Symbol W = coho::solve_W(V, w.om);
    NormParams at_rho{rho, w.om.underomega()};
    const double MM = w.om.small_divisor_bound(V.comp[0].q_norm_max());
    CHECK(sym::norm(W, at_rho) <=
          MM * sym::norm(V, at_rho) * (1.0 + 1e-12));

    // Diophantine chain at reduced width, gamma from the empirical fit
    const double tau = 2.0;
    const double gamma =
        freq::diophantine_fit(w.om, tau, V.comp[0].q_norm_max() + 1.0).gamma;
    for (double d : {0.2, 0.5}) {
      NormParams lo{rho - d, w.om.underomega()};
      CHECK(sym::norm(W, lo) <=
            gamma * std::pow(tau / (std::exp(1.0) * d), tau) *
                sym::norm(V, at_rho) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("one-Hamiltonian steps resolve exactly; aligned pairs also do") {
  World w = golden_world();
  std::mt19937_64 rng(113);
  NormParams np{1.0, w.om.underomega()};
  // m = 1, B = 0: the residual vanishes identically
  VectorSymbol V = zero_vector(w);
  V.comp[0] = random_offdiag(rng, w, 6, 2, 2, 0.01, true);
  auto sol = coho::solve_step(w.om, zero_vector(w), V, 1.0, 1e-16, np);
  CHECK(sym::norm(sol.residual, np) < 1e-15);
  CHECK(sol.W.hermitian_hint);
  CHECK(sym::hermitian_defect(sol.W) < 1e-13);
  // W has no q = 0 atoms and support inside the source support
  for (const auto& [k, c] : sol.W.atoms()) {
    bool qzero = true;
    for (int j = 0; j < sol.W.l(); ++j) qzero = qzero && k[sol.W.s() + j] == 0;
    CHECK(!qzero);
    CHECK(V.comp[0].atoms().count(k) == 1);
  }

  // m = 2, B = 0, off-diagonal data aligned as v_a = <omega_a, q> s(p,q):
  // one W solves both equations exactly
  World wp = pair_world();
  VectorSymbol A = zero_vector(wp);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 6; ++t) {
    Key key(A.comp[0].s() + 2);
    std::uniform_int_distribution<int> P(-2, 2), Q(-2, 2);
    for (int j = 0; j < A.comp[0].s(); ++j) key[j] = P(rng);
    key[A.comp[0].s()] = Q(rng);
    key[A.comp[0].s() + 1] = Q(rng);
    std::vector<int32_t> q{key[A.comp[0].s()], key[A.comp[0].s() + 1]};
    if (q[0] == 0 && q[1] == 0) continue;
    const cplx s(U(rng), U(rng));
    const auto d = wp.om.omega_dot(q);
    A.comp[0].add(key, d[0] * s);
    A.comp[1].add(key, d[1] * s);
  }
  NormParams np2{1.0, wp.om.underomega()};
  auto sol2 = coho::solve_step(wp.om, zero_vector(wp), A, 1.0, 1e-16, np2);
  CHECK(sym::norm(sol2.residual, np2) <=
        1e-13 * std::max(1.0, sym::norm(A, np2)));

  // misaligned data: the residual reports the mismatch, no exception
  VectorSymbol Mis = zero_vector(wp);
  Mis.comp[0].add({0, 0}, {1, 0}, cplx(1.0, 0.0));
  Mis.comp[1].add({0, 0}, {1, 0}, cplx(1.0, 0.0));  // not d-proportional
  auto sol3 = coho::solve_step(wp.om, zero_vector(wp), Mis, 1.0, 1e-16, np2);
  CHECK(sym::norm(sol3.residual, np2) > 0.1);
}

TEST_CASE("full solve keeps the defining identity to rounding") {
  // residual - ([L,W]/ih + [B,W]/ih + Vco - avg Vco) = 0, recomputed from
  // the public pieces rather than trusted from the solver
  World w = pair_world();
  std::mt19937_64 rng(127);
  NormParams np{0.9, w.om.underomega()};
  VectorSymbol B = zero_vector(w);
  B.comp[0] = random_diag(rng, w, 2, 1, 0.02);
  B.comp[1] = random_diag(rng, w, 2, 1, 0.02);
  VectorSymbol V = zero_vector(w);
  V.comp[0] = random_offdiag(rng, w, 5, 2, 1, 0.01, true);
  V.comp[1] = random_offdiag(rng, w, 5, 2, 1, 0.01, true);
  for (double hb : {0.0, 1.0}) {
    auto sol = coho::solve_step(w.om, B, V, hb, 1e-16, np);
    for (int a = 0; a < 2; ++a) {
      Symbol lhs = sym::bracket_linear(w.om, a, sol.W);
      sym::axpy(lhs, 1.0, sym::bracket(B.comp[a], sol.W, w.om, hb));
      sym::axpy(lhs, 1.0, V.comp[a]);
      sym::axpy(lhs, -1.0, sym::average(V.comp[a]));
      Symbol diff = sym::lincomb(1.0, lhs, -1.0, sol.residual.comp[a], 0.0);
      CHECK(sym::norm(diff, np) <=
            1e-13 * std::max(1.0, sym::norm(V, np)));
      // the residual never contains q = 0 atoms
      for (const auto& [k, c] : sol.residual.comp[a].atoms()) {
        bool qzero = true;
        for (int j = 0; j < 2; ++j)
          qzero = qzero && k[sol.residual.comp[a].s() + j] == 0;
        CHECK(!qzero);
      }
    }
    // residual is second order: both B and V carry a small factor
    CHECK(sym::norm(sol.residual, np) <=
          50.0 * sym::norm(V, np) *
              (sym::norm(V, np) + sym::norm(B, np)));
  }
}
