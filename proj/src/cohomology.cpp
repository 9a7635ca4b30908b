#include "cohomology.hpp"

#include <algorithm>
#include <cmath>

namespace qbnf::coho {

namespace {

void require_vector(const sym::VectorSymbol& V, const freq::FrequencyMatrix& om,
                    const char* what) {
  if (V.m() != om.m())
    throw ConfigError(std::string(what) +
                      ": component count differs from frequency rows");
  for (const auto& c : V.comp) {
    if (!c.gens()) throw ConfigError(std::string(what) + ": missing generators");
    if (c.l() != om.l())
      throw ConfigError(std::string(what) + ": torus dimension mismatch");
  }
}

void require_zero_mode(const sym::VectorSymbol& G, const char* what) {
  for (const auto& c : G.comp)
    for (const auto& [k, v] : c.atoms())
      for (int j = c.s(); j < c.s() + c.l(); ++j)
        if (k[j] != 0)
          throw ConfigError(std::string(what) +
                            ": diagonal part must have q = 0 only");
}

}  // namespace

sym::VectorSymbol neumann_apply_A(const sym::VectorSymbol& G,
                                  const sym::VectorSymbol& V,
                                  const freq::FrequencyMatrix& om,
                                  double hbar) {
  require_vector(G, om, "neumann_apply_A G");
  require_vector(V, om, "neumann_apply_A V");
  require_zero_mode(G, "neumann_apply_A");
  const int m = om.m();
  sym::VectorSymbol out;
  out.comp.assign(m, sym::Symbol(V.comp[0].gens(), V.comp[0].l()));

  // Precompute the diagonal-part atom data once per component.
  struct GAtom {
    const sym::Key* key;
    cplx g;
    std::vector<double> p_real;
  };
  std::vector<std::vector<GAtom>> gatoms(m);
  for (int a = 0; a < m; ++a)
    for (const auto& [k, g] : G.comp[a].atoms())
      gatoms[a].push_back({&k, g, G.comp[a].gens()->p_real(k.data())});

  const int sdim = V.comp[0].s(), l = V.comp[0].l();
  std::vector<int32_t> q(l);
  sym::Key key(sdim + l);
  for (int b = 0; b < m; ++b) {
    for (const auto& [kv, c] : V.comp[b].atoms()) {
      for (int j = 0; j < l; ++j) q[j] = kv[sdim + j];
      const std::vector<double> omq = om.omega_dot(q);
      for (int a = 0; a < m; ++a) {
        for (const auto& ga : gatoms[a]) {
          if (ga.p_real[b] == 0.0) continue;
          double theta = 0.0;
          for (int i = 0; i < m; ++i) theta += ga.p_real[i] * omq[i];
          for (int t = 0; t < sdim + l; ++t) key[t] = (*ga.key)[t] + kv[t];
          out.comp[a].add(key, cplx(0.0, ga.p_real[b]) * ga.g *
                                   sinc(0.5 * hbar * theta) * c);
        }
      }
    }
  }
  return out;
}

NeumannResult neumann_resolve(const sym::VectorSymbol& Vco,
                              const sym::VectorSymbol& G,
                              const freq::FrequencyMatrix& om, double hbar,
                              double tol, const sym::NormParams& np) {
  require_vector(Vco, om, "neumann_resolve Vco");
  require_vector(G, om, "neumann_resolve G");
  require_zero_mode(G, "neumann_resolve");

  NeumannResult out;
  out.Vtilde = Vco;
  const double base = sym::norm(Vco, np);
  out.term_norms.push_back(base);
  if (base == 0.0) return out;
  if (2.0 * sym::grad_matrix_norm(G, np) >= 1.0)
    throw InvariantError(
        "neumann_resolve: contraction hypothesis Z_0 ||grad G|| < 1 violated");

  sym::VectorSymbol term = Vco;
  constexpr int kCap = 64;
  for (int k = 1; k <= kCap; ++k) {
    term = neumann_apply_A(G, term, om, hbar);
    for (auto& c : term.comp) {
      c.scale(-1.0);
      c.prune(1e-16);
    }
    const double tn = sym::norm(term, np);
    out.term_norms.push_back(tn);
    for (int a = 0; a < om.m(); ++a)
      sym::axpy(out.Vtilde.comp[a], 1.0, term.comp[a]);
    out.terms = k;
    if (tn <= tol * base) return out;
  }
  throw InvariantError(
      "neumann_resolve: series did not settle within 64 terms");
}

sym::Symbol solve_W(const sym::VectorSymbol& Vtilde,
                    const freq::FrequencyMatrix& om, double* worst_inv) {
  if (Vtilde.m() != om.m())
    throw ConfigError("solve_W: component count differs from frequency rows");
  if (Vtilde.comp.empty() || !Vtilde.comp[0].gens())
    throw ConfigError("solve_W: empty input");
  sym::Symbol W(Vtilde.comp[0].gens(), Vtilde.comp[0].l());
  const int sdim = W.s(), l = W.l();
  double worst = 0.0;
  std::vector<int32_t> q(l);
  for (int a = 0; a < om.m(); ++a) {
    for (const auto& [k, c] : Vtilde.comp[a].atoms()) {
      bool qzero = true;
      for (int j = 0; j < l; ++j) {
        q[j] = k[sdim + j];
        qzero = qzero && q[j] == 0;
      }
      if (qzero)
        throw ConfigError("solve_W: input must have zero average (q != 0)");
      if (om.best_index(q) != a) continue;
      const double d = om.omega_dot(q)[a];
      if (d == 0.0)
        throw InvariantError("solve_W: exact resonance <omega_l,q> = 0");
      worst = std::max(worst, 1.0 / std::fabs(d));
      W.add(k, c / cplx(0.0, d));
    }
  }
  if (worst_inv) *worst_inv = worst;
  return W;
}

sym::VectorSymbol exact_residual(const freq::FrequencyMatrix& om,
                                 const sym::VectorSymbol& B,
                                 const sym::Symbol& W,
                                 const sym::VectorSymbol& Vco, double hbar) {
  require_vector(B, om, "exact_residual B");
  require_vector(Vco, om, "exact_residual Vco");
  require_zero_mode(B, "exact_residual");
  sym::VectorSymbol out;
  out.comp.reserve(om.m());
  for (int a = 0; a < om.m(); ++a) {
    sym::Symbol res = sym::bracket_linear(om, a, W);
    sym::axpy(res, 1.0, sym::bracket(B.comp[a], W, om, hbar));
    sym::axpy(res, 1.0, Vco.comp[a]);
    sym::axpy(res, -1.0, sym::average(Vco.comp[a]));
    out.comp.push_back(std::move(res));
  }
  return out;
}

CohomologySolution solve_step(const freq::FrequencyMatrix& om,
                              const sym::VectorSymbol& B,
                              const sym::VectorSymbol& Vco, double hbar,
                              double tol, const sym::NormParams& np) {
  require_vector(Vco, om, "solve_step Vco");
  sym::VectorSymbol Voff;
  Voff.comp.reserve(om.m());
  for (const auto& c : Vco.comp)
    Voff.comp.push_back(
        sym::lincomb(1.0, c, -1.0, sym::average(c), 0.0));

  CohomologySolution out;
  NeumannResult nr = neumann_resolve(Voff, B, om, hbar, tol, np);
  out.Vtilde = std::move(nr.Vtilde);
  out.neumann_terms = nr.terms;
  out.term_norms = std::move(nr.term_norms);
  out.W = solve_W(out.Vtilde, om, &out.worst_inv_divisor);
  bool herm = true;
  for (const auto& c : Vco.comp) herm = herm && (c.hermitian_hint || c.empty());
  for (const auto& c : B.comp) herm = herm && (c.hermitian_hint || c.empty());
  out.W.hermitian_hint = herm;
  out.residual = exact_residual(om, B, out.W, Vco, hbar);

  const double gradn = sym::grad_matrix_norm(B, np);
  const double lhs = sym::norm(out.W, np);
  const double rhs = out.worst_inv_divisor / (1.0 - 2.0 * gradn) *
                     sym::norm(Vco, np);
  if (lhs > rhs * (1.0 + 1e-9))
    throw InvariantError(
        "solve_step: ||W|| exceeded the divisor/contraction norm chain");
  return out;
}

}  // namespace qbnf::coho
