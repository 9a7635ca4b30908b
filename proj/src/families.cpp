#include "families.hpp"

#include <cmath>
#include <utility>

#include "common.hpp"

namespace qbnf::fam {

using sym::NormParams;
using sym::Symbol;
using sym::VectorSymbol;

double family_commutator_norm(const freq::FrequencyMatrix& om,
                              const VectorSymbol& V, double hbar,
                              const NormParams& np) {
  const int m = V.m();
  // Coefficient-level rounding floor: commutators of exactly commuting
  // inputs cancel atomwise, leaving residues of order eps times the largest
  // contribution on each key.  |theta| <= 2 P Q and |<omega_a, q>| <= Q with
  // P = max |p|_2 and Q = max |omega q|_2 over all atoms, so anything below
  // the floor is numerical zero and must not be amplified by the norm
  // weights.
  double amax = 0.0, P = 0.0, Q = 0.0;
  for (const auto& c : V.comp) {
    amax = std::max(amax, c.max_abs_coeff());
    for (const auto& [k, coeff] : c.atoms()) {
      const auto pr = c.gens()->p_real(k.data());
      double pn = 0.0;
      for (double v : pr) pn += v * v;
      P = std::max(P, std::sqrt(pn));
      std::vector<int32_t> q(k.begin() + c.s(), k.end());
      const auto oq = om.omega_dot(q);
      double qn = 0.0;
      for (double v : oq) qn += v * v;
      Q = std::max(Q, std::sqrt(qn));
    }
  }
  const double floor = 1e-13 * amax * std::max(Q, 2.0 * P * Q * amax);
  double worst = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      // [L_i + V_i, L_j + V_j]/ih = [L_i,V_j]/ih - [L_j,V_i]/ih + [V_i,V_j]/ih
      Symbol c = sym::bracket_linear(om, i, V.comp[j]);
      sym::axpy(c, -1.0, sym::bracket_linear(om, j, V.comp[i]));
      sym::axpy(c, 1.0, sym::bracket(V.comp[i], V.comp[j], om, hbar));
      c.prune_abs(floor);
      worst = std::max(worst, sym::norm(c, np));
    }
  return worst;
}

Family generate_commuting_family(const FamilySpec& spec) {
  const int m = spec.omega.m();
  if (static_cast<int>(spec.B_gen.comp.size()) != m)
    throw ConfigError("generate_commuting_family: B_gen needs one component "
                      "per frequency row");
  if (spec.hbar < 0.0)
    throw ConfigError("generate_commuting_family: hbar must be >= 0");
  if (spec.rho <= 0.0 || spec.lie_tol <= 0.0)
    throw ConfigError("generate_commuting_family: rho and lie_tol must be "
                      "positive");
  for (const auto& c : spec.B_gen.comp) {
    for (const auto& [k, coeff] : c.atoms())
      for (int j = 0; j < c.l(); ++j)
        if (k[c.s() + j] != 0)
          throw ConfigError(
              "generate_commuting_family: B_gen must be diagonal (q = 0)");
  }
  const double wdefect = sym::hermitian_defect(spec.W_gen);
  if (wdefect > 1e-12 * std::max(1.0, spec.W_gen.max_abs_coeff()))
    throw ConfigError("generate_commuting_family: W_gen must be hermitian");
  if (spec.violate_commutation && m < 2)
    throw ConfigError("generate_commuting_family: planting a commutation "
                      "violation needs at least two components");

  NormParams np{spec.rho, spec.omega.underomega()};
  sym::LieParams lp;
  lp.hbar = spec.hbar;
  lp.lie_tol = spec.lie_tol;
  lp.np = np;

  Family out;
  out.V.comp.reserve(m);
  for (int i = 0; i < m; ++i) {
    auto lr = sym::lie_conjugate_linear(spec.omega, i, spec.B_gen.comp[i],
                                        spec.W_gen, lp);
    lr.value.hermitian_hint = true;
    out.V.comp.push_back(std::move(lr.value));
  }
  out.B_expected = spec.B_gen;
  for (auto& c : out.B_expected.comp) c.hermitian_hint = true;

  if (spec.violate_commutation) {
    // a single off-diagonal hermitian pair in component 0 only generically
    // breaks pairwise commutation
    sym::Key key(out.V.comp[0].s() + out.V.comp[0].l(), 0);
    key[out.V.comp[0].s()] = 1;
    out.V.comp[0].add(key, cplx(spec.violation_scale, 0.0));
    for (auto& e : key) e = -e;
    out.V.comp[0].add(key, cplx(spec.violation_scale, 0.0));
    out.max_commutator = family_commutator_norm(spec.omega, out.V, spec.hbar,
                                                np);
    return out;
  }

  out.max_commutator = family_commutator_norm(spec.omega, out.V, spec.hbar,
                                              np);
  double scale = 1.0;
  for (const auto& c : out.V.comp) scale = std::max(scale, sym::norm(c, np));
  if (out.max_commutator > 1e-12 * scale)
    throw InvariantError(
        "generate_commuting_family: generated family fails the pairwise "
        "commutation check; tighten lie_tol");
  return out;
}

freq::FrequencyMatrix builtin_frequencies(const std::string& name) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  // real root of t^3 = t + 1
  const double t = 1.3247179572447460260;
  if (name == "golden_1x2")
    return freq::FrequencyMatrix({{1.0, phi}});
  if (name == "cubic_1x3")
    return freq::FrequencyMatrix({{1.0, t, t * t}});
  if (name == "identity_2x2")
    return freq::FrequencyMatrix({{1.0, 0.0}, {0.0, 1.0}});
  if (name == "rot_2x2")
    return freq::FrequencyMatrix(
        {{std::cos(1.0), -std::sin(1.0)}, {std::sin(1.0), std::cos(1.0)}});
  if (name == "golden_pair_2x3")
    return freq::FrequencyMatrix({{1.0, phi, 0.0}, {0.0, 1.0, phi}});
  throw ConfigError("builtin_frequencies: unknown preset '" + name + "'");
}

std::vector<std::string> builtin_frequency_names() {
  return {"golden_1x2", "cubic_1x3", "identity_2x2", "rot_2x2",
          "golden_pair_2x3"};
}

FamilySpec default_family_spec(int m, double hbar) {
  if (m != 1 && m != 2)
    throw ConfigError("default_family_spec: m must be 1 or 2");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  FamilySpec spec{m == 1 ? builtin_frequencies("golden_1x2")
                         : freq::FrequencyMatrix({{1.0, phi}, {phi, 1.0}}),
                  Symbol(), VectorSymbol(), hbar};
  auto gens = sym::PGenerators::make(
      m, m == 1 ? std::vector<std::vector<double>>{{0.7}, {-0.3}}
                : std::vector<std::vector<double>>{{0.35, 0.1}, {-0.15, 0.2}});
  spec.W_gen = Symbol(gens, 2);
  auto put_pair = [](Symbol& F, sym::Key key, cplx c) {
    F.add(key, c);
    for (auto& e : key) e = -e;
    F.add(key, std::conj(c));
  };
  // scales tuned so the generated ||V||_{rho=2} sits near 1e-3
  const double s = (m == 1) ? 0.33 : 0.10;
  put_pair(spec.W_gen, {1, 0, 1, 0}, s * cplx(4.0e-6, 2.0e-6));
  put_pair(spec.W_gen, {0, 1, 0, 1}, s * cplx(-3.0e-6, 5.0e-6));
  put_pair(spec.W_gen, {1, 1, 1, -1}, s * cplx(2.0e-6, -2.5e-6));
  spec.W_gen.hermitian_hint = true;
  spec.B_gen.comp.assign(m, Symbol(gens, 2));
  for (int i = 0; i < m; ++i) {
    put_pair(spec.B_gen.comp[i],
             {1, 0, 0, 0}, s * cplx(4.0e-5, (i + 1) * 1e-5));
    put_pair(spec.B_gen.comp[i], {0, 1, 0, 0},
             s * cplx(-2.0e-5, (i == 0 ? 2.5e-5 : -1.5e-5)));
    spec.B_gen.comp[i].hermitian_hint = true;
  }
  return spec;
}

}  // namespace qbnf::fam
