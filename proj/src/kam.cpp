#include "kam.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cohomology.hpp"

namespace qbnf::kam {

namespace {

constexpr double kShellBudget = 2.5e7;  // lattice points per cutoff shell
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string fmtg(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

sym::Symbol empty_like(const sym::Symbol& ref) {
  return sym::Symbol(ref.gens(), ref.l());
}

void check_state(const freq::FrequencyMatrix& om, const KamState& st) {
  if (st.V.m() != om.m() || st.B.m() != om.m()) {
    throw ConfigError("kam: state must carry one component per frequency row");
  }
  for (const auto& c : st.V.comp) {
    if (!c.gens()) {
      throw ConfigError(
          "kam: perturbation components must share a generator table");
    }
    if (c.l() != om.l()) {
      throw ConfigError("kam: perturbation angle dimension must match the "
                        "frequency matrix");
    }
  }
}

}  // namespace

void validate(const KamConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw ConfigError("kam: alpha must be positive");
  if (cfg.mode == Mode::Brjuno && !(cfg.alpha < 2.0 * std::log(2.0))) {
    throw ConfigError("kam: the cutoff schedule requires alpha < 2 log 2 "
                      "(got alpha = " +
                      fmtg(cfg.alpha) + ")");
  }
  if (!(cfg.rho > 2.0 * cfg.alpha)) {
    throw ConfigError("kam: rho must exceed 2*alpha so the limiting width "
                      "stays positive (rho = " +
                      fmtg(cfg.rho) + ", alpha = " + fmtg(cfg.alpha) + ")");
  }
  if (!(0.0 < cfg.C && cfg.C < cfg.eta && cfg.eta < 1.0)) {
    throw ConfigError("kam: parameters must satisfy 0 < C < eta < 1 (C = " +
                      fmtg(cfg.C) + ", eta = " + fmtg(cfg.eta) + ")");
  }
  if (!(cfg.hbar >= 0.0 && cfg.hbar <= 1.0)) {
    throw ConfigError("kam: hbar must lie in [0, 1]");
  }
  if (cfg.max_iter < 0) throw ConfigError("kam: max_iter must be >= 0");
  if (!(cfg.lie_tol > 0.0) || !(cfg.neumann_tol > 0.0) ||
      !(cfg.prune_tol > 0.0)) {
    throw ConfigError("kam: lie_tol, neumann_tol and prune_tol must be "
                      "positive");
  }
  if (!(cfg.target_norm >= 0.0)) {
    throw ConfigError(
        "kam: target_norm must be >= 0 (0 selects 1e-12 * initial norm)");
  }
  if (cfg.mode == Mode::Diophantine) {
    if (!(cfg.gamma > 0.0)) {
      throw ConfigError("kam: Diophantine mode requires gamma > 0");
    }
    if (!(cfg.tau >= 1.0)) {
      throw ConfigError("kam: Diophantine mode requires tau >= 1");
    }
  }
}

double rho_at(const KamConfig& cfg, int r) {
  return cfg.rho - cfg.alpha * (2.0 - std::pow(2.0, 1 - r));
}

double predicted_bound(const freq::FrequencyMatrix& om, const KamState& st,
                       const KamConfig& cfg) {
  validate(cfg);
  check_state(om, st);
  const double uo = om.underomega();
  const double delta = cfg.alpha * std::pow(2.0, -st.r);
  const sym::NormParams np{st.rho_r, uo};
  const double nv = sym::norm(st.V, np);
  const double G = sym::grad_matrix_norm(st.B, np);
  const double Z = freq::Zk(0);
  const double D1 = 1.0 - Z * G;
  if (!(D1 > 0.0)) return kNan;

  double small = 0.0;  // divisor growth factor: M_{M_r} or gamma(tau/(e d))^tau
  double lead = 1.0;
  if (cfg.mode == Mode::Brjuno) {
    const double M = std::pow(2.0, st.r);
    if (freq::FrequencyMatrix::shell_cost(M, om.l()) > kShellBudget) {
      return kNan;  // divisor maximum not certifiable within the shell budget
    }
    small = om.small_divisor_bound(M);
  } else {
    small = cfg.gamma *
            std::pow(cfg.tau / (std::exp(1.0) * delta), cfg.tau);
    lead = std::pow(2.0, 2.0 + cfg.tau);
  }
  const double den = 1.0 - (small / D1) * (Z / (delta * delta)) * nv;
  if (!(den > 0.0)) return kNan;
  return small * Z / (delta * delta * D1 * D1) *
         (lead + (D1 + (small / delta) * uo * (1.0 + Z * G)) / den);
}

std::pair<KamState, IterationRecord> kam_step(const freq::FrequencyMatrix& om,
                                              const KamState& st,
                                              const KamConfig& cfg) {
  validate(cfg);
  check_state(om, st);
  const int r = st.r;
  const int m = om.m();
  const double uo = om.underomega();
  const double delta = cfg.alpha * std::pow(2.0, -r);
  const double M = std::pow(2.0, r);
  const double rho_next = st.rho_r - delta;
  const sym::NormParams np{st.rho_r, uo};
  const sym::NormParams npn{rho_next, uo};
  const double Z = freq::Zk(0);

  const double nv = sym::norm(st.V, np);
  const double G = sym::grad_matrix_norm(st.B, np);

  if (cfg.mode == Mode::Brjuno) {
    // The iteration is certified only while the accumulated diagonal
    // corrections keep the mixing operator a contraction and the cutoff
    // divisor maximum keeps the step quadratically small.
    if (r >= 1) {
      const double lim = cfg.eta - cfg.C / r;
      if (!(Z * G < lim)) {
        throw StepRefusal("kam step " + std::to_string(r) +
                          ": contraction margin violated: Z0*||grad(B_r - "
                          "B_0)|| = " +
                          fmtg(Z * G) + " must stay below eta - C/r = " +
                          fmtg(lim));
      }
    } else if (G > 0.0) {
      throw StepRefusal(
          "kam step 0: the diagonal correction must start empty "
          "(Z0*||grad B_0|| = " +
          fmtg(Z * G) + ")");
    }
    if (freq::FrequencyMatrix::shell_cost(M, om.l()) > kShellBudget) {
      throw StepRefusal("kam step " + std::to_string(r) +
                        ": cutoff shell |q|_2 <= " + fmtg(M) + " needs " +
                        fmtg(freq::FrequencyMatrix::shell_cost(M, om.l())) +
                        " lattice points, beyond the certification budget " +
                        fmtg(kShellBudget));
    }
    const double MM = om.small_divisor_bound(M);
    const double lhs = MM * Z * nv / (delta * delta);
    const double lim = (r == 0) ? 0.5 : 0.5 * (1.0 - cfg.eta + cfg.C / r);
    if (!(lhs < lim)) {
      throw StepRefusal("kam step " + std::to_string(r) +
                        ": cutoff smallness violated: M_{M_r}*Z0*||V_r||/"
                        "delta_r^2 = " +
                        fmtg(lhs) + " must stay below " + fmtg(lim) +
                        " (M_{M_r} = " + fmtg(MM) + ", ||V_r|| = " + fmtg(nv) +
                        ", delta_r = " + fmtg(delta) + ")");
    }
  }

  const double F = predicted_bound(om, st, cfg);

  // Split the perturbation at the cutoff (the whole symbol passes through in
  // Diophantine mode, where every divisor is certified by the (gamma, tau)
  // pair rather than by a finite shell maximum).
  sym::VectorSymbol Vco, tail;
  Vco.comp.reserve(m);
  tail.comp.reserve(m);
  for (const auto& c : st.V.comp) {
    if (cfg.mode == Mode::Brjuno) {
      auto sp = sym::split_cutoff(c, M);
      Vco.comp.push_back(std::move(sp.co));
      tail.comp.push_back(std::move(sp.tail));
    } else {
      Vco.comp.push_back(c);
      tail.comp.push_back(empty_like(c));
    }
  }

  auto sol = coho::solve_step(om, st.B, Vco, cfg.hbar, cfg.neumann_tol, np);

  // Diagonal update: h_{r+1} = average(V_r).
  sym::VectorSymbol h = sym::average(st.V);

  KamState next;
  next.r = r + 1;
  next.rho_r = rho_next;
  next.Ws = st.Ws;
  next.Ws.push_back(sol.W);
  next.B.comp.reserve(m);
  for (int a = 0; a < m; ++a) {
    sym::Symbol Bn =
        sym::lincomb(1.0, st.B.comp[a], 1.0, h.comp[a], cfg.prune_tol);
    Bn.hermitian_hint = (st.B.comp[a].hermitian_hint || st.B.comp[a].empty()) &&
                        (h.comp[a].hermitian_hint || h.comp[a].empty());
    next.B.comp.push_back(std::move(Bn));
  }

  sym::LieParams lp;
  lp.hbar = cfg.hbar;
  lp.lie_tol = cfg.lie_tol;
  lp.np = npn;
  lp.prune_tol = cfg.prune_tol;

  // Lie remainder sum_{j >= j0} S_j / j! with S_{j+1} = [S_j, W]/(i hbar j+1),
  // sharing the bracket recursion of the conjugation series.
  auto lie_tail = [&](sym::Symbol S, int j0, double base_ref) {
    sym::Symbol acc = empty_like(S);
    const double base = std::max({base_ref, sym::norm(S, npn), 1e-300});
    for (int j = 1; j <= lp.j_max; ++j) {
      if (j > 1) {
        S = sym::bracket(S, sol.W, om, lp.hbar);
        S.scale(1.0 / j);
        S.prune(lp.prune_tol);
      }
      if (j >= j0) sym::axpy(acc, 1.0, S);
      if (sym::norm(S, npn) <= lp.lie_tol * base) return acc;
    }
    throw InvariantError(
        "kam: Lie remainder series did not reach tolerance within j_max "
        "terms");
  };

  // V_{r+1} = tail + exact residual + R1 + R2, where R1 collects the
  // quadratic-and-higher Lie terms of the conjugated perturbation and R2
  // those of the conjugated diagonal part (starting at second order).
  sym::VectorSymbol Vnext;
  Vnext.comp.reserve(m);
  for (int a = 0; a < m; ++a) {
    const sym::Symbol& Va = st.V.comp[a];
    const sym::Symbol& Ba = st.B.comp[a];
    sym::Symbol R1 =
        lie_tail(sym::bracket(Va, sol.W, om, cfg.hbar), 1, sym::norm(Va, npn));
    sym::Symbol S1 = sym::bracket_linear(om, a, sol.W);
    sym::axpy(S1, 1.0, sym::bracket(Ba, sol.W, om, cfg.hbar));
    sym::Symbol R2 = lie_tail(std::move(S1), 2, sym::norm(Ba, npn));
    sym::Symbol Vn = tail.comp[a];
    sym::axpy(Vn, 1.0, sol.residual.comp[a]);
    sym::axpy(Vn, 1.0, R1);
    sym::axpy(Vn, 1.0, R2);
    Vn.prune(cfg.prune_tol);
    Vn.hermitian_hint = (Va.hermitian_hint || Va.empty()) &&
                        (Ba.hermitian_hint || Ba.empty()) &&
                        (sol.W.hermitian_hint || sol.W.empty());
    Vnext.comp.push_back(std::move(Vn));
  }
  next.V = std::move(Vnext);

  // Once per run (the opening step), cross-check the assembled perturbation
  // against the direct conjugation identity
  //   e^{iW/h}(L_a + B_a + V_a)e^{-iW/h} = L_a + B_a + h_a + V'_a.
  if (r == 0) {
    for (int a = 0; a < m; ++a) {
      sym::Symbol Fa = sym::lincomb(1.0, st.B.comp[a], 1.0, st.V.comp[a],
                                    cfg.prune_tol);
      sym::Symbol direct =
          sym::lie_conjugate_linear(om, a, Fa, sol.W, lp).value;
      sym::Symbol diff =
          sym::lincomb(1.0, direct, -1.0, next.B.comp[a], cfg.prune_tol);
      diff = sym::lincomb(1.0, diff, -1.0, next.V.comp[a], cfg.prune_tol);
      const double scale = std::max({st.V.comp[a].max_abs_coeff(),
                                     st.B.comp[a].max_abs_coeff(),
                                     sol.W.max_abs_coeff(), 1e-300});
      if (diff.max_abs_coeff() > 1e-9 * scale) {
        throw InvariantError(
            "kam: step assembly disagrees with the direct conjugation "
            "identity (coefficient defect " +
            fmtg(diff.max_abs_coeff()) + " at scale " + fmtg(scale) + ")");
      }
    }
  }

  IterationRecord rec;
  rec.r = r;
  rec.rho_r = st.rho_r;
  rec.delta_r = delta;
  rec.M_r = M;
  rec.norm_V = nv;
  rec.norm_W = sym::norm(sol.W, np);
  rec.norm_residual = sym::norm(sol.residual, npn);
  rec.norm_tail = sym::norm(tail, npn);
  rec.bound_F = F;
  rec.bound_rhs = (cfg.mode == Mode::Brjuno)
                      ? F * nv * nv + std::exp(-delta * M) * nv
                      : F * nv * nv;
  rec.measured_next = sym::norm(next.V, npn);
  rec.bound_ok = std::isfinite(rec.bound_rhs) &&
                 rec.measured_next <= rec.bound_rhs * (1.0 + 1e-9);
  rec.grad_G = G;
  return {std::move(next), rec};
}

namespace {

// A-priori distance of the unitary tail: A_n = sum_{s>=n} K_s D^{2^s} with
// K_s the divisor growth factor over 1 - eta + C/s.  Evaluated in log space
// so the doubly-exponential decay never hits overflow on the way down.
double tail_estimate(const freq::FrequencyMatrix& om, const KamConfig& cfg,
                     double norm0, int n, std::vector<std::string>* warnings) {
  double B_est = 0.0;
  try {
    auto bs = freq::brjuno_sum(om, 6);
    B_est = bs.partial_abs.back() + 2.0 * bs.last_increment;
  } catch (const std::exception& e) {
    if (warnings) {
      warnings->push_back(std::string("tail estimate: divisor-sum probe "
                                      "unavailable: ") +
                          e.what());
    }
  }
  double D = 0.0;
  if (cfg.mode == Mode::Brjuno) {
    const double M1 = om.small_divisor_bound(1.0);
    D = freq::D_k_brjuno(B_est, cfg.alpha, cfg.eta, cfg.C, 0, M1,
                         om.underomega(), norm0);
  } else {
    D = freq::D_k_dio(cfg.alpha, cfg.eta, cfg.C, 0, om.underomega(), cfg.gamma,
                      cfg.tau, norm0);
  }
  if (D <= 0.0) return 0.0;
  const double logD = std::log(D);
  if (!(logD < 0.0) ||
      (cfg.mode == Mode::Brjuno && !(logD + B_est < 0.0))) {
    if (warnings) {
      warnings->push_back(
          "tail estimate: the a-priori series diverges at these parameters "
          "(D_0 = " +
          fmtg(D) + ", divisor growth exponent " + fmtg(B_est) +
          "); reporting it as infinite");
    }
    return std::numeric_limits<double>::infinity();
  }
  double A = 0.0;
  for (int s = n; s <= 400; ++s) {
    const double Ms = std::pow(2.0, s);
    double logK = 0.0;
    if (cfg.mode == Mode::Brjuno) {
      if (freq::FrequencyMatrix::shell_cost(Ms, om.l()) <= 4e6) {
        logK = std::log(om.small_divisor_bound(Ms));
      } else {
        logK = B_est * Ms;  // exact shell maximum is bounded by e^{B M}
      }
    } else {
      const double delta_s = cfg.alpha * std::pow(2.0, -s);
      logK = cfg.tau * std::log(2.0) + std::log(cfg.gamma) +
             cfg.tau * std::log(cfg.tau / (std::exp(1.0) * delta_s));
    }
    const double log_term =
        logK - std::log(1.0 - cfg.eta + cfg.C / s) + Ms * logD;
    if (log_term < -745.0) break;
    A += std::exp(log_term);
  }
  return A;
}

}  // namespace

BnfResult run(const freq::FrequencyMatrix& om, const sym::VectorSymbol& V0,
              const KamConfig& cfg) {
  validate(cfg);
  const int m = om.m();
  const int l = om.l();
  if (V0.m() != m) {
    throw ConfigError("kam: the perturbation must have one component per "
                      "frequency row (got " +
                      std::to_string(V0.m()) + ", want " + std::to_string(m) +
                      ")");
  }
  BnfResult res;
  KamState st;
  st.r = 0;
  st.rho_r = cfg.rho;
  st.V = V0;
  st.B.comp.reserve(m);
  for (const auto& c : V0.comp) {
    if (!c.gens()) {
      throw ConfigError(
          "kam: perturbation components must share a generator table");
    }
    if (c.l() != l) {
      throw ConfigError("kam: perturbation angle dimension must match the "
                        "frequency matrix");
    }
    sym::Symbol b(c.gens(), l);
    b.hermitian_hint = true;
    st.B.comp.push_back(std::move(b));
  }

  const double uo = om.underomega();
  const sym::NormParams np0{cfg.rho, uo};
  const double norm0 = sym::norm(V0, np0);
  const double target =
      cfg.target_norm > 0.0 ? cfg.target_norm : 1e-12 * norm0;

  // Advisory admissibility report: the closed-form radius is sufficient, not
  // necessary, so a failed gate only warns while the per-step audit stays on.
  try {
    auto bs = freq::brjuno_sum(om, 6);
    freq::ConstantsIn in;
    in.k = 0;
    in.alpha = cfg.alpha;
    in.eta = cfg.eta;
    in.C = cfg.C;
    in.norm_V = norm0;
    in.grad_Vbar = sym::grad_matrix_norm(sym::average(V0), np0);
    in.B = bs.partial_abs.back() + 2.0 * bs.last_increment;
    in.M1 = om.small_divisor_bound(1.0);
    in.underomega = uo;
    if (cfg.mode == Mode::Diophantine) {
      in.gamma = cfg.gamma;
      in.tau = cfg.tau;
    }
    auto rep = freq::constants(in);
    if (cfg.mode == Mode::Brjuno) {
      if (!rep.condomega_ok) {
        res.warnings.push_back(
            "advisory: the frequency smallness condition fails at alpha = " +
            fmtg(cfg.alpha) + ", eta = " + fmtg(cfg.eta) + ", C = " +
            fmtg(cfg.C) + "; the closed-form radius is not in force");
      }
      if (!rep.cond_norm_lt_R) {
        res.warnings.push_back(
            "advisory: initial norm " + fmtg(norm0) +
            " is not below the sufficient radius " + fmtg(rep.R_brjuno) +
            "; proceeding with the per-step bound audit");
      }
    } else if (rep.dio_norm_lt_R && !*rep.dio_norm_lt_R && rep.R_dio) {
      res.warnings.push_back(
          "advisory: initial norm " + fmtg(norm0) +
          " is not below the sufficient radius " + fmtg(*rep.R_dio) +
          "; proceeding with the per-step bound audit");
    }
    if (!rep.cond_grad) {
      res.warnings.push_back(
          "advisory: averaged-perturbation gradient " + fmtg(in.grad_Vbar) +
          " is not below (eta - C)/Z0 = " +
          fmtg((cfg.eta - cfg.C) / freq::Zk(0)));
    }
  } catch (const std::exception& e) {
    res.warnings.push_back(std::string("advisory: constants report "
                                       "unavailable: ") +
                           e.what());
  }

  double cur = norm0;
  bool refused = false;
  while (static_cast<int>(res.records.size()) < cfg.max_iter) {
    if (cur <= target) break;
    try {
      auto [nst, rec] = kam_step(om, st, cfg);
      res.records.push_back(rec);
      st = std::move(nst);
      cur = rec.measured_next;
      if (!rec.bound_ok) {
        res.warnings.push_back(
            "step " + std::to_string(rec.r) + ": measured ||V_{r+1}|| = " +
            fmtg(rec.measured_next) +
            " is not covered by the certified bound " + fmtg(rec.bound_rhs));
      }
    } catch (const StepRefusal& e) {
      res.warnings.push_back(e.what());
      refused = true;
      break;
    }
  }
  res.B_infty = st.B;
  res.Ws = st.Ws;
  res.final_norm = cur;
  res.converged = cur <= target;
  if (!res.converged && !refused) {
    res.warnings.push_back("did not reach the target norm " + fmtg(target) +
                           " within " + std::to_string(cfg.max_iter) +
                           " steps; final norm " + fmtg(cur));
  }
  const int n = std::max<int>(1, static_cast<int>(res.records.size()));
  res.tail_estimate_A = tail_estimate(om, cfg, norm0, n, &res.warnings);
  return res;
}

BnfResult classical_run(const freq::FrequencyMatrix& om,
                        const sym::VectorSymbol& V0, const KamConfig& cfg) {
  if (cfg.hbar != 0.0) {
    throw ConfigError("kam: classical_run requires hbar = 0");
  }
  return run(om, V0, cfg);
}

std::pair<sym::Symbol, double> conjugate_observable(
    const freq::FrequencyMatrix& om, const sym::Symbol& X,
    const BnfResult& result, const KamConfig& cfg, double delta) {
  validate(cfg);
  if (!(delta > 0.0)) {
    throw ConfigError("kam: observable width margin delta must be positive");
  }
  const double rho_obs = cfg.rho - 2.0 * cfg.alpha - delta;
  if (!(rho_obs > 0.0)) {
    throw ConfigError(
        "kam: rho - 2*alpha - delta must stay positive (got " +
        fmtg(rho_obs) + ")");
  }
  if (!X.gens()) {
    throw ConfigError("kam: observable must carry a generator table");
  }
  sym::LieParams lp;
  lp.hbar = cfg.hbar;
  lp.lie_tol = cfg.lie_tol;
  lp.np = sym::NormParams{rho_obs, om.underomega()};
  lp.prune_tol = cfg.prune_tol;
  sym::Symbol Xc = X;
  for (const auto& W : result.Ws) {  // first generator applied innermost
    Xc = sym::lie_conjugate(Xc, W, om, lp).value;
  }
  const double moved =
      sym::norm(sym::lincomb(1.0, Xc, -1.0, X, cfg.prune_tol), lp.np);
  return {std::move(Xc), moved};
}

}  // namespace qbnf::kam
