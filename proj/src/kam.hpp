#pragma once
// Newton iteration driver: schedules the width losses and cutoffs, solves
// one cohomological step per round, conjugates by the resulting generator,
// audits the rigorous per-step bound, and assembles the limiting diagonal
// normal form together with the generator sequence.

#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "freq.hpp"
#include "symbol.hpp"

namespace qbnf::kam {

enum class Mode { Brjuno, Diophantine };

struct KamConfig {
  Mode mode = Mode::Brjuno;
  double alpha = 0.5;  // width budget: delta_r = alpha 2^{-r}
  double rho = 2.0;    // initial width; must exceed 2 alpha
  double eta = 0.5;    // 0 < C < eta < 1
  double C = 0.25;
  double hbar = 1.0;  // in [0, 1]; 0 selects the classical bracket
  int max_iter = 12;
  double lie_tol = 1e-15;
  double neumann_tol = 1e-16;
  double prune_tol = 1e-16;
  double target_norm = 0.0;  // 0: stop at 1e-12 * initial norm
  double gamma = 0.0;        // Diophantine data, required in that mode
  double tau = 0.0;
};

void validate(const KamConfig& cfg);  // throws ConfigError

// Schedule: rho_0 = rho and rho_{r+1} = rho_r - alpha 2^{-r}.
double rho_at(const KamConfig& cfg, int r);

struct KamState {
  int r = 0;
  sym::VectorSymbol B;  // accumulated diagonal corrections (q = 0 atoms);
                        // the linear part is implicit and never stored
  sym::VectorSymbol V;
  double rho_r = 0.0;
  std::vector<sym::Symbol> Ws;
};

struct IterationRecord {
  int r = 0;
  double rho_r = 0.0;
  double delta_r = 0.0;
  double M_r = 0.0;
  double norm_V = 0.0;         // ||V_r|| at rho_r
  double norm_W = 0.0;         // ||W_r|| at rho_r
  double norm_residual = 0.0;  // cohomology residual at rho_{r+1}
  double norm_tail = 0.0;      // cutoff remainder at rho_{r+1}
  double bound_F = 0.0;        // the rigorous quadratic factor F_r
  double bound_rhs = 0.0;      // F_r ||V_r||^2 (+ e^{-delta M} ||V_r||)
  double measured_next = 0.0;  // ||V_{r+1}|| at rho_{r+1}
  bool bound_ok = false;
  double grad_G = 0.0;  // ||grad (B_r - B_0)|| at rho_r
};

struct BnfResult {
  sym::VectorSymbol B_infty;  // q = 0 atoms; linear part implicit
  std::vector<sym::Symbol> Ws;
  std::vector<IterationRecord> records;
  bool converged = false;
  double final_norm = 0.0;
  double tail_estimate_A = 0.0;  // a-priori distance of the unitary tail
  std::vector<std::string> warnings;
};

// Step preconditions that merely refuse the step (reported by run() as
// non-convergence) rather than flagging an internal bug.
struct StepRefusal : InvariantError {
  using InvariantError::InvariantError;
};

// The rigorous quadratic factor in front of ||V_r||^2: the cutoff/divisor
// form in Brjuno mode, the gamma (tau/(e delta))^tau form in Diophantine
// mode.  Returns NaN when a smallness denominator is non-positive (the
// bound is then unavailable; distinct from a step failure).
double predicted_bound(const freq::FrequencyMatrix& om, const KamState& st,
                       const KamConfig& cfg);

// One Newton round: split by the cutoff (Brjuno), solve the cohomological
// equation, conjugate, assemble the next perturbation and the audit record.
std::pair<KamState, IterationRecord> kam_step(const freq::FrequencyMatrix& om,
                                              const KamState& st,
                                              const KamConfig& cfg);

// Full iteration from the initial perturbation (linear part implicit).
BnfResult run(const freq::FrequencyMatrix& om, const sym::VectorSymbol& V0,
              const KamConfig& cfg);

// run() with the classical bracket; requires cfg.hbar == 0.
BnfResult classical_run(const freq::FrequencyMatrix& om,
                        const sym::VectorSymbol& V0, const KamConfig& cfg);

// Conjugates an observable by the accumulated unitary (first generator
// applied innermost) and measures how far it moved at width
// rho - 2 alpha - delta.
std::pair<sym::Symbol, double> conjugate_observable(
    const freq::FrequencyMatrix& om, const sym::Symbol& X,
    const BnfResult& result, const KamConfig& cfg, double delta);

}  // namespace qbnf::kam
