#pragma once

#include <vector>

#include "common.hpp"
#include "freq.hpp"
#include "symbol.hpp"

namespace qbnf::coho {

// One application of the component-mixing operator A to a vector symbol:
// for a diagonal-part atom (p_g, 0, g) of component a and a target atom
// (p', q, c) of component b, component a gains
//   (p_g + p', q, i (p_g)_b g sinc(hbar p_g.w.q / 2) c).
// This is the closed form of A(Xi,q) = int_0^1 grad G(Xi + (t-1/2) hbar w.q) dt
// acting on matrix elements; it satisfies, atom-exactly,
//   bracket(G_a, X) = sum_b (A e_b X)_a with e_b X fed through the linear-row
// bracket, which the tests verify.
sym::VectorSymbol neumann_apply_A(const sym::VectorSymbol& G,
                                  const sym::VectorSymbol& V,
                                  const freq::FrequencyMatrix& om, double hbar);

struct NeumannResult {
  sym::VectorSymbol Vtilde;
  int terms = 0;                   // applications of A beyond the identity
  std::vector<double> term_norms;  // norm of each accumulated term, k = 0..
};

// Vtilde = sum_{k>=0} (-A)^k Vco, truncated when a term norm falls below
// tol * ||Vco||; refuses (InvariantError) when the contraction hypothesis
// Z_0 ||grad G|| < 1 fails or the series does not settle within 64 terms.
// G must consist of q = 0 symbols only.
NeumannResult neumann_resolve(const sym::VectorSymbol& Vco,
                              const sym::VectorSymbol& G,
                              const freq::FrequencyMatrix& om, double hbar,
                              double tol, const sym::NormParams& np);

// Small-divisor division: every atom (p,q,c) of the component picked by
// best_index(q) yields a W atom (p, q, c / (i <omega_{l_q}, q>)); atoms of the
// other components are deliberately left to the residual.  Input must have no
// q = 0 atoms; exact resonances raise InvariantError.  worst_inv (optional)
// receives max |<omega_{l_q}, q>|^{-1} over the divided atoms.
sym::Symbol solve_W(const sym::VectorSymbol& Vtilde,
                    const freq::FrequencyMatrix& om,
                    double* worst_inv = nullptr);

// residual_a = [L_a, W]/ih + [B_a, W]/ih + Vco_a - average(Vco_a), computed
// with the exact atom algebra; B holds the q = 0 diagonal parts (without the
// linear term, which is handled analytically by the linear-row bracket).
sym::VectorSymbol exact_residual(const freq::FrequencyMatrix& om,
                                 const sym::VectorSymbol& B,
                                 const sym::Symbol& W,
                                 const sym::VectorSymbol& Vco, double hbar);

struct CohomologySolution {
  sym::Symbol W;              // scalar generator, no q = 0 atoms
  sym::VectorSymbol Vtilde;   // component-mixing resolvent applied to Vco'
  sym::VectorSymbol residual; // exact left-over, no q = 0 atoms
  int neumann_terms = 0;
  std::vector<double> term_norms;
  double worst_inv_divisor = 0.0;  // max 1/|<omega_{l_q},q>| actually used
};

// Full step: strip averages, resolve the mixing, divide, extract the exact
// residual, and assert the norm chain
//   ||W|| <= worst_inv / (1 - Z_0 ||grad B||) * ||Vco||
// at the supplied width (InvariantError if violated).
CohomologySolution solve_step(const freq::FrequencyMatrix& om,
                              const sym::VectorSymbol& B,
                              const sym::VectorSymbol& Vco, double hbar,
                              double tol, const sym::NormParams& np);

}  // namespace qbnf::coho
