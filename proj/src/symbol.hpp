#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "common.hpp"
#include "freq.hpp"

namespace qbnf::sym {

// Fixed list of s distinct generator vectors in R^m.  Atom p-parts are
// integer combinations of the generators.  Indices are never merged, even
// when generators are rationally dependent; the weighted norm then
// over-counts, which is harmless for upper bounds.
struct PGenerators {
  int m = 0;
  std::vector<std::vector<double>> gens;

  int s() const { return static_cast<int>(gens.size()); }

  static std::shared_ptr<const PGenerators> make(
      int m, std::vector<std::vector<double>> gens);

  // p_real = sum_j idx[j] * gens[j] in R^m
  std::vector<double> p_real(const int32_t* idx) const;
  double p_norm(const int32_t* idx) const;

  bool same_as(const PGenerators& other) const;
};

// Atom key layout: s p-indices followed by l q-components.
using Key = std::vector<int32_t>;

struct NormParams {
  double rho = 0.0;
  double underomega = 0.0;
};

// Finite set of exponential atoms (p_idx, q) -> coefficient representing
// sum c * e^{i<p_real, omega xi>} e^{i<q, x>}.  Exact under all engine
// operations; deterministic (ordered keys).
class Symbol {
public:
  Symbol() = default;
  Symbol(std::shared_ptr<const PGenerators> gens, int l);

  const std::shared_ptr<const PGenerators>& gens() const { return gens_; }
  int l() const { return l_; }
  int s() const { return gens_ ? gens_->s() : 0; }
  size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::map<Key, cplx>& atoms() const { return atoms_; }

  void add(const Key& key, cplx c);
  void add(const std::vector<int32_t>& p, const std::vector<int32_t>& q,
           cplx c);
  void scale(cplx a);

  double max_abs_coeff() const;
  // Drop atoms with |c| < rel_tol * max_abs_coeff().
  void prune(double rel_tol);
  // Drop atoms with |c| < cut (absolute threshold).
  void prune_abs(double cut);

  double q_norm_max() const;  // largest |q|_2 over atoms
  int q_inf_max() const;      // largest |q|_inf over atoms

  // Declares that the symbol is meant to stay conjugate-symmetric under
  // (p,q) -> (-p,-q); checked where it matters via hermitian_defect.
  bool hermitian_hint = false;

  // Number of atoms any single symbol may hold before ops refuse to grow it.
  static size_t atom_budget;

private:
  void check_key(const Key& key) const;

  std::shared_ptr<const PGenerators> gens_;
  int l_ = 0;
  std::map<Key, cplx> atoms_;
};

struct VectorSymbol {
  std::vector<Symbol> comp;
  int m() const { return static_cast<int>(comp.size()); }
};

// ---------------------------------------------------------------------------
// Algebra.  All binary ops require compatible generators and equal l.

// a*F + b*G; drops atoms below prune_tol relative to the input coefficient
// scale max(a*max|F|, b*max|G|), so exact cancellations do not leave dust.
Symbol lincomb(cplx a, const Symbol& F, cplx b, const Symbol& G,
               double prune_tol = 1e-16);
// acc += a*F
void axpy(Symbol& acc, cplx a, const Symbol& F);

// Weyl operator product: atoms combine as (p_F+p_G, q_F+q_G) with
// coefficient c_F c_G e^{i hbar theta / 2}, theta = p_F.w.q_G - p_G.w.q_F.
Symbol op_product(const Symbol& F, const Symbol& G,
                  const freq::FrequencyMatrix& om, double hbar);

// [F,G]/(i hbar): coefficient c_F c_G theta sinc(hbar theta / 2).
// Valid at hbar = 0, where it is the Poisson bracket.
Symbol bracket(const Symbol& F, const Symbol& G,
               const freq::FrequencyMatrix& om, double hbar);

// [L_{omega_row}, W]/(i hbar): coefficient *= -i <omega_row, q>.  Exact and
// hbar-free.
Symbol bracket_linear(const freq::FrequencyMatrix& om, int row,
                      const Symbol& W);

// sum |c| e^{rho (underomega |p|_2 + |q|_2)}
double norm(const Symbol& F, const NormParams& np);
double norm(const VectorSymbol& F, const NormParams& np);

Symbol average(const Symbol& F);  // q = 0 restriction
VectorSymbol average(const VectorSymbol& F);

struct Split {
  Symbol co;    // q = 0 atoms plus 0 < |q|_2 <= M
  Symbol tail;  // |q|_2 > M
};
Split split_cutoff(const Symbol& F, double M);

// m components, atom rule (p, q, c) -> (p, q, i p_j c) in component j.
VectorSymbol grad_xi(const Symbol& F);

// Jacobian matrix norm of a q=0 vector symbol: max over derivative direction
// d of sum over components c of || d/dXi_d G_c ||.
double grad_matrix_norm(const VectorSymbol& G, const NormParams& np);

// <e_row, Op(F) e_col> = sum over atoms with q = row - col of
// c * e^{i <p_real, hbar omega.(row+col)/2>}.
cplx matrix_element(const Symbol& F, const std::vector<int32_t>& row,
                    const std::vector<int32_t>& col,
                    const freq::FrequencyMatrix& om, double hbar);

// max over atoms of |c(p,q) - conj(c(-p,-q))| relative to max |coeff|.
double hermitian_defect(const Symbol& F);

// ---------------------------------------------------------------------------
// Lie conjugation

struct LieParams {
  double hbar = 1.0;
  double lie_tol = 1e-15;  // relative term-norm stopping threshold
  NormParams np;           // width at which term norms are measured
  int j_max = 64;
  double prune_tol = 1e-16;
  double heuristic_delta = 0.0;  // > 0 enables the contraction report
};

struct LieResult {
  Symbol value;
  int terms = 0;       // bracket terms accumulated (j >= 1)
  double ratio = 0.0;  // Z_0 ||W|| / delta^2 when heuristic_delta > 0
  bool contraction_ok = true;
};

// e^{iW/hbar} X e^{-iW/hbar} as sum_j T_j / j! with T_0 = X and
// T_{j+1} = [T_j, W]/(i hbar).  Truncates when the j-th term norm falls
// below lie_tol * ||X||; throws InvariantError when the series fails to
// decay within j_max terms.  The inverse conjugation is lie_conjugate(X,-W).
LieResult lie_conjugate(const Symbol& X, const Symbol& W,
                        const freq::FrequencyMatrix& om, const LieParams& lp);

// Conjugates L_{omega_row} + F and returns the part beyond the untouched
// linear term: F + sum_{j>=1} T_j/j! with T_1 = [L,W]/ih + [F,W]/ih.
LieResult lie_conjugate_linear(const freq::FrequencyMatrix& om, int row,
                               const Symbol& F, const Symbol& W,
                               const LieParams& lp);

}  // namespace qbnf::sym
