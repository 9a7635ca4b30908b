#pragma once
// Brute-force truncated-matrix backend: dense operator construction on the
// lattice basis {e_n : |n|_inf <= N}, hermitian eigensolving with explicit
// residual contracts, eigenvector-overlap spectrum matching, and dense
// commutation checks.  Everything here is an independent verifier for the
// symbol-level arithmetic.

#include <Eigen/Dense>
#include <vector>

#include "freq.hpp"
#include "symbol.hpp"

namespace qbnf::orc {

struct TruncatedOperator {
  int N = 0;
  int l = 0;
  double hbar = 1.0;
  Eigen::MatrixXcd entries;  // dimension (2N+1)^l

  int dim() const { return static_cast<int>(entries.rows()); }
  int flatten(const std::vector<int32_t>& n) const;
  std::vector<int32_t> unflatten(int idx) const;
};

// Lattice size (2N+1)^l with the desk-scale dimension guard applied.
int lattice_dim(int N, int l);

// Dense quantization of a finite symbol: entry (m,n) applies the
// plane-wave rule coefficient * exp(i <p_real, hbar omega (m+n) / 2>) for
// every atom with m - n = q.  Exact for every pair; rows/columns near the
// boundary simply lack the neighbours outside the box.
TruncatedOperator to_matrix(const sym::Symbol& F,
                            const freq::FrequencyMatrix& om, int N,
                            double hbar);

// diag(hbar <omega_row, n>): the quantized linear flow.
TruncatedOperator linear_matrix(const freq::FrequencyMatrix& om, int row,
                                int N, double hbar);

// linear_matrix(row) + to_matrix(V_row): a full truncated Hamiltonian.
TruncatedOperator hamiltonian_matrix(const freq::FrequencyMatrix& om, int row,
                                     const sym::Symbol& V, int N, double hbar);

struct EigenSystem {
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd vectors;  // orthonormal columns, aligned with values
};

// Hermitian eigendecomposition with checked contracts: the input must be
// hermitian to 1e-13 * scale (ConfigError otherwise) and every returned pair
// satisfies ||A v - lambda v||_2 <= 1e-10 * ||A||_2 (InvariantError
// otherwise).
EigenSystem hermitian_eigs(const TruncatedOperator& op);

// 2-norm (largest singular value).
double operator_norm(const Eigen::MatrixXcd& A);

// exp(i W / hbar) through the eigendecomposition of a hermitian W.
Eigen::MatrixXcd unitary_exp(const TruncatedOperator& W);

struct SpectrumPair {
  int comp = 0;
  std::vector<int32_t> n;
  double predicted = 0.0;
  double measured = 0.0;
  double overlap = 0.0;
  double residual = 0.0;
  bool interior = false;
};

struct SpectrumReport {
  std::vector<SpectrumPair> pairs;
  double interior_max_err = 0.0;
  int interior_radius = 0;
  int boundary_excluded = 0;
  int ambiguous = 0;  // lattice labels claimed by more than one eigenvector
};

// Compares the eigenvalues of the truncated H_i = L_{omega_i} + V_i against
// the diagonal predictions hbar<omega_i,n> + sum of B_infty q=0 atoms
// evaluated at hbar omega n.  Eigenvectors are labeled by their largest
// basis overlap; labels claimed twice are counted (InvariantError in strict
// mode).  States with |n|_inf > interior_radius are reported but excluded
// from interior_max_err; interior_radius = N - q_margin with q_margin
// defaulting to the |q|_inf support of V.
SpectrumReport spectrum_compare(const freq::FrequencyMatrix& om,
                                const sym::VectorSymbol& V,
                                const sym::VectorSymbol& B_infty, int N,
                                double hbar, int q_margin = -1,
                                bool strict = false);

// max over pairs i < j of the 2-norm of the interior block of
// [H_i, H_j], H_i = L_{omega_i} + V_i.  Boundary rows and columns (within
// the summed band widths of the two factors) are excluded.
double commutation_check(const freq::FrequencyMatrix& om,
                         const sym::VectorSymbol& V, int N, double hbar);

// Dense audit of one conjugation step: for each component a builds
// M = L_a + B_a + V_a and M' = L_a + B'_a + V'_a, U = exp(i W / hbar), and
// returns the largest 2-norm of the interior block of U M U^* - M'.
// The interior margin is |n|_inf <= N - margin.
double conjugation_defect(const freq::FrequencyMatrix& om,
                          const sym::VectorSymbol& B_before,
                          const sym::VectorSymbol& V_before,
                          const sym::VectorSymbol& B_after,
                          const sym::VectorSymbol& V_after,
                          const sym::Symbol& W, int N, double hbar,
                          int margin);

}  // namespace qbnf::orc
