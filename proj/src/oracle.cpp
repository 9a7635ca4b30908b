#include "oracle.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

#include "common.hpp"

namespace qbnf::orc {

using sym::Symbol;
using sym::VectorSymbol;

namespace {

constexpr int kDimBudget = 5000;

void bump(std::vector<int32_t>& n, int N, bool& done) {
  for (size_t j = 0; j < n.size(); ++j) {
    if (n[j] < N) {
      ++n[j];
      std::fill(n.begin(), n.begin() + j, -N);
      return;
    }
  }
  done = true;
}

std::vector<std::vector<int32_t>> lattice(int N, int l) {
  std::vector<std::vector<int32_t>> pts;
  pts.reserve(lattice_dim(N, l));
  std::vector<int32_t> n(l, -N);
  bool done = false;
  while (!done) {
    pts.push_back(n);
    bump(n, N, done);
  }
  return pts;
}

int inf_norm(const std::vector<int32_t>& n) {
  int32_t w = 0;
  for (auto e : n) w = std::max(w, std::abs(e));
  return w;
}

// Band width that matters at dense tolerances: atoms whose coefficients sit
// below 1e-12 of the largest one perturb matrix entries (and hence every
// check here) far below the stated thresholds, so they do not widen the
// exclusion margin.
int effective_q_inf(const Symbol& F) {
  const double floor = 1e-12 * F.max_abs_coeff();
  int w = 0;
  for (const auto& [key, c] : F.atoms()) {
    if (std::abs(c) < floor) continue;
    for (int j = 0; j < F.l(); ++j)
      w = std::max(w, std::abs(key[F.s() + j]));
  }
  return w;
}

}  // namespace

int lattice_dim(int N, int l) {
  if (N < 0 || l < 1) throw ConfigError("lattice_dim: need N >= 0 and l >= 1");
  double d = 1.0;
  for (int j = 0; j < l; ++j) d *= 2.0 * N + 1.0;
  if (d > kDimBudget)
    throw ConfigError("lattice_dim: (2N+1)^l exceeds the dense budget");
  return static_cast<int>(d);
}

int TruncatedOperator::flatten(const std::vector<int32_t>& n) const {
  int idx = 0, stride = 1;
  for (int j = 0; j < l; ++j) {
    if (std::abs(n[j]) > N) return -1;
    idx += (n[j] + N) * stride;
    stride *= 2 * N + 1;
  }
  return idx;
}

std::vector<int32_t> TruncatedOperator::unflatten(int idx) const {
  std::vector<int32_t> n(l);
  for (int j = 0; j < l; ++j) {
    n[j] = idx % (2 * N + 1) - N;
    idx /= 2 * N + 1;
  }
  return n;
}

TruncatedOperator to_matrix(const Symbol& F, const freq::FrequencyMatrix& om,
                            int N, double hbar) {
  if (F.l() != om.l())
    throw ConfigError("to_matrix: symbol and frequency matrix disagree on l");
  TruncatedOperator op;
  op.N = N;
  op.l = om.l();
  op.hbar = hbar;
  const int dim = lattice_dim(N, op.l);
  op.entries = Eigen::MatrixXcd::Zero(dim, dim);
  const auto pts = lattice(N, op.l);
  const int s = F.s();
  for (const auto& [key, c] : F.atoms()) {
    const auto pr = F.gens()->p_real(key.data());
    std::vector<int32_t> row(op.l);
    for (int col = 0; col < dim; ++col) {
      bool in = true;
      for (int j = 0; j < op.l; ++j) {
        row[j] = pts[col][j] + key[s + j];
        if (std::abs(row[j]) > N) {
          in = false;
          break;
        }
      }
      if (!in) continue;
      double phase = 0.0;
      for (int i = 0; i < om.m(); ++i) {
        double y = 0.0;
        for (int j = 0; j < op.l; ++j)
          y += om.entry(i, j) * 0.5 * (row[j] + pts[col][j]);
        phase += pr[i] * hbar * y;
      }
      op.entries(op.flatten(row), col) += c * std::polar(1.0, phase);
    }
  }
  return op;
}

TruncatedOperator linear_matrix(const freq::FrequencyMatrix& om, int row,
                                int N, double hbar) {
  if (row < 0 || row >= om.m())
    throw ConfigError("linear_matrix: row out of range");
  TruncatedOperator op;
  op.N = N;
  op.l = om.l();
  op.hbar = hbar;
  const int dim = lattice_dim(N, op.l);
  op.entries = Eigen::MatrixXcd::Zero(dim, dim);
  const auto pts = lattice(N, op.l);
  for (int i = 0; i < dim; ++i) {
    double y = 0.0;
    for (int j = 0; j < op.l; ++j) y += om.entry(row, j) * pts[i][j];
    op.entries(i, i) = hbar * y;
  }
  return op;
}

TruncatedOperator hamiltonian_matrix(const freq::FrequencyMatrix& om, int row,
                                     const Symbol& V, int N, double hbar) {
  TruncatedOperator op = linear_matrix(om, row, N, hbar);
  if (!V.empty()) op.entries += to_matrix(V, om, N, hbar).entries;
  return op;
}

EigenSystem hermitian_eigs(const TruncatedOperator& op) {
  const double scale = std::max(1e-300, op.entries.cwiseAbs().maxCoeff());
  const double defect =
      (op.entries - op.entries.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-13 * scale)
    throw ConfigError("hermitian_eigs: input is not hermitian within "
                      "tolerance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
      (op.entries + op.entries.adjoint()) / 2.0);
  if (es.info() != Eigen::Success)
    throw InvariantError("hermitian_eigs: eigensolver failed to converge");
  EigenSystem sys{es.eigenvalues(), es.eigenvectors()};
  const double anorm =
      std::max(std::abs(sys.values(0)), std::abs(sys.values(sys.values.size() - 1)));
  const Eigen::MatrixXcd resid =
      op.entries * sys.vectors - sys.vectors * sys.values.asDiagonal();
  const double worst = resid.colwise().norm().maxCoeff();
  if (worst > 1e-10 * std::max(anorm, 1e-300))
    throw InvariantError("hermitian_eigs: residual contract violated");
  return sys;
}

double operator_norm(const Eigen::MatrixXcd& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A.adjoint() * A);
  if (es.info() != Eigen::Success)
    throw InvariantError("operator_norm: eigensolver failed to converge");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::MatrixXcd unitary_exp(const TruncatedOperator& W) {
  if (W.hbar <= 0.0)
    throw ConfigError("unitary_exp: needs hbar > 0");
  EigenSystem sys = hermitian_eigs(W);
  Eigen::ArrayXcd ph(sys.values.size());
  for (Eigen::Index i = 0; i < sys.values.size(); ++i)
    ph(i) = std::polar(1.0, sys.values(i) / W.hbar);
  return sys.vectors * ph.matrix().asDiagonal() * sys.vectors.adjoint();
}

SpectrumReport spectrum_compare(const freq::FrequencyMatrix& om,
                                const VectorSymbol& V,
                                const VectorSymbol& B_infty, int N,
                                double hbar, int q_margin, bool strict) {
  const int m = om.m();
  if (V.m() != m || B_infty.m() != m)
    throw ConfigError("spectrum_compare: component count mismatch");
  int qmax = 0;
  for (const auto& c : V.comp) qmax = std::max(qmax, effective_q_inf(c));
  if (q_margin >= 0) qmax = std::max(qmax, q_margin);
  SpectrumReport rep;
  rep.interior_radius = std::max(0, N - qmax);

  for (const auto& c : B_infty.comp)
    for (const auto& [key, coeff] : c.atoms())
      for (int j = 0; j < c.l(); ++j)
        if (key[c.s() + j] != 0)
          throw ConfigError("spectrum_compare: B_infty must be diagonal "
                            "(q = 0 atoms only)");

  for (int i = 0; i < m; ++i) {
    TruncatedOperator H = hamiltonian_matrix(om, i, V.comp[i], N, hbar);
    EigenSystem sys = hermitian_eigs(H);
    const int dim = H.dim();
    const double anorm = std::max(
        {1e-300, std::abs(sys.values(0)), std::abs(sys.values(dim - 1))});
    std::vector<int> claimed(dim, -1);
    for (int v = 0; v < dim; ++v) {
      int best = 0;
      double bw = 0.0;
      for (int b = 0; b < dim; ++b) {
        const double w = std::norm(sys.vectors(b, v));
        if (w > bw) {
          bw = w;
          best = b;
        }
      }
      SpectrumPair pair;
      pair.comp = i;
      pair.n = H.unflatten(best);
      pair.overlap = bw;
      pair.measured = sys.values(v);
      // prediction: linear flow plus the diagonal correction evaluated at
      // hbar omega n
      double lin = 0.0;
      for (int j = 0; j < om.l(); ++j) lin += om.entry(i, j) * pair.n[j];
      cplx corr(0.0, 0.0);
      const auto& B = B_infty.comp[i];
      if (!B.empty()) {
        const std::vector<int32_t> nvec(pair.n.begin(), pair.n.end());
        corr = sym::matrix_element(B, nvec, nvec, om, hbar);
      }
      if (std::abs(corr.imag()) >
          1e-12 * std::max(1.0, std::abs(corr.real())))
        throw InvariantError(
            "spectrum_compare: predicted correction has a non-real part");
      pair.predicted = hbar * lin + corr.real();
      pair.residual =
          (H.entries * sys.vectors.col(v) - sys.values(v) * sys.vectors.col(v))
              .norm() /
          anorm;
      pair.interior = inf_norm(pair.n) <= rep.interior_radius;
      if (claimed[best] >= 0) {
        ++rep.ambiguous;
        if (strict)
          throw InvariantError(
              "spectrum_compare: two eigenvectors claim one lattice label");
      }
      claimed[best] = v;
      if (pair.interior)
        rep.interior_max_err = std::max(
            rep.interior_max_err, std::abs(pair.measured - pair.predicted));
      else
        ++rep.boundary_excluded;
      rep.pairs.push_back(std::move(pair));
    }
  }
  return rep;
}

double commutation_check(const freq::FrequencyMatrix& om,
                         const VectorSymbol& V, int N, double hbar) {
  const int m = om.m();
  if (V.m() != m)
    throw ConfigError("commutation_check: component count mismatch");
  if (m < 2) return 0.0;
  std::vector<TruncatedOperator> H;
  H.reserve(m);
  int qmax = 0;
  for (int i = 0; i < m; ++i) {
    H.push_back(hamiltonian_matrix(om, i, V.comp[i], N, hbar));
    qmax = std::max(qmax, effective_q_inf(V.comp[i]));
  }
  // products of operators with band width q keep interior entries exact as
  // long as every intermediate index stays in the box, which one band width
  // of margin guarantees
  const int inner = std::max(0, N - qmax);
  std::vector<int> keep;
  const auto pts = lattice(N, om.l());
  for (size_t i = 0; i < pts.size(); ++i)
    if (inf_norm(pts[i]) <= inner) keep.push_back(static_cast<int>(i));
  double worst = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Eigen::MatrixXcd C =
          H[i].entries * H[j].entries - H[j].entries * H[i].entries;
      Eigen::MatrixXcd block(keep.size(), keep.size());
      for (size_t a = 0; a < keep.size(); ++a)
        for (size_t b = 0; b < keep.size(); ++b)
          block(a, b) = C(keep[a], keep[b]);
      worst = std::max(worst, operator_norm(block));
    }
  return worst;
}

namespace {

// Columns `keep` of exp(-i W / hbar), by a Taylor series on the sparse
// matrix.  Only used when the induced-infinity norm of W/hbar is small
// enough that the series reaches roundoff within the term budget; the
// remainder after a term of Frobenius norm t is below t (geometric tail with
// ratio <= 1/2).  A Gram audit certifies the computed slab is isometric.
// Returns false when the caller must fall back to the eigendecomposition.
bool exp_slab(const Eigen::MatrixXcd& Wd, double hbar,
              const std::vector<int>& keep, Eigen::MatrixXcd& out) {
  const Eigen::Index n = Wd.rows();
  const double b = Wd.cwiseAbs().rowwise().sum().maxCoeff() / hbar;
  if (!(b <= 0.5)) return false;
  const Eigen::SparseMatrix<cplx> Wsp = Wd.sparseView();
  Eigen::MatrixXcd term(n, static_cast<Eigen::Index>(keep.size()));
  term.setZero();
  for (size_t c = 0; c < keep.size(); ++c)
    term(keep[c], static_cast<Eigen::Index>(c)) = 1.0;
  out = term;
  const cplx rot(0.0, -1.0 / hbar);
  bool converged = false;
  for (int k = 1; k <= 40 && !converged; ++k) {
    const Eigen::MatrixXcd next = Wsp * term;
    term = next * (rot / static_cast<double>(k));
    out += term;
    converged = term.norm() <= 1e-17;
  }
  if (!converged) return false;
  Eigen::MatrixXcd gram = out.adjoint() * out;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
  if (gram.cwiseAbs().maxCoeff() > 1e-11)
    throw InvariantError("conjugation_defect: unitary slab failed the "
                         "isometry audit");
  return true;
}

}  // namespace

double conjugation_defect(const freq::FrequencyMatrix& om,
                          const VectorSymbol& B_before,
                          const VectorSymbol& V_before,
                          const VectorSymbol& B_after,
                          const VectorSymbol& V_after, const Symbol& W, int N,
                          double hbar, int margin) {
  const int m = om.m();
  if (B_before.m() != m || V_before.m() != m || B_after.m() != m ||
      V_after.m() != m)
    throw ConfigError("conjugation_defect: component count mismatch");
  TruncatedOperator Wop = to_matrix(W, om, N, hbar);
  Wop.hbar = hbar;
  const int inner = std::max(0, N - margin);
  const auto pts = lattice(N, om.l());
  std::vector<int> keep;
  for (size_t i = 0; i < pts.size(); ++i)
    if (inf_norm(pts[i]) <= inner) keep.push_back(static_cast<int>(i));
  // Only the kept rows and columns of the conjugated matrix are inspected,
  // so it suffices to form the slab S = exp(-i W / hbar)(:, keep):
  //   (U M U*)(keep, keep) = S* M S.
  Eigen::MatrixXcd S;
  const bool fast = hbar > 0.0 && exp_slab(Wop.entries, hbar, keep, S);
  if (!fast) {
    const Eigen::MatrixXcd U = unitary_exp(Wop);
    S.resize(U.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c)
      S.col(static_cast<Eigen::Index>(c)) = U.row(keep[c]).adjoint();
  }
  double worst = 0.0;
  for (int a = 0; a < m; ++a) {
    TruncatedOperator M = hamiltonian_matrix(om, a, V_before.comp[a], N, hbar);
    if (!B_before.comp[a].empty())
      M.entries += to_matrix(B_before.comp[a], om, N, hbar).entries;
    TruncatedOperator Mp = hamiltonian_matrix(om, a, V_after.comp[a], N, hbar);
    if (!B_after.comp[a].empty())
      Mp.entries += to_matrix(B_after.comp[a], om, N, hbar).entries;
    const Eigen::SparseMatrix<cplx> Msp = M.entries.sparseView();
    const Eigen::MatrixXcd MS = Msp * S;
    Eigen::MatrixXcd block = S.adjoint() * MS;
    for (size_t r = 0; r < keep.size(); ++r)
      for (size_t c = 0; c < keep.size(); ++c)
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) -=
            Mp.entries(keep[r], keep[c]);
    worst = std::max(worst, operator_norm(block));
  }
  return worst;
}

}  // namespace qbnf::orc
