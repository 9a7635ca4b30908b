#include "symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qbnf::sym {

size_t Symbol::atom_budget = 2'000'000;

std::shared_ptr<const PGenerators> PGenerators::make(
    int m, std::vector<std::vector<double>> gens) {
  if (m < 1) throw ConfigError("p-generators need m >= 1");
  if (gens.empty()) throw ConfigError("p-generators must be non-empty");
  for (const auto& g : gens)
    if (static_cast<int>(g.size()) != m)
      throw ConfigError("p-generator dimension mismatch");
  for (size_t i = 0; i < gens.size(); ++i)
    for (size_t j = i + 1; j < gens.size(); ++j)
      if (gens[i] == gens[j])
        throw ConfigError("p-generators must be distinct");
  auto p = std::make_shared<PGenerators>();
  p->m = m;
  p->gens = std::move(gens);
  return p;
}

std::vector<double> PGenerators::p_real(const int32_t* idx) const {
  std::vector<double> out(m, 0.0);
  for (int j = 0; j < s(); ++j) {
    const double w = static_cast<double>(idx[j]);
    if (w == 0.0) continue;
    for (int d = 0; d < m; ++d) out[d] += w * gens[j][d];
  }
  return out;
}

double PGenerators::p_norm(const int32_t* idx) const {
  const std::vector<double> p = p_real(idx);
  double s2 = 0.0;
  for (double v : p) s2 += v * v;
  return std::sqrt(s2);
}

bool PGenerators::same_as(const PGenerators& other) const {
  return m == other.m && gens == other.gens;
}

// ---------------------------------------------------------------------------

Symbol::Symbol(std::shared_ptr<const PGenerators> gens, int l)
    : gens_(std::move(gens)), l_(l) {
  if (!gens_) throw ConfigError("symbol needs generators");
  if (l_ < 1) throw ConfigError("symbol needs l >= 1");
}

void Symbol::check_key(const Key& key) const {
  if (static_cast<int>(key.size()) != s() + l_)
    throw ConfigError("atom key has wrong length");
}

void Symbol::add(const Key& key, cplx c) {
  check_key(key);
  if (c == cplx(0.0, 0.0)) return;
  auto [it, inserted] = atoms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx(0.0, 0.0)) atoms_.erase(it);
  } else if (atoms_.size() > atom_budget) {
    throw InvariantError("symbol atom budget exceeded");
  }
}

void Symbol::add(const std::vector<int32_t>& p, const std::vector<int32_t>& q,
                 cplx c) {
  if (static_cast<int>(p.size()) != s() ||
      static_cast<int>(q.size()) != l_)
    throw ConfigError("atom p/q parts have wrong length");
  Key key;
  key.reserve(p.size() + q.size());
  key.insert(key.end(), p.begin(), p.end());
  key.insert(key.end(), q.begin(), q.end());
  add(key, c);
}

void Symbol::scale(cplx a) {
  if (a == cplx(0.0, 0.0)) {
    atoms_.clear();
    return;
  }
  for (auto& [k, c] : atoms_) c *= a;
}

double Symbol::max_abs_coeff() const {
  double mx = 0.0;
  for (const auto& [k, c] : atoms_) mx = std::max(mx, std::abs(c));
  return mx;
}

void Symbol::prune(double rel_tol) {
  if (rel_tol <= 0.0 || atoms_.empty()) return;
  prune_abs(rel_tol * max_abs_coeff());
}

void Symbol::prune_abs(double cut) {
  if (cut <= 0.0) return;
  for (auto it = atoms_.begin(); it != atoms_.end();) {
    if (std::abs(it->second) < cut)
      it = atoms_.erase(it);
    else
      ++it;
  }
}

double Symbol::q_norm_max() const {
  double mx = 0.0;
  const int sdim = s();
  for (const auto& [k, c] : atoms_) {
    double n2 = 0.0;
    for (int j = 0; j < l_; ++j) {
      const double v = k[sdim + j];
      n2 += v * v;
    }
    mx = std::max(mx, std::sqrt(n2));
  }
  return mx;
}

int Symbol::q_inf_max() const {
  int mx = 0;
  const int sdim = s();
  for (const auto& [k, c] : atoms_)
    for (int j = 0; j < l_; ++j) mx = std::max(mx, std::abs(k[sdim + j]));
  return mx;
}

// ---------------------------------------------------------------------------

namespace {

void require_compatible(const Symbol& F, const Symbol& G) {
  if (!F.gens() || !G.gens() || F.l() != G.l() ||
      (F.gens().get() != G.gens().get() && !F.gens()->same_as(*G.gens())))
    throw ConfigError("symbols have incompatible generators");
}

void require_freq(const Symbol& F, const freq::FrequencyMatrix& om) {
  if (F.gens()->m != om.m() || F.l() != om.l())
    throw ConfigError("symbol and frequency matrix dimensions disagree");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Per-atom data laid out for pairwise loops.
struct Side {
  std::vector<const Key*> keys;
  std::vector<cplx> coef;
  std::vector<std::vector<double>> pr;   // p_real
  std::vector<std::vector<double>> omq;  // omega . q
};

Side prepare(const Symbol& F, const freq::FrequencyMatrix& om) {
  Side s;
  const int sdim = F.s();
  std::vector<int32_t> q(F.l());
  s.keys.reserve(F.size());
  for (const auto& [k, c] : F.atoms()) {
    s.keys.push_back(&k);
    s.coef.push_back(c);
    s.pr.push_back(F.gens()->p_real(k.data()));
    for (int j = 0; j < F.l(); ++j) q[j] = k[sdim + j];
    s.omq.push_back(om.omega_dot(q));
  }
  return s;
}

}  // namespace

Symbol lincomb(cplx a, const Symbol& F, cplx b, const Symbol& G,
               double prune_tol) {
  require_compatible(F, G);
  Symbol out(F.gens(), F.l());
  for (const auto& [k, c] : F.atoms()) out.add(k, a * c);
  for (const auto& [k, c] : G.atoms()) out.add(k, b * c);
  if (prune_tol > 0.0)
    out.prune_abs(prune_tol * std::max(std::abs(a) * F.max_abs_coeff(),
                                       std::abs(b) * G.max_abs_coeff()));
  return out;
}

void axpy(Symbol& acc, cplx a, const Symbol& F) {
  require_compatible(acc, F);
  for (const auto& [k, c] : F.atoms()) acc.add(k, a * c);
}

Symbol op_product(const Symbol& F, const Symbol& G,
                  const freq::FrequencyMatrix& om, double hbar) {
  require_compatible(F, G);
  require_freq(F, om);
  const Side fa = prepare(F, om), gb = prepare(G, om);
  Symbol out(F.gens(), F.l());
  Key key(F.s() + F.l());
  for (size_t a = 0; a < fa.keys.size(); ++a) {
    for (size_t b = 0; b < gb.keys.size(); ++b) {
      for (size_t t = 0; t < key.size(); ++t)
        key[t] = (*fa.keys[a])[t] + (*gb.keys[b])[t];
      const double theta = dot(fa.pr[a], gb.omq[b]) - dot(gb.pr[b], fa.omq[a]);
      out.add(key, fa.coef[a] * gb.coef[b] *
                       std::polar(1.0, 0.5 * hbar * theta));
    }
  }
  return out;
}

Symbol bracket(const Symbol& F, const Symbol& G,
               const freq::FrequencyMatrix& om, double hbar) {
  require_compatible(F, G);
  require_freq(F, om);
  const Side fa = prepare(F, om), gb = prepare(G, om);
  Symbol out(F.gens(), F.l());
  Key key(F.s() + F.l());
  for (size_t a = 0; a < fa.keys.size(); ++a) {
    for (size_t b = 0; b < gb.keys.size(); ++b) {
      const double theta = dot(fa.pr[a], gb.omq[b]) - dot(gb.pr[b], fa.omq[a]);
      if (theta == 0.0) continue;
      for (size_t t = 0; t < key.size(); ++t)
        key[t] = (*fa.keys[a])[t] + (*gb.keys[b])[t];
      out.add(key, fa.coef[a] * gb.coef[b] * theta * sinc(0.5 * hbar * theta));
    }
  }
  return out;
}

Symbol bracket_linear(const freq::FrequencyMatrix& om, int row,
                      const Symbol& W) {
  require_freq(W, om);
  if (row < 0 || row >= om.m()) throw ConfigError("bracket_linear: bad row");
  Symbol out(W.gens(), W.l());
  const int sdim = W.s();
  std::vector<int32_t> q(W.l());
  for (const auto& [k, c] : W.atoms()) {
    double d = 0.0;
    for (int j = 0; j < W.l(); ++j) {
      q[j] = k[sdim + j];
      d += om.entry(row, j) * q[j];
    }
    if (d == 0.0) continue;
    out.add(k, c * cplx(0.0, -d));
  }
  return out;
}

double norm(const Symbol& F, const NormParams& np) {
  double acc = 0.0;
  const int sdim = F.s();
  for (const auto& [k, c] : F.atoms()) {
    const double pn = F.gens()->p_norm(k.data());
    double q2 = 0.0;
    for (int j = 0; j < F.l(); ++j) {
      const double v = k[sdim + j];
      q2 += v * v;
    }
    acc += std::abs(c) *
           std::exp(np.rho * (np.underomega * pn + std::sqrt(q2)));
  }
  return acc;
}

double norm(const VectorSymbol& F, const NormParams& np) {
  double acc = 0.0;
  for (const auto& c : F.comp) acc += norm(c, np);
  return acc;
}

Symbol average(const Symbol& F) {
  Symbol out(F.gens(), F.l());
  const int sdim = F.s();
  for (const auto& [k, c] : F.atoms()) {
    bool qzero = true;
    for (int j = 0; j < F.l(); ++j) qzero = qzero && (k[sdim + j] == 0);
    if (qzero) out.add(k, c);
  }
  return out;
}

VectorSymbol average(const VectorSymbol& F) {
  VectorSymbol out;
  out.comp.reserve(F.comp.size());
  for (const auto& c : F.comp) out.comp.push_back(average(c));
  return out;
}

Split split_cutoff(const Symbol& F, double M) {
  Split out{Symbol(F.gens(), F.l()), Symbol(F.gens(), F.l())};
  const int sdim = F.s();
  for (const auto& [k, c] : F.atoms()) {
    double q2 = 0.0;
    for (int j = 0; j < F.l(); ++j) {
      const double v = k[sdim + j];
      q2 += v * v;
    }
    if (std::sqrt(q2) <= M)
      out.co.add(k, c);
    else
      out.tail.add(k, c);
  }
  return out;
}

VectorSymbol grad_xi(const Symbol& F) {
  const int m = F.gens()->m;
  VectorSymbol out;
  out.comp.assign(m, Symbol(F.gens(), F.l()));
  for (const auto& [k, c] : F.atoms()) {
    const std::vector<double> p = F.gens()->p_real(k.data());
    for (int d = 0; d < m; ++d) {
      if (p[d] == 0.0) continue;
      out.comp[d].add(k, c * cplx(0.0, p[d]));
    }
  }
  return out;
}

double grad_matrix_norm(const VectorSymbol& G, const NormParams& np) {
  if (G.comp.empty()) return 0.0;
  const int m = G.comp[0].gens()->m;
  std::vector<double> per_dir(m, 0.0);
  for (const auto& comp : G.comp) {
    const int sdim = comp.s();
    for (const auto& [k, c] : comp.atoms()) {
      const std::vector<double> p = comp.gens()->p_real(k.data());
      const double pn = comp.gens()->p_norm(k.data());
      double q2 = 0.0;
      for (int j = 0; j < comp.l(); ++j) {
        const double v = k[sdim + j];
        q2 += v * v;
      }
      const double w =
          std::abs(c) * std::exp(np.rho * (np.underomega * pn + std::sqrt(q2)));
      for (int d = 0; d < m; ++d) per_dir[d] += std::fabs(p[d]) * w;
    }
  }
  return *std::max_element(per_dir.begin(), per_dir.end());
}

cplx matrix_element(const Symbol& F, const std::vector<int32_t>& row,
                    const std::vector<int32_t>& col,
                    const freq::FrequencyMatrix& om, double hbar) {
  require_freq(F, om);
  if (static_cast<int>(row.size()) != F.l() ||
      static_cast<int>(col.size()) != F.l())
    throw ConfigError("matrix_element: index dimension mismatch");
  std::vector<int32_t> mid(F.l());
  for (int j = 0; j < F.l(); ++j) mid[j] = row[j] + col[j];
  const std::vector<double> om_mid = om.omega_dot(mid);  // omega.(row+col)
  const int sdim = F.s();
  cplx acc(0.0, 0.0);
  for (const auto& [k, c] : F.atoms()) {
    bool match = true;
    for (int j = 0; j < F.l(); ++j)
      match = match && (k[sdim + j] == row[j] - col[j]);
    if (!match) continue;
    const std::vector<double> p = F.gens()->p_real(k.data());
    double phase = 0.0;
    for (int i = 0; i < om.m(); ++i) phase += p[i] * om_mid[i];
    acc += c * std::polar(1.0, 0.5 * hbar * phase);
  }
  return acc;
}

double hermitian_defect(const Symbol& F) {
  const double mx = F.max_abs_coeff();
  if (mx == 0.0) return 0.0;
  double worst = 0.0;
  Key neg;
  for (const auto& [k, c] : F.atoms()) {
    neg.assign(k.size(), 0);
    for (size_t t = 0; t < k.size(); ++t) neg[t] = -k[t];
    const auto it = F.atoms().find(neg);
    const cplx mirror = it == F.atoms().end() ? cplx(0.0, 0.0) : it->second;
    worst = std::max(worst, std::abs(c - std::conj(mirror)));
  }
  return worst / mx;
}

// ---------------------------------------------------------------------------

namespace {

void fill_heuristic(LieResult& out, const Symbol& W, const LieParams& lp) {
  if (lp.heuristic_delta > 0.0) {
    out.ratio = 2.0 * norm(W, lp.np) /
                (lp.heuristic_delta * lp.heuristic_delta);
    out.contraction_ok = out.ratio < 1.0;
  }
}

}  // namespace

LieResult lie_conjugate(const Symbol& X, const Symbol& W,
                        const freq::FrequencyMatrix& om, const LieParams& lp) {
  require_compatible(X, W);
  LieResult out;
  out.value = X;
  fill_heuristic(out, W, lp);
  const double base = norm(X, lp.np);
  if (base == 0.0 || W.empty()) return out;
  Symbol S = X;
  for (int j = 1; j <= lp.j_max; ++j) {
    S = bracket(S, W, om, lp.hbar);
    S.scale(1.0 / j);
    S.prune(lp.prune_tol);
    axpy(out.value, 1.0, S);
    out.terms = j;
    if (norm(S, lp.np) <= lp.lie_tol * base) {
      out.value.prune(lp.prune_tol);
      return out;
    }
  }
  throw InvariantError(
      "lie_conjugate: series did not reach tolerance within j_max terms");
}

LieResult lie_conjugate_linear(const freq::FrequencyMatrix& om, int row,
                               const Symbol& F, const Symbol& W,
                               const LieParams& lp) {
  require_compatible(F, W);
  LieResult out;
  out.value = F;
  fill_heuristic(out, W, lp);
  Symbol S = bracket_linear(om, row, W);
  axpy(S, 1.0, bracket(F, W, om, lp.hbar));
  S.prune(lp.prune_tol);
  axpy(out.value, 1.0, S);
  out.terms = 1;
  const double base =
      std::max({norm(F, lp.np), norm(S, lp.np), 1e-300});
  for (int j = 2; j <= lp.j_max; ++j) {
    S = bracket(S, W, om, lp.hbar);
    S.scale(1.0 / j);
    S.prune(lp.prune_tol);
    axpy(out.value, 1.0, S);
    out.terms = j;
    if (norm(S, lp.np) <= lp.lie_tol * base) {
      out.value.prune(lp.prune_tol);
      return out;
    }
  }
  throw InvariantError(
      "lie_conjugate_linear: series did not reach tolerance within j_max "
      "terms");
}

}  // namespace qbnf::sym
