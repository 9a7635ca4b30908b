#include "freq.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qbnf::freq {

namespace {
constexpr double kRankTol = 1e-12;
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

FrequencyMatrix::FrequencyMatrix(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  m_ = static_cast<int>(rows_.size());
  if (m_ < 1) throw ConfigError("frequency matrix needs at least one row");
  l_ = static_cast<int>(rows_[0].size());
  if (l_ < 1) throw ConfigError("frequency rows must be non-empty");
  for (const auto& r : rows_)
    if (static_cast<int>(r.size()) != l_)
      throw ConfigError("ragged frequency matrix");
  if (m_ > l_) throw ConfigError("frequency matrix requires m <= l");

  Eigen::MatrixXd A(m_, l_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < l_; ++j) A(i, j) = rows_[i][j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  if (svd.singularValues().minCoeff() <= kRankTol)
    throw ConfigError("frequency rows are rank deficient (tolerance 1e-12)");

  for (int i = 0; i < m_; ++i) {
    double s = 0.0;
    for (int j = 0; j < l_; ++j) s += rows_[i][j] * rows_[i][j];
    underomega_ += std::sqrt(s);
  }
  if (!(underomega_ > 0.0)) throw ConfigError("underomega must be positive");
}

std::vector<double> FrequencyMatrix::omega_dot(
    const std::vector<int32_t>& q) const {
  if (static_cast<int>(q.size()) != l_)
    throw ConfigError("omega_dot: q has wrong dimension");
  std::vector<double> out(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    double s = 0.0;
    for (int j = 0; j < l_; ++j) s += rows_[i][j] * q[j];
    out[i] = s;
  }
  return out;
}

int FrequencyMatrix::best_index(const std::vector<int32_t>& q) const {
  bool nonzero = false;
  for (int32_t qi : q) nonzero = nonzero || (qi != 0);
  if (!nonzero) throw ConfigError("best_index: q must be nonzero");
  const std::vector<double> d = omega_dot(q);
  int best = 0;
  double best_abs = std::fabs(d[0]);
  for (int i = 1; i < m_; ++i) {
    const double a = std::fabs(d[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  return best;
}

double FrequencyMatrix::shell_cost(double M, int l) {
  const double side = 2.0 * std::floor(M) + 1.0;
  return std::pow(side, l);
}

void FrequencyMatrix::ensure_shell(double M) const {
  if (M <= shell_M_) return;
  const int R = static_cast<int>(std::floor(M));
  shell_.clear();
  std::vector<int32_t> q(l_, static_cast<int32_t>(-R));
  const double M2 = M * M;
  while (true) {
    double n2 = 0.0;
    bool zero = true;
    for (int j = 0; j < l_; ++j) {
      n2 += static_cast<double>(q[j]) * q[j];
      zero = zero && (q[j] == 0);
    }
    if (!zero && n2 <= M2) {
      ShellPoint pt;
      pt.q = q;
      pt.norm = std::sqrt(n2);
      const std::vector<double> d = omega_dot(q);
      double max_abs = 0.0;
      int best = 0;
      for (int i = 0; i < m_; ++i) {
        const double a = std::fabs(d[i]);
        if (a > max_abs) {
          max_abs = a;
          best = i;
        }
      }
      pt.best_i = best;
      pt.inv_div = max_abs > 0.0 ? 1.0 / max_abs : kInf;
      shell_.push_back(std::move(pt));
    }
    int j = l_ - 1;
    while (j >= 0 && q[j] == R) {
      q[j] = static_cast<int32_t>(-R);
      --j;
    }
    if (j < 0) break;
    ++q[j];
  }
  std::sort(shell_.begin(), shell_.end(),
            [](const ShellPoint& a, const ShellPoint& b) {
              if (a.norm != b.norm) return a.norm < b.norm;
              return a.q < b.q;
            });
  prefix_max_.resize(shell_.size());
  double run = 0.0;
  for (size_t i = 0; i < shell_.size(); ++i) {
    run = std::max(run, shell_[i].inv_div);
    prefix_max_[i] = run;
  }
  shell_M_ = M;
}

size_t FrequencyMatrix::shell_count(double M) const {
  ensure_shell(M);
  size_t lo = 0, hi = shell_.size();
  while (lo < hi) {
    const size_t mid = (lo + hi) / 2;
    if (shell_[mid].norm <= M)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

const std::vector<ShellPoint>& FrequencyMatrix::shell_points(double M) const {
  ensure_shell(M);
  return shell_;
}

double FrequencyMatrix::small_divisor_bound(double M) const {
  const size_t n = shell_count(M);
  if (n == 0)
    throw ConfigError("small_divisor_bound: shell 0 < |q| <= M is empty");
  return prefix_max_[n - 1];
}

BrjunoSums brjuno_sum(const FrequencyMatrix& om, int K, double shell_budget) {
  if (K < 0) throw ConfigError("brjuno_sum: K must be >= 0");
  const double cost = FrequencyMatrix::shell_cost(std::pow(2.0, K), om.l());
  if (cost > shell_budget)
    throw ConfigError("brjuno_sum: shell enumeration exceeds budget");
  BrjunoSums out;
  out.K = K;
  double acc_abs = 0.0, acc_signed = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double Mk = om.small_divisor_bound(std::pow(2.0, k));
    const double w = std::pow(2.0, -k);
    const double lg = std::log(Mk);
    acc_abs += std::fabs(lg) * w;
    acc_signed += lg * w;
    out.M_of_2k.push_back(Mk);
    out.partial_abs.push_back(acc_abs);
    out.partial_signed.push_back(acc_signed);
    if (k == K) out.last_increment = std::fabs(lg) * w;
  }
  return out;
}

DiophantineFit diophantine_fit(const FrequencyMatrix& om, double tau,
                               double M_max) {
  if (tau < om.l()) throw ConfigError("diophantine_fit: requires tau >= l");
  if (!(M_max >= 1.0)) throw ConfigError("diophantine_fit: requires M_max >= 1");
  const auto& pts = om.shell_points(M_max);
  const size_t n = om.shell_count(M_max);
  DiophantineFit fit;
  fit.tau = tau;
  fit.M_max = M_max;
  for (size_t i = 0; i < n; ++i) {
    const double g = pts[i].inv_div / std::pow(pts[i].norm, tau);
    if (g > fit.gamma) {
      fit.gamma = g;
      fit.witness_q = pts[i].q;
    }
  }
  return fit;
}

// ---------------------------------------------------------------------------

double Zk(int k) {
  if (k < 0) throw ConfigError("Zk: k must be >= 0");
  return 2.0 * (k + 1) * std::pow(8.0, k);
}

static void check_eta_C(double eta, double C) {
  if (!(0.0 < C && C < eta && eta < 1.0))
    throw ConfigError("constants require 0 < C < eta < 1");
}

double delta_const(double eta, double C) {
  check_eta_C(eta, C);
  double lo = std::log(0.5);
  for (int r = 1; r <= 64; ++r) {
    const double v =
        std::log(0.5 * (1.0 - eta + C / r)) * std::pow(2.0, -r);
    lo = std::min(lo, v);
  }
  return -lo;
}

double cap_M(double alpha, double C, int k) {
  return std::pow(alpha * std::exp(1.0) * C / (8.0 * Zk(k)), 0.25);
}

double E_brjuno(double alpha, double eta, double underomega, double M1) {
  return (3.0 * alpha + (1.0 + eta) * underomega * M1) /
         ((1.0 - eta) * (1.0 - eta) * M1);
}

double E_dio(double alpha, double eta, double underomega, double gamma,
             double tau) {
  const double t = gamma * std::pow(tau / (std::exp(1.0) * alpha), tau);
  return (std::pow(2.0, 2.0 + tau) * alpha +
          2.0 * (alpha + (1.0 + eta) * underomega * t)) /
         ((1.0 - eta) * (1.0 - eta) * t);
}

double C_k_const(double B, double alpha, int k, double E) {
  return 2.0 * B - 6.0 * std::log(alpha) + 6.0 * std::log(2.0) +
         2.0 * std::log(Zk(k) * E);
}

double P_const(double B, int k, double Delta) {
  return B + std::log(Zk(k)) + 2.0 / std::exp(1.0) + Delta;
}

double D_k_brjuno(double B, double alpha, double eta, double C, int k,
                  double M1, double underomega, double norm_V) {
  check_eta_C(eta, C);
  const double E = E_brjuno(alpha, eta, underomega, M1);
  const double Ck = C_k_const(B, alpha, k, E);
  return std::exp(Ck) *
         (norm_V + std::exp(-alpha) * std::pow(alpha, 3) /
                       (2.0 * M1 * M1 * Zk(k) * E));
}

double D_k_dio(double alpha, double eta, double C, int k, double underomega,
               double gamma, double tau, double norm_V) {
  check_eta_C(eta, C);
  const double E1 = E_dio(alpha, eta, underomega, gamma, tau);
  const double Ba = B_alpha_const(gamma, tau, alpha);
  return std::exp(C_k_const(Ba, alpha, k, E1)) * norm_V;
}

double B_alpha_const(double gamma, double tau, double alpha) {
  return 2.0 * std::log(std::pow(2.0, tau) * gamma *
                        std::pow(tau / (std::exp(1.0) * alpha), tau));
}

static double min_branch(double B, double Delta, int k, double alpha,
                         double C) {
  return std::min(std::exp(-B - Delta) /
                      (std::pow(2.0, 1.0 / std::exp(1.0)) * Zk(k)),
                  cap_M(alpha, C, k));
}

double radius_brjuno_value(double B, double alpha, double eta, double C, int k,
                           double M1, double underomega) {
  check_eta_C(eta, C);
  const double Delta = delta_const(eta, C);
  const double f1 = std::pow(1.0 - eta, 4) * M1 * M1 /
                    std::pow(3.0 * alpha + (1.0 + eta) * underomega * M1, 2);
  const double f2 =
      std::pow(alpha, 6) * std::exp(-2.0 * B) / (64.0 * Zk(k) * Zk(k));
  return f1 * f2 * min_branch(B, Delta, k, alpha, C);
}

bool condomega_holds(double B, double alpha, double eta, double C, int k,
                     double M1, double underomega) {
  check_eta_C(eta, C);
  const double Delta = delta_const(eta, C);
  const double lhs = (3.0 * alpha + (1.0 + eta) * underomega * M1) /
                     (2.0 * std::exp(alpha) * std::pow(1.0 - eta, 2) *
                      std::pow(M1, 3));
  const double rhs = (std::pow(alpha, 3) * std::exp(-2.0 * B) / (64.0 * Zk(k))) *
                     min_branch(B, Delta, k, alpha, C);
  return lhs <= rhs;
}

double radius_dio_value(double alpha, double eta, double C, int k,
                        double underomega, double gamma, double tau) {
  check_eta_C(eta, C);
  const double Delta = delta_const(eta, C);
  const double t = gamma * std::pow(tau / (std::exp(1.0) * alpha), tau);
  const double g = std::pow(2.0, tau) * t;
  const double E1 = E_dio(alpha, eta, underomega, gamma, tau);
  const double f1 = 1.0 / (E1 * E1);
  const double f2 = std::pow(alpha, 6) /
                    (64.0 * Zk(k) * Zk(k) * std::pow(g, 4));
  const double mn =
      std::min(std::exp(-Delta) /
                   (g * g * std::pow(2.0, 1.0 / std::exp(1.0)) * Zk(k)),
               cap_M(alpha, C, k));
  return f1 * f2 * mn;
}

ScalingReport lambda_scaling(double B, double alpha, double eta, double C,
                             int k, double M1, double underomega,
                             double lambda) {
  check_eta_C(eta, C);
  const double Delta = delta_const(eta, C);
  const double M = cap_M(alpha, C, k);
  ScalingReport rep;
  rep.mu = ((alpha + 2.0 * ((1.0 - eta) * alpha +
                            (1.0 + eta) * underomega * M1)) /
            (2.0 * std::exp(alpha) * std::pow(1.0 - eta, 2) *
             std::pow(M1, 3))) *
           (64.0 * Zk(k) / (std::pow(alpha, 3) * std::exp(-2.0 * B)));
  rep.nu = std::exp(-B - Delta) /
           (std::pow(2.0, 1.0 / std::exp(1.0)) * Zk(k));
  rep.lambda0 = std::max(rep.mu / M, std::cbrt(rep.mu / rep.nu));
  const double f1 = std::pow(1.0 - eta, 4) * M1 * M1 /
                    std::pow(3.0 * alpha + (1.0 + eta) * underomega * M1, 2);
  const double f2 =
      std::pow(alpha, 6) * std::exp(-2.0 * B) / (64.0 * Zk(k) * Zk(k));
  rep.R_scaled = lambda * f1 * f2 * std::min(lambda * lambda * rep.nu, M);
  return rep;
}

BudgetReport brjuno_budget(double norm_V, double underomega_minus,
                           double alpha, double eta, int k) {
  if (!(norm_V > 0.0)) throw ConfigError("brjuno_budget: norm_V must be > 0");
  if (!(0.0 < eta && eta < 1.0))
    throw ConfigError("brjuno_budget: requires 0 < eta < 1");
  BudgetReport rep;
  rep.K = std::pow(1.0 - eta, 4) * std::pow(alpha, 6) /
          ((alpha + 2.0 * (1.0 + eta) * underomega_minus) * 64.0 *
           std::pow(2.0, 1.0 / std::exp(1.0)) * std::pow(Zk(k), 3));
  rep.budget = std::log(1.0 / norm_V) / 3.0 + std::log(2.0 * rep.K) / 3.0;
  return rep;
}

ConstantsReport constants(const ConstantsIn& in) {
  check_eta_C(in.eta, in.C);
  if (!(in.alpha > 0.0 && in.alpha < 2.0 * std::log(2.0)))
    throw ConfigError("constants require 0 < alpha < 2 log 2");
  if (in.k < 0) throw ConfigError("constants require k >= 0");
  if (!(in.M1 > 0.0) || !(in.underomega > 0.0))
    throw ConfigError("constants require M1 > 0 and underomega > 0");

  ConstantsReport rep;
  rep.Z_k = Zk(in.k);
  rep.Delta = delta_const(in.eta, in.C);
  rep.M_cap = cap_M(in.alpha, in.C, in.k);
  rep.E0 = E_brjuno(in.alpha, in.eta, in.underomega, in.M1);
  rep.C_k = C_k_const(in.B, in.alpha, in.k, rep.E0);
  rep.P = P_const(in.B, in.k, rep.Delta);
  rep.D_k = D_k_brjuno(in.B, in.alpha, in.eta, in.C, in.k, in.M1,
                       in.underomega, in.norm_V);
  rep.R_brjuno = radius_brjuno_value(in.B, in.alpha, in.eta, in.C, in.k,
                                     in.M1, in.underomega);
  rep.condomega_ok = condomega_holds(in.B, in.alpha, in.eta, in.C, in.k,
                                     in.M1, in.underomega);
  rep.cond_D_lt_eP = rep.D_k < std::exp(-rep.P);
  rep.cond_D_lt_M = rep.D_k < rep.M_cap;
  rep.cond_grad = in.grad_Vbar < (in.eta - in.C) / rep.Z_k;
  rep.cond_norm_lt_R = in.norm_V < rep.R_brjuno;

  const ScalingReport pre = lambda_scaling(in.B, in.alpha, in.eta, in.C, in.k,
                                           in.M1, in.underomega, 1.0);
  rep.mu = pre.mu;
  rep.nu = pre.nu;
  rep.lambda0 = pre.lambda0;
  rep.R_scaled_at_lambda0 =
      lambda_scaling(in.B, in.alpha, in.eta, in.C, in.k, in.M1, in.underomega,
                     rep.lambda0)
          .R_scaled;

  if (!(rep.Z_k > 0.0) || !(rep.Delta > 0.0) || !(rep.M_cap > 0.0) ||
      !(rep.E0 > 0.0) || rep.M_cap >= 1.0)
    throw InvariantError("constants positivity/M_cap<1 invariant violated");
  if (in.B >= 0.0 && !(rep.P > 0.0))
    throw InvariantError("constants invariant P > 0 violated");

  if (in.gamma && in.tau) {
    const double g = *in.gamma, t = *in.tau;
    if (!(g > 0.0)) throw ConfigError("constants: gamma must be > 0");
    rep.E1 = E_dio(in.alpha, in.eta, in.underomega, g, t);
    rep.B_alpha = B_alpha_const(g, t, in.alpha);
    rep.C_k_dio = C_k_const(*rep.B_alpha, in.alpha, in.k, *rep.E1);
    rep.P_dio = P_const(*rep.B_alpha, in.k, rep.Delta);
    rep.D_k_dio = D_k_dio(in.alpha, in.eta, in.C, in.k, in.underomega, g, t,
                          in.norm_V);
    rep.R_dio =
        radius_dio_value(in.alpha, in.eta, in.C, in.k, in.underomega, g, t);
    rep.dio_D_lt_eP = *rep.D_k_dio < std::exp(-*rep.P_dio);
    rep.dio_D_lt_M = *rep.D_k_dio < rep.M_cap;
    rep.dio_norm_lt_R = in.norm_V < *rep.R_dio;
  }
  return rep;
}

}  // namespace qbnf::freq
