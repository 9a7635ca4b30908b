#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "common.hpp"

namespace qbnf::freq {

// One lattice point of the euclidean shell 0 < |q|_2 <= M together with the
// data the small-divisor analysis needs.
struct ShellPoint {
  std::vector<int32_t> q;
  double norm = 0.0;     // |q|_2
  double inv_div = 0.0;  // min_i |<omega_i,q>|^{-1}, +inf on exact resonance
  int best_i = 0;        // smallest index attaining max_i |<omega_i,q>|
};

// m x l real frequency matrix with rows omega_1..omega_m.  Requires
// 1 <= m <= l, full row rank at tolerance 1e-12, and positive total weight
// underomega = sum_j |omega_j|_2.
class FrequencyMatrix {
public:
  explicit FrequencyMatrix(std::vector<std::vector<double>> rows);

  int m() const { return m_; }
  int l() const { return l_; }
  double entry(int i, int j) const { return rows_[i][j]; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  double underomega() const { return underomega_; }

  // (<omega_1,q>, ..., <omega_m,q>)
  std::vector<double> omega_dot(const std::vector<int32_t>& q) const;

  // Smallest row index attaining max_i |<omega_i,q>|; q must be nonzero.
  int best_index(const std::vector<int32_t>& q) const;

  // M_M = max over 0 < |q|_2 <= M of min_i |<omega_i,q>|^{-1}.
  // Exact over the finite shell; shells are cached and reused.
  double small_divisor_bound(double M) const;

  // Cached shell points sorted by (norm, q); the first shell_count(M)
  // entries are exactly those with 0 < |q|_2 <= M.
  const std::vector<ShellPoint>& shell_points(double M) const;
  size_t shell_count(double M) const;

  // Lattice points a shell enumeration up to radius M has to visit.
  static double shell_cost(double M, int l);

private:
  void ensure_shell(double M) const;

  int m_ = 0, l_ = 0;
  std::vector<std::vector<double>> rows_;
  double underomega_ = 0.0;
  mutable std::vector<ShellPoint> shell_;
  mutable std::vector<double> prefix_max_;  // running max of inv_div
  mutable double shell_M_ = -1.0;
};

// ---------------------------------------------------------------------------
// Brjuno sums

struct BrjunoSums {
  int K = -1;
  std::vector<double> M_of_2k;         // M_{2^k}, k = 0..K
  std::vector<double> partial_abs;     // sum_{j<=k} |log M_{2^j}| / 2^j
  std::vector<double> partial_signed;  // same without the absolute value
  double last_increment = 0.0;         // |log M_{2^K}| / 2^K
};

// Partial Brjuno sums up to shell cutoff 2^K.  Throws ConfigError when the
// shell enumeration would exceed `shell_budget` lattice points.
BrjunoSums brjuno_sum(const FrequencyMatrix& om, int K,
                      double shell_budget = 2.5e7);

// ---------------------------------------------------------------------------
// Empirical Diophantine fit

struct DiophantineFit {
  double tau = 0.0;
  double gamma = 0.0;  // max over the shell of inv_div / |q|^tau
  double M_max = 0.0;
  std::vector<int32_t> witness_q;
  // A finite enumeration only certifies a lower bound for any true gamma.
  bool lower_bound = true;
};

// Smallest gamma making min_i |<omega_i,q>|^{-1} <= gamma |q|^tau hold on the
// enumerated shell.  Requires tau >= l.
DiophantineFit diophantine_fit(const FrequencyMatrix& om, double tau,
                               double M_max);

// ---------------------------------------------------------------------------
// Closed-form constants.  Every function evaluates its formula literally; the
// granular entry points exist so tests can cross-check them independently.

double Zk(int k);                             // 2 (k+1) 8^k
double delta_const(double eta, double C);     // Delta
double cap_M(double alpha, double C, int k);  // (alpha e C / (8 Z_k))^{1/4}
double E_brjuno(double alpha, double eta, double underomega, double M1);
double E_dio(double alpha, double eta, double underomega, double gamma,
             double tau);
double C_k_const(double B, double alpha, int k, double E);
double P_const(double B, int k, double Delta);
double D_k_brjuno(double B, double alpha, double eta, double C, int k,
                  double M1, double underomega, double norm_V);
double D_k_dio(double alpha, double eta, double C, int k, double underomega,
               double gamma, double tau, double norm_V);
double B_alpha_const(double gamma, double tau, double alpha);
double radius_brjuno_value(double B, double alpha, double eta, double C, int k,
                           double M1, double underomega);
bool condomega_holds(double B, double alpha, double eta, double C, int k,
                     double M1, double underomega);
double radius_dio_value(double alpha, double eta, double C, int k,
                        double underomega, double gamma, double tau);

struct ScalingReport {
  double mu = 0.0;
  double nu = 0.0;
  double lambda0 = 0.0;   // sup{ mu / M_cap, (mu/nu)^{1/3} }
  double R_scaled = 0.0;  // R at the rescaled frequencies, divided by lambda
};

// Scaling analysis at a given lambda (callers usually pass lambda0 back in).
ScalingReport lambda_scaling(double B, double alpha, double eta, double C,
                             int k, double M1, double underomega,
                             double lambda);

struct BudgetReport {
  double K = 0.0;       // the constant of the closed-form criterion
  double budget = 0.0;  // largest admissible B_alpha for this ||V||
};

// Inverts ||V|| <= 2 K e^{-3 B_alpha}: budget = log(1/||V||)/3 + log(2K)/3.
BudgetReport brjuno_budget(double norm_V, double underomega_minus,
                           double alpha, double eta, int k);

// ---------------------------------------------------------------------------
// Assembled report

struct ConstantsIn {
  int k = 0;
  double alpha = 0.5;
  double eta = 0.5;
  double C = 0.25;
  double norm_V = 0.0;     // ||V||_rho
  double grad_Vbar = 0.0;  // ||grad (avg V)'||_rho
  double B = 0.0;          // declared Brjuno value (partial sum + tail bound)
  double M1 = 1.0;         // small divisor bound on the unit shell
  double underomega = 1.0;
  std::optional<double> gamma;  // Diophantine data, optional
  std::optional<double> tau;
};

struct ConstantsReport {
  double Z_k = 0.0;
  double Delta = 0.0;
  double M_cap = 0.0;
  double E0 = 0.0;
  double C_k = 0.0;
  double P = 0.0;
  double D_k = 0.0;
  double R_brjuno = 0.0;
  bool condomega_ok = false;
  bool cond_D_lt_eP = false;   // D_k < e^{-P}
  bool cond_D_lt_M = false;    // D_k < M_cap
  bool cond_grad = false;      // ||grad Vbar'|| < (eta - C)/Z_k
  bool cond_norm_lt_R = false; // ||V|| < R
  double mu = 0.0, nu = 0.0, lambda0 = 0.0, R_scaled_at_lambda0 = 0.0;
  // Diophantine block, populated when gamma/tau are provided
  std::optional<double> E1, B_alpha, C_k_dio, P_dio, D_k_dio, R_dio;
  std::optional<bool> dio_D_lt_eP, dio_D_lt_M, dio_norm_lt_R;
};

// Validates 0 < C < eta < 1, alpha > 0, k >= 0 and evaluates everything.
ConstantsReport constants(const ConstantsIn& in);

}  // namespace qbnf::freq
