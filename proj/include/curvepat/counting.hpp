#pragma once

#include "curvepat/gridfield.hpp"
#include "curvepat/polycurve.hpp"

#include <string>
#include <vector>

namespace curvepat {

// One numeric comparison lhs <= rhs (+ tolerance) made by an audit.
struct Check {
  std::string name;
  double lhs = 0.0, rhs = 0.0, tol = 0.0;
  bool ok = false;
};

Check make_check(std::string name, double lhs, double rhs, double tol);
bool all_ok(const std::vector<Check>& checks);

// t in [0, 1] with plain measure, or t in [2^{-ell-1}, 2^{1-ell}] weighted by tau_ell.
struct TWindow {
  bool full = true;
  int ell = 0;
  static TWindow unit() { return {true, 0}; }
  static TWindow scale(int ell) { return {false, ell}; }
  std::string describe() const;
};

struct CountingResult {
  double value = 0.0;
  double error = 0.0;  // |T_N - T_{N/2}| of the t-quadrature
  int t_nodes = 0;
  std::string scheme;
  std::string window;
};

CountingResult two_point_form(const GridFunction& f, const Curve& c, int s, TWindow window,
                              int t_nodes = 0);

struct StepOptions {
  double c = 0.5;         // lower-bound constant used for I1'
  int k0 = -1;            // negative: choose by the audited balance
  double tol = 1e-9;      // slack in the checks, relative to the quantities compared
};

struct StepAudit {
  int ell_prime = 0, ell = 0, ell_dprime = 0;
  double smoothed = 0.0;  // the tau_ell-weighted counting form
  double I1 = 0.0, I2 = 0.0, I3 = 0.0, I1_prime = 0.0;
  double norm_f = 0.0, mass = 0.0;
  double bound_I2 = 0.0;        // ||f*rho_ell'' - f*rho_ell'||_2
  double bound_I1_shift = 0.0;  // discrete mean-value bound on |I1 - I1'|
  double rate_I1_shift = 0.0;   // grad_l1 * 2^{ell'} * sup|gamma(t)| * ||f||_1, the continuum form
  double lower_I1_prime = 0.0;  // c (int f)^2
  double c = 0.0;
  int k0 = 0;
  double low_term = 0.0;        // I3 restricted to |xi| < 2^{k0+1}
  double low_norm = 0.0;        // ||(f - f*rho'')^ 1_{|xi| < 2^{k0+1}}||_2
  double low_gradient = 0.0;    // constant G in low_norm <= G 2^{k0+1-ell''} ||f||_2
  std::vector<int> band_ks;     // k = -1 collects |xi| < 1
  std::vector<double> band_terms, band_bounds;
  double quad_error = 0.0;
  int t_nodes = 0;
  std::vector<Check> checks;
  bool passed = false;
};

StepAudit bourgain_step(const GridFunction& f, const Curve& c, const BumpKit& kit, int ell_prime, int ell,
                        int ell_dprime, const StepOptions& opt = {});

struct LowerBound {
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

LowerBound lower_bound_lemma(const GridFunction& f, const BumpKit& kit, int k);

// ---- corner ------------------------------------------------------------------

CountingResult corner_form(const GridFunction& f, const Polynomial& P1, const Polynomial& P2, int s,
                           TWindow window, int t_nodes = 0);

struct CornerOptions {
  double c_rho = 0.5;  // floor for I1''
  int k0 = -1;
  double tol = 1e-9;
  const ScaleLattice* lattice = nullptr;  // parity check when set
};

struct CornerAudit {
  int s = 0, ell_prime = 0, ell = 0, ell_dprime = 0;
  double smoothed = 0.0;
  double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0;
  double I1_prime = 0.0, I1_dprime = 0.0;
  double mass = 0.0, norm_f = 0.0;
  double bound_I2 = 0.0, bound_I1_shift = 0.0;
  int r1 = 0, r2 = 0;
  bool r_low = true;  // r_j = sigma_j when s < ell, d_j otherwise
  double varsigma = 0.0, varsigma_prime = 0.0, varsigma_dprime = 0.0;
  double A1 = 0.0, A2 = 0.0;
  bool reflected = false;  // leading coefficient positive, tau~ used reflected
  std::vector<double> tau_tilde_omega, tau_tilde;  // samples of the substituted kernel
  double tau_tilde_mass = 0.0;
  double swap_lhs = 0.0;            // ||tau~ *_1 f - rho_varsigma' *_1 f||_2
  double swap_mollifier_term = 0.0; // ||rho_varsigma'' *_1 f - rho_varsigma' *_1 f||_2
  double swap_tail_high = 0.0;      // ||tau~ - tau~ * rho_varsigma''||_1
  double swap_tail_low = 0.0;       // ||tau~ * rho_varsigma' - rho_varsigma'||_1
  double c_rho = 0.0;
  int k0 = 0;
  double low_norm = 0.0, low_gradient = 0.0;
  std::vector<int> band_ks;
  std::vector<double> band_terms, band_lambda, band_square_sum, band_square_max;
  int squares = 0;
  double sigma = 0.0, sigma_intercept = 0.0;
  bool b_zero = false;  // r1 != r2
  double quad_error = 0.0;
  std::vector<Check> checks;
  bool passed = false;
};

CornerAudit corner_step(const GridFunction& f, const Polynomial& P1, const Polynomial& P2, int s, int ell_prime,
                        int ell, int ell_dprime, const CornerOptions& opt = {});

// Monotone substitution omega = |P_{1,s}(t)| on the tau_ell window.
struct Substitution {
  bool reflected = false;           // P_{1,s} > 0 on the window
  double omega_lo = 0.0, omega_hi = 0.0;
  std::vector<double> omega, weight;  // tau~ samples on a uniform omega grid (endpoints included)
  double mass = 0.0;
};

Substitution substitute(const Polynomial& P1s, int ell, int samples = 4097);

}  // namespace curvepat
