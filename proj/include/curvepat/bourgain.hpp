#pragma once

#include "curvepat/counting.hpp"
#include "curvepat/gridfield.hpp"
#include "curvepat/polycurve.hpp"

#include <string>
#include <vector>

namespace curvepat {

struct Schedule {
  double epsilon = 0.0;
  double C_base = 2.0;
  int Gamma = 1;
  int ell_cap = 0;
  std::vector<int> ells;
  bool resolution_limited = false;  // fewer scales than K_cap + 1 fit under the cap
  // filled by finalize_schedule once c and C_rho are measured
  double c = 0.0, C_rho = 0.0;
  long long K_cap = 0;
};

// ell_{k+1} = lattice-rounded C_base^k log2(1/eps), forced increasing, capped at ell_cap.
Schedule make_schedule(double epsilon, const ScaleLattice& lattice, double C_base, int ell_cap);
long long k_cap(double c, double C_rho, double epsilon);
void finalize_schedule(Schedule& s, double c, double C_rho);

// Nearest lattice scale strictly between lo and hi, else the nearest integer there.
int midpoint_scale(const ScaleLattice& lattice, int lo, int hi);

// sup_r sum_k |rho^(2^{-ell_k} r) - rho^(2^{-ell_{k+1}} r)|^2 over a radial grid.
double analytic_C_rho(const BumpKit& kit, const std::vector<int>& ells);

// The same supremum for the sampled kernels on f's padded frequency grid.
double discrete_C_rho(const BumpKit& kit, const std::vector<int>& ells, const GridFunction& f);

struct CCalibration {
  int ell = 0;
  double c = 0.0;  // min ratio over the suite
  std::vector<double> ratios;
};

// Measured constant of int f (f * rho_ell) >= c (int f)^2 on a calibration suite.
CCalibration measure_c(const std::vector<GridFunction>& suite, const BumpKit& kit, int ell);

enum class Branch { Large, Increment };
std::string branch_name(Branch b);

struct IterationStep {
  int k = 0;
  int ell_k = 0, ell_mid = 0, ell_next = 0;
  StepAudit audit;
  double I_cert = 0.0;           // smoothed form / (2^ell sup tau): a lower bound for the plain form
  double threshold_large = 0.0;  // 2^{-ell_{k+1}-1} c eps^2
  double increment_norm = 0.0;   // ||f*rho_{ell_{k+1}} - f*rho_{ell_k}||_2
  double threshold_increment = 0.0;  // c eps^2 / 2
  Branch branch = Branch::Large;
  double partial_sum = 0.0;      // running sum of squared increments
};

struct IterationOptions {
  double c = 0.5;
  double C_rho = 0.0;  // 0: use max(analytic, discrete) for this f
  StepOptions step;
};

struct IterationTrace {
  Schedule schedule;
  std::string curve;
  double c = 0.0, C_rho = 0.0;
  double mass = 0.0, norm_f_sq = 0.0;
  std::vector<IterationStep> steps;
  int k0 = 0;
  int increments = 0;
  double increment_sum = 0.0;
  double increment_step_bound = 0.0;  // C_rho ||f||^2 / (c eps^2 / 2)^2
  double delta = 0.0;
  std::string certificate;
  bool resolution_limited = false;
  std::vector<Check> checks;
  bool passed = false;
};

IterationTrace run_iteration(const GridFunction& f, const Curve& c, const BumpKit& kit, const Schedule& schedule,
                             const IterationOptions& opt = {});

struct TelescopeAudit {
  std::vector<int> ells;
  std::vector<double> diff_sq, J1, J2, J3;
  double total = 0.0, J1_total = 0.0, J2_total = 0.0, J3_total = 0.0;
  double f_l2_sq = 0.0;
  double C_rho_measured = 0.0;  // sup over the frequency grid of sum_k |Delta_k|^2
  double C_rho_analytic = 0.0;
  double grad_rho_hat = 0.0;    // max(analytic sup, ratio measured on the grid)
  double rho_hat_sup = 1.0;
  double J1_bound = 0.0, J2_bound = 0.0, J3_bound = 0.0;
  double split_residual = 0.0;
  std::vector<Check> checks;
  bool passed = false;
};

// Spectral audit of sum_k ||f*rho_{ell_{k+1}} - f*rho_{ell_k}||^2 with the continuous transform.
TelescopeAudit telescope_audit(const GridFunction& f, const BumpKit& kit, const std::vector<int>& ells);

}  // namespace curvepat
