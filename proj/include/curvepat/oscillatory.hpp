#pragma once

#include "curvepat/fft.hpp"
#include "curvepat/gridfield.hpp"
#include "curvepat/polycurve.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace curvepat {

// Phase through the coefficient sum, and through 2^{d ell} gamma_s(2^{-ell} t) . xi.
double phase(const Curve& c, int s, int ell, double t, const Eigen::VectorXd& xi);
double phase_rescaled(const Curve& c, int s, int ell, double t, const Eigen::VectorXd& xi);

// theta[beta-1] such that 2^k gamma_s(2^{-ell} u) . xi = sum_beta theta_beta u^beta.
std::vector<double> unit_phase_coeffs(const Curve& c, int k, int s, int ell, const double* xi);

struct OscillatoryResult {
  cplx value;
  double error = 0.0;
  int nodes = 0;
};

// int_{1/2}^{2} exp(2 pi i sum_beta theta_beta u^beta) tau(u) du by the
// trapezoid rule, doubling until the halving estimate meets `tol`.
OscillatoryResult oscillatory_integral(const std::vector<double>& theta, const BumpKit& kit,
                                       double tol = 1e-9, double budget_factor = 64.0);

// Rigorous upper bound of |oscillatory_integral| from one integration by parts;
// infinity when the phase may be stationary on [1/2, 2].
double nonstationary_bound(const std::vector<double>& theta, const BumpKit& kit);

struct MultiplierSample {
  int k = 0, s = 0, ell = 0;
  Eigen::VectorXd xi;
  double lambda = 0.0;  // 2^{k - d ell}
  cplx value;
  double quad_error = 0.0;
  int nodes = 0;
};

struct MultiplierOptions {
  double tol = 1e-9;
  double budget_factor = 64.0;
  const ScaleLattice* lattice = nullptr;  // when set, (s, ell) must be admissible
};

MultiplierSample multiplier(const Curve& c, int k, int s, int ell, const Eigen::VectorXd& xi, const BumpKit& kit,
                            const MultiplierOptions& opt = {});

// argmax_i |xi_i|, lowest index on ties.
int pigeonhole_index(const Eigen::VectorXd& xi);

struct DecayOptions {
  double slack = 0.1;
  int refine_candidates = 4;
  double tol = 1e-9;
  double monotone_tolerance = 0.1;
};

struct DecayFit {
  std::string curve;
  int s = 0, ell = 0, kmin = 0, kmax = 0, d = 0;
  std::vector<int> ks;
  std::vector<double> sup_values;
  std::vector<Eigen::VectorXd> argmax_xi;
  std::vector<int> i0;  // 0-based pigeonhole index of argmax_xi
  std::vector<double> quad_error_max;
  std::vector<int> evaluated, pruned;
  int fit_kmin = 0;  // first k with lambda >= 4
  double slope = 0.0, intercept = 0.0, slack = 0.1;
  bool verdict = false;
  bool monotone = false;
};

DecayFit decay_fit(const Curve& c, int s, int ell, int kmin, int kmax, int shell_pts, const BumpKit& kit,
                   const DecayOptions& opt = {});

// Lemma hypotheses: distinct degrees, or s = 0 with independent components.
void check_decay_hypothesis(const Curve& c, int s);

enum class Boundary { Zero, Periodic };
enum class TRoute { Spatial, Multiplier };

struct ApplyTOptions {
  Boundary boundary = Boundary::Zero;
  int t_nodes = 0;                    // trapezoid intervals on the unit window; 0 picks about 2 cells per node
  double spectral_threshold = 1e-13;  // relative; smaller Fourier coefficients are dropped
  double tol = 1e-10;                 // symbol quadrature target
};

struct ApplyTResult {
  GridFunction out;
  double error_estimate = 0.0;  // relative L2
  int t_nodes = 0;
  double max_cells_per_node = 0.0;
  int symbols = 0;
};

ApplyTResult apply_T(const GridFunction& f, const Curve& c, int s, int ell, const BumpKit& kit, TRoute route,
                     const ApplyTOptions& opt = {});

// Symbol of T_{s,ell} at physical frequency eta: int exp(2 pi i gamma_s(t) . eta) tau_ell(t) dt.
OscillatoryResult operator_symbol(const Curve& c, int s, int ell, const double* eta, const BumpKit& kit,
                                  double tol = 1e-10);

}  // namespace curvepat
