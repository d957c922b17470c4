#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace curvepat {

using CoeffMap = std::map<int, double>;

struct Polynomial {
  CoeffMap coeffs;  // exponent -> coefficient, exponents >= 1
  int sigma = 0;    // lowest exponent with nonzero coefficient
  int deg = 0;      // highest exponent with nonzero coefficient

  double coeff(int beta) const {
    auto it = coeffs.find(beta);
    return it == coeffs.end() ? 0.0 : it->second;
  }
};

Polynomial make_polynomial(const CoeffMap& spec);

struct Curve {
  std::vector<Polynomial> polys;
  int n = 0;
  int d = 0;
  bool distinct_degrees = false;
  Eigen::MatrixXd coeff_matrix;  // n x d, column j holds exponent j+1
  int rank = 0;

  int degree(int i) const { return polys[i].deg; }
};

Curve make_curve(const std::vector<CoeffMap>& poly_specs);

// Rank of a row set after row max-normalization, pivoted elimination.
int numerical_rank(const Eigen::MatrixXd& rows, double tol = 1e-10);

template <typename Scalar>
Scalar eval_polynomial(const Polynomial& p, Scalar t) {
  Scalar acc(0);
  for (int beta = p.deg; beta >= 1; --beta) acc = (acc + Scalar(p.coeff(beta))) * t;
  return acc;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eval_curve(const Curve& c, Scalar t) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(c.n);
  for (int i = 0; i < c.n; ++i) out(i) = eval_polynomial(c.polys[i], t);
  return out;
}

inline Eigen::VectorXd eval_curve(const Curve& c, double t) { return eval_curve<double>(c, t); }

// m-th t-derivative of component i.
double eval_derivative(const Polynomial& p, int m, double t);

Curve rescale_curve(const Curve& c, int s);
Polynomial rescale_polynomial(const Polynomial& p, int s);

struct DependenceInfo {
  bool full_rank = false;
  int n0 = 0;
  std::vector<int> basis_idx;      // component indices (0-based) of the basis
  std::vector<int> dependent_idx;  // remaining component indices
  Eigen::MatrixXd L;               // n0 x (n - n0): dependent rows = basis rows combined by L
  std::vector<int> minor_idx;      // exponents of the chosen invertible minor
  double minor_inverse_norm = 0.0;
  double reconstruction_residual = 0.0;
};

DependenceInfo analyze_dependence(const Curve& c);

// Curve built from the basis components only.
Curve reduced_curve(const Curve& c, const DependenceInfo& dep);

struct LatticeViolation {
  int s = 0, ell = 0;
  double t = 0.0;
  Eigen::VectorXd xi;
  double value = 0.0, threshold = 0.0;
};

struct ScaleLattice {
  int Gamma = 1;
  std::vector<int> s_values;
  std::vector<int> ell_values;
  double min_margin = 0.0;  // smallest |derivative| / threshold seen at the accepted Gamma

  static ScaleLattice with_gamma(int gamma, int count = 6);
  bool admissible_s(int s) const;
  bool admissible_ell(int ell) const;
  bool admissible_pair(int s, int ell) const;
  // Nearest odd-multiple of Gamma to x (ties go up).
  int round_ell(double x) const;
};

struct CalibrationOptions {
  int n_xi = 4096;
  int n_t = 1024;
  int max_gamma = 64;
};

ScaleLattice calibrate_lattice(const Curve& c, const CalibrationOptions& opt = {});

// The derivative-floor check for one (s, ell) pair; returns the worst ratio
// |derivative| / threshold over the grids and fills the violation record.
double derivative_floor_margin(const Curve& c, int s, int ell, const std::vector<Eigen::VectorXd>& shell,
                               int n_t, LatticeViolation* worst = nullptr);

std::string describe(const Curve& c);

}  // namespace curvepat
