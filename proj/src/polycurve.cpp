#include "curvepat/polycurve.hpp"

#include "curvepat/errors.hpp"
#include "curvepat/sampling.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace curvepat {

Polynomial make_polynomial(const CoeffMap& spec) {
  Polynomial p;
  for (const auto& [beta, a] : spec) {
    if (beta == 0) throw ConstantTermError("polynomial has a term with exponent 0");
    if (beta < 0) throw ConstantTermError("negative exponent " + std::to_string(beta));
    if (a != 0.0) p.coeffs[beta] = a;
  }
  if (p.coeffs.empty()) throw ZeroPolynomialError("polynomial has no nonzero coefficient");
  p.sigma = p.coeffs.begin()->first;
  p.deg = p.coeffs.rbegin()->first;
  return p;
}

int numerical_rank(const Eigen::MatrixXd& rows, double tol) {
  Eigen::MatrixXd m = rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).cwiseAbs().maxCoeff();
    if (s > 0.0) m.row(i) /= s;
  }
  int rank = 0;
  const Eigen::Index nr = m.rows(), nc = m.cols();
  for (Eigen::Index step = 0; step < std::min(nr, nc); ++step) {
    Eigen::Index pr = 0, pc = 0;
    const double piv = m.bottomRightCorner(nr - step, nc - step).cwiseAbs().maxCoeff(&pr, &pc);
    if (piv <= tol) break;
    pr += step;
    pc += step;
    m.row(step).swap(m.row(pr));
    m.col(step).swap(m.col(pc));
    for (Eigen::Index r = step + 1; r < nr; ++r) {
      const double f = m(r, step) / m(step, step);
      m.row(r).tail(nc - step) -= f * m.row(step).tail(nc - step);
    }
    ++rank;
  }
  return rank;
}

Curve make_curve(const std::vector<CoeffMap>& poly_specs) {
  if (poly_specs.empty()) throw ZeroPolynomialError("curve has no components");
  Curve c;
  for (const auto& spec : poly_specs) c.polys.push_back(make_polynomial(spec));
  c.n = static_cast<int>(c.polys.size());
  c.d = 0;
  for (const auto& p : c.polys) c.d = std::max(c.d, p.deg);
  c.coeff_matrix = Eigen::MatrixXd::Zero(c.n, c.d);
  for (int i = 0; i < c.n; ++i)
    for (const auto& [beta, a] : c.polys[i].coeffs) c.coeff_matrix(i, beta - 1) = a;
  std::vector<int> degs;
  for (const auto& p : c.polys) degs.push_back(p.deg);
  std::sort(degs.begin(), degs.end());
  c.distinct_degrees = std::adjacent_find(degs.begin(), degs.end()) == degs.end();
  c.rank = numerical_rank(c.coeff_matrix);
  return c;
}

double eval_derivative(const Polynomial& p, int m, double t) {
  double acc = 0.0;
  for (const auto& [beta, a] : p.coeffs) {
    if (beta < m) continue;
    double fall = 1.0;
    for (int j = 0; j < m; ++j) fall *= beta - j;
    acc += fall * a * std::pow(t, beta - m);
  }
  return acc;
}

Polynomial rescale_polynomial(const Polynomial& p, int s) {
  Polynomial q = p;
  for (auto& [beta, a] : q.coeffs) a = std::ldexp(a, s * (beta - p.deg));
  return q;
}

Curve rescale_curve(const Curve& c, int s) {
  std::vector<CoeffMap> specs;
  for (const auto& p : c.polys) specs.push_back(rescale_polynomial(p, s).coeffs);
  return make_curve(specs);
}

namespace {

double binom_count(int d, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (d - k + j) / j;
  return r;
}

void for_each_subset(int d, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == d - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double sigma_min(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

DependenceInfo analyze_dependence(const Curve& c) {
  if (c.rank == 0) throw DegenerateCurveError("coefficient matrix has rank 0");
  DependenceInfo info;
  const Eigen::MatrixXd& A = c.coeff_matrix;
  for (int i = 0; i < c.n; ++i) {
    std::vector<int> trial = info.basis_idx;
    trial.push_back(i);
    Eigen::MatrixXd rows(trial.size(), c.d);
    for (size_t r = 0; r < trial.size(); ++r) rows.row(r) = A.row(trial[r]);
    if (numerical_rank(rows) == static_cast<int>(trial.size()))
      info.basis_idx.push_back(i);
    else
      info.dependent_idx.push_back(i);
  }
  info.n0 = static_cast<int>(info.basis_idx.size());
  info.full_rank = info.n0 == c.n;

  Eigen::MatrixXd B(info.n0, c.d);
  for (int r = 0; r < info.n0; ++r) B.row(r) = A.row(info.basis_idx[r]);

  const int nd = c.n - info.n0;
  info.L = Eigen::MatrixXd::Zero(info.n0, nd);
  if (nd > 0) {
    Eigen::MatrixXd D(nd, c.d);
    for (int r = 0; r < nd; ++r) D.row(r) = A.row(info.dependent_idx[r]);
    info.L = B.transpose().colPivHouseholderQr().solve(D.transpose());
    const Eigen::MatrixXd recon = info.L.transpose() * B;
    info.reconstruction_residual = (recon - D).cwiseAbs().maxCoeff() / std::max(1.0, D.cwiseAbs().maxCoeff());
  }

  std::vector<std::vector<int>> candidates;
  if (binom_count(c.d, info.n0) <= 20000.0) {
    for_each_subset(c.d, info.n0, [&](const std::vector<int>& s) { candidates.push_back(s); });
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
    std::vector<int> piv;
    for (int j = 0; j < info.n0; ++j) piv.push_back(qr.colsPermutation().indices()(j));
    std::sort(piv.begin(), piv.end());
    candidates.push_back(piv);
  }
  double best = -1.0;
  for (const auto& cols : candidates) {
    Eigen::MatrixXd minor(info.n0, info.n0);
    for (int j = 0; j < info.n0; ++j) minor.col(j) = B.col(cols[j]);
    const double sm = sigma_min(minor);
    if (sm > best * (1.0 + 1e-12)) {
      best = sm;
      info.minor_idx.clear();
      for (int j : cols) info.minor_idx.push_back(j + 1);
    }
  }
  if (!(best > 0.0)) throw DegenerateCurveError("no invertible minor found");
  info.minor_inverse_norm = 1.0 / best;
  return info;
}

Curve reduced_curve(const Curve& c, const DependenceInfo& dep) {
  std::vector<CoeffMap> specs;
  for (int i : dep.basis_idx) specs.push_back(c.polys[i].coeffs);
  return make_curve(specs);
}

ScaleLattice ScaleLattice::with_gamma(int gamma, int count) {
  ScaleLattice l;
  l.Gamma = gamma;
  for (int j = 0; j < count; ++j) {
    l.s_values.push_back(2 * j * gamma);
    l.ell_values.push_back((2 * j + 1) * gamma);
  }
  return l;
}

bool ScaleLattice::admissible_s(int s) const { return s >= 0 && s % (2 * Gamma) == 0; }

bool ScaleLattice::admissible_ell(int ell) const {
  return ell >= Gamma && ell % Gamma == 0 && (ell / Gamma) % 2 == 1;
}

bool ScaleLattice::admissible_pair(int s, int ell) const {
  return admissible_s(s) && admissible_ell(ell) && std::abs(ell - s) >= Gamma;
}

int ScaleLattice::round_ell(double x) const {
  const double j = std::floor((x / Gamma - 1.0) / 2.0 + 0.5);
  return Gamma * (2 * static_cast<int>(std::max(0.0, j)) + 1);
}

double derivative_floor_margin(const Curve& c, int s, int ell, const std::vector<Eigen::VectorXd>& shell,
                               int n_t, LatticeViolation* worst) {
  const bool eta_mode = s == 0;
  DependenceInfo dep;
  if (eta_mode) {
    if (c.rank < c.n) throw HypothesisError("s = 0 requires linearly independent components");
    dep = analyze_dependence(c);
  } else if (!c.distinct_degrees) {
    throw HypothesisError("s > 0 requires pairwise distinct degrees");
  }
  const int n = c.n, d = c.d;
  const double base_threshold =
      1.0 / (2.0 * std::sqrt(2.0 * n) * (eta_mode ? dep.minor_inverse_norm : 1.0));

  // W[m](i, beta-1) carries a_{i,beta} 2^{s(beta-d_i) + (m-beta) ell} beta!/(beta-m)!, so the m-th
  // derivative divided by 2^{(d-m) ell} is sum_beta (W xi)_beta u^{beta-m}.
  std::vector<Eigen::MatrixXd> W(d + 1);
  for (int m = 1; m <= d; ++m) {
    W[m] = Eigen::MatrixXd::Zero(n, d);
    for (int i = 0; i < n; ++i) {
      for (const auto& [beta, a] : c.polys[i].coeffs) {
        if (beta < m) continue;
        double fall = 1.0;
        for (int j = 0; j < m; ++j) fall *= beta - j;
        const int e = (eta_mode ? 0 : s * (beta - c.polys[i].deg)) + (m - beta) * ell;
        W[m](i, beta - 1) = std::ldexp(a * fall, e);
      }
    }
  }
  std::vector<double> us(n_t);
  for (int j = 0; j < n_t; ++j) us[j] = 0.5 + 1.5 * j / std::max(1, n_t - 1);

  double margin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd coef(d);
  for (const auto& xi : shell) {
    int m = 0;
    if (eta_mode) {
      const Eigen::VectorXd eta = c.coeff_matrix.transpose() * xi;
      double best = -1.0;
      for (int beta : dep.minor_idx)
        if (std::abs(eta(beta - 1)) > best) {
          best = std::abs(eta(beta - 1));
          m = beta;
        }
    } else {
      Eigen::Index i0 = 0;
      xi.cwiseAbs().maxCoeff(&i0);
      m = c.polys[i0].deg;
    }
    coef = W[m].transpose() * xi;
    const double thr = std::ldexp(base_threshold, -(d - m) * ell);
    for (double u : us) {
      double acc = 0.0;
      for (int beta = d; beta >= m; --beta) acc = acc * u + coef(beta - 1);
      const double r = std::abs(acc) / thr;
      if (r < margin) {
        margin = r;
        if (worst) {
          worst->s = s;
          worst->ell = ell;
          worst->t = u;
          worst->xi = xi;
          worst->value = std::abs(acc);
          worst->threshold = thr;
        }
      }
    }
  }
  return margin;
}

ScaleLattice calibrate_lattice(const Curve& c, const CalibrationOptions& opt) {
  const bool independent = c.rank == c.n;
  if (!independent && !c.distinct_degrees)
    throw CalibrationFailed("curve is neither linearly independent nor of distinct degrees");
  const auto shell = shell_points(c.n, opt.n_xi);
  LatticeViolation last;
  for (int gamma = 1; gamma <= opt.max_gamma; ++gamma) {
    std::vector<std::pair<int, int>> pairs;
    for (int ell : {gamma, 3 * gamma}) {
      if (independent) pairs.emplace_back(0, ell);
      if (c.distinct_degrees)
        for (int s : {2 * gamma, 4 * gamma}) pairs.emplace_back(s, ell);
    }
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& [s, ell] : pairs) {
      LatticeViolation v;
      const double m = derivative_floor_margin(c, s, ell, shell, opt.n_t, &v);
      if (m < margin) {
        margin = m;
        last = v;
      }
      if (margin < 1.0) break;
    }
    if (margin >= 1.0) {
      ScaleLattice l = ScaleLattice::with_gamma(gamma);
      l.min_margin = margin;
      return l;
    }
  }
  std::ostringstream os;
  os << "no Gamma <= " << opt.max_gamma << " satisfies the derivative floor; worst at s=" << last.s
     << " ell=" << last.ell << " t=" << last.t << " xi=(" << last.xi.transpose() << ") value=" << last.value
     << " threshold=" << last.threshold;
  throw CalibrationFailed(os.str());
}

std::string describe(const Curve& c) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < c.n; ++i) {
    if (i) os << ", ";
    bool first = true;
    for (const auto& [beta, a] : c.polys[i].coeffs) {
      if (!first) os << (a < 0 ? " - " : " + ");
      else if (a < 0) os << "-";
      first = false;
      const double m = std::abs(a);
      if (m != 1.0) os << m;
      os << "t";
      if (beta > 1) os << "^" << beta;
    }
  }
  os << ")";
  return os.str();
}

}  // namespace curvepat
