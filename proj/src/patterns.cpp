#include "curvepat/patterns.hpp"

#include "counting_detail.hpp"
#include "curvepat/errors.hpp"
#include "curvepat/fft.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace curvepat {

std::string mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::Unit: return "unit";
    case SearchMode::Scaled: return "scaled";
    case SearchMode::Slice: return "slice";
    case SearchMode::Corner: return "corner";
  }
  return "?";
}

namespace {

// FFT autocorrelation of E on a zero-padded grid; C(m) = cellvol * sum_a E_a E_{a+m}.
struct Autocorr {
  Eigen::ArrayXd C;
  std::vector<int> shape, limit;
  std::vector<double> cells;
  double noise = 0.0;
};

Autocorr autocorrelate(const GridFunction& E) {
  Autocorr ac;
  const int n = E.n;
  ac.shape.resize(n);
  ac.limit.resize(n);
  ac.cells.resize(n);
  for (int a = 0; a < n; ++a) {
    ac.shape[a] = next_pow2(2LL * E.dims[a]);
    ac.limit[a] = E.dims[a] - 1;
    ac.cells[a] = E.cell(a);
  }
  const auto& fft = fft_for(ac.shape);
  Eigen::ArrayXcd F = fft.forward(embed_padded(E, ac.shape));
  F = F.abs2().cast<cplx>();
  ac.C = (fft.inverse(F) * E.cell_volume()).max(0.0);
  // Cell-wise constant sets make the multilinear interpolant exact, so only FFT roundoff is left.
  const double energy = E.values.square().sum() * E.cell_volume();
  ac.noise = DBL_EPSILON * std::log2(static_cast<double>(fft.real_size())) * energy;
  return ac;
}

double overlap_from(const Autocorr& ac, const Curve& c, double t) {
  double v[3];
  for (int a = 0; a < c.n; ++a) v[a] = eval_polynomial(c.polys[a], t) / ac.cells[a];
  return detail::interp_wrapped(ac.C, ac.shape, v, ac.limit);
}

// Displacement in cells along each axis at parameter t.
using Displacement = std::function<void(double, double*)>;
using Score = std::function<double(double)>;

struct ScanResult {
  bool found = false;
  double t = 0.0, overlap = 0.0;
  int level = 0;
  std::vector<ScanLevel> ledger;
};

ScanResult scan_levels(int n, const std::vector<int>& dims, const Displacement& disp, const Score& score,
                       double threshold, const SearchConfig& cfg) {
  std::vector<double> d(n), prev(n);
  auto max_rel = [&](double t, bool in_cells) {
    disp(t, d.data());
    double m = 0.0;
    for (int a = 0; a < n; ++a) m = std::max(m, std::abs(d[a]) / (in_cells ? 1.0 : dims[a]));
    return m;
  };
  int ell_min = 0;
  while (ell_min > -40 && max_rel(std::ldexp(1.0, 1 - ell_min), false) < 1.0) --ell_min;
  int ell_max = ell_min;
  while (ell_max < 60 && max_rel(std::ldexp(1.0, -ell_max - 1), true) >= 0.5) ++ell_max;

  ScanResult res;
  for (int ell = ell_min; ell <= ell_max; ++ell) {
    ScanLevel lv;
    lv.ell = ell;
    lv.t_lo = std::ldexp(1.0, -ell - 1);
    lv.t_hi = std::ldexp(1.0, 1 - ell);
    lv.threshold = threshold;
    int N = std::max(cfg.min_nodes, 2);
    for (;;) {
      const double h = (lv.t_hi - lv.t_lo) / N;
      double worst = 0.0;
      disp(lv.t_hi, prev.data());
      for (int j = 1; j <= N; ++j) {
        disp(lv.t_hi - j * h, d.data());
        for (int a = 0; a < n; ++a) worst = std::max(worst, std::abs(d[a] - prev[a]));
        prev = d;
      }
      if (worst <= cfg.max_step_cells || N >= (1 << 22)) break;
      N *= 2;
    }
    lv.nodes = N;
    const double h = (lv.t_hi - lv.t_lo) / N;
    for (int j = 0; j < N; ++j) {  // u in (1/2, 2], descending
      const double t = lv.t_hi - j * h;
      const double o = score(t);
      lv.max_overlap = std::max(lv.max_overlap, o);
      if (o > threshold) {
        lv.hit = true;
        res.found = true;
        res.t = t;
        res.overlap = o;
        res.level = ell;
        break;
      }
    }
    res.ledger.push_back(lv);
    if (res.found) break;
  }
  return res;
}

std::string ledger_text(const std::vector<ScanLevel>& ledger) {
  std::ostringstream os;
  for (const auto& lv : ledger)
    os << "\n  ell=" << lv.ell << " t in (" << lv.t_lo << ", " << lv.t_hi << "] nodes=" << lv.nodes
       << " max overlap=" << lv.max_overlap << " threshold=" << lv.threshold;
  return os.str();
}

double resolve_epsilon(const GridFunction& E, double eps) {
  const double cell = E.cell_volume();
  if (eps <= 0.0) eps = cell;
  if (eps < cell * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "epsilon " << eps << " is below one grid cell (" << cell << ")";
    throw PreconditionError(os.str());
  }
  const double mass = integral(E);
  if (mass < eps * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "set measure " << mass << " is below epsilon " << eps;
    throw PreconditionError(os.str());
  }
  return eps;
}

void require_dims(const GridFunction& E, int n) {
  if (E.n != n) throw DimensionError("grid and curve dimensions differ");
  if (n < 1 || n > 3) throw DimensionError("searches support n = 1, 2, 3");
}

// Cell index along axis a containing coordinate p, or -1 outside.
int cell_index(const GridFunction& E, int a, double p) {
  const double u = (p - E.lo[a]) / E.cell(a);
  if (u < 0.0 || u >= E.dims[a]) return -1;
  return static_cast<int>(std::floor(u));
}

double snapped_residual(const GridFunction& E, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& g, bool* both_inside) {
  const int n = E.n;
  // nearest occupied cell within two cells of p
  auto snap = [&](const Eigen::VectorXd& p, std::vector<int>& best) {
    std::vector<int> base(n);
    for (int a = 0; a < n; ++a) base[a] = static_cast<int>(std::floor((p(a) - E.lo[a]) / E.cell(a)));
    double best_d = std::numeric_limits<double>::infinity();
    const int R = 2, span = 2 * R + 1;
    int total = 1;
    for (int a = 0; a < n; ++a) total *= span;
    std::vector<int> idx(n);
    for (int k = 0; k < total; ++k) {
      int r = k;
      bool ok = true;
      double dist = 0.0;
      for (int a = n - 1; a >= 0; --a) {
        idx[a] = base[a] + r % span - R;
        r /= span;
        if (idx[a] < 0 || idx[a] >= E.dims[a]) ok = false;
      }
      if (!ok || E.values(E.flat(idx)) <= 0.5) continue;
      for (int a = 0; a < n; ++a) {
        const double dd = (E.center(a, idx[a]) - p(a)) / E.cell(a);
        dist = std::max(dist, std::abs(dd));
      }
      if (dist < best_d) {
        best_d = dist;
        best = idx;
      }
    }
    return std::isfinite(best_d);
  };
  std::vector<int> cx, cy;
  const bool ok = snap(x, cx) && snap(y, cy);
  if (both_inside) *both_inside = ok;
  if (!ok) return std::numeric_limits<double>::infinity();
  double r = 0.0;
  for (int a = 0; a < n; ++a)
    r = std::max(r, std::abs(E.center(a, cy[a]) - E.center(a, cx[a]) - g(a)) / E.cell(a));
  return r;
}

}  // namespace

double value_at(const GridFunction& E, const Eigen::VectorXd& p) {
  std::vector<int> idx(E.n);
  for (int a = 0; a < E.n; ++a) {
    idx[a] = cell_index(E, a, p(a));
    if (idx[a] < 0) return 0.0;
  }
  return E.values(E.flat(idx));
}

GridFunction refine(const GridFunction& E) {
  std::vector<int> dims(E.n);
  for (int a = 0; a < E.n; ++a) dims[a] = 2 * E.dims[a];
  GridFunction R = GridFunction::zeros(dims, E.lo, E.hi);
  R.density = E.density;
  std::vector<int> parent(E.n);
  for (Eigen::Index k = 0; k < R.size(); ++k) {
    const auto idx = R.unflat(k);
    for (int a = 0; a < E.n; ++a) parent[a] = idx[a] / 2;
    R.values(k) = E.values(E.flat(parent));
  }
  return R;
}

double overlap_at(const GridFunction& E, const Curve& c, double t) {
  require_dims(E, c.n);
  return overlap_from(autocorrelate(E), c, t);
}

namespace {

struct CornerPlane {
  const GridFunction& S;
  int nx, ny;
  double at(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return 0.0;
    return S.values(static_cast<Eigen::Index>(ix) * ny + iy);
  }
};

struct CornerTerm {
  double value = 0.0;
  int ix = -1, iy = -1;
  double fx = 0.5, fy = 0.5;  // position of the witness inside the cell
};

// Exact trilinear overlap for cell-wise constant S: linear interpolation
// along the shift axis integrates the shifted indicator over a cell.
double corner_sum(const CornerPlane& P, double vx, double vy, CornerTerm* best) {
  const double flx = std::floor(vx), fly = std::floor(vy);
  const int mx = static_cast<int>(flx), my = static_cast<int>(fly);
  const double ax = vx - flx, ay = vy - fly;
  double acc = 0.0;
  for (int ix = 0; ix < P.nx; ++ix) {
    if (ix + mx + 1 < 0 || ix + mx >= P.nx) continue;
    for (int iy = 0; iy < P.ny; ++iy) {
      const double s0 = P.at(ix, iy);
      if (s0 == 0.0) continue;
      const double x0 = (1.0 - ax) * P.at(ix + mx, iy), x1 = ax * P.at(ix + mx + 1, iy);
      const double y0 = (1.0 - ay) * P.at(ix, iy + my), y1 = ay * P.at(ix, iy + my + 1);
      const double term = s0 * (x0 + x1) * (y0 + y1);
      acc += term;
      if (best && term > best->value) {
        best->value = term;
        best->ix = ix;
        best->iy = iy;
        // x + shift stays in cell ix+mx while the in-cell fraction is below 1 - ax
        best->fx = x0 >= x1 ? 0.5 * (1.0 - ax) : 1.0 - 0.5 * ax;
        best->fy = y0 >= y1 ? 0.5 * (1.0 - ay) : 1.0 - 0.5 * ay;
      }
    }
  }
  return acc;
}

}  // namespace

double corner_overlap_at(const GridFunction& S, const Polynomial& P1, const Polynomial& P2, double t) {
  if (S.n != 2) throw DimensionError("corner sets are two-dimensional");
  const CornerPlane P{S, S.dims[0], S.dims[1]};
  return corner_sum(P, eval_polynomial(P1, t) / S.cell(0), eval_polynomial(P2, t) / S.cell(1), nullptr) *
         S.cell_volume();
}

PatternWitness search_unit(const GridFunction& E, const Curve& c, const SearchConfig& cfg) {
  require_dims(E, c.n);
  if (c.rank < c.n) throw DispatchError("curve components are linearly dependent; use the slice search");
  resolve_epsilon(E, cfg.epsilon);
  const int n = E.n;
  const Autocorr ac = autocorrelate(E);
  const double threshold = cfg.noise_factor * ac.noise;

  auto disp = [&](double t, double* out) {
    for (int a = 0; a < n; ++a) out[a] = eval_polynomial(c.polys[a], t) / ac.cells[a];
  };
  auto score = [&](double t) { return overlap_from(ac, c, t); };
  const ScanResult sr = scan_levels(n, E.dims, disp, score, threshold, cfg);
  if (!sr.found) throw NoWitnessFound("no scanned t clears the noise threshold" + ledger_text(sr.ledger));

  // Localize at the corner lag carrying the most interpolation weight, then the first cell pair realising it.
  double v[3], fr[3];
  int base[3];
  for (int a = 0; a < n; ++a) {
    v[a] = eval_polynomial(c.polys[a], sr.t) / ac.cells[a];
    base[a] = static_cast<int>(std::floor(v[a]));
    fr[a] = v[a] - base[a];
  }
  int best_corner = -1;
  double best_w = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    Eigen::Index p = 0;
    bool zero = false;
    for (int a = 0; a < n; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? fr[a] : 1.0 - fr[a];
      const int i = base[a] + bit;
      if (std::abs(i) > ac.limit[a]) zero = true;
      p = p * ac.shape[a] + ((i % ac.shape[a]) + ac.shape[a]) % ac.shape[a];
    }
    if (zero) continue;
    const double val = w * ac.C(p);
    if (val > best_w) {
      best_w = val;
      best_corner = corner;
    }
  }
  std::vector<int> m(n);
  for (int a = 0; a < n; ++a) m[a] = base[a] + ((best_corner >> a) & 1);
  Eigen::Index best_cell = -1;
  double best_pair = 0.0;
  std::vector<int> partner(n);
  for (Eigen::Index k = 0; k < E.size() && best_pair < 1.0; ++k) {
    if (E.values(k) <= best_pair) continue;
    const auto idx = E.unflat(k);
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      partner[a] = idx[a] + m[a];
      if (partner[a] < 0 || partner[a] >= E.dims[a]) inside = false;
    }
    if (!inside) continue;
    const double pv = E.values(k) * E.values(E.flat(partner));
    if (pv > best_pair) {
      best_pair = pv;
      best_cell = k;
    }
  }
  if (best_cell < 0) throw NoWitnessFound("overlap is positive but no cell pair realises the lag");

  PatternWitness w;
  w.mode = SearchMode::Unit;
  w.t = sr.t;
  w.overlap_mass = sr.overlap;
  w.noise = ac.noise;
  w.threshold = threshold;
  w.level = sr.level;
  w.gap_certified = std::ldexp(1.0, -sr.level - 1);
  w.ledger = sr.ledger;
  const auto idx = E.unflat(best_cell);
  w.x.resize(n);
  for (int a = 0; a < n; ++a) {
    const double lo = std::max<double>(idx[a], idx[a] + m[a] - v[a]);
    const double hi = std::min<double>(idx[a] + 1, idx[a] + m[a] + 1 - v[a]);
    w.x(a) = E.lo[a] + 0.5 * (lo + hi) * ac.cells[a];
  }
  const Eigen::VectorXd g = eval_curve(c, w.t);
  w.y = w.x + g;
  w.points = {w.x, w.y};
  double r = 0.0;
  for (int a = 0; a < n; ++a) r = std::max(r, std::abs(m[a] - v[a]));
  w.residual_cells = r;
  return w;
}

RectangleReduction reduce_rectangle(const GridFunction& E, const std::vector<int>& degrees, const ScaleLattice& lattice,
                                    double epsilon) {
  const int n = E.n;
  if (static_cast<int>(degrees.size()) != n) throw DimensionError("one degree per axis expected");
  RectangleReduction r;
  r.N = E.hi[0];
  for (int a = 0; a < n; ++a)
    if (E.lo[a] != 0.0 || std::abs(E.hi[a] - r.N) > 1e-12 * r.N)
      throw PreconditionError("the rectangle reduction needs a cube [0, N]^n");
  const int d = *std::max_element(degrees.begin(), degrees.end());
  if (r.N < 1.0) throw RoundingError("N must be at least 1");
  int s = 0;
  for (int cand = 0; cand <= 1024 / d; cand += 2 * lattice.Gamma)
    if (std::ldexp(1.0, cand * d) <= r.N * (1.0 + 1e-12)) s = cand;
    else break;
  r.s = s;
  r.N_rounded = std::ldexp(1.0, s * d);
  if (r.N_rounded < r.N / std::ldexp(1.0, d) * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "admissible N' = 2^" << s * d << " is below N / 2^d for N = " << r.N << " (Gamma = " << lattice.Gamma << ")";
    throw RoundingError(os.str());
  }
  std::vector<int> keep(n), per(n), count(n);
  r.rect_count = 1;
  for (int a = 0; a < n; ++a) {
    const double kc = r.N_rounded / E.cell(a);
    keep[a] = static_cast<int>(std::llround(kc));
    if (std::abs(kc - keep[a]) > 1e-9) throw PreconditionError("rounded box does not align with grid cells");
    const double ext = std::ldexp(1.0, s * degrees[a]);
    const double pc = ext / E.cell(a);
    per[a] = static_cast<int>(std::llround(pc));
    if (per[a] < 1 || std::abs(pc - per[a]) > 1e-9) {
      std::ostringstream os;
      os << "rectangle side 2^" << s * degrees[a] << " is not a whole number of cells on axis " << a;
      throw ResolutionError(os.str());
    }
    count[a] = keep[a] / per[a];
    r.extents.push_back(ext);
    r.rect_count *= count[a];
  }
  std::vector<double> sums(r.rect_count, 0.0);
  double total = 0.0;
  for (Eigen::Index k = 0; k < E.size(); ++k) {
    const auto idx = E.unflat(k);
    int ri = 0;
    bool in = true;
    for (int a = 0; a < n; ++a) {
      if (idx[a] >= keep[a]) in = false;
      ri = ri * count[a] + idx[a] / per[a];
    }
    if (!in) continue;
    sums[ri] += E.values(k);
    total += E.values(k);
  }
  const double cell = E.cell_volume();
  double rect_vol = 1.0;
  for (double e : r.extents) rect_vol *= e;
  r.density_global = total * cell / std::pow(r.N_rounded, n);
  if (epsilon <= 0.0) epsilon = r.density_global;
  if (r.density_global < epsilon * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "density " << r.density_global << " on the rounded box [0, " << r.N_rounded << "]^" << n
       << " is below epsilon " << epsilon;
    throw PreconditionError(os.str());
  }
  r.rect_index = -1;
  for (int i = 0; i < r.rect_count; ++i) {
    const double dens = sums[i] * cell / rect_vol;
    r.density_max = std::max(r.density_max, dens);
    if (r.rect_index < 0 && dens >= epsilon * (1.0 - 1e-12)) {
      r.rect_index = i;
      r.density_in_rect = dens;
    }
  }
  if (r.rect_index < 0) throw NoWitnessFound("no rectangle reaches epsilon");  // unreachable by averaging
  r.offset.assign(n, 0.0);
  int rem = r.rect_index;
  for (int a = n - 1; a >= 0; --a) {
    r.offset[a] = (rem % count[a]) * r.extents[a];
    rem /= count[a];
  }
  return r;
}

GridFunction rescale_to_unit(const GridFunction& E, const RectangleReduction& r) {
  const int n = E.n;
  std::vector<int> dims(n), off(n);
  for (int a = 0; a < n; ++a) {
    dims[a] = static_cast<int>(std::llround(r.extents[a] / E.cell(a)));
    off[a] = static_cast<int>(std::llround(r.offset[a] / E.cell(a)));
  }
  GridFunction U = GridFunction::unit(dims);
  U.density = E.density;
  std::vector<int> src(n);
  for (Eigen::Index k = 0; k < U.size(); ++k) {
    const auto idx = U.unflat(k);
    for (int a = 0; a < n; ++a) src[a] = idx[a] + off[a];
    U.values(k) = E.values(E.flat(src));
  }
  return U;
}

PatternWitness search_scaled(const GridFunction& E, const Curve& c, const ScaleLattice& lattice,
                             const SearchConfig& cfg) {
  require_dims(E, c.n);
  if (!c.distinct_degrees) throw PreconditionError("the rescaled search needs pairwise distinct degrees");
  std::vector<int> degrees;
  for (const auto& p : c.polys) degrees.push_back(p.deg);
  const RectangleReduction r = reduce_rectangle(E, degrees, lattice, cfg.epsilon);
  const GridFunction U = rescale_to_unit(E, r);
  SearchConfig ucfg = cfg;
  ucfg.epsilon = std::max(std::min(cfg.epsilon, r.density_in_rect), U.cell_volume());
  PatternWitness w = search_unit(U, rescale_curve(c, r.s), ucfg);
  const double scale = std::ldexp(1.0, r.s);
  for (int a = 0; a < c.n; ++a) w.x(a) = r.offset[a] + r.extents[a] * w.x(a);
  w.t *= scale;
  w.gap_certified *= scale;
  w.y = w.x + eval_curve(c, w.t);
  w.points = {w.x, w.y};
  // measures scale by the rectangle volume
  double vol = 1.0;
  for (double e : r.extents) vol *= e;
  w.overlap_mass *= vol;
  w.noise *= vol;
  w.threshold *= vol;
  w.mode = SearchMode::Scaled;
  w.rectangle = r;
  return w;
}

PatternWitness slice_search(const GridFunction& E, const Curve& c, const SearchConfig& cfg) {
  require_dims(E, c.n);
  const DependenceInfo dep = analyze_dependence(c);
  if (dep.full_rank || c.rank == c.n) throw DispatchError("curve has full rank; use the direct search");
  const int n = c.n, n0 = dep.n0, m = n - n0;
  const auto& B = dep.basis_idx;
  const auto& D = dep.dependent_idx;
  const Eigen::MatrixXd& L = dep.L;

  double eps = cfg.epsilon;
  double box = 1.0;
  for (int a = 0; a < n; ++a) box *= E.length(a);
  if (eps <= 0.0) eps = integral(E) / box;
  if (integral(E) < eps * box * (1.0 - 1e-12)) throw PreconditionError("set density is below epsilon");

  std::vector<int> zdims(n0);
  std::vector<double> zlo(n0), zhi(n0);
  for (int i = 0; i < n0; ++i) {
    zdims[i] = E.dims[B[i]];
    zlo[i] = E.lo[B[i]];
    zhi[i] = E.hi[B[i]];
  }
  GridFunction Z = GridFunction::zeros(zdims, zlo, zhi);
  const Eigen::Index nz = Z.size();
  Eigen::MatrixXd zc(nz, n0), zL(nz, m);
  for (Eigen::Index k = 0; k < nz; ++k) {
    const auto idx = Z.unflat(k);
    for (int i = 0; i < n0; ++i) zc(k, i) = Z.center(i, idx[i]);
  }
  zL = zc * L;

  // translates w on the complement axes, spaced one cell apart
  std::vector<double> w_lo(m);
  std::vector<int> w_count(m);
  long long total = 1;
  for (int j = 0; j < m; ++j) {
    const int a = D[j];
    const double lo = E.lo[a] - zL.col(j).maxCoeff(), hi = E.hi[a] - zL.col(j).minCoeff();
    w_lo[j] = lo;
    w_count[j] = static_cast<int>(std::ceil((hi - lo) / E.cell(a))) + 1;
    total *= w_count[j];
  }

  const double op_norm = m > 0 ? L.jacobiSvd().singularValues()(0) : 0.0;
  const double kappa = 0.5 * std::pow(1.0 + op_norm * op_norm, -0.5 * n0);
  const double jacobian =
      std::sqrt((Eigen::MatrixXd::Identity(n0, n0) + L * L.transpose()).determinant());

  auto slice_values = [&](const std::vector<double>& w, Eigen::ArrayXd* out) {
    Eigen::VectorXd p(n);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < nz; ++k) {
      for (int i = 0; i < n0; ++i) p(B[i]) = zc(k, i);
      for (int j = 0; j < m; ++j) p(D[j]) = zL(k, j) + w[j];
      const double v = value_at(E, p);
      acc += v;
      if (out) (*out)(k) = v;
    }
    return acc * Z.cell_volume();
  };

  std::vector<double> w(m), best_w(m);
  double best = -1.0;
  for (long long q = 0; q < total; ++q) {
    long long r = q;
    for (int j = m - 1; j >= 0; --j) {
      w[j] = w_lo[j] + (r % w_count[j]) * E.cell(D[j]);
      r /= w_count[j];
    }
    const double meas = slice_values(w, nullptr);
    if (meas > best) {
      best = meas;
      best_w = w;
    }
  }
  SliceReduction sl;
  sl.n0 = n0;
  sl.basis_idx = B;
  sl.dependent_idx = D;
  sl.L = L;
  sl.kappa = kappa;
  sl.jacobian = jacobian;
  sl.translates_scanned = static_cast<int>(total);
  sl.max_slice_measure = jacobian * best;
  if (sl.max_slice_measure < kappa * eps) {
    std::ostringstream os;
    os << "largest slice measure " << sl.max_slice_measure << " is below kappa*eps = " << kappa * eps << " over "
       << total << " translates";
    throw NoSliceFound(os.str());
  }
  sl.slice_measure = sl.max_slice_measure;
  slice_values(best_w, &Z.values);
  Z.density = true;
  sl.reduced_set = Z;
  sl.x0 = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < m; ++j) sl.x0(D[j]) = best_w[j];
  sl.V = Eigen::MatrixXd::Zero(n, n0);
  for (int i = 0; i < n0; ++i) {
    sl.V(B[i], i) = 1.0;
    for (int j = 0; j < m; ++j) sl.V(D[j], i) = L(i, j);
  }
  // lift(project(v)) = v on V
  for (int i = 0; i < n0; ++i) {
    const Eigen::VectorXd v = sl.V.col(i);
    Eigen::VectorXd z(n0);
    for (int k = 0; k < n0; ++k) z(k) = v(B[k]);
    sl.lift_identity_residual = std::max(sl.lift_identity_residual, (sl.V * z - v).cwiseAbs().maxCoeff());
  }

  SearchConfig rcfg = cfg;
  rcfg.epsilon = 0.0;
  PatternWitness rw = search_unit(Z, reduced_curve(c, dep), rcfg);

  PatternWitness w_out = rw;
  w_out.mode = SearchMode::Slice;
  w_out.x = sl.x0 + sl.V * rw.x;
  const Eigen::VectorXd g = eval_curve(c, rw.t);
  w_out.y = w_out.x + g;
  w_out.points = {w_out.x, w_out.y};
  bool inside = false;
  w_out.residual_cells = snapped_residual(E, w_out.x, w_out.y, g, &inside);
  if (!inside) throw NoWitnessFound("lifted witness lies more than two cells away from the set");
  w_out.slice = std::move(sl);
  return w_out;
}

PatternWitness corner_search(const GridFunction& S, const Polynomial& P1, const Polynomial& P2,
                             const ScaleLattice& lattice, const SearchConfig& cfg) {
  if (S.n != 2) throw DimensionError("corner sets are two-dimensional");
  if (P1.coeffs.empty() || P2.coeffs.empty()) throw HypothesisError("corner polynomials must be nonzero");
  if (P1.deg >= P2.deg) {
    std::ostringstream os;
    os << "corner search needs deg P1 < deg P2 (got " << P1.deg << " and " << P2.deg << ")";
    throw HypothesisError(os.str());
  }
  const RectangleReduction r = reduce_rectangle(S, {P1.deg, P2.deg}, lattice, cfg.epsilon);
  const GridFunction U = rescale_to_unit(S, r);
  resolve_epsilon(U, std::max(std::min(cfg.epsilon, r.density_in_rect), U.cell_volume()));
  const Polynomial P1s = rescale_polynomial(P1, r.s), P2s = rescale_polynomial(P2, r.s);
  const CornerPlane P{U, U.dims[0], U.dims[1]};
  const double cx = U.cell(0), cy = U.cell(1), cell = U.cell_volume();
  // direct summation; roundoff grows with the number of terms
  const double noise = DBL_EPSILON * static_cast<double>(U.size()) * std::max(integral(U), cell);
  const double threshold = cfg.noise_factor * noise;

  auto disp = [&](double t, double* out) {
    out[0] = eval_polynomial(P1s, t) / cx;
    out[1] = eval_polynomial(P2s, t) / cy;
  };
  auto score = [&](double t) {
    const double vx = eval_polynomial(P1s, t) / cx, vy = eval_polynomial(P2s, t) / cy;
    if (std::abs(vx) >= P.nx || std::abs(vy) >= P.ny) return 0.0;
    return corner_sum(P, vx, vy, nullptr) * cell;
  };
  const ScanResult sr = scan_levels(2, U.dims, disp, score, threshold, cfg);
  if (!sr.found) throw NoWitnessFound("no scanned t clears the noise threshold" + ledger_text(sr.ledger));

  CornerTerm best;
  corner_sum(P, eval_polynomial(P1s, sr.t) / cx, eval_polynomial(P2s, sr.t) / cy, &best);
  const double scale = std::ldexp(1.0, r.s);
  PatternWitness w;
  w.mode = SearchMode::Corner;
  w.level = sr.level;
  w.ledger = sr.ledger;
  w.t = sr.t * scale;
  w.gap_certified = std::ldexp(1.0, -sr.level - 1) * scale;
  const double vol = r.extents[0] * r.extents[1];
  w.overlap_mass = sr.overlap * vol;
  w.noise = noise * vol;
  w.threshold = threshold * vol;
  w.x = Eigen::Vector2d(r.offset[0] + r.extents[0] * (best.ix + best.fx) * cx,
                        r.offset[1] + r.extents[1] * (best.iy + best.fy) * cy);
  const Eigen::Vector2d p1 = w.x + Eigen::Vector2d(eval_polynomial(P1, w.t), 0.0);
  const Eigen::Vector2d p2 = w.x + Eigen::Vector2d(0.0, eval_polynomial(P2, w.t));
  w.y = p1;
  w.points = {w.x, p1, p2};
  w.residual_cells = 0.0;
  w.rectangle = r;
  return w;
}

PatternWitness search(const GridFunction& E, const Curve& c, const ScaleLattice& lattice, const SearchConfig& cfg) {
  if (c.rank < c.n) return slice_search(E, c, cfg);
  bool unit = true;
  for (int a = 0; a < E.n; ++a)
    if (E.lo[a] != 0.0 || E.hi[a] != 1.0) unit = false;
  return unit ? search_unit(E, c, cfg) : search_scaled(E, c, lattice, cfg);
}

}  // namespace curvepat
