#pragma once

#include "curvepat/fft.hpp"

#include <Eigen/Dense>

#include <vector>

namespace curvepat {

// Samples at cell centres of a uniform grid over an axis-aligned box,
// row-major (last axis fastest). Zero outside the box.
struct GridFunction {
  int n = 0;
  std::vector<int> dims;
  std::vector<double> lo, hi;
  Eigen::ArrayXd values;
  bool density = false;  // values are known to lie in [0, 1]

  static GridFunction zeros(const std::vector<int>& dims, const std::vector<double>& lo,
                            const std::vector<double>& hi);
  static GridFunction unit(const std::vector<int>& dims);  // box [0,1]^n

  double length(int a) const { return hi[a] - lo[a]; }
  double cell(int a) const { return length(a) / dims[a]; }
  double cell_volume() const;
  double center(int a, int j) const { return lo[a] + (j + 0.5) * cell(a); }
  Eigen::Index size() const { return values.size(); }
  Eigen::Index flat(const std::vector<int>& idx) const;
  std::vector<int> unflat(Eigen::Index k) const;
  bool same_grid(const GridFunction& o) const;
};

double integral(const GridFunction& f);
double inner(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);
GridFunction subtract(const GridFunction& f, const GridFunction& g);
GridFunction clamp(const GridFunction& f, double lo = 0.0, double hi = 1.0);

struct BumpKit {
  int n = 0;
  double ball_radius = 0.0;     // radius of the indicator before smoothing
  double cap_radius = 0.5;      // radius of the smoothing cap
  double support_radius = 0.0;  // rho vanishes beyond this
  double plateau_radius = 0.0;  // rho is constant inside this
  double plateau_value = 0.0;   // rho(0) after normalization
  double grad_l1 = 0.0;         // ||grad rho||_1, the mean-value displacement constant
  double tau_norm = 0.0;        // normalising constant of tau
  double tau_max = 0.0;         // sup of tau
  double rho_hat_grad_sup = 0.0;
  int quad_nodes = 0;

  std::vector<double> rho_table;     // rho on a uniform radial grid over [0, support]
  std::vector<double> rho_hat_table; // radial Fourier transform on [0, rho_hat_max]
  double rho_hat_max = 0.0;

  double rho(double r) const;
  double rho_hat(double xi) const;
  double tau(double u) const;   // supported on (1/2, 2), unit integral
  double psi(double u) const;   // 1 on [1, 2], 0 outside (1/2, 4)
  double radial_mass() const;   // integral of rho from the radial table
};

// Kits are immutable and cached per dimension.
const BumpKit& bump_kit(int n);

double tau_scaled(const BumpKit& kit, int ell, double t);  // 2^ell tau(2^ell t)

// ---- padded spectral helpers -------------------------------------------------

std::vector<double> padded_lengths(const GridFunction& f, const std::vector<int>& shape);
Eigen::ArrayXd embed_padded(const GridFunction& f, const std::vector<int>& shape);
// Copies the window starting at index `offset` (may be negative, wrapped) back onto f's grid.
GridFunction extract_padded(const Eigen::ArrayXd& padded, const std::vector<int>& shape,
                            const GridFunction& like, const std::vector<int>& offset = {});

// Support of rho_ell measured in cells along each axis.
std::vector<double> mollifier_radius_cells(const BumpKit& kit, int ell, const GridFunction& f);
int max_resolvable_ell(const BumpKit& kit, const GridFunction& f);

// Spectrum of the sampled, mass-normalised kernel rho_ell on a padded grid;
// entry 0 equals 1.
Eigen::ArrayXcd mollifier_spectrum(const BumpKit& kit, int ell, const GridFunction& f,
                                   const std::vector<int>& shape);

// Per axis, sum_o |K(o + e_a) - K(o)| times the cell volume for the sampled
// kernel: the Lipschitz constant of f * K across one cell when |f| <= 1.
std::vector<double> kernel_difference_norms(const BumpKit& kit, int ell, const GridFunction& f);

// f * rho_ell over the whole support: the result lives on an enlarged box
// (same cells, dims padded to a power of two) so no mass is lost.
GridFunction mollify(const GridFunction& f, const BumpKit& kit, int ell);

// Restriction of g to the grid of `like`; cells must align.
GridFunction crop(const GridFunction& g, const GridFunction& like);

// Direct spatial convolution with the same sampled kernel; slow, for checks.
GridFunction mollify_direct(const GridFunction& f, const BumpKit& kit, int ell);

struct BandDecomposition {
  int k0 = 0, kmax = 0;
  GridFunction low;                // |xi| < 2^{k0+1}
  std::vector<GridFunction> bands; // bands[j] covers 2^k <= |xi| < 2^{k+1}, k = k0 + 1 + j
  GridFunction high;               // |xi| >= 2^{kmax+1}
};

BandDecomposition band_project(const GridFunction& f, int k0, int kmax);

struct Kernel1D {
  std::vector<double> weights;  // discrete weights, sum = 1 for unit mass
  int center = 0;               // index of the zero offset
};

// phi *_axis f with axis 1 (first coordinate) or 2.
GridFunction partial_convolve(const GridFunction& f, const Kernel1D& k, int axis);

// Samples of width^{-1} rho(x / width) for the 1-D kit at spacing `cell`,
// normalised to unit discrete mass.
Kernel1D scaled_profile_1d(const BumpKit& kit1, double width, double cell);

}  // namespace curvepat
