#pragma once

#include "curvepat/gridfield.hpp"
#include "curvepat/polycurve.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace curvepat {

enum class SearchMode { Unit, Scaled, Slice, Corner };
std::string mode_name(SearchMode m);

struct SearchConfig {
  double epsilon = 0.0;      // required density; 0 means "one grid cell"
  double noise_factor = 4.0; // overlap must exceed this multiple of the error estimate
  int min_nodes = 64;        // t nodes per level before refinement
  double max_step_cells = 0.5;
};

// One level of the coarse-to-fine t scan: t in (2^{-ell-1}, 2^{1-ell}].
struct ScanLevel {
  int ell = 0;
  double t_lo = 0.0, t_hi = 0.0;
  int nodes = 0;
  double max_overlap = 0.0;
  double threshold = 0.0;
  bool hit = false;
};

struct RectangleReduction {
  int s = 0;
  double N = 0.0, N_rounded = 0.0;
  std::vector<double> offset, extents;
  double density_in_rect = 0.0;
  double density_global = 0.0;  // over the rounded box
  double density_max = 0.0;      // best rectangle of the partition
  int rect_index = 0, rect_count = 0;
};

struct SliceReduction {
  int n0 = 0;
  std::vector<int> basis_idx, dependent_idx;
  Eigen::MatrixXd L;
  Eigen::MatrixXd V;             // n x n0, columns span the image of the lift
  Eigen::VectorXd x0;            // base point, zero on the basis axes
  GridFunction reduced_set;
  double slice_measure = 0.0;    // H^{n0} of the slice
  double max_slice_measure = 0.0;
  double kappa = 0.0;
  double jacobian = 1.0;         // sqrt det(I + L L^T)
  double lift_identity_residual = 0.0;
  int translates_scanned = 0;
};

struct PatternWitness {
  SearchMode mode = SearchMode::Unit;
  Eigen::VectorXd x, y;               // y = x + gamma(t); corner: (x+P1, y) in points[1]
  std::vector<Eigen::VectorXd> points;
  double t = 0.0;
  double overlap_mass = 0.0;
  double noise = 0.0;                 // error estimate of the overlap value
  double threshold = 0.0;
  double gap_certified = 0.0;
  int level = 0;
  double residual_cells = 0.0;        // max_a |(y - x)_a - gamma_a(t)| / cell_a after snapping to cells
  std::vector<ScanLevel> ledger;
  std::optional<RectangleReduction> rectangle;
  std::optional<SliceReduction> slice;
};

PatternWitness search_unit(const GridFunction& E, const Curve& c, const SearchConfig& cfg = {});
PatternWitness search_scaled(const GridFunction& E, const Curve& c, const ScaleLattice& lattice,
                             const SearchConfig& cfg = {});
PatternWitness slice_search(const GridFunction& E, const Curve& c, const SearchConfig& cfg = {});
PatternWitness corner_search(const GridFunction& S, const Polynomial& P1, const Polynomial& P2,
                             const ScaleLattice& lattice, const SearchConfig& cfg = {});

// Picks the slice path for rank-deficient curves, the rectangle path for boxes other than the unit cube.
PatternWitness search(const GridFunction& E, const Curve& c, const ScaleLattice& lattice,
                      const SearchConfig& cfg = {});

// Rectangle partition of [0, 2^{sd}]^n into 2^{s d_i} blocks, s the largest admissible scale.
RectangleReduction reduce_rectangle(const GridFunction& E, const std::vector<int>& degrees, const ScaleLattice& lattice,
                                    double epsilon);
// Copy of E restricted to the rectangle, rescaled to the unit cube.
GridFunction rescale_to_unit(const GridFunction& E, const RectangleReduction& r);

// Exact measure of E ∩ (E - gamma(t)) for a cell-wise constant E.
double overlap_at(const GridFunction& E, const Curve& c, double t);
double corner_overlap_at(const GridFunction& S, const Polynomial& P1, const Polynomial& P2, double t);

// Each cell split into 2^n children with the same value.
GridFunction refine(const GridFunction& E);

// Value of the cell containing p (0 outside the box).
double value_at(const GridFunction& E, const Eigen::VectorXd& p);

}  // namespace curvepat
