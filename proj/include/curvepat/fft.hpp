#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

namespace curvepat {

using cplx = std::complex<double>;

// Real-to-complex n-D transform on a row-major grid. The spectrum keeps the
// non-redundant half along the last axis. inverse() includes the 1/N factor.
class RealFft {
 public:
  explicit RealFft(std::vector<int> shape);

  const std::vector<int>& shape() const { return shape_; }
  Eigen::Index real_size() const { return real_size_; }
  Eigen::Index spectrum_size() const { return spectrum_size_; }

  Eigen::ArrayXcd forward(const Eigen::ArrayXd& x) const;
  Eigen::ArrayXd inverse(const Eigen::ArrayXcd& X) const;

  // Visits every stored spectral entry with its physical frequency
  // xi_i = m_i / length_i and the multiplicity (1 or 2) it carries in
  // Parseval sums.
  void for_each_frequency(const std::vector<double>& lengths,
                          const std::function<void(Eigen::Index, const double*, double)>& fn) const;

  // Squared frequency radius |xi|^2 for every stored entry.
  Eigen::ArrayXd frequency_radius(const std::vector<double>& lengths) const;
  Eigen::ArrayXd multiplicity() const;

 private:
  std::vector<int> shape_;
  Eigen::Index real_size_ = 0, spectrum_size_ = 0;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

// Shared transform object for a shape; plans are created once per shape.
const RealFft& fft_for(const std::vector<int>& shape);

int next_pow2(long long v);

}  // namespace curvepat
