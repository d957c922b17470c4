#include "curvepat/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace curvepat {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

int next_pow2(long long v) {
  long long p = 1;
  while (p < v) p <<= 1;
  return static_cast<int>(p);
}

RealFft::RealFft(std::vector<int> shape) : shape_(std::move(shape)) {
  if (shape_.empty()) throw std::invalid_argument("RealFft: empty shape");
  real_size_ = 1;
  for (int m : shape_) real_size_ *= m;
  spectrum_size_ = real_size_ / shape_.back() * (shape_.back() / 2 + 1);
  std::lock_guard<std::mutex> lock(planner_mutex());
  double* r = fftw_alloc_real(real_size_);
  fftw_complex* c = fftw_alloc_complex(spectrum_size_);
  const int rank = static_cast<int>(shape_.size());
  plan_fwd_ = fftw_plan_dft_r2c(rank, shape_.data(), r, c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_inv_ = fftw_plan_dft_c2r(rank, shape_.data(), c, r, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(r);
  fftw_free(c);
  if (!plan_fwd_ || !plan_inv_) throw std::runtime_error("RealFft: planning failed");
}

Eigen::ArrayXcd RealFft::forward(const Eigen::ArrayXd& x) const {
  if (x.size() != real_size_) throw std::invalid_argument("RealFft::forward: size mismatch");
  Eigen::ArrayXd in = x;
  Eigen::ArrayXcd out(spectrum_size_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

Eigen::ArrayXd RealFft::inverse(const Eigen::ArrayXcd& X) const {
  if (X.size() != spectrum_size_) throw std::invalid_argument("RealFft::inverse: size mismatch");
  Eigen::ArrayXcd in = X;
  Eigen::ArrayXd out(real_size_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inv_), reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  out /= static_cast<double>(real_size_);
  return out;
}

void RealFft::for_each_frequency(const std::vector<double>& lengths,
                                 const std::function<void(Eigen::Index, const double*, double)>& fn) const {
  const int rank = static_cast<int>(shape_.size());
  const int last = shape_.back(), half = last / 2 + 1;
  std::vector<int> idx(rank, 0);
  std::vector<double> xi(rank, 0.0);
  Eigen::Index flat = 0;
  const Eigen::Index rows = spectrum_size_ / half;
  for (Eigen::Index row = 0; row < rows; ++row) {
    Eigen::Index rem = row;
    for (int a = rank - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % shape_[a]);
      rem /= shape_[a];
      const int m = idx[a] < (shape_[a] + 1) / 2 ? idx[a] : idx[a] - shape_[a];
      xi[a] = m / lengths[a];
    }
    for (int j = 0; j < half; ++j, ++flat) {
      xi[rank - 1] = j / lengths[rank - 1];
      const double mult = (j == 0 || (last % 2 == 0 && j == last / 2)) ? 1.0 : 2.0;
      fn(flat, xi.data(), mult);
    }
  }
}

Eigen::ArrayXd RealFft::frequency_radius(const std::vector<double>& lengths) const {
  Eigen::ArrayXd r(spectrum_size_);
  const int rank = static_cast<int>(shape_.size());
  for_each_frequency(lengths, [&](Eigen::Index k, const double* xi, double) {
    double s = 0.0;
    for (int a = 0; a < rank; ++a) s += xi[a] * xi[a];
    r(k) = s;
  });
  return r;
}

Eigen::ArrayXd RealFft::multiplicity() const {
  Eigen::ArrayXd w(spectrum_size_);
  std::vector<double> ones(shape_.size(), 1.0);
  for_each_frequency(ones, [&](Eigen::Index k, const double*, double m) { w(k) = m; });
  return w;
}

const RealFft& fft_for(const std::vector<int>& shape) {
  static std::map<std::vector<int>, std::unique_ptr<RealFft>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(shape);
  if (it == cache.end()) it = cache.emplace(shape, std::make_unique<RealFft>(shape)).first;
  return *it->second;
}

}  // namespace curvepat
