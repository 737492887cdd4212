#include "backreact/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace backreact {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t rows, std::size_t cols) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto key = std::make_pair(rows, cols);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::vector<std::complex<double>> scratch(rows * cols);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{};
  if (rows == 1) {
    const int n = static_cast<int>(cols);
    p.forward = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    p.inverse = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
  } else {
    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    p.forward = fftw_plan_dft_2d(r, c, buf, buf, FFTW_FORWARD, flags);
    p.inverse = fftw_plan_dft_2d(r, c, buf, buf, FFTW_BACKWARD, flags);
  }
  if (p.forward == nullptr || p.inverse == nullptr) {
    throw std::runtime_error("fftw: failed to create plan");
  }
  cache.emplace(key, p);
  return p;
}

void execute(void* plan, std::span<std::complex<double>> data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(static_cast<fftw_plan>(plan), buf, buf);
}

void scale(std::span<std::complex<double>> data, double factor) {
  for (auto& a : data) a *= factor;
}

PlanPair real_plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<std::complex<double>> half(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(half.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  const int len = static_cast<int>(n);
  PlanPair p{};
  p.forward = fftw_plan_dft_r2c_1d(len, real.data(), c, flags);
  p.inverse = fftw_plan_dft_c2r_1d(len, c, real.data(), flags | FFTW_DESTROY_INPUT);
  if (p.forward == nullptr || p.inverse == nullptr) {
    throw std::runtime_error("fftw: failed to create real plan");
  }
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft1d::RealFft1d(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("RealFft1d: transform too short");
  auto p = real_plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft1d::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != n_ / 2 + 1) {
    throw std::invalid_argument("RealFft1d: size mismatch");
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft1d::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  if (out.size() != n_ || in.size() != n_ / 2 + 1) {
    throw std::invalid_argument("RealFft1d: size mismatch");
  }
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double s = 1.0 / static_cast<double>(n_);
  for (auto& v : out) v *= s;
}

Fft1d::Fft1d(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("Fft1d: empty transform");
  auto p = plans_for(1, n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void Fft1d::forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw std::invalid_argument("Fft1d: size mismatch");
  execute(forward_plan_, data);
}

void Fft1d::inverse(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw std::invalid_argument("Fft1d: size mismatch");
  execute(inverse_plan_, data);
  scale(data, 1.0 / static_cast<double>(n_));
}

Fft2d::Fft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows < 2 || cols == 0) throw std::invalid_argument("Fft2d: bad shape");
  auto p = plans_for(rows, cols);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void Fft2d::forward(std::span<std::complex<double>> data) const {
  if (data.size() != rows_ * cols_) throw std::invalid_argument("Fft2d: size mismatch");
  execute(forward_plan_, data);
}

void Fft2d::inverse(std::span<std::complex<double>> data) const {
  if (data.size() != rows_ * cols_) throw std::invalid_argument("Fft2d: size mismatch");
  execute(inverse_plan_, data);
  scale(data, 1.0 / static_cast<double>(rows_ * cols_));
}

}  // namespace backreact
