#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace backreact {

// In-place discrete Fourier transforms backed by FFTW. Plans are created once
// per shape and shared; execution is thread-safe. The inverse is normalized so
// that inverse(forward(a)) == a.
class Fft1d {
 public:
  explicit Fft1d(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Real-to-half-complex transform of length n (n/2 + 1 output bins).
class RealFft1d {
 public:
  explicit RealFft1d(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // Consumes `in`; the result is normalized.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Row-major 2D transform over an (rows x cols) array.
class Fft2d {
 public:
  Fft2d(std::size_t rows, std::size_t cols);

  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace backreact
