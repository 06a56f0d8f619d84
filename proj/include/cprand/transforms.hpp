#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "cprand/types.hpp"

namespace cprand::detail {

inline constexpr double kPi = std::numbers::pi_v<double>;

inline bool is_pow2(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

inline Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Complex DFT of one fixed length. Power-of-two lengths run iterative
// radix-2 with a precomputed twiddle table (angles from direct trig, so
// error stays O(log n) ulps); other lengths run Bluestein's chirp transform
// over an internal power-of-two FFT. forward() is the unnormalized DFT with
// kernel e^{-2 pi i jk / n}; backward() is its unnormalized adjoint, so
// backward(forward(x)) = n * x.
class Fft {
 public:
  explicit Fft(Index n) : n_(n) {
    if (n < 1) throw std::invalid_argument("fft length must be >= 1");
    if (is_pow2(n_)) {
      init_pow2_tables(n_);
    } else {
      m_ = next_pow2(2 * n_ - 1);
      init_pow2_tables(m_);
      chirp_.resize(static_cast<std::size_t>(n_));
      for (Index j = 0; j < n_; ++j) {
        // j^2 mod 2n keeps the chirp angle small and exact.
        const Index r = (j * j) % (2 * n_);
        const double ang = -kPi * static_cast<double>(r) / static_cast<double>(n_);
        chirp_[static_cast<std::size_t>(j)] = Complex(std::cos(ang), std::sin(ang));
      }
      chirp_spectrum_.assign(static_cast<std::size_t>(m_), Complex(0.0));
      chirp_spectrum_[0] = Complex(1.0);
      for (Index j = 1; j < n_; ++j) {
        const Complex b = std::conj(chirp_[static_cast<std::size_t>(j)]);
        chirp_spectrum_[static_cast<std::size_t>(j)] = b;
        chirp_spectrum_[static_cast<std::size_t>(m_ - j)] = b;
      }
      pow2_forward(chirp_spectrum_.data(), m_);
    }
  }

  Index size() const { return n_; }

  void forward(Complex* data) const {
    if (is_pow2(n_)) {
      pow2_forward(data, n_);
      return;
    }
    std::vector<Complex> a(static_cast<std::size_t>(m_), Complex(0.0));
    for (Index j = 0; j < n_; ++j)
      a[static_cast<std::size_t>(j)] = data[j] * chirp_[static_cast<std::size_t>(j)];
    pow2_forward(a.data(), m_);
    for (Index k = 0; k < m_; ++k)
      a[static_cast<std::size_t>(k)] *= chirp_spectrum_[static_cast<std::size_t>(k)];
    // inverse pow2 FFT via conjugation
    for (auto& z : a) z = std::conj(z);
    pow2_forward(a.data(), m_);
    const double inv_m = 1.0 / static_cast<double>(m_);
    for (Index k = 0; k < n_; ++k)
      data[k] = std::conj(a[static_cast<std::size_t>(k)]) * inv_m *
                chirp_[static_cast<std::size_t>(k)];
  }

  void backward(Complex* data) const {
    for (Index j = 0; j < n_; ++j) data[j] = std::conj(data[j]);
    forward(data);
    for (Index j = 0; j < n_; ++j) data[j] = std::conj(data[j]);
  }

 private:
  void init_pow2_tables(Index n) {
    twiddle_.resize(static_cast<std::size_t>(std::max<Index>(n / 2, 1)));
    for (Index k = 0; k < static_cast<Index>(twiddle_.size()); ++k) {
      const double ang = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      twiddle_[static_cast<std::size_t>(k)] = Complex(std::cos(ang), std::sin(ang));
    }
  }

  void pow2_forward(Complex* a, Index n) const {
    for (Index i = 1, j = 0; i < n; ++i) {
      Index bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (Index len = 2; len <= n; len <<= 1) {
      const Index half = len >> 1;
      const Index step = n / len;
      for (Index i = 0; i < n; i += len) {
        for (Index k = 0; k < half; ++k) {
          const Complex w = twiddle_[static_cast<std::size_t>(k * step)];
          const Complex u = a[i + k];
          const Complex v = a[i + k + half] * w;
          a[i + k] = u + v;
          a[i + k + half] = u - v;
        }
      }
    }
  }

  Index n_ = 0;
  Index m_ = 0;  // Bluestein working length (power of two), 0 when unused
  std::vector<Complex> twiddle_;
  std::vector<Complex> chirp_;
  std::vector<Complex> chirp_spectrum_;
};

// Orthonormal trigonometric / Hadamard transforms of one fixed length,
// applied in place to real vectors. forward() is the orthonormal DCT-II;
// adjoint() its transpose (DCT-III), so adjoint(forward(x)) = x. Both run
// through one length-2n complex FFT.
class Dct {
 public:
  explicit Dct(Index n) : n_(n), fft_(2 * n) {
    if (n < 1) throw std::invalid_argument("dct length must be >= 1");
    phase_.resize(static_cast<std::size_t>(n_));
    for (Index k = 0; k < n_; ++k) {
      const double ang = -kPi * static_cast<double>(k) / (2.0 * static_cast<double>(n_));
      phase_[static_cast<std::size_t>(k)] = Complex(std::cos(ang), std::sin(ang));
    }
    s0_ = std::sqrt(1.0 / static_cast<double>(n_));
    sk_ = std::sqrt(2.0 / static_cast<double>(n_));
  }

  Index size() const { return n_; }

  void forward(double* x) const {
    std::vector<Complex> y(static_cast<std::size_t>(2 * n_), Complex(0.0));
    for (Index j = 0; j < n_; ++j) y[static_cast<std::size_t>(j)] = Complex(x[j]);
    fft_.forward(y.data());
    for (Index k = 0; k < n_; ++k) {
      const double c = (phase_[static_cast<std::size_t>(k)] *
                        y[static_cast<std::size_t>(k)]).real();
      x[k] = (k == 0 ? s0_ : sk_) * c;
    }
  }

  void adjoint(double* x) const {
    std::vector<Complex> h(static_cast<std::size_t>(2 * n_), Complex(0.0));
    for (Index k = 0; k < n_; ++k) {
      const double g = (k == 0 ? s0_ : sk_) * x[k];
      h[static_cast<std::size_t>(k)] =
          g * std::conj(phase_[static_cast<std::size_t>(k)]);
    }
    fft_.backward(h.data());
    for (Index j = 0; j < n_; ++j) x[j] = h[static_cast<std::size_t>(j)].real();
  }

 private:
  Index n_;
  Fft fft_;
  std::vector<Complex> phase_;
  double s0_, sk_;
};

// Orthonormal Walsh-Hadamard transform; length must be a power of two.
// Symmetric and involutory, so it is its own adjoint and inverse.
class Wht {
 public:
  explicit Wht(Index n) : n_(n), scale_(1.0 / std::sqrt(static_cast<double>(n))) {
    if (!is_pow2(n)) throw std::invalid_argument("wht length must be a power of two");
  }

  Index size() const { return n_; }

  void forward(double* x) const {
    for (Index len = 1; len < n_; len <<= 1) {
      for (Index i = 0; i < n_; i += 2 * len) {
        for (Index k = 0; k < len; ++k) {
          const double u = x[i + k];
          const double v = x[i + k + len];
          x[i + k] = u + v;
          x[i + k + len] = u - v;
        }
      }
    }
    for (Index j = 0; j < n_; ++j) x[j] *= scale_;
  }

  void adjoint(double* x) const { forward(x); }

 private:
  Index n_;
  double scale_;
};

}  // namespace cprand::detail
