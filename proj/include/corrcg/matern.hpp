#pragma once

// Autoregressive (Matern-family) correlation functions on the real line and on
// the circle, and the algebra linking the length-scale parameters L, D and rho.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "corrcg/errors.hpp"

namespace corrcg {

inline constexpr int kMinArOrder = 1;
inline constexpr int kMaxArOrder = 10;

enum class LengthKind { L, D, Rho };

inline std::string to_string(LengthKind kind) {
  switch (kind) {
    case LengthKind::L: return "L";
    case LengthKind::D: return "D";
    case LengthKind::Rho: return "rho";
  }
  return "?";
}

namespace detail {

using wide_int = __int128;

inline wide_int factorial(int k) {
  wide_int f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline wide_int gcd(wide_int a, wide_int b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    wide_int t = a % b;
    a = b;
    b = t;
  }
  return a;
}

template <std::floating_point Scalar>
Scalar ratio(wide_int num, wide_int den) {
  const wide_int g = gcd(num, den);
  num /= g;
  den /= g;
  return static_cast<Scalar>(static_cast<long double>(num) / static_cast<long double>(den));
}

inline void check_order(int M) {
  if (M < kMinArOrder || M > kMaxArOrder)
    throw DomainError("AR order M must be in [1, 10], got " + std::to_string(M));
}

}  // namespace detail

/// Polynomial coefficients beta_0..beta_{M-1} of the order-M AR function,
/// evaluated with exact integer arithmetic before the final division.
template <std::floating_point Scalar = double>
std::vector<Scalar> beta_coefficients(int M) {
  detail::check_order(M);
  using detail::factorial;
  std::vector<Scalar> beta(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    const detail::wide_int num = (detail::wide_int{1} << j) * factorial(M - 1) * factorial(2 * M - j - 2);
    const detail::wide_int den = factorial(j) * factorial(M - j - 1) * factorial(2 * M - 2);
    beta[static_cast<std::size_t>(j)] = detail::ratio<Scalar>(num, den);
  }
  return beta;
}

/// Normalisation factor nu(M) such that gamma^2 = nu * L gives c(0) = 1.
template <std::floating_point Scalar = double>
Scalar nu(int M) {
  detail::check_order(M);
  using detail::factorial;
  const detail::wide_int f = factorial(M - 1);
  return detail::ratio<Scalar>((detail::wide_int{1} << (2 * M - 1)) * f * f, factorial(2 * M - 2));
}

/// Converts a length-scale between the L, D (Daley) and rho (Stein)
/// parameterisations of an order-M AR function. D = L sqrt(2M-3) is only
/// defined for M >= 2.
template <std::floating_point Scalar = double>
Scalar length_convert(Scalar value, int M, LengthKind from, LengthKind to) {
  detail::check_order(M);
  if (!(value > 0)) throw DomainError("length-scale must be positive");
  if ((from == LengthKind::D || to == LengthKind::D) && M < 2)
    throw DomainError("Daley length-scale undefined for M = 1");
  auto factor = [M](LengthKind k) -> Scalar {
    switch (k) {
      case LengthKind::L: return Scalar(1);
      case LengthKind::D: return std::sqrt(Scalar(2 * M - 3));
      case LengthKind::Rho: return std::sqrt(Scalar(2 * M - 1));
    }
    return Scalar(1);
  };
  if (from == to) return value;
  return value / factor(from) * factor(to);
}

/// Order-M AR correlation on the real line with length parameter L.
template <std::floating_point Scalar = double>
class ArKernel {
 public:
  ArKernel(int M, Scalar L) : M_(M), L_(L) {
    detail::check_order(M);
    if (!(L > 0)) throw DomainError("AR length-scale L must be positive");
  }

  static ArKernel from_length(int M, Scalar value, LengthKind kind) {
    return ArKernel(M, length_convert<Scalar>(value, M, kind, LengthKind::L));
  }

  int order() const { return M_; }
  Scalar L() const { return L_; }
  Scalar D() const { return length_convert<Scalar>(L_, M_, LengthKind::L, LengthKind::D); }
  Scalar rho() const { return length_convert<Scalar>(L_, M_, LengthKind::L, LengthKind::Rho); }
  Scalar gamma2() const { return nu<Scalar>(M_) * L_; }

 private:
  int M_;
  Scalar L_;
};

/// c(r) = sum_j beta_j (r/L)^j exp(-r/L).
template <std::floating_point Scalar>
Scalar ar_correlation(const ArKernel<Scalar>& kernel, Scalar r) {
  if (r < 0) throw DomainError("distance must be non-negative");
  const Scalar x = r / kernel.L();
  const auto beta = beta_coefficients<Scalar>(kernel.order());
  // Horner on the polynomial part.
  Scalar poly = 0;
  for (auto it = beta.rbegin(); it != beta.rend(); ++it) poly = poly * x + *it;
  return poly * std::exp(-x);
}

/// Fourier transform gamma^2 / (1 + L^2 zhat^2)^M of the AR function.
template <std::floating_point Scalar>
Scalar power_spectrum(const ArKernel<Scalar>& kernel, Scalar zhat) {
  const Scalar lz = kernel.L() * zhat;
  return kernel.gamma2() / std::pow(Scalar(1) + lz * lz, kernel.order());
}

/// Gaussian exp(-r^2 / 2D^2), the M -> infinity limit at fixed D.
template <std::floating_point Scalar = double>
Scalar gaussian_limit(Scalar r, Scalar D) {
  if (!(D > 0)) throw DomainError("Gaussian length-scale must be positive");
  if (r < 0) throw DomainError("distance must be non-negative");
  return std::exp(-r * r / (Scalar(2) * D * D));
}

/// Diffusion-generated correlation on a circle of radius a, represented by a
/// truncated Fourier cosine series.
template <std::floating_point Scalar = double>
class CircleKernel {
 public:
  static constexpr Scalar kTailTolerance = Scalar(1e-10);
  static constexpr long long kMaxTruncation = 50'000'000;

  CircleKernel(int M, Scalar L, Scalar a, long long truncation)
      : M_(M), L_(L), a_(a), truncation_(truncation) {
    detail::check_order(M);
    if (!(L > 0) || !(a > 0)) throw DomainError("circle kernel needs L > 0 and a > 0");
    if (truncation < 1) throw DomainError("circle truncation must be positive");
  }

  /// Uses the smallest cutoff whose estimated tail is below 1e-10 of the sum.
  CircleKernel(int M, Scalar L, Scalar a) : CircleKernel(M, L, a, 1) {
    truncation_ = default_truncation();
  }

  int order() const { return M_; }
  Scalar L() const { return L_; }
  Scalar radius() const { return a_; }
  long long truncation() const { return truncation_; }

  /// Cosine-series weight of wavenumber m. The m = 0 term carries half the
  /// weight of the others so that the series is the periodic image sum of the
  /// flat-domain kernel.
  Scalar coefficient(long long m) const {
    const Scalar k = L_ / a_ * static_cast<Scalar>(m);
    const Scalar c = std::pow(Scalar(1) + k * k, -M_) / std::numbers::pi_v<Scalar>;
    return m == 0 ? c / 2 : c;
  }

  /// sum_{m > N} m^p c_m approximated by the midpoint integral from N + 1/2.
  Scalar tail(long long N, int p) const {
    const Scalar k = L_ / a_;
    const Scalar theta0 = std::atan(k * (static_cast<Scalar>(N) + Scalar(0.5)));
    const int cos_power = 2 * M_ - 2 - p;
    if (cos_power < 0) return std::numeric_limits<Scalar>::infinity();
    // Composite Simpson on a smooth integrand sin^p cos^q over [theta0, pi/2].
    constexpr int intervals = 512;
    const Scalar hi = std::numbers::pi_v<Scalar> / 2;
    const Scalar step = (hi - theta0) / intervals;
    auto f = [&](Scalar t) { return std::pow(std::sin(t), p) * std::pow(std::cos(t), cos_power); };
    Scalar acc = f(theta0) + f(hi);
    for (int i = 1; i < intervals; ++i) acc += f(theta0 + i * step) * (i % 2 == 1 ? 4 : 2);
    const Scalar integral = acc * step / 3;
    return integral / (std::numbers::pi_v<Scalar> * std::pow(k, p + 1));
  }

  /// sum_{m=0}^{N} m^p c_m, accumulated from the small end.
  Scalar partial_sum(int p) const {
    Scalar s = 0;
    for (long long m = truncation_; m >= 0; --m)
      s += std::pow(static_cast<Scalar>(m), p) * coefficient(m);
    return s;
  }

 private:
  long long default_truncation() const {
    const Scalar k = L_ / a_;
    // sum c_m ~ (1/(pi k)) int_0^inf (1+u^2)^-M du; tail ~ k^{-2M} N^{1-2M} / (pi (2M-1)).
    const Scalar full = std::sqrt(std::numbers::pi_v<Scalar>) / 2 * std::tgamma(Scalar(M_) - Scalar(0.5)) /
                        std::tgamma(Scalar(M_)) / (std::numbers::pi_v<Scalar> * k);
    const Scalar rhs = std::pow(k, -2 * M_) / ((2 * M_ - 1) * kTailTolerance * full * std::numbers::pi_v<Scalar>);
    const Scalar n = std::pow(rhs, Scalar(1) / (2 * M_ - 1));
    if (!(n < static_cast<Scalar>(kMaxTruncation)))
      throw TruncationError("circle series needs more than " + std::to_string(kMaxTruncation) + " terms");
    return std::max<long long>(16, static_cast<long long>(std::ceil(n)));
  }

  int M_;
  Scalar L_;
  Scalar a_;
  long long truncation_;
};

/// Correlation at angular separation theta, normalised so that c(0) = 1.
template <std::floating_point Scalar>
Scalar circle_correlation(const CircleKernel<Scalar>& kernel, Scalar theta) {
  const Scalar total = kernel.partial_sum(0);
  if (!(kernel.tail(kernel.truncation(), 0) < CircleKernel<Scalar>::kTailTolerance * total))
    throw TruncationError("circle series truncation " + std::to_string(kernel.truncation()) +
                          " leaves a tail above 1e-10 of the sum");
  Scalar s = 0;
  for (long long m = kernel.truncation(); m >= 0; --m)
    s += kernel.coefficient(m) * std::cos(static_cast<Scalar>(m) * theta);
  return s / total;
}

/// Daley length-scale of the circle kernel, a * (sum c_m / sum m^2 c_m)^{1/2}.
/// The m^2 series converges slowly for M = 2, so its tail is added back.
template <std::floating_point Scalar>
Scalar circle_daley(const CircleKernel<Scalar>& kernel) {
  if (kernel.order() < 2) throw DomainError("circle Daley length diverges for M = 1");
  const long long N = kernel.truncation();
  const Scalar s0 = kernel.partial_sum(0) + kernel.tail(N, 0);
  const Scalar s2 = kernel.partial_sum(2) + kernel.tail(N, 2);
  return kernel.radius() * std::sqrt(s0 / s2);
}

struct LengthScaleRow {
  int M;
  double L, rho, D;  // km
};

/// Length-scales at fixed (1 + 4 Ltilde^2)^M = `product` on spacing h.
inline std::vector<LengthScaleRow> fixed_product_lengths(const std::vector<int>& orders, double product, double h) {
  std::vector<LengthScaleRow> rows;
  for (int M : orders) {
    const double L = 0.5 * std::sqrt(std::expm1(std::log(product) / M)) * h;
    rows.push_back({M, L, length_convert(L, M, LengthKind::L, LengthKind::Rho),
                    M >= 2 ? length_convert(L, M, LengthKind::L, LengthKind::D) : 0.0});
  }
  return rows;
}

/// Length-scales at fixed Stein length rho.
inline std::vector<LengthScaleRow> fixed_rho_lengths(const std::vector<int>& orders, double rho) {
  std::vector<LengthScaleRow> rows;
  for (int M : orders) {
    const double L = length_convert(rho, M, LengthKind::Rho, LengthKind::L);
    rows.push_back({M, L, rho, M >= 2 ? length_convert(L, M, LengthKind::L, LengthKind::D) : 0.0});
  }
  return rows;
}

}  // namespace corrcg
