#include "corrcg/covariance.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "corrcg/errors.hpp"
#include "corrcg/fourier.hpp"
#include "corrcg/random.hpp"

namespace corrcg {
namespace {

void check_length(const CorrelationSpec& spec, Eigen::Index n) {
  if (n != static_cast<Eigen::Index>(spec.size))
    throw DomainError("vector length " + std::to_string(n) + " does not match grid size " +
                      std::to_string(spec.size));
}

double sin2(std::size_t i, std::size_t size) {
  const double s = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(size));
  return s * s;
}

}  // namespace

CorrelationSpec CorrelationSpec::make(double sigma2, int M, double length, LengthKind kind, double h,
                                      std::size_t size) {
  CorrelationSpec spec;
  spec.sigma2 = sigma2;
  spec.M = M;
  spec.L = length_convert(length, M, kind, LengthKind::L);
  spec.h = h;
  spec.size = size;
  validate(spec);
  return spec;
}

CorrelationSpec CorrelationSpec::diagonal(double sigma2, double h, std::size_t size) {
  CorrelationSpec spec;
  spec.sigma2 = sigma2;
  spec.M = 0;
  spec.L = 0.0;
  spec.h = h;
  spec.size = size;
  validate(spec);
  return spec;
}

double CorrelationSpec::nu_ltilde() const { return M == 0 ? 1.0 : nu(M) * ltilde(); }

void validate(const CorrelationSpec& spec) {
  if (!(spec.sigma2 > 0)) throw DomainError("variance must be positive");
  if (spec.M < 0 || spec.M > kMaxArOrder) throw DomainError("AR order M must be in [0, 10]");
  if (spec.M > 0 && !(spec.L > 0)) throw DomainError("length-scale must be positive");
  if (!(spec.h > 0)) throw DomainError("grid spacing must be positive");
  if (spec.size < 4) throw DomainError("grid size must be at least 4");
}

CirculantOperator<double> shifted_laplacian(double ltilde, std::size_t size) {
  if (!(ltilde > 0)) throw DomainError("Ltilde must be positive");
  if (size < 4) throw DomainError("grid size must be at least 4");
  const double l2 = ltilde * ltilde;
  CirculantOperator<double> T;
  T.stencil = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  T.stencil[0] = 1.0 + 2.0 * l2;
  T.stencil[1] = -l2;
  T.stencil[static_cast<Eigen::Index>(size) - 1] = -l2;
  T.spectrum.resize(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) T.spectrum[static_cast<Eigen::Index>(i)] = 1.0 + 4.0 * l2 * sin2(i, size);
  return T;
}

Eigen::VectorXd log_covariance_eigenvalues(const CorrelationSpec& spec) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(spec.size);
  const double log_amp = std::log(spec.amplitude());
  if (spec.is_diagonal()) return Eigen::VectorXd::Constant(n, log_amp);
  const double l2 = spec.ltilde() * spec.ltilde();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = log_amp - spec.M * std::log1p(4.0 * l2 * sin2(static_cast<std::size_t>(i), spec.size));
  return out;
}

Eigen::VectorXd covariance_eigenvalues(const CorrelationSpec& spec) {
  return log_covariance_eigenvalues(spec).array().exp().matrix();
}

CirculantOperator<double> covariance_spectrum(const CorrelationSpec& spec) {
  CirculantOperator<double> C;
  C.spectrum = covariance_eigenvalues(spec);
  if (spec.is_diagonal()) {
    C.stencil = Eigen::VectorXd::Zero(C.spectrum.size());
    C.stencil[0] = spec.sigma2;
  } else {
    C.stencil = fourier::circulant_first_row(C.spectrum);
  }
  return C;
}

Eigen::VectorXd cyclic_tridiagonal_solve(double d, double e, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = rhs.size();
  if (n < 3) throw DomainError("cyclic tridiagonal system needs at least 3 unknowns");
  if (!(std::abs(d) > 2.0 * std::abs(e))) throw DomainError("cyclic tridiagonal system is not diagonally dominant");
  if (e == 0.0) return rhs / d;
  // Sherman-Morrison: A = A' + u u^T / gamma with u = (gamma, 0, ..., 0, e).
  const double gamma = -d;
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, d);
  diag[0] = d - gamma;
  diag[n - 1] = d - e * e / gamma;

  // Thomas elimination for two right-hand sides sharing one factorisation.
  Eigen::VectorXd c(n), x = rhs, z = Eigen::VectorXd::Zero(n);
  z[0] = gamma;
  z[n - 1] = e;
  double denom = diag[0];
  c[0] = e / denom;
  x[0] /= denom;
  z[0] /= denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag[i] - e * c[i - 1];
    c[i] = e / denom;
    x[i] = (x[i] - e * x[i - 1]) / denom;
    z[i] = (z[i] - e * z[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x[i] -= c[i] * x[i + 1];
    z[i] -= c[i] * z[i + 1];
  }
  const double factor = (x[0] + e * x[n - 1] / gamma) / (1.0 + z[0] + e * z[n - 1] / gamma);
  return x - factor * z;
}

Eigen::VectorXd apply(const CorrelationSpec& spec, const Eigen::VectorXd& v) {
  validate(spec);
  check_length(spec, v.size());
  if (spec.is_diagonal()) return spec.sigma2 * v;
  const double l2 = spec.ltilde() * spec.ltilde();
  Eigen::VectorXd x = v;
  for (int k = 0; k < spec.M; ++k) x = cyclic_tridiagonal_solve(1.0 + 2.0 * l2, -l2, x);
  return spec.amplitude() * x;
}

Eigen::VectorXd apply_inverse(const CorrelationSpec& spec, const Eigen::VectorXd& v) {
  validate(spec);
  check_length(spec, v.size());
  if (spec.is_diagonal()) return v / spec.sigma2;
  const double l2 = spec.ltilde() * spec.ltilde();
  const Eigen::Index n = v.size();
  Eigen::VectorXd x = v, y(n);
  for (int k = 0; k < spec.M; ++k) {
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = (1.0 + 2.0 * l2) * x[i] - l2 * (x[(i + n - 1) % n] + x[(i + 1) % n]);
    x.swap(y);
  }
  return x / spec.amplitude();
}

Eigen::VectorXd sample_from_white(const CorrelationSpec& spec, const Eigen::VectorXd& white) {
  validate(spec);
  check_length(spec, white.size());
  if (spec.is_diagonal()) return std::sqrt(spec.sigma2) * white;
  const Eigen::VectorXd root = (0.5 * log_covariance_eigenvalues(spec)).array().exp().matrix();
  return fourier::apply_symmetric_circulant(root, white);
}

Eigen::VectorXd sample(const CorrelationSpec& spec, std::mt19937_64& rng) {
  return sample_from_white(spec, standard_normal(rng, static_cast<Eigen::Index>(spec.size)));
}

Eigen::MatrixXd dense_covariance(const CorrelationSpec& spec) {
  validate(spec);
  if (spec.size > kDenseCovarianceLimit)
    throw SizeGuardError("dense covariance limited to " + std::to_string(kDenseCovarianceLimit) + " points, got " +
                         std::to_string(spec.size));
  const auto C = covariance_spectrum(spec);
  Eigen::MatrixXd dense = fourier::circulant_matrix(C.stencil);
  // Remove rounding asymmetry from the transform.
  return 0.5 * (dense + dense.transpose());
}

double normalization_diagnostic(const CorrelationSpec& spec) {
  if (spec.is_diagonal()) {
    validate(spec);
    return 1.0;
  }
  // Every diagonal entry of a circulant equals the mean eigenvalue.
  return covariance_eigenvalues(spec).mean() / spec.sigma2;
}

double circle_normalization(int M, double L, double circumference) {
  const double a = circumference / (2.0 * std::numbers::pi);
  const CircleKernel<double> kernel(M, L, a, 200000);
  // partial_sum + tail = (1 / 2 pi) sum over all integer wavenumbers.
  const double series = kernel.partial_sum(0) + kernel.tail(kernel.truncation(), 0);
  return nu(M) * L * series / a;
}

}  // namespace corrcg
