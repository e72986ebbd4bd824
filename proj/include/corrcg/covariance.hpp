#pragma once

// Diffusion-modelled covariance operators on a uniform periodic grid. The
// operator is sigma^2 * nu * (L/h) * (I - L^2 Laplacian_h)^{-M}, a symmetric
// circulant diagonalised by the discrete Fourier basis.

#include <cstddef>
#include <random>

#include <Eigen/Core>

#include "corrcg/matern.hpp"

namespace corrcg {

/// One covariance factor. M = 0 is the degenerate diagonal case sigma2 * I.
struct CorrelationSpec {
  double sigma2 = 1.0;
  int M = 0;
  double L = 0.0;  // km, canonical length parameter; unused when M == 0
  double h = 1.0;  // km
  std::size_t size = 0;

  /// Builds a spec from any of the L, D or rho parameterisations.
  static CorrelationSpec make(double sigma2, int M, double length, LengthKind kind, double h, std::size_t size);
  static CorrelationSpec diagonal(double sigma2, double h, std::size_t size);

  bool is_diagonal() const { return M == 0; }
  double ltilde() const { return L / h; }
  /// nu * L / h, or 1 for the diagonal case.
  double nu_ltilde() const;
  /// Leading eigenvalue sigma2 * nu * L / h.
  double amplitude() const { return sigma2 * nu_ltilde(); }
  /// Set when the length-scale is shorter than the grid spacing.
  bool discretization_warning() const { return M > 0 && ltilde() < 1.0; }
};

/// Throws DomainError if the spec violates its invariants.
void validate(const CorrelationSpec& spec);

/// Symmetric circulant stored as first row plus eigenvalues in DFT order.
template <typename Scalar = double>
struct CirculantOperator {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector stencil;
  Vector spectrum;

  Eigen::Index size() const { return stencil.size(); }
};

/// T = I - Ltilde^2 Laplacian_h on a periodic grid of `size` points.
CirculantOperator<double> shifted_laplacian(double ltilde, std::size_t size);

/// Eigenvalues sigma2 * nu * Ltilde * (1 + 4 Ltilde^2 sin^2(pi i / size))^{-M}.
Eigen::VectorXd covariance_eigenvalues(const CorrelationSpec& spec);

/// Log of covariance_eigenvalues, without overflow for large M and Ltilde.
Eigen::VectorXd log_covariance_eigenvalues(const CorrelationSpec& spec);

CirculantOperator<double> covariance_spectrum(const CorrelationSpec& spec);

/// C v, through M cyclic tridiagonal solves.
Eigen::VectorXd apply(const CorrelationSpec& spec, const Eigen::VectorXd& v);
/// C^{-1} v, through M stencil applications.
Eigen::VectorXd apply_inverse(const CorrelationSpec& spec, const Eigen::VectorXd& v);

/// Solves the symmetric cyclic tridiagonal system with diagonal d and
/// off-diagonal (and corner) entries e. Requires |d| > 2|e|.
Eigen::VectorXd cyclic_tridiagonal_solve(double d, double e, const Eigen::VectorXd& rhs);

/// Correlated sample C^{1/2} w for a white-noise vector w.
Eigen::VectorXd sample_from_white(const CorrelationSpec& spec, const Eigen::VectorXd& white);
Eigen::VectorXd sample(const CorrelationSpec& spec, std::mt19937_64& rng);

inline constexpr std::size_t kDenseCovarianceLimit = 512;

/// Explicit matrix, assembled from the spectral representation (size <= 512).
Eigen::MatrixXd dense_covariance(const CorrelationSpec& spec);

/// Diagonal entry of the discrete correlation matrix (variance divided out).
double normalization_diagnostic(const CorrelationSpec& spec);

/// Diagonal of the periodic continuous correlation on a circle of the given
/// circumference with the continuous gamma^2 = nu * L normalisation.
double circle_normalization(int M, double L, double circumference);

}  // namespace corrcg
