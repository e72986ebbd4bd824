#pragma once

// Split-preconditioned conjugate gradient on S dv = U^T b with the spectral
// square root U of B, and a Gauss-Newton driver for a selection operator.

#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "corrcg/covariance.hpp"

namespace corrcg {

/// Immutable quadratic subproblem in control space; safe to share across threads.
class QuadraticSystem {
 public:
  QuadraticSystem(CorrelationSpec b, CorrelationSpec r, std::size_t zeta, Eigen::VectorXd rhs);

  /// v + U H^T R^{-1} H U v.
  Eigen::VectorXd apply_S(const Eigen::VectorXd& v) const;
  /// dx = U dv.
  Eigen::VectorXd back_transform(const Eigen::VectorXd& v) const;
  /// dv = U^{-1} dx.
  Eigen::VectorXd forward_transform(const Eigen::VectorXd& x) const;

  Eigen::VectorXd select(const Eigen::VectorXd& x) const;
  Eigen::VectorXd select_adjoint(const Eigen::VectorXd& y) const;
  Eigen::VectorXd apply_R_inverse(const Eigen::VectorXd& y) const;

  const Eigen::VectorXd& rhs() const { return rhs_; }
  const CorrelationSpec& b() const { return b_; }
  const CorrelationSpec& r() const { return r_; }
  std::size_t n() const { return b_.size; }
  std::size_t m() const { return r_.size; }
  std::size_t zeta() const { return zeta_; }

 private:
  CorrelationSpec b_;
  CorrelationSpec r_;
  std::size_t zeta_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd root_;  // sqrt of B eigenvalues
};

/// rhs = U^{-1} departure + U H^T R^{-1} innovation, where departure is
/// x_b - x_0 (zero when starting from the background).
QuadraticSystem build_system(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta,
                             const Eigen::VectorXd& innovation, const Eigen::VectorXd& departure);

/// Dense S for small n, for checks.
Eigen::MatrixXd dense_S(const QuadraticSystem& system);

struct TraceRow {
  std::size_t iter = 0;
  double residual = 0;
  double rel_residual = 0;
  double cost = 0;
  std::optional<double> anorm_error;
  std::optional<double> analysis_error;
};

struct IterationTrace {
  std::vector<TraceRow> rows;
  void write_csv(std::ostream& os) const;
};

/// Called with (iteration, dx) at iteration 0 and after every update.
using IterateObserver = std::function<void(std::size_t, const Eigen::VectorXd&)>;

struct PcgOptions {
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  bool reorthogonalize = false;
  /// Control-space solution dv*, enables the A-norm error column.
  std::optional<Eigen::VectorXd> exact_solution;
  /// Background error x_b - x_t, enables the analysis-error column.
  std::optional<Eigen::VectorXd> background_error;
  std::vector<IterateObserver> observers;
};

struct PcgResult {
  Eigen::VectorXd dx;
  Eigen::VectorXd dv;
  IterationTrace trace;
  std::size_t iterations = 0;
  bool converged = false;
};

PcgResult pcg(const QuadraticSystem& system, const PcgOptions& options = {});

/// ||e||_A for e = exact - iterate, both in control space (equals the state-space A-norm).
double anorm_error(const QuadraticSystem& system, const Eigen::VectorXd& iterate, const Eigen::VectorXd& exact);

inline constexpr std::size_t kMaxOuterIterations = 9;

struct GaussNewtonProblem {
  CorrelationSpec b;
  CorrelationSpec r;
  std::size_t zeta = 1;
  Eigen::VectorXd x_b;
  Eigen::VectorXd y_o;
};

struct GaussNewtonResult {
  Eigen::VectorXd x;
  std::vector<double> increment_norms;
  std::vector<PcgResult> inner;
};

/// Runs K outer iterations x_k = x_{k-1} + dx_k, 1 <= K <= 9.
GaussNewtonResult gauss_newton(const GaussNewtonProblem& problem, std::size_t K, const PcgOptions& options = {});

}  // namespace corrcg
