#pragma once

// Spectra and conditioning of the B-preconditioned Hessian
// S = I + U^T H^T R^{-1} H U for circulant B, R and a uniform selection H.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "corrcg/covariance.hpp"

namespace corrcg {

/// B on the model grid (n points), R on the observation grid (m points), and
/// the selection stride zeta with zeta * m = n.
struct HessianSpec {
  CorrelationSpec b;
  CorrelationSpec o;
  std::size_t zeta = 1;

  std::size_t n() const { return b.size; }
  std::size_t m() const { return o.size; }
  /// Same B and geometry with R replaced by sigma_o^2 I.
  HessianSpec uncorrelated() const;
};

/// Throws DomainError unless zeta * m = n and h_o = zeta * h_b.
void validate(const HessianSpec& spec);

/// sigma_b^2 nu_b L_b / (sigma_o^2 nu_o L_o); nu_o L_o reads h_o for diagonal R.
double alpha(const HessianSpec& spec);

/// Eigenvalues of S: index i < m carries the aliased ratio, the rest are 1.
Eigen::VectorXd eigenvalues_S(const HessianSpec& spec);

/// Eigenvalues of H B H^T, each the mean of zeta fine-grid eigenvalues.
Eigen::VectorXd eigenvalues_HBHt(const CorrelationSpec& b, std::size_t zeta);

/// Eigenvalues of S_o = I + R^{-1} B_o, with B_o built on the coarse grid.
Eigen::VectorXd eigenvalues_So(const HessianSpec& spec);

double kappa_S(const HessianSpec& spec);
/// Exact condition number with R = sigma_o^2 I.
double kappa_Su(const HessianSpec& spec);
/// The closed form quoted for S_u with n > m, using sigma_b^2 nu_b L_b / (sigma_o^2 h_b).
double kappa_Su_closed_form(const HessianSpec& spec);
double chi(const HessianSpec& spec);

double bound_naive(const HessianSpec& spec);

inline constexpr std::size_t kDenseBoundLimit = 512;
/// 1 + ||V^{-1} H B H^T V^{-1}||_inf with V the symmetric square root of R.
double bound_infnorm(const HessianSpec& spec);

enum class EtaCase { ThreeFactor, Max };
std::string to_string(EtaCase c);

struct EtaBound {
  double value;
  EtaCase branch;
};

/// Upper bound on the condition number of S_o.
EtaBound bound_eta(const HessianSpec& spec);
/// Same bound from the dimensionless parameters, with Ltilde measured on h_o.
EtaBound bound_eta(double alpha, int Mo, double ltilde_o, int Mb, double ltilde_bo);

struct PredictedMinimum {
  double ltilde_o;
  /// False when the Ltilde_o sqrt(2 Mo - 1) > 1/2 assumption fails.
  bool lower_bound_ok;
};

/// Ltilde_o that minimises the eta bound at fixed Ltilde_{b/o}.
PredictedMinimum predicted_min_Lo(int Mo, int Mb, double ltilde_bo);

double corollary3_Mb_limit(double ltilde_min);

double cg_error_bound(double kappa, std::size_t ell);

struct SpectrumReport {
  Eigen::VectorXd eigenvalues_S;
  double kappa_S = 0;
  double kappa_Su = 0;
  double kappa_Su_closed_form = 0;
  double chi = 0;
  std::optional<double> bound_infnorm;
  double bound_naive = 0;
  double bound_eta = 0;
  EtaCase eta_case = EtaCase::Max;
  std::optional<double> predicted_min_Lo;  // km
  bool predicted_lower_bound_ok = true;
  bool ones_tail = false;  // m < n
};

/// Gathers everything above; the dense bound only when n <= 512.
SpectrumReport spectrum_report(const HessianSpec& spec);

// chi maps ----------------------------------------------------------------

struct ChiMapGeometry {
  double domain_km = 2000.0;
  std::size_t n = 500;
  std::size_t zeta = 2;
  double sigma2_b = 1.0;
  double sigma2_o = 1.0;
};

struct ChiMapRequest {
  int Mb = 8;
  double Db_km = 60.0;
  std::vector<int> Mo;
  std::vector<double> Do_km;
  ChiMapGeometry geometry;
  /// Resolution of the internal scan that seeds the exact minimum search.
  std::size_t search_points = 400;
  double search_lo_km = 10.0;
  double search_hi_km = 300.0;
};

struct ChiRowMinimum {
  int Mo = 0;
  double exact_Do_km = 0;
  double exact_kappa = 0;
  std::optional<double> predicted_Do_km;
  std::optional<double> predicted_kappa;
  /// kappa at the predicted D_o over the exact minimum, minus 1.
  std::optional<double> excess;
  bool lower_bound_ok = true;
  std::size_t local_minima = 0;
};

struct ChiMap {
  std::vector<int> Mo;
  std::vector<double> Do_km;
  Eigen::MatrixXd chi;  // rows follow Mo, columns follow Do
  std::vector<ChiRowMinimum> minima;
};

/// HessianSpec on the chi-map geometry for (Mb, Db) and (Mo, Do).
HessianSpec chi_map_spec(const ChiMapGeometry& geo, int Mb, double Db_km, int Mo, double Do_km);

/// Evaluates chi on the grid. Cells are independent, so the result does not
/// depend on `workers`.
ChiMap chi_map(const ChiMapRequest& request, std::size_t workers = 1);

/// Log-spaced grid of `count` points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t count);

}  // namespace corrcg
