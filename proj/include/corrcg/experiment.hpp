#pragma once

// Monte-Carlo 1D-Var experiments: truth, background and observations drawn
// from B and the true R, minimised with a possibly different R.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "corrcg/covariance.hpp"
#include "corrcg/table_io.hpp"

namespace corrcg {

struct Geometry {
  double domain_km = 2000.0;
  std::size_t n = 500;
  std::size_t zeta = 2;

  double h_b() const { return domain_km / static_cast<double>(n); }
  double h_o() const { return h_b() * static_cast<double>(zeta); }
  std::size_t m() const { return n / zeta; }
};

void validate(const Geometry& geo);

enum class AssimKind { TrueR, Diagonal, Inflated, Misspecified };
std::string to_string(AssimKind kind);

/// The R used inside the cost function.
struct AssimR {
  AssimKind kind = AssimKind::TrueR;
  double upsilon = 1.0;                // Inflated only
  std::optional<CorrelationSpec> spec;  // Misspecified only

  static AssimR true_r() { return {}; }
  static AssimR diagonal() { return {AssimKind::Diagonal, 1.0, std::nullopt}; }
  static AssimR inflated(double upsilon) { return {AssimKind::Inflated, upsilon, std::nullopt}; }
  static AssimR misspecified(CorrelationSpec spec) { return {AssimKind::Misspecified, 1.0, spec}; }
};

enum class Truth { Zero, Sinusoid };

struct Scenario {
  std::string name;
  Geometry geometry;
  CorrelationSpec b;
  CorrelationSpec true_r;
  AssimR assim;
  std::size_t realizations = 1000;
  double tol = 1e-6;
  std::size_t max_iter = 2000;
  std::uint64_t seed = 1;
  Truth truth = Truth::Zero;
};

void validate(const Scenario& s);

/// Scenario on `geo` with B = (Mb, Db) and true R = (Mo, Do), D in km.
Scenario make_scenario(std::string name, const Geometry& geo, double sigma2_b, int Mb, double Db_km,
                       double sigma2_o, int Mo, double Do_km, AssimR assim);

/// Observation-grid spec with the given order and Daley length (km).
CorrelationSpec observation_spec(const Scenario& s, int M, double D_km);

CorrelationSpec assimilation_spec(const Scenario& s);
Eigen::VectorXd truth_field(const Scenario& s);

struct Realization {
  Eigen::VectorXd x_t;
  Eigen::VectorXd x_b;
  Eigen::VectorXd y_o;
};

/// Draws the background and observation noise from substreams of (seed, index).
Realization generate_realization(const Scenario& s, std::size_t index);
/// Same construction from explicit white-noise vectors (lengths n and m).
Realization realization_from_white(const Scenario& s, const Eigen::VectorXd& white_b,
                                   const Eigen::VectorXd& white_o);

struct ConvergenceEnsemble {
  std::string label;
  std::vector<double> sigma_a;  // sigma_a^(l)
  std::vector<double> curve;    // sigma_a^(l) / sigma_a^(0)
  double sigma_a_star = 0;
  double sigma_a_opt = 0;
  std::size_t realizations = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> iterations;

  double median_iterations() const;
  /// 1 - sigma_a^* / sigma_a^(0).
  double reduction() const { return curve.empty() ? 0.0 : 1.0 - curve.back(); }
};

ConvergenceEnsemble run_ensemble(const Scenario& s, std::size_t workers = 0);

/// sqrt(Tr[(B^{-1} + H^T R^{-1} H)^{-1}] / n), evaluated per aliasing group in
/// Fourier space.
double sigma_a_opt(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta);
/// Without observations the analysis is the background.
double sigma_a_opt(const CorrelationSpec& b);

inline constexpr std::size_t kDenseOptimumLimit = 2048;
/// Dense reference for the same trace; only meaningful for well-conditioned B and R.
double sigma_a_opt_dense(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta);

struct InflationSearch {
  double start = 1.0;
  double ratio = 1.5;
  double tol = 0.25;
  double ceiling = 1e3;
};

struct InflationResult {
  double upsilon = 0;
  double sigma_a_star = 0;
  std::vector<std::pair<double, double>> evaluations;  // (upsilon, sigma_a^*) in call order
  ConvergenceEnsemble ensemble;                          // at the returned upsilon
};

/// Minimises sigma_a^* over the inflation factor. The scenario must use an
/// inflated diagonal R; its upsilon is ignored.
InflationResult optimal_inflation(const Scenario& s, std::size_t workers = 0, const InflationSearch& search = {});

/// Named presets on the reference geometry (2000 km, n = 500, zeta = 2).
std::vector<Scenario> scenario_presets();
/// Lookup by name; throws DomainError when absent.
Scenario scenario_preset(const std::string& name);

/// One column per ensemble, shorter curves padded with their final value.
CsvTable ensemble_table(const std::vector<ConvergenceEnsemble>& ensembles);

}  // namespace corrcg
