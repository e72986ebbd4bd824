#pragma once

// Strict JSON run configurations. Unknown keys are rejected and every
// physical length carries its unit in the key name (D_km, domain_km, ...).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corrcg/experiment.hpp"
#include "corrcg/spectral.hpp"

namespace corrcg {

using Json = nlohmann::json;

/// Parses text, reporting syntax errors with line and column.
Json parse_config_text(const std::string& text);
Json load_config_file(const std::string& path);

/// One covariance factor before it is placed on a grid.
struct FactorInput {
  double sigma2 = 1.0;
  int M = 0;
  double length_km = 0.0;
  LengthKind kind = LengthKind::D;

  CorrelationSpec build(double h, std::size_t size) const;
};

struct SpectrumConfig {
  Geometry geometry;
  FactorInput b;
  FactorInput r;
};

struct ChiMapConfig {
  ChiMapGeometry geometry;
  std::vector<std::pair<int, double>> panels;  // (M_b, D_b km)
  std::vector<int> Mo{2, 4, 6, 8, 10};
  std::vector<double> Do_km;
  std::size_t search_points = 400;
  double search_lo_km = 10.0;
  double search_hi_km = 300.0;
};

struct RunSettings {
  std::size_t realizations = 1000;
  double tol = 1e-6;
  std::size_t max_iter = 2000;
  std::uint64_t seed = 1;
  Truth truth = Truth::Zero;
};

struct ConvergenceConfig {
  RunSettings run;
  std::vector<Scenario> scenarios;
};

struct InflationConfig {
  RunSettings run;
  Scenario scenario;
  InflationSearch search;
};

struct BoundsConfig {
  Geometry geometry;
  FactorInput b;
  int Mo = 2;
  double sigma2_o = 1.0;
  /// Values of Ltilde_o / Ltilde_b to sweep.
  std::vector<double> ratios;
};

struct LengthscalesConfig {
  std::vector<int> orders{2, 4, 6, 8, 10};
  double product = 1e10;
  double rho_km = 80.0;
  double h_km = 1.0;
};

/// Command-line overrides applied after parsing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> realizations;
};

SpectrumConfig parse_spectrum_config(const Json& j);
ChiMapConfig parse_chi_map_config(const Json& j);
ConvergenceConfig parse_convergence_config(const Json& j, const Overrides& o = {});
InflationConfig parse_inflation_config(const Json& j, const Overrides& o = {});
BoundsConfig parse_bounds_config(const Json& j);
LengthscalesConfig parse_lengthscales_config(const Json& j);

Json to_json(const Geometry& g);
Json to_json(const FactorInput& f);
Json to_json(const CorrelationSpec& s);
Json to_json(const Scenario& s);
Json to_json(const RunSettings& r);
Json to_json(const SpectrumConfig& c);
Json to_json(const ChiMapConfig& c);
Json to_json(const ConvergenceConfig& c);
Json to_json(const InflationConfig& c);
Json to_json(const BoundsConfig& c);
Json to_json(const LengthscalesConfig& c);

}  // namespace corrcg
