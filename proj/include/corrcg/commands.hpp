#pragma once

// Subcommands of the command-line tool. Each builds its output files in
// memory; run_command writes them only after everything succeeded.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "corrcg/config.hpp"

namespace corrcg {

/// (file name, contents) pairs, written into the output directory.
using OutputFiles = std::vector<std::pair<std::string, std::string>>;

OutputFiles cmd_spectrum(const SpectrumConfig& c);
OutputFiles cmd_chi_map(const ChiMapConfig& c, std::size_t workers);
OutputFiles cmd_convergence(const ConvergenceConfig& c, std::size_t workers);
OutputFiles cmd_inflation(const InflationConfig& c, std::size_t workers);
OutputFiles cmd_bounds(const BoundsConfig& c);
OutputFiles cmd_lengthscales(const LengthscalesConfig& c);

/// Rows of the bounds sweep, shared with the tests.
struct BoundsRow {
  double ratio;
  double ltilde_o;
  double kappa_S;
  double kappa_So;
  double bound_infnorm;  // NaN when n exceeds the dense limit
  double bound_naive;
  double bound_eta;
  EtaCase eta_case;
};
std::vector<BoundsRow> bounds_sweep(const BoundsConfig& c);

struct CommandRequest {
  std::string command;
  std::string config_path;  // may be empty for lengthscales
  std::filesystem::path out_dir;
  Overrides overrides;
  std::size_t workers = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one subcommand. Failures print a single JSON line on `err` and
/// return the exit code; nothing is written on failure.
int run_command(const CommandRequest& req, std::ostream& err);

}  // namespace corrcg
