#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "corrcg/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conditioning and CG convergence with diffusion-modelled covariances"};
  app.require_subcommand(1);

  corrcg::CommandRequest req;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::size_t realizations = 0;

  for (const char* name : {"spectrum", "chi-map", "convergence", "inflation", "bounds", "lengthscales"}) {
    auto* sub = app.add_subcommand(name);
    auto* config = sub->add_option("--config", req.config_path, "JSON run configuration");
    if (std::string(name) != "lengthscales") config->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed override");
    sub->add_option("--workers", req.workers, "worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--realizations", realizations, "ensemble size override")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << corrcg::Json{{"error", "config"}, {"key", "argv"}, {"message", e.what()}}.dump() << '\n';
    return corrcg::kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  req.command = sub->get_name();
  req.out_dir = out;
  if (sub->count("--seed")) req.overrides.seed = seed;
  if (sub->count("--realizations")) req.overrides.realizations = realizations;
  return corrcg::run_command(req, std::cerr);
}
