#include "corrcg/commands.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "corrcg/errors.hpp"
#include "corrcg/table_io.hpp"

namespace corrcg {
namespace {

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string panel_tag(int Mb, double Db) { return "Mb" + std::to_string(Mb) + "_Db" + format_double(Db); }

Json ensemble_summary(const ConvergenceEnsemble& e, const Scenario& s) {
  HessianSpec h{s.b, assimilation_spec(s), s.geometry.zeta};
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (auto k : e.iterations) {
    lo = std::min(lo, k);
    hi = std::max(hi, k);
  }
  return {{"sigma_a_0", e.sigma_a.front()},
          {"sigma_a_star", e.sigma_a_star},
          {"sigma_a_opt", e.sigma_a_opt},
          {"sigma_a_opt_ratio", e.sigma_a_opt / e.sigma_a.front()},
          {"final_ratio", e.curve.back()},
          {"reduction", e.reduction()},
          {"median_iterations", e.median_iterations()},
          {"min_iterations", lo},
          {"max_iterations", hi},
          {"realizations", e.realizations},
          {"seed", e.seed},
          {"kappa_S", kappa_S(h)},
          {"chi", chi(h)}};
}

}  // namespace

OutputFiles cmd_spectrum(const SpectrumConfig& c) {
  HessianSpec h;
  h.b = c.b.build(c.geometry.h_b(), c.geometry.n);
  h.o = c.r.build(c.geometry.h_o(), c.geometry.m());
  h.zeta = c.geometry.zeta;
  const SpectrumReport rep = spectrum_report(h);

  CsvTable t;
  t.header = {"i", "eigenvalue"};
  for (Eigen::Index i = 0; i < rep.eigenvalues_S.size(); ++i)
    t.add_row({std::to_string(i), format_double(rep.eigenvalues_S[i])});

  Json j{{"kappa_S", rep.kappa_S},
         {"kappa_Su", rep.kappa_Su},
         {"kappa_Su_closed_form", rep.kappa_Su_closed_form},
         {"chi", rep.chi},
         {"bound_infnorm", optional_number(rep.bound_infnorm)},
         {"bound_naive", rep.bound_naive},
         {"bound_eta", rep.bound_eta},
         {"eta_case", to_string(rep.eta_case)},
         {"predicted_min_Lo_km", optional_number(rep.predicted_min_Lo)},
         {"predicted_lower_bound_ok", rep.predicted_lower_bound_ok},
         {"ones_tail", rep.ones_tail},
         {"alpha", alpha(h)},
         {"B", to_json(h.b)},
         {"R", to_json(h.o)}};
  return {{"spectrum.csv", t.str()}, {"spectrum.json", dump(j)}, {"resolved_config.json", dump(to_json(c))}};
}

OutputFiles cmd_chi_map(const ChiMapConfig& c, std::size_t workers) {
  OutputFiles files;
  Json minima = Json::object();
  for (auto [Mb, Db] : c.panels) {
    ChiMapRequest req;
    req.Mb = Mb;
    req.Db_km = Db;
    req.Mo = c.Mo;
    req.Do_km = c.Do_km;
    req.geometry = c.geometry;
    req.search_points = c.search_points;
    req.search_lo_km = c.search_lo_km;
    req.search_hi_km = c.search_hi_km;
    const ChiMap map = chi_map(req, workers);
    const std::string tag = panel_tag(Mb, Db);

    CsvTable grid;
    grid.header.push_back("M_o");
    for (double d : map.Do_km) grid.header.push_back(format_double(d));
    CsvTable longform;
    longform.header = {"M_o", "D_o_km", "chi", "log10_chi"};
    for (std::size_t r = 0; r < map.Mo.size(); ++r) {
      std::vector<std::string> row{std::to_string(map.Mo[r])};
      for (std::size_t k = 0; k < map.Do_km.size(); ++k) {
        const double x = map.chi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
        row.push_back(format_double(x));
        longform.add_row({std::to_string(map.Mo[r]), format_double(map.Do_km[k]), format_double(x),
                          format_double(std::log10(x))});
      }
      grid.add_row(std::move(row));
    }
    Json rows = Json::array();
    for (const auto& m : map.minima) {
      rows.push_back({{"M_o", m.Mo},
                      {"exact_D_o_km", m.exact_Do_km},
                      {"exact_kappa", m.exact_kappa},
                      {"predicted_D_o_km", optional_number(m.predicted_Do_km)},
                      {"predicted_kappa", optional_number(m.predicted_kappa)},
                      {"excess", optional_number(m.excess)},
                      {"lower_bound_ok", m.lower_bound_ok},
                      {"local_minima", m.local_minima}});
    }
    minima[tag] = {{"M_b", Mb}, {"D_b_km", Db}, {"rows", rows}};
    files.emplace_back("chi_map_" + tag + ".csv", grid.str());
    files.emplace_back("chi_map_" + tag + "_long.csv", longform.str());
  }
  files.emplace_back("chi_minima.json", dump(minima));
  files.emplace_back("resolved_config.json", dump(to_json(c)));
  return files;
}

OutputFiles cmd_convergence(const ConvergenceConfig& c, std::size_t workers) {
  std::vector<ConvergenceEnsemble> ens;
  Json summary = Json::object();
  for (const auto& s : c.scenarios) {
    ens.push_back(run_ensemble(s, workers));
    summary[s.name] = ensemble_summary(ens.back(), s);
  }
  return {{"convergence.csv", ensemble_table(ens).str()},
          {"convergence.json", dump(summary)},
          {"resolved_config.json", dump(to_json(c))}};
}

OutputFiles cmd_inflation(const InflationConfig& c, std::size_t workers) {
  const InflationResult res = optimal_inflation(c.scenario, workers, c.search);
  auto evals = res.evaluations;
  std::sort(evals.begin(), evals.end());
  CsvTable t;
  t.header = {"upsilon", "sigma_a_star"};
  for (auto [u, v] : evals) t.add_row({format_double(u), format_double(v)});
  ConvergenceEnsemble best = res.ensemble;
  best.label = c.scenario.name + "@" + format_double(res.upsilon);
  Scenario at = c.scenario;
  at.assim.upsilon = res.upsilon;
  Json j{{"upsilon", res.upsilon}, {"sigma_a_star", res.sigma_a_star}, {"evaluations", evals.size()},
         {"at_optimum", ensemble_summary(best, at)}};
  return {{"inflation_scan.csv", t.str()},
          {"inflation_curve.csv", ensemble_table({best}).str()},
          {"inflation.json", dump(j)},
          {"resolved_config.json", dump(to_json(c))}};
}

std::vector<BoundsRow> bounds_sweep(const BoundsConfig& c) {
  const CorrelationSpec b = c.b.build(c.geometry.h_b(), c.geometry.n);
  std::vector<BoundsRow> rows;
  for (double ratio : c.ratios) {
    const double lo = ratio * b.ltilde();
    HessianSpec h;
    h.b = b;
    h.o = CorrelationSpec::make(c.sigma2_o, c.Mo, lo * c.geometry.h_o(), LengthKind::L, c.geometry.h_o(),
                                c.geometry.m());
    h.zeta = c.geometry.zeta;
    const Eigen::VectorXd so = eigenvalues_So(h);
    const EtaBound eta = bound_eta(h);
    rows.push_back({ratio, lo, kappa_S(h), so.maxCoeff() / so.minCoeff(),
                    c.geometry.n <= kDenseBoundLimit ? bound_infnorm(h) : std::nan(""), bound_naive(h), eta.value,
                    eta.branch});
  }
  return rows;
}

OutputFiles cmd_bounds(const BoundsConfig& c) {
  CsvTable t;
  t.header = {"ratio", "Ltilde_o", "kappa_S", "kappa_So", "bound_infnorm", "bound_naive", "bound_eta", "eta_case"};
  for (const auto& r : bounds_sweep(c))
    t.add_row({format_double(r.ratio), format_double(r.ltilde_o), format_double(r.kappa_S), format_double(r.kappa_So),
               format_double(r.bound_infnorm), format_double(r.bound_naive), format_double(r.bound_eta),
               to_string(r.eta_case)});
  return {{"bounds.csv", t.str()}, {"resolved_config.json", dump(to_json(c))}};
}

OutputFiles cmd_lengthscales(const LengthscalesConfig& c) {
  const auto left = fixed_product_lengths(c.orders, c.product, c.h_km);
  const auto right = fixed_rho_lengths(c.orders, c.rho_km);
  CsvTable t;
  t.header = {"M", "product_L_km", "product_rho_km", "product_D_km", "rho_L_km", "rho_rho_km", "rho_D_km"};
  auto cell = [](double x, int M) { return M >= 2 ? format_double(std::round(x * 10.0) / 10.0) : std::string(); };
  for (std::size_t i = 0; i < c.orders.size(); ++i) {
    const int M = c.orders[i];
    t.add_row({std::to_string(M), cell(left[i].L, 2), cell(left[i].rho, 2), cell(left[i].D, M), cell(right[i].L, 2),
               cell(right[i].rho, 2), cell(right[i].D, M)});
  }
  return {{"lengthscales.csv", t.str()}, {"resolved_config.json", dump(to_json(c))}};
}

int run_command(const CommandRequest& req, std::ostream& err) {
  auto fail = [&err](int code, const std::string& kind, const std::string& key, const std::string& msg) {
    Json j{{"error", kind}, {"message", msg}};
    if (!key.empty()) j["key"] = key;
    err << j.dump() << '\n';
    return code;
  };
  try {
    OutputFiles files;
    const bool needs_config = req.command != "lengthscales";
    if (needs_config && req.config_path.empty()) return fail(kExitConfig, "config", "--config", "--config is required");
    const Json cfg = req.config_path.empty() ? Json(nullptr) : load_config_file(req.config_path);
    if (req.command == "spectrum") {
      files = cmd_spectrum(parse_spectrum_config(cfg));
    } else if (req.command == "chi-map") {
      files = cmd_chi_map(parse_chi_map_config(cfg), req.workers);
    } else if (req.command == "convergence") {
      files = cmd_convergence(parse_convergence_config(cfg, req.overrides), req.workers);
    } else if (req.command == "inflation") {
      files = cmd_inflation(parse_inflation_config(cfg, req.overrides), req.workers);
    } else if (req.command == "bounds") {
      files = cmd_bounds(parse_bounds_config(cfg));
    } else if (req.command == "lengthscales") {
      files = cmd_lengthscales(parse_lengthscales_config(cfg));
    } else {
      return fail(kExitConfig, "config", "command", "unknown command '" + req.command + "'");
    }
    std::filesystem::create_directories(req.out_dir);
    for (const auto& [name, content] : files) write_text_file(req.out_dir / name, content);
    return kExitOk;
  } catch (const ConfigError& e) {
    return fail(kExitConfig, "config", e.key(), e.what());
  } catch (const DomainError& e) {
    return fail(kExitConfig, "config", "", e.what());
  } catch (const RealizationError& e) {
    err << Json{{"error", "numerical"}, {"message", e.what()}, {"realization", e.realization()}}.dump() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, "numerical", "", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(kExitConfig, "io", "", e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumerical, "internal", "", e.what());
  }
}

}  // namespace corrcg
