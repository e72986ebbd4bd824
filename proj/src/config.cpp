#include "corrcg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "corrcg/errors.hpp"

namespace corrcg {
namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Reads an object while recording which keys were consumed, so that leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(join(path_, key), "missing required key '" + join(path_, key) + "'");
    return convert<T>(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown key '" + join(path_, it.key()) + "'");
  }

 private:
  template <typename T>
  T convert(const std::string& key) {
    used_.insert(key);
    const Json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number at '" + join(path_, key) + "'");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer())
          throw ConfigError(join(path_, key), "expected an integer at '" + join(path_, key) + "'");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0)
            throw ConfigError(join(path_, key), "expected a non-negative integer at '" + join(path_, key) + "'");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string at '" + join(path_, key) + "'");
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(join(path_, key), "bad value at '" + join(path_, key) + "': " + e.what());
    }
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename T>
std::vector<T> read_list(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array at '" + path + "'");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Json& e = v[i];
    const std::string p = path + "[" + std::to_string(i) + "]";
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer()) throw ConfigError(p, "expected an integer at '" + p + "'");
    } else {
      if (!e.is_number()) throw ConfigError(p, "expected a number at '" + p + "'");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

// Either an explicit list or {"min_km", "max_km", "count"} for a log grid.
std::vector<double> read_km_axis(const Json& v, const std::string& path) {
  if (v.is_array()) return read_list<double>(v, path);
  ObjectReader r(v, path);
  const double lo = r.require<double>("min_km");
  const double hi = r.require<double>("max_km");
  const auto count = r.require<std::size_t>("count");
  r.finish();
  try {
    return log_grid(lo, hi, count);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<double> read_axis(const Json& v, const std::string& path) {
  if (v.is_array()) return read_list<double>(v, path);
  ObjectReader r(v, path);
  const double lo = r.require<double>("min");
  const double hi = r.require<double>("max");
  const auto count = r.require<std::size_t>("count");
  r.finish();
  try {
    return log_grid(lo, hi, count);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

Geometry read_geometry(const Json* v, const std::string& path) {
  Geometry g;
  if (!v) return g;
  ObjectReader r(*v, path);
  g.domain_km = r.get<double>("domain_km", g.domain_km);
  g.n = r.get<std::size_t>("n", g.n);
  g.zeta = r.get<std::size_t>("zeta", g.zeta);
  r.finish();
  try {
    validate(g);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

FactorInput read_factor(const Json& v, const std::string& path, bool allow_diagonal) {
  ObjectReader r(v, path);
  FactorInput f;
  f.sigma2 = r.get<double>("sigma2", 1.0);
  f.M = r.require<int>("M");
  int lengths = 0;
  for (auto [key, kind] : {std::pair{"L_km", LengthKind::L}, {"D_km", LengthKind::D}, {"rho_km", LengthKind::Rho}}) {
    if (r.has(key)) {
      f.length_km = r.require<double>(key);
      f.kind = kind;
      ++lengths;
    }
  }
  r.finish();
  if (f.M == 0) {
    if (!allow_diagonal) throw ConfigError(r.path("M"), "M = 0 is not allowed here");
    if (lengths != 0) throw ConfigError(path, "a diagonal factor (M = 0) takes no length-scale");
  } else if (lengths != 1) {
    throw ConfigError(path, "exactly one of L_km, D_km, rho_km is required at '" + path + "'");
  }
  if (!(f.sigma2 > 0)) throw ConfigError(r.path("sigma2"), "sigma2 must be positive");
  if (f.M < 0 || f.M > kMaxArOrder) throw ConfigError(r.path("M"), "M must be in [0, 10]");
  if (f.M == 1 && f.kind == LengthKind::D) throw ConfigError(r.path("D_km"), "Daley length undefined for M = 1");
  if (f.M > 0 && !(f.length_km > 0)) throw ConfigError(path, "length-scale must be positive");
  return f;
}

RunSettings read_run(ObjectReader& r, const Overrides& o) {
  RunSettings s;
  s.realizations = r.get<std::size_t>("realizations", s.realizations);
  s.tol = r.get<double>("tol", s.tol);
  s.max_iter = r.get<std::size_t>("max_iter", s.max_iter);
  s.seed = r.get<std::uint64_t>("seed", s.seed);
  const std::string truth = r.get<std::string>("truth", "zero");
  if (truth == "zero") {
    s.truth = Truth::Zero;
  } else if (truth == "sinusoid") {
    s.truth = Truth::Sinusoid;
  } else {
    throw ConfigError(r.path("truth"), "truth must be 'zero' or 'sinusoid'");
  }
  if (o.seed) s.seed = *o.seed;
  if (o.realizations) s.realizations = *o.realizations;
  if (s.realizations < 1) throw ConfigError(r.path("realizations"), "realizations must be at least 1");
  if (!(s.tol > 0)) throw ConfigError(r.path("tol"), "tol must be positive");
  if (s.max_iter < 1) throw ConfigError(r.path("max_iter"), "max_iter must be at least 1");
  return s;
}

void apply_run(Scenario& s, const RunSettings& run) {
  s.realizations = run.realizations;
  s.tol = run.tol;
  s.max_iter = run.max_iter;
  s.seed = run.seed;
  s.truth = run.truth;
}

Scenario read_scenario(const Json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return scenario_preset(v.get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(path, e.what());
    }
  }
  ObjectReader r(v, path);
  if (r.has("preset")) {
    const std::string preset = r.require<std::string>("preset");
    Scenario s;
    try {
      s = scenario_preset(preset);
    } catch (const DomainError& e) {
      throw ConfigError(r.path("preset"), e.what());
    }
    s.name = r.get<std::string>("name", s.name);
    if (r.has("upsilon")) {
      if (s.assim.kind != AssimKind::Inflated)
        throw ConfigError(r.path("upsilon"), "upsilon only applies to inflated presets");
      s.assim.upsilon = r.require<double>("upsilon");
    }
    r.finish();
    return s;
  }
  const std::string name = r.require<std::string>("name");
  const Geometry geo = read_geometry(r.has("geometry") ? &r.raw("geometry") : nullptr, r.path("geometry"));
  if (!r.has("B")) throw ConfigError(r.path("B"), "missing required key '" + r.path("B") + "'");
  if (!r.has("R")) throw ConfigError(r.path("R"), "missing required key '" + r.path("R") + "'");
  const FactorInput fb = read_factor(r.raw("B"), r.path("B"), false);
  const FactorInput fr = read_factor(r.raw("R"), r.path("R"), true);
  AssimR assim;
  if (r.has("assim")) {
    ObjectReader a(r.raw("assim"), r.path("assim"));
    const std::string kind = a.require<std::string>("kind");
    if (kind == "true") {
      assim = AssimR::true_r();
    } else if (kind == "diagonal") {
      assim = AssimR::diagonal();
    } else if (kind == "inflated") {
      assim = AssimR::inflated(a.get<double>("upsilon", 1.0));
      if (!(assim.upsilon > 0)) throw ConfigError(a.path("upsilon"), "upsilon must be positive");
    } else if (kind == "misspecified") {
      FactorInput f;
      f.sigma2 = a.get<double>("sigma2", fr.sigma2);
      f.M = a.require<int>("M");
      int lengths = 0;
      for (auto [key, k] : {std::pair{"L_km", LengthKind::L}, {"D_km", LengthKind::D}, {"rho_km", LengthKind::Rho}}) {
        if (a.has(key)) {
          f.length_km = a.require<double>(key);
          f.kind = k;
          ++lengths;
        }
      }
      if (f.M < 1 || f.M > kMaxArOrder) throw ConfigError(a.path("M"), "M must be in [1, 10]");
      if (lengths != 1) throw ConfigError(r.path("assim"), "exactly one of L_km, D_km, rho_km is required");
      try {
        assim = AssimR::misspecified(f.build(geo.h_o(), geo.m()));
      } catch (const DomainError& e) {
        throw ConfigError(r.path("assim"), e.what());
      }
    } else {
      throw ConfigError(a.path("kind"), "kind must be one of true, diagonal, inflated, misspecified");
    }
    a.finish();
  }
  r.finish();
  Scenario s;
  try {
    s.name = name;
    s.geometry = geo;
    s.b = fb.build(geo.h_b(), geo.n);
    s.true_r = fr.build(geo.h_o(), geo.m());
    s.assim = assim;
    validate(s);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

}  // namespace

Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("<line " + std::to_string(line) + ", column " + std::to_string(col) + ">",
                      "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
}

Json load_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("<file>", "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

CorrelationSpec FactorInput::build(double h, std::size_t size) const {
  if (M == 0) return CorrelationSpec::diagonal(sigma2, h, size);
  return CorrelationSpec::make(sigma2, M, length_km, kind, h, size);
}

SpectrumConfig parse_spectrum_config(const Json& j) {
  ObjectReader r(j, "");
  SpectrumConfig c;
  c.geometry = read_geometry(r.has("geometry") ? &r.raw("geometry") : nullptr, "geometry");
  if (!r.has("B")) throw ConfigError("B", "missing required key 'B'");
  if (!r.has("R")) throw ConfigError("R", "missing required key 'R'");
  c.b = read_factor(r.raw("B"), "B", false);
  c.r = read_factor(r.raw("R"), "R", true);
  r.finish();
  return c;
}

ChiMapConfig parse_chi_map_config(const Json& j) {
  ObjectReader r(j, "");
  ChiMapConfig c;
  const Geometry g = read_geometry(r.has("geometry") ? &r.raw("geometry") : nullptr, "geometry");
  c.geometry.domain_km = g.domain_km;
  c.geometry.n = g.n;
  c.geometry.zeta = g.zeta;
  c.geometry.sigma2_b = r.get<double>("sigma2_b", 1.0);
  c.geometry.sigma2_o = r.get<double>("sigma2_o", 1.0);
  if (!(c.geometry.sigma2_b > 0) || !(c.geometry.sigma2_o > 0)) throw ConfigError("sigma2_b", "variances must be positive");
  if (!r.has("panels")) throw ConfigError("panels", "missing required key 'panels'");
  const Json& panels = r.raw("panels");
  if (!panels.is_array() || panels.empty()) throw ConfigError("panels", "panels must be a non-empty array");
  for (std::size_t i = 0; i < panels.size(); ++i) {
    ObjectReader p(panels[i], "panels[" + std::to_string(i) + "]");
    const int Mb = p.require<int>("M_b");
    const double Db = p.require<double>("D_b_km");
    p.finish();
    if (Mb < 2 || Mb > kMaxArOrder) throw ConfigError(p.path("M_b"), "M_b must be in [2, 10]");
    if (!(Db > 0)) throw ConfigError(p.path("D_b_km"), "D_b_km must be positive");
    c.panels.emplace_back(Mb, Db);
  }
  if (r.has("M_o")) c.Mo = read_list<int>(r.raw("M_o"), "M_o");
  for (std::size_t i = 0; i < c.Mo.size(); ++i)
    if (c.Mo[i] < 2 || c.Mo[i] > kMaxArOrder)
      throw ConfigError("M_o[" + std::to_string(i) + "]", "M_o must be in [2, 10]");
  c.Do_km = r.has("D_o_km") ? read_km_axis(r.raw("D_o_km"), "D_o_km") : log_grid(10.0, 300.0, 60);
  for (std::size_t i = 0; i < c.Do_km.size(); ++i)
    if (!(c.Do_km[i] > 0)) throw ConfigError("D_o_km[" + std::to_string(i) + "]", "D_o must be positive");
  if (c.Mo.empty() || c.Do_km.empty()) throw ConfigError("M_o", "grid axes must be non-empty");
  c.search_points = r.get<std::size_t>("search_points", c.search_points);
  c.search_lo_km = r.get<double>("search_min_km", c.search_lo_km);
  c.search_hi_km = r.get<double>("search_max_km", c.search_hi_km);
  if (c.search_points < 3) throw ConfigError("search_points", "search_points must be at least 3");
  if (!(c.search_lo_km > 0) || !(c.search_hi_km > c.search_lo_km))
    throw ConfigError("search_min_km", "search range must satisfy 0 < min < max");
  r.finish();
  return c;
}

ConvergenceConfig parse_convergence_config(const Json& j, const Overrides& o) {
  ObjectReader r(j, "");
  ConvergenceConfig c;
  c.run = read_run(r, o);
  if (!r.has("scenarios")) throw ConfigError("scenarios", "missing required key 'scenarios'");
  const Json& list = r.raw("scenarios");
  if (!list.is_array() || list.empty()) throw ConfigError("scenarios", "scenarios must be a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < list.size(); ++i) {
    Scenario s = read_scenario(list[i], "scenarios[" + std::to_string(i) + "]");
    if (!names.insert(s.name).second)
      throw ConfigError("scenarios[" + std::to_string(i) + "]", "duplicate scenario name '" + s.name + "'");
    apply_run(s, c.run);
    c.scenarios.push_back(std::move(s));
  }
  r.finish();
  return c;
}

InflationConfig parse_inflation_config(const Json& j, const Overrides& o) {
  ObjectReader r(j, "");
  InflationConfig c;
  c.run = read_run(r, o);
  if (!r.has("scenario")) throw ConfigError("scenario", "missing required key 'scenario'");
  c.scenario = read_scenario(r.raw("scenario"), "scenario");
  if (c.scenario.assim.kind != AssimKind::Inflated)
    throw ConfigError("scenario", "inflation search needs an inflated diagonal R");
  apply_run(c.scenario, c.run);
  if (r.has("search")) {
    ObjectReader s(r.raw("search"), "search");
    c.search.start = s.get<double>("start", c.search.start);
    c.search.ratio = s.get<double>("ratio", c.search.ratio);
    c.search.tol = s.get<double>("tol", c.search.tol);
    c.search.ceiling = s.get<double>("ceiling", c.search.ceiling);
    s.finish();
    if (!(c.search.start > 0) || !(c.search.ratio > 1) || !(c.search.tol > 0) || !(c.search.ceiling > c.search.start))
      throw ConfigError("search", "search needs start > 0, ratio > 1, tol > 0, ceiling > start");
  }
  r.finish();
  return c;
}

BoundsConfig parse_bounds_config(const Json& j) {
  ObjectReader r(j, "");
  BoundsConfig c;
  c.geometry = read_geometry(r.has("geometry") ? &r.raw("geometry") : nullptr, "geometry");
  if (!r.has("B")) throw ConfigError("B", "missing required key 'B'");
  c.b = read_factor(r.raw("B"), "B", false);
  c.Mo = r.require<int>("M_o");
  if (c.Mo < 1 || c.Mo > kMaxArOrder) throw ConfigError("M_o", "M_o must be in [1, 10]");
  c.sigma2_o = r.get<double>("sigma2_o", 1.0);
  if (!(c.sigma2_o > 0)) throw ConfigError("sigma2_o", "sigma2_o must be positive");
  c.ratios = r.has("ratio") ? read_axis(r.raw("ratio"), "ratio") : log_grid(0.01, 2.0, 40);
  for (std::size_t i = 0; i < c.ratios.size(); ++i)
    if (!(c.ratios[i] > 0)) throw ConfigError("ratio[" + std::to_string(i) + "]", "ratios must be positive");
  r.finish();
  return c;
}

LengthscalesConfig parse_lengthscales_config(const Json& j) {
  LengthscalesConfig c;
  if (j.is_null()) return c;
  ObjectReader r(j, "");
  if (r.has("orders")) c.orders = read_list<int>(r.raw("orders"), "orders");
  for (std::size_t i = 0; i < c.orders.size(); ++i)
    if (c.orders[i] < 1 || c.orders[i] > kMaxArOrder)
      throw ConfigError("orders[" + std::to_string(i) + "]", "orders must be in [1, 10]");
  c.product = r.get<double>("product", c.product);
  c.rho_km = r.get<double>("rho_km", c.rho_km);
  c.h_km = r.get<double>("h_km", c.h_km);
  if (!(c.product > 1)) throw ConfigError("product", "product must exceed 1");
  if (!(c.rho_km > 0)) throw ConfigError("rho_km", "rho_km must be positive");
  if (!(c.h_km > 0)) throw ConfigError("h_km", "h_km must be positive");
  r.finish();
  return c;
}

Json to_json(const Geometry& g) { return {{"domain_km", g.domain_km}, {"n", g.n}, {"zeta", g.zeta}}; }

Json to_json(const FactorInput& f) {
  Json j{{"sigma2", f.sigma2}, {"M", f.M}};
  if (f.M > 0) {
    const char* key = f.kind == LengthKind::L ? "L_km" : f.kind == LengthKind::D ? "D_km" : "rho_km";
    j[key] = f.length_km;
  }
  return j;
}

Json to_json(const CorrelationSpec& s) {
  Json j{{"sigma2", s.sigma2}, {"M", s.M}, {"h_km", s.h}, {"size", s.size}};
  if (s.M > 0) {
    j["L_km"] = s.L;
    j["rho_km"] = length_convert(s.L, s.M, LengthKind::L, LengthKind::Rho);
    if (s.M >= 2) j["D_km"] = length_convert(s.L, s.M, LengthKind::L, LengthKind::D);
    j["discretization_warning"] = s.discretization_warning();
  }
  return j;
}

Json to_json(const Scenario& s) {
  Json assim{{"kind", to_string(s.assim.kind)}};
  if (s.assim.kind == AssimKind::Inflated) assim["upsilon"] = s.assim.upsilon;
  if (s.assim.kind == AssimKind::Misspecified && s.assim.spec) assim["spec"] = to_json(*s.assim.spec);
  return {{"name", s.name},
          {"geometry", to_json(s.geometry)},
          {"B", to_json(s.b)},
          {"R", to_json(s.true_r)},
          {"assim", assim},
          {"realizations", s.realizations},
          {"tol", s.tol},
          {"max_iter", s.max_iter},
          {"seed", s.seed},
          {"truth", s.truth == Truth::Zero ? "zero" : "sinusoid"}};
}

Json to_json(const RunSettings& r) {
  return {{"realizations", r.realizations},
          {"tol", r.tol},
          {"max_iter", r.max_iter},
          {"seed", r.seed},
          {"truth", r.truth == Truth::Zero ? "zero" : "sinusoid"}};
}

Json to_json(const SpectrumConfig& c) {
  return {{"geometry", to_json(c.geometry)}, {"B", to_json(c.b)}, {"R", to_json(c.r)}};
}

Json to_json(const ChiMapConfig& c) {
  Json panels = Json::array();
  for (auto [Mb, Db] : c.panels) panels.push_back({{"M_b", Mb}, {"D_b_km", Db}});
  return {{"geometry", {{"domain_km", c.geometry.domain_km}, {"n", c.geometry.n}, {"zeta", c.geometry.zeta}}},
          {"sigma2_b", c.geometry.sigma2_b},
          {"sigma2_o", c.geometry.sigma2_o},
          {"panels", panels},
          {"M_o", c.Mo},
          {"D_o_km", c.Do_km},
          {"search_points", c.search_points},
          {"search_min_km", c.search_lo_km},
          {"search_max_km", c.search_hi_km}};
}

Json to_json(const ConvergenceConfig& c) {
  Json list = Json::array();
  for (const auto& s : c.scenarios) list.push_back(to_json(s));
  Json j = to_json(c.run);
  j["scenarios"] = list;
  return j;
}

Json to_json(const InflationConfig& c) {
  Json j = to_json(c.run);
  j["scenario"] = to_json(c.scenario);
  j["search"] = {{"start", c.search.start}, {"ratio", c.search.ratio}, {"tol", c.search.tol}, {"ceiling", c.search.ceiling}};
  return j;
}

Json to_json(const BoundsConfig& c) {
  return {{"geometry", to_json(c.geometry)}, {"B", to_json(c.b)}, {"M_o", c.Mo}, {"sigma2_o", c.sigma2_o}, {"ratio", c.ratios}};
}

Json to_json(const LengthscalesConfig& c) {
  return {{"orders", c.orders}, {"product", c.product}, {"rho_km", c.rho_km}, {"h_km", c.h_km}};
}

}  // namespace corrcg
