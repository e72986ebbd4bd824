#include "corrcg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>

#include "corrcg/errors.hpp"
#include "corrcg/fourier.hpp"
#include "corrcg/parallel.hpp"
#include "corrcg/random.hpp"
#include "corrcg/solver.hpp"

namespace corrcg {
namespace {

// Fixed-shape pairwise summation: the result depends only on the order of `x`.
double pairwise_sum(const double* x, std::size_t count) {
  if (count <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < count; ++i) s += x[i];
    return s;
  }
  const std::size_t half = count / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, count - half);
}

}  // namespace

void validate(const Geometry& geo) {
  if (!(geo.domain_km > 0)) throw DomainError("domain length must be positive");
  if (geo.n < 4) throw DomainError("n must be at least 4");
  if (geo.zeta < 1 || geo.n % geo.zeta != 0) throw DomainError("zeta must divide n");
  if (geo.m() < 4) throw DomainError("m must be at least 4");
}

std::string to_string(AssimKind kind) {
  switch (kind) {
    case AssimKind::TrueR: return "true";
    case AssimKind::Diagonal: return "diagonal";
    case AssimKind::Inflated: return "inflated";
    case AssimKind::Misspecified: return "misspecified";
  }
  return "?";
}

void validate(const Scenario& s) {
  validate(s.geometry);
  validate(s.b);
  validate(s.true_r);
  if (s.b.size != s.geometry.n || std::abs(s.b.h - s.geometry.h_b()) > 1e-9 * s.geometry.h_b())
    throw DomainError("B must live on the model grid");
  if (s.true_r.size != s.geometry.m() || std::abs(s.true_r.h - s.geometry.h_o()) > 1e-9 * s.geometry.h_o())
    throw DomainError("true R must live on the observation grid");
  if (s.assim.kind == AssimKind::Inflated && !(s.assim.upsilon > 0))
    throw DomainError("inflation factor must be positive");
  if (s.assim.kind == AssimKind::Misspecified) {
    if (!s.assim.spec) throw DomainError("mis-specified R needs a correlation spec");
    if (s.assim.spec->size != s.geometry.m()) throw DomainError("mis-specified R must live on the observation grid");
    validate(*s.assim.spec);
  }
  if (s.realizations < 1) throw DomainError("realizations must be at least 1");
  if (!(s.tol > 0)) throw DomainError("tolerance must be positive");
  if (s.max_iter < 1) throw DomainError("max_iter must be at least 1");
}

CorrelationSpec observation_spec(const Scenario& s, int M, double D_km) {
  return CorrelationSpec::make(s.true_r.sigma2, M, D_km, LengthKind::D, s.geometry.h_o(), s.geometry.m());
}

Scenario make_scenario(std::string name, const Geometry& geo, double sigma2_b, int Mb, double Db_km,
                       double sigma2_o, int Mo, double Do_km, AssimR assim) {
  validate(geo);
  Scenario s;
  s.name = std::move(name);
  s.geometry = geo;
  s.b = CorrelationSpec::make(sigma2_b, Mb, Db_km, LengthKind::D, geo.h_b(), geo.n);
  s.true_r = Mo == 0 ? CorrelationSpec::diagonal(sigma2_o, geo.h_o(), geo.m())
                     : CorrelationSpec::make(sigma2_o, Mo, Do_km, LengthKind::D, geo.h_o(), geo.m());
  s.assim = std::move(assim);
  validate(s);
  return s;
}

CorrelationSpec assimilation_spec(const Scenario& s) {
  switch (s.assim.kind) {
    case AssimKind::TrueR: return s.true_r;
    case AssimKind::Diagonal: return CorrelationSpec::diagonal(s.true_r.sigma2, s.true_r.h, s.true_r.size);
    case AssimKind::Inflated:
      return CorrelationSpec::diagonal(s.assim.upsilon * s.true_r.sigma2, s.true_r.h, s.true_r.size);
    case AssimKind::Misspecified:
      if (!s.assim.spec) throw DomainError("mis-specified R needs a correlation spec");
      return *s.assim.spec;
  }
  throw DomainError("unknown assimilation R kind");
}

Eigen::VectorXd truth_field(const Scenario& s) {
  const auto n = static_cast<Eigen::Index>(s.geometry.n);
  if (s.truth == Truth::Zero) return Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    x[j] = std::sin(3.0 * t) + 0.5 * std::cos(7.0 * t);
  }
  return x;
}

Realization realization_from_white(const Scenario& s, const Eigen::VectorXd& white_b,
                                   const Eigen::VectorXd& white_o) {
  Realization out;
  out.x_t = truth_field(s);
  out.x_b = out.x_t + sample_from_white(s.b, white_b);
  const auto zeta = static_cast<Eigen::Index>(s.geometry.zeta);
  const Eigen::VectorXd eps_o = sample_from_white(s.true_r, white_o);
  out.y_o.resize(eps_o.size());
  for (Eigen::Index j = 0; j < eps_o.size(); ++j) out.y_o[j] = out.x_t[j * zeta] + eps_o[j];
  return out;
}

Realization generate_realization(const Scenario& s, std::size_t index) {
  auto rb = substream(s.seed, index, StreamRole::Background);
  auto ro = substream(s.seed, index, StreamRole::Observation);
  const Eigen::VectorXd wb = standard_normal(rb, static_cast<Eigen::Index>(s.geometry.n));
  const Eigen::VectorXd wo = standard_normal(ro, static_cast<Eigen::Index>(s.geometry.m()));
  return realization_from_white(s, wb, wo);
}

double ConvergenceEnsemble::median_iterations() const {
  if (iterations.empty()) return 0.0;
  std::vector<std::size_t> v = iterations;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  if (v.size() % 2 == 1) return static_cast<double>(v[k]);
  return 0.5 * static_cast<double>(v[k - 1] + v[k]);
}

ConvergenceEnsemble run_ensemble(const Scenario& s, std::size_t workers) {
  validate(s);
  const CorrelationSpec r_assim = assimilation_spec(s);
  const std::size_t N = s.realizations;
  std::vector<std::vector<double>> sq(N);
  std::vector<std::size_t> iters(N);

  parallel_for(N, workers, [&](std::size_t k) {
    try {
      const Realization real = generate_realization(s, k);
      const Eigen::VectorXd hx_b = [&] {
        Eigen::VectorXd hx(static_cast<Eigen::Index>(s.geometry.m()));
        for (Eigen::Index j = 0; j < hx.size(); ++j) hx[j] = real.x_b[j * static_cast<Eigen::Index>(s.geometry.zeta)];
        return hx;
      }();
      const Eigen::VectorXd innovation = real.y_o - hx_b;
      const QuadraticSystem sys = build_system(s.b, r_assim, s.geometry.zeta, innovation,
                                               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.geometry.n)));
      PcgOptions opt;
      opt.tol = s.tol;
      opt.max_iter = s.max_iter;
      opt.background_error = real.x_b - real.x_t;
      const PcgResult res = pcg(sys, opt);
      std::vector<double> e(res.trace.rows.size());
      for (std::size_t l = 0; l < e.size(); ++l) {
        const double a = *res.trace.rows[l].analysis_error;
        e[l] = a * a;
      }
      sq[k] = std::move(e);
      iters[k] = res.iterations;
    } catch (const NumericalError& err) {
      throw RealizationError(k, "realization " + std::to_string(k) + ": " + err.what());
    }
  });

  std::size_t len = 0;
  for (const auto& e : sq) len = std::max(len, e.size());
  ConvergenceEnsemble out;
  out.label = s.name;
  out.realizations = N;
  out.seed = s.seed;
  out.iterations = iters;
  out.sigma_a.resize(len);
  std::vector<double> column(N);
  const double denom = static_cast<double>(N) * static_cast<double>(s.geometry.n);
  for (std::size_t l = 0; l < len; ++l) {
    for (std::size_t k = 0; k < N; ++k) column[k] = sq[k][std::min(l, sq[k].size() - 1)];
    out.sigma_a[l] = std::sqrt(pairwise_sum(column.data(), N) / denom);
  }
  out.curve.resize(len);
  for (std::size_t l = 0; l < len; ++l) out.curve[l] = out.sigma_a[l] / out.sigma_a[0];
  out.sigma_a_star = out.sigma_a.back();
  out.sigma_a_opt = sigma_a_opt(s.b, s.true_r, s.geometry.zeta);
  return out;
}

double sigma_a_opt(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta) {
  validate(b);
  validate(r);
  if (zeta < 1 || zeta * r.size != b.size) throw DomainError("zeta * m must equal n");
  const Eigen::VectorXd lb = covariance_eigenvalues(b);
  const Eigen::VectorXd lr = covariance_eigenvalues(r);
  const auto m = static_cast<Eigen::Index>(r.size);
  const double z = static_cast<double>(zeta);
  double trace = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    // Each aliasing group contributes sum(l) - sum(l^2) / (sum(l) + zeta l_R),
    // rearranged so that no large terms cancel.
    double s = 0, cross = 0;
    for (std::size_t p = 0; p < zeta; ++p) {
      const double lp = lb[i + static_cast<Eigen::Index>(p) * m];
      cross += 2.0 * lp * s;
      s += lp;
    }
    trace += (s * z * lr[i] + cross) / (s + z * lr[i]);
  }
  return std::sqrt(trace / static_cast<double>(b.size));
}

double sigma_a_opt(const CorrelationSpec& b) { return std::sqrt(covariance_eigenvalues(b).mean()); }

double sigma_a_opt_dense(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta) {
  validate(b);
  validate(r);
  if (zeta < 1 || zeta * r.size != b.size) throw DomainError("zeta * m must equal n");
  if (b.size > kDenseOptimumLimit)
    throw SizeGuardError("dense optimum limited to n <= " + std::to_string(kDenseOptimumLimit));
  const auto n = static_cast<Eigen::Index>(b.size);
  const auto m = static_cast<Eigen::Index>(r.size);
  const auto z = static_cast<Eigen::Index>(zeta);
  Eigen::MatrixXd A = fourier::circulant_matrix(fourier::circulant_first_row(covariance_eigenvalues(b).cwiseInverse()));
  const Eigen::MatrixXd Rinv =
      fourier::circulant_matrix(fourier::circulant_first_row(covariance_eigenvalues(r).cwiseInverse()));
  for (Eigen::Index p = 0; p < m; ++p)
    for (Eigen::Index q = 0; q < m; ++q) A(p * z, q * z) += Rinv(p, q);
  A = 0.5 * (A + A.transpose());
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("dense Hessian is not numerically positive definite");
  const Eigen::MatrixXd Ainv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return std::sqrt(Ainv.trace() / static_cast<double>(n));
}

InflationResult optimal_inflation(const Scenario& base, std::size_t workers, const InflationSearch& search) {
  if (base.assim.kind != AssimKind::Inflated) throw DomainError("inflation search needs an inflated diagonal R");
  if (!(search.start > 0) || !(search.ratio > 1) || !(search.tol > 0))
    throw DomainError("inflation search needs start > 0, ratio > 1, tol > 0");

  InflationResult out;
  std::map<double, ConvergenceEnsemble> cache;
  auto eval = [&](double u) {
    auto it = cache.find(u);
    if (it != cache.end()) return it->second.sigma_a_star;
    Scenario s = base;
    s.assim.upsilon = u;
    ConvergenceEnsemble e = run_ensemble(s, workers);
    const double v = e.sigma_a_star;
    out.evaluations.emplace_back(u, v);
    cache.emplace(u, std::move(e));
    return v;
  };

  // Geometric scan until sigma_a^* stops decreasing.
  std::vector<double> us{search.start};
  std::vector<double> fs{eval(search.start)};
  while (true) {
    const double u = us.back() * search.ratio;
    if (u > search.ceiling)
      throw SearchRangeError("sigma_a^* still decreasing at upsilon = " + format_double(us.back()));
    const double f = eval(u);
    us.push_back(u);
    fs.push_back(f);
    if (f > fs[fs.size() - 2]) break;
  }
  const std::size_t k = us.size() - 1;
  double a = k >= 2 ? us[k - 2] : us[0];
  double b = us[k];

  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = eval(c), fd = eval(d);
  while (b - a > search.tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = eval(d);
    }
  }
  // Best of everything evaluated; ties go to the smaller factor.
  auto best = cache.begin();
  for (auto it = cache.begin(); it != cache.end(); ++it)
    if (it->second.sigma_a_star < best->second.sigma_a_star) best = it;
  out.upsilon = best->first;
  out.sigma_a_star = best->second.sigma_a_star;
  out.ensemble = best->second;
  return out;
}

std::vector<Scenario> scenario_presets() {
  const Geometry geo;
  std::vector<Scenario> out;
  auto s1 = [&](std::string name, AssimR a) { return make_scenario(std::move(name), geo, 1.0, 8, 60.0, 1.0, 2, 30.0, a); };
  auto s2 = [&](std::string name, AssimR a) {
    return make_scenario(std::move(name), geo, 1.0, 8, 60.0, 1.0, 10, 120.0, a);
  };
  out.push_back(s1("S1-R", AssimR::true_r()));
  out.push_back(s1("S1-R1", AssimR::diagonal()));
  out.push_back(s1("S1-R2", AssimR::inflated(10.5)));
  out.push_back(s2("S2-R", AssimR::true_r()));
  out.push_back(s2("S2-R1", AssimR::diagonal()));
  out.push_back(s2("S2-R2", AssimR::inflated(17.0)));
  const Scenario& ref = out.back();
  out.push_back(s2("S2-R3", AssimR::misspecified(observation_spec(ref, 10, 50.0))));
  out.push_back(s2("S2-R4", AssimR::misspecified(observation_spec(ref, 8, 60.0))));
  out.push_back(s2("S2-R5", AssimR::misspecified(observation_spec(ref, 2, 120.0))));
  // Observations less accurate than the background; shown, not asserted.
  out.push_back(make_scenario("S2-R1-large-sigma-o", geo, 1.0, 8, 60.0, 4.0, 10, 120.0, AssimR::diagonal()));
  return out;
}

Scenario scenario_preset(const std::string& name) {
  for (auto& s : scenario_presets())
    if (s.name == name) return s;
  throw DomainError("unknown scenario preset '" + name + "'");
}

CsvTable ensemble_table(const std::vector<ConvergenceEnsemble>& ensembles) {
  CsvTable t;
  t.header.push_back("iter");
  std::size_t len = 0;
  for (const auto& e : ensembles) {
    t.header.push_back(e.label);
    len = std::max(len, e.curve.size());
  }
  for (std::size_t l = 0; l < len; ++l) {
    std::vector<std::string> row{std::to_string(l)};
    for (const auto& e : ensembles) row.push_back(format_double(e.curve[std::min(l, e.curve.size() - 1)]));
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace corrcg
