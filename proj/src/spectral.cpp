#include "corrcg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "corrcg/errors.hpp"
#include "corrcg/fourier.hpp"
#include "corrcg/parallel.hpp"

namespace corrcg {
namespace {

double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double s = 0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

// Minimises f on [a, b] by golden-section search.
template <typename F>
double golden_section(F&& f, double a, double b, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

}  // namespace

HessianSpec HessianSpec::uncorrelated() const {
  HessianSpec u = *this;
  u.o = CorrelationSpec::diagonal(o.sigma2, o.h, o.size);
  return u;
}

void validate(const HessianSpec& spec) {
  validate(spec.b);
  validate(spec.o);
  if (spec.zeta < 1) throw DomainError("selection stride must be positive");
  if (spec.zeta * spec.m() != spec.n())
    throw DomainError("selection stride " + std::to_string(spec.zeta) + " times m = " + std::to_string(spec.m()) +
                      " does not equal n = " + std::to_string(spec.n()));
  const double ho = static_cast<double>(spec.zeta) * spec.b.h;
  if (std::abs(spec.o.h - ho) > 1e-9 * ho) throw DomainError("observation spacing must equal zeta * h_b");
}

double alpha(const HessianSpec& spec) {
  return spec.b.amplitude() * spec.b.h / (spec.o.amplitude() * spec.o.h);
}

Eigen::VectorXd eigenvalues_S(const HessianSpec& spec) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(spec.n());
  const auto m = static_cast<Eigen::Index>(spec.m());
  const Eigen::VectorXd logB = log_covariance_eigenvalues(spec.b);
  const Eigen::VectorXd logR = log_covariance_eigenvalues(spec.o);
  const double log_zeta = std::log(static_cast<double>(spec.zeta));
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(n);
  std::vector<double> terms(spec.zeta);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < spec.zeta; ++r)
      terms[r] = logB[i + static_cast<Eigen::Index>(r) * m] - logR[i] - log_zeta;
    lambda[i] = 1.0 + std::exp(log_sum_exp(terms));
  }
  return lambda;
}

Eigen::VectorXd eigenvalues_HBHt(const CorrelationSpec& b, std::size_t zeta) {
  validate(b);
  if (zeta < 1 || b.size % zeta != 0)
    throw DomainError("selection stride " + std::to_string(zeta) + " does not divide n = " + std::to_string(b.size));
  const auto m = static_cast<Eigen::Index>(b.size / zeta);
  const Eigen::VectorXd lambda = covariance_eigenvalues(b);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t r = 0; r < zeta; ++r) out[i] += lambda[i + static_cast<Eigen::Index>(r) * m];
    out[i] /= static_cast<double>(zeta);
  }
  return out;
}

Eigen::VectorXd eigenvalues_So(const HessianSpec& spec) {
  validate(spec);
  const auto m = static_cast<Eigen::Index>(spec.m());
  const double a = alpha(spec);
  const double lo2 = spec.o.is_diagonal() ? 0.0 : spec.o.ltilde() * spec.o.ltilde();
  const double lbo = spec.b.L / spec.o.h;
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = sin2(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m));
    const double log_ratio = spec.o.M * std::log1p(4.0 * lo2 * s) - spec.b.M * std::log1p(4.0 * lbo * lbo * s);
    out[i] = 1.0 + a * std::exp(log_ratio);
  }
  return out;
}

double kappa_S(const HessianSpec& spec) {
  const Eigen::VectorXd lambda = eigenvalues_S(spec);
  // The tail of ones fixes the minimum exactly when m < n.
  if (spec.m() < spec.n()) return lambda.maxCoeff();
  return lambda.maxCoeff() / lambda.minCoeff();
}

double kappa_Su(const HessianSpec& spec) { return kappa_S(spec.uncorrelated()); }

double kappa_Su_closed_form(const HessianSpec& spec) {
  validate(spec);
  if (spec.m() == spec.n()) return kappa_Su(spec);
  const double alpha_u = spec.b.sigma2 * nu(spec.b.M) * spec.b.L / (spec.o.sigma2 * spec.b.h);
  const double lb2 = spec.b.ltilde() * spec.b.ltilde();
  double sum = 0;
  for (std::size_t r = 0; r < spec.zeta; ++r) {
    const double s = sin2(std::numbers::pi * static_cast<double>(r) / static_cast<double>(spec.zeta));
    sum += std::exp(-spec.b.M * std::log1p(4.0 * lb2 * s));
  }
  return 1.0 + alpha_u * sum;
}

double chi(const HessianSpec& spec) { return kappa_S(spec) / kappa_Su(spec); }

double bound_naive(const HessianSpec& spec) {
  validate(spec);
  const double log_max_b = log_covariance_eigenvalues(spec.b).maxCoeff();
  const double log_min_r = log_covariance_eigenvalues(spec.o).minCoeff();
  // lambda_max(H H^T) = 1 for a selection operator.
  return 1.0 + std::exp(log_max_b - log_min_r);
}

double bound_infnorm(const HessianSpec& spec) {
  validate(spec);
  if (spec.n() > kDenseBoundLimit)
    throw SizeGuardError("dense bound limited to n <= " + std::to_string(kDenseBoundLimit));
  const auto m = static_cast<Eigen::Index>(spec.m());
  const auto zeta = static_cast<Eigen::Index>(spec.zeta);
  const Eigen::MatrixXd B = dense_covariance(spec.b);
  Eigen::MatrixXd HBHt(m, m);
  for (Eigen::Index p = 0; p < m; ++p)
    for (Eigen::Index q = 0; q < m; ++q) HBHt(p, q) = B(p * zeta, q * zeta);
  // R is circulant, so its symmetric inverse square root shares the Fourier basis.
  const Eigen::VectorXd inv_root = (-0.5 * log_covariance_eigenvalues(spec.o)).array().exp().matrix();
  const Eigen::MatrixXd Vinv = fourier::circulant_matrix(fourier::circulant_first_row(inv_root));
  const Eigen::MatrixXd W = Vinv * HBHt * Vinv;
  return 1.0 + W.cwiseAbs().rowwise().sum().maxCoeff();
}

std::string to_string(EtaCase c) { return c == EtaCase::ThreeFactor ? "three_factor" : "max"; }

EtaBound bound_eta(double a, int Mo, double lo, int Mb, double lbo) {
  const double lo2 = lo * lo, lbo2 = lbo * lbo;
  const bool c1 = lo2 * Mo > lbo2 * Mb;
  const bool c2 = Mo < Mb;
  const bool c3 = lbo2 * Mb - lo2 * Mo > 4.0 * lbo2 * lo2 * (Mo - Mb);
  if (c1 && c2 && c3) {
    const double log_term = Mb * std::log(lo2 / Mb) + Mo * std::log(Mo / lbo2) +
                            (Mb - Mo) * std::log((Mb - Mo) / (lo2 - lbo2));
    return {1.0 + a * std::exp(log_term), EtaCase::ThreeFactor};
  }
  const double log_ratio = Mo * std::log1p(4.0 * lo2) - Mb * std::log1p(4.0 * lbo2);
  return {1.0 + a * std::exp(std::max(log_ratio, 0.0)), EtaCase::Max};
}

EtaBound bound_eta(const HessianSpec& spec) {
  validate(spec);
  const double lo = spec.o.is_diagonal() ? 0.0 : spec.o.ltilde();
  return bound_eta(alpha(spec), spec.o.M, lo, spec.b.M, spec.b.L / spec.o.h);
}

PredictedMinimum predicted_min_Lo(int Mo, int Mb, double lbo) {
  detail::check_order(Mo);
  detail::check_order(Mb);
  if (!(lbo > 0)) throw DomainError("Ltilde_b/o must be positive");
  double lo;
  if (Mo >= Mb) {
    lo = 0.5 * std::sqrt(std::expm1(static_cast<double>(Mb) / Mo * std::log1p(4.0 * lbo * lbo)));
  } else {
    lo = lbo * std::sqrt((2.0 * Mb - 1.0) / (2.0 * Mo - 1.0));
  }
  return {lo, lo * std::sqrt(2.0 * Mo - 1.0) > 0.5};
}

double corollary3_Mb_limit(double ltilde_min) {
  if (!(ltilde_min > 0)) throw DomainError("Ltilde_min must be positive");
  return 2.0 * (1.0 + 4.0 * ltilde_min * ltilde_min);
}

double cg_error_bound(double kappa, std::size_t ell) {
  if (!(kappa >= 1.0)) throw DomainError("condition number must be at least 1");
  if (ell == 0) return 2.0;
  const double s = std::sqrt(kappa);
  return 2.0 * std::pow((s - 1.0) / (s + 1.0), static_cast<double>(ell));
}

SpectrumReport spectrum_report(const HessianSpec& spec) {
  SpectrumReport rep;
  rep.eigenvalues_S = eigenvalues_S(spec);
  rep.ones_tail = spec.m() < spec.n();
  rep.kappa_S = rep.ones_tail ? rep.eigenvalues_S.maxCoeff() : rep.eigenvalues_S.maxCoeff() / rep.eigenvalues_S.minCoeff();
  rep.kappa_Su = kappa_Su(spec);
  rep.kappa_Su_closed_form = kappa_Su_closed_form(spec);
  rep.chi = rep.kappa_S / rep.kappa_Su;
  if (spec.n() <= kDenseBoundLimit) rep.bound_infnorm = bound_infnorm(spec);
  rep.bound_naive = bound_naive(spec);
  const EtaBound eta = bound_eta(spec);
  rep.bound_eta = eta.value;
  rep.eta_case = eta.branch;
  if (!spec.o.is_diagonal()) {
    const PredictedMinimum p = predicted_min_Lo(spec.o.M, spec.b.M, spec.b.L / spec.o.h);
    rep.predicted_min_Lo = p.ltilde_o * spec.o.h;
    rep.predicted_lower_bound_ok = p.lower_bound_ok;
  }
  return rep;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0) || !(hi >= lo) || count == 0) throw DomainError("log grid needs 0 < lo <= hi and count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k) g[k] = std::exp(a + (b - a) * static_cast<double>(k) / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

HessianSpec chi_map_spec(const ChiMapGeometry& geo, int Mb, double Db_km, int Mo, double Do_km) {
  if (geo.zeta < 1 || geo.n % geo.zeta != 0) throw DomainError("zeta must divide n");
  const double hb = geo.domain_km / static_cast<double>(geo.n);
  const std::size_t m = geo.n / geo.zeta;
  HessianSpec spec;
  spec.b = CorrelationSpec::make(geo.sigma2_b, Mb, Db_km, LengthKind::D, hb, geo.n);
  spec.o = CorrelationSpec::make(geo.sigma2_o, Mo, Do_km, LengthKind::D, hb * static_cast<double>(geo.zeta), m);
  spec.zeta = geo.zeta;
  return spec;
}

ChiMap chi_map(const ChiMapRequest& req, std::size_t workers) {
  for (int Mo : req.Mo)
    if (Mo < 2 || Mo > kMaxArOrder) throw DomainError("chi map rows need 2 <= M_o <= 10");
  for (double d : req.Do_km)
    if (!(d > 0)) throw DomainError("chi map D_o values must be positive");
  if (req.search_points < 3) throw DomainError("minimum search needs at least 3 scan points");

  ChiMap map;
  map.Mo = req.Mo;
  map.Do_km = req.Do_km;
  const std::size_t rows = req.Mo.size(), cols = req.Do_km.size();
  map.chi.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  parallel_for(rows * cols, workers, [&](std::size_t k) {
    const std::size_t r = k / cols, c = k % cols;
    map.chi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
        chi(chi_map_spec(req.geometry, req.Mb, req.Db_km, req.Mo[r], req.Do_km[c]));
  });

  const std::vector<double> scan = log_grid(req.search_lo_km, req.search_hi_km, req.search_points);
  map.minima.resize(rows);
  parallel_for(rows, workers, [&](std::size_t r) {
    const int Mo = req.Mo[r];
    auto kappa_at = [&](double Do) { return kappa_S(chi_map_spec(req.geometry, req.Mb, req.Db_km, Mo, Do)); };
    std::vector<double> k(scan.size());
    for (std::size_t j = 0; j < scan.size(); ++j) k[j] = kappa_at(scan[j]);

    ChiRowMinimum row;
    row.Mo = Mo;
    // First strict minimum breaks ties toward the smaller D_o.
    const std::size_t best = static_cast<std::size_t>(std::min_element(k.begin(), k.end()) - k.begin());
    for (std::size_t j = 0; j < k.size(); ++j) {
      const bool left = j == 0 || k[j] < k[j - 1];
      const bool right = j + 1 == k.size() || k[j] < k[j + 1];
      if (left && right) ++row.local_minima;
    }
    const double a = std::log(scan[best == 0 ? 0 : best - 1]);
    const double b = std::log(scan[std::min(best + 1, scan.size() - 1)]);
    double x = golden_section([&](double t) { return kappa_at(std::exp(t)); }, a, b, 1e-9);
    row.exact_Do_km = std::exp(x);
    row.exact_kappa = kappa_at(row.exact_Do_km);
    if (k[best] < row.exact_kappa) {
      row.exact_Do_km = scan[best];
      row.exact_kappa = k[best];
    }

    const HessianSpec ref = chi_map_spec(req.geometry, req.Mb, req.Db_km, Mo, req.Db_km);
    const PredictedMinimum p = predicted_min_Lo(Mo, req.Mb, ref.b.L / ref.o.h);
    row.lower_bound_ok = p.lower_bound_ok;
    const double Lo = p.ltilde_o * ref.o.h;
    row.predicted_Do_km = length_convert(Lo, Mo, LengthKind::L, LengthKind::D);
    row.predicted_kappa = kappa_at(*row.predicted_Do_km);
    row.excess = *row.predicted_kappa / row.exact_kappa - 1.0;
    map.minima[r] = row;
  });
  return map;
}

}  // namespace corrcg
