#include "corrcg/solver.hpp"

#include <cmath>
#include <string>

#include "corrcg/errors.hpp"
#include "corrcg/fourier.hpp"
#include "corrcg/table_io.hpp"

namespace corrcg {

QuadraticSystem::QuadraticSystem(CorrelationSpec b, CorrelationSpec r, std::size_t zeta, Eigen::VectorXd rhs)
    : b_(b), r_(r), zeta_(zeta), rhs_(std::move(rhs)) {
  validate(b_);
  validate(r_);
  if (zeta_ < 1 || zeta_ * r_.size != b_.size) throw DomainError("zeta * m must equal n");
  if (rhs_.size() != static_cast<Eigen::Index>(b_.size)) throw DomainError("rhs length must equal n");
  root_ = (0.5 * log_covariance_eigenvalues(b_)).array().exp().matrix();
}

Eigen::VectorXd QuadraticSystem::back_transform(const Eigen::VectorXd& v) const {
  if (b_.is_diagonal()) return root_[0] * v;
  return fourier::apply_symmetric_circulant(root_, v);
}

Eigen::VectorXd QuadraticSystem::forward_transform(const Eigen::VectorXd& x) const {
  if (b_.is_diagonal()) return x / root_[0];
  return fourier::apply_symmetric_circulant(root_.cwiseInverse(), x);
}

Eigen::VectorXd QuadraticSystem::select(const Eigen::VectorXd& x) const {
  if (x.size() != static_cast<Eigen::Index>(n())) throw DomainError("select: expected length n");
  Eigen::VectorXd y(static_cast<Eigen::Index>(m()));
  for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = x[j * static_cast<Eigen::Index>(zeta_)];
  return y;
}

Eigen::VectorXd QuadraticSystem::select_adjoint(const Eigen::VectorXd& y) const {
  if (y.size() != static_cast<Eigen::Index>(m())) throw DomainError("select adjoint: expected length m");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n()));
  for (Eigen::Index j = 0; j < y.size(); ++j) x[j * static_cast<Eigen::Index>(zeta_)] = y[j];
  return x;
}

Eigen::VectorXd QuadraticSystem::apply_R_inverse(const Eigen::VectorXd& y) const { return apply_inverse(r_, y); }

Eigen::VectorXd QuadraticSystem::apply_S(const Eigen::VectorXd& v) const {
  if (v.size() != static_cast<Eigen::Index>(n())) throw DomainError("apply_S: expected length n");
  return v + back_transform(select_adjoint(apply_R_inverse(select(back_transform(v)))));
}

QuadraticSystem build_system(const CorrelationSpec& b, const CorrelationSpec& r, std::size_t zeta,
                             const Eigen::VectorXd& innovation, const Eigen::VectorXd& departure) {
  QuadraticSystem shell(b, r, zeta, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.size)));
  if (innovation.size() != static_cast<Eigen::Index>(r.size)) throw DomainError("innovation length must equal m");
  if (departure.size() != static_cast<Eigen::Index>(b.size)) throw DomainError("departure length must equal n");
  Eigen::VectorXd rhs = shell.back_transform(shell.select_adjoint(shell.apply_R_inverse(innovation)));
  if (departure.squaredNorm() > 0) rhs += shell.forward_transform(departure);
  return QuadraticSystem(b, r, zeta, std::move(rhs));
}

Eigen::MatrixXd dense_S(const QuadraticSystem& system) {
  const auto n = static_cast<Eigen::Index>(system.n());
  Eigen::MatrixXd S(n, n);
  for (Eigen::Index j = 0; j < n; ++j) S.col(j) = system.apply_S(Eigen::VectorXd::Unit(n, j));
  return S;
}

void IterationTrace::write_csv(std::ostream& os) const {
  bool anorm = false, analysis = false;
  for (const auto& row : rows) {
    anorm = anorm || row.anorm_error.has_value();
    analysis = analysis || row.analysis_error.has_value();
  }
  os << "iter,residual,rel_residual,cost";
  if (anorm) os << ",anorm_error";
  if (analysis) os << ",analysis_error";
  os << '\n';
  for (const auto& row : rows) {
    os << row.iter << ',' << format_double(row.residual) << ',' << format_double(row.rel_residual) << ','
       << format_double(row.cost);
    if (anorm) os << ',' << (row.anorm_error ? format_double(*row.anorm_error) : "");
    if (analysis) os << ',' << (row.analysis_error ? format_double(*row.analysis_error) : "");
    os << '\n';
  }
}

double anorm_error(const QuadraticSystem& system, const Eigen::VectorXd& iterate, const Eigen::VectorXd& exact) {
  const Eigen::VectorXd e = exact - iterate;
  return std::sqrt(std::max(0.0, e.dot(system.apply_S(e))));
}

PcgResult pcg(const QuadraticSystem& system, const PcgOptions& opt) {
  if (!(opt.tol > 0)) throw DomainError("tolerance must be positive");
  if (opt.max_iter < 1) throw DomainError("max_iter must be at least 1");
  const auto n = static_cast<Eigen::Index>(system.n());
  const Eigen::VectorXd& b = system.rhs();
  if (opt.exact_solution && opt.exact_solution->size() != n) throw DomainError("exact solution length must equal n");
  if (opt.background_error && opt.background_error->size() != n)
    throw DomainError("background error length must equal n");

  const bool need_dx = !opt.observers.empty() || opt.background_error.has_value();
  PcgResult out;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  const double r0 = r.norm();
  double rr = r.squaredNorm();
  std::vector<Eigen::VectorXd> basis;
  if (opt.reorthogonalize && r0 > 0) basis.push_back(r / r0);

  auto record = [&](std::size_t ell) {
    TraceRow row;
    row.iter = ell;
    row.residual = std::sqrt(rr);
    row.rel_residual = r0 > 0 ? row.residual / r0 : 0.0;
    row.cost = -0.5 * v.dot(b + r);
    if (opt.exact_solution) row.anorm_error = anorm_error(system, v, *opt.exact_solution);
    if (need_dx) {
      const Eigen::VectorXd dx = system.back_transform(v);
      if (opt.background_error) row.analysis_error = (*opt.background_error + dx).norm();
      for (const auto& obs : opt.observers) obs(ell, dx);
    }
    out.trace.rows.push_back(row);
  };

  record(0);
  std::size_t ell = 0;
  bool converged = r0 == 0;
  while (!converged && ell < opt.max_iter) {
    const Eigen::VectorXd Sp = system.apply_S(p);
    const double pSp = p.dot(Sp);
    if (!(pSp > 1e-14 * p.squaredNorm()))
      throw BreakdownError(ell + 1, "CG breakdown at iteration " + std::to_string(ell + 1) + ": <p, Sp> = " +
                                        std::to_string(pSp));
    const double step = rr / pSp;
    v += step * p;
    r -= step * Sp;
    if (opt.reorthogonalize) {
      for (const auto& q : basis) r -= q.dot(r) * q;
    }
    const double rr_new = r.squaredNorm();
    ++ell;
    const double beta = rr_new / rr;
    rr = rr_new;
    if (opt.reorthogonalize && rr > 0) basis.push_back(r / std::sqrt(rr));
    record(ell);
    converged = std::sqrt(rr) <= opt.tol * r0;
    p = r + beta * p;
  }
  out.dv = v;
  out.dx = system.back_transform(v);
  out.iterations = ell;
  out.converged = converged;
  return out;
}

GaussNewtonResult gauss_newton(const GaussNewtonProblem& pb, std::size_t K, const PcgOptions& options) {
  if (K < 1 || K > kMaxOuterIterations)
    throw DomainError("outer iteration count must be in [1, " + std::to_string(kMaxOuterIterations) + "]");
  if (pb.x_b.size() != static_cast<Eigen::Index>(pb.b.size)) throw DomainError("x_b length must equal n");
  GaussNewtonResult res;
  res.x = pb.x_b;
  const QuadraticSystem shell(pb.b, pb.r, pb.zeta, Eigen::VectorXd::Zero(pb.x_b.size()));
  // x_k - x_b = U v_k; carrying v_k avoids applying U^{-1} to the departure.
  Eigen::VectorXd v_total = Eigen::VectorXd::Zero(pb.x_b.size());
  for (std::size_t k = 0; k < K; ++k) {
    const Eigen::VectorXd innovation = pb.y_o - shell.select(res.x);
    Eigen::VectorXd rhs = shell.back_transform(shell.select_adjoint(shell.apply_R_inverse(innovation))) - v_total;
    const QuadraticSystem sys(pb.b, pb.r, pb.zeta, std::move(rhs));
    PcgResult inner = pcg(sys, options);
    v_total += inner.dv;
    res.x += inner.dx;
    res.increment_norms.push_back(inner.dx.norm());
    res.inner.push_back(std::move(inner));
  }
  return res;
}

}  // namespace corrcg
