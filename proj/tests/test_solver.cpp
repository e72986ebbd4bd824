#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "corrcg/random.hpp"
#include "corrcg/solver.hpp"
#include "corrcg/spectral.hpp"

using namespace corrcg;

namespace {

struct Case {
  CorrelationSpec b, r;
  std::size_t zeta;
};

Case small_case(std::size_t n = 64, std::size_t zeta = 2, int Mb = 4, double Lb = 2.0, int Mo = 2, double Lo = 2.0,
                double s2o = 0.5) {
  return {CorrelationSpec::make(1.0, Mb, Lb, LengthKind::L, 1.0, n),
          Mo == 0 ? CorrelationSpec::diagonal(s2o, double(zeta), n / zeta)
                  : CorrelationSpec::make(s2o, Mo, Lo, LengthKind::L, double(zeta), n / zeta),
          zeta};
}

Eigen::VectorXd random_vec(std::size_t n, std::uint64_t seed) {
  auto rng = substream(seed, 0, StreamRole::Auxiliary);
  return standard_normal(rng, n);
}

QuadraticSystem system_for(const Case& c, std::uint64_t seed) {
  return build_system(c.b, c.r, c.zeta, random_vec(c.r.size, seed), Eigen::VectorXd::Zero(c.b.size));
}

Eigen::MatrixXd selection(std::size_t n, std::size_t zeta) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n / zeta), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < H.rows(); ++j) H(j, j * static_cast<Eigen::Index>(zeta)) = 1.0;
  return H;
}

Eigen::VectorXd dense_solution_v(const QuadraticSystem& s) { return dense_S(s).ldlt().solve(s.rhs()); }

}  // namespace

TEST(System, ApplyMatchesDenseAssembly) {
  const Case c = small_case();
  const QuadraticSystem s = system_for(c, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_covariance(c.b));
  const Eigen::MatrixXd U = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  const Eigen::MatrixXd H = selection(64, 2);
  const Eigen::MatrixXd Rinv = dense_covariance(c.r).inverse();
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(64, 64) + U * H.transpose() * Rinv * H * U;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Eigen::VectorXd v = random_vec(64, 100 + k);
    const Eigen::VectorXd ref = S * v;
    EXPECT_LT((s.apply_S(v) - ref).norm() / ref.norm(), 1e-10);
  }
}

TEST(System, SymmetricPositiveDefinite) {
  const QuadraticSystem s = system_for(small_case(64, 1, 6, 3.0, 3, 1.0), 2);
  const Eigen::MatrixXd S = dense_S(s);
  EXPECT_LT((S - S.transpose()).cwiseAbs().maxCoeff(), 1e-10 * S.cwiseAbs().maxCoeff());
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Eigen::VectorXd v = random_vec(64, 200 + k);
    EXPECT_GT(v.dot(s.apply_S(v)), 0.0);
  }
}

TEST(System, DiagonalObservationError) {
  const Case c = small_case(32, 2, 3, 2.0, 0, 0.0, 0.25);
  const QuadraticSystem s = system_for(c, 3);
  const Eigen::VectorXd v = random_vec(32, 4);
  const Eigen::VectorXd Uv = s.back_transform(v);
  const Eigen::VectorXd ref = v + s.back_transform(s.select_adjoint(s.select(Uv))) / 0.25;
  EXPECT_LT((s.apply_S(v) - ref).norm(), 1e-12 * ref.norm());
}

TEST(System, TransformsRoundTrip) {
  const QuadraticSystem s = system_for(small_case(), 5);
  const Eigen::VectorXd v = random_vec(64, 6);
  EXPECT_LT((s.forward_transform(s.back_transform(v)) - v).norm(), 1e-9 * v.norm());
}

TEST(System, DimensionChecks) {
  const Case c = small_case();
  EXPECT_THROW(build_system(c.b, c.r, 2, Eigen::VectorXd::Zero(31), Eigen::VectorXd::Zero(64)), DomainError);
  EXPECT_THROW(build_system(c.b, c.r, 2, Eigen::VectorXd::Zero(32), Eigen::VectorXd::Zero(63)), DomainError);
  EXPECT_THROW(build_system(c.b, c.r, 3, Eigen::VectorXd::Zero(32), Eigen::VectorXd::Zero(64)), DomainError);
}

TEST(Pcg, ZeroRightHandSide) {
  const Case c = small_case();
  const QuadraticSystem s = build_system(c.b, c.r, 2, Eigen::VectorXd::Zero(32), Eigen::VectorXd::Zero(64));
  const PcgResult res = pcg(s);
  EXPECT_EQ(res.iterations, 0u);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.dx.norm(), 0.0);
}

TEST(Pcg, IdentitySystemOneIteration) {
  // Noise so large the observation term vanishes below rounding.
  const Case c = small_case(32, 1, 2, 1.0, 0, 0.0, 1e40);
  const Eigen::VectorXd b = random_vec(32, 7);
  const QuadraticSystem s(c.b, c.r, 1, b);
  const PcgResult res = pcg(s);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_LT((res.dv - b).norm(), 1e-14 * b.norm());
}

TEST(Pcg, MatchesDenseSolveInANorm) {
  const QuadraticSystem s = system_for(small_case(64, 2, 4, 2.5, 2, 1.5), 8);
  const Eigen::VectorXd vstar = dense_solution_v(s);
  PcgOptions opt;
  opt.tol = 1e-10;
  const PcgResult res = pcg(s, opt);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(anorm_error(s, res.dv, vstar), 1e-6 * anorm_error(s, Eigen::VectorXd::Zero(64), vstar));
}

TEST(Pcg, AnormErrorDefinition) {
  const QuadraticSystem s = system_for(small_case(), 9);
  const Eigen::VectorXd x = random_vec(64, 10);
  EXPECT_EQ(anorm_error(s, x, x), 0.0);
  EXPECT_NEAR(anorm_error(s, Eigen::VectorXd::Zero(64), x), std::sqrt(x.dot(dense_S(s) * x)), 1e-10);
}

TEST(Pcg, MonotoneCostAndErrorWithinBound) {
  for (int Mo : {0, 2, 6}) {
    const Case c = small_case(64, 2, 6, 3.0, Mo, 2.5);
    const QuadraticSystem s = system_for(c, 11 + Mo);
    PcgOptions opt;
    opt.tol = 1e-12;
    opt.exact_solution = dense_solution_v(s);
    const PcgResult res = pcg(s, opt);
    const HessianSpec hs{c.b, c.r, c.zeta};
    const double kappa = kappa_S(hs);
    const double e0 = *res.trace.rows.front().anorm_error;
    for (std::size_t i = 1; i < res.trace.rows.size(); ++i) {
      const auto& row = res.trace.rows[i];
      EXPECT_LE(row.cost, res.trace.rows[i - 1].cost + 1e-12 * std::abs(row.cost)) << "Mo=" << Mo << " it " << i;
      EXPECT_LE(*row.anorm_error, *res.trace.rows[i - 1].anorm_error * (1 + 1e-9) + 1e-13 * e0);
      EXPECT_LE(*row.anorm_error / e0, cg_error_bound(kappa, row.iter) + 1e-9) << "Mo=" << Mo << " it " << i;
    }
  }
}

TEST(Pcg, ResidualOrthogonality) {
  const QuadraticSystem s = system_for(small_case(64, 1, 2, 1.5, 2, 1.0), 12);
  std::vector<Eigen::VectorXd> residuals;
  PcgOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 30;
  opt.observers.push_back([&](std::size_t, const Eigen::VectorXd& dx) {
    residuals.push_back(s.rhs() - s.apply_S(s.forward_transform(dx)));
  });
  pcg(s, opt);
  const std::size_t count = std::min<std::size_t>(residuals.size(), 30);
  for (std::size_t l = 1; l < count; ++l) {
    if (residuals[l].norm() < 1e-8 * residuals[0].norm()) break;
    for (std::size_t j = 0; j < l; ++j)
      EXPECT_LE(std::abs(residuals[l].dot(residuals[j])) / (residuals[l].norm() * residuals[j].norm()), 1e-6)
          << l << "," << j;
  }
}

TEST(Pcg, FiniteTermination) {
  const QuadraticSystem s = system_for(small_case(64, 1, 4, 2.0, 2, 1.0), 13);
  PcgOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 74;
  const PcgResult res = pcg(s, opt);
  EXPECT_TRUE(res.converged);
}

TEST(Pcg, PreconditioningEquivalence) {
  for (std::size_t n : {48u, 128u}) {
    const Case c = small_case(n, 2, 2, 1.5, 2, 1.2);
    const Eigen::VectorXd d = random_vec(n / 2, 14);
    const QuadraticSystem s = build_system(c.b, c.r, 2, d, Eigen::VectorXd::Zero(n));
    PcgOptions opt;
    opt.tol = 1e-12;
    const PcgResult res = pcg(s, opt);
    const Eigen::MatrixXd H = selection(n, 2);
    const Eigen::MatrixXd Rinv = dense_covariance(c.r).inverse();
    const Eigen::MatrixXd A = dense_covariance(c.b).inverse() + H.transpose() * Rinv * H;
    const Eigen::VectorXd dx = A.ldlt().solve(H.transpose() * Rinv * d);
    EXPECT_LT((res.dx - dx).norm() / dx.norm(), 1e-8) << "n=" << n;
  }
}

TEST(Pcg, ReorthogonalizationAgrees) {
  const QuadraticSystem s = system_for(small_case(), 15);
  PcgOptions plain, reo;
  plain.tol = reo.tol = 1e-10;
  reo.reorthogonalize = true;
  const PcgResult a = pcg(s, plain), b = pcg(s, reo);
  EXPECT_LT((a.dx - b.dx).norm(), 1e-7 * a.dx.norm());
}

TEST(Pcg, BreakdownReportsIteration) {
  const Case c = small_case(16, 1, 2, 1.0, 0, 0.0, 1.0);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(16);
  b[3] = std::numeric_limits<double>::quiet_NaN();
  const QuadraticSystem s(c.b, c.r, 1, b);
  try {
    pcg(s);
    FAIL() << "expected breakdown";
  } catch (const BreakdownError& e) {
    EXPECT_EQ(e.iteration(), 1u);
  }
}

TEST(Pcg, OptionValidation) {
  const QuadraticSystem s = system_for(small_case(), 16);
  PcgOptions opt;
  opt.tol = 0;
  EXPECT_THROW(pcg(s, opt), DomainError);
  opt.tol = 1e-6;
  opt.max_iter = 0;
  EXPECT_THROW(pcg(s, opt), DomainError);
}

TEST(Pcg, TraceCsvColumns) {
  const QuadraticSystem s = system_for(small_case(), 17);
  PcgOptions opt;
  opt.exact_solution = dense_solution_v(s);
  opt.background_error = Eigen::VectorXd::Zero(64);
  const PcgResult res = pcg(s, opt);
  std::ostringstream os;
  res.trace.write_csv(os);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,residual,rel_residual,cost,anorm_error,analysis_error");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), res.trace.rows.size() + 1);
}

TEST(GaussNewton, SingleOuterMatchesPcg) {
  const Case c = small_case();
  const Eigen::VectorXd xb = random_vec(64, 18), yo = random_vec(32, 19);
  const GaussNewtonResult gn = gauss_newton({c.b, c.r, 2, xb, yo}, 1);
  const QuadraticSystem s = build_system(c.b, c.r, 2, yo - selection(64, 2) * xb, Eigen::VectorXd::Zero(64));
  const PcgResult res = pcg(s);
  EXPECT_LT((gn.x - (xb + res.dx)).norm(), 1e-14 * gn.x.norm());
  EXPECT_EQ(gn.increment_norms.size(), 1u);
}

TEST(GaussNewton, SecondIncrementOnlyPolishes) {
  const Case c = small_case();
  PcgOptions opt;
  opt.tol = 1e-10;
  const GaussNewtonResult gn = gauss_newton({c.b, c.r, 2, random_vec(64, 20), random_vec(32, 21)}, 2, opt);
  ASSERT_EQ(gn.increment_norms.size(), 2u);
  EXPECT_LE(gn.increment_norms[1], 1e-6 * gn.increment_norms[0]);
}

TEST(GaussNewton, OuterCountRange) {
  const Case c = small_case();
  const GaussNewtonProblem pb{c.b, c.r, 2, random_vec(64, 22), random_vec(32, 23)};
  EXPECT_THROW(gauss_newton(pb, 0), DomainError);
  EXPECT_THROW(gauss_newton(pb, kMaxOuterIterations + 1), DomainError);
  EXPECT_NO_THROW(gauss_newton(pb, kMaxOuterIterations));
}
