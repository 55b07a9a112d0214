#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "varbound/families.hpp"
#include "varbound/gram.hpp"
#include "varbound/kernel.hpp"

using namespace varbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector v(std::initializer_list<double> xs) { return to_vector(std::vector<double>(xs)); }

// Kernel straight from its definition, without the closed-form log-kernel.
double naive_kernel(const ExponentialFamilyModel& m, const Vector& x0, const Vector& x1, const Vector& x2) {
  return std::exp(cumulant(m, x1 + x2 - x0) + cumulant(m, x0) - cumulant(m, x1) - cumulant(m, x2));
}

double min_eigen(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("exponential-family kernel examples") {
  const auto g = families::gaussian_mean();
  CHECK_THAT(kernel_expfam(g, v({0.0}), v({1.0}), v({1.0})), WithinRel(std::exp(1.0), 1e-15));
  CHECK_THAT(kernel_expfam(g, v({0.0}), v({1.0}), v({-1.0})), WithinRel(std::exp(-1.0), 1e-15));
  for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli()})
    CHECK(kernel_expfam(m, v({0.3}), v({0.3}), v({0.3})) == 1.0);
  CHECK(kernel_expfam(families::exponential_rate(), v({-1.0}), v({-1.0}), v({-1.0})) == 1.0);
}

TEST_CASE("closed-form log-kernels agree with the cumulant definition") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli(), families::gaussian_iid(3),
                        families::gaussian_sum(3)}) {
    for (int i = 0; i < 50; ++i) {
      const Vector x0 = v({u(rng)}), x1 = v({u(rng)}), x2 = v({u(rng)});
      INFO(m.name);
      CHECK_THAT(kernel_expfam(m, x0, x1, x2), WithinRel(naive_kernel(m, x0, x1, x2), 1e-12));
    }
  }
  const auto e = families::exponential_rate();
  for (int i = 0; i < 50; ++i) {
    const Vector x0 = v({-1.0 - std::abs(u(rng))}), x1 = v({-1.0 - std::abs(u(rng))}), x2 = v({-1.0 - std::abs(u(rng))});
    CHECK_THAT(kernel_expfam(e, x0, x1, x2), WithinRel(naive_kernel(e, x0, x1, x2), 1e-12));
  }
  const auto nd = families::gaussian_mean_nd(2);
  for (int i = 0; i < 20; ++i) {
    const Vector x0 = v({u(rng), u(rng)}), x1 = v({u(rng), u(rng)}), x2 = v({u(rng), u(rng)});
    CHECK_THAT(kernel_expfam(nd, x0, x1, x2), WithinRel(std::exp((x1 - x0).dot(x2 - x0)), 1e-12));
  }
}

TEST_CASE("kernel requires x1 + x2 - x0 in the natural space") {
  const auto e = families::exponential_rate();
  CHECK_THROWS_AS(kernel_expfam(e, v({-3.0}), v({-1.0}), v({-1.0})), DomainError);
  CHECK_NOTHROW(kernel_expfam(e, v({-1.0}), v({-1.0}), v({-1.5})));
}

TEST_CASE("closed-form kernel is exactly symmetric") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli()}) {
    const auto ev = KernelEvaluator::closed_form(m, v({0.25}));
    for (int i = 0; i < 100; ++i) {
      const Vector a = v({u(rng)}), b = v({u(rng)});
      CHECK(ev.evaluate(a, b).value == ev.evaluate(b, a).value);
    }
  }
}

TEST_CASE("Monte Carlo kernel examples") {
  const GenericModel g = to_generic(families::gaussian_mean());
  const KernelValue same = kernel_mc(g, v({0.0}), v({0.0}), v({0.0}), 1000, 1);
  CHECK(same.value == 1.0);
  CHECK(same.standard_error == 0.0);

  const KernelValue k11 = kernel_mc(g, v({0.0}), v({1.0}), v({1.0}), 100000, 42);
  CHECK(std::abs(k11.value - std::exp(1.0)) <= 4.0 * k11.standard_error);
  CHECK(k11.standard_error > 0.0);

  // rho(y, 0.5) rho(y, -0.5) = e^{-0.25} for every y, so only rounding remains
  const KernelValue kpm = kernel_mc(g, v({0.0}), v({0.5}), v({-0.5}), 100000, 43);
  CHECK(std::abs(kpm.value - std::exp(-0.25)) <= 4.0 * kpm.standard_error + 1e-12);

  const auto ev = KernelEvaluator::monte_carlo(g, v({0.0}), 5000, 9);
  CHECK(ev.evaluate(v({0.3}), v({-0.8})).value == ev.evaluate(v({-0.8}), v({0.3})).value);
  CHECK(ev.sample_count() == 5000);
  CHECK(ev.seed() == 9);
  CHECK_THROWS(kernel_mc(g, v({0.0}), v({1.0}), v({1.0}), 1, 1));
}

TEST_CASE("Monte Carlo kernel flags heavy tails") {
  // R(x, x) = e^{9}: the estimate is dominated by a handful of draws.
  const GenericModel g = to_generic(families::gaussian_mean());
  const KernelValue k = kernel_mc(g, v({0.0}), v({3.0}), v({3.0}), 2000, 5);
  CHECK(k.heavy_tail_warning);
  const KernelValue mild = kernel_mc(g, v({0.0}), v({0.2}), v({0.2}), 2000, 5);
  CHECK_FALSE(mild.heavy_tail_warning);
}

TEST_CASE("Monte Carlo evaluator rejects reference draws outside the support") {
  GenericModel broken = to_generic(families::gaussian_mean());
  broken.log_density = [](const Observation& y, const Vector& x) -> ExtendedReal {
    if (y[0] > 2.0) return ExtendedReal::minus_infinity();
    return -0.5 * (y[0] - x[0]) * (y[0] - x[0]);
  };
  CHECK_THROWS_AS(KernelEvaluator::monte_carlo(broken, v({0.0}), 10000, 1), SupportError);
}

TEST_CASE("derivative kernel functions") {
  const auto ev = KernelEvaluator::closed_form(families::gaussian_mean(), v({0.0}));
  CHECK(derivative_kernel_function(ev, MultiIndex{0}, v({0.7})) == ev.evaluate(v({0.7}), v({0.0})).value);
  for (double t : {-1.0, -0.3, 0.4, 1.5}) {
    CHECK_THAT(derivative_kernel_function(ev, MultiIndex{1}, v({t})), WithinAbs(t, 1e-6));
    CHECK_THAT(derivative_kernel_function_exact(ev, MultiIndex{1}, v({t})), WithinAbs(t, 1e-14));
    CHECK_THAT(derivative_kernel_function_exact(ev, MultiIndex{2}, v({t})), WithinAbs(t * t, 1e-14));
  }
  CHECK_THAT(derivative_kernel_function(ev, MultiIndex{2}, v({1.0})), WithinAbs(1.0, 1e-4));

  // exact (moment) route agrees with finite differences on other families
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (const auto& m : {families::poisson(), families::bernoulli()}) {
    const auto e2 = KernelEvaluator::closed_form(m, v({0.1}));
    for (int i = 0; i < 5; ++i) {
      const Vector x = v({u(rng)});
      for (int p = 1; p <= 3; ++p) {
        const double fd = derivative_kernel_function(e2, MultiIndex{p}, x);
        const double exact = derivative_kernel_function_exact(e2, MultiIndex{p}, x);
        INFO(m.name << " p=" << p << " x=" << x[0]);
        CHECK_THAT(fd, WithinAbs(exact, 1e-4 * std::max(1.0, std::abs(exact))));
      }
    }
  }
  const auto e3 = KernelEvaluator::closed_form(families::exponential_rate(), v({-1e-5}));
  CHECK_THROWS_AS(derivative_kernel_function(e3, MultiIndex{1}, v({-1.0})), BoundaryError);
}

TEST_CASE("Gram matrix examples") {
  const auto ev = KernelEvaluator::closed_form(families::gaussian_mean(), v({0.0}));
  const Matrix g1 = gram(ev, {PointEvaluation{v({0.0})}});
  CHECK(g1.rows() == 1);
  CHECK(g1(0, 0) == 1.0);

  const Matrix g2 = gram(ev, {PointEvaluation{v({0.0})}, DerivativeFunction{MultiIndex{1}}});
  CHECK_THAT(g2(0, 0), WithinAbs(1.0, 1e-6));
  CHECK_THAT(g2(0, 1), WithinAbs(0.0, 1e-6));
  CHECK_THAT(g2(1, 0), WithinAbs(0.0, 1e-6));
  CHECK_THAT(g2(1, 1), WithinAbs(1.0, 1e-6));

  const Matrix g3 = gram(ev, {DifferenceFunction{v({1.0})}});
  CHECK_THAT(g3(0, 0), WithinAbs(std::exp(1.0) - 1.0, 1e-9));

  // derivative-derivative block: E{(y^2 - 1)^2} = 2 for order 2
  const Matrix g4 = gram(ev, {DerivativeFunction{MultiIndex{1}}, DerivativeFunction{MultiIndex{2}}});
  CHECK_THAT(g4(1, 1), WithinAbs(2.0, 1e-12));
  CHECK_THAT(g4(0, 1), WithinAbs(0.0, 1e-12));
}

TEST_CASE("Gram of point evaluations reproduces the kernel") {
  const auto m = families::gaussian_mean();
  const auto ev = KernelEvaluator::closed_form(m, v({0.2}));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 20; ++i) {
    const Vector a = v({u(rng)}), b = v({u(rng)});
    const Matrix g = gram(ev, {PointEvaluation{a}, PointEvaluation{b}});
    CHECK(g(0, 1) == kernel_expfam(m, v({0.2}), a, b));
    CHECK(g(0, 1) == g(1, 0));
  }
}

TEST_CASE("mixed derivative Gram entries match second derivatives of the kernel") {
  // <r^(p), r^(q)> = d^p_1 d^q_2 R at (x0, x0), via FD of the derivative function
  const auto m = families::poisson();
  const Vector x0 = v({0.3});
  const auto ev = KernelEvaluator::closed_form(m, x0);
  const Matrix g = gram(ev, {DerivativeFunction{MultiIndex{1}}, DerivativeFunction{MultiIndex{2}}});
  const ScalarField r1 = [&](const Eigen::VectorXd& x) { return derivative_kernel_function_exact(ev, MultiIndex{1}, x); };
  const ScalarField r2 = [&](const Eigen::VectorXd& x) { return derivative_kernel_function_exact(ev, MultiIndex{2}, x); };
  FDConfig cfg{1e-3};
  CHECK_THAT(g(0, 0), WithinRel(partial_derivative_richardson(r1, x0, MultiIndex{1}, cfg), 1e-6));
  CHECK_THAT(g(0, 1), WithinRel(partial_derivative_richardson(r1, x0, MultiIndex{2}, cfg), 1e-6));
  CHECK_THAT(g(1, 1), WithinRel(partial_derivative_richardson(r2, x0, MultiIndex{2}, cfg), 1e-5));
  // Fisher information of Poisson is e^{x0}
  CHECK_THAT(g(0, 0), WithinRel(std::exp(0.3), 1e-12));
}

TEST_CASE("Gram matrices are positive semidefinite") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_int_distribution<int> size(1, 6);
  for (int trial = 0; trial < 10; ++trial) {
    for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli()}) {
      const Vector x0 = v({u(rng) / 2});
      const auto ev = KernelEvaluator::closed_form(m, x0);
      std::vector<BasisFunction> basis;
      const int n = size(rng);
      for (int i = 0; i < n; ++i) {
        switch (rng() % 3) {
          case 0: basis.emplace_back(PointEvaluation{v({u(rng)})}); break;
          case 1: basis.emplace_back(DifferenceFunction{v({u(rng)})}); break;
          default: basis.emplace_back(DerivativeFunction{MultiIndex{static_cast<int>(rng() % 3)}}); break;
        }
      }
      const Matrix g = gram(ev, basis);
      const double smax = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
      CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, smax));
      CHECK(min_eigen(g) >= -1e-9 * smax);
    }
  }
  // MC Gram matrices are PSD by construction
  const auto mc = KernelEvaluator::monte_carlo(to_generic(families::poisson()), v({0.0}), 20000, 3);
  const Matrix g = gram(mc, {PointEvaluation{v({0.5})}, DifferenceFunction{v({-0.4})}, DerivativeFunction{MultiIndex{1}},
                              DifferenceFunction{v({0.9})}});
  const double smax = Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
  CHECK(min_eigen(g) >= -1e-9 * smax);
  CHECK(g == g.transpose());
}

TEST_CASE("Monte Carlo Gram approximates the closed form") {
  const auto m = families::gaussian_mean();
  const auto mc = KernelEvaluator::monte_carlo(to_generic(m), v({0.0}), 200000, 17);
  const auto cf = KernelEvaluator::closed_form(m, v({0.0}));
  const std::vector<BasisFunction> basis{DerivativeFunction{MultiIndex{1}}, DifferenceFunction{v({0.5})}};
  const Matrix a = gram(mc, basis), b = gram(cf, basis);
  CHECK_THAT(a(0, 0), WithinAbs(b(0, 0), 0.02));
  CHECK_THAT(a(0, 1), WithinAbs(b(0, 1), 0.02));
  CHECK_THAT(a(1, 1), WithinAbs(b(1, 1), 0.02));
}

TEST_CASE("projected squared norm examples") {
  Matrix g1(1, 1);
  g1 << 1.0;
  CHECK(projected_sq_norm(make_gram_system(g1, v({0.7}))) == 0.7 * 0.7);

  const Matrix id = Matrix::Identity(2, 2);
  CHECK(projected_sq_norm(make_gram_system(id, v({0.0, 1.0}))) == 1.0);

  Matrix ones = Matrix::Ones(2, 2);
  const GramSystem s = make_gram_system(ones, v({1.0, 1.0}), 1e-10);
  CHECK_THAT(projected_sq_norm(s), WithinAbs(1.0, 1e-14));
  const auto p = projection(s);
  CHECK(p.diagnostics.rank == 1);

  CHECK_THROWS_AS(make_gram_system(Matrix::Identity(2, 2), v({1.0})), Error);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(make_gram_system(bad, v({1.0, 1.0})), NumericalError);
}

TEST_CASE("pseudoinverse satisfies the Moore-Penrose identities") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const int l = 2 + trial % 4, r = 1 + trial % l;
    Matrix a(l, r);
    for (auto& x : a.reshaped()) x = n01(rng);
    const Matrix g = a * a.transpose();
    const Matrix p = symmetric_pinv(g);
    CHECK((g * p * g - g).norm() <= 1e-9 * g.norm());
    CHECK((p * g * p - p).norm() <= 1e-9 * p.norm());
    CHECK((p - p.transpose()).norm() <= 1e-12 * std::max(1.0, p.norm()));
  }
}

TEST_CASE("appending a basis function never lowers the projection") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const auto m = families::poisson();
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x0 = v({u(rng) / 3});
    const auto ev = KernelEvaluator::closed_form(m, x0);
    std::vector<BasisFunction> basis;
    std::vector<double> rhs;
    double previous = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector pt = v({x0[0] + u(rng)});
      basis.emplace_back(DifferenceFunction{pt});
      rhs.push_back(std::exp(pt[0]) - std::exp(x0[0]));
      const double value = projected_sq_norm(make_gram_system(gram(ev, basis), to_vector(rhs)));
      CHECK(value >= previous - 1e-9);
      previous = value;
    }
  }
}

TEST_CASE("kernel invariance under a sufficient statistic") {
  std::vector<std::pair<Vector, Vector>> probes;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) probes.emplace_back(v({u(rng)}), v({u(rng)}));

  const auto iid = families::gaussian_iid(3);
  SufficientStatistic sum{[](const Observation& y) { return scalar_vector(y.sum()); }, families::gaussian_sum(3)};
  const auto closed = suffstat_kernel_check(iid, sum, v({0.1}), probes);
  CHECK(closed.all_agree);
  for (const auto& p : closed.probes) CHECK(p.abs_difference <= 1e-9);

  SufficientStatistic trivial{[](const Observation& y) { return y; }, iid};
  for (const auto& p : suffstat_kernel_check(iid, trivial, v({0.1}), probes).probes) CHECK(p.abs_difference == 0.0);

  std::vector<std::pair<Vector, Vector>> near(probes.begin(), probes.begin() + 5);
  for (auto& [a, b] : near) {
    a *= 0.4;
    b *= 0.4;
  }
  SufficiencyCheckOptions opt;
  opt.mode = KernelMode::monte_carlo;
  const auto mc = suffstat_kernel_check(iid, sum, v({0.1}), near, opt);
  CHECK(mc.all_agree);
  CHECK(mc.max_pointwise_ratio_deviation <= 1e-9);
}
