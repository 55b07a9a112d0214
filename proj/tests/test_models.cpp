#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "varbound/extended_real.hpp"
#include "varbound/families.hpp"
#include "varbound/mean_function.hpp"
#include "varbound/model.hpp"

using namespace varbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector v(std::initializer_list<double> xs) { return to_vector(std::vector<double>(xs)); }
Observation obs(double y) { return scalar_vector(y); }

double mean_of(const std::vector<Observation>& draws) {
  double s = 0.0;
  for (const auto& y : draws) s += y[0];
  return s / static_cast<double>(draws.size());
}

// Integral of the density over the support, by quadrature or summation.
double total_mass(const ExponentialFamilyModel& m, double x) {
  const Vector xv = v({x});
  auto f = [&](double y) {
    const ExtendedReal ld = log_density(m, obs(y), xv);
    return ld.is_finite() ? std::exp(ld.value()) : 0.0;
  };
  if (m.name == "gaussian-mean") {
    boost::math::quadrature::sinh_sinh<double> q;
    return q.integrate(f);
  }
  if (m.name == "exponential-rate") {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(f, 0.0, std::numeric_limits<double>::infinity());
  }
  if (m.name == "poisson") {
    double s = 0.0;
    for (int y = 0; y < 400; ++y) s += f(y);
    return s;
  }
  return f(0.0) + f(1.0);  // bernoulli
}

}  // namespace

TEST_CASE("ExtendedReal tags infinities") {
  const ExtendedReal a = 2.5;
  CHECK(a.is_finite());
  CHECK(a.value() == 2.5);
  CHECK(ExtendedReal::plus_infinity().is_plus_infinity());
  CHECK_FALSE(ExtendedReal::plus_infinity().is_finite());
  CHECK_THROWS(ExtendedReal::plus_infinity().value());
  CHECK(ExtendedReal::from_double(std::numeric_limits<double>::infinity()).is_plus_infinity());
  CHECK(ExtendedReal::from_double(-std::numeric_limits<double>::infinity()).is_minus_infinity());
  CHECK_THROWS(ExtendedReal::from_double(std::nan("")));
  CHECK(ExtendedReal::minus_infinity() == ExtendedReal::minus_infinity());
  CHECK_FALSE(ExtendedReal(1.0) == ExtendedReal::plus_infinity());
}

TEST_CASE("log_density examples") {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const auto g = families::gaussian_mean();
  CHECK_THAT(log_density(g, obs(0.0), v({0.0})).value(), WithinAbs(-half_log_2pi, 1e-15));
  CHECK_THAT(log_density(g, obs(1.0), v({1.0})).value(), WithinAbs(-half_log_2pi, 1e-15));
  CHECK_THAT(log_density(families::poisson(), obs(0.0), v({0.0})).value(), WithinAbs(-1.0, 1e-15));
  CHECK_THROWS_AS(log_density(families::exponential_rate(), obs(1.0), v({0.5})), DomainError);
  try {
    (void)log_density(families::exponential_rate(), obs(1.0), v({0.5}));
  } catch (const DomainError& e) {
    REQUIRE(e.point().size() == 1);
    CHECK(e.point()[0] == 0.5);
  }
  CHECK(log_density(families::poisson(), obs(-1.0), v({0.0})).is_minus_infinity());
  // log-gamma keeps large counts finite
  CHECK(std::isfinite(log_density(families::poisson(), obs(500.0), v({6.0})).value()));
}

TEST_CASE("natural space membership matches finiteness of log lambda") {
  CHECK(natural_space_contains(families::gaussian_mean(), v({5.0})));
  const auto e = families::exponential_rate();
  CHECK(natural_space_contains(e, v({-1.0})));
  CHECK_FALSE(natural_space_contains(e, v({0.0})));
  CHECK_FALSE(natural_space_contains(e, v({2.0})));
  for (double x : {-3.0, -0.1, 0.0, 0.1, 4.0})
    CHECK(natural_space_contains(e, v({x})) == e.log_lambda(v({x})).is_finite());
  CHECK_THROWS_AS(cumulant(e, v({0.0})), DomainError);
}

TEST_CASE("cumulants equal analytic normalizers") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 5; ++i) {
    const double x = u(rng);
    CHECK_THAT(std::exp(cumulant(families::gaussian_mean(), v({x}))), WithinRel(std::exp(x * x / 2), 1e-12));
    CHECK_THAT(std::exp(cumulant(families::poisson(), v({x}))), WithinRel(std::exp(std::exp(x)), 1e-12));
    CHECK_THAT(std::exp(cumulant(families::bernoulli(), v({x}))), WithinRel(1.0 + std::exp(x), 1e-12));
    const double neg = -0.2 - std::abs(x);
    CHECK_THAT(std::exp(cumulant(families::exponential_rate(), v({neg}))), WithinRel(-1.0 / neg, 1e-12));
  }
}

TEST_CASE("densities integrate to one") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli(),
                        families::exponential_rate()}) {
    for (int i = 0; i < 5; ++i) {
      double x = u(rng);
      if (m.name == "exponential-rate") x = -0.3 - std::abs(x);
      INFO(m.name << " x=" << x);
      CHECK_THAT(total_mass(m, x), WithinAbs(1.0, 1e-8));
    }
  }
}

TEST_CASE("likelihood ratio examples") {
  const auto g = families::gaussian_mean();
  CHECK(likelihood_ratio(g, obs(0.3), v({0.7}), v({0.7})) == 1.0);
  CHECK_THAT(likelihood_ratio(g, obs(0.0), v({1.0}), v({0.0})), WithinRel(std::exp(-0.5), 1e-15));
  CHECK_THAT(likelihood_ratio(families::poisson(), obs(2.0), v({std::log(2.0)}), v({0.0})),
             WithinRel(4.0 * std::exp(-1.0), 1e-14));

  const GenericModel gg = to_generic(g);
  CHECK_THAT(likelihood_ratio(gg, obs(0.0), v({1.0}), v({0.0})), WithinRel(std::exp(-0.5), 1e-14));
  CHECK(likelihood_ratio(gg, obs(0.4), v({-0.2}), v({-0.2})) == 1.0);

  const auto e = families::exponential_rate();
  CHECK_THROWS_AS(likelihood_ratio(e, obs(-1.0), v({-2.0}), v({-1.0})), SupportError);
  CHECK_THROWS_AS(likelihood_ratio(to_generic(e), obs(-1.0), v({-2.0}), v({-1.0})), SupportError);
}

TEST_CASE("generic ratio is zero where the density vanishes") {
  GenericModel uniform;
  uniform.name = "uniform-scale";
  uniform.log_density = [](const Observation& y, const Vector& x) -> ExtendedReal {
    if (y[0] < 0.0 || y[0] > x[0]) return ExtendedReal::minus_infinity();
    return -std::log(x[0]);
  };
  CHECK(likelihood_ratio(uniform, obs(1.5), v({1.0}), v({2.0})) == 0.0);
  CHECK_THAT(likelihood_ratio(uniform, obs(0.5), v({1.0}), v({2.0})), WithinRel(2.0, 1e-15));
}

TEST_CASE("samplers are deterministic and calibrated") {
  const auto g = families::gaussian_mean();
  const auto d1 = sample(g, v({0.0}), 7, 100000);
  CHECK(d1.size() == 100000);
  CHECK_THAT(mean_of(d1), WithinAbs(0.0, 0.02));
  const auto d2 = sample(g, v({0.0}), 7, 100000);
  CHECK(d1 == d2);
  CHECK(sample(g, v({0.0}), 8, 5) != sample(g, v({0.0}), 7, 5));
  CHECK(sample(g, v({0.0}), 7, 0).empty());

  const auto p = sample(families::poisson(), v({0.0}), 3, 100000);
  CHECK_THAT(mean_of(p), WithinAbs(1.0, 0.02));
  CHECK(p == sample(families::poisson(), v({0.0}), 3, 100000));

  const auto b = sample(families::bernoulli(), v({0.0}), 4, 100000);
  CHECK_THAT(mean_of(b), WithinAbs(0.5, 0.01));
  const auto e = sample(families::exponential_rate(), v({-2.0}), 5, 100000);
  CHECK_THAT(mean_of(e), WithinAbs(0.5, 0.01));

  const auto nd = sample(families::gaussian_mean_nd(3), v({1.0, -1.0, 0.5}), 6, 20000);
  REQUIRE(nd.front().size() == 3);
  Vector acc = Vector::Zero(3);
  for (const auto& y : nd) acc += y;
  acc /= static_cast<double>(nd.size());
  CHECK_THAT(acc[0], WithinAbs(1.0, 0.04));
  CHECK_THAT(acc[1], WithinAbs(-1.0, 0.04));
  CHECK_THAT(acc[2], WithinAbs(0.5, 0.04));
}

TEST_CASE("likelihood ratio has unit expectation") {
  const std::size_t n = 100000;
  struct Case {
    ExponentialFamilyModel m;
    double x0, x;
  };
  for (const auto& c : {Case{families::gaussian_mean(), 0.0, 0.6}, Case{families::poisson(), 0.2, -0.3},
                        Case{families::bernoulli(), -0.5, 1.0}, Case{families::exponential_rate(), -1.0, -1.4}}) {
    const auto draws = sample(c.m, v({c.x0}), 99, n);
    double s = 0.0, ss = 0.0;
    for (const auto& y : draws) {
      const double r = likelihood_ratio(c.m, y, v({c.x}), v({c.x0}));
      s += r;
      ss += r * r;
    }
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / n);
    INFO(c.m.name);
    CHECK(std::abs(mean - 1.0) <= 4.0 * se);
  }
}

TEST_CASE("cumulant differences match the empirical log-MGF of phi") {
  const std::size_t n = 100000;
  struct Case {
    ExponentialFamilyModel m;
    double x0, x;
  };
  for (const auto& c : {Case{families::gaussian_mean(), 0.3, 0.8}, Case{families::poisson(), 0.0, 0.4},
                        Case{families::exponential_rate(), -2.0, -1.5}}) {
    const auto draws = sample(c.m, v({c.x0}), 123, n);
    double s = 0.0, ss = 0.0;
    for (const auto& y : draws) {
      const double t = std::exp(c.m.phi(y)[0] * (c.x - c.x0));
      s += t;
      ss += t * t;
    }
    const double mean = s / n;
    const double se = std::sqrt((ss / n - mean * mean) / n);
    const double expected = std::exp(cumulant(c.m, v({c.x})) - cumulant(c.m, v({c.x0})));
    INFO(c.m.name);
    CHECK(std::abs(mean - expected) <= 4.0 * se);
  }
}

TEST_CASE("generic models see finite log-density on their own draws") {
  for (const auto& m : {families::gaussian_mean(), families::poisson(), families::bernoulli(),
                        families::exponential_rate()}) {
    const GenericModel g = to_generic(m);
    const Vector x = m.name == "exponential-rate" ? v({-1.0}) : v({0.2});
    for (const auto& y : sample(g, x, 5, 10000)) REQUIRE(log_density(g, y, x).is_finite());
  }
}

TEST_CASE("mean functions") {
  const MeanFunction id = means::identity();
  CHECK(mean_derivative(id, v({0.4}), MultiIndex{0}) == id.value(v({0.4})));
  CHECK(mean_derivative(id, v({0.4}), MultiIndex{1}) == 1.0);
  CHECK(mean_derivative(id, v({0.4}), MultiIndex{2}) == 0.0);

  const MeanFunction cubic = means::polynomial({1.0, 0.0, -2.0, 0.5});
  const Vector x = v({1.3});
  CHECK(mean_derivative(cubic, x, MultiIndex{0}) == cubic.value(x));
  CHECK_THAT(mean_derivative(cubic, x, MultiIndex{1}), WithinRel(-4.0 * 1.3 + 1.5 * 1.3 * 1.3, 1e-14));
  CHECK_THAT(mean_derivative(cubic, x, MultiIndex{3}), WithinRel(3.0, 1e-14));
  CHECK(mean_derivative(cubic, x, MultiIndex{4}) == 0.0);

  const MeanFunction c = means::constant(2.0);
  CHECK(mean_derivative(c, v({0.0, 1.0}), MultiIndex{1, 0}) == 0.0);
  CHECK(mean_derivative(c, v({0.0, 1.0}), MultiIndex{0, 0}) == 2.0);

  // FD path when no derivative oracle is given: gamma = exp(x) for Poisson
  const MeanFunction pm = means::expfam_mean(families::poisson());
  CHECK(mean_derivative(pm, v({0.5}), MultiIndex{0}) == pm.value(v({0.5})));
  CHECK_THAT(mean_derivative(pm, v({0.5}), MultiIndex{1}), WithinRel(std::exp(0.5), 1e-8));
  CHECK_THAT(mean_derivative(pm, v({0.5}), MultiIndex{2}), WithinRel(std::exp(0.5), 1e-6));

  // component selection in N dimensions
  const MeanFunction second = means::identity(1);
  CHECK(second.value(v({3.0, -4.0})) == -4.0);
  CHECK(mean_derivative(second, v({3.0, -4.0}), MultiIndex{0, 1}) == 1.0);
  CHECK(mean_derivative(second, v({3.0, -4.0}), MultiIndex{1, 0}) == 0.0);
}

TEST_CASE("family registry") {
  const auto list = families::list_families();
  CHECK(list.size() >= 5);
  CHECK(families::make_family("gaussian-mean-nd", {{"dim", 3}}).param_dim == 3);
  CHECK(families::make_family("gaussian-iid", {{"count", 4}}).obs_dim == 4);
  CHECK_THROWS_AS(families::make_family("cauchy"), ConfigError);
  CHECK_THROWS_AS(families::make_family("poisson", {{"rate", 1}}), ConfigError);
  CHECK_THROWS_AS(families::make_family("gaussian-iid", {{"count", 0.5}}), ConfigError);
  for (const auto& f : list) CHECK(families::make_family(f.id).name == f.id);
}
