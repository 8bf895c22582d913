#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "steinw/transport.hpp"

#include <cmath>

using namespace steinw;

namespace {

PointCloud column(std::initializer_list<double> xs) {
  PointCloud p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return p;
}

PointCloud random_cloud(Rng& rng, int n, int d) {
  PointCloud p(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) p(i, j) = standard_normal(rng);
  return p;
}

}  // namespace

TEST_CASE("wasserstein_1d examples") {
  const std::vector<double> a{0.3, -1.0, 2.0};
  CHECK(wasserstein_1d(a, a, 2.0) == 0.0);
  CHECK(wasserstein_1d(std::vector<double>{0}, std::vector<double>{1}, 2.0) == doctest::Approx(1.0));
  CHECK(wasserstein_1d(std::vector<double>{0, 1}, std::vector<double>{1, 2}, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein_1d(std::vector<double>{}, std::vector<double>{}, 2.0), InvalidArgument);
}

TEST_CASE("wasserstein_exact examples") {
  Vector x(2), y(2);
  x << 1, 2;
  y << 4, 6;
  CHECK(wasserstein_exact(EmpiricalMeasure::point_mass(x), EmpiricalMeasure::point_mass(y), 2.0) == doctest::Approx(5.0));
  Rng rng(1);
  const auto c = EmpiricalMeasure::uniform(random_cloud(rng, 6, 2));
  CHECK(wasserstein_exact(c, c, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  PointCloud a(2, 2), b(2, 2);
  a << 0, 0, 1, 0;
  b << 0, 1, 1, 1;
  CHECK(wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(column({0, 1})), 2.0),
                  InvalidArgument);
}

TEST_CASE("1D sort agrees with the exact solver") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 8));
    const auto a = random_cloud(rng, n, 1), b = random_cloud(rng, n, 1);
    const double p = 1.0 + 2.0 * uniform01(rng);
    const double sorted = wasserstein_1d({a.data(), std::size_t(n)}, {b.data(), std::size_t(n)}, p);
    CHECK(std::abs(sorted - wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), p)) < 1e-9);
  }
}

TEST_CASE("assignment and network simplex agree; weighted instances") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 30));
    const auto a = random_cloud(rng, n, 2), b = random_cloud(rng, n, 2);
    Matrix cost(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).squaredNorm();
    std::vector<double> w(n, 1.0 / n);
    CHECK(ot::assignment_cost(cost) / n == doctest::Approx(ot::transport_cost(cost, w, w)).epsilon(1e-10));
  }
  // Point mass against a weighted cloud: every unit of mass travels to the single atom.
  EmpiricalMeasure cloud;
  cloud.points = column({0.0, 1.0, 3.0});
  cloud.weights = {0.5, 0.25, 0.25};
  Vector zero = Vector::Zero(1);
  CHECK(wasserstein_exact(cloud, EmpiricalMeasure::point_mass(zero), 2.0) == doctest::Approx(std::sqrt(0.25 + 9 * 0.25)));
}

TEST_CASE("metric properties") {
  Rng rng(9);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 10));
    const auto a = EmpiricalMeasure::uniform(random_cloud(rng, n, 2));
    const auto b = EmpiricalMeasure::uniform(random_cloud(rng, n, 2));
    const auto c = EmpiricalMeasure::uniform(random_cloud(rng, n, 2));
    for (double p : {1.0, 2.0, 3.0})
      CHECK(wasserstein_exact(a, c, p) <= wasserstein_exact(a, b, p) + wasserstein_exact(b, c, p) + 1e-9);
    const double lambda = 0.1 + 3 * uniform01(rng);
    auto sa = a, sb = b;
    sa.points *= lambda;
    sb.points *= lambda;
    CHECK(std::abs(wasserstein_exact(sa, sb, 2.0) - lambda * wasserstein_exact(a, b, 2.0)) < 1e-9);
    CHECK(wasserstein_exact(a, b, 1.0) <= wasserstein_exact(a, b, 2.0) + 1e-9);
    CHECK(wasserstein_exact(a, b, 2.0) <= wasserstein_exact(a, b, 4.0) + 1e-9);
  }
}

TEST_CASE("torus metric wraps") {
  const std::vector<double> x{0.1}, y{0.9};
  CHECK(ground_distance(x, y, GroundMetric::torus) == doctest::Approx(0.2));
  const std::vector<double> u{0.0, 0.0}, v{0.5, 0.5};
  CHECK(ground_distance(u, v, GroundMetric::torus) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("circle W2 to the uniform law") {
  const std::vector<double> atom{0.3}, one{1.0};
  CHECK(wasserstein2_circle_uniform(atom, one) == doctest::Approx(std::sqrt(1.0 / 12.0)).epsilon(1e-9));
  std::vector<double> grid(64), w(64, 1.0 / 64);
  for (int i = 0; i < 64; ++i) grid[i] = (i + 0.5) / 64;
  CHECK(wasserstein2_circle_uniform(grid, w) == doctest::Approx(std::sqrt(1.0 / (12.0 * 64 * 64))).epsilon(1e-6));
  // Against a fine uniform grid solved exactly.
  Rng rng(4);
  EmpiricalMeasure m;
  m.points = PointCloud(5, 1);
  m.weights.assign(5, 0.0);
  double s = 0;
  for (int i = 0; i < 5; ++i) {
    m.points(i, 0) = uniform01(rng);
    m.weights[i] = 0.2 + uniform01(rng);
    s += m.weights[i];
  }
  for (auto& x : m.weights) x /= s;
  PointCloud fine(1000, 1);
  for (int i = 0; i < 1000; ++i) fine(i, 0) = (i + 0.5) / 1000;
  const double exact = wasserstein_exact(m, EmpiricalMeasure::uniform(fine), 2.0, GroundMetric::torus);
  CHECK(wasserstein2_circle_uniform({m.points.data(), 5}, m.weights) == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("gaussian_w2_closed_form") {
  CHECK(gaussian_w2_closed_form(Vector::Zero(3), Vector::Ones(3)) == 0.0);
  Vector m(2);
  m << 3, 4;
  CHECK(gaussian_w2_closed_form(m, Vector::Ones(2)) == doctest::Approx(5.0));
  CHECK(gaussian_w2_closed_form(Vector::Zero(1), Vector::Constant(1, 4.0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(gaussian_w2_closed_form(Vector::Zero(1), Vector::Zero(1)), InvalidArgument);
}

TEST_CASE("bootstrap standard error is deterministic and positive") {
  Rng rng(12);
  const auto a = random_cloud(rng, 200, 1), b = random_cloud(rng, 200, 1);
  const auto e1 = wasserstein_bootstrap(a, b, 2.0, 20, 5, GroundMetric::euclidean, 1);
  const auto e2 = wasserstein_bootstrap(a, b, 2.0, 20, 5, GroundMetric::euclidean, 3);
  CHECK(e1.distance == e2.distance);
  CHECK(e1.se == e2.se);
  CHECK(e1.se > 0.0);
}
