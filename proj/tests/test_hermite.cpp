#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "steinw/hermite.hpp"
#include "steinw/tensor.hpp"

#include <cmath>

using namespace steinw;

namespace {

// Tensor-product Gauss–Hermite quadrature of f over γ_d.
template <class F>
double gauss_expectation(int dim, int points, F&& f) {
  const auto rule = gauss_hermite_rule(points);
  std::vector<int> at(dim, 0);
  std::vector<double> x(dim);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int j = 0; j < dim; ++j) {
      x[j] = rule.nodes[at[j]];
      w *= rule.weights[at[j]];
    }
    total += w * f(std::span<const double>(x));
    int j = 0;
    while (j < dim && ++at[j] == points) at[j++] = 0;
    if (j == dim) break;
  }
  return total;
}

}  // namespace

TEST_CASE("hermite_eval") {
  CHECK(hermite_eval(0, 3.7) == 1.0);
  CHECK(hermite_eval(1, 3.7) == doctest::Approx(3.7));
  CHECK(hermite_eval(3, 2.0) == doctest::Approx(2.0));
  for (double x : {-1.3, 0.0, 0.4, 2.9}) CHECK(hermite_eval(4, x) == doctest::Approx(x * x * x * x - 6 * x * x + 3));
}

TEST_CASE("hermite_sq_norm") {
  CHECK(hermite_sq_norm(MultiIndex({0, 0, 1}, 2)) == 2.0);
  CHECK(hermite_sq_norm(MultiIndex({}, 3)) == 1.0);
  CHECK(hermite_sq_norm(MultiIndex({2, 2, 2, 2}, 3)) == 24.0);
  CHECK_THROWS_AS(MultiIndex({3}, 3), InvalidArgument);
}

TEST_CASE("Gauss-Hermite rule integrates moments") {
  const auto rule = gauss_hermite_rule(20);
  double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i], w = rule.weights[i];
    m0 += w;
    m2 += w * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("hermite_lp_norm") {
  CHECK(hermite_lp_norm(1, 2) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(hermite_lp_norm(1, 4) == doctest::Approx(std::pow(3.0, 0.25)).epsilon(1e-10));
  CHECK(hermite_lp_norm(2, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(hermite_lp_norm(0, 3.3) == 1.0);
  // Reference values from 50-digit quadrature.
  CHECK(hermite_lp_norm(5, 7.3) == doctest::Approx(516.1801017575).epsilon(1e-8));
  CHECK(hermite_lp_norm(3, 1.5) == doctest::Approx(1.857568071982).epsilon(1e-8));
  CHECK(hermite_lp_norm(12, 3) == doctest::Approx(665765.8634673).epsilon(1e-8));
  // L^2 norm is √k!.
  for (int k = 1; k <= 8; ++k) CHECK(hermite_lp_norm(k, 2) == doctest::Approx(std::sqrt(std::tgamma(k + 1.0))).epsilon(1e-9));
  CHECK_THROWS_AS(hermite_lp_norm(2, 0.5), InvalidArgument);
  CHECK_THROWS_AS(hermite_lp_norm(2, 2, 16), InvalidArgument);
}

TEST_CASE("L^p norm is nondecreasing in p") {
  for (int k : {1, 3, 6})
    for (double p = 1.0; p < 6.0; p += 0.7) CHECK(hermite_lp_norm(k, p) <= hermite_lp_norm(k, p + 0.7) * (1 + 1e-12));
}

TEST_CASE("norm identity and orthogonality over small multi-indices") {
  for (int dim = 1; dim <= 3; ++dim) {
    std::vector<MultiIndex> all;
    for (int order = 0; order <= 4; ++order) {
      std::vector<int> c(order, 0);
      while (true) {
        if (std::is_sorted(c.begin(), c.end())) all.emplace_back(c, dim);
        int j = 0;
        while (j < order && ++c[j] == dim) c[j++] = 0;
        if (j == order) break;
      }
    }
    for (const auto& idx : all) {
      const double q = gauss_expectation(dim, 12, [&](auto x) { return std::pow(hermite_eval(idx, x), 2); });
      CHECK(q == doctest::Approx(hermite_sq_norm(idx)).epsilon(1e-6));
    }
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = a + 1; b < all.size(); b += 3) {
        if (all[a].counts() == all[b].counts()) continue;
        const double q = gauss_expectation(dim, 12, [&](auto x) { return hermite_eval(all[a], x) * hermite_eval(all[b], x); });
        CHECK(std::abs(q) < 1e-7);
      }
  }
}

TEST_CASE("outer_power") {
  Vector e1 = Vector::Zero(3);
  e1[0] = 1;
  const auto t = Tensor::outer_power(e1, 3);
  CHECK(t.size() == 27);
  CHECK(t[0] == 1.0);
  double rest = 0;
  for (std::size_t i = 1; i < t.size(); ++i) rest += std::abs(t[i]);
  CHECK(rest == 0.0);

  const auto ones = Tensor::outer_power(Vector::Ones(2), 2);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ones[i] == 1.0);

  Vector v(2);
  v << 3, 4;
  CHECK(Tensor::outer_power(v, 4).norm() == doctest::Approx(625.0).epsilon(1e-12));

  Rng rng(3);
  Vector w(3);
  for (auto& c : w) c = standard_normal(rng);
  const auto sym = Tensor::outer_power(w, 3);
  const int i1[3] = {0, 1, 2}, i2[3] = {2, 0, 1}, i3[3] = {1, 2, 0};
  CHECK(sym.at(i1) == doctest::Approx(sym.at(i2)));
  CHECK(sym.at(i1) == doctest::Approx(sym.at(i3)));
}

TEST_CASE("tensor_h_norm") {
  Vector v(3);
  v << 1, -2, 2;
  CHECK(tensor_h_norm(Tensor::from_vector(v)) == doctest::Approx(3.0));
  CHECK(tensor_h_norm(Tensor::identity(4)) == doctest::Approx(2.0));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial)
    for (int k = 2; k <= 5; ++k) {
      Tensor m(k, 2);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = standard_normal(rng);
      CHECK(tensor_h_norm(m) <= std::sqrt(std::tgamma(k * 1.0)) * m.norm() * (1 + 1e-12));
    }
  CHECK_THROWS_AS(Tensor(31, 2), SizeLimitError);
}
