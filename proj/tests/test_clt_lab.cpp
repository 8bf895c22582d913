#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "steinw/clt.hpp"
#include "steinw/stein_bounds.hpp"

#include <cmath>

using namespace steinw;

TEST_CASE("summand moments") {
  const SummandDistribution rad(SummandKind::rademacher, 1);
  CHECK(rad.norm_moment(4) == doctest::Approx(1.0));
  CHECK(rad.second_order_tensor_norm() == doctest::Approx(1.0));
  const SummandDistribution gauss(SummandKind::gaussian, 1);
  CHECK(gauss.norm_moment(4) == doctest::Approx(3.0));
  CHECK(gauss.coordinate_moment(6) == doctest::Approx(15.0));
  const SummandDistribution expo(SummandKind::exponential, 1);
  CHECK(expo.coordinate_moment(3) == doctest::Approx(2.0));
  CHECK(expo.coordinate_moment(4) == doctest::Approx(9.0));
  const SummandDistribution unif(SummandKind::uniform, 1);
  CHECK(unif.coordinate_moment(4) == doctest::Approx(9.0 / 5.0));
  const SummandDistribution rad3(SummandKind::rademacher, 3);
  CHECK(rad3.norm_moment(2) == doctest::Approx(3.0));
  CHECK_THROWS_AS(parse_summand_kind("cauchy"), InvalidArgument);
}

TEST_CASE("pair sampler truncation limits") {
  const CltPairSampler pair(SummandDistribution(SummandKind::rademacher, 1), 8);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto a = pair.draw_anchor(rng);
    CHECK((pair.draw_conditional(a, 0.0, rng) - a.x).norm() == 0.0);
    const Vector far = pair.draw_conditional(a, 50.0, rng);
    const double step = (far - a.x)[0] * std::sqrt(8.0);
    CHECK((step == doctest::Approx(0.0) || step == doctest::Approx(2.0) || step == doctest::Approx(-2.0)));
  }
}

TEST_CASE("pair sampler is exchangeable") {
  const CltPairSampler pair(SummandDistribution(SummandKind::uniform, 2), 8);
  Rng rng(2);
  const int draws = 200000;
  std::vector<double> diff_lin(draws), diff_sq(draws);
  for (int i = 0; i < draws; ++i) {
    const auto a = pair.draw_anchor(rng);
    const Vector xt = pair.draw_conditional(a, 0.3, rng);
    diff_lin[i] = a.x[0] * xt[1] * xt[1] - xt[0] * a.x[1] * a.x[1];
    diff_sq[i] = a.x[0] * a.x[0] * xt[1] - xt[0] * xt[0] * a.x[1];
  }
  const auto m1 = mean_stderr(diff_lin), m2 = mean_stderr(diff_sq);
  CHECK(std::abs(m1.mean) < 4 * m1.se);
  CHECK(std::abs(m2.mean) < 4 * m2.se);
}

TEST_CASE("first-order mismatch vanishes for large t") {
  const auto pair = clt_pair_sampler(SummandDistribution(SummandKind::rademacher, 1), 16);
  BoundConfig cfg;
  cfg.n_outer = 2000;
  cfg.seed = 4;
  MomentPlan plan;
  plan.s = 1.0 / 16;
  plan.centering = Centering::gaussian;
  const auto est = conditional_moment_sq(*pair, 10.0, 1, plan, cfg);
  CHECK(std::abs(est.estimate) < 3 * est.se + 1e-12);
}

TEST_CASE("rate expression") {
  const SummandDistribution rad(SummandKind::rademacher, 1);
  for (double n : {1.0, 16.0, 100.0}) {
    const auto r = clt_rate_expression(CltRateInputs::from_distribution(rad, n, 2, 2));
    CHECK(r.value == doctest::Approx(2 / std::sqrt(n) + 1));
  }
  const SummandDistribution gauss(SummandKind::gaussian, 1);
  const auto g = clt_rate_expression(CltRateInputs::from_distribution(gauss, 4, 2, 2));
  CHECK(g.value == doctest::Approx(2 * std::sqrt(3.0) / 2 + std::sqrt(3.0)));
  const auto m0 = clt_rate_expression(CltRateInputs::from_distribution(rad, 4, 2, 0));
  CHECK(m0.remainder_uncomputable);
  double prev = 1e300;
  for (double n = 1; n < 1e5; n *= 3) {
    const double v = clt_rate_expression(CltRateInputs::from_distribution(rad, n, 3, 1)).value;
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("rosenthal") {
  CHECK(rosenthal_bound(9, 4, 0.0, 2.0, 3.0) == doctest::Approx(3 * std::sqrt(2.0) + std::sqrt(3.0) * std::pow(3.0, 0.25)));
  CHECK(rosenthal_bound(1, 3, 0.5, 4.0, 8.0) == doctest::Approx(0.5 + 2.0 + 2.0));
  // MC oracle: Rademacher sums at n = 32.
  Rng rng(5);
  std::vector<double> sq(20000);
  for (auto& v : sq) {
    double s = 0;
    for (int i = 0; i < 32; ++i) s += rademacher(rng);
    v = s * s;
  }
  CHECK(rosenthal_bound(32, 2, 0.0, 1.0, 1.0) >= std::sqrt(mean_stderr(sq).mean));
}

TEST_CASE("empirical W_p") {
  const SummandDistribution rad(SummandKind::rademacher, 1);
  // Exact: the two-point law against γ.
  const double exact = std::sqrt(2.0 - 2.0 * std::sqrt(2.0 / std::acos(-1.0)));
  const auto e = clt_empirical_wp(rad, 1, 2.0, 4000, 3, 0, 20);
  CHECK(std::abs(e.distance - exact) < 4 * e.se + 0.02);
  const auto noise = clt_empirical_wp(SummandDistribution(SummandKind::gaussian, 1), 4, 2.0, 2000, 3, 0, 20);
  CHECK(noise.distance >= 0.0);
  CHECK(noise.distance < 0.1);
  CHECK_THROWS_AS(clt_empirical_wp(rad, 4, 2.0, 50, 3), InvalidArgument);
}

TEST_CASE("rate fit") {
  const std::vector<double> ns{4, 16, 64, 256};
  std::vector<double> half, full;
  for (double n : ns) {
    half.push_back(3 / std::sqrt(n));
    full.push_back(2 / n);
  }
  const auto a = clt_rate_fit(ns, half);
  CHECK(a.slope == doctest::Approx(-0.5));
  CHECK(a.r2 == doctest::Approx(1.0));
  CHECK(clt_rate_fit(ns, full).slope == doctest::Approx(-1.0));
  const std::vector<double> bad{1.0, 0.0, 0.5, 0.2};
  CHECK_THROWS_AS(clt_rate_fit(ns, bad), InvalidArgument);
}
