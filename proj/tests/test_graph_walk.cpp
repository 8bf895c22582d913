#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "steinw/graph_walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace steinw;

namespace {

TorusCloud equispaced(int n) {
  TorusCloud c{1, PointCloud(n, 1)};
  for (int i = 0; i < n; ++i) c.points(i, 0) = static_cast<double>(i) / n;
  return c;
}

}  // namespace

TEST_CASE("torus_distance") {
  const std::vector<double> x{0.3, 0.2};
  CHECK(torus_distance(x, x) == 0.0);
  CHECK(torus_distance(std::vector<double>{0.1}, std::vector<double>{0.9}) == doctest::Approx(0.2));
  CHECK(torus_distance(std::vector<double>{0.0, 0.0}, std::vector<double>{0.5, 0.5}) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("knn_radius") {
  const auto c = equispaced(20);
  CHECK(knn_radius(c, 4, 1) == 0.0);
  CHECK(knn_radius(c, 4, 3) == doctest::Approx(1.0 / 20));
  CHECK(knn_radius(c, 4, 20) == doctest::Approx(0.5));
  CHECK_THROWS_AS(knn_radius(c, 0, 21), InvalidArgument);

  const auto cloud = sample_torus_cloud(TorusDensity::uniform(2), 150, 9);
  for (std::size_t i = 0; i < 150; i += 7) {
    std::vector<double> d;
    for (Eigen::Index j = 0; j < 150; ++j)
      d.push_back(torus_distance({cloud.points.row(i).data(), 2}, {cloud.points.row(j).data(), 2}));
    std::sort(d.begin(), d.end());
    for (int k : {1, 5, 40}) CHECK(knn_radius(cloud, i, k) == d[k - 1]);
  }
}

TEST_CASE("build_walk_graph") {
  TorusCloud tri{1, PointCloud(3, 1)};
  tri.points << 0.0, 1.0 / 3, 2.0 / 3;
  const auto g = build_walk_graph(tri, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.neighbors[i].size() == 2);
    CHECK(g.weight(i) == doctest::Approx(0.5));
  }
  const auto cloud = sample_torus_cloud(TorusDensity::cosine(2, 0.6), 400, 3);
  const auto graph = build_walk_graph(cloud, 9);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    CHECK(graph.neighbors[i].size() >= 8);
    CHECK(std::find(graph.neighbors[i].begin(), graph.neighbors[i].end(), i) == graph.neighbors[i].end());
    CHECK(std::abs(graph.weight(i) * graph.neighbors[i].size() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(build_walk_graph(cloud, 1), InvalidArgument);
  std::ostringstream edges;
  build_walk_graph(tri, 3).write_edge_list(edges);
  const std::string text = edges.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);
}

TEST_CASE("bucketed search matches brute force") {
  for (int d : {1, 2, 3}) {
    const auto cloud = sample_torus_cloud(TorusDensity::cosine(d, 0.5), 5200, 17 + d);
    const auto fast = build_walk_graph(cloud, 12);
    const auto slow = build_walk_graph_bruteforce(cloud, 12);
    CHECK(fast.neighbors == slow.neighbors);
    CHECK(fast.radii == slow.radii);
  }
}

TEST_CASE("stationary measure") {
  for (int k : {3, 5, 9}) {
    const auto st = stationary_measure(build_walk_graph(equispaced(101), k));
    for (double w : st.weights) CHECK(std::abs(w - 1.0 / 101) < 1e-10);
    CHECK(st.residual <= 1e-12);
  }
  Matrix flip(2, 2);
  flip << 0, 1, 1, 0;
  const auto two = stationary_measure_dense(flip);
  CHECK(two.weights[0] == doctest::Approx(0.5));
  CHECK(two.weights[1] == doctest::Approx(0.5));

  // Sparse 1D clouds can leave one-way gaps (seed 5 does); seed 6 gives a strongly connected graph.
  const auto cloud = sample_torus_cloud(TorusDensity::cosine(1, 0.5), 300, 6);
  const auto graph = build_walk_graph(cloud, 10);
  REQUIRE(strongly_connected(graph));
  const auto st = stationary_measure(graph, 1e-11);
  std::vector<double> next(graph.size(), 0.0);
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (auto j : graph.neighbors[i]) next[j] += st.weights[i] * graph.weight(i);
  double resid = 0;
  for (std::size_t i = 0; i < next.size(); ++i) resid += std::abs(next[i] - st.weights[i]);
  CHECK(resid <= 1e-11);
  const auto gappy = build_walk_graph(sample_torus_cloud(TorusDensity::cosine(1, 0.5), 300, 5), 10);
  CHECK_FALSE(strongly_connected(gappy));
  CHECK_THROWS_AS(stationary_measure(gappy), Error);

  WalkGraph split;
  split.neighbors = {{1}, {0}, {3}, {2}};
  split.radii.assign(4, 0.1);
  CHECK_FALSE(strongly_connected(split));
  CHECK_THROWS_AS(stationary_measure(split), Error);
}

TEST_CASE("step scale") {
  CHECK(knn_step_scale(50, 1000, 1) == doctest::Approx(0.05 * 0.05 / 12));
  CHECK(knn_step_scale(50, 1000, 2) == doctest::Approx(0.05 / (4 * std::numbers::pi)));
  CHECK(knn_step_scale(60, 1000, 3) > knn_step_scale(50, 1000, 3));
}

TEST_CASE("target samples follow f^{2+2/d}") {
  const auto f = TorusDensity::cosine(1, 0.5);
  const int n = 40000, bins = 20;
  const auto m = target_measure_samples(f, n, 8);
  for (double w : m.weights) CHECK(w == doctest::Approx(1.0 / n));
  std::vector<double> counts(bins, 0.0);
  for (int i = 0; i < n; ++i) counts[std::min(bins - 1, static_cast<int>(m.points(i, 0) * bins))] += 1;
  // Normalized f^4 per bin by midpoint quadrature.
  std::vector<double> mass(bins, 0.0);
  double total = 0;
  const int fine = 2000;
  for (int j = 0; j < fine; ++j) {
    const double x = (j + 0.5) / fine;
    const double v = std::pow(1 + 0.5 * std::cos(2 * std::numbers::pi * x), 4) / fine;
    mass[j * bins / fine] += v;
    total += v;
  }
  double chi2 = 0;
  for (int b = 0; b < bins; ++b) {
    const double expect = n * mass[b] / total;
    chi2 += (counts[b] - expect) * (counts[b] - expect) / expect;
  }
  CHECK(chi2 < 43.8);  // 99.9% quantile with 19 degrees of freedom
}

TEST_CASE("experiment") {
  const auto shape = knn_bound_shape(1000, 50, 1);
  CHECK(shape == doctest::Approx(std::sqrt(std::log(1000.0)) * 1000 / std::pow(50, 1.5) + 0.05));
  const auto r = knn_experiment(TorusDensity::uniform(1), 300, 20, 4);
  CHECK(r.w2 >= 0.0);
  CHECK(r.w2_uniform >= 0.0);
  CHECK(r.residual <= 1e-12);
  CHECK(r.warnings.empty());
  CHECK_FALSE(knn_experiment(TorusDensity::uniform(1), 100, 20, 4).warnings.empty());
  CHECK_THROWS_AS(knn_experiment(TorusDensity::uniform(1), 100, 1, 4), InvalidArgument);
}
