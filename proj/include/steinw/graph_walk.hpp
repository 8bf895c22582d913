#pragma once

#include "steinw/common.hpp"
#include "steinw/transport.hpp"

#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace steinw {

/// Positive density on the flat torus [0,1)^d with a known upper bound.
struct TorusDensity {
  int dim = 1;
  std::function<double(std::span<const double>)> value;
  double max_value = 1.0;
  std::string label = "uniform";
  bool constant = false;

  static TorusDensity uniform(int dim);
  /// 1 + amplitude·cos(2π x_1).
  static TorusDensity cosine(int dim, double amplitude);
};

struct TorusCloud {
  int dim = 1;
  PointCloud points;  // coordinates in [0, 1)
};

double torus_distance(std::span<const double> x, std::span<const double> y);

/// Distance from point i to its k-th nearest sample, the point itself included.
double knn_radius(const TorusCloud& cloud, std::size_t i, int k);

struct WalkGraph {
  std::vector<std::vector<std::size_t>> neighbors;
  std::vector<double> radii;

  std::size_t size() const noexcept { return neighbors.size(); }
  /// Uniform transition probability out of vertex i.
  double weight(std::size_t i) const { return 1.0 / static_cast<double>(neighbors[i].size()); }
  void write_edge_list(std::ostream& out) const;
};

WalkGraph build_walk_graph(const TorusCloud& cloud, int k, int threads = 0);
/// Same graph by exhaustive search; reference for the bucketed search.
WalkGraph build_walk_graph_bruteforce(const TorusCloud& cloud, int k);

struct StationaryResult {
  std::vector<double> weights;
  double residual = 0.0;
  int iterations = 0;
};

StationaryResult stationary_measure(const WalkGraph& graph, double tol = 1e-12, int max_iter = 1000000);
bool strongly_connected(const WalkGraph& graph);

/// Left fixed point of a dense row-stochastic matrix.
StationaryResult stationary_measure_dense(const Matrix& kernel, double tol = 1e-12, int max_iter = 1000000);

double knn_step_scale(int k, int n, int dim);

TorusCloud sample_torus_cloud(const TorusDensity& f, int n, std::uint64_t seed);
/// Samples from the density proportional to f^{2+2/d}.
EmpiricalMeasure target_measure_samples(const TorusDensity& f, int n_samples, std::uint64_t seed);

double knn_bound_shape(int n, int k, int dim);

struct KnnResult {
  int n = 0;
  int k = 0;
  double w2 = 0.0;
  /// W_2 to the continuous uniform law; only for constant f in one dimension.
  double w2_uniform = std::numeric_limits<double>::quiet_NaN();
  double bound_shape = 0.0;
  double step_scale = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

KnnResult knn_experiment(const TorusDensity& f, int n, int k, std::uint64_t seed, int threads = 0,
                         int target_samples = 0);

}  // namespace steinw
