#include "steinw/graph_walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace steinw {

namespace {

std::span<const double> row_span(const PointCloud& pts, std::size_t i) {
  return {pts.row(static_cast<Eigen::Index>(i)).data(), static_cast<std::size_t>(pts.cols())};
}

void check_cloud(const TorusCloud& cloud) {
  if (cloud.dim < 1 || cloud.points.cols() != cloud.dim) throw InvalidArgument("cloud", "dimension mismatch");
  if (cloud.points.rows() == 0) throw InvalidArgument("cloud", "no points");
}

// Neighbors of i among `candidates` for the radius fixed by the k-th smallest candidate distance.
void neighbors_from(const TorusCloud& cloud, std::size_t i, int k, const std::vector<std::size_t>& candidates,
                    std::vector<double>& scratch, double& radius, std::vector<std::size_t>& out) {
  const auto xi = row_span(cloud.points, i);
  scratch.resize(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) scratch[c] = torus_distance(xi, row_span(cloud.points, candidates[c]));
  std::vector<double> sorted = scratch;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  radius = sorted[k - 1];
  out.clear();
  for (std::size_t c = 0; c < candidates.size(); ++c)
    if (candidates[c] != i && scratch[c] <= radius) out.push_back(candidates[c]);
  std::sort(out.begin(), out.end());
}

class CellGrid {
 public:
  CellGrid(const TorusCloud& cloud, int k) : dim_(cloud.dim) {
    const double n = static_cast<double>(cloud.points.rows());
    side_ = std::max(1, static_cast<int>(std::floor(std::pow(n / k, 1.0 / dim_))));
    std::size_t cells = 1;
    for (int j = 0; j < dim_; ++j) cells *= side_;
    buckets_.resize(cells);
    for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) buckets_[cell_of(row_span(cloud.points, i))].push_back(i);
  }

  int side() const { return side_; }
  double cell_width() const { return 1.0 / side_; }

  std::size_t cell_of(std::span<const double> x) const {
    std::size_t id = 0;
    for (int j = 0; j < dim_; ++j) {
      int c = static_cast<int>(std::floor(x[j] * side_));
      c = std::clamp(c, 0, side_ - 1);
      id = id * side_ + c;
    }
    return id;
  }

  // Points in cells within Chebyshev cell distance `reach` of x's cell (wrapping).
  void gather(std::span<const double> x, int reach, std::vector<std::size_t>& out, std::vector<char>& seen) const {
    out.clear();
    std::vector<int> base(dim_);
    std::size_t id = cell_of(x);
    for (int j = dim_ - 1; j >= 0; --j) {
      base[j] = static_cast<int>(id % side_);
      id /= side_;
    }
    std::vector<int> offset(dim_, -reach);
    std::vector<std::size_t> visited;
    while (true) {
      std::size_t cell = 0;
      for (int j = 0; j < dim_; ++j) {
        const int c = ((base[j] + offset[j]) % side_ + side_) % side_;
        cell = cell * side_ + c;
      }
      if (!seen[cell]) {
        seen[cell] = 1;
        visited.push_back(cell);
        out.insert(out.end(), buckets_[cell].begin(), buckets_[cell].end());
      }
      int j = dim_ - 1;
      while (j >= 0 && ++offset[j] > reach) offset[j--] = -reach;
      if (j < 0) break;
    }
    for (auto c : visited) seen[c] = 0;
  }

  std::size_t cells() const { return buckets_.size(); }

 private:
  int dim_;
  int side_;
  std::vector<std::vector<std::size_t>> buckets_;
};

}  // namespace

TorusDensity TorusDensity::uniform(int dim) {
  TorusDensity f;
  f.dim = dim;
  f.value = [](std::span<const double>) { return 1.0; };
  f.max_value = 1.0;
  f.label = "uniform";
  f.constant = true;
  return f;
}

TorusDensity TorusDensity::cosine(int dim, double amplitude) {
  if (!(std::abs(amplitude) < 1.0)) throw InvalidArgument("amplitude", "must lie in (-1, 1) to keep f positive");
  TorusDensity f;
  f.dim = dim;
  f.value = [amplitude](std::span<const double> x) { return 1.0 + amplitude * std::cos(2.0 * std::numbers::pi * x[0]); };
  f.max_value = 1.0 + std::abs(amplitude);
  f.label = "cosine";
  return f;
}

double torus_distance(std::span<const double> x, std::span<const double> y) {
  return ground_distance(x, y, GroundMetric::torus);
}

double knn_radius(const TorusCloud& cloud, std::size_t i, int k) {
  check_cloud(cloud);
  const auto n = static_cast<std::size_t>(cloud.points.rows());
  if (k < 1 || static_cast<std::size_t>(k) > n) throw InvalidArgument("k", "must lie in [1, n]");
  if (i >= n) throw InvalidArgument("i", "vertex out of range");
  std::vector<double> dist(n);
  const auto xi = row_span(cloud.points, i);
  for (std::size_t j = 0; j < n; ++j) dist[j] = torus_distance(xi, row_span(cloud.points, j));
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  return dist[k - 1];
}

void WalkGraph::write_edge_list(std::ostream& out) const {
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    for (auto j : neighbors[i]) out << i << ' ' << j << ' ' << weight(i) << '\n';
}

WalkGraph build_walk_graph_bruteforce(const TorusCloud& cloud, int k) {
  check_cloud(cloud);
  const auto n = static_cast<std::size_t>(cloud.points.rows());
  if (k < 2 || static_cast<std::size_t>(k) > n) throw InvalidArgument("k", "must lie in [2, n]");
  WalkGraph g;
  g.neighbors.resize(n);
  g.radii.resize(n);
  std::vector<std::size_t> all(n);
  for (std::size_t j = 0; j < n; ++j) all[j] = j;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) neighbors_from(cloud, i, k, all, scratch, g.radii[i], g.neighbors[i]);
  return g;
}

WalkGraph build_walk_graph(const TorusCloud& cloud, int k, int threads) {
  check_cloud(cloud);
  const auto n = static_cast<std::size_t>(cloud.points.rows());
  if (k < 2 || static_cast<std::size_t>(k) > n) throw InvalidArgument("k", "must lie in [2, n]");
  WalkGraph g;
  g.neighbors.resize(n);
  g.radii.resize(n);
  constexpr std::size_t kChunk = 64;
  const std::size_t tasks = (n + kChunk - 1) / kChunk;
  if (n <= 5000) {
    std::vector<std::size_t> all(n);
    for (std::size_t j = 0; j < n; ++j) all[j] = j;
    parallel_for(tasks, threads, [&](std::size_t task) {
      std::vector<double> scratch;
      for (std::size_t i = task * kChunk; i < std::min(n, (task + 1) * kChunk); ++i)
        neighbors_from(cloud, i, k, all, scratch, g.radii[i], g.neighbors[i]);
    });
  } else {
    const CellGrid grid(cloud, k);
    parallel_for(tasks, threads, [&](std::size_t task) {
      std::vector<double> scratch;
      std::vector<std::size_t> candidates;
      std::vector<char> seen(grid.cells(), 0);
      for (std::size_t i = task * kChunk; i < std::min(n, (task + 1) * kChunk); ++i) {
        const auto xi = row_span(cloud.points, i);
        for (int reach = 1;; ++reach) {
          grid.gather(xi, reach, candidates, seen);
          const bool covers_all = 2 * reach + 1 >= grid.side();
          if (candidates.size() < static_cast<std::size_t>(k) && !covers_all) continue;
          neighbors_from(cloud, i, k, candidates, scratch, g.radii[i], g.neighbors[i]);
          // Every point within reach·width of x lies in the gathered cells.
          if (covers_all || g.radii[i] <= reach * grid.cell_width()) break;
        }
      }
    });
  }
  for (std::size_t i = 0; i < n; ++i)
    if (g.neighbors[i].empty()) throw Error("isolated vertex in the walk graph");
  return g;
}

bool strongly_connected(const WalkGraph& graph) {
  const std::size_t n = graph.size();
  if (n == 0) return false;
  auto reaches_all = [n](const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == n;
  };
  std::vector<std::vector<std::size_t>> reverse(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : graph.neighbors[i]) reverse[j].push_back(i);
  return reaches_all(graph.neighbors) && reaches_all(reverse);
}

StationaryResult stationary_measure(const WalkGraph& graph, double tol, int max_iter) {
  const std::size_t n = graph.size();
  if (n == 0) throw InvalidArgument("graph", "empty graph");
  if (!(tol > 0.0)) throw InvalidArgument("tol", "must be > 0");
  if (!strongly_connected(graph)) throw Error("walk graph is not strongly connected; the stationary measure is not unique");
  StationaryResult res;
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double mass = in[i] * graph.weight(i);
      for (auto j : graph.neighbors[i]) out[j] += mass;
    }
  };
  for (int it = 0; it <= max_iter; ++it) {
    apply(pi, next);
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid += std::abs(next[i] - pi[i]);
    res.iterations = it;
    res.residual = resid;
    if (resid <= tol) {
      res.weights = pi;
      return res;
    }
    const double total = pairwise_sum(next);
    for (std::size_t i = 0; i < n; ++i) pi[i] = next[i] / total;
  }
  throw ConvergenceError("power iteration did not reach residual " + std::to_string(tol) + " within " +
                         std::to_string(max_iter) + " iterations (last " + std::to_string(res.residual) + ")");
}

StationaryResult stationary_measure_dense(const Matrix& kernel, double tol, int max_iter) {
  const auto n = kernel.rows();
  if (n == 0 || kernel.cols() != n) throw InvalidArgument("kernel", "must be square and nonempty");
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(kernel.row(i).sum() - 1.0) > 1e-12 || (kernel.row(i).array() < 0.0).any())
      throw InvalidArgument("kernel", "rows must be probability vectors");
  WalkGraph graph;
  graph.neighbors.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (kernel(i, j) > 0.0) graph.neighbors[i].push_back(static_cast<std::size_t>(j));
  if (!strongly_connected(graph)) throw Error("kernel is not irreducible");
  StationaryResult res;
  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::RowVectorXd next = pi * kernel;
    res.iterations = it;
    res.residual = (next - pi).lpNorm<1>();
    if (res.residual <= tol) {
      res.weights.assign(pi.data(), pi.data() + n);
      return res;
    }
    pi = next / next.sum();
  }
  throw ConvergenceError("power iteration did not converge");
}

double knn_step_scale(int k, int n, int dim) {
  if (dim < 1) throw InvalidArgument("d", "must be >= 1");
  if (k < 1 || k > n) throw InvalidArgument("k", "must lie in [1, n]");
  const double d = dim;
  const double v0 = std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
  const double v2 = v0 / (d + 2.0);
  return std::pow(static_cast<double>(k) / n, 2.0 / d) * v2 / std::pow(v0, 1.0 + 2.0 / d);
}

namespace {

PointCloud rejection_sample(const TorusDensity& f, int count, double power, std::uint64_t seed) {
  if (!f.value) throw InvalidArgument("density", "missing density callable");
  if (!(f.max_value > 0.0)) throw InvalidArgument("density", "max_value must be positive");
  Rng rng = make_stream(seed, 0);
  PointCloud out(count, f.dim);
  std::vector<double> x(f.dim);
  std::size_t attempts = 0;
  for (int i = 0; i < count;) {
    ++attempts;
    for (auto& c : x) c = uniform01(rng);
    const double fx = f.value(x);
    if (!(fx > 0.0)) throw InvalidArgument("density", "density must be strictly positive");
    if (fx > f.max_value * (1.0 + 1e-12)) throw InvalidArgument("density", "density exceeds its declared maximum");
    if (uniform01(rng) < std::pow(fx / f.max_value, power)) {
      for (int j = 0; j < f.dim; ++j) out(i, j) = x[j];
      ++i;
    }
    if (attempts >= 10000 && static_cast<double>(i) / static_cast<double>(attempts) < 1e-3)
      throw Error("rejection sampler acceptance rate below 1e-3");
  }
  return out;
}

}  // namespace

TorusCloud sample_torus_cloud(const TorusDensity& f, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("n", "must be >= 1");
  return {f.dim, rejection_sample(f, n, 1.0, seed)};
}

EmpiricalMeasure target_measure_samples(const TorusDensity& f, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("n_samples", "must be >= 1");
  return EmpiricalMeasure::uniform(rejection_sample(f, n_samples, 2.0 + 2.0 / f.dim, seed));
}

double knn_bound_shape(int n, int k, int dim) {
  if (n < 2 || k < 1 || dim < 1) throw InvalidArgument("knn", "need n >= 2, k >= 1, d >= 1");
  const double d = dim;
  return std::sqrt(std::log(static_cast<double>(n))) * std::pow(n, 1.0 / d) / std::pow(k, 0.5 + 1.0 / d) +
         std::pow(static_cast<double>(k) / n, 1.0 / d);
}

KnnResult knn_experiment(const TorusDensity& f, int n, int k, std::uint64_t seed, int threads, int target_samples) {
  if (k < 2) throw InvalidArgument("k", "must be >= 2");
  if (k > n) throw InvalidArgument("k", "must be <= n");
  KnnResult res;
  res.n = n;
  res.k = k;
  res.seed = seed;
  if (n < 10 * k) res.warnings.push_back("n < 10k: the walk is far from its diffusion regime");
  const TorusCloud cloud = sample_torus_cloud(f, n, derive_seed(seed, 1));
  const WalkGraph graph = build_walk_graph(cloud, k, threads);
  const auto stat = stationary_measure(graph);
  res.residual = stat.residual;
  res.iterations = stat.iterations;
  EmpiricalMeasure walk;
  walk.points = cloud.points;
  walk.weights = stat.weights;
  const auto target = target_measure_samples(f, target_samples > 0 ? target_samples : n, derive_seed(seed, 2));
  res.w2 = wasserstein_exact(walk, target, 2.0, GroundMetric::torus);
  if (f.dim == 1 && f.constant)
    res.w2_uniform = wasserstein2_circle_uniform({cloud.points.data(), static_cast<std::size_t>(n)}, stat.weights);
  res.bound_shape = knn_bound_shape(n, k, f.dim);
  res.step_scale = knn_step_scale(k, n, f.dim);
  return res;
}

}  // namespace steinw
