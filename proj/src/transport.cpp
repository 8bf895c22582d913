#include "steinw/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace steinw {

EmpiricalMeasure EmpiricalMeasure::uniform(PointCloud points) {
  EmpiricalMeasure m;
  const auto n = static_cast<std::size_t>(points.rows());
  m.points = std::move(points);
  m.weights.assign(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
  return m;
}

EmpiricalMeasure EmpiricalMeasure::point_mass(const Vector& x) {
  PointCloud pts(1, x.size());
  pts.row(0) = x.transpose();
  return uniform(std::move(pts));
}

bool EmpiricalMeasure::is_uniform() const {
  if (weights.empty()) return true;
  return std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); });
}

void EmpiricalMeasure::validate() const {
  if (points.rows() == 0) throw InvalidArgument("measure", "empty point cloud");
  if (weights.size() != static_cast<std::size_t>(points.rows()))
    throw InvalidArgument("measure", "weights and points differ in count");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("measure", "weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("measure", "weights must sum to 1");
  if (!points.allFinite()) throw InvalidArgument("measure", "non-finite point coordinates");
}

double ground_distance(std::span<const double> x, std::span<const double> y, GroundMetric metric) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double diff = x[j] - y[j];
    if (metric == GroundMetric::torus) diff -= std::floor(diff + 0.5);
    s += diff * diff;
  }
  return std::sqrt(s);
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p) {
  if (a.empty() || b.empty()) throw InvalidArgument("samples", "empty input");
  if (a.size() != b.size()) throw InvalidArgument("samples", "1D monotone coupling needs equal counts");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<double> terms(sa.size());
  for (std::size_t i = 0; i < sa.size(); ++i) terms[i] = std::pow(std::abs(sa[i] - sb[i]), p);
  return std::pow(pairwise_sum(terms) / static_cast<double>(sa.size()), 1.0 / p);
}

double wasserstein2_circle_uniform(std::span<const double> points, std::span<const double> weights) {
  if (points.empty() || points.size() != weights.size()) throw InvalidArgument("weights", "size mismatch");
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!(points[i] >= 0.0 && points[i] < 1.0)) throw InvalidArgument("points", "coordinates must lie in [0, 1)");
    if (!(weights[i] >= 0.0)) throw InvalidArgument("weights", "must be nonnegative");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return points[a] < points[b]; });
  std::vector<double> x(order.size()), cum(order.size() + 1, 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    x[i] = points[order[i]];
    cum[i + 1] = cum[i] + weights[order[i]];
  }
  const double total = cum.back();
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("weights", "must sum to 1");
  for (auto& c : cum) c /= total;
  // Cost of the monotone coupling between the periodic quantile function shifted by alpha and the identity.
  auto cost = [&](double alpha) {
    double acc = 0.0;
    const double lo = alpha, hi = alpha + 1.0;
    for (int m = static_cast<int>(std::floor(lo)) - 1; m <= static_cast<int>(std::floor(hi)) + 1; ++m) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double l = std::max(lo, cum[i] + m), r = std::min(hi, cum[i + 1] + m);
        if (r <= l) continue;
        const double u = x[i] + m;
        const double dl = u - (l - alpha), dr = u - (r - alpha);
        acc += (dl * dl * dl - dr * dr * dr) / 3.0;
      }
    }
    return acc;
  };
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -1.0, b = 1.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = cost(c), fd = cost(d);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = cost(d);
    }
  }
  return std::sqrt(std::max(0.0, std::min(fc, fd)));
}

namespace ot {

double assignment_cost(const Matrix& cost) {
  const auto n = static_cast<int>(cost.rows());
  const auto m = static_cast<int>(cost.cols());
  if (n == 0 || n != m) throw InvalidArgument("cost", "assignment needs a square nonempty matrix");
  if (static_cast<std::size_t>(n) > kMaxAssignment) throw SizeLimitError("assignment problem larger than 2048");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<double> terms(m);
  for (int j = 1; j <= m; ++j) terms[j - 1] = cost(match[j] - 1, j - 1);
  return pairwise_sum(terms);
}

namespace {

// Transportation simplex on a spanning tree of the bipartite graph: rows are nodes
// [0, n), columns are nodes [n, n + m). Each basic cell is a tree edge.
class NetworkSimplex {
 public:
  NetworkSimplex(const Matrix& cost, std::span<const double> supply, std::span<const double> demand)
      : cost_(cost), n_(static_cast<int>(cost.rows())), m_(static_cast<int>(cost.cols())) {
    adj_.resize(n_ + m_);
    parent_.resize(n_ + m_);
    parent_cell_.resize(n_ + m_);
    depth_.resize(n_ + m_);
    u_.resize(n_);
    v_.resize(m_);
    initial_basis(supply, demand);
    scale_ = std::max(1.0, cost.cwiseAbs().maxCoeff());
  }

  double solve() {
    const std::size_t total = static_cast<std::size_t>(n_) * m_;
    const std::size_t block = std::max<std::size_t>(64, static_cast<std::size_t>(std::sqrt(static_cast<double>(total))));
    const std::size_t max_iter = 50 * total + 1000;
    const double eps = 1e-12 * scale_;
    std::size_t cursor = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      compute_tree();
      // Block pricing: scan from the cursor and stop at the first block holding a violation.
      double best = -eps;
      std::size_t best_cell = total;
      std::size_t scanned = 0;
      while (scanned < total) {
        const std::size_t stop = std::min(total, scanned + block);
        for (; scanned < stop; ++scanned) {
          const std::size_t c = cursor;
          cursor = (cursor + 1 == total) ? 0 : cursor + 1;
          const int i = static_cast<int>(c / m_);
          const int j = static_cast<int>(c % m_);
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            best_cell = c;
          }
        }
        if (best_cell != total) break;
      }
      if (best_cell == total) return objective();
      pivot(static_cast<int>(best_cell / m_), static_cast<int>(best_cell % m_));
    }
    throw ConvergenceError("network simplex exceeded its iteration cap");
  }

 private:
  void add_cell(int i, int j, double flow) {
    const int id = static_cast<int>(row_.size());
    row_.push_back(i);
    col_.push_back(j);
    flow_.push_back(flow);
    adj_[i].push_back(id);
    adj_[n_ + j].push_back(id);
  }

  void initial_basis(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> ra(supply.begin(), supply.end());
    std::vector<double> rb(demand.begin(), demand.end());
    int i = 0, j = 0;
    while (true) {
      const double f = std::max(0.0, std::min(ra[i], rb[j]));
      add_cell(i, j, f);
      ra[i] -= f;
      rb[j] -= f;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1) ++j;
      else if (j == m_ - 1) ++i;
      else if (ra[i] <= rb[j]) ++i;
      else ++j;
    }
  }

  void compute_tree() {
    std::fill(parent_.begin(), parent_.end(), -2);
    std::deque<int> queue{0};
    parent_[0] = -1;
    parent_cell_[0] = -1;
    depth_[0] = 0;
    u_[0] = 0.0;
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      for (int cell : adj_[node]) {
        const int other = node < n_ ? n_ + col_[cell] : row_[cell];
        if (parent_[other] != -2) continue;
        parent_[other] = node;
        parent_cell_[other] = cell;
        depth_[other] = depth_[node] + 1;
        const double c = cost_(row_[cell], col_[cell]);
        if (other < n_) u_[other] = c - v_[col_[cell]];
        else v_[other - n_] = c - u_[row_[cell]];
        queue.push_back(other);
      }
    }
  }

  void pivot(int i, int j) {
    std::vector<int> from_col, from_row;
    int x = n_ + j;
    int y = i;
    while (depth_[x] > depth_[y]) {
      from_col.push_back(parent_cell_[x]);
      x = parent_[x];
    }
    while (depth_[y] > depth_[x]) {
      from_row.push_back(parent_cell_[y]);
      y = parent_[y];
    }
    while (x != y) {
      from_col.push_back(parent_cell_[x]);
      x = parent_[x];
      from_row.push_back(parent_cell_[y]);
      y = parent_[y];
    }
    cycle_.assign(from_col.begin(), from_col.end());
    cycle_.insert(cycle_.end(), from_row.rbegin(), from_row.rend());

    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cycle_.size(); k += 2) {
      if (flow_[cycle_[k]] < theta) {
        theta = flow_[cycle_[k]];
        leaving = cycle_[k];
      }
    }
    for (std::size_t k = 0; k < cycle_.size(); ++k) {
      double& f = flow_[cycle_[k]];
      f = (k % 2 == 0) ? std::max(0.0, f - theta) : f + theta;
    }
    auto detach = [&](int node, int cell) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), cell));
    };
    detach(row_[leaving], leaving);
    detach(n_ + col_[leaving], leaving);
    row_[leaving] = i;
    col_[leaving] = j;
    flow_[leaving] = theta;
    adj_[i].push_back(leaving);
    adj_[n_ + j].push_back(leaving);
  }

  double objective() const {
    std::vector<double> terms(row_.size());
    for (std::size_t c = 0; c < row_.size(); ++c) terms[c] = flow_[c] * cost_(row_[c], col_[c]);
    return pairwise_sum(terms);
  }

  const Matrix& cost_;
  int n_, m_;
  double scale_ = 1.0;
  std::vector<int> row_, col_;
  std::vector<double> flow_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_, parent_cell_, depth_, cycle_;
  std::vector<double> u_, v_;
};

}  // namespace

double transport_cost(const Matrix& cost, std::span<const double> supply, std::span<const double> demand) {
  if (cost.rows() == 0 || cost.cols() == 0) throw InvalidArgument("cost", "empty cost matrix");
  if (supply.size() != static_cast<std::size_t>(cost.rows()) || demand.size() != static_cast<std::size_t>(cost.cols()))
    throw InvalidArgument("cost", "marginals do not match the cost matrix shape");
  if (static_cast<std::size_t>(cost.size()) > kMaxCostEntries) throw SizeLimitError("cost matrix exceeds 1e7 entries");
  return NetworkSimplex(cost, supply, demand).solve();
}

}  // namespace ot

namespace {

Matrix cost_matrix(const PointCloud& a, const PointCloud& b, double p, GroundMetric metric) {
  if (static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.rows()) > ot::kMaxCostEntries)
    throw SizeLimitError("transport problem exceeds 1e7 cost entries");
  Matrix cost(a.rows(), b.rows());
  const auto d = static_cast<std::size_t>(a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      const double dist = ground_distance({a.row(i).data(), d}, {b.row(j).data(), d}, metric);
      cost(i, j) = p == 2.0 ? dist * dist : std::pow(dist, p);
    }
  return cost;
}

}  // namespace

double wasserstein_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p, GroundMetric metric) {
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) throw InvalidArgument("measure", "dimension mismatch");
  const Matrix cost = cost_matrix(a.points, b.points, p, metric);
  double total;
  if (a.size() == b.size() && a.is_uniform() && b.is_uniform() && a.size() <= ot::kMaxAssignment)
    total = ot::assignment_cost(cost) / static_cast<double>(a.size());
  else
    total = ot::transport_cost(cost, a.weights, b.weights);
  return std::pow(std::max(total, 0.0), 1.0 / p);
}

double wasserstein_uniform(const PointCloud& a, const PointCloud& b, double p, GroundMetric metric) {
  if (a.cols() == 1 && b.cols() == 1 && metric == GroundMetric::euclidean && a.rows() == b.rows())
    return wasserstein_1d({a.data(), static_cast<std::size_t>(a.rows())}, {b.data(), static_cast<std::size_t>(b.rows())}, p);
  return wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), p, metric);
}

double gaussian_w2_closed_form(const Vector& mean, const Vector& diag_cov) {
  if (mean.size() != diag_cov.size()) throw InvalidArgument("diag_cov", "dimension mismatch with mean");
  double s = mean.squaredNorm();
  for (Eigen::Index j = 0; j < diag_cov.size(); ++j) {
    if (!(diag_cov[j] > 0.0)) throw InvalidArgument("diag_cov", "variances must be positive");
    const double r = std::sqrt(diag_cov[j]) - 1.0;
    s += r * r;
  }
  return std::sqrt(s);
}

DistanceEstimate wasserstein_bootstrap(const PointCloud& a, const PointCloud& b, double p, int replicates,
                                       std::uint64_t seed, GroundMetric metric, int threads) {
  if (replicates < 2) throw InvalidArgument("replicates", "bootstrap needs at least 2 replicates");
  DistanceEstimate est;
  est.distance = wasserstein_uniform(a, b, p, metric);
  std::vector<double> reps(static_cast<std::size_t>(replicates));
  parallel_for(reps.size(), threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    auto resample = [&](const PointCloud& src) {
      PointCloud out(src.rows(), src.cols());
      for (Eigen::Index i = 0; i < src.rows(); ++i)
        out.row(i) = src.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(src.rows()))));
      return out;
    };
    const PointCloud ra = resample(a);
    const PointCloud rb = resample(b);
    reps[r] = wasserstein_uniform(ra, rb, p, metric);
  });
  const auto ms = mean_stderr(reps);
  est.se = ms.se * std::sqrt(static_cast<double>(replicates));
  return est;
}

}  // namespace steinw
