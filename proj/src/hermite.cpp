#include "steinw/hermite.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace steinw {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double even_power_lp(int k, double p, int quad_points) {
  const int degree = k * static_cast<int>(std::lround(p));
  const int n = std::max(quad_points, degree / 2 + 1);
  auto eval = [&](int points) {
    const auto rule = gauss_hermite_rule(points);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * std::pow(std::abs(hermite_eval(k, rule.nodes[i])), p);
    return s;
  };
  const double coarse = eval(n);
  const double fine = eval(2 * n);
  if (std::abs(fine - coarse) > 1e-9 * std::abs(fine))
    throw ConvergenceError("hermite_lp_norm: Gauss-Hermite refinements disagree for k=" + std::to_string(k));
  return fine;
}

// Splits the real line at the roots of He_k so every panel integrand is smooth inside.
double general_power_lp(int k, double p) {
  const auto roots = gauss_hermite_rule(k).nodes;
  const double reach = std::max(std::abs(roots.front()), std::abs(roots.back())) + std::sqrt(k * p) + 12.0;
  std::vector<double> cuts;
  cuts.push_back(-reach);
  cuts.insert(cuts.end(), roots.begin(), roots.end());
  cuts.push_back(reach);

  const double norm_const = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double x, double) {
    return std::pow(std::abs(hermite_eval(k, x)), p) * norm_const * std::exp(-0.5 * x * x);
  };
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  double total = 0.0;
  double error_sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double err = 0.0;
    double l1 = 0.0;
    total += integrator.integrate(integrand, cuts[i], cuts[i + 1], 1e-13, &err, &l1);
    error_sum += err;
  }
  if (!(error_sum <= 1e-9 * total))
    throw ConvergenceError("hermite_lp_norm: tanh-sinh refinement did not converge for k=" + std::to_string(k));
  return total;
}

// Orthonormal (h_n, h_{n-1}) with h_j = He_j / sqrt(j!).
std::pair<double, double> normalized_hermite_pair(int n, double x) {
  double prev = 0.0;
  double cur = 1.0;
  for (int j = 0; j < n; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) / std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return {cur, prev};
}

}  // namespace

MultiIndex::MultiIndex(std::vector<int> coords, int dim) : coords_(std::move(coords)), dim_(dim) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  for (int c : coords_)
    if (c < 0 || c >= dim) throw InvalidArgument("idx", "coordinate " + std::to_string(c) + " outside [0, d)");
}

std::vector<int> MultiIndex::counts() const {
  std::vector<int> c(dim_, 0);
  for (int j : coords_) ++c[j];
  return c;
}

double hermite_eval(int k, double x) {
  if (k < 0) throw InvalidArgument("k", "order must be >= 0");
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int n = 1; n < k; ++n) {
    const double next = x * cur - n * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double hermite_eval(const MultiIndex& idx, std::span<const double> x) {
  if (static_cast<int>(x.size()) != idx.dim()) throw InvalidArgument("x", "dimension mismatch");
  const auto counts = idx.counts();
  double v = 1.0;
  for (int j = 0; j < idx.dim(); ++j) v *= hermite_eval(counts[j], x[j]);
  return v;
}

double hermite_sq_norm(const MultiIndex& idx) {
  double v = 1.0;
  for (int c : idx.counts()) v *= factorial(c);
  return v;
}

QuadratureRule gauss_hermite_rule(int n) {
  if (n < 1) throw InvalidArgument("n", "quadrature needs at least one node");
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int i = 0; i < n - 1; ++i) sub[i] = std::sqrt(static_cast<double>(i + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ConvergenceError("gauss_hermite_rule: eigen solver failed");
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton-polish each node on the orthonormal recurrence, then w = 1/(n h_{n-1}(x)^2),
  // which keeps relative accuracy in the far tails where eigenvector entries underflow.
  for (int i = 0; i < n; ++i) {
    double x = solver.eigenvalues()[i];
    double h_prev = 0.0;
    for (int iter = 0; iter < 3; ++iter) {
      const auto [hn, hn1] = normalized_hermite_pair(n, x);
      const double derivative = std::sqrt(static_cast<double>(n)) * hn1;
      if (derivative == 0.0) break;
      x -= hn / derivative;
      h_prev = hn1;
    }
    h_prev = normalized_hermite_pair(n, x).second;
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / (n * h_prev * h_prev);
  }
  const double total = pairwise_sum(rule.weights);
  for (double& w : rule.weights) w /= total;
  return rule;
}

double hermite_lp_norm(int k, double p, int quad_points) {
  if (k < 0) throw InvalidArgument("k", "order must be >= 0");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  if (quad_points < 32) throw InvalidArgument("quad_points", "must be >= 32");
  if (k == 0) return 1.0;
  const bool even_integer = std::abs(p - std::round(p)) < 1e-14 && std::lround(p) % 2 == 0;
  const double integral = even_integer ? even_power_lp(k, p, quad_points) : general_power_lp(k, p);
  return std::pow(integral, 1.0 / p);
}

std::vector<double> h_norm_weights(int order, int dim) {
  if (order < 1) throw InvalidArgument("order", "must be >= 1");
  const std::size_t trailing = checked_power(dim, order - 1);
  std::vector<double> tw(trailing);
  std::vector<int> digits(order - 1, 0);
  std::vector<int> counts(dim, 0);
  for (std::size_t f = 0; f < trailing; ++f) {
    std::fill(counts.begin(), counts.end(), 0);
    std::size_t r = f;
    for (int m = 0; m < order - 1; ++m) {
      ++counts[r % dim];
      r /= dim;
    }
    double w = 1.0;
    for (int c : counts) w *= factorial(c);
    tw[f] = w;
  }
  std::vector<double> weights(trailing * dim);
  for (int j = 0; j < dim; ++j) std::copy(tw.begin(), tw.end(), weights.begin() + j * trailing);
  return weights;
}

double tensor_h_dot(const Tensor& a, const Tensor& b) {
  if (a.order() != b.order() || a.dim() != b.dim()) throw InvalidArgument("tensor", "order/dimension mismatch");
  if (a.order() < 1) throw InvalidArgument("tensor", "order must be >= 1");
  const auto w = h_norm_weights(a.order(), a.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
  return s;
}

double tensor_h_norm(const Tensor& m) { return std::sqrt(tensor_h_dot(m, m)); }

}  // namespace steinw
