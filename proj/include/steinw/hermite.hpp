#pragma once

#include "steinw/common.hpp"
#include "steinw/tensor.hpp"

#include <span>
#include <vector>

namespace steinw {

/// Tuple of coordinate labels in {0..d-1} (0-based). Order 0 is the empty tuple.
class MultiIndex {
 public:
  MultiIndex(std::vector<int> coords, int dim);

  int order() const noexcept { return static_cast<int>(coords_.size()); }
  int dim() const noexcept { return dim_; }
  std::span<const int> coords() const noexcept { return coords_; }
  /// Number of times each coordinate occurs.
  std::vector<int> counts() const;

 private:
  std::vector<int> coords_;
  int dim_;
};

/// Probabilists' Hermite polynomial He_k(x).
double hermite_eval(int k, double x);
/// Multivariate H_i(x) = prod_j He_{c_j}(x_j).
double hermite_eval(const MultiIndex& idx, std::span<const double> x);

/// ||H_i||^2 under the standard Gaussian: prod_j c_j!.
double hermite_sq_norm(const MultiIndex& idx);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

/// n-point Gauss rule for the standard normal weight.
QuadratureRule gauss_hermite_rule(int n);

/// Gaussian L^p norm of He_k: (∫|He_k|^p dγ)^{1/p}.
double hermite_lp_norm(int k, double p, int quad_points = 64);

/// Per-entry weights ||H_i||^2 of the trailing k-1 coordinates.
std::vector<double> h_norm_weights(int order, int dim);

double tensor_h_dot(const Tensor& a, const Tensor& b);
double tensor_h_norm(const Tensor& m);

}  // namespace steinw
