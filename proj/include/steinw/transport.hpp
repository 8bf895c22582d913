#pragma once

#include "steinw/common.hpp"

#include <span>
#include <vector>

namespace steinw {

enum class GroundMetric { euclidean, torus };

/// Weighted point cloud; weights are nonnegative and sum to one.
struct EmpiricalMeasure {
  PointCloud points;
  std::vector<double> weights;

  static EmpiricalMeasure uniform(PointCloud points);
  static EmpiricalMeasure point_mass(const Vector& x);

  int dim() const noexcept { return static_cast<int>(points.cols()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  bool is_uniform() const;
  void validate() const;
};

double ground_distance(std::span<const double> x, std::span<const double> y, GroundMetric metric);

double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p);

/// W_2 between a weighted point set on the circle R/Z and the uniform measure.
double wasserstein2_circle_uniform(std::span<const double> points, std::span<const double> weights);

/// Exact optimal transport cost^(1/p).
double wasserstein_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                         GroundMetric metric = GroundMetric::euclidean);

/// Exact W_p between two uniform clouds of equal size; sorts in 1D, otherwise solves exactly.
double wasserstein_uniform(const PointCloud& a, const PointCloud& b, double p,
                           GroundMetric metric = GroundMetric::euclidean);

double gaussian_w2_closed_form(const Vector& mean, const Vector& diag_cov);

struct DistanceEstimate {
  double distance = 0.0;
  double se = 0.0;
};

/// W_p between two uniform clouds with a bootstrap standard error (both clouds resampled).
DistanceEstimate wasserstein_bootstrap(const PointCloud& a, const PointCloud& b, double p, int replicates,
                                       std::uint64_t seed, GroundMetric metric = GroundMetric::euclidean,
                                       int threads = 0);

namespace ot {

inline constexpr std::size_t kMaxCostEntries = 10'000'000;
inline constexpr std::size_t kMaxAssignment = 2048;

/// Minimum of sum_i cost(i, perm(i)) over permutations.
double assignment_cost(const Matrix& cost);

/// Minimum-cost transportation between `supply` (rows) and `demand` (columns) by network simplex.
double transport_cost(const Matrix& cost, std::span<const double> supply, std::span<const double> demand);

}  // namespace ot

}  // namespace steinw
