#pragma once

#include "steinw/common.hpp"
#include "steinw/pair_sampler.hpp"
#include "steinw/tensor.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace steinw {

std::vector<double> geometric_grid(double t_min, double t_max, int nodes);

struct BoundConfig {
  double s = 1.0;
  std::vector<double> t_grid = geometric_grid(1e-4, 20.0, 200);
  int k_max = 8;
  int n_outer = 2000;
  int replicates = 8;
  std::uint64_t seed = 0;
  int threads = 0;
  double tail_tolerance = 0.1;

  void validate() const;
};

/// Generator b·∇ + <a, Hess> with curvature ρ and contraction rate κ.
struct DiffusionSpec {
  int dim = 1;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> diffusion;
  double rho = 0.0;
  double kappa = 1.0;

  static DiffusionSpec ornstein_uhlenbeck(int dim);
  void validate() const;
};

enum class Centering { none, gaussian, diffusion };
enum class TensorNorm { euclidean, hermite, a_inverse };

/// How the order-k statistic Y_k is built from δ = X_t − X_0:
/// Y_1 = δ/s + c_1, Y_2 = δ⊗δ/(2s) + c_2, Y_k = δ^{⊗k} for k >= 3.
struct MomentPlan {
  int k_max = 8;
  double s = 1.0;
  Centering centering = Centering::gaussian;
  TensorNorm low_norm = TensorNorm::euclidean;
  TensorNorm high_norm = TensorNorm::hermite;
  /// 2 selects the unbiased U-statistic for E||E[Y|X_0]||^2; otherwise the plug-in E||mean Y||^p.
  double p = 2.0;
  const DiffusionSpec* diffusion = nullptr;
};

struct MomentEstimate {
  double estimate = 0.0;
  double se = 0.0;
};

/// E||E[Y_k | X_0]||^2 in the plan's norm at a single t.
MomentEstimate conditional_moment_sq(const PairSampler& sampler, double t, int k, const MomentPlan& plan,
                                     const BoundConfig& cfg);

struct TermSeries {
  int order = 0;
  std::vector<double> raw;       // per-node moment estimate, unclamped
  std::vector<double> se;        // per-node standard error of `raw`
  std::vector<double> weighted;  // per-node weighted contribution to the integrand
  double contribution = 0.0;     // integral of the weighted series
};

struct BoundReport {
  std::string kind;
  std::string sampler;
  double total = 0.0;
  double total_se = 0.0;
  std::vector<double> t_grid;
  std::vector<double> integrand;
  std::vector<double> integrand_se;
  std::vector<TermSeries> terms;
  double tail_diagnostic = 0.0;
  double endpoint_correction = 0.0;
  double endpoint_exponent = -0.5;
  std::size_t clamp_events = 0;
  std::size_t significant_clamps = 0;  // clamped estimates more than 3 se below zero
  std::size_t evaluations = 0;
  double p = 2.0;

  // General-target fields.
  double horizon = std::numeric_limits<double>::quiet_NaN();
  double final_bound = std::numeric_limits<double>::quiet_NaN();
  double squared_total = std::numeric_limits<double>::quiet_NaN();
  double squared_final_bound = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> notes;
  BoundConfig config;
};

/// Gaussian target, W_2.
BoundReport gauss_w2_bound(const PairSampler& sampler, const BoundConfig& cfg);
/// Gaussian target in one dimension, W_p with per-term L^p norms.
BoundReport wp_gauss_1d_bound(const PairSampler& sampler, double p, const BoundConfig& cfg);
/// Gaussian target, W_p, exchangeable pairs only.
BoundReport wp_gauss_exch_bound(const PairSampler& sampler, double p, const BoundConfig& cfg);

/// Gradient weight f_k(t) under a CD(ρ, ∞) condition.
double curvature_weight_fk(int k, double t, double rho, int dim);
double log_curvature_weight_fk(int k, double t, double rho, int dim);

/// Diffusion target on [0, T]. `total` uses the nominal weights f_1, f_2, f_k/(s k!); `squared_*` the squared pattern.
BoundReport general_w2_bound(const PairSampler& sampler, const DiffusionSpec& spec, double horizon,
                             const BoundConfig& cfg);

/// Upper bound on f_k(t)·(t/d)^{(k−1)/2}-type growth for t in [0, 1]; three cases in the sign of ρ.
double corollary_constant(double rho, int k);

/// ∫(y − x)^{⊗k} K(x, dy) for the chain's kernel.
using KernelMoments = std::function<Tensor(const Vector& x, int k)>;

struct ChainBoundReport {
  double drift_term = 0.0;          // C τ E||b||_{a^{-1}}
  double drift_mismatch = 0.0;      // E||m_1/s − b||^2_{a^{-1}} ^{1/2}
  double diffusion_mismatch = 0.0;  // E||m_2/(2s) − a||^2_{a^{-1}} ^{1/2}
  double third_moment = 0.0;        // E||m_3||^2_{a^{-1}} ^{1/2}
  std::vector<double> series;       // weighted k >= 4 terms
  double constant = 1.0;            // C(ρ)
  double total = 0.0;               // right-hand side before dividing by 1 − e^{−κ}
  double bound = 0.0;
  double tau = 0.0;
  double s = 0.0;
};

ChainBoundReport markov_chain_w2_bound(const PointCloud& stationary, const KernelMoments& kernel_moments,
                                       const DiffusionSpec& spec, double tau, double s, int k_max = 8);

/// Nonuniform composite Simpson; a trailing odd interval uses the quadratic through the last three nodes.
double simpson_integrate(std::span<const double> t, std::span<const double> f);

}  // namespace steinw
