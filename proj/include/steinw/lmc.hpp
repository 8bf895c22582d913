#pragma once

#include "steinw/common.hpp"
#include "steinw/stein_bounds.hpp"
#include "steinw/tensor.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace steinw {

/// Potential u on R^d accessed one partial derivative at a time.
struct Potential {
  int dim = 1;
  std::function<double(std::span<const double> x, int i)> partial;
  double rho = 1.0;        // coordinatewise strong convexity
  double lipschitz = 1.0;  // coordinatewise Lipschitz constant of the partials
  std::string label;
  /// Per-coordinate variances when the target exp(−u) is a centered Gaussian; empty otherwise.
  std::vector<double> gaussian_variances;

  static Potential gaussian(int dim);
  static Potential diagonal_quadratic(std::vector<double> curvatures);
  /// Σ x_i²/2 + log cosh x_i.
  static Potential log_cosh(int dim);
  static Potential by_name(const std::string& name, int dim);

  bool is_gaussian() const noexcept { return !gaussian_variances.empty(); }
  Vector gradient(const Vector& x) const;
  /// Probes ∇u(0) = 0 and the coordinatewise monotonicity and Lipschitz inequalities.
  void validate(std::uint64_t seed = 0x5eed, int probes = 64) const;
};

struct ChainState {
  Vector x;
  std::uint64_t steps = 0;
  double h = 0.1;
};

enum class Scheme { coordinate, euler_maruyama };
Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

/// One coordinate move: x_I += −h ∂_I u(x) + √(2h) B.
void coordinate_step(ChainState& state, const Potential& u, Rng& rng);
/// x += −h ∇u(x) + √(2h) N.
void euler_maruyama_step(ChainState& state, const Potential& u, Rng& rng);
void advance(ChainState& state, const Potential& u, Scheme scheme, Rng& rng);

double stationary_second_moment_bound(int dim, double h, double rho, double lipschitz);

struct SupNormBound {
  double exact = 0.0;
  double simplified = 0.0;
};
SupNormBound sup_norm_bound(double h, double rho, double lipschitz);

double contraction_factor(int dim, double h, double rho, double lipschitz);

struct MomentRun {
  double mean_sq_norm = 0.0;
  double se = 0.0;
  double first_half = 0.0;   // kept-segment halves, for the stationarity check
  double second_half = 0.0;
  bool stationary = true;
  double max_abs_coordinate = 0.0;
  std::vector<double> chain_means;
};

/// Independent chains from 0; the first half of each is discarded.
/// With `monitor_sup`, every coordinate is checked against the sup-norm bound.
MomentRun stationary_second_moment(const Potential& u, double h, int chains, std::uint64_t steps, std::uint64_t seed,
                                   Scheme scheme = Scheme::coordinate, int threads = 0, bool monitor_sup = false);

struct ContractionRun {
  double ratio = 0.0;
  double se = 0.0;
  double expected = 0.0;
};

/// One-step E||X'−Y'||²/||x−y||² for synchronously coupled coordinate moves (shared I and B).
ContractionRun coupled_contraction(const Potential& u, double h, int trials, std::uint64_t seed, int threads = 0);

/// Draws from exp(−u) for Gaussian potentials.
PointCloud gaussian_target_samples(const Potential& u, int count, std::uint64_t seed);

struct LmcRow {
  std::string scheme;
  int dim = 0;
  double h = 0.0;
  std::uint64_t n = 0;
  double w2 = 0.0;
  double se = 0.0;
  double moment_bound = 0.0;
  double sup_bound = 0.0;
  std::uint64_t seed = 0;
};

struct LmcThreshold {
  int dim = 0;
  double eps = 0.0;
  double h = 0.0;
  std::uint64_t n_star = 0;  // 0 when ε is not reached on the grid
};

struct LmcReference {
  std::string kind;  // "exact" or "euler_maruyama"
  double h = 0.0;
  std::uint64_t steps = 0;
  double mean_sq_norm = 0.0;
};

struct LmcConfig {
  std::string potential = "gaussian";
  Scheme scheme = Scheme::coordinate;
  std::vector<int> dims{1};
  std::vector<double> eps{0.3};
  std::vector<double> h_grid{0.4, 0.2, 0.1, 0.05};
  std::vector<std::uint64_t> n_grid{1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  int chains = 1000;
  int bootstrap = 20;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

struct LmcReport {
  std::vector<LmcRow> rows;
  std::vector<LmcThreshold> thresholds;
  std::vector<LmcReference> references;
  double exponent_dim = std::numeric_limits<double>::quiet_NaN();
  double exponent_eps = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;
};

/// W_2(ν_n, μ) over the (h, n) grid and the smallest n reaching each ε.
LmcReport lmc_complexity_experiment(const LmcConfig& cfg);

/// Diffusion dX = −∇u dt + √2 dB.
DiffusionSpec langevin_diffusion(const Potential& u);

/// Increment moment tensors of one coordinate move, for the chain-to-diffusion bound.
KernelMoments coordinate_kernel_moments(const Potential& u, double h);

}  // namespace steinw
