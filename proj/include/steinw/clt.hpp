#pragma once

#include "steinw/common.hpp"
#include "steinw/pair_sampler.hpp"
#include "steinw/transport.hpp"

#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace steinw {

enum class SummandKind { rademacher, uniform, exponential, gaussian };

SummandKind parse_summand_kind(const std::string& name);
std::string to_string(SummandKind kind);

/// Law of X_1: i.i.d. coordinates with mean 0 and variance 1.
class SummandDistribution {
 public:
  SummandDistribution(SummandKind kind, int dim, bool validate = true);

  SummandKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  std::string name() const { return to_string(kind_); }

  Vector draw(Rng& rng) const;
  double draw_coordinate(Rng& rng) const;

  /// E[X_1j^m] for a single coordinate.
  double coordinate_moment(int m) const;
  /// E||X_1||^r.
  double norm_moment(double r) const;
  /// ||E[X_1^{⊗2} ||X_1||^2]||.
  double second_order_tensor_norm() const;

  /// Mean and covariance of 10^5 draws against 0 and I within 4σ; throws otherwise.
  void validate(std::uint64_t seed, int draws = 100000) const;

 private:
  SummandKind kind_;
  int dim_;
};

/// Exchangeable pair for S_n = n^{-1/2} Σ X_i: resample one summand, truncated at √(n(e^{2t}−1)).
class CltPairSampler final : public PairSampler {
 public:
  static constexpr int kMaxSummands = 100000;
  CltPairSampler(SummandDistribution dist, int n);

  int dimension() const override { return dist_.dim(); }
  bool exchangeable() const override { return true; }
  std::string name() const override { return "clt_" + dist_.name() + "_n" + std::to_string(n_); }
  Anchor draw_anchor(Rng& rng) const override;
  Vector draw_conditional(const Anchor& anchor, double t, Rng& rng) const override;

  int summands() const noexcept { return n_; }

 private:
  SummandDistribution dist_;
  int n_;
};

std::shared_ptr<CltPairSampler> clt_pair_sampler(const SummandDistribution& dist, int n);

struct CltRateInputs {
  double n = 1.0;
  double p = 2.0;
  double q = 2.0;
  double moment_pq = std::numeric_limits<double>::quiet_NaN();   // E||X||^{p+q}
  double moment_2m = std::numeric_limits<double>::quiet_NaN();   // E||X||^{2+m}
  double tensor_norm = std::numeric_limits<double>::quiet_NaN(); // ||E[X^{⊗2}||X||^2]||
  int dim = 1;

  double m() const;
  static CltRateInputs from_distribution(const SummandDistribution& dist, double n, double p, double q);
};

struct CltRate {
  double value = 0.0;  // modulo the unknown constant C_p
  double leading = 0.0;
  double second = 0.0;
  double remainder = 0.0;
  bool remainder_uncomputable = false;
};

CltRate clt_rate_expression(const CltRateInputs& in);

double rosenthal_bound(double n, double p, double mean_norm, double second_moment, double p_moment);

/// Replicas of S_n and i.i.d. Gaussians, compared by exact empirical W_p with a bootstrap error.
DistanceEstimate clt_empirical_wp(const SummandDistribution& dist, int n, double p, int n_samples, std::uint64_t seed,
                                  int threads = 0, int bootstrap = 50);

PointCloud clt_replicas(const SummandDistribution& dist, int n, int count, std::uint64_t seed, int threads = 0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

RateFit clt_rate_fit(std::span<const double> ns, std::span<const double> distances);

struct CltRow {
  int n = 0;
  double p = 2.0;
  double q = 2.0;
  double distance = 0.0;
  double se = 0.0;
  double rate_expression = 0.0;
  std::uint64_t seed = 0;
};

struct CltExperiment {
  std::vector<CltRow> rows;
  RateFit fit;
};

CltExperiment clt_experiment(const SummandDistribution& dist, std::span<const int> ns, double p, double q,
                             int n_samples, std::uint64_t seed, int threads = 0);

}  // namespace steinw
