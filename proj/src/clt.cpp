#include "steinw/clt.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>

namespace steinw {

namespace {

double subfactorial(int m) {
  // !m = E[(E - 1)^m] for E ~ Exp(1).
  double prev = 1.0, cur = 0.0;
  if (m == 0) return 1.0;
  for (int k = 2; k <= m; ++k) {
    const double next = (k - 1) * (cur + prev);
    prev = cur;
    cur = next;
  }
  return cur;
}

double binomial(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

}  // namespace

SummandKind parse_summand_kind(const std::string& name) {
  if (name == "rademacher") return SummandKind::rademacher;
  if (name == "uniform") return SummandKind::uniform;
  if (name == "exponential") return SummandKind::exponential;
  if (name == "gaussian") return SummandKind::gaussian;
  throw InvalidArgument("distribution", "unknown summand law '" + name + "'");
}

std::string to_string(SummandKind kind) {
  switch (kind) {
    case SummandKind::rademacher: return "rademacher";
    case SummandKind::uniform: return "uniform";
    case SummandKind::exponential: return "exponential";
    case SummandKind::gaussian: return "gaussian";
  }
  return "unknown";
}

SummandDistribution::SummandDistribution(SummandKind kind, int dim, bool validate_now) : kind_(kind), dim_(dim) {
  if (dim < 1) throw InvalidArgument("d", "must be >= 1");
  if (validate_now) validate(0x5eed0000ULL + static_cast<std::uint64_t>(kind) * 131 + static_cast<std::uint64_t>(dim));
}

double SummandDistribution::draw_coordinate(Rng& rng) const {
  switch (kind_) {
    case SummandKind::rademacher: return rademacher(rng);
    case SummandKind::uniform: return std::sqrt(3.0) * (2.0 * uniform01(rng) - 1.0);
    case SummandKind::exponential: return -std::log1p(-uniform01(rng)) - 1.0;
    case SummandKind::gaussian: return standard_normal(rng);
  }
  return 0.0;
}

Vector SummandDistribution::draw(Rng& rng) const {
  Vector x(dim_);
  for (int j = 0; j < dim_; ++j) x[j] = draw_coordinate(rng);
  return x;
}

double SummandDistribution::coordinate_moment(int m) const {
  if (m < 0) throw InvalidArgument("m", "must be >= 0");
  const bool even = m % 2 == 0;
  switch (kind_) {
    case SummandKind::rademacher: return even ? 1.0 : 0.0;
    case SummandKind::uniform: return even ? std::pow(3.0, m / 2.0) / (m + 1.0) : 0.0;
    case SummandKind::exponential: return subfactorial(m);
    case SummandKind::gaussian: {
      if (!even) return 0.0;
      double v = 1.0;
      for (int k = m - 1; k > 1; k -= 2) v *= k;
      return v;
    }
  }
  return 0.0;
}

double SummandDistribution::norm_moment(double r) const {
  if (!(r >= 0.0)) throw InvalidArgument("r", "must be >= 0");
  if (r == 0.0) return 1.0;
  const double d = dim_;
  if (kind_ == SummandKind::rademacher) return std::pow(d, r / 2.0);
  if (kind_ == SummandKind::gaussian)
    return std::exp(0.5 * r * std::log(2.0) + std::lgamma((d + r) / 2.0) - std::lgamma(d / 2.0));
  const bool even_integer = std::abs(r - std::round(r)) < 1e-12 && std::lround(r) % 2 == 0;
  if (even_integer) {
    // E(Σ X_j^2)^h by convolution over coordinates.
    const int h = static_cast<int>(std::lround(r)) / 2;
    std::vector<double> acc(h + 1, 0.0);
    acc[0] = 1.0;
    for (int a = 1; a <= h; ++a) acc[a] = coordinate_moment(2 * a);
    for (int j = 1; j < dim_; ++j) {
      std::vector<double> next(h + 1, 0.0);
      for (int q = 0; q <= h; ++q)
        for (int a = 0; a <= q; ++a) next[q] += binomial(q, a) * coordinate_moment(2 * a) * acc[q - a];
      acc = std::move(next);
    }
    return acc[h];
  }
  if (dim_ == 1) {
    if (kind_ == SummandKind::uniform) return std::pow(3.0, r / 2.0) / (r + 1.0);
    // E|E - 1|^r = e^{-1} (∫_0^1 u^r e^u du + Γ(r + 1)).
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double inner = integrator.integrate([r](double u) { return std::pow(u, r) * std::exp(u); }, 0.0, 1.0);
    return std::exp(-1.0) * (inner + std::tgamma(r + 1.0));
  }
  // No closed form: fixed-seed Monte Carlo.
  Rng rng = make_stream(0xabcdefULL, static_cast<std::uint64_t>(r * 1000.0));
  constexpr int kDraws = 2'000'000;
  std::vector<double> v(kDraws);
  for (auto& x : v) x = std::pow(draw(rng).norm(), r);
  return pairwise_sum(v) / kDraws;
}

double SummandDistribution::second_order_tensor_norm() const {
  return std::sqrt(static_cast<double>(dim_)) * (coordinate_moment(4) + dim_ - 1.0);
}

void SummandDistribution::validate(std::uint64_t seed, int draws) const {
  Rng rng = make_stream(seed, 0);
  std::vector<Vector> xs(draws);
  for (auto& x : xs) x = draw(rng);
  for (int a = 0; a < dim_; ++a) {
    std::vector<double> v(draws);
    for (int i = 0; i < draws; ++i) v[i] = xs[i][a];
    const auto ms = mean_stderr(v);
    if (std::abs(ms.mean) > 4.0 * ms.se) throw InvalidArgument("distribution", name() + " summands are not centred");
    for (int b = a; b < dim_; ++b) {
      for (int i = 0; i < draws; ++i) v[i] = xs[i][a] * xs[i][b];
      const auto cov = mean_stderr(v);
      const double target = a == b ? 1.0 : 0.0;
      if (std::abs(cov.mean - target) > 4.0 * cov.se)
        throw InvalidArgument("distribution", name() + " summands do not have identity covariance");
    }
  }
}

CltPairSampler::CltPairSampler(SummandDistribution dist, int n) : dist_(std::move(dist)), n_(n) {
  if (n < 1) throw InvalidArgument("n", "must be >= 1");
  if (n > kMaxSummands) throw InvalidArgument("n", "at most 1e5 summands are retained per draw");
}

Anchor CltPairSampler::draw_anchor(Rng& rng) const {
  const int d = dist_.dim();
  Anchor anchor;
  anchor.context.resize(static_cast<std::size_t>(n_) * d);
  anchor.x = Vector::Zero(d);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < d; ++j) {
      const double v = dist_.draw_coordinate(rng);
      anchor.context[static_cast<std::size_t>(i) * d + j] = v;
      anchor.x[j] += v;
    }
  anchor.x /= std::sqrt(static_cast<double>(n_));
  return anchor;
}

Vector CltPairSampler::draw_conditional(const Anchor& anchor, double t, Rng& rng) const {
  const int d = dist_.dim();
  const auto idx = uniform_index(rng, static_cast<std::size_t>(n_));
  const Vector fresh = dist_.draw(rng);
  const Eigen::Map<const Vector> old(&anchor.context[idx * d], d);
  const double threshold = std::sqrt(n_ * std::expm1(2.0 * t));
  if (fresh.norm() <= threshold && old.norm() <= threshold)
    return anchor.x + (fresh - old) / std::sqrt(static_cast<double>(n_));
  return anchor.x;
}

std::shared_ptr<CltPairSampler> clt_pair_sampler(const SummandDistribution& dist, int n) {
  return std::make_shared<CltPairSampler>(dist, n);
}

double CltRateInputs::m() const { return std::min(4.0, p + q) - 2.0; }

CltRateInputs CltRateInputs::from_distribution(const SummandDistribution& dist, double n, double p, double q) {
  CltRateInputs in;
  in.n = n;
  in.p = p;
  in.q = q;
  in.dim = dist.dim();
  in.moment_pq = dist.norm_moment(p + q);
  in.moment_2m = dist.norm_moment(2.0 + in.m());
  in.tensor_norm = dist.second_order_tensor_norm();
  return in;
}

CltRate clt_rate_expression(const CltRateInputs& in) {
  if (!(in.n >= 1.0)) throw InvalidArgument("n", "must be >= 1");
  if (!(in.p >= 2.0)) throw InvalidArgument("p", "must be >= 2");
  if (!(in.q >= 0.0 && in.q <= in.p)) throw InvalidArgument("q", "must lie in [0, p]");
  if (in.dim < 1) throw InvalidArgument("d", "must be >= 1");
  if (!std::isfinite(in.moment_pq) || in.moment_pq < 0.0) throw InvalidArgument("moment_pq", "missing or invalid E||X||^{p+q}");
  if (!std::isfinite(in.moment_2m) || in.moment_2m < 0.0) throw InvalidArgument("moment_2m", "missing or invalid E||X||^{2+m}");
  const double m = in.m();
  CltRate rate;
  rate.leading = std::pow(in.n, -0.5 + (2.0 - in.q) / (2.0 * in.p)) * std::pow(in.moment_pq, 1.0 / in.p);
  rate.second = std::pow(in.n, -m / 4.0) * std::sqrt(in.moment_2m);
  if (m >= 2.0) {
    if (!std::isfinite(in.tensor_norm) || in.tensor_norm < 0.0)
      throw InvalidArgument("tensor_norm", "missing or invalid ||E[X^{(2)} ||X||^2]||");
    rate.remainder = std::pow(static_cast<double>(in.dim), 0.25) * std::sqrt(in.tensor_norm);
  } else {
    rate.remainder_uncomputable = true;
  }
  rate.value = rate.leading + rate.second + rate.remainder;
  return rate;
}

double rosenthal_bound(double n, double p, double mean_norm, double second_moment, double p_moment) {
  if (!(n >= 1.0)) throw InvalidArgument("n", "must be >= 1");
  if (!(p >= 2.0)) throw InvalidArgument("p", "must be >= 2");
  if (mean_norm < 0.0 || second_moment < 0.0 || p_moment < 0.0) throw InvalidArgument("moments", "must be >= 0");
  return n * mean_norm + std::sqrt(n) * std::sqrt(second_moment) + std::pow(n, 1.0 / p) * std::pow(p_moment, 1.0 / p);
}

PointCloud clt_replicas(const SummandDistribution& dist, int n, int count, std::uint64_t seed, int threads) {
  if (n < 1) throw InvalidArgument("n", "must be >= 1");
  const int d = dist.dim();
  PointCloud out(count, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    Vector s = Vector::Zero(d);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < d; ++j) s[j] += dist.draw_coordinate(rng);
    out.row(static_cast<Eigen::Index>(i)) = (s * scale).transpose();
  });
  return out;
}

DistanceEstimate clt_empirical_wp(const SummandDistribution& dist, int n, double p, int n_samples, std::uint64_t seed,
                                  int threads, int bootstrap) {
  if (n_samples < 100) throw InvalidArgument("n_samples", "must be >= 100");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  const PointCloud sums = clt_replicas(dist, n, n_samples, derive_seed(seed, 1), threads);
  const int d = dist.dim();
  PointCloud gauss(n_samples, d);
  const std::uint64_t gseed = derive_seed(seed, 2);
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = make_stream(gseed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < d; ++j) gauss(i, j) = standard_normal(rng);
  }
  return wasserstein_bootstrap(sums, gauss, p, bootstrap, derive_seed(seed, 3), GroundMetric::euclidean, threads);
}

RateFit clt_rate_fit(std::span<const double> ns, std::span<const double> distances) {
  if (ns.size() != distances.size()) throw InvalidArgument("distances", "length differs from ns");
  if (ns.size() < 3) throw InvalidArgument("ns", "need at least 3 points");
  std::vector<double> x(ns.size()), y(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0)) throw InvalidArgument("ns", "must be positive");
    if (!(distances[i] > 0.0)) throw InvalidArgument("distances", "must be positive");
    x[i] = std::log(ns[i]);
    y[i] = std::log(distances[i]);
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("ns", "need at least two distinct sizes");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

CltExperiment clt_experiment(const SummandDistribution& dist, std::span<const int> ns, double p, double q,
                             int n_samples, std::uint64_t seed, int threads) {
  CltExperiment out;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const int n = ns[i];
    const std::uint64_t row_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    const auto est = clt_empirical_wp(dist, n, p, n_samples, row_seed, threads);
    CltRow row;
    row.n = n;
    row.p = p;
    row.q = q;
    row.distance = est.distance;
    row.se = est.se;
    row.rate_expression = clt_rate_expression(CltRateInputs::from_distribution(dist, n, p, q)).value;
    row.seed = row_seed;
    out.rows.push_back(row);
    xs.push_back(n);
    ys.push_back(std::max(est.distance, std::numeric_limits<double>::min()));
  }
  if (xs.size() >= 3) out.fit = clt_rate_fit(xs, ys);
  return out;
}

}  // namespace steinw
