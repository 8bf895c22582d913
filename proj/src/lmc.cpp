#include "steinw/lmc.hpp"

#include "steinw/transport.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace steinw {

Potential Potential::gaussian(int dim) {
  auto u = diagonal_quadratic(std::vector<double>(static_cast<std::size_t>(std::max(dim, 0)), 1.0));
  u.label = "gaussian";
  return u;
}

Potential Potential::diagonal_quadratic(std::vector<double> curvatures) {
  if (curvatures.empty()) throw InvalidArgument("dim", "must be >= 1");
  for (double c : curvatures)
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("curvatures", "must be positive and finite");
  Potential u;
  u.dim = static_cast<int>(curvatures.size());
  u.rho = *std::min_element(curvatures.begin(), curvatures.end());
  u.lipschitz = *std::max_element(curvatures.begin(), curvatures.end());
  u.label = "diagonal_quadratic";
  for (double c : curvatures) u.gaussian_variances.push_back(1.0 / c);
  u.partial = [c = std::move(curvatures)](std::span<const double> x, int i) { return c[i] * x[i]; };
  return u;
}

Potential Potential::log_cosh(int dim) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  Potential u;
  u.dim = dim;
  u.rho = 1.0;
  u.lipschitz = 2.0;
  u.label = "log_cosh";
  u.partial = [](std::span<const double> x, int i) { return x[i] + std::tanh(x[i]); };
  return u;
}

Potential Potential::by_name(const std::string& name, int dim) {
  if (name == "gaussian") return gaussian(dim);
  if (name == "log_cosh") return log_cosh(dim);
  throw InvalidArgument("potential", "unknown potential '" + name + "' (expected gaussian or log_cosh)");
}

Vector Potential::gradient(const Vector& x) const {
  Vector g(dim);
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) g[i] = partial(xs, i);
  return g;
}

void Potential::validate(std::uint64_t seed, int probes) const {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (!partial) throw InvalidArgument("potential", "partial derivative callable is required");
  if (!(rho > 0.0)) throw InvalidArgument("rho", "must be > 0");
  if (!(lipschitz >= rho)) throw InvalidArgument("lipschitz", "must be >= rho");
  if (gradient(Vector::Zero(dim)).lpNorm<Eigen::Infinity>() > 1e-10)
    throw InvalidArgument("potential", "gradient at the origin must vanish");
  Rng rng = make_stream(seed, 0);
  Vector x(dim), y(dim);
  for (int p = 0; p < probes; ++p) {
    for (int j = 0; j < dim; ++j) x[j] = 3.0 * standard_normal(rng);
    for (int i = 0; i < dim; ++i) {
      y = x;
      y[i] += 3.0 * standard_normal(rng);
      const double dx = y[i] - x[i];
      const double dg = partial({y.data(), static_cast<std::size_t>(dim)}, i) -
                        partial({x.data(), static_cast<std::size_t>(dim)}, i);
      const double slack = 1e-12 * (1.0 + std::abs(dg * dx));
      if (dg * dx < rho * dx * dx - slack)
        throw InvalidArgument("rho", "coordinatewise strong convexity fails at a probe (coordinate " + std::to_string(i) + ")");
      if (dg * dg > lipschitz * lipschitz * dx * dx + slack)
        throw InvalidArgument("lipschitz", "coordinatewise Lipschitz bound fails at a probe (coordinate " + std::to_string(i) + ")");
    }
  }
}

Scheme parse_scheme(const std::string& name) {
  if (name == "coordinate") return Scheme::coordinate;
  if (name == "euler_maruyama") return Scheme::euler_maruyama;
  throw InvalidArgument("scheme", "unknown scheme '" + name + "' (expected coordinate or euler_maruyama)");
}

std::string to_string(Scheme s) { return s == Scheme::coordinate ? "coordinate" : "euler_maruyama"; }

void coordinate_step(ChainState& state, const Potential& u, Rng& rng) {
  const auto i = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(u.dim)));
  const double b = rademacher(rng);
  const double g = u.partial({state.x.data(), static_cast<std::size_t>(u.dim)}, i);
  state.x[i] += -state.h * g + std::sqrt(2.0 * state.h) * b;
  ++state.steps;
}

void euler_maruyama_step(ChainState& state, const Potential& u, Rng& rng) {
  const Vector g = u.gradient(state.x);
  const double scale = std::sqrt(2.0 * state.h);
  for (int j = 0; j < u.dim; ++j) state.x[j] += -state.h * g[j] + scale * standard_normal(rng);
  ++state.steps;
}

void advance(ChainState& state, const Potential& u, Scheme scheme, Rng& rng) {
  if (scheme == Scheme::coordinate)
    coordinate_step(state, u, rng);
  else
    euler_maruyama_step(state, u, rng);
}

double stationary_second_moment_bound(int dim, double h, double rho, double lipschitz) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (!(h > 0.0)) throw InvalidArgument("h", "must be > 0");
  if (!(rho > 0.0)) throw InvalidArgument("rho", "must be > 0");
  const double margin = 2.0 * h - lipschitz * lipschitz * h * h;
  if (!(margin > 0.0)) throw InvalidArgument("h", "requires h < 2/L^2");
  return 2.0 * dim * h / (rho * margin);
}

SupNormBound sup_norm_bound(double h, double rho, double lipschitz) {
  if (!(h > 0.0)) throw InvalidArgument("h", "must be > 0");
  const double radicand = 1.0 - 2.0 * h * rho + h * h * lipschitz * lipschitz;
  if (!(radicand >= 0.0 && radicand < 1.0)) throw InvalidArgument("h", "1 - 2h rho + h^2 L^2 must lie in [0, 1)");
  return {std::sqrt(2.0 * h) / (1.0 - std::sqrt(radicand)), 2.0 * std::sqrt(h) / (h * rho * std::sqrt(h))};
}

double contraction_factor(int dim, double h, double rho, double lipschitz) {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (!(h > 0.0)) throw InvalidArgument("h", "must be > 0");
  if (!(h < 2.0 * rho / (lipschitz * lipschitz))) throw InvalidArgument("h", "no contraction unless h < 2 rho / L^2");
  return 1.0 + (lipschitz * lipschitz * h * h - 2.0 * rho * h) / dim;
}

MomentRun stationary_second_moment(const Potential& u, double h, int chains, std::uint64_t steps, std::uint64_t seed,
                                   Scheme scheme, int threads, bool monitor_sup) {
  u.validate();
  if (!(h > 0.0)) throw InvalidArgument("h", "must be > 0");
  if (chains < 2) throw InvalidArgument("chains", "need at least 2 chains");
  if (steps < 4) throw InvalidArgument("steps", "need at least 4 steps");
  const double sup = monitor_sup ? sup_norm_bound(h, u.rho, u.lipschitz).exact : 0.0;

  const auto nc = static_cast<std::size_t>(chains);
  std::vector<double> full(nc), first(nc), second(nc), peak(nc);
  parallel_for(nc, threads, [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    ChainState state{Vector::Zero(u.dim), 0, h};
    const std::uint64_t burn = steps / 2;
    const std::uint64_t kept = steps - burn;
    const std::uint64_t mid = burn + kept / 2;
    std::vector<double> halves[2];
    halves[0].reserve(kept / 2 + 1);
    halves[1].reserve(kept - kept / 2 + 1);
    double top = 0.0;
    for (std::uint64_t t = 0; t < steps; ++t) {
      advance(state, u, scheme, rng);
      const double m = state.x.lpNorm<Eigen::Infinity>();
      top = std::max(top, m);
      if (monitor_sup && m > sup)
        throw Error("chain coordinate " + std::to_string(m) + " exceeds the sup-norm bound " + std::to_string(sup));
      if (t >= burn) halves[t < mid ? 0 : 1].push_back(state.x.squaredNorm());
    }
    const double a = pairwise_sum(halves[0]), b = pairwise_sum(halves[1]);
    first[c] = a / static_cast<double>(halves[0].size());
    second[c] = b / static_cast<double>(halves[1].size());
    full[c] = (a + b) / static_cast<double>(kept);
    peak[c] = top;
  });

  MomentRun run;
  const auto ms = mean_stderr(full);
  run.mean_sq_norm = ms.mean;
  run.se = ms.se;
  run.first_half = mean_stderr(first).mean;
  run.second_half = mean_stderr(second).mean;
  std::vector<double> drift(nc);
  for (std::size_t c = 0; c < nc; ++c) drift[c] = first[c] - second[c];
  const auto dd = mean_stderr(drift);
  run.stationary = std::abs(dd.mean) <= 4.0 * dd.se;
  run.max_abs_coordinate = *std::max_element(peak.begin(), peak.end());
  run.chain_means = std::move(full);
  return run;
}

ContractionRun coupled_contraction(const Potential& u, double h, int trials, std::uint64_t seed, int threads) {
  u.validate();
  if (trials < 2) throw InvalidArgument("trials", "need at least 2 trials");
  ContractionRun out;
  out.expected = contraction_factor(u.dim, h, u.rho, u.lipschitz);
  constexpr std::size_t kBlock = 4096;
  const auto n = static_cast<std::size_t>(trials);
  std::vector<double> ratios(n);
  parallel_for((n + kBlock - 1) / kBlock, threads, [&](std::size_t task) {
    Rng rng = make_stream(seed, task);
    ChainState a{Vector(u.dim), 0, h}, b{Vector(u.dim), 0, h};
    for (std::size_t t = task * kBlock; t < std::min(n, (task + 1) * kBlock); ++t) {
      for (int j = 0; j < u.dim; ++j) {
        a.x[j] = standard_normal(rng);
        b.x[j] = standard_normal(rng);
      }
      const double before = (a.x - b.x).squaredNorm();
      Rng shared = make_stream(rng(), 0);
      Rng twin = shared;
      coordinate_step(a, u, shared);
      coordinate_step(b, u, twin);
      ratios[t] = (a.x - b.x).squaredNorm() / before;
    }
  });
  const auto ms = mean_stderr(ratios);
  out.ratio = ms.mean;
  out.se = ms.se;
  return out;
}

PointCloud gaussian_target_samples(const Potential& u, int count, std::uint64_t seed) {
  if (!u.is_gaussian()) throw InvalidArgument("potential", "exact sampling needs a Gaussian potential");
  if (count < 1) throw InvalidArgument("count", "must be >= 1");
  Rng rng = make_stream(seed, 0);
  PointCloud out(count, u.dim);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < u.dim; ++j) out(i, j) = std::sqrt(u.gaussian_variances[j]) * standard_normal(rng);
  return out;
}

void LmcConfig::validate() const {
  if (dims.empty()) throw InvalidArgument("dims", "must be nonempty");
  for (int d : dims)
    if (d < 1) throw InvalidArgument("dims", "entries must be >= 1");
  if (eps.empty()) throw InvalidArgument("eps", "must be nonempty");
  for (double e : eps)
    if (!(e > 0.0)) throw InvalidArgument("eps", "entries must be > 0");
  if (h_grid.empty()) throw InvalidArgument("h_grid", "must be nonempty");
  for (double h : h_grid)
    if (!(h > 0.0)) throw InvalidArgument("h_grid", "entries must be > 0");
  if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
    throw InvalidArgument("n_grid", "must be strictly increasing and nonempty");
  if (chains < 2) throw InvalidArgument("chains", "must be >= 2");
  if (bootstrap != 0 && bootstrap < 2) throw InvalidArgument("bootstrap", "must be 0 or >= 2");
  for (int d : dims) {
    const auto u = Potential::by_name(potential, d);
    for (double h : h_grid)
      if (!(h < 2.0 * u.rho / (u.lipschitz * u.lipschitz)))
        throw InvalidArgument("h_grid", "h = " + std::to_string(h) + " breaks h < 2 rho / L^2 for " + potential);
  }
}

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(v) / static_cast<double>(v.size());
}

}  // namespace

LmcReport lmc_complexity_experiment(const LmcConfig& cfg) {
  cfg.validate();
  LmcReport rep;
  // best n* per (d, ε)
  std::map<std::pair<int, double>, std::uint64_t> best;
  for (std::size_t di = 0; di < cfg.dims.size(); ++di) {
    const int d = cfg.dims[di];
    const auto u = Potential::by_name(cfg.potential, d);
    u.validate();

    LmcReference ref;
    PointCloud target;
    const std::uint64_t ref_seed = derive_seed(cfg.seed, 0x7e7e0000ULL + static_cast<std::uint64_t>(d));
    if (u.is_gaussian()) {
      target = gaussian_target_samples(u, cfg.chains, ref_seed);
      ref.kind = "exact";
    } else {
      ref.kind = "euler_maruyama";
      ref.h = *std::min_element(cfg.h_grid.begin(), cfg.h_grid.end()) / 10.0;
      ref.steps = 100 * cfg.n_grid.back();
      target = PointCloud(cfg.chains, d);
      parallel_for(static_cast<std::size_t>(cfg.chains), cfg.threads, [&](std::size_t c) {
        Rng rng = make_stream(ref_seed, c);
        ChainState state{Vector::Zero(d), 0, ref.h};
        for (std::uint64_t t = 0; t < ref.steps; ++t) euler_maruyama_step(state, u, rng);
        target.row(static_cast<Eigen::Index>(c)) = state.x.transpose();
      });
      rep.notes.push_back("d=" + std::to_string(d) + ": reference law is a long Euler-Maruyama run; its discretization bias is included in every distance");
    }
    ref.mean_sq_norm = target.rowwise().squaredNorm().mean();
    rep.references.push_back(ref);

    for (std::size_t hi = 0; hi < cfg.h_grid.size(); ++hi) {
      const double h = cfg.h_grid[hi];
      const std::uint64_t run_seed = derive_seed(cfg.seed, (static_cast<std::uint64_t>(d) << 20) + hi);
      std::vector<PointCloud> snaps(cfg.n_grid.size(), PointCloud(cfg.chains, d));
      parallel_for(static_cast<std::size_t>(cfg.chains), cfg.threads, [&](std::size_t c) {
        Rng rng = make_stream(run_seed, c);
        ChainState state{Vector::Zero(d), 0, h};
        for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
          while (state.steps < cfg.n_grid[g]) advance(state, u, cfg.scheme, rng);
          snaps[g].row(static_cast<Eigen::Index>(c)) = state.x.transpose();
        }
      });
      double moment_bound = std::numeric_limits<double>::quiet_NaN();
      double sup_bound = std::numeric_limits<double>::quiet_NaN();
      if (2.0 * h - u.lipschitz * u.lipschitz * h * h > 0.0)
        moment_bound = stationary_second_moment_bound(d, h, u.rho, u.lipschitz);
      const double radicand = 1.0 - 2.0 * h * u.rho + h * h * u.lipschitz * u.lipschitz;
      if (radicand >= 0.0 && radicand < 1.0) sup_bound = sup_norm_bound(h, u.rho, u.lipschitz).exact;

      std::vector<double> distances;
      for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
        LmcRow row;
        row.scheme = to_string(cfg.scheme);
        row.dim = d;
        row.h = h;
        row.n = cfg.n_grid[g];
        row.seed = run_seed;
        if (cfg.bootstrap > 0) {
          const auto est = wasserstein_bootstrap(snaps[g], target, 2.0, cfg.bootstrap, derive_seed(run_seed, g + 1),
                                                 GroundMetric::euclidean, cfg.threads);
          row.w2 = est.distance;
          row.se = est.se;
        } else {
          row.w2 = wasserstein_uniform(snaps[g], target, 2.0);
          row.se = std::numeric_limits<double>::quiet_NaN();
        }
        row.moment_bound = moment_bound;
        row.sup_bound = sup_bound;
        distances.push_back(row.w2);
        rep.rows.push_back(row);
      }
      for (double e : cfg.eps) {
        LmcThreshold th{d, e, h, 0};
        for (std::size_t g = 0; g < distances.size(); ++g)
          if (distances[g] <= e) {
            th.n_star = cfg.n_grid[g];
            break;
          }
        rep.thresholds.push_back(th);
        if (th.n_star > 0) {
          auto& slot = best[{d, e}];
          if (slot == 0 || th.n_star < slot) slot = th.n_star;
        }
      }
    }
  }
  if (best.empty()) throw ConvergenceError("no (h, n) on the grid reached any requested epsilon");
  for (int d : cfg.dims)
    for (double e : cfg.eps)
      if (!best.count({d, e}))
        rep.notes.push_back("d=" + std::to_string(d) + ", eps=" + std::to_string(e) + ": not reached within the step budget");

  std::vector<double> dim_slopes, eps_slopes;
  for (double e : cfg.eps) {
    std::vector<double> x, y;
    for (int d : cfg.dims)
      if (auto it = best.find({d, e}); it != best.end()) {
        x.push_back(std::log(static_cast<double>(d)));
        y.push_back(std::log(static_cast<double>(it->second)));
      }
    if (x.size() >= 2) dim_slopes.push_back(ols_slope(x, y));
  }
  for (int d : cfg.dims) {
    std::vector<double> x, y;
    for (double e : cfg.eps)
      if (auto it = best.find({d, e}); it != best.end()) {
        x.push_back(std::log(1.0 / e));
        y.push_back(std::log(static_cast<double>(it->second)));
      }
    if (x.size() >= 2) eps_slopes.push_back(ols_slope(x, y));
  }
  rep.exponent_dim = mean_of(dim_slopes);
  rep.exponent_eps = mean_of(eps_slopes);
  return rep;
}

DiffusionSpec langevin_diffusion(const Potential& u) {
  DiffusionSpec spec;
  spec.dim = u.dim;
  spec.drift = [u](const Vector& x) -> Vector { return -u.gradient(x); };
  spec.diffusion = [d = u.dim](const Vector&) -> Matrix { return Matrix::Identity(d, d); };
  spec.rho = u.rho;
  spec.kappa = u.rho;
  return spec;
}

KernelMoments coordinate_kernel_moments(const Potential& u, double h) {
  if (!(h > 0.0)) throw InvalidArgument("h", "must be > 0");
  return [u, h](const Vector& x, int k) {
    Tensor out(k, u.dim);
    const double noise = std::sqrt(2.0 * h);
    std::vector<int> diag(static_cast<std::size_t>(k));
    for (int i = 0; i < u.dim; ++i) {
      const double drift = -h * u.partial({x.data(), static_cast<std::size_t>(u.dim)}, i);
      std::fill(diag.begin(), diag.end(), i);
      out[out.flat_index(diag)] = 0.5 * (std::pow(drift + noise, k) + std::pow(drift - noise, k)) / u.dim;
    }
    return out;
  };
}

}  // namespace steinw
