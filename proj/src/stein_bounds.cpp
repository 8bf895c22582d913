#include "steinw/stein_bounds.hpp"

#include "steinw/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace steinw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// Per-task scratch that turns replicate increments into the order-k statistics.
class TermEvaluator {
 public:
  TermEvaluator(const MomentPlan& plan, int dim) : plan_(plan), dim_(dim) {
    powers_.resize(plan.k_max);
    sums_.resize(plan.k_max);
    ys_.resize(plan.k_max);
    weights_.resize(plan.k_max);
    for (int k = 1; k <= plan.k_max; ++k) {
      const std::size_t n = checked_power(dim, k);
      powers_[k - 1].resize(n);
      sums_[k - 1].resize(n);
      ys_[k - 1].resize(n);
      if (norm_for(k) == TensorNorm::hermite) weights_[k - 1] = h_norm_weights(k, dim);
    }
  }

  void set_anchor(const Anchor& anchor) {
    c1_ = Vector::Zero(dim_);
    c2_ = Matrix::Zero(dim_, dim_);
    if (plan_.centering == Centering::gaussian) {
      c1_ = anchor.x;
      c2_ = -Matrix::Identity(dim_, dim_);
    } else if (plan_.centering == Centering::diffusion) {
      c1_ = -plan_.diffusion->drift(anchor.x);
      c2_ = -plan_.diffusion->diffusion(anchor.x);
    }
    needs_metric_ = false;
    for (int k = 1; k <= plan_.k_max; ++k) needs_metric_ = needs_metric_ || norm_for(k) == TensorNorm::a_inverse;
    if (needs_metric_) {
      const Matrix a = plan_.diffusion->diffusion(anchor.x);
      Eigen::LLT<Matrix> chol_a(a);
      if (chol_a.info() != Eigen::Success) throw InvalidArgument("diffusion", "a(x) is not positive definite at a probed point");
      const Matrix a_inv = chol_a.solve(Matrix::Identity(dim_, dim_));
      Eigen::LLT<Matrix> chol_inv(a_inv);
      if (chol_inv.info() != Eigen::Success) throw InvalidArgument("diffusion", "a(x)^{-1} is not positive definite");
      metric_ = chol_inv.matrixL().transpose();
    }
  }

  // out[k-1] receives the per-anchor statistic for order k.
  void evaluate(const std::vector<Vector>& deltas, double* out) {
    const int reps = static_cast<int>(deltas.size());
    std::vector<double> sumsq(plan_.k_max, 0.0);
    for (auto& s : sums_) std::fill(s.begin(), s.end(), 0.0);
    for (const Vector& delta : deltas) {
      for (int k = 1; k <= plan_.k_max; ++k) {
        auto& pw = powers_[k - 1];
        if (k == 1) {
          for (int j = 0; j < dim_; ++j) pw[j] = delta[j];
        } else {
          const auto& prev = powers_[k - 2];
          for (std::size_t f = 0; f < prev.size(); ++f)
            for (int j = 0; j < dim_; ++j) pw[f * dim_ + j] = prev[f] * delta[j];
        }
        auto& y = ys_[k - 1];
        if (k == 1) {
          for (int j = 0; j < dim_; ++j) y[j] = pw[j] / plan_.s + c1_[j];
        } else if (k == 2) {
          for (int a = 0; a < dim_; ++a)
            for (int b = 0; b < dim_; ++b) y[a * dim_ + b] = pw[a * dim_ + b] / (2.0 * plan_.s) + c2_(a, b);
        } else {
          std::copy(pw.begin(), pw.end(), y.begin());
        }
        if (norm_for(k) == TensorNorm::a_inverse) transform(k, y);
        sumsq[k - 1] += weighted_sq(k, y);
        auto& sum = sums_[k - 1];
        for (std::size_t i = 0; i < y.size(); ++i) sum[i] += y[i];
      }
    }
    for (int k = 1; k <= plan_.k_max; ++k) {
      const double total_sq = weighted_sq(k, sums_[k - 1]);
      if (plan_.p == 2.0) {
        out[k - 1] = (total_sq - sumsq[k - 1]) / (static_cast<double>(reps) * (reps - 1));
      } else {
        out[k - 1] = std::pow(std::sqrt(std::max(total_sq, 0.0)) / reps, plan_.p);
      }
    }
  }

 private:
  TensorNorm norm_for(int k) const { return k <= 2 ? plan_.low_norm : plan_.high_norm; }

  double weighted_sq(int k, const std::vector<double>& y) const {
    double s = 0.0;
    if (norm_for(k) == TensorNorm::hermite) {
      const auto& w = weights_[k - 1];
      for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i] * y[i];
    } else {
      for (double v : y) s += v * v;
    }
    return s;
  }

  void transform(int k, std::vector<double>& y) const {
    Tensor t(k, dim_);
    std::copy(y.begin(), y.end(), t.data().begin());
    const Tensor out = t.contract_each_mode(metric_);
    std::copy(out.data().begin(), out.data().end(), y.begin());
  }

  const MomentPlan& plan_;
  int dim_;
  Vector c1_;
  Matrix c2_;
  Matrix metric_;
  bool needs_metric_ = false;
  std::vector<std::vector<double>> powers_, sums_, ys_, weights_;
};

// Per-anchor statistics laid out as [anchor][node][order].
struct MomentTable {
  int anchors = 0;
  int nodes = 0;
  int orders = 0;
  std::vector<double> values;
  std::vector<std::string> notes;

  double at(int a, int j, int k) const { return values[(static_cast<std::size_t>(a) * nodes + j) * orders + k]; }
};

void check_marginals(const std::vector<Vector>& x0, const std::vector<Vector>& xt, double t, std::vector<std::string>& notes) {
  const std::size_t n = x0.size();
  if (n < 2) return;
  const int d = static_cast<int>(x0.front().size());
  for (int j = 0; j < d; ++j) {
    for (int power = 1; power <= 2; ++power) {
      std::vector<double> diff(n);
      for (std::size_t a = 0; a < n; ++a) diff[a] = std::pow(xt[a][j], power) - std::pow(x0[a][j], power);
      const auto ms = mean_stderr(diff);
      if (ms.se > 0.0 && std::abs(ms.mean) > 4.0 * ms.se)
        notes.push_back("marginal check: moment " + std::to_string(power) + " of coordinate " + std::to_string(j) +
                        " differs between X_0 and X_t at t=" + std::to_string(t) + " beyond 4 sigma");
    }
  }
}

MomentTable estimate_table(const PairSampler& sampler, const MomentPlan& plan, const BoundConfig& cfg,
                           std::span<const double> t_nodes) {
  MomentTable table;
  table.anchors = cfg.n_outer;
  table.nodes = static_cast<int>(t_nodes.size());
  table.orders = plan.k_max;
  table.values.assign(static_cast<std::size_t>(table.anchors) * table.nodes * table.orders, 0.0);

  const int dim = sampler.dimension();
  const auto first_late = std::lower_bound(t_nodes.begin(), t_nodes.end(), 1.0);
  const int check_node = first_late == t_nodes.end() ? table.nodes - 1 : static_cast<int>(first_late - t_nodes.begin());
  std::vector<Vector> x0(table.anchors), xt(table.anchors);

  constexpr int kChunk = 16;
  const std::size_t tasks = (static_cast<std::size_t>(table.anchors) + kChunk - 1) / kChunk;
  parallel_for(tasks, cfg.threads, [&](std::size_t task) {
    TermEvaluator evaluator(plan, dim);
    std::vector<Vector> deltas(cfg.replicates);
    const int begin = static_cast<int>(task) * kChunk;
    const int end = std::min(table.anchors, begin + kChunk);
    for (int a = begin; a < end; ++a) {
      Rng anchor_rng = make_stream(cfg.seed, static_cast<std::uint64_t>(a));
      const Anchor anchor = sampler.draw_anchor(anchor_rng);
      if (anchor.x.size() != dim || !anchor.x.allFinite()) throw Error("pair sampler produced an invalid anchor");
      evaluator.set_anchor(anchor);
      x0[a] = anchor.x;
      for (int j = 0; j < table.nodes; ++j) {
        Rng rng = make_stream(derive_seed(cfg.seed, static_cast<std::uint64_t>(j) + 1), static_cast<std::uint64_t>(a));
        for (auto& delta : deltas) {
          Vector x = sampler.draw_conditional(anchor, t_nodes[j], rng);
          if (x.size() != dim || !x.allFinite()) throw Error("pair sampler produced non-finite samples");
          delta = x - anchor.x;
        }
        if (j == check_node) xt[a] = anchor.x + deltas.front();
        evaluator.evaluate(deltas, &table.values[(static_cast<std::size_t>(a) * table.nodes + j) * table.orders]);
      }
    }
  });
  for (double v : table.values)
    if (!std::isfinite(v)) throw Error("non-finite conditional moment estimate");
  check_marginals(x0, xt, t_nodes[check_node], table.notes);
  return table;
}

MomentEstimate summarize(const MomentTable& table, int node, int order) {
  std::vector<double> v(table.anchors);
  for (int a = 0; a < table.anchors; ++a) v[a] = table.at(a, node, order);
  const auto ms = mean_stderr(v);
  return {ms.mean, ms.se};
}

struct Integral {
  double value = 0.0;
  double correction = 0.0;
  double exponent = -0.5;
};

// Local power-law exponent of f near the first node, fitted over the first decade of the grid.
double leading_exponent(std::span<const double> t, std::span<const double> f) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t.size() && t[i] <= 10.0 * t[0]; ++i)
    if (f[i] > 0.0) {
      lx.push_back(std::log(t[i]));
      ly.push_back(std::log(f[i]));
    }
  if (lx.size() < 2) return 0.0;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Simpson over the grid plus ∫_0^{t_0} f(t_0)(t/t_0)^α dt with α = min(fitted, -1/2).
Integral integrate_from_zero(std::span<const double> t, std::span<const double> f, bool strict,
                             std::span<const double> se = {}) {
  Integral out;
  out.value = simpson_integrate(t, f);
  const double fitted = leading_exponent(t, f);
  const bool significant = se.empty() || f[0] > 3.0 * se[0];
  if (strict && significant && fitted <= -0.9)
    throw IntegrabilityError("integrand grows like t^" + std::to_string(fitted) +
                             " near t = 0 and is not integrable; start the grid at t_0 > 0 or change the pair");
  out.exponent = std::min(std::max(fitted, -0.9), -0.5);
  out.correction = t[0] * f[0] / (1.0 + out.exponent);
  out.value += out.correction;
  return out;
}

using LogWeightFn = std::function<double(int k, double t)>;

enum class Assembly { l2, lp };

BoundReport assemble(const MomentTable& table, std::span<const double> t_nodes, const LogWeightFn& log_weight,
                     Assembly assembly, double p, const BoundConfig& cfg) {
  BoundReport rep;
  rep.t_grid.assign(t_nodes.begin(), t_nodes.end());
  rep.p = p;
  rep.config = cfg;
  rep.notes = table.notes;
  const int nodes = table.nodes;
  const int orders = table.orders;
  rep.terms.resize(orders);
  for (int k = 0; k < orders; ++k) {
    rep.terms[k].order = k + 1;
    rep.terms[k].raw.resize(nodes);
    rep.terms[k].se.resize(nodes);
    rep.terms[k].weighted.resize(nodes);
  }
  rep.integrand.resize(nodes);
  rep.integrand_se.resize(nodes);

  std::vector<double> combined(table.anchors);
  for (int j = 0; j < nodes; ++j) {
    std::vector<double> w(orders);
    for (int k = 0; k < orders; ++k) {
      const double lw = log_weight(k + 1, t_nodes[j]);
      w[k] = lw == kNegInf ? 0.0 : std::exp(lw);
    }
    double square = 0.0;
    double linear = 0.0;
    double linear_se = 0.0;
    for (int k = 0; k < orders; ++k) {
      const auto est = summarize(table, j, k);
      auto& term = rep.terms[k];
      term.raw[j] = est.estimate;
      term.se[j] = est.se;
      ++rep.evaluations;
      if (est.estimate < 0.0) ++rep.clamp_events;
      if (est.estimate < -3.0 * est.se) ++rep.significant_clamps;
      const double clamped = std::max(est.estimate, 0.0);
      const double contrib = (w[k] == 0.0 || clamped == 0.0) ? 0.0 : w[k] * clamped;
      if (assembly == Assembly::l2) {
        term.weighted[j] = std::sqrt(contrib);
        square += contrib;
      } else {
        const double root = clamped > 0.0 ? std::pow(clamped, 1.0 / p) : 0.0;
        term.weighted[j] = w[k] == 0.0 ? 0.0 : w[k] * root;
        linear += term.weighted[j];
        if (w[k] != 0.0) {
          const double dr = clamped > 0.0 ? root / (p * clamped) * est.se : std::pow(est.se, 1.0 / p);
          linear_se += w[k] * dr;
        }
      }
    }
    if (assembly == Assembly::l2) {
      for (int a = 0; a < table.anchors; ++a) {
        double q = 0.0;
        for (int k = 0; k < orders; ++k)
          if (w[k] != 0.0) q += w[k] * table.at(a, j, k);
        combined[a] = q;
      }
      const double se_sq = mean_stderr(combined).se;
      const double s_val = std::sqrt(square);
      rep.integrand[j] = s_val;
      rep.integrand_se[j] = s_val > 0.0 ? std::min(se_sq / (2.0 * s_val), std::sqrt(se_sq)) : std::sqrt(se_sq);
    } else {
      rep.integrand[j] = linear;
      rep.integrand_se[j] = linear_se;
    }
  }

  const auto main = integrate_from_zero(rep.t_grid, rep.integrand, true, rep.integrand_se);
  rep.total = main.value;
  rep.endpoint_correction = main.correction;
  rep.endpoint_exponent = main.exponent;
  rep.total_se = integrate_from_zero(rep.t_grid, rep.integrand_se, false).value;

  double sum = 0.0;
  for (auto& term : rep.terms) {
    term.contribution = integrate_from_zero(rep.t_grid, term.weighted, false).value;
    sum += std::abs(term.contribution);
  }
  rep.tail_diagnostic = sum > 0.0 ? std::abs(rep.terms.back().contribution) / sum : 0.0;
  // Orders whose true value is zero clamp about half the time; only clamps beyond noise are suspicious.
  if (rep.significant_clamps > std::max<std::size_t>(1, rep.evaluations / 100))
    rep.notes.push_back("negative term estimates exceed Monte Carlo noise at " + std::to_string(rep.significant_clamps) +
                        " nodes; increase n_outer or replicates");
  return rep;
}

void enforce_tail(const BoundReport& rep, const BoundConfig& cfg) {
  if (rep.tail_diagnostic > cfg.tail_tolerance)
    throw TruncationError("series truncation diagnostic " + std::to_string(rep.tail_diagnostic) +
                              " exceeds tolerance " + std::to_string(cfg.tail_tolerance) + "; raise k_max",
                          rep.tail_diagnostic);
}

// log(e^{2t} − 1)
double log_alpha(double t) { return std::log(std::expm1(2.0 * t)); }

void check_sampler(const PairSampler& sampler) {
  if (sampler.dimension() < 1) throw InvalidArgument("sampler", "dimension must be >= 1");
}

}  // namespace

std::vector<double> geometric_grid(double t_min, double t_max, int nodes) {
  if (!(t_min > 0.0) || !(t_max > t_min)) throw InvalidArgument("t_grid", "need 0 < t_min < t_max");
  if (nodes < 3) throw InvalidArgument("t_grid", "need at least 3 nodes");
  std::vector<double> grid(nodes);
  const double ratio = std::log(t_max / t_min) / (nodes - 1);
  for (int i = 0; i < nodes; ++i) grid[i] = t_min * std::exp(ratio * i);
  grid.back() = t_max;
  return grid;
}

void BoundConfig::validate() const {
  if (!(s > 0.0)) throw InvalidArgument("s", "must be > 0");
  if (k_max < 3) throw InvalidArgument("k_max", "must be >= 3");
  if (replicates < 2) throw InvalidArgument("replicates", "must be >= 2 to debias");
  if (n_outer < 2) throw InvalidArgument("n_outer", "must be >= 2");
  if (t_grid.size() < 3) throw InvalidArgument("t_grid", "need at least 3 nodes");
  if (!(t_grid.front() > 0.0))
    throw IntegrabilityError("t_grid starts at t <= 0 where the weights are singular; start at t_0 > 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidArgument("t_grid", "must be strictly increasing");
  if (!(tail_tolerance > 0.0)) throw InvalidArgument("tail_tolerance", "must be > 0");
}

DiffusionSpec DiffusionSpec::ornstein_uhlenbeck(int dim) {
  DiffusionSpec spec;
  spec.dim = dim;
  spec.drift = [](const Vector& x) -> Vector { return -x; };
  spec.diffusion = [dim](const Vector&) -> Matrix { return Matrix::Identity(dim, dim); };
  spec.rho = 1.0;
  spec.kappa = 1.0;
  return spec;
}

void DiffusionSpec::validate() const {
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (!drift || !diffusion) throw InvalidArgument("diffusion", "drift and diffusion callables are required");
  if (!(kappa > 0.0)) throw InvalidArgument("kappa", "must be > 0");
}

double simpson_integrate(std::span<const double> t, std::span<const double> f) {
  if (t.size() != f.size()) throw InvalidArgument("grid", "node and value counts differ");
  const std::size_t n = t.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * (t[1] - t[0]) * (f[0] + f[1]);
  double total = 0.0;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    const double h0 = t[i + 1] - t[i];
    const double h1 = t[i + 2] - t[i + 1];
    const double hs = h0 + h1;
    total += hs / 6.0 * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
  }
  if (i + 1 < n) {
    // Quadratic through the last three nodes, integrated over the last interval only.
    const double h0 = t[n - 2] - t[n - 3];
    const double h1 = t[n - 1] - t[n - 2];
    const double f0 = f[n - 3], f1 = f[n - 2], f2 = f[n - 1];
    const double b = ((f2 - f1) * h0 * h0 + (f1 - f0) * h1 * h1) / (h0 * h1 * (h0 + h1));
    const double a = ((f2 - f1) / h1 - (f1 - f0) / h0) / (h0 + h1);
    total += a * h1 * h1 * h1 / 3.0 + b * h1 * h1 / 2.0 + f1 * h1;
  }
  return total;
}

MomentEstimate conditional_moment_sq(const PairSampler& sampler, double t, int k, const MomentPlan& plan,
                                     const BoundConfig& cfg) {
  check_sampler(sampler);
  if (k < 1 || k > plan.k_max) throw InvalidArgument("k", "order must lie in [1, k_max]");
  if (cfg.replicates < 2) throw InvalidArgument("replicates", "must be >= 2 to debias");
  if (cfg.n_outer < 2) throw InvalidArgument("n_outer", "must be >= 2");
  if (!(plan.s > 0.0)) throw InvalidArgument("s", "must be > 0");
  if (!(t >= 0.0)) throw InvalidArgument("t", "must be >= 0");
  if ((plan.centering == Centering::diffusion || plan.low_norm == TensorNorm::a_inverse ||
       plan.high_norm == TensorNorm::a_inverse) &&
      plan.diffusion == nullptr)
    throw InvalidArgument("diffusion", "plan requires a diffusion spec");
  MomentPlan local = plan;
  local.k_max = k;
  const double nodes[] = {t};
  const auto table = estimate_table(sampler, local, cfg, nodes);
  return summarize(table, 0, k - 1);
}

BoundReport gauss_w2_bound(const PairSampler& sampler, const BoundConfig& cfg) {
  check_sampler(sampler);
  cfg.validate();
  MomentPlan plan;
  plan.k_max = cfg.k_max;
  plan.s = cfg.s;
  plan.centering = Centering::gaussian;
  plan.low_norm = TensorNorm::euclidean;
  plan.high_norm = TensorNorm::hermite;
  const auto table = estimate_table(sampler, plan, cfg, cfg.t_grid);
  const double log_s = std::log(cfg.s);
  auto weight = [&](int k, double t) {
    if (k == 1) return -2.0 * t;
    if (k == 2) return -2.0 * t - log_alpha(t);
    return -2.0 * t - 2.0 * (log_s + log_factorial(k)) - (k - 1) * log_alpha(t);
  };
  auto rep = assemble(table, cfg.t_grid, weight, Assembly::l2, 2.0, cfg);
  rep.kind = "gauss_w2";
  rep.sampler = sampler.name();
  enforce_tail(rep, cfg);
  return rep;
}

BoundReport wp_gauss_1d_bound(const PairSampler& sampler, double p, const BoundConfig& cfg) {
  check_sampler(sampler);
  if (sampler.dimension() != 1) throw InvalidArgument("sampler", "the one-dimensional W_p bound needs d = 1");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  cfg.validate();
  MomentPlan plan;
  plan.k_max = cfg.k_max;
  plan.s = cfg.s;
  plan.centering = Centering::gaussian;
  plan.low_norm = TensorNorm::euclidean;
  plan.high_norm = TensorNorm::euclidean;
  plan.p = p;
  const auto table = estimate_table(sampler, plan, cfg, cfg.t_grid);
  std::vector<double> log_hnorm(cfg.k_max + 1, 0.0);
  for (int k = 1; k < cfg.k_max; ++k) log_hnorm[k] = std::log(hermite_lp_norm(k, p, 64));
  const double log_s = std::log(cfg.s);
  auto weight = [&](int k, double t) {
    if (k == 1) return -t;
    if (k == 2) return -t + log_hnorm[1] - 0.5 * log_alpha(t);
    return -t + log_hnorm[k - 1] - log_factorial(k) - log_s - 0.5 * (k - 1) * log_alpha(t);
  };
  auto rep = assemble(table, cfg.t_grid, weight, Assembly::lp, p, cfg);
  rep.kind = "wp_gauss_1d";
  rep.sampler = sampler.name();
  rep.notes.push_back("terms are combined as a sum of per-order L^p norms; at p = 2 this differs in form from the W_2 engine, which takes the root of the summed squares");
  enforce_tail(rep, cfg);
  return rep;
}

BoundReport wp_gauss_exch_bound(const PairSampler& sampler, double p, const BoundConfig& cfg) {
  check_sampler(sampler);
  if (!sampler.exchangeable()) throw InvalidArgument("sampler", "the multivariate W_p bound requires an exchangeable pair");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  cfg.validate();
  MomentPlan plan;
  plan.k_max = cfg.k_max;
  plan.s = cfg.s;
  plan.centering = Centering::gaussian;
  plan.low_norm = TensorNorm::euclidean;
  plan.high_norm = TensorNorm::hermite;
  plan.p = p;
  const auto table = estimate_table(sampler, plan, cfg, cfg.t_grid);
  const double log_m = std::log(std::max(1.0, p - 1.0));
  const double log_s = std::log(cfg.s);
  auto weight = [&](int k, double t) {
    if (k == 1) return -t;
    if (k == 2) return -t + 0.5 * (log_m - log_alpha(t));
    return -t - std::log(2.0) - log_s - log_factorial(k - 1) + 0.5 * (k - 1) * (log_m - log_alpha(t));
  };
  auto rep = assemble(table, cfg.t_grid, weight, Assembly::lp, p, cfg);
  rep.kind = "wp_gauss_exch";
  rep.sampler = sampler.name();
  enforce_tail(rep, cfg);
  return rep;
}

double log_curvature_weight_fk(int k, double t, double rho, int dim) {
  if (k < 1) throw InvalidArgument("k", "must be >= 1");
  if (!(t > 0.0)) throw InvalidArgument("t", "must be > 0");
  if (dim < 1) throw InvalidArgument("d", "must be >= 1");
  if (k == 1) return -rho * t;
  const double km1 = k - 1.0;
  if (rho == 0.0) return 0.5 * km1 * std::log(dim * km1 / t);
  const double bracket = 2.0 * rho * dim / std::expm1(2.0 * rho * t / km1);
  return -rho * t * std::max(1.0, k / 2.0) + 0.5 * km1 * std::log(bracket);
}

double curvature_weight_fk(int k, double t, double rho, int dim) {
  return std::exp(log_curvature_weight_fk(k, t, rho, dim));
}

BoundReport general_w2_bound(const PairSampler& sampler, const DiffusionSpec& spec, double horizon,
                             const BoundConfig& cfg) {
  check_sampler(sampler);
  spec.validate();
  if (spec.dim != sampler.dimension()) throw InvalidArgument("diffusion", "dimension differs from the sampler");
  if (!(horizon > 0.0)) throw InvalidArgument("T", "horizon must be > 0");
  cfg.validate();
  std::vector<double> grid;
  for (double t : cfg.t_grid)
    if (t < horizon) grid.push_back(t);
  grid.push_back(horizon);
  if (grid.size() < 3) throw InvalidArgument("t_grid", "fewer than 3 nodes below the horizon");

  MomentPlan plan;
  plan.k_max = cfg.k_max;
  plan.s = cfg.s;
  plan.centering = Centering::diffusion;
  plan.low_norm = TensorNorm::a_inverse;
  plan.high_norm = TensorNorm::a_inverse;
  plan.diffusion = &spec;
  const auto table = estimate_table(sampler, plan, cfg, grid);
  const double log_s = std::log(cfg.s);
  auto nominal = [&](int k, double t) {
    const double lf = log_curvature_weight_fk(k, t, spec.rho, spec.dim);
    return k <= 2 ? lf : lf - log_s - log_factorial(k);
  };
  auto squared = [&](int k, double t) { return 2.0 * nominal(k, t); };
  auto rep = assemble(table, grid, nominal, Assembly::l2, 2.0, cfg);
  const auto alt = assemble(table, grid, squared, Assembly::l2, 2.0, cfg);
  rep.kind = "general_w2";
  rep.sampler = sampler.name();
  rep.horizon = horizon;
  const double shrink = -std::expm1(-spec.kappa * horizon);
  rep.final_bound = rep.total / shrink;
  rep.squared_total = alt.total;
  rep.squared_final_bound = alt.total / shrink;
  rep.notes.push_back("total uses the nominal weights f_1, f_2, f_k/(s k!); squared_total squares every weight");
  enforce_tail(rep, cfg);
  return rep;
}

double corollary_constant(double rho, int k) {
  if (k < 1) throw InvalidArgument("k", "must be >= 1");
  const double growth = std::max(1.0, k / 2.0);
  if (rho > 0.0) return std::exp(growth * rho);
  if (rho == 0.0) return 1.0;
  return std::exp((1.0 + growth) * std::abs(rho));
}

ChainBoundReport markov_chain_w2_bound(const PointCloud& stationary, const KernelMoments& kernel_moments,
                                       const DiffusionSpec& spec, double tau, double s, int k_max) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau", "must lie in (0, 1), got " + std::to_string(tau));
  if (!(s > 0.0)) throw InvalidArgument("s", "must be > 0");
  if (k_max < 3) throw InvalidArgument("k_max", "must be >= 3");
  spec.validate();
  if (stationary.rows() == 0) throw InvalidArgument("stationary", "no samples");
  if (stationary.cols() != spec.dim) throw InvalidArgument("stationary", "dimension differs from the diffusion");
  if (!kernel_moments) throw InvalidArgument("kernel_moments", "callable is required");

  const int d = spec.dim;
  const auto n = static_cast<std::size_t>(stationary.rows());
  std::vector<double> drift_sq(n), mis1(n), mis2(n);
  std::vector<std::vector<double>> higher(k_max + 1, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = stationary.row(static_cast<Eigen::Index>(i)).transpose();
    const Vector b = spec.drift(x);
    const Matrix a = spec.diffusion(x);
    Eigen::LLT<Matrix> chol_a(a);
    if (chol_a.info() != Eigen::Success) throw InvalidArgument("diffusion", "a(x) is not positive definite at a probed point");
    const Matrix a_inv = chol_a.solve(Matrix::Identity(d, d));
    Eigen::LLT<Matrix> chol_inv(a_inv);
    const Matrix metric = chol_inv.matrixL().transpose();
    auto a_norm_sq = [&](const Tensor& t) { return std::pow(t.contract_each_mode(metric).norm(), 2); };

    drift_sq[i] = a_norm_sq(Tensor::from_vector(b));
    Tensor m1 = kernel_moments(x, 1);
    m1 *= 1.0 / s;
    m1 -= Tensor::from_vector(b);
    mis1[i] = a_norm_sq(m1);
    Tensor m2 = kernel_moments(x, 2);
    m2 *= 1.0 / (2.0 * s);
    Tensor a_t(2, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a_t[static_cast<std::size_t>(r * d + c)] = a(r, c);
    m2 -= a_t;
    mis2[i] = a_norm_sq(m2);
    for (int k = 3; k <= k_max; ++k) higher[k][i] = a_norm_sq(kernel_moments(x, k));
  }
  auto root_mean = [&](const std::vector<double>& v) { return std::sqrt(pairwise_sum(v) / static_cast<double>(n)); };

  ChainBoundReport rep;
  rep.tau = tau;
  rep.s = s;
  const double c = corollary_constant(spec.rho, 1);
  rep.constant = c;
  rep.drift_term = tau * root_mean(drift_sq);
  rep.drift_mismatch = root_mean(mis1);
  rep.diffusion_mismatch = root_mean(mis2);
  rep.third_moment = root_mean(higher[3]);
  double total = c * (rep.drift_term + rep.drift_mismatch);
  total += c * c * std::sqrt(static_cast<double>(d)) * (std::sqrt(tau * d) + rep.diffusion_mismatch);
  total += std::pow(c, 3) * std::abs(std::log(tau)) * d / (3.0 * std::sqrt(2.0) * s) * rep.third_moment;
  for (int k = 4; k <= k_max; ++k) {
    const double log_w = k * std::log(c) + 0.5 * (k - 1) * std::log(d * (k - 1.0)) - log_factorial(k) -
                         0.5 * (k - 3) * std::log(tau) - std::log(s);
    const double term = std::exp(log_w) * root_mean(higher[k]);
    rep.series.push_back(term);
    total += term;
  }
  // Compare against both predecessors: symmetric increments make odd orders vanish.
  if (rep.series.size() >= 3) {
    const double last = rep.series.back();
    const double before = std::max(rep.series[rep.series.size() - 2], rep.series[rep.series.size() - 3]);
    if (last > 0.0 && last >= before)
      throw ConvergenceError("series divergence: the k >= 4 terms are not decreasing at k = " + std::to_string(k_max));
  }
  rep.total = total;
  rep.bound = total / -std::expm1(-spec.kappa);
  return rep;
}

}  // namespace steinw
