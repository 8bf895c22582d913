// Acceptance suite: one PASS/FAIL line per criterion.
#include "steinw/clt.hpp"
#include "steinw/graph_walk.hpp"
#include "steinw/hermite.hpp"
#include "steinw/lmc.hpp"
#include "steinw/runner.hpp"
#include "steinw/stein_bounds.hpp"
#include "steinw/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace steinw;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_seconds, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_seconds > 0 && secs > limit_seconds) {
    v.pass = false;
    v.detail += "; over the " + std::to_string(static_cast<int>(limit_seconds)) + " s budget";
  }
  if (!v.pass) ++failures;
  std::printf("%s C%d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double gauss_quadrature(const MultiIndex& a, const MultiIndex& b, const QuadratureRule& rule) {
  const int d = a.dim();
  std::vector<int> at(d, 0);
  std::vector<double> x(d);
  const int m = static_cast<int>(rule.nodes.size());
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      x[j] = rule.nodes[at[j]];
      w *= rule.weights[at[j]];
    }
    total += w * hermite_eval(a, x) * hermite_eval(b, x);
    int j = 0;
    while (j < d && ++at[j] == m) at[j++] = 0;
    if (j == d) break;
  }
  return total;
}

Verdict hermite_identity() {
  const auto rule = gauss_hermite_rule(10);
  std::vector<MultiIndex> pool;
  double worst = 0.0;
  int checked = 0;
  for (int d = 1; d <= 3; ++d)
    for (int order = 0; order <= 5; ++order) {
      std::vector<int> c(order, 0);
      while (true) {
        MultiIndex idx(c, d);
        const double exact = hermite_sq_norm(idx);
        worst = std::max(worst, std::abs(gauss_quadrature(idx, idx, rule) - exact) / exact);
        ++checked;
        if (d == 3) pool.push_back(idx);
        int j = 0;
        while (j < order && ++c[j] == d) c[j++] = 0;
        if (j == order) break;
      }
    }
  Rng rng = make_stream(2024, 0);
  double worst_orth = 0.0;
  int pairs = 0;
  while (pairs < 50) {
    const auto& a = pool[uniform_index(rng, pool.size())];
    const auto& b = pool[uniform_index(rng, pool.size())];
    if (a.counts() == b.counts()) continue;
    worst_orth = std::max(worst_orth, std::abs(gauss_quadrature(a, b, rule)));
    ++pairs;
  }
  return {worst <= 1e-6 && worst_orth <= 1e-7,
          fmt("%d indices, max rel err %.2e (tol 1e-6); 50 pairs, max |<H_i,H_j>| %.2e (tol 1e-7)", checked, worst, worst_orth)};
}

Verdict ot_equivalence() {
  Rng rng = make_stream(77, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 8));
    PointCloud a(n, 1), b(n, 1);
    for (int i = 0; i < n; ++i) {
      a(i, 0) = standard_normal(rng);
      b(i, 0) = 2.0 * uniform01(rng) - 1.0;
    }
    const double p = 1.0 + 3.0 * uniform01(rng);
    const double sorted = wasserstein_1d({a.data(), std::size_t(n)}, {b.data(), std::size_t(n)}, p);
    worst = std::max(worst, std::abs(sorted - wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), p)));
  }
  PointCloud a(2, 2), b(2, 2);
  a << 0, 0, 1, 0;
  b << 0, 1, 1, 1;
  const double square = wasserstein_exact(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b), 2.0);
  PointCloud c(2, 1), e(2, 1);
  c << 0, 1;
  e << 1, 2;
  const double shift = wasserstein_exact(EmpiricalMeasure::uniform(c), EmpiricalMeasure::uniform(e), 2.0);
  Vector x(2), y(2);
  x << 0, 0;
  y << 3, 4;
  const double atoms = wasserstein_exact(EmpiricalMeasure::point_mass(x), EmpiricalMeasure::point_mass(y), 1.0);
  const bool hand = square == 1.0 && shift == 1.0 && atoms == 5.0;
  return {worst <= 1e-9 && hand,
          fmt("max |sort - exact| over 100 instances %.2e (tol 1e-9); hand cases %.17g, %.17g, %.17g (expect 1, 1, 5)", worst,
              square, shift, atoms)};
}

Verdict lmc_gaussian() {
  const double h = 0.1;
  std::string detail;
  bool ok = true;
  for (int d : {1, 4}) {
    const auto run = stationary_second_moment(Potential::gaussian(d), h, 16, 1000000, derive_seed(3, d));
    const double target = d / (1 - h / 2);
    const double z = (run.mean_sq_norm - target) / run.se;
    const double bound = stationary_second_moment_bound(d, h, 1.0, 1.0);
    const double rel = std::abs(bound - target) / target;
    ok = ok && std::abs(z) <= 3.0 && rel <= 1e-12;
    detail += fmt("%sd=%d E|X|^2 %.5f +- %.5f vs %.5f (z %.2f), bound rel diff %.1e", d == 1 ? "" : "; ", d,
                  run.mean_sq_norm, run.se, target, z, rel);
  }
  return {ok, detail};
}

Verdict contraction() {
  const auto c = coupled_contraction(Potential::gaussian(2), 0.1, 400000, 99);
  const double z = (c.ratio - 0.905) / c.se;
  return {std::abs(z) <= 3.0, fmt("one-step ratio %.5f +- %.5f vs 0.905 (z %.2f)", c.ratio, c.se, z)};
}

Verdict clt_slope() {
  const SummandDistribution rad(SummandKind::rademacher, 1);
  const std::vector<int> ns{4, 16, 64, 256, 1024};
  const auto exp = clt_experiment(rad, ns, 2.0, 2.0, 2000, 5150);
  // Two independent Gaussian clouds of the same size: the empirical floor.
  const auto floor = clt_empirical_wp(SummandDistribution(SummandKind::gaussian, 1), 1, 2.0, 2000, 8080);
  std::vector<double> nd, dist, debiased;
  std::string series;
  for (const auto& r : exp.rows) {
    nd.push_back(r.n);
    dist.push_back(r.distance);
    debiased.push_back(std::sqrt(std::max(r.distance * r.distance - floor.distance * floor.distance, 1e-12)));
    series += fmt("%s%d:%.4f", series.empty() ? "" : " ", r.n, r.distance);
  }
  const auto fit = exp.fit;
  const auto info = clt_rate_fit(nd, debiased);
  return {fit.slope >= -0.65 && fit.slope <= -0.35,
          fmt("slope %.3f (target [-0.65, -0.35]); W2 by n {%s}; two-sample floor %.4f; floor-subtracted slope %.3f (info only)",
              fit.slope, series.c_str(), floor.distance, info.slope)};
}

Verdict certification() {
  const int n = 16;
  const SummandDistribution rad(SummandKind::rademacher, 1);
  BoundConfig cfg;
  cfg.s = 1.0 / n;
  cfg.seed = 616;
  const auto rep = gauss_w2_bound(*clt_pair_sampler(rad, n), cfg);
  const auto emp = clt_empirical_wp(rad, n, 2.0, 2000, 617);
  const double combined = std::sqrt(rep.total_se * rep.total_se + emp.se * emp.se);
  const bool certified = rep.total >= emp.distance - 3 * combined;
  const bool tail = rep.tail_diagnostic < 0.1;

  // Noise floor: the OU pair on ν = γ, s = 1.
  BoundConfig ou_cfg;
  ou_cfg.seed = 618;
  const auto ou = gauss_w2_bound(OuPairSampler(1), ou_cfg);
  std::size_t nodes = 0, outside = 0;
  double worst = 0.0;
  for (const auto& term : ou.terms) {
    if (term.order > 2) continue;
    for (std::size_t j = 0; j < term.raw.size(); ++j) {
      ++nodes;
      const double z = term.se[j] > 0 ? std::abs(term.raw[j]) / term.se[j] : (term.raw[j] == 0 ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      if (z >= 3.0) ++outside;
    }
  }
  const bool floor_ok = outside == 0;
  return {certified && tail && floor_ok,
          fmt("bound %.4f +- %.4f vs empirical W2 %.4f +- %.4f (%s); tail %.3f (%s); OU mismatch terms: %zu of %zu nodes "
              "beyond 3 sigma, max |z| %.1f (%s)",
              rep.total, rep.total_se, emp.distance, emp.se, certified ? "ok" : "violated", rep.tail_diagnostic,
              tail ? "ok" : "too large", outside, nodes, worst, floor_ok ? "ok" : "not a noise floor")};
}

Verdict fk_continuity() {
  double worst = 0.0;
  for (int d : {1, 5})
    for (int k = 2; k <= 6; ++k)
      for (double t : {0.1, 1.0, 10.0}) {
        const double base = curvature_weight_fk(k, t, 0.0, d);
        for (double rho : {1e-8, -1e-8}) worst = std::max(worst, std::abs(curvature_weight_fk(k, t, rho, d) - base) / base);
      }
  return {worst <= 1e-6, fmt("max relative gap %.2e over 60 cases (tol 1e-6)", worst)};
}

Verdict knn_trend() {
  const auto f = TorusDensity::uniform(1);
  int monotone = 0;
  std::string detail;
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    std::vector<double> w;
    for (int n : {500, 1000, 2000}) w.push_back(knn_experiment(f, n, static_cast<int>(std::ceil(std::pow(n, 0.8))), seed).w2);
    const bool mono = w[0] > w[1] && w[1] > w[2];
    monotone += mono;
    detail += fmt("%sseed %llu: %.4f %.4f %.4f%s", detail.empty() ? "" : "; ", static_cast<unsigned long long>(seed), w[0],
                  w[1], w[2], mono ? " (decreasing)" : "");
  }
  WalkGraph ring;
  const int n = 101, k = 5;
  TorusCloud grid{1, PointCloud(n, 1)};
  for (int i = 0; i < n; ++i) grid.points(i, 0) = static_cast<double>(i) / n;
  const auto st = stationary_measure(build_walk_graph(grid, k));
  double dev = 0.0;
  for (double x : st.weights) dev = std::max(dev, std::abs(x - 1.0 / n));
  return {monotone >= 2 && dev <= 1e-10,
          detail + fmt("; %d of 3 seeds decreasing (need 2); doubly-stochastic max |pi - 1/n| %.1e", monotone, dev)};
}

Verdict determinism() {
  using nlohmann::json;
  const std::vector<std::pair<std::string, json>> cases{
      {"clt", {{"ns", {4, 16, 64}}, {"samples", 400}}},
      {"bound", {{"kind", "gauss_w2"}, {"sampler", {{"type", "clt"}, {"n", 16}}}, {"s", 0.0625}, {"n_outer", 200},
                 {"t_grid", {{"min", 1e-3}, {"max", 10.0}, {"nodes", 40}}}}},
      {"bound", {{"kind", "markov_chain"}, {"h", 0.02}, {"tau", 0.1}, {"samples", 200}}},
      {"knn", {{"ns", {300, 600}}, {"k_exponent", 0.8}}},
      {"lmc", {{"dims", {1, 2}}, {"h_grid", {0.2, 0.1}}, {"n_grid", {1, 8, 64}}, {"chains", 200}, {"bootstrap", 5}, {"eps", {0.5}}}},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [pipeline, cfg] : cases) {
    auto text = [&](int threads) {
      std::ostringstream s;
      cli::run_pipeline(pipeline, cfg, 42, threads).results.write(s);
      return s.str();
    };
    const auto one = text(1), four = text(4), again = text(4);
    const bool same = one == four && four == again;
    ok = ok && same;
    detail += fmt("%s%s %s", detail.empty() ? "" : "; ", pipeline.c_str(), same ? "identical" : "DIFFERS");
  }
  return {ok, detail + " (1 vs 4 threads, plus a rerun)"};
}

}  // namespace

int main() {
  std::printf("steinw %s acceptance suite\n", kVersion);
  criterion(1, "Hermite norm identity", 10, hermite_identity);
  criterion(2, "OT oracle equivalence", 5, ot_equivalence);
  criterion(3, "LMC Gaussian exactness", 120, lmc_gaussian);
  criterion(4, "coupled contraction", 30, contraction);
  criterion(5, "CLT rate slope", 300, clt_slope);
  criterion(6, "bound certification", 600, certification);
  criterion(7, "f_k continuity", 1, fk_continuity);
  criterion(8, "k-NN stationary measure trend", 180, knn_trend);
  criterion(9, "determinism", 0, determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
