#include "steinw/runner.hpp"

#include "steinw/clt.hpp"
#include "steinw/graph_walk.hpp"
#include "steinw/lmc.hpp"
#include "steinw/pair_sampler.hpp"
#include "steinw/stein_bounds.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace steinw::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
}

CsvTable CsvTable::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("results", "cannot open " + path.string());
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("results", "empty file " + path.string());
  t.columns = split(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line));
  return t;
}

bool CsvTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("results", "missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

namespace {

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "null" || text == "~") return nullptr;
  std::size_t used = 0;
  try {
    if (text.find_first_of(".eEnN") == std::string::npos) {
      if (text[0] == '-') {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } else {
        const unsigned long long v = std::stoull(text, &used);
        if (used == text.size()) return v;
      }
    }
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  return text;
}

/// Typed view of one config object that rejects unknown keys.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidArgument(path_.empty() ? "config" : path_, "expected a mapping");
  }

  bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(node_.at(key), field(key));
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw InvalidArgument(field(key), "required");
    return convert<T>(node_.at(key), field(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw InvalidArgument(field(key), "required");
    return Section(node_.at(key), field(key));
  }

  void ignore(const std::string& key) { used_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : node_.items())
      if (!used_.count(key)) throw InvalidArgument(field(key), "unknown key");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  template <class T>
  static T convert(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw InvalidArgument(name, "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw InvalidArgument(name, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (v.is_number_integer()) {
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) return v.get<T>();
          throw InvalidArgument(name, "expected a nonnegative integer");
        } else {
          return v.get<T>();
        }
      }
      if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<T>(v.get<double>());
      throw InvalidArgument(name, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw InvalidArgument(name, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw InvalidArgument(name, "expected a list");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], name + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

std::vector<std::string> versioned(std::vector<std::string> cells) {
  cells.insert(cells.begin(), std::to_string(kHeaderVersion));
  return cells;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(finite_or_null(x));
  return arr;
}

// ---- bound ----

SamplerPtr make_sampler(Section s) {
  const auto type = s.require<std::string>("type");
  SamplerPtr sampler;
  if (type == "clt") {
    const auto kind = parse_summand_kind(s.get<std::string>("summand", "rademacher"));
    const int dim = s.get<int>("dim", 1);
    const int n = s.require<int>("n");
    sampler = clt_pair_sampler(SummandDistribution(kind, dim), n);
  } else if (type == "ou") {
    sampler = std::make_shared<OuPairSampler>(s.get<int>("dim", 1));
  } else if (type == "point_mass") {
    const auto x = s.require<std::vector<double>>("x");
    if (x.empty()) throw InvalidArgument(s.field("x"), "must be nonempty");
    sampler = ConstantPairSampler::point_mass(Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size())));
  } else {
    throw InvalidArgument(s.field("type"), "unknown sampler '" + type + "' (expected clt, ou or point_mass)");
  }
  s.finish();
  return sampler;
}

BoundConfig bound_config(Section& c, std::uint64_t seed, int threads) {
  BoundConfig cfg;
  cfg.s = c.get("s", cfg.s);
  cfg.k_max = c.get("k_max", cfg.k_max);
  cfg.n_outer = c.get("n_outer", cfg.n_outer);
  cfg.replicates = c.get("replicates", cfg.replicates);
  cfg.tail_tolerance = c.get("tail_tolerance", cfg.tail_tolerance);
  cfg.seed = seed;
  cfg.threads = threads;
  if (c.has("t_grid")) {
    const auto& node = c.raw("t_grid");
    if (node.is_array()) {
      Section wrap(json{{"t_grid", node}}, "");
      cfg.t_grid = wrap.require<std::vector<double>>("t_grid");
    } else {
      Section g = c.child("t_grid");
      const double lo = g.get("min", 1e-4), hi = g.get("max", 20.0);
      const int nodes = g.get("nodes", 200);
      g.finish();
      cfg.t_grid = geometric_grid(lo, hi, nodes);
    }
  }
  cfg.validate();
  return cfg;
}

json report_json(const BoundReport& r) {
  json terms = json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"order", t.order}, {"contribution", finite_or_null(t.contribution)}, {"raw", vector_json(t.raw)},
                     {"se", vector_json(t.se)}, {"weighted", vector_json(t.weighted)}});
  return {{"kind", r.kind},
          {"sampler", r.sampler},
          {"p", r.p},
          {"total", finite_or_null(r.total)},
          {"total_se", finite_or_null(r.total_se)},
          {"tail_diagnostic", finite_or_null(r.tail_diagnostic)},
          {"endpoint_correction", finite_or_null(r.endpoint_correction)},
          {"endpoint_exponent", finite_or_null(r.endpoint_exponent)},
          {"clamp_events", r.clamp_events},
          {"significant_clamps", r.significant_clamps},
          {"evaluations", r.evaluations},
          {"horizon", finite_or_null(r.horizon)},
          {"final_bound", finite_or_null(r.final_bound)},
          {"squared_total", finite_or_null(r.squared_total)},
          {"squared_final_bound", finite_or_null(r.squared_final_bound)},
          {"t_grid", vector_json(r.t_grid)},
          {"integrand", vector_json(r.integrand)},
          {"integrand_se", vector_json(r.integrand_se)},
          {"terms", terms},
          {"notes", r.notes},
          {"config",
           {{"s", r.config.s},
            {"k_max", r.config.k_max},
            {"n_outer", r.config.n_outer},
            {"replicates", r.config.replicates},
            {"seed", r.config.seed},
            {"tail_tolerance", r.config.tail_tolerance}}}};
}

PipelineOutput markov_chain_pipeline(Section& c, std::uint64_t seed, int threads) {
  const double tau = c.require<double>("tau");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument(c.field("tau"), "must lie in (0, 1), got " + format_number(tau));
  const int dim = c.get("dim", 1);
  const auto u = Potential::by_name(c.get<std::string>("potential", "gaussian"), dim);
  const double h = c.require<double>("h");
  if (!(h > 0.0 && h < 2.0 * u.rho / (u.lipschitz * u.lipschitz)))
    throw InvalidArgument(c.field("h"), "must lie in (0, 2 rho / L^2)");
  const double s = c.get("s", h / dim);
  if (!(s > 0.0)) throw InvalidArgument(c.field("s"), "must be > 0");
  const int k_max = c.get("k_max", 8);
  if (k_max < 3) throw InvalidArgument(c.field("k_max"), "must be >= 3");
  const int samples = c.get("samples", 2000);
  if (samples < 2) throw InvalidArgument(c.field("samples"), "must be >= 2");
  const auto steps = c.get<std::uint64_t>("steps", static_cast<std::uint64_t>(std::ceil(20.0 * dim / h)));
  c.finish();
  u.validate();

  // The chain's own stationary law: endpoints of independent long runs.
  PointCloud stationary(samples, dim);
  parallel_for(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    ChainState state{Vector::Zero(dim), 0, h};
    for (std::uint64_t t = 0; t < steps; ++t) coordinate_step(state, u, rng);
    stationary.row(static_cast<Eigen::Index>(i)) = state.x.transpose();
  });
  const auto rep = markov_chain_w2_bound(stationary, coordinate_kernel_moments(u, h), langevin_diffusion(u), tau, s, k_max);

  PipelineOutput out;
  out.results.columns = {"header_version", "kind", "term", "value"};
  auto add = [&](const std::string& term, double v) { out.results.rows.push_back(versioned({"markov_chain", term, num(v)})); };
  add("drift_term", rep.drift_term);
  add("drift_mismatch", rep.drift_mismatch);
  add("diffusion_mismatch", rep.diffusion_mismatch);
  add("third_moment", rep.third_moment);
  for (std::size_t k = 0; k < rep.series.size(); ++k) add("series_k" + std::to_string(k + 4), rep.series[k]);
  add("constant", rep.constant);
  add("total", rep.total);
  add("bound", rep.bound);
  out.report = {{"kind", "markov_chain"},
                {"potential", u.label},
                {"dim", dim},
                {"h", h},
                {"tau", tau},
                {"s", s},
                {"steps", steps},
                {"samples", samples},
                {"drift_term", rep.drift_term},
                {"drift_mismatch", rep.drift_mismatch},
                {"diffusion_mismatch", rep.diffusion_mismatch},
                {"third_moment", rep.third_moment},
                {"series", rep.series},
                {"constant", rep.constant},
                {"total", rep.total},
                {"bound", rep.bound}};
  std::ostringstream sum;
  sum << "markov_chain bound (" << u.label << ", d=" << dim << ", h=" << format_number(h) << ", tau=" << format_number(tau)
      << ")\n  bound = " << format_number(rep.bound) << "\n  total before contraction factor = " << format_number(rep.total)
      << '\n';
  out.summary = sum.str();
  return out;
}

PipelineOutput bound_pipeline(Section& c, std::uint64_t seed, int threads) {
  const auto kind = c.get<std::string>("kind", "gauss_w2");
  if (kind == "markov_chain") return markov_chain_pipeline(c, seed, threads);
  const double p = c.get("p", 2.0);
  const double horizon = c.get("horizon", 5.0);
  const auto diffusion = c.get<std::string>("diffusion", "ou");
  auto cfg = bound_config(c, seed, threads);
  const auto sampler = make_sampler(c.child("sampler"));
  c.finish();
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");

  BoundReport rep;
  if (kind == "gauss_w2") {
    rep = gauss_w2_bound(*sampler, cfg);
  } else if (kind == "wp_1d") {
    rep = wp_gauss_1d_bound(*sampler, p, cfg);
  } else if (kind == "wp_exch") {
    rep = wp_gauss_exch_bound(*sampler, p, cfg);
  } else if (kind == "general_w2") {
    if (diffusion != "ou") throw InvalidArgument("diffusion", "only 'ou' is available from configuration");
    if (!(horizon > 0.0)) throw InvalidArgument("horizon", "must be > 0");
    rep = general_w2_bound(*sampler, DiffusionSpec::ornstein_uhlenbeck(sampler->dimension()), horizon, cfg);
  } else {
    throw InvalidArgument("kind", "unknown bound kind '" + kind + "' (expected gauss_w2, wp_1d, wp_exch, general_w2 or markov_chain)");
  }

  PipelineOutput out;
  out.results.columns = {"header_version", "kind", "sampler", "t", "order", "raw", "raw_se", "weighted", "integrand", "integrand_se"};
  for (std::size_t j = 0; j < rep.t_grid.size(); ++j)
    for (const auto& term : rep.terms)
      out.results.rows.push_back(versioned({rep.kind, rep.sampler, num(rep.t_grid[j]), num(term.order), num(term.raw[j]),
                                            num(term.se[j]), num(term.weighted[j]), num(rep.integrand[j]),
                                            num(rep.integrand_se[j])}));
  out.report = report_json(rep);
  std::ostringstream sum;
  sum << rep.kind << " bound on " << rep.sampler << " (p=" << format_number(rep.p) << ")\n"
      << "  total = " << format_number(rep.total) << " +- " << format_number(rep.total_se) << '\n'
      << "  tail diagnostic = " << format_number(rep.tail_diagnostic) << '\n'
      << "  endpoint correction = " << format_number(rep.endpoint_correction) << '\n'
      << "  clamped nodes = " << rep.clamp_events << " of " << rep.evaluations << '\n';
  if (std::isfinite(rep.final_bound))
    sum << "  final bound (horizon " << format_number(rep.horizon) << ") = " << format_number(rep.final_bound)
        << ", squared-weight variant = " << format_number(rep.squared_final_bound) << '\n';
  for (const auto& t : rep.terms) sum << "  order " << t.order << " contribution = " << format_number(t.contribution) << '\n';
  for (const auto& n : rep.notes) sum << "  note: " << n << '\n';
  out.summary = sum.str();
  return out;
}

// ---- clt ----

PipelineOutput clt_pipeline(Section& c, std::uint64_t seed, int threads) {
  const auto kind = parse_summand_kind(c.get<std::string>("summand", "rademacher"));
  const int dim = c.get("dim", 1);
  const auto ns = c.require<std::vector<int>>("ns");
  const double p = c.get("p", 2.0);
  const double q = c.get("q", 2.0);
  const int samples = c.get("samples", 2000);
  c.finish();
  if (ns.empty()) throw InvalidArgument("ns", "must be nonempty");
  for (int n : ns)
    if (n < 1 || n > CltPairSampler::kMaxSummands) throw InvalidArgument("ns", "entries must lie in [1, 100000]");
  if (!(p >= 1.0)) throw InvalidArgument("p", "must be >= 1");
  if (samples < 100) throw InvalidArgument("samples", "must be >= 100");
  const SummandDistribution dist(kind, dim);
  const auto exp = clt_experiment(dist, ns, p, q, samples, seed, threads);

  PipelineOutput out;
  out.results.columns = {"header_version", "n", "p", "q", "distance", "se", "rate_expression", "seed"};
  json rows = json::array();
  for (const auto& r : exp.rows) {
    out.results.rows.push_back(versioned({num(r.n), num(r.p), num(r.q), num(r.distance), num(r.se), num(r.rate_expression), num(r.seed)}));
    rows.push_back({{"n", r.n}, {"distance", r.distance}, {"se", r.se}, {"rate_expression", finite_or_null(r.rate_expression)}, {"seed", r.seed}});
  }
  out.report = {{"summand", dist.name()}, {"dim", dim}, {"p", p}, {"q", q}, {"samples", samples}, {"rows", rows},
                {"fit", {{"slope", finite_or_null(exp.fit.slope)}, {"intercept", finite_or_null(exp.fit.intercept)}, {"r2", finite_or_null(exp.fit.r2)}}}};
  std::ostringstream sum;
  sum << "clt rate: " << dist.name() << ", d=" << dim << ", p=" << format_number(p) << ", " << samples << " replicas per n\n";
  for (const auto& r : exp.rows)
    sum << "  n=" << r.n << "  W_p=" << format_number(r.distance) << " +- " << format_number(r.se) << '\n';
  sum << "  log-log slope = " << format_number(exp.fit.slope) << " (r2 " << format_number(exp.fit.r2) << ")\n";
  out.summary = sum.str();
  return out;
}

// ---- knn ----

PipelineOutput knn_pipeline(Section& c, std::uint64_t seed, int threads) {
  const auto density = c.get<std::string>("density", "uniform");
  const int dim = c.get("dim", 1);
  const double amplitude = c.get("amplitude", 0.5);
  const auto ns = c.require<std::vector<int>>("ns");
  const int k_fixed = c.get("k", 0);
  const double k_exponent = c.get("k_exponent", 0.8);
  const int replicates = c.get("replicates", 1);
  const int target_samples = c.get("target_samples", 0);
  const bool export_graph = c.get("export_graph", false);
  c.finish();
  if (dim < 1) throw InvalidArgument("dim", "must be >= 1");
  if (ns.empty()) throw InvalidArgument("ns", "must be nonempty");
  if (replicates < 1) throw InvalidArgument("replicates", "must be >= 1");
  if (target_samples < 0) throw InvalidArgument("target_samples", "must be >= 0");
  if (!(k_exponent > 0.0 && k_exponent <= 1.0)) throw InvalidArgument("k_exponent", "must lie in (0, 1]");
  auto k_for = [&](int n) { return k_fixed > 0 ? k_fixed : static_cast<int>(std::ceil(std::pow(n, k_exponent))); };
  for (int n : ns) {
    if (n < 2) throw InvalidArgument("ns", "entries must be >= 2");
    const int k = k_for(n);
    if (k < 2 || k > n) throw InvalidArgument("k", "k = " + std::to_string(k) + " must lie in [2, n] for n = " + std::to_string(n));
  }
  TorusDensity f;
  if (density == "uniform")
    f = TorusDensity::uniform(dim);
  else if (density == "cosine")
    f = TorusDensity::cosine(dim, amplitude);
  else
    throw InvalidArgument("density", "unknown density '" + density + "' (expected uniform or cosine)");

  PipelineOutput out;
  out.results.columns = {"header_version", "n", "k", "replicate", "seed", "distance", "distance_uniform",
                         "bound_shape", "step_scale", "residual", "iterations"};
  json rows = json::array();
  std::ostringstream sum;
  sum << "knn walk: " << f.label << " density, d=" << dim << '\n';
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t rseed = derive_seed(seed, static_cast<std::uint64_t>(r));
    for (int n : ns) {
      const int k = k_for(n);
      const auto res = knn_experiment(f, n, k, rseed, threads, target_samples);
      out.results.rows.push_back(versioned({num(n), num(k), num(r), num(rseed), num(res.w2), num(res.w2_uniform),
                                            num(res.bound_shape), num(res.step_scale), num(res.residual), num(res.iterations)}));
      rows.push_back({{"n", n}, {"k", k}, {"replicate", r}, {"seed", rseed}, {"distance", res.w2},
                      {"distance_uniform", finite_or_null(res.w2_uniform)}, {"bound_shape", res.bound_shape},
                      {"step_scale", res.step_scale}, {"residual", res.residual}, {"iterations", res.iterations},
                      {"warnings", res.warnings}});
      sum << "  rep " << r << " n=" << n << " k=" << k << "  W_2=" << format_number(res.w2)
          << "  shape=" << format_number(res.bound_shape) << '\n';
      for (const auto& w : res.warnings) sum << "    warning: " << w << '\n';
    }
  }
  if (export_graph) {
    const int n = ns.front();
    const auto cloud = sample_torus_cloud(f, n, derive_seed(derive_seed(seed, 0), 1));
    std::ostringstream edges;
    build_walk_graph(cloud, k_for(n), threads).write_edge_list(edges);
    out.attachments.emplace_back("graph_edges.txt", edges.str());
  }
  out.report = {{"density", f.label}, {"dim", dim}, {"rows", rows}};
  out.summary = sum.str();
  return out;
}

// ---- lmc ----

PipelineOutput lmc_pipeline(Section& c, std::uint64_t seed, int threads, bool trace) {
  LmcConfig cfg;
  cfg.potential = c.get("potential", cfg.potential);
  cfg.scheme = parse_scheme(c.get<std::string>("scheme", "coordinate"));
  cfg.dims = c.get("dims", cfg.dims);
  cfg.eps = c.get("eps", cfg.eps);
  cfg.h_grid = c.get("h_grid", cfg.h_grid);
  cfg.n_grid = c.get("n_grid", cfg.n_grid);
  cfg.chains = c.get("chains", cfg.chains);
  cfg.bootstrap = c.get("bootstrap", cfg.bootstrap);
  c.finish();
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.validate();
  const auto rep = lmc_complexity_experiment(cfg);

  PipelineOutput out;
  out.results.columns = {"header_version", "scheme", "d", "h", "n", "distance", "se", "moment_bound", "sup_bound", "seed"};
  for (const auto& r : rep.rows)
    out.results.rows.push_back(versioned({r.scheme, num(r.dim), num(r.h), num(r.n), num(r.w2), num(r.se),
                                          num(r.moment_bound), num(r.sup_bound), num(r.seed)}));
  json thresholds = json::array();
  for (const auto& t : rep.thresholds)
    thresholds.push_back({{"d", t.dim}, {"eps", t.eps}, {"h", t.h}, {"n_star", t.n_star == 0 ? json(nullptr) : json(t.n_star)}});
  json refs = json::array();
  for (const auto& r : rep.references)
    refs.push_back({{"kind", r.kind}, {"h", r.h}, {"steps", r.steps}, {"mean_sq_norm", r.mean_sq_norm}});
  out.report = {{"potential", cfg.potential}, {"scheme", to_string(cfg.scheme)}, {"chains", cfg.chains},
                {"thresholds", thresholds}, {"references", refs},
                {"exponent_dim", finite_or_null(rep.exponent_dim)}, {"exponent_eps", finite_or_null(rep.exponent_eps)},
                {"notes", rep.notes}};
  std::ostringstream sum;
  sum << "lmc complexity: " << cfg.potential << ", " << to_string(cfg.scheme) << " scheme, " << cfg.chains << " chains\n";
  for (const auto& t : rep.thresholds)
    sum << "  d=" << t.dim << " eps=" << format_number(t.eps) << " h=" << format_number(t.h)
        << "  n*=" << (t.n_star ? std::to_string(t.n_star) : std::string("not reached")) << '\n';
  sum << "  exponent in d = " << format_number(rep.exponent_dim) << ", exponent in 1/eps = " << format_number(rep.exponent_eps) << '\n';
  for (const auto& n : rep.notes) sum << "  note: " << n << '\n';
  out.summary = sum.str();

  if (trace) {
    const int d = cfg.dims.front();
    const auto u = Potential::by_name(cfg.potential, d);
    Rng rng = make_stream(derive_seed(seed, 0x7aceULL), 0);
    ChainState state{Vector::Zero(d), 0, cfg.h_grid.front()};
    std::string blob;
    const std::uint64_t steps = cfg.n_grid.back();
    blob.reserve(static_cast<std::size_t>(steps + 1) * d * sizeof(double));
    auto dump = [&] { blob.append(reinterpret_cast<const char*>(state.x.data()), d * sizeof(double)); };
    dump();
    while (state.steps < steps) {
      advance(state, u, cfg.scheme, rng);
      dump();
    }
    out.attachments.emplace_back("trace.bin", std::move(blob));
    out.report["trace"] = {{"file", "trace.bin"}, {"dim", d}, {"rows", steps + 1}, {"h", cfg.h_grid.front()}};
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

}  // namespace

json load_config(const fs::path& path) {
  if (!fs::exists(path)) throw InvalidArgument("config", "file not found: " + path.string());
  YAML::Node node;
  try {
    node = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw InvalidArgument("config", std::string("parse error: ") + e.what());
  }
  auto j = yaml_to_json(node);
  if (!j.is_object()) throw InvalidArgument("config", "top level must be a mapping");
  return j;
}

PipelineOutput run_pipeline(const std::string& pipeline, const json& config, std::uint64_t seed, int threads, bool trace) {
  Section c(config, "");
  const auto declared = c.get<std::string>("pipeline", pipeline);
  if (declared != pipeline)
    throw InvalidArgument("pipeline", "config declares '" + declared + "' but the subcommand is '" + pipeline + "'");
  c.ignore("seed");
  c.ignore("threads");
  if (threads < 1) throw InvalidArgument("threads", "must be >= 1");
  if (pipeline == "bound") return bound_pipeline(c, seed, threads);
  if (pipeline == "clt") return clt_pipeline(c, seed, threads);
  if (pipeline == "knn") return knn_pipeline(c, seed, threads);
  if (pipeline == "lmc") return lmc_pipeline(c, seed, threads, trace);
  throw InvalidArgument("pipeline", "unknown pipeline '" + pipeline + "'");
}

int run(const RunOptions& options) {
  json record = {{"version", kVersion}, {"pipeline", options.pipeline}, {"config_path", options.config.string()}};
  auto fail = [&](int code, const std::string& kind, const std::string& message, const std::string& field) {
    record["status"] = "error";
    record["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    if (!field.empty()) record["error"]["field"] = field;
    try {
      fs::create_directories(options.out);
      write_file(options.out / "error.json", record.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    std::fprintf(stderr, "error (%s): %s\n", kind.c_str(), message.c_str());
    return code;
  };
  json config;
  std::uint64_t seed = 0;
  int threads = 1;
  try {
    config = load_config(options.config);
    record["config"] = config;
    Section top(config, "");
    seed = options.seed ? *options.seed : top.get<std::uint64_t>("seed", 0);
    threads = options.threads ? *options.threads : top.get<int>("threads", default_threads());
    record["seed"] = seed;
    record["threads"] = threads;
  } catch (const InvalidArgument& e) {
    return fail(kValidationError, "validation", e.what(), e.field());
  }
  try {
    auto out = run_pipeline(options.pipeline, config, seed, threads, options.trace);
    fs::create_directories(options.out);
    std::ostringstream csv;
    out.results.write(csv);
    write_file(options.out / "results.csv", csv.str());
    record["status"] = "ok";
    record["report"] = out.report;
    write_file(options.out / "report.json", record.dump(2) + "\n");
    write_file(options.out / "summary.txt", "steinw " + std::string(kVersion) + "  seed " + std::to_string(seed) + "\n" + out.summary);
    for (const auto& [name, body] : out.attachments) write_file(options.out / name, body);
    std::fwrite(out.summary.data(), 1, out.summary.size(), stdout);
    return kOk;
  } catch (const InvalidArgument& e) {
    return fail(kValidationError, "validation", e.what(), e.field());
  } catch (const std::exception& e) {
    return fail(kPipelineError, "pipeline", e.what(), "");
  }
}

void emit_plot_data(const fs::path& results_csv, const std::string& kind, const fs::path& out) {
  CsvTable plot;
  if (kind == "rate_loglog") {
    const auto t = CsvTable::read(results_csv);
    const auto cn = t.column("n");
    const auto cd = t.column("distance");
    plot.columns = {"log_n", "log_distance"};
    for (const auto& r : t.rows)
      plot.rows.push_back({format_number(std::log(std::stod(r.at(cn)))), format_number(std::log(std::stod(r.at(cd))))});
  } else if (kind == "bound_decomposition") {
    const auto t = CsvTable::read(results_csv);
    const auto ct = t.column("t"), ck = t.column("order"), cw = t.column("weighted");
    std::map<std::string, std::map<int, std::string>> by_t;
    std::vector<std::string> order_of_t;
    std::set<int> orders;
    for (const auto& r : t.rows) {
      if (!by_t.count(r.at(ct))) order_of_t.push_back(r.at(ct));
      const int k = std::stoi(r.at(ck));
      by_t[r.at(ct)][k] = r.at(cw);
      orders.insert(k);
    }
    plot.columns = {"t"};
    for (int k : orders) plot.columns.push_back("order_" + std::to_string(k));
    for (const auto& tv : order_of_t) {
      std::vector<std::string> row{tv};
      for (int k : orders) row.push_back(by_t[tv].count(k) ? by_t[tv][k] : "nan");
      plot.rows.push_back(std::move(row));
    }
  } else if (kind == "chain_trace") {
    const auto dir = results_csv.parent_path();
    std::ifstream rep_in(dir / "report.json");
    if (!rep_in) throw InvalidArgument("results", "chain_trace needs report.json next to the results");
    const auto rep = json::parse(rep_in);
    if (!rep.contains("report") || !rep["report"].contains("trace"))
      throw InvalidArgument("results", "no chain trace recorded; rerun lmc with --trace");
    const int d = rep["report"]["trace"]["dim"].get<int>();
    std::ifstream bin(dir / "trace.bin", std::ios::binary);
    if (!bin) throw InvalidArgument("results", "trace.bin not found");
    plot.columns = {"step"};
    for (int j = 0; j < d; ++j) plot.columns.push_back("x" + std::to_string(j + 1));
    plot.columns.push_back("sq_norm");
    std::vector<double> row(static_cast<std::size_t>(d));
    for (std::uint64_t step = 0; bin.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(d * sizeof(double))); ++step) {
      std::vector<std::string> cells{std::to_string(step)};
      double sq = 0.0;
      for (double v : row) {
        cells.push_back(format_number(v));
        sq += v * v;
      }
      cells.push_back(format_number(sq));
      plot.rows.push_back(std::move(cells));
    }
  } else {
    throw InvalidArgument("kind", "unknown plot kind '" + kind + "' (expected rate_loglog, bound_decomposition or chain_trace)");
  }
  std::ofstream f(out);
  if (!f) throw Error("cannot write " + out.string());
  plot.write(f);
}

}  // namespace steinw::cli
