#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsd/baselines.hpp"
#include "gsd/bernoulli.hpp"
#include "gsd/experiments/benchmark.hpp"
#include "gsd/experiments/clusters.hpp"
#include "gsd/experiments/metrics.hpp"
#include "gsd/experiments/noise.hpp"
#include "gsd/experiments/rng.hpp"
#include "gsd/experiments/spec.hpp"
#include "gsd/gaussian.hpp"
#include "gsd/io/edge_list.hpp"
#include "gsd/io/matrix_file.hpp"
#include "gsd/spectral.hpp"
#include "gsd/uniform.hpp"

namespace gsd::experiments {

struct TableRow {
  std::string method;
  std::string param_json;
  std::string noise_kind;
  double noise_level = 0.0;
  std::string metric;
  double value = 0.0;
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::string method;
  int iteration = 0;
  double loss = 0.0;
  double elapsed_s = 0.0;
};

struct ExperimentTable {
  std::vector<TableRow> rows;
  std::vector<TraceRow> traces;
};

struct RunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  /// When false, runtimes and trace timestamps are written as 0 so output is byte-stable.
  bool record_timing = true;
};

/// Everything shared by the cells of one run; built once, then read-only.
struct ExperimentContext {
  std::optional<Graph> graph;
  std::optional<GridShape> grid;
  std::optional<SpectralBasis> basis;
  std::vector<Signal> truth;
  /// noisy[level][repeat] and the matching corruption masks.
  std::vector<std::vector<Signal>> noisy;
  std::vector<std::vector<std::vector<char>>> corrupted;
  std::vector<std::vector<std::uint64_t>> seeds;

  const Graph& g() const { return *graph; }
};

namespace detail {

inline bool needs_basis(const ExperimentSpec& spec) {
  if (spec.signal.kind == SignalSource::Kind::prior && spec.signal.kappa > 0.0) return true;
  return std::any_of(spec.methods.begin(), spec.methods.end(),
                     [](const MethodSpec& m) { return m.name == "band-low" || m.name == "band-high"; });
}

inline ExperimentContext prepare(const ExperimentSpec& spec, std::uint64_t seed) {
  ExperimentContext ctx;
  std::optional<ClusterData> clusters;
  switch (spec.graph.kind) {
    case GraphSource::Kind::grid:
      ctx.graph = build_grid_graph(spec.graph.height, spec.graph.width);
      ctx.grid = GridShape{spec.graph.height, spec.graph.width};
      break;
    case GraphSource::Kind::clusters: {
      ClusterOptions opt = spec.graph.clusters;
      opt.signals = spec.repeats;
      clusters = make_cluster_data(opt, derive_seed(seed, {kGraph}));
      ctx.graph = build_knn_graph(clusters->points, spec.graph.k);
      break;
    }
    case GraphSource::Kind::knn_file:
      ctx.graph = build_knn_graph(io::read_points(spec.graph.path), spec.graph.k);
      break;
    case GraphSource::Kind::edge_list:
      ctx.graph = io::read_edge_list(spec.graph.path);
      break;
  }
  const Index n = ctx.g().num_vertices();
  if (spec.signal.kind == SignalSource::Kind::prior || needs_basis(spec)) ctx.basis = eigendecompose(ctx.g());

  switch (spec.signal.kind) {
    case SignalSource::Kind::prior:
      for (int r = 0; r < spec.repeats; ++r) {
        Engine rng = make_engine(seed, {kSignal, static_cast<std::uint64_t>(r)});
        Signal f = sample_prior(*ctx.basis, spec.signal.kappa, spec.signal.mean * std::sqrt(static_cast<double>(n)), rng);
        if (spec.signal.nonnegative) f.array() += spec.signal.floor - f.minCoeff();
        ctx.truth.push_back(std::move(f));
      }
      break;
    case SignalSource::Kind::cluster_low:
      ctx.truth = clusters->low_freq;
      break;
    case SignalSource::Kind::cluster_high:
      ctx.truth = clusters->high_freq;
      break;
    case SignalSource::Kind::file: {
      const auto mf = io::read_matrix_file(spec.signal.path);
      if (mf.data.rows() != n) {
        throw InvalidArgument(spec.signal.path + ": has " + std::to_string(mf.data.rows()) + " rows but the graph has " +
                              std::to_string(n) + " vertices");
      }
      const auto cols = io::parse_column_range(spec.signal.columns, mf.data.cols());
      for (int r = 0; r < spec.repeats; ++r) ctx.truth.push_back(mf.data.col(cols[static_cast<std::size_t>(r) % cols.size()]));
      break;
    }
  }

  const auto levels = spec.noise.levels.size();
  ctx.noisy.resize(levels);
  ctx.corrupted.resize(levels);
  ctx.seeds.resize(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    for (int r = 0; r < spec.repeats; ++r) {
      const std::uint64_t s = derive_seed(seed, {kNoise, l, static_cast<std::uint64_t>(r)});
      std::vector<char> mask;
      ctx.noisy[l].push_back(add_noise(ctx.truth[static_cast<std::size_t>(r)], NoiseSpec{spec.noise.at(spec.noise.levels[l]), s}, &mask));
      ctx.corrupted[l].push_back(std::move(mask));
      ctx.seeds[l].push_back(s);
    }
  }
  return ctx;
}

inline double num(const nlohmann::json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_number()) throw InvalidArgument(std::string("parameter '") + key + "' must be a number");
  return p[key].get<double>();
}

inline std::string str(const nlohmann::json& p, const char* key, const std::string& fallback) {
  if (!p.contains(key)) return fallback;
  if (!p[key].is_string()) throw InvalidArgument(std::string("parameter '") + key + "' must be a string");
  return p[key].get<std::string>();
}

inline SparseMode mode_of(const nlohmann::json& p, SparseMode fallback) {
  const auto m = str(p, "mode", fallback == SparseMode::l1 ? "l1" : "l0");
  if (m == "l1") return SparseMode::l1;
  if (m == "l0") return SparseMode::l0;
  throw InvalidArgument("mode must be l1 or l0");
}

inline VertexSet zeta_of(const nlohmann::json& p, const Signal& noisy, const std::vector<char>& mask) {
  const auto z = str(p, "zeta", "zeros");
  const Index n = noisy.size();
  if (z == "zeros") return zeros_of(noisy);
  if (z == "all") return VertexSet::all(n);
  if (z == "corrupted") return VertexSet::where(n, [&](Index a) { return mask[static_cast<std::size_t>(a)] != 0; });
  throw InvalidArgument("zeta must be zeros, corrupted or all");
}

/// Runs one method on one noisy signal. `trace` receives the solver trace, if any.
inline Signal run_method(const std::string& name, const nlohmann::json& p, const ExperimentContext& ctx, const Signal& noisy,
                         const std::vector<char>& mask, double level, std::vector<TracePoint>& trace) {
  const Graph& g = ctx.g();
  const Index n = g.num_vertices();
  auto keep_trace = [&](DenoiseResult r) {
    trace = std::move(r.trace);
    return std::move(r.signal);
  };
  if (name == "noisy") return noisy;
  if (name == "gaussian") {
    double tau = 0.0;
    if (p.contains("tau") && p["tau"].is_string()) {
      if (p["tau"] != "estimate") throw InvalidArgument("gaussian tau must be a number or 'estimate'");
      tau = estimate_tau(noisy, g);
    } else {
      tau = num(p, "tau", 1.0);
    }
    return keep_trace(denoise_gaussian(noisy, g, tau));
  }
  if (name == "uniform-ccp") {
    CcpOptions opt;
    opt.max_outer = static_cast<int>(num(p, "max_outer", opt.max_outer));
    opt.tol = num(p, "tol", opt.tol);
    return keep_trace(ccp_denoise(noisy, g, num(p, "kappa", 1.0), opt));
  }
  if (name == "projected-gradient") {
    ProjectedGradientOptions opt;
    opt.step = num(p, "step", opt.step);
    opt.max_iter = static_cast<int>(num(p, "max_iter", opt.max_iter));
    opt.tol = num(p, "tol", opt.tol);
    return keep_trace(projected_gradient_denoise(noisy, g, num(p, "kappa", 1.0), opt));
  }
  if (name == "bernoulli") {
    BernoulliConfig cfg;
    cfg.zeta = zeta_of(p, noisy, mask);
    cfg.mode = mode_of(p, SparseMode::l1);
    if (p.contains("tau")) {
      cfg.tau = num(p, "tau", 0.0);
    } else {
      cfg.p = p.contains("p") && !(p["p"].is_string() && p["p"] == "level") ? num(p, "p", level) : level;
      cfg.kappa = num(p, "kappa", 1.0);
    }
    return keep_trace(bernoulli_denoise(noisy, g, cfg));
  }
  if (name == "no-trust") return keep_trace(no_trust_denoise(noisy, g, num(p, "tau", 1.0), mode_of(p, SparseMode::l0)));
  if (name == "interpolate") {
    const VertexSet zeta = zeta_of(p, noisy, mask);
    if (zeta.size() == n) throw InvalidArgument("interpolate: every vertex is suspected");
    if (zeta.empty()) return noisy;
    const VertexSet known = zeta.complement();
    return harmonic_interpolate(g, known, known.gather(noisy));
  }
  if (name == "local-average") return local_average(noisy, g, static_cast<int>(num(p, "t", 1)));
  if (name == "magic") return magic_filter(noisy, g, static_cast<int>(num(p, "t", 1)));
  if (name == "band-low" || name == "band-high") {
    Index k = 0;
    if (p.contains("fraction")) {
      k = static_cast<Index>(std::lround(num(p, "fraction", 0.1) * static_cast<double>(n)));
    } else {
      k = static_cast<Index>(num(p, "k", 1));
    }
    return band_filter(noisy, *ctx.basis, std::clamp<Index>(k, 0, n), name == "band-low" ? Band::low : Band::high);
  }
  if (name == "nuclear-norm") {
    if (!ctx.grid) throw InvalidArgument("nuclear-norm needs a grid graph");
    return nuclear_norm_denoise(noisy, *ctx.grid, num(p, "tau", 1.0));
  }
  throw InvalidArgument("unknown method '" + name + "'");
}

inline double metric_value(const std::string& metric, const Signal& truth, const Signal& est) {
  if (metric == "relative_error") return relative_error(truth, est);
  if (metric == "correlation") return pearson_correlation(truth, est);
  throw InvalidArgument("unknown metric '" + metric + "'");
}

/// Runs fn(i) for i in [0, count) on `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct Cell {
  std::size_t method = 0;
  nlohmann::json params;
  std::size_t level = 0;
  int repeat = 0;
};

struct CellOutput {
  std::vector<TableRow> rows;
  std::vector<TraceRow> traces;
};

inline ExperimentTable run_sweep(const ExperimentSpec& spec, const RunOptions& opt) {
  ExperimentTable table;
  if (spec.methods.empty()) return table;
  const ExperimentContext ctx = prepare(spec, opt.seed);

  std::vector<Cell> cells;
  for (std::size_t m = 0; m < spec.methods.size(); ++m) {
    for (const auto& params : spec.methods[m].expand()) {
      for (std::size_t l = 0; l < spec.noise.levels.size(); ++l) {
        for (int r = 0; r < spec.repeats; ++r) cells.push_back({m, params, l, r});
      }
    }
  }

  std::vector<CellOutput> out(cells.size());
  parallel_for(cells.size(), opt.threads, [&](std::size_t i) {
    const Cell& c = cells[i];
    const auto& name = spec.methods[c.method].name;
    const std::string pj = c.params.dump();
    const double level = spec.noise.levels[c.level];
    const std::string kind = spec.noise.kind;
    const auto r = static_cast<std::size_t>(c.repeat);
    const std::uint64_t seed = ctx.seeds[c.level][r];
    std::vector<TracePoint> trace;
    ::gsd::detail::Stopwatch clock;
    try {
      const Signal est = run_method(name, c.params, ctx, ctx.noisy[c.level][r], ctx.corrupted[c.level][r], level, trace);
      const double runtime = opt.record_timing ? clock.seconds() : 0.0;
      for (const auto& metric : spec.metrics) {
        double v = std::numeric_limits<double>::quiet_NaN();
        std::string label = metric;
        try {
          v = metric_value(metric, ctx.truth[r], est);
        } catch (const Error& e) {
          label = "error: " + std::string(e.what());
        }
        out[i].rows.push_back({name, pj, kind, level, label, v, runtime, seed});
      }
    } catch (const Error& e) {
      out[i].rows.push_back({name, pj, kind, level, "error: " + std::string(e.what()), std::numeric_limits<double>::quiet_NaN(),
                             opt.record_timing ? clock.seconds() : 0.0, seed});
    }
    if (c.repeat == 0) {
      const std::string label = name + pj + "@" + io::format_double(level);
      for (const auto& t : trace) out[i].traces.push_back({label, t.iteration, t.loss, opt.record_timing ? t.elapsed_s : 0.0});
    }
  });
  for (auto& o : out) {
    table.rows.insert(table.rows.end(), o.rows.begin(), o.rows.end());
    table.traces.insert(table.traces.end(), o.traces.begin(), o.traces.end());
  }
  return table;
}

inline ExperimentTable run_benchmark(const ExperimentSpec& spec, const RunOptions& opt) {
  ExperimentContext ctx = prepare(spec, opt.seed);
  ExperimentTable table;
  std::vector<CellOutput> out(static_cast<std::size_t>(spec.repeats));
  const auto& b = spec.benchmark;
  const nlohmann::json params = {{"kappa", b.kappa}};
  const std::string pj = params.dump();
  parallel_for(out.size(), opt.threads, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(opt.seed, {kMethod, r});
    CcpOptions copt;
    copt.max_outer = b.max_outer;
    ProjectedGradientOptions popt;
    popt.max_iter = b.pg_max_iter;
    popt.step = b.step;
    const auto rep = ccp_vs_pg_benchmark(ctx.truth[r], ctx.g(), b.kappa, seed, copt, popt);
    auto t = [&](double s) { return opt.record_timing ? s : 0.0; };
    auto& rows = out[r].rows;
    rows.push_back({"ground-truth", pj, "uniform", 1.0, "loss", rep.truth_loss, 0.0, seed});
    rows.push_back({"uniform-ccp", pj, "uniform", 1.0, "loss", rep.ccp_loss(), t(rep.ccp_seconds), seed});
    rows.push_back({"uniform-ccp", pj, "uniform", 1.0, "iterations", static_cast<double>(rep.ccp.iterations), t(rep.ccp_seconds), seed});
    rows.push_back({"uniform-ccp", pj, "uniform", 1.0, "relative_error", relative_error(rep.truth, rep.ccp.signal), t(rep.ccp_seconds), seed});
    rows.push_back({"projected-gradient", pj, "uniform", 1.0, "loss", rep.pg_loss(), t(rep.pg_seconds), seed});
    rows.push_back({"projected-gradient", pj, "uniform", 1.0, "iterations", static_cast<double>(rep.pg.iterations), t(rep.pg_seconds), seed});
    rows.push_back({"projected-gradient", pj, "uniform", 1.0, "relative_error", relative_error(rep.truth, rep.pg.signal), t(rep.pg_seconds), seed});
    const std::string suffix = "#" + std::to_string(r);
    for (const auto& tp : rep.ccp.trace) out[r].traces.push_back({"uniform-ccp" + suffix, tp.iteration, tp.loss, t(tp.elapsed_s)});
    for (const auto& tp : rep.pg.trace) out[r].traces.push_back({"projected-gradient" + suffix, tp.iteration, tp.loss, t(tp.elapsed_s)});
  });
  for (auto& o : out) {
    table.rows.insert(table.rows.end(), o.rows.begin(), o.rows.end());
    table.traces.insert(table.traces.end(), o.traces.begin(), o.traces.end());
  }
  return table;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace detail

/// One row per (method, params, noise level, metric, repeat), in spec order.
inline ExperimentTable run_experiment(const ExperimentSpec& spec, const RunOptions& opt = {}) {
  if (spec.type == "ccp-vs-pg") return detail::run_benchmark(spec, opt);
  return detail::run_sweep(spec, opt);
}

inline void write_table_csv(std::ostream& os, const ExperimentTable& t) {
  os << "method,param_json,noise_kind,noise_level,metric,value,runtime_s,seed\n";
  for (const auto& r : t.rows) {
    os << detail::csv_field(r.method) << ',' << detail::csv_field(r.param_json) << ',' << detail::csv_field(r.noise_kind) << ','
       << io::format_double(r.noise_level) << ',' << detail::csv_field(r.metric) << ',' << io::format_double(r.value) << ','
       << io::format_double(r.runtime_s) << ',' << r.seed << '\n';
  }
}

inline void write_traces_csv(std::ostream& os, const ExperimentTable& t) {
  os << "method,iteration,loss,elapsed_s\n";
  for (const auto& r : t.traces) {
    os << detail::csv_field(r.method) << ',' << r.iteration << ',' << io::format_double(r.loss) << ','
       << io::format_double(r.elapsed_s) << '\n';
  }
}

/// Mean and median of each (method, params, noise level, metric) group over repeats.
inline void write_summary_csv(std::ostream& os, const ExperimentTable& t) {
  using Key = std::tuple<std::string, std::string, std::string, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : t.rows) {
    Key k{r.method, r.param_json, r.noise_kind, r.noise_level, r.metric};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(r.value);
  }
  os << "method,param_json,noise_kind,noise_level,metric,count,mean,median\n";
  for (const auto& k : order) {
    auto v = groups[k];
    std::sort(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    const std::size_t h = v.size() / 2;
    const double median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    os << detail::csv_field(std::get<0>(k)) << ',' << detail::csv_field(std::get<1>(k)) << ',' << detail::csv_field(std::get<2>(k))
       << ',' << io::format_double(std::get<3>(k)) << ',' << detail::csv_field(std::get<4>(k)) << ',' << v.size() << ','
       << io::format_double(mean) << ',' << io::format_double(median) << '\n';
  }
}

}  // namespace gsd::experiments
