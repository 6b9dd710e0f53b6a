// gsd: denoise data matrices on graphs and run experiment specs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsd/experiments/runner.hpp"
#include "gsd/gsd.hpp"
#include "gsd/io/edge_list.hpp"
#include "gsd/io/matrix_file.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

/// Bad flag combinations that CLI11 cannot express on its own.
struct UsageError : gsd::InvalidArgument {
  using gsd::InvalidArgument::InvalidArgument;
};

std::string version_string() {
  return std::string("gsd ") + GSD_VERSION + " (" + GSD_BUILD_TYPE + ", " + GSD_COMPILER + ", commit " + GSD_GIT_COMMIT + ", Eigen " +
         std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION) + ")";
}

int default_threads() {
  if (const char* env = std::getenv("GSD_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) return t;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct DenoiseArgs {
  std::string model;
  std::vector<std::string> graph;
  std::string points;
  std::string input;
  std::string output = "-";
  std::string columns = "all";
  double tau = 0.0;
  double kappa = 1.0;
  double p = 0.0;
  std::string mode;
  std::string zeta = "zeros";
  bool estimate_tau = false;
  std::uint64_t seed = 0;
  double jitter = 0.0;
  int max_outer = 100;
  int threads = 1;
  // Which optional flags were given.
  bool has_tau = false, has_kappa = false, has_p = false, has_mode = false, has_zeta = false;
};

gsd::Graph make_graph(const DenoiseArgs& a, const gsd::io::MatrixFile& in) {
  const gsd::Index n = in.data.rows();
  if (a.graph.empty()) {
    if (in.format == gsd::io::MatrixFormat::pgm) return gsd::build_grid_graph(in.height, in.width);
    throw UsageError("--graph is required for delimited input");
  }
  const std::string& kind = a.graph[0];
  const std::string arg = a.graph.size() > 1 ? a.graph[1] : "";
  if (kind == "grid") {
    const auto x = arg.find('x');
    gsd::Index h = 0, w = 0;
    try {
      if (x == std::string::npos) throw std::invalid_argument(arg);
      h = std::stol(arg.substr(0, x));
      w = std::stol(arg.substr(x + 1));
    } catch (const std::exception&) {
      throw UsageError("--graph grid expects HxW, got '" + arg + "'");
    }
    if (h * w != n) {
      throw gsd::InvalidArgument("grid " + arg + " has " + std::to_string(h * w) + " vertices but the input has " + std::to_string(n) +
                                 " rows");
    }
    return gsd::build_grid_graph(h, w);
  }
  if (kind == "knn") {
    gsd::Index k = 0;
    try {
      k = std::stol(arg);
    } catch (const std::exception&) {
      throw UsageError("--graph knn expects an integer K, got '" + arg + "'");
    }
    const Eigen::MatrixXd pts = a.points.empty() ? in.data : gsd::io::read_points(a.points);
    if (pts.rows() != n) throw gsd::InvalidArgument("point file rows do not match the input rows");
    return gsd::build_knn_graph(pts, k);
  }
  if (kind == "edge-list") return gsd::io::read_edge_list(arg, n);
  throw UsageError("unknown --graph kind '" + kind + "' (expected grid, knn or edge-list)");
}

/// Suspicion set for column j: zeros of the column, or a 0/1 mask file.
class ZetaSource {
 public:
  ZetaSource(const std::string& spec, const gsd::io::MatrixFile& in) : zeros_(spec == "zeros") {
    if (zeros_) return;
    mask_ = gsd::io::read_matrix_file(spec).data;
    if (mask_.rows() != in.data.rows()) throw gsd::InvalidArgument(spec + ": mask rows do not match the input rows");
    if (mask_.cols() != 1 && mask_.cols() != in.data.cols()) {
      throw gsd::InvalidArgument(spec + ": mask needs one column or one per input column");
    }
    if (!((mask_.array() == 0.0) || (mask_.array() == 1.0)).all()) throw gsd::InvalidArgument(spec + ": mask entries must be 0 or 1");
  }

  gsd::VertexSet operator()(const Eigen::VectorXd& col, gsd::Index j) const {
    if (zeros_) return gsd::zeros_of(col);
    const gsd::Index c = mask_.cols() == 1 ? 0 : j;
    return gsd::VertexSet::where(mask_.rows(), [&](gsd::Index a) { return mask_(a, c) != 0.0; });
  }

 private:
  bool zeros_;
  Eigen::MatrixXd mask_;
};

void check_flags(const DenoiseArgs& a) {
  auto forbid = [&](bool given, const char* flag) {
    if (given) throw UsageError(std::string(flag) + " does not apply to '" + a.model + "'");
  };
  if (a.has_mode && a.mode != "l1" && a.mode != "l0") throw UsageError("--mode must be l1 or l0");
  if (a.model == "gaussian") {
    if (!a.has_tau && !a.estimate_tau) throw UsageError("gaussian needs --tau or --estimate-tau");
    forbid(a.has_p, "--p");
    forbid(a.has_kappa, "--kappa");
    forbid(a.has_mode, "--mode");
    forbid(a.has_zeta, "--zeta");
  } else if (a.model == "uniform") {
    forbid(a.has_tau, "--tau");
    forbid(a.has_p, "--p");
    forbid(a.estimate_tau, "--estimate-tau");
    forbid(a.has_mode, "--mode");
    forbid(a.has_zeta, "--zeta");
  } else if (a.model == "bernoulli") {
    forbid(a.estimate_tau, "--estimate-tau");
    if (a.has_tau == (a.has_p || a.has_kappa)) throw UsageError("bernoulli needs either --tau or both --p and --kappa");
    if (!a.has_tau && !(a.has_p && a.has_kappa)) throw UsageError("bernoulli needs both --p and --kappa");
  } else if (a.model == "no-trust") {
    if (!a.has_tau) throw UsageError("no-trust needs --tau");
    forbid(a.has_p, "--p");
    forbid(a.has_kappa, "--kappa");
    forbid(a.estimate_tau, "--estimate-tau");
    forbid(a.has_zeta, "--zeta");
  } else if (a.model == "interpolate") {
    forbid(a.has_tau, "--tau");
    forbid(a.has_p, "--p");
    forbid(a.has_kappa, "--kappa");
    forbid(a.estimate_tau, "--estimate-tau");
    forbid(a.has_mode, "--mode");
  }
}

struct ColumnOutcome {
  Eigen::VectorXd signal;
  int iterations = 0;
  std::optional<double> tau_hat;
  std::vector<std::string> warnings;
};

ColumnOutcome denoise_column(const DenoiseArgs& a, const gsd::Graph& g, const Eigen::VectorXd& col, gsd::Index j,
                             const ZetaSource& zeta) {
  ColumnOutcome out;
  auto take = [&](gsd::DenoiseResult r) {
    out.signal = std::move(r.signal);
    out.iterations = r.iterations;
    for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
  };
  const gsd::SparseMode mode = a.mode == "l1" ? gsd::SparseMode::l1 : gsd::SparseMode::l0;
  if (a.model == "gaussian") {
    double tau = a.tau;
    if (a.estimate_tau) {
      auto est = gsd::estimate_tau_detailed(col, g);
      tau = est.tau;
      out.tau_hat = tau;
      for (auto& w : est.warnings) out.warnings.push_back(std::move(w));
    }
    take(gsd::denoise_gaussian(col, g, tau));
  } else if (a.model == "uniform") {
    gsd::CcpOptions opt;
    opt.max_outer = a.max_outer;
    opt.seed = a.seed;
    opt.jitter = a.jitter;
    take(gsd::ccp_denoise(col, g, a.kappa, opt));
  } else if (a.model == "bernoulli") {
    gsd::BernoulliConfig cfg;
    cfg.zeta = zeta(col, j);
    cfg.mode = a.has_mode ? mode : gsd::SparseMode::l1;
    if (a.has_tau) {
      cfg.tau = a.tau;
    } else {
      cfg.p = a.p;
      cfg.kappa = a.kappa;
    }
    take(gsd::bernoulli_denoise(col, g, cfg));
  } else if (a.model == "no-trust") {
    take(gsd::no_trust_denoise(col, g, a.tau, a.has_mode ? mode : gsd::SparseMode::l0));
  } else {
    const gsd::VertexSet z = zeta(col, j);
    if (z.empty()) {
      out.signal = col;
    } else {
      const gsd::VertexSet known = z.complement();
      if (known.empty()) throw gsd::InvalidArgument("every vertex is in --zeta; nothing to interpolate from");
      out.signal = gsd::harmonic_interpolate(g, known, known.gather(col));
    }
  }
  return out;
}

int run_denoise(const DenoiseArgs& a) {
  check_flags(a);
  gsd::detail::Stopwatch clock;
  const auto in = gsd::io::read_matrix_file(a.input);
  const gsd::Graph g = make_graph(a, in);
  const auto cols = gsd::io::parse_column_range(a.columns, in.data.cols());
  const ZetaSource zeta(a.zeta, in);

  std::vector<ColumnOutcome> results(cols.size());
  gsd::experiments::detail::parallel_for(cols.size(), a.threads, [&](std::size_t i) {
    results[i] = denoise_column(a, g, in.data.col(cols[i]), cols[i], zeta);
  });

  Eigen::MatrixXd out = in.data;
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(cols[i]) = results[i].signal;
  if (a.output == "-") {
    gsd::io::write_matrix(std::cout, in, out);
    std::cout.flush();
  } else {
    gsd::io::write_matrix_file(a.output, in, out);
  }

  std::ostringstream summary;
  summary << a.model << ": " << cols.size() << " column(s) on " << g.num_vertices() << " vertices / " << g.num_edges() << " edges";
  bool any_tau = false;
  for (const auto& r : results) any_tau = any_tau || r.tau_hat.has_value();
  if (any_tau) {
    summary << ", tau_hat=[";
    for (std::size_t i = 0; i < results.size(); ++i) {
      summary << (i ? " " : "") << (results[i].tau_hat ? gsd::io::format_double(*results[i].tau_hat) : "-");
    }
    summary << "]";
  }
  summary << ", iterations=[";
  for (std::size_t i = 0; i < results.size(); ++i) summary << (i ? " " : "") << results[i].iterations;
  summary << "], runtime " << gsd::io::format_double(std::round(clock.seconds() * 1e4) / 1e4) << " s";
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const auto& w : results[i].warnings) std::cerr << "warning (column " << cols[i] << "): " << w << "\n";
  }
  std::cerr << summary.str() << "\n";
  return kExitOk;
}

struct ExperimentArgs {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  bool no_timing = false;
};

int run_experiment_cmd(const ExperimentArgs& a) {
  gsd::detail::Stopwatch clock;
  const auto spec = gsd::experiments::load_spec(a.spec);
  const auto table = gsd::experiments::run_experiment(spec, {a.seed, a.threads, !a.no_timing});
  std::filesystem::create_directories(a.out);
  const auto dir = std::filesystem::path(a.out);
  auto write = [&](const char* name, auto&& fn) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw gsd::InvalidArgument("cannot write " + (dir / name).string());
    fn(f, table);
  };
  write("results.csv", gsd::experiments::write_table_csv);
  write("traces.csv", gsd::experiments::write_traces_csv);
  write("summary.csv", gsd::experiments::write_summary_csv);
  std::size_t errors = 0;
  for (const auto& r : table.rows) errors += r.metric.rfind("error", 0) == 0 ? 1 : 0;
  std::cerr << spec.name << ": " << table.rows.size() << " rows (" << errors << " failed cells), " << table.traces.size()
            << " trace points, runtime " << gsd::io::format_double(std::round(clock.seconds() * 1e3) / 1e3) << " s -> " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph signal denoising under Gaussian, uniform-scaling and dropout noise models."};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  DenoiseArgs d;
  d.threads = default_threads();
  auto* denoise = app.add_subcommand("denoise", "Denoise the columns of a data matrix");
  denoise->require_subcommand(1);
  denoise->add_option("--graph", d.graph, "grid HxW | knn K | edge-list FILE")->expected(2);
  denoise->add_option("--points", d.points, "Point coordinates for --graph knn (default: the input rows)")->check(CLI::ExistingFile);
  denoise->add_option("--input", d.input, "Input matrix (delimited text or PGM image)")->required();
  denoise->add_option("--output", d.output, "Output path, '-' for stdout")->capture_default_str();
  denoise->add_option("--columns", d.columns, "Columns to denoise, e.g. 0,2-4 (0-based)")->capture_default_str();
  auto* tau = denoise->add_option("--tau", d.tau, "Smoothing / sparsity parameter");
  auto* est = denoise->add_flag("--estimate-tau", d.estimate_tau, "Estimate tau per column by the method of moments");
  tau->excludes(est);
  denoise->add_option("--kappa", d.kappa, "Prior precision");
  denoise->add_option("--p", d.p, "Dropout probability in (0,1)");
  denoise->add_option("--mode", d.mode, "Sparse penalty: l1 or l0");
  denoise->add_option("--zeta", d.zeta, "Suspicion set: 'zeros' or a 0/1 mask file")->capture_default_str();
  denoise->add_option("--seed", d.seed, "Seed for the optional initial jitter");
  denoise->add_option("--jitter", d.jitter, "Relative jitter of the uniform-model initial point");
  denoise->add_option("--max-outer", d.max_outer, "Outer iteration cap for the uniform model")->capture_default_str();
  denoise->add_option("--threads", d.threads, "Worker threads (default: $GSD_THREADS or 1)")->check(CLI::PositiveNumber);
  for (const char* m : {"gaussian", "uniform", "bernoulli", "no-trust", "interpolate"}) {
    auto* sub = denoise->add_subcommand(m, std::string("Denoise with the ") + m + " model");
    sub->fallthrough();
    sub->callback([&d, m] { d.model = m; });
  }

  ExperimentArgs e;
  e.threads = default_threads();
  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec and write CSV tables");
  experiment->add_option("--spec", e.spec, "Experiment spec (YAML)")->required();
  experiment->add_option("--out", e.out, "Output directory")->required();
  experiment->add_option("--seed", e.seed, "Root seed")->capture_default_str();
  experiment->add_option("--threads", e.threads, "Worker threads (default: $GSD_THREADS or 1)")->check(CLI::PositiveNumber);
  experiment->add_flag("--no-timing", e.no_timing, "Write zero runtimes so output is byte-stable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*denoise) {
      d.has_tau = denoise->count("--tau") > 0;
      d.has_kappa = denoise->count("--kappa") > 0;
      d.has_p = denoise->count("--p") > 0;
      d.has_mode = denoise->count("--mode") > 0;
      d.has_zeta = denoise->count("--zeta") > 0;
      return run_denoise(d);
    }
    return run_experiment_cmd(e);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return kExitInput;
  } catch (const gsd::InvalidArgument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  } catch (const gsd::NumericalFailure& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
