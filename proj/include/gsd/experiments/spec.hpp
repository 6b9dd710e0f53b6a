#pragma once

// Experiment description files (YAML). See README for the schema.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "gsd/errors.hpp"
#include "gsd/experiments/clusters.hpp"
#include "gsd/experiments/noise.hpp"

namespace gsd::experiments {

/// Malformed or inconsistent spec; the message starts with "origin:line:".
class SpecError : public InvalidArgument {
 public:
  SpecError(const std::string& origin, int line, const std::string& msg)
      : InvalidArgument(origin + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct GraphSource {
  enum class Kind { grid, clusters, knn_file, edge_list };
  Kind kind = Kind::grid;
  Index height = 32;
  Index width = 32;
  ClusterOptions clusters{};
  Index k = 10;
  std::string path;
};

struct SignalSource {
  enum class Kind { prior, cluster_low, cluster_high, file };
  Kind kind = Kind::prior;
  double kappa = 1.0;
  /// Vertex-domain mean of prior draws.
  double mean = 0.0;
  /// Shift each draw so its minimum is `floor` (prior signals only).
  bool nonnegative = false;
  double floor = 0.0;
  std::string path;
  std::string columns = "all";
};

struct NoiseSweep {
  std::string kind = "gaussian";
  std::vector<double> levels{0.0};
  double fill = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  NoiseKind at(double level) const {
    if (kind == "gaussian") return noise::Gaussian{level};
    if (kind == "uniform") return noise::UniformScale{};
    if (kind == "bernoulli") return noise::BernoulliDropout{level, fill};
    if (kind == "salt-pepper") return noise::SaltPepper{level, lo, hi};
    return noise::Gaussian{0.0};  // "none"
  }
};

struct MethodSpec {
  std::string name;
  /// Parameter name -> candidate values, in file order.
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid;
  int line = 0;

  /// Cartesian product of the grid as JSON objects.
  std::vector<nlohmann::json> expand() const {
    std::vector<nlohmann::json> out{nlohmann::json::object()};
    for (const auto& [key, values] : grid) {
      std::vector<nlohmann::json> next;
      for (const auto& base : out) {
        for (const auto& v : values) {
          auto p = base;
          p[key] = v;
          next.push_back(std::move(p));
        }
      }
      out = std::move(next);
    }
    return out;
  }
};

struct BenchmarkOptions {
  double kappa = 1.0;
  int max_outer = 100;
  int pg_max_iter = 1000;
  double step = 1.0;
};

struct ExperimentSpec {
  std::string name = "experiment";
  /// "sweep" or "ccp-vs-pg".
  std::string type = "sweep";
  int repeats = 1;
  GraphSource graph;
  SignalSource signal;
  NoiseSweep noise;
  std::vector<MethodSpec> methods;
  std::vector<std::string> metrics{"relative_error"};
  BenchmarkOptions benchmark;
};

/// Parameters each method accepts.
inline const std::map<std::string, std::set<std::string>>& known_methods() {
  static const std::map<std::string, std::set<std::string>> m{
      {"noisy", {}},
      {"gaussian", {"tau"}},
      {"uniform-ccp", {"kappa", "max_outer", "tol"}},
      {"projected-gradient", {"kappa", "step", "max_iter", "tol"}},
      {"bernoulli", {"p", "kappa", "tau", "mode", "zeta"}},
      {"no-trust", {"tau", "mode"}},
      {"interpolate", {"zeta"}},
      {"local-average", {"t"}},
      {"magic", {"t"}},
      {"band-low", {"k", "fraction"}},
      {"band-high", {"k", "fraction"}},
      {"nuclear-norm", {"tau"}},
  };
  return m;
}

inline const std::set<std::string>& known_metrics() {
  static const std::set<std::string> m{"relative_error", "correlation"};
  return m;
}

namespace detail {

class SpecReader {
 public:
  explicit SpecReader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw SpecError(origin_, n.IsDefined() ? n.Mark().line + 1 : 0, msg);
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, const std::set<std::string>& keys, const std::string& what) const {
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <class T>
  T get(const YAML::Node& parent, const std::string& key, T fallback) const {
    const YAML::Node n = parent[key];
    if (!n) return fallback;
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value for '" + key + "'");
    }
  }

  nlohmann::json scalar(const YAML::Node& n) const {
    if (!n.IsScalar()) fail(n, "parameter values must be scalars");
    const std::string s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted
    if (s == "true") return true;
    if (s == "false") return false;
    long long i = 0;
    if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), i); ec == std::errc() && p == s.data() + s.size()) return i;
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d); ec == std::errc() && p == s.data() + s.size()) return d;
    return s;
  }

  GraphSource graph(const YAML::Node& n) const {
    GraphSource g;
    require_map(n, "graph");
    const auto kind = get<std::string>(n, "kind", "grid");
    if (kind == "grid") {
      allow_keys(n, {"kind", "height", "width"}, "graph");
      g.kind = GraphSource::Kind::grid;
      g.height = get<Index>(n, "height", 32);
      g.width = get<Index>(n, "width", 32);
    } else if (kind == "clusters") {
      allow_keys(n, {"kind", "C", "m", "spread", "separation", "dims", "k"}, "graph");
      g.kind = GraphSource::Kind::clusters;
      g.clusters.clusters = get<int>(n, "C", 5);
      g.clusters.per_cluster = get<int>(n, "m", 200);
      g.clusters.spread = get<double>(n, "spread", 1.0);
      g.clusters.separation = get<double>(n, "separation", 3.5);
      g.clusters.dims = get<int>(n, "dims", 2);
      g.k = get<Index>(n, "k", 10);
    } else if (kind == "knn-file") {
      allow_keys(n, {"kind", "path", "k"}, "graph");
      g.kind = GraphSource::Kind::knn_file;
      g.path = get<std::string>(n, "path", "");
      g.k = get<Index>(n, "k", 10);
      if (g.path.empty()) fail(n, "knn-file graph needs 'path'");
    } else if (kind == "edge-list") {
      allow_keys(n, {"kind", "path"}, "graph");
      g.kind = GraphSource::Kind::edge_list;
      g.path = get<std::string>(n, "path", "");
      if (g.path.empty()) fail(n, "edge-list graph needs 'path'");
    } else {
      fail(n["kind"], "unknown graph kind '" + kind + "'");
    }
    return g;
  }

  SignalSource signal(const YAML::Node& n) const {
    SignalSource s;
    require_map(n, "signal");
    allow_keys(n, {"kind", "kappa", "mean", "nonnegative", "floor", "path", "columns"}, "signal");
    const auto kind = get<std::string>(n, "kind", "prior");
    if (kind == "prior") {
      s.kind = SignalSource::Kind::prior;
    } else if (kind == "cluster-low") {
      s.kind = SignalSource::Kind::cluster_low;
    } else if (kind == "cluster-high") {
      s.kind = SignalSource::Kind::cluster_high;
    } else if (kind == "file") {
      s.kind = SignalSource::Kind::file;
    } else {
      fail(n["kind"], "unknown signal kind '" + kind + "'");
    }
    s.kappa = get<double>(n, "kappa", 1.0);
    if (!(s.kappa > 0.0)) fail(n["kappa"], "kappa must be positive");
    s.mean = get<double>(n, "mean", 0.0);
    s.nonnegative = get<bool>(n, "nonnegative", false);
    s.floor = get<double>(n, "floor", 0.0);
    s.path = get<std::string>(n, "path", "");
    s.columns = get<std::string>(n, "columns", "all");
    if (s.kind == SignalSource::Kind::file && s.path.empty()) fail(n, "file signal needs 'path'");
    return s;
  }

  NoiseSweep noise(const YAML::Node& n) const {
    NoiseSweep s;
    require_map(n, "noise");
    allow_keys(n, {"kind", "levels", "fill", "lo", "hi"}, "noise");
    s.kind = get<std::string>(n, "kind", "gaussian");
    if (s.kind != "gaussian" && s.kind != "uniform" && s.kind != "bernoulli" && s.kind != "salt-pepper" && s.kind != "none") {
      fail(n["kind"], "unknown noise kind '" + s.kind + "'");
    }
    if (const auto lv = n["levels"]) {
      s.levels.clear();
      if (lv.IsSequence()) {
        for (const auto& x : lv) s.levels.push_back(scalar_double(x));
      } else {
        s.levels.push_back(scalar_double(lv));
      }
      if (s.levels.empty()) fail(lv, "noise levels must be nonempty");
    }
    if (s.kind == "uniform" || s.kind == "none") s.levels = {s.kind == "uniform" ? 1.0 : 0.0};
    s.fill = get<double>(n, "fill", 0.0);
    s.lo = get<double>(n, "lo", 0.0);
    s.hi = get<double>(n, "hi", 1.0);
    for (double l : s.levels) {
      try {
        validate(s.at(l));
      } catch (const InvalidArgument& e) {
        fail(n["levels"], e.what());
      }
    }
    return s;
  }

  double scalar_double(const YAML::Node& n) const {
    const auto j = scalar(n);
    if (!j.is_number()) fail(n, "expected a number");
    return j.get<double>();
  }

  MethodSpec method(const YAML::Node& n) const {
    MethodSpec m;
    m.line = n.Mark().line + 1;
    if (n.IsScalar()) {
      m.name = n.Scalar();
    } else {
      require_map(n, "method");
      allow_keys(n, {"name", "params"}, "method");
      m.name = get<std::string>(n, "name", "");
    }
    const auto& known = known_methods();
    const auto it = known.find(m.name);
    if (it == known.end()) fail(n, "unknown method '" + m.name + "'");
    if (n.IsMap()) {
      if (const auto params = n["params"]) {
        require_map(params, "params");
        for (const auto& kv : params) {
          const auto key = kv.first.as<std::string>();
          if (!it->second.count(key)) fail(kv.first, "method '" + m.name + "' has no parameter '" + key + "'");
          std::vector<nlohmann::json> values;
          if (kv.second.IsSequence()) {
            for (const auto& v : kv.second) values.push_back(scalar(v));
          } else {
            values.push_back(scalar(kv.second));
          }
          if (values.empty()) fail(kv.second, "parameter grid for '" + key + "' is empty");
          m.grid.emplace_back(key, std::move(values));
        }
      }
    }
    return m;
  }

  ExperimentSpec spec(const YAML::Node& root) const {
    ExperimentSpec s;
    if (root.IsNull()) fail(root, "empty spec");
    require_map(root, "spec");
    allow_keys(root, {"name", "type", "repeats", "graph", "signal", "noise", "methods", "metrics", "benchmark"}, "spec");
    s.name = get<std::string>(root, "name", "experiment");
    s.type = get<std::string>(root, "type", "sweep");
    if (s.type != "sweep" && s.type != "ccp-vs-pg") fail(root["type"], "unknown experiment type '" + s.type + "'");
    s.repeats = get<int>(root, "repeats", 1);
    if (s.repeats < 1) fail(root["repeats"], "repeats must be >= 1");
    if (root["graph"]) s.graph = graph(root["graph"]);
    if (root["signal"]) s.signal = signal(root["signal"]);
    if (root["noise"]) s.noise = noise(root["noise"]);
    if (const auto ms = root["methods"]) {
      if (!ms.IsSequence() && !ms.IsNull()) fail(ms, "methods must be a list");
      if (ms.IsSequence()) {
        for (const auto& m : ms) s.methods.push_back(method(m));
      }
    }
    if (const auto mt = root["metrics"]) {
      if (!mt.IsSequence()) fail(mt, "metrics must be a list");
      s.metrics.clear();
      for (const auto& m : mt) {
        const auto name = m.as<std::string>();
        if (!known_metrics().count(name)) fail(m, "unknown metric '" + name + "'");
        s.metrics.push_back(name);
      }
    }
    if (const auto b = root["benchmark"]) {
      require_map(b, "benchmark");
      allow_keys(b, {"kappa", "max_outer", "pg_max_iter", "step"}, "benchmark");
      s.benchmark.kappa = get<double>(b, "kappa", 1.0);
      s.benchmark.max_outer = get<int>(b, "max_outer", 100);
      s.benchmark.pg_max_iter = get<int>(b, "pg_max_iter", 1000);
      s.benchmark.step = get<double>(b, "step", 1.0);
    }
    const bool cluster_signal = s.signal.kind == SignalSource::Kind::cluster_low || s.signal.kind == SignalSource::Kind::cluster_high;
    if (cluster_signal && s.graph.kind != GraphSource::Kind::clusters) {
      fail(root["signal"], "cluster signals need a 'clusters' graph");
    }
    return s;
  }

 private:
  std::string origin_;
};

}  // namespace detail

inline ExperimentSpec parse_spec(const std::string& text, const std::string& origin = "spec") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SpecError(origin, e.mark.line + 1, e.msg);
  }
  return detail::SpecReader(origin).spec(root);
}

/// Reads a spec file; relative data paths are resolved against the spec's directory.
inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentSpec s = parse_spec(ss.str(), path);
  const auto base = std::filesystem::path(path).parent_path();
  auto fix = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  fix(s.graph.path);
  fix(s.signal.path);
  return s;
}

}  // namespace gsd::experiments
