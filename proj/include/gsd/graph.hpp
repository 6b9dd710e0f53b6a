#pragma once

// Weighted undirected graphs in CSR form and the matrix-free operators
// (Laplacian, adjacency, incidence) that every denoiser is built on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gsd/errors.hpp"

namespace gsd {

using Index = Eigen::Index;
/// A real value per vertex.
using Signal = Eigen::VectorXd;
/// A real value per edge, in the graph's edge order.
using EdgeVector = Eigen::VectorXd;

struct Edge {
  Index a = 0;
  Index b = 0;
  double w = 1.0;
};

namespace detail {

inline void require_length(const Eigen::Ref<const Eigen::VectorXd>& v, Index expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream os;
    os << what << ": expected length " << expected << ", got " << v.size();
    throw InvalidArgument(os.str());
  }
}

}  // namespace detail

/// Sorted, duplicate-free subset of the vertex ids [0, n).
class VertexSet {
 public:
  VertexSet() = default;

  static VertexSet from_ids(std::vector<Index> ids, Index universe) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (!ids.empty() && (ids.front() < 0 || ids.back() >= universe)) {
      throw InvalidArgument("vertex id out of range [0, " + std::to_string(universe) + ")");
    }
    VertexSet s;
    s.universe_ = universe;
    s.members_ = std::move(ids);
    return s;
  }

  static VertexSet all(Index universe) {
    std::vector<Index> ids(static_cast<std::size_t>(universe));
    std::iota(ids.begin(), ids.end(), Index{0});
    return from_ids(std::move(ids), universe);
  }

  static VertexSet none(Index universe) { return from_ids({}, universe); }

  template <class Pred>
  static VertexSet where(Index universe, Pred&& pred) {
    std::vector<Index> ids;
    for (Index a = 0; a < universe; ++a) {
      if (pred(a)) ids.push_back(a);
    }
    return from_ids(std::move(ids), universe);
  }

  Index universe() const noexcept { return universe_; }
  Index size() const noexcept { return static_cast<Index>(members_.size()); }
  bool empty() const noexcept { return members_.empty(); }
  std::span<const Index> members() const& noexcept { return members_; }
  // Temporaries hand over their storage so range-for over f().members() is safe.
  std::vector<Index> members() && noexcept { return std::move(members_); }
  Index operator[](Index i) const { return members_[static_cast<std::size_t>(i)]; }

  bool contains(Index a) const { return std::binary_search(members_.begin(), members_.end(), a); }

  VertexSet complement() const {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(universe_ - size()));
    std::size_t j = 0;
    for (Index a = 0; a < universe_; ++a) {
      if (j < members_.size() && members_[j] == a) {
        ++j;
      } else {
        out.push_back(a);
      }
    }
    return from_ids(std::move(out), universe_);
  }

  /// position[a] = index of a inside the set, or -1.
  std::vector<Index> positions() const {
    std::vector<Index> pos(static_cast<std::size_t>(universe_), -1);
    for (std::size_t i = 0; i < members_.size(); ++i) pos[static_cast<std::size_t>(members_[i])] = static_cast<Index>(i);
    return pos;
  }

  /// Gathers x(S) from a full-length signal.
  Eigen::VectorXd gather(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    detail::require_length(x, universe_, "VertexSet::gather");
    Eigen::VectorXd out(size());
    for (Index i = 0; i < size(); ++i) out(i) = x((*this)[i]);
    return out;
  }

  friend bool operator==(const VertexSet& l, const VertexSet& r) {
    return l.universe_ == r.universe_ && l.members_ == r.members_;
  }

 private:
  Index universe_ = 0;
  std::vector<Index> members_;
};

/**
 * Immutable weighted, connected, undirected graph.
 *
 * Edges are stored once with a < b, sorted lexicographically; that order
 * defines the rows of the incidence operator. Adjacency is kept in CSR form
 * with every undirected edge appearing in both endpoint rows.
 */
class Graph {
 public:
  /// Validates and builds. Edge endpoints may be given in either order.
  static Graph from_edges(Index n, std::vector<Edge> edges) {
    if (n < 1) throw InvalidArgument("graph needs at least one vertex");
    for (auto& e : edges) {
      if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) {
        throw InvalidArgument("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) + ") out of range");
      }
      if (e.a == e.b) throw InvalidArgument("self-loop at vertex " + std::to_string(e.a));
      if (!(e.w > 0.0) || !std::isfinite(e.w)) {
        throw InvalidArgument("edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                              ") has non-positive or non-finite weight");
      }
      if (e.a > e.b) std::swap(e.a, e.b);
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& l, const Edge& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; });
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i].a == edges[i - 1].a && edges[i].b == edges[i - 1].b) {
        throw InvalidArgument("duplicate edge (" + std::to_string(edges[i].a) + "," + std::to_string(edges[i].b) + ")");
      }
    }

    Graph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.build_csr();
    g.require_connected();
    return g;
  }

  Index num_vertices() const noexcept { return n_; }
  Index num_edges() const noexcept { return static_cast<Index>(edges_.size()); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  double degree(Index a) const { return degrees_(a); }
  const Eigen::VectorXd& degrees() const noexcept { return degrees_; }

  std::span<const Index> neighbors(Index a) const { return row(col_, a); }
  std::span<const double> neighbor_weights(Index a) const { return row(wt_, a); }
  /// Edge id of each CSR entry in row a (parallel to neighbors(a)).
  std::span<const Index> incident_edges(Index a) const { return row(edge_id_, a); }

  double sqrt_weight(Index e) const { return sqrt_w_[static_cast<std::size_t>(e)]; }

 private:
  template <class T>
  std::span<const T> row(const std::vector<T>& v, Index a) const {
    const auto lo = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(a)]);
    const auto hi = static_cast<std::size_t>(row_ptr_[static_cast<std::size_t>(a) + 1]);
    return std::span<const T>(v.data() + lo, hi - lo);
  }

  void build_csr() {
    const auto n = static_cast<std::size_t>(n_);
    std::vector<Index> count(n + 1, 0);
    for (const auto& e : edges_) {
      ++count[static_cast<std::size_t>(e.a) + 1];
      ++count[static_cast<std::size_t>(e.b) + 1];
    }
    row_ptr_.assign(n + 1, 0);
    for (std::size_t a = 0; a < n; ++a) row_ptr_[a + 1] = row_ptr_[a] + count[a + 1];
    const auto nnz = static_cast<std::size_t>(row_ptr_[n]);
    col_.resize(nnz);
    wt_.resize(nnz);
    edge_id_.resize(nnz);
    sqrt_w_.resize(edges_.size());
    std::vector<Index> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    degrees_ = Eigen::VectorXd::Zero(n_);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      sqrt_w_[e] = std::sqrt(ed.w);
      auto put = [&](Index from, Index to) {
        const auto slot = static_cast<std::size_t>(fill[static_cast<std::size_t>(from)]++);
        col_[slot] = to;
        wt_[slot] = ed.w;
        edge_id_[slot] = static_cast<Index>(e);
      };
      put(ed.a, ed.b);
      put(ed.b, ed.a);
      degrees_(ed.a) += ed.w;
      degrees_(ed.b) += ed.w;
    }
    // CSR rows sorted by neighbor id; edges_ order already makes this true
    // for the a-side, the b-side needs a sort.
    for (std::size_t a = 0; a < n; ++a) {
      const auto lo = static_cast<std::size_t>(row_ptr_[a]);
      const auto hi = static_cast<std::size_t>(row_ptr_[a + 1]);
      std::vector<std::size_t> perm(hi - lo);
      std::iota(perm.begin(), perm.end(), lo);
      std::sort(perm.begin(), perm.end(), [&](std::size_t l, std::size_t r) { return col_[l] < col_[r]; });
      std::vector<Index> c(perm.size()), id(perm.size());
      std::vector<double> w(perm.size());
      for (std::size_t i = 0; i < perm.size(); ++i) {
        c[i] = col_[perm[i]];
        w[i] = wt_[perm[i]];
        id[i] = edge_id_[perm[i]];
      }
      std::copy(c.begin(), c.end(), col_.begin() + static_cast<std::ptrdiff_t>(lo));
      std::copy(w.begin(), w.end(), wt_.begin() + static_cast<std::ptrdiff_t>(lo));
      std::copy(id.begin(), id.end(), edge_id_.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }

  void require_connected() const;

  Index n_ = 0;
  std::vector<Edge> edges_;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_;
  std::vector<double> wt_;
  std::vector<Index> edge_id_;
  std::vector<double> sqrt_w_;
  Eigen::VectorXd degrees_;
};

/// Component label per vertex of the subgraph induced by `keep` (label -1 outside it).
/// Returns the number of components.
inline int component_labels(const Graph& g, std::span<const char> keep, std::vector<int>& label) {
  const Index n = g.num_vertices();
  label.assign(static_cast<std::size_t>(n), -1);
  int next = 0;
  std::queue<Index> q;
  for (Index s = 0; s < n; ++s) {
    if (!keep[static_cast<std::size_t>(s)] || label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    q.push(s);
    while (!q.empty()) {
      const Index a = q.front();
      q.pop();
      for (Index b : g.neighbors(a)) {
        auto& lb = label[static_cast<std::size_t>(b)];
        if (keep[static_cast<std::size_t>(b)] && lb < 0) {
          lb = next;
          q.push(b);
        }
      }
    }
    ++next;
  }
  return next;
}

inline void Graph::require_connected() const {
  std::vector<char> keep(static_cast<std::size_t>(n_), 1);
  std::vector<int> label;
  const int k = component_labels(*this, keep, label);
  if (k <= 1) return;
  std::vector<Index> size(static_cast<std::size_t>(k), 0), rep(static_cast<std::size_t>(k), -1);
  for (Index a = 0; a < n_; ++a) {
    const auto c = static_cast<std::size_t>(label[static_cast<std::size_t>(a)]);
    if (rep[c] < 0) rep[c] = a;
    ++size[c];
  }
  std::ostringstream os;
  os << "graph is disconnected: " << k << " components";
  const int shown = std::min(k, 8);
  for (int c = 0; c < shown; ++c) {
    os << (c == 0 ? " [" : ", ") << "#" << c << ": " << size[static_cast<std::size_t>(c)]
       << " vertices containing " << rep[static_cast<std::size_t>(c)];
  }
  if (k > shown) os << ", ...";
  os << "]";
  throw GraphDisconnected(os.str(), k);
}

/// 4-neighbour grid with unit weights; vertex id = row * width + col.
inline Graph build_grid_graph(Index height, Index width) {
  if (height < 1 || width < 1) throw InvalidArgument("grid dimensions must be positive");
  if (height * width < 2) throw InvalidArgument("grid must have at least two vertices");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(height * (width - 1) + width * (height - 1)));
  for (Index r = 0; r < height; ++r) {
    for (Index c = 0; c < width; ++c) {
      const Index v = r * width + c;
      if (c + 1 < width) edges.push_back({v, v + 1, 1.0});
      if (r + 1 < height) edges.push_back({v, v + width, 1.0});
    }
  }
  return Graph::from_edges(height * width, std::move(edges));
}

/**
 * Symmetrised k-nearest-neighbour graph with an adaptive Gaussian kernel.
 *
 * w(a,b) = exp(-d(a,b)^2 / (sigma_a sigma_b)), sigma_a = distance from a to its
 * k-th neighbour, and the directed weights are averaged: W <- (W + W^T) / 2.
 * Rows of `points` are the vertices. Distance ties are broken by index.
 */
inline Graph build_knn_graph(const Eigen::Ref<const Eigen::MatrixXd>& points, Index k) {
  const Index n = points.rows();
  if (k < 1) throw InvalidArgument("k must be positive");
  if (k >= n) throw InvalidArgument("k must be smaller than the number of points");

  std::vector<std::vector<std::pair<Index, double>>> nbrs(static_cast<std::size_t>(n));
  Eigen::VectorXd sigma(n);
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n - 1));
  for (Index a = 0; a < n; ++a) {
    std::size_t j = 0;
    for (Index b = 0; b < n; ++b) {
      if (b == a) continue;
      dist[j++] = {(points.row(a) - points.row(b)).squaredNorm(), b};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    auto& out = nbrs[static_cast<std::size_t>(a)];
    out.reserve(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) out.emplace_back(dist[static_cast<std::size_t>(i)].second, dist[static_cast<std::size_t>(i)].first);
    sigma(a) = std::sqrt(dist[static_cast<std::size_t>(k - 1)].first);
  }

  // Directed weights, then (W + W^T) / 2 keyed by the ordered pair.
  std::vector<std::pair<std::pair<Index, Index>, double>> half;
  half.reserve(static_cast<std::size_t>(n * k));
  for (Index a = 0; a < n; ++a) {
    for (const auto& [b, d2] : nbrs[static_cast<std::size_t>(a)]) {
      const double scale = sigma(a) * sigma(b);
      double w = (d2 == 0.0) ? 1.0 : (scale > 0.0 ? std::exp(-d2 / scale) : 0.0);
      w = std::max(w, std::numeric_limits<double>::min());
      half.push_back({{std::min(a, b), std::max(a, b)}, 0.5 * w});
    }
  }
  std::sort(half.begin(), half.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < half.size();) {
    double w = 0.0;
    std::size_t j = i;
    for (; j < half.size() && half[j].first == half[i].first; ++j) w += half[j].second;
    edges.push_back({half[i].first.first, half[i].first.second, w});
    i = j;
  }
  return Graph::from_edges(n, std::move(edges));
}

/// L f = D f - A f, O(m).
inline Signal laplacian_apply(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  detail::require_length(f, g.num_vertices(), "laplacian_apply");
  Signal y(g.num_vertices());
  for (Index a = 0; a < g.num_vertices(); ++a) {
    double acc = g.degree(a) * f(a);
    const auto nb = g.neighbors(a);
    const auto wt = g.neighbor_weights(a);
    for (std::size_t i = 0; i < nb.size(); ++i) acc -= wt[i] * f(nb[i]);
    y(a) = acc;
  }
  return y;
}

/// A f, O(m).
inline Signal adjacency_apply(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  detail::require_length(f, g.num_vertices(), "adjacency_apply");
  Signal y(g.num_vertices());
  for (Index a = 0; a < g.num_vertices(); ++a) {
    double acc = 0.0;
    const auto nb = g.neighbors(a);
    const auto wt = g.neighbor_weights(a);
    for (std::size_t i = 0; i < nb.size(); ++i) acc += wt[i] * f(nb[i]);
    y(a) = acc;
  }
  return y;
}

/// (B f)(e) = sqrt(w_e) (f(a) - f(b)) for edge e = (a, b), a < b.
inline EdgeVector incidence_apply(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  detail::require_length(f, g.num_vertices(), "incidence_apply");
  const auto edges = g.edges();
  EdgeVector y(g.num_edges());
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto& ed = edges[static_cast<std::size_t>(e)];
    y(e) = g.sqrt_weight(e) * (f(ed.a) - f(ed.b));
  }
  return y;
}

inline Signal incidence_transpose_apply(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& y) {
  detail::require_length(y, g.num_edges(), "incidence_transpose_apply");
  const auto edges = g.edges();
  Signal f = Signal::Zero(g.num_vertices());
  for (Index e = 0; e < g.num_edges(); ++e) {
    const auto& ed = edges[static_cast<std::size_t>(e)];
    const double v = g.sqrt_weight(e) * y(e);
    f(ed.a) += v;
    f(ed.b) -= v;
  }
  return f;
}

/// f^T L f = sum over edges of w (f(a) - f(b))^2.
inline double dirichlet_energy(const Graph& g, const Eigen::Ref<const Eigen::VectorXd>& f) {
  detail::require_length(f, g.num_vertices(), "dirichlet_energy");
  double s = 0.0;
  for (const auto& e : g.edges()) {
    const double d = f(e.a) - f(e.b);
    s += e.w * d * d;
  }
  return s;
}

/// tr(L) = total degree.
inline double trace_L(const Graph& g) { return g.degrees().sum(); }

/// tr(L^2) = sum_a deg(a)^2 + sum_a sum_{b ~ a} w(a,b)^2.
inline double trace_L2(const Graph& g) {
  double s = g.degrees().squaredNorm();
  for (const auto& e : g.edges()) s += 2.0 * e.w * e.w;
  return s;
}

/// Members of S with at least one edge leaving S.
inline VertexSet boundary(const Graph& g, const VertexSet& s) {
  if (s.universe() != g.num_vertices()) throw InvalidArgument("boundary: vertex set universe does not match graph");
  std::vector<char> in(static_cast<std::size_t>(g.num_vertices()), 0);
  for (Index a : s.members()) in[static_cast<std::size_t>(a)] = 1;
  std::vector<Index> out;
  for (Index a : s.members()) {
    for (Index b : g.neighbors(a)) {
      if (!in[static_cast<std::size_t>(b)]) {
        out.push_back(a);
        break;
      }
    }
  }
  return VertexSet::from_ids(std::move(out), g.num_vertices());
}

enum class Block { laplacian, adjacency };

/// Matrix-free block M(rows, cols) of L or A.
class RestrictedOperator {
 public:
  RestrictedOperator(const Graph& g, Block block, VertexSet rows, VertexSet cols)
      : g_(&g), block_(block), rows_(std::move(rows)), cols_(std::move(cols)), col_pos_(cols_.positions()) {
    if (rows_.universe() != g.num_vertices() || cols_.universe() != g.num_vertices()) {
      throw InvalidArgument("restrict: vertex set universe does not match graph");
    }
  }

  Index rows() const noexcept { return rows_.size(); }
  Index cols() const noexcept { return cols_.size(); }
  const VertexSet& row_set() const noexcept { return rows_; }
  const VertexSet& col_set() const noexcept { return cols_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    detail::require_length(x, cols(), "RestrictedOperator::apply");
    const double off = block_ == Block::laplacian ? -1.0 : 1.0;
    Eigen::VectorXd y(rows());
    for (Index i = 0; i < rows(); ++i) {
      const Index a = rows_[i];
      double acc = 0.0;
      if (block_ == Block::laplacian) {
        const Index p = col_pos_[static_cast<std::size_t>(a)];
        if (p >= 0) acc += g_->degree(a) * x(p);
      }
      const auto nb = g_->neighbors(a);
      const auto wt = g_->neighbor_weights(a);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const Index p = col_pos_[static_cast<std::size_t>(nb[k])];
        if (p >= 0) acc += off * wt[k] * x(p);
      }
      y(i) = acc;
    }
    return y;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cols());
    for (Index j = 0; j < cols(); ++j) {
      e(j) = 1.0;
      m.col(j) = apply(e);
      e(j) = 0.0;
    }
    return m;
  }

 private:
  const Graph* g_;
  Block block_;
  VertexSet rows_;
  VertexSet cols_;
  std::vector<Index> col_pos_;
};

inline RestrictedOperator restrict(const Graph& g, Block block, const VertexSet& rows, const VertexSet& cols) {
  return RestrictedOperator(g, block, rows, cols);
}

/**
 * Column block B(:, S) of the incidence operator, m x |S|.
 *
 * Column j belongs to vertex a = S[j] and holds +sqrt(w) on edges where a is
 * the smaller endpoint and -sqrt(w) where it is the larger one.
 */
class IncidenceColumns {
 public:
  IncidenceColumns(const Graph& g, VertexSet cols) : g_(&g), cols_(std::move(cols)) {
    if (cols_.universe() != g.num_vertices()) throw InvalidArgument("incidence_columns: universe mismatch");
  }

  Index rows() const noexcept { return g_->num_edges(); }
  Index cols() const noexcept { return cols_.size(); }
  const VertexSet& col_set() const noexcept { return cols_; }
  const Graph& graph() const noexcept { return *g_; }

  double column_norm2(Index j) const { return g_->degree(cols_[j]); }

  /// Calls fn(edge_id, value) for each nonzero of column j.
  template <class Fn>
  void for_each_in_column(Index j, Fn&& fn) const {
    const Index a = cols_[j];
    const auto nb = g_->neighbors(a);
    const auto ids = g_->incident_edges(a);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      const double s = g_->sqrt_weight(ids[k]);
      fn(ids[k], a < nb[k] ? s : -s);
    }
  }

  EdgeVector apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    detail::require_length(x, cols(), "IncidenceColumns::apply");
    EdgeVector y = EdgeVector::Zero(rows());
    for (Index j = 0; j < cols(); ++j) {
      if (x(j) == 0.0) continue;
      const double xj = x(j);
      for_each_in_column(j, [&](Index e, double v) { y(e) += v * xj; });
    }
    return y;
  }

  Eigen::VectorXd transpose_apply(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    detail::require_length(y, rows(), "IncidenceColumns::transpose_apply");
    Eigen::VectorXd x(cols());
    for (Index j = 0; j < cols(); ++j) {
      double acc = 0.0;
      for_each_in_column(j, [&](Index e, double v) { acc += v * y(e); });
      x(j) = acc;
    }
    return x;
  }

 private:
  const Graph* g_;
  VertexSet cols_;
};

inline IncidenceColumns incidence_columns(const Graph& g, const VertexSet& cols) { return IncidenceColumns(g, cols); }

}  // namespace gsd
