#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gsd/errors.hpp"
#include "gsd/graph.hpp"
#include "gsd/io/matrix_file.hpp"

namespace gsd::io {

/// Reads "a b [w]" lines (0-indexed, '#' comments, w defaults to 1).
/// The vertex count is `n` if given, else one more than the largest id.
inline Graph read_edge_list(const std::string& path, std::optional<Index> n = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open edge list: " + path);
  std::vector<Edge> edges;
  Index max_id = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream is(line);
    std::vector<std::string> tok;
    for (std::string t; is >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 2 || tok.size() > 3) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected 'a b [w]'");
    }
    double a = 0, b = 0, w = 1.0;
    if (!parse_double(tok[0], a) || !parse_double(tok[1], b) || (tok.size() == 3 && !parse_double(tok[2], w)) ||
        a != std::floor(a) || b != std::floor(b) || a < 0 || b < 0) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": malformed edge");
    }
    edges.push_back({static_cast<Index>(a), static_cast<Index>(b), w});
    max_id = std::max({max_id, static_cast<Index>(a), static_cast<Index>(b)});
  }
  const Index count = n.value_or(max_id + 1);
  if (max_id >= count) {
    throw InvalidArgument(path + ": vertex id " + std::to_string(max_id) + " exceeds the " + std::to_string(count) + " data rows");
  }
  return Graph::from_edges(count, std::move(edges));
}

/// Reads a whitespace or comma separated point matrix (rows are points).
inline Eigen::MatrixXd read_points(const std::string& path) { return read_matrix_file(path).data; }

}  // namespace gsd::io
