#pragma once

// Numeric matrix files: delimited text (optional header) and portable graymap
// images (P2/P5). Rows are observations (vertices), columns are signals.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>

#include "gsd/errors.hpp"

namespace gsd::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("failed to format number");
  return std::string(buf.data(), end);
}

inline bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

enum class MatrixFormat { text, pgm };

struct MatrixFile {
  Eigen::MatrixXd data;
  MatrixFormat format = MatrixFormat::text;
  /// Column names, empty when the file had no header.
  std::vector<std::string> header;
  /// 0 means whitespace-separated.
  char delimiter = ',';
  // Graymap metadata.
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int maxval = 255;
  bool binary = true;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line, std::size_t col, const std::string& msg) {
  std::ostringstream os;
  os << path << ":" << line;
  if (col > 0) os << ":" << col;
  os << ": " << msg;
  throw InvalidArgument(os.str());
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  if (delim == 0) {
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
  }
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline char detect_delimiter(const std::string& line) {
  for (char d : {',', '\t', ';'}) {
    if (line.find(d) != std::string::npos) return d;
  }
  return 0;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline MatrixFile read_text(const std::string& path, std::istream& in) {
  MatrixFile mf;
  mf.format = MatrixFormat::text;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (first) mf.delimiter = detect_delimiter(t);
    auto fields = split_fields(t, mf.delimiter);
    if (first) {
      first = false;
      ncols = fields.size();
      double dummy = 0.0;
      const bool numeric = std::all_of(fields.begin(), fields.end(), [&](const std::string& f) { return parse_double(f, dummy); });
      if (!numeric) {
        for (auto& f : fields) mf.header.push_back(trim(f));
        continue;
      }
    }
    if (fields.size() != ncols) {
      parse_fail(path, lineno, 0, "expected " + std::to_string(ncols) + " columns, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      if (!parse_double(fields[c], row[c])) parse_fail(path, lineno, c + 1, "not a number: '" + trim(fields[c]) + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, lineno, 0, "no numeric rows");
  mf.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < ncols; ++c) mf.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return mf;
}

inline long read_pgm_int(const std::string& path, std::istream& in) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  std::string digits;
  while (ch != EOF && std::isdigit(ch)) {
    digits.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (digits.empty()) parse_fail(path, 0, 0, "malformed graymap header or pixel data");
  return std::stol(digits);
}

inline MatrixFile read_pgm(const std::string& path, std::istream& in) {
  MatrixFile mf;
  mf.format = MatrixFormat::pgm;
  char magic[2];
  in.read(magic, 2);
  mf.binary = magic[1] == '5';
  mf.width = read_pgm_int(path, in);
  mf.height = read_pgm_int(path, in);
  mf.maxval = static_cast<int>(read_pgm_int(path, in));
  if (mf.width < 1 || mf.height < 1 || mf.maxval < 1 || mf.maxval > 65535) parse_fail(path, 0, 0, "invalid graymap dimensions");
  const Eigen::Index n = mf.width * mf.height;
  mf.data.resize(n, 1);
  if (mf.binary) {
    const int bytes = mf.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(static_cast<std::size_t>(n * bytes));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) parse_fail(path, 0, 0, "truncated graymap pixel data");
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i * bytes);
      mf.data(i, 0) = bytes == 1 ? buf[k] : (buf[k] << 8) | buf[k + 1];
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) mf.data(i, 0) = static_cast<double>(read_pgm_int(path, in));
  }
  return mf;
}

}  // namespace detail

inline MatrixFile read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open input file: " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  const bool pgm = in.gcount() == 2 && magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5');
  in.clear();
  in.seekg(0);
  return pgm ? detail::read_pgm(path, in) : detail::read_text(path, in);
}

/// Writes `data` in the same format as `like` (header, delimiter, graymap metadata).
inline void write_matrix(std::ostream& out, const MatrixFile& like, const Eigen::MatrixXd& data) {
  if (like.format == MatrixFormat::pgm) {
    if (data.size() != like.width * like.height) throw InvalidArgument("graymap output must keep the image size");
    out << (like.binary ? "P5" : "P2") << "\n" << like.width << " " << like.height << "\n" << like.maxval << "\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      const double v = data(i);
      const long px = std::lround(std::clamp(std::isfinite(v) ? v : 0.0, 0.0, static_cast<double>(like.maxval)));
      if (like.binary) {
        if (like.maxval < 256) {
          out.put(static_cast<char>(px));
        } else {
          out.put(static_cast<char>((px >> 8) & 0xff));
          out.put(static_cast<char>(px & 0xff));
        }
      } else {
        out << px << ((i + 1) % like.width == 0 ? "\n" : " ");
      }
    }
  } else {
    const std::string sep = like.delimiter == 0 ? std::string(" ") : std::string(1, like.delimiter);
    if (!like.header.empty()) {
      for (std::size_t c = 0; c < like.header.size(); ++c) out << (c ? sep : "") << like.header[c];
      out << "\n";
    }
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      for (Eigen::Index c = 0; c < data.cols(); ++c) out << (c ? sep : "") << format_double(data(r, c));
      out << "\n";
    }
  }
}

inline void write_matrix_file(const std::string& path, const MatrixFile& like, const Eigen::MatrixXd& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open output file: " + path);
  write_matrix(out, like, data);
  if (!out) throw Error("failed writing " + path);
}

/// Parses "all" or a comma list of 0-based indices and inclusive ranges, e.g. "0,2-4".
inline std::vector<Eigen::Index> parse_column_range(const std::string& spec, Eigen::Index ncols) {
  std::vector<Eigen::Index> cols;
  if (spec.empty() || spec == "all") {
    for (Eigen::Index c = 0; c < ncols; ++c) cols.push_back(c);
    return cols;
  }
  std::istringstream is(spec);
  std::string part;
  auto to_index = [&](const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v) || v < 0 || v != std::floor(v)) throw InvalidArgument("bad column range: '" + spec + "'");
    const auto i = static_cast<Eigen::Index>(v);
    if (i >= ncols) throw InvalidArgument("column " + std::to_string(i) + " out of range (file has " + std::to_string(ncols) + ")");
    return i;
  };
  while (std::getline(is, part, ',')) {
    part = detail::trim(part);
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      cols.push_back(to_index(part));
    } else {
      const auto lo = to_index(part.substr(0, dash));
      const auto hi = to_index(part.substr(dash + 1));
      if (hi < lo) throw InvalidArgument("bad column range: '" + spec + "'");
      for (auto c = lo; c <= hi; ++c) cols.push_back(c);
    }
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.empty()) throw InvalidArgument("empty column range");
  return cols;
}

}  // namespace gsd::io
