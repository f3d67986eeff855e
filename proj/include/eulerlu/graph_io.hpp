#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "eulerlu/laplacian.hpp"

namespace eulerlu {

// Text formats:
//   edge list      "u v w" per line, 0-indexed, '#' starts a comment, the
//                  weight column defaults to 1.
//   Matrix Market  "%%MatrixMarket matrix coordinate real general", holding
//                  the Laplacian entries themselves (1-indexed).

struct EdgeListData {
  Index n = 0;
  std::vector<Edge> edges;
};

inline EdgeListData read_edge_list(std::istream& in, Index n_hint = 0) {
  EdgeListData data;
  std::string line;
  std::size_t lineno = 0;
  Index max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# n ", 0) == 0) {
      // header written by write_edge_list; keeps trailing isolated vertices
      std::istringstream hs(line.substr(4));
      long long hinted = 0;
      if (hs >> hinted && hinted > n_hint) n_hint = hinted;
    }
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    long long u = 0, v = 0;
    if (!(ss >> u)) continue;  // blank or comment-only line
    if (!(ss >> v)) {
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected 'u v [w]'");
    }
    double w = 1.0;
    if (!(ss >> w)) {
      if (!ss.eof()) {
        fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": bad weight");
      }
      w = 1.0;
    }
    std::string rest;
    if (ss >> rest) {
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": trailing token '" + rest + "'");
    }
    if (u < 0 || v < 0) {
      fail(ErrorKind::IndexOutOfRange, "line " + std::to_string(lineno) + ": negative vertex index");
    }
    data.edges.push_back({u, v, w});
    max_index = std::max<Index>(max_index, std::max<Index>(u, v));
  }
  data.n = std::max<Index>(n_hint, max_index + 1);
  return data;
}

inline void write_edge_list(std::ostream& out, const DirectedLaplacian& lap) {
  out << "# n " << lap.size() << " edges " << lap.edge_count() << "\n";
  out << std::setprecision(17);
  for (const Edge& e : lap.edges()) out << e.src << ' ' << e.dst << ' ' << e.weight << '\n';
}

inline DirectedLaplacian read_matrix_market(std::istream& in, double rel_tol = 1e-9) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    fail(ErrorKind::ParseError, "missing %%MatrixMarket banner");
  }
  {
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (object != "matrix" || format != "coordinate" || (field != "real" && field != "integer") ||
        symmetry != "general") {
      fail(ErrorKind::ParseError, "only 'matrix coordinate real general' is supported");
    }
  }
  do {
    if (!std::getline(in, line)) fail(ErrorKind::ParseError, "missing size line");
  } while (line.empty() || line[0] == '%');
  long long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows != cols || rows < 0 || nnz < 0) {
      fail(ErrorKind::ParseError, "bad size line '" + line + "'");
    }
  }
  const Index n = rows;
  std::vector<Edge> edges;
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (long long k = 0; k < nnz; ++k) {
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) fail(ErrorKind::ParseError, "truncated entry list");
    if (i < 1 || j < 1 || i > n || j > n) fail(ErrorKind::IndexOutOfRange, "matrix market entry");
    if (i == j) {
      diag[static_cast<std::size_t>(i - 1)] += v;
    } else {
      if (v > 0.0) fail(ErrorKind::NegativeWeight, "positive off-diagonal entry");
      // L(i, j) = -w(j -> i)
      edges.push_back({j - 1, i - 1, -v});
    }
  }
  DirectedLaplacian lap = DirectedLaplacian::from_edges(n, edges);
  const double scale = std::max(1.0, lap.max_diag());
  for (Index i = 0; i < n; ++i) {
    if (std::abs(lap.diag(i) - diag[static_cast<std::size_t>(i)]) > rel_tol * scale) {
      fail(ErrorKind::ParseError,
           "diagonal entry " + std::to_string(i + 1) + " does not match the column sum");
    }
  }
  return lap;
}

inline void write_matrix_market(std::ostream& out, const DirectedLaplacian& lap) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << lap.size() << ' ' << lap.size() << ' ' << lap.nnz() << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < lap.size(); ++i) {
    if (lap.diag(i) != 0.0) out << i + 1 << ' ' << i + 1 << ' ' << lap.diag(i) << '\n';
    for (const Entry& e : lap.row(i)) out << i + 1 << ' ' << e.index + 1 << ' ' << e.value << '\n';
  }
}

/// Loads either format; Matrix Market is recognised by its banner.
inline DirectedLaplacian load_laplacian(const std::string& path, BuildStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ParseError, "cannot open '" + path + "'");
  if (in.peek() == '%') return read_matrix_market(in);
  EdgeListData data = read_edge_list(in);
  return DirectedLaplacian::from_edges(data.n, data.edges, stats);
}

}  // namespace eulerlu
