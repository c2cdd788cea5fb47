#pragma once

// Finite weighted directed graphs with complex weights: parsing, structural
// set verification, vertex depths and branch enumeration.

#include <algorithm>
#include <complex>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace isored {

using cplx = std::complex<double>;

struct parse_error : std::runtime_error {
  int line;
  parse_error(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg),
        line(line_) {}
};

// Violated precondition or evaluation outside the theory's domain
// (non-structural S, lambda in Sigma, invalid parameters).
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-convergence, budget exhaustion, solver breakdown.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Directed graph on vertices 1..n with complex weights. Zero weights are
// never stored; weight(i, j) is 0 for any pair without a stored edge.
class WeightedGraph {
 public:
  struct Edge {
    int to;
    cplx w;
    bool operator==(const Edge&) const = default;
  };

  explicit WeightedGraph(int n) : n_(n), rows_(static_cast<size_t>(n) + 1) {
    if (n < 1) throw domain_error("vertex count must be >= 1");
  }

  int size() const { return n_; }

  cplx weight(int i, int j) const {
    check_vertex(i);
    check_vertex(j);
    const auto& row = rows_[static_cast<size_t>(i)];
    auto it = find_in_row(row, j);
    return it != row.end() && it->to == j ? it->w : cplx(0.0);
  }

  // Setting a weight to 0 removes the edge.
  void set_weight(int i, int j, cplx w) {
    check_vertex(i);
    check_vertex(j);
    auto& row = rows_[static_cast<size_t>(i)];
    auto it = find_in_row(row, j);
    bool present = it != row.end() && it->to == j;
    if (w == cplx(0.0)) {
      if (present) row.erase(it);
    } else if (present) {
      it->w = w;
    } else {
      row.insert(it, Edge{j, w});
    }
  }

  bool has_edge(int i, int j) const { return weight(i, j) != cplx(0.0); }

  // Out-edges of i in ascending target order.
  const std::vector<Edge>& row(int i) const {
    check_vertex(i);
    return rows_[static_cast<size_t>(i)];
  }

  std::vector<int> out_neighbors(int i) const {
    std::vector<int> out;
    for (const Edge& e : row(i)) out.push_back(e.to);
    return out;
  }

  std::size_t edge_count() const {
    std::size_t c = 0;
    for (int i = 1; i <= n_; ++i) c += rows_[static_cast<size_t>(i)].size();
    return c;
  }

  // (i, j, w) triples, lexicographic in (i, j).
  std::vector<std::tuple<int, int, cplx>> edges() const {
    std::vector<std::tuple<int, int, cplx>> out;
    for (int i = 1; i <= n_; ++i)
      for (const Edge& e : rows_[static_cast<size_t>(i)])
        out.emplace_back(i, e.to, e.w);
    return out;
  }

  bool operator==(const WeightedGraph& other) const {
    return n_ == other.n_ && rows_ == other.rows_;
  }

 private:
  static std::vector<Edge>::const_iterator find_in_row(
      const std::vector<Edge>& row, int j) {
    return std::lower_bound(row.begin(), row.end(), j,
                            [](const Edge& e, int v) { return e.to < v; });
  }
  static std::vector<Edge>::iterator find_in_row(std::vector<Edge>& row,
                                                 int j) {
    return std::lower_bound(row.begin(), row.end(), j,
                            [](const Edge& e, int v) { return e.to < v; });
  }

  void check_vertex(int v) const {
    if (v < 1 || v > n_)
      throw domain_error("vertex " + std::to_string(v) + " out of [1, " +
                         std::to_string(n_) + "]");
  }

  int n_;
  std::vector<std::vector<Edge>> rows_;
};

// Simple path (i0, ..., ip), p >= 1: consecutive weights nonzero,
// i0..i_{p-1} pairwise distinct, interior vertices i1..i_{p-1} outside S.
struct Branch {
  std::vector<int> vertices;
};

// Validates a vertex set: nonempty, in range, returned sorted and unique.
inline std::vector<int> canonical_set(const WeightedGraph& g,
                                      std::vector<int> s) {
  if (s.empty()) throw domain_error("vertex set must be nonempty");
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  if (s.front() < 1 || s.back() > g.size())
    throw domain_error("vertex set contains an index out of [1, " +
                       std::to_string(g.size()) + "]");
  return s;
}

inline bool set_contains(const std::vector<int>& sorted, int v) {
  return std::binary_search(sorted.begin(), sorted.end(), v);
}

struct StructuralVerdict {
  bool structural = false;
  // When not structural: a non-loop cycle inside V \ S, closed form
  // (front == back), first one found by DFS in ascending vertex order.
  std::vector<int> witness_cycle;
};

// S is structural iff every non-loop cycle meets S; equivalently the
// subgraph induced on V \ S with loops removed is acyclic.
inline StructuralVerdict is_structural_set(const WeightedGraph& g,
                                           const std::vector<int>& s_in) {
  std::vector<int> s = canonical_set(g, s_in);
  const int n = g.size();
  // 0 = unvisited, 1 = on stack, 2 = done; only interior vertices explored.
  std::vector<int> color(static_cast<size_t>(n) + 1, 0);
  std::vector<int> path;

  // Recursive DFS over the loop-stripped interior; returns true once a
  // cycle is found, with `path` holding the closed witness.
  auto dfs = [&](auto&& self, int v) -> bool {
    color[static_cast<size_t>(v)] = 1;
    path.push_back(v);
    for (const auto& e : g.row(v)) {
      int t = e.to;
      if (t == v || set_contains(s, t)) continue;
      if (color[static_cast<size_t>(t)] == 1) {
        auto it = std::find(path.begin(), path.end(), t);
        path.erase(path.begin(), it);
        path.push_back(t);
        return true;
      }
      if (color[static_cast<size_t>(t)] == 0 && self(self, t)) return true;
    }
    path.pop_back();
    color[static_cast<size_t>(v)] = 2;
    return false;
  };

  for (int v = 1; v <= n; ++v) {
    if (set_contains(s, v) || color[static_cast<size_t>(v)] != 0) continue;
    if (dfs(dfs, v)) return StructuralVerdict{false, path};
  }
  return StructuralVerdict{true, {}};
}

// Depth 0 exactly on S; an interior vertex's depth is one more than the
// largest depth among its out-neighbors (loops excluded). Finite for every
// vertex when S is structural.
struct DepthAssignment {
  std::vector<int> s;       // sorted
  std::vector<int> depth;   // index v in 1..n; entry 0 unused
  std::vector<cplx> sigma;  // distinct interior diagonal values w(i,i), i not in S
  int max_depth = 0;

  // Vertices of depth <= m, ascending (the set S_m).
  std::vector<int> s_n(int m) const {
    std::vector<int> out;
    for (int v = 1; v < static_cast<int>(depth.size()); ++v)
      if (depth[static_cast<size_t>(v)] <= m) out.push_back(v);
    return out;
  }
};

inline std::vector<cplx> sigma_values(const WeightedGraph& g,
                                      const std::vector<int>& s_sorted) {
  std::vector<cplx> sigma;
  for (int v = 1; v <= g.size(); ++v) {
    if (set_contains(s_sorted, v)) continue;
    cplx d = g.weight(v, v);
    if (std::find(sigma.begin(), sigma.end(), d) == sigma.end())
      sigma.push_back(d);
  }
  return sigma;
}

inline DepthAssignment compute_depths(const WeightedGraph& g,
                                      const std::vector<int>& s_in) {
  std::vector<int> s = canonical_set(g, s_in);
  const int n = g.size();
  DepthAssignment da;
  da.s = s;
  da.depth.assign(static_cast<size_t>(n) + 1, -1);
  for (int v : s) da.depth[static_cast<size_t>(v)] = 0;

  // Worklist relaxation; loops are skipped, so the interior is a DAG when
  // S is structural and every vertex settles within n rounds.
  std::vector<int> interior;
  for (int v = 1; v <= n; ++v)
    if (!set_contains(s, v)) interior.push_back(v);

  for (int round = 0; round < n; ++round) {
    bool changed = false;
    for (int v : interior) {
      if (da.depth[static_cast<size_t>(v)] >= 0) continue;
      int deepest = 0;
      bool ready = true;
      for (const auto& e : g.row(v)) {
        if (e.to == v) continue;
        int dj = da.depth[static_cast<size_t>(e.to)];
        if (dj < 0) {
          ready = false;
          break;
        }
        deepest = std::max(deepest, dj);
      }
      if (ready) {
        da.depth[static_cast<size_t>(v)] = deepest + 1;
        da.max_depth = std::max(da.max_depth, deepest + 1);
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (int v : interior)
    if (da.depth[static_cast<size_t>(v)] < 0)
      throw domain_error("vertex " + std::to_string(v) +
                         " never stabilizes: S is not structural");
  da.sigma = sigma_values(g, s);
  return da;
}

// All branches from i to j: simple paths whose interior vertices lie in
// V \ S, in lexicographic order on the vertex sequence.
inline std::vector<Branch> enumerate_branches(const WeightedGraph& g,
                                              const std::vector<int>& s_in,
                                              int i, int j) {
  std::vector<int> s = canonical_set(g, s_in);
  auto verdict = is_structural_set(g, s);
  if (!verdict.structural)
    throw domain_error("S is not structural: interior cycle found");

  std::vector<Branch> out;
  std::vector<int> path{i};
  std::vector<char> on_path(static_cast<size_t>(g.size()) + 1, 0);
  on_path[static_cast<size_t>(i)] = 1;

  auto dfs = [&](auto&& self, int v) -> void {
    for (const auto& e : g.row(v)) {
      int t = e.to;
      if (t == j) {
        Branch b;
        b.vertices = path;
        b.vertices.push_back(j);
        out.push_back(std::move(b));
      }
      // Interior continuation is independent of the endpoint test above.
      if (!set_contains(s, t) && !on_path[static_cast<size_t>(t)]) {
        on_path[static_cast<size_t>(t)] = 1;
        path.push_back(t);
        self(self, t);
        path.pop_back();
        on_path[static_cast<size_t>(t)] = 0;
      }
    }
  };
  dfs(dfs, i);
  return out;
}

// --- graph file format ----------------------------------------------------
//
//   # comment
//   n <count>
//   S <v1> <v2> ...
//   e <i> <j> <re> [<im>]
//
// Exactly one `n` line and one `S` line; `n` precedes every `e`.

struct ParsedGraph {
  WeightedGraph graph;
  std::vector<int> structural_set;
};

inline ParsedGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  int n = -1;
  bool seen_s = false;
  int s_line = 0;
  std::vector<int> s_raw;
  std::vector<std::tuple<int, int, cplx, int>> edges;  // (i, j, w, line)
  std::set<std::pair<int, int>> declared;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;  // blank line
    if (tag[0] == '#') continue;
    if (tag == "n") {
      if (n >= 0) throw parse_error(lineno, "duplicate n line");
      if (!(ls >> n) || n < 1) throw parse_error(lineno, "malformed n line");
    } else if (tag == "S") {
      if (seen_s) throw parse_error(lineno, "duplicate S line");
      seen_s = true;
      s_line = lineno;
      int v;
      while (ls >> v) s_raw.push_back(v);
      if (!ls.eof()) throw parse_error(lineno, "malformed S line");
      if (s_raw.empty()) throw parse_error(lineno, "empty S line");
    } else if (tag == "e") {
      if (n < 0) throw parse_error(lineno, "e line before n line");
      int i, j;
      double re, im = 0.0;
      if (!(ls >> i >> j >> re)) throw parse_error(lineno, "malformed e line");
      if (!(ls >> im)) {
        if (!ls.eof()) throw parse_error(lineno, "malformed e line");
        ls.clear();
      }
      std::string extra;
      if (ls >> extra) throw parse_error(lineno, "trailing tokens on e line");
      if (i < 1 || i > n || j < 1 || j > n)
        throw parse_error(lineno, "vertex index out of [1, " +
                                      std::to_string(n) + "]");
      if (!declared.insert({i, j}).second)
        throw parse_error(lineno, "duplicate edge declaration (" +
                                      std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
      edges.emplace_back(i, j, cplx(re, im), lineno);
    } else {
      throw parse_error(lineno, "unknown directive '" + tag + "'");
    }
  }
  if (n < 0) throw parse_error(lineno, "missing n line");
  if (!seen_s) throw parse_error(lineno, "missing S line");

  WeightedGraph g(n);
  for (auto& [i, j, w, ln] : edges) {
    if (w != cplx(0.0)) g.set_weight(i, j, w);
  }
  for (int v : s_raw)
    if (v < 1 || v > n)
      throw parse_error(s_line, "S vertex " + std::to_string(v) +
                                    " out of [1, " + std::to_string(n) + "]");
  std::vector<int> s = canonical_set(g, s_raw);
  return ParsedGraph{std::move(g), std::move(s)};
}

// Inverse of parse_graph on the sparse weight map; weights are written
// with enough digits to round-trip exactly.
inline std::string serialize_graph(const WeightedGraph& g,
                                   const std::vector<int>& s) {
  std::string out = "n " + std::to_string(g.size()) + "\nS";
  for (int v : s) out += " " + std::to_string(v);
  out += "\n";
  char buf[128];
  for (auto& [i, j, w] : g.edges()) {
    if (w.imag() == 0.0)
      std::snprintf(buf, sizeof buf, "e %d %d %.17g\n", i, j, w.real());
    else
      std::snprintf(buf, sizeof buf, "e %d %d %.17g %.17g\n", i, j, w.real(),
                    w.imag());
    out += buf;
  }
  return out;
}

}  // namespace isored
