#pragma once

// Countable graphs given by weight oracles, probed through finite windows:
// taboo weights, type A / type B structural-set certificates, depth sets,
// series evaluation of the reduced operator on a finite S, and fixed-point
// reconstruction. Counting measure is hard-wired throughout.
//
// Nothing here ever truncates silently: every windowed result carries a
// truncation report, and certificates are finite-sample statements
// ("verified on window W up to order n_max"), never proofs.

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isored/graph.hpp"

namespace isored {

// Support listing for one row or column. `truncated` marks a declared-infinite
// support that was cut at the queried window; finite supports are returned in
// full, even past the window.
struct SupportQuery {
  std::vector<int> vertices;  // ascending
  bool truncated = false;
};

// Lazily evaluated weight oracle over vertices 1, 2, 3, ...
// Oracles must be safe for concurrent read access.
struct CountableGraph {
  std::function<cplx(int, int)> weight;
  std::function<SupportQuery(int, int)> row_support;  // (i, window)
  std::function<SupportQuery(int, int)> col_support;  // (j, window)
  double norm_bound = std::numeric_limits<double>::infinity();  // ||w||_{1,inf}
  std::vector<cplx> sigma_closure;  // declared limit points of diagonals
};

// Finite graph viewed as a CountableGraph; supports are exact and never
// truncated.
inline CountableGraph embed_finite(const WeightedGraph& g_in) {
  auto g = std::make_shared<WeightedGraph>(g_in);
  auto cols = std::make_shared<std::vector<std::vector<int>>>(
      static_cast<size_t>(g->size()) + 1);
  for (auto& [i, j, w] : g->edges()) (*cols)[static_cast<size_t>(j)].push_back(i);

  CountableGraph cg;
  cg.weight = [g](int i, int j) -> cplx {
    if (i < 1 || i > g->size() || j < 1 || j > g->size()) return 0.0;
    return g->weight(i, j);
  };
  cg.row_support = [g](int i, int) -> SupportQuery {
    if (i < 1 || i > g->size()) return {};
    return {g->out_neighbors(i), false};
  };
  cg.col_support = [g, cols](int j, int) -> SupportQuery {
    if (j < 1 || j > g->size()) return {};
    return {(*cols)[static_cast<size_t>(j)], false};
  };
  double nb = 0.0;
  for (int j = 1; j <= g->size(); ++j) {
    double col = 0.0;
    for (int i = 1; i <= g->size(); ++i) col += std::abs(g->weight(i, j));
    nb = std::max(nb, col);
  }
  cg.norm_bound = nb;
  return cg;
}

// Sampled consistency check of a weight oracle on the window box: supports
// must list every nonzero weight, and column masses must respect the
// declared (1,inf) bound. Returns human-readable findings, empty when clean.
inline std::vector<std::string> verify_oracle(const CountableGraph& g,
                                              int window) {
  std::vector<std::string> findings;
  for (int i = 1; i <= window; ++i) {
    SupportQuery row = g.row_support(i, window);
    for (int j = 1; j <= window; ++j) {
      if (g.weight(i, j) == cplx(0.0)) continue;
      bool in_row = std::find(row.vertices.begin(), row.vertices.end(), j) !=
                    row.vertices.end();
      if (!in_row)
        findings.push_back("w(" + std::to_string(i) + "," + std::to_string(j) +
                           ") != 0 but absent from row_support");
      SupportQuery col = g.col_support(j, window);
      bool in_col = std::find(col.vertices.begin(), col.vertices.end(), i) !=
                    col.vertices.end();
      if (!in_col)
        findings.push_back("w(" + std::to_string(i) + "," + std::to_string(j) +
                           ") != 0 but absent from col_support");
    }
  }
  if (std::isfinite(g.norm_bound)) {
    for (int j = 1; j <= window; ++j) {
      double mass = 0.0;
      for (int i : g.col_support(j, window).vertices)
        mass += std::abs(g.weight(i, j));
      if (mass > g.norm_bound + 1e-12)
        findings.push_back("column " + std::to_string(j) + " mass " +
                           std::to_string(mass) + " exceeds norm_bound");
    }
  }
  return findings;
}

struct TruncationReport {
  int terms_used = 0;
  double last_term_norm = 0.0;
  std::optional<double> tail_bound;
  int window = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  std::string to_text() const {
    char buf[96];
    std::string out;
    out += "terms_used: " + std::to_string(terms_used) + "\n";
    std::snprintf(buf, sizeof buf, "last_term_norm: %.15g\n", last_term_norm);
    out += buf;
    if (tail_bound) {
      std::snprintf(buf, sizeof buf, "tail_bound: %.15g\n", *tail_bound);
      out += buf;
    }
    out += "window: " + std::to_string(window) + "\n";
    for (const auto& w : warnings) out += "warning: " + w + "\n";
    return out;
  }
};

namespace detail {

// One interior step of the path front: multiply each mass by the outgoing
// weight and gather at interior successors within the window. Returns the
// number of expansions performed.
inline size_t advance_front(const CountableGraph& g,
                            const std::vector<int>& s,
                            const std::map<int, cplx>& front,
                            std::map<int, cplx>& next, int window) {
  size_t expansions = 0;
  for (const auto& [z, acc] : front) {
    SupportQuery sq = g.row_support(z, window);
    if (sq.truncated)
      throw domain_error("interior vertex " + std::to_string(z) +
                         " has declared-infinite row support");
    for (int t : sq.vertices) {
      ++expansions;
      if (t > window || set_contains(s, t)) continue;
      next[t] += acc * g.weight(z, t);
    }
  }
  return expansions;
}

}  // namespace detail

// S-taboo weight tau_{S,n}(x, {j}): total weight of length-n paths from x
// to j whose intermediate vertices all avoid S. Interior path vertices are
// restricted to [1..window].
inline cplx taboo_weight(const CountableGraph& g, const std::vector<int>& s,
                         int n, int x, int j, int window,
                         size_t node_budget = size_t(1) << 22) {
  if (n < 2) throw domain_error("taboo weight requires n >= 2");
  size_t spent = 0;
  std::map<int, cplx> front;
  {
    SupportQuery sq = g.row_support(x, window);
    for (int t : sq.vertices) {
      ++spent;
      if (t > window || set_contains(s, t)) continue;
      front[t] = g.weight(x, t);
    }
  }
  if (spent > node_budget)
    throw numeric_error("taboo path enumeration exceeded node budget");
  for (int step = 2; step <= n - 1; ++step) {
    std::map<int, cplx> next;
    spent += detail::advance_front(g, s, front, next, window);
    if (spent > node_budget)
      throw numeric_error("taboo path enumeration exceeded node budget");
    front = std::move(next);
    if (front.empty()) return 0.0;
  }
  cplx tau = 0.0;
  for (const auto& [z, acc] : front) tau += acc * g.weight(z, j);
  return tau;
}

// --- type B certificates ----------------------------------------------------

struct TypeBCertificate {
  std::vector<int> s;
  int window = 0;
  std::map<int, int> n_s;        // probed interior vertex -> escape order
  std::map<int, double> m_vals;  // probed interior vertex -> M(x)
  double weighted_sum = 0.0;     // sum of n_s(x) * M(x) + declared tail
  double declared_tail = 0.0;
  std::vector<int> inconclusive;  // orbit not resolved within the window
  std::vector<std::string> warnings;
};

struct TypeBViolation {
  int condition = 0;  // 1: orbit never vanishes, 2: |w(x,y)| > M(x)
  int witness = 0;
  int partner = 0;            // y for condition 2
  std::vector<int> orbit;     // offending interior cycle for condition 1
  std::string message;
};

using TypeBResult = std::variant<TypeBCertificate, TypeBViolation>;

// Finite-sample check of Definition "type B" on [1..window] with counting
// measure: (1) every interior phi-orbit vanishes, (2) |w(x,y)| <= M(x) on
// interior pairs, (3) the weighted escape sum, reported together with a
// caller-declared tail bound.
inline TypeBResult check_type_B(const CountableGraph& g,
                                const std::vector<int>& s,
                                const std::function<double(int)>& m,
                                int window, double declared_tail = 0.0) {
  TypeBCertificate cert;
  cert.s = s;
  cert.window = window;
  cert.declared_tail = declared_tail;

  // n_s via memoized DFS on phi(x) = row_support(x) \ S. -1 unknown,
  // -2 in progress, -3 inconclusive (escapes the window).
  std::map<int, int> state;
  std::optional<TypeBViolation> violation;

  auto interior_succ = [&](int x) -> std::vector<int> {
    SupportQuery sq = g.row_support(x, window);
    std::vector<int> out;
    for (int t : sq.vertices)
      if (!set_contains(s, t)) out.push_back(t);
    // A truncated row may have further interior successors past the window;
    // the sentinel forces "inconclusive".
    if (sq.truncated) out.push_back(window + 1);
    return out;
  };

  std::vector<int> stack_path;
  auto dfs = [&](auto&& self, int x) -> int {
    if (x > window) return -3;
    auto it = state.find(x);
    if (it != state.end()) {
      if (it->second == -2) {
        // Gray vertex: phi-orbit cycles, condition (1) fails.
        auto cyc_start = std::find(stack_path.begin(), stack_path.end(), x);
        TypeBViolation v;
        v.condition = 1;
        v.witness = x;
        v.orbit.assign(cyc_start, stack_path.end());
        v.orbit.push_back(x);
        v.message = "phi orbit of vertex " + std::to_string(x) +
                    " never vanishes (interior cycle)";
        violation = v;
        return -3;
      }
      return it->second;
    }
    state[x] = -2;
    stack_path.push_back(x);
    int worst = 0;  // max n_s over successors; 0 when empty
    bool unknown = false;
    for (int t : interior_succ(x)) {
      int r = self(self, t);
      if (violation) {
        stack_path.pop_back();
        return -3;
      }
      if (r == -3)
        unknown = true;
      else
        worst = std::max(worst, r);
    }
    stack_path.pop_back();
    int result = unknown ? -3 : worst + 1;
    state[x] = result;
    return result;
  };

  for (int x = 1; x <= window && !violation; ++x) {
    if (set_contains(s, x)) continue;
    dfs(dfs, x);
  }
  if (violation) return *violation;

  for (int x = 1; x <= window; ++x) {
    if (set_contains(s, x)) continue;
    double mx = m(x);
    // Condition (2) on singletons: counting measure reduces the bound
    // |w(x,B)| <= M(x) mu(B) to a per-entry check.
    SupportQuery sq = g.row_support(x, window);
    for (int t : sq.vertices) {
      if (set_contains(s, t)) continue;
      if (std::abs(g.weight(x, t)) > mx) {
        TypeBViolation v;
        v.condition = 2;
        v.witness = x;
        v.partner = t;
        v.message = "|w(" + std::to_string(x) + "," + std::to_string(t) +
                    ")| exceeds M(" + std::to_string(x) + ")";
        return v;
      }
    }
    int ns = state.count(x) ? state[x] : -3;
    if (ns == -3) {
      cert.inconclusive.push_back(x);
    } else {
      cert.n_s[x] = ns;
      cert.m_vals[x] = mx;
      cert.weighted_sum += ns * mx;
    }
  }
  cert.weighted_sum += declared_tail;
  if (!cert.inconclusive.empty())
    cert.warnings.push_back(
        std::to_string(cert.inconclusive.size()) +
        " interior vertices inconclusive within window " +
        std::to_string(window));
  return cert;
}

// --- type A certificates ----------------------------------------------------

struct TypeACertificate {
  std::vector<int> s;
  int window = 0;
  int n_max = 0;
  std::vector<double> t;      // t_n for n = 2..n_max
  std::vector<double> slope;  // (1/n) log t_n, same index range
  double max_ratio = 0.0;     // max |tau| / (t_n M(x,j)) observed
  std::vector<std::string> warnings;
};

struct TypeAViolation {
  int n = 0;
  int x = 0;
  int j = 0;
  double tau_abs = 0.0;
  double bound = 0.0;
  std::string message;
};

using TypeAResult = std::variant<TypeACertificate, TypeAViolation>;

// Finite-sample check of Definition "type A": |tau_{S,n}(x,{j})| <=
// t_n M(x,j) for all probed x <= window, reachable j and 2 <= n <= n_max.
// Interior path vertices may roam up to window + n_max.
inline TypeAResult check_type_A(const CountableGraph& g,
                                const std::vector<int>& s,
                                const std::function<double(int)>& t,
                                const std::function<double(int, int)>& m_bound,
                                int window, int n_max,
                                size_t node_budget = size_t(1) << 24) {
  TypeACertificate cert;
  cert.s = s;
  cert.window = window;
  cert.n_max = n_max;
  const int roam = window + n_max;
  size_t spent = 0;

  for (int x = 1; x <= window; ++x) {
    std::map<int, cplx> front;
    SupportQuery sq = g.row_support(x, roam);
    if (sq.truncated)
      cert.warnings.push_back("row support of " + std::to_string(x) +
                              " truncated at window " + std::to_string(roam));
    for (int u : sq.vertices) {
      ++spent;
      if (u > roam || set_contains(s, u)) continue;
      front[u] = g.weight(x, u);
    }
    for (int n = 2; n <= n_max; ++n) {
      // front holds z_{n-1}; one more kernel factor lands on j.
      std::map<int, cplx> tau;
      for (const auto& [z, acc] : front) {
        SupportQuery out = g.row_support(z, roam);
        if (out.truncated)
          throw domain_error("interior vertex " + std::to_string(z) +
                             " has declared-infinite row support");
        for (int j : out.vertices) tau[j] += acc * g.weight(z, j);
        spent += out.vertices.size();
      }
      if (spent > node_budget)
        throw numeric_error("type A probe exceeded node budget");
      const double tn = t(n);
      for (const auto& [j, tval] : tau) {
        double lhs = std::abs(tval);
        double rhs = tn * m_bound(x, j);
        if (lhs > rhs) {
          TypeAViolation v;
          v.n = n;
          v.x = x;
          v.j = j;
          v.tau_abs = lhs;
          v.bound = rhs;
          v.message = "taboo bound violated at (n=" + std::to_string(n) +
                      ", x=" + std::to_string(x) + ", j=" + std::to_string(j) +
                      ")";
          return v;
        }
        if (rhs > 0) cert.max_ratio = std::max(cert.max_ratio, lhs / rhs);
      }
      // Advance z_{n-1} -> z_n for the next order.
      if (n < n_max) {
        std::map<int, cplx> next;
        spent += detail::advance_front(g, s, front, next, roam);
        front = std::move(next);
        if (front.empty()) break;
      }
    }
  }
  for (int n = 2; n <= n_max; ++n) {
    cert.t.push_back(t(n));
    cert.slope.push_back(std::log(t(n)) / n);
  }
  bool tail_decreasing = true;
  for (size_t i = cert.slope.size() >= 3 ? cert.slope.size() - 3 : 0;
       i + 1 < cert.slope.size(); ++i)
    if (cert.slope[i + 1] >= cert.slope[i]) tail_decreasing = false;
  if (!tail_decreasing)
    cert.warnings.push_back(
        "slope diagnostic (1/n) log t_n is not decreasing at the end of the "
        "probed range");
  return cert;
}

// --- depth sets -------------------------------------------------------------

struct DepthSets {
  // levels[k] = S_k, ascending vertex lists, S_0 = S.
  std::vector<std::vector<int>> levels;
  std::vector<int> unknown;  // window vertices not absorbed by any S_k
};

// S_0 = S; S_n adds every window vertex whose whole row support (diagonal
// included, per |K|(x, V \ S_{n-1}) = 0) already lies in S_{n-1}. Stops when
// stable within the window.
inline DepthSets depth_sets(const CountableGraph& g, const std::vector<int>& s,
                            int window) {
  DepthSets out;
  std::vector<char> in_set(static_cast<size_t>(window) + 1, 0);
  std::vector<int> current;
  for (int v : s) {
    if (v <= window) in_set[static_cast<size_t>(v)] = 1;
    current.push_back(v);
  }
  out.levels.push_back(current);

  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<int> next = current;
    for (int x = 1; x <= window; ++x) {
      if (in_set[static_cast<size_t>(x)]) continue;
      SupportQuery sq = g.row_support(x, window);
      if (sq.truncated) continue;
      bool absorbed = true;
      for (int t : sq.vertices) {
        if (t > window || !in_set[static_cast<size_t>(t)]) {
          absorbed = false;
          break;
        }
      }
      if (absorbed) {
        next.push_back(x);
        grew = true;
      }
    }
    if (grew) {
      std::sort(next.begin(), next.end());
      for (int v : next)
        if (v <= window) in_set[static_cast<size_t>(v)] = 1;
      out.levels.push_back(next);
      current = std::move(next);
    }
  }
  for (int x = 1; x <= window; ++x)
    if (!in_set[static_cast<size_t>(x)]) out.unknown.push_back(x);
  return out;
}

// --- reduced operator series ------------------------------------------------

struct ReducedSeriesResult {
  std::vector<int> s;
  cplx lambda;
  Eigen::MatrixXcd entries;
  TruncationReport report;
};

// Observed interior diagonal values within the window, plus the declared
// closure points.
inline std::vector<cplx> sigma_d(const CountableGraph& g,
                                 const std::vector<int>& s, int window) {
  std::vector<cplx> out = g.sigma_closure;
  for (int z = 1; z <= window; ++z) {
    if (set_contains(s, z)) continue;
    cplx d = g.weight(z, z);
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
  }
  return out;
}

// Evaluates R_S(lambda) by the kernel series: entries(i,j) = w(i,j) +
// sum_{n>=2} K^(n)_{S,lambda}(i,{j}), where K^(n) sums over interior paths
// with a factor 1/(lambda - d(z)) per interior visit and d(z) = w(z,z).
// Interior diagonal steps are folded into the denominators, so the series
// terminates exactly on finite graphs with loop-bearing acyclic interiors.
// Truncates at the first term with max-abs entry < tol, or at n_max.
inline ReducedSeriesResult reduced_series(const CountableGraph& g,
                                          const std::vector<int>& s,
                                          cplx lambda, double tol, int n_max,
                                          int window) {
  const int k = static_cast<int>(s.size());
  ReducedSeriesResult res;
  res.s = s;
  res.lambda = lambda;
  res.report.window = window;
  res.entries = Eigen::MatrixXcd::Zero(k, k);

  std::vector<cplx> sig = sigma_d(g, s, window);
  double dist = std::numeric_limits<double>::infinity();
  for (cplx sv : sig) dist = std::min(dist, std::abs(lambda - sv));
  if (dist <= 1e-12) throw domain_error("lambda lies in Sigma_d");

  auto idx_in_s = [&](int v) -> int {
    auto it = std::lower_bound(s.begin(), s.end(), v);
    return it != s.end() && *it == v ? static_cast<int>(it - s.begin()) : -1;
  };
  auto denom = [&](int z) -> cplx {
    cplx d = lambda - g.weight(z, z);
    if (std::abs(d) <= 1e-12) throw domain_error("lambda lies in Sigma_d");
    return d;
  };

  bool support_clipped = false;
  // front[z] = column over source rows i of the accumulated path weight
  // from s[i] to interior z, denominators included up to z.
  std::map<int, Eigen::VectorXcd> front;
  for (int i = 0; i < k; ++i) {
    SupportQuery sq = g.row_support(s[static_cast<size_t>(i)], window);
    if (sq.truncated) support_clipped = true;
    for (int t : sq.vertices) {
      cplx w = g.weight(s[static_cast<size_t>(i)], t);
      int ts = idx_in_s(t);
      if (ts >= 0) {
        res.entries(i, ts) += w;  // n = 1 term
      } else if (t <= window) {
        auto [it, fresh] = front.try_emplace(t, Eigen::VectorXcd::Zero(k));
        it->second(i) += w / denom(t);
      } else {
        support_clipped = true;
      }
    }
  }

  res.report.terms_used = 1;
  res.report.last_term_norm =
      res.entries.size() > 0 ? res.entries.cwiseAbs().maxCoeff() : 0.0;
  double min_term = std::numeric_limits<double>::infinity();
  double first_interior_term = -1.0;

  const double mass_scale =
      std::isfinite(g.norm_bound) ? std::max(g.norm_bound, 1.0) : 1.0;
  for (int n = 2; n <= n_max; ++n) {
    Eigen::MatrixXcd term = Eigen::MatrixXcd::Zero(k, k);
    std::map<int, Eigen::VectorXcd> next;
    for (const auto& [z, col] : front) {
      SupportQuery sq = g.row_support(z, window);
      if (sq.truncated)
        throw domain_error("interior vertex " + std::to_string(z) +
                           " has declared-infinite row support");
      for (int t : sq.vertices) {
        cplx w = g.weight(z, t);
        int ts = idx_in_s(t);
        if (ts >= 0) {
          term.col(ts) += col * w;
        } else if (t == z) {
          continue;  // diagonal handled by the denominator at z
        } else if (t <= window) {
          auto [it, fresh] = next.try_emplace(t, Eigen::VectorXcd::Zero(k));
          it->second += col * (w / denom(t));
        } else {
          support_clipped = true;
        }
      }
    }
    res.entries += term;
    double tn = term.size() > 0 ? term.cwiseAbs().maxCoeff() : 0.0;
    res.report.terms_used = n;
    res.report.last_term_norm = tn;
    if (first_interior_term < 0) first_interior_term = tn;
    min_term = std::min(min_term, tn);
    // A small term alone does not end the series: mass still in flight can
    // land on S at a later order. Require the next landing's bound to be
    // negligible too.
    double in_flight = 0.0;
    for (const auto& [z, col] : next) in_flight += col.cwiseAbs().sum();
    if (tn < tol && in_flight * mass_scale < tol) {
      res.report.converged = true;
      res.report.tail_bound = in_flight * mass_scale;
      break;
    }
    front = std::move(next);
    if (front.empty()) {
      // All remaining terms vanish identically.
      res.report.terms_used = n + 1;
      res.report.last_term_norm = 0.0;
      res.report.converged = true;
      break;
    }
  }

  if (support_clipped)
    res.report.warnings.push_back("row support clipped at window " +
                                  std::to_string(window));
  if (!res.report.converged) {
    if (res.report.last_term_norm >= std::max(tol, 10 * min_term) &&
        res.report.last_term_norm >= first_interior_term)
      throw numeric_error(
          "series terms are not decaying (lambda too close to Sigma_d or "
          "certificate invalid)");
    res.report.warnings.push_back("did not converge within n_max = " +
                                  std::to_string(n_max));
  }
  return res;
}

// --- fixed-point reconstruction ----------------------------------------------

struct FixedPointResult {
  Eigen::VectorXcd u;  // values at vertices 1..window (index v-1)
  int iterations = 0;
  TruncationReport report;
};

// Solves u = (v_bar - D(lambda0) f) + D(lambda0) Q u by Neumann iteration on
// the window, where (D h)(z) = h(z) / (lambda0 - d(z)) off S and 0 on S, and
// Q applies the weight oracle with interior diagonals folded into D. With
// f = 0 this is the reconstruction operator Phi_S(lambda0). Stops when
// successive iterates differ by less than tol in l1; iteration budget is
// 10 * window.
inline FixedPointResult reconstruct_fixed_point(
    const CountableGraph& g, const std::vector<int>& s, cplx lambda0,
    const Eigen::VectorXcd& v, const Eigen::VectorXcd& f, int window,
    double tol) {
  const int k = static_cast<int>(s.size());
  if (v.size() != k) throw domain_error("v must have one entry per vertex of S");
  if (f.size() != 0 && f.size() != window)
    throw domain_error("f must be empty or have one entry per window vertex");

  FixedPointResult res;
  res.report.window = window;

  std::vector<char> in_s(static_cast<size_t>(window) + 1, 0);
  for (int sv : s) {
    if (sv > window)
      throw domain_error("window must contain the structural set");
    in_s[static_cast<size_t>(sv)] = 1;
  }

  Eigen::VectorXcd denom_inv(window);
  for (int z = 1; z <= window; ++z) {
    if (in_s[static_cast<size_t>(z)]) {
      denom_inv(z - 1) = 0.0;
      continue;
    }
    cplx d = lambda0 - g.weight(z, z);
    if (std::abs(d) <= 1e-12) throw domain_error("lambda0 lies in Sigma_d");
    denom_inv(z - 1) = 1.0 / d;
  }

  Eigen::VectorXcd base = Eigen::VectorXcd::Zero(window);
  for (int i = 0; i < k; ++i)
    if (s[static_cast<size_t>(i)] <= window)
      base(s[static_cast<size_t>(i)] - 1) = v(i);
  if (f.size() == window)
    for (int z = 1; z <= window; ++z)
      if (!in_s[static_cast<size_t>(z)])
        base(z - 1) -= f(z - 1) * denom_inv(z - 1);

  // Interior row supports, resolved once.
  std::vector<std::vector<std::pair<int, cplx>>> rows(
      static_cast<size_t>(window) + 1);
  bool clipped = false;
  for (int z = 1; z <= window; ++z) {
    if (in_s[static_cast<size_t>(z)]) continue;
    SupportQuery sq = g.row_support(z, window);
    if (sq.truncated)
      throw domain_error("interior vertex " + std::to_string(z) +
                         " has declared-infinite row support");
    for (int t : sq.vertices) {
      if (t == z) continue;  // diagonal lives in the denominator
      if (t > window) {
        clipped = true;
        continue;
      }
      rows[static_cast<size_t>(z)].emplace_back(t, g.weight(z, t));
    }
  }
  if (clipped)
    res.report.warnings.push_back(
        "interior row support clipped at window " + std::to_string(window) +
        "; out-of-window values treated as 0");

  Eigen::VectorXcd u = base;
  const int budget = 10 * window;
  for (int it = 1; it <= budget; ++it) {
    Eigen::VectorXcd nu = base;
    for (int z = 1; z <= window; ++z) {
      if (in_s[static_cast<size_t>(z)]) continue;
      cplx acc = 0.0;
      for (const auto& [t, w] : rows[static_cast<size_t>(z)])
        acc += w * u(t - 1);
      nu(z - 1) += acc * denom_inv(z - 1);
    }
    double delta = (nu - u).cwiseAbs().sum();
    u = std::move(nu);
    res.iterations = it;
    res.report.last_term_norm = delta;
    if (delta < tol) {
      res.report.converged = true;
      res.report.terms_used = it;
      res.u = std::move(u);
      return res;
    }
  }
  throw numeric_error("fixed-point iteration failed to contract within " +
                      std::to_string(budget) + " iterations");
}

// sup over columns j <= window of the column l1 gap between two weight
// oracles, rows ranging over the union of the column supports (capped at the
// window for declared-infinite columns).
inline double one_inf_norm_gap(const CountableGraph& g1,
                               const CountableGraph& g2, int window) {
  double best = 0.0;
  for (int j = 1; j <= window; ++j) {
    std::vector<int> rows;
    for (int i : g1.col_support(j, window).vertices) rows.push_back(i);
    for (int i : g2.col_support(j, window).vertices) rows.push_back(i);
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    double col = 0.0;
    for (int i : rows) col += std::abs(g1.weight(i, j) - g2.weight(i, j));
    best = std::max(best, col);
  }
  return best;
}

}  // namespace isored
