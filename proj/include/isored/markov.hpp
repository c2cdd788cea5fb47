#pragma once

// The family of infinite Markov chains on states 1, 2, 3, ... driven by
// probability sequences (a_i) and (b_i): transition oracles, truncations w_n,
// the 2x2 reduced matrix at lambda = 1, the closed-form stationary measure,
// and independent verification by power iteration and Monte Carlo.
//
// Transition convention: w(i, j) is the probability of moving from state j
// to state i, so columns sum to 1 and stationary measures solve W q = q.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "isored/infinite.hpp"

namespace isored {

// Parameter oracles with the analytic tail bound the truncation machinery
// needs: a_tail(N) bounds sum_{i >= N} a_i from above, and (C, rho) witness
// b_i < C rho^i.
struct FamilyParams {
  std::function<double(int)> a;
  std::function<double(int)> b;
  double C = 0.0;
  double rho = 0.0;
  std::function<double(int)> a_tail;
};

// a_i = (1 - alpha) alpha^{i-1}, b_i = beta rho^i. The reference test
// parameters are alpha = 0.5, beta = 0.5, rho = 0.6, C = 1.01.
inline FamilyParams geometric_family(double alpha, double beta, double rho,
                                     double C) {
  if (!(alpha > 0 && alpha < 1))
    throw domain_error("(B1) violated: alpha must lie in (0,1)");
  if (!(rho > 0 && rho < 1))
    throw domain_error("(B2) violated: rho must lie in (0,1)");
  if (!(C > 1)) throw domain_error("(B2) violated: C must exceed 1");
  if (!(beta > 0 && beta < C))
    throw domain_error("(B2) violated: need 0 < beta < C so b_i < C rho^i");
  if (!(beta * rho < 1))
    throw domain_error("(B1) violated: b_1 = beta rho must be < 1");
  FamilyParams p;
  p.a = [alpha](int i) { return (1 - alpha) * std::pow(alpha, i - 1); };
  p.b = [beta, rho](int i) { return beta * std::pow(rho, i); };
  p.C = C;
  p.rho = rho;
  p.a_tail = [alpha](int n) { return std::pow(alpha, n - 1); };
  return p;
}

// Probes (B1)-(B2) on indices 1..probe. Throws domain_error naming the
// violated condition.
inline void validate_params(const FamilyParams& p, int probe = 64) {
  if (!(p.C > 1)) throw domain_error("(B2) violated: C must exceed 1");
  if (!(p.rho > 0 && p.rho < 1))
    throw domain_error("(B2) violated: rho must lie in (0,1)");
  double asum = 0.0;
  for (int i = 1; i <= probe; ++i) {
    double ai = p.a(i), bi = p.b(i);
    if (!(ai > 0 && ai < 1))
      throw domain_error("(B1) violated: a_" + std::to_string(i) +
                         " outside (0,1)");
    if (!(bi > 0 && bi < 1))
      throw domain_error("(B1) violated: b_" + std::to_string(i) +
                         " outside (0,1)");
    if (!(bi < p.C * std::pow(p.rho, i)))
      throw domain_error("(B2) violated: b_" + std::to_string(i) +
                         " >= C rho^" + std::to_string(i));
    asum += ai;
  }
  double total = asum + p.a_tail(probe + 1);
  if (std::abs(total - 1.0) > 1e-9)
    throw domain_error("(B1) violated: sum a_i + tail = " +
                       std::to_string(total) + " != 1");
}

// Key = value parameter file: family (geometric), alpha, beta, rho, C.
inline FamilyParams parse_params(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string family;
  double alpha = -1, beta = -1, rho = -1, c = -1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key[0] == '#') continue;
    std::string eq;
    if (!(ls >> eq) || eq != "=")
      throw parse_error(lineno, "expected 'key = value'");
    if (key == "family") {
      if (!(ls >> family)) throw parse_error(lineno, "missing family name");
    } else {
      double val;
      if (!(ls >> val)) throw parse_error(lineno, "missing numeric value");
      if (key == "alpha")
        alpha = val;
      else if (key == "beta")
        beta = val;
      else if (key == "rho")
        rho = val;
      else if (key == "C")
        c = val;
      else
        throw parse_error(lineno, "unknown key '" + key + "'");
    }
  }
  if (family != "geometric")
    throw parse_error(lineno, "family must be 'geometric'");
  if (alpha < 0 || beta < 0 || rho < 0 || c < 0)
    throw parse_error(lineno, "missing one of alpha, beta, rho, C");
  return geometric_family(alpha, beta, rho, c);
}

// Transition probabilities of the full chain:
//   w(i,1) = a_i;  w(2,2) = 1 - b_1;  w(i-1,i) = b_{i-1} for i >= 2;
//   w(1,i) = 1 - b_{i-1} for i >= 3;  0 otherwise.
inline double family_weight(const FamilyParams& p, int i, int j) {
  if (i < 1 || j < 1) throw domain_error("states are 1-based");
  if (j == 1) return p.a(i);
  if (i == 2 && j == 2) return 1 - p.b(1);
  if (i == j - 1) return p.b(j - 1);
  if (i == 1 && j >= 3) return 1 - p.b(j - 1);
  return 0.0;
}

// Truncated chain w_n: identical within states <= n, except that the upward
// ladder stops at n and every state above n resets to 1 with probability 1.
inline double truncated_weight(const FamilyParams& p, int n, int i, int j) {
  if (n < 2) throw domain_error("truncation order must be >= 2");
  if (i < 1 || j < 1) throw domain_error("states are 1-based");
  if (j == 1) return p.a(i);
  if (i == 2 && j == 2) return 1 - p.b(1);
  if (i == j - 1 && j <= n) return p.b(j - 1);
  if (i == 1 && j >= 3 && j <= n) return 1 - p.b(j - 1);
  if (i == 1 && j > n) return 1.0;
  return 0.0;
}

inline CountableGraph family_graph(const FamilyParams& p) {
  CountableGraph g;
  g.weight = [p](int i, int j) -> cplx { return family_weight(p, i, j); };
  g.row_support = [](int i, int window) -> SupportQuery {
    if (i == 1) {
      // w(1,1), w(1,2) and w(1,j) for every j >= 3: declared infinite.
      SupportQuery sq{{1, 2}, true};
      for (int j = 3; j <= window; ++j) sq.vertices.push_back(j);
      return sq;
    }
    if (i == 2) return {{1, 2, 3}, false};
    return {{1, i + 1}, false};
  };
  g.col_support = [](int j, int window) -> SupportQuery {
    if (j == 1) {
      SupportQuery sq{{}, true};
      for (int i = 1; i <= window; ++i) sq.vertices.push_back(i);
      return sq;
    }
    if (j == 2) return {{1, 2}, false};
    return {{1, j - 1}, false};
  };
  g.norm_bound = 1.0;
  return g;
}

inline CountableGraph truncated_graph(const FamilyParams& p, int n) {
  if (n < 2) throw domain_error("truncation order must be >= 2");
  CountableGraph g;
  g.weight = [p, n](int i, int j) -> cplx {
    return truncated_weight(p, n, i, j);
  };
  g.row_support = [n](int i, int window) -> SupportQuery {
    if (i == 1) {
      SupportQuery sq{{1, 2}, true};
      for (int j = 3; j <= window; ++j) sq.vertices.push_back(j);
      return sq;
    }
    if (i == 2) return n >= 3 ? SupportQuery{{1, 2, 3}, false}
                              : SupportQuery{{1, 2}, false};
    if (i <= n - 1) return {{1, i + 1}, false};
    return {{1}, false};
  };
  g.col_support = [n](int j, int window) -> SupportQuery {
    if (j == 1) {
      SupportQuery sq{{}, true};
      for (int i = 1; i <= window; ++i) sq.vertices.push_back(i);
      return sq;
    }
    if (j == 2) return {{1, 2}, false};
    if (j <= n) return {{1, j - 1}, false};
    return {{1}, false};
  };
  g.norm_bound = 1.0;
  return g;
}

// --- reduced matrix and stationary measure -----------------------------------

struct Reduced2x2 {
  Eigen::Matrix2d m;  // [[1-s, b_1], [s, 1-b_1]]
  double s = 0.0;     // sum_l (prod_{k=1}^{l} b_{k+1}) a_{l+2}
  TruncationReport report;
};

// The 2x2 reduced matrix of the chain on S = {1, 2} at lambda = 1. The series
// for s stops once the running product of b's drops below tol; the tail is
// bounded by that product since sum a_i <= 1.
inline Reduced2x2 reduced_2x2(const FamilyParams& p, double tol) {
  Reduced2x2 out;
  double s = 0.0, prefix = 1.0;
  int l = 0;
  const int budget = 100000;
  for (; l < budget; ++l) {
    s += prefix * p.a(l + 2);
    prefix *= p.b(l + 2);
    if (prefix < tol) break;
  }
  if (l >= budget)
    throw numeric_error("b_i does not decay: tolerance unreachable");
  out.s = s;
  out.report.terms_used = l + 1;
  out.report.last_term_norm = prefix;
  out.report.tail_bound = prefix;
  out.report.converged = true;
  double b1 = p.b(1);
  out.m << 1 - s, b1, s, 1 - b1;
  return out;
}

struct StationaryMeasure {
  int window = 0;
  Eigen::VectorXd q;       // probabilities at states 1..window
  double tail_bound = 0.0; // bound on the mass above the window
  Eigen::VectorXd u;       // unnormalized generating vector on the window
  Eigen::Vector2d v;       // reduced eigenvector (b_1, s)
  double norm = 0.0;       // sum u + u-tail bound; q = u / norm
};

// Closed-form stationary measure: v = (b_1, s) spans ker(R - I);
// u(i) = v(1) sum_k (prod_{l=0}^{k-2} b_{i+l}) a_{i+k-1} for i >= 3, each
// inner sum truncated once the b-product drops below tol. The normalization
// uses the analytic tail bound v(1) (a_tail(W+1) + C rho^{W+1} / (1 - rho)).
inline StationaryMeasure stationary_closed_form(const FamilyParams& p,
                                                double tol, int window) {
  if (window < 3) throw domain_error("window must be >= 3");
  Reduced2x2 red = reduced_2x2(p, tol);
  const double b1 = p.b(1);
  Eigen::Vector2d v(b1, red.s);
  // Kernel verification: (R - I) v should vanish.
  double kernel_residual = ((red.m - Eigen::Matrix2d::Identity()) * v)
                               .cwiseAbs()
                               .maxCoeff();
  if (kernel_residual > 10 * tol)
    throw numeric_error("(R - I) v residual exceeds 10 tol");

  StationaryMeasure sm;
  sm.window = window;
  sm.v = v;
  sm.u = Eigen::VectorXd::Zero(window);
  sm.u(0) = v(0);
  sm.u(1) = v(1);
  for (int i = 3; i <= window; ++i) {
    double sum = 0.0, prefix = 1.0;
    for (int k = 1; k < 100000; ++k) {
      sum += prefix * p.a(i + k - 1);
      prefix *= p.b(i + k - 1);
      if (prefix < tol) break;
    }
    sm.u(i - 1) = v(0) * sum;
  }
  for (int i = 0; i < window; ++i)
    if (!(sm.u(i) >= 0))
      throw numeric_error("generating vector has a negative entry");

  double u_tail = v(0) * (p.a_tail(window + 1) +
                          p.C * std::pow(p.rho, window + 1) / (1 - p.rho));
  if (u_tail > tol)
    throw domain_error("window too small for requested tol: tail bound " +
                       std::to_string(u_tail));
  sm.norm = sm.u.sum() + u_tail;
  sm.q = sm.u / sm.norm;
  sm.tail_bound = u_tail / sm.norm;
  return sm;
}

// Independent oracle: power iteration on the column-stochastic matrix over
// states [1..n_states], with all mass the exact chain sends above n_states
// folded into state 1 (mirroring the w_n construction).
inline Eigen::VectorXd stationary_power_iteration(const FamilyParams& p,
                                                  int n_states, double tol,
                                                  int max_iter) {
  if (n_states < 3) throw domain_error("n_states must be >= 3");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_states, n_states);
  for (int j = 1; j <= n_states; ++j) {
    double col = 0.0;
    for (int i = 1; i <= n_states; ++i) {
      double wij = family_weight(p, i, j);
      w(i - 1, j - 1) = wij;
      col += wij;
    }
    w(0, j - 1) += 1.0 - col;  // escaping mass folds into state 1
  }
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd nx = w * x;
    double delta = (nx - x).cwiseAbs().sum();
    x = std::move(nx);
    if (delta < tol) return x;
  }
  throw numeric_error("power iteration did not converge within max_iter");
}

struct McResult {
  Eigen::VectorXd freq;          // occupation frequency at states 1..window
  double above_window = 0.0;     // occupation frequency above the window
  std::uint64_t steps = 0;
};

// Simulates the exact chain for `steps` transitions after a burn-in of
// steps/10 and returns occupation frequencies. Uses mt19937_64 with uniforms
// drawn as (x >> 11) * 2^-53, so equal seeds give bit-identical results on
// any platform; parallel runs should use distinct seeds and merge by
// weighted averaging.
inline McResult monte_carlo_stationary(const FamilyParams& p,
                                       std::uint64_t steps,
                                       std::uint64_t seed, int window) {
  if (steps < 1) throw domain_error("steps must be >= 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  auto next_state = [&](int j) -> int {
    double u = uniform();
    if (j == 1) {
      // Inverse CDF walk over (a_i); terminates a.s. since sum a_i = 1.
      double cum = 0.0;
      for (int i = 1; i < 1000000; ++i) {
        cum += p.a(i);
        if (u < cum) return i;
      }
      return 1000000;
    }
    if (j == 2) return u < p.b(1) ? 1 : 2;
    return u < 1 - p.b(j - 1) ? 1 : j - 1;
  };

  McResult res;
  res.freq = Eigen::VectorXd::Zero(window);
  res.steps = steps;
  int state = 1;
  std::uint64_t burn = steps / 10;
  for (std::uint64_t t = 0; t < burn; ++t) state = next_state(state);
  std::uint64_t above = 0;
  for (std::uint64_t t = 0; t < steps; ++t) {
    state = next_state(state);
    if (state <= window)
      res.freq(state - 1) += 1.0;
    else
      ++above;
  }
  res.freq /= static_cast<double>(steps);
  res.above_window = static_cast<double>(above) / static_cast<double>(steps);
  return res;
}

// --- convergence of the truncations ------------------------------------------

struct ConvergenceRow {
  int n = 0;
  double gap = 0.0;        // ||w - w_n||_{1,inf}
  double two_max_b = 0.0;  // 2 max_{i >= n} b_i
  double tv_distance = 0.0;
};

// Total variation distance between two measures given on a common window,
// with their out-of-window tail bounds treated as worst-case disjoint mass.
inline double tv_distance_windowed(const Eigen::VectorXd& q1, double tail1,
                                   const Eigen::VectorXd& q2, double tail2) {
  return 0.5 * ((q1 - q2).cwiseAbs().sum() + tail1 + tail2);
}

// For each n: the (1,inf) gap between w and w_n (asserted equal to
// 2 max_{i>=n} b_i), and the total variation distance between
// q_n = u_n / ||u_n||_1 reconstructed on w_n at lambda = 1 and the
// closed-form q.
inline std::vector<ConvergenceRow> truncation_convergence(
    const FamilyParams& p, const std::vector<int>& n_values, double tol) {
  validate_params(p);
  int n_max_req = 2;
  for (int n : n_values) {
    if (n < 2) throw domain_error("truncation orders must be >= 2");
    n_max_req = std::max(n_max_req, n);
  }
  const int window = std::max(64, n_max_req + 24);
  CountableGraph w_full = family_graph(p);
  StationaryMeasure q = stationary_closed_form(p, tol, window);
  Eigen::Vector2d v = q.v;
  const std::vector<int> s{1, 2};

  std::vector<ConvergenceRow> rows;
  for (int n : n_values) {
    ConvergenceRow row;
    row.n = n;
    CountableGraph wn = truncated_graph(p, n);
    row.gap = one_inf_norm_gap(w_full, wn, window);
    double maxb = 0.0;
    for (int i = n; i <= n + 512; ++i) maxb = std::max(maxb, p.b(i));
    row.two_max_b = 2 * maxb;
    if (std::abs(row.gap - row.two_max_b) > 1e-12)
      throw numeric_error("norm gap does not equal 2 max_{i>=n} b_i");

    Eigen::VectorXcd vc(2);
    vc << v(0), v(1);
    FixedPointResult fp = reconstruct_fixed_point(
        wn, s, cplx(1.0), vc, Eigen::VectorXcd(), window, tol * 1e-2);
    Eigen::VectorXd un = fp.u.real();
    double un_tail = v(0) * p.a_tail(window + 1);  // u_n(i) = a_i v(1), i >= n
    double norm = un.sum() + un_tail;
    Eigen::VectorXd qn = un / norm;
    row.tv_distance =
        tv_distance_windowed(qn, un_tail / norm, q.q, q.tail_bound);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace isored
