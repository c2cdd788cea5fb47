#pragma once

// Reduced operator R_S(lambda) for finite graphs, computed two independent
// ways (branch sums and a Schur-complement solve), spectrum correspondence,
// eigenvector restriction and reconstruction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "isored/graph.hpp"

namespace isored {

inline Eigen::MatrixXcd adjacency_matrix(const WeightedGraph& g) {
  const int n = g.size();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (auto& [i, j, w] : g.edges()) a(i - 1, j - 1) = w;
  return a;
}

// Max absolute row sum of the weight matrix.
inline double inf_norm(const WeightedGraph& g) {
  double best = 0.0;
  for (int i = 1; i <= g.size(); ++i) {
    double sum = 0.0;
    for (const auto& e : g.row(i)) sum += std::abs(e.w);
    best = std::max(best, sum);
  }
  return best;
}

// Membership tolerance for Sigma: |lambda - sigma| <= 1e-9 * max(1, ||A||_inf).
inline double sigma_tolerance(const WeightedGraph& g) {
  return 1e-9 * std::max(1.0, inf_norm(g));
}

inline double dist_to_sigma(cplx lambda, const std::vector<cplx>& sigma) {
  double d = std::numeric_limits<double>::infinity();
  for (cplx s : sigma) d = std::min(d, std::abs(lambda - s));
  return d;
}

inline bool in_sigma(cplx lambda, const std::vector<cplx>& sigma, double tol) {
  return dist_to_sigma(lambda, sigma) <= tol;
}

inline cplx nearest_sigma(cplx lambda, const std::vector<cplx>& sigma) {
  cplx best = sigma.empty() ? cplx(0.0) : sigma.front();
  for (cplx s : sigma)
    if (std::abs(lambda - s) < std::abs(lambda - best)) best = s;
  return best;
}

inline std::string describe_sigma_hit(cplx lambda,
                                      const std::vector<cplx>& sigma) {
  cplx s = nearest_sigma(lambda, sigma);
  char buf[96];
  std::snprintf(buf, sizeof buf, "lambda lies in Sigma: offending sigma = %.15g%+.15gi",
                s.real(), s.imag());
  return buf;
}

// lambda-weight of a branch: w(i0,i1) * prod_{l=1}^{p-1} w(il,i(l+1)) /
// (lambda - w(il,il)). The empty product applies when p = 1.
inline cplx branch_weight(const WeightedGraph& g, const Branch& b,
                          cplx lambda) {
  const auto& v = b.vertices;
  if (v.size() < 2) throw domain_error("branch must have length >= 1");
  cplx acc = g.weight(v[0], v[1]);
  for (size_t l = 1; l + 1 < v.size(); ++l) {
    cplx d = g.weight(v[l], v[l]);
    if (std::abs(lambda - d) <= 1e-12)
      throw domain_error("lambda within 1e-12 of interior diagonal value");
    acc *= g.weight(v[l], v[l + 1]) / (lambda - d);
  }
  return acc;
}

struct ReducedEvaluation {
  std::vector<int> s;  // sorted; row/column order of entries
  cplx lambda;
  Eigen::MatrixXcd entries;
};

// Definitional evaluation of R_S(lambda) by summing lambda-weights over all
// branches. Exponential in the worst case; intended for small graphs and as
// reference semantics for the linear-solve path.
inline ReducedEvaluation reduce_branches(const WeightedGraph& g,
                                         const std::vector<int>& s_in,
                                         cplx lambda) {
  std::vector<int> s = canonical_set(g, s_in);
  std::vector<cplx> sigma = sigma_values(g, s);
  if (in_sigma(lambda, sigma, sigma_tolerance(g)))
    throw domain_error(describe_sigma_hit(lambda, sigma));
  const int k = static_cast<int>(s.size());
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      cplx sum = 0.0;
      for (const Branch& br :
           enumerate_branches(g, s, s[static_cast<size_t>(a)],
                              s[static_cast<size_t>(b)]))
        sum += branch_weight(g, br, lambda);
      r(a, b) = sum;
    }
  return ReducedEvaluation{std::move(s), lambda, std::move(r)};
}

// R_S(lambda) = A[S,S] + A[S,I] (lambda I - A[I,I])^{-1} A[I,S] with
// I = V \ S. Algebraically equal to the branch sum; this is the production
// path.
inline ReducedEvaluation reduce_linear_solve(const WeightedGraph& g,
                                             const std::vector<int>& s_in,
                                             cplx lambda) {
  std::vector<int> s = canonical_set(g, s_in);
  auto verdict = is_structural_set(g, s);
  if (!verdict.structural)
    throw domain_error("S is not structural: interior cycle found");
  std::vector<cplx> sigma = sigma_values(g, s);
  if (in_sigma(lambda, sigma, sigma_tolerance(g)))
    throw domain_error(describe_sigma_hit(lambda, sigma));

  const int n = g.size();
  std::vector<int> interior;
  for (int v = 1; v <= n; ++v)
    if (!set_contains(s, v)) interior.push_back(v);

  Eigen::MatrixXcd a = adjacency_matrix(g);
  const int k = static_cast<int>(s.size());
  const int m = static_cast<int>(interior.size());
  Eigen::MatrixXcd ss(k, k), si(k, m), is(m, k), ii(m, m);
  for (int p = 0; p < k; ++p)
    for (int q = 0; q < k; ++q)
      ss(p, q) = a(s[static_cast<size_t>(p)] - 1, s[static_cast<size_t>(q)] - 1);
  for (int p = 0; p < k; ++p)
    for (int q = 0; q < m; ++q)
      si(p, q) =
          a(s[static_cast<size_t>(p)] - 1, interior[static_cast<size_t>(q)] - 1);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < k; ++q)
      is(p, q) =
          a(interior[static_cast<size_t>(p)] - 1, s[static_cast<size_t>(q)] - 1);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q)
      ii(p, q) = a(interior[static_cast<size_t>(p)] - 1,
                   interior[static_cast<size_t>(q)] - 1);

  Eigen::MatrixXcd r = ss;
  if (m > 0) {
    Eigen::MatrixXcd shift =
        lambda * Eigen::MatrixXcd::Identity(m, m) - ii;
    Eigen::MatrixXcd x = shift.partialPivLu().solve(is);
    if (!x.allFinite())
      throw numeric_error("singular interior solve (lambda in Sigma?)");
    r += si * x;
  }
  return ReducedEvaluation{std::move(s), lambda, std::move(r)};
}

struct SpectrumReport {
  struct ReducedEigenvalue {
    cplx lambda;
    double residual;  // |det(R_S(lambda) - lambda I)|
  };
  // Descending modulus, ties by descending real part then imaginary part.
  std::vector<cplx> full_spectrum;
  std::vector<cplx> sigma;
  std::vector<ReducedEigenvalue> reduced;  // eigenvalues outside Sigma
  std::vector<cplx> excluded;              // eigenvalues inside Sigma
};

inline void sort_spectrum(std::vector<cplx>& v) {
  std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
    double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

// Eigenvalues of the dense matrix A, partitioned by Sigma membership, with
// reduced-determinant residuals for those outside Sigma.
inline SpectrumReport reduced_spectrum(const WeightedGraph& g,
                                       const std::vector<int>& s_in) {
  std::vector<int> s = canonical_set(g, s_in);
  auto verdict = is_structural_set(g, s);
  if (!verdict.structural)
    throw domain_error("S is not structural: interior cycle found");

  Eigen::MatrixXcd a = adjacency_matrix(g);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
  if (es.info() != Eigen::Success)
    throw numeric_error("eigensolver failed to converge");

  SpectrumReport rep;
  rep.sigma = sigma_values(g, s);
  for (int i = 0; i < a.rows(); ++i)
    rep.full_spectrum.push_back(es.eigenvalues()(i));
  sort_spectrum(rep.full_spectrum);

  const double tol = sigma_tolerance(g);
  const int k = static_cast<int>(s.size());
  for (cplx lam : rep.full_spectrum) {
    if (in_sigma(lam, rep.sigma, tol)) {
      rep.excluded.push_back(lam);
      continue;
    }
    ReducedEvaluation r = reduce_linear_solve(g, s, lam);
    double res = std::abs(
        (r.entries - lam * Eigen::MatrixXcd::Identity(k, k)).determinant());
    rep.reduced.push_back({lam, res});
  }
  return rep;
}

// Projection Pi_S: entries of u at S, in S's sorted order.
inline Eigen::VectorXcd restrict_eigenvector(const Eigen::VectorXcd& u,
                                             const std::vector<int>& s) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(s.size()));
  for (size_t p = 0; p < s.size(); ++p) out(static_cast<Eigen::Index>(p)) = u(s[p] - 1);
  return out;
}

// Reconstruction operator Phi_S(lambda0): u = v on S, and in increasing depth
// order u(l) = sum_{j != l} w(l,j) u(j) / (lambda0 - w(l,l)) on the interior.
// Satisfies Pi_S(Phi_S(lambda0) v) = v; maps reduced eigenvectors at lambda0
// to eigenvectors of A.
inline Eigen::VectorXcd reconstruct_eigenvector(const WeightedGraph& g,
                                                const std::vector<int>& s_in,
                                                cplx lambda0,
                                                const Eigen::VectorXcd& v) {
  std::vector<int> s = canonical_set(g, s_in);
  if (v.size() != static_cast<Eigen::Index>(s.size()))
    throw domain_error("v must have one entry per vertex of S");
  DepthAssignment da = compute_depths(g, s);

  const int n = g.size();
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
  for (size_t p = 0; p < s.size(); ++p) u(s[p] - 1) = v(static_cast<Eigen::Index>(p));

  std::vector<int> interior;
  for (int w = 1; w <= n; ++w)
    if (!set_contains(s, w)) interior.push_back(w);
  std::sort(interior.begin(), interior.end(), [&](int x, int y) {
    int dx = da.depth[static_cast<size_t>(x)], dy = da.depth[static_cast<size_t>(y)];
    return dx != dy ? dx < dy : x < y;
  });

  for (int l : interior) {
    cplx d = g.weight(l, l);
    if (std::abs(lambda0 - d) <= 1e-12)
      throw domain_error("lambda0 lies in Sigma");
    cplx sum = 0.0;
    for (const auto& e : g.row(l))
      if (e.to != l) sum += e.w * u(e.to - 1);
    u(l - 1) = sum / (lambda0 - d);
  }
  return u;
}

struct NewtonOptions {
  int grid_per_side = 13;   // seeds on a grid_per_side^2 lattice
  double grid_radius = 0;   // 0: use ||A||_inf + 1
  int max_iter = 60;
  double root_tol = 1e-11;  // on the normalized determinant
};

// Grid-seeded Newton iteration on det(R_S(lambda) - lambda I), normalized by
// (1 + ||A||_inf)^|S|. Secondary spectrum mode; the eigensolver path is the
// robust default.
inline std::vector<cplx> newton_reduced_roots(const WeightedGraph& g,
                                              const std::vector<int>& s_in,
                                              NewtonOptions opt = {}) {
  std::vector<int> s = canonical_set(g, s_in);
  std::vector<cplx> sigma = sigma_values(g, s);
  const double norm_a = inf_norm(g);
  const double radius = opt.grid_radius > 0 ? opt.grid_radius : norm_a + 1.0;
  const double sig_tol = sigma_tolerance(g);
  const int k = static_cast<int>(s.size());
  const double scale = std::pow(1.0 + norm_a, k);

  auto f = [&](cplx lam) -> cplx {
    ReducedEvaluation r = reduce_linear_solve(g, s, lam);
    return (r.entries - lam * Eigen::MatrixXcd::Identity(k, k)).determinant() /
           scale;
  };

  std::vector<cplx> roots;
  auto note_root = [&](cplx lam) {
    for (cplx r : roots)
      if (std::abs(r - lam) <= 1e-6 * std::max(1.0, norm_a)) return;
    roots.push_back(lam);
  };

  const int gp = opt.grid_per_side;
  for (int gx = 0; gx < gp; ++gx) {
    for (int gy = 0; gy < gp; ++gy) {
      cplx lam(-radius + 2 * radius * gx / (gp - 1),
               -radius + 2 * radius * gy / (gp - 1));
      if (in_sigma(lam, sigma, 100 * sig_tol)) continue;
      bool ok = false;
      for (int it = 0; it < opt.max_iter; ++it) {
        if (in_sigma(lam, sigma, 100 * sig_tol) || std::abs(lam) > 3 * radius)
          break;
        cplx fv = f(lam);
        double h = 1e-6 * std::max(1.0, std::abs(lam));
        cplx df = (f(lam + h) - f(lam - h)) / (2 * h);
        if (std::abs(df) < 1e-300) break;
        cplx step = fv / df;
        lam -= step;
        if (std::abs(fv) < opt.root_tol &&
            std::abs(step) < 1e-9 * std::max(1.0, std::abs(lam))) {
          ok = true;
          break;
        }
      }
      if (ok && !in_sigma(lam, sigma, 100 * sig_tol) &&
          std::abs(lam) <= radius + 1)
        note_root(lam);
    }
  }
  sort_spectrum(roots);
  return roots;
}

}  // namespace isored
