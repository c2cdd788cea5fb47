#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "isored/markov.hpp"

using namespace isored;

namespace {
const FamilyParams kRef = geometric_family(0.5, 0.5, 0.6, 1.01);

double column_sum(const std::function<double(int, int)>& w, int j, int rows) {
  double s = 0.0;
  for (int i = 1; i <= rows; ++i) s += w(i, j);
  return s;
}
}  // namespace

TEST_CASE("family_weight follows the transition rules") {
  CHECK(family_weight(kRef, 2, 2) == 1 - kRef.b(1));
  CHECK(family_weight(kRef, 1, 3) == 1 - kRef.b(2));
  CHECK(family_weight(kRef, 5, 1) == kRef.a(5));
  CHECK(family_weight(kRef, 1, 2) == kRef.b(1));
  CHECK(family_weight(kRef, 4, 5) == kRef.b(4));
  CHECK(family_weight(kRef, 3, 5) == 0.0);
  CHECK(family_weight(kRef, 5, 4) == 0.0);

  // Column stochasticity: column 1 needs the analytic tail, the rest close
  // within a finite row range.
  double c1 = column_sum([&](int i, int j) { return family_weight(kRef, i, j); },
                         1, 200) +
              kRef.a_tail(201);
  CHECK(c1 == Catch::Approx(1.0).margin(1e-12));
  for (int j = 2; j <= 40; ++j)
    CHECK(column_sum(
              [&](int i, int jj) { return family_weight(kRef, i, jj); }, j,
              60) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("truncated_weight follows the five rules") {
  const int n = 5;
  CHECK(truncated_weight(kRef, n, 1, 7) == 1.0);
  CHECK(truncated_weight(kRef, n, 4, 5) == kRef.b(4));
  CHECK(truncated_weight(kRef, n, 5, 6) == 0.0);  // ladder stops at n
  CHECK(truncated_weight(kRef, n, 2, 2) == 1 - kRef.b(1));
  CHECK(truncated_weight(kRef, n, 1, 5) == 1 - kRef.b(4));
  CHECK(truncated_weight(kRef, n, 1, 6) == 1.0);
  CHECK(truncated_weight(kRef, n, 6, 1) == kRef.a(6));

  double c1 =
      column_sum([&](int i, int j) { return truncated_weight(kRef, n, i, j); },
                 1, 200) +
      kRef.a_tail(201);
  CHECK(c1 == Catch::Approx(1.0).margin(1e-12));
  for (int j = 2; j <= 30; ++j)
    CHECK(column_sum(
              [&](int i, int jj) { return truncated_weight(kRef, n, i, jj); },
              j, 60) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("family and truncation agree below the truncation order") {
  // w_n matches w wherever the truncation has not rewired the column.
  for (int n : {2, 5, 9}) {
    for (int j = 1; j <= n; ++j)
      for (int i = 1; i <= n + 5; ++i)
        REQUIRE(truncated_weight(kRef, n, i, j) == family_weight(kRef, i, j));
  }
}

TEST_CASE("reduced_2x2 columns are exactly stochastic") {
  Reduced2x2 red = reduced_2x2(kRef, 1e-13);
  CHECK(red.m(0, 0) + red.m(1, 0) == 1.0);
  CHECK(red.m(0, 1) + red.m(1, 1) == 1.0);
  CHECK(red.report.converged);
  REQUIRE(red.report.tail_bound.has_value());
  CHECK(*red.report.tail_bound < 1e-13);
}

TEST_CASE("reduced_2x2 s-series against a direct partial-sum oracle") {
  // a_i = b_i = 2^-i: s = sum_l 2^-(l(l+5)/2 + 2), dominated by the first
  // terms 1/4 + 1/32 + 1/512 + 1/16384 + ...
  FamilyParams p = geometric_family(0.5, 1.0, 0.5, 1.01);
  double oracle = 0.0;
  for (int l = 0; l <= 12; ++l)
    oracle += std::pow(2.0, -(l * (l + 5) / 2.0 + 2.0));
  Reduced2x2 red = reduced_2x2(p, 1e-15);
  CHECK(red.s == Catch::Approx(oracle).epsilon(1e-12));
  CHECK(red.s == Catch::Approx(0.2832642).margin(2e-6));

  // Degenerate probe: when every b_i is already below tol, s collapses to
  // the single surviving term a_2.
  FamilyParams tiny = geometric_family(0.5, 1e-18, 0.5, 1.01);
  Reduced2x2 rt = reduced_2x2(tiny, 1e-12);
  CHECK(rt.s == Catch::Approx(tiny.a(2)).margin(1e-12));
  CHECK(rt.report.terms_used == 1);
}

TEST_CASE("reduced_2x2 rejects non-decaying b") {
  FamilyParams stuck = kRef;
  stuck.b = [](int) { return 1.0; };  // the b-product never shrinks
  CHECK_THROWS_AS(reduced_2x2(stuck, 1e-12), numeric_error);
}

TEST_CASE("the closed-form q is a fixed point of the folded window matrix") {
  const int window = 60;
  StationaryMeasure sm = stationary_closed_form(kRef, 1e-12, window);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(window, window);
  for (int j = 1; j <= window; ++j) {
    double col = 0.0;
    for (int i = 1; i <= window; ++i) {
      w(i - 1, j - 1) = family_weight(kRef, i, j);
      col += w(i - 1, j - 1);
    }
    w(0, j - 1) += std::max(0.0, 1.0 - col);
  }
  // The folding and the missing tail mass dominate the defect.
  CHECK((w * sm.q - sm.q).cwiseAbs().sum() <= 100 * sm.tail_bound + 1e-13);
}

TEST_CASE("stationary_closed_form invariants") {
  StationaryMeasure sm = stationary_closed_form(kRef, 1e-12, 60);
  // v = (b_1, s) lies in the kernel of R - I by construction.
  Reduced2x2 red = reduced_2x2(kRef, 1e-12);
  Eigen::Vector2d kv = (red.m - Eigen::Matrix2d::Identity()) * sm.v;
  CHECK(kv.cwiseAbs().maxCoeff() < 1e-15);

  for (int i = 0; i < sm.q.size(); ++i) REQUIRE(sm.q(i) >= 0.0);
  CHECK(sm.q.sum() + sm.tail_bound == Catch::Approx(1.0).margin(1e-10));

  // Term-splitting bound u(i) <= v(1) (a_i + b_i) for i >= 3.
  for (int i = 3; i <= 60; ++i)
    REQUIRE(sm.u(i - 1) <= sm.v(0) * (kRef.a(i) + kRef.b(i)) + 1e-15);

  // Window too small for the requested tolerance is an error.
  CHECK_THROWS_AS(stationary_closed_form(kRef, 1e-12, 40), domain_error);
}

TEST_CASE("closed form vs power iteration: a_i = b_i = 2^-i at window 40") {
  FamilyParams p = geometric_family(0.5, 1.0, 0.5, 1.01);
  StationaryMeasure sm = stationary_closed_form(p, 1e-12, 40);
  Eigen::VectorXd pi = stationary_power_iteration(p, 60, 1e-13, 200000);
  double tv = 0.5 * (sm.q - pi.head(40)).cwiseAbs().sum();
  CHECK(tv < 1e-8);
}

TEST_CASE("power iteration returns a stationary probability vector") {
  Eigen::VectorXd q = stationary_power_iteration(kRef, 60, 1e-12, 200000);
  for (int i = 0; i < q.size(); ++i) REQUIRE(q(i) >= 0.0);
  CHECK(q.sum() == Catch::Approx(1.0).margin(1e-12));

  // Residual against the folded matrix stays within 10 tol.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(60, 60);
  for (int j = 1; j <= 60; ++j) {
    double col = 0.0;
    for (int i = 1; i <= 60; ++i) {
      w(i - 1, j - 1) = family_weight(kRef, i, j);
      col += w(i - 1, j - 1);
    }
    w(0, j - 1) += std::max(0.0, 1.0 - col);
  }
  CHECK((w * q - q).cwiseAbs().sum() <= 10 * 1e-12);

  CHECK_THROWS_AS(stationary_power_iteration(kRef, 60, 1e-12, 3),
                  numeric_error);
}

TEST_CASE("closed form agrees with power iteration on the reference params") {
  StationaryMeasure sm = stationary_closed_form(kRef, 1e-10, 60);
  Eigen::VectorXd pi = stationary_power_iteration(kRef, 60, 1e-13, 200000);
  double tv = tv_distance_windowed(sm.q, sm.tail_bound, pi, 0.0);
  CHECK(tv < 1e-6);
}

TEST_CASE("the normalized measure is invariant under scaling of v") {
  const int n = 9, window = 40;
  Reduced2x2 red = reduced_2x2(kRef, 1e-14);
  CountableGraph wn = truncated_graph(kRef, n);
  auto q_from = [&](cplx scale) {
    Eigen::VectorXcd v(2);
    v << scale * kRef.b(1), scale * red.s;
    auto fp = reconstruct_fixed_point(wn, {1, 2}, cplx(1.0), v,
                                      Eigen::VectorXcd(), window, 1e-14);
    Eigen::VectorXd u = fp.u.real();
    return Eigen::VectorXd(u / u.sum());
  };
  Eigen::VectorXd q1 = q_from(cplx(1.0));
  Eigen::VectorXd q7 = q_from(cplx(7.0));
  CHECK((q1 - q7).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("monte_carlo_stationary is deterministic and close to q") {
  McResult a = monte_carlo_stationary(kRef, 200000, 7, 40);
  McResult b = monte_carlo_stationary(kRef, 200000, 7, 40);
  REQUIRE(a.freq == b.freq);  // bit-identical per seed
  REQUIRE(a.above_window == b.above_window);

  CHECK(a.freq.sum() <= 1.0 + 1e-15);
  CHECK(a.freq.sum() + a.above_window == Catch::Approx(1.0).margin(1e-12));

  StationaryMeasure sm = stationary_closed_form(kRef, 1e-8, 40);
  double tv = tv_distance_windowed(a.freq, a.above_window, sm.q,
                                   sm.tail_bound);
  CHECK(tv < 0.02);

  McResult c = monte_carlo_stationary(kRef, 200000, 8, 40);
  CHECK(a.freq != c.freq);  // different stream per seed
}

TEST_CASE("truncation_convergence: gap identity, bound and monotone TV") {
  auto rows = truncation_convergence(kRef, {3, 5, 8, 12, 16}, 1e-11);
  REQUIRE(rows.size() == 5);
  for (const auto& row : rows) {
    CHECK(row.gap == Catch::Approx(row.two_max_b).margin(1e-12));
    CHECK(row.gap <= 2 * kRef.C * std::pow(kRef.rho, row.n));
  }
  for (size_t k = 1; k < rows.size(); ++k)
    CHECK(rows[k].tv_distance <= rows[k - 1].tv_distance + 1e-12);
  // The truncations converge at least as fast as a constant multiple of the
  // norm gap on these runs.
  for (const auto& row : rows)
    CHECK(row.tv_distance <= 2.0 * row.gap);
}

TEST_CASE("superexponential diagnostic of t_n = prod b_i") {
  auto slope = [&](int n) {
    double log_t = 0.0;
    for (int i = 1; i < n; ++i) log_t += std::log(kRef.b(i));
    return log_t / n;
  };
  bool below1 = false, below2 = false, below5 = false;
  for (int n = 2; n <= 40; ++n) {
    double v = slope(n);
    below1 |= v < -1;
    below2 |= v < -2;
    below5 |= v < -5;
  }
  CHECK(below1);
  CHECK(below2);
  CHECK(below5);
  CHECK(slope(25) < -5.0);
  // and it keeps falling
  for (int n = 5; n < 40; ++n) REQUIRE(slope(n + 1) < slope(n));
}

TEST_CASE("validate_params names the violated condition") {
  CHECK_NOTHROW(validate_params(kRef));
  auto message_of = [](FamilyParams p) {
    try {
      validate_params(p);
    } catch (const domain_error& e) {
      return std::string(e.what());
    }
    return std::string();
  };

  FamilyParams bad_b1 = kRef;
  bad_b1.a = [](int i) { return i == 1 ? 0.9 : std::pow(2.0, -i); };
  CHECK(message_of(bad_b1).find("(B1)") != std::string::npos);

  FamilyParams bad_b2 = kRef;
  bad_b2.b = [](int) { return 0.9; };
  CHECK(message_of(bad_b2).find("(B2)") != std::string::npos);

  CHECK_THROWS_AS(geometric_family(0.5, 1.5, 0.6, 1.01), domain_error);
  CHECK_THROWS_AS(geometric_family(1.2, 0.5, 0.6, 1.01), domain_error);
}

TEST_CASE("parse_params reads the key = value format") {
  FamilyParams p = parse_params(
      "# comment\nfamily = geometric\nalpha = 0.5\nbeta = 0.5\nrho = 0.6\n"
      "C = 1.01\n");
  CHECK(p.a(3) == kRef.a(3));
  CHECK(p.b(3) == kRef.b(3));
  CHECK(p.C == kRef.C);

  CHECK_THROWS_AS(parse_params("family = geometric\nalpha = 0.5\n"),
                  parse_error);
  CHECK_THROWS_AS(parse_params("family = exotic\n"), parse_error);
  CHECK_THROWS_AS(parse_params("alpha 0.5\n"), parse_error);
  CHECK_THROWS_AS(
      parse_params(
          "family = geometric\nalpha = 0.5\nbeta = 0.5\nrho = 0.6\nC = 1.01\n"
          "zeta = 3\n"),
      parse_error);
}
