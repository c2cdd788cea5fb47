// Command-line front end: parse, check, reduce, spectrum, reconstruct, and
// the Markov-family solver with convergence studies.
//
// Exit codes: 0 success, 1 domain error (non-structural S, lambda in Sigma,
// invalid parameters), 2 input/parse error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <optional>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "isored/format.hpp"
#include "isored/graph.hpp"
#include "isored/infinite.hpp"
#include "isored/markov.hpp"
#include "isored/reduction.hpp"

using nlohmann::json;
using namespace isored;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error(0, "cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Accumulates the run report as aligned text and a mirroring JSON document.
struct Report {
  bool json_mode = false;
  bool no_timestamp = false;
  json j;
  std::string text;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  void echo_command(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
      if (i) cmd += " ";
      cmd += argv[i];
    }
    j["command"] = cmd;
    text += "command: " + cmd + "\n";
  }

  void input(const std::string& path, const std::string& content) {
    j["input"] = {{"file", path}, {"fnv1a64", fnv1a64(content)}};
    text += "input: " + path + " (fnv1a64=" + fnv1a64(content) + ")\n";
  }

  void kv(const std::string& key, const std::string& val) {
    j[key] = val;
    text += key + ": " + val + "\n";
  }
  void kv(const std::string& key, double val) {
    j[key] = val;
    text += key + ": " + format_double(val) + "\n";
  }
  void kv(const std::string& key, int val) {
    j[key] = val;
    text += key + ": " + std::to_string(val) + "\n";
  }
  void line(const std::string& s) { text += s + "\n"; }

  void warnings(const std::vector<std::string>& ws) {
    if (ws.empty()) return;
    j["warnings"] = ws;
    for (const auto& w : ws) text += "warning: " + w + "\n";
  }

  void truncation(const std::string& name, const TruncationReport& tr) {
    json t;
    t["terms_used"] = tr.terms_used;
    t["last_term_norm"] = tr.last_term_norm;
    if (tr.tail_bound) t["tail_bound"] = *tr.tail_bound;
    t["window"] = tr.window;
    t["converged"] = tr.converged;
    t["warnings"] = tr.warnings;
    j["truncation"][name] = t;
    text += name + " truncation:\n";
    std::istringstream lines(tr.to_text());
    std::string l;
    while (std::getline(lines, l)) text += "  " + l + "\n";
  }

  int finish(int code) {
    if (!no_timestamp) {
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
      j["duration_ms"] = ms;
      text += "duration_ms: " + std::to_string(ms) + "\n";
    }
    j["exit_code"] = code;
    if (json_mode)
      std::cout << j.dump(2) << "\n";
    else
      std::cout << text;
    return code;
  }
};

std::string matrix_to_text(const Eigen::MatrixXcd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += "  [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += "  ";
      out += format_complex(m(r, c));
    }
    out += "]\n";
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({{"re", m(r, c).real()}, {"im", m(r, c).imag()}});
    rows.push_back(row);
  }
  return rows;
}

std::string set_to_text(const std::vector<int>& s) {
  std::string out = "{";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

std::string sigma_to_text(const std::vector<cplx>& sigma) {
  std::string out = "{";
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (i) out += ", ";
    out += format_complex(sigma[i]);
  }
  return out + "}";
}

int cmd_check(Report& rep, const std::string& file) {
  std::string content = read_file(file);
  rep.input(file, content);
  ParsedGraph pg = parse_graph(content);
  auto verdict = is_structural_set(pg.graph, pg.structural_set);
  rep.kv("n", pg.graph.size());
  rep.kv("S", set_to_text(pg.structural_set));
  if (!verdict.structural) {
    rep.kv("verdict", std::string("not structural"));
    std::string cyc;
    for (size_t i = 0; i < verdict.witness_cycle.size(); ++i) {
      if (i) cyc += " -> ";
      cyc += std::to_string(verdict.witness_cycle[i]);
    }
    rep.kv("witness_cycle", cyc);
    return rep.finish(1);
  }
  rep.kv("verdict", std::string("structural"));
  DepthAssignment da = compute_depths(pg.graph, pg.structural_set);
  rep.kv("sigma", sigma_to_text(da.sigma));
  rep.line("depth table:");
  json depths = json::object();
  for (int v = 1; v <= pg.graph.size(); ++v) {
    rep.line("  " + std::to_string(v) + "  " +
             std::to_string(da.depth[static_cast<size_t>(v)]));
    depths[std::to_string(v)] = da.depth[static_cast<size_t>(v)];
  }
  rep.j["depths"] = depths;
  return rep.finish(0);
}

int cmd_reduce(Report& rep, const std::string& file,
               const std::string& lambda_str, const std::string& method) {
  std::string content = read_file(file);
  rep.input(file, content);
  ParsedGraph pg = parse_graph(content);
  cplx lambda = parse_complex(lambda_str);
  rep.kv("lambda", format_complex(lambda));
  rep.kv("method", method);
  rep.kv("dist_to_sigma",
         dist_to_sigma(lambda, sigma_values(pg.graph, canonical_set(
                                                pg.graph, pg.structural_set))));

  std::optional<ReducedEvaluation> via_branches, via_solve;
  if (method == "branches" || method == "both") {
    via_branches = reduce_branches(pg.graph, pg.structural_set, lambda);
    rep.line("R_S(lambda) via branch sums:");
    rep.text += matrix_to_text(via_branches->entries);
    rep.j["branches"] = matrix_to_json(via_branches->entries);
  }
  if (method == "solve" || method == "both") {
    via_solve = reduce_linear_solve(pg.graph, pg.structural_set, lambda);
    rep.line("R_S(lambda) via linear solve:");
    rep.text += matrix_to_text(via_solve->entries);
    rep.j["solve"] = matrix_to_json(via_solve->entries);
  }
  if (method == "both") {
    double disc =
        (via_branches->entries - via_solve->entries).cwiseAbs().maxCoeff();
    rep.kv("max_entrywise_discrepancy", disc);
  }
  return rep.finish(0);
}

int cmd_spectrum(Report& rep, const std::string& file, bool reduced_only) {
  std::string content = read_file(file);
  rep.input(file, content);
  ParsedGraph pg = parse_graph(content);

  if (reduced_only) {
    auto roots =
        newton_reduced_roots(pg.graph, pg.structural_set, NewtonOptions{});
    std::vector<int> s = canonical_set(pg.graph, pg.structural_set);
    const int k = static_cast<int>(s.size());
    rep.kv("mode", std::string("reduced-only (grid-seeded Newton)"));
    rep.line("roots of det(R_S(lambda) - lambda I):");
    json jr = json::array();
    for (cplx lam : roots) {
      ReducedEvaluation r = reduce_linear_solve(pg.graph, s, lam);
      double res = std::abs(
          (r.entries - lam * Eigen::MatrixXcd::Identity(k, k)).determinant());
      rep.line("  " + format_complex(lam) +
               "  residual=" + format_double(res));
      jr.push_back({{"re", lam.real()}, {"im", lam.imag()}, {"residual", res}});
    }
    rep.j["roots"] = jr;
    return rep.finish(0);
  }

  SpectrumReport sr = reduced_spectrum(pg.graph, pg.structural_set);
  rep.kv("sigma", sigma_to_text(sr.sigma));
  rep.line("eigenvalues outside Sigma (with |det(R_S(lambda) - lambda I)|):");
  json jr = json::array();
  for (const auto& e : sr.reduced) {
    rep.line("  " + format_complex(e.lambda) +
             "  residual=" + format_double(e.residual));
    jr.push_back({{"re", e.lambda.real()},
                  {"im", e.lambda.imag()},
                  {"residual", e.residual}});
  }
  rep.j["reduced"] = jr;
  json je = json::array();
  if (!sr.excluded.empty()) {
    rep.line("eigenvalues in Sigma (reported, not matched):");
    for (cplx lam : sr.excluded) {
      rep.line("  " + format_complex(lam));
      je.push_back({{"re", lam.real()}, {"im", lam.imag()}});
    }
  }
  rep.j["excluded"] = je;
  return rep.finish(0);
}

int cmd_reconstruct(Report& rep, const std::string& file,
                    const std::string& lambda0_str, int k_index) {
  std::string content = read_file(file);
  rep.input(file, content);
  ParsedGraph pg = parse_graph(content);
  const std::vector<int> s = canonical_set(pg.graph, pg.structural_set);

  cplx lambda0;
  if (!lambda0_str.empty()) {
    lambda0 = parse_complex(lambda0_str);
  } else {
    SpectrumReport sr = reduced_spectrum(pg.graph, s);
    if (k_index < 1 || k_index > static_cast<int>(sr.reduced.size()))
      throw domain_error("k = " + std::to_string(k_index) +
                         " out of range: only " +
                         std::to_string(sr.reduced.size()) +
                         " reduced eigenvalues");
    lambda0 = sr.reduced[static_cast<size_t>(k_index - 1)].lambda;
  }
  rep.kv("lambda0", format_complex(lambda0));

  ReducedEvaluation r = reduce_linear_solve(pg.graph, s, lambda0);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(r.entries, true);
  if (es.info() != Eigen::Success)
    throw numeric_error("eigensolver failed on R_S(lambda0)");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i) - lambda0) <
        std::abs(es.eigenvalues()(best) - lambda0))
      best = i;
  double mismatch = std::abs(es.eigenvalues()(best) - lambda0);
  if (mismatch > 1e-6 * std::max(1.0, inf_norm(pg.graph)))
    throw domain_error(
        "lambda0 is not an eigenvalue of R_S(lambda0) within tolerance "
        "(nearest at distance " +
        format_double(mismatch) + ")");
  Eigen::VectorXcd v = es.eigenvectors().col(best);

  Eigen::VectorXcd u = reconstruct_eigenvector(pg.graph, s, lambda0, v);
  Eigen::MatrixXcd a = adjacency_matrix(pg.graph);
  double residual = (a * u - lambda0 * u).norm() / u.norm();

  rep.line("v (eigenvector of R_S(lambda0) on S):");
  json jv = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    rep.line("  " + std::to_string(s[static_cast<size_t>(i)]) + "  " +
             format_complex(v(i)));
    jv.push_back({{"re", v(i).real()}, {"im", v(i).imag()}});
  }
  rep.j["v"] = jv;
  rep.line("u = Phi_S(lambda0) v:");
  json ju = json::array();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    rep.line("  " + std::to_string(i + 1) + "  " + format_complex(u(i)));
    ju.push_back({{"re", u(i).real()}, {"im", u(i).imag()}});
  }
  rep.j["u"] = ju;
  rep.kv("residual", residual);
  return rep.finish(0);
}

int cmd_markov_stationary(Report& rep, const std::string& file, int window,
                          double tol) {
  std::string content = read_file(file);
  rep.input(file, content);
  FamilyParams p = parse_params(content);
  validate_params(p);
  Reduced2x2 red = reduced_2x2(p, tol);
  StationaryMeasure sm = stationary_closed_form(p, tol, window);
  rep.kv("window", window);
  rep.kv("tol", tol);
  rep.kv("s", red.s);
  rep.line("reduced 2x2 matrix at lambda = 1:");
  rep.text += matrix_to_text(red.m.cast<cplx>());
  rep.j["reduced_2x2"] = matrix_to_json(red.m.cast<cplx>());
  rep.kv("v", "(" + format_double(sm.v(0)) + ", " + format_double(sm.v(1)) + ")");
  rep.line("stationary measure q:");
  json jq = json::array();
  for (int i = 0; i < window; ++i) {
    rep.line("  " + std::to_string(i + 1) + "  " + format_double(sm.q(i)));
    jq.push_back(sm.q(i));
  }
  rep.j["q"] = jq;
  rep.kv("tail_bound", sm.tail_bound);
  rep.kv("mass_check", sm.q.sum() + sm.tail_bound);
  rep.truncation("reduced_2x2", red.report);
  return rep.finish(0);
}

int cmd_markov_convergence(Report& rep, const std::string& file,
                           std::vector<int> n_list, double tol) {
  std::string content = read_file(file);
  rep.input(file, content);
  FamilyParams p = parse_params(content);
  validate_params(p);
  if (n_list.empty()) n_list = {3, 5, 8, 12};
  auto rows = truncation_convergence(p, n_list, tol);
  rep.kv("tol", tol);
  rep.line("n      gap = ||w - w_n||_{1,inf}   2 max_{i>=n} b_i        2 C rho^n (bound)       tv_distance");
  json jt = json::array();
  for (const auto& row : rows) {
    double bound = 2 * p.C * std::pow(p.rho, row.n);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6d %-25.15g %-23.15g %-23.15g %.15g",
                  row.n, row.gap, row.two_max_b, bound, row.tv_distance);
    rep.line(buf);
    jt.push_back({{"n", row.n},
                  {"gap", row.gap},
                  {"two_max_b", row.two_max_b},
                  {"bound_2Crhon", bound},
                  {"tv_distance", row.tv_distance}});
  }
  rep.j["table"] = jt;
  return rep.finish(0);
}

int cmd_markov_simulate(Report& rep, const std::string& file,
                        std::uint64_t steps, std::uint64_t seed, int window,
                        double tol) {
  std::string content = read_file(file);
  rep.input(file, content);
  FamilyParams p = parse_params(content);
  validate_params(p);
  McResult mc = monte_carlo_stationary(p, steps, seed, window);
  StationaryMeasure sm = stationary_closed_form(p, tol, window);
  double tv = tv_distance_windowed(mc.freq, mc.above_window, sm.q,
                                   sm.tail_bound);
  rep.kv("steps", static_cast<double>(steps));
  rep.kv("seed", static_cast<double>(seed));
  rep.kv("window", window);
  rep.line("occupation frequencies:");
  json jf = json::array();
  for (int i = 0; i < window; ++i) {
    rep.line("  " + std::to_string(i + 1) + "  " + format_double(mc.freq(i)));
    jf.push_back(mc.freq(i));
  }
  rep.j["freq"] = jf;
  rep.kv("above_window_mass", mc.above_window);
  rep.kv("tv_distance_to_closed_form", tv);
  return rep.finish(0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isospectral graph reduction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_mode = false, no_timestamp = false;
  app.add_flag("--json", json_mode, "emit a machine-readable JSON report");
  app.add_flag("--no-timestamp", no_timestamp,
               "omit wall-clock duration from the report");

  std::string file, lambda_str, lambda0_str, method = "solve";
  int k_index = 1, window = 60;
  double tol = 1e-10;
  std::uint64_t steps = 1000000, seed = 1;
  std::vector<int> n_list;
  bool reduced_only = false;

  auto* check = app.add_subcommand("check", "verify the structural set");
  check->add_option("file", file, "graph file")->required();

  auto* reduce = app.add_subcommand("reduce", "evaluate R_S(lambda)");
  reduce->add_option("file", file, "graph file")->required();
  reduce->add_option("--lambda", lambda_str, "evaluation point")->required();
  reduce->add_option("--method", method, "branches | solve | both")
      ->check(CLI::IsMember({"branches", "solve", "both"}));

  auto* spectrum = app.add_subcommand("spectrum", "spectrum report");
  spectrum->add_option("file", file, "graph file")->required();
  spectrum->add_flag("--reduced-only", reduced_only,
                     "grid-seeded Newton on det(R_S(lambda) - lambda I)");

  auto* reconstruct =
      app.add_subcommand("reconstruct", "reconstruct an eigenvector");
  reconstruct->add_option("file", file, "graph file")->required();
  reconstruct->add_option("--lambda0", lambda0_str,
                          "eigenvalue (defaults to the k-th reduced one)");
  reconstruct->add_option("--k", k_index, "reduced eigenvalue index (1-based)");

  auto* markov = app.add_subcommand("markov", "Markov-family solver");
  markov->require_subcommand(1);
  auto* stationary =
      markov->add_subcommand("stationary", "closed-form stationary measure");
  stationary->add_option("file", file, "params file")->required();
  stationary->add_option("--window", window, "report window");
  stationary->add_option("--tol", tol, "truncation tolerance");
  auto* convergence =
      markov->add_subcommand("convergence", "truncation convergence table");
  convergence->add_option("file", file, "params file")->required();
  convergence->add_option("--n-list", n_list, "truncation orders")
      ->delimiter(',');
  convergence->add_option("--tol", tol, "truncation tolerance");
  auto* simulate = markov->add_subcommand("simulate", "Monte Carlo check");
  simulate->add_option("file", file, "params file")->required();
  simulate->add_option("--steps", steps, "number of transitions");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--window", window, "report window");
  simulate->add_option("--tol", tol, "closed-form tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  Report rep;
  rep.json_mode = json_mode;
  rep.no_timestamp = no_timestamp;
  rep.echo_command(argc, argv);

  try {
    if (check->parsed()) return cmd_check(rep, file);
    if (reduce->parsed()) return cmd_reduce(rep, file, lambda_str, method);
    if (spectrum->parsed()) return cmd_spectrum(rep, file, reduced_only);
    if (reconstruct->parsed())
      return cmd_reconstruct(rep, file, lambda0_str, k_index);
    if (stationary->parsed())
      return cmd_markov_stationary(rep, file, window, tol);
    if (convergence->parsed())
      return cmd_markov_convergence(rep, file, n_list, tol);
    if (simulate->parsed())
      return cmd_markov_simulate(rep, file, steps, seed, window, tol);
  } catch (const parse_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
