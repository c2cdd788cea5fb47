// End-to-end checks of the command-line tool: exit codes, report contents,
// and byte determinism. Run as: test_cli <path-to-isored> <data-dir>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

#define CHECK_MSG(cond, msg)                                              \
  do {                                                                    \
    if (!(cond)) {                                                        \
      ++g_failures;                                                       \
      std::cerr << "FAIL " << __FILE__ << ":" << __LINE__ << "  " << msg  \
                << "\n";                                                  \
    }                                                                     \
  } while (0)

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& cmd) {
  RunResult res;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: test_cli <isored-binary> <data-dir>\n";
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path data = argv[2];
  const fs::path tmp =
      fs::temp_directory_path() / ("isored_cli_test_" + std::to_string(getpid()));
  fs::create_directories(tmp);

  const std::string two_cycle = (data / "two_cycle.graph").string();
  const std::string interior_cycle = (data / "interior_cycle.graph").string();
  const std::string ladder = (data / "ladder.graph").string();
  const std::string params = (data / "reference.params").string();

  // check: structural verdict, depth table, exit code 0.
  {
    auto r = run(bin + " check " + two_cycle);
    CHECK_MSG(r.exit_code == 0, "check exit code: " << r.out);
    CHECK_MSG(contains(r.out, "verdict: structural"), "verdict line");
    CHECK_MSG(contains(r.out, "sigma: {0}"), "sigma line: " << r.out);
    CHECK_MSG(contains(r.out, "depth table:"), "depth table");
  }

  // check: interior cycle gives exit 1 and a witness.
  {
    auto r = run(bin + " check " + interior_cycle);
    CHECK_MSG(r.exit_code == 1, "non-structural exit code");
    CHECK_MSG(contains(r.out, "not structural"), "not structural line");
    CHECK_MSG(contains(r.out, "witness_cycle: 2 -> 3 -> 2"),
              "witness cycle: " << r.out);
  }

  // parse errors exit with 2 and carry a line number.
  {
    fs::path broken = tmp / "broken.graph";
    write_file(broken, "n 2\nS 1\ne 1 oops 1\n");
    auto r = run(bin + " check " + broken.string());
    CHECK_MSG(r.exit_code == 2, "parse error exit code");
    CHECK_MSG(contains(r.out, "line 3"), "line number: " << r.out);

    fs::path empty_s = tmp / "empty_s.graph";
    write_file(empty_s, "n 2\nS\n");
    CHECK_MSG(run(bin + " check " + empty_s.string()).exit_code == 2,
              "empty S exit code");

    CHECK_MSG(run(bin + " check " + (tmp / "nope.graph").string()).exit_code ==
                  2,
              "missing file exit code");
  }

  // reduce: hand value, Sigma rejection, dual-method discrepancy.
  {
    auto r = run(bin + " reduce " + two_cycle + " --lambda 2");
    CHECK_MSG(r.exit_code == 0, "reduce exit");
    CHECK_MSG(contains(r.out, "[0.5]"), "reduce value: " << r.out);

    auto rs = run(bin + " reduce " + two_cycle + " --lambda 0");
    CHECK_MSG(rs.exit_code == 1, "lambda in Sigma exit");
    CHECK_MSG(contains(rs.out, "offending sigma"), "sigma message");

    auto rb = run(bin + " reduce " + ladder + " --lambda 1.5-0.25i" +
                  " --method both");
    CHECK_MSG(rb.exit_code == 0, "reduce both exit: " << rb.out);
    CHECK_MSG(contains(rb.out, "max_entrywise_discrepancy"), "discrepancy");
    auto pos = rb.out.find("max_entrywise_discrepancy: ");
    double disc = std::stod(rb.out.substr(pos + 27));
    CHECK_MSG(disc < 1e-10, "discrepancy magnitude " << disc);

    // S = V: the reduction echoes the weight matrix at any lambda.
    fs::path full_s = tmp / "full_s.graph";
    write_file(full_s, "n 2\nS 1 2\ne 1 2 0.25\ne 2 1 4\n");
    auto rf = run(bin + " reduce " + full_s.string() + " --lambda 3+2i");
    CHECK_MSG(rf.exit_code == 0, "reduce S=V exit");
    CHECK_MSG(contains(rf.out, "[0  0.25]") && contains(rf.out, "[4  0]"),
              "S=V echoes A: " << rf.out);
  }

  // spectrum: both modes find {-1, 1} for the two-cycle.
  {
    auto r = run(bin + " --json --no-timestamp spectrum " + two_cycle);
    CHECK_MSG(r.exit_code == 0, "spectrum exit");
    auto doc = nlohmann::json::parse(r.out, nullptr, false);
    CHECK_MSG(!doc.is_discarded(), "spectrum json parses");
    CHECK_MSG(doc["reduced"].size() == 2, "two reduced eigenvalues");
    CHECK_MSG(std::abs(double(doc["reduced"][0]["re"]) - 1.0) < 1e-9 &&
                  std::abs(double(doc["reduced"][1]["re"]) + 1.0) < 1e-9,
              "eigenvalues +-1: " << r.out);
    CHECK_MSG(double(doc["reduced"][0]["residual"]) < 1e-10, "residual");

    auto rn =
        run(bin + " --json --no-timestamp spectrum " + two_cycle +
            " --reduced-only");
    CHECK_MSG(rn.exit_code == 0, "reduced-only exit");
    auto dn = nlohmann::json::parse(rn.out, nullptr, false);
    CHECK_MSG(!dn.is_discarded(), "newton json parses");
    CHECK_MSG(dn["roots"].size() == 2, "two newton roots: " << rn.out);
    CHECK_MSG(std::abs(double(dn["roots"][0]["re"]) - 1.0) < 1e-6 &&
                  std::abs(double(dn["roots"][1]["re"]) + 1.0) < 1e-6,
              "newton roots +-1");
  }

  // reconstruct: lambda0 = 1 gives u = (1, 1) with a tiny residual.
  {
    auto r = run(bin + " reconstruct " + two_cycle + " --lambda0 1");
    CHECK_MSG(r.exit_code == 0, "reconstruct exit");
    auto pos = r.out.find("residual: ");
    CHECK_MSG(pos != std::string::npos, "residual line");
    CHECK_MSG(std::stod(r.out.substr(pos + 10)) < 1e-12, "residual size");

    auto rk = run(bin + " --json --no-timestamp reconstruct " + two_cycle +
                  " --k 2");
    CHECK_MSG(rk.exit_code == 0, "reconstruct k exit");
    auto dk = nlohmann::json::parse(rk.out, nullptr, false);
    CHECK_MSG(!dk.is_discarded(), "reconstruct json parses");
    CHECK_MSG(std::abs(std::stod(dk["lambda0"].get<std::string>()) + 1.0) <
                  1e-9,
              "k-th eigenvalue: " << rk.out);

    auto rbad = run(bin + " reconstruct " + two_cycle + " --lambda0 0.5");
    CHECK_MSG(rbad.exit_code == 1, "non-eigenvalue exit: " << rbad.out);
  }

  // markov stationary: mass check and tail bound.
  {
    auto r = run(bin + " markov stationary " + params +
                 " --window 40 --tol 1e-8");
    CHECK_MSG(r.exit_code == 0, "stationary exit: " << r.out);
    auto pos = r.out.find("mass_check: ");
    CHECK_MSG(pos != std::string::npos, "mass_check line");
    CHECK_MSG(std::abs(std::stod(r.out.substr(pos + 12)) - 1.0) < 1e-10,
              "mass close to 1");

    fs::path bad = tmp / "bad.params";
    write_file(bad,
               "family = geometric\nalpha = 0.5\nbeta = 2\nrho = 0.6\nC = "
               "1.01\n");
    auto rb = run(bin + " markov stationary " + bad.string());
    CHECK_MSG(rb.exit_code == 1, "invalid params exit");
    CHECK_MSG(contains(rb.out, "(B2)"), "names the condition: " << rb.out);
  }

  // markov convergence: the gap column matches 2 max b_i.
  {
    auto r = run(bin + " markov convergence " + params + " --n-list 3,5,8");
    CHECK_MSG(r.exit_code == 0, "convergence exit: " << r.out);
    CHECK_MSG(contains(r.out, "tv_distance"), "table header");
  }

  // markov simulate: deterministic per seed.
  {
    std::string cmd = bin + " --no-timestamp markov simulate " + params +
                      " --steps 50000 --seed 7 --window 30 --tol 1e-6";
    auto a = run(cmd);
    auto b = run(cmd);
    CHECK_MSG(a.exit_code == 0, "simulate exit: " << a.out);
    CHECK_MSG(a.out == b.out, "simulate byte determinism");
    auto pos = a.out.find("tv_distance_to_closed_form: ");
    CHECK_MSG(pos != std::string::npos, "tv line");
    CHECK_MSG(std::stod(a.out.substr(pos + 28)) < 0.05, "tv magnitude");
  }

  // --json emits a parseable document mirroring the text report.
  {
    auto r = run(bin + " --json --no-timestamp markov stationary " + params +
                 " --window 40 --tol 1e-8");
    CHECK_MSG(r.exit_code == 0, "json exit");
    auto doc = nlohmann::json::parse(r.out, nullptr, false);
    CHECK_MSG(!doc.is_discarded(), "json parses");
    CHECK_MSG(doc["q"].size() == 40, "json q size");
    CHECK_MSG(doc["input"].contains("fnv1a64"), "json digest");

    auto rr = run(bin + " --json --no-timestamp check " + two_cycle);
    auto doc2 = nlohmann::json::parse(rr.out, nullptr, false);
    CHECK_MSG(!doc2.is_discarded(), "check json parses");
    CHECK_MSG(doc2["verdict"] == "structural", "json verdict");
  }

  // Byte determinism of a full report without timestamps.
  {
    std::string cmd =
        bin + " --no-timestamp spectrum " + ladder;
    CHECK_MSG(run(cmd).out == run(cmd).out, "spectrum determinism");
  }

  // Unknown flags and missing subcommands are input errors.
  {
    CHECK_MSG(run(bin + " frobnicate").exit_code == 2, "unknown subcommand");
    CHECK_MSG(run(bin + " reduce " + two_cycle).exit_code == 2,
              "missing required --lambda");
  }

  fs::remove_all(tmp);
  if (g_failures == 0) {
    std::cout << "test_cli: all checks passed\n";
    return 0;
  }
  std::cerr << "test_cli: " << g_failures << " failures\n";
  return 1;
}
