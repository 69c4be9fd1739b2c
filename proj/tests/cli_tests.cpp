// End-to-end checks of the command-line tool: exit codes, CSV schemas,
// manifest emission and byte-identical re-runs. Takes the binary path and
// the source root as arguments.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool cond, const std::string& what) {
  if (!cond) {
    ++g_failures;
    std::cerr << "FAILED: " << what << "\n";
  }
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& cmd, const fs::path& scratch) {
  const fs::path out_path = scratch / "stdout.txt";
  const fs::path err_path = scratch / "stderr.txt";
  const std::string full = cmd + " > " + out_path.string() + " 2> " + err_path.string();
  const int raw = std::system(full.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

std::vector<std::vector<double>> parse_csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: cli_tests <sqmet-binary> <source-root>\n";
    return 2;
  }
  const std::string bin = fs::absolute(argv[1]).string();
  const fs::path root = fs::absolute(argv[2]);
  const fs::path scratch = fs::temp_directory_path() /
                           ("sqmet_cli_" + std::to_string(::getpid()));
  fs::create_directories(scratch);
  const std::string example = (root / "networks" / "example.net").string();
  const std::string input_stage = (root / "networks" / "input_stage.net").string();

  // oracle-check: shipped example passes at the 1e-10 gate.
  {
    const auto r = run(bin + " oracle-check --net " + example + " --trials 100 --seed 1" +
                           " --manifest " + (scratch / "oc.manifest.json").string(),
                       scratch);
    expect(r.exit_code == 0, "oracle-check exit code " + std::to_string(r.exit_code));
    expect(r.out.find("max |closed-form - covariance oracle|") != std::string::npos,
           "oracle-check report line missing");
    expect(fs::exists(scratch / "oc.manifest.json"), "oracle-check manifest missing");
  }

  // Corrupt network file: parse error with position, exit 2.
  {
    const fs::path bad = scratch / "bad.net";
    std::ofstream(bad) << "modes 2\nbs 1 1 0.1\n";
    const auto r = run(bin + " oracle-check --net " + bad.string() + " --trials 5" +
                           " --manifest " + (scratch / "bad.manifest.json").string(),
                       scratch);
    expect(r.exit_code == 2, "corrupt net exit code " + std::to_string(r.exit_code));
    expect(r.err.find("2:1") != std::string::npos, "parse error position missing: " + r.err);
  }

  // trials = 0 is a usage error.
  {
    const auto r = run(bin + " oracle-check --net " + example + " --trials 0", scratch);
    expect(r.exit_code == 2, "trials=0 exit code " + std::to_string(r.exit_code));
  }

  // fisher: k = 0 rejected with a message naming the requirement.
  {
    const auto r = run(bin + " fisher --net " + example + " --phi 1.0 --k 0 --N 100",
                       scratch);
    expect(r.exit_code == 2, "fisher k=0 exit code " + std::to_string(r.exit_code));
    expect(r.err.find("k must be nonzero") != std::string::npos,
           "fisher k=0 message: " + r.err);
  }

  // fisher table: stable schema, finite N = 1 row, ratio -> 1 for large N.
  {
    const auto r = run(bin + " fisher --net " + example + " --v-in " + input_stage +
                           " --phi 1.0 --k 0.25 --N 1,100,10000,1000000" + " --manifest " +
                           (scratch / "fisher.manifest.json").string(),
                       scratch);
    expect(r.exit_code == 0, "fisher exit code " + std::to_string(r.exit_code));
    expect(first_line(r.out) == "N,fi_exact,fi_asymptotic,ratio,crb",
           "fisher CSV header: " + first_line(r.out));
    const auto rows = parse_csv_rows(r.out);
    expect(rows.size() == 4, "fisher row count");
    for (const auto& row : rows)
      for (double v : row) expect(std::isfinite(v), "fisher row not finite");
    expect(std::abs(rows.back()[3] - 1.0) < 0.02,
           "fisher ratio at N=1e6 = " + std::to_string(rows.back()[3]));
  }

  // monitor: center point refocused exactly; schema stable.
  {
    const auto r = run(bin + " monitor --net " + example + " --v-in " + input_stage +
                           " --phi-cl 1.0 --c 1.0 --N 10000 --points 5 --manifest " +
                           (scratch / "monitor.manifest.json").string(),
                       scratch);
    expect(r.exit_code == 0, "monitor exit code " + std::to_string(r.exit_code));
    expect(first_line(r.out) == "phi,one_minus_p,ell_equiv,fi_exact,fi_ratio",
           "monitor CSV header: " + first_line(r.out));
    const auto rows = parse_csv_rows(r.out);
    expect(rows.size() == 5, "monitor row count");
    expect(rows[2][1] <= 1e-12, "monitor center 1-P = " + std::to_string(rows[2][1]));
    // Edge points: ell_equiv approaches (1/4) (d(l - l')/dphi)^2 c^2 = 0.01
    // for the example network.
    expect(std::abs(rows.front()[2] - 0.01) < 0.0015,
           "monitor edge ell_equiv = " + std::to_string(rows.front()[2]));
    expect(std::abs(rows.back()[2] - 0.01) < 0.0015,
           "monitor edge ell_equiv = " + std::to_string(rows.back()[2]));
    // FI ratio stays above rho(k, ell_point)/rho(k, 0) less 5%; for k = 1/4,
    // rho(1/4, ell)/rho(1/4, 0) = 1/(1 + 2 ell)^2.
    for (const auto& row : rows) {
      const double rho_ratio = 1.0 / ((1.0 + 2.0 * row[2]) * (1.0 + 2.0 * row[2]));
      expect(row[4] >= rho_ratio * 0.95,
             "monitor FI ratio " + std::to_string(row[4]) + " under floor");
    }
  }

  // monitor: too few points is a usage error.
  {
    const auto r = run(bin + " monitor --net " + example + " --phi-cl 1.0 --N 100 "
                           "--points 2",
                       scratch);
    expect(r.exit_code == 2, "points=2 exit code " + std::to_string(r.exit_code));
  }

  // scaling: tiny run writes CSV + JSON + manifest; re-run is byte-identical;
  // defaulted seed is recorded.
  {
    const fs::path cfg = scratch / "tiny.cfg";
    std::ofstream(cfg) << "net = " << example << "\nv_in = " << input_stage
                       << "\nphi = 1.0\nN_grid = 100, 1000\nm = 20\ntrials = 10\n";
    const std::string prefix_a = (scratch / "run_a").string();
    const std::string prefix_b = (scratch / "run_b").string();
    const auto ra = run(bin + " scaling " + cfg.string() + " --out " + prefix_a, scratch);
    expect(ra.exit_code == 0, "scaling exit code " + std::to_string(ra.exit_code));
    expect(ra.out.find("fitted slope") != std::string::npos, "scaling slope line missing");
    expect(fs::exists(prefix_a + ".csv") && fs::exists(prefix_a + ".json") &&
               fs::exists(prefix_a + ".manifest.json"),
           "scaling outputs missing");

    const std::string csv_a = slurp_file(prefix_a + ".csv");
    expect(first_line(csv_a) == "N,rmse,bias,crb,fi_exact,fi_asymptotic",
           "scaling CSV header: " + first_line(csv_a));

    const auto rb = run(bin + " scaling " + cfg.string() + " --out " + prefix_b, scratch);
    expect(rb.exit_code == 0, "scaling re-run exit code");
    expect(csv_a == slurp_file(prefix_b + ".csv"), "scaling CSV not byte-identical");

    const auto manifest = nlohmann::json::parse(slurp_file(prefix_a + ".manifest.json"),
                                                nullptr, /*allow_exceptions=*/false);
    expect(!manifest.is_discarded(), "manifest not valid JSON");
    if (!manifest.is_discarded()) {
      expect(manifest["config"]["seed"] == 0, "manifest seed not defaulted to 0");
      expect(manifest["config"]["seed_defaulted"] == true, "manifest seed_defaulted flag");
      expect(manifest["tool_version"].is_string(), "manifest tool_version missing");
    }
  }

  // scaling with the shipped experiment configs: the squeezed protocol shows
  // the 1/N slope, the coherent baseline the 1/sqrt(N) slope.
  {
    const auto check_slope = [&](const std::string& cfg, double lo, double hi) {
      const std::string prefix = (scratch / ("full_" + cfg)).string();
      const auto r = run(bin + " scaling " + (root / "configs" / cfg).string() +
                             " --out " + prefix,
                         scratch);
      expect(r.exit_code == 0, cfg + " exit code " + std::to_string(r.exit_code));
      const auto j = nlohmann::json::parse(slurp_file(prefix + ".json"), nullptr, false);
      expect(!j.is_discarded(), cfg + " JSON output invalid");
      if (!j.is_discarded()) {
        const double slope = j["slope"].get<double>();
        expect(slope >= lo && slope <= hi,
               cfg + " slope " + std::to_string(slope) + " outside [" +
                   std::to_string(lo) + ", " + std::to_string(hi) + "]");
      }
    };
    check_slope("scaling_squeezed.cfg", -1.1, -0.9);
    check_slope("scaling_coherent.cfg", -0.65, -0.4);
  }

  // scaling: config errors are listed exhaustively.
  {
    const fs::path cfg = scratch / "broken.cfg";
    std::ofstream(cfg) << "phi = 1.0\nm = 0\ntrials = -1\nbaseline = thermal\n";
    const auto r = run(bin + " scaling " + cfg.string() + " --out " +
                           (scratch / "broken").string(),
                       scratch);
    expect(r.exit_code == 2, "broken config exit code " + std::to_string(r.exit_code));
    for (const char* frag : {"net", "N_grid", "baseline"})
      expect(r.err.find(frag) != std::string::npos,
             std::string("broken config message lacks '") + frag + "': " + r.err);
  }

  // No subcommand: usage error.
  {
    const auto r = run(bin, scratch);
    expect(r.exit_code == 2, "bare invocation exit code " + std::to_string(r.exit_code));
  }

  fs::remove_all(scratch);
  if (g_failures == 0) {
    std::cout << "cli_tests: all checks passed\n";
    return 0;
  }
  std::cout << "cli_tests: " << g_failures << " check(s) failed\n";
  return 1;
}
