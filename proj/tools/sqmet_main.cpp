// Command-line front end: oracle-check, fisher, scaling and monitor
// subcommands over .net network files. Every run writes a JSON manifest so
// results can be reproduced bit-exactly.
//
// Exit codes: 0 success, 1 assertion/acceptance failure, 2 usage/parse error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqmet/io.hpp"
#include "sqmet/sqmet.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct ManifestBuilder {
  json j;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit ManifestBuilder(const std::string& command) {
    j["command"] = command;
    j["tool_version"] = SQMET_VERSION;
    j["inputs"] = json::object();
    j["outputs"] = json::array();
  }

  void add_input(const std::string& path) {
    j["inputs"][path] = "fnv1a64:" + hex64(fnv1a64(sqmet::io::load_file(path)));
  }

  void add_output(const std::string& path) { j["outputs"].push_back(path); }

  void write(const std::string& path) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    j["timing_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    sqmet::io::write_file(path, j.dump(2) + "\n");
  }
};

std::string default_manifest_path(const std::string& out, const std::string& command) {
  if (!out.empty()) return out + ".manifest.json";
  return command + "_manifest.json";
}

void emit_table(const std::string& header_csv, const std::vector<json>& rows,
                const std::string& format, const std::string& out,
                ManifestBuilder& manifest) {
  std::string text;
  if (format == "json") {
    text = json(rows).dump(2) + "\n";
  } else {
    text = header_csv + "\n";
    std::istringstream hs(header_csv);
    std::vector<std::string> cols;
    for (std::string col; std::getline(hs, col, ',');) cols.push_back(col);
    for (const json& row : rows) {
      std::string line;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) line += ',';
        line += sqmet::format_double(row.at(cols[i]).get<double>());
      }
      text += line + "\n";
    }
  }
  if (out.empty()) {
    std::cout << text;
  } else {
    sqmet::io::write_file(out, text);
    manifest.add_output(out);
  }
}

int cmd_oracle_check(const std::string& net_file, int trials, std::uint64_t seed,
                     const std::string& manifest_path) {
  ManifestBuilder manifest("oracle-check");
  manifest.add_input(net_file);
  manifest.j["config"] = {{"net", net_file}, {"trials", trials}, {"seed", seed}};

  const sqmet::netdsl::NetworkSpec spec = sqmet::io::load_network(net_file);
  sqmet::rng::SplitMix64 gen(sqmet::rng::derive_seed(seed, 0xa11ce));
  double worst = 0.0;
  double worst_sympl = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const auto v_in = sqmet::random_unitary(spec.modes, gen.next());
    const auto v_out = sqmet::random_unitary(spec.modes, gen.next());
    const double phi = (2.0 * gen.uniform01() - 1.0) * std::numbers::pi;
    const double theta = (2.0 * gen.uniform01() - 1.0) * std::numbers::pi;
    const sqmet::ProbeSpec probe(3.0 * gen.uniform01());
    const auto u = sqmet::netdsl::evaluate(spec, phi);
    const double closed =
        sqmet::quadrature_variance(sqmet::reduced_model(v_in, u, v_out, probe), theta);
    const double oracle = sqmet::oracle_variance(v_in, u, v_out, probe, theta);
    worst = std::max(worst, std::abs(closed - oracle));

    sqmet::CovarianceState st = sqmet::CovarianceState::vacuum(spec.modes);
    st.apply_squeezer(0, probe.r);
    st.apply_unitary(v_in);
    st.apply_unitary(u);
    st.apply_unitary(v_out);
    worst_sympl = std::min(worst_sympl, st.min_symplectic_eigenvalue());
  }

  const bool ok = worst <= 1e-10;
  std::cout << "oracle-check: " << trials << " trials on " << net_file << "\n"
            << "  max |closed-form - covariance oracle| = " << worst << "\n"
            << "  min symplectic eigenvalue             = " << worst_sympl
            << " (physical bound 0.5)\n"
            << (ok ? "  OK (tolerance 1e-10)" : "  FAILED (tolerance 1e-10)") << "\n";
  manifest.j["result"] = {{"max_deviation", worst},
                          {"min_symplectic_eigenvalue", worst_sympl},
                          {"ok", ok}};
  manifest.write(manifest_path);
  return ok ? kExitOk : kExitFailure;
}

int cmd_fisher(const std::string& net_file, const std::string& v_in_file, double phi,
               double k, double ell, const std::vector<double>& n_list,
               const std::string& format, const std::string& out,
               const std::string& manifest_path) {
  ManifestBuilder manifest("fisher");
  manifest.add_input(net_file);
  if (v_in_file != "auto") manifest.add_input(v_in_file);
  manifest.j["config"] = {{"net", net_file}, {"v_in", v_in_file}, {"phi", phi},
                          {"k", k},          {"ell", ell},        {"N", n_list}};

  const sqmet::netdsl::NetworkSpec spec = sqmet::io::load_network(net_file);
  const sqmet::UnitaryMatrix v_in = sqmet::io::resolve_input_stage(v_in_file, spec.modes);
  const sqmet::UnitaryMatrix v_out = sqmet::build_refocusing_output(spec, v_in, phi);

  bool dgamma_warn = false;
  sqmet::dgamma(spec, v_in, v_out, phi, &dgamma_warn);
  if (dgamma_warn)
    std::cerr << "warning: |dgamma/dphi| < 1e-9 at phi = " << phi
              << "; the protocol assumes a nonzero phase slope\n";

  std::vector<json> rows;
  for (double n : n_list) {
    // Operating point per the tuning conditions: theta = gamma + pi/2 + k/N
    // and P = 1 - ell/N (leakage modeled as phi-independent).
    const sqmet::PhaseSlope s = sqmet::phase_slope(spec, v_in, v_out, phi);
    const sqmet::TuningParams tuning{k, ell, sqmet::tuned_theta(s.gamma, k, n)};
    const sqmet::FisherReport rep = sqmet::fisher_report(spec, v_in, v_out, phi, n, tuning);
    rows.push_back({{"N", n},
                    {"fi_exact", rep.exact_fi_per_sample},
                    {"fi_asymptotic", rep.asymptotic_fi},
                    {"ratio", rep.exact_fi_per_sample / rep.asymptotic_fi},
                    {"crb", rep.crb}});
  }
  emit_table("N,fi_exact,fi_asymptotic,ratio,crb", rows, format, out, manifest);
  manifest.write(manifest_path);
  return kExitOk;
}

int cmd_scaling(const std::string& config_file, const std::string& out_prefix,
                const std::string& manifest_path) {
  ManifestBuilder manifest("scaling");
  manifest.add_input(config_file);

  const sqmet::ExperimentConfig cfg =
      sqmet::parse_experiment_config(sqmet::io::load_file(config_file));
  // Paths inside the config are relative to the config file's directory.
  const std::filesystem::path base = std::filesystem::path(config_file).parent_path();
  const auto resolve = [&](const std::string& p) {
    if (p == "auto" || p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  const std::string net_path = resolve(cfg.net);
  const std::string v_in_path = resolve(cfg.v_in);
  manifest.add_input(net_path);
  if (v_in_path != "auto") manifest.add_input(v_in_path);

  const sqmet::netdsl::NetworkSpec spec = sqmet::io::load_network(net_path);
  const sqmet::UnitaryMatrix v_in = sqmet::io::resolve_input_stage(v_in_path, spec.modes);

  const sqmet::ScalingResult result = sqmet::run_scaling(spec, v_in, cfg.params);

  const std::string csv_path = out_prefix + ".csv";
  const std::string json_path = out_prefix + ".json";
  sqmet::io::write_file(csv_path, sqmet::to_csv(result));
  sqmet::io::write_file(json_path, sqmet::io::to_json(result).dump(2) + "\n");
  manifest.add_output(csv_path);
  manifest.add_output(json_path);

  json config_echo = sqmet::io::to_json(result)["config"];
  config_echo["net"] = cfg.net;
  config_echo["v_in"] = cfg.v_in;
  config_echo["seed_defaulted"] = !cfg.seed_given;
  manifest.j["config"] = config_echo;

  std::printf("fitted slope of log(rmse) vs log(N): %.4f +- %.4f\n", result.slope,
              result.slope_stderr);
  std::printf("wrote %s, %s\n", csv_path.c_str(), json_path.c_str());
  manifest.j["result"] = {{"slope", result.slope}, {"slope_stderr", result.slope_stderr}};
  manifest.write(manifest_path);
  return kExitOk;
}

int cmd_monitor(const std::string& net_file, const std::string& v_in_file, double phi_cl,
                double c, double n, int points, double k, const std::string& format,
                const std::string& out, const std::string& manifest_path) {
  ManifestBuilder manifest("monitor");
  manifest.add_input(net_file);
  if (v_in_file != "auto") manifest.add_input(v_in_file);
  manifest.j["config"] = {{"net", net_file}, {"v_in", v_in_file}, {"phi_cl", phi_cl},
                          {"c", c},          {"N", n},            {"points", points},
                          {"k", k}};

  const sqmet::netdsl::NetworkSpec spec = sqmet::io::load_network(net_file);
  const sqmet::UnitaryMatrix v_in = sqmet::io::resolve_input_stage(v_in_file, spec.modes);
  const sqmet::ProbeSpec probe = sqmet::ProbeSpec::from_mean_photons(n);

  // The stage is adapted once, at phi_cl; only the local-oscillator phase
  // tracks the scanned operating point.
  const sqmet::UnitaryMatrix v_out = sqmet::build_refocusing_output(spec, v_in, phi_cl);

  const double half = c / std::sqrt(n);
  std::vector<json> rows;
  for (int i = 0; i < points; ++i) {
    const double phi = phi_cl - half + 2.0 * half * i / (points - 1);
    const sqmet::PhaseSlope s = sqmet::phase_slope(spec, v_in, v_out, phi);
    const double theta = sqmet::tuned_theta(s.gamma, k, n);
    const sqmet::FisherPoint f = sqmet::exact_fisher_at(spec, v_in, v_out, phi, probe, theta);
    const double one_minus_p = std::max(0.0, 1.0 - s.p);
    const double fi_ideal = sqmet::asymptotic_fisher(k, 0.0, s.dgamma, n);
    rows.push_back({{"phi", phi},
                    {"one_minus_p", one_minus_p},
                    {"ell_equiv", one_minus_p * n},
                    {"fi_exact", f.fi},
                    {"fi_ratio", f.fi / fi_ideal}});
  }
  emit_table("phi,one_minus_p,ell_equiv,fi_exact,fi_ratio", rows, format, out, manifest);
  manifest.write(manifest_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squeezed-probe interferometry toolkit: Gaussian simulation, Fisher "
               "information and Monte Carlo scaling experiments for a parameter "
               "distributed across a passive linear network"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string net_file, v_in_file = "auto", out, manifest_path, format = "csv";
  std::uint64_t seed = 0;
  double phi = 0.0, k = 0.25, ell = 0.0, c = 1.0;

  auto* oracle = app.add_subcommand(
      "oracle-check", "Check the closed-form variance against the covariance oracle on "
                      "random stage/probe draws (exit 0 iff max deviation <= 1e-10)");
  int trials = 100;
  oracle->add_option("--net", net_file, "network file (.net)")->required();
  oracle->add_option("--trials", trials, "number of random draws")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--seed", seed, "RNG seed");
  oracle->add_option("--manifest", manifest_path, "manifest path");

  auto* fisher = app.add_subcommand(
      "fisher", "Exact vs asymptotic Fisher information per N at the tuned operating "
                "point (CSV columns: N,fi_exact,fi_asymptotic,ratio,crb)");
  std::vector<double> n_list;
  fisher->add_option("--net", net_file, "network file (.net)")->required();
  fisher->add_option("--v-in", v_in_file, "input stage .net file, or 'auto' (identity)");
  fisher->add_option("--phi", phi, "parameter value")->required();
  fisher->add_option("--k", k, "local-oscillator detuning constant (nonzero)");
  fisher->add_option("--ell", ell, "mean photons lost to unmeasured channels (>= 0)")
      ->check(CLI::NonNegativeNumber);
  fisher->add_option("--N", n_list, "photon numbers (comma separated)")
      ->required()
      ->delimiter(',');
  fisher->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  fisher->add_option("--out", out, "output file (default: stdout)");
  fisher->add_option("--manifest", manifest_path, "manifest path");

  auto* scaling = app.add_subcommand(
      "scaling", "Run the RMSE-vs-N Monte Carlo experiment from a key=value config file; "
                 "writes CSV + JSON + manifest and prints the fitted slope");
  std::string config_file, out_prefix = "scaling";
  scaling->add_option("config", config_file, "experiment config file")->required();
  scaling->add_option("--out", out_prefix, "output path prefix (default: 'scaling')");
  scaling->add_option("--manifest", manifest_path, "manifest path");

  auto* monitor = app.add_subcommand(
      "monitor", "Fix the adapted stage at phi_cl and scan the true phi over "
                 "[phi_cl - c/sqrt(N), phi_cl + c/sqrt(N)] (CSV columns: "
                 "phi,one_minus_p,ell_equiv,fi_exact,fi_ratio)");
  double n_photons = 0.0;
  int points = 21;
  monitor->add_option("--net", net_file, "network file (.net)")->required();
  monitor->add_option("--v-in", v_in_file, "input stage .net file, or 'auto' (identity)");
  monitor->add_option("--phi-cl", phi, "stage adaptation point")->required();
  monitor->add_option("--c", c, "scan half-width constant")->check(CLI::PositiveNumber);
  monitor->add_option("--N", n_photons, "mean photon number")
      ->required()
      ->check(CLI::PositiveNumber);
  monitor->add_option("--points", points, "number of scan points (>= 3)");
  monitor->add_option("--k", k, "local-oscillator detuning constant (nonzero)");
  monitor->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  monitor->add_option("--out", out, "output file (default: stdout)");
  monitor->add_option("--manifest", manifest_path, "manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*oracle) {
      if (manifest_path.empty()) manifest_path = default_manifest_path("", "oracle_check");
      return cmd_oracle_check(net_file, trials, seed, manifest_path);
    }
    if (*fisher) {
      if (k == 0.0) {
        std::cerr << "error: k must be nonzero (at k = 0 the asymptotic Fisher "
                     "information vanishes and the outcome distribution is locally "
                     "insensitive to phi)\n";
        return kExitUsage;
      }
      if (manifest_path.empty()) manifest_path = default_manifest_path(out, "fisher");
      return cmd_fisher(net_file, v_in_file, phi, k, ell, n_list, format, out,
                        manifest_path);
    }
    if (*scaling) {
      if (manifest_path.empty()) manifest_path = out_prefix + ".manifest.json";
      return cmd_scaling(config_file, out_prefix, manifest_path);
    }
    if (*monitor) {
      if (points < 3) {
        std::cerr << "error: --points must be >= 3\n";
        return kExitUsage;
      }
      if (k == 0.0) {
        std::cerr << "error: k must be nonzero\n";
        return kExitUsage;
      }
      if (manifest_path.empty()) manifest_path = default_manifest_path(out, "monitor");
      return cmd_monitor(net_file, v_in_file, phi, c, n_photons, points, k, format, out,
                         manifest_path);
    }
  } catch (const sqmet::netdsl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const sqmet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
