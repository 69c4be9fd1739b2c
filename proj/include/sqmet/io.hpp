#pragma once

// File loading and JSON serialization for experiment results. Kept separate
// from the numeric headers so that only consumers of the reporting layer
// depend on the vendored JSON library.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sqmet/estimator.hpp"
#include "sqmet/netdsl.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet::io {

inline std::string load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

inline netdsl::NetworkSpec load_network(const std::string& path) {
  return netdsl::parse(load_file(path));
}

// Resolves the input-stage option: "auto" means the identity (the protocol
// leaves the non-adapted stage arbitrary); otherwise a phi-independent
// network file evaluated at phi = 0.
inline UnitaryMatrix resolve_input_stage(const std::string& option, int modes) {
  if (option == "auto" || option.empty()) return UnitaryMatrix::identity(modes);
  const netdsl::NetworkSpec spec = load_network(option);
  if (spec.modes != modes)
    throw std::invalid_argument("input stage '" + option + "' has " +
                                std::to_string(spec.modes) + " modes, network has " +
                                std::to_string(modes));
  if (spec.depends_on_phi())
    throw std::invalid_argument("input stage '" + option +
                                "' must not depend on phi (only the network under "
                                "estimation carries the parameter)");
  return netdsl::evaluate(spec, 0.0);
}

inline nlohmann::json to_json(const ScalingResult& r) {
  nlohmann::json records = nlohmann::json::array();
  for (const ScalingRecord& rec : r.records)
    records.push_back({{"N", rec.n},
                       {"rmse", rec.rmse},
                       {"bias", rec.bias},
                       {"crb", rec.crb},
                       {"fi_exact", rec.fi_exact},
                       {"fi_asymptotic", rec.fi_asymptotic},
                       {"fi_total_per_trial", rec.fi_exact * r.params.samples_per_trial}});
  return nlohmann::json{
      {"records", records},
      {"slope", r.slope},
      {"slope_stderr", r.slope_stderr},
      {"config",
       {{"phi", r.params.phi},
        {"k", r.params.k},
        {"c", r.params.c},
        {"N_grid", r.params.n_grid},
        {"m", r.params.samples_per_trial},
        {"trials", r.params.trials},
        {"seed", r.params.seed},
        {"baseline", r.params.baseline == BaselineKind::coherent ? "coherent" : "none"},
        {"window_scale", r.params.window_scale}}},
      {"metadata",
       {{"resource_convention",
         "N is the mean photon number per probe; fi_exact is per homodyne sample at the "
         "exactly adapted operating point; fi_total_per_trial = m * fi_exact; "
         "crb = 1/sqrt(m * fi_exact)"}}}};
}

}  // namespace sqmet::io
