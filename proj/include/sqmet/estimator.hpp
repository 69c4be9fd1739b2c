#pragma once

// Maximum-likelihood estimation of phi from homodyne samples under a fixed
// adaptation plan, and the scaling-experiment runner producing RMSE-vs-N
// records with fitted log-log slopes. A coherent-probe baseline with the
// same network and measurement isolates the effect of the probe state.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqmet/adaptive.hpp"
#include "sqmet/gaussian.hpp"
#include "sqmet/metrology.hpp"
#include "sqmet/netdsl.hpp"
#include "sqmet/rng.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet {

enum class BaselineKind { none, coherent };

struct ScalingParams {
  double phi = 0.0;              // true parameter value
  double k = 0.25;               // local-oscillator detuning, theta offset k/N
  double c = 1.0;                // pre-estimation noise scale, sd = c/sqrt(N)
  std::vector<double> n_grid;    // mean photon numbers, strictly increasing
  int samples_per_trial = 200;   // m, held constant across N
  int trials = 200;              // nu
  std::uint64_t seed = 0;
  BaselineKind baseline = BaselineKind::none;
  double window_scale = 5.0;     // MLE search half-width = window_scale * c / sqrt(N)
  int theta_sign = +1;
};

struct ScalingRecord {
  double n = 0.0;
  double rmse = 0.0;
  double bias = 0.0;
  double crb = 0.0;           // 1/sqrt(m * fi_exact), exactly adapted plan
  double fi_exact = 0.0;      // per-sample FI of the run's probe model
  double fi_asymptotic = 0.0; // 8 rho(k, 0) dgamma^2 N^2
};

struct ScalingResult {
  std::vector<ScalingRecord> records;
  double slope = 0.0;
  double slope_stderr = 0.0;
  ScalingParams params;
};

namespace detail {

// Maximizer for likelihoods of the form L(phi) = score(profile(phi)) where
// score is single-peaked in the profile value with peak at v_star (for the
// variance model the profile is sigma^2(phi) and v_star the sample second
// moment; for the mean model the profile is mu(phi)). Every phi with
// profile(phi) = v_star is an exact global maximizer, and near the
// refocusing dip such roots come in pairs, so all of them are located (grid
// scan, golden-section refinement of interior extrema, bisection for root
// polish) and ties are broken toward the candidate nearest ref.
inline double maximize_profile(const std::function<double(double)>& profile,
                               const std::function<double(double)>& score, double v_star,
                               double lo, double hi, double ref) {
  constexpr int kGrid = 64;
  const double tol = 1e-10 * std::max(0.5 * (hi - lo), 1e-300);
  const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);

  std::vector<double> xs(kGrid), cs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = lo + (hi - lo) * i / (kGrid - 1);
    cs[i] = profile(xs[i]);
  }

  std::vector<double> candidates{lo, hi};

  const auto bisect_root = [&](double a, double b, double fa) {
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
      const double mid = 0.5 * (a + b);
      const double fm = profile(mid) - v_star;
      if ((fm < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  };

  for (int i = 0; i < kGrid; ++i) {
    const double fa = cs[i] - v_star;
    if (fa == 0.0) candidates.push_back(xs[i]);
    if (i + 1 < kGrid) {
      const double fb = cs[i + 1] - v_star;
      if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0))
        candidates.push_back(bisect_root(xs[i], xs[i + 1], fa));
    }
  }

  const auto golden_extremum = [&](double a, double b, bool maximize) {
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = profile(c), fd = profile(d);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
      const bool keep_left = maximize ? (fc > fd) : (fc < fd);
      if (keep_left) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = profile(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = profile(d);
      }
    }
    return 0.5 * (a + b);
  };

  // Interior extrema of the profile: each is itself a candidate (best
  // approach to an unattainable v_star) and may hide a root pair inside its
  // grid bracket.
  for (int i = 1; i + 1 < kGrid; ++i) {
    const bool is_min = cs[i] <= cs[i - 1] && cs[i] <= cs[i + 1];
    const bool is_max = cs[i] >= cs[i - 1] && cs[i] >= cs[i + 1];
    if (!is_min && !is_max) continue;
    const double a = xs[i - 1], b = xs[i + 1];
    const double xm = golden_extremum(a, b, is_max);
    const double cm = profile(xm);
    candidates.push_back(xm);
    if (is_min && cm < v_star) {
      if (cs[i - 1] >= v_star) candidates.push_back(bisect_root(a, xm, cs[i - 1] - v_star));
      if (cs[i + 1] >= v_star) candidates.push_back(bisect_root(xm, b, cm - v_star));
    } else if (is_max && cm > v_star) {
      if (cs[i - 1] <= v_star) candidates.push_back(bisect_root(a, xm, cs[i - 1] - v_star));
      if (cs[i + 1] <= v_star) candidates.push_back(bisect_root(xm, b, cm - v_star));
    }
  }

  double best_x = candidates.front();
  double best_s = -std::numeric_limits<double>::infinity();
  for (double x : candidates) {
    const double s = score(profile(x));
    const double tie = 1e-12 * std::max({1.0, std::abs(s), std::abs(best_s)});
    if (s > best_s + tie ||
        (std::abs(s - best_s) <= tie && std::abs(x - ref) < std::abs(best_x - ref))) {
      best_x = x;
      best_s = s;
    }
  }
  return best_x;
}

}  // namespace detail

// MLE of phi from homodyne samples under the plan's variance model
// sigma^2(phi): maximizes L(phi) = -(m/2) ln sigma^2 - sum x_i^2 / (2 sigma^2)
// over [phi_cl - window, phi_cl + window].
inline double mle_estimate(std::span<const double> samples, const AdaptationPlan& plan,
                           const netdsl::NetworkSpec& spec, const ProbeSpec& probe,
                           double window) {
  if (samples.empty()) throw std::invalid_argument("mle_estimate: no samples");
  if (!(window > 0.0)) throw std::invalid_argument("mle_estimate: window must be > 0");
  double s2 = 0.0;
  for (double x : samples) s2 += x * x;
  const double m = static_cast<double>(samples.size());
  const auto variance = [&](double phi) {
    const ReducedModeModel model =
        reduced_model(plan.v_in, netdsl::evaluate(spec, phi), plan.v_out, probe);
    return quadrature_variance(model, plan.theta);
  };
  const auto loglike = [&](double var) { return -0.5 * m * std::log(var) - s2 / (2.0 * var); };
  return detail::maximize_profile(variance, loglike, s2 / m, plan.phi_cl - window,
                                  plan.phi_cl + window, plan.phi_cl);
}

// Mean of the homodyne outcome for a coherent probe of mean photon number N
// in input mode 1: mu(phi) = sqrt(2 N P(phi)) cos(theta - gamma(phi)).
inline double coherent_mean(const ReducedModeModel& m, double theta, double n_photons) {
  return std::sqrt(2.0 * n_photons * m.p) * std::cos(theta - m.gamma);
}

// Per-sample FI of the coherent baseline: Gaussian outcomes with phi-dependent
// mean and vacuum variance 1/2, so F = (d mu / d phi)^2 / (1/2).
inline double coherent_baseline_fisher(const netdsl::NetworkSpec& spec,
                                       const UnitaryMatrix& v_in, const UnitaryMatrix& v_out,
                                       double phi, double n_photons, double theta) {
  if (!(n_photons > 0.0))
    throw std::invalid_argument("coherent_baseline_fisher: N must be > 0");
  const PhaseSlope s = phase_slope(spec, v_in, v_out, phi);
  const double root_p = std::sqrt(s.p);
  const double dmu = std::sqrt(2.0 * n_photons) *
                     (0.5 * s.dp / root_p * std::cos(theta - s.gamma) +
                      root_p * std::sin(theta - s.gamma) * s.dgamma);
  return 2.0 * dmu * dmu;
}

// Least-squares MLE for the coherent baseline (variance is known and
// phi-independent, so maximizing the likelihood minimizes sum (x - mu)^2).
inline double mle_estimate_coherent(std::span<const double> samples,
                                    const AdaptationPlan& plan,
                                    const netdsl::NetworkSpec& spec, double n_photons,
                                    double window) {
  if (samples.empty()) throw std::invalid_argument("mle_estimate_coherent: no samples");
  if (!(window > 0.0)) throw std::invalid_argument("mle_estimate_coherent: window must be > 0");
  double sx = 0.0;
  for (double x : samples) sx += x;
  const double m = static_cast<double>(samples.size());
  const auto mean = [&](double phi) {
    const ReducedModeModel model =
        reduced_model(plan.v_in, netdsl::evaluate(spec, phi), plan.v_out, ProbeSpec(0.0));
    return coherent_mean(model, plan.theta, n_photons);
  };
  const auto loglike = [&](double mu) { return 2.0 * mu * sx - m * mu * mu; };
  return detail::maximize_profile(mean, loglike, sx / m, plan.phi_cl - window,
                                  plan.phi_cl + window, plan.phi_cl);
}

namespace detail {

inline void fit_loglog_slope(const std::vector<ScalingRecord>& records, double& slope,
                             double& stderr_out) {
  const int n = static_cast<int>(records.size());
  if (n < 2) {
    slope = 0.0;
    stderr_out = 0.0;
    return;
  }
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = std::log(records[i].n);
    ys[i] = std::log(std::max(records[i].rmse, 1e-300));
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  slope = sxy / sxx;
  if (n == 2) {
    stderr_out = 0.0;
    return;
  }
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - (intercept + slope * xs[i]);
    ss_res += e * e;
  }
  stderr_out = std::sqrt(ss_res / (n - 2) / sxx);
}

}  // namespace detail

inline void validate_scaling_params(const ScalingParams& p, std::vector<std::string>* issues) {
  const auto bad = [&](const std::string& msg) { issues->push_back(msg); };
  if (!std::isfinite(p.phi)) bad("phi must be finite");
  if (p.k == 0.0 || !std::isfinite(p.k)) bad("k must be finite and nonzero");
  if (!(p.c > 0.0)) bad("c must be > 0");
  if (p.n_grid.empty()) bad("N_grid must not be empty");
  for (std::size_t i = 0; i < p.n_grid.size(); ++i) {
    if (!(p.n_grid[i] >= 1.0)) {
      bad("N_grid entries must be >= 1");
      break;
    }
    if (i > 0 && !(p.n_grid[i] > p.n_grid[i - 1])) {
      bad("N_grid must be strictly increasing");
      break;
    }
  }
  if (p.samples_per_trial < 1) bad("m must be >= 1");
  if (p.trials < 1) bad("trials must be >= 1");
  if (!(p.window_scale > 0.0)) bad("window_scale must be > 0");
  if (p.theta_sign != 1 && p.theta_sign != -1) bad("theta_sign must be +1 or -1");
}

// Runs the full scaling experiment. Per trial: shot-noise pre-estimate
// phi_cl, refocusing stage built at phi_cl, homodyne samples drawn at the
// true phi, MLE over a window around phi_cl. The local-oscillator phase is
// servo-locked to the operating point gamma(true phi) + pi/2 + k/N under the
// phi_cl-built plan: the stage adaptation uses only phi_cl, while the lock
// models the theta-resolution feedback of the homodyne detection.
inline ScalingResult run_scaling(const netdsl::NetworkSpec& spec, const UnitaryMatrix& v_in,
                                 const ScalingParams& params) {
  std::vector<std::string> issues;
  validate_scaling_params(params, &issues);
  if (!issues.empty()) {
    std::string msg = "run_scaling: invalid parameters:";
    for (const std::string& s : issues) msg += "\n  - " + s;
    throw std::invalid_argument(msg);
  }

  ScalingResult result;
  result.params = params;
  const double phi = params.phi;
  const int m = params.samples_per_trial;

  for (std::size_t idx = 0; idx < params.n_grid.size(); ++idx) {
    const double n = params.n_grid[idx];
    const ProbeSpec probe = ProbeSpec::from_mean_photons(n);

    // Reference numbers at exact adaptation (phi_cl = phi).
    const AdaptationPlan ideal = make_plan(spec, v_in, phi, params.k, n,
                                           AdaptSide::adapt_output, params.theta_sign);
    const double fi_exact =
        params.baseline == BaselineKind::coherent
            ? coherent_baseline_fisher(spec, ideal.v_in, ideal.v_out, phi, n, ideal.theta)
            : exact_fisher_at(spec, ideal.v_in, ideal.v_out, phi, probe, ideal.theta).fi;
    const double dg = dgamma(spec, ideal.v_in, ideal.v_out, phi);
    const double window = params.window_scale * params.c / std::sqrt(n);

    double sum_sq = 0.0, sum_err = 0.0;
    for (int t = 0; t < params.trials; ++t) {
      const std::uint64_t base =
          rng::derive_seed(rng::derive_seed(params.seed, idx), static_cast<std::uint64_t>(t));
      const double phi_cl =
          classical_preestimate(phi, n, params.c, rng::derive_seed(base, 0));
      AdaptationPlan plan = make_plan(spec, v_in, phi_cl, params.k, n,
                                      AdaptSide::adapt_output, params.theta_sign);
      const ReducedModeModel at_truth =
          reduced_model(plan.v_in, netdsl::evaluate(spec, phi), plan.v_out, probe);
      plan.theta = tuned_theta(at_truth.gamma, params.k, n, params.theta_sign);

      double est;
      if (params.baseline == BaselineKind::coherent) {
        const double mu = coherent_mean(at_truth, plan.theta, n);
        rng::SplitMix64 gen(rng::derive_seed(base, 1));
        std::vector<double> samples(static_cast<std::size_t>(m));
        for (double& x : samples) x = mu + std::sqrt(0.5) * gen.normal();
        est = mle_estimate_coherent(samples, plan, spec, n, window);
      } else {
        const std::vector<double> samples =
            sample_homodyne(at_truth, plan.theta, m, rng::derive_seed(base, 1));
        est = mle_estimate(samples, plan, spec, probe, window);
      }
      const double err = est - phi;
      sum_sq += err * err;
      sum_err += err;
    }

    ScalingRecord rec;
    rec.n = n;
    rec.rmse = std::sqrt(sum_sq / params.trials);
    rec.bias = sum_err / params.trials;
    rec.fi_exact = fi_exact;
    rec.fi_asymptotic = asymptotic_fisher(params.k, 0.0, dg, n);
    rec.crb = cramer_rao(m * fi_exact);
    result.records.push_back(rec);
  }

  detail::fit_loglog_slope(result.records, result.slope, result.slope_stderr);
  return result;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const ScalingResult& r) {
  std::ostringstream os;
  os << "N,rmse,bias,crb,fi_exact,fi_asymptotic\n";
  for (const ScalingRecord& rec : r.records)
    os << format_double(rec.n) << ',' << format_double(rec.rmse) << ','
       << format_double(rec.bias) << ',' << format_double(rec.crb) << ','
       << format_double(rec.fi_exact) << ',' << format_double(rec.fi_asymptotic) << '\n';
  return os.str();
}

// File-facing experiment description: network/input-stage sources plus the
// numeric parameters, parsed from a flat key=value text.
struct ExperimentConfig {
  std::string net;           // path to the .net file
  std::string v_in = "auto"; // path to a phi-independent .net file, or "auto"
  bool seed_given = false;
  ScalingParams params;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string s = "invalid experiment config:";
    for (const std::string& i : issues) s += "\n  - " + i;
    return s;
  }
  std::vector<std::string> issues_;
};

// Parses `key = value` lines ('#' comments allowed). All schema violations
// are collected and reported together.
inline ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig cfg;
  std::vector<std::string> issues;
  bool have_net = false, have_phi = false, have_grid = false, have_m = false,
       have_trials = false;

  const auto parse_double = [&](const std::string& key, const std::string& value,
                                double& out) {
    char* end = nullptr;
    out = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
      issues.push_back(key + ": expected a number, got '" + value + "'");
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
      return s;
    };
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};

    if (key == "net") {
      cfg.net = value;
      have_net = true;
    } else if (key == "v_in") {
      cfg.v_in = value;
    } else if (key == "phi") {
      parse_double(key, value, cfg.params.phi);
      have_phi = true;
    } else if (key == "k") {
      parse_double(key, value, cfg.params.k);
    } else if (key == "c") {
      parse_double(key, value, cfg.params.c);
    } else if (key == "window_scale") {
      parse_double(key, value, cfg.params.window_scale);
    } else if (key == "N_grid") {
      cfg.params.n_grid.clear();
      std::string item;
      std::istringstream is{value};
      while (std::getline(is, item, ',')) {
        const std::string_view t = trim(item);
        double v = 0.0;
        parse_double("N_grid", std::string(t), v);
        cfg.params.n_grid.push_back(v);
      }
      have_grid = true;
    } else if (key == "m") {
      double v = 0.0;
      parse_double(key, value, v);
      cfg.params.samples_per_trial = static_cast<int>(v);
      have_m = true;
    } else if (key == "trials") {
      double v = 0.0;
      parse_double(key, value, v);
      cfg.params.trials = static_cast<int>(v);
      have_trials = true;
    } else if (key == "seed") {
      try {
        if (value.find('-') != std::string::npos) throw std::invalid_argument(value);
        cfg.params.seed = std::stoull(value);
        cfg.seed_given = true;
      } catch (const std::exception&) {
        issues.push_back("seed: expected a non-negative integer, got '" + value + "'");
      }
    } else if (key == "baseline") {
      if (value == "none") cfg.params.baseline = BaselineKind::none;
      else if (value == "coherent") cfg.params.baseline = BaselineKind::coherent;
      else issues.push_back("baseline: expected 'none' or 'coherent', got '" + value + "'");
    } else {
      issues.push_back("unknown key '" + key + "'");
    }
  }

  if (!have_net) issues.push_back("missing required key 'net'");
  if (!have_phi) issues.push_back("missing required key 'phi'");
  if (!have_grid) issues.push_back("missing required key 'N_grid'");
  if (!have_m) issues.push_back("missing required key 'm'");
  if (!have_trials) issues.push_back("missing required key 'trials'");
  if (issues.empty()) validate_scaling_params(cfg.params, &issues);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

}  // namespace sqmet
