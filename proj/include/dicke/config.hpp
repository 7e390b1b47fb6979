#pragma once

// Run configuration in a flat `key = value` format with dotted namespaces:
//
//   experiment = stroboscopic
//   model.delta = -2       # trailing comments are allowed
//   grid.g_over_gc = 0.5:2.5:21
//
// Lists are comma separated or `start:stop:count` (inclusive, evenly
// spaced). Unknown or repeated keys are errors.

#include "dicke/errors.hpp"
#include "dicke/experiments.hpp"
#include "dicke/model.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dicke::config {

enum class Experiment { Bifurcation, Stroboscopic, TimeAveraged, Esd, Inference, SingleTrajectory };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Bifurcation: return "bifurcation";
    case Experiment::Stroboscopic: return "stroboscopic";
    case Experiment::TimeAveraged: return "time_averaged";
    case Experiment::Esd: return "esd";
    case Experiment::Inference: return "inference";
    case Experiment::SingleTrajectory: return "single_trajectory";
  }
  return "?";
}

struct RunConfig {
  Experiment experiment = Experiment::Bifurcation;
  ModelParams model;
  std::optional<double> g_over_gc;  // set when the config gave g/g_c instead of g
  std::optional<AuxParams> aux;

  experiments::SweepGrid grid;  // sweeps; bifurcation and inference use grid.g_over_gc
  double tol = kDefaultTolerance;
  double t_end = 100.0;
  double dt = 0.05;
  experiments::StroboscopicOptions strobe;
  experiments::AveragingOptions averaging;
  experiments::ReadoutSpec readout;
  int oracle_cutoff = 0;  // single_trajectory: also run the Fock oracle when > 0
  bool strict = false;
  unsigned threads = 1;

  // Every key/value after defaults and normalization, for the metadata sidecar.
  std::map<std::string, std::string> resolved;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

inline int to_int(const std::string& key, const std::string& text) {
  const double v = to_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return static_cast<int>(v);
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError(key + ": ranges are start:stop:count");
    const double a = to_number(key, parts[0]), b = to_number(key, parts[1]);
    const int n = to_int(key, parts[2]);
    if (n < 1) throw ConfigError(key + ": range count must be >= 1");
    if (n == 1 && a != b) throw ConfigError(key + ": a one-point range needs start == stop");
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!trim(item).empty()) out.push_back(to_number(key, item));
  }
  return out;
}

inline Experiment to_experiment(const std::string& name) {
  for (auto e : {Experiment::Bifurcation, Experiment::Stroboscopic, Experiment::TimeAveraged,
                 Experiment::Esd, Experiment::Inference, Experiment::SingleTrajectory}) {
    if (name == to_string(e)) return e;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

}  // namespace detail

/// Splits the text into key/value pairs. Blank lines and `#` comments are ignored.
inline std::map<std::string, std::string> parse_pairs(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

/// Parses and validates a configuration. All errors are ConfigError.
inline RunConfig parse_config(const std::string& text) {
  auto kv = parse_pairs(text);
  RunConfig cfg;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto num = [&](const std::string& key, double& field) {
    if (auto v = take(key)) field = detail::to_number(key, *v);
  };

  const auto exp = take("experiment");
  if (!exp) throw ConfigError("missing required key 'experiment'");
  cfg.experiment = detail::to_experiment(*exp);

  num("model.omega_r", cfg.model.omega_r);
  num("model.delta", cfg.model.delta);
  num("model.kappa", cfg.model.kappa);
  num("model.n_atoms", cfg.model.n_atoms);
  num("model.u", cfg.model.u);
  const auto g = take("model.g");
  const auto ratio = take("model.g_over_gc");
  if (g && ratio) throw ConfigError("give either model.g or model.g_over_gc, not both");
  if (g) cfg.model.g = detail::to_number("model.g", *g);
  if (ratio) cfg.g_over_gc = detail::to_number("model.g_over_gc", *ratio);

  const bool any_aux = kv.count("aux.omega_w") || kv.count("aux.psi") || kv.count("aux.gamma");
  bool aux_on = any_aux;
  if (auto v = take("aux.enabled")) {
    aux_on = detail::to_bool("aux.enabled", *v);
    if (!aux_on && any_aux) throw ConfigError("aux.* keys given with aux.enabled = false");
  }
  std::optional<double> omega_w, psi, gamma;
  if (auto v = take("aux.omega_w")) omega_w = detail::to_number("aux.omega_w", *v);
  if (auto v = take("aux.psi")) psi = detail::to_number("aux.psi", *v);
  if (auto v = take("aux.gamma")) gamma = detail::to_number("aux.gamma", *v);

  if (auto v = take("grid.g_over_gc")) {
    cfg.grid.g_over_gc = detail::to_list("grid.g_over_gc", *v);
  } else if (cfg.experiment == Experiment::Bifurcation) {
    cfg.grid.g_over_gc = detail::to_list("grid.g_over_gc", "0:2:201");
  }
  if (auto v = take("grid.y_name")) cfg.grid.y_name = *v;
  if (auto v = take("grid.y")) cfg.grid.y = detail::to_list("grid.y", *v);

  num("solver.tol", cfg.tol);
  num("time.t_end", cfg.t_end);
  num("time.dt", cfg.dt);
  if (auto v = take("stroboscopic.k_min")) cfg.strobe.k_min = detail::to_int("stroboscopic.k_min", *v);
  if (auto v = take("stroboscopic.k_max")) cfg.strobe.k_max = detail::to_int("stroboscopic.k_max", *v);
  num("averaging.window", cfg.averaging.window);
  num("averaging.dt", cfg.averaging.dt);
  num("averaging.rel_change", cfg.averaging.rel_change);
  num("readout.detuning", cfg.readout.detuning);
  num("readout.psi", cfg.readout.psi);
  num("readout.gamma_over_kappa", cfg.readout.gamma_over_kappa);
  if (auto v = take("oracle.cutoff")) cfg.oracle_cutoff = detail::to_int("oracle.cutoff", *v);
  if (auto v = take("run.strict")) cfg.strict = detail::to_bool("run.strict", *v);
  if (auto v = take("run.threads")) {
    const int t = detail::to_int("run.threads", *v);
    if (t < 1) throw ConfigError("run.threads must be >= 1");
    cfg.threads = static_cast<unsigned>(t);
  }

  if (!kv.empty()) throw ConfigError("unknown key '" + kv.begin()->first + "'");

  // Validation against the type invariants.
  try {
    cfg.model.validate();
    if (cfg.g_over_gc) {
      if (!(*cfg.g_over_gc >= 0.0)) throw InvalidParameter("model.g_over_gc must be >= 0");
      cfg.model = with_coupling_ratio(cfg.model, *cfg.g_over_gc);
    }
    if (aux_on) {
      AuxParams aux = default_aux(cfg.model);
      if (omega_w) aux.omega_w = *omega_w;
      if (psi) aux.psi = *psi;
      if (gamma) aux.gamma = *gamma;
      aux.validate();
      cfg.aux = aux;
    }
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.tol > 1e-14 && cfg.tol < 1e-3)) throw ConfigError("solver.tol must lie in (1e-14, 1e-3)");
  if (!(cfg.t_end > 0.0) || !(cfg.dt > 0.0)) throw ConfigError("time.t_end and time.dt must be > 0");
  if (!(cfg.averaging.dt > 0.0) || cfg.averaging.window < 0.0 ||
      !(cfg.averaging.rel_change > 0.0)) {
    throw ConfigError("averaging.dt and averaging.rel_change must be > 0, averaging.window >= 0");
  }
  if (cfg.strobe.k_min < 0 || cfg.strobe.k_max < cfg.strobe.k_min) {
    throw ConfigError("need 0 <= stroboscopic.k_min <= stroboscopic.k_max");
  }
  if (cfg.oracle_cutoff < 0 || cfg.oracle_cutoff == 1) {
    throw ConfigError("oracle.cutoff must be 0 (off) or >= 2");
  }

  using E = Experiment;
  const bool sweep = cfg.experiment == E::Stroboscopic || cfg.experiment == E::TimeAveraged;
  const bool gridded = sweep || cfg.experiment == E::Bifurcation || cfg.experiment == E::Inference;
  if (gridded && cfg.grid.g_over_gc.empty()) throw ConfigError("grid.g_over_gc is empty");
  if (sweep) {
    try {
      cfg.grid.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.experiment == E::Bifurcation &&
      !std::is_sorted(cfg.grid.g_over_gc.begin(), cfg.grid.g_over_gc.end())) {
    throw ConfigError("grid.g_over_gc must be ascending for a bifurcation scan");
  }
  if (cfg.experiment == E::Esd && phase_of(cfg.model) != Phase::Superradiant) {
    throw ConfigError("esd runs in the superradiant phase (g/g_c > 1)");
  }
  const bool trajectory = cfg.experiment == E::Esd || cfg.experiment == E::SingleTrajectory;
  if (cfg.aux && !trajectory) {
    throw ConfigError("aux.* applies to esd and single_trajectory; inference uses readout.*");
  }
  if (cfg.oracle_cutoff > 0 && cfg.experiment != E::SingleTrajectory) {
    throw ConfigError("oracle.cutoff applies to single_trajectory only");
  }
  if (cfg.experiment == E::Inference && cfg.grid.g_over_gc.size() < 2) {
    throw ConfigError("inference needs at least two grid.g_over_gc points");
  }

  // Resolved view for the sidecar.
  auto& r = cfg.resolved;
  r["experiment"] = to_string(cfg.experiment);
  r["model.omega_r"] = detail::format_number(cfg.model.omega_r);
  r["model.delta"] = detail::format_number(cfg.model.delta);
  r["model.kappa"] = detail::format_number(cfg.model.kappa);
  r["model.g"] = detail::format_number(cfg.model.g);
  r["model.n_atoms"] = detail::format_number(cfg.model.n_atoms);
  r["model.u"] = detail::format_number(cfg.model.u);
  if (cfg.aux) {
    r["aux.omega_w"] = detail::format_number(cfg.aux->omega_w);
    r["aux.psi"] = detail::format_number(cfg.aux->psi);
    r["aux.gamma"] = detail::format_number(cfg.aux->gamma);
  }
  r["grid.g_over_gc"] = detail::format_list(cfg.grid.g_over_gc);
  r["grid.y_name"] = cfg.grid.y_name;
  r["grid.y"] = detail::format_list(cfg.grid.y);
  r["solver.tol"] = detail::format_number(cfg.tol);
  r["time.t_end"] = detail::format_number(cfg.t_end);
  r["time.dt"] = detail::format_number(cfg.dt);
  r["stroboscopic.k_min"] = std::to_string(cfg.strobe.k_min);
  r["stroboscopic.k_max"] = std::to_string(cfg.strobe.k_max);
  r["averaging.window"] = detail::format_number(cfg.averaging.resolved_window(cfg.model));
  r["averaging.dt"] = detail::format_number(cfg.averaging.dt);
  r["averaging.rel_change"] = detail::format_number(cfg.averaging.rel_change);
  r["readout.detuning"] = detail::format_number(cfg.readout.detuning);
  r["readout.psi"] = detail::format_number(cfg.readout.psi);
  r["readout.gamma_over_kappa"] = detail::format_number(cfg.readout.gamma_over_kappa);
  r["oracle.cutoff"] = std::to_string(cfg.oracle_cutoff);
  return cfg;
}

}  // namespace dicke::config
