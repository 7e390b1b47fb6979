#pragma once

// Dispatches a RunConfig to the experiment it names and writes one CSV per
// table plus a JSON sidecar. CSV contents depend only on the config, never on
// the thread count or the wall clock.

#include "dicke/config.hpp"
#include "dicke/experiments.hpp"
#include "dicke/fock_oracle.hpp"
#include "dicke/io.hpp"
#include "dicke/meanfield.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

namespace dicke::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitNotConverged = 4;

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> artifacts;
  std::string message;  // set for nonzero exit codes
};

/// Exit code for an error that escaped an experiment.
inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const IntegrationError*>(&e) || dynamic_cast<const MarginalStability*>(&e)) {
    return kExitNumerical;
  }
  // Parameter-level problems only detectable once the experiment starts.
  return kExitConfig;
}

namespace detail {

namespace fs = std::filesystem;
using io::Cell;
using io::Column;
using io::CsvTable;
using nlohmann::json;

struct Context {
  const config::RunConfig& cfg;
  fs::path out;
  RunOutcome outcome;
  json summary = json::object();
  json convergence = json::object();
  bool not_converged = false;
  double min_margin = std::numeric_limits<double>::infinity();

  void write(const CsvTable& t, const std::string& name) {
    t.write(out / name);
    outcome.artifacts.push_back(out / name);
  }
};

inline const std::string kNepers = "1";  // N and S use the natural log

inline std::string pair_suffix(const std::string& label) {
  // "a|b" -> "ab"
  std::string s;
  for (char c : label) {
    if (c != '|') s += c;
  }
  return s;
}

inline void write_matrices(Context& ctx, const experiments::SweepResult& r) {
  const auto& grid = r.grid;
  for (const auto& label : r.partitions) {
    std::vector<Column> cols{{"g_over_gc", "1", "coupling in units of g_c (rows)"}};
    for (double y : grid.y) {
      cols.push_back({grid.y_name + "=" + io::format_double(y), kNepers,
                      "N(" + label + ") at " + grid.y_name + " = " + io::format_double(y)});
    }
    CsvTable t(r.kind + " log-negativity matrix N(" + label + "); nan marks unstable or failed points",
               cols);
    const Matrix m = r.matrix(label);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<Cell> row{grid.g_over_gc[i]};
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.emplace_back(m(i, j));
      t.add_row(std::move(row));
    }
    ctx.write(t, r.kind + "_N_" + pair_suffix(label) + ".csv");
  }
}

inline void write_sweep(Context& ctx, const experiments::SweepResult& r) {
  const auto& grid = r.grid;
  const bool averaged = r.kind == "time_averaged";
  std::vector<Column> cols{
      {"g_over_gc", "1", "coupling in units of g_c"},
      {grid.y_name, "omega_R", grid.y_name == "delta" ? "cavity-pump detuning" : "cavity decay rate"},
      {"g", "omega_R", "collective coupling"},
      {"phase", "-", "normal or superradiant"},
      {"status", "-", "ok, unstable or failed"}};
  const char* what = averaged ? "window average of N over [0, T]" : "mean of N over the stroboscopic samples";
  for (const auto& p : r.partitions) cols.push_back({"N_" + pair_suffix(p), kNepers, std::string(what) + " for " + p});
  for (const auto& p : r.partitions) {
    cols.push_back({"peak_" + pair_suffix(p), kNepers, "largest sampled N for " + p});
  }
  if (averaged) {
    for (const auto& p : r.partitions) {
      cols.push_back({"N2T_" + pair_suffix(p), kNepers, "window average over [0, 2T] for " + p});
    }
    cols.push_back({"converged", "-", "1 when the T and 2T averages agree within rel_change"});
  }
  CsvTable t(r.kind + " sweep over g/g_c and " + grid.y_name + "; vacuum start", cols);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& pt : r.points) {
    std::vector<Cell> row{pt.g_over_gc, pt.y, pt.g, std::string(to_string(pt.phase)),
                          std::string(experiments::to_string(pt.status))};
    const bool ok = pt.status == experiments::PointStatus::Ok;
    for (std::size_t k = 0; k < r.partitions.size(); ++k) row.emplace_back(ok ? pt.value[k] : nan);
    for (std::size_t k = 0; k < r.partitions.size(); ++k) row.emplace_back(ok ? pt.peak[k] : nan);
    if (averaged) {
      for (std::size_t k = 0; k < r.partitions.size(); ++k) {
        row.emplace_back(ok ? pt.doubled[k] : nan);
      }
      row.emplace_back(static_cast<long>(ok && pt.converged));
    }
    t.add_row(std::move(row));
  }
  ctx.write(t, r.kind + ".csv");
  write_matrices(ctx, r);

  long unstable = 0, failed = 0, unconverged = 0;
  json failures = json::array();
  for (const auto& pt : r.points) {
    if (pt.status == experiments::PointStatus::Unstable) ++unstable;
    if (pt.status == experiments::PointStatus::Failed) {
      ++failed;
      failures.push_back({{"g_over_gc", pt.g_over_gc}, {grid.y_name, pt.y}, {"message", pt.message}});
    }
    if (pt.status == experiments::PointStatus::Ok && !pt.converged) ++unconverged;
  }
  ctx.summary["points"] = r.points.size();
  ctx.summary["unstable_points"] = unstable;
  ctx.summary["failed_points"] = failed;
  ctx.summary["failures"] = failures;
  ctx.convergence["unconverged_points"] = unconverged;
  ctx.convergence["failed_points"] = failed;
  ctx.not_converged = ctx.not_converged || unconverged > 0 || failed > 0;
  ctx.min_margin = std::min(ctx.min_margin, r.min_margin);
}

inline void run_bifurcation(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double gc = critical_coupling(cfg.model);
  std::vector<double> g;
  for (double r : cfg.grid.g_over_gc) g.push_back(r * gc);
  const auto rows = meanfield::bifurcation_scan(cfg.model, g);
  CsvTable t("mean-field fixed points over g; scaled by N",
             {{"g", "omega_R", "collective coupling"},
              {"g_over_gc", "1", "coupling in units of g_c"},
              {"abs_a", "1", "|alpha| / sqrt(N)"},
              {"wS", "1", "w_S / N"},
              {"branch", "-", "trivial, plus or minus"},
              {"stable", "-", "1 when every Jacobian eigenvalue has Re <= 1e-9"}});
  for (const auto& r : rows) {
    t.add_row({r.g, r.g_over_gc, r.abs_a, r.wS, std::string(meanfield::to_string(r.branch)),
               static_cast<long>(r.stable)});
  }
  ctx.write(t, "bifurcation.csv");
  const auto onset = meanfield::trivial_instability_onset(rows);
  ctx.summary["g_c"] = gc;
  ctx.summary["trivial_instability_onset_g"] = onset ? json(*onset) : json(nullptr);
}

inline void run_stroboscopic(Context& ctx) {
  auto opt = ctx.cfg.strobe;
  opt.tol = ctx.cfg.tol;
  opt.threads = ctx.cfg.threads;
  const auto r = experiments::stroboscopic_map(ctx.cfg.model, ctx.cfg.grid, opt);
  write_sweep(ctx, r);
  ctx.summary["k_min"] = r.k_min;
  ctx.summary["k_max"] = r.k_max;
}

inline void run_time_averaged(Context& ctx) {
  auto opt = ctx.cfg.averaging;
  opt.tol = ctx.cfg.tol;
  opt.threads = ctx.cfg.threads;
  const auto r = experiments::time_averaged_sweep(ctx.cfg.model, ctx.cfg.grid, opt);
  write_sweep(ctx, r);
  ctx.summary["window"] = r.window;
  ctx.summary["sample_dt"] = r.sample_dt;
  json sharing = json::array();
  for (std::size_t j = 0; j < r.grid.y.size(); ++j) {
    const auto rep = experiments::sharing_report(r, j);
    sharing.push_back({{r.grid.y_name, r.grid.y[j]},
                       {"argmax_g_over_gc_ab", rep.argmax_ab},
                       {"argmax_g_over_gc_bc", rep.argmax_bc},
                       {"opposing_steps", rep.opposing_steps},
                       {"total_steps", rep.total_steps}});
  }
  ctx.summary["sharing"] = sharing;
}

inline void run_esd(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto tr = experiments::esd_trace(cfg.model, cfg.aux, cfg.t_end, cfg.dt, cfg.tol);
  CsvTable trace("N(b|c) along a vacuum-start trajectory" +
                     std::string(cfg.aux ? " with the readout mode w" : ""),
                 {{"t", "1/omega_R", "time"}, {"N_bc", kNepers, "log-negativity of b|c"}});
  for (std::size_t k = 0; k < tr.times.size(); ++k) trace.add_row({tr.times[k], tr.values[k]});
  ctx.write(trace, "esd_trace.csv");

  CsvTable events("zero intervals of N(b|c): N < 1e-12 over at least one sample step",
                  {{"death", "1/omega_R", "first sample with N below threshold"},
                   {"birth", "1/omega_R", "first sample back above threshold (last sample if open)"},
                   {"open", "-", "1 when the interval is still open at t_end"}});
  for (const auto& e : tr.events) events.add_row({e.death, e.birth, static_cast<long>(e.open)});
  ctx.write(events, "esd_events.csv");
  ctx.summary["zero_intervals"] = tr.events.size();
  ctx.summary["closed_zero_intervals"] = tr.events_before(cfg.t_end);
  ctx.min_margin = std::min(ctx.min_margin, tr.min_margin);
}

inline json fit_json(const experiments::LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

inline void run_inference(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto opt = cfg.averaging;
  opt.tol = cfg.tol;
  opt.threads = cfg.threads;
  const auto res = experiments::inference_scan(cfg.model, cfg.readout, cfg.grid.g_over_gc, opt);
  CsvTable t("time-averaged b|c entanglement without and with the readout mode, and w squeezing",
             {{"g_over_gc", "1", "coupling in units of g_c"},
              {"g", "omega_R", "collective coupling"},
              {"N_closed", kNepers, "average N(b|c) without the readout mode"},
              {"N_open", kNepers, "average N(b|c) with the readout mode"},
              {"S_open", kNepers, "average squeezing of w, max(0, -ln 2 V_min)"},
              {"converged", "-", "1 when every T and 2T average agrees within rel_change"}});
  for (const auto& row : res.rows) {
    const double g = with_coupling_ratio(cfg.model, row.g_over_gc).g;
    t.add_row({row.g_over_gc, g, row.n_closed, row.n_open, row.s_open, static_cast<long>(row.converged)});
  }
  ctx.write(t, "inference.csv");
  ctx.summary["fit_open_vs_closed"] = fit_json(res.open_vs_closed);
  ctx.summary["fit_open_vs_squeezing"] = fit_json(res.open_vs_squeeze);
  ctx.summary["squeezing_increases"] = res.squeezing_increases();
  ctx.summary["window"] = res.window;
  ctx.convergence["all_rows_converged"] = res.all_converged();
  ctx.not_converged = ctx.not_converged || !res.all_converged();
  ctx.min_margin = std::min(ctx.min_margin, res.min_margin);
}

inline std::vector<Column> trajectory_columns(const std::vector<std::string>& labels) {
  std::vector<std::string> q;
  for (const auto& l : labels) {
    q.push_back("x_" + l);
    q.push_back("p_" + l);
  }
  std::vector<Column> cols{{"t", "1/omega_R", "time"}};
  for (const auto& name : q) cols.push_back({"mean_" + name, "1", "<" + name + ">"});
  for (std::size_t k = 0; k < q.size(); ++k) {
    for (std::size_t l = k; l < q.size(); ++l) {
      cols.push_back({"cov_" + q[k] + "_" + q[l], "1", "symmetrized covariance (vacuum diagonal 1/2)"});
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      cols.push_back({"N_" + labels[i] + labels[j], kNepers,
                      "log-negativity of " + labels[i] + "|" + labels[j]});
    }
  }
  for (const auto& l : labels) cols.push_back({"n_" + l, "1", "occupation <" + l + "^dag " + l + ">"});
  return cols;
}

inline std::vector<Cell> trajectory_row(double t, const GaussianState& s) {
  std::vector<Cell> row{t};
  const Eigen::Index n = s.n_modes();
  for (Eigen::Index k = 0; k < 2 * n; ++k) row.emplace_back(s.mean(k));
  for (Eigen::Index k = 0; k < 2 * n; ++k) {
    for (Eigen::Index l = k; l < 2 * n; ++l) row.emplace_back(s.cov(k, l));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) row.emplace_back(log_negativity(s, i, j));
  }
  for (Eigen::Index i = 0; i < n; ++i) row.emplace_back(occupation(s, i));
  return row;
}

inline void run_single_trajectory(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto tab = experiments::single_trajectory(cfg.model, cfg.aux, cfg.t_end, cfg.dt, cfg.tol);
  const auto cols = trajectory_columns(tab.labels);
  CsvTable t("Gaussian moment trajectory from the vacuum", cols);
  for (std::size_t k = 0; k < tab.times.size(); ++k) t.add_row(trajectory_row(tab.times[k], tab.states[k]));
  ctx.write(t, "trajectory.csv");
  ctx.min_margin = std::min(ctx.min_margin, tab.min_margin);
  ctx.summary["phase"] = to_string(phase_of(cfg.model));

  if (cfg.oracle_cutoff > 0) {
    const auto model = cfg.aux ? build_aux_hamiltonian(cfg.model, *cfg.aux) : build_phase_model(cfg.model);
    const auto o = fock_oracle(model, cfg.oracle_cutoff, tab.times, cfg.tol);
    CsvTable ot("Fock-space master-equation trajectory from the vacuum, cutoff " +
                    std::to_string(cfg.oracle_cutoff) + " levels per mode",
                cols);
    for (std::size_t k = 0; k < o.times.size(); ++k) ot.add_row(trajectory_row(o.times[k], o.moments[k]));
    ctx.write(ot, "oracle_trajectory.csv");
    double gap = 0.0;
    for (std::size_t k = 0; k < o.times.size(); ++k) {
      gap = std::max({gap, (o.moments[k].cov - tab.states[k].cov).cwiseAbs().maxCoeff(),
                      (o.moments[k].mean - tab.states[k].mean).cwiseAbs().maxCoeff()});
    }
    ctx.summary["oracle_max_moment_gap"] = gap;
    ctx.summary["oracle_max_top_population"] = o.max_top_population;
    ctx.convergence["oracle_reliable"] = o.reliable;
    ctx.not_converged = ctx.not_converged || !o.reliable;
  }
}

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json params_json(const config::RunConfig& cfg) {
  json j = {{"model",
             {{"omega_r", cfg.model.omega_r},
              {"delta", cfg.model.delta},
              {"g", cfg.model.g},
              {"kappa", cfg.model.kappa},
              {"n_atoms", cfg.model.n_atoms},
              {"u", cfg.model.u}}}};
  try {
    j["model"]["g_c"] = critical_coupling(cfg.model);
  } catch (const DomainError&) {
    j["model"]["g_c"] = nullptr;
  }
  if (cfg.aux) {
    j["aux"] = {{"omega_w", cfg.aux->omega_w}, {"psi", cfg.aux->psi}, {"gamma", cfg.aux->gamma}};
  } else {
    j["aux"] = nullptr;
  }
  j["resolved_config"] = cfg.resolved;
  return j;
}

}  // namespace detail

/// Runs the configured experiment, writing artifacts into `out_dir`.
inline RunOutcome run(const config::RunConfig& cfg, const std::filesystem::path& out_dir) {
  using config::Experiment;
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  detail::Context ctx{cfg, out_dir, {}};
  try {
    fs::create_directories(out_dir);
  } catch (const fs::filesystem_error& e) {
    return {kExitConfig, {}, std::string("cannot create output directory: ") + e.what()};
  }

  try {
    switch (cfg.experiment) {
      case Experiment::Bifurcation: detail::run_bifurcation(ctx); break;
      case Experiment::Stroboscopic: detail::run_stroboscopic(ctx); break;
      case Experiment::TimeAveraged: detail::run_time_averaged(ctx); break;
      case Experiment::Esd: detail::run_esd(ctx); break;
      case Experiment::Inference: detail::run_inference(ctx); break;
      case Experiment::SingleTrajectory: detail::run_single_trajectory(ctx); break;
    }
  } catch (const Error& e) {
    ctx.outcome = {exit_code_for(e), ctx.outcome.artifacts, e.what()};
  }

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json meta = detail::params_json(cfg);
  meta["experiment"] = config::to_string(cfg.experiment);
  meta["schema_version"] = 1;
  meta["tolerances"] = {{"integrator_rel_abs", cfg.tol},
                        {"physicality", kPhysicalityTolerance},
                        {"zero_threshold", experiments::kZeroThreshold},
                        {"averaging_rel_change", cfg.averaging.rel_change}};
  meta["threads"] = cfg.threads;
  meta["strict"] = cfg.strict;
  meta["finished_at_utc"] = detail::utc_now();
  meta["wall_time_s"] = wall;
  meta["min_physicality_margin"] = io::number_or_null(ctx.min_margin);
  meta["convergence"] = ctx.convergence;
  meta["convergence"]["any_flagged"] = ctx.not_converged;
  meta["summary"] = ctx.summary;
  meta["exit_code"] = ctx.outcome.exit_code == kExitOk && cfg.strict && ctx.not_converged
                          ? kExitNotConverged
                          : ctx.outcome.exit_code;
  meta["message"] = ctx.outcome.message;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : ctx.outcome.artifacts) files.push_back(p.filename().string());
  meta["artifacts"] = files;
  const auto sidecar = out_dir / (std::string(config::to_string(cfg.experiment)) + ".json");
  io::write_json(sidecar, meta);
  ctx.outcome.artifacts.push_back(sidecar);

  if (ctx.outcome.exit_code == kExitOk && cfg.strict && ctx.not_converged) {
    ctx.outcome.exit_code = kExitNotConverged;
    ctx.outcome.message = "non-convergence flagged under strict mode";
  }
  return ctx.outcome;
}

}  // namespace dicke::cli
