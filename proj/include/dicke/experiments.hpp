#pragma once

// Numerical experiments on the linearized three-mode (and four-mode, with
// readout) models: stroboscopic and time-averaged negativity sweeps, the
// sudden death/birth trace, and the squeezing-based inference scan.

#include "dicke/errors.hpp"
#include "dicke/gaussian.hpp"
#include "dicke/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace dicke::experiments {

// Mode order of every (a, b, c[, w]) model.
inline constexpr Eigen::Index kModeA = 0, kModeB = 1, kModeC = 2, kModeW = 3;

struct NamedPartition {
  std::string label;
  Eigen::Index first;
  Eigen::Index second;
};

inline const std::vector<NamedPartition>& standard_partitions() {
  static const std::vector<NamedPartition> parts{
      {"a|b", kModeA, kModeB}, {"b|c", kModeB, kModeC}, {"a|c", kModeA, kModeC}};
  return parts;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers. The first exception
/// thrown by any task is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          f(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Oscillation frequency of the b-c relative sector: sqrt(Omega^2 - 4 zeta^2)
/// above threshold, omega_R below.
inline double s_frequency(const ModelParams& p) {
  return phase_of(p) == Phase::Normal ? p.omega_r : sr_coefficients(p).s_frequency();
}

// ---------------------------------------------------------------------------
// Grid sweeps

enum class PointStatus { Ok, Unstable, Failed };

inline const char* to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Ok: return "ok";
    case PointStatus::Unstable: return "unstable";
    case PointStatus::Failed: return "failed";
  }
  return "?";
}

struct SweepGrid {
  std::string y_name = "kappa";  // "kappa" or "delta"
  std::vector<double> g_over_gc;
  std::vector<double> y;

  void validate() const {
    if (y_name != "kappa" && y_name != "delta") {
      throw InvalidParameter("sweep axis must be kappa or delta, got '" + y_name + "'");
    }
    if (g_over_gc.empty() || y.empty()) throw InvalidParameter("sweep grid is empty");
    for (double r : g_over_gc) {
      if (!(r >= 0.0)) throw InvalidParameter("g/g_c values must be >= 0");
    }
  }

  ModelParams point(const ModelParams& base, std::size_t i, std::size_t j) const {
    ModelParams p = base;
    (y_name == "kappa" ? p.kappa : p.delta) = y[j];
    p.validate();
    return with_coupling_ratio(p, g_over_gc[i]);
  }
};

struct SweepPoint {
  double g_over_gc = 0.0;
  double y = 0.0;
  double g = 0.0;
  Phase phase = Phase::Normal;
  PointStatus status = PointStatus::Ok;
  std::string message;
  std::vector<double> value;    // per partition: stroboscopic mean or window average
  std::vector<double> peak;     // per partition: largest sampled N
  std::vector<double> doubled;  // per partition: average over 2T (time-averaged sweeps)
  bool converged = true;
};

struct SweepResult {
  std::string kind;  // "stroboscopic" or "time_averaged"
  SweepGrid grid;
  std::vector<std::string> partitions;
  std::vector<SweepPoint> points;  // row-major: g/g_c outer, y inner
  double window = 0.0;             // averaging window T (time-averaged sweeps)
  int k_min = 0, k_max = 0;        // stroboscopic indices
  double sample_dt = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();

  const SweepPoint& at(std::size_t i, std::size_t j) const {
    return points[i * grid.y.size() + j];
  }

  std::size_t partition_index(const std::string& label) const {
    const auto it = std::find(partitions.begin(), partitions.end(), label);
    if (it == partitions.end()) throw InvalidParameter("unknown partition '" + label + "'");
    return static_cast<std::size_t>(it - partitions.begin());
  }

  /// Matrix of `value` for one partition, rows over g/g_c and columns over y.
  /// Points that were not computed hold NaN.
  Matrix matrix(const std::string& label) const {
    const auto k = partition_index(label);
    Matrix m(grid.g_over_gc.size(), grid.y.size());
    for (std::size_t i = 0; i < grid.g_over_gc.size(); ++i) {
      for (std::size_t j = 0; j < grid.y.size(); ++j) {
        const auto& pt = at(i, j);
        m(i, j) = pt.status == PointStatus::Ok ? pt.value[k]
                                                : std::numeric_limits<double>::quiet_NaN();
      }
    }
    return m;
  }

  bool all_converged() const {
    return std::all_of(points.begin(), points.end(), [](const SweepPoint& p) {
      return p.status != PointStatus::Ok || p.converged;
    });
  }
};

namespace detail {

inline constexpr double kUnstableRate = 1e-9;

struct PreparedPoint {
  ModelParams params;
  DriftDiffusion dd;
};

// Builds the phase-appropriate model; returns nullopt (and marks the point)
// when the linearization is unstable or cannot be formed.
inline std::optional<PreparedPoint> prepare(const SweepGrid& grid, const ModelParams& base,
                                            std::size_t i, std::size_t j, SweepPoint& pt) {
  pt.g_over_gc = grid.g_over_gc[i];
  pt.y = grid.y[j];
  try {
    const ModelParams p = grid.point(base, i, j);
    pt.g = p.g;
    pt.phase = phase_of(p);
    auto dd = drift_diffusion(build_phase_model(p));
    const double rate = max_real_eigenvalue(dd.drift);
    if (rate > kUnstableRate) {
      pt.status = PointStatus::Unstable;
      pt.message = "linearization unstable (max Re lambda = " + std::to_string(rate) + ")";
      return std::nullopt;
    }
    return PreparedPoint{p, std::move(dd)};
  } catch (const DomainError& e) {
    pt.status = PointStatus::Failed;
    pt.message = e.what();
    return std::nullopt;
  }
}

inline std::vector<double> uniform_times(double t_end, double dt) {
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<double> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * dt;
  return t;
}

inline void merge_margin(SweepResult& r, const std::vector<double>& margins) {
  for (double m : margins) r.min_margin = std::min(r.min_margin, m);
}

}  // namespace detail

struct StroboscopicOptions {
  int k_min = 50;
  int k_max = 60;
  double tol = kDefaultTolerance;
  unsigned threads = 1;
};

/// Samples N at t = k pi / sqrt(Omega^2 - 4 zeta^2), k in [k_min, k_max]
/// (k pi / omega_R below threshold), starting from the vacuum. Reports the
/// mean over the samples per partition.
inline SweepResult stroboscopic_map(const ModelParams& base, const SweepGrid& grid,
                                    const StroboscopicOptions& opt = {}) {
  grid.validate();
  if (opt.k_min < 0 || opt.k_max < opt.k_min) throw InvalidParameter("invalid k range");
  SweepResult r;
  r.kind = "stroboscopic";
  r.grid = grid;
  r.k_min = opt.k_min;
  r.k_max = opt.k_max;
  for (const auto& part : standard_partitions()) r.partitions.push_back(part.label);
  const std::size_t ny = grid.y.size(), n = grid.g_over_gc.size() * ny;
  r.points.resize(n);
  std::vector<double> margins(n, std::numeric_limits<double>::infinity());

  parallel_for(n, opt.threads, [&](std::size_t idx) {
    auto& pt = r.points[idx];
    const auto prep = detail::prepare(grid, base, idx / ny, idx % ny, pt);
    if (!prep) return;
    const double eps = s_frequency(prep->params);
    std::vector<double> times;
    for (int k = opt.k_min; k <= opt.k_max; ++k) times.push_back(k * M_PI / eps);
    const auto& parts = standard_partitions();
    pt.value.assign(parts.size(), 0.0);
    pt.peak.assign(parts.size(), 0.0);
    try {
      evolve_each(
          GaussianState::vacuum(3), prep->dd, times, opt.tol,
          [&](double, const GaussianState& s) {
            for (std::size_t k = 0; k < parts.size(); ++k) {
              const double v = log_negativity(s, parts[k].first, parts[k].second);
              pt.value[k] += v / static_cast<double>(times.size());
              pt.peak[k] = std::max(pt.peak[k], v);
            }
          },
          &margins[idx]);
    } catch (const IntegrationError& e) {
      pt.status = PointStatus::Failed;
      pt.message = e.what();
    }
  });
  detail::merge_margin(r, margins);
  return r;
}

struct AveragingOptions {
  double window = 0.0;    // T; 0 selects 100 * 2 pi / omega_R
  double dt = 0.05;       // sample spacing for the trapezoidal rule
  double rel_change = 0.01;
  double tol = kDefaultTolerance;
  unsigned threads = 1;

  double resolved_window(const ModelParams& p) const {
    return window > 0.0 ? window : 100.0 * 2.0 * M_PI / p.omega_r;
  }
};

/// Trapezoidal running average of several signals over [0, T] and [0, 2T].
class WindowAverager {
 public:
  WindowAverager(std::size_t n_signals, double window)
      : window_(window), first_(n_signals, 0.0), full_(n_signals, 0.0),
        last_(n_signals, 0.0) {}

  void add(double t, const std::vector<double>& values) {
    if (started_) {
      const double h = t - t_prev_;
      for (std::size_t k = 0; k < values.size(); ++k) {
        const double area = 0.5 * h * (values[k] + last_[k]);
        full_[k] += area;
        if (t <= window_ * (1.0 + 1e-12)) first_[k] += area;
      }
    }
    started_ = true;
    t_prev_ = t;
    last_ = values;
  }

  double average(std::size_t k) const { return first_[k] / window_; }
  double doubled_average(std::size_t k) const { return full_[k] / (2.0 * window_); }

 private:
  double window_;
  std::vector<double> first_, full_, last_;
  double t_prev_ = 0.0;
  bool started_ = false;
};

inline bool averages_agree(double a, double b, double rel_change) {
  return std::abs(b - a) <= rel_change * std::max(std::abs(a), std::abs(b)) ||
         std::max(std::abs(a), std::abs(b)) < 1e-12;
}

namespace detail {

// Time-averages N over the given partitions and S over `squeezed_modes`.
// Returns (averages over T, averages over 2T).
inline std::pair<std::vector<double>, std::vector<double>> averaged_measures(
    const DriftDiffusion& dd, Eigen::Index n_modes, const std::vector<NamedPartition>& parts,
    const std::vector<Eigen::Index>& squeezed_modes, double window, double dt, double tol,
    double& margin, std::vector<double>* peak = nullptr) {
  const std::size_t n_sig = parts.size() + squeezed_modes.size();
  WindowAverager avg(n_sig, window);
  std::vector<double> values(n_sig);
  if (peak) peak->assign(n_sig, 0.0);
  const auto times = uniform_times(2.0 * window, dt);
  evolve_each(
      GaussianState::vacuum(n_modes), dd, times, tol,
      [&](double t, const GaussianState& s) {
        std::size_t k = 0;
        for (const auto& part : parts) values[k++] = log_negativity(s, part.first, part.second);
        for (auto m : squeezed_modes) values[k++] = squeezing(s, m);
        if (peak) {
          for (std::size_t i = 0; i < n_sig; ++i) (*peak)[i] = std::max((*peak)[i], values[i]);
        }
        avg.add(t, values);
      },
      &margin);
  std::pair<std::vector<double>, std::vector<double>> out;
  for (std::size_t k = 0; k < n_sig; ++k) {
    out.first.push_back(avg.average(k));
    out.second.push_back(avg.doubled_average(k));
  }
  return out;
}

}  // namespace detail

/// Time-averaged N = (1/T) int_0^T N(t) dt per partition and grid point, with
/// a convergence flag from re-averaging over 2T.
inline SweepResult time_averaged_sweep(const ModelParams& base, const SweepGrid& grid,
                                       const AveragingOptions& opt = {}) {
  grid.validate();
  if (!(opt.dt > 0.0)) throw InvalidParameter("sample spacing must be > 0");
  const double window = opt.resolved_window(base);
  SweepResult r;
  r.kind = "time_averaged";
  r.grid = grid;
  r.window = window;
  r.sample_dt = opt.dt;
  for (const auto& part : standard_partitions()) r.partitions.push_back(part.label);
  const std::size_t ny = grid.y.size(), n = grid.g_over_gc.size() * ny;

  for (std::size_t i = 0; i < grid.g_over_gc.size(); ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      try {
        if (window < 20.0 * 2.0 * M_PI / s_frequency(grid.point(base, i, j))) {
          throw InvalidParameter("averaging window must cover at least 20 s-sector periods");
        }
      } catch (const DomainError&) {
        // reported per point below
      }
    }
  }

  r.points.resize(n);
  std::vector<double> margins(n, std::numeric_limits<double>::infinity());
  parallel_for(n, opt.threads, [&](std::size_t idx) {
    auto& pt = r.points[idx];
    const auto prep = detail::prepare(grid, base, idx / ny, idx % ny, pt);
    if (!prep) return;
    try {
      auto [first, full] = detail::averaged_measures(prep->dd, 3, standard_partitions(), {},
                                                     window, opt.dt, opt.tol, margins[idx],
                                                     &pt.peak);
      pt.value = std::move(first);
      pt.doubled = std::move(full);
      pt.converged = true;
      for (std::size_t k = 0; k < pt.value.size(); ++k) {
        pt.converged = pt.converged && averages_agree(pt.value[k], pt.doubled[k], opt.rel_change);
      }
    } catch (const IntegrationError& e) {
      pt.status = PointStatus::Failed;
      pt.message = e.what();
    }
  });
  detail::merge_margin(r, margins);
  return r;
}

/// Sharing trend along one column (fixed y) of a time-averaged sweep.
struct SharingReport {
  double argmax_ab = 0.0;
  double argmax_bc = 0.0;
  std::size_t opposing_steps = 0;  // steps where N(a|b) falls while N(b|c) rises
  std::size_t total_steps = 0;

  bool argmax_ordered() const { return argmax_ab < argmax_bc; }
  double opposing_fraction() const {
    return total_steps ? static_cast<double>(opposing_steps) / total_steps : 0.0;
  }
};

inline SharingReport sharing_report(const SweepResult& r, std::size_t column) {
  const Vector ab = r.matrix("a|b").col(column);
  const Vector bc = r.matrix("b|c").col(column);
  SharingReport rep;
  Eigen::Index i_ab = 0, i_bc = 0;
  ab.maxCoeff(&i_ab);
  bc.maxCoeff(&i_bc);
  rep.argmax_ab = r.grid.g_over_gc[i_ab];
  rep.argmax_bc = r.grid.g_over_gc[i_bc];
  for (Eigen::Index i = 0; i + 1 < ab.size(); ++i) {
    ++rep.total_steps;
    if (ab(i + 1) < ab(i) && bc(i + 1) > bc(i)) ++rep.opposing_steps;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sudden death and birth

inline constexpr double kZeroThreshold = 1e-12;

struct ZeroInterval {
  double death;
  double birth;       // first positive sample after the gap (t_end when open)
  bool open = false;  // still zero at the end of the trace
};

struct NegativityTrace {
  std::string label;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<ZeroInterval> events;
  double min_margin = std::numeric_limits<double>::infinity();

  std::size_t events_before(double t) const {
    return static_cast<std::size_t>(std::count_if(
        events.begin(), events.end(), [&](const ZeroInterval& e) { return !e.open && e.birth <= t; }));
  }

  double max_after(double t) const {
    double m = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] > t) m = std::max(m, values[k]);
    }
    return m;
  }
};

/// Zero intervals: runs of samples with N below `threshold` that span at
/// least one sample step.
inline std::vector<ZeroInterval> zero_intervals(const std::vector<double>& times,
                                               const std::vector<double>& values,
                                               double threshold = kZeroThreshold) {
  std::vector<ZeroInterval> out;
  std::size_t k = 0;
  while (k < values.size()) {
    if (values[k] >= threshold) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < values.size() && values[end + 1] < threshold) ++end;
    if (end > k) {
      const bool open = end + 1 == values.size();
      out.push_back({times[k], open ? times[end] : times[end + 1], open});
    }
    k = end + 1;
  }
  return out;
}

/// N(b|c)(t) from the vacuum, with the readout mode w when `aux` is given.
inline NegativityTrace esd_trace(const ModelParams& p, const std::optional<AuxParams>& aux,
                                 double t_end, double dt, double tol = kDefaultTolerance) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw InvalidParameter("t_end and dt must be > 0");
  const auto model = aux ? build_aux_hamiltonian(p, *aux) : build_sr_hamiltonian(p);
  const auto dd = drift_diffusion(model);
  NegativityTrace tr;
  tr.label = "b|c";
  const auto times = detail::uniform_times(t_end, dt);
  evolve_each(
      GaussianState::vacuum(model.n_modes), dd, times, tol,
      [&](double t, const GaussianState& s) {
        tr.times.push_back(t);
        tr.values.push_back(log_negativity(s, kModeB, kModeC));
      },
      &tr.min_margin);
  tr.events = zero_intervals(tr.times, tr.values);
  return tr;
}

// ---------------------------------------------------------------------------
// Inference through the readout mode

/// Readout mode relative to the s sector: omega_w = Omega + detuning.
struct ReadoutSpec {
  double detuning = 0.5;
  double psi = 0.1;
  double gamma_over_kappa = 0.05;

  AuxParams aux_for(const ModelParams& p) const {
    AuxParams aux;
    aux.omega_w = sr_coefficients(p).Omega + detuning * p.omega_r;
    aux.psi = psi * p.omega_r;
    aux.gamma = gamma_over_kappa * p.kappa;
    return aux;
  }
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidParameter("fit abscissa is constant");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

struct InferenceRow {
  double g_over_gc;
  double n_closed;  // N(b|c) with psi = 0
  double n_open;    // N(b|c) with the readout coupled
  double s_open;    // squeezing of w with the readout coupled
  bool converged;
};

struct InferenceResult {
  ReadoutSpec readout;
  double window = 0.0;
  double sample_dt = 0.0;
  std::vector<InferenceRow> rows;
  LinearFit open_vs_closed;   // n_open against n_closed
  LinearFit open_vs_squeeze;  // n_open against s_open
  double min_margin = std::numeric_limits<double>::infinity();

  bool squeezing_increases() const {
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      if (!(rows[i + 1].s_open > rows[i].s_open)) return false;
    }
    return true;
  }
  bool all_converged() const {
    return std::all_of(rows.begin(), rows.end(), [](const InferenceRow& r) { return r.converged; });
  }
};

inline InferenceResult inference_scan(const ModelParams& base, const ReadoutSpec& readout,
                                      const std::vector<double>& g_ratios,
                                      const AveragingOptions& opt = {}) {
  if (g_ratios.size() < 2) throw InvalidParameter("inference grid needs >= 2 points");
  std::vector<ModelParams> params;
  for (double r : g_ratios) {
    const auto p = with_coupling_ratio(base, r);
    if (phase_of(p) != Phase::Superradiant) {
      throw PhaseError("inference grid point g/g_c = " + std::to_string(r) +
                       " is not superradiant");
    }
    params.push_back(p);
  }
  InferenceResult res;
  res.readout = readout;
  res.window = opt.resolved_window(base);
  res.sample_dt = opt.dt;
  res.rows.resize(g_ratios.size());
  std::vector<double> margins(g_ratios.size(), std::numeric_limits<double>::infinity());
  const std::vector<NamedPartition> bc{{"b|c", kModeB, kModeC}};

  parallel_for(g_ratios.size(), opt.threads, [&](std::size_t i) {
    const auto& p = params[i];
    const auto closed = detail::averaged_measures(drift_diffusion(build_sr_hamiltonian(p)), 3,
                                                  bc, {}, res.window, opt.dt, opt.tol, margins[i]);
    const auto open = detail::averaged_measures(
        drift_diffusion(build_aux_hamiltonian(p, readout.aux_for(p))), 4, bc, {kModeW},
        res.window, opt.dt, opt.tol, margins[i]);
    auto& row = res.rows[i];
    row.g_over_gc = g_ratios[i];
    row.n_closed = closed.first[0];
    row.n_open = open.first[0];
    row.s_open = open.first[1];
    row.converged = averages_agree(closed.first[0], closed.second[0], opt.rel_change) &&
                    averages_agree(open.first[0], open.second[0], opt.rel_change) &&
                    averages_agree(open.first[1], open.second[1], opt.rel_change);
  });
  for (double m : margins) res.min_margin = std::min(res.min_margin, m);

  std::vector<double> nc, no, so;
  for (const auto& row : res.rows) {
    nc.push_back(row.n_closed);
    no.push_back(row.n_open);
    so.push_back(row.s_open);
  }
  res.open_vs_closed = fit_line(nc, no);
  res.open_vs_squeeze = fit_line(so, no);
  return res;
}

// ---------------------------------------------------------------------------
// Closed-form s sector

struct SModeMoments {
  double n_s;          // <s^dag s>
  cplx s_dag_squared;  // <s^dag s^dag>
};

/// Vacuum-start moments of the decoupled squeezed oscillator
/// H_s = Omega s^dag s + zeta (s^2 + s^dag^2).
inline SModeMoments s_mode_analytic(const PhaseCoefficients& c, double t) {
  const double eps = c.s_frequency();
  if (!(eps > 0.0)) throw DomainError("s sector is not oscillatory (Omega <= 2 zeta)");
  const double sn = std::sin(eps * t);
  SModeMoments m;
  m.n_s = 4.0 * c.zeta * c.zeta * sn * sn / (eps * eps);
  m.s_dag_squared = cplx(-2.0 * c.zeta * c.Omega * sn * sn / (eps * eps),
                         c.zeta * std::sin(2.0 * eps * t) / eps);
  return m;
}

/// <b^dag b>(t) from the damped (p, q) steady state plus the closed-form s
/// sector: (1/4) <p^dag p + q^dag q + p^dag q + q^dag p>_ss + (1/2) <s^dag s>(t).
inline double b_occupancy_composite(const ModelParams& p, double t) {
  const auto model = build_sr_collective(p);
  const auto dd = drift_diffusion(model);
  const Eigen::Index pq[] = {0, 1};
  const Matrix sigma = lyapunov_steady(restrict_modes(dd, pq));
  const GaussianState ss{Vector::Zero(4), sigma};
  const double pq_part =
      occupation(ss, 0) + occupation(ss, 1) + 2.0 * ladder_correlator(ss, 0, 1).real();
  return 0.25 * pq_part + 0.5 * s_mode_analytic(sr_coefficients(p), t).n_s;
}

// ---------------------------------------------------------------------------
// Critical detuning

/// Stroboscopic N(b|c) at a single point.
inline double stroboscopic_bc(const ModelParams& p, const StroboscopicOptions& opt = {}) {
  SweepGrid grid{"delta", {p.g / critical_coupling(p)}, {p.delta}};
  const auto r = stroboscopic_map(p, grid, opt);
  const auto& pt = r.points.front();
  if (pt.status != PointStatus::Ok) throw IntegrationError(pt.message, 0.0);
  return pt.value[r.partition_index("b|c")];
}

/// Bisects on |Delta| (Delta < 0) for the onset of stroboscopic N(b|c) at
/// fixed g/g_c. Requires N(b|c) = 0 at |Delta| = abs_lo and > 0 at abs_hi.
inline double critical_detuning(const ModelParams& base, double g_over_gc, double abs_lo,
                                double abs_hi, double tol = 1e-3,
                                const StroboscopicOptions& opt = {}) {
  if (!(abs_lo > 0.0 && abs_hi > abs_lo)) throw InvalidParameter("need 0 < |Delta|_lo < |Delta|_hi");
  auto entangled = [&](double abs_delta) {
    ModelParams p = base;
    p.delta = -abs_delta;
    return stroboscopic_bc(with_coupling_ratio(p, g_over_gc), opt) > kZeroThreshold;
  };
  if (entangled(abs_lo) || !entangled(abs_hi)) {
    throw InvalidParameter("|Delta| bracket does not straddle the entanglement onset");
  }
  while (abs_hi - abs_lo > tol) {
    const double mid = 0.5 * (abs_lo + abs_hi);
    (entangled(mid) ? abs_hi : abs_lo) = mid;
  }
  return 0.5 * (abs_lo + abs_hi);
}

// ---------------------------------------------------------------------------
// Single trajectory

struct TrajectoryTable {
  std::vector<std::string> labels;
  std::vector<double> times;
  std::vector<GaussianState> states;
  double min_margin = std::numeric_limits<double>::infinity();
};

/// Vacuum-start trajectory of the phase-appropriate model, or of the
/// readout-extended model when `aux` is given.
inline TrajectoryTable single_trajectory(const ModelParams& p, const std::optional<AuxParams>& aux,
                                         double t_end, double dt, double tol = kDefaultTolerance) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw InvalidParameter("t_end and dt must be > 0");
  const auto model = aux ? build_aux_hamiltonian(p, *aux) : build_phase_model(p);
  TrajectoryTable tab;
  tab.labels = model.labels;
  tab.times = detail::uniform_times(t_end, dt);
  evolve_each(
      GaussianState::vacuum(model.n_modes), drift_diffusion(model), tab.times, tol,
      [&](double, const GaussianState& s) { tab.states.push_back(s); }, &tab.min_margin);
  return tab;
}

}  // namespace dicke::experiments
