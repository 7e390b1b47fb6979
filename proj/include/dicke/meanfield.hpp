#pragma once

// Semiclassical dynamics of the two-ensemble Dicke model in scaled variables
// a = alpha/sqrt(N), b = beta/N, d = delta/N, wS = w_S/N, wT = w_T/N, which
// makes the flow independent of the atom number.

#include "dicke/errors.hpp"
#include "dicke/integrator.hpp"
#include "dicke/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace dicke::meanfield {

struct MeanFieldState {
  cplx a{0.0, 0.0};
  cplx b{0.0, 0.0};
  cplx d{0.0, 0.0};
  double wS = -0.5;
  double wT = -0.5;

  static MeanFieldState trivial() { return {}; }

  // Spin-length residuals wS^2 + |b|^2 - 1/4 and wT^2 + |d|^2 - 1/4.
  double residual_s() const { return wS * wS + std::norm(b) - 0.25; }
  double residual_t() const { return wT * wT + std::norm(d) - 0.25; }

  std::array<double, 8> to_array() const {
    return {a.real(), a.imag(), b.real(), b.imag(), d.real(), d.imag(), wS, wT};
  }

  template <class Range>
  static MeanFieldState from_array(const Range& x) {
    return {{x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}, x[6], x[7]};
  }

  double norm() const {
    double s = 0.0;
    for (double v : to_array()) s += v * v;
    return std::sqrt(s);
  }
};

inline MeanFieldState operator-(const MeanFieldState& x, const MeanFieldState& y) {
  return {x.a - y.a, x.b - y.b, x.d - y.d, x.wS - y.wS, x.wT - y.wT};
}

/// Time derivative of the scaled semiclassical state (no Langevin input).
inline MeanFieldState rhs(const MeanFieldState& s, const ModelParams& p) {
  const cplx i1(0.0, 1.0);
  const double x = 2.0 * s.a.real();  // a + a*
  MeanFieldState out;
  out.a = -(p.kappa - i1 * p.delta) * s.a - i1 * p.g * 2.0 * (s.b.real() + s.d.real());
  out.b = -i1 * p.omega_r * s.b + 2.0 * i1 * p.g * x * s.wS;
  out.d = -i1 * p.omega_r * s.d + 2.0 * i1 * p.g * x * s.wT;
  // i g x (b - b*) = -2 g x Im b
  out.wS = -2.0 * p.g * x * s.b.imag();
  out.wT = -2.0 * p.g * x * s.d.imag();
  return out;
}

/// Real 8x8 Jacobian of the flow over (Re a, Im a, Re b, Im b, Re d, Im d, wS, wT).
inline Eigen::Matrix<double, 8, 8> jacobian(const MeanFieldState& s, const ModelParams& p) {
  Eigen::Matrix<double, 8, 8> j = Eigen::Matrix<double, 8, 8>::Zero();
  const double k = p.kappa, dl = p.delta, w = p.omega_r, g = p.g;
  const double ar = s.a.real(), bi = s.b.imag(), di = s.d.imag();
  // d(Re a)/dt = -k ar - dl ai
  j(0, 0) = -k;
  j(0, 1) = -dl;
  // d(Im a)/dt = dl ar - k ai - 2 g (br + dr)
  j(1, 0) = dl;
  j(1, 1) = -k;
  j(1, 2) = -2.0 * g;
  j(1, 4) = -2.0 * g;
  // d(Re b)/dt = w bi ; d(Im b)/dt = -w br + 4 g ar wS
  j(2, 3) = w;
  j(3, 2) = -w;
  j(3, 0) = 4.0 * g * s.wS;
  j(3, 6) = 4.0 * g * ar;
  j(4, 5) = w;
  j(5, 4) = -w;
  j(5, 0) = 4.0 * g * s.wT;
  j(5, 7) = 4.0 * g * ar;
  // dwS/dt = -4 g ar bi
  j(6, 0) = -4.0 * g * bi;
  j(6, 3) = -4.0 * g * ar;
  j(7, 0) = -4.0 * g * di;
  j(7, 5) = -4.0 * g * ar;
  return j;
}

inline constexpr double kStabilityTolerance = 1e-9;

/// Largest real part of the Jacobian spectrum. Conservation laws and the
/// lossless relative sector contribute neutral (zero real part) directions.
inline double max_growth_rate(const MeanFieldState& s, const ModelParams& p) {
  return Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>>(jacobian(s, p), false)
      .eigenvalues()
      .real()
      .maxCoeff();
}

inline bool is_stable(const MeanFieldState& s, const ModelParams& p) {
  return max_growth_rate(s, p) <= kStabilityTolerance;
}

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
  std::vector<double> times;
  std::vector<MeanFieldState> states;

  /// Largest |residual(t) - residual(0)| over both spins.
  double conservation_drift() const {
    if (states.empty()) return 0.0;
    const double s0 = states.front().residual_s(), t0 = states.front().residual_t();
    double worst = 0.0;
    for (const auto& s : states) {
      worst = std::max({worst, std::abs(s.residual_s() - s0), std::abs(s.residual_t() - t0)});
    }
    return worst;
  }
};

namespace detail {

struct Flow {
  ModelParams p;
  void operator()(const ode::State& x, ode::State& dxdt, double /*t*/) const {
    const auto d = rhs(MeanFieldState::from_array(x), p).to_array();
    dxdt.assign(d.begin(), d.end());
  }
};

}  // namespace detail

/// Adaptive integration recording every accepted step.
inline Trajectory integrate(const MeanFieldState& s0, const ModelParams& p, double t_end,
                            double tol) {
  p.validate();
  if (!(t_end > 0.0)) throw InvalidParameter("t_end must be > 0");
  const auto init = s0.to_array();
  Trajectory traj;
  ode::integrate_steps(detail::Flow{p}, ode::State(init.begin(), init.end()), 0.0, t_end, tol,
                       [&](const ode::State& x, double t) {
                         traj.times.push_back(t);
                         traj.states.push_back(MeanFieldState::from_array(x));
                       });
  return traj;
}

struct SteadyRun {
  MeanFieldState state;
  double time;           // time at which the steady criterion was met
  bool converged;
  double conservation_drift;
};

/// Integrates until |ds/dt| / |s| < rate_tol holds at every check over a
/// window of `hold_periods` recoil periods, or until `t_max`.
inline SteadyRun integrate_to_steady(const MeanFieldState& s0, const ModelParams& p, double tol,
                                     double t_max, double rate_tol = 1e-10,
                                     double hold_periods = 10.0) {
  p.validate();
  const double period = 2.0 * M_PI / p.omega_r;
  const double hold = hold_periods * period;
  const double check_dt = 0.05 * period;
  // Capping the step keeps the weakly damped atomic oscillation from being
  // sustained by step-size chatter near the fixed point.
  const double max_step = 0.01 * period;
  const auto n_checks = static_cast<std::size_t>(std::ceil(t_max / check_dt));
  std::vector<double> times(n_checks);
  for (std::size_t i = 0; i < n_checks; ++i) times[i] = (i + 1) * check_dt;

  const double r0s = s0.residual_s(), r0t = s0.residual_t();
  SteadyRun run{s0, 0.0, false, 0.0};
  double quiet_since = -1.0;
  struct Done {};
  const auto init = s0.to_array();
  try {
    ode::integrate_at(detail::Flow{p}, ode::State(init.begin(), init.end()), 0.0, times, tol,
                      [&](const ode::State& x, double t) {
                        const auto s = MeanFieldState::from_array(x);
                        run.state = s;
                        run.time = t;
                        run.conservation_drift =
                            std::max({run.conservation_drift, std::abs(s.residual_s() - r0s),
                                      std::abs(s.residual_t() - r0t)});
                        const double rate = rhs(s, p).norm() / std::max(s.norm(), 1e-300);
                        if (rate < rate_tol) {
                          if (quiet_since < 0.0) quiet_since = t;
                          if (t - quiet_since >= hold) {
                            run.converged = true;
                            throw Done{};
                          }
                        } else {
                          quiet_since = -1.0;
                        }
                      },
                      max_step);
  } catch (const Done&) {
  }
  return run;
}

// ---------------------------------------------------------------------------
// Fixed points

enum class Branch { Trivial, Plus, Minus };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Trivial: return "trivial";
    case Branch::Plus: return "plus";
    case Branch::Minus: return "minus";
  }
  return "?";
}

struct FixedPoint {
  Branch branch;
  MeanFieldState state;
  bool stable;
  double growth_rate;  // max Re of the Jacobian spectrum
};

/// Closed-form steady states: the trivial state, plus the two symmetry-broken
/// branches above threshold. Exactly at threshold only the trivial state is
/// returned.
inline std::vector<FixedPoint> steady_states(const ModelParams& p) {
  p.validate();
  std::vector<FixedPoint> out;
  const auto trivial = MeanFieldState::trivial();
  const double rate0 = max_growth_rate(trivial, p);
  out.push_back({Branch::Trivial, trivial, rate0 <= kStabilityTolerance, rate0});
  if (phase_of(p) != Phase::Superradiant) return out;

  const double gc = critical_coupling(p);
  const double mu = (gc / p.g) * (gc / p.g);
  const double amp = 0.5 * std::sqrt(1.0 - mu * mu);
  // wS = omega_R (kappa^2 + Delta^2) / (16 g^2 Delta) = -mu/2 for Delta < 0
  const double w = p.delta < 0.0 ? -0.5 * mu : 0.5 * mu;
  const cplx i1(0.0, 1.0);
  for (double sign : {1.0, -1.0}) {
    MeanFieldState s;
    s.b = s.d = sign * amp;
    s.wS = s.wT = w;
    s.a = -2.0 * i1 * p.g * (s.b + s.d) / (p.kappa - i1 * p.delta);
    const double rate = max_growth_rate(s, p);
    out.push_back({sign > 0 ? Branch::Plus : Branch::Minus, s, rate <= kStabilityTolerance, rate});
  }
  return out;
}

struct BifurcationRow {
  double g;
  double g_over_gc;
  Branch branch;
  double abs_a;
  double wS;
  bool stable;
};

/// Tabulates every fixed point over an ascending grid of couplings.
inline std::vector<BifurcationRow> bifurcation_scan(const ModelParams& base,
                                                    const std::vector<double>& g_grid) {
  if (!std::is_sorted(g_grid.begin(), g_grid.end())) {
    throw InvalidParameter("coupling grid must be ascending");
  }
  const double gc = critical_coupling(base);
  std::vector<BifurcationRow> rows;
  for (double g : g_grid) {
    ModelParams p = base;
    p.g = g;
    for (const auto& fp : steady_states(p)) {
      rows.push_back({g, g / gc, fp.branch, std::abs(fp.state.a), fp.state.wS, fp.stable});
    }
  }
  return rows;
}

/// First grid coupling at which the trivial branch is unstable, if any.
inline std::optional<double> trivial_instability_onset(const std::vector<BifurcationRow>& rows) {
  for (const auto& r : rows) {
    if (r.branch == Branch::Trivial && !r.stable) return r.g;
  }
  return std::nullopt;
}

}  // namespace dicke::meanfield
