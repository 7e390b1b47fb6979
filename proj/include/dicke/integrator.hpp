#pragma once

// Thin adapter over Boost.Odeint's controlled Dormand-Prince 5(4) stepper.

#include "dicke/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <span>
#include <string>
#include <vector>

namespace dicke::ode {

using State = std::vector<double>;

inline void check_tolerance(double tol) {
  if (!(tol > 1e-14 && tol < 1e-3)) {
    throw InvalidParameter("integrator tolerance must lie in (1e-14, 1e-3)");
  }
}

inline bool all_finite(const State& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Integrates dx/dt = f(x, t) from `t0` and calls `observe(x, t)` at each of
/// `times` (ascending, all >= t0). Dense output keeps the step sequence
/// independent of the sampling grid.
template <class System, class Observer>
void integrate_at(System&& system, State x, double t0, std::span<const double> times,
                  double tol, Observer&& observe, double max_step = 0.0) {
  namespace odeint = boost::numeric::odeint;
  check_tolerance(tol);
  if (times.empty()) return;
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < t0) {
    throw InvalidParameter("sample times must be ascending and not before the start time");
  }
  std::vector<double> grid;
  grid.reserve(times.size() + 1);
  if (times.front() > t0) grid.push_back(t0);
  grid.insert(grid.end(), times.begin(), times.end());
  const bool skip_first = times.front() > t0;

  auto stepper = max_step > 0.0
                     ? odeint::make_dense_output(tol, tol, max_step,
                                                 odeint::runge_kutta_dopri5<State>())
                     : odeint::make_dense_output(tol, tol, odeint::runge_kutta_dopri5<State>());
  std::size_t index = 0;
  auto observer = [&](const State& state, double t) {
    if (!all_finite(state)) throw IntegrationError("non-finite state during integration", t);
    if (skip_first && index++ == 0) return;
    observe(state, t);
  };
  const double dt0 = std::max(1e-6, (grid.back() - grid.front()) * 1e-6);
  try {
    odeint::integrate_times(stepper, system, x, grid.begin(), grid.end(), dt0, observer);
  } catch (const IntegrationError&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("step-size control failed: ") + e.what(), grid.back());
  }
}

/// Adaptive integration reporting every accepted step (including t0).
template <class System, class Observer>
void integrate_steps(System&& system, State x, double t0, double t_end, double tol,
                     Observer&& observe) {
  namespace odeint = boost::numeric::odeint;
  check_tolerance(tol);
  if (!(t_end > t0)) throw InvalidParameter("t_end must exceed the start time");
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  auto observer = [&](const State& state, double t) {
    if (!all_finite(state)) throw IntegrationError("non-finite state during integration", t);
    observe(state, t);
  };
  try {
    odeint::integrate_adaptive(stepper, system, x, t0, t_end, 1e-3, observer);
  } catch (const IntegrationError&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegrationError(std::string("step-size control failed: ") + e.what(), t_end);
  }
}

}  // namespace dicke::ode
