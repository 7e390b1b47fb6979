// Acceptance gate: one PASS/FAIL line per criterion. Tolerances are fixed
// here; the process exits nonzero when any criterion fails.

#include "dicke/experiments.hpp"
#include "dicke/fock_oracle.hpp"
#include "dicke/gaussian.hpp"
#include "dicke/meanfield.hpp"
#include "dicke/model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace dicke;
namespace ex = dicke::experiments;
namespace mf = dicke::meanfield;

namespace {

// Pinned tolerances.
constexpr double kOnsetRelTol = 0.01;
constexpr double kBranchRelTol = 1e-6;
constexpr double kOracleTol = 1e-4;
constexpr double kOracleCutoffTol = 1e-8;
constexpr double kSModeTol = 1e-8;
constexpr double kCompositeTol = 1e-6;
constexpr double kBasisTol = 1e-10;
constexpr double kSeparableTol = 1e-12;
constexpr double kLateNegativity = 1e-3;
constexpr double kMinR2 = 0.99;
constexpr double kMeanFieldTol = 1e-12;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Physicality bookkeeping shared by all criteria.
double g_min_margin = std::numeric_limits<double>::infinity();
double g_worst_drift_ratio = 0.0;  // conservation drift / integrator tol

void note_margin(double m) { g_min_margin = std::min(g_min_margin, m); }

ModelParams params(double delta, double kappa, double ratio) {
  ModelParams p;
  p.delta = delta;
  p.kappa = kappa;
  return with_coupling_ratio(p, ratio);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(a + (b - a) * k / (n - 1));
  return v;
}

double worst_gap(const std::vector<GaussianState>& a, const std::vector<GaussianState>& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    w = std::max({w, (a[i].cov - b[i].cov).cwiseAbs().maxCoeff(),
                  (a[i].mean - b[i].mean).cwiseAbs().maxCoeff()});
  }
  return w;
}

Outcome critical_coupling_onset() {
  ModelParams base;
  base.delta = -2.0;
  base.kappa = 0.05;
  const double gc = std::sqrt(base.omega_r * (4.0 + 0.0025)) / (2.0 * std::sqrt(2.0) * std::sqrt(2.0));
  std::vector<double> grid;
  for (int k = 0; k <= 400; ++k) grid.push_back(0.4 + 0.0005 * k);
  const auto onset = mf::trivial_instability_onset(mf::bifurcation_scan(base, grid));
  if (!onset) return {false, "no instability found on the grid"};
  const double rel = std::abs(*onset - gc) / gc;
  return {rel <= kOnsetRelTol && std::abs(gc - 0.50016) < 1e-5,
          "onset " + fmt("%.5f", *onset) + " vs g_c " + fmt("%.5f", gc) + ", rel " + fmt("%.2e", rel)};
}

Outcome meanfield_closed_form() {
  bool ok = true;
  std::ostringstream d;
  for (double r : {1.2, 1.5, 2.0}) {
    const auto p = params(-2.0, 0.05, r);
    mf::MeanFieldState s0;
    s0.a = cplx(1e-6, 0.0);
    const auto run = mf::integrate_to_steady(s0, p, kMeanFieldTol, 2e5);
    const auto fps = mf::steady_states(p);
    const auto& near = (run.state - fps[1].state).norm() < (run.state - fps[2].state).norm()
                           ? fps[1].state
                           : fps[2].state;
    const double rel = (run.state - near).norm() / near.norm();
    g_worst_drift_ratio = std::max(g_worst_drift_ratio, run.conservation_drift / kMeanFieldTol);
    ok = ok && run.converged && rel < kBranchRelTol;
    d << "r=" << r << ": rel " << fmt("%.1e", rel) << (run.converged ? "" : " (not converged)")
      << "; ";
  }
  const auto two = mf::steady_states(params(-2.0, 0.05, 2.0))[1].state;
  ok = ok && std::abs(two.wS + 0.125) < 1e-12 && std::abs(std::abs(two.b) - 0.48412) < 5e-6;
  d << "wS(2g_c) " << fmt("%.6f", two.wS) << ", |b| " << fmt("%.5f", std::abs(two.b));
  return {ok, d.str()};
}

Outcome oracle_equivalence() {
  ModelParams p;
  p.delta = -1.0;
  p.kappa = 0.05;
  p.g = 0.1;
  const auto m = build_normal_two_mode(p);
  const auto t = linspace(0.0, 10.0, 21);
  const auto o15 = fock_oracle(m, 15, t);
  const auto o20 = fock_oracle(m, 20, t);
  double margin = std::numeric_limits<double>::infinity();
  std::vector<GaussianState> engine;
  evolve_each(GaussianState::vacuum(2), drift_diffusion(m), t, 1e-12,
              [&](double, const GaussianState& s) { engine.push_back(s); }, &margin);
  note_margin(margin);
  const double gap = worst_gap(o15.moments, engine);
  const double conv = worst_gap(o15.moments, o20.moments);
  return {gap < kOracleTol && conv < kOracleCutoffTol && o15.reliable,
          "engine-oracle " + fmt("%.2e", gap) + ", cutoff 15 vs 20 " + fmt("%.2e", conv)};
}

Outcome s_mode_regression() {
  const auto p = params(-1.0, 0.05, 1.05);
  const auto c = sr_coefficients(p);
  const double eps = c.s_frequency();
  const auto t = linspace(0.0, 20.0 * M_PI / eps, 401);
  const auto mix = collective_transform();
  double worst = 0.0, margin = std::numeric_limits<double>::infinity();
  evolve_each(
      GaussianState::vacuum(3), drift_diffusion(build_sr_hamiltonian(p)), t, 1e-12,
      [&](double tt, const GaussianState& s) {
        const auto pqs = mode_transform(s, mix.forward);
        const auto ref = ex::s_mode_analytic(c, tt);
        worst = std::max({worst, std::abs(occupation(pqs, 2) - ref.n_s),
                          std::abs(std::conj(anomalous_correlator(pqs, 2, 2)) - ref.s_dag_squared)});
      },
      &margin);
  note_margin(margin);

  // b occupancy after the damped (p, q) sector has settled.
  const auto q = params(-2.0, 0.05, 1.5);
  const auto late = linspace(1500.0, 1600.0, 41);
  double worst_b = 0.0;
  evolve_each(
      GaussianState::vacuum(3), drift_diffusion(build_sr_hamiltonian(q)), late, 1e-12,
      [&](double tt, const GaussianState& s) {
        worst_b = std::max(worst_b, std::abs(occupation(s, 1) - ex::b_occupancy_composite(q, tt)));
      },
      &margin);
  note_margin(margin);
  return {worst < kSModeTol && worst_b < kCompositeTol,
          "s-mode " + fmt("%.2e", worst) + ", b occupancy " + fmt("%.2e", worst_b)};
}

Outcome basis_equivalence() {
  double worst = 0.0;
  const auto mix = collective_transform();
  for (double r : {0.9, 1.05, 1.5}) {
    const auto p = params(-1.0, 0.05, r);
    const auto abc = build_phase_model(p);
    // Photon loss on a in one basis, the four-term collective form in the other.
    const auto pqs = r < 1.0 ? build_normal_collective(p) : build_sr_collective(p);
    const auto t = linspace(0.0, 100.0, 101);
    const auto a = evolve(GaussianState::vacuum(3), drift_diffusion(abc), t, 1e-13);
    const auto b = evolve(GaussianState::vacuum(3), drift_diffusion(pqs), t, 1e-13);
    std::vector<GaussianState> a_rot;
    for (const auto& s : a) a_rot.push_back(mode_transform(s, mix.forward));
    worst = std::max(worst, worst_gap(a_rot, b));
  }
  return {worst < kBasisTol, "max |cov difference| " + fmt("%.2e", worst)};
}

Outcome phase_separability() {
  ModelParams base;
  base.kappa = 0.05;
  ex::SweepGrid normal{"delta", {0.9}, {-1.0, -2.0}};
  const auto r = ex::stroboscopic_map(base, normal);
  note_margin(r.min_margin);
  double peak = 0.0;
  const auto k = r.partition_index("b|c");
  bool ok = true;
  for (const auto& pt : r.points) {
    ok = ok && pt.status == ex::PointStatus::Ok;
    if (pt.status == ex::PointStatus::Ok) peak = std::max(peak, pt.peak[k]);
  }
  // The vacuum start leaves a b|c transient that has died out by t ~ 400;
  // after that every dense sample must be separable as well.
  double settled = 0.0;
  for (double delta : {-1.0, -2.0}) {
    const auto tab = ex::single_trajectory(params(delta, 0.05, 0.9), std::nullopt, 800.0, 0.05);
    double transient = 0.0;
    for (std::size_t i = 0; i < tab.times.size(); ++i) {
      const double n = log_negativity(tab.states[i], ex::kModeB, ex::kModeC);
      if (tab.times[i] < 400.0) {
        transient = std::max(transient, n);
      } else {
        settled = std::max(settled, n);
      }
    }
    note_margin(tab.min_margin);
    std::printf("INFO  g=0.9 g_c, Delta=%g: transient max N(b|c) on [0,400) %.2e\n", delta, transient);
  }
  ex::SweepGrid sr{"delta", {1.5}, {-2.0}};
  const auto s = ex::stroboscopic_map(base, sr);
  note_margin(s.min_margin);
  const double n_sr = s.points[0].value[k];
  return {ok && peak <= kSeparableTol && settled <= kSeparableTol && n_sr > kSeparableTol,
          "normal N(b|c): stroboscopic peak " + fmt("%.1e", peak) + ", dense max on [400,800] " +
              fmt("%.1e", settled) + "; superradiant stroboscopic N(b|c) " + fmt("%.4f", n_sr)};
}

Outcome entanglement_sharing() {
  ModelParams base;
  base.kappa = 0.05;
  ex::SweepGrid grid{"delta", linspace(0.5, 2.5, 21), {-1.0, -2.0}};
  const auto r = ex::time_averaged_sweep(base, grid);
  note_margin(r.min_margin);
  bool ok = true;
  std::ostringstream d;
  for (std::size_t j = 0; j < grid.y.size(); ++j) {
    const auto rep = ex::sharing_report(r, j);
    ok = ok && rep.argmax_ordered() && rep.opposing_fraction() >= 0.5;
    d << "Delta=" << grid.y[j] << ": argmax a|b " << rep.argmax_ab << " < b|c " << rep.argmax_bc
      << ", opposing " << rep.opposing_steps << "/" << rep.total_steps
      << (j + 1 < grid.y.size() ? "; " : "");
  }
  for (const auto& pt : r.points) ok = ok && pt.status == ex::PointStatus::Ok;
  return {ok, d.str()};
}

Outcome sudden_death_and_birth() {
  const auto p = params(-1.0, 0.05, 1.05);
  const auto closed = ex::esd_trace(p, std::nullopt, 100.0, 0.01);
  const auto open = ex::esd_trace(p, default_aux(p), 3000.0, 0.05);
  note_margin(closed.min_margin);
  note_margin(open.min_margin);
  const auto deaths = closed.events_before(50.0);
  const double late = open.max_after(2000.0);
  return {deaths >= 3 && late < kLateNegativity,
          std::to_string(deaths) + " zero intervals before t=50, max N(t>2000) with readout " +
              fmt("%.2e", late)};
}

Outcome inference_linearity() {
  ModelParams base;
  base.delta = -1.0;
  base.kappa = 0.05;
  const auto res = ex::inference_scan(base, ex::ReadoutSpec{}, linspace(1.01, 1.10, 10));
  g_min_margin = std::min(g_min_margin, res.min_margin);
  for (double scale : {0.5, 1.5}) {
    ex::ReadoutSpec alt;
    alt.psi *= scale;
    const auto s = ex::inference_scan(base, alt, linspace(1.01, 1.10, 10));
    std::printf("INFO  readout coupling x%.1f: R2 %.4f / %.4f\n", scale, s.open_vs_closed.r_squared,
                s.open_vs_squeeze.r_squared);
  }
  return {res.open_vs_closed.r_squared >= kMinR2 && res.open_vs_squeeze.r_squared >= kMinR2,
          "R2 N_open vs N_closed " + fmt("%.4f", res.open_vs_closed.r_squared) +
              ", N_open vs S " + fmt("%.4f", res.open_vs_squeeze.r_squared)};
}

Outcome physicality() {
  return {g_min_margin >= -kPhysicalityTolerance && g_worst_drift_ratio <= 100.0,
          "min eig(sigma + i Omega/2) " + fmt("%.2e", g_min_margin) +
              ", spin drift / tol " + fmt("%.2f", g_worst_drift_ratio)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;  // runtime limit; exceeding it fails the criterion
  };
  const std::vector<Criterion> criteria{
      {"critical coupling", critical_coupling_onset, 10},
      {"mean-field closed form", meanfield_closed_form, 30},
      {"oracle equivalence", oracle_equivalence, 120},
      {"s-mode and b-occupancy closed forms", s_mode_regression, 30},
      {"dissipator basis equivalence", basis_equivalence, 30},
      {"phase separability", phase_separability, 120},
      {"entanglement sharing", entanglement_sharing, 600},
      {"sudden death and birth", sudden_death_and_birth, 300},
      {"inference linearity", inference_linearity, 600},
      {"physicality", physicality, 600},
  };
  int failures = 0;
  for (const auto& [name, run, budget] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > budget) {
      o.pass = false;
      o.detail += " (over the " + fmt("%.0f", budget) + "s budget)";
    }
    std::printf("%s  %-36s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
