#include "dicke/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dicke;
namespace ex = dicke::experiments;

namespace {

ModelParams at(double delta, double ratio, double kappa = 0.05) {
  ModelParams p;
  p.delta = delta;
  p.kappa = kappa;
  return with_coupling_ratio(p, ratio);
}

}  // namespace

TEST(ZeroIntervals, IgnoresIsolatedZeroSamples) {
  const std::vector<double> t{0, 1, 2, 3, 4, 5, 6};
  const std::vector<double> v{0.0, 0.3, 0.0, 0.2, 0.0, 0.0, 0.1};
  const auto iv = ex::zero_intervals(t, v);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_DOUBLE_EQ(iv[0].death, 4.0);
  EXPECT_DOUBLE_EQ(iv[0].birth, 6.0);
  EXPECT_FALSE(iv[0].open);
}

TEST(ZeroIntervals, TrailingRunIsOpen) {
  const std::vector<double> t{0, 1, 2, 3};
  const std::vector<double> v{0.5, 0.0, 0.0, 0.0};
  const auto iv = ex::zero_intervals(t, v);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_TRUE(iv[0].open);
  ex::NegativityTrace tr;
  tr.events = iv;
  EXPECT_EQ(tr.events_before(10.0), 0u);
}

TEST(FitLine, ExactLineHasUnitR2) {
  const auto f = ex::fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
}

TEST(FitLine, UncorrelatedDataHasLowR2) {
  const auto f = ex::fit_line({0, 1, 2, 3}, {1, -1, -1, 1});
  EXPECT_NEAR(f.slope, 0.0, 1e-14);
  EXPECT_NEAR(f.r_squared, 0.0, 1e-14);
}

TEST(WindowAverager, LinearSignal) {
  ex::WindowAverager avg(2, 10.0);
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.1 * k;
    avg.add(t, {3.0, t});
  }
  EXPECT_NEAR(avg.average(0), 3.0, 1e-12);
  EXPECT_NEAR(avg.doubled_average(0), 3.0, 1e-12);
  EXPECT_NEAR(avg.average(1), 5.0, 1e-12);
  EXPECT_NEAR(avg.doubled_average(1), 10.0, 1e-12);
}

TEST(SModeAnalytic, VanishesAtHalfPeriods) {
  const auto c = sr_coefficients(at(-1.0, 1.3));
  const double eps = c.s_frequency();
  for (double t : {0.0, M_PI / eps, 7.0 * M_PI / eps}) {
    const auto m = ex::s_mode_analytic(c, t);
    EXPECT_NEAR(m.n_s, 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m.s_dag_squared), 0.0, 1e-12);
  }
  EXPECT_GT(ex::s_mode_analytic(c, 0.5 * M_PI / eps).n_s, 0.0);
}

TEST(SModeAnalytic, NoSqueezingAtThreshold) {
  const auto c = sr_coefficients(at(-1.0, 1.0));
  const auto m = ex::s_mode_analytic(c, 3.7);
  EXPECT_NEAR(m.n_s, 0.0, 1e-12);
}

TEST(SModeAnalytic, AgreesWithEvolvedState) {
  const auto p = at(-2.0, 1.5);
  const auto c = sr_coefficients(p);
  const auto mix = collective_transform();
  std::vector<double> t;
  for (int k = 0; k <= 20; ++k) t.push_back(0.37 * k);
  evolve_each(GaussianState::vacuum(3), drift_diffusion(build_sr_hamiltonian(p)), t, 1e-12,
              [&](double tt, const GaussianState& s) {
                const auto pqs = mode_transform(s, mix.forward);
                const auto ref = ex::s_mode_analytic(c, tt);
                EXPECT_NEAR(occupation(pqs, 2), ref.n_s, 1e-9);
                EXPECT_NEAR(std::abs(std::conj(anomalous_correlator(pqs, 2, 2)) -
                                     ref.s_dag_squared),
                            0.0, 1e-9);
              });
}

TEST(SharingReport, ReadsColumnsOfTheSweep) {
  ex::SweepResult r;
  r.grid = {"delta", {0.5, 1.0, 1.5, 2.0}, {-1.0}};
  r.partitions = {"a|b", "b|c", "a|c"};
  const double ab[] = {0.1, 0.4, 0.3, 0.2};
  const double bc[] = {0.0, 0.1, 0.2, 0.5};
  for (int i = 0; i < 4; ++i) {
    ex::SweepPoint pt;
    pt.value = {ab[i], bc[i], ab[i]};
    r.points.push_back(pt);
  }
  const auto rep = ex::sharing_report(r, 0);
  EXPECT_DOUBLE_EQ(rep.argmax_ab, 1.0);
  EXPECT_DOUBLE_EQ(rep.argmax_bc, 2.0);
  EXPECT_TRUE(rep.argmax_ordered());
  EXPECT_EQ(rep.opposing_steps, 2u);
  EXPECT_EQ(rep.total_steps, 3u);
}

TEST(SweepResult, MatrixMasksNonOkPoints) {
  ex::SweepResult r;
  r.grid = {"kappa", {0.5, 1.5}, {0.05}};
  r.partitions = {"a|b"};
  ex::SweepPoint ok, bad;
  ok.value = {0.2};
  bad.status = ex::PointStatus::Unstable;
  r.points = {ok, bad};
  const Matrix m = r.matrix("a|b");
  EXPECT_DOUBLE_EQ(m(0, 0), 0.2);
  EXPECT_TRUE(std::isnan(m(1, 0)));
  EXPECT_THROW(r.partition_index("x|y"), InvalidParameter);
}

TEST(Stroboscopic, NormalPhaseIsSeparableAndSymmetric) {
  ModelParams base;
  base.kappa = 0.05;
  const auto r = ex::stroboscopic_map(base, {"delta", {0.5, 0.9}, {-1.0}});
  for (const auto& pt : r.points) {
    ASSERT_EQ(pt.status, ex::PointStatus::Ok);
    EXPECT_LE(pt.peak[r.partition_index("b|c")], 1e-12);
    EXPECT_NEAR(pt.value[r.partition_index("a|b")], pt.value[r.partition_index("a|c")], 1e-10);
    EXPECT_GT(pt.value[r.partition_index("a|b")], 0.0);
  }
  EXPECT_GE(r.min_margin, -kPhysicalityTolerance);
}

TEST(Stroboscopic, FlagsUnstableAndSingularPoints) {
  ModelParams base;
  base.kappa = 0.05;
  const auto r = ex::stroboscopic_map(base, {"delta", {0.5}, {1.0, 0.0, -1.0}});
  EXPECT_EQ(r.at(0, 0).status, ex::PointStatus::Unstable);
  EXPECT_EQ(r.at(0, 1).status, ex::PointStatus::Failed);
  EXPECT_EQ(r.at(0, 2).status, ex::PointStatus::Ok);
  EXPECT_FALSE(r.at(0, 0).message.empty());
}

TEST(Stroboscopic, RejectsBadInput) {
  ModelParams base;
  EXPECT_THROW(ex::stroboscopic_map(base, {"delta", {}, {-1.0}}), InvalidParameter);
  EXPECT_THROW(ex::stroboscopic_map(base, {"omega", {0.5}, {-1.0}}), InvalidParameter);
  ex::StroboscopicOptions opt;
  opt.k_max = opt.k_min - 1;
  EXPECT_THROW(ex::stroboscopic_map(base, {"delta", {0.5}, {-1.0}}, opt), InvalidParameter);
}

TEST(TimeAveraged, RejectsShortWindow) {
  ModelParams base;
  base.delta = -1.0;
  ex::AveragingOptions opt;
  opt.window = 10.0;
  EXPECT_THROW(ex::time_averaged_sweep(base, {"kappa", {1.5}, {0.05}}, opt), InvalidParameter);
}

TEST(TimeAveraged, ShortSweepConvergesAndKeepsParity) {
  ModelParams base;
  base.delta = -2.0;
  ex::AveragingOptions opt;
  opt.window = 200.0;
  opt.dt = 0.1;
  const auto r = ex::time_averaged_sweep(base, {"kappa", {0.8, 1.5}, {0.05}}, opt);
  for (const auto& pt : r.points) {
    ASSERT_EQ(pt.status, ex::PointStatus::Ok);
    EXPECT_NEAR(pt.value[0], pt.value[2], 1e-8);
    EXPECT_EQ(pt.doubled.size(), 3u);
  }
  EXPECT_DOUBLE_EQ(r.window, 200.0);
}

TEST(Inference, RejectsNormalPhasePoints) {
  ModelParams base;
  base.delta = -1.0;
  base.kappa = 0.05;
  EXPECT_THROW(ex::inference_scan(base, {}, {0.9, 1.05}), PhaseError);
  EXPECT_THROW(ex::inference_scan(base, {}, {1.05}), InvalidParameter);
}

TEST(Inference, ClosedColumnMatchesTimeAveragedSweep) {
  ModelParams base;
  base.delta = -1.0;
  base.kappa = 0.05;
  ex::AveragingOptions opt;
  opt.window = 200.0;
  opt.dt = 0.1;
  const auto inf = ex::inference_scan(base, {}, {1.02, 1.06}, opt);
  const auto sweep = ex::time_averaged_sweep(base, {"kappa", {1.02, 1.06}, {0.05}}, opt);
  const auto k = sweep.partition_index("b|c");
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(inf.rows[i].n_closed, sweep.at(i, 0).value[k], 1e-12);
  }
}

TEST(Inference, DecoupledReadoutHasNoFit) {
  ModelParams base;
  base.delta = -1.0;
  base.kappa = 0.05;
  ex::ReadoutSpec off;
  off.psi = 0.0;
  ex::AveragingOptions opt;
  opt.window = 100.0;
  opt.dt = 0.1;
  // Squeezing of an untouched w is identically zero, so no fit exists.
  EXPECT_THROW(ex::inference_scan(base, off, {1.02, 1.06}, opt), InvalidParameter);
}

TEST(Esd, ClosedTraceDiesAndRevives) {
  const auto tr = ex::esd_trace(at(-1.0, 1.05), std::nullopt, 50.0, 0.01);
  EXPECT_GE(tr.events_before(50.0), 3u);
  EXPECT_GT(*std::max_element(tr.values.begin(), tr.values.end()), 0.0);
  EXPECT_GE(tr.min_margin, -kPhysicalityTolerance);
}

TEST(CriticalDetuning, RequiresBracket) {
  ModelParams base;
  base.kappa = 0.05;
  EXPECT_THROW(ex::critical_detuning(base, 1.5, 2.0, 1.0), InvalidParameter);
}

TEST(SingleTrajectory, ReadoutAddsMode) {
  const auto p = at(-1.0, 1.05);
  const auto tab = ex::single_trajectory(p, default_aux(p), 1.0, 0.5);
  EXPECT_EQ(tab.labels, (std::vector<std::string>{"a", "b", "c", "w"}));
  ASSERT_EQ(tab.states.size(), 3u);
  EXPECT_EQ(tab.states.back().n_modes(), 4);
}

TEST(ParallelFor, RethrowsTaskErrors) {
  std::vector<int> hit(16, 0);
  ex::parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] = 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 16);
  EXPECT_THROW(ex::parallel_for(8, 3,
                                [](std::size_t i) {
                                  if (i == 5) throw DomainError("boom");
                                }),
               DomainError);
}
