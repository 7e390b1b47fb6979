#pragma once

// Brute-force reference for the Gaussian engine: integrates the master
// equation of a QuadraticModel on a truncated number basis and reads the
// first and second quadrature moments off the density matrix.

#include "dicke/errors.hpp"
#include "dicke/gaussian.hpp"
#include "dicke/integrator.hpp"
#include "dicke/model.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <span>
#include <vector>

namespace dicke {

struct OracleResult {
  std::vector<double> times;
  std::vector<GaussianState> moments;
  double max_top_population = 0.0;  // largest population of any mode's top level
  bool reliable = true;             // false once max_top_population > 1e-6
};

inline constexpr double kTruncationLeakLimit = 1e-6;
inline constexpr long kMaxOracleDimension = 10000;

namespace detail {

using SpMat = Eigen::SparseMatrix<cplx>;

class FockSpace {
 public:
  FockSpace(Eigen::Index n_modes, int cutoff) : n_(n_modes), cutoff_(cutoff) {
    if (cutoff < 2) throw InvalidParameter("Fock cutoff must be at least 2");
    dim_ = 1;
    for (Eigen::Index i = 0; i < n_; ++i) {
      dim_ *= cutoff;
      if (dim_ > kMaxOracleDimension) {
        throw InvalidParameter("truncated Hilbert space exceeds 1e4 states");
      }
    }
    for (Eigen::Index m = 0; m < n_; ++m) annihilators_.push_back(build_annihilator(m));
  }

  long dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  Eigen::Index n_modes() const { return n_; }

  // Occupation of `mode` in basis state `index` (mode 0 most significant).
  int occupation(long index, Eigen::Index mode) const {
    long stride = 1;
    for (Eigen::Index m = n_ - 1; m > mode; --m) stride *= cutoff_;
    return static_cast<int>((index / stride) % cutoff_);
  }

  const SpMat& a(Eigen::Index mode) const { return annihilators_[mode]; }

  SpMat ad(Eigen::Index mode) const { return SpMat(annihilators_[mode].adjoint()); }

  // Quadrature operator r_k, k = 2 m (+1 for momentum).
  SpMat quadrature(Eigen::Index k) const {
    const Eigen::Index m = k / 2;
    if (k % 2 == 0) return SpMat((a(m) + ad(m)) * (1.0 / kSqrt2));
    return SpMat((a(m) - ad(m)) * cplx(0.0, -1.0 / kSqrt2));
  }

  // Operator for a linear ladder form over (a_1..a_n, a_1^dag..a_n^dag).
  SpMat ladder_operator(const CVector& ladder) const {
    SpMat op(dim_, dim_);
    for (Eigen::Index m = 0; m < n_; ++m) {
      if (ladder(m) != 0.0) op += ladder(m) * a(m);
      if (ladder(n_ + m) != 0.0) op += ladder(n_ + m) * ad(m);
    }
    return op;
  }

  SpMat identity() const {
    SpMat id(dim_, dim_);
    id.setIdentity();
    return id;
  }

 private:
  SpMat build_annihilator(Eigen::Index mode) const {
    std::vector<Eigen::Triplet<cplx>> t;
    long stride = 1;
    for (Eigen::Index m = n_ - 1; m > mode; --m) stride *= cutoff_;
    for (long i = 0; i < dim_; ++i) {
      const int n = occupation(i, mode);
      if (n > 0) t.emplace_back(i - stride, i, std::sqrt(static_cast<double>(n)));
    }
    SpMat op(dim_, dim_);
    op.setFromTriplets(t.begin(), t.end());
    return op;
  }

  Eigen::Index n_;
  int cutoff_;
  long dim_ = 1;
  std::vector<SpMat> annihilators_;
};

struct LindbladTerm {
  SpMat left;        // L
  SpMat right_dag;   // K^dag
  double rate;
};

class LindbladFlow {
 public:
  LindbladFlow(const FockSpace& space, const QuadraticModel& m) : dim_(space.dim()) {
    const Eigen::Index nq = 2 * m.n_modes;
    std::vector<SpMat> r;
    for (Eigen::Index k = 0; k < nq; ++k) r.push_back(space.quadrature(k));
    SpMat h(dim_, dim_);
    for (Eigen::Index k = 0; k < nq; ++k) {
      for (Eigen::Index l = 0; l < nq; ++l) {
        if (m.h_matrix(k, l) != 0.0) h += SpMat(r[k] * r[l]) * cplx(0.5 * m.h_matrix(k, l));
      }
    }
    SpMat g(dim_, dim_);
    auto add_term = [&](const SpMat& left, const SpMat& right, double rate) {
      const SpMat right_dag = right.adjoint();
      g += SpMat(right_dag * left) * cplx(rate);
      terms_.push_back({left, right_dag, rate});
    };
    for (const auto& j : m.jumps) {
      SpMat l = space.ladder_operator(j.ladder);
      if (j.quadratic.size() != 0) {
        for (Eigen::Index x = 0; x < nq; ++x) {
          for (Eigen::Index y = 0; y < nq; ++y) {
            if (j.quadratic(x, y) == 0.0) continue;
            const SpMat ox = x < m.n_modes ? space.a(x) : space.ad(x - m.n_modes);
            const SpMat oy = y < m.n_modes ? space.a(y) : space.ad(y - m.n_modes);
            l += SpMat(ox * oy) * j.quadratic(x, y);
          }
        }
      }
      add_term(l, l, j.rate);
    }
    for (const auto& j : m.cross_jumps) {
      add_term(space.ladder_operator(j.left), space.ladder_operator(j.right), j.rate);
    }
    const cplx i1(0.0, 1.0);
    left_ = SpMat(h * (-i1) - g);   // acts as left_ * rho
    right_ = SpMat(h * i1 - g);     // acts as rho * right_
  }

  void operator()(const ode::State& x, ode::State& dxdt, double /*t*/) const {
    dxdt.resize(x.size());
    Eigen::Map<const CMatrix> rho(reinterpret_cast<const cplx*>(x.data()), dim_, dim_);
    Eigen::Map<CMatrix> drho(reinterpret_cast<cplx*>(dxdt.data()), dim_, dim_);
    drho.noalias() = left_ * rho;
    drho.noalias() += rho * right_;
    for (const auto& t : terms_) {
      work_.noalias() = t.left * rho;
      drho.noalias() += (2.0 * t.rate) * (work_ * t.right_dag);
    }
  }

 private:
  long dim_;
  SpMat left_, right_;
  std::vector<LindbladTerm> terms_;
  mutable CMatrix work_;
};

inline cplx trace_product(const CMatrix& rho, const SpMat& op) {
  cplx acc = 0.0;
  for (int k = 0; k < op.outerSize(); ++k) {
    for (SpMat::InnerIterator it(op, k); it; ++it) acc += it.value() * rho(it.col(), it.row());
  }
  return acc;
}

}  // namespace detail

/// Integrates the master equation from the vacuum on `cutoff` Fock levels per
/// mode and returns quadrature moments at each time of `t_grid`.
inline OracleResult fock_oracle(const QuadraticModel& model, int cutoff,
                                std::span<const double> t_grid, double tol = 1e-10) {
  model.validate();
  const detail::FockSpace space(model.n_modes, cutoff);
  const detail::LindbladFlow flow(space, model);
  const long dim = space.dim();
  const Eigen::Index nq = 2 * model.n_modes;

  std::vector<detail::SpMat> r, rr;
  for (Eigen::Index k = 0; k < nq; ++k) r.push_back(space.quadrature(k));
  for (Eigen::Index k = 0; k < nq; ++k) {
    for (Eigen::Index l = k; l < nq; ++l) {
      rr.push_back(detail::SpMat((r[k] * r[l] + r[l] * r[k]) * cplx(0.5)));
    }
  }

  ode::State rho0(2 * dim * dim, 0.0);
  rho0[0] = 1.0;  // |0...0><0...0|

  OracleResult result;
  ode::integrate_at(flow, std::move(rho0), 0.0, t_grid, tol, [&](const ode::State& x, double t) {
    Eigen::Map<const CMatrix> rho(reinterpret_cast<const cplx*>(x.data()), dim, dim);
    GaussianState s{Vector(nq), Matrix(nq, nq)};
    for (Eigen::Index k = 0; k < nq; ++k) s.mean(k) = detail::trace_product(rho, r[k]).real();
    std::size_t idx = 0;
    for (Eigen::Index k = 0; k < nq; ++k) {
      for (Eigen::Index l = k; l < nq; ++l) {
        const double v = detail::trace_product(rho, rr[idx++]).real() - s.mean(k) * s.mean(l);
        s.cov(k, l) = s.cov(l, k) = v;
      }
    }
    for (Eigen::Index m = 0; m < model.n_modes; ++m) {
      double top = 0.0;
      for (long i = 0; i < dim; ++i) {
        if (space.occupation(i, m) == cutoff - 1) top += rho(i, i).real();
      }
      result.max_top_population = std::max(result.max_top_population, top);
    }
    result.times.push_back(t);
    result.moments.push_back(std::move(s));
  });
  result.reliable = result.max_top_population <= kTruncationLeakLimit;
  return result;
}

}  // namespace dicke
