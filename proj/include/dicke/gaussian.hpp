#pragma once

// Gaussian-state engine: moment equations of a quadratic model with linear
// jump operators, their integration and steady states, and the entanglement
// and squeezing measures evaluated on covariance matrices.

#include "dicke/errors.hpp"
#include "dicke/integrator.hpp"
#include "dicke/model.hpp"
#include "dicke/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace dicke {

inline constexpr double kPhysicalityTolerance = 1e-9;

/// First moments and symmetrized covariance
/// sigma_ij = <{r_i - <r_i>, r_j - <r_j>}>/2 over r = (x_1, p_1, ..., x_n, p_n).
struct GaussianState {
  Vector mean;
  Matrix cov;

  Eigen::Index n_modes() const { return mean.size() / 2; }

  static GaussianState vacuum(Eigen::Index n_modes) {
    return {Vector::Zero(2 * n_modes), 0.5 * Matrix::Identity(2 * n_modes, 2 * n_modes)};
  }
};

/// Smallest eigenvalue of sigma + i Omega / 2; non-negative for physical states.
inline double physicality_margin(const Matrix& cov) {
  const Eigen::Index n = cov.rows() / 2;
  const CMatrix h = cov.cast<cplx>() + cplx(0.0, 0.5) * symplectic_form(n).cast<cplx>();
  return Eigen::SelfAdjointEigenSolver<CMatrix>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

inline void validate(const GaussianState& s) {
  if (s.cov.rows() != s.mean.size() || s.mean.size() % 2 != 0) {
    throw InvalidParameter("state mean and covariance dimensions disagree");
  }
  if (!is_symmetric(s.cov)) throw InvalidParameter("covariance is not symmetric");
  if (physicality_margin(s.cov) < -kPhysicalityTolerance) {
    throw InvalidParameter("covariance violates the uncertainty relation");
  }
}

// ---------------------------------------------------------------------------
// Moment equations

/// d<r>/dt = A <r>,  d sigma/dt = A sigma + sigma A^T + D.
struct DriftDiffusion {
  Matrix drift;
  Matrix diffusion;

  Eigen::Index n_modes() const { return drift.rows() / 2; }
};

inline DriftDiffusion drift_diffusion(const QuadraticModel& m) {
  m.validate();
  const Eigen::Index dim = 2 * m.n_modes;
  // C_ij = sum 2 rate conj(k_i) l_j for dissipators rate (2 L rho K^dag - ...).
  CMatrix c = CMatrix::Zero(dim, dim);
  for (const auto& j : m.jumps) {
    if (j.quadratic.size() != 0 && j.quadratic.cwiseAbs().maxCoeff() > 0.0) {
      throw UnsupportedModel("jump operators must be linear in the mode operators");
    }
    const CVector l = ladder_to_quadrature(j.ladder);
    c += 2.0 * j.rate * l.conjugate() * l.transpose();
  }
  for (const auto& j : m.cross_jumps) {
    const CVector l = ladder_to_quadrature(j.left);
    const CVector k = ladder_to_quadrature(j.right);
    c += 2.0 * j.rate * k.conjugate() * l.transpose();
  }
  if ((c - c.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw UnsupportedModel("dissipator is not Hermitian (cross terms must come in pairs)");
  }
  const Matrix omega = symplectic_form(m.n_modes);
  DriftDiffusion dd;
  dd.drift = omega * (m.h_matrix + c.imag());
  dd.diffusion = omega * c.real() * omega.transpose();
  dd.diffusion = 0.5 * (dd.diffusion + dd.diffusion.transpose()).eval();
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(dd.diffusion, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (min_eig < -1e-12) {
    throw UnsupportedModel("dissipator has a negative rate direction (diffusion not PSD)");
  }
  return dd;
}

inline Eigen::VectorXcd drift_eigenvalues(const DriftDiffusion& dd) {
  return Eigen::EigenSolver<Matrix>(dd.drift, false).eigenvalues();
}

inline double max_real_eigenvalue(const Matrix& a) {
  return Eigen::EigenSolver<Matrix>(a, false).eigenvalues().real().maxCoeff();
}

/// Drift/diffusion restricted to a subset of modes (valid when that subset is
/// dynamically decoupled from the rest).
inline DriftDiffusion restrict_modes(const DriftDiffusion& dd, std::span<const Eigen::Index> modes) {
  std::vector<Eigen::Index> idx;
  for (auto m : modes) {
    if (m < 0 || m >= dd.n_modes()) throw InvalidParameter("mode index out of range");
    idx.push_back(2 * m);
    idx.push_back(2 * m + 1);
  }
  return {dd.drift(idx, idx), dd.diffusion(idx, idx)};
}

// ---------------------------------------------------------------------------
// Time evolution

namespace detail {

inline std::size_t packed_size(Eigen::Index dim) {
  return static_cast<std::size_t>(dim + dim * (dim + 1) / 2);
}

inline void pack(const GaussianState& s, ode::State& x) {
  const Eigen::Index dim = s.mean.size();
  x.resize(packed_size(dim));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) x[k++] = s.mean(i);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) x[k++] = s.cov(i, j);
}

inline void unpack(const ode::State& x, Eigen::Index dim, GaussianState& s) {
  s.mean.resize(dim);
  s.cov.resize(dim, dim);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) s.mean(i) = x[k++];
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) s.cov(i, j) = s.cov(j, i) = x[k++];
}

// Only the upper triangle of sigma is integrated, so the covariance stays
// exactly symmetric.
class MomentFlow {
 public:
  explicit MomentFlow(const DriftDiffusion& dd)
      : a_(dd.drift), d_(dd.diffusion), dim_(dd.drift.rows()) {}

  void operator()(const ode::State& x, ode::State& dxdt, double /*t*/) {
    unpack(x, dim_, work_);
    dmean_.noalias() = a_ * work_.mean;
    tmp_.noalias() = a_ * work_.cov;
    dcov_ = tmp_ + tmp_.transpose() + d_;
    dxdt.resize(x.size());
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < dim_; ++i) dxdt[k++] = dmean_(i);
    for (Eigen::Index i = 0; i < dim_; ++i)
      for (Eigen::Index j = i; j < dim_; ++j) dxdt[k++] = dcov_(i, j);
  }

 private:
  Matrix a_, d_;
  Eigen::Index dim_;
  GaussianState work_;
  Vector dmean_;
  Matrix tmp_, dcov_;
};

}  // namespace detail

inline constexpr double kDefaultTolerance = 1e-10;

/// Streams the evolved state at each time of `t_grid` (ascending, >= 0;
/// `s0` is the state at t = 0) to `visit(t, state)`. Every emitted state is
/// checked against the uncertainty relation; the smallest margin seen is
/// folded into `*min_margin` when given.
inline void evolve_each(const GaussianState& s0, const DriftDiffusion& dd,
                        std::span<const double> t_grid, double tol,
                        const std::function<void(double, const GaussianState&)>& visit,
                        double* min_margin = nullptr) {
  if (s0.mean.size() != dd.drift.rows()) {
    throw InvalidParameter("state and drift dimensions disagree");
  }
  ode::State x;
  detail::pack(s0, x);
  const Eigen::Index dim = s0.mean.size();
  GaussianState out;
  ode::integrate_at(
      detail::MomentFlow(dd), std::move(x), 0.0, t_grid, tol,
      [&](const ode::State& state, double t) {
        detail::unpack(state, dim, out);
        const double margin = physicality_margin(out.cov);
        if (min_margin) *min_margin = std::min(*min_margin, margin);
        if (margin < -kPhysicalityTolerance) {
          throw IntegrationError("evolved covariance violates the uncertainty relation", t);
        }
        visit(t, out);
      });
}

inline std::vector<GaussianState> evolve(const GaussianState& s0, const DriftDiffusion& dd,
                                         std::span<const double> t_grid,
                                         double tol = kDefaultTolerance) {
  std::vector<GaussianState> out;
  out.reserve(t_grid.size());
  evolve_each(s0, dd, t_grid, tol, [&](double, const GaussianState& s) { out.push_back(s); });
  return out;
}

/// Solves A sigma + sigma A^T + D = 0 for strictly Hurwitz A.
inline Matrix lyapunov_steady(const DriftDiffusion& dd) {
  const Matrix& a = dd.drift;
  const double max_re = max_real_eigenvalue(a);
  if (!(max_re < -1e-12)) {
    throw MarginalStability("drift is not strictly Hurwitz (max Re lambda = " +
                            std::to_string(max_re) + ")");
  }
  const Eigen::Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  Matrix k(n * n, n * n);
  // column-major vec: vec(A S) = (I kron A) vec S, vec(S A^T) = (A kron I) vec S
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) = id(i, j) * a + a(i, j) * id;
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(dd.diffusion.data(), n * n);
  const Vector sol = k.partialPivLu().solve(rhs);
  Matrix sigma = Eigen::Map<const Matrix>(sol.data(), n, n);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  const double residual = (a * sigma + sigma * a.transpose() + dd.diffusion).norm();
  if (residual > 1e-10) {
    throw MarginalStability("Lyapunov residual too large: " + std::to_string(residual));
  }
  return sigma;
}

// ---------------------------------------------------------------------------
// State manipulation

/// Applies a passive n x n orthogonal mode mixing or a 2n x 2n symplectic map.
inline GaussianState mode_transform(const GaussianState& s, const Matrix& mixing) {
  const Eigen::Index n = s.n_modes();
  Matrix sym;
  if (mixing.rows() == n && mixing.cols() == n) {
    if (!is_orthogonal(mixing)) throw InvalidParameter("mode mixing is not orthogonal");
    sym = passive_symplectic(mixing.cast<cplx>());
  } else if (mixing.rows() == 2 * n && mixing.cols() == 2 * n) {
    if (!is_symplectic(mixing)) throw InvalidParameter("transform is not symplectic");
    sym = mixing;
  } else {
    throw InvalidParameter("transform dimension does not match the state");
  }
  GaussianState out{sym * s.mean, sym * s.cov * sym.transpose()};
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

inline std::vector<Eigen::Index> quadrature_indices(std::span<const Eigen::Index> modes,
                                                    Eigen::Index n_modes) {
  std::vector<Eigen::Index> idx;
  for (auto m : modes) {
    if (m < 0 || m >= n_modes) throw InvalidParameter("mode index out of range");
    if (std::find(idx.begin(), idx.end(), 2 * m) != idx.end()) {
      throw InvalidParameter("mode listed twice");
    }
    idx.push_back(2 * m);
    idx.push_back(2 * m + 1);
  }
  return idx;
}

/// Marginal state of the listed modes, in the order given.
inline GaussianState reduce(const GaussianState& s, std::span<const Eigen::Index> modes) {
  if (modes.empty()) throw InvalidParameter("reduce needs at least one mode");
  const auto idx = quadrature_indices(modes, s.n_modes());
  return {s.mean(idx), s.cov(idx, idx)};
}

inline GaussianState reduce(const GaussianState& s, std::initializer_list<Eigen::Index> modes) {
  return reduce(s, std::span<const Eigen::Index>(modes.begin(), modes.size()));
}

// ---------------------------------------------------------------------------
// Measures

/// Symplectic eigenvalues (moduli of the eigenvalues of i Omega sigma), ascending.
inline std::vector<double> symplectic_eigenvalues(const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() % 2 != 0) {
    throw InvalidParameter("covariance must be 2n x 2n");
  }
  if (!is_symmetric(cov, 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()))) {
    throw InvalidParameter("covariance is not symmetric");
  }
  const Eigen::Index n = cov.rows() / 2;
  const Eigen::VectorXcd ev =
      Eigen::EigenSolver<Matrix>(symplectic_form(n) * cov, false).eigenvalues();
  std::vector<double> moduli(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) moduli[i] = std::abs(ev(i));
  std::sort(moduli.begin(), moduli.end());
  std::vector<double> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = 0.5 * (moduli[2 * i] + moduli[2 * i + 1]);
  return out;
}

struct Partition {
  std::vector<Eigen::Index> first;
  std::vector<Eigen::Index> second;
};

/// Logarithmic negativity max(0, -ln 2 nu_min) of the partially transposed
/// state; the transpose flips the momenta of the second partition.
inline double log_negativity(const GaussianState& s, const Partition& part) {
  if (part.first.empty() || part.second.empty()) {
    throw InvalidParameter("both sides of a partition must be nonempty");
  }
  for (auto m : part.first) {
    if (std::find(part.second.begin(), part.second.end(), m) != part.second.end()) {
      throw InvalidParameter("partitions overlap");
    }
  }
  std::vector<Eigen::Index> modes = part.first;
  modes.insert(modes.end(), part.second.begin(), part.second.end());
  GaussianState r = reduce(s, modes);
  const Eigen::Index first = static_cast<Eigen::Index>(part.first.size());
  for (Eigen::Index m = first; m < r.n_modes(); ++m) {
    r.cov.row(2 * m + 1) *= -1.0;
    r.cov.col(2 * m + 1) *= -1.0;
  }
  const double nu = symplectic_eigenvalues(r.cov).front();
  const double n = -std::log(2.0 * nu);
  return n > 0.0 ? n : 0.0;
}

inline double log_negativity(const GaussianState& s, Eigen::Index mode_a, Eigen::Index mode_b) {
  return log_negativity(s, Partition{{mode_a}, {mode_b}});
}

/// max(0, -ln 2 V_min) with V_min the smallest variance over all quadrature
/// angles of the given mode.
inline double squeezing(const GaussianState& s, Eigen::Index mode) {
  if (mode < 0 || mode >= s.n_modes()) throw InvalidParameter("mode index out of range");
  const Eigen::Matrix2d block = s.cov.block<2, 2>(2 * mode, 2 * mode);
  const double v_min =
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(block, Eigen::EigenvaluesOnly).eigenvalues()(0);
  const double sq = -std::log(2.0 * v_min);
  return sq > 0.0 ? sq : 0.0;
}

// ---------------------------------------------------------------------------
// Ladder-operator moments

/// <a_i^dag a_j>
inline cplx ladder_correlator(const GaussianState& s, Eigen::Index i, Eigen::Index j) {
  const auto& c = s.cov;
  const auto& m = s.mean;
  const double xx = c(2 * i, 2 * j) + m(2 * i) * m(2 * j);
  const double pp = c(2 * i + 1, 2 * j + 1) + m(2 * i + 1) * m(2 * j + 1);
  const double xp = c(2 * i, 2 * j + 1) + m(2 * i) * m(2 * j + 1);
  const double px = c(2 * i + 1, 2 * j) + m(2 * i + 1) * m(2 * j);
  return cplx(0.5 * (xx + pp) - (i == j ? 0.5 : 0.0), 0.5 * (xp - px));
}

inline double occupation(const GaussianState& s, Eigen::Index mode) {
  return ladder_correlator(s, mode, mode).real();
}

/// <a_i a_j>
inline cplx anomalous_correlator(const GaussianState& s, Eigen::Index i, Eigen::Index j) {
  const auto& c = s.cov;
  const auto& m = s.mean;
  const double xx = c(2 * i, 2 * j) + m(2 * i) * m(2 * j);
  const double pp = c(2 * i + 1, 2 * j + 1) + m(2 * i + 1) * m(2 * j + 1);
  const double xp = c(2 * i, 2 * j + 1) + m(2 * i) * m(2 * j + 1);
  const double px = c(2 * i + 1, 2 * j) + m(2 * i + 1) * m(2 * j);
  return cplx(0.5 * (xx - pp), 0.5 * (xp + px));
}

}  // namespace dicke
