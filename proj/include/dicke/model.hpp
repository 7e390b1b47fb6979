#pragma once

// Physical parameters of the two-condensate Dicke system and the linearized
// quadratic models built from them (normal phase, superradiant phase, and the
// superradiant phase with an auxiliary readout mode).

#include "dicke/errors.hpp"
#include "dicke/quadrature.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dicke {

/// Physical parameters. All frequencies in units of the recoil frequency.
struct ModelParams {
  double omega_r = 1.0;
  double delta = -1.0;   // cavity-pump detuning, signed (enters as -delta a^dag a)
  double g = 0.0;        // collective light-matter coupling
  double kappa = 0.05;   // cavity amplitude decay rate
  double n_atoms = 1e5;
  double u = 0.0;        // Stark shift; only U = 0 is supported

  void validate() const {
    if (!(omega_r > 0.0)) throw InvalidParameter("omega_r must be > 0");
    if (!(kappa >= 0.0)) throw InvalidParameter("kappa must be >= 0");
    if (!(n_atoms > 0.0)) throw InvalidParameter("n_atoms must be > 0");
    if (!(g >= 0.0)) throw InvalidParameter("g must be >= 0");
    if (!std::isfinite(delta)) throw InvalidParameter("delta must be finite");
    if (u != 0.0) {
      throw InvalidParameter(
          "nonzero Stark shift U is out of scope: only U = 0 dynamics are modelled");
    }
  }
};

/// Auxiliary readout mode w coupled to the relative atomic mode s.
struct AuxParams {
  double omega_w = 1.0;
  double psi = 0.1;
  double gamma = 0.0025;

  void validate() const {
    if (!(gamma >= 0.0)) throw InvalidParameter("aux gamma must be >= 0");
    if (!std::isfinite(omega_w) || !std::isfinite(psi)) {
      throw InvalidParameter("aux omega_w and psi must be finite");
    }
  }
};

/// Microscopic parameters from which g and U derive.
struct MicroParams {
  double g0 = 0.0;        // bare Rabi frequency
  double delta_a = 0.0;   // atom-pump detuning
  double pump_amp = 0.0;  // pump amplitude
  double u0 = 0.0;        // effective atom-cavity coupling

  double eta() const {
    if (delta_a == 0.0) throw DomainError("eta undefined for zero atom-pump detuning");
    return pump_amp * g0 / delta_a;
  }
};

struct Couplings {
  double g;
  double u;
  bool dispersive;  // |delta_a| >= 10 g0
};

inline Couplings derive_couplings(const MicroParams& m, double n_atoms) {
  if (!(n_atoms > 0.0)) throw InvalidParameter("n_atoms must be > 0");
  const double eta = m.eta();
  return {std::sqrt(2.0 * n_atoms) * eta, n_atoms * m.u0 / 4.0,
          std::abs(m.delta_a) >= 10.0 * std::abs(m.g0)};
}

// ---------------------------------------------------------------------------
// Critical couplings and phases

/// Open-system threshold g_c = sqrt(omega_R (Delta^2 + kappa^2)) / (2 sqrt(2|Delta|)).
inline double critical_coupling(const ModelParams& p) {
  if (p.delta == 0.0) throw DomainError("critical coupling is singular at zero detuning");
  return std::sqrt(p.omega_r * (p.delta * p.delta + p.kappa * p.kappa)) /
         (2.0 * kSqrt2 * std::sqrt(std::abs(p.delta)));
}

/// Lossless single-ensemble threshold sqrt(|Delta| omega_R) / 2.
inline double closed_critical_coupling(const ModelParams& p) {
  if (p.delta == 0.0) throw DomainError("critical coupling is singular at zero detuning");
  return std::sqrt(std::abs(p.delta) * p.omega_r) / 2.0;
}

enum class Phase { Normal, Critical, Superradiant };

inline const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::Normal: return "normal";
    case Phase::Critical: return "critical";
    case Phase::Superradiant: return "superradiant";
  }
  return "?";
}

inline constexpr double kPhaseEpsilon = 1e-9;

inline Phase phase_of(const ModelParams& p) {
  const double gc = critical_coupling(p);
  if (p.g < gc * (1.0 - kPhaseEpsilon)) return Phase::Normal;
  if (p.g > gc * (1.0 + kPhaseEpsilon)) return Phase::Superradiant;
  return Phase::Critical;
}

/// Returns a copy of `base` with g set to ratio * g_c(base).
inline ModelParams with_coupling_ratio(ModelParams base, double ratio) {
  base.g = ratio * critical_coupling(base);
  return base;
}

struct PhaseCoefficients {
  double mu;
  double Omega;    // atomic excitation frequency
  double zeta;     // single-mode squeezing coefficient
  double phi;      // linearized light-matter coupling
  double omega_p;  // collective p-mode frequency
  double omega_q;  // collective q-mode frequency

  /// Bogoliubov frequency sqrt(Omega^2 - 4 zeta^2) of the decoupled s mode.
  double s_frequency() const { return std::sqrt(Omega * Omega - 4.0 * zeta * zeta); }
};

inline PhaseCoefficients sr_coefficients(const ModelParams& p) {
  const double gc = critical_coupling(p);
  if (p.g < gc * (1.0 - kPhaseEpsilon)) {
    throw PhaseError("superradiant coefficients requested below threshold (g < g_c)");
  }
  const double mu = std::min(1.0, (gc / p.g) * (gc / p.g));
  const double w = p.omega_r;
  PhaseCoefficients c{};
  c.mu = mu;
  c.zeta = w * (1.0 - mu) * (3.0 + mu) / (8.0 * mu * (1.0 + mu));
  c.Omega = w * (1.0 + mu) / (2.0 * mu) + 2.0 * c.zeta;
  c.phi = p.g * mu * std::sqrt(2.0 / (1.0 + mu));
  c.omega_p = (c.Omega - p.delta) / 2.0 + kSqrt2 * c.phi;
  c.omega_q = (c.Omega - p.delta) / 2.0 - kSqrt2 * c.phi;
  return c;
}

struct NormalCoefficients {
  double omega_p_tilde;
  double omega_q_tilde;
  double g_tilde;
};

inline NormalCoefficients normal_coefficients(const ModelParams& p) {
  const double base = (p.omega_r - p.delta) / 2.0;
  return {base + kSqrt2 * p.g, base - kSqrt2 * p.g, (p.omega_r + p.delta) / 2.0};
}

// ---------------------------------------------------------------------------
// Quadratic models

/// Linear jump operator L = ladder . (a, a^dag) with dissipator
/// rate * (2 L rho L^dag - L^dag L rho - rho L^dag L). A non-empty `quadratic`
/// adds L += o^T Q o over o = (a, a^dag); only the Fock oracle accepts it.
struct Jump {
  CVector ladder;
  double rate = 0.0;
  CMatrix quadratic{};
};

/// Cross dissipator rate * (2 L rho K^dag - K^dag L rho - rho K^dag L) with
/// L = left, K = right. Physical models contain these in Hermitian pairs.
struct CrossJump {
  CVector left;
  CVector right;
  double rate = 0.0;
};

struct QuadraticModel {
  Eigen::Index n_modes = 0;
  std::vector<std::string> labels;
  Matrix h_matrix;  // H = 1/2 r^T M r
  std::vector<Jump> jumps;
  std::vector<CrossJump> cross_jumps;

  Eigen::Index index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return static_cast<Eigen::Index>(i);
    }
    throw InvalidParameter("unknown mode label '" + label + "'");
  }

  void validate() const {
    if (n_modes <= 0) throw InvalidParameter("model needs at least one mode");
    if (static_cast<Eigen::Index>(labels.size()) != n_modes) {
      throw InvalidParameter("label count does not match mode count");
    }
    if (h_matrix.rows() != 2 * n_modes || !is_symmetric(h_matrix)) {
      throw InvalidParameter("h_matrix must be a symmetric 2n x 2n matrix");
    }
    for (const auto& j : jumps) {
      if (j.ladder.size() != 2 * n_modes) throw InvalidParameter("jump has wrong length");
      if (!(j.rate >= 0.0)) throw InvalidParameter("jump rates must be >= 0");
    }
    for (const auto& j : cross_jumps) {
      if (j.left.size() != 2 * n_modes || j.right.size() != 2 * n_modes) {
        throw InvalidParameter("cross jump has wrong length");
      }
    }
  }
};

/// Accumulates c * A * B products of linear ladder forms into the quadrature
/// matrix M of H = 1/2 r^T M r (operator-ordering constants are dropped).
class HamiltonianBuilder {
 public:
  explicit HamiltonianBuilder(Eigen::Index n_modes)
      : n_(n_modes), m_(CMatrix::Zero(2 * n_modes, 2 * n_modes)) {}

  Eigen::Index n_modes() const { return n_; }
  CVector a(Eigen::Index mode) const { return annihilation(n_, mode); }
  CVector ad(Eigen::Index mode) const { return creation(n_, mode); }

  HamiltonianBuilder& add(double coefficient, const CVector& lhs, const CVector& rhs) {
    const CVector u = ladder_to_quadrature(lhs);
    const CVector w = ladder_to_quadrature(rhs);
    m_ += coefficient * (u * w.transpose() + w * u.transpose());
    return *this;
  }

  // c * A^dag A
  HamiltonianBuilder& number(double coefficient, const CVector& op) {
    return add(coefficient, dagger(op), op);
  }

  // c * (A^2 + A^dag^2)
  HamiltonianBuilder& squeeze(double coefficient, const CVector& op) {
    add(coefficient, op, op);
    return add(coefficient, dagger(op), dagger(op));
  }

  // c * (A^dag B + B^dag A)
  HamiltonianBuilder& hop(double coefficient, const CVector& lhs, const CVector& rhs) {
    add(coefficient, dagger(lhs), rhs);
    return add(coefficient, dagger(rhs), lhs);
  }

  Matrix build() const {
    if (m_.imag().cwiseAbs().maxCoeff() > 1e-12) {
      throw InvalidParameter("Hamiltonian terms are not Hermitian");
    }
    return m_.real();
  }

 private:
  Eigen::Index n_;
  CMatrix m_;
};

namespace detail {

inline QuadraticModel make_model(std::vector<std::string> labels, Matrix h) {
  QuadraticModel m;
  m.n_modes = static_cast<Eigen::Index>(labels.size());
  m.labels = std::move(labels);
  m.h_matrix = std::move(h);
  return m;
}

// Cavity, both condensates with common frequency and squeezing, and the
// phi (a + a^dag)(b + b^dag + c + c^dag) coupling.
inline void add_abc_terms(HamiltonianBuilder& hb, double delta, double omega, double zeta,
                          double phi) {
  const CVector a = hb.a(0), b = hb.a(1), c = hb.a(2);
  hb.number(-delta, a).number(omega, b).number(omega, c);
  if (zeta != 0.0) hb.squeeze(zeta, b).squeeze(zeta, c);
  hb.add(phi, a + dagger(a), b + dagger(b) + c + dagger(c));
}

inline void require_superradiant(const ModelParams& p) {
  if (p.g < critical_coupling(p) * (1.0 - kPhaseEpsilon)) {
    throw PhaseError("superradiant model requires g >= g_c");
  }
}

}  // namespace detail

inline QuadraticModel build_normal_hamiltonian(const ModelParams& p) {
  p.validate();
  HamiltonianBuilder hb(3);
  detail::add_abc_terms(hb, p.delta, p.omega_r, 0.0, p.g);
  auto m = detail::make_model({"a", "b", "c"}, hb.build());
  m.jumps.push_back({annihilation(3, 0), p.kappa, {}});
  return m;
}

/// Normal-phase model with the second condensate dropped: cavity a and one
/// condensate b. Small enough for the Fock oracle.
inline QuadraticModel build_normal_two_mode(const ModelParams& p) {
  p.validate();
  HamiltonianBuilder hb(2);
  const CVector a = hb.a(0), b = hb.a(1);
  hb.number(-p.delta, a).number(p.omega_r, b);
  hb.add(p.g, a + dagger(a), b + dagger(b));
  auto m = detail::make_model({"a", "b"}, hb.build());
  m.jumps.push_back({annihilation(2, 0), p.kappa, {}});
  return m;
}

inline QuadraticModel build_sr_hamiltonian(const ModelParams& p) {
  p.validate();
  detail::require_superradiant(p);
  const auto c = sr_coefficients(p);
  HamiltonianBuilder hb(3);
  detail::add_abc_terms(hb, p.delta, c.Omega, c.zeta, c.phi);
  auto m = detail::make_model({"a", "b", "c"}, hb.build());
  m.jumps.push_back({annihilation(3, 0), p.kappa, {}});
  return m;
}

/// Default readout mode: resonant with s, psi = 0.1 omega_R, gamma = 0.05 kappa.
inline AuxParams default_aux(const ModelParams& p) {
  AuxParams aux;
  aux.omega_w = p.g >= critical_coupling(p) ? sr_coefficients(p).Omega : p.omega_r;
  aux.psi = 0.1 * p.omega_r;
  aux.gamma = 0.05 * p.kappa;
  return aux;
}

inline QuadraticModel build_aux_hamiltonian(const ModelParams& p, const AuxParams& aux) {
  p.validate();
  aux.validate();
  detail::require_superradiant(p);
  const auto c = sr_coefficients(p);
  HamiltonianBuilder hb(4);
  detail::add_abc_terms(hb, p.delta, c.Omega, c.zeta, c.phi);
  const CVector s = (hb.a(1) - hb.a(2)) / kSqrt2;
  const CVector w = hb.a(3);
  hb.number(aux.omega_w, w).hop(aux.psi, s, w);
  auto m = detail::make_model({"a", "b", "c", "w"}, hb.build());
  m.jumps.push_back({annihilation(4, 0), p.kappa, {}});
  m.jumps.push_back({annihilation(4, 3), aux.gamma, {}});
  return m;
}

// ---------------------------------------------------------------------------
// Collective basis

struct ModeMixing {
  Matrix forward;  // new = forward * old
  Matrix inverse;
};

/// (a, b, c) -> (p, q, s), optionally extended by an untouched fourth mode w.
inline ModeMixing collective_transform(bool with_aux = false) {
  const Eigen::Index n = with_aux ? 4 : 3;
  Matrix u = Matrix::Zero(n, n);
  const double h = 1.0 / kSqrt2;
  u.topLeftCorner(3, 3) << h, 0.5, 0.5,  //
                           -h, 0.5, 0.5,  //
                           0.0, h, -h;
  if (with_aux) u(3, 3) = 1.0;
  return {u, u.transpose()};
}

inline bool is_orthogonal(const Matrix& u, double tol = 1e-12) {
  return u.rows() == u.cols() &&
         (u.transpose() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <=
             tol;
}

/// Re-expresses a model in the modes a' = U a (U real orthogonal).
inline QuadraticModel transform_model(const QuadraticModel& model, const Matrix& mixing,
                                      std::vector<std::string> labels) {
  if (mixing.rows() != model.n_modes || !is_orthogonal(mixing)) {
    throw InvalidParameter("mode mixing must be an orthogonal n x n matrix");
  }
  const Matrix s = passive_symplectic(mixing.cast<cplx>());
  const Eigen::Index n = model.n_modes;
  auto map_ladder = [&](const CVector& v) {
    CVector out(2 * n);
    out.head(n) = mixing.cast<cplx>() * v.head(n);
    out.tail(n) = mixing.cast<cplx>() * v.tail(n);
    return out;
  };
  QuadraticModel out = detail::make_model(std::move(labels), s * model.h_matrix * s.transpose());
  for (const auto& j : model.jumps) {
    if (j.quadratic.size() != 0) throw UnsupportedModel("cannot transform quadratic jumps");
    out.jumps.push_back({map_ladder(j.ladder), j.rate, {}});
  }
  for (const auto& j : model.cross_jumps) {
    out.cross_jumps.push_back({map_ladder(j.left), map_ladder(j.right), j.rate});
  }
  return out;
}

namespace detail {

// Photon loss kappa L_a rewritten with a = (p - q)/sqrt(2): half-rate p and q
// dissipators plus the two negative cross terms.
inline void add_collective_dissipator(QuadraticModel& m, double kappa) {
  const CVector p = annihilation(m.n_modes, 0);
  const CVector q = annihilation(m.n_modes, 1);
  m.jumps.push_back({p, kappa / 2.0, {}});
  m.jumps.push_back({q, kappa / 2.0, {}});
  m.cross_jumps.push_back({p, q, -kappa / 2.0});
  m.cross_jumps.push_back({q, p, -kappa / 2.0});
}

}  // namespace detail

/// Normal-phase model written directly in the (p, q, s) basis.
inline QuadraticModel build_normal_collective(const ModelParams& p) {
  p.validate();
  const auto c = normal_coefficients(p);
  HamiltonianBuilder hb(3);
  const CVector pm = hb.a(0), qm = hb.a(1), sm = hb.a(2);
  hb.number(c.omega_p_tilde, pm).number(c.omega_q_tilde, qm).number(p.omega_r, sm);
  hb.hop(c.g_tilde, pm, qm);
  hb.squeeze(p.g / kSqrt2, pm).squeeze(-p.g / kSqrt2, qm);
  auto m = detail::make_model({"p", "q", "s"}, hb.build());
  detail::add_collective_dissipator(m, p.kappa);
  return m;
}

/// Superradiant model written directly in the (p, q, s) basis.
inline QuadraticModel build_sr_collective(const ModelParams& p) {
  p.validate();
  detail::require_superradiant(p);
  const auto c = sr_coefficients(p);
  HamiltonianBuilder hb(3);
  const CVector pm = hb.a(0), qm = hb.a(1), sm = hb.a(2);
  hb.number(c.omega_p, pm).number(c.omega_q, qm).number(c.Omega, sm);
  hb.hop((c.Omega + p.delta) / 2.0, pm, qm);
  // zeta (p q + q^dag p^dag)
  hb.add(c.zeta, pm, qm).add(c.zeta, dagger(qm), dagger(pm));
  hb.squeeze(c.zeta, sm);
  hb.squeeze(c.zeta / 2.0 + c.phi / kSqrt2, pm);
  hb.squeeze(c.zeta / 2.0 - c.phi / kSqrt2, qm);
  auto m = detail::make_model({"p", "q", "s"}, hb.build());
  detail::add_collective_dissipator(m, p.kappa);
  return m;
}

/// Phase-appropriate (a, b, c) model: normal builder below threshold,
/// superradiant builder at or above it.
inline QuadraticModel build_phase_model(const ModelParams& p) {
  return phase_of(p) == Phase::Normal ? build_normal_hamiltonian(p) : build_sr_hamiltonian(p);
}

}  // namespace dicke
