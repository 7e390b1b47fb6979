#pragma once

// Quadrature conventions shared by every module.
//
//   x = (a + a^dag)/sqrt(2),  p = (a - a^dag)/(i sqrt(2)),  hbar = 1
//   r = (x_1, p_1, ..., x_n, p_n),  [r_k, r_l] = i Omega_kl
//
// Vacuum covariance is I/2. Mode operators are written as ladder vectors of
// length 2n over (a_1, ..., a_n, a_1^dag, ..., a_n^dag).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>

namespace dicke {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline const double kSqrt2 = std::sqrt(2.0);

// Block-diagonal symplectic form with [[0, 1], [-1, 0]] per mode.
inline Matrix symplectic_form(Eigen::Index n_modes) {
  Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index i = 0; i < n_modes; ++i) {
    omega(2 * i, 2 * i + 1) = 1.0;
    omega(2 * i + 1, 2 * i) = -1.0;
  }
  return omega;
}

inline CVector annihilation(Eigen::Index n_modes, Eigen::Index mode) {
  CVector v = CVector::Zero(2 * n_modes);
  v(mode) = 1.0;
  return v;
}

inline CVector creation(Eigen::Index n_modes, Eigen::Index mode) {
  CVector v = CVector::Zero(2 * n_modes);
  v(n_modes + mode) = 1.0;
  return v;
}

// Hermitian conjugate of a linear ladder form: swaps the a and a^dag halves
// and conjugates the coefficients.
inline CVector dagger(const CVector& ladder) {
  const Eigen::Index n = ladder.size() / 2;
  CVector out(ladder.size());
  out.head(n) = ladder.tail(n).conjugate();
  out.tail(n) = ladder.head(n).conjugate();
  return out;
}

// Coefficients l such that the ladder form equals l . r.
inline CVector ladder_to_quadrature(const CVector& ladder) {
  const Eigen::Index n = ladder.size() / 2;
  const cplx i1(0.0, 1.0);
  CVector q = CVector::Zero(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx alpha = ladder(k);      // coefficient of a_k
    const cplx beta = ladder(n + k);   // coefficient of a_k^dag
    q(2 * k) = (alpha + beta) / kSqrt2;
    q(2 * k + 1) = i1 * (alpha - beta) / kSqrt2;
  }
  return q;
}

// Quadrature-space symplectic matrix S (r' = S r) induced by a passive mode
// mixing a'_i = sum_j U_ij a_j with U unitary.
inline Matrix passive_symplectic(const CMatrix& mixing) {
  const Eigen::Index n = mixing.rows();
  Matrix s = Matrix::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = mixing(i, j).real();
      const double im = mixing(i, j).imag();
      s(2 * i, 2 * j) = re;
      s(2 * i, 2 * j + 1) = -im;
      s(2 * i + 1, 2 * j) = im;
      s(2 * i + 1, 2 * j + 1) = re;
    }
  }
  return s;
}

inline bool is_symplectic(const Matrix& s, double tol = 1e-12) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) return false;
  const Matrix omega = symplectic_form(s.rows() / 2);
  return (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace dicke
