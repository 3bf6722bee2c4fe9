/*
 Copyright 2026 The AZOPG Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Model-based LQR mathematics for the policy-parameterized problem
//
//   xdot = A x + B u,   u = -K x,   f(K) = Tr(P(K) X0),
//
// where P(K) and X(K) solve the closed-loop Lyapunov equations. Everything
// here is exact (up to floating point) and is used as the reference against
// which the rollout-based machinery is validated.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "azopg/errors.hpp"

namespace azopg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest state dimension accepted by the dense Kronecker Lyapunov solver.
inline constexpr Eigen::Index kMaxLyapunovDim = 32;

namespace detail {

inline std::string dims(const Matrix& M) {
  return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

inline bool is_symmetric(const Matrix& M, double tol) {
  return M.rows() == M.cols() &&
         (M - M.transpose()).cwiseAbs().maxCoeff() <=
             tol * (1.0 + M.cwiseAbs().maxCoeff());
}

inline double min_symmetric_eigenvalue(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_real_eigenvalue(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace detail

/// An m x n state-feedback gain, u = -K x.
struct Policy {
  Matrix K;

  Policy() = default;
  explicit Policy(Matrix gain) : K(std::move(gain)) {}

  Eigen::Index inputs() const { return K.rows(); }
  Eigen::Index states() const { return K.cols(); }

  static Policy zero(Eigen::Index m, Eigen::Index n) {
    return Policy(Matrix::Zero(m, n));
  }
};

/// LQR instance (A, B, Q, R, X0). Validated on construction: Q, R symmetric
/// positive definite, X0 symmetric positive semidefinite, (A, B)
/// controllable.
class LinearSystem {
 public:
  static constexpr double kDefiniteTol = 1e-12;

  LinearSystem(Matrix A, Matrix B, Matrix Q, Matrix R)
      : LinearSystem(A, B, std::move(Q), std::move(R),
                     Matrix::Identity(A.rows(), A.rows())) {}

  LinearSystem(Matrix A, Matrix B, Matrix Q, Matrix R, Matrix X0)
      : A_(std::move(A)),
        B_(std::move(B)),
        Q_(std::move(Q)),
        R_(std::move(R)),
        X0_(std::move(X0)) {
    validate();
  }

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& Q() const { return Q_; }
  const Matrix& R() const { return R_; }
  const Matrix& X0() const { return X0_; }

  Eigen::Index states() const { return A_.rows(); }
  Eigen::Index inputs() const { return B_.cols(); }

  /// A - B K, after checking that K has shape m x n.
  Matrix closed_loop(const Policy& policy) const {
    check_policy(policy);
    return A_ - B_ * policy.K;
  }

  void check_policy(const Policy& policy) const {
    if (policy.K.rows() != inputs() || policy.K.cols() != states()) {
      throw std::invalid_argument("policy is " + detail::dims(policy.K) +
                                  ", expected " + std::to_string(inputs()) +
                                  "x" + std::to_string(states()));
    }
  }

 private:
  void validate() const {
    const Eigen::Index n = A_.rows();
    if (n < 1 || A_.cols() != n) {
      throw std::invalid_argument("A must be square and nonempty, got " +
                                  detail::dims(A_));
    }
    if (B_.rows() != n || B_.cols() < 1) {
      throw std::invalid_argument("B must be n x m with m >= 1, got " +
                                  detail::dims(B_));
    }
    const Eigen::Index m = B_.cols();
    if (Q_.rows() != n || Q_.cols() != n) {
      throw std::invalid_argument("Q must be n x n, got " + detail::dims(Q_));
    }
    if (R_.rows() != m || R_.cols() != m) {
      throw std::invalid_argument("R must be m x m, got " + detail::dims(R_));
    }
    if (X0_.rows() != n || X0_.cols() != n) {
      throw std::invalid_argument("X0 must be n x n, got " +
                                  detail::dims(X0_));
    }
    if (!A_.allFinite() || !B_.allFinite() || !Q_.allFinite() ||
        !R_.allFinite() || !X0_.allFinite()) {
      throw std::invalid_argument("system matrices must be finite");
    }
    if (!detail::is_symmetric(Q_, 1e-12) ||
        detail::min_symmetric_eigenvalue(Q_) <= kDefiniteTol) {
      throw std::invalid_argument("Q must be symmetric positive definite");
    }
    if (!detail::is_symmetric(R_, 1e-12) ||
        detail::min_symmetric_eigenvalue(R_) <= kDefiniteTol) {
      throw std::invalid_argument("R must be symmetric positive definite");
    }
    if (!detail::is_symmetric(X0_, 1e-12) ||
        detail::min_symmetric_eigenvalue(X0_) < -kDefiniteTol) {
      throw std::invalid_argument(
          "X0 must be symmetric positive semidefinite");
    }
    Matrix ctrb(n, n * m);
    Matrix block = B_;
    for (Eigen::Index i = 0; i < n; ++i) {
      ctrb.middleCols(i * m, m) = block;
      block = A_ * block;
    }
    Eigen::FullPivLU<Matrix> lu(ctrb);
    lu.setThreshold(1e-10);
    if (lu.rank() != n) {
      throw std::invalid_argument("(A, B) is not controllable");
    }
  }

  Matrix A_, B_, Q_, R_, X0_;
};

/// True iff every eigenvalue of A - BK has real part below -margin.
inline bool is_stabilizing(const LinearSystem& sys, const Policy& policy,
                           double stability_margin = 0.0) {
  return detail::max_real_eigenvalue(sys.closed_loop(policy)) <
         -stability_margin;
}

/// Solves F^T X + X F + W = 0 for symmetric X, F Hurwitz.
///
/// Dense Kronecker form (I (x) F^T + F^T (x) I) vec(X) = -vec(W) with one
/// step of iterative refinement. Cost is O(n^6), so n is capped at
/// kMaxLyapunovDim.
inline Matrix solve_lyapunov(const Matrix& F, const Matrix& W) {
  const Eigen::Index n = F.rows();
  if (n < 1 || F.cols() != n || W.rows() != n || W.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: F is " + detail::dims(F) +
                                ", W is " + detail::dims(W));
  }
  if (n > kMaxLyapunovDim) {
    throw std::invalid_argument("solve_lyapunov: n = " + std::to_string(n) +
                                " exceeds the dense solver limit");
  }
  if (!detail::is_symmetric(W, 1e-10)) {
    throw std::invalid_argument("solve_lyapunov: W must be symmetric");
  }
  if (!(detail::max_real_eigenvalue(F) < 0.0)) {
    throw NotStabilizingError("solve_lyapunov: F is not Hurwitz");
  }

  const Matrix Ft = F.transpose();
  Matrix L = Matrix::Zero(n * n, n * n);
  for (Eigen::Index b = 0; b < n; ++b) {
    L.block(b * n, b * n, n, n) += Ft;
    for (Eigen::Index c = 0; c < n; ++c) {
      L.block(b * n, c * n, n, n).diagonal().array() += Ft(b, c);
    }
  }
  Eigen::PartialPivLU<Matrix> lu(L);

  const Vector rhs = -Eigen::Map<const Vector>(W.data(), n * n);
  Vector x = lu.solve(rhs);
  x += lu.solve(rhs - L * x);

  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

/// Frobenius norm of F^T X + X F + W.
inline double lyapunov_residual(const Matrix& F, const Matrix& X,
                                const Matrix& W) {
  return (F.transpose() * X + X * F + W).norm();
}

/// Everything the model-based oracle knows about one stabilizing policy.
struct ValueCertificate {
  Matrix P;     // value matrix P(K)
  Matrix X;     // state correlation X(K)
  Matrix E;     // 2 (R K - B^T P)
  double cost;  // Tr(P X0)
  Matrix grad;  // E X
};

inline ValueCertificate value_certificate(const LinearSystem& sys,
                                          const Policy& policy) {
  const Matrix F = sys.closed_loop(policy);
  if (!(detail::max_real_eigenvalue(F) < 0.0)) {
    throw NotStabilizingError("value_certificate: A - BK is not Hurwitz");
  }
  const Matrix& K = policy.K;
  ValueCertificate cert;
  cert.P = solve_lyapunov(F, sys.Q() + K.transpose() * sys.R() * K);
  cert.X = solve_lyapunov(F.transpose(), sys.X0());
  cert.E = 2.0 * (sys.R() * K - sys.B().transpose() * cert.P);
  cert.cost = (cert.P * sys.X0()).trace();
  cert.grad = cert.E * cert.X;
  return cert;
}

inline double cost(const LinearSystem& sys, const Policy& policy) {
  return value_certificate(sys, policy).cost;
}

/// Some stabilizing gain: K = 0 if A is Hurwitz, otherwise K = B^T Y^{-1}
/// with (A + sI) Y + Y (A + sI)^T = B B^T and s above the spectral abscissa
/// of A. Y is positive definite by controllability.
inline Policy stabilizing_gain(const LinearSystem& sys) {
  const Eigen::Index n = sys.states();
  Policy zero = Policy::zero(sys.inputs(), n);
  if (is_stabilizing(sys, zero)) return zero;
  const double shift =
      std::max(0.0, detail::max_real_eigenvalue(sys.A())) + 1.0;
  const Matrix shifted = sys.A() + shift * Matrix::Identity(n, n);
  const Matrix Y = solve_lyapunov(-shifted.transpose(),
                                  sys.B() * sys.B().transpose());
  return Policy(sys.B().transpose() * Y.llt().solve(Matrix::Identity(n, n)));
}

struct OptimalPolicy {
  Policy K;
  double cost = 0.0;
  int iterations = 0;
};

/// Newton-Kleinman iteration K <- R^{-1} B^T P(K) from a stabilizing seed.
inline OptimalPolicy optimal_policy(const LinearSystem& sys,
                                    const Policy& seed,
                                    int max_iterations = 200,
                                    double step_tol = 1e-12) {
  if (!is_stabilizing(sys, seed)) {
    throw NotStabilizingError("optimal_policy: seed gain is not stabilizing");
  }
  const Eigen::LLT<Matrix> r_chol(sys.R());
  const Matrix Bt = sys.B().transpose();
  Policy K = seed;
  for (int it = 1; it <= max_iterations; ++it) {
    const Matrix F = sys.closed_loop(K);
    const Matrix P =
        solve_lyapunov(F, sys.Q() + K.K.transpose() * sys.R() * K.K);
    Policy next(r_chol.solve(Bt * P));
    const double step = (next.K - K.K).norm();
    K = std::move(next);
    if (step <= step_tol) {
      const ValueCertificate cert = value_certificate(sys, K);
      if (cert.grad.norm() > 1e-8) {
        throw NumericalFailure(
            "optimal_policy: gradient norm at the fixed point is " +
            std::to_string(cert.grad.norm()));
      }
      return {std::move(K), cert.cost, it};
    }
  }
  throw NumericalFailure("optimal_policy: Newton-Kleinman did not converge in " +
                         std::to_string(max_iterations) + " iterations");
}

/// Exact truncated rollout cost
///   int_0^tau x^T (Q + K^T R K) x dt = zeta^T (P - e^{F^T tau} P e^{F tau}) zeta
/// for x(0) = zeta. Serves as the oracle for rollout_cost.
inline double truncated_cost_exact(const LinearSystem& sys,
                                   const Policy& policy, const Vector& zeta,
                                   double tau) {
  if (zeta.size() != sys.states()) {
    throw std::invalid_argument("truncated_cost_exact: zeta has wrong size");
  }
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("truncated_cost_exact: tau must be >= 0");
  }
  const ValueCertificate cert = value_certificate(sys, policy);
  const Matrix F = sys.closed_loop(policy);
  const Matrix Phi = (F * tau).exp();
  const Vector y = Phi * zeta;
  return zeta.dot(cert.P * zeta) - y.dot(cert.P * y);
}

}  // namespace azopg
