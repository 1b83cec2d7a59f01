#pragma once

// Dense linear-algebra kernels shared by the rest of the library: spectra with
// multiplicity clustering, PBH tests, Lyapunov and Riccati solvers, spectral
// radius and a fixed-step RK4 integrator for matrix ODEs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mimostab/error.hpp"

namespace mimostab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Complex = std::complex<double>;

/// |Re(lambda)| below this counts as an imaginary-axis eigenvalue.
inline constexpr double kAxisTolerance = 1e-9;

/// Largest Lyapunov dimension handled by the Kronecker solver.
inline constexpr Eigen::Index kMaxLyapunovDimension = 64;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* module,
                    const char* what) {
  if (!m.allFinite()) {
    throw Error(Errc::InvalidInput, module,
                std::string(what) + " has non-finite entries");
  }
}

inline void require_square(const MatrixXd& a, const char* module,
                           const char* what) {
  if (a.rows() != a.cols()) {
    throw Error(Errc::InvalidInput, module, std::string(what) + " must be square");
  }
}

/// Singular values above tol * max singular value (with a floor of tol).
template <typename Matrix>
Eigen::Index numerical_rank(const Matrix& m, double relative_tol = 1e-8) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const double cutoff = relative_tol * std::max(1.0, s(0));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) ++rank;
  }
  return rank;
}

inline bool lex_greater(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

}  // namespace detail

/// Eigenvalue clustering tolerance for a matrix of this size.
inline double eigen_tolerance(const MatrixXd& a) {
  return 1e-8 * std::max(1.0, a.norm());
}

/// Eigenvalues grouped into clusters that are equal within eigen_tolerance.
struct Spectrum {
  VectorXcd eigenvalues;  // sorted: real part descending, then imaginary part
  std::vector<std::vector<Eigen::Index>> clusters;
  std::vector<Complex> cluster_values;  // mean eigenvalue of each cluster
  std::vector<Eigen::Index> geometric_multiplicity;
  MatrixXcd basis;  // columns aligned with eigenvalues
  bool diagonalizable = false;
  double basis_condition = std::numeric_limits<double>::infinity();

  Eigen::Index algebraic_multiplicity(std::size_t cluster) const {
    return static_cast<Eigen::Index>(clusters[cluster].size());
  }
};

/// Orthonormal basis of the right null space of (A - lambda I), dimension `dim`.
inline MatrixXcd eigenspace_basis(const MatrixXd& a, Complex lambda,
                                  Eigen::Index dim) {
  MatrixXcd shifted = a.cast<Complex>();
  shifted.diagonal().array() -= lambda;
  Eigen::JacobiSVD<MatrixXcd> svd(shifted, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

inline Spectrum eigendecompose(const MatrixXd& a) {
  detail::require_square(a, "numerics", "A");
  detail::require_finite(a, "numerics", "A");
  const Eigen::Index n = a.rows();
  Spectrum spec;
  if (n == 0) {
    spec.diagonalizable = true;
    spec.basis_condition = 1.0;
    return spec;
  }

  Eigen::EigenSolver<MatrixXd> solver(a, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::NumericalFailure, "numerics", "eigenvalue iteration failed");
  }
  const VectorXcd raw = solver.eigenvalues();
  const MatrixXcd raw_vectors = solver.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return detail::lex_greater(raw(i), raw(j));
  });
  spec.eigenvalues.resize(n);
  MatrixXcd sorted_vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    spec.eigenvalues(i) = raw(order[static_cast<std::size_t>(i)]);
    sorted_vectors.col(i) = raw_vectors.col(order[static_cast<std::size_t>(i)]);
  }

  // Single-linkage clustering.
  const double tol = eigen_tolerance(a);
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(spec.eigenvalues(i) - spec.eigenvalues(j)) <= tol) {
        parent[static_cast<std::size_t>(find(j))] = find(i);
      }
    }
  }
  std::vector<Eigen::Index> cluster_of_root(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index root = find(i);
    auto& slot = cluster_of_root[static_cast<std::size_t>(root)];
    if (slot < 0) {
      slot = static_cast<Eigen::Index>(spec.clusters.size());
      spec.clusters.emplace_back();
    }
    spec.clusters[static_cast<std::size_t>(slot)].push_back(i);
  }

  spec.diagonalizable = true;
  for (const auto& cluster : spec.clusters) {
    Complex mean{0.0, 0.0};
    for (Eigen::Index i : cluster) mean += spec.eigenvalues(i);
    mean /= static_cast<double>(cluster.size());
    spec.cluster_values.push_back(mean);

    MatrixXcd shifted = a.cast<Complex>();
    shifted.diagonal().array() -= mean;
    const Eigen::Index geometric =
        n - detail::numerical_rank(shifted, tol / std::max(1.0, a.norm()));
    spec.geometric_multiplicity.push_back(geometric);
    if (geometric != static_cast<Eigen::Index>(cluster.size())) {
      spec.diagonalizable = false;
    }
  }

  if (spec.diagonalizable) {
    // Eigenvectors from null spaces stay well separated inside a cluster,
    // unlike back-substituted eigenvectors of a nearly repeated eigenvalue.
    spec.basis.resize(n, n);
    for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
      const auto& cluster = spec.clusters[c];
      const MatrixXcd space = eigenspace_basis(
          a, spec.cluster_values[c], static_cast<Eigen::Index>(cluster.size()));
      for (std::size_t k = 0; k < cluster.size(); ++k) {
        spec.basis.col(cluster[k]) = space.col(static_cast<Eigen::Index>(k));
      }
    }
  } else {
    spec.basis = sorted_vectors;
  }
  Eigen::JacobiSVD<MatrixXcd> svd(spec.basis);
  const auto& s = svd.singularValues();
  spec.basis_condition = s(s.size() - 1) > 0.0
                             ? s(0) / s(s.size() - 1)
                             : std::numeric_limits<double>::infinity();
  if (spec.basis_condition > 1e8) spec.diagonalizable = false;
  return spec;
}

inline double spectral_abscissa(const MatrixXd& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> solver(a, false);
  return solver.eigenvalues().real().maxCoeff();
}

inline VectorXcd eigenvalues_sorted(const MatrixXd& a) {
  Eigen::EigenSolver<MatrixXd> solver(a, false);
  VectorXcd ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), detail::lex_greater);
  return ev;
}

inline bool is_hurwitz(const MatrixXd& a) { return spectral_abscissa(a) < 0.0; }

/// PBH rank of [A - lambda I, B] at one eigenvalue.
inline Eigen::Index pbh_rank(const MatrixXd& a, const MatrixXd& b, Complex lambda) {
  const Eigen::Index n = a.rows();
  MatrixXcd test(n, n + b.cols());
  test.leftCols(n) = a.cast<Complex>();
  test.leftCols(n).diagonal().array() -= lambda;
  test.rightCols(b.cols()) = b.cast<Complex>();
  return detail::numerical_rank(test, 1e-8);
}

/// PBH test at every eigenvalue with Re(lambda) > -kAxisTolerance.
inline bool is_stabilizable(const MatrixXd& a, const MatrixXd& b) {
  const Spectrum spec = eigendecompose(a);
  for (const Complex& lambda : spec.cluster_values) {
    if (lambda.real() > -kAxisTolerance && pbh_rank(a, b, lambda) < a.rows()) {
      return false;
    }
  }
  return true;
}

/// Solves A L + L A' + Q = 0 for Hurwitz A by a Kronecker-product linear
/// solve. The factorization is reused across right-hand sides.
class LyapunovSolver {
 public:
  explicit LyapunovSolver(const MatrixXd& a) : a_(a) {
    detail::require_square(a, "numerics", "Acl");
    detail::require_finite(a, "numerics", "Acl");
    if (a.rows() > kMaxLyapunovDimension) {
      throw Error(Errc::Unsupported, "numerics",
                  "Lyapunov dimension exceeds " +
                      std::to_string(kMaxLyapunovDimension));
    }
    if (a.rows() > 0 && spectral_abscissa(a) >= 0.0) {
      throw Error(Errc::NotHurwitz, "numerics", "Acl is not Hurwitz");
    }
    const Eigen::Index n = a.rows();
    const MatrixXd eye = MatrixXd::Identity(n, n);
    MatrixXd kron(n * n, n * n);
    // vec(A L) = (I kron A) vec L, vec(L A') = (A kron I) vec L.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        kron.block(i * n, j * n, n, n) = eye(i, j) * a + a(i, j) * eye;
      }
    }
    lu_.compute(kron);
  }

  MatrixXd solve(const MatrixXd& q) const {
    const Eigen::Index n = a_.rows();
    if (q.rows() != n || q.cols() != n) {
      throw Error(Errc::InvalidInput, "numerics", "Q dimension mismatch");
    }
    detail::require_finite(q, "numerics", "Q");
    if (n == 0) return MatrixXd(0, 0);
    const VectorXd rhs = -Eigen::Map<const VectorXd>(q.data(), n * n);
    const VectorXd sol = lu_.solve(rhs);
    MatrixXd l = Eigen::Map<const MatrixXd>(sol.data(), n, n);
    l = 0.5 * (l + l.transpose()).eval();
    MatrixXd r = a_ * l + l * a_.transpose() + q;
    double residual = r.norm();
    // A few steps of iterative refinement recover accuracy lost to poorly
    // scaled closed loops.
    for (int step = 0; step < 3 && residual > 0.0; ++step) {
      const VectorXd corr = lu_.solve(-Eigen::Map<const VectorXd>(r.data(), n * n));
      MatrixXd next = l + Eigen::Map<const MatrixXd>(corr.data(), n, n);
      next = 0.5 * (next + next.transpose()).eval();
      MatrixXd next_r = a_ * next + next * a_.transpose() + q;
      if (!(next_r.norm() < residual)) break;
      l = std::move(next);
      r = std::move(next_r);
      residual = r.norm();
    }
    const double scale = 2.0 * a_.norm() * l.norm() + q.norm();
    if (!(residual <= 1e-10 * scale)) {
      throw Error(Errc::NumericalFailure, "numerics",
                  "Lyapunov residual check failed (" + std::to_string(residual) + ")");
    }
    return l;
  }

  const MatrixXd& matrix() const { return a_; }

 private:
  MatrixXd a_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

inline MatrixXd solve_lyapunov(const MatrixXd& acl, const MatrixXd& q) {
  return LyapunovSolver(acl).solve(q);
}

namespace detail {

// Swaps diagonal entries k and k+1 of the complex Schur form t, updating the
// Schur vectors z so that M = z t z^H continues to hold.
inline void swap_schur_pair(MatrixXcd& t, MatrixXcd& z, Eigen::Index k) {
  const Complex t11 = t(k, k);
  const Complex t22 = t(k + 1, k + 1);
  const Complex t12 = t(k, k + 1);
  Eigen::Vector2cd v(t12, t22 - t11);
  const double nv = v.norm();
  if (nv == 0.0) return;
  v /= nv;
  Eigen::Matrix2cd g;
  g << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
  t.middleRows(k, 2) = (g.adjoint() * t.middleRows(k, 2)).eval();
  t.middleCols(k, 2) = (t.middleCols(k, 2) * g).eval();
  z.middleCols(k, 2) = (z.middleCols(k, 2) * g).eval();
  t(k + 1, k) = Complex(0.0, 0.0);
}

}  // namespace detail

/// Stabilizing solution of A'X + XA - XBB'X = 0 from the stable invariant
/// subspace of the Hamiltonian [[A, -BB'], [0, -A']].
inline MatrixXd solve_care_stabilizing(const MatrixXd& a, const MatrixXd& b) {
  detail::require_square(a, "numerics", "A");
  detail::require_finite(a, "numerics", "A");
  detail::require_finite(b, "numerics", "B");
  if (b.rows() != a.rows()) {
    throw Error(Errc::InvalidInput, "numerics", "B must have as many rows as A");
  }
  const Eigen::Index n = a.rows();
  if (n == 0) return MatrixXd(0, 0);

  const VectorXcd ev = eigenvalues_sorted(a);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ev(i).real()) < kAxisTolerance) {
      throw Error(Errc::AxisEigenvalue, "numerics",
                  "A has an eigenvalue on the imaginary axis");
    }
  }
  if (!is_stabilizable(a, b)) {
    throw Error(Errc::Unstabilizable, "numerics", "(A, B) is not stabilizable");
  }

  MatrixXd ham = MatrixXd::Zero(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = a;
  ham.topRightCorner(n, n) = -b * b.transpose();
  ham.bottomRightCorner(n, n) = -a.transpose();

  Eigen::ComplexSchur<MatrixXcd> schur(ham.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    throw Error(Errc::NumericalFailure, "numerics", "Schur iteration failed");
  }
  MatrixXcd t = schur.matrixT();
  MatrixXcd z = schur.matrixU();

  // Bubble the stable eigenvalues to the leading block.
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (Eigen::Index k = 0; k + 1 < 2 * n; ++k) {
      if (t(k, k).real() >= 0.0 && t(k + 1, k + 1).real() < 0.0) {
        detail::swap_schur_pair(t, z, k);
        swapped = true;
      }
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (t(k, k).real() >= 0.0) {
      throw Error(Errc::NumericalFailure, "numerics",
                  "stable invariant subspace has the wrong dimension");
    }
  }

  const MatrixXcd z1 = z.topLeftCorner(n, n);
  const MatrixXcd z2 = z.bottomLeftCorner(n, n);
  Eigen::JacobiSVD<MatrixXcd> z1_svd(z1);
  const auto& s = z1_svd.singularValues();
  if (s(n - 1) < 1e-12 * s(0)) {
    throw Error(Errc::Unstabilizable, "numerics",
                "stable subspace is not a graph over the state space");
  }
  const MatrixXcd xc = z1.transpose().partialPivLu().solve(z2.transpose()).transpose();
  MatrixXd x = xc.real();
  x = 0.5 * (x + x.transpose()).eval();

  // Newton (Kleinman) steps polish the subspace solution: X+ solves
  // Acl'X+ + X+ Acl + X BB' X = 0 with Acl = A - BB'X.
  const MatrixXd bb = b * b.transpose();
  auto care_residual = [&](const MatrixXd& y) {
    return (a.transpose() * y + y * a - y * bb * y).norm();
  };
  for (int step = 0; step < 3; ++step) {
    const MatrixXd acl = a - bb * x;
    if (!is_hurwitz(acl)) break;
    MatrixXd next;
    try {
      next = solve_lyapunov(acl.transpose(), x * bb * x);
    } catch (const Error&) {
      break;
    }
    next = 0.5 * (next + next.transpose()).eval();
    if (!(care_residual(next) < care_residual(x))) break;
    x = std::move(next);
  }

  const double scale = std::max(1.0, x.norm() * x.norm());
  const double residual = care_residual(x);
  if (!(residual <= 1e-8 * scale)) {
    throw Error(Errc::NumericalFailure, "numerics",
                "Riccati residual check failed (" + std::to_string(residual) + ")");
  }
  if (!is_hurwitz(a - b * b.transpose() * x)) {
    throw Error(Errc::NumericalFailure, "numerics",
                "Riccati closed loop is not Hurwitz");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> psd(x);
  if (psd.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, x.norm())) {
    throw Error(Errc::NumericalFailure, "numerics",
                "Riccati solution is not positive semidefinite");
  }
  return x;
}

inline double spectral_radius(const MatrixXd& z) {
  detail::require_square(z, "numerics", "Z");
  detail::require_finite(z, "numerics", "Z");
  if ((z.array() < 0.0).any()) {
    throw Error(Errc::InvalidInput, "numerics", "Z must be entrywise nonnegative");
  }
  if (z.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> solver(z, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Perron eigenvector (positive, unit 1-norm) of a nonnegative matrix; the
/// left vector when `left` is set.
inline VectorXd perron_vector(const MatrixXd& z, bool left = false) {
  const MatrixXd m = left ? MatrixXd(z.transpose()) : z;
  Eigen::EigenSolver<MatrixXd> solver(m, true);
  Eigen::Index best = 0;
  solver.eigenvalues().real().maxCoeff(&best);
  VectorXd v = solver.eigenvectors().col(best).real();
  if (v.sum() < 0.0) v = -v;
  return v / v.sum();
}

/// Samples of a matrix trajectory. `divergence_time` is set when entries
/// overflowed; the samples then stop at the last finite state.
struct MatrixTrajectory {
  std::vector<double> times;
  std::vector<MatrixXd> states;
  std::optional<double> divergence_time;

  bool diverged() const { return divergence_time.has_value(); }
};

inline constexpr double kDivergenceBound = 1e150;

/// Classical RK4 on X' = rhs(X) with a fixed step; every stage result is
/// symmetrized. Records every `stride`-th step plus the initial and final
/// states.
template <typename Rhs>
MatrixTrajectory integrate_linear_matrix_ode(Rhs&& rhs, const MatrixXd& x0,
                                             double t_end, double dt,
                                             std::size_t stride = 1) {
  if (!(dt > 0.0) || !(t_end > 0.0) || !std::isfinite(dt) || !std::isfinite(t_end)) {
    throw Error(Errc::InvalidInput, "numerics", "dt and t_end must be positive");
  }
  detail::require_finite(x0, "numerics", "X0");
  stride = std::max<std::size_t>(stride, 1);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / static_cast<double>(steps);

  auto sym = [](const MatrixXd& m) -> MatrixXd { return 0.5 * (m + m.transpose()); };

  MatrixTrajectory traj;
  MatrixXd x = sym(x0);
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  for (std::size_t step = 1; step <= steps; ++step) {
    const MatrixXd k1 = sym(rhs(x));
    const MatrixXd k2 = sym(rhs(MatrixXd(x + 0.5 * h * k1)));
    const MatrixXd k3 = sym(rhs(MatrixXd(x + 0.5 * h * k2)));
    const MatrixXd k4 = sym(rhs(MatrixXd(x + h * k3)));
    MatrixXd next = sym(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    const double t = h * static_cast<double>(step);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceBound) {
      traj.divergence_time = t;
      if (traj.times.back() != h * static_cast<double>(step - 1)) {
        traj.times.push_back(h * static_cast<double>(step - 1));
        traj.states.push_back(x);
      }
      return traj;
    }
    x = std::move(next);
    if (step % stride == 0 || step == steps) {
      traj.times.push_back(t);
      traj.states.push_back(x);
    }
  }
  return traj;
}

}  // namespace mimostab
