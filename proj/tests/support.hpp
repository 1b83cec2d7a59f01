#pragma once

// Random instance generators shared by the unit tests and the acceptance
// suite. Every generator draws from a caller-owned engine so each test is
// reproducible from its seed.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"

namespace mimostab::testing {

using Rng = std::mt19937_64;

/// The code of the mimostab::Error thrown by f, if any.
inline std::optional<Errc> error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

/// Nonsingular matrix with condition number below `max_cond`.
inline MatrixXd well_conditioned(Rng& rng, Eigen::Index n, double max_cond = 50.0) {
  while (true) {
    const MatrixXd s = gaussian(rng, n, n);
    Eigen::JacobiSVD<MatrixXd> svd(s);
    const VectorXd sv = svd.singularValues();
    if (sv(n - 1) > 0.0 && sv(0) / sv(n - 1) < max_cond) return s;
  }
}

inline MatrixXd similar(Rng& rng, const MatrixXd& core) {
  const MatrixXd s = well_conditioned(rng, core.rows());
  return s * core * s.inverse();
}

/// Real block-diagonal matrix with the given real eigenvalues and complex
/// pairs a +- bi stored as 2x2 rotation-scaling cells.
inline MatrixXd real_form(const std::vector<double>& real_eigs,
                          const std::vector<std::pair<double, double>>& pairs) {
  const auto n = static_cast<Eigen::Index>(real_eigs.size() + 2 * pairs.size());
  MatrixXd a = MatrixXd::Zero(n, n);
  Eigen::Index k = 0;
  for (double v : real_eigs) a(k, k) = v, ++k;
  for (const auto& [re, im] : pairs) {
    a(k, k) = re;
    a(k + 1, k + 1) = re;
    a(k, k + 1) = im;
    a(k + 1, k) = -im;
    k += 2;
  }
  return a;
}

/// Diagonalizable plant with n <= max_n states and real eigenvalues that
/// are distinct or exactly doubled. The input count is at least the
/// largest multiplicity so that a generic B stabilizes the plant.
inline Plant random_diagonalizable_plant(Rng& rng, int max_n = 5) {
  const int n = uniform_int(rng, 1, max_n);
  std::vector<double> eigs;
  bool doubled = false;
  while (static_cast<int>(eigs.size()) < n) {
    // Eigenvalues on a grid of 0.25 bounded away from the axis.
    double v = 0.25 * uniform_int(rng, 1, 16);
    if (uniform(rng, 0.0, 1.0) < 0.3) v = -v;
    if (std::find(eigs.begin(), eigs.end(), v) != eigs.end()) continue;
    eigs.push_back(v);
    if (static_cast<int>(eigs.size()) < n && uniform(rng, 0.0, 1.0) < 0.35) {
      eigs.push_back(v);
      doubled = true;
    }
  }
  const int m = uniform_int(rng, doubled ? 2 : 1, 3);
  const MatrixXd a = similar(rng, real_form(eigs, {}));
  const MatrixXd b = gaussian(rng, n, m);
  return Plant(a, b);
}

/// Antistable (every eigenvalue in the open right half plane) single-input
/// pair with n <= max_n states; one complex pair appears at random.
inline std::pair<MatrixXd, MatrixXd> random_antistable_pair(Rng& rng, int max_n = 4) {
  const int n = uniform_int(rng, 1, max_n);
  std::vector<double> eigs;
  std::vector<std::pair<double, double>> pairs;
  if (n >= 2 && uniform(rng, 0.0, 1.0) < 0.4) pairs.emplace_back(uniform(rng, 0.2, 2.0), uniform(rng, 0.3, 2.0));
  while (static_cast<int>(eigs.size() + 2 * pairs.size()) < n) {
    const double v = uniform(rng, 0.2, 3.0);
    bool close = false;
    for (double e : eigs) close = close || std::abs(e - v) < 0.15;
    if (!close) eigs.push_back(v);
  }
  return {similar(rng, real_form(eigs, pairs)), gaussian(rng, n, 1)};
}

/// Gain k with eig(a - b k) equal to the roots of the monic polynomial with
/// the given roots (Ackermann's formula, single input).
inline MatrixXd ackermann(const MatrixXd& a, const MatrixXd& b, const std::vector<double>& roots) {
  const Eigen::Index n = a.rows();
  MatrixXd ctrb(n, n);
  ctrb.col(0) = b;
  for (Eigen::Index i = 1; i < n; ++i) ctrb.col(i) = a * ctrb.col(i - 1);
  MatrixXd phi = MatrixXd::Identity(n, n);
  for (double r : roots) phi = phi * (a - r * MatrixXd::Identity(n, n));
  MatrixXd en = MatrixXd::Zero(1, n);
  en(0, n - 1) = 1.0;
  return en * ctrb.inverse() * phi;
}

/// Random Hurwitz realization with p inputs and q outputs.
inline void random_stable_system(Rng& rng, Eigen::Index n, Eigen::Index p, Eigen::Index q,
                                 MatrixXd& a, MatrixXd& b, MatrixXd& c) {
  std::vector<double> eigs;
  for (Eigen::Index i = 0; i < n; ++i) eigs.push_back(-uniform(rng, 0.3, 3.0));
  a = similar(rng, real_form(eigs, {}));
  b = gaussian(rng, n, p);
  c = gaussian(rng, q, n);
}

inline ChannelEnsemble awgn_from_capacities(const VectorXd& c) {
  return ChannelEnsemble::awgn(2.0 * c, VectorXd::Ones(c.size()));
}

/// Fading ensemble with capacities c: sigma^2 = mu^2 / (2c) for the given
/// means.
inline ChannelEnsemble fading_from_capacities(const VectorXd& c, const VectorXd& means) {
  return ChannelEnsemble::fading(means, means.cwiseAbs2().cwiseQuotient(2.0 * c));
}

}  // namespace mimostab::testing
