#pragma once

// Majorization orders, construction of an intermediate demand vector between a
// capacity vector and an entropy vector, and a Givens-rotation Schur-Horn
// construction of the isometry that realizes a prescribed diagonal.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"

namespace mimostab {

enum class Relation { Majorize, WeakBelow, WeakAbove, StrictWeakBelow, StrictWeakAbove };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::Majorize: return "majorize";
    case Relation::WeakBelow: return "weak_below";
    case Relation::WeakAbove: return "weak_above";
    case Relation::StrictWeakBelow: return "strict_weak_below";
    case Relation::StrictWeakAbove: return "strict_weak_above";
  }
  return "unknown";
}

/// Result of comparing x against y. For the "below" relations and Majorize
/// the slack is Y_j - X_j over descending prefix sums; for the "above"
/// relations it is X_j - Y_j over ascending prefix sums.
struct OrderVerdict {
  Relation relation = Relation::Majorize;
  bool holds = false;
  VectorXd slack;
  VectorXd x_prefix;
  VectorXd y_prefix;
  double tolerance = 0.0;

  /// Index of the first prefix that fails, if any.
  std::optional<Eigen::Index> violated_prefix() const {
    const bool strict = relation == Relation::StrictWeakAbove ||
                        relation == Relation::StrictWeakBelow;
    for (Eigen::Index j = 0; j < slack.size(); ++j) {
      const bool last = j + 1 == slack.size();
      bool ok = strict ? slack(j) > tolerance : slack(j) >= -tolerance;
      if (relation == Relation::Majorize && last) ok = std::abs(slack(j)) <= tolerance;
      if (!ok) return j;
    }
    return std::nullopt;
  }
};

/// Strictness margin for vectors of this magnitude.
inline double strict_tolerance(const VectorXd& x, const VectorXd& y) {
  double scale = 1.0;
  if (x.size() > 0) scale = std::max(scale, x.cwiseAbs().maxCoeff());
  if (y.size() > 0) scale = std::max(scale, y.cwiseAbs().maxCoeff());
  return 1e-9 * scale;
}

namespace detail {

inline VectorXd sorted_copy(const VectorXd& v, bool descending) {
  VectorXd out = v;
  if (descending) {
    std::stable_sort(out.data(), out.data() + out.size(), std::greater<double>());
  } else {
    std::stable_sort(out.data(), out.data() + out.size());
  }
  return out;
}

inline VectorXd prefix_sums(const VectorXd& v) {
  VectorXd out(v.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    acc += v(i);
    out(i) = acc;
  }
  return out;
}

}  // namespace detail

inline OrderVerdict check_order(const VectorXd& x, const VectorXd& y, Relation relation) {
  if (x.size() != y.size()) {
    throw Error(Errc::InvalidInput, "majorize",
                "order checks need equal lengths (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  detail::require_finite(x, "majorize", "x");
  detail::require_finite(y, "majorize", "y");
  OrderVerdict v;
  v.relation = relation;
  v.tolerance = strict_tolerance(x, y);
  const bool above = relation == Relation::WeakAbove || relation == Relation::StrictWeakAbove;
  v.x_prefix = detail::prefix_sums(detail::sorted_copy(x, !above));
  v.y_prefix = detail::prefix_sums(detail::sorted_copy(y, !above));
  v.slack = above ? VectorXd(v.x_prefix - v.y_prefix) : VectorXd(v.y_prefix - v.x_prefix);
  v.holds = !v.violated_prefix().has_value();
  return v;
}

/// Zero-pads the shorter of two vectors so both have the same length.
inline std::pair<VectorXd, VectorXd> zero_pad(const VectorXd& x, const VectorXd& y) {
  const Eigen::Index p = std::max(x.size(), y.size());
  VectorXd xp = VectorXd::Zero(p);
  VectorXd yp = VectorXd::Zero(p);
  xp.head(x.size()) = x;
  yp.head(y.size()) = y;
  return {xp, yp};
}

/// Entropy vector used as communication demand: the positive entries of h,
/// in the given (non-increasing) order. Blocks without unstable modes need no
/// channel.
inline VectorXd demand_vector(const VectorXd& h) {
  std::vector<double> kept;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h(i) > 0.0) kept.push_back(h(i));
  }
  return Eigen::Map<VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

/// Builds gamma with gamma < c elementwise and gamma majorized by h, given
/// that c strictly weakly majorizes h from above. Every coordinate of c is
/// lowered by the largest uniform margin that keeps the ascending prefix sums
/// above those of h; any excess total is then removed by capping the largest
/// entries at a common level.
inline VectorXd construct_intermediate(const VectorXd& c, const VectorXd& h) {
  const OrderVerdict pre = check_order(c, h, Relation::StrictWeakAbove);
  if (!pre.holds) {
    throw Error(Errc::NotMajorized, "majorize",
                "capacities do not strictly weakly majorize the entropy vector (prefix " +
                    std::to_string(*pre.violated_prefix() + 1) + ")");
  }
  const Eigen::Index l = c.size();
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < l; ++j) {
    margin = std::min(margin, pre.slack(j) / static_cast<double>(j + 1));
  }
  const VectorXd x = c.array() - margin;
  const double target = h.sum();

  // Water level tau with sum_i min(x_i, tau) = target, searched over the
  // breakpoints of the piecewise-linear left-hand side.
  const VectorXd desc = detail::sorted_copy(x, true);
  double tau = desc(0);
  double rest = x.sum();
  if (rest > target) {
    double above = 0.0;  // sum of the r largest entries
    for (Eigen::Index r = 1; r <= l; ++r) {
      above += desc(r - 1);
      const double below = rest - above;
      const double level = (target - below) / static_cast<double>(r);
      const double next = r < l ? desc(r) : -std::numeric_limits<double>::infinity();
      if (level >= next) {
        tau = level;
        break;
      }
    }
  }
  VectorXd gamma = x.cwiseMin(tau);
  // Put the last rounding error of the total on the largest entry.
  Eigen::Index top = 0;
  gamma.maxCoeff(&top);
  gamma(top) += target - gamma.sum();

  const double delta = pre.tolerance;
  const OrderVerdict post = check_order(gamma, h, Relation::Majorize);
  const double gap = (c - gamma).minCoeff();
  if (!post.holds || !(gap >= delta) || std::abs(gamma.sum() - target) > 1e-10 * std::max(1.0, std::abs(target))) {
    throw Error(Errc::ConstructionFailed, "majorize",
                "intermediate vector failed its postconditions");
  }
  return gamma;
}

/// Exact rational number with 64-bit numerator and positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {  // NOLINT(google-explicit-constructor)
    if (den == 0) throw Error(Errc::InvalidInput, "majorize", "zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  static Rational from_wide(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    constexpr __int128 lim = std::numeric_limits<std::int64_t>::max();
    if (n > lim || -n > lim || d > lim) {
      throw Error(Errc::Unsupported, "majorize", "rational overflow");
    }
    return Rational(static_cast<std::int64_t>(n), static_cast<std::int64_t>(d));
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                     static_cast<__int128>(a.den) * b.den);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }
};

namespace detail {

// Exact x majorized by y (equal lengths).
inline bool majorized_exact(std::vector<Rational> x, std::vector<Rational> y) {
  std::sort(x.begin(), x.end(), std::greater<Rational>());
  std::sort(y.begin(), y.end(), std::greater<Rational>());
  Rational sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx = sx + x[i];
    sy = sy + y[i];
    if (sx > sy) return false;
  }
  return sx == sy;
}

}  // namespace detail

/// Exhaustive grid search for gamma < c with gamma majorized by h, in exact
/// arithmetic. The first l-1 coordinates range over a uniform grid on
/// [min h, max h]; the last one is fixed by the total.
inline std::optional<std::vector<Rational>> brute_force_feasible_gamma(
    const std::vector<Rational>& c, const std::vector<Rational>& h, int grid) {
  if (c.size() != h.size() || c.empty()) {
    throw Error(Errc::InvalidInput, "majorize", "c and h must have the same nonzero length");
  }
  if (c.size() > 4 || grid < 1 || grid > 200) {
    throw Error(Errc::Unsupported, "majorize", "brute force is limited to l <= 4, grid <= 200");
  }
  const std::size_t l = c.size();
  const Rational lo = *std::min_element(h.begin(), h.end());
  const Rational hi = *std::max_element(h.begin(), h.end());
  Rational total;
  for (const auto& v : h) total = total + v;
  const Rational step = (hi - lo) / Rational(grid);
  const int points = hi == lo ? 1 : grid + 1;

  std::vector<int> idx(l - 1, 0);
  std::vector<Rational> gamma(l);
  while (true) {
    Rational partial;
    for (std::size_t i = 0; i + 1 < l; ++i) {
      gamma[i] = lo + step * Rational(idx[i]);
      partial = partial + gamma[i];
    }
    gamma[l - 1] = total - partial;
    bool below = true;
    for (std::size_t i = 0; i < l && below; ++i) below = gamma[i] < c[i];
    if (below && detail::majorized_exact(gamma, h)) return gamma;

    std::size_t pos = 0;
    while (pos + 1 < l && ++idx[pos] == points) idx[pos++] = 0;
    if (pos + 1 >= l) break;
  }
  return std::nullopt;
}

/// Residuals of a candidate isometry U against the target eigenvalues and
/// diagonal.
struct IsometryResiduals {
  double orthogonality = 0.0;  // Frobenius norm of U'U - I
  double diagonal = 0.0;       // max |diag(U diag(lambda) U')_i - gamma_i|
  double spectrum = 0.0;       // max eigenvalue mismatch against (lambda, 0, ...)
};

inline IsometryResiduals isometry_residuals(const MatrixXd& u, const VectorXd& lambda,
                                            const VectorXd& gamma) {
  if (u.cols() != lambda.size() || u.rows() != gamma.size()) {
    throw Error(Errc::DimensionMismatch, "majorize", "U must be l x m");
  }
  IsometryResiduals r;
  const Eigen::Index m = u.cols();
  const Eigen::Index l = u.rows();
  r.orthogonality = (u.transpose() * u - MatrixXd::Identity(m, m)).norm();
  const MatrixXd x = u * lambda.asDiagonal() * u.transpose();
  r.diagonal = (x.diagonal() - gamma).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (x + x.transpose()), Eigen::EigenvaluesOnly);
  VectorXd expected = VectorXd::Zero(l);
  expected.head(m) = lambda;
  std::sort(expected.data(), expected.data() + l);
  r.spectrum = (eig.eigenvalues() - expected).cwiseAbs().maxCoeff();
  return r;
}

/// Real l x m matrix U with orthonormal columns and
/// diag(U diag(lambda) U') = gamma. Each step rotates two diagonal entries
/// that straddle the largest unplaced target, fixing one of them exactly;
/// the untouched part of the matrix stays diagonal throughout.
inline MatrixXd schur_horn_isometry(const VectorXd& lambda, const VectorXd& gamma) {
  const Eigen::Index m = lambda.size();
  const Eigen::Index l = gamma.size();
  if (m < 1 || l < m) {
    throw Error(Errc::InvalidInput, "majorize", "need 1 <= m <= l");
  }
  detail::require_finite(lambda, "majorize", "lambda");
  detail::require_finite(gamma, "majorize", "gamma");
  VectorXd a0 = VectorXd::Zero(l);
  a0.head(m) = lambda;
  const OrderVerdict pre = check_order(gamma, a0, Relation::Majorize);
  if (!pre.holds) {
    throw Error(Errc::NotMajorized, "majorize",
                "target diagonal is not majorized by the eigenvalues");
  }

  MatrixXd mat = a0.asDiagonal();
  MatrixXd z = MatrixXd::Identity(l, l);  // mat = z' diag(a0) z
  std::vector<bool> fixed(static_cast<std::size_t>(l), false);
  std::vector<Eigen::Index> position(static_cast<std::size_t>(l), -1);

  std::vector<Eigen::Index> targets(static_cast<std::size_t>(l));
  std::iota(targets.begin(), targets.end(), 0);
  std::stable_sort(targets.begin(), targets.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return gamma(i) > gamma(j); });

  for (std::size_t step = 0; step < targets.size(); ++step) {
    const Eigen::Index t = targets[step];
    const double d = gamma(t);
    std::vector<Eigen::Index> open;
    for (Eigen::Index i = 0; i < l; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) open.push_back(i);
    }
    std::stable_sort(open.begin(), open.end(),
                     [&](Eigen::Index i, Eigen::Index j) { return mat(i, i) > mat(j, j); });
    if (open.size() == 1) {
      position[static_cast<std::size_t>(t)] = open[0];
      fixed[static_cast<std::size_t>(open[0])] = true;
      break;
    }
    std::size_t p = 0;
    while (p + 2 < open.size() && mat(open[p + 1], open[p + 1]) >= d) ++p;
    const Eigen::Index i = open[p];
    const Eigen::Index j = open[p + 1];
    const double alpha = mat(i, i);
    const double beta = mat(j, j);
    double c2 = alpha - beta > 0.0 ? (d - beta) / (alpha - beta) : 1.0;
    c2 = std::clamp(c2, 0.0, 1.0);
    const double c = std::sqrt(c2);
    const double s = std::sqrt(1.0 - c2);
    Eigen::JacobiRotation<double> rot(c, s);
    // mat <- G' mat G with G acting on columns i, j.
    mat.applyOnTheRight(i, j, rot);
    mat.applyOnTheLeft(i, j, rot.transpose());
    z.applyOnTheRight(i, j, rot);
    position[static_cast<std::size_t>(t)] = i;
    fixed[static_cast<std::size_t>(i)] = true;
  }

  // Row t of U is the eigenvector row of the position holding target t.
  const MatrixXd zt = z.transpose();
  MatrixXd u(l, m);
  for (Eigen::Index t = 0; t < l; ++t) {
    u.row(t) = zt.row(position[static_cast<std::size_t>(t)]).head(m);
  }
  for (Eigen::Index col = 0; col < m; ++col) {
    for (Eigen::Index row = 0; row < l; ++row) {
      if (std::abs(u(row, col)) > 1e-12) {
        if (u(row, col) < 0.0) u.col(col) *= -1.0;
        break;
      }
    }
  }

  const IsometryResiduals r = isometry_residuals(u, lambda, gamma);
  if (!(r.orthogonality <= 1e-10) || !(r.diagonal <= 1e-8) || !(r.spectrum <= 1e-7)) {
    throw Error(Errc::ConstructionFailed, "majorize",
                "isometry failed its postconditions (orthogonality " +
                    std::to_string(r.orthogonality) + ", diagonal " + std::to_string(r.diagonal) +
                    ")");
  }
  return u;
}

}  // namespace mimostab
