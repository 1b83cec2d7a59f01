#pragma once

// Closed-loop verification of a co-design: transfer realizations, channel
// powers, mean-square and mixed norms, covariance simulation and verdicts.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mimostab/design.hpp"
#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"

namespace mimostab {

/// Strictly proper realization C (sI - A)^-1 B.
struct StateSpace {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C;
  bool hurwitz = false;

  StateSpace(MatrixXd a, MatrixXd b, MatrixXd c)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows()) {
      throw Error(Errc::DimensionMismatch, "analysis", "inconsistent state-space dimensions");
    }
    hurwitz = A.rows() == 0 || is_hurwitz(A);
  }

  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
};

/// Complementary sensitivity from channel noise to channel input:
/// T F (sI - A - BF)^-1 B R, with an extra factor M on the input side for
/// fading channels.
inline StateSpace closed_loop(const Plant& p, const CoDesign& cd, const ChannelEnsemble& ch) {
  if (cd.F.rows() != p.m() || cd.F.cols() != p.n() || cd.R.rows() != p.m() ||
      cd.R.cols() != ch.count() || cd.T.rows() != ch.count() || cd.T.cols() != p.m()) {
    throw Error(Errc::DimensionMismatch, "analysis", "design does not match plant and channels");
  }
  MatrixXd bcl = p.B() * cd.R;
  if (ch.kind() == ChannelKind::Fading) bcl = bcl * ch.means().asDiagonal();
  return StateSpace(p.A() + p.B() * cd.F, bcl, cd.T * cd.F);
}

namespace detail {

inline void require_hurwitz(const StateSpace& ss) {
  if (!ss.hurwitz) {
    throw Error(Errc::NotHurwitz, "analysis", "closed loop is not Hurwitz");
  }
}

}  // namespace detail

/// Matrix of squared H2 norms of every transfer entry; one Lyapunov
/// factorization is shared by all input columns.
inline MatrixXd h2_gramian_entrywise(const StateSpace& ss) {
  detail::require_hurwitz(ss);
  const LyapunovSolver solver(ss.A);
  MatrixXd out(ss.outputs(), ss.inputs());
  for (Eigen::Index j = 0; j < ss.inputs(); ++j) {
    const VectorXd bj = ss.B.col(j);
    const MatrixXd l = solver.solve(bj * bj.transpose());
    out.col(j) = (ss.C * l * ss.C.transpose()).diagonal();
  }
  return out.cwiseMax(0.0);
}

/// Stationary second moments E[q_i^2] of the channel inputs under white
/// channel noise with densities N.
inline VectorXd channel_powers_awgn(const Plant& p, const CoDesign& cd,
                                    const VectorXd& noise_densities) {
  if (noise_densities.size() != cd.T.rows()) {
    throw Error(Errc::DimensionMismatch, "analysis", "one noise density per subchannel expected");
  }
  const StateSpace ss(p.A() + p.B() * cd.F, p.B() * cd.R, cd.T * cd.F);
  detail::require_hurwitz(ss);
  const MatrixXd q = ss.B * noise_densities.asDiagonal() * ss.B.transpose();
  const MatrixXd l = solve_lyapunov(ss.A, q);
  return (ss.C * l * ss.C.transpose()).diagonal();
}

/// sqrt(rho([|| (G Phi)_ij ||_2^2])) for a square transfer matrix G.
inline double ms_norm(const StateSpace& ss, const VectorXd& phi) {
  if (ss.outputs() != ss.inputs() || phi.size() != ss.inputs()) {
    throw Error(Errc::DimensionMismatch, "analysis", "MS norm needs a square transfer matrix");
  }
  const MatrixXd g2 = h2_gramian_entrywise(ss) * phi.cwiseAbs2().asDiagonal();
  return std::sqrt(spectral_radius(g2));
}

inline double ms_norm(const StateSpace& ss) {
  return ms_norm(ss, VectorXd::Ones(ss.inputs()));
}

struct MixedNorms {
  double norm_2_1 = 0.0;    // largest column sum, square-rooted
  double norm_2_inf = 0.0;  // largest row sum, square-rooted
};

inline MixedNorms mixed_norms_from_gramian(const MatrixXd& g2) {
  MixedNorms out;
  if (g2.size() == 0) return out;
  out.norm_2_1 = std::sqrt(g2.colwise().sum().maxCoeff());
  out.norm_2_inf = std::sqrt(g2.rowwise().sum().maxCoeff());
  return out;
}

inline MixedNorms mixed_norms(const StateSpace& ss) {
  return mixed_norms_from_gramian(h2_gramian_entrywise(ss));
}

/// Fading noise intensities Phi = |M|^-1 Sigma.
inline VectorXd fading_phi(const ChannelEnsemble& ch) {
  return ch.variances().cwiseSqrt().cwiseQuotient(ch.means().cwiseAbs());
}

/// Right-hand side of the second-moment equation of the fading loop,
///   X' = Acl X + X Acl' + B R diag(sigma_i^2 (T F X F' T')_ii) R' B'.
/// For AWGN channels the forcing is the constant B R N R' B'.
class CovarianceDynamics {
 public:
  CovarianceDynamics(const Plant& p, const CoDesign& cd, const ChannelEnsemble& ch)
      : kind_(ch.kind()),
        acl_(p.A() + p.B() * cd.F),
        br_(p.B() * cd.R),
        c_(cd.T * cd.F) {
    if (kind_ == ChannelKind::Fading) {
      sigma2_ = ch.variances();
    } else {
      forcing_ = br_ * ch.noise_densities().asDiagonal() * br_.transpose();
    }
  }

  MatrixXd operator()(const MatrixXd& x) const {
    MatrixXd dx = acl_ * x + x * acl_.transpose();
    if (kind_ == ChannelKind::Fading) {
      const VectorXd q2 = (c_ * x * c_.transpose()).diagonal();
      dx += br_ * sigma2_.cwiseProduct(q2).asDiagonal() * br_.transpose();
    } else {
      dx += forcing_;
    }
    return dx;
  }

  /// The linear map of the fading equation as an n^2 x n^2 matrix acting on
  /// vec(X).
  MatrixXd generator() const {
    const Eigen::Index n = acl_.rows();
    const MatrixXd eye = MatrixXd::Identity(n, n);
    MatrixXd k = MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        k.block(i * n, j * n, n, n) = eye(i, j) * acl_ + acl_(i, j) * eye;
      }
    }
    if (kind_ == ChannelKind::Fading) {
      for (Eigen::Index i = 0; i < sigma2_.size(); ++i) {
        const VectorXd g = br_.col(i);
        const VectorXd h = c_.row(i).transpose();
        const MatrixXd gg = g * g.transpose();
        const MatrixXd hh = h * h.transpose();
        k += sigma2_(i) * Eigen::Map<const VectorXd>(gg.data(), n * n) *
             Eigen::Map<const VectorXd>(hh.data(), n * n).transpose();
      }
    }
    return k;
  }

  const MatrixXd& closed_loop_matrix() const { return acl_; }

 private:
  ChannelKind kind_;
  MatrixXd acl_;
  MatrixXd br_;
  MatrixXd c_;
  VectorXd sigma2_;
  MatrixXd forcing_;
};

inline constexpr std::size_t kMaxTrajectoryRows = 10000;
/// Largest accepted dt * max|lambda| of the covariance generator.
inline constexpr double kMaxStableStep = 2.5;

struct CovarianceTrajectory {
  std::vector<double> times;
  std::vector<MatrixXd> states;
  std::vector<double> frobenius;
  std::optional<double> divergence_time;
  double t_end = 0.0;
  double dt = 0.0;

  bool diverged() const { return divergence_time.has_value(); }
  std::size_t size() const { return times.size(); }
};

struct SimulationDefaults {
  double t_end = 0.0;
  double dt = 0.0;
};

/// Default horizon and step. The step is 0.01 / |spectral abscissa of A+BF|,
/// shortened when needed so that dt * max|lambda| of the covariance
/// generator stays below 0.1. The horizon is 20 time constants of the
/// slowest covariance mode (or of A+BF when that mode is not decaying).
inline SimulationDefaults simulation_defaults(const CovarianceDynamics& dyn) {
  SimulationDefaults out;
  const MatrixXd& acl = dyn.closed_loop_matrix();
  const double alpha = spectral_abscissa(acl);
  const double slow = std::abs(alpha) > 1e-12 ? std::abs(alpha) : 1.0;
  const MatrixXd k = dyn.generator();
  const VectorXcd ev = Eigen::EigenSolver<MatrixXd>(k, false).eigenvalues();
  const double fastest = ev.cwiseAbs().maxCoeff();
  const double kappa = ev.real().maxCoeff();
  out.dt = 0.01 / slow;
  if (fastest > 0.0) out.dt = std::min(out.dt, 0.1 / fastest);
  out.t_end = kappa < -1e-12 ? 20.0 / std::abs(kappa) : 20.0 / slow;
  return out;
}

/// Integrates the second-moment equation from X(0) = x0 x0'. Samples are
/// decimated to at most kMaxTrajectoryRows rows.
inline CovarianceTrajectory simulate_covariance(const Plant& p, const CoDesign& cd,
                                                const ChannelEnsemble& ch,
                                                std::optional<double> t_end = std::nullopt,
                                                std::optional<double> dt = std::nullopt) {
  const CovarianceDynamics dyn(p, cd, ch);
  if (!t_end || !dt) {
    const SimulationDefaults def = simulation_defaults(dyn);
    if (!t_end) t_end = def.t_end;
    if (!dt) dt = def.dt;
  }
  if (!(*dt > 0.0) || !(*t_end > 0.0)) {
    throw Error(Errc::InvalidInput, "analysis", "t_end and dt must be positive");
  }
  // Beyond roughly 2.5 / max|lambda| the RK4 step leaves its stability region
  // and the trajectory stops meaning anything.
  const double fastest =
      Eigen::EigenSolver<MatrixXd>(dyn.generator(), false).eigenvalues().cwiseAbs().maxCoeff();
  if (*dt * fastest > kMaxStableStep) {
    throw Error(Errc::InvalidInput, "analysis",
                "dt = " + std::to_string(*dt) + " exceeds the RK4 stability limit " +
                    std::to_string(kMaxStableStep / fastest));
  }
  const double steps = std::ceil(*t_end / *dt - 1e-9);
  const auto stride = static_cast<std::size_t>(
      std::max(1.0, std::ceil(steps / static_cast<double>(kMaxTrajectoryRows - 2))));
  const MatrixXd x0 = p.x0() * p.x0().transpose();
  MatrixTrajectory raw = integrate_linear_matrix_ode(dyn, x0, *t_end, *dt, stride);

  CovarianceTrajectory out;
  out.t_end = *t_end;
  out.dt = *t_end / steps;
  out.divergence_time = raw.divergence_time;
  out.times = std::move(raw.times);
  out.states = std::move(raw.states);
  for (const auto& x : out.states) out.frobenius.push_back(x.norm());
  return out;
}

inline CovarianceTrajectory simulate_fading_covariance(const Plant& p, const CoDesign& cd,
                                                       const ChannelEnsemble& ch,
                                                       std::optional<double> t_end = std::nullopt,
                                                       std::optional<double> dt = std::nullopt) {
  if (ch.kind() != ChannelKind::Fading) {
    throw Error(Errc::InvalidInput, "analysis", "fading covariance needs fading channels");
  }
  return simulate_covariance(p, cd, ch, t_end, dt);
}

enum class Verdict { Stabilized, Unstable, PowerViolation, MSNormViolation };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stabilized: return "Stabilized";
    case Verdict::Unstable: return "Unstable";
    case Verdict::PowerViolation: return "PowerViolation";
    case Verdict::MSNormViolation: return "MSNormViolation";
  }
  return "Unknown";
}

struct AnalysisReport {
  ChannelKind kind = ChannelKind::AWGN;
  Verdict verdict = Verdict::Unstable;
  VectorXcd closed_loop_spectrum;
  std::optional<VectorXd> channel_powers;  // AWGN only
  std::optional<double> ms_norm;           // fading only
  VectorXd margins;  // P_i - E[q_i^2] (AWGN) or 1 - MS norm (fading)

  bool stabilized() const { return verdict == Verdict::Stabilized; }
};

inline AnalysisReport analyze(const Plant& p, const CoDesign& cd, const ChannelEnsemble& ch) {
  AnalysisReport report;
  report.kind = ch.kind();
  const StateSpace ss = closed_loop(p, cd, ch);
  report.closed_loop_spectrum = eigenvalues_sorted(ss.A);
  if (!ss.hurwitz) {
    report.verdict = Verdict::Unstable;
    report.margins = VectorXd(0);
    return report;
  }
  if (ch.kind() == ChannelKind::AWGN) {
    const VectorXd powers = channel_powers_awgn(p, cd, ch.noise_densities());
    report.channel_powers = powers;
    report.margins = ch.powers() - powers;
    bool ok = true;
    for (Eigen::Index i = 0; i < powers.size(); ++i) {
      ok = ok && report.margins(i) >= 1e-9 * ch.powers()(i);
    }
    report.verdict = ok ? Verdict::Stabilized : Verdict::PowerViolation;
  } else {
    const double norm = ms_norm(ss, fading_phi(ch));
    report.ms_norm = norm;
    report.margins = VectorXd::Constant(1, 1.0 - norm);
    report.verdict = norm < 1.0 ? Verdict::Stabilized : Verdict::MSNormViolation;
  }
  return report;
}

}  // namespace mimostab
