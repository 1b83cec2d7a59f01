#pragma once

// Controller and encoder/decoder synthesis for a given cyclic decomposition
// and demand-shaping isometry.

#include <string>
#include <utility>
#include <vector>

#include "mimostab/cyclic.hpp"
#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"

namespace mimostab {

/// State feedback u = F x with encoder T (channel input q = T F x) and
/// decoder R (u = R * channel output).
struct CoDesign {
  ChannelKind kind = ChannelKind::AWGN;
  MatrixXd F;  // m x n
  MatrixXd T;  // l x m
  MatrixXd R;  // m x l
  double epsilon = 1.0;
  VectorXd gamma;  // demand on each subchannel
  MatrixXd U;      // l x m_c isometry, m_c = min(m, l)
  std::vector<std::string> notes;
};

/// Squared H2 norm of c (sI - a)^-1 b for Hurwitz a.
inline double h2_norm_squared(const MatrixXd& a, const MatrixXd& b, const MatrixXd& c) {
  const MatrixXd l = solve_lyapunov(a, b * b.transpose());
  return (c * l * c.transpose()).trace();
}

/// Blockwise optimal gain: f_i = -b_i' X_i with X_i the stabilizing Riccati
/// solution of block i, assembled into decomposition coordinates and mapped
/// back to the plant's coordinates as F = Q F_dec P^-1.
inline MatrixXd synthesize_gain(const CyclicDecomposition& d) {
  const Eigen::Index n = d.P.rows();
  const Eigen::Index m = d.Q.rows();
  MatrixXd f_dec = MatrixXd::Zero(m, n);
  for (Eigen::Index i = 0; i < std::min(d.k(), m); ++i) {
    const CyclicBlock& blk = d.blocks[static_cast<std::size_t>(i)];
    const MatrixXd b = blk.b;
    const MatrixXd x = solve_care_stabilizing(blk.A, b);
    const MatrixXd f = -b.transpose() * x;
    const MatrixXd acl = blk.A + b * f;
    const double t2 = h2_norm_squared(acl, b, f);
    const double expected = 2.0 * blk.entropy;
    if (std::abs(t2 - expected) > 1e-6 * std::max(1.0, expected)) {
      throw Error(Errc::NumericalFailure, "codesign",
                  "block " + std::to_string(i + 1) + " gain misses the optimal H2 norm (" +
                      std::to_string(t2) + " vs " + std::to_string(expected) + ")");
    }
    f_dec.block(i, blk.offset, 1, blk.size()) = f;
  }
  return d.Q * f_dec * d.P.partialPivLu().inverse();
}

inline VectorXd epsilon_powers(double epsilon, Eigen::Index count) {
  VectorXd d(count);
  double v = 1.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    d(i) = v;
    v *= epsilon;
  }
  return d;
}

/// Encoder/decoder pair in decomposition input coordinates:
///   AWGN:   T = N^1/2 U D^-1,   R = D U' N^-1/2
///   fading: T = |M|^-1/2 U D^-1, R = D U' |M|^-1/2 sgn(M)
/// with D = diag(1, eps, eps^2, ...). When U has fewer columns than m the
/// remaining inputs are left unconnected.
inline std::pair<MatrixXd, MatrixXd> synthesize_codec(const ChannelEnsemble& ch, const MatrixXd& u,
                                                      double epsilon, Eigen::Index m) {
  const Eigen::Index l = ch.count();
  const Eigen::Index mc = u.cols();
  if (u.rows() != l || mc < 1 || mc > m) {
    throw Error(Errc::DimensionMismatch, "codesign", "isometry must be l x m_c with m_c <= m");
  }
  if (!(epsilon > 0.0) || epsilon > 1.0) {
    throw Error(Errc::InvalidInput, "codesign", "epsilon must lie in (0, 1]");
  }
  const VectorXd dvec = epsilon_powers(epsilon, mc);
  VectorXd left(l);   // diagonal scaling applied to T
  VectorXd right(l);  // diagonal scaling applied to R
  if (ch.kind() == ChannelKind::AWGN) {
    left = ch.noise_densities().cwiseSqrt();
    right = left.cwiseInverse();
  } else {
    left = ch.means().cwiseAbs().cwiseSqrt().cwiseInverse();
    right = left.cwiseProduct(ch.means().cwiseSign());
  }
  MatrixXd t = MatrixXd::Zero(l, m);
  MatrixXd r = MatrixXd::Zero(m, l);
  t.leftCols(mc) = left.asDiagonal() * u * dvec.cwiseInverse().asDiagonal();
  r.topRows(mc) = dvec.asDiagonal() * u.transpose() * right.asDiagonal();

  MatrixXd product = r.topRows(mc) * (ch.kind() == ChannelKind::AWGN
                                          ? t.leftCols(mc)
                                          : MatrixXd(ch.means().asDiagonal() * t.leftCols(mc)));
  const double residual = (product - MatrixXd::Identity(mc, mc)).norm();
  if (!(residual <= 1e-10)) {
    throw Error(Errc::CodecInvalid, "codesign",
                "codec constraint residual " + std::to_string(residual) + " exceeds 1e-10");
  }
  return {t, r};
}

/// Maps a codec from decomposition input coordinates (v, with u = Q v) to
/// plant input coordinates.
inline std::pair<MatrixXd, MatrixXd> codec_to_plant(const MatrixXd& q, const MatrixXd& t_dec,
                                                    const MatrixXd& r_dec) {
  return {t_dec * q.partialPivLu().inverse(), q * r_dec};
}

/// Residual of R T = I (AWGN) or R M T = I (fading) on the connected inputs.
inline double codec_residual(const CoDesign& cd, const ChannelEnsemble& ch) {
  const MatrixXd mid = ch.kind() == ChannelKind::AWGN
                           ? MatrixXd::Identity(ch.count(), ch.count())
                           : MatrixXd(ch.means().asDiagonal());
  const MatrixXd product = cd.R * mid * cd.T;
  const Eigen::Index m = product.rows();
  if (cd.U.cols() == m) return (product - MatrixXd::Identity(m, m)).norm();
  // With unconnected inputs R M T is a projection of rank m_c; compare it to
  // its own square instead of the identity.
  return (product * product - product).norm() +
         std::abs(product.trace() - static_cast<double>(cd.U.cols()));
}

}  // namespace mimostab
