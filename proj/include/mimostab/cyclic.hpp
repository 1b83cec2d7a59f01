#pragma once

// Cyclic decomposition of a stabilizable pair (A, B): nonsingular P, Q such
// that P^-1 A P = blockdiag(A_1, ..., A_k) and P^-1 B Q is block upper
// triangular with single-input cyclic pairs (A_i, b_i) on the diagonal.

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"

namespace mimostab {

struct CyclicBlock {
  MatrixXd A;
  VectorXd b;
  Eigen::Index offset = 0;  // first row of the block inside P^-1 A P
  double entropy = 0.0;

  Eigen::Index size() const { return A.rows(); }
};

struct CyclicDecomposition {
  MatrixXd P;
  MatrixXd Q;
  std::vector<CyclicBlock> blocks;
  VectorXd h;          // H(A_i), non-increasing
  MatrixXd staircase;  // P^-1 B Q
  std::uint64_t seed = 0;
  int attempt = 0;  // 0 means Q = I was accepted without randomization

  Eigen::Index k() const { return static_cast<Eigen::Index>(blocks.size()); }

  /// Number of blocks with positive entropy.
  Eigen::Index unstable_blocks() const {
    Eigen::Index count = 0;
    for (const auto& blk : blocks) count += blk.entropy > 0.0 ? 1 : 0;
    return count;
  }

  MatrixXd block_diagonal() const {
    const Eigen::Index n = P.rows();
    MatrixXd out = MatrixXd::Zero(n, n);
    for (const auto& blk : blocks) {
      out.block(blk.offset, blk.offset, blk.size(), blk.size()) = blk.A;
    }
    return out;
  }

  /// Recovers (A, B) from the decomposition data.
  std::pair<MatrixXd, MatrixXd> assemble() const {
    const Eigen::PartialPivLU<MatrixXd> p_lu(P);
    const MatrixXd a = P * block_diagonal() * p_lu.inverse();
    const MatrixXd b = P * staircase * Q.partialPivLu().inverse();
    return {a, b};
  }
};

/// Builds a decomposition record from user-supplied P, Q and blocks; the
/// staircase and entropies are derived from the plant. No invariant is
/// checked here, see verify_decomposition.
inline CyclicDecomposition make_decomposition(const Plant& p, const MatrixXd& P,
                                              const MatrixXd& Q,
                                              const std::vector<std::pair<MatrixXd, VectorXd>>& blocks) {
  if (P.rows() != p.n() || P.cols() != p.n() || Q.rows() != p.m() || Q.cols() != p.m()) {
    throw Error(Errc::DimensionMismatch, "cyclic", "P must be n x n and Q must be m x m");
  }
  CyclicDecomposition d;
  d.P = P;
  d.Q = Q;
  Eigen::Index offset = 0;
  d.h.resize(static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& [a, b] = blocks[i];
    if (a.rows() != a.cols() || b.size() != a.rows()) {
      throw Error(Errc::DimensionMismatch, "cyclic",
                  "block " + std::to_string(i + 1) + " has inconsistent dimensions");
    }
    CyclicBlock blk{a, b, offset, topological_entropy(a).value};
    offset += a.rows();
    d.h(static_cast<Eigen::Index>(i)) = blk.entropy;
    d.blocks.push_back(std::move(blk));
  }
  if (offset != p.n()) {
    throw Error(Errc::DimensionMismatch, "cyclic", "block sizes do not add up to n");
  }
  d.staircase = P.partialPivLu().solve(p.B() * Q);
  return d;
}

inline Eigen::Index cyclic_index(const MatrixXd& a) {
  const Spectrum spec = eigendecompose(a);
  if (!spec.diagonalizable) {
    throw Error(Errc::NotDiagonalizable, "cyclic", "A is not (numerically) diagonalizable");
  }
  Eigen::Index k = 0;
  for (Eigen::Index g : spec.geometric_multiplicity) k = std::max(k, g);
  return k;
}

struct InvariantCheck {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<InvariantCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const InvariantCheck& c) { return c.passed; });
  }

  const InvariantCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  std::string failures() const {
    std::string out;
    for (const auto& c : checks) {
      if (c.passed) continue;
      if (!out.empty()) out += ", ";
      out += c.name;
    }
    return out;
  }
};

namespace detail {

inline bool spectrum_contains(const VectorXcd& outer, const VectorXcd& inner, double tol) {
  for (Eigen::Index i = 0; i < inner.size(); ++i) {
    bool found = false;
    for (Eigen::Index j = 0; j < outer.size() && !found; ++j) {
      found = std::abs(inner(i) - outer(j)) <= tol;
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace detail

inline VerificationReport verify_decomposition(const Plant& p, const CyclicDecomposition& d) {
  VerificationReport report;
  auto add = [&](std::string name, bool ok, double residual, std::string detail = {}) {
    report.checks.push_back({std::move(name), ok, residual, std::move(detail)});
  };

  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();
  Eigen::Index total = 0;
  bool shapes_ok = d.P.rows() == n && d.P.cols() == n && d.Q.rows() == m && d.Q.cols() == m &&
                   d.h.size() == d.k();
  for (const auto& blk : d.blocks) {
    shapes_ok = shapes_ok && blk.A.rows() == blk.A.cols() && blk.b.size() == blk.A.rows() &&
                blk.offset == total;
    total += blk.A.rows();
  }
  shapes_ok = shapes_ok && total == n && d.k() >= 1;
  add("dimensions", shapes_ok, 0.0,
      shapes_ok ? "" : "block sizes, offsets or transformation shapes are inconsistent");
  if (!shapes_ok) return report;

  const Eigen::Index rank_p = detail::numerical_rank(d.P, 1e-12);
  const Eigen::Index rank_q = detail::numerical_rank(d.Q, 1e-12);
  const bool nonsingular = rank_p == n && rank_q == m;
  add("nonsingular", nonsingular, 0.0, nonsingular ? "" : "P or Q is singular");
  if (!nonsingular) return report;

  const Eigen::PartialPivLU<MatrixXd> p_lu(d.P);
  const MatrixXd a_t = p_lu.solve(p.A() * d.P);
  const MatrixXd b_t = p_lu.solve(p.B() * d.Q);

  const double a_scale = std::max(1.0, p.A().norm());
  const double a_res = (a_t - d.block_diagonal()).norm();
  add("block_diagonal", a_res <= 1e-6 * a_scale, a_res);

  // Block row i may only use inputs i, i+1, ...; its own column is b_i.
  const double b_scale = std::max(1.0, p.B().norm());
  double b_res = 0.0;
  for (Eigen::Index i = 0; i < d.k(); ++i) {
    const auto& blk = d.blocks[static_cast<std::size_t>(i)];
    const auto rows = b_t.middleRows(blk.offset, blk.size());
    const Eigen::Index lower = std::min(i, m);
    if (lower > 0) b_res = std::max(b_res, rows.leftCols(lower).norm());
    if (i < m) {
      b_res = std::max(b_res, (rows.col(i) - blk.b).norm());
    } else {
      b_res = std::max(b_res, blk.b.norm());
    }
  }
  add("staircase", b_res <= 1e-6 * b_scale, b_res);

  // More blocks than inputs is tolerable only when the extra blocks need no
  // control.
  bool inputs_ok = true;
  for (Eigen::Index i = m; i < d.k(); ++i) {
    inputs_ok = inputs_ok && is_hurwitz(d.blocks[static_cast<std::size_t>(i)].A);
  }
  add("input_count", inputs_ok, 0.0,
      inputs_ok ? "" : "blocks beyond the input count must be stable");

  bool stabilizable = true;
  bool cyclic = true;
  std::string which;
  for (std::size_t i = 0; i < d.blocks.size(); ++i) {
    const auto& blk = d.blocks[i];
    if (!is_stabilizable(blk.A, blk.b)) {
      stabilizable = false;
      which += " " + std::to_string(i + 1);
    }
    const Spectrum s = eigendecompose(blk.A);
    for (std::size_t c = 0; c < s.clusters.size(); ++c) {
      if (s.geometric_multiplicity[c] != 1) cyclic = false;
    }
  }
  add("block_stabilizable", stabilizable, 0.0,
      stabilizable ? "" : "unstabilizable blocks:" + which);
  add("cyclic", cyclic, 0.0, cyclic ? "" : "some block has a repeated eigenvector");

  bool nested = true;
  for (std::size_t i = 0; i + 1 < d.blocks.size(); ++i) {
    const MatrixXd& outer = d.blocks[i].A;
    const MatrixXd& inner = d.blocks[i + 1].A;
    nested = nested && detail::spectrum_contains(eigenvalues_sorted(outer),
                                                 eigenvalues_sorted(inner),
                                                 1e-6 * std::max(1.0, outer.norm()));
  }
  add("spectral_nesting", nested, 0.0);

  double h_res = 0.0;
  bool ordered = true;
  for (Eigen::Index i = 0; i < d.k(); ++i) {
    h_res = std::max(h_res, std::abs(d.h(i) - topological_entropy(d.blocks[static_cast<std::size_t>(i)].A).value));
    if (i > 0 && d.h(i) > d.h(i - 1) + 1e-9 * std::max(1.0, d.h(i - 1))) ordered = false;
  }
  add("entropy_order", ordered && h_res <= 1e-8 * std::max(1.0, d.h.cwiseAbs().maxCoeff()),
      h_res);

  const double h_total = topological_entropy(p.A()).value;
  const double sum_res = std::abs(d.h.sum() - h_total);
  add("entropy_sum", sum_res <= 1e-8 * std::max(1.0, h_total), sum_res);
  return report;
}

namespace detail {

// Eigenbasis of one cluster normalized to the identity on a set of pivot
// rows, so that it does not depend on the SVD's choice of basis.
inline MatrixXcd canonical_eigenbasis(const MatrixXd& a, Complex lambda, Eigen::Index g) {
  const MatrixXcd null = eigenspace_basis(a, lambda, g);
  Eigen::ColPivHouseholderQR<MatrixXcd> qr(null.transpose());
  std::vector<Eigen::Index> pivots;
  for (Eigen::Index j = 0; j < g; ++j) pivots.push_back(qr.colsPermutation().indices()(j));
  std::sort(pivots.begin(), pivots.end());
  MatrixXcd square(g, g);
  for (Eigen::Index j = 0; j < g; ++j) square.row(j) = null.row(pivots[static_cast<std::size_t>(j)]);
  return null * square.inverse();
}

struct ClusterBasis {
  Complex lambda;
  bool real = true;
  bool needs_control = false;
  MatrixXcd V;  // n x g
};

struct Echelon {
  MatrixXcd transform;      // G with G * C in row echelon form
  Eigen::Index driven = 0;  // leading rows whose pivot sits on the diagonal
};

// Row echelon form of C by elimination with threshold pivoting; rows whose
// pivot lands on the diagonal are scaled to a unit pivot. Rows are swapped
// only when the natural pivot is small, so an input matrix that is already
// in staircase form gives G = I.
inline Echelon unit_echelon(const MatrixXcd& c, double tol) {
  const Eigen::Index g = c.rows();
  const Eigen::Index m = c.cols();
  MatrixXcd work(g, m + g);
  work << c, MatrixXcd::Identity(g, g);
  Echelon out;
  Eigen::Index row = 0;
  bool diagonal = true;
  for (Eigen::Index col = 0; col < m && row < g; ++col) {
    Eigen::Index best = row;
    double best_abs = 0.0;
    for (Eigen::Index i = row; i < g; ++i) {
      if (std::abs(work(i, col)) > best_abs) {
        best_abs = std::abs(work(i, col));
        best = i;
      }
    }
    if (best_abs <= tol) {
      diagonal = false;
      continue;
    }
    if (std::abs(work(row, col)) < 0.1 * best_abs) work.row(row).swap(work.row(best));
    const Complex pivot = work(row, col);
    for (Eigen::Index i = row + 1; i < g; ++i) {
      const Complex factor = work(i, col) / pivot;
      if (factor != Complex(0.0, 0.0)) work.row(i) -= factor * work.row(row);
      work(i, col) = Complex(0.0, 0.0);
    }
    if (diagonal && col == row) {
      work.row(row) /= pivot;
      ++out.driven;
    }
    ++row;
  }
  out.transform = work.rightCols(g);
  return out;
}

inline MatrixXd random_gaussian(Eigen::Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd q(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) q(i, j) = normal(rng);
  }
  return q;
}

}  // namespace detail

inline constexpr int kMaxDecompositionAttempts = 16;

/// Automatic decomposition for diagonalizable A. Block i collects the i-th
/// eigenvector of every eigenvalue cluster of multiplicity > i, so the spectra
/// are nested and the entropies non-increasing. The input basis is fixed
/// first with Q = I and then with seeded random Q until all invariants hold.
inline CyclicDecomposition cyclic_decompose(const Plant& p, std::uint64_t seed = 0) {
  const MatrixXd& A = p.A();
  const MatrixXd& B = p.B();
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();

  const Spectrum spec = eigendecompose(A);
  if (!spec.diagonalizable) {
    throw Error(Errc::NotDiagonalizable, "cyclic",
                "automatic decomposition requires a diagonalizable A");
  }
  for (const Complex& lambda : spec.cluster_values) {
    if (lambda.real() > -kAxisTolerance && pbh_rank(A, B, lambda) < n) {
      std::ostringstream msg;
      msg << "PBH rank test fails at eigenvalue " << lambda.real()
          << (lambda.imag() >= 0 ? "+" : "") << lambda.imag() << "i";
      throw Error(Errc::Unstabilizable, "cyclic", msg.str());
    }
  }

  const double tol = eigen_tolerance(A);
  std::vector<detail::ClusterBasis> reps;
  for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
    const Complex lambda = spec.cluster_values[c];
    if (lambda.imag() < -tol) continue;  // the conjugate representative covers it
    detail::ClusterBasis rep;
    rep.real = std::abs(lambda.imag()) <= tol;
    rep.lambda = rep.real ? Complex(lambda.real(), 0.0) : lambda;
    rep.needs_control = lambda.real() > -kAxisTolerance;
    rep.V = detail::canonical_eigenbasis(A, rep.lambda, spec.geometric_multiplicity[c]);
    if (rep.real) rep.V = rep.V.real().cast<Complex>();
    reps.push_back(std::move(rep));
  }

  // Modal input matrix of each representative: rows of V^-1 B.
  MatrixXcd v_full(n, n);
  std::vector<Eigen::Index> rep_offset;
  {
    Eigen::Index col = 0;
    for (const auto& rep : reps) {
      rep_offset.push_back(col);
      v_full.middleCols(col, rep.V.cols()) = rep.V;
      col += rep.V.cols();
      if (!rep.real) {
        v_full.middleCols(col, rep.V.cols()) = rep.V.conjugate();
        col += rep.V.cols();
      }
    }
    if (col != n) {
      throw Error(Errc::DecompositionFailed, "cyclic",
                  "eigenvalue clusters are not closed under conjugation");
    }
  }
  const MatrixXcd modal_b = v_full.partialPivLu().solve(B.cast<Complex>());

  Eigen::Index k = 0;
  for (const auto& rep : reps) k = std::max(k, rep.V.cols());

  std::string last_failure;
  for (int attempt = 0; attempt < kMaxDecompositionAttempts; ++attempt) {
    const MatrixXd Q = attempt == 0
                           ? MatrixXd::Identity(m, m)
                           : detail::random_gaussian(m, seed + static_cast<std::uint64_t>(attempt));
    const MatrixXcd qc = Q.cast<Complex>();

    // Rebase each cluster so its modal input rows are in staircase form with
    // unit pivots: mode i of the cluster is driven by input i, not by inputs
    // before it.
    bool ok = true;
    std::vector<MatrixXcd> bases;
    for (std::size_t r = 0; r < reps.size() && ok; ++r) {
      const auto& rep = reps[r];
      const Eigen::Index g = rep.V.cols();
      const MatrixXcd c = modal_b.middleRows(rep_offset[r], g) * qc;
      const detail::Echelon ech = detail::unit_echelon(c, 1e-8 * std::max(1.0, c.norm()));
      if (rep.needs_control && ech.driven < g) {
        ok = false;
        last_failure = "input basis leaves an unstable mode undriven";
      }
      const MatrixXcd& G = ech.transform;
      MatrixXcd v = rep.V * G.inverse();
      if (rep.real) v = v.real().cast<Complex>();
      bases.push_back(std::move(v));
    }
    if (!ok) continue;

    MatrixXd P(n, n);
    std::vector<std::pair<Eigen::Index, Eigen::Index>> block_ranges;
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index start = col;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        if (bases[r].cols() <= i) continue;
        const VectorXcd v = bases[r].col(i);
        if (reps[r].real) {
          P.col(col++) = v.real();
        } else {
          P.col(col++) = 2.0 * v.real();
          P.col(col++) = -2.0 * v.imag();
        }
      }
      block_ranges.emplace_back(start, col - start);
    }

    const Eigen::PartialPivLU<MatrixXd> p_lu(P);
    const MatrixXd a_t = p_lu.solve(A * P);
    const MatrixXd b_t = p_lu.solve(B * Q);

    CyclicDecomposition d;
    d.P = P;
    d.Q = Q;
    d.staircase = b_t;
    d.seed = seed;
    d.attempt = attempt;
    d.h.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto [start, size] = block_ranges[static_cast<std::size_t>(i)];
      CyclicBlock blk;
      blk.offset = start;
      blk.A = a_t.block(start, start, size, size);
      blk.b = i < m ? VectorXd(b_t.block(start, i, size, 1)) : VectorXd::Zero(size);
      blk.entropy = topological_entropy(blk.A).value;
      d.h(i) = blk.entropy;
      d.blocks.push_back(std::move(blk));
    }

    const VerificationReport report = verify_decomposition(p, d);
    if (report.passed()) return d;
    last_failure = "invariant checks failed: " + report.failures();
  }
  throw Error(Errc::DecompositionFailed, "cyclic",
              "no valid decomposition after " + std::to_string(kMaxDecompositionAttempts) +
                  " attempts (" + last_failure + ")");
}

}  // namespace mimostab
