#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"

namespace mimostab {

/// Continuous-time plant x' = A x + B u. Dimensions and finiteness are
/// checked on construction; stabilizability is reported by validate_plant and
/// enforced by the decomposition.
class Plant {
 public:
  Plant(MatrixXd a, MatrixXd b, std::optional<VectorXd> x0 = std::nullopt)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() < 1 || a_.rows() != a_.cols()) {
      throw Error(Errc::DimensionMismatch, "plantmodel", "A must be a nonempty square matrix");
    }
    if (b_.rows() != a_.rows()) {
      throw Error(Errc::DimensionMismatch, "plantmodel",
                  "B has " + std::to_string(b_.rows()) + " rows, A is " +
                      std::to_string(a_.rows()) + "x" + std::to_string(a_.rows()));
    }
    if (b_.cols() < 1) {
      throw Error(Errc::DimensionMismatch, "plantmodel", "B must have at least one column");
    }
    detail::require_finite(a_, "plantmodel", "A");
    detail::require_finite(b_, "plantmodel", "B");
    x0_ = x0 ? std::move(*x0) : VectorXd::Ones(a_.rows());
    if (x0_.size() != a_.rows()) {
      throw Error(Errc::DimensionMismatch, "plantmodel", "x0 length must equal n");
    }
    detail::require_finite(x0_, "plantmodel", "x0");
  }

  const MatrixXd& A() const { return a_; }
  const MatrixXd& B() const { return b_; }
  const VectorXd& x0() const { return x0_; }
  Eigen::Index n() const { return a_.rows(); }
  Eigen::Index m() const { return b_.cols(); }

 private:
  MatrixXd a_;
  MatrixXd b_;
  VectorXd x0_;
};

enum class ChannelKind { AWGN, Fading };

inline const char* to_string(ChannelKind kind) {
  return kind == ChannelKind::AWGN ? "awgn" : "fading";
}

/// l parallel SISO subchannels, either additive white Gaussian noise channels
/// (power levels P, noise densities N) or fading channels (multiplicative
/// noise with means mu and variances sigma^2).
class ChannelEnsemble {
 public:
  static ChannelEnsemble awgn(VectorXd powers, VectorXd noise_densities) {
    require_same_length(powers, noise_densities, "powers", "noise densities");
    require_positive(powers, "power");
    require_positive(noise_densities, "noise density");
    return ChannelEnsemble(ChannelKind::AWGN, std::move(powers), std::move(noise_densities));
  }

  static ChannelEnsemble fading(VectorXd means, VectorXd variances) {
    require_same_length(means, variances, "means", "variances");
    for (Eigen::Index i = 0; i < means.size(); ++i) {
      if (!std::isfinite(means(i)) || means(i) == 0.0) {
        throw Error(Errc::InvariantViolation, "plantmodel",
                    "fading mean " + std::to_string(i + 1) + " must be finite and nonzero");
      }
    }
    require_positive(variances, "fading variance");
    return ChannelEnsemble(ChannelKind::Fading, std::move(means), std::move(variances));
  }

  ChannelKind kind() const { return kind_; }
  Eigen::Index count() const { return first_.size(); }

  // AWGN parameters.
  const VectorXd& powers() const { return first_; }
  const VectorXd& noise_densities() const { return second_; }
  // Fading parameters.
  const VectorXd& means() const { return first_; }
  const VectorXd& variances() const { return second_; }


 private:
  ChannelEnsemble(ChannelKind kind, VectorXd first, VectorXd second)
      : kind_(kind), first_(std::move(first)), second_(std::move(second)) {}

  static void require_same_length(const VectorXd& a, const VectorXd& b,
                                  const char* what_a, const char* what_b) {
    if (a.size() < 1) {
      throw Error(Errc::InvariantViolation, "plantmodel", "at least one subchannel is required");
    }
    if (a.size() != b.size()) {
      throw Error(Errc::DimensionMismatch, "plantmodel",
                  std::string(what_a) + " and " + what_b + " differ in length");
    }
  }

  static void require_positive(const VectorXd& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i)) || !(v(i) > 0.0)) {
        throw Error(Errc::InvariantViolation, "plantmodel",
                    std::string(what) + " " + std::to_string(i + 1) + " must be positive");
      }
    }
  }

  ChannelKind kind_;
  VectorXd first_;
  VectorXd second_;
};

/// Subchannel capacities: P_i / (2 N_i) for AWGN, mu_i^2 / (2 sigma_i^2) for
/// fading.
inline VectorXd capacities(const ChannelEnsemble& ch) {
  if (ch.kind() == ChannelKind::AWGN) {
    return 0.5 * ch.powers().cwiseQuotient(ch.noise_densities());
  }
  return 0.5 * ch.means().cwiseAbs2().cwiseQuotient(ch.variances());
}

inline double total_capacity(const ChannelEnsemble& ch) { return capacities(ch).sum(); }

struct Entropy {
  double value = 0.0;
  bool axis_warning = false;  // some eigenvalue has |Re| < kAxisTolerance
};

/// Sum of the real parts of the unstable eigenvalues.
inline Entropy topological_entropy(const MatrixXd& a) {
  detail::require_square(a, "plantmodel", "A");
  detail::require_finite(a, "plantmodel", "A");
  Entropy h;
  if (a.size() == 0) return h;
  const VectorXcd ev = eigenvalues_sorted(a);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double re = ev(i).real();
    if (std::abs(re) < kAxisTolerance) {
      h.axis_warning = true;
    } else if (re > 0.0) {
      h.value += re;
    }
  }
  return h;
}

struct PbhCheck {
  Complex eigenvalue;
  Eigen::Index rank = 0;
  bool passed = false;

};

struct ValidationReport {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  bool stabilizable = false;
  bool unstable = false;
  bool axis_eigenvalues = false;
  double entropy = 0.0;
  VectorXcd eigenvalues;
  std::vector<PbhCheck> pbh;  // one entry per eigenvalue cluster with Re >= 0
  std::vector<std::string> messages;

};

inline ValidationReport validate_plant(const Plant& p) {
  ValidationReport report;
  report.n = p.n();
  report.m = p.m();
  try {
    const Spectrum spec = eigendecompose(p.A());
    report.eigenvalues = spec.eigenvalues;
    const Entropy h = topological_entropy(p.A());
    report.entropy = h.value;
    report.axis_eigenvalues = h.axis_warning;
    report.unstable = h.value > 0.0;
    report.stabilizable = true;
    for (const Complex& lambda : spec.cluster_values) {
      if (lambda.real() <= -kAxisTolerance) continue;
      PbhCheck check{lambda, pbh_rank(p.A(), p.B(), lambda), false};
      check.passed = check.rank == p.n();
      report.stabilizable = report.stabilizable && check.passed;
      report.pbh.push_back(check);
    }
    if (report.axis_eigenvalues) {
      report.messages.push_back("A has eigenvalues on the imaginary axis");
    }
    if (!report.unstable) report.messages.push_back("A is already stable");
    if (!report.stabilizable) report.messages.push_back("PBH rank test fails");
  } catch (const Error& e) {
    report.stabilizable = false;
    report.messages.push_back(e.qualified_code() + ": " + e.what());
  }
  return report;
}

}  // namespace mimostab
