#pragma once

// Human-readable reports and comma-separated trajectory tables.

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mimostab/io/json.hpp"

namespace mimostab::io {

namespace detail {

inline std::string num(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

inline std::string num(const Complex& z) {
  if (z.imag() == 0.0) return num(z.real());
  std::string s = num(z.real());
  s += z.imag() < 0 ? " - " : " + ";
  s += num(std::abs(z.imag())) + "i";
  return s;
}

inline std::string row(const VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + ")";
}

inline std::string row(const VectorXcd& v) {
  std::string s = "{";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + "}";
}

// Right-aligned matrix block, each line indented.
inline std::string block(const MatrixXd& m, const std::string& indent = "    ") {
  std::vector<std::string> cells;
  std::size_t width = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      cells.push_back(num(m(i, j)));
      width = std::max(width, cells.back().size());
    }
  }
  std::ostringstream out;
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << indent << "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? "  " : "") << std::setw(static_cast<int>(width)) << cells[k++];
    }
    out << "]\n";
  }
  return out.str();
}

inline std::string label(const std::string& key) {
  std::ostringstream out;
  out << "  " << std::left << std::setw(22) << key;
  return out.str();
}

inline const char* yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace detail

inline std::string format_human(const ValidationReport& r) {
  using detail::label;
  std::ostringstream out;
  out << "Plant validation\n";
  out << label("dimensions") << "n = " << r.n << ", m = " << r.m << "\n";
  out << label("eigenvalues") << detail::row(r.eigenvalues) << "\n";
  out << label("topological entropy") << detail::num(r.entropy) << "\n";
  out << label("unstable") << detail::yes_no(r.unstable) << "\n";
  out << label("axis eigenvalues") << detail::yes_no(r.axis_eigenvalues) << "\n";
  out << label("stabilizable") << detail::yes_no(r.stabilizable) << "\n";
  for (const auto& c : r.pbh) {
    out << label("  PBH at " + detail::num(c.eigenvalue)) << "rank " << c.rank
        << (c.passed ? "  ok" : "  FAIL") << "\n";
  }
  for (const auto& m : r.messages) out << "  note: " << m << "\n";
  return out.str();
}

inline std::string format_human(const DecompositionDocument& doc) {
  using detail::label;
  const auto& d = doc.decomposition;
  std::ostringstream out;
  out << "Cyclic decomposition\n";
  out << label("cyclic index k") << d.k() << "\n";
  out << label("entropies h") << detail::row(d.h) << "\n";
  out << label("seed / attempt") << d.seed << " / " << d.attempt << "\n";
  out << "  P =\n" << detail::block(d.P);
  out << "  Q =\n" << detail::block(d.Q);
  for (std::size_t i = 0; i < d.blocks.size(); ++i) {
    const auto& blk = d.blocks[i];
    out << "  block " << i + 1 << " (size " << blk.size() << ", H = " << detail::num(blk.entropy)
        << ")\n";
    out << "    A =\n" << detail::block(blk.A, "      ");
    out << "    b = " << detail::row(blk.b) << "\n";
  }
  out << "  invariants\n";
  for (const auto& c : doc.verification.checks) {
    out << "    " << std::left << std::setw(20) << c.name << (c.passed ? "pass" : "FAIL")
        << "  residual " << detail::num(c.residual, 3);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
  }
  return out.str();
}

inline std::string format_prefix_table(const Feasibility& f) {
  std::ostringstream out;
  out << "    " << std::right << std::setw(3) << "j" << std::setw(14) << "capacity" << std::setw(14)
      << "demand" << std::setw(14) << "slack" << "\n";
  for (Eigen::Index j = 0; j < f.verdict.slack.size(); ++j) {
    const bool ok = f.verdict.slack(j) > f.verdict.tolerance;
    out << "    " << std::setw(3) << j + 1 << std::setw(14) << detail::num(f.verdict.x_prefix(j))
        << std::setw(14) << detail::num(f.verdict.y_prefix(j)) << std::setw(14)
        << detail::num(f.verdict.slack(j)) << (ok ? "  >" : "  VIOLATED") << "\n";
  }
  return out.str();
}

inline std::string format_human(const CheckDocument& doc) {
  using detail::label;
  const auto& f = doc.feasibility;
  std::ostringstream out;
  out << "Majorization check (" << to_string(doc.kind) << " subchannels)\n";
  out << label("capacities") << detail::row(f.capacities) << "\n";
  out << label("entropy demand") << detail::row(f.demand) << "\n";
  out << label("total capacity") << detail::num(doc.corollary.total_capacity) << "\n";
  out << label("H(A)") << detail::num(doc.corollary.entropy) << "\n";
  out << "  ascending prefix sums\n" << format_prefix_table(f);
  out << label("verdict") << (f.feasible() ? "feasible" : "infeasible") << "\n";
  const auto& c = doc.corollary;
  if (c.applicable) {
    out << label("total-capacity test") << (c.simplified ? "feasible" : "infeasible") << " ("
        << c.reason << "; " << (c.agree ? "agrees" : "DISAGREES") << ")\n";
  } else {
    out << label("total-capacity test") << "not applicable (" << c.reason << ")\n";
  }
  return out.str();
}

inline std::string format_human_analysis(const AnalysisReport& r) {
  using detail::label;
  std::ostringstream out;
  out << label("verdict") << to_string(r.verdict) << "\n";
  out << label("closed-loop spectrum") << detail::row(r.closed_loop_spectrum) << "\n";
  if (r.channel_powers) {
    out << label("channel powers") << detail::row(*r.channel_powers) << "\n";
  }
  if (r.ms_norm) out << label("MS norm") << detail::num(*r.ms_norm, 8) << "\n";
  if (r.margins.size() > 0) out << label("margins") << detail::row(r.margins) << "\n";
  return out.str();
}

inline std::string format_human(const AnalysisDocument& doc) {
  std::ostringstream out;
  out << "Closed-loop analysis (" << to_string(doc.kind) << " subchannels)\n";
  if (!doc.report) {
    out << detail::label("verdict") << "infeasible, no design to analyze\n";
    return out.str();
  }
  if (doc.epsilon) out << detail::label("epsilon") << detail::num(*doc.epsilon) << "\n";
  out << format_human_analysis(*doc.report);
  return out.str();
}

inline std::string format_human(const CodesignOutcome& outcome) {
  using detail::label;
  std::ostringstream out;
  if (const auto* inf = std::get_if<Infeasible>(&outcome)) {
    out << "Co-design: infeasible\n";
    out << label("capacities") << detail::row(inf->feasibility.capacities) << "\n";
    out << label("entropy demand") << detail::row(inf->feasibility.demand) << "\n";
    out << label("violated prefix") << inf->violated_prefix + 1 << "\n";
    out << "  ascending prefix sums\n" << format_prefix_table(inf->feasibility);
    return out.str();
  }
  const auto& r = std::get<CodesignResult>(outcome);
  const auto& cd = r.design;
  out << "Co-design: feasible (" << to_string(cd.kind) << " subchannels)\n";
  out << label("epsilon") << detail::num(cd.epsilon) << "\n";
  out << label("demand gamma") << detail::row(cd.gamma) << "\n";
  out << "  F =\n" << detail::block(cd.F);
  out << "  T =\n" << detail::block(cd.T);
  out << "  R =\n" << detail::block(cd.R);
  out << "  U =\n" << detail::block(cd.U);
  for (const auto& note : cd.notes) out << "  note: " << note << "\n";
  out << format_human_analysis(r.report);
  return out.str();
}

inline std::string format_human(const CovarianceTrajectory& t) {
  using detail::label;
  std::ostringstream out;
  out << "Second-moment simulation\n";
  out << label("t_end / dt") << detail::num(t.t_end) << " / " << detail::num(t.dt) << "\n";
  out << label("samples") << t.size() << "\n";
  if (!t.frobenius.empty()) {
    out << label("||X(0)||_F") << detail::num(t.frobenius.front()) << "\n";
    out << label("||X(end)||_F") << detail::num(t.frobenius.back()) << "\n";
  }
  out << label("diverged") << detail::yes_no(t.diverged());
  if (t.divergence_time) out << " (t = " << detail::num(*t.divergence_time) << ")";
  out << "\n";
  return out.str();
}

/// Comma-separated rows "t,x11,x12,...,xnn,frobenius_norm" with a header
/// row; numbers carry 17 significant digits.
inline std::string format_table(const CovarianceTrajectory& t) {
  std::ostringstream out;
  const Eigen::Index n = t.states.empty() ? 0 : t.states.front().rows();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out << ",x" << i + 1 << j + 1;
  }
  out << ",frobenius_norm\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < t.size(); ++k) {
    put(t.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out << ',';
        put(t.states[k](i, j));
      }
    }
    out << ',';
    put(t.frobenius[k]);
    out << '\n';
  }
  return out.str();
}

}  // namespace mimostab::io
