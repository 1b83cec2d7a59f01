#pragma once

// End-to-end feasibility check and synthesis: decomposition, majorization
// test, demand shaping, gain, codec and the epsilon search.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <variant>

#include "mimostab/analysis.hpp"
#include "mimostab/cyclic.hpp"
#include "mimostab/design.hpp"
#include "mimostab/majorize.hpp"
#include "mimostab/plant.hpp"

namespace mimostab {

/// The majorization test between capacities and the entropy demand, both
/// zero-padded to a common length.
struct Feasibility {
  VectorXd capacities;  // padded
  VectorXd demand;      // padded positive entropies
  Eigen::Index channels = 0;
  Eigen::Index unstable_blocks = 0;
  OrderVerdict verdict;

  bool feasible() const { return verdict.holds; }
};

inline Feasibility check_feasibility(const CyclicDecomposition& d, const ChannelEnsemble& ch) {
  Feasibility f;
  const VectorXd demand = demand_vector(d.h);
  f.channels = ch.count();
  f.unstable_blocks = demand.size();
  std::tie(f.capacities, f.demand) = zero_pad(capacities(ch), demand);
  f.verdict = check_order(f.capacities, f.demand, Relation::StrictWeakAbove);
  return f;
}

struct CodesignOptions {
  std::uint64_t seed = 0;
  std::optional<double> epsilon;  // fixed epsilon instead of the search
  int max_halvings = 60;
};

struct CodesignResult {
  CyclicDecomposition decomposition;
  Feasibility feasibility;
  CoDesign design;
  AnalysisReport report;
};

struct Infeasible {
  CyclicDecomposition decomposition;
  Feasibility feasibility;
  Eigen::Index violated_prefix = 0;  // zero-based index into the ascending prefix sums
};

using CodesignOutcome = std::variant<CodesignResult, Infeasible>;

/// Builds the design for one epsilon.
inline CoDesign assemble_design(const Plant& p, const ChannelEnsemble& ch,
                                const CyclicDecomposition& d, const MatrixXd& f,
                                const MatrixXd& u, const VectorXd& gamma, double epsilon) {
  CoDesign cd;
  cd.kind = ch.kind();
  cd.F = f;
  cd.U = u;
  cd.gamma = gamma;
  cd.epsilon = epsilon;
  const auto [t_dec, r_dec] = synthesize_codec(ch, u, epsilon, p.m());
  std::tie(cd.T, cd.R) = codec_to_plant(d.Q, t_dec, r_dec);
  if (u.cols() < p.m()) {
    cd.notes.push_back("only " + std::to_string(u.cols()) + " of " + std::to_string(p.m()) +
                       " inputs are routed through the channels; the rest carry no signal");
  }
  return cd;
}

inline CodesignOutcome codesign(const Plant& p, const ChannelEnsemble& ch,
                                const CodesignOptions& opts = {}) {
  CyclicDecomposition d = cyclic_decompose(p, opts.seed);
  Feasibility feas = check_feasibility(d, ch);
  if (!feas.feasible()) {
    const Eigen::Index prefix = *feas.verdict.violated_prefix();
    return Infeasible{std::move(d), std::move(feas), prefix};
  }

  const VectorXd gamma = construct_intermediate(feas.capacities, feas.demand);
  const Eigen::Index l = ch.count();
  const Eigen::Index mc = std::min(p.m(), l);
  const VectorXd lambda = feas.demand.head(mc);
  const MatrixXd u = schur_horn_isometry(lambda, gamma);
  const MatrixXd f = synthesize_gain(d);

  if (opts.epsilon) {
    CoDesign cd = assemble_design(p, ch, d, f, u, gamma, *opts.epsilon);
    AnalysisReport report = analyze(p, cd, ch);
    return CodesignResult{std::move(d), std::move(feas), std::move(cd), std::move(report)};
  }
  double epsilon = 1.0;
  for (int i = 0; i <= opts.max_halvings; ++i, epsilon *= 0.5) {
    CoDesign cd = assemble_design(p, ch, d, f, u, gamma, epsilon);
    AnalysisReport report = analyze(p, cd, ch);
    if (report.stabilized()) {
      return CodesignResult{std::move(d), std::move(feas), std::move(cd), std::move(report)};
    }
  }
  throw Error(Errc::EpsilonExhausted, "codesign",
              "no epsilon down to 2^-" + std::to_string(opts.max_halvings) +
                  " stabilizes the loop");
}

struct CorollaryReport {
  bool applicable = false;
  std::string reason;        // which simplification applies, or why none does
  double total_capacity = 0.0;
  double entropy = 0.0;
  bool simplified = false;   // total capacity > H(A)
  bool full = false;         // the majorization test
  bool agree = false;
};

/// With at most one unstable cyclic block, or with equal capacities and at
/// least as many subchannels as unstable blocks, the majorization test
/// reduces to a comparison of totals.
inline CorollaryReport check_corollaries(const Plant& p, const ChannelEnsemble& ch,
                                         std::uint64_t seed = 0) {
  CorollaryReport r;
  const CyclicDecomposition d = cyclic_decompose(p, seed);
  const Feasibility feas = check_feasibility(d, ch);
  const VectorXd c = capacities(ch);
  r.total_capacity = c.sum();
  r.entropy = d.h.sum();
  r.full = feas.feasible();
  r.simplified = r.total_capacity - r.entropy > feas.verdict.tolerance;
  r.agree = r.full == r.simplified;

  const bool equal = (c.array() - c(0)).abs().maxCoeff() <= 1e-12 * std::max(1.0, c.maxCoeff());
  if (feas.unstable_blocks <= 1) {
    r.applicable = true;
    r.reason = "single unstable cyclic block";
  } else if (equal && feas.channels >= feas.unstable_blocks) {
    r.applicable = true;
    r.reason = "equal subchannel capacities";
  } else if (equal) {
    r.reason = "fewer subchannels than unstable cyclic blocks";
  } else {
    r.reason = "several unstable cyclic blocks with unequal capacities";
  }
  return r;
}

}  // namespace mimostab
