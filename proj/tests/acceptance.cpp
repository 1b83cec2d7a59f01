// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mimostab/cli.hpp"
#include "mimostab/mimostab.hpp"
#include "example.hpp"
#include "support.hpp"

using namespace mimostab;
namespace t = mimostab::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

MatrixXd example_gain() {
  MatrixXd f(2, 4);
  f << -40, 36, -10, 0, 0, 0, 0, -2;
  return f;
}

Outcome awgn_reproduction() {
  const auto start = Clock::now();
  const Plant p = t::example_plant();
  const auto ch = t::example_awgn();
  const CodesignOutcome out = codesign(p, ch);
  const auto* res = std::get_if<CodesignResult>(&out);
  if (!res) return {false, "co-design reported the AWGN example infeasible"};
  const double gain_err = (res->design.F - example_gain()).cwiseAbs().maxCoeff();

  // Powers at epsilon = 0.1 with the reference isometry.
  const CoDesign reference = t::design_from_isometry(p, ch, t::reference_awgn_isometry(), 0.1);
  const VectorXd powers = channel_powers_awgn(p, reference, ch.noise_densities());
  const VectorXd expected = Eigen::Vector3d(9.0848, 3.0299, 4.0249);
  const double power_err = (powers - expected).cwiseAbs().maxCoeff();

  // The synthesized design at epsilon = 0.1 must also respect every budget.
  const CodesignOutcome at_tenth = codesign(p, ch, {0, 0.1});
  const auto* res_tenth = std::get_if<CodesignResult>(&at_tenth);
  bool below = res_tenth && res_tenth->report.channel_powers;
  VectorXd own = VectorXd::Zero(3);
  if (below) {
    own = *res_tenth->report.channel_powers;
    below = (own.array() < ch.powers().array()).all() && (powers.array() < ch.powers().array()).all();
  }
  const double elapsed = seconds_since(start);

  const bool pass = gain_err <= 1e-4 && power_err <= 1e-3 && below && elapsed < 1.0;
  return {pass, fmt("max|F - F*| = %.2e (tol 1e-4); powers = (%.4f, %.4f, %.4f), max err %.2e "
                    "(tol 1e-3); synthesized powers at eps=0.1 = (%.4f, %.4f, %.4f) < (9.1, 3.1, "
                    "4.1): %s; runtime %.3f s (limit 1 s)",
                    gain_err, powers(0), powers(1), powers(2), power_err, own(0), own(1), own(2),
                    below ? "yes" : "no", elapsed)};
}

Outcome closed_loop_spectrum() {
  const Plant p = t::example_plant();
  const MatrixXd f = synthesize_gain(cyclic_decompose(p));
  const VectorXcd ev = eigenvalues_sorted(p.A() + p.B() * f);
  const Eigen::Vector4d expected(-1, -1, -2, -4);
  double err = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) err = std::max(err, std::abs(ev(i) - Complex(expected(i), 0)));
  return {err <= 1e-6, fmt("eig(A+BF) = {%.6f, %.6f, %.6f, %.6f}, max err %.2e (tol 1e-6)",
                           ev(0).real(), ev(1).real(), ev(2).real(), ev(3).real(), err)};
}

Outcome fading_reproduction() {
  const auto start = Clock::now();
  const Plant p = t::example_plant();
  const auto ch = t::example_fading();
  const CodesignOutcome out = codesign(p, ch);
  const auto* res = std::get_if<CodesignResult>(&out);
  if (!res) return {false, "co-design reported the fading example infeasible"};
  const CoDesign& cd = res->design;
  const double decode = (cd.R * ch.means().asDiagonal() * cd.T - MatrixXd::Identity(2, 2)).norm();
  const double ms = res->report.ms_norm.value_or(INFINITY);
  const CovarianceTrajectory traj = simulate_fading_covariance(p, cd, ch);
  const double ratio = traj.frobenius.back() / traj.frobenius.front();
  const double elapsed = seconds_since(start);
  const bool pass = decode <= 1e-10 && ms < 1.0 && !traj.diverged() && ratio < 1e-3 && elapsed < 5.0;
  return {pass, fmt("eps = %g; ||RMT - I||_F = %.2e (tol 1e-10); ms norm = %.6f (< 1); "
                    "||X(%.1f)||/||X(0)|| = %.2e (< 1e-3); runtime %.3f s (limit 5 s)",
                    cd.epsilon, decode, ms, traj.t_end, ratio, elapsed)};
}

Outcome feasibility_equivalence() {
  t::Rng rng(20240601);
  int mismatches = 0, unstabilized = 0, feasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Plant p = t::random_diagonalizable_plant(rng, 5);
    const double h = topological_entropy(p.A()).value;
    const int l = t::uniform_int(rng, 1, 4);
    VectorXd c(l);
    for (int i = 0; i < l; ++i) c(i) = t::uniform(rng, 0.05, 1.0);
    c *= t::uniform(rng, 0.5, 2.0) * std::max(h, 0.5) / c.sum();
    const auto ch = t::awgn_from_capacities(c);
    const CyclicDecomposition d = cyclic_decompose(p);
    const auto [cp, hp] = zero_pad(c, demand_vector(d.h));
    const bool expected = check_order(cp, hp, Relation::StrictWeakAbove).holds;
    const CodesignOutcome out = codesign(p, ch);
    const auto* res = std::get_if<CodesignResult>(&out);
    if ((res != nullptr) != expected) ++mismatches;
    if (res) {
      ++feasible;
      if (!analyze(p, res->design, ch).stabilized()) ++unstabilized;
    }
  }
  return {mismatches == 0 && unstabilized == 0,
          fmt("200 plants: %d verdict mismatches, %d feasible, %d feasible designs not stabilized",
              mismatches, feasible, unstabilized)};
}

Outcome oracle_equivalence() {
  t::Rng rng(977);
  int mismatches = 0, construction_failures = 0, positives = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int l = t::uniform_int(rng, 1, 3);
    std::vector<Rational> cr, hr;
    VectorXd c(l), h(l);
    for (int i = 0; i < l; ++i) {
      const int hq = t::uniform_int(rng, 0, 6);
      const int cq = t::uniform_int(rng, 1, 24);
      hr.emplace_back(hq);
      cr.emplace_back(cq, 4);
      h(i) = hq;
      c(i) = cq / 4.0;
    }
    // With integer entropies and quarter capacities this grid contains a
    // vertex of the feasible polytope whenever it is nonempty.
    const int spread = static_cast<int>(h.maxCoeff() - h.minCoeff());
    const bool oracle = brute_force_feasible_gamma(cr, hr, std::max(1, 24 * spread)).has_value();
    const bool order = check_order(c, h, Relation::StrictWeakAbove).holds;
    if (order != oracle) ++mismatches;
    if (!order) continue;
    ++positives;
    try {
      const VectorXd gamma = construct_intermediate(c, h);
      const double delta = strict_tolerance(c, h);
      const bool below = (gamma.array() < c.array() - delta).all();
      const bool majorized = check_order(gamma, h, Relation::Majorize).holds;
      if (!below || !majorized) ++construction_failures;
    } catch (const Error&) {
      ++construction_failures;
    }
  }
  return {mismatches == 0 && construction_failures == 0,
          fmt("500 pairs: %d disagreements with the brute-force oracle; %d positive instances, "
              "%d failed construction postconditions",
              mismatches, positives, construction_failures)};
}

Outcome schur_horn_random() {
  t::Rng rng(4242);
  double worst_orth = 0.0, worst_diag = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int l = t::uniform_int(rng, 1, 6);
    const int m = t::uniform_int(rng, 1, l);
    VectorXd lambda(m);
    for (int i = 0; i < m; ++i) lambda(i) = t::uniform(rng, 0.0, 10.0);
    std::sort(lambda.data(), lambda.data() + m, std::greater<double>());
    VectorXd padded = VectorXd::Zero(l);
    padded.head(m) = lambda;
    const MatrixXd q = t::gaussian(rng, l, l).householderQr().householderQ();
    const VectorXd gamma = (q * padded.asDiagonal() * q.transpose()).diagonal();
    const IsometryResiduals r = isometry_residuals(schur_horn_isometry(lambda, gamma), lambda, gamma);
    worst_orth = std::max(worst_orth, r.orthogonality);
    worst_diag = std::max(worst_diag, r.diagonal);
  }
  return {worst_orth <= 1e-10 && worst_diag <= 1e-8,
          fmt("200 pairs: max ||U'U - I|| = %.2e (tol 1e-10), max diagonal error = %.2e (tol 1e-8)",
              worst_orth, worst_diag)};
}

Outcome schur_horn_reference() {
  const VectorXd lambda = Eigen::Vector2d(7, 1);
  std::ostringstream detail;
  bool pass = true;
  const std::pair<const char*, MatrixXd> cases[] = {{"AWGN", t::reference_awgn_isometry()},
                                                    {"fading", t::reference_fading_isometry()}};
  for (const auto& [name, u] : cases) {
    const VectorXd gamma = (u * lambda.asDiagonal() * u.transpose()).diagonal();
    const IsometryResiduals r = isometry_residuals(u, lambda, gamma);
    pass = pass && r.orthogonality <= 1e-10 && r.diagonal <= 1e-8;
    detail << name << " U: ||U'U - I|| = " << fmt("%.2e", r.orthogonality)
           << " (tol 1e-10), diagonal error = " << fmt("%.2e", r.diagonal) << " (tol 1e-8); ";
  }
  detail << "the printed matrices carry four decimals";
  return {pass, detail.str()};
}

Outcome riccati_optimality() {
  t::Rng rng(31337);
  double worst_gap = 0.0, worst_beat = -INFINITY;
  for (int trial = 0; trial < 50; ++trial) {
    const auto [a, b] = t::random_antistable_pair(rng, 4);
    const double entropy = eigendecompose(a).eigenvalues.real().sum();
    auto half_t2 = [&](const MatrixXd& f) {
      const MatrixXd l = solve_lyapunov(a + b * f, b * b.transpose());
      return 0.5 * (f * l * f.transpose()).trace();
    };
    const MatrixXd x = solve_care_stabilizing(a, b);
    const double optimal = half_t2(-b.transpose() * x);
    worst_gap = std::max(worst_gap, std::abs(optimal - entropy));
    const Eigen::Index n = a.rows();
    for (int k = 0; k < 20; ++k) {
      std::vector<double> roots(static_cast<std::size_t>(n));
      for (auto& r : roots) r = -t::uniform(rng, 0.1, 6.0);
      const MatrixXd f = -t::ackermann(a, b, roots);
      if (!is_hurwitz(a + b * f)) continue;
      worst_beat = std::max(worst_beat, optimal - half_t2(f));
    }
  }
  return {worst_gap <= 1e-6 && worst_beat <= 1e-6,
          fmt("50 pairs: max |T2/2 - H(A)| = %.2e (tol 1e-6); best improvement by another "
              "stabilizing gain = %.2e (tol 1e-6)",
              worst_gap, worst_beat)};
}

Outcome diagonal_scaling_bound() {
  t::Rng rng(8080);
  int violations = 0;
  double worst_equality = 0.0;
  for (int sys = 0; sys < 10; ++sys) {
    MatrixXd a, b, c;
    const int k = t::uniform_int(rng, 1, 4);
    t::random_stable_system(rng, t::uniform_int(rng, 1, 4), k, k, a, b, c);
    const MatrixXd g2 = h2_gramian_entrywise(StateSpace(a, b, c));
    const double ms = ms_norm(StateSpace(a, b, c));
    for (int s = 0; s < 10; ++s) {
      VectorXd d(k);
      for (int i = 0; i < k; ++i) d(i) = std::exp(t::uniform(rng, -2.0, 2.0));
      const MatrixXd scaled =
          d.cwiseInverse().cwiseAbs2().asDiagonal() * g2 * d.cwiseAbs2().asDiagonal();
      const MixedNorms mn = mixed_norms_from_gramian(scaled);
      if (ms > mn.norm_2_1 * (1 + 1e-12) || ms > mn.norm_2_inf * (1 + 1e-12)) ++violations;
    }
    const VectorXd w = perron_vector(g2, true);
    const VectorXd v = perron_vector(g2);
    const MatrixXd by_left = w.asDiagonal() * g2 * w.cwiseInverse().asDiagonal();
    const MatrixXd by_right = v.cwiseInverse().asDiagonal() * g2 * v.asDiagonal();
    worst_equality = std::max({worst_equality, std::abs(mixed_norms_from_gramian(by_left).norm_2_1 - ms),
                               std::abs(mixed_norms_from_gramian(by_right).norm_2_inf - ms)});
  }
  return {violations == 0 && worst_equality <= 1e-6,
          fmt("100 scalings: %d mixed norms below the MS norm; Perron scaling gap %.2e (tol 1e-6)",
              violations, worst_equality)};
}

Outcome corollary_consistency() {
  t::Rng rng(555);
  int single = 0, equal = 0, single_bad = 0, equal_bad = 0, guard = 0;
  while ((single < 100 || equal < 100) && ++guard < 100000) {
    const Plant p = t::random_diagonalizable_plant(rng, 5);
    const double h = topological_entropy(p.A()).value;
    const int blocks = static_cast<int>(cyclic_decompose(p).h.size());
    if (single < 100) {
      const int l = t::uniform_int(rng, 1, 4);
      VectorXd c(l);
      for (int i = 0; i < l; ++i) c(i) = t::uniform(rng, 0.05, 1.0);
      c *= t::uniform(rng, 0.5, 1.5) * std::max(h, 0.5) / c.sum();
      const CorollaryReport r = check_corollaries(p, t::awgn_from_capacities(c));
      if (r.applicable && r.reason == "single unstable cyclic block") {
        ++single;
        if (!r.agree) ++single_bad;
      }
    }
    if (equal < 100) {
      const int l = t::uniform_int(rng, std::max(1, blocks), std::max(1, blocks) + 2);
      const VectorXd c = VectorXd::Constant(l, t::uniform(rng, 0.5, 1.5) * std::max(h, 0.5) / l);
      const CorollaryReport r = check_corollaries(p, t::awgn_from_capacities(c));
      if (r.applicable) {
        ++equal;
        if (!r.agree) ++equal_bad;
      }
    }
  }
  return {single == 100 && equal == 100 && single_bad == 0 && equal_bad == 0,
          fmt("%d single-unstable-block plants: %d disagreements; %d equal-capacity ensembles: "
              "%d disagreements",
              single, single_bad, equal, equal_bad)};
}

Outcome determinism() {
  const std::string dir = MIMOSTAB_PROBLEMS_DIR;
  const io::Command commands[] = {io::Command::Validate, io::Command::Decompose, io::Command::Check,
                                  io::Command::Codesign, io::Command::Analyze, io::Command::Simulate};
  int runs = 0, differing = 0;
  for (const char* file : {"awgn.yaml", "fading.yaml"}) {
    const io::ProblemFile pf = io::load_problem(dir + "/" + file);
    for (const auto cmd : commands) {
      const auto first = io::run_command(cmd, pf, io::Format::Machine);
      const auto second = io::run_command(cmd, io::load_problem(dir + "/" + file), io::Format::Machine);
      ++runs;
      if (first.document != second.document || first.exit_code != second.exit_code) ++differing;
    }
  }
  return {differing == 0, fmt("%d command/file pairs run twice: %d differ", runs, differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1", awgn_reproduction},     {"2", closed_loop_spectrum},  {"3", fading_reproduction},
      {"4", feasibility_equivalence},   {"5", oracle_equivalence},    {"6a", schur_horn_random},
      {"6b", schur_horn_reference}, {"7", riccati_optimality},    {"8", diagonal_scaling_bound},
      {"9", corollary_consistency}, {"10", determinism}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const Error& e) {
      o = {false, "error[" + e.qualified_code() + "]: " + e.what()};
    } catch (const std::exception& e) {
      o = {false, std::string("error[internal]: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
