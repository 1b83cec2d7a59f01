#pragma once

// Command dispatch behind the mimostab executable. Each command produces one
// document and an exit status: 0 for a positive verdict, 1 for a negative
// one. Errors propagate as mimostab::Error and map to status 2.

#include <optional>
#include <string>

#include "mimostab/analysis.hpp"
#include "mimostab/codesign.hpp"
#include "mimostab/cyclic.hpp"
#include "mimostab/io/json.hpp"
#include "mimostab/io/problem.hpp"
#include "mimostab/io/text.hpp"
#include "mimostab/plant.hpp"

namespace mimostab::io {

enum class Command { Validate, Decompose, Check, Codesign, Analyze, Simulate };
enum class Format { Human, Machine, Table };

inline constexpr int kExitPositive = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitError = 2;

inline std::optional<Command> command_from_string(const std::string& s) {
  if (s == "validate") return Command::Validate;
  if (s == "decompose") return Command::Decompose;
  if (s == "check") return Command::Check;
  if (s == "codesign") return Command::Codesign;
  if (s == "analyze") return Command::Analyze;
  if (s == "simulate") return Command::Simulate;
  return std::nullopt;
}

inline std::optional<Format> format_from_string(const std::string& s) {
  if (s == "human") return Format::Human;
  if (s == "machine") return Format::Machine;
  if (s == "table") return Format::Table;
  return std::nullopt;
}

/// Command-line overrides of the problem file's options.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> t_end;
  std::optional<double> dt;
};

struct CommandResult {
  int exit_code = kExitError;
  std::string document;
};

namespace detail {

inline std::string render_json(const Json& j) { return j.dump(2) + "\n"; }

template <typename Doc>
std::string render(const Doc& doc, Format format) {
  if (format == Format::Machine) return render_json(to_json(doc));
  if (format == Format::Table) {
    throw Error(Errc::InvalidInput, "cli", "the table format is only available for simulate");
  }
  return format_human(doc);
}

inline CodesignOptions codesign_options(const ProblemOptions& opts) {
  CodesignOptions o;
  o.seed = opts.seed;
  o.epsilon = opts.epsilon;
  return o;
}

}  // namespace detail

inline ProblemOptions merge_options(ProblemOptions opts, const Overrides& o) {
  if (o.seed) opts.seed = *o.seed;
  if (o.epsilon) opts.epsilon = o.epsilon;
  if (o.t_end) opts.t_end = o.t_end;
  if (o.dt) opts.dt = o.dt;
  if (opts.epsilon && (!(*opts.epsilon > 0.0) || *opts.epsilon > 1.0)) {
    throw Error(Errc::InvalidInput, "cli", "epsilon must lie in (0, 1]");
  }
  return opts;
}

inline CommandResult run_command(Command cmd, const ProblemFile& pf, Format format,
                                 const Overrides& overrides = {}) {
  const ProblemOptions opts = merge_options(pf.options, overrides);
  const Plant& p = pf.plant;
  const ChannelEnsemble& ch = pf.channels;
  CommandResult result;

  switch (cmd) {
    case Command::Validate: {
      const ValidationReport r = validate_plant(p);
      result.document = detail::render(r, format);
      result.exit_code = r.stabilizable && !r.axis_eigenvalues ? kExitPositive : kExitNegative;
      break;
    }
    case Command::Decompose: {
      DecompositionDocument doc;
      doc.decomposition = cyclic_decompose(p, opts.seed);
      doc.verification = verify_decomposition(p, doc.decomposition);
      result.document = detail::render(doc, format);
      result.exit_code = doc.verification.passed() ? kExitPositive : kExitNegative;
      break;
    }
    case Command::Check: {
      CheckDocument doc;
      doc.kind = ch.kind();
      doc.feasibility = check_feasibility(cyclic_decompose(p, opts.seed), ch);
      doc.corollary = check_corollaries(p, ch, opts.seed);
      result.document = detail::render(doc, format);
      result.exit_code = doc.feasibility.feasible() ? kExitPositive : kExitNegative;
      break;
    }
    case Command::Codesign: {
      const CodesignOutcome outcome = codesign(p, ch, detail::codesign_options(opts));
      result.document = detail::render(outcome, format);
      const auto* r = std::get_if<CodesignResult>(&outcome);
      result.exit_code = r && r->report.stabilized() ? kExitPositive : kExitNegative;
      break;
    }
    case Command::Analyze: {
      const CodesignOutcome outcome = codesign(p, ch, detail::codesign_options(opts));
      AnalysisDocument doc;
      doc.kind = ch.kind();
      if (const auto* r = std::get_if<CodesignResult>(&outcome)) {
        doc.feasible = true;
        doc.epsilon = r->design.epsilon;
        doc.report = analyze(p, r->design, ch);
      }
      result.document = detail::render(doc, format);
      result.exit_code = doc.positive() ? kExitPositive : kExitNegative;
      break;
    }
    case Command::Simulate: {
      const CodesignOutcome outcome = codesign(p, ch, detail::codesign_options(opts));
      const auto* r = std::get_if<CodesignResult>(&outcome);
      if (!r) {
        // Nothing to simulate; report the failed feasibility test instead.
        result.document = detail::render(outcome, format == Format::Machine ? format : Format::Human);
        result.exit_code = kExitNegative;
        break;
      }
      const CovarianceTrajectory traj = simulate_covariance(p, r->design, ch, opts.t_end, opts.dt);
      if (format == Format::Table) {
        result.document = format_table(traj);
      } else if (format == Format::Machine) {
        result.document = detail::render_json(to_json(traj));
      } else {
        result.document = format_human(traj);
      }
      result.exit_code = traj.diverged() ? kExitNegative : kExitPositive;
      break;
    }
  }
  return result;
}

}  // namespace mimostab::io
