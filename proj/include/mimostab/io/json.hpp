#pragma once

// Machine-readable documents. Every document is a JSON object whose first
// field is a versioned schema id; matrices are row-major nested arrays and
// complex numbers are [re, im] pairs. Each writer has a matching reader so
// documents round-trip without loss.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimostab/analysis.hpp"
#include "mimostab/codesign.hpp"
#include "mimostab/cyclic.hpp"
#include "mimostab/error.hpp"
#include "mimostab/majorize.hpp"
#include "mimostab/plant.hpp"

namespace mimostab::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kValidationSchema = "mimostab.validation/1";
inline constexpr const char* kDecompositionSchema = "mimostab.decomposition/1";
inline constexpr const char* kCheckSchema = "mimostab.check/1";
inline constexpr const char* kCodesignSchema = "mimostab.codesign/1";
inline constexpr const char* kAnalysisSchema = "mimostab.analysis/1";
inline constexpr const char* kTrajectorySchema = "mimostab.trajectory/1";

// ---------------------------------------------------------------------------
// Eigen values

inline Json to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(VectorXd(m.row(i).transpose())));
  return out;
}

inline Json to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const VectorXcd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v(i)));
  return out;
}

namespace detail {

[[noreturn]] inline void bad_document(const std::string& what) {
  throw Error(Errc::ParseError, "cli", "malformed document: " + what);
}

inline double as_double(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) bad_document("expected a number");
  return j.get<double>();
}

}  // namespace detail

inline VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) detail::bad_document("expected an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = detail::as_double(j[i]);
  return v;
}

inline MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) detail::bad_document("expected a matrix");
  if (j.empty()) return MatrixXd(0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const VectorXd row = vector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != cols) detail::bad_document("ragged matrix");
    m.row(i) = row.transpose();
  }
  return m;
}

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) detail::bad_document("expected [re, im]");
  return {detail::as_double(j[0]), detail::as_double(j[1])};
}

inline VectorXcd cvector_from_json(const Json& j) {
  if (!j.is_array()) detail::bad_document("expected an array of complex numbers");
  VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline void expect_schema(const Json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != schema) {
    detail::bad_document(std::string("expected schema ") + schema);
  }
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) detail::bad_document(std::string("missing field ") + key);
  return j[key];
}

// ---------------------------------------------------------------------------
// Validation

inline Json to_json(const ValidationReport& r) {
  Json pbh = Json::array();
  for (const auto& c : r.pbh) {
    pbh.push_back(Json{{"eigenvalue", to_json(c.eigenvalue)}, {"rank", c.rank}, {"passed", c.passed}});
  }
  return Json{{"schema", kValidationSchema},
              {"n", r.n},
              {"m", r.m},
              {"stabilizable", r.stabilizable},
              {"unstable", r.unstable},
              {"axis_eigenvalues", r.axis_eigenvalues},
              {"entropy", r.entropy},
              {"eigenvalues", to_json(r.eigenvalues)},
              {"pbh", pbh},
              {"messages", r.messages}};
}

inline ValidationReport validation_from_json(const Json& j) {
  expect_schema(j, kValidationSchema);
  ValidationReport r;
  r.n = field(j, "n").get<Eigen::Index>();
  r.m = field(j, "m").get<Eigen::Index>();
  r.stabilizable = field(j, "stabilizable").get<bool>();
  r.unstable = field(j, "unstable").get<bool>();
  r.axis_eigenvalues = field(j, "axis_eigenvalues").get<bool>();
  r.entropy = detail::as_double(field(j, "entropy"));
  r.eigenvalues = cvector_from_json(field(j, "eigenvalues"));
  for (const auto& c : field(j, "pbh")) {
    r.pbh.push_back(PbhCheck{complex_from_json(field(c, "eigenvalue")),
                             field(c, "rank").get<Eigen::Index>(), field(c, "passed").get<bool>()});
  }
  r.messages = field(j, "messages").get<std::vector<std::string>>();
  return r;
}

// ---------------------------------------------------------------------------
// Decomposition

struct DecompositionDocument {
  CyclicDecomposition decomposition;
  VerificationReport verification;
};

inline Json decomposition_body(const CyclicDecomposition& d) {
  Json blocks = Json::array();
  for (const auto& blk : d.blocks) {
    blocks.push_back(Json{{"offset", blk.offset},
                          {"A", to_json(blk.A)},
                          {"b", to_json(blk.b)},
                          {"entropy", blk.entropy}});
  }
  return Json{{"k", d.k()},
              {"h", to_json(d.h)},
              {"seed", d.seed},
              {"attempt", d.attempt},
              {"P", to_json(d.P)},
              {"Q", to_json(d.Q)},
              {"staircase", to_json(d.staircase)},
              {"blocks", blocks}};
}

inline CyclicDecomposition decomposition_from_body(const Json& j) {
  CyclicDecomposition d;
  d.h = vector_from_json(field(j, "h"));
  d.seed = field(j, "seed").get<std::uint64_t>();
  d.attempt = field(j, "attempt").get<int>();
  d.P = matrix_from_json(field(j, "P"));
  d.Q = matrix_from_json(field(j, "Q"));
  d.staircase = matrix_from_json(field(j, "staircase"));
  for (const auto& b : field(j, "blocks")) {
    CyclicBlock blk;
    blk.offset = field(b, "offset").get<Eigen::Index>();
    blk.A = matrix_from_json(field(b, "A"));
    blk.b = vector_from_json(field(b, "b"));
    blk.entropy = detail::as_double(field(b, "entropy"));
    d.blocks.push_back(std::move(blk));
  }
  if (field(j, "k").get<Eigen::Index>() != d.k()) detail::bad_document("block count mismatch");
  return d;
}

inline Json to_json(const VerificationReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back(Json{{"name", c.name},
                          {"passed", c.passed},
                          {"residual", c.residual},
                          {"detail", c.detail}});
  }
  return checks;
}

inline VerificationReport verification_from_json(const Json& j) {
  VerificationReport r;
  for (const auto& c : j) {
    r.checks.push_back(InvariantCheck{field(c, "name").get<std::string>(),
                                      field(c, "passed").get<bool>(),
                                      detail::as_double(field(c, "residual")),
                                      field(c, "detail").get<std::string>()});
  }
  return r;
}

inline Json to_json(const DecompositionDocument& doc) {
  Json j{{"schema", kDecompositionSchema}};
  j.update(decomposition_body(doc.decomposition));
  j["passed"] = doc.verification.passed();
  j["verification"] = to_json(doc.verification);
  return j;
}

inline DecompositionDocument decomposition_document_from_json(const Json& j) {
  expect_schema(j, kDecompositionSchema);
  return {decomposition_from_body(j), verification_from_json(field(j, "verification"))};
}

// ---------------------------------------------------------------------------
// Feasibility check

inline Json to_json(const Feasibility& f) {
  const auto violated = f.verdict.violated_prefix();
  return Json{{"relation", to_string(f.verdict.relation)},
              {"holds", f.verdict.holds},
              {"channels", f.channels},
              {"unstable_blocks", f.unstable_blocks},
              {"capacities", to_json(f.capacities)},
              {"demand", to_json(f.demand)},
              {"capacity_prefix", to_json(f.verdict.x_prefix)},
              {"demand_prefix", to_json(f.verdict.y_prefix)},
              {"slack", to_json(f.verdict.slack)},
              {"tolerance", f.verdict.tolerance},
              {"violated_prefix", violated ? Json(*violated) : Json(nullptr)}};
}

inline Relation relation_from_string(const std::string& s) {
  for (Relation r : {Relation::Majorize, Relation::WeakBelow, Relation::WeakAbove,
                     Relation::StrictWeakBelow, Relation::StrictWeakAbove}) {
    if (s == to_string(r)) return r;
  }
  detail::bad_document("unknown relation " + s);
}

inline Feasibility feasibility_from_json(const Json& j) {
  Feasibility f;
  f.verdict.relation = relation_from_string(field(j, "relation").get<std::string>());
  f.verdict.holds = field(j, "holds").get<bool>();
  f.channels = field(j, "channels").get<Eigen::Index>();
  f.unstable_blocks = field(j, "unstable_blocks").get<Eigen::Index>();
  f.capacities = vector_from_json(field(j, "capacities"));
  f.demand = vector_from_json(field(j, "demand"));
  f.verdict.x_prefix = vector_from_json(field(j, "capacity_prefix"));
  f.verdict.y_prefix = vector_from_json(field(j, "demand_prefix"));
  f.verdict.slack = vector_from_json(field(j, "slack"));
  f.verdict.tolerance = detail::as_double(field(j, "tolerance"));
  return f;
}

inline Json to_json(const CorollaryReport& r) {
  return Json{{"applicable", r.applicable},
              {"reason", r.reason},
              {"total_capacity", r.total_capacity},
              {"entropy", r.entropy},
              {"simplified", r.simplified},
              {"full", r.full},
              {"agree", r.agree}};
}

inline CorollaryReport corollary_from_json(const Json& j) {
  CorollaryReport r;
  r.applicable = field(j, "applicable").get<bool>();
  r.reason = field(j, "reason").get<std::string>();
  r.total_capacity = detail::as_double(field(j, "total_capacity"));
  r.entropy = detail::as_double(field(j, "entropy"));
  r.simplified = field(j, "simplified").get<bool>();
  r.full = field(j, "full").get<bool>();
  r.agree = field(j, "agree").get<bool>();
  return r;
}

struct CheckDocument {
  ChannelKind kind = ChannelKind::AWGN;
  Feasibility feasibility;
  CorollaryReport corollary;
};

inline ChannelKind kind_from_string(const std::string& s) {
  if (s == "awgn") return ChannelKind::AWGN;
  if (s == "fading") return ChannelKind::Fading;
  detail::bad_document("unknown channel kind " + s);
}

inline Json to_json(const CheckDocument& doc) {
  Json j{{"schema", kCheckSchema}, {"kind", to_string(doc.kind)}};
  j.update(to_json(doc.feasibility));
  j["corollary"] = to_json(doc.corollary);
  return j;
}

inline CheckDocument check_document_from_json(const Json& j) {
  expect_schema(j, kCheckSchema);
  return {kind_from_string(field(j, "kind").get<std::string>()), feasibility_from_json(j),
          corollary_from_json(field(j, "corollary"))};
}

// ---------------------------------------------------------------------------
// Analysis

inline Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::Stabilized, Verdict::Unstable, Verdict::PowerViolation,
                    Verdict::MSNormViolation}) {
    if (s == to_string(v)) return v;
  }
  detail::bad_document("unknown verdict " + s);
}

inline Json analysis_body(const AnalysisReport& r) {
  return Json{{"kind", to_string(r.kind)},
              {"verdict", to_string(r.verdict)},
              {"closed_loop_spectrum", to_json(r.closed_loop_spectrum)},
              {"channel_powers", r.channel_powers ? to_json(*r.channel_powers) : Json(nullptr)},
              {"ms_norm", r.ms_norm ? Json(*r.ms_norm) : Json(nullptr)},
              {"margins", to_json(r.margins)}};
}

inline AnalysisReport analysis_from_body(const Json& j) {
  AnalysisReport r;
  r.kind = kind_from_string(field(j, "kind").get<std::string>());
  r.verdict = verdict_from_string(field(j, "verdict").get<std::string>());
  r.closed_loop_spectrum = cvector_from_json(field(j, "closed_loop_spectrum"));
  if (!field(j, "channel_powers").is_null()) r.channel_powers = vector_from_json(j["channel_powers"]);
  if (!field(j, "ms_norm").is_null()) r.ms_norm = detail::as_double(j["ms_norm"]);
  r.margins = vector_from_json(field(j, "margins"));
  return r;
}

/// Analysis of the synthesized design; `report` is empty when the problem is
/// infeasible and no design exists.
struct AnalysisDocument {
  ChannelKind kind = ChannelKind::AWGN;
  bool feasible = false;
  std::optional<double> epsilon;
  std::optional<AnalysisReport> report;

  bool positive() const { return report && report->stabilized(); }
};

inline Json to_json(const AnalysisDocument& doc) {
  Json j{{"schema", kAnalysisSchema},
         {"kind", to_string(doc.kind)},
         {"feasible", doc.feasible},
         {"epsilon", doc.epsilon ? Json(*doc.epsilon) : Json(nullptr)}};
  if (doc.report) {
    j["report"] = analysis_body(*doc.report);
  } else {
    j["report"] = nullptr;
  }
  return j;
}

inline AnalysisDocument analysis_document_from_json(const Json& j) {
  expect_schema(j, kAnalysisSchema);
  AnalysisDocument doc;
  doc.kind = kind_from_string(field(j, "kind").get<std::string>());
  doc.feasible = field(j, "feasible").get<bool>();
  if (!field(j, "epsilon").is_null()) doc.epsilon = detail::as_double(j["epsilon"]);
  if (!field(j, "report").is_null()) doc.report = analysis_from_body(j["report"]);
  return doc;
}

// ---------------------------------------------------------------------------
// Co-design

inline Json to_json(const CoDesign& cd) {
  return Json{{"kind", to_string(cd.kind)},
              {"epsilon", cd.epsilon},
              {"F", to_json(cd.F)},
              {"T", to_json(cd.T)},
              {"R", to_json(cd.R)},
              {"gamma", to_json(cd.gamma)},
              {"U", to_json(cd.U)},
              {"notes", cd.notes}};
}

inline CoDesign codesign_design_from_json(const Json& j) {
  CoDesign cd;
  cd.kind = kind_from_string(field(j, "kind").get<std::string>());
  cd.epsilon = detail::as_double(field(j, "epsilon"));
  cd.F = matrix_from_json(field(j, "F"));
  cd.T = matrix_from_json(field(j, "T"));
  cd.R = matrix_from_json(field(j, "R"));
  cd.gamma = vector_from_json(field(j, "gamma"));
  cd.U = matrix_from_json(field(j, "U"));
  cd.notes = field(j, "notes").get<std::vector<std::string>>();
  return cd;
}

inline Json to_json(const CodesignOutcome& outcome) {
  Json j{{"schema", kCodesignSchema}};
  if (const auto* r = std::get_if<CodesignResult>(&outcome)) {
    j["feasible"] = true;
    j["feasibility"] = to_json(r->feasibility);
    j["decomposition"] = decomposition_body(r->decomposition);
    j["design"] = to_json(r->design);
    j["analysis"] = analysis_body(r->report);
  } else {
    const auto& inf = std::get<Infeasible>(outcome);
    j["feasible"] = false;
    j["feasibility"] = to_json(inf.feasibility);
    j["decomposition"] = decomposition_body(inf.decomposition);
    j["violated_prefix"] = inf.violated_prefix;
  }
  return j;
}

inline CodesignOutcome codesign_outcome_from_json(const Json& j) {
  expect_schema(j, kCodesignSchema);
  if (field(j, "feasible").get<bool>()) {
    return CodesignResult{decomposition_from_body(field(j, "decomposition")),
                          feasibility_from_json(field(j, "feasibility")),
                          codesign_design_from_json(field(j, "design")),
                          analysis_from_body(field(j, "analysis"))};
  }
  return Infeasible{decomposition_from_body(field(j, "decomposition")),
                    feasibility_from_json(field(j, "feasibility")),
                    field(j, "violated_prefix").get<Eigen::Index>()};
}

// ---------------------------------------------------------------------------
// Trajectories

inline Json to_json(const CovarianceTrajectory& t) {
  Json states = Json::array();
  for (const auto& x : t.states) states.push_back(to_json(x));
  return Json{{"schema", kTrajectorySchema},
              {"t_end", t.t_end},
              {"dt", t.dt},
              {"diverged", t.diverged()},
              {"divergence_time", t.divergence_time ? Json(*t.divergence_time) : Json(nullptr)},
              {"times", t.times},
              {"frobenius", t.frobenius},
              {"states", states}};
}

inline CovarianceTrajectory trajectory_from_json(const Json& j) {
  expect_schema(j, kTrajectorySchema);
  CovarianceTrajectory t;
  t.t_end = detail::as_double(field(j, "t_end"));
  t.dt = detail::as_double(field(j, "dt"));
  if (!field(j, "divergence_time").is_null()) t.divergence_time = detail::as_double(j["divergence_time"]);
  t.times = field(j, "times").get<std::vector<double>>();
  t.frobenius = field(j, "frobenius").get<std::vector<double>>();
  for (const auto& x : field(j, "states")) t.states.push_back(matrix_from_json(x));
  return t;
}

inline Json parse_document(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::ParseError, "cli", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace mimostab::io
