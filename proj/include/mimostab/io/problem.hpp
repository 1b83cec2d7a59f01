#pragma once

// Problem files: a YAML mapping with `plant`, `channels` and an optional
// `options` section. Matrices are row-major nested sequences.
//
//   plant:
//     A: [[4, 0], [0, 2]]
//     B: [[1], [1]]
//     x0: [1, 1]            # optional, defaults to all ones
//   channels:
//     kind: awgn            # or fading
//     powers: [9.1, 3.1]    # awgn
//     noise: [1, 1]         # awgn
//     means: [2, 0.6]       # fading
//     variances: [0.35, 0.2]
//   options:
//     seed: 0
//     epsilon: 0.1
//     t_end: 10
//     dt: 0.001
//     output: trajectory.csv

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "mimostab/error.hpp"
#include "mimostab/numerics.hpp"
#include "mimostab/plant.hpp"

namespace mimostab::io {

struct ProblemOptions {
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
  std::optional<double> t_end;
  std::optional<double> dt;
  std::optional<std::string> output;
};

struct ProblemFile {
  Plant plant;
  ChannelEnsemble channels;
  ProblemOptions options;
};

namespace detail {

inline Error parse_error(const YAML::Mark& mark, const std::string& message) {
  if (mark.line >= 0) {
    return Error(Errc::ParseError, "cli", "line " + std::to_string(mark.line + 1) + ": " + message);
  }
  return Error(Errc::ParseError, "cli", message);
}

// Checks a mapping for duplicate and unknown keys and returns its entries by
// name.
inline std::map<std::string, YAML::Node> mapping(const YAML::Node& node, const std::string& where,
                                                 const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw parse_error(node.Mark(), where + " must be a mapping");
  std::map<std::string, YAML::Node> out;
  for (auto it = node.begin(); it != node.end(); ++it) {
    if (!it->first.IsScalar()) throw parse_error(it->first.Mark(), "keys must be scalars");
    const std::string key = it->first.Scalar();
    if (!allowed.count(key)) {
      throw parse_error(it->first.Mark(), "unknown key '" + key + "' in " + where);
    }
    if (out.count(key)) {
      throw parse_error(it->first.Mark(), "duplicate key '" + key + "' in " + where);
    }
    out.emplace(key, it->second);
  }
  return out;
}

inline const YAML::Node& required(const std::map<std::string, YAML::Node>& m,
                                  const std::string& key, const std::string& where,
                                  const YAML::Mark& mark) {
  const auto it = m.find(key);
  if (it == m.end()) throw parse_error(mark, "missing key '" + key + "' in " + where);
  return it->second;
}

inline double number(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw parse_error(node.Mark(), what + " must be a number");
  const std::string& text = node.Scalar();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw parse_error(node.Mark(), what + " must be a number, got '" + text + "'");
  }
  return value;
}

inline VectorXd vector(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) throw parse_error(node.Mark(), what + " must be a sequence of numbers");
  VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(node[i], what + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline MatrixXd matrix(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() == 0) {
    throw parse_error(node.Mark(), what + " must be a nonempty sequence of rows");
  }
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  MatrixXd m;
  for (std::size_t i = 0; i < rows; ++i) {
    const VectorXd row = vector(node[i], what + " row " + std::to_string(i + 1));
    if (i == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw Error(Errc::DimensionMismatch, "cli",
                  "line " + std::to_string(node[i].Mark().line + 1) + ": " + what + " row " +
                      std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(cols));
    }
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline std::string text(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) throw parse_error(node.Mark(), what + " must be a string");
  return node.Scalar();
}

}  // namespace detail

inline ProblemFile parse_problem(const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::Exception& e) {
    throw detail::parse_error(e.mark, e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) {
    throw Error(Errc::ParseError, "cli", "empty problem file");
  }
  const auto top = detail::mapping(root, "problem file", {"plant", "channels", "options"});

  const YAML::Node& plant_node = detail::required(top, "plant", "problem file", root.Mark());
  const auto plant_map = detail::mapping(plant_node, "plant", {"A", "B", "x0"});
  MatrixXd a = detail::matrix(detail::required(plant_map, "A", "plant", plant_node.Mark()), "A");
  MatrixXd b = detail::matrix(detail::required(plant_map, "B", "plant", plant_node.Mark()), "B");
  std::optional<VectorXd> x0;
  if (const auto it = plant_map.find("x0"); it != plant_map.end()) {
    x0 = detail::vector(it->second, "x0");
  }
  Plant plant(std::move(a), std::move(b), std::move(x0));

  const YAML::Node& ch_node = detail::required(top, "channels", "problem file", root.Mark());
  const auto ch_map =
      detail::mapping(ch_node, "channels", {"kind", "powers", "noise", "means", "variances"});
  const YAML::Node& kind_node = detail::required(ch_map, "kind", "channels", ch_node.Mark());
  const std::string kind = detail::text(kind_node, "channels.kind");
  std::optional<ChannelEnsemble> channels;
  auto reject = [&](const char* key) {
    if (const auto it = ch_map.find(key); it != ch_map.end()) {
      throw detail::parse_error(it->second.Mark(),
                                "key '" + std::string(key) + "' does not apply to " + kind +
                                    " channels");
    }
  };
  if (kind == "awgn") {
    reject("means");
    reject("variances");
    channels = ChannelEnsemble::awgn(
        detail::vector(detail::required(ch_map, "powers", "channels", ch_node.Mark()), "powers"),
        detail::vector(detail::required(ch_map, "noise", "channels", ch_node.Mark()), "noise"));
  } else if (kind == "fading") {
    reject("powers");
    reject("noise");
    channels = ChannelEnsemble::fading(
        detail::vector(detail::required(ch_map, "means", "channels", ch_node.Mark()), "means"),
        detail::vector(detail::required(ch_map, "variances", "channels", ch_node.Mark()),
                       "variances"));
  } else {
    throw detail::parse_error(kind_node.Mark(),
                              "channels.kind must be 'awgn' or 'fading', got '" + kind + "'");
  }

  ProblemOptions options;
  if (const auto it = top.find("options"); it != top.end() && !it->second.IsNull()) {
    const auto opt = detail::mapping(it->second, "options",
                                     {"seed", "epsilon", "t_end", "dt", "output"});
    if (const auto s = opt.find("seed"); s != opt.end()) {
      const double seed = detail::number(s->second, "seed");
      if (seed < 0 || seed != std::floor(seed) || seed > 9.007199254740992e15) {
        throw detail::parse_error(s->second.Mark(), "seed must be a nonnegative integer");
      }
      options.seed = static_cast<std::uint64_t>(seed);
    }
    auto positive = [&](const char* key, std::optional<double>& slot) {
      if (const auto o = opt.find(key); o != opt.end()) {
        const double v = detail::number(o->second, key);
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw Error(Errc::InvariantViolation, "cli",
                      "line " + std::to_string(o->second.Mark().line + 1) + ": " + key +
                          " must be positive");
        }
        slot = v;
      }
    };
    positive("epsilon", options.epsilon);
    positive("t_end", options.t_end);
    positive("dt", options.dt);
    if (options.epsilon && *options.epsilon > 1.0) {
      throw Error(Errc::InvariantViolation, "cli", "epsilon must not exceed 1");
    }
    if (const auto o = opt.find("output"); o != opt.end()) {
      options.output = detail::text(o->second, "output");
    }
  }
  return ProblemFile{std::move(plant), std::move(*channels), std::move(options)};
}

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidInput, "cli", "cannot open problem file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_problem(buffer.str());
}

}  // namespace mimostab::io
