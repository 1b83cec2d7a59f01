// mimostab: stabilization of a linear plant over parallel AWGN or fading
// subchannels. See README.md for the problem-file format and the commands.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mimostab/cli.hpp"

namespace {

int write_document(const std::string& document, const std::optional<std::string>& path) {
  if (!path) {
    std::cout << document;
    return 0;
  }
  std::ofstream out(*path, std::ios::binary);
  out << document;
  if (!out) {
    std::cerr << "error[cli.InvalidInput]: cannot write '" << *path << "'\n";
    return mimostab::io::kExitError;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mimostab;

  CLI::App app{"Coding/control co-design over MIMO subchannels"};
  std::string command_name;
  std::string problem_path;
  std::string format_name;
  std::optional<std::string> out_path;
  io::Overrides overrides;

  app.add_option("command", command_name,
                 "validate | decompose | check | codesign | analyze | simulate")
      ->required()
      ->check(CLI::IsMember({"validate", "decompose", "check", "codesign", "analyze", "simulate"}));
  app.add_option("problem", problem_path, "YAML problem file")->required();
  app.add_option("--format", format_name, "human | machine | table")
      ->check(CLI::IsMember({"human", "machine", "table"}));
  app.add_option("--out", out_path, "write the document to this file");
  app.add_option("--seed", overrides.seed, "seed for randomized decomposition retries");
  app.add_option("--epsilon", overrides.epsilon, "fixed codec scaling in (0, 1]");
  app.add_option("--t-end", overrides.t_end, "simulation horizon");
  app.add_option("--dt", overrides.dt, "simulation step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : io::kExitError;
  }

  const io::Command command = *io::command_from_string(command_name);
  io::Format format = command == io::Command::Simulate ? io::Format::Table : io::Format::Human;
  if (!format_name.empty()) format = *io::format_from_string(format_name);

  try {
    const io::ProblemFile problem = io::load_problem(problem_path);
    const io::CommandResult result = io::run_command(command, problem, format, overrides);
    std::optional<std::string> target = out_path;
    if (!target && command == io::Command::Simulate) target = problem.options.output;
    if (const int status = write_document(result.document, target); status != 0) return status;
    return result.exit_code;
  } catch (const Error& e) {
    std::cerr << "error[" << e.qualified_code() << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
  }
  return io::kExitError;
}
