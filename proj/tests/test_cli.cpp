#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mimostab/io/json.hpp"

namespace {

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "mimostab_cli_test";
  fs::create_directories(dir);
  return dir;
}

/// Runs the command-line tool with `args`, capturing stdout and stderr.
Run run(const std::string& args) {
  const fs::path err_file = scratch_dir() / "stderr.txt";
  const std::string cmd =
      std::string("\"") + MIMOSTAB_CLI_PATH + "\" " + args + " 2>\"" + err_file.string() + "\"";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_file);
  return r;
}

std::string problem(const std::string& name) {
  return std::string("\"") + MIMOSTAB_PROBLEMS_DIR + "/" + name + "\"";
}

}  // namespace

TEST_CASE("cli exit codes follow the verdict", "[cli]") {
  CHECK(run("check " + problem("awgn.yaml")).status == 0);
  CHECK(run("check " + problem("fading.yaml")).status == 0);
  CHECK(run("check " + problem("infeasible.yaml")).status == 1);
  CHECK(run("validate " + problem("awgn.yaml")).status == 0);
  CHECK(run("codesign " + problem("infeasible.yaml")).status == 1);
}

TEST_CASE("cli analyze on both example problems", "[cli]") {
  const Run awgn = run("analyze " + problem("awgn.yaml"));
  CHECK(awgn.status == 0);
  CHECK(!awgn.out.empty());
  const Run fading = run("analyze --format machine " + problem("fading.yaml"));
  CHECK(fading.status == 0);
  const auto doc = mimostab::io::analysis_document_from_json(mimostab::io::parse_document(fading.out));
  CHECK(doc.positive());
  REQUIRE(doc.report);
  REQUIRE(doc.report->ms_norm);
  CHECK(*doc.report->ms_norm < 1.0);
}

TEST_CASE("cli machine output is byte-identical across runs", "[cli]") {
  for (const char* cmd : {"decompose", "codesign", "analyze"}) {
    const Run a = run(std::string(cmd) + " --format machine --seed 7 " + problem("fading.yaml"));
    const Run b = run(std::string(cmd) + " --format machine --seed 7 " + problem("fading.yaml"));
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(mimostab::io::parse_document(a.out).contains("schema"));
  }
}

TEST_CASE("cli simulate writes a table file", "[cli]") {
  const fs::path out = scratch_dir() / "trajectory.csv";
  fs::remove(out);
  const Run r = run("simulate --t-end 1 --dt 0.01 --out \"" + out.string() + "\" " +
                    problem("awgn.yaml"));
  CHECK(r.status == 0);
  REQUIRE(fs::exists(out));
  const std::string table = slurp(out);
  CHECK_THAT(table, StartsWith("t,x11,"));
  std::size_t lines = 0;
  for (char c : table) lines += c == '\n';
  CHECK(lines == 102);
}

TEST_CASE("cli epsilon override", "[cli]") {
  const Run r = run("codesign --format machine --epsilon 0.05 " + problem("awgn.yaml"));
  CHECK(r.status == 0);
  const auto j = mimostab::io::parse_document(r.out);
  CHECK(j.at("design").at("epsilon").get<double>() == 0.05);
}

TEST_CASE("cli errors exit with code 2", "[cli]") {
  const Run missing = run("check /nonexistent/problem.yaml");
  CHECK(missing.status == 2);
  CHECK_THAT(missing.err, StartsWith("error[cli.InvalidInput]"));

  const fs::path bad = scratch_dir() / "bad.yaml";
  std::ofstream(bad) << "plant:\n  A: [[1]]\n  B: [[1]]\nchannels:\n  kind: awgn\n"
                        "  powers: [1]\n  noise: [1]\n  bogus: 2\n";
  const Run parse = run("check \"" + bad.string() + "\"");
  CHECK(parse.status == 2);
  CHECK_THAT(parse.err, StartsWith("error[cli.ParseError]"));
  CHECK_THAT(parse.err, ContainsSubstring("line 8"));

  CHECK(run("frobnicate " + problem("awgn.yaml")).status == 2);
  CHECK(run("check --format xml " + problem("awgn.yaml")).status == 2);
  CHECK(run("check --epsilon 3 " + problem("awgn.yaml")).status == 2);
  CHECK(run("check --format table " + problem("awgn.yaml")).status == 2);
  const Run coarse = run("simulate --t-end 1 --dt 0.5 " + problem("fading.yaml"));
  CHECK(coarse.status == 2);
  CHECK_THAT(coarse.err, StartsWith("error[analysis.InvalidInput]"));
}

TEST_CASE("cli help exits cleanly", "[cli]") {
  const Run r = run("--help");
  CHECK(r.status == 0);
  CHECK_THAT(r.out, ContainsSubstring("simulate"));
}
