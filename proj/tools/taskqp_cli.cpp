// taskqp: batch scenario runner.
//
//   taskqp run <file> [-o DIR] [--dump-qp DIR] [--max-steps N] [--tolerance X] [--seed N]
//   taskqp check <file>
//
// Exit codes: 0 pass, 1 checks failed, 2 invalid input, 3 infeasible,
// 4 nonconvergence.

#include "taskqp/errors.hpp"
#include "taskqp/scenario/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using taskqp::scenario::ExitCode;

int code(ExitCode c) { return static_cast<int>(c); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw taskqp::InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

int run_command(const std::string& file, const std::string& output_dir, const taskqp::scenario::RunOptions& options,
                bool quiet) {
  const taskqp::scenario::Scenario scenario = taskqp::scenario::Scenario::load_file(file);
  const taskqp::scenario::RunOutcome outcome = scenario.run(options);

  std::filesystem::create_directories(output_dir);
  const std::filesystem::path dir(output_dir);
  const std::filesystem::path csv = dir / (scenario.name() + ".csv");
  const std::filesystem::path report = dir / (scenario.name() + ".diagnostics.json");
  write_file(csv, taskqp::scenario::format_csv(outcome.trajectory));
  write_file(report, taskqp::scenario::format_diagnostics(scenario, outcome));

  if (!quiet) {
    std::printf("%s (%s): %s\n", scenario.name().c_str(), scenario.kind().c_str(), outcome.message.c_str());
    for (const auto& c : outcome.checks) {
      std::printf("  %s %s [%s] worst %.6g limit %.6g", c.passed ? "PASS" : "FAIL", c.kind.c_str(),
                  c.subject.c_str(), c.worst, c.limit);
      if (c.step >= 0) std::printf(" at step %d", c.step);
      std::printf("\n");
    }
    std::printf("trajectory: %s\ndiagnostics: %s\n", csv.string().c_str(), report.string().c_str());
  }
  if (outcome.code == ExitCode::infeasible) {
    std::fprintf(stderr, "infeasible: %s\n", outcome.message.c_str());
  } else if (outcome.code == ExitCode::nonconvergence) {
    std::fprintf(stderr, "nonconvergence: %s\n", outcome.message.c_str());
  }
  return code(outcome.code);
}

int check_command(const std::string& file, const taskqp::scenario::RunOptions& options) {
  const taskqp::scenario::Scenario scenario = taskqp::scenario::Scenario::load_file(file);
  const taskqp::QpDimensions d = scenario.check(options);
  std::printf("scenario: %s\nkind: %s\nvariables: %ld\nequalities: %ld\ninequalities: %ld\nslack: %ld\nreduced: %ld\n",
              scenario.name().c_str(), scenario.kind().c_str(), static_cast<long>(d.variables),
              static_cast<long>(d.equalities), static_cast<long>(d.inequalities), static_cast<long>(d.slack),
              static_cast<long>(d.reduced));
  return code(ExitCode::pass);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-space QP scenario runner"};
  app.require_subcommand(1);

  std::string file;
  std::string output_dir = ".";
  std::string dump_dir;
  int max_steps = 0;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "Run a scenario, write <name>.csv and <name>.diagnostics.json");
  run->add_option("file", file, "Scenario file")->required();
  run->add_option("-o,--output-dir", output_dir, "Directory for output files")->capture_default_str();
  run->add_option("--dump-qp", dump_dir, "Write the standard-form QP of every recorded solve here");
  CLI::Option* max_steps_opt = run->add_option("--max-steps", max_steps, "Stop after this many steps")
                                   ->check(CLI::PositiveNumber);
  CLI::Option* tolerance_opt =
      run->add_option("--tolerance", tolerance, "Override the convergence tolerance")->check(CLI::PositiveNumber);
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Seed for randomized initial configurations");
  run->add_flag("-q,--quiet", quiet, "Only report errors");

  CLI::App* check = app.add_subcommand("check", "Validate a scenario and report its QP dimensions");
  check->add_option("file", file, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : code(ExitCode::invalid);
  }

  taskqp::scenario::RunOptions options;
  if (max_steps_opt->count()) options.max_steps = max_steps;
  if (tolerance_opt->count()) options.tolerance = tolerance;
  if (seed_opt->count()) options.seed = seed;
  if (!dump_dir.empty()) options.dump_qp_dir = dump_dir;

  try {
    if (run->parsed()) return run_command(file, output_dir, options, quiet);
    return check_command(file, options);
  } catch (const taskqp::InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return code(ExitCode::infeasible);
  } catch (const taskqp::NonConvergenceError& e) {
    std::fprintf(stderr, "nonconvergence: %s\n", e.what());
    return code(ExitCode::nonconvergence);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return code(ExitCode::invalid);
  }
}
