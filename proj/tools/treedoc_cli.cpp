// treedoc command-line front end: scripted scenarios and seeded fuzzing.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "treedoc/error.hpp"
#include "treedoc/runner.hpp"

namespace {

int emit(const treedoc::RunOutcome& out, const std::string& trace_path) {
  for (const auto& line : out.report) std::cout << line << '\n';
  if (!trace_path.empty() && !out.trace.empty()) {
    std::ofstream f(trace_path);
    if (!f) {
      std::cerr << "cannot write trace to " << trace_path << '\n';
      return 2;
    }
    f << treedoc::trace_text(out);
  }
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treedoc replicated sequence: scenario runner and fuzzer"};
  app.require_subcommand(1);
  bool metrics = false;
  std::string trace_path;
  app.add_flag("--metrics", metrics, "Include metrics in the summary line");
  app.add_option("--trace", trace_path, "Write the executed event trace to this file");

  auto* run = app.add_subcommand("run", "Execute a scenario file");
  std::string file;
  run->add_option("FILE", file, "Scenario file ('-' for stdin)")->required();

  auto* fuzz = app.add_subcommand("fuzz", "Generate and check a random schedule");
  treedoc::FuzzOptions fo;
  std::string faults = "none";
  fuzz->add_option("--seed", fo.seed, "Random seed")->default_val(1);
  fuzz->add_option("--sites", fo.sites, "Initial number of sites")->default_val(3)->check(CLI::Range(1, 64));
  fuzz->add_option("--ops", fo.ops, "Edit operations to initiate")->default_val(200);
  fuzz->add_option("--faults", faults, "none | all | partition[+crash][+suspect]")->default_val("none");

  // Options may follow the subcommand too.
  for (auto* sub : {run, fuzz}) {
    sub->add_flag("--metrics", metrics, "Include metrics in the summary line");
    sub->add_option("--trace", trace_path, "Write the executed event trace to this file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const treedoc::RunOptions ro{metrics};
  try {
    if (*run) {
      std::stringstream buf;
      if (file == "-") {
        buf << std::cin.rdbuf();
      } else {
        std::ifstream in(file);
        if (!in) {
          std::cerr << "cannot read " << file << '\n';
          return 2;
        }
        buf << in.rdbuf();
      }
      return emit(treedoc::run_scenario(buf.str(), ro), trace_path);
    }
    fo.faults = treedoc::FaultProfile::parse(faults);
    return emit(treedoc::run_fuzz(fo, ro), trace_path);
  } catch (const treedoc::Error& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
