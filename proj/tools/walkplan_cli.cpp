// Scenario front end: `walkplan run <scenario>` plans and writes artifacts,
// `walkplan validate <scenario>` lists every violated invariant without
// planning. Exit codes: 0 success, 2 config error, 3 planning failure,
// 4 I/O error.
#include <cstdio>
#include <string>
#include <vector>

#include "walkplan/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kPlanningFailure = 3;
constexpr int kIoError = 4;

int usage() {
  std::fprintf(stderr,
               "usage: walkplan run <scenario> [options]\n"
               "       walkplan validate <scenario> [options]\n"
               "options:\n"
               "  --set key=value   override a scenario key (repeatable)\n"
               "  --seed <int>      override planner.rng_seed (after --set)\n"
               "  --out <dir>       override output.dir (after --set)\n");
  return kConfigError;
}

struct Args {
  std::string command;
  std::string scenario_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied in order
};

bool parse_args(int argc, char** argv, Args& args) {
  std::vector<std::pair<std::string, std::string>> tail;  // --seed/--out
  std::vector<std::string> positional;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--set" || arg == "--seed" || arg == "--out") {
      if (i + 1 >= argc) return false;
      const std::string value = argv[++i];
      if (arg == "--set") {
        const std::size_t eq = value.find('=');
        if (eq == std::string::npos) return false;
        args.overrides.emplace_back(value.substr(0, eq),
                                    value.substr(eq + 1));
      } else if (arg == "--seed") {
        tail.emplace_back("planner.rng_seed", value);
      } else {
        tail.emplace_back("output.dir", value);
      }
    } else if (!arg.empty() && arg[0] == '-') {
      return false;
    } else {
      positional.push_back(arg);
    }
  }
  if (positional.size() != 2) return false;
  args.command = positional[0];
  args.scenario_path = positional[1];
  args.overrides.insert(args.overrides.end(), tail.begin(), tail.end());
  return args.command == "run" || args.command == "validate";
}

int run_command(const Args& args) {
  walkplan::Scenario scenario = walkplan::load_scenario(args.scenario_path);
  for (const auto& [key, value] : args.overrides) {
    walkplan::apply_override(scenario, key, value);
  }

  if (args.command == "validate") {
    const std::vector<walkplan::Finding> findings =
        walkplan::validate_scenario(scenario);
    for (const walkplan::Finding& f : findings) {
      std::printf("%s: %s\n", f.key.c_str(), f.message.c_str());
    }
    if (findings.empty()) std::printf("ok\n");
    return findings.empty() ? kOk : kConfigError;
  }

  const walkplan::RunReport report = walkplan::run_scenario(scenario);
  const char* termination = "sample_budget_exhausted";
  if (report.plan.termination == walkplan::PlanTermination::ReachedGoal) {
    termination = "reached_goal";
  } else if (report.plan.termination ==
             walkplan::PlanTermination::RicConverged) {
    termination = "ric_converged";
  }
  std::printf("termination %s\n", termination);
  std::printf("samples %d\n", report.plan.samples_used);
  std::printf("nodes %zu\n", report.plan.tree.nodes.size());
  std::printf("selected %d\n", report.selected_node);
  for (const std::string& file : report.files) {
    std::printf("wrote %s\n", file.c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  if (!parse_args(argc, argv, args)) return usage();
  try {
    return run_command(args);
  } catch (const walkplan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const walkplan::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "planning failed: %s\n", e.what());
    return kPlanningFailure;
  }
}
