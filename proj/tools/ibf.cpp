// ibf: command-line front end for the isotropic Brownian flow toolkit.
//
//   ibf <command> --config PATH [--out DIR] [--jobs N] [--quiet]
//   ibf run --config PATH ...      (command taken from the config)
//
// Exit status: 0 success, 2 usage or validation error, 3 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ibf/cli/config.hpp"
#include "ibf/cli/runner.hpp"
#include "ibf/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ibf::ConfigError("--config", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isotropic Brownian flow toolkit (" + std::string(ibf::cli::kVersion) + ")", "ibf"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  unsigned jobs = 1;
  bool quiet = false;

  std::vector<std::string> names = ibf::cli::command_names();
  names.push_back("run");
  for (const auto& name : names) {
    auto* sub = app.add_subcommand(name, name == "run" ? "run the command named in the config"
                                                       : "run the " + name + " command");
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--quiet", quiet, "suppress the summary line");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ibf: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = ibf::cli::parse_config(read_file(config_path));
    if (command != "run" && cfg.command != command) {
      throw ibf::ConfigError("command", "config is for '" + cfg.command + "' but '" + command +
                                            "' was requested");
    }
    ibf::cli::RunOptions opt;
    if (!out_dir.empty()) opt.out_dir = out_dir;
    opt.jobs = jobs;
    const auto res = ibf::cli::run_command(cfg, opt);
    if (!quiet) std::cout << res.summary << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    const bool numeric = ibf::is_numeric_failure(e);
    std::cerr << "ibf " << command << ": " << (numeric ? "numeric failure: " : "invalid input: ")
              << e.what() << "\n";
    return numeric ? kExitNumeric : kExitValidation;
  }
}
