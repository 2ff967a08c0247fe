#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fbrd/config.hpp"
#include "fbrd/errors.hpp"
#include "fbrd/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-blocklength Gaussian rate-distortion toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // let -c/-o appear after the positional subcommand

  std::string config_path;
  std::string output_override;
  int threads = -1;
  app.add_option("-c,--config", config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("-o,--output", output_override, "override output.path");
  app.add_option("--threads", threads, "override task.threads");

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"spectrum", "eigenvalue spectrum of the source covariance"},
      {"waterfill", "water level and distortion allocation"},
      {"rate", "nth-order rate and dispersion"},
      {"limit", "limiting rate, dispersion and water level"},
      {"approx", "Gaussian approximation of the rate"},
      {"converse", "converse bound on the rate"},
      {"achievability", "random-coding achievability bound"},
      {"simulate-codec", "Monte Carlo random-code trial"},
      {"aep", "distortion-ball probability slack experiment"},
      {"sweep", "bounds and concentration across blocklengths"}};
  for (const auto& [name, desc] : subs) app.add_subcommand(name, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;  // usage problems are validation failures
  }

  try {
    auto cfg = fbrd::io::RunConfig::from_file(config_path);
    const auto chosen = app.get_subcommands();
    if (!chosen.empty()) {
      const std::string& name = chosen.front()->get_name();
      if (!cfg.task.subcommand.empty() && cfg.task.subcommand != name) {
        std::cerr << "validation error: subcommand '" << name
                  << "' conflicts with config task.subcommand '"
                  << cfg.task.subcommand << "'\n";
        return 2;
      }
      cfg.task.subcommand = name;
    }
    // The only environment override: where the result file lands.
    if (const char* env = std::getenv("FBRD_OUTPUT")) cfg.output.path = env;
    if (!output_override.empty()) cfg.output.path = output_override;
    if (threads >= 0) cfg.task.threads = threads;
    return fbrd::io::run(cfg);
  } catch (const fbrd::DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
