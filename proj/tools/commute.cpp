// Command-line front end for the commute pipeline.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commute/config.hpp"
#include "commute/error.hpp"
#include "commute/pipeline.hpp"

namespace {

struct Subcommand {
  const char* name;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"extract-stays", "parse pings and write stays.csv"},
    {"infer-places", "detect home and work from stays.csv"},
    {"build-od", "assign commuters to tracts and write od.csv"},
    {"validate", "correlate od.csv with the reference flows"},
    {"route-stats", "route commutes and summarize travel times"},
    {"synth", "generate a synthetic world with ground truth"},
    {"sweep", "rerun extraction and inference over parameter grids"},
    {"all", "run every stage whose inputs are configured"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Home/work inference and commute OD matrices from GPS pings"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "override a key, e.g. --set stay.time_threshold_s=1200");

  for (const auto& sub : kSubcommands) app.add_subcommand(sub.name, sub.help)->fallthrough();
  app.add_subcommand("keys", "list every config key with its default")->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string chosen = app.get_subcommands().front()->get_name();

  try {
    if (chosen == "keys") {
      for (const auto& key : commute::config_keys()) {
        std::cout << key.name << " = " << key.default_value << "    # " << key.help << '\n';
      }
      return 0;
    }
    commute::Config config;
    if (!config_file.empty()) config.load_file(config_file);
    for (const auto& assignment : overrides) config.set(assignment);
    commute::run(chosen, config);
  } catch (const commute::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
