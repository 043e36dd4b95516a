#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "polyflux/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Conservation laws with polygonal flux via the Hopf-Lax formula"};
  app.usage("polyflux <command> --config <file> [--out <dir>] [--seed N]");
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "conjugate | solve | discrete | mollify | verify | stochastic")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : polyflux::kExitUsage;
  }

  try {
    auto cfg = polyflux::parse_config_file(config_path, command);
    cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    return polyflux::execute(std::move(cfg));
  } catch (const polyflux::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return polyflux::kExitUsage;
  } catch (const polyflux::ConvexityError& e) {
    std::cerr << "flux error: " << e.what() << '\n';
    return polyflux::kExitUsage;
  } catch (const polyflux::DegenerateSegmentError& e) {
    std::cerr << "flux error: " << e.what() << '\n';
    return polyflux::kExitUsage;
  } catch (const polyflux::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return polyflux::kExitUsage;
  }
}
