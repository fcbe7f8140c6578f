// kgflock: run, certify and sweep lattice flocking missions; solve the
// reduced minimal-time problem.

#include <glob.h>

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kgflock/error.hpp"
#include "kgflock/run.hpp"

namespace {

using kgflock::RunConfig;

struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> dt;

  std::vector<std::pair<std::string, std::string>> pairs() const {
    std::vector<std::pair<std::string, std::string>> kv;
    if (seed) kv.emplace_back("seed", std::to_string(*seed));
    if (dt) kv.emplace_back("dt", *dt);
    return kv;
  }
};

RunConfig configure(const std::string& path, const Overrides& o) {
  RunConfig config = kgflock::load_config(path);
  for (const auto& [k, v] : o.pairs()) kgflock::apply_setting(config, k, v);
  if (o.out) kgflock::apply_setting(config, "output_dir", *o.out);
  kgflock::validate_config(config);
  return config;
}

std::vector<std::filesystem::path> expand(const std::string& pattern) {
  glob_t g{};
  std::vector<std::filesystem::path> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  return paths;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Klein-Gordon lattice flocking controller"};
  app.set_version_flag("--version", KGFLOCK_VERSION);
  app.require_subcommand(1);

  Overrides o;
  bool quiet = false;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed override");
    sub->add_option("--dt", o.dt, "Time step override");
    sub->add_flag("--quiet", quiet, "Only print errors");
  };

  auto* run = app.add_subcommand("run", "Run the configured mission");
  run->add_option("--config", config_path, "Config file")->required();
  add_common(run);

  std::string dir;
  auto* certify = app.add_subcommand("certify", "Re-certify a run directory");
  certify->add_option("dir", dir, "Run directory")->required();

  std::string pattern;
  auto* sweep = app.add_subcommand("sweep", "Run every config matching a glob");
  sweep->add_option("pattern", pattern, "Config glob")->required();
  add_common(sweep);

  auto* hjb = app.add_subcommand("hjb", "Minimal-time value iteration");
  hjb->add_option("config,--config", config_path, "Config file");
  add_common(hjb);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kgflock::kExitConfigError;
  }

  try {
    if (*run) return kgflock::run(configure(config_path, o), std::cout, quiet);
    if (*hjb) {
      if (config_path.empty()) throw kgflock::ParameterError("hjb needs a config file");
      RunConfig config = kgflock::load_config(config_path);
      for (const auto& [k, v] : o.pairs()) kgflock::apply_setting(config, k, v);
      if (o.out) kgflock::apply_setting(config, "output_dir", *o.out);
      return kgflock::run_hjb(config, std::cout, quiet);
    }
    if (*certify) return kgflock::certify(dir, std::cout);
    if (*sweep) {
      const auto configs = expand(pattern);
      if (configs.empty()) throw kgflock::ParameterError("no config matches '" + pattern + "'");
      return kgflock::sweep(configs, o.out.value_or("sweep"), o.pairs(), std::cout, quiet);
    }
  } catch (const kgflock::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kgflock::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kgflock::kExitControlFailure;
  }
  return kgflock::kExitOk;
}
