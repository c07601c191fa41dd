#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "experiment.hpp"
#include "rsplit/errors.hpp"

using namespace rsplit::cli;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = "rsplit-out";
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rsplit::UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int fail(const Options& opt, const std::vector<std::string>& errors, const std::vector<std::string>& overrides) {
  for (const auto& e : errors) std::cerr << "error: " << e << "\n";
  if (!opt.dry_run) {
    try {
      write_error_manifest(opt.out_dir, errors, overrides);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
    }
  }
  return kExitError;
}

int run(ExperimentKind kind, const Options& opt) {
  std::vector<std::string> overrides = opt.sets;
  if (opt.seed) overrides.push_back("run.seed=" + std::to_string(*opt.seed));

  nlohmann::json tree = nlohmann::json::object();
  try {
    if (!opt.config_path.empty()) tree = read_config_tree(read_file(opt.config_path));
    if (tree.is_object() && tree.contains("rsplit_manifest")) tree = tree.value("config", nlohmann::json::object());
    if (!tree.is_object()) throw rsplit::UsageError("config: expected an object at the top level");
    for (const auto& o : overrides) apply_override(tree, o);
  } catch (const std::exception& e) {
    return fail(opt, {e.what()}, overrides);
  }

  const std::string name = to_string(kind);
  if (!tree.contains("experiment")) {
    tree["experiment"] = name;
  } else if (tree["experiment"] != name) {
    return fail(opt, {"experiment: config is for '" + tree["experiment"].dump() + "', subcommand is '" + name + "'"},
                overrides);
  }

  const ParseResult parsed = parse_config(tree);
  if (!parsed.ok()) return fail(opt, parsed.errors, overrides);

  if (opt.dry_run) {
    std::cout << to_json(*parsed.config).dump(2) << "\n";
    return kExitPass;
  }
  RunOptions ro;
  ro.out_dir = opt.out_dir;
  ro.overrides = overrides;
  const int code = run_experiment(*parsed.config, ro);
  std::cerr << name << ": " << (code == kExitPass ? "pass" : code == kExitCheckFailed ? "check failed" : "error")
            << " (" << (ro.out_dir / "manifest.json").string() << ")\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random splitting experiments for Lorenz-96 and truncated 2D Euler"};
  app.set_version_flag("--version", std::string(toolkit_version()));
  app.require_subcommand(1);

  Options opt;
  std::optional<ExperimentKind> chosen;
  for (ExperimentKind kind : all_experiment_kinds()) {
    auto* sub = app.add_subcommand(to_string(kind), "run the " + to_string(kind) + " experiment");
    sub->add_option("--config", opt.config_path, "JSON config or run manifest")->check(CLI::ExistingFile);
    sub->add_option("--set", opt.sets, "override a config key, e.g. --set scheme.h=0.05")->allow_extra_args(false);
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "root seed (recorded as the override run.seed)");
    sub->add_flag("--dry-run", opt.dry_run, "print the resolved config and exit");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  CLI11_PARSE(app, argc, argv);
  return chosen ? run(*chosen, opt) : kExitError;
}
