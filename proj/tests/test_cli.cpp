#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "config.hpp"
#include "experiment.hpp"
#include "rsplit/errors.hpp"
#include "rsplit/euler2d.hpp"
#include "rsplit/rng.hpp"

using namespace rsplit;
using namespace rsplit::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rsplit_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      rows.back().push_back(cell);
      cell.clear();
      rows.emplace_back();
    } else {
      cell += c;
    }
  }
  if (rows.back().empty()) rows.pop_back();
  return rows;
}

// Cells must agree exactly, except numbers, which may differ by 1e-9
// relative so the golden files survive a different libm.
void expect_same_table(const std::string& expected, const std::string& actual, const std::string& name) {
  const auto a = read_csv(expected), b = read_csv(actual);
  ASSERT_EQ(a.size(), b.size()) << name;
  ASSERT_FALSE(a.empty()) << name;
  EXPECT_EQ(a[0], b[0]) << name << " header";
  for (std::size_t r = 1; r < a.size(); ++r) {
    ASSERT_EQ(a[r].size(), b[r].size()) << name << " row " << r;
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      if (a[r][c] == b[r][c]) continue;
      std::vector<std::string> ea, eb;
      auto split = [](const std::string& s, std::vector<std::string>& out) {
        std::stringstream ss(s);
        std::string part;
        while (std::getline(ss, part, ';')) out.push_back(part);
      };
      split(a[r][c], ea);
      split(b[r][c], eb);
      ASSERT_EQ(ea.size(), eb.size()) << name << " row " << r << " col " << a[0][c];
      for (std::size_t k = 0; k < ea.size(); ++k) {
        char* end = nullptr;
        const double x = std::strtod(ea[k].c_str(), &end);
        ASSERT_EQ(*end, '\0') << name << " row " << r << " col " << a[0][c] << ": '" << ea[k] << "' vs '" << eb[k] << "'";
        const double y = std::strtod(eb[k].c_str(), nullptr);
        EXPECT_LE(std::abs(x - y), 1e-9 * std::max(std::abs(x), 1e-300))
            << name << " row " << r << " col " << a[0][c];
      }
    }
  }
}

ExperimentConfig parse_ok(const std::string& text) {
  const ParseResult r = parse_config(text);
  EXPECT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front());
  return r.config.value_or(ExperimentConfig{});
}

}  // namespace

TEST(ParseConfig, MinimalLorenzGetsDefaults) {
  const ExperimentConfig cfg = parse_ok(R"({"model": {"kind": "lorenz96"}})");
  EXPECT_EQ(cfg.kind, ExperimentKind::simulate);
  const auto& spec = std::get<lorenz96::LorenzSpec>(cfg.model);
  EXPECT_EQ(spec.n, 6u);
  EXPECT_TRUE(spec.conservative);
  EXPECT_EQ(cfg.scheme.h, 0.1);
  EXPECT_EQ(cfg.scheme.law, TimeLawKind::exponential);
  EXPECT_EQ(cfg.run.seed, 0u);
  EXPECT_EQ(cfg, ExperimentConfig{});
}

TEST(ParseConfig, SyntaxErrorHasLineAndColumn) {
  const ParseResult r = parse_config("{\n  \"model\": {\n    \"kind\": lorenz96\n  }\n}\n");
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find("line 3, column 13"), std::string::npos) << r.errors[0];
}

TEST(ParseConfig, NegativeStepNamesTheField) {
  const ParseResult r = parse_config(R"({"scheme": {"h": -0.1}})");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r.errors, "scheme.h")) << r.errors.front();
}

TEST(ParseConfig, ReportsEveryError) {
  const ParseResult r = parse_config(R"({
    "experiment": "simulate",
    "model": {"kind": "lorenz96", "n": 2, "colour": 1},
    "scheme": {"h": 0, "time_law": "cauchy"},
    "run": {"cycles": -5},
    "extra": true
  })");
  ASSERT_FALSE(r.ok());
  for (const char* path : {"model.n", "model.colour", "scheme.h", "scheme.time_law", "run.cycles", "extra"})
    EXPECT_TRUE(mentions(r.errors, path)) << path;
}

TEST(ParseConfig, UnknownKeysRejected) {
  for (const char* text : {R"({"run": {"seeds": 1}})", R"({"study": {"hgrid": [0.1]}})", R"({"integrator": {"tol": 1e-9}})",
                           R"({"model": {"kind": "euler2d", "n": 3}})"}) {
    const ParseResult r = parse_config(text);
    EXPECT_FALSE(r.ok()) << text;
    EXPECT_TRUE(mentions(r.errors, "unknown key")) << text;
  }
}

TEST(ParseConfig, ForcedEulerWithNondegenerateForcing) {
  const euler2d::Lattice lat(2);
  std::vector<double> f(lat.dimension(), 0.0);
  f[euler2d::Lattice::a(lat.index({1, 0}))] = 1.0;
  f[euler2d::Lattice::a(lat.index({0, 1}))] = 0.5;
  f[euler2d::Lattice::b(lat.index({1, 1}))] = 0.25;
  ASSERT_TRUE(euler2d::is_nondegenerate(lat, f));
  nlohmann::json tree = {{"model", {{"kind", "euler2d"}, {"N", 2}, {"conservative", false}, {"nu", 0.1},
                                    {"dissipation", "laplacian"}, {"forcing", f}}}};
  const ParseResult ok = parse_config(tree);
  ASSERT_TRUE(ok.ok()) << ok.errors.front();
  EXPECT_EQ(std::get<euler2d::EulerSpec>(ok.config->model).forcing, f);

  std::vector<double> single(lat.dimension(), 0.0);
  single[euler2d::Lattice::a(lat.index({1, 0}))] = 1.0;
  ASSERT_FALSE(euler2d::is_nondegenerate(lat, single));
  tree["model"]["forcing"] = single;
  const ParseResult bad = parse_config(tree);
  ASSERT_FALSE(bad.ok());
  EXPECT_TRUE(mentions(bad.errors, "model.forcing"));
}

TEST(ParseConfig, ConservativeModelWithForcingRejected) {
  const ParseResult r = parse_config(R"({"model": {"kind": "lorenz96", "forcing": 8}})");
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r.errors, "model"));
}

TEST(ParseConfig, ExperimentRequirements) {
  EXPECT_FALSE(parse_config(R"({"experiment": "bracket", "model": {"kind": "lorenz96"}})").ok());
  EXPECT_FALSE(parse_config(R"({"experiment": "lyapunov", "model": {"kind": "euler2d"}})").ok());
  EXPECT_FALSE(parse_config(R"({"experiment": "control-demo", "model": {"kind": "lorenz96"}})").ok());
  EXPECT_FALSE(parse_config(
                   R"({"experiment": "ergodic", "model": {"kind": "lorenz96", "conservative": false, "nu": 1, "forcing": 1}})")
                   .ok());
  EXPECT_FALSE(parse_config(R"({"experiment": "teleport"})").ok());
}

TEST(ParseConfig, RoundTrip) {
  const std::vector<std::string> texts{
      R"({"model": {"kind": "lorenz96"}})",
      R"({"experiment": "lyapunov", "model": {"kind": "lorenz96", "n": 7, "conservative": false, "nu": 0.5, "forcing": 8},
          "scheme": {"h": 0.25, "time_law": "gamma", "shape": 3, "order": "permuted"},
          "run": {"cycles": 50, "burn_in": 5, "seed": 18446744073709551615}, "study": {"radii": [2, 3]}})",
      R"({"experiment": "control-demo", "model": {"kind": "euler2d", "N": 3},
          "initial": {"scale": 2, "unit_norm": true}, "study": {"variant": "bab", "theta": 1.25, "points": 3}})",
      R"({"experiment": "bracket", "model": {"kind": "euler2d", "N": 2, "conservative": false, "nu": 0.3,
          "dissipation": "ekman", "forcing": 0.7}, "integrator": {"rel_tol": 1e-9, "abs_tol": 1e-11}})",
  };
  for (const auto& text : texts) {
    const ExperimentConfig cfg = parse_ok(text);
    const nlohmann::json tree = to_json(cfg);
    const ParseResult again = parse_config(tree.dump());
    ASSERT_TRUE(again.ok()) << again.errors.front();
    EXPECT_EQ(*again.config, cfg) << text;
    EXPECT_EQ(to_json(*again.config), tree);
  }
}

TEST(Overrides, DottedPathsAndTypes) {
  nlohmann::json tree = nlohmann::json::parse(R"({"model": {"kind": "lorenz96"}})");
  apply_override(tree, "scheme.h=0.05");
  apply_override(tree, "model.n=8");
  apply_override(tree, "scheme.time_law=gamma");
  apply_override(tree, "study.h_grid=[0.2,0.1]");
  const ParseResult r = parse_config(tree);
  ASSERT_TRUE(r.ok()) << r.errors.front();
  EXPECT_EQ(r.config->scheme.h, 0.05);
  EXPECT_EQ(std::get<lorenz96::LorenzSpec>(r.config->model).n, 8u);
  EXPECT_EQ(r.config->scheme.law, TimeLawKind::gamma);
  EXPECT_EQ(r.config->study.h_grid, (std::vector<double>{0.2, 0.1}));

  EXPECT_THROW(apply_override(tree, "scheme.h"), UsageError);
  EXPECT_THROW(apply_override(tree, "=1"), UsageError);
  EXPECT_THROW(apply_override(tree, "model..n=1"), UsageError);
  EXPECT_THROW(apply_override(tree, "scheme.h.x=1"), UsageError);
}

TEST(Csv, Rfc4180Quoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a(1,0)"), "\"a(1,0)\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  Table t{{"x", "a(1,0)"}, {{"1", "2"}}};
  EXPECT_EQ(to_csv(t), "x,\"a(1,0)\"\n1,2\n");
  EXPECT_EQ(read_csv(to_csv(t))[0][1], "a(1,0)");
}

TEST(Csv, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
}

TEST(Simulate, HeaderNamesCoordinates) {
  ExperimentConfig cfg = parse_ok(R"({"model": {"kind": "euler2d", "N": 2}, "run": {"cycles": 3}})");
  const ExperimentResult r = execute(cfg);
  const Table& t = r.tables.at("trajectory.csv");
  ASSERT_EQ(t.header.size(), 2 + 24u);
  EXPECT_EQ(t.header[0], "cycle");
  EXPECT_EQ(t.header[1], "leading_time");
  EXPECT_EQ(t.header[2], "a(1,0)");
  EXPECT_EQ(t.header[3], "b(1,0)");
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(r.pass);

  cfg = parse_ok(R"({"model": {"kind": "lorenz96", "n": 4}, "run": {"cycles": 10, "record_every": 5}})");
  const ExperimentResult lr = execute(cfg);
  const Table& lt = lr.tables.at("trajectory.csv");
  EXPECT_EQ(lt.header, (std::vector<std::string>{"cycle", "leading_time", "x0", "x1", "x2", "x3"}));
  EXPECT_EQ(lt.rows.size(), 3u);
}

TEST(Simulate, ConfiguredInitialStateIsUsed) {
  const ExperimentConfig cfg =
      parse_ok(R"({"model": {"kind": "lorenz96", "n": 4}, "run": {"cycles": 1}, "initial": {"state": [1, 2, 3, 4]}})");
  const ExperimentResult r = execute(cfg);
  const Table& t = r.tables.at("trajectory.csv");
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"0", "0", "1", "2", "3", "4"}));
}

TEST(Golden, WeakConverge) {
  const fs::path dir = RSPLIT_GOLDEN_DIR;
  const ParseResult p = parse_config(slurp(dir / "weak_converge.json"));
  ASSERT_TRUE(p.ok());
  const ExperimentResult r = execute(*p.config);
  expect_same_table(slurp(dir / "weak_converge.weak_errors.csv"), to_csv(r.tables.at("weak_errors.csv")),
                    "weak_errors");
  expect_same_table(slurp(dir / "weak_converge.weak_fit.csv"), to_csv(r.tables.at("weak_fit.csv")), "weak_fit");
}

TEST(Golden, Ranks) {
  const fs::path dir = RSPLIT_GOLDEN_DIR;
  const ParseResult p = parse_config(slurp(dir / "ranks.json"));
  ASSERT_TRUE(p.ok());
  const ExperimentResult r = execute(*p.config);
  EXPECT_TRUE(r.pass);
  expect_same_table(slurp(dir / "ranks.ranks.csv"), to_csv(r.tables.at("ranks.csv")), "ranks");
}

TEST(Manifest, RerunFromManifestIsBitIdentical) {
  const std::vector<std::string> configs{
      R"({"experiment": "simulate", "model": {"kind": "euler2d", "N": 2}, "run": {"cycles": 50, "seed": 99}})",
      R"({"experiment": "weak-converge", "model": {"kind": "lorenz96", "n": 4}, "run": {"samples": 200, "seed": 3},
          "study": {"t": 0.2, "h_grid": [0.1, 0.05]}})",
      R"({"experiment": "ergodic", "model": {"kind": "euler2d", "N": 2}, "run": {"cycles": 400, "seed": 5}})",
      R"({"experiment": "control-demo", "model": {"kind": "euler2d", "N": 2}, "run": {"seed": 8}})",
  };
  int k = 0;
  for (const auto& text : configs) {
    const ExperimentConfig cfg = parse_ok(text);
    const fs::path first = scratch("first" + std::to_string(k)), second = scratch("second" + std::to_string(k));
    ++k;
    run_experiment(cfg, {first, {"run.seed=1"}});
    const std::string manifest = slurp(first / "manifest.json");
    const ParseResult again = parse_config(manifest);
    ASSERT_TRUE(again.ok());
    EXPECT_EQ(*again.config, cfg);
    run_experiment(*again.config, {second, {"run.seed=1"}});
    EXPECT_EQ(slurp(second / "manifest.json"), manifest);
    const auto tables = nlohmann::json::parse(manifest).at("tables");
    EXPECT_FALSE(tables.empty());
    for (const auto& name : tables) {
      const auto file = name.get<std::string>();
      EXPECT_EQ(slurp(second / file), slurp(first / file)) << file;
    }
  }
}

TEST(Manifest, ContentsAndSortedKeys) {
  const ExperimentConfig cfg = parse_ok(R"({"experiment": "ranks", "model": {"kind": "lorenz96"}, "run": {"seed": 42}})");
  const fs::path dir = scratch("manifest");
  EXPECT_EQ(run_experiment(cfg, {dir, {"run.seed=42"}}), kExitPass);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("seed"), 42);
  EXPECT_EQ(m.at("version"), toolkit_version());
  EXPECT_EQ(m.at("status"), "pass");
  EXPECT_EQ(m.at("exit_code"), 0);
  EXPECT_EQ(m.at("overrides"), nlohmann::json::array({"run.seed=42"}));
  EXPECT_EQ(m.at("substreams").at("experiment"), derive_seed(42, 2));
  EXPECT_EQ(m.at("tables"), nlohmann::json::array({"ranks.csv"}));
  std::string prev;
  for (auto it = m.begin(); it != m.end(); ++it) {
    EXPECT_LT(prev, it.key());
    prev = it.key();
  }
}

TEST(ExitStatus, PassFailAndError) {
  ExperimentConfig cfg = parse_ok(R"({"experiment": "pathwise-converge", "model": {"kind": "lorenz96"},
      "study": {"m_list": [4, 8], "min_reduction": 1e6}})");
  EXPECT_EQ(run_experiment(cfg, {scratch("fail"), {}}), kExitCheckFailed);

  cfg = parse_ok(R"({"experiment": "ergodic", "model": {"kind": "lorenz96", "n": 4}, "run": {"cycles": 200},
      "initial": {"state": [1, 0, 0, 0]}})");
  const fs::path dir = scratch("error");
  EXPECT_EQ(run_experiment(cfg, {dir, {}}), kExitError);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m.at("status"), "error");
  EXPECT_FALSE(m.at("errors").empty());
}

TEST(Binary, SubcommandsAndExitCodes) {
  const fs::path dir = scratch("binary");
  fs::create_directories(dir);
  std::ofstream(dir / "ranks.json") << R"({"model": {"kind": "euler2d", "N": 2}})";
  std::ofstream(dir / "bad.json") << R"({"scheme": {"h": -1}})";
  const std::string bin = RSPLIT_CLI_BINARY;
  auto run = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " 2>/dev/null").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run("ranks --config " + (dir / "ranks.json").string() + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "ranks.csv"));
  EXPECT_EQ(run("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "bad").string()), 1);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "bad" / "manifest.json")).at("status"), "error");
  EXPECT_EQ(run("simulate --config " + (dir / "ranks.json").string() + " --set scheme.h=-1 --out " +
                (dir / "bad2").string()),
            1);
  EXPECT_EQ(run("pathwise-converge --config " + (dir / "ok" / "manifest.json").string() + " --out " +
                (dir / "mismatch").string()),
            1);
  EXPECT_EQ(run("ranks --config " + (dir / "ok" / "manifest.json").string() + " --seed 4 --out " +
                (dir / "reseed").string()),
            0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "reseed" / "manifest.json")).at("seed"), 4);
}
