#pragma once

// Experiment configuration: a JSON tree with fixed sections, validated
// field by field so that every problem is reported at once.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rsplit/integrator.hpp"
#include "rsplit/model.hpp"

namespace rsplit::cli {

enum class ExperimentKind { simulate, weak_converge, pathwise_converge, ergodic, ranks, bracket, lyapunov, control_demo };

std::string to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& s);
const std::vector<ExperimentKind>& all_experiment_kinds();

struct SchemeSection {
  double h = 0.1;
  TimeLawKind law = TimeLawKind::exponential;
  double shape = 1.0;
  OrderPolicy order = OrderPolicy::fixed;

  TimeLawSpec time_law() const { return {law, h, shape}; }
  bool operator==(const SchemeSection&) const = default;
};

struct RunSection {
  std::size_t cycles = 1000;
  std::size_t samples = 10'000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> burn_in;
  std::size_t record_every = 1;
  std::size_t batches = 50;
  bool operator==(const RunSection&) const = default;
};

/// Starting state. An empty `state` means a random Gaussian state with
/// standard deviation `scale`, rescaled to norm `scale` when `unit_norm`.
/// `second_state` is the second start of the Euler two-run test; when empty
/// a random state is rescaled onto the first start's (E, calE).
struct InitialSection {
  std::vector<double> state;
  std::vector<double> second_state;
  double scale = 1.0;
  bool unit_norm = false;
  bool operator==(const InitialSection&) const = default;
};

struct StudySection {
  double t = 1.0;
  std::vector<double> h_grid{0.02, 0.01, 0.005, 0.0025};
  std::vector<std::size_t> m_list{4, 8, 16, 32};
  std::vector<std::string> observables{"coord:0", "square:1", "cos:2"};
  double slope_min = 0.8;
  double slope_max = 2.2;
  double min_reduction = 4.0;
  double threshold = 4.0;
  std::size_t oracle_samples = 200'000;
  std::vector<double> radii{1.0, 10.0, 100.0};
  std::size_t points = 1;
  std::string variant = "aaa";
  double theta = 0.5;
  bool operator==(const StudySection&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::simulate;
  ModelSpec model = lorenz96::LorenzSpec{};
  SchemeSection scheme;
  RunSection run;
  InitialSection initial;
  StudySection study;
  IntegratorConfig integrator;
  bool operator==(const ExperimentConfig&) const = default;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return config.has_value(); }
};

/// JSON text to a tree. Throws UsageError carrying line and column on a
/// syntax error.
nlohmann::json read_config_tree(const std::string& text);

/// Parses JSON text. Syntax errors carry line and column; semantic errors
/// carry the dotted path of the offending field. A run manifest is accepted
/// too and its embedded config is used.
ParseResult parse_config(const std::string& text);
inline ParseResult parse_config(const char* text) { return parse_config(std::string(text)); }

/// Same, starting from an already parsed tree.
ParseResult parse_config(const nlohmann::json& tree);

/// Fully resolved tree with every default written out.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Applies "a.b.c=value". The value is read as JSON when it parses, as a
/// plain string otherwise. Throws UsageError on a malformed assignment.
void apply_override(nlohmann::json& tree, const std::string& assignment);

}  // namespace rsplit::cli
