#include "config.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "rsplit/diagnostics.hpp"
#include "rsplit/errors.hpp"

namespace rsplit::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKindNames{
    {ExperimentKind::simulate, "simulate"},
    {ExperimentKind::weak_converge, "weak-converge"},
    {ExperimentKind::pathwise_converge, "pathwise-converge"},
    {ExperimentKind::ergodic, "ergodic"},
    {ExperimentKind::ranks, "ranks"},
    {ExperimentKind::bracket, "bracket"},
    {ExperimentKind::lyapunov, "lyapunov"},
    {ExperimentKind::control_demo, "control-demo"},
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

bool nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  /// Object at obj[key] (or an empty object when absent); unknown keys are
  /// reported against `allowed`.
  const json* section(const json& obj, const std::string& key, const std::string& path,
                      const std::set<std::string>& allowed) {
    static const json empty = json::object();
    const std::string p = join(path, key);
    const json* sec = &empty;
    if (auto it = obj.find(key); it != obj.end()) {
      if (!it->is_object()) {
        fail(p, "expected an object");
        return nullptr;
      }
      sec = &*it;
    }
    check_keys(*sec, p, allowed);
    return sec;
  }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown key");
    }
  }

  void number(const json& obj, const std::string& key, const std::string& path, double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number()) return fail(join(path, key), "expected a number");
    out = it->get<double>();
    if (!std::isfinite(out)) fail(join(path, key), "must be finite");
  }

  template <class Int>
  void count(const json& obj, const std::string& key, const std::string& path, Int& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!nonnegative_integer(*it)) return fail(join(path, key), "expected a nonnegative integer");
    if (it->get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      return fail(join(path, key), "value too large");
    }
    out = it->get<Int>();
  }

  void boolean(const json& obj, const std::string& key, const std::string& path, bool& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) return fail(join(path, key), "expected true or false");
    out = it->get<bool>();
  }

  void string(const json& obj, const std::string& key, const std::string& path, std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string()) return fail(join(path, key), "expected a string");
    out = it->get<std::string>();
  }

  void numbers(const json& obj, const std::string& key, const std::string& path, std::vector<double>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array()) return fail(join(path, key), "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& e = (*it)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        return fail(join(path, key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      v.push_back(e.get<double>());
    }
    out = std::move(v);
  }

  void counts(const json& obj, const std::string& key, const std::string& path, std::vector<std::size_t>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array()) return fail(join(path, key), "expected an array of integers");
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& e = (*it)[i];
      if (!nonnegative_integer(e)) {
        return fail(join(path, key) + "[" + std::to_string(i) + "]", "expected a nonnegative integer");
      }
      v.push_back(e.get<std::size_t>());
    }
    out = std::move(v);
  }

  void strings(const json& obj, const std::string& key, const std::string& path, std::vector<std::string>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array()) return fail(join(path, key), "expected an array of strings");
    std::vector<std::string> v;
    for (std::size_t i = 0; i < it->size(); ++i) {
      if (!(*it)[i].is_string()) return fail(join(path, key) + "[" + std::to_string(i) + "]", "expected a string");
      v.push_back((*it)[i].get<std::string>());
    }
    out = std::move(v);
  }
};

std::optional<TimeLawKind> parse_law(const std::string& s) {
  for (auto k : {TimeLawKind::exponential, TimeLawKind::gamma, TimeLawKind::uniform_positive})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<OrderPolicy> parse_order(const std::string& s) {
  for (auto k : {OrderPolicy::fixed, OrderPolicy::permuted})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<euler2d::Dissipation> parse_dissipation(const std::string& s) {
  for (auto d : {euler2d::Dissipation::laplacian, euler2d::Dissipation::ekman})
    if (euler2d::to_string(d) == s) return d;
  return std::nullopt;
}

/// Forcing may be given as one number, meaning that value in every entry.
void read_forcing(Reader& r, const json& m, std::size_t dim, std::vector<double>& out) {
  auto it = m.find("forcing");
  if (it != m.end() && it->is_number()) {
    out.assign(dim, it->get<double>());
    return;
  }
  r.numbers(m, "forcing", "model", out);
}

/// Field named by a model validation message, so the error carries a path.
std::string model_field(const std::string& msg) {
  for (const char* f : {"forcing", "nu", "n", "N"}) {
    if (msg.find(std::string(": ") + f + " ") != std::string::npos) return std::string("model.") + f;
  }
  if (msg.find("nu ") != std::string::npos) return "model.nu";
  return "model";
}

ModelSpec read_model(Reader& r, const json& root) {
  const json* m = nullptr;
  auto it = root.find("model");
  std::string kind = "lorenz96";
  if (it != root.end() && it->is_object()) {
    if (auto k = it->find("kind"); k != it->end()) {
      if (k->is_string()) {
        kind = k->get<std::string>();
      } else {
        r.fail("model.kind", "expected a string");
      }
    }
  }
  if (kind == "lorenz96") {
    m = r.section(root, "model", "", {"kind", "n", "conservative", "nu", "forcing"});
    lorenz96::LorenzSpec s;
    if (!m) return s;
    r.count(*m, "n", "model", s.n);
    r.boolean(*m, "conservative", "model", s.conservative);
    r.number(*m, "nu", "model", s.nu);
    read_forcing(r, *m, s.n, s.forcing);
    if (s.conservative && (s.nu != 0.0 || !s.forcing.empty())) {
      r.fail("model.conservative", "a conservative model takes no nu or forcing");
    }
    try {
      s.validate();
    } catch (const Error& e) {
      r.fail(model_field(e.what()), e.what());
    }
    return s;
  }
  if (kind == "euler2d") {
    m = r.section(root, "model", "", {"kind", "N", "conservative", "nu", "dissipation", "forcing"});
    euler2d::EulerSpec s;
    if (!m) return s;
    r.count(*m, "N", "model", s.N);
    r.boolean(*m, "conservative", "model", s.conservative);
    r.number(*m, "nu", "model", s.nu);
    std::string diss = euler2d::to_string(s.dissipation);
    r.string(*m, "dissipation", "model", diss);
    if (auto d = parse_dissipation(diss)) {
      s.dissipation = *d;
    } else {
      r.fail("model.dissipation", "expected laplacian or ekman, got '" + diss + "'");
    }
    if (s.N >= 2 && s.N <= 64) read_forcing(r, *m, s.dimension(), s.forcing);
    if (s.conservative && (s.nu != 0.0 || !s.forcing.empty())) {
      r.fail("model.conservative", "a conservative model takes no nu or forcing");
    }
    if (s.N > 64) r.fail("model.N", "at most 64 is supported");
    try {
      s.validate();
      if (!s.conservative) {
        const euler2d::Lattice lat(s.N);
        if (!euler2d::is_nondegenerate(lat, s.forcing)) {
          r.fail("model.forcing", "forcing is degenerate: its active set does not saturate to a nondegenerate set");
        }
      }
    } catch (const Error& e) {
      r.fail(model_field(e.what()), e.what());
    }
    return s;
  }
  r.fail("model.kind", "expected lorenz96 or euler2d, got '" + kind + "'");
  return lorenz96::LorenzSpec{};
}

void check_state(Reader& r, const std::vector<double>& x, std::size_t dim, const std::string& path) {
  if (!x.empty() && x.size() != dim) {
    r.fail(path, "has " + std::to_string(x.size()) + " entries, the model has dimension " + std::to_string(dim));
  }
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "?";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  return std::nullopt;
}

const std::vector<ExperimentKind>& all_experiment_kinds() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> v;
    for (const auto& [kind, name] : kKindNames) v.push_back(kind);
    return v;
  }();
  return kinds;
}

json read_config_tree(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw UsageError("syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }
}

ParseResult parse_config(const std::string& text) {
  json tree;
  try {
    tree = read_config_tree(text);
  } catch (const UsageError& e) {
    return {std::nullopt, {e.what()}};
  }
  return parse_config(tree);
}

ParseResult parse_config(const json& input) {
  Reader r;
  if (!input.is_object()) return {std::nullopt, {"(root): expected an object"}};
  const json& root = input.contains("rsplit_manifest") && input.contains("config") ? input.at("config") : input;
  if (!root.is_object()) return {std::nullopt, {"config: expected an object"}};
  r.check_keys(root, "", {"experiment", "model", "scheme", "run", "initial", "study", "integrator"});

  ExperimentConfig cfg;
  std::string kind = to_string(cfg.kind);
  r.string(root, "experiment", "", kind);
  if (auto k = parse_experiment_kind(kind)) {
    cfg.kind = *k;
  } else {
    r.fail("experiment", "unknown experiment '" + kind + "'");
  }

  cfg.model = read_model(r, root);
  const std::size_t dim = dimension(cfg.model);

  if (const json* s = r.section(root, "scheme", "", {"h", "time_law", "shape", "order"})) {
    r.number(*s, "h", "scheme", cfg.scheme.h);
    std::string law = to_string(cfg.scheme.law), order = to_string(cfg.scheme.order);
    r.string(*s, "time_law", "scheme", law);
    r.number(*s, "shape", "scheme", cfg.scheme.shape);
    r.string(*s, "order", "scheme", order);
    if (auto l = parse_law(law)) {
      cfg.scheme.law = *l;
    } else {
      r.fail("scheme.time_law", "expected exponential, gamma or uniform_positive, got '" + law + "'");
    }
    if (auto o = parse_order(order)) {
      cfg.scheme.order = *o;
    } else {
      r.fail("scheme.order", "expected fixed or permuted, got '" + order + "'");
    }
    if (!(cfg.scheme.h > 0.0)) r.fail("scheme.h", "must be positive");
    if (!(cfg.scheme.shape > 0.0)) r.fail("scheme.shape", "must be positive");
  }

  if (const json* s = r.section(root, "run", "", {"cycles", "samples", "seed", "burn_in", "record_every", "batches"})) {
    r.count(*s, "cycles", "run", cfg.run.cycles);
    r.count(*s, "samples", "run", cfg.run.samples);
    r.count(*s, "seed", "run", cfg.run.seed);
    if (auto it = s->find("burn_in"); it != s->end() && !it->is_null()) {
      std::size_t b = 0;
      r.count(*s, "burn_in", "run", b);
      cfg.run.burn_in = b;
    }
    r.count(*s, "record_every", "run", cfg.run.record_every);
    r.count(*s, "batches", "run", cfg.run.batches);
    if (cfg.run.cycles < 1) r.fail("run.cycles", "must be at least 1");
    if (cfg.run.samples < 2) r.fail("run.samples", "must be at least 2");
    if (cfg.run.record_every < 1) r.fail("run.record_every", "must be at least 1");
    if (cfg.run.batches < 2) r.fail("run.batches", "must be at least 2");
    if (cfg.run.burn_in && *cfg.run.burn_in >= cfg.run.cycles) r.fail("run.burn_in", "must be below run.cycles");
  }

  if (const json* s = r.section(root, "initial", "", {"state", "second_state", "scale", "unit_norm"})) {
    r.numbers(*s, "state", "initial", cfg.initial.state);
    r.numbers(*s, "second_state", "initial", cfg.initial.second_state);
    r.number(*s, "scale", "initial", cfg.initial.scale);
    r.boolean(*s, "unit_norm", "initial", cfg.initial.unit_norm);
    check_state(r, cfg.initial.state, dim, "initial.state");
    check_state(r, cfg.initial.second_state, dim, "initial.second_state");
    if (!(cfg.initial.scale > 0.0)) r.fail("initial.scale", "must be positive");
  }

  if (const json* s = r.section(root, "study", "",
                                {"t", "h_grid", "m_list", "observables", "slope_min", "slope_max", "min_reduction",
                                 "threshold", "oracle_samples", "radii", "points", "variant", "theta"})) {
    auto& st = cfg.study;
    r.number(*s, "t", "study", st.t);
    r.numbers(*s, "h_grid", "study", st.h_grid);
    r.counts(*s, "m_list", "study", st.m_list);
    r.strings(*s, "observables", "study", st.observables);
    r.number(*s, "slope_min", "study", st.slope_min);
    r.number(*s, "slope_max", "study", st.slope_max);
    r.number(*s, "min_reduction", "study", st.min_reduction);
    r.number(*s, "threshold", "study", st.threshold);
    r.count(*s, "oracle_samples", "study", st.oracle_samples);
    r.numbers(*s, "radii", "study", st.radii);
    r.count(*s, "points", "study", st.points);
    r.string(*s, "variant", "study", st.variant);
    r.number(*s, "theta", "study", st.theta);

    if (!(st.t > 0.0)) r.fail("study.t", "must be positive");
    if (st.h_grid.empty()) r.fail("study.h_grid", "must not be empty");
    for (std::size_t i = 0; i < st.h_grid.size(); ++i) {
      const double h = st.h_grid[i];
      const std::string p = "study.h_grid[" + std::to_string(i) + "]";
      if (!(h > 0.0)) {
        r.fail(p, "must be positive");
      } else if (st.t > 0.0) {
        const double m = std::round(st.t / h);
        if (m < 1.0 || std::abs(m * h - st.t) > 1e-9 * st.t) r.fail(p, "does not divide study.t");
      }
    }
    if (st.m_list.empty()) r.fail("study.m_list", "must not be empty");
    for (std::size_t i = 0; i < st.m_list.size(); ++i) {
      if (st.m_list[i] < 1 || (i > 0 && st.m_list[i] <= st.m_list[i - 1])) {
        r.fail("study.m_list", "must be positive and strictly increasing");
        break;
      }
    }
    if (st.observables.empty()) r.fail("study.observables", "must not be empty");
    for (std::size_t i = 0; i < st.observables.size(); ++i) {
      try {
        parse_observable(st.observables[i], dim);
      } catch (const Error& e) {
        r.fail("study.observables[" + std::to_string(i) + "]", e.what());
      }
    }
    if (!(st.slope_min < st.slope_max)) r.fail("study.slope_min", "must be below study.slope_max");
    if (!(st.min_reduction > 0.0)) r.fail("study.min_reduction", "must be positive");
    if (!(st.threshold > 0.0)) r.fail("study.threshold", "must be positive");
    if (st.oracle_samples < 2) r.fail("study.oracle_samples", "must be at least 2");
    for (std::size_t i = 0; i < st.radii.size(); ++i)
      if (!(st.radii[i] > 0.0)) r.fail("study.radii[" + std::to_string(i) + "]", "must be positive");
    if (st.points < 1) r.fail("study.points", "must be at least 1");
    if (!euler2d::parse_variant(st.variant)) r.fail("study.variant", "expected aaa, abb, bab or bba");
  }

  if (const json* s = r.section(root, "integrator", "", {"rel_tol", "abs_tol", "max_steps"})) {
    r.number(*s, "rel_tol", "integrator", cfg.integrator.rel_tol);
    r.number(*s, "abs_tol", "integrator", cfg.integrator.abs_tol);
    r.count(*s, "max_steps", "integrator", cfg.integrator.max_steps);
    try {
      cfg.integrator.validate();
    } catch (const Error& e) {
      r.fail("integrator", e.what());
    }
  }

  // Requirements of the individual experiments.
  const bool euler = std::holds_alternative<euler2d::EulerSpec>(cfg.model);
  const bool conservative = is_conservative(cfg.model);
  switch (cfg.kind) {
    case ExperimentKind::ergodic:
      if (!conservative) r.fail("model.conservative", "the ergodic experiment needs a conservative model");
      if (cfg.run.burn_in.value_or(cfg.run.cycles / 5) + cfg.run.batches > cfg.run.cycles) {
        r.fail("run.cycles", "too few cycles for the burn-in and batches");
      }
      break;
    case ExperimentKind::bracket:
      if (!euler || conservative) r.fail("model", "the bracket experiment needs a forced euler2d model");
      break;
    case ExperimentKind::lyapunov:
      if (conservative) r.fail("model.conservative", "the lyapunov experiment needs a forced model");
      break;
    case ExperimentKind::control_demo:
      if (!euler) r.fail("model.kind", "control-demo needs an euler2d model");
      break;
    default:
      break;
  }

  if (!r.errors.empty()) return {std::nullopt, r.errors};
  return {cfg, {}};
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = to_string(cfg.kind);
  if (const auto* ls = std::get_if<lorenz96::LorenzSpec>(&cfg.model)) {
    j["model"] = {{"kind", "lorenz96"},
                  {"n", ls->n},
                  {"conservative", ls->conservative},
                  {"nu", ls->nu},
                  {"forcing", ls->forcing}};
  } else {
    const auto& es = std::get<euler2d::EulerSpec>(cfg.model);
    j["model"] = {{"kind", "euler2d"},
                  {"N", es.N},
                  {"conservative", es.conservative},
                  {"nu", es.nu},
                  {"dissipation", euler2d::to_string(es.dissipation)},
                  {"forcing", es.forcing}};
  }
  j["scheme"] = {{"h", cfg.scheme.h},
                 {"time_law", to_string(cfg.scheme.law)},
                 {"shape", cfg.scheme.shape},
                 {"order", to_string(cfg.scheme.order)}};
  j["run"] = {{"cycles", cfg.run.cycles},
              {"samples", cfg.run.samples},
              {"seed", cfg.run.seed},
              {"burn_in", cfg.run.burn_in ? json(*cfg.run.burn_in) : json(nullptr)},
              {"record_every", cfg.run.record_every},
              {"batches", cfg.run.batches}};
  j["initial"] = {{"state", cfg.initial.state},
                  {"second_state", cfg.initial.second_state},
                  {"scale", cfg.initial.scale},
                  {"unit_norm", cfg.initial.unit_norm}};
  const auto& st = cfg.study;
  j["study"] = {{"t", st.t},
                {"h_grid", st.h_grid},
                {"m_list", st.m_list},
                {"observables", st.observables},
                {"slope_min", st.slope_min},
                {"slope_max", st.slope_max},
                {"min_reduction", st.min_reduction},
                {"threshold", st.threshold},
                {"oracle_samples", st.oracle_samples},
                {"radii", st.radii},
                {"points", st.points},
                {"variant", st.variant},
                {"theta", st.theta}};
  j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                     {"abs_tol", cfg.integrator.abs_tol},
                     {"max_steps", cfg.integrator.max_steps}};
  return j;
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &tree;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw UsageError("--set: empty component in '" + path + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw UsageError("--set: '" + parts[i] + "' in '" + path + "' is not a section");
    node = &next;
  }
  (*node)[parts.back()] = value;
}

}  // namespace rsplit::cli
