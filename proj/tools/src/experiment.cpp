#include "experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rsplit/diagnostics.hpp"
#include "rsplit/errors.hpp"
#include "rsplit/triad_control.hpp"

#ifndef RSPLIT_VERSION
#define RSPLIT_VERSION "unknown"
#endif

namespace rsplit::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitialStream = 0;
constexpr std::uint64_t kSecondStream = 1;
constexpr std::uint64_t kExperimentStream = 2;
constexpr std::uint64_t kPointStreamBase = 10;

constexpr double kConservationTolerance = 1e-7;
constexpr double kMinRankGap = 1e3;
constexpr double kDeterminantTolerance = 1e-8;
constexpr double kBracketTolerance = 1e-12;
constexpr double kZeroingTolerance = 1e-9;
constexpr double kAngleTolerance = 1e-10;

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(double v) { return format_double(v); }
template <class T>
std::string fmt(const std::optional<T>& v) {
  return v ? fmt(*v) : std::string();
}

std::uint64_t experiment_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.run.seed, kExperimentStream); }

StateVector random_state(const ExperimentConfig& cfg, Rng& rng) {
  StateVector x{kind(cfg.model), std::vector<double>(dimension(cfg.model))};
  for (double& v : x.coords) v = cfg.initial.scale * rng.normal();
  if (cfg.initial.unit_norm) {
    const double n = x.norm();
    for (double& v : x.coords) v *= cfg.initial.scale / n;
  }
  return x;
}

StateVector random_state(const ExperimentConfig& cfg, std::uint64_t stream) {
  Rng rng(derive_seed(cfg.run.seed, stream));
  return random_state(cfg, rng);
}

/// Study point i: the configured state for i = 0 when given, otherwise a
/// random state from its own substream.
StateVector study_point(const ExperimentConfig& cfg, std::size_t i) {
  if (i == 0 && !cfg.initial.state.empty()) return {kind(cfg.model), cfg.initial.state};
  return random_state(cfg, kPointStreamBase + i);
}

std::string triad_label(const euler2d::Triad& t) {
  return euler2d::to_string(t.j) + euler2d::to_string(t.k) + euler2d::to_string(t.l);
}

SplittingScheme scheme_for(const ExperimentConfig& cfg) {
  return build_scheme(cfg.model, cfg.scheme.time_law(), cfg.scheme.order);
}

// ---- kinds -------------------------------------------------------------------

ExperimentResult simulate(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const StateVector x0 = initial_state(cfg, kInitialStream);
  ChainRunConfig run{cfg.run.cycles, experiment_seed(cfg), cfg.run.record_every};
  const Trajectory traj = run_chain(scheme_for(cfg), x0, run);

  Table t;
  t.header = {"cycle", "leading_time"};
  for (auto& name : coordinate_names(cfg.model)) t.header.push_back(name);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<std::string> row{fmt(traj.cycles[i]), fmt(traj.leading_time[i])};
    for (double v : traj.states[i]) row.push_back(fmt(v));
    t.rows.push_back(std::move(row));
  }
  r.tables["trajectory.csv"] = std::move(t);

  r.summary["records"] = traj.size();
  if (is_conservative(cfg.model)) {
    const ConservationDrift d = conservation_drift(cfg.model, traj);
    const double worst = std::max({d.norm, d.energy, d.enstrophy});
    r.summary["drift"] = {{"norm", d.norm}, {"energy", d.energy}, {"enstrophy", d.enstrophy}};
    r.summary["check"] = "relative drift of the invariants below 1e-7";
    r.pass = worst < kConservationTolerance;
  } else {
    const LyapunovReport l = lyapunov_pathwise(cfg.model, traj);
    r.summary["lyapunov_min_slack"] = l.min_slack;
    r.summary["check"] = "pathwise Lyapunov bound at every record";
    r.pass = l.pathwise_holds;
  }
  return r;
}

void add_convergence_summary(ExperimentResult& r, const ConvergenceReport& rep) {
  r.summary["inconclusive"] = rep.inconclusive;
  r.summary["reference_dominant"] = rep.reference_dominant;
  r.summary["reference_error"] = rep.reference_error;
  r.summary["notes"] = rep.notes;
}

ExperimentResult weak_converge(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const StateVector x0 = initial_state(cfg, kInitialStream);
  std::vector<NamedObservable> obs;
  for (const auto& id : cfg.study.observables) obs.push_back(parse_observable(id, dimension(cfg.model)));

  WeakStudyConfig wc;
  wc.t = cfg.study.t;
  wc.h_grid = cfg.study.h_grid;
  wc.samples = cfg.run.samples;
  wc.seed = experiment_seed(cfg);
  wc.integrator = cfg.integrator;
  const ConvergenceReport rep =
      weak_error_study(cfg.model, cfg.scheme.time_law(), cfg.scheme.order, obs, x0, wc);

  Table errors;
  errors.header = {"h", "cycles", "observable", "estimate", "reference", "error", "standard_error", "included"};
  for (const auto& p : rep.points) {
    const auto cycles = static_cast<std::size_t>(std::llround(cfg.study.t / p.param));
    errors.rows.push_back({fmt(p.param), fmt(cycles), p.observable, fmt(p.estimate), fmt(p.reference),
                           fmt(p.error), fmt(p.standard_error), fmt(p.included)});
  }
  Table fits;
  fits.header = {"observable", "slope", "points_used", "monotone"};
  bool slopes_ok = !rep.fits.empty();
  json slopes = json::object();
  for (const auto& f : rep.fits) {
    fits.rows.push_back({f.observable, fmt(f.slope), fmt(f.points_used), fmt(f.monotone)});
    slopes[f.observable] = f.slope ? json(*f.slope) : json(nullptr);
    slopes_ok = slopes_ok && f.slope && *f.slope >= cfg.study.slope_min && *f.slope <= cfg.study.slope_max;
  }
  r.tables["weak_errors.csv"] = std::move(errors);
  r.tables["weak_fit.csv"] = std::move(fits);

  add_convergence_summary(r, rep);
  r.summary["slopes"] = slopes;
  r.summary["check"] = "every slope within [slope_min, slope_max] and the reference error dominated";
  r.pass = slopes_ok && rep.reference_dominant;
  return r;
}

ExperimentResult pathwise_converge(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const StateVector x0 = initial_state(cfg, kInitialStream);
  PathwiseStudyConfig pc;
  pc.t = cfg.study.t;
  pc.m_list = cfg.study.m_list;
  pc.seed = experiment_seed(cfg);
  pc.integrator = cfg.integrator;
  const ConvergenceReport rep = pathwise_study(cfg.model, x0, pc);

  Table t;
  t.header = {"m", "cycles", "error"};
  for (const auto& p : rep.points) {
    const auto m = static_cast<std::size_t>(p.param);
    t.rows.push_back({fmt(m), fmt(m * m), fmt(p.error)});
  }
  r.tables["pathwise.csv"] = std::move(t);

  add_convergence_summary(r, rep);
  r.summary["strictly_decreasing"] = rep.strictly_decreasing;
  r.summary["reduction"] = rep.reduction;
  r.summary["check"] = "errors strictly decreasing and error(first) / error(last) >= min_reduction";
  r.pass = rep.strictly_decreasing && rep.reduction >= cfg.study.min_reduction;
  return r;
}

ExperimentResult ergodic(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const StateVector x0 = initial_state(cfg, kInitialStream);
  ErgodicConfig ec;
  ec.cycles = cfg.run.cycles;
  ec.burn_in = cfg.run.burn_in;
  ec.batches = cfg.run.batches;
  ec.seed = experiment_seed(cfg);
  ec.threshold = cfg.study.threshold;
  ec.oracle_samples = cfg.study.oracle_samples;

  ErgodicReport rep;
  if (const auto* ls = std::get_if<lorenz96::LorenzSpec>(&cfg.model)) {
    rep = ergodic_moment_test(*ls, x0, cfg.scheme.time_law(), ec);
  } else {
    const auto& es = std::get<euler2d::EulerSpec>(cfg.model);
    const StateVector x1 = initial_state(cfg, kSecondStream);
    rep = two_run_agreement(es, x0, x1, cfg.scheme.time_law(), ec);
    r.summary["second_state"] = x1.coords;
  }

  Table t;
  t.header = {"coordinate", "order", "estimate", "standard_error", "reference", "reference_standard_error", "z",
              "agrees"};
  double max_z = 0.0;
  for (const auto& m : rep.moments) {
    t.rows.push_back({fmt(m.coordinate), std::to_string(m.order), fmt(m.estimate.mean),
                      fmt(m.estimate.standard_error), fmt(m.reference.mean), fmt(m.reference.standard_error),
                      fmt(m.z), fmt(m.agrees)});
    max_z = std::max(max_z, m.z);
  }
  r.tables["moments.csv"] = std::move(t);

  r.summary["test"] = rep.kind;
  r.summary["burn_in"] = rep.burn_in;
  r.summary["max_z"] = max_z;
  r.summary["notes"] = rep.notes;
  r.summary["check"] = "every moment within threshold combined standard errors";
  r.pass = rep.pass;
  return r;
}

ExperimentResult ranks(const ExperimentConfig& cfg) {
  ExperimentResult r;
  Table t;
  t.header = {"point", "matrix", "rows", "cols", "rank", "expected_rank", "gap", "determinant",
              "determinant_formula", "singular_values"};
  bool ok = true;
  std::size_t matrices = 0;
  for (std::size_t i = 0; i < cfg.study.points; ++i) {
    const StateVector x = study_point(cfg, i);
    for (const auto& rep : rank_tests(cfg.model, x.coords)) {
      std::string sv;
      for (std::size_t k = 0; k < rep.singular_values.size(); ++k)
        sv += (k ? ";" : "") + fmt(rep.singular_values[k]);
      t.rows.push_back({fmt(i), rep.id, fmt(rep.rows), fmt(rep.cols), fmt(rep.rank), fmt(rep.expected_rank),
                        fmt(rep.gap), fmt(rep.determinant), fmt(rep.determinant_formula), sv});
      ++matrices;
      if (rep.expected_rank) ok = ok && rep.rank == *rep.expected_rank && rep.gap >= kMinRankGap;
      if (rep.determinant && rep.determinant_formula) {
        const double scale = std::max(std::abs(*rep.determinant_formula), std::abs(*rep.determinant));
        ok = ok && std::abs(*rep.determinant - *rep.determinant_formula) <= kDeterminantTolerance * scale;
      }
    }
  }
  r.tables["ranks.csv"] = std::move(t);
  r.summary["matrices"] = matrices;
  r.summary["check"] = "expected ranks with gap >= 1e3; determinants match the closed form";
  r.pass = ok;
  return r;
}

ExperimentResult bracket(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const auto& es = std::get<euler2d::EulerSpec>(cfg.model);
  const euler2d::Lattice lat(es.N);
  const auto triads = euler2d::enumerate_triads(lat);
  Table t;
  t.header = {"point", "triad", "variant", "residual"};
  double worst = 0.0;
  for (std::size_t i = 0; i < cfg.study.points; ++i) {
    const StateVector x = study_point(cfg, i);
    for (const auto& tr : triads) {
      for (auto v : euler2d::kVariants) {
        const double res = bracket_check(es, tr, v, x.coords);
        worst = std::max(worst, res);
        t.rows.push_back({fmt(i), triad_label(tr), euler2d::to_string(v), fmt(res)});
      }
    }
  }
  r.tables["brackets.csv"] = std::move(t);
  r.summary["max_residual"] = worst;
  r.summary["check"] = "closed-form bracket equals the Jacobian commutator to 1e-12";
  r.pass = worst < kBracketTolerance;
  return r;
}

ExperimentResult lyapunov(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const StateVector x0 = initial_state(cfg, kInitialStream);
  LyapunovConfig lc;
  lc.cycles = cfg.run.cycles;
  lc.seed = experiment_seed(cfg);
  lc.drift.radii = cfg.study.radii;
  lc.drift.samples = cfg.run.samples;
  const LyapunovReport rep = lyapunov_check(cfg.model, cfg.scheme.time_law(), x0, lc);

  Table t;
  t.header = {"radius", "mean_norm", "standard_error", "bound", "holds"};
  for (const auto& d : rep.drift)
    t.rows.push_back({fmt(d.radius), fmt(d.norm_after.mean), fmt(d.norm_after.standard_error), fmt(d.bound),
                      fmt(d.holds)});
  r.tables["lyapunov_drift.csv"] = std::move(t);

  r.summary["cycles_checked"] = rep.cycles_checked;
  r.summary["pathwise_holds"] = rep.pathwise_holds;
  r.summary["min_slack"] = rep.min_slack;
  r.summary["worst_cycle"] = rep.worst_cycle;
  r.summary["gamma"] = rep.gamma;
  r.summary["K"] = rep.K;
  r.summary["drift_holds"] = rep.drift_holds;
  r.summary["check"] = "pathwise bound at every cycle and drift bound at every radius";
  r.pass = rep.pathwise_holds && rep.drift_holds;
  return r;
}

int sgn(double v) { return v >= 0.0 ? 1 : -1; }

ExperimentResult control_demo(const ExperimentConfig& cfg) {
  using namespace triad_control;
  ExperimentResult r;
  const auto& es = std::get<euler2d::EulerSpec>(cfg.model);
  const euler2d::Lattice lat(es.N);
  const auto triads = euler2d::enumerate_triads(lat);
  const euler2d::Variant v = *euler2d::parse_variant(cfg.study.variant);

  Table t;
  t.header = {"point", "triad", "variant", "operation", "time", "residual", "ok", "note"};
  std::size_t done = 0, skipped = 0, failed = 0;
  auto record = [&](std::size_t i, const euler2d::Triad& tr, const std::string& op, std::optional<double> time,
                    std::optional<double> res, std::optional<bool> ok, const std::string& note) {
    t.rows.push_back({fmt(i), triad_label(tr), euler2d::to_string(v), op, fmt(time), fmt(res), fmt(ok), note});
    if (!ok) {
      ++skipped;
    } else {
      ++done;
      if (!*ok) ++failed;
    }
  };

  for (std::size_t i = 0; i < cfg.study.points; ++i) {
    const StateVector x = study_point(cfg, i);
    for (const auto& tr : triads) {
      const TriadOrbitQuery query(tr, v);
      const Vec3 y0 = query.designated(x.coords);
      if (query.distinct_norms) {
        for (Target target : {Target::middle, Target::largest}) {
          const std::string op = target == Target::middle ? "zero-middle" : "zero-largest";
          double tau = 0.0;
          try {
            tau = zeroing_time(x.coords, tr, v, target);
          } catch (const DegenerateOrbitError& e) {
            record(i, tr, op, std::nullopt, std::nullopt, std::nullopt, e.what());
            continue;
          }
          auto q = x.coords;
          euler2d::triad_flow(q, tr, v, tau);
          const Vec3 y = query.designated(q);
          const auto [s, m, l] = query.by_norm;
          const std::size_t hit = target == Target::middle ? m : l;
          const std::size_t other = target == Target::middle ? l : m;
          const double res = std::abs(y[hit]) / std::sqrt(query.slots.system.unweighted(y0));
          const bool ok = res < kZeroingTolerance && sgn(y[s]) == sgn(y0[s]) && sgn(y[other]) == sgn(y0[other]);
          record(i, tr, op, tau, res, ok, ok ? "" : "target not reached or a sign flipped");
        }
      } else {
        const auto pair = query.slots.system.equal_pair();
        const std::size_t fixed = 3 - pair[0] - pair[1];
        double tau = 0.0;
        try {
          tau = pair_rotation_time(x.coords, tr, v, cfg.study.theta);
        } catch (const ZeroRateError& e) {
          record(i, tr, "pair-rotate", std::nullopt, std::nullopt, std::nullopt, e.what());
          continue;
        }
        auto q = x.coords;
        euler2d::triad_flow(q, tr, v, tau);
        const Vec3 y = query.designated(q);
        const double rad = std::hypot(y0[pair[0]], y0[pair[1]]);
        const double res = std::max(std::abs(y[pair[0]] - rad * std::cos(cfg.study.theta)),
                                    std::abs(y[pair[1]] - rad * std::sin(cfg.study.theta))) /
                           std::max(1.0, rad);
        const bool ok = res < kAngleTolerance && y[fixed] == y0[fixed];
        record(i, tr, "pair-rotate", tau, res, ok, ok ? "" : "angle missed or the fixed coordinate moved");
      }
    }
  }
  r.tables["control.csv"] = std::move(t);
  r.summary["operations"] = done;
  r.summary["skipped"] = skipped;
  r.summary["failed"] = failed;
  r.summary["check"] = "every attempted zeroing and rotation hits its target";
  r.pass = failed == 0;
  return r;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw UsageError("write failed for " + path.string());
}

json substreams(std::uint64_t seed) {
  return {{"initial_state", derive_seed(seed, kInitialStream)},
          {"second_state", derive_seed(seed, kSecondStream)},
          {"experiment", derive_seed(seed, kExperimentStream)},
          {"points", "derive_seed(seed, " + std::to_string(kPointStreamBase) + " + i)"}};
}

void write_manifest(const std::filesystem::path& out_dir, json manifest) {
  manifest["rsplit_manifest"] = 1;
  manifest["version"] = toolkit_version();
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

const char* toolkit_version() { return RSPLIT_VERSION; }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string to_csv(const Table& t) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
    out << '\n';
  };
  line(t.header);
  for (const auto& row : t.rows) line(row);
  return out.str();
}

std::vector<std::string> coordinate_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  if (const auto* ls = std::get_if<lorenz96::LorenzSpec>(&spec)) {
    for (std::size_t i = 0; i < ls->n; ++i) names.push_back("x" + std::to_string(i));
    return names;
  }
  const euler2d::Lattice lat(std::get<euler2d::EulerSpec>(spec).N);
  for (const auto& j : lat.all()) {
    names.push_back("a" + euler2d::to_string(j));
    names.push_back("b" + euler2d::to_string(j));
  }
  return names;
}

StateVector initial_state(const ExperimentConfig& cfg, std::uint64_t stream) {
  if (stream == kInitialStream && !cfg.initial.state.empty()) return {kind(cfg.model), cfg.initial.state};
  if (stream == kSecondStream) {
    if (!cfg.initial.second_state.empty()) return {kind(cfg.model), cfg.initial.second_state};
    if (const auto* es = std::get_if<euler2d::EulerSpec>(&cfg.model)) {
      const euler2d::Lattice lat(es->N);
      // Shapes are redrawn from the same stream until one can be rescaled.
      const StateVector first = initial_state(cfg, kInitialStream);
      Rng rng(derive_seed(cfg.run.seed, kSecondStream));
      for (int attempt = 0; attempt < 1000; ++attempt) {
        try {
          return {ModelKind::euler2d, match_invariants(lat, first, random_state(cfg, rng)).coords};
        } catch (const PreconditionError&) {
        }
      }
      throw PreconditionError("no second state with the invariants of the first was found");
    }
  }
  return random_state(cfg, stream);
}

ExperimentResult execute(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::simulate: return simulate(cfg);
    case ExperimentKind::weak_converge: return weak_converge(cfg);
    case ExperimentKind::pathwise_converge: return pathwise_converge(cfg);
    case ExperimentKind::ergodic: return ergodic(cfg);
    case ExperimentKind::ranks: return ranks(cfg);
    case ExperimentKind::bracket: return bracket(cfg);
    case ExperimentKind::lyapunov: return lyapunov(cfg);
    case ExperimentKind::control_demo: return control_demo(cfg);
  }
  throw UsageError("unknown experiment kind");
}

int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  json manifest;
  manifest["experiment"] = to_string(cfg.kind);
  manifest["config"] = to_json(cfg);
  manifest["seed"] = cfg.run.seed;
  manifest["substreams"] = substreams(cfg.run.seed);
  manifest["overrides"] = opts.overrides;
  manifest["errors"] = json::array();
  manifest["tables"] = json::array();

  int code = kExitError;
  try {
    manifest["initial_state"] = initial_state(cfg, kInitialStream).coords;
    ExperimentResult result = execute(cfg);
    for (const auto& [name, table] : result.tables) {
      write_text(opts.out_dir / name, to_csv(table));
      manifest["tables"].push_back(name);
    }
    manifest["summary"] = result.summary;
    code = result.pass ? kExitPass : kExitCheckFailed;
  } catch (const std::exception& e) {
    manifest["errors"].push_back(e.what());
  }
  manifest["status"] = code == kExitPass ? "pass" : code == kExitCheckFailed ? "fail" : "error";
  manifest["exit_code"] = code;
  write_manifest(opts.out_dir, std::move(manifest));
  return code;
}

void write_error_manifest(const std::filesystem::path& out_dir, const std::vector<std::string>& errors,
                          const std::vector<std::string>& overrides) {
  std::filesystem::create_directories(out_dir);
  json manifest;
  manifest["errors"] = errors;
  manifest["overrides"] = overrides;
  manifest["status"] = "error";
  manifest["exit_code"] = kExitError;
  manifest["tables"] = json::array();
  write_manifest(out_dir, std::move(manifest));
}

}  // namespace rsplit::cli
