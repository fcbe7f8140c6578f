#include "kgflock/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json report_json(const CertificateReport& r) {
  json j;
  j["name"] = r.name;
  j["passed"] = r.passed;
  j["worst_margin"] = r.worst_margin;
  j["worst_time"] = optional_number(r.worst_time);
  j["worst_node"] = r.worst_node ? json(*r.worst_node) : json(nullptr);
  j["checked"] = r.checked;
  j["violations"] = r.violations;
  j["witness"] = r.witness;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

json config_echo(const RunConfig& config) {
  json echo = json::object();
  for (const auto& [k, v] : config.echo) echo[k] = v;
  return echo;
}

std::optional<std::size_t> first_row_outside(const Trajectory& tr, std::initializer_list<Phase> phases) {
  for (std::size_t row = 0; row < tr.size(); ++row)
    if (std::find(phases.begin(), phases.end(), tr.phase(row)) == phases.end()) return row;
  return std::nullopt;
}

CertificateReport flock_report(const CertificationContext& ctx, const Trajectory& tr) {
  CertificateReport r;
  r.name = "terminal_flock";
  if (tr.empty()) {
    r.passed = false;
    r.witness = "empty trajectory";
    return r;
  }
  const std::size_t last = tr.size() - 1;
  const State s = tr.state(last);
  const FlockTarget* target = ctx.target ? &*ctx.target : nullptr;
  const FlockStatus status = detect_flock(ctx.lattice, ctx.params, s, target, ctx.flock_tol);
  const double worst = std::max(status.velocity_residual, target ? status.shape_residual : 0.0);
  r.checked = 1;
  r.worst_time = s.t;
  r.worst_margin = ctx.flock_tol - worst;
  bool motion_ok = status.motion == FlockMotion::Moving;
  if (target)
    motion_ok = target->kind == FlockKind::Stationary ? status.motion == FlockMotion::Stationary
                                                     : status.motion == FlockMotion::Moving;
  r.passed = motion_ok && worst < ctx.flock_tol;
  r.violations = r.passed ? 0 : 1;
  std::ostringstream w;
  w.precision(17);
  w << "velocity residual " << status.velocity_residual << ", shape residual "
    << status.shape_residual << " at t=" << s.t;
  r.witness = w.str();
  return r;
}

// max |Delta x| <= eps when the flock phases begin (thm1 only).
CertificateReport settle_report(const CertificationContext& ctx, const Trajectory& tr) {
  CertificateReport r;
  r.name = "shape_at_T2";
  const auto row = first_row_outside(tr, {Phase::Damp, Phase::Freeze, Phase::Accelerate});
  if (!row) {
    r.passed = false;
    r.witness = "trajectory never leaves the acceleration phase";
    return r;
  }
  const NodeField lap = discrete_laplacian(ctx.lattice, tr.x(*row));
  r.worst_margin = ctx.epsilon;
  for (std::size_t l = 0; l < lap.size(); ++l) {
    ++r.checked;
    const double margin = ctx.epsilon - std::abs(lap[l]);
    if (!(margin >= 0.0)) ++r.violations;
    if (margin < r.worst_margin || r.checked == 1) {
      r.worst_margin = margin;
      r.worst_node = l;
      r.worst_time = tr.time(*row);
      std::ostringstream w;
      w.precision(17);
      w << "|Delta x| = " << std::abs(lap[l]) << " at t=" << tr.time(*row) << " node=" << l;
      r.witness = w.str();
    }
  }
  r.passed = r.violations == 0;
  return r;
}

struct RunFailure {
  std::string kind;
  std::string message;
};

}  // namespace

std::vector<CertificateReport> certify_trajectory(const CertificationContext& ctx,
                                                  const Trajectory& tr) {
  std::vector<CertificateReport> reports;
  reports.push_back(check_control_bound(tr, ctx.params.bound()));
  reports.push_back(check_lyapunov_monotone(ctx.lattice, tr));
  reports.push_back(check_dissipation(ctx.lattice, ctx.params, ctx.variant, tr));

  PhaseSchedule sched;
  sched.epsilon = ctx.epsilon;
  const auto t0 = first_row_outside(tr, {Phase::Damp});
  const auto t1 = first_row_outside(tr, {Phase::Damp, Phase::Freeze});
  if (t0 && t1) {
    sched.at_T0 = tr.state(*t0);
    sched.at_T1 = tr.state(*t1);
  }
  reports.push_back(check_freeze_drift(sched));

  if (ctx.target) {
    reports.push_back(compatibility_check(ctx.lattice, ctx.params.bound(), ctx.target->shape, true));
  } else {
    reports.push_back(settle_report(ctx, tr));
  }
  reports.push_back(flock_report(ctx, tr));
  return reports;
}

int run(const RunConfig& config, std::ostream& log, bool quiet) {
  if (config.mission == MissionChoice::Hjb) return run_hjb(config, log, quiet);

  Lattice lattice(1, 1);
  std::optional<Params> params;
  State initial;
  std::optional<FlockTarget> target;
  MissionOptions options;
  double epsilon = 0.0;
  try {
    validate_config(config);
    lattice = make_lattice(config);
    params = make_params(config);
    initial = make_initial(config, lattice, *params);
    target = make_target(config, lattice, *params);
    options = make_mission_options(config);
    epsilon = resolved_epsilon(config);
  } catch (const Error& e) {
    log << "error: configuration: " << e.what() << "\n";
    return kExitConfigError;
  }

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);

  json summary;
  summary["version"] = KGFLOCK_VERSION;
  summary["mission"] = mission_name(config.mission);
  summary["config"] = config_echo(config);
  summary["lattice"] = {{"n", config.n}, {"D", config.D}, {"N", lattice.size()}};
  summary["params"] = {{"alpha", params->alpha()},        {"beta", params->beta()},
                       {"M", params->bound()},            {"gamma", params->gamma()},
                       {"epsilon", epsilon},              {"a1", params->low_speed()},
                       {"a2", params->high_speed()},      {"flock_speed", params->flock_speed()}};
  summary["target"] = target ? json(target->shape) : json(nullptr);

  std::optional<MissionResult> result;
  std::optional<RunFailure> failure;
  try {
    result = run_mission(lattice, *params, initial, target, options);
  } catch (const AdmissibilityError& e) {
    failure = RunFailure{"admissibility", e.what()};
  } catch (const Phase1TimeoutError& e) {
    failure = RunFailure{"phase1_timeout", e.what()};
  } catch (const HorizonSearchError& e) {
    failure = RunFailure{"horizon_search", e.what()};
  } catch (const PreconditionError& e) {
    failure = RunFailure{"precondition", e.what()};
  } catch (const ParameterError& e) {
    log << "error: configuration: " << e.what() << "\n";
    return kExitConfigError;
  }

  if (failure) {
    summary["status"] = "control_failure";
    summary["failure"] = {{"kind", failure->kind}, {"message", failure->message}};
    summary["exit_code"] = static_cast<int>(kExitControlFailure);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    log << "error: " << failure->kind << ": " << failure->message << "\n";
    return kExitControlFailure;
  }

  {
    std::ofstream csv(dir / "trajectory.csv", std::ios::binary);
    if (!csv) throw Error("cannot write trajectory.csv");
    write_csv(result->trajectory, csv);
  }

  const CertificationContext ctx{lattice, *params, config.control_variant, config.mission, epsilon,
                                 target};
  const auto reports = certify_trajectory(ctx, result->trajectory);
  std::string cert_text;
  bool all_pass = true;
  json certs = json::array();
  for (const auto& r : reports) {
    cert_text += format_report(r) + "\n";
    all_pass = all_pass && r.passed;
    certs.push_back(report_json(r));
  }
  write_text(dir / "certificates.txt", cert_text);

  const auto& s = result->schedule;
  summary["schedule"] = {{"T0", optional_number(s.T0)}, {"T1", optional_number(s.T1)},
                         {"T2", optional_number(s.T2)}, {"T3", optional_number(s.T3)},
                         {"T4", optional_number(s.T4)}, {"y_bar", s.y_bar},
                         {"flock_speed", s.flock_speed}};
  summary["offset"] = result->offset;
  summary["max_control"] = result->max_control;
  json phases = json::array();
  for (const auto& p : result->phases)
    phases.push_back({{"phase", std::string(phase_name(p.phase))}, {"t_begin", p.t_begin},
                      {"t_end", p.t_end}, {"V_min", p.v_min}, {"V_max", p.v_max},
                      {"steps", p.steps}});
  summary["phases"] = phases;
  summary["certificates"] = certs;
  summary["status"] = all_pass ? "pass" : "certificate_failure";
  const int code = all_pass ? kExitOk : kExitCertificateFailure;
  summary["exit_code"] = code;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  emit_plots(dir);

  if (!quiet) {
    log << "mission " << mission_name(config.mission) << ": T0=" << format_double(s.T0.value_or(NAN))
        << " T1=" << format_double(s.T1.value_or(NAN)) << " T2=" << format_double(s.T2.value_or(NAN));
    if (s.T4) log << " T3=" << format_double(*s.T3) << " T4=" << format_double(*s.T4);
    log << " max|u|=" << format_double(result->max_control) << "\n";
    for (const auto& r : reports)
      log << "  " << r.name << ": " << (r.passed ? "pass" : "fail") << "\n";
  }
  if (!all_pass) log << "error: certificate failure, see " << (dir / "certificates.txt").string() << "\n";
  return code;
}

int run_hjb(const RunConfig& config, std::ostream& log, bool quiet) {
  Lattice lattice(1, 1);
  std::optional<Params> params;
  std::optional<ReducedGrid> grid;
  State initial;
  try {
    lattice = make_lattice(config);
    params = make_params(config);
    grid = make_hjb_grid(config, lattice, *params);
    initial = make_initial(config, lattice, *params);
    if (!(config.hjb_tol > 0.0)) throw ParameterError("hjb_tol must be > 0");
    if (config.hjb_dt && !(*config.hjb_dt > 0.0)) throw ParameterError("hjb_dt must be > 0");
  } catch (const Error& e) {
    log << "error: configuration: " << e.what() << "\n";
    return kExitConfigError;
  }
  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);

  json summary;
  summary["version"] = KGFLOCK_VERSION;
  summary["mission"] = "hjb";
  summary["config"] = config_echo(config);
  summary["lattice"] = {{"n", config.n}, {"D", config.D}, {"N", lattice.size()}};

  std::optional<ValueField> field;
  try {
    field = value_iteration(*grid, *params, make_hjb_options(config));
  } catch (const ConvergenceError& e) {
    summary["status"] = "convergence_failure";
    summary["failure"] = {{"message", e.what()}, {"sweeps", e.sweeps()}, {"residual", e.residual()}};
    summary["exit_code"] = static_cast<int>(kExitControlFailure);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    log << "error: " << e.what() << "\n";
    return kExitControlFailure;
  }

  {
    std::ofstream out(dir / "value_field.txt", std::ios::binary);
    field->write(out);
  }
  const MasterState start{initial.x, initial.v};
  const auto anchor = grid->reduce(start);
  {
    std::ofstream out(dir / "value_slice.csv", std::ios::binary);
    const std::size_t d = grid->dimension();
    field->write_slice(out, anchor, d >= 2 ? d - 2 : 0, d - 1);
  }

  const std::size_t nearest = grid->nearest(anchor);
  json axes = json::array();
  for (const auto& a : grid->axes()) axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"points", a.points}});
  summary["grid"] = {{"axes", axes}, {"cell_diameter", grid->cell_diameter()}};
  summary["value"] = {{"dt", field->dt()},
                      {"sweeps", field->sweeps()},
                      {"residual", field->residual()},
                      {"lipschitz_estimate", field->lipschitz_estimate()},
                      {"start", anchor},
                      {"nearest_point", grid->point(nearest)},
                      {"U_nearest", field->at(nearest)},
                      {"U_interpolated", field->interpolate(anchor)}};
  if (lattice.size() == 1) summary["value"]["oracle"] = bang_bang_oracle(*params, initial.v[0]);
  summary["status"] = "pass";
  summary["exit_code"] = static_cast<int>(kExitOk);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  if (!quiet)
    log << "hjb: " << field->sweeps() << " sweeps, U(start) = " << format_double(field->at(nearest))
        << "\n";
  return kExitOk;
}

int certify(const std::filesystem::path& dir, std::ostream& out) {
  json summary;
  Trajectory tr;
  RunConfig config;
  try {
    std::ifstream sin(dir / "summary.json");
    if (!sin) throw Error("cannot open " + (dir / "summary.json").string());
    summary = json::parse(sin);
    std::ifstream tin(dir / "trajectory.csv");
    if (!tin) throw Error("cannot open " + (dir / "trajectory.csv").string());
    tr = read_csv(tin);
    for (const auto& [k, v] : summary.at("config").items()) apply_setting(config, k, v.get<std::string>());
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const Lattice lattice = make_lattice(config);
  const Params params = make_params(config);
  std::optional<FlockTarget> target;
  if (!summary.at("target").is_null()) {
    const FlockKind kind = config.mission == MissionChoice::Thm3 ? FlockKind::Stationary : FlockKind::Moving;
    target = FlockTarget::create(lattice, params.bound(), kind, summary.at("target").get<NodeField>());
  }
  const CertificationContext ctx{lattice, params, config.control_variant, config.mission,
                                 summary.at("params").at("epsilon").get<double>(), target};
  const auto reports = certify_trajectory(ctx, tr);
  std::string text;
  bool all_pass = true;
  for (const auto& r : reports) {
    text += format_report(r) + "\n";
    all_pass = all_pass && r.passed;
  }
  out << text;
  std::ifstream recorded(dir / "certificates.txt", std::ios::binary);
  if (recorded) {
    std::ostringstream prior;
    prior << recorded.rdbuf();
    out << "matches_recorded: " << (prior.str() == text ? "yes" : "no") << "\n";
  }
  return all_pass ? kExitOk : kExitCertificateFailure;
}

int sweep(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_root,
          const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& log,
          bool quiet) {
  std::vector<int> codes(configs.size(), kExitOk);
  std::vector<std::string> logs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      std::ostringstream local;
      try {
        std::ifstream in(configs[i]);
        if (!in) throw ParseError("cannot open config file " + configs[i].string(), 0);
        std::ostringstream text;
        text << in.rdbuf();
        RunConfig config = parse_config(text.str(), configs[i].parent_path());
        for (const auto& [k, v] : overrides) apply_setting(config, k, v);
        config.output_dir = out_root / configs[i].stem();
        codes[i] = run(config, local, quiet);
      } catch (const Error& e) {
        local << "error: configuration: " << e.what() << "\n";
        codes[i] = kExitConfigError;
      }
      logs[i] = local.str();
    }
  };
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(configs.size(), std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int worst = kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    log << configs[i].string() << ": exit " << codes[i] << "\n" << logs[i];
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

}  // namespace kgflock
