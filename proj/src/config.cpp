#include "kgflock/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ParameterError(key + ": expected a finite number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ParameterError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 1) throw ParameterError(key + ": expected a positive integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParameterError(key + ": expected true or false, got '" + v + "'");
}

[[noreturn]] void bad_choice(const std::string& key, const std::string& v, const char* allowed) {
  throw ParameterError(key + ": expected one of " + allowed + ", got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

NodeField read_field_line(std::istream& in, const std::filesystem::path& path, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (!trim(line).empty()) return parse_field(line);
  }
  throw ParseError(path.string() + ": missing " + what, 0);
}

}  // namespace

std::string mission_name(MissionChoice mission) {
  switch (mission) {
    case MissionChoice::Thm1: return "thm1";
    case MissionChoice::Thm2: return "thm2";
    case MissionChoice::Thm3: return "thm3";
    case MissionChoice::Hjb: return "hjb";
  }
  return "unknown";
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v,
                   const std::filesystem::path& base) {
  if (key == "n") c.n = static_cast<int>(to_int(key, v));
  else if (key == "D") c.D = static_cast<int>(to_int(key, v));
  else if (key == "alpha") c.alpha = to_double(key, v);
  else if (key == "beta") c.beta = to_double(key, v);
  else if (key == "M") c.M = to_double(key, v);
  else if (key == "gamma") c.gamma = to_double(key, v);
  else if (key == "epsilon") c.epsilon = to_double(key, v);
  else if (key == "mission") {
    if (v == "thm1") c.mission = MissionChoice::Thm1;
    else if (v == "thm2") c.mission = MissionChoice::Thm2;
    else if (v == "thm3") c.mission = MissionChoice::Thm3;
    else if (v == "hjb") c.mission = MissionChoice::Hjb;
    else bad_choice(key, v, "thm1, thm2, thm3, hjb");
  } else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw ParameterError("seed: expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "amplitude") c.amplitude = to_double(key, v);
  else if (key == "velocity_mix") c.velocity_mix = to_bool(key, v);
  else if (key == "initial") {
    if (v == "random") c.initial = InitialKind::Random;
    else if (v == "explicit") c.initial = InitialKind::Explicit;
    else if (v == "file") c.initial = InitialKind::File;
    else bad_choice(key, v, "random, explicit, file");
  } else if (key == "x0") c.x0 = parse_field(v);
  else if (key == "v0") c.v0 = parse_field(v);
  else if (key == "initial_file") c.initial_file = resolve(base, v);
  else if (key == "target") {
    if (v == "sinusoid") c.target = TargetKind::Sinusoid;
    else if (v == "constant") c.target = TargetKind::Constant;
    else if (v == "file") c.target = TargetKind::File;
    else bad_choice(key, v, "sinusoid, constant, file");
  } else if (key == "target_file") c.target_file = resolve(base, v);
  else if (key == "dt") c.dt = to_double(key, v);
  else if (key == "output_dir") c.output_dir = resolve(base, v);
  else if (key == "control_variant") {
    if (v == "standard") c.control_variant = DampingVariant::Standard;
    else if (v == "simple") c.control_variant = DampingVariant::Simple;
    else bad_choice(key, v, "standard, simple");
  } else if (key == "y_bar_rule") {
    if (v == "mean") c.y_bar_rule = MeetingPoint::Mean;
    else if (v == "minimax") c.y_bar_rule = MeetingPoint::Minimax;
    else bad_choice(key, v, "mean, minimax");
  } else if (key == "phase1_timeout") c.phase1_timeout = to_double(key, v);
  else if (key == "horizon_floor") c.horizon_floor = to_double(key, v);
  else if (key == "horizon_cap") c.horizon_cap = to_double(key, v);
  else if (key == "hold_time") c.hold_time = to_double(key, v);
  else if (key == "record_stride") c.record_stride = to_count(key, v);
  else if (key == "direction") c.direction = static_cast<int>(to_int(key, v));
  else if (key == "hjb_resolution") c.hjb_resolution = to_count(key, v);
  else if (key == "hjb_tol") c.hjb_tol = to_double(key, v);
  else if (key == "hjb_max_sweeps") c.hjb_max_sweeps = to_count(key, v);
  else if (key == "hjb_dt") c.hjb_dt = to_double(key, v);
  else if (key == "hjb_position_bound") c.hjb_position_bound = to_double(key, v);
  else if (key == "hjb_velocity_bound") c.hjb_velocity_bound = to_double(key, v);
  else throw ParameterError("unknown key '" + key + "'");

  auto it = std::find_if(c.echo.begin(), c.echo.end(), [&](const auto& kv) { return kv.first == key; });
  if (it == c.echo.end()) c.echo.emplace_back(key, v);
  else it->second = v;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", line_no);
    try {
      apply_setting(config, key, value, base_dir);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0);
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig config = parse_config(text.str(), path.parent_path());
  validate_config(config);
  return config;
}

Lattice make_lattice(const RunConfig& c) { return Lattice(c.n, c.D); }

Params make_params(const RunConfig& c) { return Params::create(c.alpha, c.beta, c.M, c.gamma); }

double resolved_epsilon(const RunConfig& c) {
  return c.epsilon ? *c.epsilon : default_epsilon(make_lattice(c), make_params(c));
}

void validate_config(const RunConfig& c) {
  const Lattice lattice = make_lattice(c);
  const Params params = make_params(c);
  if (!(c.dt > 0.0)) throw ParameterError("dt must be > 0");
  if (c.epsilon) {
    const double bound = epsilon_bound(lattice, params);
    if (!(*c.epsilon > 0.0 && *c.epsilon < bound)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "epsilon must satisfy 0 < epsilon < " << bound << ", got " << *c.epsilon;
      throw ParameterError(msg.str());
    }
  }
  if (!(c.amplitude >= 0.0)) throw ParameterError("amplitude must be >= 0");
  if (!(c.phase1_timeout > 0.0)) throw ParameterError("phase1_timeout must be > 0");
  if (!(c.horizon_floor > 0.0) || !(c.horizon_cap >= c.horizon_floor))
    throw ParameterError("horizon bounds need 0 < horizon_floor <= horizon_cap");
  if (!(c.hold_time >= 0.0)) throw ParameterError("hold_time must be >= 0");
  if (c.direction != 1 && c.direction != -1) throw ParameterError("direction must be 1 or -1");
  if (c.initial == InitialKind::File && !std::filesystem::exists(c.initial_file))
    throw ParameterError("initial_file does not exist: " + c.initial_file.string());
  if (c.initial == InitialKind::Explicit) {
    require_size(lattice, c.x0, "x0");
    require_size(lattice, c.v0, "v0");
  }
  const bool targeted = c.mission == MissionChoice::Thm2 || c.mission == MissionChoice::Thm3;
  if (targeted && c.target == TargetKind::File && !std::filesystem::exists(c.target_file))
    throw ParameterError("target_file does not exist: " + c.target_file.string());
  if (c.mission == MissionChoice::Hjb) {
    make_hjb_grid(c, lattice, params);
    if (!(c.hjb_tol > 0.0)) throw ParameterError("hjb_tol must be > 0");
    if (c.hjb_dt && !(*c.hjb_dt > 0.0)) throw ParameterError("hjb_dt must be > 0");
  }
  make_initial(c, lattice, params);
  make_target(c, lattice, params);
}

State make_initial(const RunConfig& c, const Lattice& lattice, const Params& params) {
  State s{0.0, NodeField(lattice.size()), NodeField(lattice.size())};
  switch (c.initial) {
    case InitialKind::Explicit:
      s.x = c.x0;
      s.v = c.v0;
      break;
    case InitialKind::File: {
      std::ifstream in(c.initial_file);
      if (!in) throw ParameterError("cannot open initial_file " + c.initial_file.string());
      s.x = read_field_line(in, c.initial_file, "position line");
      s.v = read_field_line(in, c.initial_file, "velocity line");
      break;
    }
    case InitialKind::Random: {
      std::mt19937_64 rng(c.seed);
      std::uniform_real_distribution<double> pos(-c.amplitude, c.amplitude);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      for (double& x : s.x) x = pos(rng);
      for (std::size_t l = 0; l < s.v.size(); ++l) {
        const double r = unit(rng);
        if (!c.velocity_mix) {
          s.v[l] = c.amplitude * r;
          continue;
        }
        // Round-robin over the three speed bands of the damping law.
        const double a1 = params.low_speed(), a2 = params.high_speed();
        const double sign = r < 0.0 ? -1.0 : 1.0;
        const double mag = std::abs(r);
        switch (l % 3) {
          case 0: s.v[l] = r * a1; break;
          case 1: s.v[l] = sign * (a1 + mag * (a2 - a1)); break;
          default: s.v[l] = sign * a2 * (1.0 + mag); break;
        }
      }
      break;
    }
  }
  require_state(lattice, s);
  return s;
}

NodeField sinusoid_target(const Lattice& lattice, double bound) {
  NodeField shape(lattice.size());
  const double w = 2.0 * std::numbers::pi / lattice.per_side();
  for (NodeIndex l = 0; l < lattice.size(); ++l) {
    double s = 0.0;
    for (int j : lattice.coordinates(l)) s += std::cos(w * j);
    shape[l] = s;
  }
  const double peak = max_abs_laplacian(lattice, shape);
  if (!(peak > 1e-12)) return NodeField(lattice.size(), 0.0);
  const double scale = 0.5 * bound / peak;
  for (double& x : shape) x *= scale;
  return shape;
}

std::optional<FlockTarget> make_target(const RunConfig& c, const Lattice& lattice,
                                       const Params& params) {
  if (c.mission != MissionChoice::Thm2 && c.mission != MissionChoice::Thm3) return std::nullopt;
  NodeField shape;
  switch (c.target) {
    case TargetKind::Sinusoid: shape = sinusoid_target(lattice, params.bound()); break;
    case TargetKind::Constant: shape.assign(lattice.size(), 0.0); break;
    case TargetKind::File: {
      std::ifstream in(c.target_file);
      if (!in) throw ParameterError("cannot open target_file " + c.target_file.string());
      shape = read_field_line(in, c.target_file, "target shape");
      break;
    }
  }
  const FlockKind kind = c.mission == MissionChoice::Thm2 ? FlockKind::Moving : FlockKind::Stationary;
  return FlockTarget::create(lattice, params.bound(), kind, std::move(shape));
}

MissionOptions make_mission_options(const RunConfig& c) {
  MissionOptions o;
  switch (c.mission) {
    case MissionChoice::Thm2: o.kind = MissionKind::MovingTarget; break;
    case MissionChoice::Thm3: o.kind = MissionKind::StationaryTarget; break;
    default: o.kind = MissionKind::Flock; break;
  }
  o.variant = c.control_variant;
  o.meeting = c.y_bar_rule;
  o.epsilon = c.epsilon;
  o.dt = c.dt;
  o.phase1_timeout = c.phase1_timeout;
  o.horizon.floor = c.horizon_floor;
  o.horizon.cap = c.horizon_cap;
  o.hold_time = c.hold_time;
  o.record_stride = c.record_stride;
  o.direction = c.direction;
  return o;
}

ReducedGrid make_hjb_grid(const RunConfig& c, const Lattice& lattice, const Params& params) {
  const std::size_t n = lattice.size();
  if (2 * n - 1 > 4)
    throw ParameterError("hjb needs a lattice with at most 2 nodes, got " + std::to_string(n));
  const std::size_t points = c.hjb_resolution ? *c.hjb_resolution : (n == 1 ? 201 : 17);
  const double pos = c.hjb_position_bound ? *c.hjb_position_bound : 2.0;
  const double vel = c.hjb_velocity_bound ? *c.hjb_velocity_bound : 2.0 * params.flock_speed() + 1.0;
  std::vector<GridAxis> axes;
  for (std::size_t k = 1; k < n; ++k) axes.push_back({-pos, pos, points});
  for (std::size_t l = 0; l < n; ++l) axes.push_back({-vel, vel, points});
  return ReducedGrid::create(lattice, params, std::move(axes));
}

ValueIterationOptions make_hjb_options(const RunConfig& c) {
  ValueIterationOptions o;
  o.dt = c.hjb_dt;
  o.tol = c.hjb_tol;
  o.max_sweeps = c.hjb_max_sweeps;
  return o;
}

}  // namespace kgflock
