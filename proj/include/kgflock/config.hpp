#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgflock/hjb.hpp"
#include "kgflock/mission.hpp"

namespace kgflock {

enum class MissionChoice { Thm1, Thm2, Thm3, Hjb };
enum class InitialKind { Random, Explicit, File };
enum class TargetKind { Sinusoid, Constant, File };

struct RunConfig {
  int n = 1;
  int D = 8;
  double alpha = 1.0;
  double beta = 1.0;
  double M = 1.0;
  std::optional<double> gamma;
  std::optional<double> epsilon;

  MissionChoice mission = MissionChoice::Thm1;

  InitialKind initial = InitialKind::Random;
  std::uint64_t seed = 0;
  double amplitude = 2.0;
  bool velocity_mix = false;
  NodeField x0;
  NodeField v0;
  std::filesystem::path initial_file;

  TargetKind target = TargetKind::Sinusoid;
  std::filesystem::path target_file;

  double dt = 1.0e-3;
  std::filesystem::path output_dir = "out";
  DampingVariant control_variant = DampingVariant::Standard;
  MeetingPoint y_bar_rule = MeetingPoint::Mean;
  double phase1_timeout = 1.0e4;
  double horizon_floor = 1.0;
  double horizon_cap = 1.0e4;
  double hold_time = 1.0;
  std::size_t record_stride = 1;
  int direction = 1;

  std::optional<std::size_t> hjb_resolution;  // default 201 for N = 1, 17 for N = 2
  double hjb_tol = 1.0e-9;
  std::size_t hjb_max_sweeps = 200000;
  std::optional<double> hjb_dt;
  std::optional<double> hjb_position_bound;
  std::optional<double> hjb_velocity_bound;

  /// Keys as written, in file order, with overrides applied; echoed into the summary.
  std::vector<std::pair<std::string, std::string>> echo;
};

/// Parses "key = value" lines ('#' starts a comment). Unknown or repeated keys
/// and malformed values raise ParseError with the line number; relative file
/// paths resolve against base_dir. Does not validate derived invariants.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads, parses and validates a config file.
RunConfig load_config(const std::filesystem::path& path);

/// Applies one key = value pair on top of an existing config (CLI overrides).
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

/// Checks everything that can fail before simulation: lattice, Params
/// invariants, epsilon range, option ranges, file existence, target compatibility.
void validate_config(const RunConfig& config);

Lattice make_lattice(const RunConfig& config);
Params make_params(const RunConfig& config);
double resolved_epsilon(const RunConfig& config);
State make_initial(const RunConfig& config, const Lattice& lattice, const Params& params);
/// Target shape for thm2/thm3; none for thm1/hjb.
std::optional<FlockTarget> make_target(const RunConfig& config, const Lattice& lattice,
                                       const Params& params);
MissionOptions make_mission_options(const RunConfig& config);
ReducedGrid make_hjb_grid(const RunConfig& config, const Lattice& lattice, const Params& params);
ValueIterationOptions make_hjb_options(const RunConfig& config);

/// Sum_k cos(2 pi j_k / D), scaled so max |Delta phi| = M/2; zero if the
/// profile has no curvature on this lattice.
NodeField sinusoid_target(const Lattice& lattice, double bound);

std::string mission_name(MissionChoice mission);

}  // namespace kgflock
