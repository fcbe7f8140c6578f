#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgflock/config.hpp"
#include "kgflock/verify.hpp"

namespace kgflock {

enum ExitCode : int {
  kExitOk = 0,
  kExitCertificateFailure = 1,
  kExitConfigError = 2,
  kExitControlFailure = 3,
};

/// Everything certification needs besides the trajectory itself.
struct CertificationContext {
  Lattice lattice;
  Params params;
  DampingVariant variant = DampingVariant::Standard;
  MissionChoice mission = MissionChoice::Thm1;
  double epsilon = 0.0;
  std::optional<FlockTarget> target;
  double flock_tol = 1.0e-6;
};

/// Trajectory-only certificates: control bound, Lyapunov monotonicity and
/// dissipation during Damp, freeze drift, compatibility and terminal flock.
/// Switching states are located from the phase tags.
std::vector<CertificateReport> certify_trajectory(const CertificationContext& context,
                                                  const Trajectory& trajectory);

/// Runs the configured mission into config.output_dir: trajectory.csv,
/// summary.json, certificates.txt, plot.gp. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& log, bool quiet = false);

/// Value iteration for the configured lattice: value_field.txt, value_slice.csv, summary.json.
int run_hjb(const RunConfig& config, std::ostream& log, bool quiet = false);

/// Re-certifies a run directory from trajectory.csv and summary.json and
/// prints the reports; 0 if all pass, 1 otherwise, 2 on unreadable input.
int certify(const std::filesystem::path& dir, std::ostream& out);

/// Runs each config into out_root/<config stem> on a worker pool; returns the
/// largest exit code.
int sweep(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_root,
          const std::vector<std::pair<std::string, std::string>>& overrides, std::ostream& log,
          bool quiet = false);

/// Writes dir/plot.gp (gnuplot, data inlined) from trajectory.csv and summary.json.
std::filesystem::path emit_plots(const std::filesystem::path& dir);

}  // namespace kgflock
