#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgflock/error.hpp"
#include "kgflock/run.hpp"

namespace kgflock {

std::filesystem::path emit_plots(const std::filesystem::path& dir) {
  std::ifstream tin(dir / "trajectory.csv");
  if (!tin) throw Error("emit_plots: missing " + (dir / "trajectory.csv").string());
  const Trajectory tr = read_csv(tin);

  double bound = 1.0, speed = 0.0;
  std::vector<std::pair<std::string, double>> markers;
  std::ifstream sin(dir / "summary.json");
  if (sin) {
    const auto summary = nlohmann::json::parse(sin);
    bound = summary.at("params").at("M").get<double>();
    if (summary.contains("schedule")) {
      const auto& s = summary.at("schedule");
      speed = s.at("flock_speed").get<double>();
      for (const char* key : {"T0", "T1", "T2", "T3", "T4"})
        if (!s.at(key).is_null()) markers.emplace_back(key, s.at(key).get<double>());
    }
  }

  std::ostringstream gp;
  gp << "# V(t), max|v - vbar|(t), max|u|(t); phase switches as vertical lines\n";
  gp << "$traj << EOD\n";
  for (std::size_t row = 0; row < tr.size(); ++row) {
    double dv = 0.0, du = 0.0;
    for (double v : tr.v(row)) dv = std::max(dv, std::abs(v - speed));
    for (double u : tr.u(row)) du = std::max(du, std::abs(u));
    gp << format_double(tr.time(row)) << " " << format_double(tr.lyapunov(row)) << " "
       << format_double(dv) << " " << format_double(du) << "\n";
  }
  gp << "EOD\n\n";
  gp << "set terminal pngcairo size 900,900\n";
  gp << "set output 'plot.png'\n";
  gp << "set multiplot layout 3,1\n";
  gp << "unset key\n";
  for (const auto& [name, t] : markers)
    gp << "set arrow from " << format_double(t) << ", graph 0 to " << format_double(t)
       << ", graph 1 nohead dashtype 2 lc rgb 'gray' # " << name << "\n";
  gp << "set ylabel 'V'\n";
  gp << "plot $traj using 1:2 with lines lc rgb 'black'\n";
  gp << "set ylabel 'max |v - vbar|'\n";
  gp << "set logscale y\n";
  gp << "plot $traj using 1:($3 > 0 ? $3 : 1e-16) with lines lc rgb 'blue'\n";
  gp << "unset logscale y\n";
  gp << "set ylabel 'max |u|'\n";
  gp << "set xlabel 't'\n";
  gp << "plot $traj using 1:4 with lines lc rgb 'red', " << format_double(bound)
     << " with lines dashtype 3 lc rgb 'black'\n";
  gp << "unset multiplot\n";

  const auto path = dir / "plot.gp";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_plots: cannot write " + path.string());
  out << gp.str();
  return path;
}

}  // namespace kgflock
