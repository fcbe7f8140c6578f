#include "kgflock/trajectory.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <string>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

constexpr std::array<std::string_view, 6> kPhaseNames{"damp",       "freeze",   "accelerate",
                                                      "rendezvous", "retarget", "hold"};

}  // namespace

std::string_view phase_name(Phase phase) noexcept {
  return kPhaseNames[static_cast<std::size_t>(phase)];
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i)
    if (kPhaseNames[i] == name) return static_cast<Phase>(i);
  return std::nullopt;
}

void Trajectory::append(double t, Phase phase, std::span<const double> x,
                        std::span<const double> v, std::span<const double> u, double lyapunov) {
  if (x.size() != nodes_ || v.size() != nodes_ || u.size() != nodes_)
    throw DimensionError("trajectory row has wrong node count");
  times_.push_back(t);
  phases_.push_back(phase);
  lyapunov_.push_back(lyapunov);
  values_.insert(values_.end(), x.begin(), x.end());
  values_.insert(values_.end(), v.begin(), v.end());
  values_.insert(values_.end(), u.begin(), u.end());
}

std::span<const double> Trajectory::block(std::size_t row, std::size_t which) const {
  if (row >= size()) throw DimensionError("trajectory row out of range");
  return std::span<const double>(values_).subspan((3 * row + which) * nodes_, nodes_);
}

std::span<double> Trajectory::mutable_u(std::size_t row) {
  if (row >= size()) throw DimensionError("trajectory row out of range");
  return std::span<double>(values_).subspan((3 * row + 2) * nodes_, nodes_);
}

State Trajectory::state(std::size_t row) const {
  const auto xs = x(row);
  const auto vs = v(row);
  return State{time(row), NodeField(xs.begin(), xs.end()), NodeField(vs.begin(), vs.end())};
}

void write_csv(const Trajectory& trajectory, std::ostream& out) {
  const std::size_t n = trajectory.nodes();
  std::string line = "t";
  for (const char* prefix : {"x_", "v_", "u_"})
    for (std::size_t l = 0; l < n; ++l) line += std::string(",") + prefix + std::to_string(l);
  line += ",V,phase\n";
  out << line;
  for (std::size_t row = 0; row < trajectory.size(); ++row) {
    line = format_double(trajectory.time(row));
    for (auto block : {trajectory.x(row), trajectory.v(row), trajectory.u(row)})
      for (double value : block) {
        line += ',';
        line += format_double(value);
      }
    line += ',';
    line += format_double(trajectory.lyapunov(row));
    line += ',';
    line += phase_name(trajectory.phase(row));
    line += '\n';
    out << line;
  }
}

Trajectory read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trajectory file", 1);
  std::size_t columns = 1;
  for (char c : line) columns += c == ',';
  if (columns < 6 || (columns - 3) % 3 != 0) throw ParseError("unexpected trajectory header", 1);
  const std::size_t n = (columns - 3) / 3;
  Trajectory trajectory(n);

  std::vector<double> x(n), v(n), u(n);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("malformed trajectory row", lineno);
    const auto phase = parse_phase(std::string_view(line).substr(comma + 1));
    if (!phase) throw ParseError("unknown phase tag", lineno);
    NodeField values;
    try {
      values = parse_field(std::string_view(line).substr(0, comma));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (values.size() != 3 * n + 2) throw ParseError("wrong number of columns", lineno);
    std::copy(values.begin() + 1, values.begin() + 1 + static_cast<long>(n), x.begin());
    std::copy(values.begin() + 1 + static_cast<long>(n), values.begin() + 1 + static_cast<long>(2 * n), v.begin());
    std::copy(values.begin() + 1 + static_cast<long>(2 * n), values.begin() + 1 + static_cast<long>(3 * n), u.begin());
    trajectory.append(values.front(), *phase, x, v, u, values.back());
  }
  return trajectory;
}

}  // namespace kgflock
