#include <sstream>

#include "kgflock/error.hpp"

namespace kgflock {
namespace {

std::string admissibility_message(double time, std::size_t node, double value, double bound) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "control out of bounds at t = " << time << ", node " << node << ": |u| = " << value
      << " exceeds M = " << bound;
  return msg.str();
}

}  // namespace

AdmissibilityError::AdmissibilityError(double time, std::size_t node, double value, double bound)
    : Error(admissibility_message(time, node, value, bound)),
      time_(time),
      node_(node),
      value_(value),
      bound_(bound) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

}  // namespace kgflock
