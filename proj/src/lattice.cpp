#include "kgflock/lattice.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "kgflock/error.hpp"
#include "kgflock/simd/kernels.hpp"

namespace kgflock {

Lattice::Lattice(int dimension, int per_side) : dimension_(dimension), per_side_(per_side) {
  if (dimension < 1) throw ParameterError("lattice dimension n must be >= 1");
  if (per_side < 1) throw ParameterError("lattice side D must be >= 1");
  std::size_t n = 1;
  for (int k = 0; k < dimension; ++k) {
    if (n > std::numeric_limits<std::uint32_t>::max() / static_cast<std::size_t>(per_side))
      throw ParameterError("lattice too large");
    n *= static_cast<std::size_t>(per_side);
  }
  size_ = n;

  table_.resize(size_ * static_cast<std::size_t>(degree()));
  std::vector<int> coords(static_cast<std::size_t>(dimension));
  for (NodeIndex node = 0; node < size_; ++node) {
    coords = coordinates(node);
    std::uint32_t* row = table_.data() + node * static_cast<std::size_t>(degree());
    for (int k = 0; k < dimension; ++k) {
      const int c = coords[static_cast<std::size_t>(k)];
      coords[static_cast<std::size_t>(k)] = (c + 1) % per_side;
      row[2 * k] = static_cast<std::uint32_t>(index(coords));
      coords[static_cast<std::size_t>(k)] = (c + per_side - 1) % per_side;
      row[2 * k + 1] = static_cast<std::uint32_t>(index(coords));
      coords[static_cast<std::size_t>(k)] = c;
    }
  }
}

std::vector<int> Lattice::coordinates(NodeIndex node) const {
  std::vector<int> coords(static_cast<std::size_t>(dimension_));
  for (int k = dimension_ - 1; k >= 0; --k) {
    coords[static_cast<std::size_t>(k)] = static_cast<int>(node % static_cast<std::size_t>(per_side_));
    node /= static_cast<std::size_t>(per_side_);
  }
  return coords;
}

NodeIndex Lattice::index(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(dimension_))
    throw DimensionError("coordinate tuple has wrong length");
  NodeIndex node = 0;
  for (int c : coords) {
    if (c < 0 || c >= per_side_) throw DimensionError("coordinate out of range");
    node = node * static_cast<std::size_t>(per_side_) + static_cast<std::size_t>(c);
  }
  return node;
}

std::span<const std::uint32_t> Lattice::neighbors(NodeIndex node) const {
  if (node >= size_) throw DimensionError("node index out of range");
  const auto deg = static_cast<std::size_t>(degree());
  return std::span<const std::uint32_t>(table_).subspan(node * deg, deg);
}

void require_size(const Lattice& lattice, std::span<const double> field, std::string_view what) {
  if (field.size() != lattice.size()) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(lattice.size()) +
                         " values, got " + std::to_string(field.size()));
  }
}

double discrete_laplacian(const Lattice& lattice, std::span<const double> field, NodeIndex node) {
  require_size(lattice, field, "laplacian field");
  double acc = 0.0;
  for (std::uint32_t nb : lattice.neighbors(node)) acc += field[nb] - field[node];
  return acc * lattice.inv_spacing_sq();
}

void discrete_laplacian(const Lattice& lattice, std::span<const double> field, std::span<double> out) {
  require_size(lattice, field, "laplacian field");
  require_size(lattice, out, "laplacian output");
  simd::kernels().laplacian(lattice.neighbor_table().data(), lattice.degree(), lattice.size(),
                            lattice.inv_spacing_sq(), field.data(), out.data());
}

NodeField discrete_laplacian(const Lattice& lattice, std::span<const double> field) {
  NodeField out(lattice.size());
  discrete_laplacian(lattice, field, out);
  return out;
}

double max_abs_laplacian(const Lattice& lattice, std::span<const double> field) {
  const NodeField lap = discrete_laplacian(lattice, field);
  double worst = 0.0;
  for (double value : lap) worst = std::max(worst, std::abs(value));
  return worst;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, end);
}

std::string format_field(std::span<const double> field, char separator) {
  std::string out;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (i) out += separator;
    out += format_double(field[i]);
  }
  return out;
}

NodeField parse_field(std::string_view text) {
  NodeField out;
  std::size_t pos = 0;
  auto is_sep = [](char c) { return c == ' ' || c == ',' || c == '\t' || c == '\n' || c == '\r'; };
  while (pos < text.size()) {
    while (pos < text.size() && is_sep(text[pos])) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_sep(text[end])) ++end;
    const std::string_view token = text.substr(pos, end - pos);
    double value = 0.0;
    std::string_view digits = token;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || ptr != digits.data() + digits.size())
      throw ParseError("not a number: '" + std::string(token) + "'", 0);
    out.push_back(value);
    pos = end;
  }
  return out;
}

}  // namespace kgflock
