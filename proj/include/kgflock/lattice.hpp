#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgflock {

using NodeIndex = std::size_t;

/// One scalar per torus node, in canonical (lexicographic) node order.
using NodeField = std::vector<double>;

/// The discrete torus {0, 1/D, ..., (D-1)/D}^n with spacing h = 1/D.
///
/// Node (j_1, ..., j_n) has index j_1 D^{n-1} + ... + j_n. Each node has 2n
/// formal neighbours ordered +e_1, -e_1, +e_2, -e_2, ...; for D <= 2 some of
/// them coincide and the multiplicity is kept.
class Lattice {
 public:
  Lattice(int dimension, int per_side);

  int dimension() const noexcept { return dimension_; }
  int per_side() const noexcept { return per_side_; }
  std::size_t size() const noexcept { return size_; }
  int degree() const noexcept { return 2 * dimension_; }

  double spacing() const noexcept { return 1.0 / per_side_; }
  /// 1/h^2 = D^2, exact in double.
  double inv_spacing_sq() const noexcept {
    return static_cast<double>(per_side_) * static_cast<double>(per_side_);
  }

  std::vector<int> coordinates(NodeIndex node) const;
  NodeIndex index(std::span<const int> coords) const;

  std::span<const std::uint32_t> neighbors(NodeIndex node) const;
  /// Row-major size() x degree() table of neighbour indices.
  std::span<const std::uint32_t> neighbor_table() const noexcept { return table_; }

  bool operator==(const Lattice& other) const noexcept {
    return dimension_ == other.dimension_ && per_side_ == other.per_side_;
  }

 private:
  int dimension_;
  int per_side_;
  std::size_t size_;
  std::vector<std::uint32_t> table_;
};

/// Throws DimensionError unless field.size() == lattice.size().
void require_size(const Lattice& lattice, std::span<const double> field, std::string_view what);

/// Sum over the 2n neighbours of (f(l') - f(l)) / h^2.
double discrete_laplacian(const Lattice& lattice, std::span<const double> field, NodeIndex node);

/// Laplacian at every node, written into out (uses the active kernel set).
void discrete_laplacian(const Lattice& lattice, std::span<const double> field, std::span<double> out);
NodeField discrete_laplacian(const Lattice& lattice, std::span<const double> field);

/// max_l |Delta f(l)|.
double max_abs_laplacian(const Lattice& lattice, std::span<const double> field);

// NodeField text form: N decimal scalars separated by whitespace or commas.
std::string format_field(std::span<const double> field, char separator = ' ');
NodeField parse_field(std::string_view text);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double value);

}  // namespace kgflock
