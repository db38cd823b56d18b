#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pmesh/tbu.hpp"

namespace pmesh {

enum class Topology { Square, Triangular, Hexagonal };

std::string topology_name(Topology t);
std::optional<Topology> topology_from_name(const std::string& name);

// Ports are numbered 4*tbu + 2*end + rail.  Each TBU has two ends (0 at
// its lexicographically smaller lattice vertex, 1 at the other) and two
// rails (0 = left of the end0->end1 direction, 1 = right).  A rail keeps
// its index along the unit: bar drive maps rail r at one end to rail r at
// the other, cross drive swaps rails.
using PortId = int;

constexpr int port_tbu(PortId p) { return p / 4; }
constexpr int port_end(PortId p) { return (p % 4) / 2; }
constexpr int port_rail(PortId p) { return p % 2; }
constexpr PortId make_port(int tbu, int end, int rail) {
  return 4 * tbu + 2 * end + rail;
}

struct Tbu {
  int id = 0;
  std::array<PortId, 4> ports{};   // ascending: end0 rail0/1, end1 rail0/1
  std::array<int, 2> junction{};   // junction id per end
};

struct Junction {
  double x = 0.0, y = 0.0;
  // Incident (tbu, end), sorted by outward edge angle, counterclockwise.
  std::vector<std::pair<int, int>> ends;
};

// One lattice cell (square, triangle, or hexagon) with its boundary TBUs
// in the order they were walked during generation (counterclockwise).
struct Cell {
  int q = 0, r = 0;      // cell coordinates within the m x n arrangement
  double cx = 0.0, cy = 0.0;
  std::vector<int> tbus;
};

// A mesh of TBUs on a regular lattice.  Cells are unit polygons with one
// TBU per side; where two sides of a cell meet, the two ports facing the
// cell interior are joined by a zero-length interconnect.  Ports left
// unjoined are external.
class Mesh {
 public:
  static Mesh generate(Topology topology, int m, int n);

  // Assemble a free-form fragment (primarily for tests).  Junctions are
  // synthesized by uniting connected ends; external ports are ordered by
  // ascending id.
  static Mesh from_parts(int tbu_count,
                         const std::vector<std::pair<PortId, PortId>>& connections);

  Topology topology() const { return topology_; }
  int m() const { return m_; }
  int n() const { return n_; }

  int tbu_count() const { return static_cast<int>(tbus_.size()); }
  const std::vector<Tbu>& tbus() const { return tbus_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<Cell>& cells() const { return cells_; }

  // Interconnects as sorted (low, high) port pairs, list sorted.
  const std::vector<std::pair<PortId, PortId>>& connections() const {
    return connections_;
  }

  // External ports in a fixed clockwise order around the mesh, starting
  // from the lowest-numbered boundary TBU's first external port.
  const std::vector<PortId>& external_ports() const { return external_ports_; }

  bool valid_port(PortId p) const {
    return p >= 0 && p < 4 * tbu_count();
  }
  std::optional<PortId> connected_to(PortId p) const;
  bool is_external(PortId p) const { return valid_port(p) && peer_[p] < 0; }
  // Position of p in external_ports(), or -1.
  int external_index(PortId p) const;

  int junction_of(int tbu, int end) const { return tbus_[tbu].junction[end]; }
  std::vector<PortId> ports_at_junction(int junction) const;

  // Rail of `tbu` that faces the interior of cells()[cell_index].
  int rail_toward_cell(int tbu, int cell_index) const;

  const Cell* find_cell(int q, int r) const;

 private:
  Topology topology_ = Topology::Hexagonal;
  int m_ = 0, n_ = 0;
  std::vector<Tbu> tbus_;
  std::vector<Junction> junctions_;
  std::vector<Cell> cells_;
  std::vector<std::pair<PortId, PortId>> connections_;
  std::vector<PortId> external_ports_;
  std::vector<PortId> peer_;                    // per port; -1 = external
  std::vector<std::array<double, 2>> tbu_dir_;  // unit vector end0 -> end1
  friend struct MeshBuilder;
};

// A mesh program: drive states keyed by TBU id.  Unlisted TBUs are off.
struct Program {
  std::map<int, TBUMode> modes;

  TBUMode mode_of(int tbu) const {
    auto it = modes.find(tbu);
    return it == modes.end() ? TBUMode::off() : it->second;
  }
  void set(int tbu, const TBUMode& mode) { modes[tbu] = mode; }
};

// JSON document carrying a mesh and its program (schema version 1).
std::string serialize(const Mesh& mesh, const Program& program);
std::pair<Mesh, Program> deserialize(const std::string& text);

}  // namespace pmesh
