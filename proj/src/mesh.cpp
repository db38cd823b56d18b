#include "pmesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace pmesh {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRow = 0.8660254037844386;  // sqrt(3)/2
constexpr double kAngleTol = 1e-6;

using Vtx = std::pair<int, int>;  // integer lattice coordinates (a, b)

struct Poly {
  int q, r;
  std::vector<Vtx> verts;  // counterclockwise
};

// Interior corner angle of one lattice cell; interconnects form only
// across gaps of exactly this size, so light can turn every cell corner.
double unit_gap(Topology t) {
  switch (t) {
    case Topology::Square: return kPi / 2.0;
    case Topology::Triangular: return kPi / 3.0;
    case Topology::Hexagonal: return 2.0 * kPi / 3.0;
  }
  return 0.0;
}

double coord_x(Topology t, const Vtx& v) {
  return t == Topology::Square ? double(v.first) : 0.5 * v.first;
}
double coord_y(Topology t, const Vtx& v) {
  return t == Topology::Square ? double(v.second) : kRow * v.second;
}

std::vector<Poly> lattice_cells(Topology t, int m, int n) {
  std::vector<Poly> cells;
  if (t == Topology::Square) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        cells.push_back({i, j, {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}});
  } else if (t == Topology::Triangular) {
    // Row r holds n triangles alternating point-up / point-down; lattice
    // vertex (i, j) sits at x = i + j/2, y = j*sqrt(3)/2, i.e. a = 2i + j.
    auto at = [](int i, int j) { return Vtx{2 * i + j, j}; };
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) {
        const int i = c / 2;
        if (c % 2 == 0) {
          cells.push_back({c, r, {at(i, r), at(i + 1, r), at(i, r + 1)}});
        } else {
          cells.push_back({c, r, {at(i + 1, r), at(i + 1, r + 1), at(i, r + 1)}});
        }
      }
  } else {
    // Flat-top hexagons in offset columns; odd columns shifted up.
    static constexpr int kOff[6][2] = {{2, 0}, {1, 1}, {-1, 1},
                                       {-2, 0}, {-1, -1}, {1, -1}};
    for (int q = 0; q < m; ++q)
      for (int r = 0; r < n; ++r) {
        const int ac = 3 * q + 2;
        const int bc = 2 * r + (q & 1) + 1;
        Poly p{q, r, {}};
        for (auto& o : kOff) p.verts.push_back({ac + o[0], bc + o[1]});
        cells.push_back(p);
      }
  }
  return cells;
}

}  // namespace

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::Square: return "square";
    case Topology::Triangular: return "triangular";
    case Topology::Hexagonal: return "hexagonal";
  }
  return "?";
}

std::optional<Topology> topology_from_name(const std::string& name) {
  if (name == "square") return Topology::Square;
  if (name == "triangular") return Topology::Triangular;
  if (name == "hexagonal") return Topology::Hexagonal;
  return std::nullopt;
}

struct MeshBuilder {
  static Mesh build(Topology topology, int m, int n) {
    if (m < 1 || n < 1) {
      throw std::invalid_argument("mesh dimensions must be >= 1");
    }
    if (static_cast<long long>(m) * n > 2048) {
      throw std::invalid_argument("mesh dimensions too large");
    }

    Mesh mesh;
    mesh.topology_ = topology;
    mesh.m_ = m;
    mesh.n_ = n;

    const std::vector<Poly> polys = lattice_cells(topology, m, n);

    // Deduplicate edges; ids follow the sorted order of their canonical
    // (low vertex, high vertex) keys so numbering is reproducible.
    std::map<std::pair<Vtx, Vtx>, int> edge_ids;
    for (const Poly& p : polys) {
      const size_t k = p.verts.size();
      for (size_t i = 0; i < k; ++i) {
        Vtx a = p.verts[i], b = p.verts[(i + 1) % k];
        if (b < a) std::swap(a, b);
        edge_ids.emplace(std::make_pair(a, b), 0);
      }
    }
    int next_id = 0;
    for (auto& [key, id] : edge_ids) id = next_id++;

    std::map<Vtx, int> junction_ids;
    for (const auto& [key, id] : edge_ids) {
      junction_ids.emplace(key.first, 0);
      junction_ids.emplace(key.second, 0);
    }
    next_id = 0;
    for (auto& [v, id] : junction_ids) id = next_id++;

    mesh.junctions_.resize(junction_ids.size());
    for (const auto& [v, id] : junction_ids) {
      mesh.junctions_[id].x = coord_x(topology, v);
      mesh.junctions_[id].y = coord_y(topology, v);
    }

    mesh.tbus_.resize(edge_ids.size());
    mesh.tbu_dir_.resize(edge_ids.size());
    for (const auto& [key, id] : edge_ids) {
      Tbu& t = mesh.tbus_[id];
      t.id = id;
      for (int p = 0; p < 4; ++p) t.ports[p] = make_port(id, p / 2, p % 2);
      t.junction[0] = junction_ids.at(key.first);
      t.junction[1] = junction_ids.at(key.second);
      const double dx = coord_x(topology, key.second) - coord_x(topology, key.first);
      const double dy = coord_y(topology, key.second) - coord_y(topology, key.first);
      const double len = std::hypot(dx, dy);
      mesh.tbu_dir_[id] = {dx / len, dy / len};
    }

    for (const Tbu& t : mesh.tbus_) {
      mesh.junctions_[t.junction[0]].ends.push_back({t.id, 0});
      mesh.junctions_[t.junction[1]].ends.push_back({t.id, 1});
    }

    // Sort each junction's incident ends by outward edge angle and join
    // consecutive ends whose angular gap equals one cell corner.  The
    // gap region between two such ends is a cell interior; the joined
    // ports are the ones facing it: the counterclockwise-side port of
    // the first end and the clockwise-side port of the second.
    mesh.peer_.assign(4 * mesh.tbu_count(), -1);
    auto outward_angle = [&](int tbu, int end) {
      const auto& d = mesh.tbu_dir_[tbu];
      return end == 0 ? std::atan2(d[1], d[0]) : std::atan2(-d[1], -d[0]);
    };
    // At end 0 the outward direction is end0->end1, so rail 0 (the left
    // rail) lies on the counterclockwise side; at end 1 it is rail 1.
    auto ccw_port = [](int tbu, int end) {
      return make_port(tbu, end, end == 0 ? 0 : 1);
    };
    auto cw_port = [](int tbu, int end) {
      return make_port(tbu, end, end == 0 ? 1 : 0);
    };

    const double gap_needed = unit_gap(topology);
    for (Junction& j : mesh.junctions_) {
      std::sort(j.ends.begin(), j.ends.end(),
                [&](const auto& a, const auto& b) {
                  const double aa = outward_angle(a.first, a.second);
                  const double ab = outward_angle(b.first, b.second);
                  if (std::abs(aa - ab) > kAngleTol) return aa < ab;
                  return a < b;
                });
      const size_t k = j.ends.size();
      if (k < 2) continue;
      for (size_t i = 0; i < k; ++i) {
        const auto& a = j.ends[i];
        const auto& b = j.ends[(i + 1) % k];
        double gap = outward_angle(b.first, b.second) -
                     outward_angle(a.first, a.second);
        if (i + 1 == k) gap += 2.0 * kPi;
        if (std::abs(gap - gap_needed) < kAngleTol) {
          const PortId pa = ccw_port(a.first, a.second);
          const PortId pb = cw_port(b.first, b.second);
          mesh.peer_[pa] = pb;
          mesh.peer_[pb] = pa;
          mesh.connections_.push_back({std::min(pa, pb), std::max(pa, pb)});
        }
      }
    }
    std::sort(mesh.connections_.begin(), mesh.connections_.end());

    mesh.cells_.reserve(polys.size());
    for (const Poly& p : polys) {
      Cell c;
      c.q = p.q;
      c.r = p.r;
      const size_t k = p.verts.size();
      for (size_t i = 0; i < k; ++i) {
        Vtx a = p.verts[i], b = p.verts[(i + 1) % k];
        if (b < a) std::swap(a, b);
        c.tbus.push_back(edge_ids.at({a, b}));
        c.cx += coord_x(topology, p.verts[i]) / double(k);
        c.cy += coord_y(topology, p.verts[i]) / double(k);
      }
      mesh.cells_.push_back(std::move(c));
    }

    order_external_ports(mesh);
    return mesh;
  }

  // External ports are listed clockwise around the mesh.  The walk starts
  // at the first external port of the lowest-numbered boundary TBU; ports
  // are keyed by the clockwise angle of their junction about the mesh
  // centroid (ties broken by distance from the centroid, then port id).
  static void order_external_ports(Mesh& mesh) {
    std::vector<PortId> ext;
    for (PortId p = 0; p < 4 * mesh.tbu_count(); ++p) {
      if (mesh.peer_[p] < 0) ext.push_back(p);
    }
    if (ext.empty()) {
      mesh.external_ports_ = ext;
      return;
    }
    double cx = 0.0, cy = 0.0;
    for (const Junction& j : mesh.junctions_) {
      cx += j.x / double(mesh.junctions_.size());
      cy += j.y / double(mesh.junctions_.size());
    }
    auto junction_of_port = [&](PortId p) {
      return mesh.tbus_[port_tbu(p)].junction[port_end(p)];
    };
    const Junction& start = mesh.junctions_[junction_of_port(ext.front())];
    const double a0 = std::atan2(start.y - cy, start.x - cx);
    auto key = [&](PortId p) {
      const Junction& j = mesh.junctions_[junction_of_port(p)];
      double cw = a0 - std::atan2(j.y - cy, j.x - cx);
      cw = std::fmod(cw, 2.0 * kPi);
      if (cw < -kAngleTol) cw += 2.0 * kPi;
      if (cw < 0.0) cw = 0.0;
      const double radius = std::hypot(j.x - cx, j.y - cy);
      return std::make_tuple(std::round(cw / kAngleTol), -radius, p);
    };
    std::sort(ext.begin(), ext.end(),
              [&](PortId a, PortId b) { return key(a) < key(b); });
    mesh.external_ports_ = ext;
  }

  static Mesh fragment(int tbu_count,
                       const std::vector<std::pair<PortId, PortId>>& conns) {
    if (tbu_count < 1) throw std::invalid_argument("fragment needs >= 1 TBU");
    Mesh mesh;
    mesh.topology_ = Topology::Hexagonal;
    mesh.m_ = 0;
    mesh.n_ = 0;  // marks a non-lattice fragment
    mesh.tbus_.resize(tbu_count);
    mesh.tbu_dir_.assign(tbu_count, {1.0, 0.0});
    mesh.peer_.assign(4 * tbu_count, -1);

    for (auto [a, b] : conns) {
      if (a < 0 || b < 0 || a >= 4 * tbu_count || b >= 4 * tbu_count || a == b) {
        throw std::invalid_argument("fragment connection out of range");
      }
      if (mesh.peer_[a] >= 0 || mesh.peer_[b] >= 0) {
        throw std::invalid_argument("fragment port used twice");
      }
      mesh.peer_[a] = b;
      mesh.peer_[b] = a;
      mesh.connections_.push_back({std::min(a, b), std::max(a, b)});
    }
    std::sort(mesh.connections_.begin(), mesh.connections_.end());

    // Unite ends that share an interconnect into synthetic junctions.
    std::vector<int> parent(2 * tbu_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (auto [a, b] : mesh.connections_) {
      const int ea = 2 * port_tbu(a) + port_end(a);
      const int eb = 2 * port_tbu(b) + port_end(b);
      parent[find(ea)] = find(eb);
    }
    std::map<int, int> roots;
    for (int e = 0; e < 2 * tbu_count; ++e) roots.emplace(find(e), 0);
    int next = 0;
    for (auto& [root, id] : roots) id = next++;
    mesh.junctions_.resize(roots.size());
    for (int t = 0; t < tbu_count; ++t) {
      Tbu& tb = mesh.tbus_[t];
      tb.id = t;
      for (int p = 0; p < 4; ++p) tb.ports[p] = make_port(t, p / 2, p % 2);
      for (int e = 0; e < 2; ++e) {
        tb.junction[e] = roots.at(find(2 * t + e));
        mesh.junctions_[tb.junction[e]].ends.push_back({t, e});
      }
    }
    for (PortId p = 0; p < 4 * tbu_count; ++p) {
      if (mesh.peer_[p] < 0) mesh.external_ports_.push_back(p);
    }
    return mesh;
  }
};

Mesh Mesh::generate(Topology topology, int m, int n) {
  return MeshBuilder::build(topology, m, n);
}

Mesh Mesh::from_parts(int tbu_count,
                      const std::vector<std::pair<PortId, PortId>>& connections) {
  return MeshBuilder::fragment(tbu_count, connections);
}

std::optional<PortId> Mesh::connected_to(PortId p) const {
  if (!valid_port(p) || peer_[p] < 0) return std::nullopt;
  return peer_[p];
}

int Mesh::external_index(PortId p) const {
  auto it = std::find(external_ports_.begin(), external_ports_.end(), p);
  if (it == external_ports_.end()) return -1;
  return static_cast<int>(it - external_ports_.begin());
}

std::vector<PortId> Mesh::ports_at_junction(int junction) const {
  std::vector<PortId> out;
  for (const auto& [tbu, end] : junctions_[junction].ends) {
    out.push_back(make_port(tbu, end, 0));
    out.push_back(make_port(tbu, end, 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Mesh::rail_toward_cell(int tbu, int cell_index) const {
  const Cell& c = cells_[cell_index];
  const Junction& j0 = junctions_[tbus_[tbu].junction[0]];
  const double ex = tbu_dir_[tbu][0], ey = tbu_dir_[tbu][1];
  const double cross = ex * (c.cy - j0.y) - ey * (c.cx - j0.x);
  return cross > 0.0 ? 0 : 1;  // rail 0 is left of end0->end1
}

const Cell* Mesh::find_cell(int q, int r) const {
  for (const Cell& c : cells_) {
    if (c.q == q && c.r == r) return &c;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using json = nlohmann::ordered_json;

const char* mode_name(TBUState s) {
  switch (s) {
    case TBUState::Off: return "off";
    case TBUState::Bar: return "bar";
    case TBUState::Cross: return "cross";
    case TBUState::Tunable: return "tunable";
  }
  return "?";
}

}  // namespace

std::string serialize(const Mesh& mesh, const Program& program) {
  if (mesh.m() == 0) {
    throw std::invalid_argument("serialize: fragment meshes have no document form");
  }
  json doc;
  doc["version"] = 1;
  doc["topology"] = topology_name(mesh.topology());
  doc["m"] = mesh.m();
  doc["n"] = mesh.n();
  doc["tbus"] = json::array();
  for (const Tbu& t : mesh.tbus()) {
    doc["tbus"].push_back({{"id", t.id},
                           {"ports", {t.ports[0], t.ports[1], t.ports[2], t.ports[3]}}});
  }
  doc["connections"] = json::array();
  for (const auto& [a, b] : mesh.connections()) {
    doc["connections"].push_back({a, b});
  }
  doc["program"] = json::array();
  for (const auto& [tbu, mode] : program.modes) {
    if (mode.state == TBUState::Off) continue;
    if (tbu < 0 || tbu >= mesh.tbu_count()) {
      throw std::invalid_argument("serialize: program references unknown TBU");
    }
    json entry;
    entry["tbu_id"] = tbu;
    entry["mode"] = mode_name(mode.state);
    if (mode.state == TBUState::Tunable) {
      entry["theta_upper"] = mode.settings.theta_upper;
      entry["theta_lower"] = mode.settings.theta_lower;
      entry["loss_db"] = mode.settings.insertion_loss_db;
    } else {
      const TBUSettings s = mode_settings(mode);
      entry["theta_upper"] = s.theta_upper;
      entry["theta_lower"] = s.theta_lower;
      entry["loss_db"] = nullptr;  // resolved against the solver default
    }
    doc["program"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

std::pair<Mesh, Program> deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("document root must be an object");
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != 1) {
    throw std::invalid_argument("unsupported document version (expected 1)");
  }
  for (const char* field : {"topology", "m", "n", "tbus", "connections", "program"}) {
    if (!doc.contains(field)) {
      throw std::invalid_argument(std::string("document missing field: ") + field);
    }
  }
  const auto topo = topology_from_name(doc["topology"].get<std::string>());
  if (!topo) throw std::invalid_argument("unknown topology name");
  if (!doc["m"].is_number_integer() || !doc["n"].is_number_integer()) {
    throw std::invalid_argument("m and n must be integers");
  }
  Mesh mesh = Mesh::generate(*topo, doc["m"].get<int>(), doc["n"].get<int>());

  // The lattice structure is canonical given (topology, m, n): the
  // document must agree with it exactly, which also catches dangling or
  // doubly-used ports.
  const auto& tbus = doc["tbus"];
  if (!tbus.is_array() || static_cast<int>(tbus.size()) != mesh.tbu_count()) {
    throw std::invalid_argument("tbus list does not match topology");
  }
  for (int i = 0; i < mesh.tbu_count(); ++i) {
    const auto& t = tbus[i];
    if (!t.contains("id") || t["id"].get<int>() != i || !t.contains("ports")) {
      throw std::invalid_argument("tbus list does not match topology");
    }
    const auto& ports = t["ports"];
    if (!ports.is_array() || ports.size() != 4) {
      throw std::invalid_argument("each TBU must list exactly 4 ports");
    }
    for (int p = 0; p < 4; ++p) {
      if (ports[p].get<int>() != 4 * i + p) {
        throw std::invalid_argument("tbus list does not match topology");
      }
    }
  }

  std::vector<std::pair<PortId, PortId>> conns;
  std::vector<int> seen(4 * mesh.tbu_count(), 0);
  for (const auto& c : doc["connections"]) {
    if (!c.is_array() || c.size() != 2) {
      throw std::invalid_argument("each connection must be a pair of ports");
    }
    const int a = c[0].get<int>(), b = c[1].get<int>();
    if (a < 0 || b < 0 || a >= 4 * mesh.tbu_count() || b >= 4 * mesh.tbu_count()) {
      throw std::invalid_argument("connection references unknown port");
    }
    if (seen[a]++ || seen[b]++) {
      throw std::invalid_argument("port appears in more than one connection");
    }
    conns.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(conns.begin(), conns.end());
  if (conns != mesh.connections()) {
    throw std::invalid_argument("connections do not match the generated lattice");
  }

  Program program;
  for (const auto& e : doc["program"]) {
    if (!e.contains("tbu_id") || !e.contains("mode")) {
      throw std::invalid_argument("program entry missing tbu_id or mode");
    }
    const int tbu = e["tbu_id"].get<int>();
    if (tbu < 0 || tbu >= mesh.tbu_count()) {
      throw std::invalid_argument("program references unknown TBU");
    }
    if (program.modes.count(tbu)) {
      throw std::invalid_argument("program lists a TBU twice");
    }
    const std::string mode = e["mode"].get<std::string>();
    if (mode == "off") {
      program.set(tbu, TBUMode::off());
    } else if (mode == "bar") {
      program.set(tbu, TBUMode::bar());
    } else if (mode == "cross") {
      program.set(tbu, TBUMode::cross());
    } else if (mode == "tunable") {
      TBUSettings s;
      if (!e.contains("theta_upper") || !e.contains("theta_lower")) {
        throw std::invalid_argument("tunable program entry missing arm phases");
      }
      s.theta_upper = e["theta_upper"].get<double>();
      s.theta_lower = e["theta_lower"].get<double>();
      if (e.contains("loss_db") && !e["loss_db"].is_null()) {
        s.insertion_loss_db = e["loss_db"].get<double>();
      }
      if (!std::isfinite(s.theta_upper) || !std::isfinite(s.theta_lower) ||
          !std::isfinite(s.insertion_loss_db) || s.insertion_loss_db < 0.0) {
        throw std::invalid_argument("tunable program entry has invalid numbers");
      }
      program.set(tbu, TBUMode::tunable(s));
    } else {
      throw std::invalid_argument("unknown program mode: " + mode);
    }
  }
  return {std::move(mesh), std::move(program)};
}

}  // namespace pmesh
