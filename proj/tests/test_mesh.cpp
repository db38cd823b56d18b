#include "pmesh/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

#include <doctest.h>
#include <json.hpp>

using namespace pmesh;

namespace {

// Independent edge-count oracle: place every cell polygon in the plane
// with floating-point corner coordinates and deduplicate edges by rounded
// endpoints — no shared code with the generator's integer lattice.
int edge_count_oracle(Topology topo, int m, int n) {
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<std::vector<std::pair<double, double>>> polys;
  if (topo == Topology::Square) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        polys.push_back({{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}});
  } else if (topo == Topology::Triangular) {
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) {
        const double x0 = c / 2 + 0.5 * r;
        if (c % 2 == 0) {
          polys.push_back({{x0, r * h}, {x0 + 1, r * h}, {x0 + 0.5, (r + 1) * h}});
        } else {
          polys.push_back(
              {{x0 + 1, r * h}, {x0 + 1.5, (r + 1) * h}, {x0 + 0.5, (r + 1) * h}});
        }
      }
  } else {
    for (int q = 0; q < m; ++q)
      for (int r = 0; r < n; ++r) {
        const double cx = 1.5 * q + 1.0;
        const double cy = h * (2 * r + (q & 1) + 1);
        polys.push_back({{cx + 1, cy},
                         {cx + 0.5, cy + h},
                         {cx - 0.5, cy + h},
                         {cx - 1, cy},
                         {cx - 0.5, cy - h},
                         {cx + 0.5, cy - h}});
      }
  }
  using Key = std::array<long long, 2>;
  auto key = [](double x, double y) {
    return Key{std::llround(x * 1e6), std::llround(y * 1e6)};
  };
  std::set<std::pair<Key, Key>> edges;
  for (const auto& poly : polys) {
    for (size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      Key ka = key(a.first, a.second), kb = key(b.first, b.second);
      if (kb < ka) std::swap(ka, kb);
      edges.insert({ka, kb});
    }
  }
  return static_cast<int>(edges.size());
}

int max_junction_degree(Topology t) {
  switch (t) {
    case Topology::Square: return 4;
    case Topology::Triangular: return 6;
    case Topology::Hexagonal: return 3;
  }
  return 0;
}

int cell_sides(Topology t) {
  switch (t) {
    case Topology::Square: return 4;
    case Topology::Triangular: return 3;
    case Topology::Hexagonal: return 6;
  }
  return 0;
}

bool tbu_graph_connected(const Mesh& mesh) {
  std::vector<int> parent(mesh.tbu_count());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& [a, b] : mesh.connections()) {
    parent[find(port_tbu(a))] = find(port_tbu(b));
  }
  for (int t = 1; t < mesh.tbu_count(); ++t) {
    if (find(t) != find(0)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("port id packing") {
  CHECK(make_port(3, 1, 0) == 14);
  CHECK(port_tbu(14) == 3);
  CHECK(port_end(14) == 1);
  CHECK(port_rail(14) == 0);
  for (PortId p = 0; p < 64; ++p) {
    CHECK(make_port(port_tbu(p), port_end(p), port_rail(p)) == p);
  }
}

TEST_CASE("topology names round-trip") {
  for (Topology t : {Topology::Square, Topology::Triangular, Topology::Hexagonal}) {
    CHECK(topology_from_name(topology_name(t)) == t);
  }
  CHECK(!topology_from_name("octagonal").has_value());
}

TEST_CASE("single hexagonal cell has 6 TBUs and 12 external ports") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 1, 1);
  CHECK(mesh.tbu_count() == 6);
  CHECK(mesh.external_ports().size() == 12);
  CHECK(mesh.connections().size() == 6);
  CHECK(mesh.junctions().size() == 6);
  // Each corner joins one port of each adjacent end, leaving two external.
  for (const Junction& j : mesh.junctions()) {
    CHECK(j.ends.size() == 2);
    int external_here = 0;
    for (const auto& [tbu, end] : j.ends) {
      for (int rail = 0; rail < 2; ++rail) {
        if (mesh.is_external(make_port(tbu, end, rail))) ++external_here;
      }
    }
    CHECK(external_here == 2);
  }
}

TEST_CASE("single square cell wiring, frozen") {
  const Mesh mesh = Mesh::generate(Topology::Square, 1, 1);
  CHECK(mesh.tbu_count() == 4);
  CHECK(mesh.external_ports().size() == 8);
  const std::vector<std::pair<PortId, PortId>> want_conns = {
      {1, 4}, {3, 9}, {6, 12}, {11, 14}};
  CHECK(mesh.connections() == want_conns);
  const std::vector<PortId> want_ext = {0, 5, 2, 8, 10, 15, 7, 13};
  CHECK(mesh.external_ports() == want_ext);
  // Sides listed in sorted edge order: left, bottom, top, right.
  CHECK(mesh.rail_toward_cell(0, 0) == 1);
  CHECK(mesh.rail_toward_cell(1, 0) == 0);
  CHECK(mesh.rail_toward_cell(2, 0) == 1);
  CHECK(mesh.rail_toward_cell(3, 0) == 0);
}

TEST_CASE("single triangular cell counts") {
  const Mesh mesh = Mesh::generate(Topology::Triangular, 1, 1);
  CHECK(mesh.tbu_count() == 3);
  CHECK(mesh.connections().size() == 3);
  CHECK(mesh.external_ports().size() == 6);
}

TEST_CASE("TBU count matches the independent edge enumeration") {
  for (Topology topo :
       {Topology::Square, Topology::Triangular, Topology::Hexagonal}) {
    for (int m = 1; m <= 4; ++m) {
      for (int n = 1; n <= 4; ++n) {
        const Mesh mesh = Mesh::generate(topo, m, n);
        CHECK(mesh.tbu_count() == edge_count_oracle(topo, m, n));
      }
    }
  }
  // Square also has a closed form: m*(n+1) horizontal + n*(m+1) vertical.
  CHECK(Mesh::generate(Topology::Square, 3, 2).tbu_count() == 3 * 3 + 2 * 4);
  CHECK(Mesh::generate(Topology::Hexagonal, 2, 2).tbu_count() == 19);
}

TEST_CASE("mesh invariants across topologies and sizes") {
  for (Topology topo :
       {Topology::Square, Topology::Triangular, Topology::Hexagonal}) {
    for (int m = 1; m <= 4; ++m) {
      for (int n = 1; n <= 4; ++n) {
        CAPTURE(topology_name(topo));
        CAPTURE(m);
        CAPTURE(n);
        const Mesh mesh = Mesh::generate(topo, m, n);
        const int ports = 4 * mesh.tbu_count();

        // TBU ids and ports are densely numbered.
        for (int t = 0; t < mesh.tbu_count(); ++t) {
          CHECK(mesh.tbus()[t].id == t);
          for (int p = 0; p < 4; ++p) {
            CHECK(mesh.tbus()[t].ports[p] == 4 * t + p);
          }
        }

        // Every port is internal xor external; internal ports pair up.
        int internal = 0;
        for (PortId p = 0; p < ports; ++p) {
          const auto peer = mesh.connected_to(p);
          CHECK(peer.has_value() != mesh.is_external(p));
          if (peer) {
            ++internal;
            CHECK(mesh.connected_to(*peer) == p);
            // A connection never leaves its junction.
            CHECK(mesh.junction_of(port_tbu(p), port_end(p)) ==
                  mesh.junction_of(port_tbu(*peer), port_end(*peer)));
          }
        }
        CHECK(internal == 2 * static_cast<int>(mesh.connections().size()));
        CHECK(static_cast<int>(mesh.external_ports().size()) ==
              ports - internal);

        // Each port appears in at most one connection pair.
        std::set<PortId> seen;
        for (const auto& [a, b] : mesh.connections()) {
          CHECK(a < b);
          CHECK(seen.insert(a).second);
          CHECK(seen.insert(b).second);
        }
        CHECK(std::is_sorted(mesh.connections().begin(),
                             mesh.connections().end()));

        // Junction degree respects the lattice vertex degree.
        for (const Junction& j : mesh.junctions()) {
          CHECK(static_cast<int>(j.ends.size()) <= max_junction_degree(topo));
          CHECK(!j.ends.empty());
        }

        CHECK(tbu_graph_connected(mesh));

        // Cells: one polygon per lattice cell, each with one TBU per side;
        // the ports facing a cell interior are always interconnected.
        CHECK(static_cast<int>(mesh.cells().size()) == m * n);
        for (size_t c = 0; c < mesh.cells().size(); ++c) {
          const Cell& cell = mesh.cells()[c];
          CHECK(static_cast<int>(cell.tbus.size()) == cell_sides(topo));
          CHECK(mesh.find_cell(cell.q, cell.r) == &cell);
          std::set<PortId> facing;
          for (int t : cell.tbus) {
            const int rail = mesh.rail_toward_cell(t, static_cast<int>(c));
            facing.insert(make_port(t, 0, rail));
            facing.insert(make_port(t, 1, rail));
          }
          for (PortId p : facing) {
            const auto peer = mesh.connected_to(p);
            CHECK(peer.has_value());
            CHECK(facing.count(*peer) == 1);
          }
        }

        // External ordering is deterministic and starts at the lowest id.
        const Mesh again = Mesh::generate(topo, m, n);
        CHECK(again.external_ports() == mesh.external_ports());
        CHECK(again.connections() == mesh.connections());
        CHECK(mesh.external_ports().front() ==
              *std::min_element(mesh.external_ports().begin(),
                                mesh.external_ports().end()));
        for (size_t i = 0; i < mesh.external_ports().size(); ++i) {
          CHECK(mesh.external_index(mesh.external_ports()[i]) ==
                static_cast<int>(i));
        }
      }
    }
  }
}

TEST_CASE("generate rejects bad dimensions") {
  CHECK_THROWS_AS(Mesh::generate(Topology::Square, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(Mesh::generate(Topology::Hexagonal, 1, -2),
                  std::invalid_argument);
}

TEST_CASE("fragment meshes synthesize junctions from connections") {
  const Mesh frag = Mesh::from_parts(
      2, {{make_port(0, 1, 0), make_port(1, 0, 0)},
          {make_port(0, 1, 1), make_port(1, 0, 1)}});
  CHECK(frag.tbu_count() == 2);
  CHECK(frag.junctions().size() == 3);
  CHECK(frag.connected_to(make_port(0, 1, 0)) == make_port(1, 0, 0));
  CHECK(frag.external_ports() == std::vector<PortId>{0, 1, 6, 7});
  CHECK(frag.junction_of(0, 1) == frag.junction_of(1, 0));

  CHECK_THROWS_AS(Mesh::from_parts(1, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Mesh::from_parts(1, {{0, 9}}), std::invalid_argument);
  CHECK_THROWS_AS(Mesh::from_parts(2, {{0, 4}, {0, 5}}), std::invalid_argument);
}

TEST_CASE("serialization round-trips mesh and program") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 2, 2);
  Program prog;
  prog.set(0, TBUMode::bar());
  prog.set(1, TBUMode::cross());
  prog.set(2, TBUMode::tunable({0.3, -1.2, 0.5}));
  prog.set(3, TBUMode::off());

  const std::string text = serialize(mesh, prog);
  CHECK(serialize(mesh, prog) == text);  // byte-stable

  const auto [mesh2, prog2] = deserialize(text);
  CHECK(mesh2.topology() == mesh.topology());
  CHECK(mesh2.m() == 2);
  CHECK(mesh2.n() == 2);
  CHECK(mesh2.connections() == mesh.connections());
  CHECK(mesh2.external_ports() == mesh.external_ports());
  for (int t = 0; t < mesh.tbu_count(); ++t) {
    CHECK(prog2.mode_of(t).state == prog.mode_of(t).state);
  }
  CHECK(prog2.mode_of(2).settings.theta_upper == 0.3);
  CHECK(prog2.mode_of(2).settings.theta_lower == -1.2);
  CHECK(prog2.mode_of(2).settings.insertion_loss_db == 0.5);
  CHECK(serialize(mesh2, prog2) == text);
}

TEST_CASE("deserialize rejects malformed documents") {
  const Mesh mesh = Mesh::generate(Topology::Square, 2, 1);
  const std::string good = serialize(mesh, Program{});
  using nlohmann::ordered_json;

  SUBCASE("not JSON") {
    CHECK_THROWS_AS(deserialize("not json {"), std::invalid_argument);
  }
  SUBCASE("unknown version is named") {
    ordered_json doc = ordered_json::parse(good);
    doc["version"] = 2;
    try {
      deserialize(doc.dump());
      FAIL("expected a version error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }
  SUBCASE("missing field") {
    ordered_json doc = ordered_json::parse(good);
    doc.erase("connections");
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("port in two connections") {
    ordered_json doc = ordered_json::parse(good);
    auto first = doc["connections"][0];
    doc["connections"].push_back({first[0], doc["connections"][1][1]});
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("dangling or missing connection") {
    ordered_json doc = ordered_json::parse(good);
    doc["connections"].erase(0);
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("unknown topology") {
    ordered_json doc = ordered_json::parse(good);
    doc["topology"] = "octagonal";
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("program references unknown TBU") {
    ordered_json doc = ordered_json::parse(good);
    doc["program"].push_back({{"tbu_id", 99}, {"mode", "bar"}});
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("program lists a TBU twice") {
    ordered_json doc = ordered_json::parse(good);
    doc["program"].push_back({{"tbu_id", 0}, {"mode", "bar"}});
    doc["program"].push_back({{"tbu_id", 0}, {"mode", "cross"}});
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("unknown mode name") {
    ordered_json doc = ordered_json::parse(good);
    doc["program"].push_back({{"tbu_id", 0}, {"mode", "diagonal"}});
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
  SUBCASE("tunable entry missing phases") {
    ordered_json doc = ordered_json::parse(good);
    doc["program"].push_back({{"tbu_id", 0}, {"mode", "tunable"}});
    CHECK_THROWS_AS(deserialize(doc.dump()), std::invalid_argument);
  }
}

TEST_CASE("fragments cannot be serialized") {
  const Mesh frag = Mesh::from_parts(1, {});
  CHECK_THROWS_AS(serialize(frag, Program{}), std::invalid_argument);
}
