#pragma once

#include <optional>
#include <vector>

#include "pmesh/mesh.hpp"
#include "pmesh/router.hpp"

// Exhaustive routing oracle: enumerate every TBU-simple route between the
// requested junctions by plain recursion, then pick the minimum under the
// documented selection key.  No pruning, no heuristics — independent of
// the production search.
namespace route_oracle {

inline int junction_of(const pmesh::Mesh& m, pmesh::PortId p) {
  return m.junction_of(pmesh::port_tbu(p), pmesh::port_end(p));
}

inline void enumerate(const pmesh::Mesh& mesh, const pmesh::RoutingRequest& req,
                      pmesh::PortId entry, pmesh::PortId first,
                      std::vector<char>& used, std::vector<pmesh::RouteHop>& hops,
                      double cost, std::vector<pmesh::Route>& out) {
  const int t = pmesh::port_tbu(entry);
  if (req.blocked.count(t) || used[t]) return;
  used[t] = 1;
  for (int cross = 0; cross < 2; ++cross) {
    const bool powered = cross ? req.cross_needs_power : req.bar_needs_power;
    const double c =
        req.w_hop + req.w_loss * req.tbu_loss_db + req.w_power * (powered ? 1 : 0);
    const int rail =
        cross ? 1 - pmesh::port_rail(entry) : pmesh::port_rail(entry);
    const pmesh::PortId q =
        pmesh::make_port(t, 1 - pmesh::port_end(entry), rail);
    hops.push_back(
        {t, cross ? pmesh::TBUState::Cross : pmesh::TBUState::Bar});
    if (mesh.is_external(q)) {
      if (junction_of(mesh, q) == junction_of(mesh, req.destination)) {
        pmesh::Route r;
        r.hops = hops;
        r.cost = cost + c;
        r.loss_db = static_cast<double>(hops.size()) * req.tbu_loss_db;
        r.entry_port = first;
        r.exit_port = q;
        out.push_back(r);
      }
    } else {
      enumerate(mesh, req, *mesh.connected_to(q), first, used, hops, cost + c,
                out);
    }
    hops.pop_back();
  }
  used[t] = 0;
}

inline std::vector<pmesh::Route> all_routes(const pmesh::Mesh& mesh,
                                            const pmesh::RoutingRequest& req) {
  std::vector<pmesh::Route> out;
  std::vector<char> used(mesh.tbu_count(), 0);
  std::vector<pmesh::RouteHop> hops;
  for (pmesh::PortId p : mesh.external_ports()) {
    if (junction_of(mesh, p) == junction_of(mesh, req.source)) {
      enumerate(mesh, req, p, p, used, hops, 0.0, out);
    }
  }
  return out;
}

// Selection key: cost, then TBU-id sequence, then modes (bar < cross),
// then entry and exit ports.
inline bool route_less(const pmesh::Route& a, const pmesh::Route& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  const auto tbus = [](const pmesh::Route& r) {
    std::vector<int> v;
    for (const auto& h : r.hops) v.push_back(h.tbu_id);
    return v;
  };
  const std::vector<int> ta = tbus(a), tb = tbus(b);
  if (ta != tb) return ta < tb;
  const auto modes = [](const pmesh::Route& r) {
    std::vector<int> v;
    for (const auto& h : r.hops) v.push_back(static_cast<int>(h.mode));
    return v;
  };
  const std::vector<int> ma = modes(a), mb = modes(b);
  if (ma != mb) return ma < mb;
  if (a.entry_port != b.entry_port) return a.entry_port < b.entry_port;
  return a.exit_port < b.exit_port;
}

inline std::optional<pmesh::Route> best_route(const pmesh::Mesh& mesh,
                                              const pmesh::RoutingRequest& req) {
  std::vector<pmesh::Route> all = all_routes(mesh, req);
  if (all.empty()) return std::nullopt;
  return *std::min_element(all.begin(), all.end(), route_less);
}

inline bool same_route(const pmesh::Route& a, const pmesh::Route& b) {
  if (a.cost != b.cost || a.loss_db != b.loss_db ||
      a.entry_port != b.entry_port || a.exit_port != b.exit_port ||
      a.hops.size() != b.hops.size()) {
    return false;
  }
  for (size_t i = 0; i < a.hops.size(); ++i) {
    if (a.hops[i].tbu_id != b.hops[i].tbu_id ||
        a.hops[i].mode != b.hops[i].mode) {
      return false;
    }
  }
  return true;
}

}  // namespace route_oracle
