#include "pmesh/router.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include <json.hpp>

#include "pmesh/errors.hpp"

namespace pmesh {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int junction_of_port(const Mesh& mesh, PortId p) {
  return mesh.junction_of(port_tbu(p), port_end(p));
}

// Exit port after traversing the entry port's TBU in the given mode:
// bar keeps the rail, cross swaps it.
PortId exit_of(PortId entry, bool cross) {
  const int t = port_tbu(entry), e = port_end(entry), r = port_rail(entry);
  return make_port(t, 1 - e, cross ? 1 - r : r);
}

void validate_request(const Mesh& mesh, const RoutingRequest& req) {
  if (!mesh.valid_port(req.source) || !mesh.is_external(req.source)) {
    throw std::invalid_argument("route: source must be an external port");
  }
  if (!mesh.valid_port(req.destination) || !mesh.is_external(req.destination)) {
    throw std::invalid_argument("route: destination must be an external port");
  }
  if (req.source == req.destination) {
    throw std::invalid_argument("route: source equals destination");
  }
  for (double w : {req.w_hop, req.w_loss, req.w_power}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("route: weights must be finite and >= 0");
    }
  }
  if (req.w_hop + req.w_loss + req.w_power == 0.0) {
    throw std::invalid_argument("route: weights must not all be zero");
  }
  if (!std::isfinite(req.tbu_loss_db) || req.tbu_loss_db < 0.0) {
    throw std::invalid_argument("route: TBU loss must be finite and >= 0");
  }
  for (int t : req.blocked) {
    if (t < 0 || t >= mesh.tbu_count()) {
      throw std::invalid_argument("route: blocked set names unknown TBU " +
                                  std::to_string(t));
    }
  }
}

struct Searcher {
  const Mesh& mesh;
  const RoutingRequest& req;
  int goal_junction;
  std::vector<char> usable;   // per TBU
  std::vector<double> bound;  // admissible cost-to-goal per entry port
  Route best;
  bool found = false;
  std::vector<RouteHop> hops;
  std::vector<char> used;
  double cost = 0.0;

  double hop_cost(bool cross) const {
    const bool powered = cross ? req.cross_needs_power : req.bar_needs_power;
    return req.w_hop + req.w_loss * req.tbu_loss_db +
           req.w_power * (powered ? 1.0 : 0.0);
  }

  bool is_goal_exit(PortId q) const {
    return mesh.is_external(q) && junction_of_port(mesh, q) == goal_junction;
  }

  // Lower bound on the remaining cost from each entry port, from a
  // Dijkstra pass over the entry-port graph with the TBU-simple
  // constraint relaxed (never overestimates).
  void compute_bound() {
    bound.assign(4 * mesh.tbu_count(), kInf);
    using Item = std::pair<double, PortId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    std::vector<std::vector<std::pair<PortId, double>>> rev(4 * mesh.tbu_count());
    for (PortId p = 0; p < 4 * mesh.tbu_count(); ++p) {
      if (!usable[port_tbu(p)]) continue;
      for (bool cross : {false, true}) {
        const double c = hop_cost(cross);
        const PortId q = exit_of(p, cross);
        if (is_goal_exit(q)) {
          if (c < bound[p]) {
            bound[p] = c;
            pq.push({c, p});
          }
        } else if (auto peer = mesh.connected_to(q)) {
          rev[*peer].push_back({p, c});
        }
      }
    }
    while (!pq.empty()) {
      const auto [d, node] = pq.top();
      pq.pop();
      if (d > bound[node]) continue;
      for (const auto& [pred, c] : rev[node]) {
        if (d + c < bound[pred]) {
          bound[pred] = d + c;
          pq.push({d + c, pred});
        }
      }
    }
  }

  // True when the candidate beats the incumbent under the deterministic
  // selection key.
  bool better(double c, const std::vector<RouteHop>& h, PortId entry,
              PortId exit) const {
    if (!found) return true;
    if (c != best.cost) return c < best.cost;
    const auto by_tbu = [](const RouteHop& a, const RouteHop& b) {
      return a.tbu_id < b.tbu_id;
    };
    if (std::lexicographical_compare(h.begin(), h.end(), best.hops.begin(),
                                     best.hops.end(), by_tbu)) {
      return true;
    }
    if (std::lexicographical_compare(best.hops.begin(), best.hops.end(),
                                     h.begin(), h.end(), by_tbu)) {
      return false;
    }
    for (size_t i = 0; i < h.size(); ++i) {
      if (h[i].mode != best.hops[i].mode) return h[i].mode < best.hops[i].mode;
    }
    if (entry != best.entry_port) return entry < best.entry_port;
    return exit < best.exit_port;
  }

  void dfs(PortId entry, PortId first_entry) {
    const int t = port_tbu(entry);
    if (!usable[t] || used[t]) return;
    if (bound[entry] == kInf) return;
    if (found && cost + bound[entry] > best.cost) return;

    used[t] = 1;
    const double saved = cost;  // restore by assignment: -= would drift ulps
    for (bool cross : {false, true}) {
      const PortId q = exit_of(entry, cross);
      hops.push_back({t, cross ? TBUState::Cross : TBUState::Bar});
      cost = saved + hop_cost(cross);
      if (is_goal_exit(q)) {
        if (better(cost, hops, first_entry, q)) {
          best.hops = hops;
          best.cost = cost;
          best.entry_port = first_entry;
          best.exit_port = q;
          found = true;
        }
      } else if (auto peer = mesh.connected_to(q)) {
        dfs(*peer, first_entry);
      }
      hops.pop_back();
    }
    cost = saved;
    used[t] = 0;
  }
};

}  // namespace

Route route(const Mesh& mesh, const RoutingRequest& req) {
  validate_request(mesh, req);

  Searcher s{mesh, req, junction_of_port(mesh, req.destination), {}, {}, {},
             false,    {},  {},                                  0.0};
  s.usable.assign(mesh.tbu_count(), 1);
  for (int t : req.blocked) s.usable[t] = 0;
  s.used.assign(mesh.tbu_count(), 0);
  s.compute_bound();

  // Entry candidates: the source port first, then its junction siblings.
  std::vector<PortId> starts;
  for (PortId p : mesh.external_ports()) {
    if (junction_of_port(mesh, p) ==
        junction_of_port(mesh, req.source)) {
      starts.push_back(p);
    }
  }
  std::sort(starts.begin(), starts.end());
  for (PortId p : starts) s.dfs(p, p);

  if (!s.found) {
    throw DomainError("no unblocked route from port " +
                      std::to_string(req.source) + " to port " +
                      std::to_string(req.destination));
  }
  s.best.loss_db = static_cast<double>(s.best.hops.size()) * req.tbu_loss_db;
  return s.best;
}

Program apply_route(const Program& program, const Route& r) {
  Program out = program;
  for (const RouteHop& hop : r.hops) {
    if (out.mode_of(hop.tbu_id).state != TBUState::Off) {
      throw DomainError("TBU " + std::to_string(hop.tbu_id) +
                        " is already in use");
    }
    out.set(hop.tbu_id, hop.mode == TBUState::Cross ? TBUMode::cross()
                                                    : TBUMode::bar());
  }
  return out;
}

std::pair<Program, std::vector<Route>> multi_route(
    const Mesh& mesh, const std::vector<RoutingRequest>& requests) {
  if (requests.empty()) {
    throw std::invalid_argument("multi_route: no requests");
  }
  Program program;
  std::vector<Route> routes;
  std::set<int> taken;
  for (size_t k = 0; k < requests.size(); ++k) {
    RoutingRequest req = requests[k];
    req.blocked.insert(taken.begin(), taken.end());
    try {
      routes.push_back(route(mesh, req));
    } catch (const DomainError& e) {
      throw DomainError("request " + std::to_string(k) + ": " + e.what());
    }
    program = apply_route(program, routes.back());
    for (const RouteHop& hop : routes.back().hops) taken.insert(hop.tbu_id);
  }
  return {std::move(program), std::move(routes)};
}

std::string route_json(const Route& r) {
  nlohmann::ordered_json doc;
  doc["cost"] = r.cost;
  doc["loss_db"] = r.loss_db;
  doc["hops"] = nlohmann::ordered_json::array();
  for (const RouteHop& hop : r.hops) {
    doc["hops"].push_back(
        {{"tbu_id", hop.tbu_id},
         {"mode", hop.mode == TBUState::Cross ? "cross" : "bar"}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace pmesh
