#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pmesh/mesh.hpp"

namespace pmesh {

// A request to connect two external ports.  Endpoints designate their
// junctions: the route may enter or leave through any external port at
// the same junction (the requested ports themselves when possible), which
// keeps a connection routable when the port's own TBU is blocked.
struct RoutingRequest {
  PortId source = -1;
  PortId destination = -1;
  std::set<int> blocked;  // TBU ids that must not be used

  // Cost of one routed TBU: w_hop + w_loss*tbu_loss_db + w_power*(1 if
  // the assigned mode needs an active drive).  Weights must be >= 0 and
  // not all zero.
  double w_hop = 1.0;
  double w_loss = 0.0;
  double w_power = 0.0;
  double tbu_loss_db = kDefaultTbuLossDb;
  bool bar_needs_power = true;     // bar holds a pi differential drive
  bool cross_needs_power = false;  // cross is the rest state
};

struct RouteHop {
  int tbu_id = -1;
  TBUState mode = TBUState::Bar;  // Bar or Cross
};

struct Route {
  std::vector<RouteHop> hops;  // in traversal order
  double cost = 0.0;
  double loss_db = 0.0;
  PortId entry_port = -1;  // external port where the light enters
  PortId exit_port = -1;   // external port where it leaves
};

// Cost-minimal route under the request's weights.  Ties break by the
// lexicographically smallest TBU-id sequence, then mode sequence with
// bar before cross, then entry and exit port ids.  Throws DomainError
// when every route is blocked.
Route route(const Mesh& mesh, const RoutingRequest& request);

// Program with the route's drive states added.  Every routed TBU must be
// off in the input program; a conflict names the TBU.
Program apply_route(const Program& program, const Route& route);

// Sequential routing: each request sees the TBUs of earlier routes as
// blocked.  The first infeasible request aborts with its index; nothing
// partial is returned.
std::pair<Program, std::vector<Route>> multi_route(
    const Mesh& mesh, const std::vector<RoutingRequest>& requests);

// JSON report {cost, loss_db, hops: [{tbu_id, mode}]}.
std::string route_json(const Route& route);

}  // namespace pmesh
