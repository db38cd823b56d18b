#include "pmesh/presets.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "pmesh/errors.hpp"
#include "pmesh/tbu.hpp"

namespace pmesh {

namespace {

constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;

// One traversal of a TBU: enter on rail_in at one end, leave on rail_out
// at the other.  The transfer factor is the (rail_out, rail_in) entry of
// the unit's effective transfer.
struct Hop {
  int tbu = -1;
  int rail_in = 0;
  int rail_out = 0;
};

Complex hop_factor(const Hop& h, const Program& program,
                   const WaveguideParams& params, double f_hz) {
  const Gate2 g = effective_transfer(program.mode_of(h.tbu), params, f_hz);
  return g(h.rail_out, h.rail_in);
}

Complex path_factor(const std::vector<Hop>& hops, const Program& program,
                    const WaveguideParams& params, double f_hz) {
  Complex acc{1.0, 0.0};
  for (const Hop& h : hops) acc *= hop_factor(h, program, params, f_hz);
  return acc;
}

double wrap_2pi(double phi) {
  phi = std::fmod(phi, 2.0 * kPi);
  return phi < 0.0 ? phi + 2.0 * kPi : phi;
}

void require_generated_hexagonal(const Mesh& mesh, const std::string& who) {
  if (mesh.topology() != Topology::Hexagonal || mesh.m() < 1)
    throw std::invalid_argument(who + ": requires a generated hexagonal mesh");
}

// Rejects kappa outside (0, 1]; the zero-coupling case is a domain error
// because the coupler degenerates to bar and no light enters the loop.
void check_kappa(double kappa, const std::string& who) {
  if (!std::isfinite(kappa) || kappa < 0.0 || kappa > 1.0)
    throw std::invalid_argument(who + ": kappa must lie in (0, 1]");
  if (kappa == 0.0)
    throw DomainError(who + ": kappa = 0 forms no ring (coupler is fully bar)");
}

int require_cell_index(const Mesh& mesh, int q, int r, const std::string& who) {
  const Cell* c = mesh.find_cell(q, r);
  if (!c)
    throw std::invalid_argument(who + ": cell (" + std::to_string(q) + ", " +
                                std::to_string(r) + ") out of range");
  return static_cast<int>(c - mesh.cells().data());
}

// ---------------------------------------------------------------------------
// Ring cavity built on one hexagonal cell.

struct RingParts {
  Program program;
  std::vector<int> used;
  int coupler = -1;
  int bus_rail = 0;          // coupler rail carrying the bus (same index
                             // at both ends; the other rail faces the cell)
  PortId bus_in = -1;        // bus port at the entry end
  PortId bus_out = -1;       // bus port at the far end
  std::vector<Hop> loop;     // the five bar units around the cell
};

// Walks the closed loop from the coupler's inner rail through the five
// bar units back to the coupler.  Bar drive keeps the rail index, and the
// cell-facing rails around one cell are chained by the interconnects.
std::vector<Hop> walk_loop(const Mesh& mesh, int coupler, int exit_end,
                           int inner_rail) {
  std::vector<Hop> hops;
  std::optional<PortId> q =
      mesh.connected_to(make_port(coupler, exit_end, inner_rail));
  while (q && port_tbu(*q) != coupler && hops.size() < 64) {
    const int t = port_tbu(*q), e = port_end(*q), r = port_rail(*q);
    hops.push_back({t, r, r});
    q = mesh.connected_to(make_port(t, 1 - e, r));
  }
  if (!q || *q != make_port(coupler, 1 - exit_end, inner_rail))
    throw std::logic_error("ring loop walk did not close");
  return hops;
}

RingParts make_ring(const Mesh& mesh, int cell_index, int coupler,
                    int entry_end, double kappa) {
  const Cell& cell = mesh.cells()[cell_index];
  RingParts rp;
  rp.coupler = coupler;
  rp.bus_rail = 1 - mesh.rail_toward_cell(coupler, cell_index);
  rp.bus_in = make_port(coupler, entry_end, rp.bus_rail);
  rp.bus_out = make_port(coupler, 1 - entry_end, rp.bus_rail);
  rp.program.set(coupler, TBUMode::tunable(settings_for_coupling(kappa)));
  for (int t : cell.tbus)
    if (t != coupler) rp.program.set(t, TBUMode::bar());
  rp.used = cell.tbus;
  std::sort(rp.used.begin(), rp.used.end());
  rp.loop = walk_loop(mesh, coupler, 1 - entry_end, 1 - rp.bus_rail);
  return rp;
}

// Closed-form all-pass response of one ring through its coupler:
//   H = g_bb + g_bl * Lambda * g_lb / (1 - g_ll * Lambda)
// where g is the coupler transfer over (bus, loop) rails and Lambda the
// product of the loop units' diagonal factors at frequency f.
Complex ring_h(const Program& program, int coupler, int bus_rail,
               const std::vector<Hop>& loop, const WaveguideParams& params,
               double f_hz) {
  const Gate2 g = effective_transfer(program.mode_of(coupler), params, f_hz);
  const Complex lambda = path_factor(loop, program, params, f_hz);
  const int a = bus_rail, i = 1 - bus_rail;
  return g(a, a) + g(a, i) * lambda * g(i, a) / (1.0 - g(i, i) * lambda);
}

// ---------------------------------------------------------------------------
// Depth-first search for a chain of free units carrying a wave from the
// entering port q to the designated target port in exactly `remaining`
// traversals.  On success the chain is left in `out`/`used` and the
// continuation `k` has accepted it; alternatives are enumerated in a
// fixed order (lower TBU first is implied by the port walk, bar before
// cross), so the first full solution is deterministic.

struct ChainHit {
  std::vector<int> tbus;
  std::vector<TBUState> modes;
  std::vector<Hop> hops;
};

template <typename K>
bool chain_search(const Mesh& mesh, const std::set<int>* allowed, PortId q,
                  PortId target, int remaining, std::set<int>& used,
                  ChainHit& out, K&& k, long* budget = nullptr) {
  if (budget && --*budget < 0) return false;
  const int t = port_tbu(q), e = port_end(q), r = port_rail(q);
  if (used.count(t) || (allowed && !allowed->count(t))) return false;
  used.insert(t);
  for (int cross = 0; cross < 2; ++cross) {
    const int ro = cross ? 1 - r : r;
    const std::optional<PortId> peer =
        mesh.connected_to(make_port(t, 1 - e, ro));
    out.tbus.push_back(t);
    out.modes.push_back(cross ? TBUState::Cross : TBUState::Bar);
    out.hops.push_back({t, r, ro});
    bool ok;
    if (remaining == 1)
      ok = peer && *peer == target && k();
    else
      ok = peer && chain_search(mesh, allowed, *peer, target, remaining - 1,
                                used, out, k, budget);
    if (ok) return true;
    out.tbus.pop_back();
    out.modes.pop_back();
    out.hops.pop_back();
  }
  used.erase(t);
  return false;
}

void set_chain_modes(Program& program, const ChainHit& chain) {
  for (size_t i = 0; i < chain.tbus.size(); ++i)
    program.set(chain.tbus[i], chain.modes[i] == TBUState::Cross
                                   ? TBUMode::cross()
                                   : TBUMode::bar());
}

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (int id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

PresetResult ring_filter(const Mesh& mesh, int cell_q, int cell_r,
                         double kappa) {
  require_generated_hexagonal(mesh, "ring_filter");
  const int ci = require_cell_index(mesh, cell_q, cell_r, "ring_filter");
  check_kappa(kappa, "ring_filter");

  // Coupler: the lowest-id cell unit whose bus rail is external at both
  // ends, so the ring can be driven and observed directly.
  const Cell& cell = mesh.cells()[ci];
  std::vector<int> ids = cell.tbus;
  std::sort(ids.begin(), ids.end());
  int coupler = -1;
  for (int t : ids) {
    const int bus = 1 - mesh.rail_toward_cell(t, ci);
    if (mesh.is_external(make_port(t, 0, bus)) &&
        mesh.is_external(make_port(t, 1, bus))) {
      coupler = t;
      break;
    }
  }
  if (coupler < 0)
    throw DomainError("ring_filter: cell (" + std::to_string(cell_q) + ", " +
                      std::to_string(cell_r) +
                      ") has no unit with external bus ports; pick a boundary "
                      "cell");

  RingParts rp = make_ring(mesh, ci, coupler, 0, kappa);
  PresetResult out;
  out.program = rp.program;
  out.used = rp.used;
  out.inputs = {rp.bus_in};
  out.outputs = {rp.bus_out};
  out.reference = [program = rp.program, coupler = rp.coupler,
                   bus_rail = rp.bus_rail, loop = rp.loop](
                      double f, const WaveguideParams& wp) -> Eigen::MatrixXcd {
    return Eigen::MatrixXcd::Constant(
        1, 1, ring_h(program, coupler, bus_rail, loop, wp, f));
  };
  out.notes = "ring at cell (" + std::to_string(cell_q) + ", " +
              std::to_string(cell_r) + "): coupler " + std::to_string(coupler) +
              " kappa " + std::to_string(kappa) + ", loop [" +
              join_ids(rp.used) + "]";
  return out;
}

PresetResult vernier_pair(const Mesh& mesh, int cell_a_q, int cell_a_r,
                          int cell_b_q, int cell_b_r, double kappa_a,
                          double kappa_b) {
  require_generated_hexagonal(mesh, "vernier_pair");
  if (cell_a_q == cell_b_q && cell_a_r == cell_b_r)
    throw std::invalid_argument("vernier_pair: cells must be distinct");
  const int ia = require_cell_index(mesh, cell_a_q, cell_a_r, "vernier_pair");
  const int ib = require_cell_index(mesh, cell_b_q, cell_b_r, "vernier_pair");
  check_kappa(kappa_a, "vernier_pair");
  check_kappa(kappa_b, "vernier_pair");

  const Cell& ca = mesh.cells()[ia];
  const Cell& cb = mesh.cells()[ib];
  for (int t : ca.tbus)
    if (std::count(cb.tbus.begin(), cb.tbus.end(), t))
      throw DomainError("vernier_pair: cells overlap at TBU " +
                        std::to_string(t) + "; pick non-adjacent cells");

  std::set<int> occupied(ca.tbus.begin(), ca.tbus.end());
  occupied.insert(cb.tbus.begin(), cb.tbus.end());

  // Ring A is entered from an external bus port and leaves into the mesh;
  // ring B is entered from the mesh and leaves at an external port.  A
  // unit qualifies when exactly one end of its bus rail is external.
  const auto one_external_end = [&](int cell_index, int t,
                                    bool want_external_entry)
      -> std::optional<int> {
    const int bus = 1 - mesh.rail_toward_cell(t, cell_index);
    const bool e0 = mesh.is_external(make_port(t, 0, bus));
    const bool e1 = mesh.is_external(make_port(t, 1, bus));
    if (e0 == e1) return std::nullopt;
    const int external_end = e0 ? 0 : 1;
    return want_external_entry ? external_end : 1 - external_end;
  };

  std::vector<int> ids_a = ca.tbus, ids_b = cb.tbus;
  std::sort(ids_a.begin(), ids_a.end());
  std::sort(ids_b.begin(), ids_b.end());

  for (int ta : ids_a) {
    const auto ea = one_external_end(ia, ta, true);
    if (!ea) continue;
    RingParts ra = make_ring(mesh, ia, ta, *ea, kappa_a);
    const std::optional<PortId> q0 = mesh.connected_to(ra.bus_out);
    if (!q0) continue;
    for (int tb : ids_b) {
      const auto eb = one_external_end(ib, tb, false);
      if (!eb) continue;
      RingParts rb = make_ring(mesh, ib, tb, *eb, kappa_b);
      for (int len = 0; len <= 10; ++len) {
        std::set<int> used = occupied;
        ChainHit chain;
        bool found;
        if (len == 0)
          found = (*q0 == rb.bus_in);
        else
          found = chain_search(mesh, nullptr, *q0, rb.bus_in, len, used,
                               chain, [] { return true; });
        if (!found) continue;

        Program program = ra.program;
        for (const auto& [id, mode] : rb.program.modes) program.set(id, mode);
        set_chain_modes(program, chain);

        PresetResult out;
        out.program = program;
        out.used = ra.used;
        out.used.insert(out.used.end(), rb.used.begin(), rb.used.end());
        out.used.insert(out.used.end(), chain.tbus.begin(), chain.tbus.end());
        std::sort(out.used.begin(), out.used.end());
        out.inputs = {ra.bus_in};
        out.outputs = {rb.bus_out};
        out.reference = [program, a = ra, b = rb, hops = chain.hops](
                            double f,
                            const WaveguideParams& wp) -> Eigen::MatrixXcd {
          const Complex h =
              ring_h(program, a.coupler, a.bus_rail, a.loop, wp, f) *
              path_factor(hops, program, wp, f) *
              ring_h(program, b.coupler, b.bus_rail, b.loop, wp, f);
          return Eigen::MatrixXcd::Constant(1, 1, h);
        };
        out.notes = "vernier: ring A cell (" + std::to_string(cell_a_q) +
                    ", " + std::to_string(cell_a_r) + ") coupler " +
                    std::to_string(ta) + ", ring B cell (" +
                    std::to_string(cell_b_q) + ", " +
                    std::to_string(cell_b_r) + ") coupler " +
                    std::to_string(tb) + ", bus chain [" +
                    join_ids(chain.tbus) + "]";
        return out;
      }
    }
  }
  throw DomainError(
      "vernier_pair: no free bus path connects the two rings");
}

// ---------------------------------------------------------------------------
// 2x4 hybrid.

namespace {

struct WireChain {
  ChainHit chain;   // units from a combiner output port to the mesh edge
  PortId out = -1;  // external exit port
};

struct SplitterCand {
  int tbu = -1;
  int in_end = 0;
  int in_rail = 0;  // rail of the external input port at in_end
};

bool end_all_internal(const Mesh& mesh, int t, int e) {
  return !mesh.is_external(make_port(t, e, 0)) &&
         !mesh.is_external(make_port(t, e, 1));
}

// Unit-simple chain of exactly `remaining` units entered at port q whose
// final exit port is external; bar is preferred over cross.  Calls k() with
// the chain held in `used`, and keeps it there when k succeeds.
template <typename K>
bool wire_search(const Mesh& mesh, const std::set<int>& allowed, PortId q,
                 int remaining, std::set<int>& used, WireChain& out, K&& k,
                 long* budget) {
  if (budget && --*budget < 0) return false;
  const int t = port_tbu(q), e = port_end(q), r = port_rail(q);
  if (used.count(t) || !allowed.count(t)) return false;
  used.insert(t);
  for (int cross = 0; cross < 2; ++cross) {
    const int ro = cross ? 1 - r : r;
    const PortId x = make_port(t, 1 - e, ro);
    out.chain.tbus.push_back(t);
    out.chain.modes.push_back(cross ? TBUState::Cross : TBUState::Bar);
    out.chain.hops.push_back({t, r, ro});
    bool ok = false;
    if (remaining == 1) {
      if (mesh.is_external(x)) {
        out.out = x;
        ok = k();
      }
    } else if (const auto peer = mesh.connected_to(x)) {
      ok = wire_search(mesh, allowed, *peer, remaining - 1, used, out, k,
                       budget);
    }
    if (ok) return true;
    out.chain.tbus.pop_back();
    out.chain.modes.pop_back();
    out.chain.hops.pop_back();
  }
  used.erase(t);
  return false;
}

// A fully decided layout; program assembly and the phase solve below are
// deterministic given these choices.
struct HybridLayout {
  int c1 = -1, e1 = 0, c2 = -1, e2 = 0;  // combiners and their output ends
  SplitterCand sa, sb;                   // signal and LO splitters
  int pa = 0, pb = 0;  // splitter rail -> combiner pairing
  int a1 = 0, a2 = 0;  // signal input rail at each combiner
  int len = 0;         // unit count of each splitter->combiner chain
  std::array<WireChain, 4> wires;  // c1 rail0, c1 rail1, c2 rail0, c2 rail1
  std::array<ChainHit, 4> chains;  // S->c1, S->c2, L->c1, L->c2
};

PresetResult assemble_hybrid(const HybridLayout& lay) {
  Program prog;
  const auto half = TBUMode::tunable(settings_for_coupling(0.5));
  prog.set(lay.sa.tbu, half);
  prog.set(lay.sb.tbu, half);
  prog.set(lay.c1, half);
  prog.set(lay.c2, half);
  for (const ChainHit& ch : lay.chains) set_chain_modes(prog, ch);
  for (const WireChain& w : lay.wires) set_chain_modes(prog, w.chain);

  // The first unit of each LO chain and of each output wire carries a
  // settable common phase.
  const auto set_knob = [&](const ChainHit& ch, double phi) {
    prog.set(ch.tbus[0],
             TBUMode::tunable(settings_for_coupling(
                 ch.modes[0] == TBUState::Cross ? 1.0 : 0.0, phi)));
  };
  set_knob(lay.chains[2], 0.0);
  set_knob(lay.chains[3], 0.0);
  for (const WireChain& w : lay.wires) set_knob(w.chain, 0.0);

  // Paths by output row (S+L, S+jL, S-L, S-jL) and input column (0 = signal,
  // 1 = LO).  Row r exits combiner (r odd ? c2 : c1) on rail r/2; every path
  // crosses 1 splitter + len chain + 1 combiner + wlen wire units, so the
  // frequency dependence is one common factor.
  std::array<std::array<std::vector<Hop>, 2>, 4> paths;
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 2; ++col) {
      const bool via_c2 = row % 2 == 1;
      const int comb = via_c2 ? lay.c2 : lay.c1;
      const int out_rail = row / 2;
      const int s_rail = via_c2 ? lay.a2 : lay.a1;
      const SplitterCand& s = col ? lay.sb : lay.sa;
      const int pair = col ? lay.pb : lay.pa;
      std::vector<Hop>& p = paths[row][col];
      p.push_back({s.tbu, s.in_rail, via_c2 ? 1 - pair : pair});
      const ChainHit& ch = lay.chains[(via_c2 ? 1 : 0) + (col == 1 ? 2 : 0)];
      p.insert(p.end(), ch.hops.begin(), ch.hops.end());
      p.push_back({comb, col == 0 ? s_rail : 1 - s_rail, out_rail});
      const WireChain& w = lay.wires[2 * (via_c2 ? 1 : 0) + out_rail];
      p.insert(p.end(), w.chain.hops.begin(), w.chain.hops.end());
    }

  const WaveguideParams wp0;
  const auto eval = [&](int row, int col) {
    return path_factor(paths[row][col], prog, wp0, 0.0);
  };

  // Knob 1/2: align the LO against the signal at each combiner (in phase at
  // c1, +90 deg at c2); the second rail of each combiner then lands on S-L
  // and S-jL automatically.
  const double d1 = std::arg(eval(0, 0)) - std::arg(eval(0, 1));
  const double d2 = std::arg(eval(1, 0)) - std::arg(eval(1, 1)) + kPi / 2.0;
  set_knob(lay.chains[2], wrap_2pi(d1));
  set_knob(lay.chains[3], wrap_2pi(d2));

  // Knob 3: rotate each output wire so every row's signal entry shares one
  // common phase.
  const double psi = std::arg(eval(0, 0));
  for (int row = 1; row < 4; ++row) {
    const int wi = 2 * (row % 2) + row / 2;
    set_knob(lay.wires[wi].chain, wrap_2pi(psi - std::arg(eval(row, 0))));
  }

  // Verify against the ideal hybrid up to the common factor 2m e^{j psi}.
  Eigen::MatrixXcd target_m(4, 2);
  target_m << Complex(0.5, 0.0), Complex(0.5, 0.0), Complex(0.5, 0.0),
      Complex(0.0, 0.5), Complex(0.5, 0.0), Complex(-0.5, 0.0),
      Complex(0.5, 0.0), Complex(0.0, -0.5);
  const double mag = std::abs(eval(0, 0));
  const Complex common = 2.0 * mag * std::polar(1.0, psi);
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 2; ++col)
      if (std::abs(eval(row, col) - common * target_m(row, col)) > 1e-9 * mag)
        throw std::logic_error("hybrid phase solve failed");

  PresetResult out;
  out.program = prog;
  for (const auto& [id, mode] : prog.modes) out.used.push_back(id);
  out.inputs = {make_port(lay.sa.tbu, lay.sa.in_end, lay.sa.in_rail),
                make_port(lay.sb.tbu, lay.sb.in_end, lay.sb.in_rail)};
  out.outputs = {lay.wires[0].out, lay.wires[2].out, lay.wires[1].out,
                 lay.wires[3].out};
  out.target = target_m;
  out.reference = [prog, paths](double f, const WaveguideParams& wp) {
    Eigen::MatrixXcd m(4, 2);
    for (int row = 0; row < 4; ++row)
      for (int col = 0; col < 2; ++col)
        m(row, col) = path_factor(paths[row][col], prog, wp, f);
    return m;
  };
  out.notes = "hybrid: splitters " + std::to_string(lay.sa.tbu) + "/" +
              std::to_string(lay.sb.tbu) + ", combiners " +
              std::to_string(lay.c1) + "/" + std::to_string(lay.c2) +
              ", chain length " + std::to_string(lay.len) + ", wire length " +
              std::to_string(static_cast<int>(lay.wires[0].chain.tbus.size())) +
              ", outputs carry (S+L, S+jL, S-L, S-jL)/2";
  return out;
}

}  // namespace

PresetResult hybrid_2x4(const Mesh& mesh, const std::set<int>& region) {
  require_generated_hexagonal(mesh, "hybrid_2x4");
  for (int t : region)
    if (t < 0 || t >= mesh.tbu_count())
      throw std::invalid_argument("hybrid_2x4: region TBU " +
                                  std::to_string(t) + " out of range");
  std::set<int> allowed = region;
  if (allowed.empty())
    for (int t = 0; t < mesh.tbu_count(); ++t) allowed.insert(t);

  // Two-coloring of the junction graph (honeycomb, bipartite): every
  // chain between two fixed junctions has a fixed length parity, so the
  // four splitter->combiner chains can share one length only when the
  // splitter output junctions agree in color and likewise the combiner
  // input junctions.
  std::vector<int> color(mesh.junctions().size(), -1);
  {
    std::vector<int> stack{0};
    color[0] = 0;
    while (!stack.empty()) {
      const int j = stack.back();
      stack.pop_back();
      for (const auto& [t, e] : mesh.junctions()[j].ends) {
        const int o = mesh.junction_of(t, 1 - e);
        if (color[o] < 0) {
          color[o] = 1 - color[j];
          stack.push_back(o);
        }
      }
    }
  }

  // Combiners need every port internal (both output rails continue into
  // wire units, both input rails receive chains); splitters need one
  // external input port and a fully internal output end.
  std::vector<int> comb_cands;
  std::vector<SplitterCand> split_cands;
  for (int t : allowed) {
    if (end_all_internal(mesh, t, 0) && end_all_internal(mesh, t, 1))
      comb_cands.push_back(t);
    for (int e = 0; e < 2; ++e) {
      if (!end_all_internal(mesh, t, 1 - e)) continue;
      for (int r = 0; r < 2; ++r)
        if (mesh.is_external(make_port(t, e, r))) {
          split_cands.push_back({t, e, r});
          break;
        }
    }
  }

  constexpr int kMaxChainLen = 9;
  constexpr int kMaxWireLen = 3;
  // One shared node budget bounds the whole layout search; exhausting it
  // makes every remaining probe fail fast and falls through to the throw.
  long budget = 20000000;

  for (int c1 : comb_cands)
    for (int e1 = 0; e1 < 2; ++e1)
      for (int c2 : comb_cands) {
        if (c2 <= c1) continue;
        for (int e2 = 0; e2 < 2; ++e2) {
          const int jc1 = mesh.junction_of(c1, 1 - e1);
          const int jc2 = mesh.junction_of(c2, 1 - e2);
          if (color[jc1] != color[jc2]) continue;
          for (int wlen = 1; wlen <= kMaxWireLen; ++wlen) {
            HybridLayout lay;
            lay.c1 = c1;
            lay.e1 = e1;
            lay.c2 = c2;
            lay.e2 = e2;
            std::set<int> used{c1, c2};
            std::optional<PresetResult> found;

            // With all four wires held in `used`, enumerate splitter pairs
            // and the four equal-length chains into the combiner inputs.
            const auto try_splitters = [&]() -> bool {
              for (const SplitterCand& sa : split_cands) {
                if (used.count(sa.tbu)) continue;
                for (const SplitterCand& sb : split_cands) {
                  if (sb.tbu == sa.tbu || used.count(sb.tbu)) continue;
                  const int jsa = mesh.junction_of(sa.tbu, 1 - sa.in_end);
                  const int jsb = mesh.junction_of(sb.tbu, 1 - sb.in_end);
                  if (color[jsa] != color[jsb]) continue;
                  const int parity = color[jsa] ^ color[jc1];
                  const int sa_out = 1 - sa.in_end, sb_out = 1 - sb.in_end;
                  for (int pa = 0; pa < 2; ++pa)
                    for (int pb = 0; pb < 2; ++pb)
                      for (int a1 = 0; a1 < 2; ++a1)
                        for (int a2 = 0; a2 < 2; ++a2)
                          for (int len = parity ? 1 : 2; len <= kMaxChainLen;
                               len += 2) {
                            // Chain i: 0 = S->c1, 1 = S->c2, 2 = L->c1,
                            // 3 = L->c2.  Each starts in the unit bridged to
                            // a splitter output rail and must deliver into
                            // the matching combiner input port.
                            const auto peer = [&](int t, int e, int r) {
                              return *mesh.connected_to(make_port(t, e, r));
                            };
                            const PortId start[4] = {
                                peer(sa.tbu, sa_out, pa),
                                peer(sa.tbu, sa_out, 1 - pa),
                                peer(sb.tbu, sb_out, pb),
                                peer(sb.tbu, sb_out, 1 - pb)};
                            const PortId target[4] = {
                                make_port(c1, 1 - e1, a1),
                                make_port(c2, 1 - e2, a2),
                                make_port(c1, 1 - e1, 1 - a1),
                                make_port(c2, 1 - e2, 1 - a2)};
                            std::set<int> cu = used;
                            cu.insert(sa.tbu);
                            cu.insert(sb.tbu);
                            const std::function<bool(int)> place =
                                [&](int i) -> bool {
                              if (i == 4) return true;
                              lay.chains[i] = {};
                              return chain_search(
                                  mesh, &allowed, start[i], target[i], len,
                                  cu, lay.chains[i],
                                  [&] { return place(i + 1); }, &budget);
                            };
                            if (!place(0)) continue;
                            lay.sa = sa;
                            lay.sb = sb;
                            lay.pa = pa;
                            lay.pb = pb;
                            lay.a1 = a1;
                            lay.a2 = a2;
                            lay.len = len;
                            found = assemble_hybrid(lay);
                            return true;
                          }
                }
              }
              return false;
            };

            // Joint backtracking placement of the four output wires
            // (c1 rail0, c1 rail1, c2 rail0, c2 rail1).
            const std::function<bool(int)> place_wire = [&](int w) -> bool {
              if (w == 4) return try_splitters();
              lay.wires[w] = {};
              const int c = w < 2 ? c1 : c2;
              const int eo = w < 2 ? e1 : e2;
              const auto q = mesh.connected_to(make_port(c, eo, w % 2));
              return q && wire_search(
                              mesh, allowed, *q, wlen, used, lay.wires[w],
                              [&] { return place_wire(w + 1); }, &budget);
            };
            if (place_wire(0) && found) return *found;
          }
        }
      }
  throw DomainError(
      "hybrid_2x4: insufficient free region (needs two splitters with "
      "external inputs, two interior combiners, four paths to output ports "
      "and equal-length connecting chains)");
}

PresetResult transceiver_demo(const Mesh& mesh) {
  require_generated_hexagonal(mesh, "transceiver_demo");
  for (const Cell& cell : mesh.cells()) {
    PresetResult ring;
    try {
      ring = ring_filter(mesh, cell.q, cell.r, 0.5);
    } catch (const DomainError&) {
      continue;
    }
    std::set<int> region;
    for (int t = 0; t < mesh.tbu_count(); ++t) region.insert(t);
    for (int t : ring.used) region.erase(t);
    PresetResult hybrid;
    try {
      hybrid = hybrid_2x4(mesh, region);
    } catch (const DomainError&) {
      continue;
    }

    PresetResult out;
    out.program = ring.program;
    for (const auto& [id, mode] : hybrid.program.modes)
      out.program.set(id, mode);
    out.used = ring.used;
    out.used.insert(out.used.end(), hybrid.used.begin(), hybrid.used.end());
    std::sort(out.used.begin(), out.used.end());
    out.inputs = {ring.inputs[0], hybrid.inputs[0], hybrid.inputs[1]};
    out.outputs = {ring.outputs[0], hybrid.outputs[0], hybrid.outputs[1],
                   hybrid.outputs[2], hybrid.outputs[3]};
    out.target = hybrid.target;
    out.reference = [rr = ring.reference, hr = hybrid.reference](
                        double f, const WaveguideParams& wp) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(5, 3);
      m(0, 0) = rr(f, wp)(0, 0);
      m.block(1, 1, 4, 2) = hr(f, wp);
      return m;
    };
    out.notes = "transceiver: TX " + ring.notes + "; RX " + hybrid.notes +
                "; sub-circuits share no TBU";
    return out;
  }
  throw DomainError(
      "transceiver_demo: mesh too small for disjoint ring and hybrid "
      "circuits; a hexagonal 5x4 mesh is sufficient");
}

}  // namespace pmesh
