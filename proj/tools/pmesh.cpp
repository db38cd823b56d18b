// pmesh: file-based front end for the mesh toolchain.
//
// Subcommands: gen, route, preset, simulate, optimize.  Every artifact is a
// single file; identical invocations on identical inputs produce identical
// bytes.  Exit codes: 0 success, 1 usage or malformed input, 2 well-formed
// request with no valid answer (unroutable, singular, infeasible); errors go
// to stderr as one JSON object.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pmesh/control.hpp"
#include "pmesh/errors.hpp"
#include "pmesh/mesh.hpp"
#include "pmesh/netsolve.hpp"
#include "pmesh/presets.hpp"
#include "pmesh/router.hpp"

namespace {

using nlohmann::ordered_json;
using namespace pmesh;

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << text;
  if (!out) throw std::invalid_argument("cannot write file: " + path);
}

// External ports are named P0, P1, ... in the mesh's external-port order.
PortId parse_port(const Mesh& mesh, const std::string& name) {
  if (name.size() < 2 || name[0] != 'P' ||
      name.find_first_not_of("0123456789", 1) != std::string::npos)
    throw std::invalid_argument("port name must look like P<index>, got '" + name + "'");
  const long idx = std::stol(name.substr(1));
  const std::vector<PortId> ext = mesh.external_ports();
  if (idx < 0 || idx >= static_cast<long>(ext.size()))
    throw std::invalid_argument("port " + name + " is out of range; the mesh has " +
                                std::to_string(ext.size()) + " external ports");
  return ext[static_cast<size_t>(idx)];
}

std::string port_name(const Mesh& mesh, PortId port) {
  return "P" + std::to_string(mesh.external_index(port));
}

std::pair<Mesh, Program> load_doc(const std::string& path) {
  return deserialize(read_file(path));
}

// The mesh embedded in a program document must match the mesh document the
// command operates on.
void require_same_mesh(const Mesh& a, const Mesh& b, const std::string& prog_path) {
  if (serialize(a, Program{}) != serialize(b, Program{}))
    throw std::invalid_argument("program file " + prog_path +
                                " was built for a different mesh");
}

struct TargetSpec {
  PortId in = -1;
  PortId out = -1;
  double power = 0.0;
  double f_hz = 0.0;
};

// "power,<in>,<out>,<value>[,<freq_hz>]" with ports named P<index>.
TargetSpec parse_target_spec(const Mesh& mesh, const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() < 4 || parts.size() > 5 || parts[0] != "power")
    throw std::invalid_argument(
        "target spec must be power,<in>,<out>,<value>[,<freq_hz>]");
  TargetSpec spec;
  spec.in = parse_port(mesh, parts[1]);
  spec.out = parse_port(mesh, parts[2]);
  try {
    spec.power = std::stod(parts[3]);
    if (parts.size() == 5) spec.f_hz = std::stod(parts[4]);
  } catch (const std::exception&) {
    throw std::invalid_argument("target spec has a malformed number: " + text);
  }
  if (!(spec.power >= 0.0) || !(spec.power <= 1.0))
    throw std::invalid_argument("target power must lie in [0, 1]");
  return spec;
}

struct GenArgs {
  std::string topology;
  int m = 0, n = 0;
  std::string out;
};

void run_gen(const GenArgs& a) {
  const auto topo = topology_from_name(a.topology);
  if (!topo)
    throw std::invalid_argument("unknown topology '" + a.topology +
                                "' (square, triangular, hexagonal)");
  const Mesh mesh = Mesh::generate(*topo, a.m, a.n);
  write_file(a.out, serialize(mesh, Program{}));
}

struct RouteArgs {
  std::string mesh_path, from, to, out;
  std::vector<int> block;
};

void run_route(const RouteArgs& a) {
  auto [mesh, program] = load_doc(a.mesh_path);
  RoutingRequest req;
  req.source = parse_port(mesh, a.from);
  req.destination = parse_port(mesh, a.to);
  if (a.from == a.to)
    throw std::invalid_argument("source and destination must differ");
  req.blocked.insert(a.block.begin(), a.block.end());
  // TBUs already driven by the document's program stay untouched.
  for (const auto& [id, mode] : program.modes)
    if (mode.state != TBUState::Off) req.blocked.insert(id);
  const Route r = route(mesh, req);
  const Program updated = apply_route(program, r);
  write_file(a.mesh_path, serialize(mesh, updated));
  write_file(a.out, route_json(r));
}

struct PresetArgs {
  std::string name, mesh_path, out;
  double kappa = 0.5;
  bool kappa_set = false;
  std::vector<int> cell{0, 0};
  std::vector<int> cell_a, cell_b;
  double kappa_a = 0.0, kappa_b = 0.0;
  bool kappa_a_set = false, kappa_b_set = false;
  std::vector<int> region;
};

void run_preset(const PresetArgs& a) {
  auto [mesh, existing] = load_doc(a.mesh_path);
  (void)existing;
  PresetResult res;
  if (a.name == "ring") {
    if (!a.kappa_set) throw std::invalid_argument("preset ring requires --kappa");
    res = ring_filter(mesh, a.cell[0], a.cell[1], a.kappa);
  } else if (a.name == "vernier") {
    if (a.cell_a.size() != 2 || a.cell_b.size() != 2)
      throw std::invalid_argument("preset vernier requires --cell-a and --cell-b");
    if (!a.kappa_a_set || !a.kappa_b_set)
      throw std::invalid_argument("preset vernier requires --kappa-a and --kappa-b");
    res = vernier_pair(mesh, a.cell_a[0], a.cell_a[1], a.cell_b[0], a.cell_b[1],
                       a.kappa_a, a.kappa_b);
  } else if (a.name == "hybrid_2x4") {
    res = hybrid_2x4(mesh, std::set<int>(a.region.begin(), a.region.end()));
  } else if (a.name == "transceiver_demo") {
    res = transceiver_demo(mesh);
  } else {
    throw std::invalid_argument("unknown preset '" + a.name +
                                "' (ring, vernier, hybrid_2x4, transceiver_demo)");
  }
  write_file(a.out, serialize(mesh, res.program));
  ordered_json meta;
  meta["preset"] = a.name;
  meta["inputs"] = ordered_json::array();
  for (PortId p : res.inputs) meta["inputs"].push_back(port_name(mesh, p));
  meta["outputs"] = ordered_json::array();
  for (PortId p : res.outputs) meta["outputs"].push_back(port_name(mesh, p));
  meta["used_tbus"] = res.used;
  meta["notes"] = res.notes;
  std::cout << meta.dump(2) << "\n";
}

struct SimulateArgs {
  std::string mesh_path, program_path, out;
  double f_start = 0.0, f_stop = 0.0;
  int points = 0;
};

void run_simulate(const SimulateArgs& a) {
  auto [mesh, program] = load_doc(a.mesh_path);
  if (!a.program_path.empty()) {
    auto [pmesh_doc, prog] = load_doc(a.program_path);
    require_same_mesh(mesh, pmesh_doc, a.program_path);
    program = prog;
  }
  FrequencyGrid grid;
  grid.start_hz = a.f_start;
  grid.stop_hz = a.f_stop;
  grid.points = a.points;
  const SParams s = sweep(mesh, program, WaveguideParams{}, grid);
  write_file(a.out, sparams_csv(s));
}

struct OptimizeArgs {
  std::string mesh_path, program_path, target, out;
  int bits = 8;
  std::uint64_t seed = 0;
  long max_evals = 500;
  double tolerance = 1e-12;
};

void run_optimize(const OptimizeArgs& a) {
  auto [mesh, program] = load_doc(a.mesh_path);
  {
    auto [pmesh_doc, prog] = load_doc(a.program_path);
    require_same_mesh(mesh, pmesh_doc, a.program_path);
    program = prog;
  }
  const TargetSpec spec = parse_target_spec(mesh, a.target);
  const int ext_in = mesh.external_index(spec.in);
  const int ext_out = mesh.external_index(spec.out);

  // Free parameters: the explicit phases of Tunable entries, in id order.
  // Bar/cross switch states and off units stay fixed.
  std::vector<int> knobs;
  for (const auto& [id, mode] : program.modes)
    if (mode.state == TBUState::Tunable) knobs.push_back(id);
  if (knobs.empty())
    throw DomainError("program has no tunable entries to optimize");
  std::vector<double> initial;
  for (int id : knobs) {
    const TBUSettings s = program.mode_of(id).settings;
    initial.push_back(s.theta_upper - kTwoPi * std::floor(s.theta_upper / kTwoPi));
    initial.push_back(s.theta_lower - kTwoPi * std::floor(s.theta_lower / kTwoPi));
  }

  const DriverConfig driver{a.bits};
  const MonitorConfig monitor;  // ideal noiseless defaults
  std::mt19937_64 rng(a.seed);
  const double target_current =
      monitor.responsivity_a_per_w * monitor.tap_ratio * spec.power +
      monitor.dark_current_a;

  auto with_phases = [&](const std::vector<double>& x) {
    Program p = program;
    for (size_t k = 0; k < knobs.size(); ++k) {
      TBUSettings s = p.mode_of(knobs[k]).settings;
      s.theta_upper = x[2 * k];
      s.theta_lower = x[2 * k + 1];
      p.set(knobs[k], TBUMode::tunable(s));
    }
    return quantize_program(p, driver);
  };
  auto objective = [&](const std::vector<double>& x) {
    const Eigen::MatrixXcd s = solve(mesh, with_phases(x), WaveguideParams{}, spec.f_hz);
    const double power = std::norm(s(ext_out, ext_in));
    const double current = monitor_read(power, monitor, rng);
    return (current - target_current) * (current - target_current);
  };

  OptimizerOptions opt;
  opt.max_evaluations = a.max_evals;
  opt.tolerance = a.tolerance;
  opt.seed = a.seed;
  const OptimizeResult res = optimize(objective, initial, opt);
  write_file(a.out, trace_csv(res));

  const Eigen::MatrixXcd s_best =
      solve(mesh, with_phases(res.settings), WaveguideParams{}, spec.f_hz);
  ordered_json meta;
  meta["cost"] = res.cost;
  meta["evaluations"] = res.evaluations;
  meta["achieved_power"] = std::norm(s_best(ext_out, ext_in));
  meta["target_power"] = spec.power;
  std::cout << meta.dump(2) << "\n";
}

void emit_error(const std::string& kind, const std::string& message) {
  ordered_json err;
  err["error"] = kind;
  err["message"] = message;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"programmable photonic mesh toolchain"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen", "generate a mesh document");
  c_gen->add_option("--topology", gen.topology, "square | triangular | hexagonal")
      ->required();
  c_gen->add_option("--m", gen.m, "cell columns")->required();
  c_gen->add_option("--n", gen.n, "cell rows")->required();
  c_gen->add_option("-o,--output", gen.out, "mesh document path")->required();

  RouteArgs rt;
  CLI::App* c_route = app.add_subcommand("route", "connect two external ports");
  c_route->add_option("--mesh", rt.mesh_path, "mesh document (program is rewritten in place)")
      ->required();
  c_route->add_option("--from", rt.from, "source port, e.g. P0")->required();
  c_route->add_option("--to", rt.to, "destination port, e.g. P5")->required();
  c_route->add_option("--block", rt.block, "TBU ids the route must avoid");
  c_route->add_option("-o,--output", rt.out, "route report path")->required();

  PresetArgs pr;
  CLI::App* c_preset = app.add_subcommand("preset", "program a canned circuit");
  c_preset->add_option("--name", pr.name, "ring | vernier | hybrid_2x4 | transceiver_demo")
      ->required();
  c_preset->add_option("--mesh", pr.mesh_path, "mesh document")->required();
  c_preset->add_option("--kappa", pr.kappa, "ring coupling in (0, 1]")
      ->trigger_on_parse()
      ->each([&pr](const std::string&) { pr.kappa_set = true; });
  c_preset->add_option("--cell", pr.cell, "ring cell as <col> <row>")->expected(2);
  c_preset->add_option("--cell-a", pr.cell_a, "first vernier cell as <col> <row>")
      ->expected(2);
  c_preset->add_option("--cell-b", pr.cell_b, "second vernier cell as <col> <row>")
      ->expected(2);
  c_preset->add_option("--kappa-a", pr.kappa_a, "first vernier coupling")
      ->each([&pr](const std::string&) { pr.kappa_a_set = true; });
  c_preset->add_option("--kappa-b", pr.kappa_b, "second vernier coupling")
      ->each([&pr](const std::string&) { pr.kappa_b_set = true; });
  c_preset->add_option("--region", pr.region, "TBU ids the circuit may occupy");
  c_preset->add_option("-o,--output", pr.out, "program document path")->required();

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "sweep the scattering response");
  c_sim->add_option("--mesh", sim.mesh_path, "mesh document")->required();
  c_sim->add_option("--program", sim.program_path,
                    "program document (default: the mesh document's program)");
  c_sim->add_option("--f-start", sim.f_start, "first baseband frequency (Hz)")
      ->required();
  c_sim->add_option("--f-stop", sim.f_stop, "last baseband frequency (Hz)")->required();
  c_sim->add_option("--points", sim.points, "sample count")->required();
  c_sim->add_option("-o,--output", sim.out, "spectrum CSV path")->required();

  OptimizeArgs op;
  CLI::App* c_opt = app.add_subcommand("optimize", "calibrate tunable phases to a target");
  c_opt->add_option("--mesh", op.mesh_path, "mesh document")->required();
  c_opt->add_option("--program", op.program_path, "program document with tunable entries")
      ->required();
  c_opt->add_option("--target-spec", op.target,
                    "power,<in>,<out>,<value>[,<freq_hz>]")
      ->required();
  c_opt->add_option("--bits", op.bits, "driver resolution bits (default 8)");
  c_opt->add_option("--seed", op.seed, "seed for stochastic strategies (default 0)");
  c_opt->add_option("--max-evals", op.max_evals, "objective budget (default 500)");
  c_opt->add_option("--tolerance", op.tolerance, "sweep improvement floor (default 1e-12)");
  c_opt->add_option("-o,--output", op.out, "trace CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 1;
  }

  try {
    if (c_gen->parsed()) run_gen(gen);
    if (c_route->parsed()) run_route(rt);
    if (c_preset->parsed()) run_preset(pr);
    if (c_sim->parsed()) run_simulate(sim);
    if (c_opt->parsed()) run_optimize(op);
  } catch (const DomainError& e) {
    emit_error("domain", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    emit_error("usage", e.what());
    return 1;
  } catch (const std::exception& e) {
    emit_error("domain", e.what());
    return 2;
  }
  return 0;
}
