#include "pmesh/netsolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "pmesh/errors.hpp"
#include "test_util.hpp"

using namespace pmesh;
using test_util::max_abs_diff;

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kJ{0.0, 1.0};

// A program that drives every TBU of a single-cell hexagon as a ring:
// TBU 0 is the bus coupler at ratio kappa, the rest chain the loop at
// full bar.  Loss is explicit so tests can switch it off.
Program ring_program(const Mesh& mesh, double kappa, double loss_db) {
  Program p;
  p.set(0, TBUMode::tunable(settings_for_coupling(kappa, 0.0, loss_db)));
  for (int t = 1; t < mesh.tbu_count(); ++t) {
    p.set(t, TBUMode::tunable(settings_for_coupling(0.0, 0.0, loss_db)));
  }
  return p;
}

// Walk the closed loop of cell-facing rails starting from `from_port`
// (an exit port on the loop), multiplying the on-rail amplitude of every
// TBU passed, until the walk enters `stop_port`'s TBU end.  Structural
// oracle: uses only mesh connectivity and 2x2 entries.
Complex loop_amplitude(const Mesh& mesh, const Program& prog,
                       const WaveguideParams& params, double f_hz,
                       PortId from_port, PortId stop_port, int* steps) {
  Complex acc = 1.0;
  *steps = 0;
  PortId p = from_port;
  while (true) {
    const auto entry = mesh.connected_to(p);
    REQUIRE(entry.has_value());
    if (*entry == stop_port) return acc;
    const int t = port_tbu(*entry), e = port_end(*entry), r = port_rail(*entry);
    const Gate2 g = effective_transfer(prog.mode_of(t), params, f_hz);
    acc *= g(r, r);  // bar drive keeps the rail
    p = make_port(t, 1 - e, r);
    ++*steps;
    REQUIRE(*steps < 100);
  }
}

// Closed-form bus response of the ring: coupler entries A,B,C,D plus the
// loop amplitude L give H = A + B*L*C / (1 - D*L).
Complex ring_reference(const Mesh& mesh, const Program& prog,
                       const WaveguideParams& params, double f_hz) {
  const int loop_rail = mesh.rail_toward_cell(0, 0);
  const int bus_rail = 1 - loop_rail;
  int steps = 0;
  const Complex lam =
      loop_amplitude(mesh, prog, params, f_hz, make_port(0, 1, loop_rail),
                     make_port(0, 0, loop_rail), &steps);
  CHECK(steps == 5);
  const Gate2 g = effective_transfer(prog.mode_of(0), params, f_hz);
  return g(bus_rail, bus_rail) +
         g(bus_rail, loop_rail) * lam * g(loop_rail, bus_rail) /
             (1.0 - g(loop_rail, loop_rail) * lam);
}

Program random_lossless_program(const Mesh& mesh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> kappa(0.0, 1.0);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  Program p;
  for (int t = 0; t < mesh.tbu_count(); ++t) {
    p.set(t, TBUMode::tunable(settings_for_coupling(kappa(rng), phase(rng), 0.0)));
  }
  return p;
}

}  // namespace

TEST_CASE("frequency grid sampling and validation") {
  const FrequencyGrid g{1e9, 2e9, 5};
  const std::vector<double> f = g.frequencies();
  REQUIRE(f.size() == 5);
  CHECK(f.front() == 1e9);
  CHECK(f.back() == 2e9);
  CHECK(f[2] == doctest::Approx(1.5e9));
  CHECK(FrequencyGrid{5e9, 5e9, 1}.frequencies() == std::vector<double>{5e9});

  CHECK_THROWS_AS((FrequencyGrid{1e9, 2e9, 0}.frequencies()),
                  std::invalid_argument);
  CHECK_THROWS_AS((FrequencyGrid{2e9, 1e9, 2}.frequencies()),
                  std::invalid_argument);
  CHECK_THROWS_AS((FrequencyGrid{-1.0, 1e9, 2}.frequencies()),
                  std::invalid_argument);
}

TEST_CASE("free spectral range of the default single-cell loop") {
  const WaveguideParams params;
  // c / (4.18 * 6 * 811 um) — about 14.74 GHz.
  CHECK(fsr_hz(params, 6) ==
        doctest::Approx(1.4739148e10).epsilon(1e-6));
  CHECK_THROWS_AS(fsr_hz(params, 0), std::invalid_argument);
  CHECK_THROWS_AS(fsr_hz(WaveguideParams{-1.0, 4.18, 0.0, 811e-6}, 6),
                  std::invalid_argument);
}

TEST_CASE("single cross TBU matches the hand formula") {
  const Mesh frag = Mesh::from_parts(1, {});
  Program prog;
  prog.set(0, TBUMode::cross());
  const WaveguideParams params;
  const double f = 193.4e12;

  const Eigen::MatrixXcd s = solve(frag, prog, params, f);
  REQUIRE(s.rows() == 4);

  // Through the unit: ports 0 -> 3 (rail swap), amplitude 10^(-0.3/20),
  // phase j*e^{-j*beta*L}.
  const double beta_l =
      2.0 * kPi * params.n_eff * f * params.l_tbu_m / kSpeedOfLightMps;
  const Complex want =
      std::pow(10.0, -0.3 / 20.0) * kJ * std::exp(-kJ * beta_l);
  CHECK(std::abs(s(3, 0) - want) <= 1e-12);
  CHECK(std::abs(s(2, 0)) <= 1e-15);   // same-rail blocked in cross
  CHECK(std::abs(s(0, 0)) <= 1e-15);   // no reflection
  CHECK(std::abs(std::abs(s(3, 0)) - std::pow(10.0, -0.3 / 20.0)) <= 1e-12);
  CHECK(max_abs_diff(s, s.transpose().eval()) <= 1e-12);
}

TEST_CASE("all TBUs off gives the identity system and zero transfer") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 1, 1);
  const WaveguideParams params;
  const LinearSystem sys = assemble(mesh, Program{}, params, 193e12);
  CHECK(sys.m.rows() == 4 * mesh.tbu_count());
  CHECK(sys.m.isIdentity(0.0));
  const Eigen::MatrixXcd s = solve(mesh, Program{}, params, 193e12);
  CHECK(s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input validation") {
  const Mesh mesh = Mesh::generate(Topology::Square, 1, 1);
  const WaveguideParams params;
  Program bad;
  bad.set(99, TBUMode::bar());
  CHECK_THROWS_AS(solve(mesh, bad, params, 1e12), std::invalid_argument);
  CHECK_THROWS_AS(solve(mesh, Program{}, params, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve(mesh, Program{}, WaveguideParams{0.0, 4.18, 0.0, 811e-6}, 1e12),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve(mesh, Program{}, WaveguideParams{4.18, 4.18, -1.0, 811e-6}, 1e12),
                  std::invalid_argument);
}

TEST_CASE("feed-forward chain equals the cascade product") {
  // Three TBUs in series, rails joined one-to-one.
  const Mesh chain = Mesh::from_parts(
      3, {{make_port(0, 1, 0), make_port(1, 0, 0)},
          {make_port(0, 1, 1), make_port(1, 0, 1)},
          {make_port(1, 1, 0), make_port(2, 0, 0)},
          {make_port(1, 1, 1), make_port(2, 0, 1)}});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  Program prog;
  std::vector<TBUSettings> settings;
  for (int t = 0; t < 3; ++t) {
    settings.push_back({phase(rng), phase(rng), 0.21});
    prog.set(t, TBUMode::tunable(settings.back()));
  }
  const WaveguideParams params{4.18, 4.18, 0.8, 811e-6};
  const double f = 192.7e12;

  Eigen::Matrix2cd product = Eigen::Matrix2cd::Identity();
  for (int t = 0; t < 3; ++t) {
    product = effective_transfer(prog.mode_of(t), params, f) * product;
  }

  const Eigen::MatrixXcd s = solve(chain, prog, params, f);
  // External ports in ascending order: 0,1 feed the chain; 10,11 leave it.
  REQUIRE(chain.external_ports() == std::vector<PortId>{0, 1, 10, 11});
  Eigen::Matrix2cd through;
  through << s(2, 0), s(2, 1), s(3, 0), s(3, 1);
  CHECK(max_abs_diff(through, product) <= 1e-10);
  // Nothing comes back out of the inputs.
  CHECK(std::abs(s(0, 0)) + std::abs(s(1, 0)) <= 1e-15);
}

TEST_CASE("lossless programs give unitary, symmetric scattering") {
  std::mt19937_64 rng(32);
  const struct { Topology t; int m, n; } cases[] = {
      {Topology::Hexagonal, 1, 1},
      {Topology::Hexagonal, 2, 2},
      {Topology::Hexagonal, 3, 3},
      {Topology::Square, 2, 2},
      {Topology::Triangular, 2, 2},
  };
  for (const auto& c : cases) {
    const Mesh mesh = Mesh::generate(c.t, c.m, c.n);
    for (int rep = 0; rep < 3; ++rep) {
      const Program prog = random_lossless_program(mesh, rng);
      const Eigen::MatrixXcd s = solve(mesh, prog, WaveguideParams{}, 193.4e12);
      const int p = s.rows();
      CHECK(max_abs_diff(s.adjoint() * s, Eigen::MatrixXcd::Identity(p, p)) <=
            1e-8);
      CHECK(max_abs_diff(s, s.transpose().eval()) <= 1e-8);
    }
  }
}

TEST_CASE("lossy programs are passive and symmetric") {
  std::mt19937_64 rng(33);
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 2, 2);
  std::uniform_real_distribution<double> kappa(0.0, 1.0);
  std::uniform_real_distribution<double> phase(-kPi, kPi);
  std::uniform_real_distribution<double> loss(0.0, 1.0);
  std::uniform_int_distribution<int> state(0, 3);
  for (int rep = 0; rep < 5; ++rep) {
    Program prog;
    for (int t = 0; t < mesh.tbu_count(); ++t) {
      switch (state(rng)) {
        case 0: prog.set(t, TBUMode::off()); break;
        case 1: prog.set(t, TBUMode::bar()); break;
        case 2: prog.set(t, TBUMode::cross()); break;
        default:
          prog.set(t, TBUMode::tunable(
                          settings_for_coupling(kappa(rng), phase(rng), loss(rng))));
      }
    }
    const WaveguideParams params{4.18, 4.18, 0.5, 811e-6};
    const Eigen::MatrixXcd s = solve(mesh, prog, params, 193.1e12);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s);
    CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-8);
    CHECK(max_abs_diff(s, s.transpose().eval()) <= 1e-8);
  }
}

TEST_CASE("single-cell ring matches the closed-form response") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 1, 1);
  const WaveguideParams params;
  const int loop_rail = mesh.rail_toward_cell(0, 0);
  const int bus_rail = 1 - loop_rail;
  const int in_idx = mesh.external_index(make_port(0, 0, bus_rail));
  const int out_idx = mesh.external_index(make_port(0, 1, bus_rail));
  REQUIRE(in_idx >= 0);
  REQUIRE(out_idx >= 0);

  const double f0 = 193.4e12;
  const double fsr = fsr_hz(params, 6);
  for (double kappa : {0.2, 0.5, 0.8}) {
    for (double loss_db : {0.0, 0.3}) {
      const Program prog = ring_program(mesh, kappa, loss_db);
      double worst = 0.0;
      for (int k = 0; k <= 100; ++k) {
        const double f = f0 + fsr * k / 100.0;
        const Eigen::MatrixXcd s = solve(mesh, prog, params, f);
        const Complex h = ring_reference(mesh, prog, params, f);
        worst = std::max(worst, std::abs(s(out_idx, in_idx) - h));
        // The loop rail ports of the coupler carry no leftover signal.
        CHECK(std::abs(s(in_idx, in_idx)) <= 1e-12);
      }
      CHECK(worst <= 1e-6);
    }
  }

  // Fully-cross coupler: light never meets the loop phase, |H| is flat.
  const Program flat = ring_program(mesh, 1.0, 0.3);
  double lo = 1e9, hi = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double f = f0 + fsr * k / 40.0;
    const Eigen::MatrixXcd s = solve(mesh, flat, params, f);
    lo = std::min(lo, std::abs(s(out_idx, in_idx)));
    hi = std::max(hi, std::abs(s(out_idx, in_idx)));
  }
  CHECK(hi - lo <= 1e-9);
}

TEST_CASE("ring resonance dips are spaced by the loop FSR") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 1, 1);
  const WaveguideParams params;
  const Program prog = ring_program(mesh, 0.5, 0.3);
  const int loop_rail = mesh.rail_toward_cell(0, 0);
  const int bus_rail = 1 - loop_rail;
  const int in_idx = mesh.external_index(make_port(0, 0, bus_rail));
  const int out_idx = mesh.external_index(make_port(0, 1, bus_rail));

  const double fsr = fsr_hz(params, 6);
  const FrequencyGrid grid{193.4e12, 193.4e12 + 2.5 * fsr, 1501};
  const SParams sp = sweep(mesh, prog, params, grid);
  const double step = (grid.stop_hz - grid.start_hz) / (grid.points - 1);

  std::vector<double> dips;
  for (int k = 1; k + 1 < grid.points; ++k) {
    const double prev = std::abs(sp.matrices[k - 1](out_idx, in_idx));
    const double here = std::abs(sp.matrices[k](out_idx, in_idx));
    const double next = std::abs(sp.matrices[k + 1](out_idx, in_idx));
    if (here < prev && here <= next) dips.push_back(sp.frequencies[k]);
  }
  REQUIRE(dips.size() >= 2);
  for (size_t i = 1; i < dips.size(); ++i) {
    CHECK(std::abs((dips[i] - dips[i - 1]) - fsr) <= step + 1e-3);
  }
}

TEST_CASE("a lossless closed loop on resonance is reported singular") {
  const Mesh mesh = Mesh::generate(Topology::Hexagonal, 1, 1);
  const WaveguideParams params;
  const Program lossless = ring_program(mesh, 0.0, 0.0);  // 6 lossless bars

  // Locate an exact resonance from the round-trip factor at f = 0.
  const int loop_rail = mesh.rail_toward_cell(0, 0);
  int steps = 0;
  const Complex r0 = loop_amplitude(mesh, lossless, params, 0.0,
                                    make_port(0, 1, loop_rail),
                                    make_port(0, 0, loop_rail), &steps) *
                     effective_transfer(lossless.mode_of(0), params, 0.0)(
                         loop_rail, loop_rail);
  CHECK(std::abs(std::abs(r0) - 1.0) <= 1e-12);
  const double fsr_phase =
      kSpeedOfLightMps / (params.n_eff * 6.0 * params.l_tbu_m);
  const double k0 = std::ceil(193.0e12 / fsr_phase);
  const double f_res =
      (std::arg(r0) / (2.0 * kPi) + k0) * fsr_phase;

  CHECK_THROWS_AS(solve(mesh, lossless, params, f_res), DomainError);
  try {
    solve(mesh, lossless, params, f_res);
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("singular") != std::string::npos);
    CHECK(std::string(e.what()).find("Hz") != std::string::npos);
  }

  // Off resonance it solves and is unitary; with loss it never throws.
  const Eigen::MatrixXcd s =
      solve(mesh, lossless, params, f_res + fsr_phase / 2.0);
  CHECK(max_abs_diff(s.adjoint() * s,
                     Eigen::MatrixXcd::Identity(s.rows(), s.cols())) <= 1e-8);
  CHECK_NOTHROW(solve(mesh, ring_program(mesh, 0.0, 0.3), params, f_res));

  // Sweep names the failing grid point.
  const FrequencyGrid grid{f_res - 1e9, f_res + 1e9, 3};
  try {
    sweep(mesh, lossless, params, grid);
    FAIL("expected a singular-point error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("sweep point 1") != std::string::npos);
  }
}

TEST_CASE("one-point sweep equals solve") {
  const Mesh mesh = Mesh::generate(Topology::Square, 1, 1);
  Program prog;
  prog.set(0, TBUMode::cross());
  prog.set(2, TBUMode::bar());
  const WaveguideParams params;
  const SParams sp = sweep(mesh, prog, params, FrequencyGrid{193e12, 193e12, 1});
  REQUIRE(sp.matrices.size() == 1);
  CHECK(max_abs_diff(sp.matrices[0], solve(mesh, prog, params, 193e12)) == 0.0);
  CHECK(sp.ports == mesh.external_ports());
}

TEST_CASE("CSV export shape and determinism") {
  const Mesh frag = Mesh::from_parts(1, {});
  Program prog;
  prog.set(0, TBUMode::cross());
  const SParams sp =
      sweep(frag, prog, WaveguideParams{}, FrequencyGrid{1e12, 2e12, 3});
  const std::string csv = sparams_csv(sp);
  CHECK(csv.rfind("frequency_hz, out_port, in_port, re, im, mag_db, phase_rad\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 4 * 4);
  CHECK(sparams_csv(sp) == csv);
}
