#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmesh/mesh.hpp"

namespace pmesh {

inline constexpr double kSpeedOfLightMps = 299792458.0;

// Waveguide constants shared by every TBU in a simulation.  The phase
// accumulated across one unit is 2*pi*n_eff*f*l_tbu/c; the group index
// enters only derived quantities such as the free spectral range.
struct WaveguideParams {
  double n_eff = 4.18;
  double n_g = 4.18;
  double propagation_loss_db_per_cm = 0.0;
  double l_tbu_m = kDefaultTbuLengthM;
};

struct FrequencyGrid {
  double start_hz = 0.0;
  double stop_hz = 0.0;
  int points = 1;

  // Evenly spaced sample frequencies (validates the grid).
  std::vector<double> frequencies() const;
};

// Scattering parameters over the mesh's external ports: matrices[k](i, j)
// is the field transfer from external port ports[j] to ports[i] at
// frequencies[k].
struct SParams {
  std::vector<double> frequencies;
  std::vector<PortId> ports;
  std::vector<Eigen::MatrixXcd> matrices;
};

// Free spectral range of a loop of `tbus_in_loop` units: c/(n_g * N * L).
double fsr_hz(const WaveguideParams& params, int tbus_in_loop);

// Transfer matrix of one driven TBU including the propagation phase and
// distributed waveguide loss of its length at frequency f; the zero
// matrix for an off unit.
Gate2 effective_transfer(const TBUMode& mode, const WaveguideParams& params,
                         double f_hz);

// The linear system (I - A)·x = b over one unknown per directed internal
// wave (the wave entering each TBU port).  Rows of external ports are
// identity rows; a row of an internal port q connected to p subtracts the
// transfer from p's TBU into q.
struct LinearSystem {
  Eigen::MatrixXcd m;  // (4T) x (4T)
};

LinearSystem assemble(const Mesh& mesh, const Program& program,
                      const WaveguideParams& params, double f_hz);

// Exact solve for the external-port scattering matrix at one frequency.
// Throws DomainError when the network is singular (a lossless loop driven
// exactly on resonance), naming the frequency.
Eigen::MatrixXcd solve(const Mesh& mesh, const Program& program,
                       const WaveguideParams& params, double f_hz);

// Independent per-point solves over the grid; solver errors are rethrown
// with the failing grid index.
SParams sweep(const Mesh& mesh, const Program& program,
              const WaveguideParams& params, const FrequencyGrid& grid);

// CSV spectrum export, one row per (frequency, output port, input port);
// ports are named by their position in the external-port order.
std::string sparams_csv(const SParams& s);

}  // namespace pmesh
