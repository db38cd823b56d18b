#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmesh/mesh.hpp"
#include "pmesh/netsolve.hpp"

namespace pmesh {

// A canned circuit on a hexagonal mesh: the drive states, the TBUs they
// occupy, the external ports the circuit is driven and observed at, and a
// closed-form prediction of the (outputs x inputs) response block for the
// emitted program.
struct PresetResult {
  Program program;
  std::vector<int> used;       // programmed TBU ids, ascending
  std::vector<PortId> inputs;  // designated external input ports
  std::vector<PortId> outputs; // designated external output ports
  // Analytic response block (outputs x inputs) of the emitted program,
  // including its insertion losses and the waveguide propagation factor.
  std::function<Eigen::MatrixXcd(double f_hz, const WaveguideParams& params)>
      reference;
  Eigen::MatrixXcd target;  // frequency-flat design target, if any (else 0x0)
  std::string notes;
};

// Single-cell ring cavity: one boundary TBU of the cell becomes a tunable
// coupler with cross power `kappa`, the other five close the loop in bar.
// The bus runs through the coupler's outer rail; the reference is the
// all-pass response with round-trip length 6 TBUs.  kappa in (0, 1].
PresetResult ring_filter(const Mesh& mesh, int cell_q, int cell_r,
                         double kappa);

// Two single-cell rings on disjoint cells cascaded by a bus path of
// bar/cross units; the reference is the product of the two all-pass
// responses and the connecting chain's transfer.
PresetResult vernier_pair(const Mesh& mesh, int cell_a_q, int cell_a_r,
                          int cell_b_q, int cell_b_r, double kappa_a,
                          double kappa_b);

// 90-degree hybrid: signal and local-oscillator inputs each split 50/50
// and recombined in two more 50/50 couplers so that the four outputs carry
// (S+L, S+jL, S-L, S-jL)/2 up to one common phase and loss factor; phase
// corrections are solved exactly from the layout.  `region` restricts the
// TBUs the layout may occupy (empty = whole mesh).
PresetResult hybrid_2x4(const Mesh& mesh, const std::set<int>& region = {});

// Ring filter plus 2x4 hybrid on disjoint TBU sets of one mesh: the
// transmit path is the ring bus, the receive path the hybrid.  Response
// block is [ring; hybrid] with exact zeros between the sub-circuits.
PresetResult transceiver_demo(const Mesh& mesh);

}  // namespace pmesh
