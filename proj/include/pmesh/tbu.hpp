#pragma once

#include "pmesh/gates.hpp"

namespace pmesh {

// Default insertion loss of one tunable basic unit (dB).
inline constexpr double kDefaultTbuLossDb = 0.3;

// Physical length of one tunable basic unit (m).
inline constexpr double kDefaultTbuLengthM = 811e-6;

// Drive state of one tunable basic unit: a balanced Mach-Zehnder with a
// phase shifter in each arm.
struct TBUSettings {
  double theta_upper = 0.0;       // upper-arm phase (rad)
  double theta_lower = 0.0;       // lower-arm phase (rad)
  double insertion_loss_db = kDefaultTbuLossDb;
};

enum class TBUState { Off, Bar, Cross, Tunable };

// A TBU's entry in a mesh program.  Bar and Cross are canonical switch
// states whose settings are implied; Tunable carries explicit settings;
// Off models an undriven unit, which absorbs incident light.
struct TBUMode {
  TBUState state = TBUState::Off;
  TBUSettings settings;  // meaningful only for Tunable

  static TBUMode off() { return {TBUState::Off, {}}; }
  static TBUMode bar() { return {TBUState::Bar, {}}; }
  static TBUMode cross() { return {TBUState::Cross, {}}; }
  static TBUMode tunable(const TBUSettings& s) { return {TBUState::Tunable, s}; }
};

// Transfer matrix of one TBU, rails (upper, lower) to rails (upper, lower):
//   T = 10^{-loss/20} * j * e^{j*avg} * [[sin(d/2), cos(d/2)],
//                                        [cos(d/2), -sin(d/2)]]
// with avg = (theta_u + theta_l)/2 and d = theta_u - theta_l.  The matrix
// is symmetric, so the device is reciprocal; at zero loss it is unitary.
Gate2 tbu_transfer(const TBUSettings& s);

// Arm phases realizing cross-coupled power ratio kappa in [0, 1]:
// d = 2*arccos(sqrt(kappa)), both arms offset by common_phase.  kappa = 1
// is the full-cross state (d = 0), kappa = 0 full bar (d = pi).
TBUSettings settings_for_coupling(double kappa, double common_phase = 0.0,
                                  double loss_db = kDefaultTbuLossDb);

// Concrete settings for a drive state; Bar/Cross expand to their canonical
// couplings at the given default loss.  Off has no settings and throws.
TBUSettings mode_settings(const TBUMode& mode,
                          double default_loss_db = kDefaultTbuLossDb);

}  // namespace pmesh
