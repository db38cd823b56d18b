#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pmesh/mesh.hpp"
#include "pmesh/tbu.hpp"

namespace pmesh {

// Phase-shifter drive electronics: each commanded phase is committed to one
// of 2^resolution_bits uniformly spaced levels covering [0, 2*pi).
struct DriverConfig {
  int resolution_bits = 8;  // in [1, 24]
};

// Photodiode readout behind an optical tap: tap_ratio of the incident power
// reaches the diode, which produces responsivity * power plus dark current,
// with optional additive Gaussian read noise.
struct MonitorConfig {
  double responsivity_a_per_w = 0.7;  // > 0
  double dark_current_a = 50e-9;      // >= 0
  double noise_sigma_a = 0.0;         // >= 0
  double tap_ratio = 1.0;             // in (0, 1]
};

// Nearest drive level to `phase`, measured around the circle, reported in
// [0, 2*pi).  The wrapped error never exceeds pi / 2^bits.
double quantize_phase(double phase, const DriverConfig& driver);

// Program with every explicit arm phase committed to the drive grid.  Bar and
// Cross entries are symbolic presets and pass through unchanged (their
// canonical levels lie on every grid with two or more bits); Off entries are
// undriven.  Losses are untouched.
Program quantize_program(const Program& program, const DriverConfig& driver);

// Read current (A) for `optical_power_w` watts on the tap input:
//   i = responsivity * tap_ratio * power + dark + N(0, sigma).
// With sigma = 0 no random draw is made and `rng` is left untouched, so the
// result is exact.  Negative power is rejected.
double monitor_read(double optical_power_w, const MonitorConfig& config,
                    std::mt19937_64& rng);

// Actuator view of a program: (theta_upper, theta_lower) for each driven
// (non-Off) entry, in ascending TBU id order.  Bar and Cross expand to their
// canonical levels.
std::vector<double> commanded_phases(const Program& program);

// Program whose driven entries carry the given actuator phases (same layout
// as commanded_phases), each as an explicit Tunable entry; per-entry losses
// are preserved and Off entries are untouched.
Program program_with_phases(const Program& program,
                            const std::vector<double>& phases);

// Thermal/electrical coupling between phase actuators, first order: the
// effective phase at actuator i is
//   effective_i = commanded_i + sum_k X(i, k) * commanded_k.
// X is square over the actuator vector, has zero diagonal, nonnegative
// entries, and row sums below one (a perturbation, not a redistribution).
std::vector<double> apply_crosstalk(const std::vector<double>& commanded,
                                    const Eigen::MatrixXd& crosstalk);

// Convenience overload over a program's actuator vector.
std::vector<double> apply_crosstalk(const Program& program,
                                    const Eigen::MatrixXd& crosstalk);

// Budget and stopping policy for optimize().  Empty bounds vectors default
// to [0, 2*pi] per setting.  `seed` feeds any stochastic strategy; the
// built-in deterministic search ignores it, so runs are reproducible
// regardless.
struct OptimizerOptions {
  long max_evaluations = 1000;  // >= 1, counts objective calls
  double tolerance = 1e-9;      // > 0, minimum cost improvement per sweep
  std::vector<double> lower;    // per-setting lower bounds
  std::vector<double> upper;    // per-setting upper bounds
  std::uint64_t seed = 0;
};

// One objective evaluation: 0-based call index, returned cost, and the
// settings vector it was evaluated at.
struct TraceRow {
  long evaluation = 0;
  double cost = 0.0;
  std::vector<double> settings;
};

struct OptimizeResult {
  std::vector<double> settings;  // best settings found
  double cost = 0.0;             // cost at those settings
  long evaluations = 0;          // objective calls spent
  std::vector<TraceRow> trace;   // every evaluation, in call order
};

// Minimizes `objective` over the bounded box by cyclic coordinate descent
// with a golden-section line search per coordinate.  The initial point is
// evaluated first, the search stops when a full sweep improves the cost by
// less than `tolerance` or the evaluation budget runs out, and the reported
// optimum is the best point actually evaluated.  A non-finite cost raises
// DomainError naming the offending settings.
OptimizeResult optimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& initial, const OptimizerOptions& options);

// Trace as CSV: "evaluation, cost, setting_0, ..." with one row per
// objective call.
std::string trace_csv(const OptimizeResult& result);

}  // namespace pmesh
