#include "pmesh/control.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "pmesh/errors.hpp"

namespace pmesh {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_driver(const DriverConfig& d) {
  if (d.resolution_bits < 1 || d.resolution_bits > 24)
    throw std::invalid_argument("driver resolution_bits must be in [1, 24]");
}

void check_monitor(const MonitorConfig& m) {
  if (!(m.responsivity_a_per_w > 0.0))
    throw std::invalid_argument("monitor responsivity must be positive");
  if (!(m.dark_current_a >= 0.0))
    throw std::invalid_argument("monitor dark current must be nonnegative");
  if (!(m.noise_sigma_a >= 0.0))
    throw std::invalid_argument("monitor noise sigma must be nonnegative");
  if (!(m.tap_ratio > 0.0) || !(m.tap_ratio <= 1.0))
    throw std::invalid_argument("monitor tap ratio must be in (0, 1]");
}

std::string settings_text(const std::vector<double>& x) {
  std::string out = "[";
  char buf[40];
  for (size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ", " : "", x[i]);
    out += buf;
  }
  return out + "]";
}

}  // namespace

double quantize_phase(double phase, const DriverConfig& driver) {
  check_driver(driver);
  if (!std::isfinite(phase))
    throw std::invalid_argument("quantize_phase: phase must be finite");
  const long levels = 1L << driver.resolution_bits;
  const double step = kTwoPi / static_cast<double>(levels);
  double wrapped = std::fmod(phase, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // Nearest level around the circle: the top half-step wraps to level 0.
  const long k = std::lround(wrapped / step) % levels;
  return static_cast<double>(k) * step;
}

Program quantize_program(const Program& program, const DriverConfig& driver) {
  check_driver(driver);
  Program out = program;
  for (auto& [id, mode] : out.modes) {
    if (mode.state != TBUState::Tunable) continue;
    mode.settings.theta_upper = quantize_phase(mode.settings.theta_upper, driver);
    mode.settings.theta_lower = quantize_phase(mode.settings.theta_lower, driver);
  }
  return out;
}

double monitor_read(double optical_power_w, const MonitorConfig& config,
                    std::mt19937_64& rng) {
  check_monitor(config);
  if (!(optical_power_w >= 0.0))
    throw std::invalid_argument("monitor_read: optical power must be nonnegative");
  double current = config.responsivity_a_per_w * config.tap_ratio * optical_power_w +
                   config.dark_current_a;
  if (config.noise_sigma_a > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise_sigma_a);
    current += noise(rng);
  }
  return current;
}

std::vector<double> commanded_phases(const Program& program) {
  std::vector<double> out;
  for (const auto& [id, mode] : program.modes) {
    if (mode.state == TBUState::Off) continue;
    const TBUSettings s = mode_settings(mode);
    out.push_back(s.theta_upper);
    out.push_back(s.theta_lower);
  }
  return out;
}

Program program_with_phases(const Program& program,
                            const std::vector<double>& phases) {
  Program out = program;
  size_t next = 0;
  for (auto& [id, mode] : out.modes) {
    if (mode.state == TBUState::Off) continue;
    if (next + 2 > phases.size())
      throw std::invalid_argument(
          "program_with_phases: phase vector shorter than the actuator count");
    TBUSettings s = mode_settings(mode);
    s.theta_upper = phases[next++];
    s.theta_lower = phases[next++];
    mode = TBUMode::tunable(s);
  }
  if (next != phases.size())
    throw std::invalid_argument(
        "program_with_phases: phase vector longer than the actuator count");
  return out;
}

std::vector<double> apply_crosstalk(const std::vector<double>& commanded,
                                    const Eigen::MatrixXd& crosstalk) {
  const auto n = static_cast<Eigen::Index>(commanded.size());
  if (crosstalk.rows() != crosstalk.cols())
    throw std::invalid_argument("crosstalk matrix must be square");
  if (crosstalk.rows() != n)
    throw std::invalid_argument(
        "crosstalk matrix dimension must match the actuator count");
  for (Eigen::Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double x = crosstalk(i, k);
      if (!std::isfinite(x) || x < 0.0)
        throw std::invalid_argument("crosstalk entries must be finite and nonnegative");
      if (i == k && x != 0.0)
        throw std::invalid_argument("crosstalk matrix must have zero diagonal");
      row_sum += x;
    }
    if (row_sum >= 1.0)
      throw std::invalid_argument("crosstalk row sums must stay below one");
  }
  std::vector<double> out(commanded.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    double effective = commanded[static_cast<size_t>(i)];
    for (Eigen::Index k = 0; k < n; ++k)
      effective += crosstalk(i, k) * commanded[static_cast<size_t>(k)];
    out[static_cast<size_t>(i)] = effective;
  }
  return out;
}

std::vector<double> apply_crosstalk(const Program& program,
                                    const Eigen::MatrixXd& crosstalk) {
  return apply_crosstalk(commanded_phases(program), crosstalk);
}

OptimizeResult optimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& initial, const OptimizerOptions& options) {
  const size_t n = initial.size();
  if (n == 0) throw std::invalid_argument("optimize: empty settings vector");
  if (options.max_evaluations < 1)
    throw std::invalid_argument("optimize: max_evaluations must be at least 1");
  if (!(options.tolerance > 0.0))
    throw std::invalid_argument("optimize: tolerance must be positive");
  std::vector<double> lo = options.lower;
  std::vector<double> hi = options.upper;
  if (lo.empty()) lo.assign(n, 0.0);
  if (hi.empty()) hi.assign(n, kTwoPi);
  if (lo.size() != n || hi.size() != n)
    throw std::invalid_argument("optimize: bounds must match the settings size");
  for (size_t i = 0; i < n; ++i) {
    if (!(lo[i] < hi[i]))
      throw std::invalid_argument("optimize: each lower bound must lie below its upper bound");
    if (initial[i] < lo[i] || initial[i] > hi[i])
      throw std::invalid_argument("optimize: initial settings must lie inside the bounds");
  }

  OptimizeResult res;
  res.settings = initial;
  res.cost = std::numeric_limits<double>::infinity();

  auto evaluate = [&](const std::vector<double>& x) {
    const double c = objective(x);
    res.trace.push_back({res.evaluations, c, x});
    ++res.evaluations;
    if (!std::isfinite(c))
      throw DomainError("optimize: objective returned a non-finite cost at settings " +
                        settings_text(x));
    if (c < res.cost) {
      res.cost = c;
      res.settings = x;
    }
    return c;
  };
  auto exhausted = [&] { return res.evaluations >= options.max_evaluations; };

  evaluate(initial);

  // Golden-section line search along coordinate i from the best point so
  // far; every probe lands in the trace, so the global best needs no extra
  // bookkeeping.
  constexpr double kGolden = 0.61803398874989484820;
  auto line_search = [&](size_t i) {
    std::vector<double> x = res.settings;
    auto probe = [&](double t) {
      x[i] = t;
      return evaluate(x);
    };
    double a = lo[i], b = hi[i];
    const double width_tol = 1e-10 * (b - a);
    if (exhausted()) return;
    double xc = b - kGolden * (b - a);
    double fc = probe(xc);
    if (exhausted()) return;
    double xd = a + kGolden * (b - a);
    double fd = probe(xd);
    while (!exhausted() && b - a > width_tol) {
      if (fc < fd) {
        b = xd;
        xd = xc;
        fd = fc;
        xc = b - kGolden * (b - a);
        fc = probe(xc);
      } else {
        a = xc;
        xc = xd;
        fc = fd;
        xd = a + kGolden * (b - a);
        fd = probe(xd);
      }
    }
  };

  while (!exhausted()) {
    const double sweep_start = res.cost;
    for (size_t i = 0; i < n && !exhausted(); ++i) line_search(i);
    if (sweep_start - res.cost < options.tolerance) break;
  }
  return res;
}

std::string trace_csv(const OptimizeResult& result) {
  std::string out = "evaluation, cost";
  const size_t n = result.trace.empty() ? result.settings.size()
                                        : result.trace.front().settings.size();
  char buf[64];
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), ", setting_%zu", i);
    out += buf;
  }
  out += "\n";
  for (const TraceRow& row : result.trace) {
    std::snprintf(buf, sizeof(buf), "%ld, %.17g", row.evaluation, row.cost);
    out += buf;
    for (double s : row.settings) {
      std::snprintf(buf, sizeof(buf), ", %.17g", s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace pmesh
