#include "pmesh/netsolve.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "pmesh/errors.hpp"

namespace pmesh {

namespace {

constexpr Complex kJ{0.0, 1.0};

void validate_params(const WaveguideParams& p) {
  if (!(p.n_eff > 0.0) || !(p.n_g > 0.0)) {
    throw std::invalid_argument("waveguide indices must be > 0");
  }
  if (!(p.propagation_loss_db_per_cm >= 0.0)) {
    throw std::invalid_argument("propagation loss must be >= 0");
  }
  if (!(p.l_tbu_m > 0.0)) {
    throw std::invalid_argument("TBU length must be > 0");
  }
}

void validate_program(const Mesh& mesh, const Program& program) {
  for (const auto& [tbu, mode] : program.modes) {
    (void)mode;
    if (tbu < 0 || tbu >= mesh.tbu_count()) {
      throw std::invalid_argument("program references unknown TBU " +
                                  std::to_string(tbu));
    }
  }
}

}  // namespace

std::vector<double> FrequencyGrid::frequencies() const {
  if (points < 1) throw std::invalid_argument("frequency grid needs >= 1 point");
  if (!(start_hz >= 0.0) || !std::isfinite(start_hz) || !std::isfinite(stop_hz)) {
    throw std::invalid_argument("frequency grid bounds must be finite and >= 0");
  }
  if (points > 1 && !(start_hz < stop_hz)) {
    throw std::invalid_argument("frequency grid needs start < stop");
  }
  std::vector<double> out(points);
  for (int k = 0; k < points; ++k) {
    out[k] = points == 1 ? start_hz
                         : start_hz + (stop_hz - start_hz) * k / (points - 1);
  }
  return out;
}

double fsr_hz(const WaveguideParams& params, int tbus_in_loop) {
  validate_params(params);
  if (tbus_in_loop < 1) throw std::invalid_argument("loop needs >= 1 TBU");
  return kSpeedOfLightMps / (params.n_g * tbus_in_loop * params.l_tbu_m);
}

Gate2 effective_transfer(const TBUMode& mode, const WaveguideParams& params,
                         double f_hz) {
  if (mode.state == TBUState::Off) return Gate2::Zero();
  const double phase = 2.0 * std::numbers::pi * params.n_eff * f_hz *
                       params.l_tbu_m / kSpeedOfLightMps;
  const double wg_loss_db =
      params.propagation_loss_db_per_cm * params.l_tbu_m * 100.0;
  const double amp = std::pow(10.0, -wg_loss_db / 20.0);
  return amp * std::exp(-kJ * phase) * tbu_transfer(mode_settings(mode));
}

LinearSystem assemble(const Mesh& mesh, const Program& program,
                      const WaveguideParams& params, double f_hz) {
  validate_params(params);
  validate_program(mesh, program);
  if (!(f_hz >= 0.0) || !std::isfinite(f_hz)) {
    throw std::invalid_argument("frequency must be finite and >= 0");
  }

  const int dim = 4 * mesh.tbu_count();
  LinearSystem sys;
  sys.m = Eigen::MatrixXcd::Identity(dim, dim);

  for (int t = 0; t < mesh.tbu_count(); ++t) {
    const Gate2 g = effective_transfer(program.mode_of(t), params, f_hz);
    // The wave leaving port (t, e, r) is G[r, r'] times the waves that
    // entered the opposite end; it feeds the connected port, if any.
    for (int e = 0; e < 2; ++e) {
      for (int r = 0; r < 2; ++r) {
        const auto peer = mesh.connected_to(make_port(t, e, r));
        if (!peer) continue;
        for (int rp = 0; rp < 2; ++rp) {
          sys.m(*peer, make_port(t, 1 - e, rp)) -= g(r, rp);
        }
      }
    }
  }
  return sys;
}

Eigen::MatrixXcd solve(const Mesh& mesh, const Program& program,
                       const WaveguideParams& params, double f_hz) {
  const LinearSystem sys = assemble(mesh, program, params, f_hz);
  const int dim = sys.m.rows();
  const int p = static_cast<int>(mesh.external_ports().size());

  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(dim, p);
  for (int j = 0; j < p; ++j) b(mesh.external_ports()[j], j) = 1.0;

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.m);
  // A lossless loop driven exactly on resonance makes the system
  // (numerically) singular; the solve may still return finite garbage
  // with a small residual, so gate on the condition estimate as well.
  const double rcond = lu.rcond();
  const Eigen::MatrixXcd x = lu.solve(b);
  const double residual = (sys.m * x - b).cwiseAbs().maxCoeff();
  if (!std::isfinite(residual) || residual > 1e-6 || !(rcond > 1e-9)) {
    throw DomainError("singular optical network at frequency " +
                      std::to_string(f_hz) +
                      " Hz (lossless loop on resonance)");
  }

  // Read out the waves leaving each external port.
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    const PortId port = mesh.external_ports()[i];
    const int t = port_tbu(port), e = port_end(port), r = port_rail(port);
    const Gate2 g = effective_transfer(program.mode_of(t), params, f_hz);
    for (int rp = 0; rp < 2; ++rp) {
      s.row(i) += g(r, rp) * x.row(make_port(t, 1 - e, rp));
    }
  }
  return s;
}

SParams sweep(const Mesh& mesh, const Program& program,
              const WaveguideParams& params, const FrequencyGrid& grid) {
  SParams out;
  out.frequencies = grid.frequencies();
  out.ports = mesh.external_ports();
  out.matrices.reserve(out.frequencies.size());
  for (size_t k = 0; k < out.frequencies.size(); ++k) {
    try {
      out.matrices.push_back(solve(mesh, program, params, out.frequencies[k]));
    } catch (const DomainError& e) {
      throw DomainError("sweep point " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

std::string sparams_csv(const SParams& s) {
  std::string out = "frequency_hz, out_port, in_port, re, im, mag_db, phase_rad\n";
  char buf[160];
  for (size_t k = 0; k < s.frequencies.size(); ++k) {
    const Eigen::MatrixXcd& m = s.matrices[k];
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        const Complex v = m(i, j);
        const double mag_db = 20.0 * std::log10(std::abs(v));
        std::snprintf(buf, sizeof(buf), "%.17g, %d, %d, %.17g, %.17g, %.17g, %.17g\n",
                      s.frequencies[k], i, j, v.real(), v.imag(), mag_db,
                      std::arg(v));
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace pmesh
