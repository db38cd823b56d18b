#include "pmesh/tbu.hpp"

#include <cmath>
#include <stdexcept>

namespace pmesh {

namespace {
constexpr Complex kJ{0.0, 1.0};
}

Gate2 tbu_transfer(const TBUSettings& s) {
  if (!std::isfinite(s.theta_upper) || !std::isfinite(s.theta_lower)) {
    throw std::invalid_argument("tbu_transfer: non-finite arm phase");
  }
  if (!std::isfinite(s.insertion_loss_db) || s.insertion_loss_db < 0.0) {
    throw std::invalid_argument("tbu_transfer: insertion loss must be >= 0 dB");
  }
  const double avg = (s.theta_upper + s.theta_lower) / 2.0;
  const double diff = s.theta_upper - s.theta_lower;
  const double amp = std::pow(10.0, -s.insertion_loss_db / 20.0);
  const Complex lead = amp * kJ * std::exp(kJ * avg);
  const double sh = std::sin(diff / 2.0);
  const double ch = std::cos(diff / 2.0);
  Gate2 t;
  t << lead * sh, lead * ch,
       lead * ch, lead * -sh;
  return t;
}

TBUSettings settings_for_coupling(double kappa, double common_phase,
                                  double loss_db) {
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("settings_for_coupling: kappa must be in [0, 1]");
  }
  if (!std::isfinite(common_phase)) {
    throw std::invalid_argument("settings_for_coupling: non-finite phase");
  }
  const double diff = 2.0 * std::acos(std::sqrt(kappa));
  TBUSettings s;
  s.theta_upper = common_phase + diff / 2.0;
  s.theta_lower = common_phase - diff / 2.0;
  s.insertion_loss_db = loss_db;
  return s;
}

TBUSettings mode_settings(const TBUMode& mode, double default_loss_db) {
  switch (mode.state) {
    case TBUState::Bar:
      return settings_for_coupling(0.0, 0.0, default_loss_db);
    case TBUState::Cross:
      return settings_for_coupling(1.0, 0.0, default_loss_db);
    case TBUState::Tunable:
      return mode.settings;
    case TBUState::Off:
      break;
  }
  throw std::invalid_argument("mode_settings: off state has no settings");
}

}  // namespace pmesh
