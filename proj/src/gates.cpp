#include "pmesh/gates.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmesh {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kJ{0.0, 1.0};

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

double wrap_to(double x, double lo, double period) {
  // Reduce x into [lo, lo + period).
  double y = std::fmod(x - lo, period);
  if (y < 0.0) y += period;
  return y + lo;
}

}  // namespace

Gate2 pauli(int k) {
  Gate2 g;
  switch (k) {
    case 0: g << 1, 0, 0, 1; break;
    case 1: g << 0, 1, 1, 0; break;
    case 2: g << 0, -kJ, kJ, 0; break;
    case 3: g << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli index must be in 0..3");
  }
  return g;
}

Gate2 rotation(Axis axis, double theta) {
  check_finite(theta, "rotation angle");
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Gate2 g;
  switch (axis) {
    case Axis::X: g << c, kJ * s, kJ * s, c; break;
    case Axis::Y: g << c, -s, s, c; break;
    case Axis::Z: g << std::exp(-kJ * (theta / 2.0)), 0, 0,
                       std::exp(kJ * (theta / 2.0)); break;
  }
  return g;
}

Gate2 compose(const std::vector<Gate2>& chain) {
  if (chain.empty()) {
    throw std::invalid_argument("compose: empty gate list");
  }
  Gate2 acc = Gate2::Identity();
  for (const Gate2& g : chain) acc = g * acc;
  return acc;
}

Gate2 euler_compose(const EulerAngles& a) {
  check_finite(a.delta, "delta");
  check_finite(a.alpha, "alpha");
  check_finite(a.beta, "beta");
  check_finite(a.gamma, "gamma");
  const Complex phase = std::exp(kJ * a.delta);
  if (a.order == EulerOrder::ZYX) {
    return phase * (rotation(Axis::Z, a.alpha) * rotation(Axis::Y, a.beta) *
                    rotation(Axis::X, a.gamma));
  }
  return phase * (rotation(Axis::X, a.alpha) * rotation(Axis::Y, a.beta) *
                  rotation(Axis::Z, a.gamma));
}

bool is_unitary(const Gate2& u, double tol) {
  Gate2 r = u.adjoint() * u - Gate2::Identity();
  return r.cwiseAbs().maxCoeff() <= tol;
}

namespace {

// Angles (without the scalar phase) of V = Rz(alpha)*Ry(beta)*Rx(gamma)
// for V in SU(2).  Writing cb = cos(beta/2) etc., the matrix is
//   V = [ e^{-j a/2}(cb*cg - j*sb*sg)   e^{-j a/2}(j*cb*sg - sb*cg) ]
//       [ e^{ j a/2}(sb*cg + j*cb*sg)   e^{ j a/2}(cb*cg + j*sb*sg) ]
// from which three phase-free real combinations recover the full angles:
//   2*Re(V10 * conj(V11)) = sin(beta)
//   |V00|^2 - |V01|^2     = cos(beta)*cos(gamma)
//   2*Im(V10 * conj(V11)) = cos(beta)*sin(gamma)
// and the outer angle follows by referencing the phase of whichever of
// V11, V10 has the larger magnitude (their squared magnitudes sum to 1).
struct ZyxAngles {
  double alpha, beta, gamma;
};

ZyxAngles zyx_of_su2(const Gate2& v) {
  const Complex prod = v(1, 0) * std::conj(v(1, 1));
  const double sin_b = 2.0 * prod.real();
  const double cb_sg = 2.0 * prod.imag();
  const double cb_cg = std::norm(v(0, 0)) - std::norm(v(0, 1));
  const double cos_b = std::hypot(cb_cg, cb_sg);

  ZyxAngles out{};
  if (cos_b < 1e-12) {
    // Gimbal lock: the inner and outer rotations act about the same
    // effective axis.  Fix gamma = 0 and fold everything into alpha.
    out.beta = std::copysign(kPi / 2.0, sin_b);
    out.gamma = 0.0;
    out.alpha = 2.0 * std::arg(v(1, 1));
  } else {
    out.beta = std::atan2(sin_b, cos_b);
    out.gamma = std::atan2(cb_sg, cb_cg);
    const double p = std::cos(out.beta / 2.0) * std::cos(out.gamma / 2.0);
    const double q = std::sin(out.beta / 2.0) * std::sin(out.gamma / 2.0);
    const double r = std::cos(out.beta / 2.0) * std::sin(out.gamma / 2.0);
    const double s = std::sin(out.beta / 2.0) * std::cos(out.gamma / 2.0);
    if (std::norm(v(1, 1)) >= std::norm(v(1, 0))) {
      out.alpha = 2.0 * (std::arg(v(1, 1)) - std::atan2(q, p));
    } else {
      out.alpha = 2.0 * (std::arg(v(1, 0)) - std::atan2(r, s));
    }
  }
  out.alpha = wrap_to(out.alpha, 0.0, 4.0 * kPi);
  return out;
}

}  // namespace

EulerAngles euler_decompose(const Gate2& u, EulerOrder order, double tol) {
  if (!u.allFinite()) {
    throw std::invalid_argument("euler_decompose: non-finite matrix");
  }
  if (!is_unitary(u, tol)) {
    throw std::invalid_argument("euler_decompose: input is not unitary");
  }

  EulerAngles out;
  out.order = order;
  // Global phase from the determinant; the residual matrix has det 1.
  out.delta = std::arg(u.determinant()) / 2.0;
  const Gate2 v = std::exp(-kJ * out.delta) * u;

  if (order == EulerOrder::ZYX) {
    const ZyxAngles a = zyx_of_su2(v);
    out.alpha = a.alpha;
    out.beta = a.beta;
    out.gamma = a.gamma;
  } else {
    // V = Rx(a)*Ry(b)*Rz(g)  <=>  V^T = Rz(g)*Ry(-b)*Rx(a), since Rx and
    // Rz are symmetric and Ry(b)^T = Ry(-b).
    const ZyxAngles t = zyx_of_su2(v.transpose());
    out.alpha = wrap_to(t.gamma, 0.0, 4.0 * kPi);
    out.beta = -t.beta;
    out.gamma = t.alpha > 2.0 * kPi ? t.alpha - 4.0 * kPi : t.alpha;
  }
  return out;
}

}  // namespace pmesh
