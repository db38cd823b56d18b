#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace pmesh {

using Complex = std::complex<double>;

// A 2x2 complex gate acting on the two rails of a photonic circuit stage.
using Gate2 = Eigen::Matrix2cd;

enum class Axis { X, Y, Z };

// Factorization order of a U(2) element into rotations.  ZYX means
// U = e^{j*delta} * Rz(alpha) * Ry(beta) * Rx(gamma); XYZ swaps the outer
// factors: U = e^{j*delta} * Rx(alpha) * Ry(beta) * Rz(gamma).
enum class EulerOrder { ZYX, XYZ };

struct EulerAngles {
  double delta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  EulerOrder order = EulerOrder::ZYX;
};

// Pauli matrix sigma_k for k in 0..3 (identity, X, Y, Z).
Gate2 pauli(int k);

// Single-axis rotation by theta:
//   Rx(theta) = [[cos(t/2),  j sin(t/2)], [j sin(t/2), cos(t/2)]]
//   Ry(theta) = [[cos(t/2), -sin(t/2)],  [sin(t/2),   cos(t/2)]]
//   Rz(theta) = diag(e^{-j t/2}, e^{j t/2})
// All three have unit determinant and period 4*pi.
Gate2 rotation(Axis axis, double theta);

// Product of a chain of gates; the first element of the list is applied
// first, i.e. compose({g1, g2}) == g2 * g1.  Throws on an empty list.
Gate2 compose(const std::vector<Gate2>& chain);

Gate2 euler_compose(const EulerAngles& angles);

// True when max |(U^H U - I)_{ij}| <= tol.
bool is_unitary(const Gate2& u, double tol = 1e-9);

// Inverse of euler_compose for a unitary input (checked against `tol`).
// Conventions: delta = arg(det U)/2 taken in (-pi/2, pi/2]; the middle
// angle is reduced to [-pi/2, pi/2]; the inner angle to (-pi, pi]; the
// outer angle absorbs the global SU(2) sign and lies in [0, 4*pi).  At
// gimbal lock (|beta| = pi/2) the inner angle is fixed to 0 and the
// remaining freedom folds into the outer angle.
EulerAngles euler_decompose(const Gate2& u, EulerOrder order, double tol = 1e-9);

}  // namespace pmesh
