#pragma once

#include <array>
#include <complex>

namespace stcal::qsim {

using Complex = std::complex<double>;

// 2x2 complex matrix, row-major. Used for single-qubit propagators.
struct Unitary2 {
  std::array<Complex, 4> m{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};

  static Unitary2 identity() { return {}; }
  static Unitary2 from(Complex a, Complex b, Complex c, Complex d) { return Unitary2{{a, b, c, d}}; }

  const Complex& operator()(int r, int c) const { return m[2 * r + c]; }
  Complex& operator()(int r, int c) { return m[2 * r + c]; }

  Unitary2 operator*(const Unitary2& rhs) const;
  Unitary2 adjoint() const;
  Complex trace() const { return m[0] + m[3]; }

  // max_ij |(U^dagger U - I)_ij|
  double unitarity_error() const;
  // |<0|U|0>|^2
  double survival_probability() const { return std::norm(m[0]); }
};

// exp(-i (hx X + hy Y + hz Z) dt), exact closed form.
Unitary2 su2_exp(double hx, double hy, double hz, double dt);

// R_a(phi) = exp(-i phi/2 sigma_a)
Unitary2 rx(double phi);
Unitary2 ry(double phi);
Unitary2 rz(double phi);

// max_ij |a_ij - e^{i phase} b_ij| minimized over the global phase.
double distance_up_to_phase(const Unitary2& a, const Unitary2& b);

// Entanglement fidelity |Tr(U^dagger V)|^2 / d^2 with d = 2.
double entanglement_fidelity(const Unitary2& target, const Unitary2& realized);

// U = R_Z(z1) R_X(x) R_Z(z2) up to a global phase, x in [0, pi], z1, z2 in (-pi, pi].
// For x < 1e-9 (or pi - x < 1e-9) z2 is 0 and the whole free Z angle sits in z1.
struct EulerZXZ {
  double z1 = 0.0;
  double x = 0.0;
  double z2 = 0.0;
};

EulerZXZ euler_zxz(const Unitary2& u);
Unitary2 compose_zxz(const EulerZXZ& angles);

// Ideal ZXZ angles of the calibrated gates X_{pi/2} and Y_{pi/2}.
inline constexpr EulerZXZ kIdealXHalf{0.0, std::numbers::pi / 2, 0.0};
inline constexpr EulerZXZ kIdealYHalf{std::numbers::pi / 2, std::numbers::pi / 2, -std::numbers::pi / 2};

// Removes the simultaneous Z-conjugation gauge from a realized {X_{pi/2}, Y_{pi/2}} pair.
// theta is chosen by a least-squares (circular) average of the Z-angle residuals of both
// gates; the corrected gates are R_Z(theta) G R_Z(-theta).
struct GlobalZCorrection {
  double theta = 0.0;
  Unitary2 x_gate;
  Unitary2 y_gate;
};

GlobalZCorrection global_z_correct(const Unitary2& x_gate, const Unitary2& y_gate);

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace stcal::qsim
