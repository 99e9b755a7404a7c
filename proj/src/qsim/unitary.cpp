#include "stcal/qsim/unitary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stcal::qsim {

Unitary2 Unitary2::operator*(const Unitary2& rhs) const {
  const auto& a = m;
  const auto& b = rhs.m;
  return Unitary2::from(a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                        a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]);
}

Unitary2 Unitary2::adjoint() const {
  return Unitary2::from(std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3]));
}

double Unitary2::unitarity_error() const {
  const Unitary2 p = adjoint() * *this;
  double err = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const Complex want = (r == c) ? Complex{1.0} : Complex{0.0};
      err = std::max(err, std::abs(p(r, c) - want));
    }
  }
  return err;
}

Unitary2 su2_exp(double hx, double hy, double hz, double dt) {
  const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
  if (r == 0.0) return Unitary2::identity();
  const double theta = r * dt;
  const double c = std::cos(theta);
  const double s = std::sin(theta) / r;
  return Unitary2::from(Complex{c, -s * hz}, Complex{-s * hy, -s * hx},
                        Complex{s * hy, -s * hx}, Complex{c, s * hz});
}

Unitary2 rx(double phi) { return su2_exp(1.0, 0.0, 0.0, phi / 2); }
Unitary2 ry(double phi) { return su2_exp(0.0, 1.0, 0.0, phi / 2); }
Unitary2 rz(double phi) { return su2_exp(0.0, 0.0, 1.0, phi / 2); }

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double distance_up_to_phase(const Unitary2& a, const Unitary2& b) {
  const Complex overlap = (b.adjoint() * a).trace();
  const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex{1.0};
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a.m[i] - phase * b.m[i]));
  return d;
}

double entanglement_fidelity(const Unitary2& target, const Unitary2& realized) {
  const double f = std::norm((target.adjoint() * realized).trace()) / 4.0;
  return std::clamp(f, 0.0, 1.0);
}

Unitary2 compose_zxz(const EulerZXZ& e) { return rz(e.z1) * rx(e.x) * rz(e.z2); }

EulerZXZ euler_zxz(const Unitary2& u) {
  constexpr double kDegenerate = 1e-9;
  const double diag = 0.5 * (std::abs(u(0, 0)) + std::abs(u(1, 1)));
  const double offdiag = 0.5 * (std::abs(u(0, 1)) + std::abs(u(1, 0)));
  EulerZXZ e;
  e.x = 2.0 * std::atan2(offdiag, diag);
  // R_Z(a) R_X(b) R_Z(c) has u11/u00 = e^{i(a+c)} and u10/u01 = e^{i(a-c)}.
  if (e.x < kDegenerate) {
    e.z1 = wrap_angle(std::arg(u(1, 1) * std::conj(u(0, 0))));
    e.z2 = 0.0;
    return e;
  }
  if (std::numbers::pi - e.x < kDegenerate) {
    e.z1 = wrap_angle(std::arg(u(1, 0) * std::conj(u(0, 1))));
    e.z2 = 0.0;
    return e;
  }
  const double sum = std::arg(u(1, 1) * std::conj(u(0, 0)));
  const double diff = std::arg(u(1, 0) * std::conj(u(0, 1)));
  EulerZXZ a{wrap_angle(0.5 * (sum + diff)), e.x, wrap_angle(0.5 * (sum - diff))};
  // Halving leaves a joint pi ambiguity in (z1, z2); keep the branch that reproduces u.
  EulerZXZ b{wrap_angle(a.z1 + std::numbers::pi), e.x, wrap_angle(a.z2 + std::numbers::pi)};
  return distance_up_to_phase(compose_zxz(a), u) <= distance_up_to_phase(compose_zxz(b), u) ? a : b;
}

GlobalZCorrection global_z_correct(const Unitary2& x_gate, const Unitary2& y_gate) {
  const EulerZXZ ex = euler_zxz(x_gate);
  const EulerZXZ ey = euler_zxz(y_gate);
  // G' = R_Z(z1_ideal - theta) R_X R_Z(z2_ideal + theta): each Z angle gives one estimate of -theta.
  const double residuals[] = {
      wrap_angle(ex.z1 - kIdealXHalf.z1), -wrap_angle(ex.z2 - kIdealXHalf.z2),
      wrap_angle(ey.z1 - kIdealYHalf.z1), -wrap_angle(ey.z2 - kIdealYHalf.z2)};
  double s = 0.0, c = 0.0;
  for (double r : residuals) {
    s += std::sin(r);
    c += std::cos(r);
  }
  // Least-squares mean on the branch centred at the circular mean.
  const double ref = std::atan2(s, c);
  double mean = 0.0;
  for (double r : residuals) mean += wrap_angle(r - ref);
  mean = ref + mean / 4.0;

  GlobalZCorrection out;
  out.theta = wrap_angle(-mean);
  out.x_gate = rz(out.theta) * x_gate * rz(-out.theta);
  out.y_gate = rz(out.theta) * y_gate * rz(-out.theta);
  return out;
}

}  // namespace stcal::qsim
