#pragma once

// Closed-form Gaussian KL divergence and the assignment cost of placing an
// anisotropic Gaussian QoS footprint over one mixture component.
//
// Throughout, the shape parameters sigma_x / sigma_y / sigma_major /
// sigma_minor are VARIANCES (eigenvalues of the covariance), not standard
// deviations.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmmdeploy/gaussian.hpp"

namespace gmmdeploy {

/// KL( N(mu0, cov0) || N(mu1, cov1) ) in two dimensions.
template <typename Scalar>
Scalar kld_gaussian(const Vector2<Scalar>& mu0, const Matrix2<Scalar>& cov0,
                    const Vector2<Scalar>& mu1, const Matrix2<Scalar>& cov1) {
  using std::log;
  const Scalar det0 = determinant(cov0);
  const Scalar det1 = determinant(cov1);
  if (!(det1 > Scalar(1e-300)) || !(det0 > Scalar(1e-300))) {
    throw NumericalError("kld_gaussian: singular covariance");
  }
  Matrix2<Scalar> inv1;
  inv1 << cov1(1, 1), -cov1(0, 1), -cov1(1, 0), cov1(0, 0);
  inv1 /= det1;
  const Vector2<Scalar> d = mu0 - mu1;
  const Scalar quad = d.dot(inv1 * d);
  const Scalar trace = (inv1 * cov0).trace();
  return Scalar(0.5) * (log(det1 / det0) + quad + trace - Scalar(2));
}

/// Covariance written as principal variances plus the major-axis angle.
template <typename Scalar>
struct AxisForm {
  Scalar sigma_major;
  Scalar sigma_minor;
  Scalar theta;  // [0, pi)
};

template <typename Scalar>
Matrix2<Scalar> rotation(Scalar theta) {
  using std::cos;
  using std::sin;
  Matrix2<Scalar> r;
  r << cos(theta), -sin(theta), sin(theta), cos(theta);
  return r;
}

/// R(theta) diag(sigma_major, sigma_minor) R(theta)^T.
template <typename Scalar>
Matrix2<Scalar> cov_from_axes(const AxisForm<Scalar>& a) {
  const Matrix2<Scalar> r = rotation(a.theta);
  const Matrix2<Scalar> s = r * Vector2<Scalar>(a.sigma_major, a.sigma_minor).asDiagonal() *
                            r.transpose();
  return Scalar(0.5) * (s + s.transpose());
}

/// Eigen-decomposition of a 2x2 SPD matrix. An isotropic input gets theta = 0.
template <typename Scalar>
AxisForm<Scalar> axes_from_cov(const Matrix2<Scalar>& s) {
  using std::abs;
  using std::atan2;
  using std::hypot;
  const Scalar scale = std::max(Scalar(1), s.cwiseAbs().maxCoeff());
  if (abs(s(0, 1) - s(1, 0)) > Scalar(1e-9) * scale) {
    throw std::invalid_argument("axes_from_cov: matrix is not symmetric");
  }
  const Scalar a = s(0, 0);
  const Scalar b = Scalar(0.5) * (s(0, 1) + s(1, 0));
  const Scalar c = s(1, 1);
  const Scalar mid = Scalar(0.5) * (a + c);
  const Scalar half_gap = hypot(Scalar(0.5) * (a - c), b);
  AxisForm<Scalar> out{mid + half_gap, mid - half_gap, Scalar(0)};
  if (!(out.sigma_minor > Scalar(0))) {
    throw std::invalid_argument("axes_from_cov: matrix is not positive definite");
  }
  if (half_gap > std::numeric_limits<Scalar>::epsilon() * scale * Scalar(16)) {
    Scalar theta = Scalar(0.5) * atan2(Scalar(2) * b, a - c);  // (-pi/2, pi/2]
    if (theta < Scalar(0)) theta += std::numbers::pi_v<Scalar>;
    if (theta >= std::numbers::pi_v<Scalar>) theta -= std::numbers::pi_v<Scalar>;
    out.theta = theta;
  }
  return out;
}

/// Service footprint: scale z, relative weight omega = z / sum z, and the
/// major/minor variances.
template <typename Scalar>
struct ServiceProfileT {
  Scalar scale{1};
  Scalar rel_weight{1};
  Scalar sigma_x{1};
  Scalar sigma_y{1};

  void validate() const {
    if (!(sigma_x >= sigma_y && sigma_y > Scalar(0))) {
      throw std::invalid_argument("service profile needs sigma_x >= sigma_y > 0");
    }
    if (!(rel_weight > Scalar(0) && rel_weight <= Scalar(1))) {
      throw std::invalid_argument("service profile relative weight must be in (0, 1]");
    }
  }
};
using ServiceProfile = ServiceProfileT<double>;

template <typename Scalar>
Scalar normalize_heading(Scalar heading) {
  using std::fmod;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar h = fmod(heading, two_pi);
  if (h < Scalar(0)) h += two_pi;
  if (h >= two_pi) h -= two_pi;
  return h;
}

template <typename Scalar>
struct PoseT {
  Vector2<Scalar> position{Vector2<Scalar>::Zero()};
  Scalar heading{0};

  PoseT() = default;
  PoseT(const Vector2<Scalar>& p, Scalar h) : position(p), heading(normalize_heading(h)) {}
};
using Pose = PoseT<double>;

/// QoS covariance of an agent whose major axis points along `heading`.
template <typename Scalar>
Matrix2<Scalar> service_covariance(const ServiceProfileT<Scalar>& profile, Scalar heading) {
  return cov_from_axes(AxisForm<Scalar>{profile.sigma_x, profile.sigma_y, heading});
}

/// pi_k (ln(pi_k / omega) + KL(N_k || N_agent(pose))). Negative when the
/// agent's relative weight exceeds pi_k by enough. pi_k = 0 gives 0.
template <typename Scalar>
Scalar cost_at_pose(const ServiceProfileT<Scalar>& profile, const PoseT<Scalar>& pose,
                    const GaussianComponentT<Scalar>& basis) {
  using std::log;
  if (basis.weight <= Scalar(0)) return Scalar(0);
  const Scalar kl = kld_gaussian(basis.mean, basis.cov, pose.position,
                                 service_covariance(profile, pose.heading));
  return basis.weight * (log(basis.weight / profile.rel_weight) + kl);
}

template <typename Scalar>
struct OptimalPlacement {
  PoseT<Scalar> pose;
  Scalar cost;
  AxisForm<Scalar> basis_axes;
};

/// Global minimizer of cost_at_pose: sit on the component mean with the
/// major axes aligned (the representative heading in [0, pi)), and the
/// closed-form minimum cost.
template <typename Scalar>
OptimalPlacement<Scalar> optimal_pose(const ServiceProfileT<Scalar>& profile,
                                      const GaussianComponentT<Scalar>& basis) {
  using std::log;
  const AxisForm<Scalar> ax = axes_from_cov(basis.cov);
  OptimalPlacement<Scalar> out{PoseT<Scalar>(basis.mean, ax.theta), Scalar(0), ax};
  if (basis.weight <= Scalar(0)) return out;
  const Scalar sx = profile.sigma_x;
  const Scalar sy = profile.sigma_y;
  const Scalar shape = Scalar(0.5) * (log((sx * sy) / (ax.sigma_major * ax.sigma_minor)) +
                                      (ax.sigma_major * sy + ax.sigma_minor * sx) / (sx * sy) -
                                      Scalar(2));
  out.cost = basis.weight * (log(basis.weight / profile.rel_weight) + shape);
  return out;
}

}  // namespace gmmdeploy
