#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gmmdeploy/types.hpp"

namespace gmmdeploy {

/// One weighted bivariate Gaussian: pi * N(x | mean, cov).
template <typename Scalar>
struct GaussianComponentT {
  Scalar weight{1};
  Vector2<Scalar> mean{Vector2<Scalar>::Zero()};
  Matrix2<Scalar> cov{Matrix2<Scalar>::Identity()};
};

using GaussianComponent = GaussianComponentT<double>;

template <typename Scalar>
Scalar determinant(const Matrix2<Scalar>& m) {
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

template <typename Scalar>
bool is_spd(const Matrix2<Scalar>& m, Scalar sym_tol = Scalar(1e-12)) {
  using std::abs;
  const Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
  if (abs(m(0, 1) - m(1, 0)) > sym_tol * scale) return false;
  return m(0, 0) > Scalar(0) && determinant(m) > Scalar(0);
}

template <typename Scalar>
Scalar gaussian_log_pdf(const Vector2<Scalar>& mean, const Matrix2<Scalar>& cov,
                        const Vector2<Scalar>& x) {
  using std::log;
  const Scalar det = determinant(cov);
  if (!(det >= Scalar(1e-300))) {
    throw NumericalError("gaussian density: singular covariance");
  }
  const Vector2<Scalar> d = x - mean;
  // cov^{-1} for a 2x2 written out; avoids a decomposition per call.
  const Scalar quad =
      (cov(1, 1) * d(0) * d(0) - (cov(0, 1) + cov(1, 0)) * d(0) * d(1) +
       cov(0, 0) * d(1) * d(1)) /
      det;
  return Scalar(-0.5) * quad - log(Scalar(2) * std::numbers::pi_v<Scalar>) -
         Scalar(0.5) * log(det);
}

template <typename Scalar>
Scalar gaussian_pdf(const Vector2<Scalar>& mean, const Matrix2<Scalar>& cov,
                    const Vector2<Scalar>& x) {
  using std::exp;
  return exp(gaussian_log_pdf(mean, cov, x));
}

}  // namespace gmmdeploy
