#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "gmmdeploy/divergence.hpp"
#include "gmmdeploy/types.hpp"

namespace gmmdeploy {

/// x' = A x + B u.
struct LinearSystem {
  MatrixXd A;
  MatrixXd B;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }

  /// `axes` decoupled double integrators, state ordered (p1, v1, p2, v2, ...).
  static LinearSystem double_integrator(int axes);
};

/// Finite-horizon transfer from chi0 at t0 to chi_star at t0 + tau.
struct TransportTask {
  VectorXd chi0;
  VectorXd chi_star;
  double tau{1.0};
  double t0{0.0};
};

/// e^{A t}. Nilpotent A uses the exact finite series; otherwise Pade
/// scaling-and-squaring.
MatrixXd state_transition(const LinearSystem& sys, double t);

/// Controllability Gramian over [0, tau] by composite Simpson quadrature with
/// panel doubling. Throws NumericalError when the result is not SPD.
MatrixXd gramian(const LinearSystem& sys, double tau);

/// Precomputed open-loop minimum-energy law
/// u(t) = B^T e^{A^T (t0 + tau - t)} G^{-1} (chi* - e^{A tau} chi0).
class MinEnergyController {
 public:
  MinEnergyController(LinearSystem sys, TransportTask task);

  VectorXd input(double t) const;
  /// Optimal energy (chi* - e^{A tau} chi0)^T G^{-1} (chi* - e^{A tau} chi0).
  double energy() const { return energy_; }
  const MatrixXd& gramian() const { return gramian_; }
  const LinearSystem& system() const { return sys_; }
  const TransportTask& task() const { return task_; }

 private:
  LinearSystem sys_;
  TransportTask task_;
  MatrixXd gramian_;
  VectorXd weights_;  // G^{-1} (chi* - e^{A tau} chi0)
  double energy_{0.0};
};

VectorXd min_energy_input(const LinearSystem& sys, const TransportTask& task, double t);

struct TrajectorySample {
  double t;
  VectorXd state;
  VectorXd input;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  const TrajectorySample& back() const { return samples.back(); }
  /// Integral of |u|^2 by the trapezoid/Simpson rule over the samples.
  double energy() const;
};

/// RK4 integration of the linear system under the minimum-energy input.
Trajectory simulate_linear(const LinearSystem& sys, const TransportTask& task, double dt);

/// Default lower speed bound for the unicycle compensator (1/v singularity).
inline constexpr double kDefaultMinSpeed = 0.05;

struct UnicycleState {
  Vec2 position{Vec2::Zero()};
  double heading{0.0};
  double speed{1.0};
};

/// Speed dropped below the compensator's v_min.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, double min_speed)
      : NumericalError(what), min_speed_(min_speed) {}
  double min_speed() const { return min_speed_; }

 private:
  double min_speed_;
};

/// (x, v cos(theta), y, v sin(theta)).
Eigen::Vector4d linearize_unicycle(const UnicycleState& s);
UnicycleState delinearize_unicycle(const Eigen::Vector4d& chi, double v_min = kDefaultMinSpeed);

/// Linearized unicycle model (two double integrators in the chi ordering).
LinearSystem unicycle_linear_model();

using InputSignal = std::function<Vec2(double)>;

/// One RK4 step of the unicycle driven through the dynamic compensator
/// v' = u1 cos + u2 sin, omega = (u2 cos - u1 sin) / v.
UnicycleState compensator_step(const UnicycleState& s, const InputSignal& u, double t, double dt,
                               double v_min = kDefaultMinSpeed);
UnicycleState compensator_step(const UnicycleState& s, const Vec2& u, double dt,
                               double v_min = kDefaultMinSpeed);

struct UnicycleSample {
  double t;
  UnicycleState state;
  Vec2 input;
};

struct UnicycleTrajectory {
  std::vector<UnicycleSample> samples;
  double min_speed{0.0};
  double energy{0.0};  // optimal quadratic form of the plan
};

/// Drive the unicycle from `agent` to `target` arriving with speed v_star,
/// using the minimum-energy law on the linearized model.
UnicycleTrajectory plan_transport(const UnicycleState& agent, const Pose& target, double v_star,
                                  double tau, double dt, double v_min = kDefaultMinSpeed);

}  // namespace gmmdeploy
