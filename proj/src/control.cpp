#include "gmmdeploy/control.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace gmmdeploy {

LinearSystem LinearSystem::double_integrator(int axes) {
  LinearSystem s{MatrixXd::Zero(2 * axes, 2 * axes), MatrixXd::Zero(2 * axes, axes)};
  for (int a = 0; a < axes; ++a) {
    s.A(2 * a, 2 * a + 1) = 1.0;
    s.B(2 * a + 1, a) = 1.0;
  }
  return s;
}

namespace {

// Index of nilpotency (A^k = 0), or 0 when A is not nilpotent.
int nilpotency_index(const MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  MatrixXd p = a;
  for (int k = 1; k <= n; ++k) {
    if (p.isZero(0.0)) return k;
    p = p * a;
  }
  return 0;
}

}  // namespace

MatrixXd state_transition(const LinearSystem& sys, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("state_transition: t must be finite");
  const int n = sys.states();
  const int nil = nilpotency_index(sys.A);
  if (nil > 0) {
    MatrixXd out = MatrixXd::Identity(n, n);
    MatrixXd term = MatrixXd::Identity(n, n);
    for (int k = 1; k < nil; ++k) {
      term = term * sys.A * (t / k);
      out += term;
    }
    return out;
  }
  return (sys.A * t).exp();
}

MatrixXd gramian(const LinearSystem& sys, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("gramian: tau must be positive");
  const MatrixXd bbt = sys.B * sys.B.transpose();
  auto integrand = [&](double s) {
    const MatrixXd phi = state_transition(sys, s);
    return MatrixXd(phi * bbt * phi.transpose());
  };
  auto simpson = [&](int panels) {
    const double h = tau / panels;
    MatrixXd acc = integrand(0.0) + integrand(tau);
    for (int p = 1; p < panels; ++p) acc += (p % 2 == 1 ? 4.0 : 2.0) * integrand(p * h);
    return MatrixXd(acc * (h / 3.0));
  };
  int panels = 2;
  MatrixXd g = simpson(panels);
  for (;;) {
    panels *= 2;
    const MatrixXd next = simpson(panels);
    const double change = (next - g).norm();
    g = next;
    if (change <= 1e-10 * g.norm() || panels >= (1 << 16)) break;
  }
  g = 0.5 * (g + g.transpose());
  Eigen::LLT<MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gramian is not positive definite: (A, B) not controllable");
  }
  return g;
}

MinEnergyController::MinEnergyController(LinearSystem sys, TransportTask task)
    : sys_(std::move(sys)), task_(std::move(task)) {
  if (!(task_.tau > 0.0)) throw std::invalid_argument("transport: tau must be positive");
  if (task_.chi0.size() != sys_.states() || task_.chi_star.size() != sys_.states()) {
    throw std::invalid_argument("transport: state dimension mismatch");
  }
  gramian_ = gmmdeploy::gramian(sys_, task_.tau);
  const VectorXd gap = task_.chi_star - state_transition(sys_, task_.tau) * task_.chi0;
  weights_ = gramian_.ldlt().solve(gap);
  energy_ = gap.dot(weights_);
}

VectorXd MinEnergyController::input(double t) const {
  const double slack = 1e-9 * std::max(1.0, task_.tau);
  if (t < task_.t0 - slack || t > task_.t0 + task_.tau + slack) {
    throw std::out_of_range("min-energy input requested outside [t0, t0 + tau]");
  }
  const MatrixXd phi = state_transition(sys_, task_.t0 + task_.tau - t);
  return sys_.B.transpose() * (phi.transpose() * weights_);
}

VectorXd min_energy_input(const LinearSystem& sys, const TransportTask& task, double t) {
  return MinEnergyController(sys, task).input(t);
}

double Trajectory::energy() const {
  const int n = static_cast<int>(samples.size()) - 1;
  if (n < 1) return 0.0;
  const double h = samples[1].t - samples[0].t;
  auto f = [&](int i) { return samples[i].input.squaredNorm(); };
  if (n % 2 == 0) {
    double acc = f(0) + f(n);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f(i);
    return acc * h / 3.0;
  }
  double acc = 0.5 * (f(0) + f(n));
  for (int i = 1; i < n; ++i) acc += f(i);
  return acc * h;
}

namespace {

int step_count(double tau, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (dt > tau / 100.0 * (1.0 + 1e-12)) throw std::invalid_argument("dt must not exceed tau/100");
  return static_cast<int>(std::llround(tau / dt));
}

}  // namespace

Trajectory simulate_linear(const LinearSystem& sys, const TransportTask& task, double dt) {
  const MinEnergyController ctrl(sys, task);
  const int steps = step_count(task.tau, dt);
  const double h = task.tau / steps;
  auto f = [&](double t, const VectorXd& x) -> VectorXd {
    return sys.A * x + sys.B * ctrl.input(t);
  };

  Trajectory traj;
  VectorXd x = task.chi0;
  traj.samples.push_back({task.t0, x, ctrl.input(task.t0)});
  for (int k = 0; k < steps; ++k) {
    const double t = task.t0 + k * h;
    const VectorXd k1 = f(t, x);
    const VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    const VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    const VectorXd k4 = f(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(x.norm()) || x.norm() > 1e12) {
      throw NumericalError("simulate_linear: state diverged");
    }
    const double tn = task.t0 + (k + 1) * h;
    traj.samples.push_back({tn, x, ctrl.input(tn)});
  }
  return traj;
}

Eigen::Vector4d linearize_unicycle(const UnicycleState& s) {
  return {s.position.x(), s.speed * std::cos(s.heading), s.position.y(),
          s.speed * std::sin(s.heading)};
}

UnicycleState delinearize_unicycle(const Eigen::Vector4d& chi, double v_min) {
  const double speed = std::hypot(chi(1), chi(3));
  if (speed < v_min) {
    throw SingularityError("delinearize: speed " + std::to_string(speed) + " below v_min", speed);
  }
  return {Vec2(chi(0), chi(2)), std::atan2(chi(3), chi(1)), speed};
}

LinearSystem unicycle_linear_model() { return LinearSystem::double_integrator(2); }

namespace {

using State4 = Eigen::Vector4d;  // x, y, heading, speed

State4 pack(const UnicycleState& s) {
  return {s.position.x(), s.position.y(), s.heading, s.speed};
}

UnicycleState unpack(const State4& v) { return {Vec2(v(0), v(1)), v(2), v(3)}; }

State4 unicycle_rhs(const State4& s, const Vec2& u, double v_min) {
  const double v = s(3);
  if (std::abs(v) < v_min) {
    throw SingularityError("compensator: speed " + std::to_string(v) + " below v_min " +
                               std::to_string(v_min),
                           std::abs(v));
  }
  const double c = std::cos(s(2));
  const double sn = std::sin(s(2));
  return {v * c, v * sn, (u(1) * c - u(0) * sn) / v, u(0) * c + u(1) * sn};
}

}  // namespace

UnicycleState compensator_step(const UnicycleState& s, const InputSignal& u, double t, double dt,
                               double v_min) {
  const State4 x = pack(s);
  const State4 k1 = unicycle_rhs(x, u(t), v_min);
  const State4 k2 = unicycle_rhs(x + 0.5 * dt * k1, u(t + 0.5 * dt), v_min);
  const State4 k3 = unicycle_rhs(x + 0.5 * dt * k2, u(t + 0.5 * dt), v_min);
  const State4 k4 = unicycle_rhs(x + dt * k3, u(t + dt), v_min);
  const State4 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (std::abs(next(3)) < v_min) {
    throw SingularityError("compensator: speed fell below v_min", std::abs(next(3)));
  }
  return unpack(next);
}

UnicycleState compensator_step(const UnicycleState& s, const Vec2& u, double dt, double v_min) {
  return compensator_step(s, [&u](double) { return u; }, 0.0, dt, v_min);
}

UnicycleTrajectory plan_transport(const UnicycleState& agent, const Pose& target, double v_star,
                                  double tau, double dt, double v_min) {
  if (!(v_star > 0.0)) throw std::invalid_argument("plan_transport: arrival speed must be positive");
  if (std::abs(agent.speed) < v_min) {
    throw SingularityError("plan_transport: initial speed below v_min", std::abs(agent.speed));
  }
  const UnicycleState goal{target.position, target.heading, v_star};
  const TransportTask task{linearize_unicycle(agent), linearize_unicycle(goal), tau, 0.0};
  const MinEnergyController ctrl(unicycle_linear_model(), task);
  const InputSignal u = [&ctrl](double t) -> Vec2 { return ctrl.input(t); };

  const int steps = step_count(tau, dt);
  const double h = tau / steps;
  UnicycleTrajectory traj;
  traj.energy = ctrl.energy();
  traj.min_speed = std::abs(agent.speed);
  UnicycleState s = agent;
  traj.samples.push_back({0.0, s, u(0.0)});
  for (int k = 0; k < steps; ++k) {
    try {
      s = compensator_step(s, u, k * h, h, v_min);
    } catch (const SingularityError& e) {
      const double reached = std::min(traj.min_speed, e.min_speed());
      throw SingularityError("plan_transport: speed fell to " + std::to_string(reached) +
                                 " (< v_min " + std::to_string(v_min) + ") at t=" +
                                 std::to_string(k * h),
                             reached);
    }
    traj.min_speed = std::min(traj.min_speed, std::abs(s.speed));
    traj.samples.push_back({(k + 1) * h, s, u((k + 1) * h)});
  }
  return traj;
}

}  // namespace gmmdeploy
