#include "lfscuc/dynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lfscuc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ValidationError(std::string(what) + " must be a positive number");
}

void check_disturbance(const Disturbance& d) {
  if (!(d.power_loss >= 0.0) || !std::isfinite(d.power_loss))
    throw ValidationError("disturbance power loss must be >= 0");
  if (!(d.inertia_loss >= 0.0) || !std::isfinite(d.inertia_loss))
    throw ValidationError("disturbance inertia loss must be >= 0");
}

}  // namespace

void DynamicParams::validate() const {
  check_positive(gamma, "gamma");
  check_positive(dt, "dt");
  check_positive(f0, "f0");
  if (!(t1 >= 0.0) || !(t1 < t2))
    throw ValidationError("measuring instants need 0 <= t1 < t2");
}

double machine_inertia(double inertia_h, double pmax_mw, double f0_hz) {
  check_positive(f0_hz, "f0");
  return 2.0 * inertia_h * pmax_mw / (2.0 * kPi * f0_hz);
}

Eigen::MatrixXd dynamic_laplacian(const ReducedNetwork& net, double base_mva) {
  check_positive(base_mva, "base_mva");
  return base_mva * net.laplacian;
}

double underdamped_freq(const ModalDecomposition& md, double m, double gamma,
                        int alpha) {
  check_positive(m, "inertia");
  check_positive(gamma, "gamma");
  if (alpha < 1 || alpha > md.size())
    throw ValidationError("mode index out of range");
  const double disc = md.eigenvalues(alpha - 1) / m - 0.25 * gamma * gamma;
  if (!(disc > 0.0))
    throw NumericsError("mode " + std::to_string(alpha) +
                        " is not underdamped (lambda/m <= gamma^2/4); the "
                        "oscillatory expressions do not apply");
  return std::sqrt(disc);
}

double nodal_freq_deviation(const ModalDecomposition& md, double m,
                            double gamma, const Disturbance& dist, int bus,
                            double t) {
  check_positive(m, "inertia");
  check_positive(gamma, "gamma");
  check_disturbance(dist);
  if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
  const int i = md.index_of(bus);
  const int b = md.index_of(dist.event_bus);
  const int N = md.size();

  // Rigid-body mode, as its analytic zero-eigenvalue limit.
  double out = dist.power_loss * -std::expm1(-gamma * t) / (N * m * gamma);

  const double env = std::exp(-0.5 * gamma * t) * dist.power_loss / m;
  for (int a = 2; a <= N; ++a) {
    const double w = underdamped_freq(md, m, gamma, a);
    out += env * md.modes(i, a - 1) * md.modes(b, a - 1) * std::sin(w * t) / w;
  }
  return out;
}

double rocof_bulk(double m, double gamma, double power_loss, int n_buses,
                  double t, double dt) {
  check_positive(m, "inertia");
  check_positive(gamma, "gamma");
  check_positive(dt, "dt");
  if (n_buses < 1) throw ValidationError("n_buses must be >= 1");
  return power_loss * std::exp(-gamma * t) * -std::expm1(-gamma * dt) /
         (2.0 * n_buses * kPi * m * gamma * dt);
}

double rocof_initial(double m, double power_loss, int n_buses) {
  check_positive(m, "inertia");
  if (n_buses < 1) throw ValidationError("n_buses must be >= 1");
  return power_loss / (2.0 * kPi * n_buses * m);
}

namespace {

// Mode-alpha contribution to the windowed RoCoF, Hz/s. `w` is the damped
// angular frequency of that mode.
double mode_window_term(double coupling, double m, double gamma, double w,
                        double power_loss, double t, double dt) {
  const double env = std::exp(-0.5 * gamma * t) * power_loss / (2.0 * kPi * m);
  const double bracket = std::exp(-0.5 * gamma * dt) * std::sin(w * (t + dt)) -
                         std::sin(w * t);
  return env * coupling * bracket / (w * dt);
}

}  // namespace

double rocof_full(const ModalDecomposition& md, double m, double gamma,
                  const Disturbance& dist, int bus, double t, double dt) {
  check_disturbance(dist);
  if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
  const int i = md.index_of(bus);
  const int b = md.index_of(dist.event_bus);
  const int N = md.size();

  double out = rocof_bulk(m, gamma, dist.power_loss, N, t, dt);
  for (int a = 2; a <= N; ++a) {
    const double w = underdamped_freq(md, m, gamma, a);
    out += mode_window_term(md.modes(i, a - 1) * md.modes(b, a - 1), m, gamma,
                            w, dist.power_loss, t, dt);
  }
  return out;
}

double rocof_two_mode(const ModalDecomposition& md, double m, double gamma,
                      const Disturbance& dist, int bus, double t, double dt) {
  check_disturbance(dist);
  if (!(t >= 0.0)) throw ValidationError("time must be >= 0");
  const int i = md.index_of(bus);
  const int b = md.index_of(dist.event_bus);
  const int N = md.size();

  double out = rocof_bulk(m, gamma, dist.power_loss, N, t, dt);
  if (N >= 2) {
    const double w = underdamped_freq(md, m, gamma, 2);
    out += mode_window_term(md.modes(i, 1) * md.modes(b, 1), m, gamma, w,
                            dist.power_loss, t, dt);
  }
  return out;
}

double rocof_constraint_lhs(const ModalDecomposition& md, double m_pre,
                            double dm, double power_loss, int bus,
                            int event_bus, double t, double dt, double gamma) {
  if (!(dm >= 0.0)) throw ValidationError("inertia loss must be >= 0");
  const double m_post = m_pre - dm;
  if (!(m_post > 0.0))
    throw NumericsError(
        "inertia collapse: post-contingency average nodal inertia is not "
        "positive (m = " +
        std::to_string(m_pre) + ", dm = " + std::to_string(dm) + ")");
  Disturbance dist{event_bus, power_loss, dm};
  return rocof_two_mode(md, m_post, gamma, dist, bus, t, dt);
}

int SimulationResult::index_of(int bus_id) const {
  auto it = std::lower_bound(bus_ids.begin(), bus_ids.end(), bus_id);
  if (it == bus_ids.end() || *it != bus_id)
    throw ValidationError("bus " + std::to_string(bus_id) +
                          " is not part of the simulation");
  return static_cast<int>(it - bus_ids.begin());
}

SimulationResult simulate_swing(const ReducedNetwork& net,
                                const Eigen::VectorXd& inertia,
                                const Eigen::VectorXd& damping,
                                const Eigen::VectorXd& injections_mw,
                                const Disturbance& dist,
                                const SimulationOptions& opt) {
  const int n = static_cast<int>(net.bus_ids.size());
  if (inertia.size() != n || damping.size() != n || injections_mw.size() != n)
    throw ValidationError("simulate_swing: vector sizes do not match network");
  check_positive(opt.horizon_s, "horizon");
  check_positive(opt.step_s, "step");
  check_positive(opt.rocof_window_s, "rocof window");
  check_positive(opt.f0_hz, "f0");
  check_positive(opt.base_mva, "base_mva");
  if (opt.rocof_window_s > opt.horizon_s)
    throw ValidationError("rocof window longer than the horizon");
  check_disturbance(dist);
  for (int i = 0; i < n; ++i) {
    if (!(inertia(i) >= 0.0) || !(damping(i) >= 0.0))
      throw ValidationError("negative inertia or damping");
    if (inertia(i) == 0.0 && damping(i) != 0.0)
      throw ValidationError(
          "bus " + std::to_string(net.bus_ids[i]) +
          " has damping but no inertia; only algebraic (massless, "
          "undamped) buses can be eliminated");
  }
  const int b = net.index_of(dist.event_bus);

  const Eigen::MatrixXd L = opt.base_mva * net.laplacian;

  // Pre-event equilibrium: minimum-norm angles solving L theta = P.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(L);
  Eigen::VectorXd theta0 = cod.solve(injections_mw);
  const double p_scale = std::max(1.0, injections_mw.cwiseAbs().maxCoeff());
  if ((L * theta0 - injections_mw).cwiseAbs().maxCoeff() > 1e-6 * p_scale)
    throw ValidationError(
        "injections are not an equilibrium of the network equations (do "
        "generation and load balance?)");

  // Post-event parameters: the tripped machine takes its inertia and a
  // proportional share of the event bus damping with it.
  Eigen::VectorXd m_post = inertia;
  m_post(b) -= dist.inertia_loss;
  const double m_scale = std::max(1.0, inertia.maxCoeff());
  if (m_post(b) < -1e-9 * m_scale)
    throw ValidationError("inertia loss exceeds the inertia at the event bus");
  m_post(b) = std::max(m_post(b), 0.0);
  Eigen::VectorXd d_post = damping;
  if (inertia(b) > 0.0) d_post(b) = damping(b) * m_post(b) / inertia(b);

  // Constant forcing in deviation coordinates y = theta - theta0.
  Eigen::VectorXd c = injections_mw - L * theta0;
  c(b) -= dist.power_loss;

  // Split into dynamic and algebraic (massless) buses.
  std::vector<int> dyn, alg;
  for (int i = 0; i < n; ++i)
    (m_post(i) > 1e-12 * m_scale ? dyn : alg).push_back(i);
  if (dyn.empty())
    throw ValidationError("no bus carries inertia after the disturbance");
  const int nd = static_cast<int>(dyn.size());

  // Algebraic buses respond through the network only:
  //   y_alg = Laa^{-1} (c_alg - Las y_dyn),
  // which folds into a Schur complement on the dynamic block.
  Eigen::MatrixXd L_eff = L(dyn, dyn);
  Eigen::VectorXd c_eff = c(dyn);
  Eigen::LDLT<Eigen::MatrixXd> alg_solver;
  Eigen::MatrixXd Las;
  Eigen::VectorXd y_alg0;
  if (!alg.empty()) {
    Eigen::MatrixXd Laa = L(alg, alg);
    Las = L(alg, dyn);
    alg_solver.compute(Laa);
    if (alg_solver.info() != Eigen::Success)
      throw NumericsError("algebraic bus block is singular");
    Eigen::MatrixXd X = alg_solver.solve(Las);            // Laa^{-1} Las
    Eigen::VectorXd z = alg_solver.solve(c(alg));         // Laa^{-1} c_alg
    // Guard against a silently singular LDLT (an island of massless buses).
    if ((Laa * X - Las).cwiseAbs().maxCoeff() >
        1e-6 * std::max(1.0, Las.cwiseAbs().maxCoeff()))
      throw NumericsError(
          "massless buses form an island with no path to an inertial bus");
    L_eff -= L(dyn, alg) * X;
    c_eff -= L(dyn, alg) * z;
    y_alg0 = std::move(z);
  }

  const Eigen::VectorXd m_dyn = m_post(dyn);
  const Eigen::VectorXd d_dyn = d_post(dyn);

  // Explicit RK4 must resolve the fastest electromechanical mode. The
  // imaginary-axis stability bound is |h w| <= 2*sqrt(2); require a margin.
  {
    Eigen::VectorXd inv_sqrt_m = m_dyn.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd K =
        inv_sqrt_m.asDiagonal() * L_eff * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success)
      throw NumericsError("stability precheck eigensolve failed");
    const double w_max = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    if (opt.step_s * w_max > 2.5)
      throw NumericsError(
          "integration step " + std::to_string(opt.step_s) +
          " s cannot resolve the fastest network mode (" +
          std::to_string(w_max) + " rad/s); use a step below " +
          std::to_string(2.5 / w_max) + " s");
  }

  const int steps = static_cast<int>(std::llround(opt.horizon_s / opt.step_s));
  const int nt = steps + 1;
  const double h = opt.step_s;

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(nd, nt);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(nd, nt);

  const Eigen::VectorXd inv_m = m_dyn.cwiseInverse();
  auto accel = [&](const Eigen::VectorXd& yy, const Eigen::VectorXd& vv) {
    return (inv_m.array() *
            (c_eff - L_eff * yy - d_dyn.cwiseProduct(vv)).array())
        .matrix();
  };

  Eigen::VectorXd yk = Eigen::VectorXd::Zero(nd), vk = yk;
  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd a1 = accel(yk, vk);
    Eigen::VectorXd y2 = yk + 0.5 * h * vk, v2 = vk + 0.5 * h * a1;
    Eigen::VectorXd a2 = accel(y2, v2);
    Eigen::VectorXd y3 = yk + 0.5 * h * v2, v3 = vk + 0.5 * h * a2;
    Eigen::VectorXd a3 = accel(y3, v3);
    Eigen::VectorXd y4 = yk + h * v3, v4 = vk + h * a3;
    Eigen::VectorXd a4 = accel(y4, v4);
    yk += (h / 6.0) * (vk + 2.0 * v2 + 2.0 * v3 + v4);
    vk += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    y.col(k + 1) = yk;
    v.col(k + 1) = vk;
    if (k % 100 == 0 && (!vk.allFinite() || vk.cwiseAbs().maxCoeff() > 1e9))
      throw NumericsError("integration diverged; the step size is too large");
  }

  SimulationResult res;
  res.bus_ids = net.bus_ids;
  res.time_s.resize(nt);
  for (int k = 0; k < nt; ++k) res.time_s[k] = k * h;

  // Assemble full-network trajectories, reconstructing algebraic buses from
  // the network relation and its time derivative.
  res.angle_rad.resize(n, nt);
  res.freq_dev_rad_s.resize(n, nt);
  for (int j = 0; j < nd; ++j) {
    res.angle_rad.row(dyn[j]) = (theta0(dyn[j]) + y.row(j).array()).matrix();
    res.freq_dev_rad_s.row(dyn[j]) = v.row(j);
  }
  if (!alg.empty()) {
    Eigen::MatrixXd y_a =
        (-alg_solver.solve(Las * y)).colwise() + y_alg0;
    Eigen::MatrixXd v_a = -alg_solver.solve(Las * v);
    for (int j = 0; j < static_cast<int>(alg.size()); ++j) {
      res.angle_rad.row(alg[j]) = (theta0(alg[j]) + y_a.row(j).array()).matrix();
      res.freq_dev_rad_s.row(alg[j]) = v_a.row(j);
    }
  }

  const double m_total = m_post.sum();
  res.coi_freq_hz.resize(nt);
  for (int k = 0; k < nt; ++k) {
    double coi = 0.0;
    for (int i = 0; i < n; ++i) coi += m_post(i) * res.freq_dev_rad_s(i, k);
    res.coi_freq_hz[k] = opt.f0_hz + coi / m_total / (2.0 * kPi);
  }

  const int w_steps =
      static_cast<int>(std::llround(opt.rocof_window_s / opt.step_s));
  if (w_steps < 1 || w_steps >= nt)
    throw ValidationError("rocof window does not fit the time grid");
  const int nr = nt - w_steps;
  res.rocof_hz_s.resize(n, nr);
  res.max_abs_rocof.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < nr; ++k) {
      double r = (res.freq_dev_rad_s(i, k + w_steps) -
                  res.freq_dev_rad_s(i, k)) /
                 (2.0 * kPi * opt.rocof_window_s);
      res.rocof_hz_s(i, k) = r;
      res.max_abs_rocof[i] = std::max(res.max_abs_rocof[i], std::abs(r));
    }

  res.min_freq_hz =
      opt.f0_hz + res.freq_dev_rad_s.minCoeff() / (2.0 * kPi);
  return res;
}

}  // namespace lfscuc
