#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lfscuc/common.hpp"
#include "lfscuc/network.hpp"

namespace lfscuc {

/// Shared knobs of the frequency-dynamics model. All analytic expressions in
/// this module assume a uniform damping-to-inertia ratio gamma = d_i/m_i.
struct DynamicParams {
  double gamma = 0.7;  ///< damping-to-inertia ratio, 1/s
  double dt = 0.1;     ///< RoCoF measuring window, s
  double t1 = 0.0;     ///< measuring instant for local buses, s
  double t2 = 0.4;     ///< measuring instant for non-local buses, s
  double f0 = 60.0;    ///< nominal frequency, Hz

  void validate() const;  ///< gamma > 0, dt > 0, 0 <= t1 < t2, f0 > 0
};

/// A generation-loss event: a step loss of `power_loss` at `event_bus`,
/// together with the tripped machine's rotational inertia. The analytic
/// functions read only (event_bus, power_loss); the simulator additionally
/// removes `inertia_loss` from the event bus.
struct Disturbance {
  int event_bus = 0;
  double power_loss = 0.0;    ///< MW
  double inertia_loss = 0.0;  ///< machine inertia removed at event_bus, MW s^2/rad
};

/// Machine inertia in swing-equation units: 2 H pmax / (2 pi f0), MW s^2/rad.
/// This is the single H -> M conversion point; everything downstream (average
/// nodal inertia, constraint coefficients, simulator mass matrix) goes
/// through it.
double machine_inertia(double inertia_h, double pmax_mw, double f0_hz);

/// Laplacian in the units the swing equation needs (MW/rad), from the p.u.
/// reduced network.
Eigen::MatrixXd dynamic_laplacian(const ReducedNetwork& net, double base_mva);

/// Damped angular frequency of oscillatory mode `alpha` (1-based, so alpha=2
/// is the Fiedler mode): sqrt(lambda_alpha / m - gamma^2 / 4).
/// Throws NumericsError if the mode is not underdamped (this includes
/// alpha = 1, whose zero eigenvalue always lands on the overdamped branch and
/// is handled analytically elsewhere).
double underdamped_freq(const ModalDecomposition& md, double m, double gamma,
                        int alpha);

/// Post-event frequency deviation at `bus` (rad/s) from the full modal sum,
/// uniform nodal inertia `m`. The rigid-body mode enters through its analytic
/// limit power_loss (1 - e^{-gamma t}) / (N m gamma).
double nodal_freq_deviation(const ModalDecomposition& md, double m,
                            double gamma, const Disturbance& dist, int bus,
                            double t);

/// Windowed RoCoF at `bus` (Hz/s): the average frequency slope over
/// [t, t + dt], evaluated in closed form mode by mode.
double rocof_full(const ModalDecomposition& md, double m, double gamma,
                  const Disturbance& dist, int bus, double t, double dt);

/// Position-independent (rigid-body) RoCoF contribution:
/// power_loss e^{-gamma t} (1 - e^{-gamma dt}) / (2 N pi m gamma dt).
double rocof_bulk(double m, double gamma, double power_loss, int n_buses,
                  double t, double dt);

/// Instantaneous-window limit of rocof_bulk at t = 0: power_loss / (2 pi N m).
double rocof_initial(double m, double power_loss, int n_buses);

/// Two-mode RoCoF approximation: rigid-body term plus the Fiedler-mode term.
/// This is the surface the PWL module samples.
double rocof_two_mode(const ModalDecomposition& md, double m, double gamma,
                      const Disturbance& dist, int bus, double t, double dt);

/// Two-mode RoCoF with the post-contingency average nodal inertia
/// (m_pre - dm) substituted in every occurrence of m. Throws NumericsError
/// on inertia collapse (m_pre <= dm).
double rocof_constraint_lhs(const ModalDecomposition& md, double m_pre,
                            double dm, double power_loss, int bus,
                            int event_bus, double t, double dt, double gamma);

struct SimulationOptions {
  double horizon_s = 5.0;
  double step_s = 0.001;
  double rocof_window_s = 0.1;
  double f0_hz = 60.0;
  double base_mva = 100.0;  ///< converts the p.u. reduced Laplacian to MW/rad
};

/// Trajectories of one contingency simulation. Matrices are indexed
/// (bus row, time column); `rocof` has fewer columns because the windowed
/// measure needs t + window inside the horizon.
struct SimulationResult {
  std::vector<int> bus_ids;
  std::vector<double> time_s;
  Eigen::MatrixXd angle_rad;
  Eigen::MatrixXd freq_dev_rad_s;
  Eigen::MatrixXd rocof_hz_s;
  std::vector<double> coi_freq_hz;
  std::vector<double> max_abs_rocof;  ///< per bus, Hz/s
  double min_freq_hz = 0.0;

  int index_of(int bus_id) const;
};

/// Integrate the multi-machine swing equation on the reduced network after a
/// generation loss.
///
/// `inertia` and `damping` are per retained bus (MW s^2/rad resp.
/// MW s/rad); `injections_mw` is the pre-event net injection and must be an
/// equilibrium (the residual of the DC flow equations is checked). Buses with
/// zero post-event inertia are treated as algebraic nodes: eliminated for
/// integration and reconstructed afterwards. A zero-inertia bus must also
/// carry zero damping.
///
/// Throws ValidationError on inconsistent inputs, NumericsError when the
/// requested step cannot resolve the fastest network mode or the integration
/// loses stability.
SimulationResult simulate_swing(const ReducedNetwork& net,
                                const Eigen::VectorXd& inertia,
                                const Eigen::VectorXd& damping,
                                const Eigen::VectorXd& injections_mw,
                                const Disturbance& dist,
                                const SimulationOptions& opt);

}  // namespace lfscuc
