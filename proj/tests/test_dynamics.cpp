#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "lfscuc/dynamics.hpp"
#include "lfscuc/network.hpp"
#include "test_util.hpp"

using namespace lfscuc;
using testutil::as_network;
using testutil::random_laplacian;

namespace {

constexpr double kPi = std::numbers::pi;

std::string bundled_case_path() {
  const char* p = std::getenv("LFSCUC_CASE");
  REQUIRE(p != nullptr);
  return p;
}

// Exact response of x' = A x + c, x(0) = 0, through one augmented matrix
// exponential. Used as the integration oracle: it shares no code with the
// RK4 path.
Eigen::VectorXd affine_response(const Eigen::MatrixXd& A,
                                const Eigen::VectorXd& c, double t) {
  const int s = static_cast<int>(A.rows());
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(s + 1, s + 1);
  Z.topLeftCorner(s, s) = A;
  Z.topRightCorner(s, 1) = c;
  Eigen::MatrixXd E = (Z * t).exp();
  return E.topRightCorner(s, 1);
}

// Companion form of M y'' + D y' = c - L y with state [y; y'].
struct SwingSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
};

SwingSystem companion(const Eigen::MatrixXd& L, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& d, const Eigen::VectorXd& c) {
  const int n = static_cast<int>(m.size());
  SwingSystem s;
  s.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  s.A.topRightCorner(n, n).setIdentity();
  s.A.bottomLeftCorner(n, n) = -(m.cwiseInverse().asDiagonal() * L);
  s.A.bottomRightCorner(n, n) =
      (-d.cwiseQuotient(m)).eval().asDiagonal();
  s.rhs = Eigen::VectorXd::Zero(2 * n);
  s.rhs.tail(n) = c.cwiseQuotient(m);
  return s;
}

ModalDecomposition two_bus_modes() {
  ModalDecomposition md;
  md.bus_ids = {1, 2};
  md.eigenvalues = Eigen::Vector2d(0.0, 4.0);
  md.modes.resize(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  md.modes << r, r, r, -r;
  return md;
}

}  // namespace

TEST_CASE("dynamic parameter validation") {
  DynamicParams p;
  CHECK_NOTHROW(p.validate());
  p.gamma = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.t1 = 0.5;
  p.t2 = 0.4;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  p.dt = -0.1;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("machine inertia conversion") {
  // 2 H pmax / (2 pi f0)
  CHECK(machine_inertia(5.0, 400.0, 60.0) ==
        doctest::Approx(4000.0 / (120.0 * kPi)));
  CHECK_THROWS_AS(machine_inertia(5.0, 400.0, 0.0), ValidationError);
}

TEST_CASE("damped modal frequency") {
  auto md = two_bus_modes();
  CHECK(underdamped_freq(md, 1.0, 2.0, 2) == doctest::Approx(std::sqrt(3.0)));

  md.eigenvalues(1) = 1.0;  // lambda/m == gamma^2/4: critically damped
  CHECK_THROWS_AS(underdamped_freq(md, 1.0, 2.0, 2), NumericsError);

  md = two_bus_modes();
  CHECK_THROWS_AS(underdamped_freq(md, 1.0, 2.0, 1), NumericsError);
  CHECK_THROWS_AS(underdamped_freq(md, 1.0, 2.0, 3), ValidationError);
  CHECK_THROWS_AS(underdamped_freq(md, -1.0, 2.0, 2), ValidationError);
}

TEST_CASE("frequency deviation starts at zero and has the rigid-mode limit") {
  std::mt19937_64 rng(42);
  auto net = as_network(random_laplacian(rng, 6));
  auto md = eigendecompose(net);
  Disturbance dist{3, 0.2, 0.0};
  for (int bus = 1; bus <= 6; ++bus)
    CHECK(nodal_freq_deviation(md, 0.15, 0.7, dist, bus, 0.0) == 0.0);

  // Single-bus system: only the rigid mode exists.
  ModalDecomposition solo;
  solo.bus_ids = {1};
  solo.eigenvalues = Eigen::VectorXd::Zero(1);
  solo.modes = Eigen::MatrixXd::Ones(1, 1);
  const double m = 0.4, g = 0.9, dp = 0.25, t = 0.37;
  CHECK(nodal_freq_deviation(solo, m, g, {1, dp, 0.0}, 1, t) ==
        doctest::Approx(dp * (1.0 - std::exp(-g * t)) / (m * g)).epsilon(1e-12));
}

TEST_CASE("modal sum matches the full linear system on a ring") {
  // Equal-weight triangle, uniform inertia; oracle is the matrix exponential
  // of the companion system.
  Eigen::MatrixXd L(3, 3);
  L << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  const double m = 0.1, gamma = 1.0, dp = 0.1;
  auto md = eigendecompose(as_network(L));

  Eigen::VectorXd mv = Eigen::VectorXd::Constant(3, m);
  Eigen::VectorXd dv = gamma * mv;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
  c(0) = -dp;  // generation loss at bus 1
  auto sys = companion(L, mv, dv, c);

  for (double t : {0.05, 0.2, 0.8}) {
    Eigen::VectorXd x = affine_response(sys.A, sys.rhs, t);
    for (int bus = 1; bus <= 3; ++bus) {
      // The closed form counts a loss as a positive excursion.
      double analytic = nodal_freq_deviation(md, m, gamma, {1, dp, 0.0}, bus, t);
      CHECK(analytic == doctest::Approx(-x(3 + bus - 1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("windowed rocof equals the difference quotient of the deviation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> tdist(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(rng() % 6);
    auto md = eigendecompose(as_network(random_laplacian(rng, n)));
    const double m = 0.2, gamma = 0.7, dt = 0.1;
    Disturbance dist{1 + static_cast<int>(rng() % n), 0.3, 0.0};
    int bus = 1 + static_cast<int>(rng() % n);
    double t = tdist(rng);

    double direct = rocof_full(md, m, gamma, dist, bus, t, dt);
    double diffq = (nodal_freq_deviation(md, m, gamma, dist, bus, t + dt) -
                    nodal_freq_deviation(md, m, gamma, dist, bus, t)) /
                   (2.0 * kPi * dt);
    CAPTURE(trial);
    CHECK(direct == doctest::Approx(diffq).epsilon(1e-9));
  }
}

TEST_CASE("rocof is linear in the power loss") {
  std::mt19937_64 rng(11);
  auto md = eigendecompose(as_network(random_laplacian(rng, 5)));
  double r1 = rocof_full(md, 0.2, 0.7, {2, 0.15, 0.0}, 4, 0.3, 0.1);
  double r2 = rocof_full(md, 0.2, 0.7, {2, 0.30, 0.0}, 4, 0.3, 0.1);
  CHECK(r2 == 2.0 * r1);  // doubling is exact in binary floating point
  double r3 = rocof_full(md, 0.2, 0.7, {2, 0.45, 0.0}, 4, 0.3, 0.1);
  CHECK(r3 == doctest::Approx(3.0 * r1).epsilon(1e-14));
}

TEST_CASE("bulk rocof term") {
  // gamma = 1, dt = 0.1, t = 0, unit everything else.
  CHECK(rocof_bulk(1.0, 1.0, 1.0, 1, 0.0, 0.1) ==
        doctest::Approx(0.15145594).epsilon(1e-7));

  // Shrinking window converges to the instantaneous value dP/(2 pi N m).
  double inst = rocof_initial(0.05, 0.1, 10);
  CHECK(inst == doctest::Approx(0.1 / (2.0 * kPi * 10 * 0.05)).epsilon(1e-12));
  CHECK(rocof_bulk(0.05, 1.0, 0.1, 10, 0.0, 1e-6) ==
        doctest::Approx(inst).epsilon(1e-6));

  CHECK(rocof_bulk(0.05, 1.0, 0.1, 10, 50.0, 0.1) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Strictly decreasing in the inertia.
  CHECK(rocof_bulk(0.10, 0.7, 0.5, 10, 0.0, 0.1) >
        rocof_bulk(0.15, 0.7, 0.5, 10, 0.0, 0.1));
}

TEST_CASE("two-mode form drops to the bulk term when the coupling vanishes") {
  // Path graph 1-2-3: the Fiedler vector is (1, 0, -1)/sqrt(2), so any pair
  // involving bus 2 has zero mode-2 coupling.
  Eigen::MatrixXd L(3, 3);
  L << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  auto md = eigendecompose(as_network(L));
  REQUIRE(std::abs(md.modes(1, 1)) < 1e-12);

  const double m = 0.2, g = 0.7, dt = 0.1, t = 0.15;
  double r = rocof_two_mode(md, m, g, {1, 0.3, 0.0}, 2, t, dt);
  CHECK(r == rocof_bulk(m, g, 0.3, 3, t, dt));
}

TEST_CASE("two-mode form is exact on a two-bus network") {
  auto md = two_bus_modes();
  for (double t : {0.0, 0.2, 0.6}) {
    double full = rocof_full(md, 0.5, 0.8, {2, 0.4, 0.0}, 1, t, 0.1);
    double two = rocof_two_mode(md, 0.5, 0.8, {2, 0.4, 0.0}, 1, t, 0.1);
    CHECK(full == doctest::Approx(two).epsilon(1e-14));
  }
}

TEST_CASE("constraint form substitutes post-contingency inertia everywhere") {
  std::mt19937_64 rng(3);
  auto md = eigendecompose(as_network(random_laplacian(rng, 6)));
  double base = rocof_two_mode(md, 0.25, 0.7, {2, 0.3, 0.0}, 5, 0.0, 0.1);
  CHECK(rocof_constraint_lhs(md, 0.25, 0.0, 0.3, 5, 2, 0.0, 0.1, 0.7) == base);

  double shifted = rocof_constraint_lhs(md, 0.30, 0.05, 0.3, 5, 2, 0.0, 0.1, 0.7);
  CHECK(shifted == doctest::Approx(base).epsilon(1e-14));

  CHECK_THROWS_AS(rocof_constraint_lhs(md, 0.25, 0.25, 0.3, 5, 2, 0.0, 0.1, 0.7),
                  NumericsError);
  CHECK_THROWS_AS(rocof_constraint_lhs(md, 0.20, 0.30, 0.3, 5, 2, 0.0, 0.1, 0.7),
                  NumericsError);
}

TEST_CASE("mode truncation error is exactly the discarded tail") {
  GridCase grid = load_case(bundled_case_path());
  auto net = reduce_to_generator_buses(grid);
  auto md = eigendecompose(net);
  Eigen::MatrixXd Ld = dynamic_laplacian(net, grid.base_mva);
  ModalDecomposition md_mw = md;
  md_mw.eigenvalues *= grid.base_mva;

  const double m = 8.0, gamma = 0.7, dt = 0.1;
  Disturbance dist{18, 400.0, 0.0};

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> tdist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    int bus = md.bus_ids[rng() % md.bus_ids.size()];
    double t = tdist(rng);
    double full = rocof_full(md_mw, m, gamma, dist, bus, t, dt);
    double two = rocof_two_mode(md_mw, m, gamma, dist, bus, t, dt);

    // Reconstruct the alpha >= 3 tail from its definition and check that it
    // accounts for the whole difference.
    int i = md_mw.index_of(bus), b = md_mw.index_of(18);
    double tail = 0.0, tail_bound = 0.0;
    for (int a = 3; a <= md_mw.size(); ++a) {
      double w = underdamped_freq(md_mw, m, gamma, a);
      double coupling = md_mw.modes(i, a - 1) * md_mw.modes(b, a - 1);
      double env = std::exp(-0.5 * gamma * t) * dist.power_loss /
                   (2.0 * kPi * m * w * dt);
      double bracket = std::exp(-0.5 * gamma * dt) * std::sin(w * (t + dt)) -
                       std::sin(w * t);
      tail += env * coupling * bracket;
      tail_bound += std::abs(env * coupling) *
                    (std::exp(-0.5 * gamma * dt) + 1.0);
    }
    CAPTURE(trial);
    CHECK(full - two == doctest::Approx(tail).epsilon(1e-10));
    CHECK(std::abs(full - two) <= tail_bound + 1e-12);
  }
}

TEST_CASE("rocof surface direction on the bundled case") {
  GridCase grid = load_case(bundled_case_path());
  auto net = reduce_to_generator_buses(grid);
  auto md = eigendecompose(net);
  md.eigenvalues *= grid.base_mva;  // swing units: MW/rad against MW s^2/rad

  auto R = [&](double dp, double m) {
    return rocof_constraint_lhs(md, m, 0.0, dp, 21, 18, 0.0, 0.1, 0.7);
  };
  CHECK(R(400.0, 8.0) > R(200.0, 8.0));  // grows with the loss
  CHECK(R(400.0, 5.0) > R(400.0, 10.0));  // decays with inertia
  CHECK(R(200.0, 4.0) > 0.0);

  // Local bus at the local instant sees more than the bulk average.
  double local = R(400.0, 8.0);
  double bulk = rocof_bulk(8.0, 0.7, 400.0, md.size(), 0.0, 0.1);
  CHECK(local > bulk);
}

TEST_CASE("equal-weight sum over buses leaves only the rigid mode") {
  GridCase grid = load_case(bundled_case_path());
  auto net = reduce_to_generator_buses(grid);
  auto md = eigendecompose(net);
  md.eigenvalues *= grid.base_mva;

  const double m = 8.392, gamma = 0.7, t = 0.5;
  Disturbance dist{18, 400.0, 0.0};
  double sum = 0.0;
  for (int id : md.bus_ids)
    sum += nodal_freq_deviation(md, m, gamma, dist, id, t);
  double rigid = dist.power_loss * (1.0 - std::exp(-gamma * t)) / (m * gamma);
  CHECK(sum == doctest::Approx(rigid).epsilon(1e-8));
}

TEST_CASE("simulator holds a zero-disturbance equilibrium") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXd L = random_laplacian(rng, 5);
  auto net = as_network(L);
  Eigen::VectorXd m = Eigen::VectorXd::Constant(5, 0.2);
  Eigen::VectorXd d = 0.7 * m;
  Eigen::VectorXd P(5);
  P << 0.3, -0.1, -0.4, 0.1, 0.1;

  SimulationOptions opt;
  opt.horizon_s = 1.0;
  opt.base_mva = 1.0;
  auto res = simulate_swing(net, m, d, P, {1, 0.0, 0.0}, opt);
  CHECK(res.freq_dev_rad_s.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(res.min_freq_hz == doctest::Approx(60.0).epsilon(1e-9));
  for (double r : res.max_abs_rocof) CHECK(r < 1e-9);

  // Static angles must satisfy the flow equations.
  CHECK((L * res.angle_rad.col(0) - P).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("simulator agrees with the analytic modal solution") {
  // Homogeneous inertia and damping ratio: Eq-by-mode closed form is exact,
  // so RK4 output must track it tightly over the first second.
  std::mt19937_64 rng(20240812);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(rng() % 6);
    Eigen::MatrixXd L = random_laplacian(rng, n);
    auto net = as_network(L);
    auto md = eigendecompose(net);

    const double m = 0.15, gamma = 0.7, dp = 0.05;
    int event = 1 + static_cast<int>(rng() % n);
    Eigen::VectorXd mv = Eigen::VectorXd::Constant(n, m);
    Eigen::VectorXd dv = gamma * mv;
    Eigen::VectorXd P = Eigen::VectorXd::Zero(n);

    SimulationOptions opt;
    opt.horizon_s = 1.0;
    opt.base_mva = 1.0;
    auto res = simulate_swing(net, mv, dv, P, {event, dp, 0.0}, opt);

    for (int k = 0; k < static_cast<int>(res.time_s.size()); k += 100) {
      double t = res.time_s[k];
      for (int bus = 1; bus <= n; ++bus) {
        double analytic =
            nodal_freq_deviation(md, m, gamma, {event, dp, 0.0}, bus, t);
        double sim = res.freq_dev_rad_s(res.index_of(bus), k);
        CAPTURE(trial);
        CHECK(std::abs(sim + analytic) < 1e-4);  // loss counts positive
        ++checked;
      }
    }

    // Windowed RoCoF against the closed form at a couple of instants.
    for (double t : {0.0, 0.4}) {
      int k = static_cast<int>(std::llround(t / opt.step_s));
      for (int bus = 1; bus <= n; ++bus) {
        double analytic = rocof_full(md, m, gamma, {event, dp, 0.0}, bus, t,
                                     opt.rocof_window_s);
        double sim = res.rocof_hz_s(res.index_of(bus), k);
        CHECK(std::abs(sim + analytic) < 1e-5);
      }
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("simulator matches the matrix exponential with heterogeneous machines") {
  Eigen::MatrixXd L(3, 3);
  L << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  auto net = as_network(L);
  Eigen::VectorXd m(3), d(3), P(3);
  m << 0.12, 0.3, 0.07;
  d << 0.1, 0.02, 0.09;  // not proportional to m on purpose
  P << 0.25, -0.15, -0.1;

  SimulationOptions opt;
  opt.horizon_s = 2.0;
  opt.base_mva = 1.0;

  SUBCASE("pure power step") {
    Disturbance dist{2, 0.08, 0.0};
    auto res = simulate_swing(net, m, d, P, dist, opt);

    Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
    c(1) = -dist.power_loss;
    auto sys = companion(L, m, d, c);
    for (double t : {0.5, 1.0, 2.0}) {
      Eigen::VectorXd x = affine_response(sys.A, sys.rhs, t);
      int k = static_cast<int>(std::llround(t / opt.step_s));
      for (int i = 0; i < 3; ++i)
        CHECK(res.freq_dev_rad_s(i, k) == doctest::Approx(x(3 + i)).epsilon(1e-7));
    }
  }

  SUBCASE("power step with inertia loss") {
    Disturbance dist{2, 0.08, 0.1};
    auto res = simulate_swing(net, m, d, P, dist, opt);

    Eigen::VectorXd m2 = m, d2 = d;
    m2(1) -= dist.inertia_loss;
    d2(1) *= m2(1) / m(1);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
    c(1) = -dist.power_loss;
    auto sys = companion(L, m2, d2, c);
    Eigen::VectorXd x = affine_response(sys.A, sys.rhs, 1.0);
    int k = static_cast<int>(std::llround(1.0 / opt.step_s));
    for (int i = 0; i < 3; ++i)
      CHECK(res.freq_dev_rad_s(i, k) == doctest::Approx(x(3 + i)).epsilon(1e-7));
  }
}

TEST_CASE("coi rocof right after the event matches the aggregate swing") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 5;
    auto net = as_network(random_laplacian(rng, n));
    Eigen::VectorXd m(n);
    for (int i = 0; i < n; ++i)
      m(i) = 0.05 + 0.25 * std::uniform_real_distribution<double>()(rng);
    Eigen::VectorXd d = 0.7 * m;
    Eigen::VectorXd P = Eigen::VectorXd::Zero(n);
    Disturbance dist{3, 0.1, 0.02};

    SimulationOptions opt;
    opt.horizon_s = 0.5;
    opt.base_mva = 1.0;
    auto res = simulate_swing(net, m, d, P, dist, opt);

    double m_total = m.sum() - dist.inertia_loss;
    double expected = -dist.power_loss / (2.0 * kPi * m_total);
    double first_step =
        (res.coi_freq_hz[1] - res.coi_freq_hz[0]) / opt.step_s;
    CAPTURE(trial);
    CHECK(first_step == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("massless buses are reconstructed through the network") {
  // Chain 1-2-3 with a passive middle bus.
  GridCase g;
  g.buses = {{1}, {2}, {3}};
  g.branches = {{1, 1, 2, 2.0, 100.0}, {2, 2, 3, 3.0, 100.0}};
  Eigen::MatrixXd L = build_laplacian(g);
  auto net = as_network(L);

  Eigen::VectorXd m(3), d(3), P(3);
  m << 0.2, 0.0, 0.3;
  d << 0.14, 0.0, 0.21;
  P << 0.1, -0.15, 0.05;

  SimulationOptions opt;
  opt.horizon_s = 1.5;
  opt.base_mva = 1.0;
  Disturbance dist{1, 0.05, 0.0};
  auto res = simulate_swing(net, m, d, P, dist, opt);

  // The passive bus obeys its static network equation at every instant.
  for (int k = 0; k < static_cast<int>(res.time_s.size()); k += 250) {
    Eigen::VectorXd flow = L * res.angle_rad.col(k);
    CHECK(flow(1) == doctest::Approx(P(1)).epsilon(1e-9));
  }

  // Its frequency interpolates the inertial neighbours instead of spiking.
  double passive = res.max_abs_rocof[1];
  double bound = std::max(res.max_abs_rocof[0], res.max_abs_rocof[2]);
  CHECK(passive <= bound * 1.001);

  // Dynamic buses agree with the matrix exponential of the reduced system.
  {
    auto red = kron_reduce(L, {1, 2, 3}, {1, 3});
    Eigen::VectorXd m2(2), d2(2), c(2);
    m2 << m(0), m(2);
    d2 << d(0), d(2);
    // Forcing in deviation coordinates: only the event step remains.
    c << -dist.power_loss, 0.0;
    auto sys = companion(red.laplacian, m2, d2, c);
    Eigen::VectorXd x = affine_response(sys.A, sys.rhs, 1.0);
    int k = static_cast<int>(std::llround(1.0 / opt.step_s));
    CHECK(res.freq_dev_rad_s(0, k) == doctest::Approx(x(2)).epsilon(1e-7));
    CHECK(res.freq_dev_rad_s(2, k) == doctest::Approx(x(3)).epsilon(1e-7));
  }
}

TEST_CASE("losing all inertia at the event bus leaves an algebraic node") {
  Eigen::MatrixXd L(3, 3);
  L << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  auto net = as_network(L);
  Eigen::VectorXd m(3), d(3);
  m << 0.1, 0.2, 0.25;
  d = 0.7 * m;
  Eigen::VectorXd P = Eigen::VectorXd::Zero(3);

  SimulationOptions opt;
  opt.horizon_s = 1.0;
  opt.base_mva = 1.0;
  Disturbance dist{1, 0.05, 0.1};  // removes exactly the bus-1 inertia
  auto res = simulate_swing(net, m, d, P, dist, opt);
  CHECK(res.freq_dev_rad_s.allFinite());
  CHECK(res.min_freq_hz < 60.0);
  CHECK(res.min_freq_hz > 59.0);

  // More loss than the bus carries is rejected.
  Disturbance too_much{1, 0.05, 0.2};
  CHECK_THROWS_AS(simulate_swing(net, m, d, P, too_much, opt), ValidationError);
}

TEST_CASE("simulator input checking") {
  Eigen::MatrixXd L(2, 2);
  L << 1, -1, -1, 1;
  auto net = as_network(L);
  Eigen::VectorXd m = Eigen::VectorXd::Constant(2, 0.1);
  Eigen::VectorXd d = 0.7 * m;
  Eigen::VectorXd P = Eigen::VectorXd::Zero(2);
  SimulationOptions opt;
  opt.horizon_s = 1.0;
  opt.base_mva = 1.0;

  // Unbalanced injections have no equilibrium.
  Eigen::VectorXd bad = P;
  bad(0) = 0.5;
  CHECK_THROWS_AS(simulate_swing(net, m, d, bad, {1, 0.01, 0.0}, opt),
                  ValidationError);

  // Damping on a massless bus is not representable.
  Eigen::VectorXd m0 = m;
  m0(1) = 0.0;
  CHECK_THROWS_AS(simulate_swing(net, m0, d, P, {1, 0.01, 0.0}, opt),
                  ValidationError);

  // A step that cannot resolve the fastest mode is refused up front.
  SimulationOptions coarse = opt;
  coarse.step_s = 0.5;
  Eigen::VectorXd tiny = Eigen::VectorXd::Constant(2, 1e-5);
  CHECK_THROWS_AS(
      simulate_swing(net, tiny, Eigen::VectorXd::Zero(2).eval(), P,
                     {1, 0.01, 0.0}, coarse),
      NumericsError);

  SimulationOptions shortwin = opt;
  shortwin.rocof_window_s = 2.0;  // longer than the horizon
  CHECK_THROWS_AS(simulate_swing(net, m, d, P, {1, 0.01, 0.0}, shortwin),
                  ValidationError);

  CHECK_THROWS_AS(simulate_swing(net, m, d, P, {99, 0.01, 0.0}, opt),
                  ValidationError);
}

TEST_CASE("result layout and summaries are consistent") {
  std::mt19937_64 rng(23);
  auto net = as_network(random_laplacian(rng, 4));
  Eigen::VectorXd m = Eigen::VectorXd::Constant(4, 0.2);
  Eigen::VectorXd d = 0.7 * m;
  Eigen::VectorXd P = Eigen::VectorXd::Zero(4);

  SimulationOptions opt;
  opt.horizon_s = 2.0;
  opt.base_mva = 1.0;
  auto res = simulate_swing(net, m, d, P, {2, 0.1, 0.0}, opt);

  const int nt = static_cast<int>(res.time_s.size());
  CHECK(nt == 2001);
  CHECK(res.freq_dev_rad_s.cols() == nt);
  CHECK(res.rocof_hz_s.cols() == nt - 100);
  CHECK(res.coi_freq_hz.size() == static_cast<size_t>(nt));

  for (int i = 0; i < 4; ++i) {
    double peak = res.rocof_hz_s.row(i).cwiseAbs().maxCoeff();
    CHECK(res.max_abs_rocof[i] == doctest::Approx(peak));
  }
  double fmin = 60.0 + res.freq_dev_rad_s.minCoeff() / (2.0 * kPi);
  CHECK(res.min_freq_hz == doctest::Approx(fmin));
  CHECK(res.index_of(3) == 2);
  CHECK_THROWS_AS(res.index_of(9), ValidationError);
}
