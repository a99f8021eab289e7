#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfscuc/common.hpp"
#include "lfscuc/dynamics.hpp"
#include "lfscuc/network.hpp"

namespace lfscuc {

/// One affine segment of a max-affine surrogate:
/// value = a * power_loss + b * inertia + c * inertia_loss + d.
struct PwlSegment {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

/// Where and how a surface was sampled, kept for reproducibility and for the
/// constraint builder.
struct SurfaceContext {
  int event_bus = 0;
  int target_bus = 0;
  std::string bus_class;  ///< "local" or "non-local"
  double t = 0.0;
  double dt = 0.0;
  double gamma = 0.0;
};

struct FitReport {
  double rmse = 0.0;
  double max_under_estimate = 0.0;  ///< max over samples of (R - fit), >= 0
  double conservative_shift = 0.0;
  std::vector<double> objective_trace;  ///< accepted objective values, best run
  int restarts = 0;
};

struct PwlSurface {
  std::vector<PwlSegment> segments;
  SurfaceContext context;
  FitReport report;
};

struct FitSample {
  double power_loss = 0.0;
  double inertia = 0.0;
  double inertia_loss = 0.0;
  double rocof = 0.0;
};

struct FitProblem {
  std::vector<FitSample> samples;
  int max_segments = 4;  ///< v-bar
  double big_m = 0.0;    ///< kept for the documented MIQP form of the fit

  void validate() const;
};

struct AxisRange {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;

  std::vector<double> points() const;  ///< `count` equally spaced values
};

/// Cartesian sampling box over (power loss, average inertia, inertia loss).
struct EvaluationGrid {
  AxisRange power_loss;
  AxisRange inertia;
  AxisRange inertia_loss;

  /// lo < hi per axis, counts >= 2, and inertia.lo > inertia_loss.hi so the
  /// post-contingency inertia stays positive everywhere.
  void validate() const;
};

/// Operating box bracketing every feasible commitment of the case: power
/// loss between 20% and 100% of the largest unit's rating, average nodal
/// inertia between 45% and 120% of the all-units-on value, inertia loss up
/// to the largest single machine. Three points per axis.
EvaluationGrid default_grid(const GridCase& grid);

/// Evaluate the two-mode RoCoF surface at every grid point. `md` must carry
/// eigenvalues in the same unit system as the grid's inertia axis.
FitProblem sample_surface(const ModalDecomposition& md, int bus, int event_bus,
                          double t, double dt, double gamma,
                          const EvaluationGrid& grid, int max_segments);

struct FitOptions {
  int restarts = 32;
  std::uint64_t seed = 20240816;
  int max_iterations = 100;
};

/// Least-squares max-affine fit by multi-start clusterwise regression:
/// alternate segment-wise least squares with assign-to-maximizing-segment,
/// keep the best run, then polish small problems with single-point moves.
PwlSurface fit_pwl(const FitProblem& problem, const FitOptions& opt = {});

/// Shift all intercepts up by the largest under-estimation over the training
/// samples, so the surrogate never reports less RoCoF than the sampled truth.
PwlSurface make_conservative(PwlSurface surface, const FitProblem& problem);

double eval_pwl(const PwlSurface& surface, double power_loss, double inertia,
                double inertia_loss);

std::string surface_to_json(const PwlSurface& surface);
PwlSurface surface_from_json(const std::string& text);

}  // namespace lfscuc
