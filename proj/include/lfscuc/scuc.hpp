#pragma once

#include <string>
#include <vector>

#include "lfscuc/network.hpp"
#include "lfscuc/pwl.hpp"
#include "lfscuc/solver.hpp"

namespace lfscuc {

/// The five commitment formulations: baseline, equivalent (system-wide)
/// RoCoF-constrained, locational RoCoF-constrained, and the two
/// virtual-inertia variants.
enum class ModelKind { T, ERC, LRC, VI_ERC, VI_LRC };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);
bool kind_has_rocof(ModelKind kind);       ///< ERC, LRC, VI_ERC, VI_LRC
bool kind_has_locational(ModelKind kind);  ///< LRC, VI_LRC
bool kind_has_vi(ModelKind kind);          ///< VI_ERC, VI_LRC

struct ScucConfig {
  double rocof_lim_hz_s = 0.5;
  double gamma = 0.7;     ///< damping-to-inertia ratio, 1/s
  double window_s = 0.1;  ///< RoCoF measurement window
  double t1_s = 0.0;      ///< local-class evaluation instant
  double t2_s = 0.4;      ///< non-local-class evaluation instant
  double vi_price = 0.05;       ///< $/(MWs h) for virtual inertia
  double vi_budget_mws = 2000.0;  ///< per-hour virtual-inertia cap
  double mip_gap = 1e-3;
  double time_limit_s = 1800.0;
  int seed = 0;
  /// Reserve adequacy as printed sums every unit's reserve, including the
  /// contingency unit's own. This flag removes the failed unit's reserve
  /// from the supplying side.
  bool reserve_excludes_contingency = false;

  void validate() const;
};

/// Conservative max-affine RoCoF caps for the two bus classes of one event
/// bus; local is evaluated at t1, non-local at t2.
struct ScucSurfaces {
  PwlSurface local;
  PwlSurface non_local;
};

/// Representative buses for the class-level constraints: the local bus with
/// the largest Fiedler-product amplification, and the non-local bus with the
/// most negative one.
int worst_local_bus(const ModalDecomposition& md_mw,
                    const BusClassification& cls);
int worst_non_local_bus(const ModalDecomposition& md_mw,
                        const BusClassification& cls);

/// Fit both class surfaces for a loss at `event_bus` on the default sampling
/// grid of the case: reduce the network onto the generator buses, scale the
/// eigenvalues to MW/rad, classify buses, pick the worst bus of each class,
/// sample the two-mode RoCoF there (local at t1, non-local at t2) and fit.
ScucSurfaces build_surfaces(const GridCase& grid, int event_bus,
                            const ScucConfig& cfg, int max_segments = 4,
                            const FitOptions& fit = {});

/// A built commitment model plus everything needed to audit its solutions
/// without the original GridCase.
struct UcProblem {
  ModelKind kind = ModelKind::T;
  ScucConfig cfg;
  LinearModel model{"scuc"};
  int horizon = 0;
  double base_mva = 100.0;
  double omega_s = 0.0;  ///< 2 pi f0, rad/s
  int n_retained = 0;    ///< generator-bus count N in the nodal-average terms

  std::vector<std::string> gen_ids;
  std::vector<int> gen_bus;
  std::vector<double> gen_pmax, gen_pmin, gen_h;
  std::vector<int> branch_ids, branch_from, branch_to;
  std::vector<int> bus_ids;
  std::vector<std::vector<double>> net_load_mw;  ///< [bus][t], demand minus renewables
  ScucSurfaces surfaces;  ///< empty segment lists unless a locational kind

  // Canonical variable and row names, shared by the builder, the solution
  // extractor, and tests.
  static std::string var_p(const std::string& g, int t);
  static std::string var_r(const std::string& g, int t);
  static std::string var_u(const std::string& g, int t);
  static std::string var_v(const std::string& g, int t);
  static std::string var_k(const std::string& g, int t);
  static std::string var_flow(int branch, int t);
  static std::string var_theta(int bus, int t);
  static std::string var_inertia(int t);       ///< M_t
  static std::string var_avg_inertia(int t);   ///< m_t
  static std::string var_dm(const std::string& g, int t);
  static std::string var_vi(int t);            ///< virtual inertia, MWs
  static std::string row_balance(int bus, int t);
};

UcProblem build_model(const GridCase& grid, ModelKind kind,
                      const ScucConfig& cfg,
                      const ScucSurfaces* surfaces = nullptr);

struct UcSolution {
  ModelKind kind = ModelKind::T;
  SolveStatus status = SolveStatus::BackendError;
  std::string raw_status;
  std::string backend;

  double objective = 0.0;
  double fuel_cost = 0.0, no_load_cost = 0.0, startup_cost = 0.0,
         reserve_cost = 0.0, vi_cost = 0.0;
  double mip_gap = 0.0;
  double solve_time_s = 0.0;

  int horizon = 0;
  std::vector<std::string> gen_ids;
  std::vector<std::vector<double>> p, r;  ///< [gen][t], MW
  std::vector<std::vector<int>> u, v;     ///< [gen][t]
  std::vector<int> branch_ids;
  std::vector<std::vector<double>> flow;  ///< [branch][t], MW
  std::vector<int> bus_ids;
  std::vector<std::vector<double>> theta;  ///< [bus][t], rad

  /// Model variables, filled only for kinds that carry them: M_t (ERC,
  /// VI_ERC), m_t (LRC, VI_LRC), virtual inertia in MWs (VI kinds).
  std::vector<double> M, m_avg, vi_mws;
  std::vector<std::string> largest_unit;  ///< per hour; empty string if none

  std::vector<double> x;  ///< raw point in model column order

  bool has_solution() const { return !x.empty(); }
};

/// Solve and, when a point comes back, extract and audit it. Throws
/// BackendError if the backend's answer fails the independent audit.
UcSolution solve(const UcProblem& problem, const SolverBackend& backend);

/// Independent re-evaluation of a solution: every model row and bound via
/// check_point, nodal balance rebuilt from the stored net loads, the
/// per-generator headroom arithmetic, and the locational surface caps for
/// committed units. Throws BackendError with details on any failure.
void validate_solution(const UcProblem& problem, const UcSolution& solution);

struct InertiaSummary {
  std::vector<double> synchronous_mws;  ///< sum H_g pmax_g u_{g,t}
  std::vector<double> aui_mws;  ///< per committed unit; NaN when none on
  std::vector<int> committed;   ///< unit count per hour
};

/// Per-hour inertia view in the MWs convention. Cross-checks the model's
/// M_t variable (when the kind carries one) against the commitment within
/// 1e-6 and throws NumericsError on mismatch.
InertiaSummary summarize_inertia(const GridCase& grid,
                                 const UcSolution& solution);

}  // namespace lfscuc
