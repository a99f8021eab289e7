#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "lfscuc/common.hpp"

namespace lfscuc {

struct Bus {
  int id = 0;
};

/// Transmission element with flat-voltage DC parameters.
struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  ///< series susceptance, p.u. on system base
  double capacity_mw = 0.0;  ///< continuous flow rating, MW
};

struct Generator {
  std::string id;
  int bus = 0;
  double pmax_mw = 0.0;
  double pmin_mw = 0.0;
  double cost_energy = 0.0;   ///< $/MWh
  double cost_noload = 0.0;   ///< $/h while committed
  double cost_startup = 0.0;  ///< $ per start
  double cost_reserve = 0.0;  ///< $/MWh of spinning reserve
  double ramp_mw = 0.0;       ///< hour-to-hour dispatch change limit, MW
  double reserve_max_mw = 0.0;
  double inertia_h = 0.0;     ///< inertia constant H, s, on machine base (= pmax)
};

/// A complete hourly study case: network, fleet, load and renewable profiles.
struct GridCase {
  std::string name;
  double f0_hz = 60.0;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::map<int, std::vector<double>> load_mw;       ///< bus id -> hourly MW
  std::map<int, std::vector<double>> renewable_mw;  ///< bus id -> hourly MW

  int horizon() const;
  double load_at(int bus, int t) const;
  double renewable_at(int bus, int t) const;
  double total_load(int t) const;
  double total_renewable(int t) const;
  int peak_hour() const;  ///< 0-based hour of maximum total load
  std::vector<int> generator_buses() const;
  bool has_bus(int id) const;

  /// Throws ValidationError on any structural defect (unknown bus refs,
  /// inconsistent profile lengths, non-positive parameters, disconnected
  /// network, ...).
  void validate() const;
};

/// Parse and validate a case file. Throws ValidationError.
GridCase load_case(const std::string& path);

/// Rescale every renewable profile by one factor so that renewable output at
/// the peak-load hour equals `penetration` times the peak load.
void scale_renewables(GridCase& grid, double penetration);

/// Truncate all profiles to the first `hours` periods (study variants).
void truncate_horizon(GridCase& grid, int hours);

/// Weighted graph Laplacian of the full network, p.u.: off-diagonal
/// l_ij = -sum of branch susceptances between i and j (flat 1.0 voltage),
/// diagonals make row sums zero. Row order follows grid.buses.
Eigen::MatrixXd build_laplacian(const GridCase& grid);

/// Result of eliminating passive buses by Kron reduction.
struct ReducedNetwork {
  std::vector<int> bus_ids;    ///< retained bus ids, ascending
  Eigen::MatrixXd laplacian;   ///< p.u., same invariants as the full Laplacian
  int index_of(int bus_id) const;
};

/// Schur-complement elimination of all buses not in `keep`. `bus_ids` labels
/// the rows of `laplacian`. Throws ValidationError if `keep` is empty or not a
/// subset, NumericsError if an eliminated bus has no path to a retained bus.
ReducedNetwork kron_reduce(const Eigen::MatrixXd& laplacian,
                           const std::vector<int>& bus_ids,
                           const std::vector<int>& keep);

/// Convenience: reduce the case's network onto its generator buses.
ReducedNetwork reduce_to_generator_buses(const GridCase& grid);

/// Orthonormal eigenstructure of a reduced Laplacian, eigenvalues ascending.
/// Mode columns are sign-fixed: the entry of largest magnitude is positive.
struct ModalDecomposition {
  std::vector<int> bus_ids;
  Eigen::VectorXd eigenvalues;  ///< ascending; eigenvalues[0] ~ 0
  Eigen::MatrixXd modes;        ///< column alpha = mode alpha (0-based)
  int index_of(int bus_id) const;
  int size() const { return static_cast<int>(bus_ids.size()); }
  /// Throws NumericsError if the Fiedler eigenvalue is (near-)repeated, i.e.
  /// lambda3 - lambda2 <= tol * max(1, lambda_max).
  void require_simple_fiedler(double tol = 1e-8) const;
};

ModalDecomposition eigendecompose(const ReducedNetwork& net);

/// Buses split by the sign of their Fiedler-mode entry relative to the event
/// bus. Entries below the dead-band tau = 1e-3 * max|beta_2| count as
/// non-local; the event bus itself is always local.
struct BusClassification {
  int event_bus = 0;
  std::vector<int> local;      ///< ascending bus ids
  std::vector<int> non_local;  ///< ascending bus ids
  bool is_local(int bus_id) const;
};

BusClassification classify_buses(const ModalDecomposition& md, int event_bus);

}  // namespace lfscuc
