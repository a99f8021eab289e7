#pragma once

#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfscuc/common.hpp"

namespace lfscuc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ModelVariable {
  std::string name;
  double lo = 0.0;
  double hi = kInf;
  double obj = 0.0;
  bool integer = false;
};

struct RowTerm {
  int col = -1;
  double coeff = 0.0;
};

struct ModelRow {
  std::string name;
  std::vector<RowTerm> terms;
  double lo = -kInf;
  double hi = kInf;
};

/// Sparse mixed-integer linear program, minimization sense. Variables and
/// rows keep insertion order; names are unique and index lookups are O(1).
class LinearModel {
 public:
  explicit LinearModel(std::string name = "model");

  int add_variable(const std::string& name, double lo, double hi,
                   double obj = 0.0, bool integer = false);
  int add_binary(const std::string& name, double obj = 0.0);
  /// Constraint lo <= terms . x <= hi. Use kInf for one-sided rows; at least
  /// one side must be finite.
  int add_row(const std::string& name, std::vector<RowTerm> terms, double lo,
              double hi);

  void set_bounds(int col, double lo, double hi);
  /// Downgrade every integer variable to continuous (for dual re-solves).
  void relax_integrality();

  const std::string& name() const { return name_; }
  int n_cols() const { return static_cast<int>(cols_.size()); }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<ModelVariable>& cols() const { return cols_; }
  const std::vector<ModelRow>& rows() const { return rows_; }
  const ModelVariable& col(int i) const { return cols_.at(i); }
  const ModelRow& row(int i) const { return rows_.at(i); }

  int col_index(const std::string& name) const;  ///< throws if unknown
  int row_index(const std::string& name) const;
  bool has_col(const std::string& name) const;
  bool has_row(const std::string& name) const;

  double objective_value(const std::vector<double>& x) const;
  double row_activity(int row, const std::vector<double>& x) const;

  struct Violation {
    std::string what;  ///< human-readable description of the broken element
    double amount = 0.0;
  };
  /// Independent feasibility audit of a candidate point: variable bounds,
  /// row ranges, and integrality, each to the given absolute tolerance.
  std::vector<Violation> check_point(const std::vector<double>& x,
                                     double tol) const;

 private:
  std::string name_;
  std::vector<ModelVariable> cols_;
  std::vector<ModelRow> rows_;
  std::unordered_map<std::string, int> col_ix_;
  std::unordered_map<std::string, int> row_ix_;
};

std::string export_mps(const LinearModel& model);
LinearModel import_mps(const std::string& text);

enum class SolveStatus {
  Optimal,       ///< proven optimal within the requested gap
  LimitReached,  ///< time or iteration limit; x holds the incumbent if any
  Infeasible,
  Unbounded,
  BackendError,
};

std::string to_string(SolveStatus s);

struct SolveOptions {
  double mip_gap = 1e-3;
  double time_limit_s = 1800.0;
  int seed = 0;
  int threads = 1;
  /// Solve the continuous relaxation and return one dual per row. Callers
  /// fix binaries through bounds first if they want pricing duals.
  bool want_duals = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::BackendError;
  std::string raw_status;  ///< backend's own status code and message
  std::string backend;     ///< identity of the backend that produced this
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;      ///< empty when no point is available
  std::vector<double> duals;  ///< per original row, dual solves only
  double mip_gap = std::numeric_limits<double>::quiet_NaN();
  double solve_time_s = 0.0;

  bool has_solution() const { return !x.empty(); }
};

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string identity() const = 0;
  /// Throws BackendError when the backend itself breaks (missing
  /// interpreter, protocol violation). Infeasible or unbounded models are
  /// reported through the result status, not exceptions.
  virtual SolveResult solve(const LinearModel& model,
                            const SolveOptions& options) const = 0;
};

/// Known names: "scipy-highs" (alias "highs"). Empty selects the default.
std::unique_ptr<SolverBackend> make_backend(const std::string& name = "");

/// Backend chosen by the SCUC_BACKEND environment variable, or the default.
std::unique_ptr<SolverBackend> backend_from_env();

}  // namespace lfscuc
