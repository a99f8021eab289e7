#include <cctype>
#include <cmath>

#include "lfscuc/solver.hpp"

namespace lfscuc {

namespace {

void check_name(const std::string& name, const char* kind) {
  if (name.empty())
    throw ValidationError(std::string(kind) + " name must not be empty");
  for (char c : name)
    if (std::isspace(static_cast<unsigned char>(c)))
      throw ValidationError(std::string(kind) + " name '" + name +
                            "' contains whitespace");
}

}  // namespace

LinearModel::LinearModel(std::string name) : name_(std::move(name)) {
  check_name(name_, "model");
}

int LinearModel::add_variable(const std::string& name, double lo, double hi,
                              double obj, bool integer) {
  check_name(name, "variable");
  if (col_ix_.count(name))
    throw ValidationError("duplicate variable name '" + name + "'");
  if (std::isnan(lo) || std::isnan(hi) || !std::isfinite(obj))
    throw ValidationError("variable '" + name + "' has a NaN bound or "
                          "non-finite objective coefficient");
  if (lo > hi)
    throw ValidationError("variable '" + name + "' has lo > hi");
  col_ix_[name] = n_cols();
  cols_.push_back({name, lo, hi, obj, integer});
  return n_cols() - 1;
}

int LinearModel::add_binary(const std::string& name, double obj) {
  return add_variable(name, 0.0, 1.0, obj, true);
}

int LinearModel::add_row(const std::string& name, std::vector<RowTerm> terms,
                         double lo, double hi) {
  check_name(name, "row");
  if (row_ix_.count(name))
    throw ValidationError("duplicate row name '" + name + "'");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw ValidationError("row '" + name + "' has an invalid range");
  if (lo == -kInf && hi == kInf)
    throw ValidationError("row '" + name + "' constrains nothing");
  std::vector<bool> seen(cols_.size(), false);
  for (const auto& t : terms) {
    if (t.col < 0 || t.col >= n_cols())
      throw ValidationError("row '" + name + "' references variable index " +
                            std::to_string(t.col) + " out of range");
    if (!std::isfinite(t.coeff))
      throw ValidationError("row '" + name + "' has a non-finite coefficient");
    if (seen[t.col])
      throw ValidationError("row '" + name + "' lists variable '" +
                            cols_[t.col].name + "' twice");
    seen[t.col] = true;
  }
  row_ix_[name] = n_rows();
  rows_.push_back({name, std::move(terms), lo, hi});
  return n_rows() - 1;
}

void LinearModel::set_bounds(int col, double lo, double hi) {
  if (col < 0 || col >= n_cols())
    throw ValidationError("set_bounds: variable index out of range");
  if (std::isnan(lo) || std::isnan(hi) || lo > hi)
    throw ValidationError("set_bounds: invalid range for '" +
                          cols_[col].name + "'");
  cols_[col].lo = lo;
  cols_[col].hi = hi;
}

void LinearModel::relax_integrality() {
  for (auto& c : cols_) c.integer = false;
}

int LinearModel::col_index(const std::string& name) const {
  auto it = col_ix_.find(name);
  if (it == col_ix_.end())
    throw ValidationError("unknown variable '" + name + "'");
  return it->second;
}

int LinearModel::row_index(const std::string& name) const {
  auto it = row_ix_.find(name);
  if (it == row_ix_.end()) throw ValidationError("unknown row '" + name + "'");
  return it->second;
}

bool LinearModel::has_col(const std::string& name) const {
  return col_ix_.count(name) != 0;
}

bool LinearModel::has_row(const std::string& name) const {
  return row_ix_.count(name) != 0;
}

double LinearModel::objective_value(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_cols())
    throw ValidationError("objective_value: point has wrong dimension");
  double v = 0.0;
  for (int i = 0; i < n_cols(); ++i) v += cols_[i].obj * x[i];
  return v;
}

double LinearModel::row_activity(int row, const std::vector<double>& x) const {
  if (row < 0 || row >= n_rows())
    throw ValidationError("row_activity: row index out of range");
  if (static_cast<int>(x.size()) != n_cols())
    throw ValidationError("row_activity: point has wrong dimension");
  double v = 0.0;
  for (const auto& t : rows_[row].terms) v += t.coeff * x[t.col];
  return v;
}

std::vector<LinearModel::Violation> LinearModel::check_point(
    const std::vector<double>& x, double tol) const {
  if (static_cast<int>(x.size()) != n_cols())
    throw ValidationError("check_point: point has wrong dimension");
  std::vector<Violation> out;
  auto flag = [&](const std::string& what, double amount) {
    out.push_back({what, amount});
  };
  for (int i = 0; i < n_cols(); ++i) {
    const auto& c = cols_[i];
    if (!std::isfinite(x[i])) {
      flag("variable '" + c.name + "' is not finite", kInf);
      continue;
    }
    if (x[i] < c.lo - tol)
      flag("variable '" + c.name + "' below lower bound", c.lo - x[i]);
    if (x[i] > c.hi + tol)
      flag("variable '" + c.name + "' above upper bound", x[i] - c.hi);
    if (c.integer && std::abs(x[i] - std::round(x[i])) > tol)
      flag("variable '" + c.name + "' is fractional",
           std::abs(x[i] - std::round(x[i])));
  }
  for (int r = 0; r < n_rows(); ++r) {
    double a = row_activity(r, x);
    if (a < rows_[r].lo - tol)
      flag("row '" + rows_[r].name + "' below its lower side",
           rows_[r].lo - a);
    if (a > rows_[r].hi + tol)
      flag("row '" + rows_[r].name + "' above its upper side",
           a - rows_[r].hi);
  }
  return out;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::LimitReached: return "limit-reached";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::BackendError: return "backend-error";
  }
  return "unknown";
}

}  // namespace lfscuc
