#include "lfscuc/network.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lfscuc {

using json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
}

int GridCase::horizon() const {
  if (!load_mw.empty()) return static_cast<int>(load_mw.begin()->second.size());
  if (!renewable_mw.empty())
    return static_cast<int>(renewable_mw.begin()->second.size());
  return 0;
}

double GridCase::load_at(int bus, int t) const {
  auto it = load_mw.find(bus);
  return it == load_mw.end() ? 0.0 : it->second.at(t);
}

double GridCase::renewable_at(int bus, int t) const {
  auto it = renewable_mw.find(bus);
  return it == renewable_mw.end() ? 0.0 : it->second.at(t);
}

double GridCase::total_load(int t) const {
  double s = 0.0;
  for (const auto& [bus, prof] : load_mw) s += prof.at(t);
  return s;
}

double GridCase::total_renewable(int t) const {
  double s = 0.0;
  for (const auto& [bus, prof] : renewable_mw) s += prof.at(t);
  return s;
}

int GridCase::peak_hour() const {
  int best = 0;
  double best_load = -1.0;
  for (int t = 0; t < horizon(); ++t) {
    double l = total_load(t);
    if (l > best_load) {
      best_load = l;
      best = t;
    }
  }
  return best;
}

std::vector<int> GridCase::generator_buses() const {
  std::set<int> s;
  for (const auto& g : generators) s.insert(g.bus);
  return {s.begin(), s.end()};
}

bool GridCase::has_bus(int id) const {
  return std::any_of(buses.begin(), buses.end(),
                     [&](const Bus& b) { return b.id == id; });
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

bool connected(const GridCase& grid) {
  if (grid.buses.empty()) return false;
  std::map<int, std::vector<int>> adj;
  for (const auto& br : grid.branches) {
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::set<int> seen;
  std::queue<int> q;
  q.push(grid.buses.front().id);
  seen.insert(grid.buses.front().id);
  while (!q.empty()) {
    int b = q.front();
    q.pop();
    for (int n : adj[b])
      if (seen.insert(n).second) q.push(n);
  }
  return seen.size() == grid.buses.size();
}

}  // namespace

void GridCase::validate() const {
  require(!buses.empty(), "case has no buses");
  std::set<int> bus_ids;
  for (const auto& b : buses)
    require(bus_ids.insert(b.id).second,
            "duplicate bus id " + std::to_string(b.id));

  std::set<int> branch_ids;
  for (const auto& br : branches) {
    require(branch_ids.insert(br.id).second,
            "duplicate branch id " + std::to_string(br.id));
    require(bus_ids.count(br.from) && bus_ids.count(br.to),
            "branch " + std::to_string(br.id) + " references unknown bus");
    require(br.from != br.to,
            "branch " + std::to_string(br.id) + " is a self-loop");
    require(std::isfinite(br.susceptance) && br.susceptance > 0.0,
            "branch " + std::to_string(br.id) + " needs susceptance > 0");
    require(std::isfinite(br.capacity_mw) && br.capacity_mw > 0.0,
            "branch " + std::to_string(br.id) + " needs capacity > 0");
  }

  require(!generators.empty(), "case has no generators");
  std::set<std::string> gen_ids;
  for (const auto& g : generators) {
    require(!g.id.empty(), "generator with empty id");
    require(gen_ids.insert(g.id).second, "duplicate generator id " + g.id);
    require(bus_ids.count(g.bus), "generator " + g.id + " on unknown bus");
    require(g.pmax_mw > 0.0 && g.pmin_mw >= 0.0 && g.pmin_mw <= g.pmax_mw,
            "generator " + g.id + " has inconsistent power limits");
    require(g.inertia_h > 0.0, "generator " + g.id + " needs H > 0");
    require(g.ramp_mw > 0.0, "generator " + g.id + " needs ramp > 0");
    require(g.reserve_max_mw >= 0.0, "generator " + g.id + " reserve_max < 0");
    for (double c : {g.cost_energy, g.cost_noload, g.cost_startup, g.cost_reserve})
      require(std::isfinite(c) && c >= 0.0,
              "generator " + g.id + " has a negative or non-finite cost");
  }

  int T = horizon();
  require(T >= 1, "case has no load profile");
  for (const auto& [bus, prof] : load_mw) {
    require(bus_ids.count(bus), "load on unknown bus " + std::to_string(bus));
    require(static_cast<int>(prof.size()) == T,
            "load profile length mismatch on bus " + std::to_string(bus));
    for (double v : prof)
      require(std::isfinite(v) && v >= 0.0,
              "negative load on bus " + std::to_string(bus));
  }
  for (const auto& [bus, prof] : renewable_mw) {
    require(bus_ids.count(bus),
            "renewables on unknown bus " + std::to_string(bus));
    require(static_cast<int>(prof.size()) == T,
            "renewable profile length mismatch on bus " + std::to_string(bus));
    for (double v : prof)
      require(std::isfinite(v) && v >= 0.0,
              "negative renewable output on bus " + std::to_string(bus));
  }

  require(f0_hz > 0.0, "f0 must be > 0");
  require(base_mva > 0.0, "base_mva must be > 0");
  require(connected(*this), "network is not connected");
}

namespace {

double num_field(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError(ctx + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

}  // namespace

GridCase load_case(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("case file " + path + ": " + e.what());
  }

  GridCase g;
  try {
    g.name = j.value("name", std::string{});
    g.f0_hz = j.value("f0", 60.0);
    g.base_mva = j.value("base_mva", 100.0);
    for (const auto& b : j.at("buses"))
      g.buses.push_back({static_cast<int>(num_field(b, "id", "bus"))});
    for (const auto& b : j.at("branches")) {
      Branch br;
      br.id = static_cast<int>(num_field(b, "id", "branch"));
      br.from = static_cast<int>(num_field(b, "from", "branch"));
      br.to = static_cast<int>(num_field(b, "to", "branch"));
      br.susceptance = num_field(b, "susceptance", "branch");
      br.capacity_mw = num_field(b, "capacity", "branch");
      g.branches.push_back(br);
    }
    for (const auto& u : j.at("generators")) {
      Generator gen;
      if (!u.contains("id") || !u["id"].is_string())
        throw ValidationError("generator: missing string field 'id'");
      gen.id = u["id"].get<std::string>();
      gen.bus = static_cast<int>(num_field(u, "bus", gen.id));
      gen.pmax_mw = num_field(u, "pmax", gen.id);
      gen.pmin_mw = num_field(u, "pmin", gen.id);
      gen.cost_energy = num_field(u, "cost_energy", gen.id);
      gen.cost_noload = num_field(u, "cost_noload", gen.id);
      gen.cost_startup = num_field(u, "cost_startup", gen.id);
      gen.cost_reserve = num_field(u, "cost_reserve", gen.id);
      gen.ramp_mw = num_field(u, "ramp", gen.id);
      gen.reserve_max_mw = num_field(u, "reserve_max", gen.id);
      gen.inertia_h = num_field(u, "H", gen.id);
      g.generators.push_back(gen);
    }
    for (const auto& [bus, prof] : j.at("load").items())
      g.load_mw[std::stoi(bus)] = prof.get<std::vector<double>>();
    if (j.contains("renewables"))
      for (const auto& [bus, prof] : j["renewables"].items())
        g.renewable_mw[std::stoi(bus)] = prof.get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError("case file " + path + ": " + e.what());
  }

  g.validate();
  return g;
}

void scale_renewables(GridCase& grid, double penetration) {
  if (!(penetration >= 0.0) || !std::isfinite(penetration))
    throw ValidationError("penetration must be a finite non-negative number");
  int pk = grid.peak_hour();
  double peak_load = grid.total_load(pk);
  double current = grid.total_renewable(pk);
  if (current <= 0.0)
    throw ValidationError("case has no renewable output at the peak hour");
  double factor = penetration * peak_load / current;
  for (auto& [bus, prof] : grid.renewable_mw)
    for (double& v : prof) v *= factor;
}

void truncate_horizon(GridCase& grid, int hours) {
  if (hours < 1 || hours > grid.horizon())
    throw ValidationError("horizon truncation out of range");
  for (auto& [bus, prof] : grid.load_mw) prof.resize(hours);
  for (auto& [bus, prof] : grid.renewable_mw) prof.resize(hours);
}

Eigen::MatrixXd build_laplacian(const GridCase& grid) {
  const int n = static_cast<int>(grid.buses.size());
  std::map<int, int> idx;
  for (int i = 0; i < n; ++i) idx[grid.buses[i].id] = i;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : grid.branches) {
    int i = idx.at(br.from), j = idx.at(br.to);
    L(i, j) -= br.susceptance;
    L(j, i) -= br.susceptance;
    L(i, i) += br.susceptance;
    L(j, j) += br.susceptance;
  }
  return L;
}

int ReducedNetwork::index_of(int bus_id) const {
  auto it = std::lower_bound(bus_ids.begin(), bus_ids.end(), bus_id);
  if (it == bus_ids.end() || *it != bus_id)
    throw ValidationError("bus " + std::to_string(bus_id) +
                          " is not part of the reduced network");
  return static_cast<int>(it - bus_ids.begin());
}

namespace {

void check_laplacian_invariants(const Eigen::MatrixXd& L, const std::string& ctx) {
  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  if (((L - L.transpose()).cwiseAbs().maxCoeff()) > 1e-9 * scale)
    throw NumericsError(ctx + ": Laplacian is not symmetric");
  if (L.rowwise().sum().cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw NumericsError(ctx + ": Laplacian row sums are not zero");
  for (int i = 0; i < L.rows(); ++i)
    for (int j = 0; j < L.cols(); ++j)
      if (i != j && L(i, j) > 1e-9 * scale)
        throw NumericsError(ctx + ": positive off-diagonal entry");
}

}  // namespace

ReducedNetwork kron_reduce(const Eigen::MatrixXd& laplacian,
                           const std::vector<int>& bus_ids,
                           const std::vector<int>& keep) {
  const int n = static_cast<int>(bus_ids.size());
  if (laplacian.rows() != n || laplacian.cols() != n)
    throw ValidationError("kron_reduce: laplacian size does not match bus_ids");
  if (keep.empty()) throw ValidationError("kron_reduce: empty retained set");

  std::map<int, int> idx;
  for (int i = 0; i < n; ++i) idx[bus_ids[i]] = i;
  std::set<int> keep_set(keep.begin(), keep.end());
  for (int b : keep)
    if (!idx.count(b))
      throw ValidationError("kron_reduce: retained bus " + std::to_string(b) +
                            " not present");

  std::vector<int> kept_sorted(keep_set.begin(), keep_set.end());
  std::vector<int> r_rows, e_rows;
  std::vector<int> e_ids;
  for (int b : kept_sorted) r_rows.push_back(idx.at(b));
  for (int i = 0; i < n; ++i)
    if (!keep_set.count(bus_ids[i])) {
      e_rows.push_back(i);
      e_ids.push_back(bus_ids[i]);
    }

  ReducedNetwork out;
  out.bus_ids = kept_sorted;
  if (e_rows.empty()) {
    out.laplacian = laplacian(r_rows, r_rows);
    check_laplacian_invariants(out.laplacian, "kron_reduce");
    return out;
  }

  // Every eliminated bus must reach a retained bus through the graph encoded
  // by nonzero off-diagonals, otherwise the eliminated block is singular.
  {
    std::set<int> reach;  // eliminated rows reachable from retained rows
    std::queue<int> q;
    const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
    auto coupled = [&](int i, int j) {
      return std::abs(laplacian(i, j)) > 1e-12 * scale;
    };
    std::set<int> e_set(e_rows.begin(), e_rows.end());
    for (int r : r_rows)
      for (int e : e_rows)
        if (coupled(r, e) && reach.insert(e).second) q.push(e);
    while (!q.empty()) {
      int e = q.front();
      q.pop();
      for (int e2 : e_rows)
        if (!reach.count(e2) && coupled(e, e2)) {
          reach.insert(e2);
          q.push(e2);
        }
    }
    if (reach.size() != e_rows.size())
      throw NumericsError(
          "kron_reduce: eliminated buses form an island with no path to a "
          "retained bus (singular eliminated block)");
  }

  Eigen::MatrixXd Lrr = laplacian(r_rows, r_rows);
  Eigen::MatrixXd Lre = laplacian(r_rows, e_rows);
  Eigen::MatrixXd Lee = laplacian(e_rows, e_rows);
  Eigen::MatrixXd Ler = laplacian(e_rows, r_rows);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Lee);
  if (ldlt.info() != Eigen::Success)
    throw NumericsError("kron_reduce: eliminated block factorization failed");
  Eigen::MatrixXd S = Lrr - Lre * ldlt.solve(Ler);
  S = 0.5 * (S + S.transpose()).eval();
  check_laplacian_invariants(S, "kron_reduce");
  out.laplacian = std::move(S);
  return out;
}

ReducedNetwork reduce_to_generator_buses(const GridCase& grid) {
  std::vector<int> ids;
  for (const auto& b : grid.buses) ids.push_back(b.id);
  return kron_reduce(build_laplacian(grid), ids, grid.generator_buses());
}

int ModalDecomposition::index_of(int bus_id) const {
  auto it = std::lower_bound(bus_ids.begin(), bus_ids.end(), bus_id);
  if (it == bus_ids.end() || *it != bus_id)
    throw ValidationError("bus " + std::to_string(bus_id) +
                          " is not part of the modal decomposition");
  return static_cast<int>(it - bus_ids.begin());
}

void ModalDecomposition::require_simple_fiedler(double tol) const {
  if (size() < 3) return;
  const double scale = std::max(1.0, std::abs(eigenvalues(size() - 1)));
  if (eigenvalues(2) - eigenvalues(1) <= tol * scale)
    throw NumericsError(
        "degenerate Fiedler eigenvalue: lambda2 and lambda3 coincide; the "
        "locational mode is not well defined for this network");
}

ModalDecomposition eigendecompose(const ReducedNetwork& net) {
  check_laplacian_invariants(net.laplacian, "eigendecompose");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(net.laplacian);
  if (es.info() != Eigen::Success)
    throw NumericsError("eigendecompose: eigensolver did not converge");

  ModalDecomposition md;
  md.bus_ids = net.bus_ids;
  md.eigenvalues = es.eigenvalues();
  md.modes = es.eigenvectors();

  const int n = md.size();
  const double scale = std::max(1.0, std::abs(md.eigenvalues(n - 1)));
  if (std::abs(md.eigenvalues(0)) > 1e-8 * scale)
    throw NumericsError("eigendecompose: smallest eigenvalue is not ~0; the "
                        "input is not a connected-network Laplacian");
  for (int a = 0; a < n; ++a) {
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(md.modes(i, a)) > std::abs(md.modes(imax, a))) imax = i;
    if (md.modes(imax, a) < 0.0) md.modes.col(a) *= -1.0;
  }
  return md;
}

bool BusClassification::is_local(int bus_id) const {
  return std::binary_search(local.begin(), local.end(), bus_id);
}

BusClassification classify_buses(const ModalDecomposition& md, int event_bus) {
  md.require_simple_fiedler();
  const int b = md.index_of(event_bus);
  const Eigen::VectorXd beta = md.modes.col(1);
  const double tau = 1e-3 * beta.cwiseAbs().maxCoeff();

  BusClassification cls;
  cls.event_bus = event_bus;
  for (int i = 0; i < md.size(); ++i) {
    bool local = std::abs(beta(i)) >= tau &&
                 std::signbit(beta(i)) == std::signbit(beta(b));
    if (md.bus_ids[i] == event_bus) local = true;
    (local ? cls.local : cls.non_local).push_back(md.bus_ids[i]);
  }
  return cls;
}

}  // namespace lfscuc
