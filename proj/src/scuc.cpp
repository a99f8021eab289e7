#include "lfscuc/scuc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfscuc/dynamics.hpp"

namespace lfscuc {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::T:
      return "t";
    case ModelKind::ERC:
      return "erc";
    case ModelKind::LRC:
      return "lrc";
    case ModelKind::VI_ERC:
      return "vi-erc";
    case ModelKind::VI_LRC:
      return "vi-lrc";
  }
  throw ValidationError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  std::string k = lower(s);
  std::replace(k.begin(), k.end(), '_', '-');
  if (k == "t") return ModelKind::T;
  if (k == "erc") return ModelKind::ERC;
  if (k == "lrc") return ModelKind::LRC;
  if (k == "vi-erc") return ModelKind::VI_ERC;
  if (k == "vi-lrc") return ModelKind::VI_LRC;
  throw ValidationError("unknown model kind '" + s +
                        "' (expected t, erc, lrc, vi-erc or vi-lrc)");
}

bool kind_has_rocof(ModelKind kind) { return kind != ModelKind::T; }

bool kind_has_locational(ModelKind kind) {
  return kind == ModelKind::LRC || kind == ModelKind::VI_LRC;
}

bool kind_has_vi(ModelKind kind) {
  return kind == ModelKind::VI_ERC || kind == ModelKind::VI_LRC;
}

void ScucConfig::validate() const {
  if (!(rocof_lim_hz_s > 0)) throw ValidationError("rocof limit must be positive");
  if (!(gamma > 0)) throw ValidationError("gamma must be positive");
  if (!(window_s > 0)) throw ValidationError("RoCoF window must be positive");
  if (!(t1_s >= 0)) throw ValidationError("t1 must be non-negative");
  if (!(t2_s > t1_s)) throw ValidationError("t2 must exceed t1");
  if (!(vi_price >= 0)) throw ValidationError("virtual-inertia price must be non-negative");
  if (!(vi_budget_mws >= 0)) throw ValidationError("virtual-inertia budget must be non-negative");
  if (!(mip_gap >= 0)) throw ValidationError("MIP gap must be non-negative");
  if (!(time_limit_s > 0)) throw ValidationError("time limit must be positive");
}

// ---------------------------------------------------------------------------
// Canonical names. Every family of constraints in the formulation appears as
// named rows so that solutions can be audited and priced by name.

std::string UcProblem::var_p(const std::string& g, int t) {
  return "p_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_r(const std::string& g, int t) {
  return "r_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_u(const std::string& g, int t) {
  return "u_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_v(const std::string& g, int t) {
  return "v_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_k(const std::string& g, int t) {
  return "k_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_flow(int branch, int t) {
  return "F_k" + std::to_string(branch) + "_t" + std::to_string(t);
}
std::string UcProblem::var_theta(int bus, int t) {
  return "th_n" + std::to_string(bus) + "_t" + std::to_string(t);
}
std::string UcProblem::var_inertia(int t) { return "M_t" + std::to_string(t); }
std::string UcProblem::var_avg_inertia(int t) { return "m_t" + std::to_string(t); }
std::string UcProblem::var_dm(const std::string& g, int t) {
  return "dm_" + g + "_t" + std::to_string(t);
}
std::string UcProblem::var_vi(int t) { return "vi_t" + std::to_string(t); }
std::string UcProblem::row_balance(int bus, int t) {
  return "balance_n" + std::to_string(bus) + "_t" + std::to_string(t);
}

// ---------------------------------------------------------------------------
// Surface construction

int worst_local_bus(const ModalDecomposition& md,
                    const BusClassification& cls) {
  if (cls.local.empty()) throw ValidationError("no local buses to pick from");
  const int ev = md.index_of(cls.event_bus);
  int best = cls.local.front();
  double best_prod = -std::numeric_limits<double>::infinity();
  for (int bus : cls.local) {
    double prod = md.modes(md.index_of(bus), 1) * md.modes(ev, 1);
    if (prod > best_prod) {
      best_prod = prod;
      best = bus;
    }
  }
  return best;
}

int worst_non_local_bus(const ModalDecomposition& md,
                        const BusClassification& cls) {
  if (cls.non_local.empty())
    throw ValidationError("no non-local buses to pick from");
  const int ev = md.index_of(cls.event_bus);
  int best = cls.non_local.front();
  double best_prod = std::numeric_limits<double>::infinity();
  for (int bus : cls.non_local) {
    double prod = md.modes(md.index_of(bus), 1) * md.modes(ev, 1);
    if (prod < best_prod) {
      best_prod = prod;
      best = bus;
    }
  }
  return best;
}

ScucSurfaces build_surfaces(const GridCase& grid, int event_bus,
                            const ScucConfig& cfg, int max_segments,
                            const FitOptions& fit) {
  cfg.validate();
  ReducedNetwork red = reduce_to_generator_buses(grid);
  ModalDecomposition md = eigendecompose(red);
  md.require_simple_fiedler();
  md.eigenvalues *= grid.base_mva;  // p.u. -> MW/rad, matching the MW inertia axis

  BusClassification cls = classify_buses(md, event_bus);
  if (cls.non_local.empty())
    throw ValidationError("event bus " + std::to_string(event_bus) +
                          " leaves no non-local buses; no surface split possible");

  EvaluationGrid box = default_grid(grid);
  const int lb = worst_local_bus(md, cls);
  const int nb = worst_non_local_bus(md, cls);

  ScucSurfaces out;
  FitProblem plocal = sample_surface(md, lb, event_bus, cfg.t1_s, cfg.window_s,
                                     cfg.gamma, box, max_segments);
  out.local = make_conservative(fit_pwl(plocal, fit), plocal);
  out.local.context = {event_bus, lb, "local", cfg.t1_s, cfg.window_s, cfg.gamma};

  FitProblem pnl = sample_surface(md, nb, event_bus, cfg.t2_s, cfg.window_s,
                                  cfg.gamma, box, max_segments);
  out.non_local = make_conservative(fit_pwl(pnl, fit), pnl);
  out.non_local.context = {event_bus, nb, "non-local", cfg.t2_s, cfg.window_s, cfg.gamma};
  return out;
}

// ---------------------------------------------------------------------------
// Model assembly

namespace {

void check_surfaces(const ScucSurfaces& s, const ScucConfig& cfg) {
  if (s.local.segments.empty() || s.non_local.segments.empty())
    throw ValidationError("locational model needs fitted surfaces for both bus classes");
  if (s.local.context.bus_class != "local" ||
      s.non_local.context.bus_class != "non-local")
    throw ValidationError("surface bus classes are swapped or unlabeled");
  if (s.local.context.event_bus != s.non_local.context.event_bus)
    throw ValidationError("surfaces were fitted for different event buses");
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
  if (!close(s.local.context.gamma, cfg.gamma) ||
      !close(s.non_local.context.gamma, cfg.gamma) ||
      !close(s.local.context.dt, cfg.window_s) ||
      !close(s.non_local.context.dt, cfg.window_s) ||
      !close(s.local.context.t, cfg.t1_s) ||
      !close(s.non_local.context.t, cfg.t2_s))
    throw ValidationError("surfaces were fitted with different dynamic parameters "
                          "than the config requests");
}

}  // namespace

UcProblem build_model(const GridCase& grid, ModelKind kind,
                      const ScucConfig& cfg, const ScucSurfaces* surfaces) {
  cfg.validate();
  grid.validate();
  if (kind_has_locational(kind)) {
    if (surfaces == nullptr)
      throw ValidationError("locational model kinds need fitted RoCoF surfaces");
    check_surfaces(*surfaces, cfg);
  }

  const int T = grid.horizon();
  const int G = static_cast<int>(grid.generators.size());
  const int B = static_cast<int>(grid.buses.size());
  const int K = static_cast<int>(grid.branches.size());
  const double ws = 2.0 * kPi * grid.f0_hz;
  const double lim2pi = cfg.rocof_lim_hz_s * 2.0 * kPi;  // Hz/s -> rad/s^2

  UcProblem pb;
  pb.kind = kind;
  pb.cfg = cfg;
  pb.model = LinearModel("scuc-" + to_string(kind));
  pb.horizon = T;
  pb.base_mva = grid.base_mva;
  pb.omega_s = ws;
  pb.n_retained = static_cast<int>(grid.generator_buses().size());
  if (kind_has_locational(kind)) pb.surfaces = *surfaces;

  for (const Generator& g : grid.generators) {
    pb.gen_ids.push_back(g.id);
    pb.gen_bus.push_back(g.bus);
    pb.gen_pmax.push_back(g.pmax_mw);
    pb.gen_pmin.push_back(g.pmin_mw);
    pb.gen_h.push_back(g.inertia_h);
  }
  for (const Branch& k : grid.branches) {
    pb.branch_ids.push_back(k.id);
    pb.branch_from.push_back(k.from);
    pb.branch_to.push_back(k.to);
  }
  int ref_bus = grid.buses.front().id;
  for (const Bus& b : grid.buses) {
    pb.bus_ids.push_back(b.id);
    ref_bus = std::min(ref_bus, b.id);
  }
  pb.net_load_mw.assign(B, std::vector<double>(T, 0.0));
  for (int n = 0; n < B; ++n)
    for (int t = 0; t < T; ++t)
      pb.net_load_mw[n][t] =
          grid.load_at(pb.bus_ids[n], t) - grid.renewable_at(pb.bus_ids[n], t);

  LinearModel& m = pb.model;
  const int N = pb.n_retained;

  // Variables, family by family. Flat index g * T + t (resp. k * T + t).
  std::vector<int> cp(G * T), cr(G * T), cu(G * T), cv(G * T);
  std::vector<int> cf(K * T), cth(B * T);
  std::vector<int> ck, cdm, cM, cm, cw;
  for (int g = 0; g < G; ++g)
    for (int t = 0; t < T; ++t)
      cp[g * T + t] = m.add_variable(UcProblem::var_p(pb.gen_ids[g], t), 0.0,
                                     kInf, grid.generators[g].cost_energy);
  for (int g = 0; g < G; ++g)
    for (int t = 0; t < T; ++t)
      cr[g * T + t] = m.add_variable(UcProblem::var_r(pb.gen_ids[g], t), 0.0,
                                     kInf, grid.generators[g].cost_reserve);
  for (int g = 0; g < G; ++g)
    for (int t = 0; t < T; ++t)
      cu[g * T + t] = m.add_binary(UcProblem::var_u(pb.gen_ids[g], t),
                                   grid.generators[g].cost_noload);
  for (int g = 0; g < G; ++g)
    for (int t = 0; t < T; ++t)
      cv[g * T + t] = m.add_binary(UcProblem::var_v(pb.gen_ids[g], t),
                                   grid.generators[g].cost_startup);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t)
      cf[k * T + t] = m.add_variable(UcProblem::var_flow(pb.branch_ids[k], t),
                                     -kInf, kInf, 0.0);
  for (int n = 0; n < B; ++n)
    for (int t = 0; t < T; ++t) {
      const bool ref = pb.bus_ids[n] == ref_bus;
      cth[n * T + t] = m.add_variable(UcProblem::var_theta(pb.bus_ids[n], t),
                                      ref ? 0.0 : -kInf, ref ? 0.0 : kInf, 0.0);
    }
  if (kind_has_rocof(kind)) {
    ck.resize(G * T);
    for (int g = 0; g < G; ++g)
      for (int t = 0; t < T; ++t)
        ck[g * T + t] = m.add_variable(UcProblem::var_k(pb.gen_ids[g], t), 0.0,
                                       grid.generators[g].pmax_mw, 0.0);
  }
  if (kind == ModelKind::ERC || kind == ModelKind::VI_ERC) {
    cM.resize(T);
    for (int t = 0; t < T; ++t)
      cM[t] = m.add_variable(UcProblem::var_inertia(t), 0.0, kInf, 0.0);
  }
  if (kind_has_locational(kind)) {
    cm.resize(T);
    for (int t = 0; t < T; ++t)
      cm[t] = m.add_variable(UcProblem::var_avg_inertia(t), 0.0, kInf, 0.0);
    cdm.resize(G * T);
    for (int g = 0; g < G; ++g)
      for (int t = 0; t < T; ++t)
        cdm[g * T + t] =
            m.add_variable(UcProblem::var_dm(pb.gen_ids[g], t), 0.0, kInf, 0.0);
  }
  if (kind_has_vi(kind)) {
    cw.resize(T);
    for (int t = 0; t < T; ++t)
      cw[t] = m.add_variable(UcProblem::var_vi(t), 0.0, kInf, cfg.vi_price);
  }

  // Nodal balance: thermal injections plus inbound flows minus outbound flows
  // equal demand net of renewables.
  for (int n = 0; n < B; ++n) {
    for (int t = 0; t < T; ++t) {
      std::vector<RowTerm> terms;
      for (int g = 0; g < G; ++g)
        if (pb.gen_bus[g] == pb.bus_ids[n]) terms.push_back({cp[g * T + t], 1.0});
      for (int k = 0; k < K; ++k) {
        if (pb.branch_to[k] == pb.bus_ids[n]) terms.push_back({cf[k * T + t], 1.0});
        if (pb.branch_from[k] == pb.bus_ids[n]) terms.push_back({cf[k * T + t], -1.0});
      }
      const double rhs = pb.net_load_mw[n][t];
      m.add_row(UcProblem::row_balance(pb.bus_ids[n], t), std::move(terms), rhs, rhs);
    }
  }

  // DC flow definition and rating. Susceptance is p.u. on the system base, so
  // base_mva * b * (theta_from - theta_to) is the flow in MW.
  std::unordered_map<int, int> bus_pos;
  for (int n = 0; n < B; ++n) bus_pos[pb.bus_ids[n]] = n;
  for (int k = 0; k < K; ++k) {
    const Branch& br = grid.branches[k];
    const double bmw = grid.base_mva * br.susceptance;
    for (int t = 0; t < T; ++t) {
      m.add_row("flowdef_k" + std::to_string(br.id) + "_t" + std::to_string(t),
                {{cf[k * T + t], 1.0},
                 {cth[bus_pos.at(br.from) * T + t], -bmw},
                 {cth[bus_pos.at(br.to) * T + t], bmw}},
                0.0, 0.0);
      if (std::isfinite(br.capacity_mw))
        m.add_row("flowcap_k" + std::to_string(br.id) + "_t" + std::to_string(t),
                  {{cf[k * T + t], 1.0}}, -br.capacity_mw, br.capacity_mw);
    }
  }

  // Dispatch limits, reserve coupling, ramps, startup logic.
  for (int g = 0; g < G; ++g) {
    const Generator& gen = grid.generators[g];
    const std::string& id = pb.gen_ids[g];
    for (int t = 0; t < T; ++t) {
      const std::string suffix = "_g" + id + "_t" + std::to_string(t);
      const int p = cp[g * T + t], r = cr[g * T + t], u = cu[g * T + t],
                v = cv[g * T + t];
      m.add_row("pmin" + suffix, {{p, 1.0}, {u, -gen.pmin_mw}}, 0.0, kInf);
      m.add_row("pmax" + suffix, {{p, 1.0}, {r, 1.0}, {u, -gen.pmax_mw}}, -kInf, 0.0);
      m.add_row("resmax" + suffix, {{r, 1.0}, {u, -gen.reserve_max_mw}}, -kInf, 0.0);

      // Reserve adequacy for losing unit g. As printed the supplying sum runs
      // over all units including g, which cancels g's own reserve on both
      // sides; the flag re-adds it as a pure headroom requirement.
      std::vector<RowTerm> adq;
      for (int j = 0; j < G; ++j)
        if (j != g) adq.push_back({cr[j * T + t], 1.0});
      adq.push_back({p, -1.0});
      if (cfg.reserve_excludes_contingency) adq.push_back({r, -1.0});
      m.add_row("resadq" + suffix, std::move(adq), 0.0, kInf);

      if (t >= 1) {
        const int pm = cp[g * T + t - 1];
        m.add_row("rampup" + suffix, {{p, 1.0}, {pm, -1.0}}, -kInf, gen.ramp_mw);
        m.add_row("rampdn" + suffix, {{pm, 1.0}, {p, -1.0}}, -kInf, gen.ramp_mw);
      }

      // Units start the horizon offline, so hour 0 commitment is a startup.
      if (t == 0) {
        m.add_row("su_def" + suffix, {{v, 1.0}, {u, -1.0}}, 0.0, kInf);
      } else {
        const int um = cu[g * T + t - 1];
        m.add_row("su_def" + suffix, {{v, 1.0}, {u, -1.0}, {um, 1.0}}, 0.0, kInf);
        m.add_row("su_gap" + suffix, {{v, 1.0}, {um, 1.0}}, -kInf, 1.0);
      }
      m.add_row("su_on" + suffix, {{v, 1.0}, {u, -1.0}}, -kInf, 0.0);
    }
  }

  // Inertia bookkeeping. k is the committed capacity, M the system inertia in
  // swing units (MW s^2/rad), m the per-node average over the N retained
  // buses, dm the average-inertia loss when unit g trips. A machine's inertia
  // in these units is 2 H pmax / omega_s, i.e. machine_inertia(); dividing by
  // pmax gives the coefficient on k.
  if (kind_has_rocof(kind)) {
    for (int g = 0; g < G; ++g) {
      const Generator& gen = grid.generators[g];
      for (int t = 0; t < T; ++t)
        m.add_row("kdef_g" + pb.gen_ids[g] + "_t" + std::to_string(t),
                  {{ck[g * T + t], 1.0}, {cu[g * T + t], -gen.pmax_mw}}, 0.0, 0.0);
    }
  }
  if (kind == ModelKind::ERC || kind == ModelKind::VI_ERC) {
    for (int t = 0; t < T; ++t) {
      std::vector<RowTerm> terms{{cM[t], 1.0}};
      for (int g = 0; g < G; ++g) {
        const double per_mw =
            machine_inertia(pb.gen_h[g], pb.gen_pmax[g], grid.f0_hz) / pb.gen_pmax[g];
        terms.push_back({ck[g * T + t], -per_mw});
      }
      m.add_row("Mdef_t" + std::to_string(t), std::move(terms), 0.0, 0.0);
    }
    // Post-contingency headroom: the dispatch of any unit may not exceed what
    // the surviving inertia can absorb at the RoCoF limit,
    //   p_g <= lim * 2 pi * (M_t [+ 2 W_t / omega_s] - 2 H_g k_g / omega_s).
    // Virtual inertia W_t is bought in MWs, hence the 2 / omega_s conversion
    // into swing units.
    for (int g = 0; g < G; ++g) {
      const double mach =
          machine_inertia(pb.gen_h[g], pb.gen_pmax[g], grid.f0_hz) / pb.gen_pmax[g];
      for (int t = 0; t < T; ++t) {
        std::vector<RowTerm> terms{{cM[t], lim2pi},
                                   {ck[g * T + t], -lim2pi * mach},
                                   {cp[g * T + t], -1.0}};
        if (kind == ModelKind::VI_ERC)
          terms.push_back({cw[t], lim2pi * 2.0 / ws});
        m.add_row("erc_g" + pb.gen_ids[g] + "_t" + std::to_string(t),
                  std::move(terms), 0.0, kInf);
      }
    }
  }
  if (kind_has_locational(kind)) {
    for (int t = 0; t < T; ++t) {
      std::vector<RowTerm> terms{{cm[t], 1.0}};
      for (int g = 0; g < G; ++g) {
        const double per_mw =
            machine_inertia(pb.gen_h[g], pb.gen_pmax[g], grid.f0_hz) /
            (N * pb.gen_pmax[g]);
        terms.push_back({ck[g * T + t], -per_mw});
      }
      if (kind == ModelKind::VI_LRC) terms.push_back({cw[t], -2.0 / (N * ws)});
      m.add_row("mdef_t" + std::to_string(t), std::move(terms), 0.0, 0.0);
    }
    for (int g = 0; g < G; ++g) {
      const double per_mw = machine_inertia(pb.gen_h[g], pb.gen_pmax[g],
                                            grid.f0_hz) /
                            (N * pb.gen_pmax[g]);
      for (int t = 0; t < T; ++t)
        m.add_row("dmdef_g" + pb.gen_ids[g] + "_t" + std::to_string(t),
                  {{cdm[g * T + t], 1.0}, {ck[g * T + t], -per_mw}}, 0.0, 0.0);
    }
    // One inequality per fitted plane per contingency: the max-affine
    // surrogate of the windowed RoCoF, evaluated at the class's worst bus,
    // must stay at or below the limit. Affine-in-variables, so no binaries
    // are needed for the max.
    for (int cls = 0; cls < 2; ++cls) {
      const PwlSurface& surf =
          cls == 0 ? pb.surfaces.local : pb.surfaces.non_local;
      const char* stem = cls == 0 ? "lrc_seg_v" : "lrc_nl_seg_v";
      for (int g = 0; g < G; ++g) {
        for (int t = 0; t < T; ++t) {
          for (int v = 0; v < static_cast<int>(surf.segments.size()); ++v) {
            const PwlSegment& s = surf.segments[v];
            m.add_row(stem + std::to_string(v + 1) + "_g" + pb.gen_ids[g] +
                          "_t" + std::to_string(t),
                      {{cp[g * T + t], s.a},
                       {cm[t], s.b},
                       {cdm[g * T + t], s.c}},
                      -kInf, cfg.rocof_lim_hz_s - s.d);
          }
        }
      }
    }
  }
  if (kind_has_vi(kind)) {
    for (int t = 0; t < T; ++t)
      m.add_row("vibudget_t" + std::to_string(t), {{cw[t], 1.0}}, -kInf,
                cfg.vi_budget_mws);
  }

  return pb;
}

// ---------------------------------------------------------------------------
// Solving and auditing

namespace {

double col_sum(const LinearModel& m, const std::vector<double>& x,
               const std::vector<int>& cols) {
  double s = 0.0;
  for (int c : cols) s += m.col(c).obj * x[c];
  return s;
}

}  // namespace

UcSolution solve(const UcProblem& problem, const SolverBackend& backend) {
  SolveOptions opt;
  opt.mip_gap = problem.cfg.mip_gap;
  opt.time_limit_s = problem.cfg.time_limit_s;
  opt.seed = problem.cfg.seed;
  opt.threads = 1;

  SolveResult res = backend.solve(problem.model, opt);

  UcSolution sol;
  sol.kind = problem.kind;
  sol.status = res.status;
  sol.raw_status = res.raw_status;
  sol.backend = res.backend;
  sol.mip_gap = res.mip_gap;
  sol.solve_time_s = res.solve_time_s;
  sol.horizon = problem.horizon;
  sol.gen_ids = problem.gen_ids;
  sol.branch_ids = problem.branch_ids;
  sol.bus_ids = problem.bus_ids;

  if (res.status == SolveStatus::Optimal && !res.has_solution())
    throw BackendError("backend reported optimality without a solution point");
  if (!res.has_solution()) return sol;

  const LinearModel& m = problem.model;
  if (static_cast<int>(res.x.size()) != m.n_cols())
    throw BackendError("backend returned a point of the wrong dimension");
  sol.x = res.x;
  sol.objective = m.objective_value(sol.x);
  if (std::isfinite(res.objective) &&
      std::abs(res.objective - sol.objective) >
          1e-6 * std::max(1.0, std::abs(sol.objective)))
    throw BackendError("backend objective disagrees with the model's own evaluation");

  const int T = problem.horizon;
  const int G = static_cast<int>(problem.gen_ids.size());
  sol.p.assign(G, std::vector<double>(T));
  sol.r.assign(G, std::vector<double>(T));
  sol.u.assign(G, std::vector<int>(T));
  sol.v.assign(G, std::vector<int>(T));
  std::vector<int> pcols, rcols, ucols, vcols, wcols;
  for (int g = 0; g < G; ++g) {
    const std::string& id = problem.gen_ids[g];
    for (int t = 0; t < T; ++t) {
      const int pc = m.col_index(UcProblem::var_p(id, t));
      const int rc = m.col_index(UcProblem::var_r(id, t));
      const int uc = m.col_index(UcProblem::var_u(id, t));
      const int vc = m.col_index(UcProblem::var_v(id, t));
      sol.p[g][t] = sol.x[pc];
      sol.r[g][t] = sol.x[rc];
      sol.u[g][t] = static_cast<int>(std::llround(sol.x[uc]));
      sol.v[g][t] = static_cast<int>(std::llround(sol.x[vc]));
      pcols.push_back(pc);
      rcols.push_back(rc);
      ucols.push_back(uc);
      vcols.push_back(vc);
    }
  }
  const int K = static_cast<int>(problem.branch_ids.size());
  sol.flow.assign(K, std::vector<double>(T));
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t)
      sol.flow[k][t] = sol.x[m.col_index(UcProblem::var_flow(problem.branch_ids[k], t))];
  const int B = static_cast<int>(problem.bus_ids.size());
  sol.theta.assign(B, std::vector<double>(T));
  for (int n = 0; n < B; ++n)
    for (int t = 0; t < T; ++t)
      sol.theta[n][t] = sol.x[m.col_index(UcProblem::var_theta(problem.bus_ids[n], t))];

  if (problem.kind == ModelKind::ERC || problem.kind == ModelKind::VI_ERC) {
    sol.M.resize(T);
    for (int t = 0; t < T; ++t)
      sol.M[t] = sol.x[m.col_index(UcProblem::var_inertia(t))];
  }
  if (kind_has_locational(problem.kind)) {
    sol.m_avg.resize(T);
    for (int t = 0; t < T; ++t)
      sol.m_avg[t] = sol.x[m.col_index(UcProblem::var_avg_inertia(t))];
  }
  if (kind_has_vi(problem.kind)) {
    sol.vi_mws.resize(T);
    for (int t = 0; t < T; ++t) {
      const int wc = m.col_index(UcProblem::var_vi(t));
      sol.vi_mws[t] = sol.x[wc];
      wcols.push_back(wc);
    }
  }

  sol.fuel_cost = col_sum(m, sol.x, pcols);
  sol.reserve_cost = col_sum(m, sol.x, rcols);
  sol.no_load_cost = col_sum(m, sol.x, ucols);
  sol.startup_cost = col_sum(m, sol.x, vcols);
  sol.vi_cost = col_sum(m, sol.x, wcols);

  sol.largest_unit.assign(T, "");
  for (int t = 0; t < T; ++t) {
    double best = -1.0;
    for (int g = 0; g < G; ++g)
      if (sol.u[g][t] == 1 && problem.gen_pmax[g] > best) {
        best = problem.gen_pmax[g];
        sol.largest_unit[t] = problem.gen_ids[g];
      }
  }

  validate_solution(problem, sol);
  return sol;
}

void validate_solution(const UcProblem& problem, const UcSolution& solution) {
  if (!solution.has_solution())
    throw ValidationError("solution carries no point to validate");
  const LinearModel& m = problem.model;
  if (static_cast<int>(solution.x.size()) != m.n_cols())
    throw ValidationError("solution point does not match the model dimensions");

  // Every bound, row range, and integrality restriction of the model itself.
  const auto viol = m.check_point(solution.x, 1e-5);
  if (!viol.empty()) {
    std::string what = "solution fails the model audit:";
    for (std::size_t i = 0; i < viol.size() && i < 3; ++i)
      what += " [" + viol[i].what + "]";
    if (viol.size() > 3) what += " ...";
    throw BackendError(what);
  }

  const double obj = m.objective_value(solution.x);
  if (std::abs(obj - solution.objective) > 1e-6 * std::max(1.0, std::abs(obj)))
    throw BackendError("stored objective disagrees with the point");
  const double parts = solution.fuel_cost + solution.no_load_cost +
                       solution.startup_cost + solution.reserve_cost +
                       solution.vi_cost;
  if (std::abs(parts - solution.objective) >
      1e-6 * std::max(1.0, std::abs(solution.objective)))
    throw BackendError("cost breakdown does not add up to the objective");

  // Nodal balance rebuilt from stored topology and net loads, independent of
  // the model's own rows. Tolerance is 1e-6 p.u. on the system base.
  const int T = problem.horizon;
  const int G = static_cast<int>(problem.gen_ids.size());
  const int K = static_cast<int>(problem.branch_ids.size());
  const int B = static_cast<int>(problem.bus_ids.size());
  const double bal_tol = 1e-6 * problem.base_mva;
  for (int n = 0; n < B; ++n) {
    for (int t = 0; t < T; ++t) {
      double inj = -problem.net_load_mw[n][t];
      for (int g = 0; g < G; ++g)
        if (problem.gen_bus[g] == problem.bus_ids[n]) inj += solution.p[g][t];
      for (int k = 0; k < K; ++k) {
        if (problem.branch_to[k] == problem.bus_ids[n]) inj += solution.flow[k][t];
        if (problem.branch_from[k] == problem.bus_ids[n]) inj -= solution.flow[k][t];
      }
      if (std::abs(inj) > bal_tol)
        throw BackendError("nodal balance violated at bus " +
                           std::to_string(problem.bus_ids[n]) + " hour " +
                           std::to_string(t) + " by " + std::to_string(inj) + " MW");
    }
  }

  // Frequency-security arithmetic, re-derived from H and pmax rather than
  // from the model's coefficient matrix.
  const double lim2pi = problem.cfg.rocof_lim_hz_s * 2.0 * kPi;
  const double f0 = problem.omega_s / (2.0 * kPi);
  if (problem.kind == ModelKind::ERC || problem.kind == ModelKind::VI_ERC) {
    for (int t = 0; t < T; ++t) {
      const double w = kind_has_vi(problem.kind) ? solution.vi_mws[t] : 0.0;
      for (int g = 0; g < G; ++g) {
        if (solution.u[g][t] != 1) continue;
        const double mach =
            machine_inertia(problem.gen_h[g], problem.gen_pmax[g], f0);
        const double cap =
            lim2pi * (solution.M[t] + 2.0 * w / problem.omega_s - mach);
        if (solution.p[g][t] > cap + 1e-5)
          throw BackendError("headroom constraint fails arithmetic re-check for " +
                             problem.gen_ids[g] + " hour " + std::to_string(t));
      }
    }
  }
  if (kind_has_locational(problem.kind)) {
    const int N = problem.n_retained;
    for (int t = 0; t < T; ++t) {
      for (int g = 0; g < G; ++g) {
        if (solution.u[g][t] != 1) continue;
        const double dm =
            machine_inertia(problem.gen_h[g], problem.gen_pmax[g], f0) / N;
        const double local = eval_pwl(problem.surfaces.local, solution.p[g][t],
                                      solution.m_avg[t], dm);
        const double nl = eval_pwl(problem.surfaces.non_local, solution.p[g][t],
                                   solution.m_avg[t], dm);
        if (local > problem.cfg.rocof_lim_hz_s + 1e-6 ||
            nl > problem.cfg.rocof_lim_hz_s + 1e-6)
          throw BackendError("locational RoCoF cap exceeded for " +
                             problem.gen_ids[g] + " hour " + std::to_string(t));
      }
    }
  }
}

InertiaSummary summarize_inertia(const GridCase& grid,
                                 const UcSolution& solution) {
  if (!solution.has_solution())
    throw ValidationError("no solution to summarize");
  if (grid.horizon() != solution.horizon)
    throw ValidationError("case horizon does not match the solution");

  std::unordered_map<std::string, const Generator*> by_id;
  for (const Generator& g : grid.generators) by_id[g.id] = &g;

  const int T = solution.horizon;
  const int G = static_cast<int>(solution.gen_ids.size());
  InertiaSummary out;
  out.synchronous_mws.assign(T, 0.0);
  out.aui_mws.assign(T, std::numeric_limits<double>::quiet_NaN());
  out.committed.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    for (int g = 0; g < G; ++g) {
      if (solution.u[g][t] != 1) continue;
      auto it = by_id.find(solution.gen_ids[g]);
      if (it == by_id.end())
        throw ValidationError("solution references unknown unit " +
                              solution.gen_ids[g]);
      out.synchronous_mws[t] += it->second->inertia_h * it->second->pmax_mw;
      ++out.committed[t];
    }
    if (out.committed[t] > 0)
      out.aui_mws[t] = out.synchronous_mws[t] / out.committed[t];
  }

  // Where the model carried its own inertia variable, it has to agree with
  // the commitment pattern: M_t in swing units times omega_s / 2 is the MWs
  // total.
  if (!solution.M.empty()) {
    const double ws = 2.0 * kPi * grid.f0_hz;
    for (int t = 0; t < T; ++t) {
      const double model_mws = solution.M[t] * ws / 2.0;
      if (std::abs(model_mws - out.synchronous_mws[t]) >
          1e-6 * std::max(1.0, out.synchronous_mws[t]))
        throw NumericsError("model inertia variable disagrees with commitment at hour " +
                            std::to_string(t));
    }
  }
  return out;
}

}  // namespace lfscuc
