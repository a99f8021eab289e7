#include "lfscuc/pwl.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lfscuc {

using json = nlohmann::json;

void FitProblem::validate() const {
  if (max_segments < 2)
    throw ValidationError("a max-affine surface needs at least 2 segments");
  if (samples.size() < 4)
    throw ValidationError("too few samples to determine a plane");
  if (static_cast<int>(samples.size()) < max_segments)
    throw ValidationError("fewer samples than segments");
  double lo = samples[0].rocof, hi = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.rocof);
    hi = std::max(hi, s.rocof);
    for (double v : {s.power_loss, s.inertia, s.inertia_loss, s.rocof})
      if (!std::isfinite(v))
        throw ValidationError("non-finite sample in fit problem");
  }
  if (!(big_m > hi - lo))
    throw ValidationError("big-M constant does not cover the sample spread");
}

std::vector<double> AxisRange::points() const {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * i / (count - 1);
  return out;
}

void EvaluationGrid::validate() const {
  for (const AxisRange* ax : {&power_loss, &inertia, &inertia_loss}) {
    if (ax->count < 2)
      throw ValidationError("evaluation grid needs >= 2 points per axis");
    if (!(ax->lo < ax->hi))
      throw ValidationError("evaluation grid axis needs lo < hi");
  }
  if (!(inertia.lo > inertia_loss.hi))
    throw ValidationError(
        "grid admits inertia collapse: the lowest average inertia must "
        "exceed the largest inertia loss");
}

EvaluationGrid default_grid(const GridCase& grid) {
  double pmax = 0.0, m_total = 0.0, m_unit = 0.0;
  for (const auto& g : grid.generators) {
    pmax = std::max(pmax, g.pmax_mw);
    double mi = machine_inertia(g.inertia_h, g.pmax_mw, grid.f0_hz);
    m_total += mi;
    m_unit = std::max(m_unit, mi);
  }
  const int n = static_cast<int>(grid.generator_buses().size());
  const double m_avg = m_total / n;

  EvaluationGrid eg;
  // The box brackets the states the locational models can actually certify.
  // Contingency size is a dispatch, so it never exceeds the largest unit's
  // rating. The inertia floor sits below the least-inertia committable fleet
  // but above the regime where every single-unit trip violates the RoCoF
  // limit outright: sampling that unreachable regime feeds the fit a steep
  // cliff whose misfit the conservative lift then charges against reachable
  // schedules. The 1.2 headroom above the all-on average covers virtual
  // inertia purchases.
  eg.power_loss = {0.2 * pmax, 1.0 * pmax, 3};
  eg.inertia = {0.45 * m_avg, 1.2 * m_avg, 3};
  eg.inertia_loss = {0.0, m_unit / n, 3};
  eg.validate();
  return eg;
}

FitProblem sample_surface(const ModalDecomposition& md, int bus, int event_bus,
                          double t, double dt, double gamma,
                          const EvaluationGrid& grid, int max_segments) {
  grid.validate();
  FitProblem pb;
  pb.max_segments = max_segments;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double dp : grid.power_loss.points())
    for (double m : grid.inertia.points())
      for (double dm : grid.inertia_loss.points()) {
        double r;
        try {
          r = rocof_constraint_lhs(md, m, dm, dp, bus, event_bus, t, dt, gamma);
        } catch (const NumericsError& e) {
          std::ostringstream msg;
          msg << "surface sampling failed at grid point (power_loss=" << dp
              << ", inertia=" << m << ", inertia_loss=" << dm
              << "): " << e.what();
          throw NumericsError(msg.str());
        }
        pb.samples.push_back({dp, m, dm, r});
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
  pb.big_m = 10.0 * (hi - lo) + 1.0;
  pb.validate();
  return pb;
}

namespace {

double seg_value(const PwlSegment& s, const FitSample& p) {
  return s.a * p.power_loss + s.b * p.inertia + s.c * p.inertia_loss + s.d;
}

// Minimum-norm least squares over one cell. Columns are scaled to unit
// magnitude before the solve so the rank threshold is meaningful across the
// mixed units, and near-degenerate cells (samples almost collinear in some
// coordinate) fall back to the minimum-norm plane instead of an arbitrarily
// steep one. In a max-affine model a single runaway plane dominates every
// sample and wrecks the whole fit, so this guard carries the alternation.
PwlSegment ls_fit(const std::vector<FitSample>& samples,
                  const std::vector<int>& rows) {
  Eigen::MatrixXd X(rows.size(), 4);
  Eigen::VectorXd y(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FitSample& s = samples[rows[r]];
    X(r, 0) = s.power_loss;
    X(r, 1) = s.inertia;
    X(r, 2) = s.inertia_loss;
    X(r, 3) = 1.0;
    y(r) = s.rocof;
  }
  Eigen::Vector4d scale;
  for (int c = 0; c < 4; ++c) {
    double m = X.col(c).cwiseAbs().maxCoeff();
    scale(c) = m > 0.0 ? m : 1.0;
    X.col(c) /= scale(c);
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  cod.setThreshold(1e-9);
  Eigen::Vector4d w = cod.solve(y).cwiseQuotient(scale);
  return {w(0), w(1), w(2), w(3)};
}

struct Evaluation {
  double objective = 0.0;
  std::vector<int> argmax;
};

Evaluation evaluate(const std::vector<PwlSegment>& segs,
                    const std::vector<FitSample>& samples) {
  Evaluation ev;
  ev.argmax.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    int who = 0;
    for (std::size_t v = 0; v < segs.size(); ++v) {
      double val = seg_value(segs[v], samples[i]);
      if (val > best) {
        best = val;
        who = static_cast<int>(v);
      }
    }
    double e = best - samples[i].rocof;
    ev.objective += e * e;
    ev.argmax[i] = who;
  }
  return ev;
}

std::vector<std::vector<int>> cells_of(const std::vector<int>& assign, int v) {
  std::vector<std::vector<int>> cells(v);
  for (std::size_t i = 0; i < assign.size(); ++i)
    cells[assign[i]].push_back(static_cast<int>(i));
  return cells;
}

// Refit all segments from an assignment. Empty cells inherit the plane of
// the first non-empty one: duplicated planes never change the max, so they
// are the harmless representation of "fewer segments were needed".
std::vector<PwlSegment> refit(const std::vector<FitSample>& samples,
                              const std::vector<int>& assign, int v) {
  auto cells = cells_of(assign, v);
  std::vector<PwlSegment> segs(v);
  int first = -1;
  for (int k = 0; k < v; ++k)
    if (!cells[k].empty()) {
      segs[k] = ls_fit(samples, cells[k]);
      if (first < 0) first = k;
    }
  for (int k = 0; k < v; ++k)
    if (cells[k].empty()) segs[k] = segs[first];
  return segs;
}

bool has_starved_cell(const std::vector<int>& assign, int v) {
  std::vector<int> size(v, 0);
  for (int a : assign) ++size[a];
  return std::any_of(size.begin(), size.end(),
                     [](int s) { return s >= 1 && s <= 3; });
}

// A segment needs four supporting samples before its plane means anything.
// Cells below that threshold are restarted in place: they steal the worst
// fitted samples from cells that can spare them, so the plane re-grows where
// the residual lives instead of the whole run being thrown away.
void reseed_thin_cells(const std::vector<PwlSegment>& segs,
                       const std::vector<FitSample>& samples,
                       std::vector<int>& assign, int v, int need) {
  std::vector<int> size(v, 0);
  for (int a : assign) ++size[a];
  for (int k = 0; k < v; ++k) {
    while (size[k] < need) {
      int worst = -1;
      double worst_err = -1.0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (assign[i] == k || size[assign[i]] <= need) continue;
        double e = std::abs(seg_value(segs[assign[i]], samples[i]) -
                            samples[i].rocof);
        if (e > worst_err) {
          worst = static_cast<int>(i);
          worst_err = e;
        }
      }
      if (worst < 0) break;  // no donor left; the cell stays thin
      --size[assign[worst]];
      assign[worst] = k;
      ++size[k];
    }
  }
}

struct Run {
  std::vector<PwlSegment> segs;
  std::vector<int> assign;  ///< argmax assignment of the accepted state
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

// Alternate refit / reassign from a given starting assignment. Starved cells
// are tolerated while the descent is still moving (they frequently grow into
// real segments on their own); only when the descent stalls in a starved
// state is the thin cell restarted with stolen samples, a few times before
// giving up. The returned state is the best starve-free iterate seen.
//
// Max-affine alternation has no monotonicity guarantee: one thin cell can fit
// a plane that soars above every sample, and under the max() a single such
// plane takes over the whole partition. When the objective jumps by more than
// 2x we rebuild the plane set one cell at a time on top of the previous
// iterate, keeping only swaps that do not increase the objective. Mild
// non-monotone wiggles pass through untouched.
Run descend(const FitProblem& pb, std::vector<int> assign, int max_iterations,
            bool identifiable) {
  const int v = pb.max_segments;
  Run run;
  double cur = std::numeric_limits<double>::infinity();
  std::vector<PwlSegment> prev;
  int reseeds = 0;
  for (int iter = 0; iter < max_iterations; ++iter) {
    auto segs = refit(pb.samples, assign, v);
    auto ev = evaluate(segs, pb.samples);
    if (std::isfinite(cur) && ev.objective > 2.0 * cur && !prev.empty()) {
      double obj = cur;
      auto kept = prev;
      for (int k = 0; k < v; ++k) {
        auto trial = kept;
        trial[k] = segs[k];
        auto te = evaluate(trial, pb.samples);
        if (te.objective <= obj) {
          kept = std::move(trial);
          obj = te.objective;
        }
      }
      segs = std::move(kept);
      ev = evaluate(segs, pb.samples);
    }
    bool starved = identifiable && has_starved_cell(ev.argmax, v);
    bool record = !std::isfinite(run.objective) ||
                  ev.objective <
                      run.objective - 1e-14 * std::max(1.0, run.objective);
    if (!starved && record) {
      run.segs = segs;
      run.assign = ev.argmax;
      run.objective = ev.objective;
      run.trace.push_back(ev.objective);
    }
    if (std::isfinite(cur) &&
        ev.objective >= cur - 1e-14 * std::max(1.0, cur)) {
      if (!starved || reseeds >= 5) break;
      ++reseeds;
      assign = ev.argmax;
      reseed_thin_cells(segs, pb.samples, assign, v, 4);
      cur = std::numeric_limits<double>::infinity();
      prev.clear();
      continue;
    }
    cur = ev.objective;
    prev = segs;
    assign = ev.argmax;
  }
  return run;
}

Run run_alternation(const FitProblem& pb, std::uint64_t seed,
                    int max_iterations, bool identifiable) {
  const int n = static_cast<int>(pb.samples.size());
  const int v = pb.max_segments;
  std::mt19937_64 rng(seed);

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> assign(n);
  for (int i = 0; i < n; ++i)
    assign[perm[i]] = i < v ? i : static_cast<int>(rng() % v);

  return descend(pb, std::move(assign), max_iterations, identifiable);
}

// Deterministic structured starts. The target surfaces are linear in the
// power-loss coordinate, so good segmentations split along the inertia
// coordinates; contiguous bands of the samples sorted by such a key put each
// plane on a coherent patch from iteration one, which random assignment
// almost never does once v exceeds the number of basins the alternation can
// discover on its own.
std::vector<std::vector<int>> banded_seeds(const FitProblem& pb) {
  const int n = static_cast<int>(pb.samples.size());
  const int v = pb.max_segments;
  std::vector<std::vector<int>> seeds;
  auto push_banded = [&](auto key) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return key(pb.samples[a]) < key(pb.samples[b]);
    });
    std::vector<int> assign(n);
    for (int r = 0; r < n; ++r)
      assign[order[r]] = std::min(v - 1, r * v / n);
    seeds.push_back(std::move(assign));
  };
  push_banded([](const FitSample& s) { return s.inertia; });
  push_banded([](const FitSample& s) { return s.inertia - s.inertia_loss; });
  push_banded([](const FitSample& s) { return s.inertia_loss; });
  return seeds;
}

// Local search around a converged run. Relocation moves (one sample to
// another segment) run everywhere; swap moves (exchange two samples across
// segments) only on small problems where they stay cheap. Each candidate is
// descended to its own fixed point before comparison, so a move that looks
// worse at first but opens a better basin still gets credit.
void polish(const FitProblem& pb, Run& run, int max_iterations,
            bool identifiable) {
  const int n = static_cast<int>(pb.samples.size());
  const int v = pb.max_segments;
  auto try_assign = [&](std::vector<int> trial) {
    Run cand = descend(pb, std::move(trial), max_iterations, identifiable);
    if (!cand.trace.empty() &&
        cand.objective <
            run.objective - 1e-14 * std::max(1.0, run.objective)) {
      run.segs = std::move(cand.segs);
      run.assign = std::move(cand.assign);
      run.objective = cand.objective;
      run.trace.push_back(cand.objective);
      return true;
    }
    return false;
  };

  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      for (int w = 0; w < v; ++w) {
        if (run.assign[i] == w) continue;
        std::vector<int> trial = run.assign;
        trial[i] = w;
        improved |= try_assign(std::move(trial));
      }
    }
    if (!improved && n <= 32) {
      for (int i = 0; i < n && !improved; ++i) {
        for (int j = i + 1; j < n && !improved; ++j) {
          if (run.assign[i] == run.assign[j]) continue;
          std::vector<int> trial = run.assign;
          std::swap(trial[i], trial[j]);
          improved = try_assign(std::move(trial));
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace

PwlSurface fit_pwl(const FitProblem& problem, const FitOptions& opt) {
  problem.validate();
  const int n = static_cast<int>(problem.samples.size());
  const int v = problem.max_segments;
  if (opt.restarts < 1) throw ValidationError("need at least one restart");

  // A plane is only trustworthy with >= 4 supporting samples. When the
  // problem is large enough to demand that of every segment, starved cells
  // are restarted in place during descent and only starve-free states are
  // accepted; tiny problems (like enumeration benchmarks) run in a relaxed
  // mode where minimum-norm fits carry them.
  const bool identifiable = n >= 4 * v;
  int restarts = opt.restarts;
  if (n <= 16) restarts = std::max(restarts, 256);
  else if (n <= 64) restarts = std::max(restarts, 96);

  // Hierarchical floor: a surface with v segments must do at least as well as
  // one with v - 1, but random restarts rarely park a cell exactly empty to
  // realise that. Fit the coarser problem first and carry its solution in as
  // both a floor candidate and a warm start.
  std::optional<Run> coarse;
  if (v >= 3) {
    FitProblem sub = problem;
    sub.max_segments = v - 1;
    try {
      auto cs = fit_pwl(sub, opt);
      Run r;
      r.segs = cs.segments;
      auto ev = evaluate(r.segs, problem.samples);
      r.assign = ev.argmax;
      r.objective = ev.objective;
      r.trace = cs.report.objective_trace;
      if (r.trace.empty() || r.trace.back() != r.objective)
        r.trace.push_back(r.objective);
      coarse = std::move(r);
    } catch (const NumericsError&) {
      // The coarser fit can be under-determined on its own terms; random
      // restarts below still carry the day.
    }
  }

  std::vector<Run> kept;
  for (auto& seed_assign : banded_seeds(problem)) {
    Run run = descend(problem, std::move(seed_assign), opt.max_iterations,
                      identifiable);
    if (!run.trace.empty()) kept.push_back(std::move(run));
  }
  for (int r = 0; r < restarts; ++r) {
    Run run =
        run_alternation(problem, opt.seed + r, opt.max_iterations, identifiable);
    if (run.trace.empty()) continue;
    kept.push_back(std::move(run));
  }
  if (coarse) {
    Run seeded =
        descend(problem, coarse->assign, opt.max_iterations, identifiable);
    if (!seeded.trace.empty()) kept.push_back(std::move(seeded));

    // Grow upward as well: split one coarse cell at its median along each
    // coordinate and let the descent rebalance. Splitting leaves every other
    // cell intact, so these starts explore v-segment structure without
    // abandoning what the (v-1)-segment fit already learned; random restarts
    // alone almost never reconstruct that.
    auto cells = cells_of(coarse->assign, v - 1);
    double (*keys[])(const FitSample&) = {
        [](const FitSample& s) { return s.power_loss; },
        [](const FitSample& s) { return s.inertia; },
        [](const FitSample& s) { return s.inertia_loss; },
        [](const FitSample& s) { return s.inertia - s.inertia_loss; }};
    for (const auto& cell : cells) {
      if (static_cast<int>(cell.size()) < 8) continue;
      for (auto key : keys) {
        std::vector<int> order = cell;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
          return key(problem.samples[a]) < key(problem.samples[b]);
        });
        std::vector<int> split = coarse->assign;
        for (std::size_t r = order.size() / 2; r < order.size(); ++r)
          split[order[r]] = v - 1;
        Run run = descend(problem, std::move(split), opt.max_iterations,
                          identifiable);
        if (!run.trace.empty()) kept.push_back(std::move(run));
      }
    }
  }
  if (kept.empty() && !coarse)
    throw NumericsError(
        "piecewise fit failed: every restart ended with under-determined "
        "segments; lower the segment count or supply more samples");
  std::stable_sort(kept.begin(), kept.end(), [](const Run& a, const Run& b) {
    return a.objective < b.objective;
  });

  Run best = kept.empty() ? *coarse : kept.front();
  if (n <= 200 && v <= 4) {
    // Polish the few best distinct basins, not just the winner: restarts that
    // converged a hair worse often sit one relocation away from the optimum.
    int polished_count = 0;
    double last = -1.0;
    for (auto& run : kept) {
      if (polished_count >= 8) break;
      if (run.objective <= last * (1.0 + 1e-12)) continue;
      last = run.objective;
      ++polished_count;
      polish(problem, run, opt.max_iterations, identifiable);
      if (run.objective < best.objective) best = run;
    }
  }
  // The coarse solution is always admissible (its extra cells sit empty), so
  // the returned objective is monotone in the segment budget.
  if (coarse && coarse->objective < best.objective) best = *coarse;

  PwlSurface out;
  out.segments = best.segs;
  // Pad to exactly max_segments so downstream consumers (constraint row
  // counts, serialized files) see a fixed-width surface; duplicates are
  // inert under the max.
  while (static_cast<int>(out.segments.size()) < v)
    out.segments.push_back(out.segments.front());
  out.report.rmse = std::sqrt(best.objective / n);
  out.report.objective_trace = best.trace;
  out.report.restarts = restarts;
  double under = 0.0;
  for (const auto& s : problem.samples) {
    double fit = eval_pwl(out, s.power_loss, s.inertia, s.inertia_loss);
    under = std::max(under, s.rocof - fit);
  }
  out.report.max_under_estimate = under;
  return out;
}

PwlSurface make_conservative(PwlSurface surface, const FitProblem& problem) {
  if (surface.segments.empty())
    throw ValidationError("cannot shift an empty surface");
  // Lift only the segments that actually under-cover, each by the worst miss
  // inside its own argmax cell, iterated to a fixed point (a lifted plane can
  // capture neighbouring samples, so one pass is not always enough). A single
  // global shift would smear the worst cell's misfit over every segment and
  // inflate the surrogate at well-fitted operating points, where the SCUC
  // models need it tight; lifting per segment keeps the guarantee (surrogate
  // >= every training sample) while charging the slack only where the fit
  // earned it.
  std::vector<double> lift(surface.segments.size(), 0.0);
  for (int round = 0; round < 200; ++round) {
    std::vector<double> need(surface.segments.size(), 0.0);
    for (const auto& s : problem.samples) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int v = 0; v < static_cast<int>(surface.segments.size()); ++v) {
        double val = seg_value(surface.segments[v],
                               {s.power_loss, s.inertia, s.inertia_loss, 0.0});
        if (val > best) {
          best = val;
          arg = v;
        }
      }
      if (best < s.rocof) need[arg] = std::max(need[arg], s.rocof - best);
    }
    bool moved = false;
    for (int v = 0; v < static_cast<int>(surface.segments.size()); ++v) {
      if (need[v] <= 0.0) continue;
      surface.segments[v].d += need[v];
      lift[v] += need[v];
      moved = true;
    }
    if (!moved) break;
  }
  surface.report.conservative_shift +=
      *std::max_element(lift.begin(), lift.end());
  for (const auto& s : problem.samples)
    if (eval_pwl(surface, s.power_loss, s.inertia, s.inertia_loss) < s.rocof)
      throw NumericsError("conservative shift failed to cover every sample");
  surface.report.max_under_estimate = 0.0;
  return surface;
}

double eval_pwl(const PwlSurface& surface, double power_loss, double inertia,
                double inertia_loss) {
  if (surface.segments.empty())
    throw ValidationError("surface has no segments");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : surface.segments)
    best = std::max(best,
                    s.a * power_loss + s.b * inertia + s.c * inertia_loss + s.d);
  return best;
}

std::string surface_to_json(const PwlSurface& surface) {
  json j;
  j["segments"] = json::array();
  for (const auto& s : surface.segments)
    j["segments"].push_back({s.a, s.b, s.c, s.d});
  j["context"] = {{"event_bus", surface.context.event_bus},
                  {"target_bus", surface.context.target_bus},
                  {"bus_class", surface.context.bus_class},
                  {"t", surface.context.t},
                  {"dt", surface.context.dt},
                  {"gamma", surface.context.gamma}};
  j["fit_report"] = {{"rmse", surface.report.rmse},
                     {"max_under_estimate", surface.report.max_under_estimate},
                     {"conservative_shift", surface.report.conservative_shift},
                     {"restarts", surface.report.restarts},
                     {"objective_trace", surface.report.objective_trace}};
  return j.dump(2);
}

PwlSurface surface_from_json(const std::string& text) {
  PwlSurface out;
  try {
    json j = json::parse(text);
    for (const auto& row : j.at("segments")) {
      if (!row.is_array() || row.size() != 4)
        throw ValidationError("surface segment must be [a, b, c, d]");
      out.segments.push_back({row[0].get<double>(), row[1].get<double>(),
                              row[2].get<double>(), row[3].get<double>()});
    }
    const auto& c = j.at("context");
    out.context.event_bus = c.at("event_bus").get<int>();
    out.context.target_bus = c.at("target_bus").get<int>();
    out.context.bus_class = c.at("bus_class").get<std::string>();
    out.context.t = c.at("t").get<double>();
    out.context.dt = c.at("dt").get<double>();
    out.context.gamma = c.at("gamma").get<double>();
    if (j.contains("fit_report")) {
      const auto& r = j["fit_report"];
      out.report.rmse = r.value("rmse", 0.0);
      out.report.max_under_estimate = r.value("max_under_estimate", 0.0);
      out.report.conservative_shift = r.value("conservative_shift", 0.0);
      out.report.restarts = r.value("restarts", 0);
      if (r.contains("objective_trace"))
        out.report.objective_trace =
            r["objective_trace"].get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad surface file: ") + e.what());
  }
  if (out.segments.empty())
    throw ValidationError("surface file has no segments");
  return out;
}

}  // namespace lfscuc
