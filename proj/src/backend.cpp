#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lfscuc/solver.hpp"

namespace lfscuc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Solver driver executed by the system python3. The model crosses the
// process boundary as CSR-form JSON with +-1e30 standing in for infinity
// (JSON has no inf literal); duals come back per original row regardless of
// how rows get split for linprog.
constexpr const char* kDriver = R"PY(
import json, sys, time, traceback, warnings

INF = 1e30

def conv(v):
    import numpy as np
    a = np.asarray(v, dtype=float)
    a[a >= INF] = np.inf
    a[a <= -INF] = -np.inf
    return a

def main():
    with open(sys.argv[1]) as f:
        req = json.load(f)

    import numpy as np
    from scipy import sparse
    from scipy import __version__ as scipy_version
    from scipy.optimize import milp, linprog, LinearConstraint, Bounds

    n = int(req["n"])
    c = np.asarray(req["obj"], dtype=float)
    lb, ub = conv(req["lb"]), conv(req["ub"])
    integ = np.asarray(req["integer"], dtype=float)
    rows = req["rows"]
    nrows = len(rows["start"]) - 1
    A = sparse.csr_matrix(
        (rows["value"], rows["index"], rows["start"]), shape=(nrows, n))
    rlo, rhi = conv(rows["lo"]), conv(rows["hi"])
    opts = dict(req.get("options", {}))
    mode = req.get("mode", "milp")

    resp = {"backend": "scipy-%s-highs" % scipy_version}
    t0 = time.monotonic()
    if mode == "lp":
        eq = np.where(np.isfinite(rlo) & (rlo == rhi))[0]
        hi_rows = np.where(np.isfinite(rhi) & (rlo != rhi))[0]
        lo_rows = np.where(np.isfinite(rlo) & (rlo != rhi))[0]
        parts = []
        if len(hi_rows):
            parts.append((A[hi_rows], rhi[hi_rows], hi_rows, 1.0))
        if len(lo_rows):
            parts.append((-A[lo_rows], -rlo[lo_rows], lo_rows, -1.0))
        A_ub = sparse.vstack([p[0] for p in parts], format="csr") if parts else None
        b_ub = np.concatenate([p[1] for p in parts]) if parts else None
        A_eq = A[eq] if len(eq) else None
        b_eq = rlo[eq] if len(eq) else None
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack([lb, ub]), method="highs",
                      options=opts)
        resp["status"] = int(res.status)
        resp["message"] = str(res.message)
        if res.x is not None:
            resp["x"] = [float(v) for v in res.x]
            resp["objective"] = float(res.fun)
            duals = np.zeros(nrows)
            if len(eq):
                duals[eq] = res.eqlin.marginals
            off = 0
            for _, _, idx, sign in parts:
                duals[idx] += sign * res.ineqlin.marginals[off:off + len(idx)]
                off += len(idx)
            resp["duals"] = [float(v) for v in duals]
    else:
        cons = [LinearConstraint(A, rlo, rhi)] if nrows else []
        res = milp(c, constraints=cons, integrality=integ,
                   bounds=Bounds(lb, ub), options=opts)
        resp["status"] = int(res.status)
        resp["message"] = str(res.message)
        if res.x is not None:
            resp["x"] = [float(v) for v in res.x]
            resp["objective"] = float(res.fun)
            gap = getattr(res, "mip_gap", None)
            if gap is not None:
                resp["mip_gap"] = float(gap)
    resp["solve_time"] = time.monotonic() - t0
    with open(sys.argv[2], "w") as f:
        json.dump(resp, f)

if __name__ == "__main__":
    warnings.filterwarnings("ignore")
    try:
        main()
    except Exception:
        try:
            with open(sys.argv[2], "w") as f:
                json.dump({"status": -1, "message": traceback.format_exc()}, f)
        except Exception:
            pass
)PY";

class ScipyHighsBackend : public SolverBackend {
 public:
  std::string identity() const override { return "scipy-highs"; }
  SolveResult solve(const LinearModel& model,
                    const SolveOptions& options) const override;

 private:
  static fs::path work_dir();
  static fs::path driver_path();
};

fs::path ScipyHighsBackend::work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("lfscuc-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path ScipyHighsBackend::driver_path() {
  static std::once_flag once;
  static fs::path p;
  std::call_once(once, [] {
    p = work_dir() / "solve_driver.py";
    write_file(p.string(), kDriver);
  });
  return p;
}

json encode_request(const LinearModel& m, const SolveOptions& opt) {
  constexpr double kJsonInf = 1e30;
  auto clip = [&](double v) {
    if (v == kInf) return kJsonInf;
    if (v == -kInf) return -kJsonInf;
    return v;
  };

  json req;
  req["n"] = m.n_cols();
  std::vector<double> obj, lb, ub;
  std::vector<int> integer;
  for (const auto& c : m.cols()) {
    obj.push_back(c.obj);
    lb.push_back(clip(c.lo));
    ub.push_back(clip(c.hi));
    integer.push_back(c.integer && !opt.want_duals ? 1 : 0);
  }
  req["obj"] = obj;
  req["lb"] = lb;
  req["ub"] = ub;
  req["integer"] = integer;

  std::vector<int> start = {0}, index;
  std::vector<double> value, rlo, rhi;
  for (const auto& r : m.rows()) {
    for (const auto& t : r.terms) {
      index.push_back(t.col);
      value.push_back(t.coeff);
    }
    start.push_back(static_cast<int>(index.size()));
    rlo.push_back(clip(r.lo));
    rhi.push_back(clip(r.hi));
  }
  req["rows"] = {{"start", start}, {"index", index}, {"value", value},
                 {"lo", rlo},      {"hi", rhi}};

  req["mode"] = opt.want_duals ? "lp" : "milp";
  req["options"] = {
      {"time_limit", opt.time_limit_s},
      {"presolve", true},
      {"random_seed", opt.seed},
      {"threads", opt.threads},
      {"primal_feasibility_tolerance", 1e-8},
      {"dual_feasibility_tolerance", 1e-8},
  };
  if (!opt.want_duals) req["options"]["mip_rel_gap"] = opt.mip_gap;
  return req;
}

std::string tail_of(const std::string& s, std::size_t n = 2000) {
  return s.size() <= n ? s : "..." + s.substr(s.size() - n);
}

}  // namespace

SolveResult ScipyHighsBackend::solve(const LinearModel& model,
                                     const SolveOptions& options) const {
  if (options.mip_gap < 0 || options.time_limit_s <= 0 || options.threads < 1)
    throw ValidationError("solver options out of range");

  static std::atomic<int> counter{0};
  int id = counter++;
  fs::path req_p = work_dir() / ("req-" + std::to_string(id) + ".json");
  fs::path resp_p = work_dir() / ("resp-" + std::to_string(id) + ".json");
  fs::path err_p = work_dir() / ("err-" + std::to_string(id) + ".txt");

  write_file(req_p.string(), encode_request(model, options).dump());

  std::string cmd = "python3 '" + driver_path().string() + "' '" +
                    req_p.string() + "' '" + resp_p.string() + "' 2> '" +
                    err_p.string() + "'";
  int rc = std::system(cmd.c_str());

  auto cleanup = [&] {
    std::error_code ec;
    fs::remove(req_p, ec);
    fs::remove(resp_p, ec);
    fs::remove(err_p, ec);
  };

  std::string stderr_text;
  try {
    stderr_text = read_file(err_p.string());
  } catch (const std::exception&) {
  }

  if (rc == -1 || !WIFEXITED(rc) || WEXITSTATUS(rc) != 0 ||
      !fs::exists(resp_p)) {
    cleanup();
    std::ostringstream msg;
    msg << identity() << ": python3 driver failed (system rc " << rc << ")";
    if (!stderr_text.empty()) msg << "\n" << tail_of(stderr_text);
    throw BackendError(msg.str());
  }

  json resp;
  try {
    resp = json::parse(read_file(resp_p.string()));
  } catch (const std::exception& e) {
    cleanup();
    throw BackendError(identity() +
                       std::string(": unreadable driver response: ") +
                       e.what());
  }
  cleanup();

  int status = resp.value("status", -1);
  std::string message = resp.value("message", "");
  if (status == -1)
    throw BackendError(identity() + ": driver exception\n" + tail_of(message));

  SolveResult out;
  out.backend = resp.value("backend", identity());
  out.raw_status = "status " + std::to_string(status) + ": " + message;
  out.solve_time_s = resp.value("solve_time", 0.0);
  switch (status) {
    case 0: out.status = SolveStatus::Optimal; break;
    case 1: out.status = SolveStatus::LimitReached; break;
    case 2: out.status = SolveStatus::Infeasible; break;
    case 3: out.status = SolveStatus::Unbounded; break;
    default:
      throw BackendError(identity() + ": unexpected solver status " +
                         std::to_string(status) + ": " + tail_of(message));
  }
  if (resp.contains("x")) {
    out.x = resp["x"].get<std::vector<double>>();
    if (static_cast<int>(out.x.size()) != model.n_cols())
      throw BackendError(identity() + ": solution dimension mismatch");
    out.objective = resp.value("objective", 0.0);
  }
  if (resp.contains("duals"))
    out.duals = resp["duals"].get<std::vector<double>>();
  if (resp.contains("mip_gap")) out.mip_gap = resp["mip_gap"].get<double>();
  return out;
}

std::unique_ptr<SolverBackend> make_backend(const std::string& name) {
  if (name.empty() || name == "scipy-highs" || name == "highs")
    return std::make_unique<ScipyHighsBackend>();
  throw ValidationError("unknown solver backend '" + name +
                        "' (known: scipy-highs)");
}

std::unique_ptr<SolverBackend> backend_from_env() {
  const char* v = std::getenv("SCUC_BACKEND");
  return make_backend(v ? v : "");
}

}  // namespace lfscuc
