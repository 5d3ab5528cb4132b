"""Batch experiment runner.

    thinlayer run CONFIG [--output DIR] [--seed N] [--threads N]
    thinlayer oracle-compare CONFIG [...]

Exit codes: 0 success, 2 invalid configuration (nothing computed),
3 numerical failure. Every run writes ``manifest.json`` first with status
INCOMPLETE and rewrites it at the end.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import assemble_limit, assemble_twophase, volume_forms
from .asymptotics import (
    aligned_l2_distance,
    build_report,
    default_eps_grid,
    eigenspace_extremes,
    fiber_regression,
    interior_restriction,
    nonconcentration_check,
    q_closed_form,
    ratio_stable,
    subspace_distance,
)
from .config import RunConfig, load_config, resolved_text
from .eigensolve import CLUSTER_RTOL, DENSE_LIMIT, solve_pencil
from .errors import ConfigError, GeometryError, MeshError, ProfileError, ThinLayerError
from .geometry.curves import Disk, Interval, make_spec
from .geometry.mesh import INTERIOR, build_mesh
from .oracles import (
    IntervalLimitMode,
    disk_limit_spectrum,
    disk_trace_ratio,
    disk_twophase_spectrum,
    interval_limit_spectrum,
    interval_twophase_spectrum,
)
from .oracles.disk import values as mode_values
from .optimizer import (
    LimitEvaluator,
    continuity_experiment,
    minimize_composition,
    minimize_lambda,
)
from .profiles import RobinCoefficient, make_profile, robin_coefficient

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
_VALIDATION = (ConfigError, ProfileError, GeometryError, MeshError)

SWEEP_HEADER = ["epsilon", "j", "lambda_eps", "lambda_limit", "quotient", "Q_min", "Q_max"]
SPECTRUM_HEADER = ["j", "lambda", "cluster_id", "residual"]


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


class Run:
    """State of one experiment: parsed config, geometry, outputs."""

    def __init__(self, cfg: RunConfig, outdir: Path, threads: int):
        self.cfg = cfg
        self.outdir = outdir
        self.threads = threads
        g = cfg["geometry"]
        kind = g["kind"].lower()
        params = {
            "interval": {"L": g["L"]},
            "disk": {"R": g["R"]},
            "ellipse": {"a": g["a"], "b": g["b"]},
            "polar": {"cos_coeffs": g["cos_coeffs"], "sin_coeffs": g["sin_coeffs"]},
        }[kind]
        self.spec = make_spec(kind, **params)
        p = cfg["profile"]
        self.profile = make_profile(p["representation"], p["values"], p["cos_coeffs"], p["sin_coeffs"])
        self.beta = cfg["physics"]["beta"]
        self.resolution = g["resolution"]
        self.n_t = g["n_t"]
        self.seed = cfg["solver"]["seed"]
        self.files = {}
        self.summary = []
        self.verdicts = {}
        self.used = {
            "dense_limit": DENSE_LIMIT,
            "cluster_rtol": CLUSTER_RTOL,
        }

    # helpers -------------------------------------------------------------

    def solve_kw(self):
        s = self.cfg["solver"]
        return {"tol": s["tol"], "seed": self.seed, "method": s["method"],
                "maxiter": s["maxiter"] or None}

    def robin(self):
        override = self.cfg["physics"]["robin_override"]
        if override is not None:
            return RobinCoefficient.constant(override)
        return robin_coefficient(self.profile, self.beta)

    def limit_solve(self, k, resolution=None):
        mesh = build_mesh(self.spec, self.profile, 0.0, resolution or self.resolution)
        pencil = assemble_limit(mesh, self.robin())
        return mesh, pencil, solve_pencil(pencil, k, **self.solve_kw())

    def twophase_solve(self, eps, k, resolution=None):
        mesh = build_mesh(self.spec, self.profile, eps, resolution or self.resolution, self.n_t)
        pencil = assemble_twophase(mesh, eps, self.beta)
        return mesh, pencil, solve_pencil(pencil, k, **self.solve_kw())

    def table(self, name, header, rows):
        self.files[name] = (list(header), [[fmt(x) for x in r] for r in rows])

    def spectrum_rows(self, spec):
        rows = []
        for ci, cl in enumerate(spec.clusters, start=1):
            for i in cl:
                rows.append([i + 1, spec.eigenvalues[i], ci, spec.residuals[i]])
        return rows

    def interval_ends(self):
        h0, hL = (float(x) for x in self.profile(np.array([0.0, 1.0])))
        return h0, hL

    def eps_grid(self):
        sw = self.cfg["sweep"]
        grid = np.array(sw["eps_grid"]) if sw["eps_grid"] else default_eps_grid(self.profile.sup, sw["n_eps"])
        self.used["eps_grid"] = [float(e) for e in grid]
        return grid

    def pmap(self, f, items):
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(f, items))
        return [f(x) for x in items]

    # experiments ---------------------------------------------------------

    def limit_solve_exp(self):
        _, _, spec = self.limit_solve(self.cfg["solver"]["k"])
        self.table("spectrum.csv", SPECTRUM_HEADER, self.spectrum_rows(spec))
        self.summary.append(f"limit spectrum, {len(spec)} eigenvalues")
        self.summary += [f"  lambda_{i + 1} = {fmt(v)}" for i, v in enumerate(spec.eigenvalues)]

    def twophase_solve_exp(self):
        eps = self.cfg["physics"]["eps"]
        mesh, _, spec = self.twophase_solve(eps, self.cfg["solver"]["k"])
        self.table("spectrum.csv", SPECTRUM_HEADER, self.spectrum_rows(spec))
        layer, ratio = nonconcentration_check(spec.eigenvectors[:, 0], mesh)
        self.summary.append(f"two-phase spectrum at eps = {fmt(eps)}, {len(spec)} eigenvalues")
        self.summary += [f"  lambda_{i + 1} = {fmt(v)}" for i, v in enumerate(spec.eigenvalues)]
        self.summary.append(f"  ground state layer mass {fmt(layer)} (ratio to eps {fmt(ratio)})")

    def _sweep_fem(self, grid, js):
        k = max(js)
        mesh0, _, lim = self.limit_solve(k + 4)
        q_range, lam_lim = {}, {}
        for j in js:
            cl = lim.cluster_of(j - 1)
            qmin, qmax, _ = eigenspace_extremes(
                lim.eigenvectors[:, cl], self.profile, lim.eigenvalues[j - 1], mesh0, self.beta
            )
            q_range[j] = (qmin, qmax, [c + 1 for c in cl])
            lam_lim[j] = lim.eigenvalues[j - 1]
        sols = self.pmap(lambda e: self.twophase_solve(float(e), k), grid)
        lam_eps = {j: [s[2].eigenvalues[j - 1] for s in sols] for j in js}
        return lam_lim, lam_eps, q_range, (mesh0, lim, sols)

    def _sweep_oracle(self, grid, js):
        k = max(js)
        if isinstance(self.spec, Interval):
            L = self.spec.L
            h0, hL = self.interval_ends()
            b0, bL = self.beta / (1 + self.beta * h0), self.beta / (1 + self.beta * hL)
            lim = interval_limit_spectrum(L, b0, bL, k)
            q_range, lam_lim = {}, {}
            for j in js:
                mode = IntervalLimitMode(L, b0, bL, lim[j - 1])
                v0, vL = mode.traces()
                c = [q_closed_form(hh, self.beta, lim[j - 1], 0.0, 1.0) for hh in (h0, hL)]
                q = (c[0] * v0 * v0 + c[1] * vL * vL) / mode.norm_sq()
                q_range[j] = (q, q, [j])
                lam_lim[j] = lim[j - 1]
            tps = self.pmap(lambda e: interval_twophase_spectrum(L, float(e), h0, hL, self.beta, k), grid)
            lam_eps = {j: [t[j - 1] for t in tps] for j in js}
            return lam_lim, lam_eps, q_range, None
        o = self.cfg["oracle"]
        R, h = self.spec.R, float(self.profile.values[0])
        b = self.beta / (1 + self.beta * h)
        modes = disk_limit_spectrum(R, b, o["m_max"], o["k_per_m"])
        if len(modes) < k:
            raise ConfigError("raise [oracle] m_max or k_per_m to cover the requested indices")
        q_range, lam_lim = {}, {}
        for j in js:
            md = modes[j - 1]
            q = q_closed_form(h, self.beta, md.value, 1.0 / R, disk_trace_ratio(R, md.m, md.value))
            cl = [i + 1 for i, x in enumerate(modes) if (x.m, x.n) == (md.m, md.n)]
            q_range[j] = (q, q, cl)
            lam_lim[j] = md.value
        tps = self.pmap(
            lambda e: mode_values(disk_twophase_spectrum(R, float(e), h, self.beta, o["m_max"], o["k_per_m"])),
            grid,
        )
        lam_eps = {j: [t[j - 1] for t in tps] for j in js}
        return lam_lim, lam_eps, q_range, None

    def _sweep(self):
        grid = self.eps_grid()
        js = list(self.cfg["sweep"]["j"])
        backend = self.cfg["sweep"]["backend"]
        self.used["sweep_backend"] = backend
        run = self._sweep_fem if backend == "fem" else self._sweep_oracle
        lam_lim, lam_eps, q_range, extra = run(grid, js)
        rows = []
        for i, e in enumerate(grid):
            for j in js:
                le = lam_eps[j][i]
                rows.append([e, j, le, lam_lim[j], (le - lam_lim[j]) / e, q_range[j][0], q_range[j][1]])
        self.table("sweep.csv", SWEEP_HEADER, rows)
        return grid, js, lam_lim, lam_eps, q_range, extra

    def sweep_exp(self):
        grid, js, lam_lim, lam_eps, q_range, _ = self._sweep()
        self.summary.append(f"eps sweep over {len(grid)} values, indices {js}")
        for j in js:
            quot = [(le - lam_lim[j]) / e for le, e in zip(lam_eps[j], grid)]
            self.summary.append(
                f"  j={j}: lambda={fmt(lam_lim[j])}, quotients {', '.join(f'{q:.6g}' for q in quot)},"
                f" Q in [{q_range[j][0]:.6g}, {q_range[j][1]:.6g}]"
            )

    def asymptotics_exp(self):
        grid, js, lam_lim, lam_eps, q_range, extra = self._sweep()
        rows = []
        self.summary.append(f"first-order asymptotics over eps = {', '.join(f'{e:.6g}' for e in grid)}")
        for j in js:
            rep = build_report(
                j, lam_lim[j], q_range[j][2], q_range[j][:2], list(zip(grid, lam_eps[j]))
            )
            rows.append([j, rep.lambda_j, rep.Q_min, rep.Q_max, rep.extrapolated_slope,
                         rep.fit_residual, rep.verdicts.get("sandwich"), rep.verdicts.get("equality", "")])
            self.verdicts[f"j{j}_sandwich"] = rep.verdicts["sandwich"]
            if "equality" in rep.verdicts:
                self.verdicts[f"j{j}_equality"] = rep.verdicts["equality"]
            self.summary.append(
                f"  j={j}: slope {rep.extrapolated_slope:.8g}, Q in [{rep.Q_min:.8g}, {rep.Q_max:.8g}],"
                f" verdicts {rep.verdicts}"
            )
        self.table(
            "asymptotics.csv",
            ["j", "lambda_limit", "Q_min", "Q_max", "slope", "fit_residual", "sandwich", "equality"],
            rows,
        )
        if extra is None:
            return
        mesh0, lim, sols = extra
        a = self.cfg["asymptotics"]
        v = lim.eigenvectors[:, 0]
        cl0 = lim.cluster_of(0)
        drow, ratios, dists = [], [], []
        for e, (mesh, _, sp) in zip(grid, sols):
            u = sp.eigenvectors[:, 0]
            layer, ratio = nonconcentration_check(u, mesh)
            ui = interior_restriction(u, mesh)
            if len(cl0) == 1:
                dist = aligned_l2_distance(ui, v, lim_mass(mesh0))
            else:
                dist = subspace_distance(
                    interior_restriction(sp.eigenvectors[:, cl0], mesh), lim.eigenvectors[:, cl0],
                    lim_mass(mesh0),
                )
            ratios.append(ratio)
            dists.append(dist)
            drow.append([e, layer, ratio, dist])
        self.table("diagnostics.csv", ["epsilon", "layer_mass", "layer_ratio", "l2_distance"], drow)
        self.verdicts["nonconcentration_stable"] = ratio_stable(ratios, a["concentration_tol"])
        self.verdicts["eigenfunction_convergence_monotone"] = bool(np.all(np.diff(dists[::-1]) > 0))
        # fiber regression at the smallest eps, limit trace scaled like u_eps
        mesh, _, sp = sols[int(np.argmin(grid))]
        u = sp.eigenvectors[:, 0]
        ui = interior_restriction(u, mesh)
        M0 = lim_mass(mesh0)
        vs = v * (ui @ (M0 @ v)) / (v @ (M0 @ v))
        if isinstance(self.spec, Interval):
            s_list = [0.0, self.spec.L]
        else:
            s_list = list(np.arange(a["n_fibers"]) * (2 * math.pi / a["n_fibers"]))
        r2 = fiber_regression(mesh, u, vs, self.beta, s_list, a["fiber_samples"])
        self.verdicts["fiber_r2"] = r2
        self.verdicts["fiber_r2_ok"] = bool(r2 >= 0.99)
        self.summary.append(f"  layer ratios {', '.join(f'{r:.6g}' for r in ratios)}")
        self.summary.append(f"  L2 distances {', '.join(f'{d:.3e}' for d in dists)}; fiber R^2 {r2:.6f}")

    def optimize_exp(self):
        o = self.cfg["optimizer"]
        js = list(o["j"])
        kw = dict(resolution=o["resolution"], seed=self.seed, threads=self.threads, cap=o["cap"])
        if o["target"] == "lambda":
            run = minimize_lambda(js[0], o["m"], self.spec, self.beta, o["n_arcs"], o["budget"], **kw)
        else:
            f = {
                "identity": lambda *l: l[0],
                "gap_ratio": lambda *l: l[1] / l[0],
                "sum": lambda *l: sum(l),
            }[o["composition"]]
            run = minimize_composition(f, js, o["m"], self.spec, self.beta, o["n_arcs"], o["budget"], **kw)
        n = run.n_arcs
        header = ["iter", "value", "mass"] + [f"h_{i + 1}" for i in range(n)]
        self.table("optimize.csv", header, [[it, val, mass, *x] for it, val, mass, x in run.history])
        vals = " ".join(fmt(x) for x in run.best_profile.values)
        (self.outdir / "best_profile.ini").write_text(
            f"[profile]\nrepresentation = piecewise\nvalues = {vals}\n", encoding="utf-8"
        )
        self.files.setdefault("best_profile.ini", None)
        self.verdicts["status"] = run.status
        self.verdicts["baseline_dominance"] = bool(run.best_value <= run.baseline_value + 1e-9)
        if o["target"] == "lambda":
            self.verdicts["saturation_residual"] = run.saturation_residual
        self.used["cap"] = o["cap"] if o["cap"] is not None else "10*m/P"
        self.summary.append(
            f"optimizer {run.target}: best {fmt(run.best_value)} vs constant baseline "
            f"{fmt(run.baseline_value)} after {run.evaluations} evaluations ({run.status})"
        )
        self.summary.append(f"  profile values {vals}")
        if run.status != "CONVERGED":
            self.summary.append("  budget exhausted before the step tolerance was reached")

    def continuity_exp(self):
        c = self.cfg["continuity"]
        ev = LimitEvaluator(self.spec, self.beta, self.resolution, c["j_max"])
        tab = continuity_experiment(
            c["a"], c["b"], c["k_list"], self.spec, self.beta, c["j_max"], evaluator=ev,
            threads=self.threads,
        )
        rows = []
        for i, k in enumerate(tab.k_list):
            for j in range(c["j_max"]):
                rows.append([k, j + 1, tab.lambda_k[i, j], tab.lambda_eff[j], tab.errors[i, j]])
        self.table("continuity.csv", ["k", "j", "lambda_k", "lambda_eff", "abs_error"], rows)
        for j in range(c["j_max"]):
            self.verdicts[f"j{j + 1}_decreasing"] = tab.decreasing(j)
        self.summary.append(f"weak-* continuity, effective thickness {fmt(tab.h_eff)}")
        for j in range(c["j_max"]):
            self.summary.append(
                f"  j={j + 1}: errors {', '.join(f'{e:.4e}' for e in tab.errors[:, j])}"
            )

    def _fem_values(self, mode, k, richardson):
        eps = self.cfg["physics"]["eps"]

        def at(res):
            if mode == "limit":
                return self.limit_solve(k, res)[2].eigenvalues
            return self.twophase_solve(eps, k, res)[2].eigenvalues

        fine = at(self.resolution)
        if not richardson:
            return fine
        coarse = at(2 * self.resolution)
        return (4 * fine - coarse) / 3

    def _oracle_values(self, mode, k):
        eps = self.cfg["physics"]["eps"]
        o = self.cfg["oracle"]
        if isinstance(self.spec, Interval):
            h0, hL = self.interval_ends()
            if mode == "limit":
                b0, bL = (self.beta / (1 + self.beta * x) for x in (h0, hL))
                return interval_limit_spectrum(self.spec.L, b0, bL, k)
            return interval_twophase_spectrum(self.spec.L, eps, h0, hL, self.beta, k)
        h = float(self.profile.values[0])
        if mode == "limit":
            vals = mode_values(disk_limit_spectrum(self.spec.R, self.beta / (1 + self.beta * h),
                                                   o["m_max"], o["k_per_m"]))
        else:
            vals = mode_values(disk_twophase_spectrum(self.spec.R, eps, h, self.beta,
                                                      o["m_max"], o["k_per_m"]))
        if vals.size < k:
            raise ConfigError("raise [oracle] m_max or k_per_m to cover j_max")
        return vals[:k]

    def oracle_compare_exp(self):
        o = self.cfg["oracle"]
        k = o["j_max"]
        richardson = o["richardson"] and isinstance(self.spec, Disk)
        self.used["richardson_resolutions"] = (
            [self.resolution, 2 * self.resolution] if richardson else [self.resolution]
        )
        rows = []
        for mode in o["modes"].split():
            fem = self._fem_values(mode, k, richardson)
            ora = self._oracle_values(mode, k)
            eps = 0.0 if mode == "limit" else self.cfg["physics"]["eps"]
            rel = np.abs(fem - ora) / np.maximum(np.abs(ora), 1.0)
            ok = rel <= o["tolerance"]
            for j in range(k):
                rows.append([mode, eps, j + 1, fem[j], ora[j], rel[j], ok[j]])
            self.verdicts[f"{mode}_pass"] = bool(np.all(ok))
            self.verdicts[f"{mode}_max_rel_error"] = float(rel.max())
            self.summary.append(
                f"{mode}: max relative error {rel.max():.3e} over j <= {k} "
                f"({'PASS' if ok.all() else 'FAIL'} at {o['tolerance']:.1e})"
            )
        self.table(
            "oracle_compare.csv",
            ["mode", "epsilon", "j", "lambda_fem", "lambda_oracle", "rel_error", "pass"],
            rows,
        )

    def execute(self):
        name = self.cfg.experiment.replace("-", "_") + "_exp"
        getattr(self, name)()


def lim_mass(mesh0):
    return volume_forms(mesh0, INTERIOR)[1]


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _manifest(path: Path, data: dict):
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def execute(config_path, output=None, seed=None, threads=None, force_experiment=None) -> int:
    overrides = {}
    if seed is not None:
        overrides[("solver", "seed")] = seed
    if threads is not None:
        overrides[("run", "threads")] = threads
    if output is not None:
        overrides[("experiment", "output")] = output
    if force_experiment is not None:
        overrides[("experiment", "name")] = force_experiment
    try:
        cfg = load_config(config_path, overrides)
        outdir = Path(cfg["experiment"]["output"])
        run = Run(cfg, outdir, cfg["run"]["threads"])
    except _VALIDATION as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {outdir}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    manifest = {
        "artifact": "thinlayer",
        "version": __version__,
        "experiment": cfg.experiment,
        "config": resolved_text(cfg),
        "seed": cfg["solver"]["seed"],
        "threads": cfg["run"]["threads"],
        "started": _now(),
        "status": "INCOMPLETE",
        "outputs": [],
    }
    mpath = outdir / "manifest.json"
    _manifest(mpath, manifest)
    code = EXIT_OK
    try:
        run.execute()
    except _VALIDATION as exc:
        manifest["error"] = f"validation: {exc}"
        code = EXIT_INVALID
    except ThinLayerError as exc:
        manifest["error"] = f"numerical: {exc}"
        res = getattr(exc, "residuals", None)
        if res is not None:
            manifest["residuals"] = np.asarray(res).tolist()
        code = EXIT_NUMERICAL
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        manifest["error"] = f"numerical: {exc}"
        code = EXIT_NUMERICAL
    for name, content in run.files.items():
        if content is not None:
            _write_csv(outdir / name, *content)
        manifest["outputs"].append(name)
    if code == EXIT_OK:
        (outdir / "summary.txt").write_text("\n".join(run.summary) + "\n", encoding="utf-8")
        manifest["outputs"].append("summary.txt")
        manifest["status"] = "COMPLETE"
    else:
        print(manifest["error"], file=sys.stderr)
    manifest["verdicts"] = run.verdicts
    manifest["defaults_used"] = run.used
    manifest["finished"] = _now()
    _manifest(mpath, manifest)
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="INI run configuration")
    common.add_argument("--output", help="output directory (overrides [experiment] output)")
    common.add_argument("--seed", type=int, help="solver seed (overrides [solver] seed)")
    common.add_argument("--threads", type=int, help="worker threads (overrides [run] threads)")
    parser = argparse.ArgumentParser(prog="thinlayer", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the experiment named in the config")
    sub.add_parser("oracle-compare", parents=[common], help="compare FEM spectra with the oracles")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    force = "oracle-compare" if args.command == "oracle-compare" else None
    return execute(args.config, args.output, args.seed, args.threads, force)


if __name__ == "__main__":
    sys.exit(main())
