"""Command-line interface: batch computation and data emission.

Subcommands
-----------
solve        one invariant-curve solve (newton or picard); JSON + CSV artifacts
sweep        grid of solves over frequency (and optionally eps); JSON-lines
geometry     excluded-gap geometry of a truncated Diophantine class
obstruction  formal series at a rational frequency: first obstructed order
taylor0      Taylor coefficients in q at q = 0, optional evaluation at a point
crosscheck   run several methods at one point and report pairwise gaps
verify       run the named invariant / acceptance check suites

All numeric output goes through a writer that prints floats with 17
significant digits, so artifacts round-trip exactly and sweeps are
byte-identical regardless of the worker count.  The environment variable
``KAMFORGE_WORKERS`` overrides the sweep worker count.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .continuation import crosscheck as run_crosscheck
from .continuation import picard_solve, taylor0_eval, taylor0_recursion
from .errors import KamforgeError
from .fourier import FourierSeries, pad_to, sup_norm
from .frequency import (
    DiophantineClass,
    Frequency,
    SampledFamily,
    export_set_geometry,
    from_omega,
    from_q,
)
from .kam import InvariantCurve, SolverConfig, dynamical_residual, solve_curve
from .obstruction import (
    RationalFreq,
    obstruction_order,
    radial_approach_diagnostic,
)
from .operators import NABLA_MINUS, apply


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    """One solve request.  Exactly one frequency form (omega or q) is allowed."""

    omega: complex | None = None
    q: complex | None = None
    eps: complex = 0.05
    method: str = "newton"
    modes: int = 256
    tol: float = 1e-12
    max_iters: int = 30

    def __post_init__(self):
        if (self.omega is None) == (self.q is None):
            raise ValueError(
                "exactly one frequency form must be given: "
                "--omega [--omega-im] or --q-re [--q-im]")
        if self.method not in ("newton", "picard"):
            raise ValueError("method must be 'newton' or 'picard'")

    def frequency(self) -> Frequency:
        if self.omega is not None:
            return from_omega(self.omega)
        return from_q(self.q)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(cutoff=self.modes, tol=self.tol,
                            max_iters=self.max_iters)


def _series_from_list(entries) -> FourierSeries:
    vals = []
    for e in entries:
        if isinstance(e, (int, float)):
            vals.append(complex(e))
        elif isinstance(e, list) and len(e) == 2:
            vals.append(complex(e[0], e[1]))
        else:
            raise ValueError("series entries must be numbers or [re, im] pairs")
    if len(vals) % 2 != 1:
        raise ValueError(
            "coefficient list must have odd length (modes k = -N..N)")
    return FourierSeries(np.array(vals, dtype=np.complex128))


def parse_series(text: str) -> FourierSeries:
    """'cos', a JSON file holding a series, or an inline JSON array."""
    if text == "cos":
        return FourierSeries.cos()
    if os.path.exists(text):
        obj = jsonio.load_path(text)
        if isinstance(obj, dict):
            return FourierSeries.from_json_dict(obj)
        return _series_from_list(obj)
    if text.lstrip().startswith("["):
        return _series_from_list(jsonio.loads(text))
    raise ValueError(
        f"--f must be 'cos', an inline JSON array, or a path: {text!r}")


def _jsonable(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def _error_payload(exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        err["diagnostics"] = _jsonable(diag)
    hist = getattr(exc, "residual_history", None)
    if hist is not None and "diagnostics" not in err:
        err["residual_history"] = [float(r) for r in hist]
    return {"error": err}


def _runconfig_from_args(args) -> RunConfig:
    omega = None
    q = None
    if args.omega is not None:
        omega = complex(args.omega, args.omega_im)
    if args.q_re is not None:
        q = complex(args.q_re, args.q_im)
    return RunConfig(
        omega=omega, q=q,
        eps=complex(args.eps, args.eps_im),
        method=getattr(args, "method", "newton"),
        modes=args.modes, tol=args.tol, max_iters=args.max_iters)


# ---------------------------------------------------------------------------
# solve


def _solve_with_method(f, freq, eps, cfg: SolverConfig, method: str,
                       dioph=None) -> InvariantCurve:
    if method == "picard":
        u, report = picard_solve(f, freq, eps, cfg)
        v = apply(NABLA_MINUS, u, freq)
        return InvariantCurve(u=u, v=v, freq=freq, eps=eps,
                              report=report, f=f)
    return solve_curve(f, freq, eps, cfg, dioph=dioph)


def _write_csv(path: str, curve: InvariantCurve, grid_n: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "x_re", "x_im", "y_re", "y_im"])
        for row in curve.csv_rows(grid_n):
            w.writerow([jsonio.format_float(v) for v in row])


def cmd_solve(args) -> int:
    f = parse_series(args.f)
    rc = _runconfig_from_args(args)
    freq = rc.frequency()
    dioph = None
    if args.M is not None:
        dioph = DiophantineClass(args.M, args.tau, args.mmax)
    t0 = time.perf_counter()
    try:
        curve = _solve_with_method(f, freq, rc.eps, rc.solver_config(),
                                   rc.method, dioph=dioph)
    except KamforgeError as exc:
        payload = _error_payload(exc)
        jsonio.dump_path(payload, args.out)
        print(jsonio.dumps(payload))
        print(f"solve failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    secs = time.perf_counter() - t0
    try:
        dyn = dynamical_residual(curve, 1024)
    except ValueError:
        dyn = None
    for i, r in enumerate(curve.report.residual_history):
        print(f"iter {i:3d}  residual {r:.6e}")
    rep = curve.report
    print(f"method={rep.method} converged={rep.converged} "
          f"iterations={rep.iterations} time={secs:.2f}s")
    print(f"beta = {jsonio.format_float(rep.beta.real)} "
          f"+ {jsonio.format_float(rep.beta.imag)}i")
    if dyn is not None:
        print(f"dynamical residual (1024-point grid) = {dyn:.6e}")
    jsonio.dump_path(curve.to_json_dict(dynamical=dyn), args.out)
    csv_path = args.csv or os.path.splitext(args.out)[0] + ".csv"
    _write_csv(csv_path, curve, args.grid_n)
    print(f"wrote {args.out} and {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_point(task) -> dict:
    idx, om, eps, f, modes, tol, max_iters, method = task
    freq = from_omega(om)
    rec = {
        "index": idx,
        "omega": [om.real, om.imag],
        "q": [freq.q.real, freq.q.imag],
        "chart": freq.chart,
        "eps": [eps.real, eps.imag],
    }
    cfg = SolverConfig(cutoff=modes, tol=tol, max_iters=max_iters)
    try:
        curve = _solve_with_method(f, freq, eps, cfg, method)
        try:
            dyn = dynamical_residual(curve, 512)
        except ValueError:
            dyn = None
        rec["status"] = "converged"
        rec["iterations"] = curve.report.iterations
        rec["residual"] = float(curve.report.residual_history[-1])
        rec["beta"] = [curve.report.beta.real, curve.report.beta.imag]
        if dyn is not None:
            rec["dynamical_residual"] = dyn
        rec["u"] = curve.u.to_json_dict()
    except (KamforgeError, ValueError) as exc:
        rec["status"] = "failed"
        rec["error"] = {"type": type(exc).__name__, "message": str(exc)}
    return rec


def _family_from_records(records, shape) -> SampledFamily:
    """Converged u-vectors as a sampled family with forward q-derivatives.

    Derivatives are one-sided finite differences along the Re(omega) axis
    (within a fixed Im(omega) and eps); the last converged point of each
    row, and points whose neighbor failed, carry None.
    """
    n_re, n_im, n_eps = shape
    series = {}
    for rec in records:
        if rec["status"] == "converged":
            series[rec["index"]] = FourierSeries.from_json_dict(rec["u"])
    if not series:
        return SampledFamily(points=[], values=[], derivs=[])
    N = max(s.N for s in series.values())
    vecs = {i: pad_to(s, N).coeffs for i, s in series.items()}

    def lin(i, j, l):
        return (i * n_im + j) * n_eps + l

    points, values, derivs = [], [], []
    for i in range(n_re):
        for j in range(n_im):
            for l in range(n_eps):
                k = lin(i, j, l)
                if k not in vecs:
                    continue
                om = complex(records[k]["omega"][0], records[k]["omega"][1])
                fr = from_omega(om)
                points.append(fr)
                values.append(vecs[k])
                d = None
                if i + 1 < n_re:
                    k2 = lin(i + 1, j, l)
                    if k2 in vecs:
                        om2 = complex(records[k2]["omega"][0],
                                      records[k2]["omega"][1])
                        fr2 = from_omega(om2)
                        dq = fr2.coord - fr.coord
                        if fr2.chart == fr.chart and dq != 0:
                            d = (vecs[k2] - vecs[k]) / dq
                derivs.append(d)
    return SampledFamily(points=points, values=values, derivs=derivs)


def run_sweep(*, omega_re, omega_im, eps, f, modes=64, tol=1e-12,
              max_iters=30, workers=1, out_path, family_path=None,
              eps_axis=None, method="newton") -> dict:
    """Run the grid, write JSON-lines records sorted by grid index.

    ``omega_re`` / ``omega_im`` are (min, max, count) axes; ``eps_axis``
    optionally replaces the single ``eps`` by a (min, max, count) axis.
    Records are computed by a deterministic pure function per point, so the
    files are byte-identical for any worker count.
    """
    re0, re1, n_re = omega_re
    im0, im1, n_im = omega_im
    res = np.linspace(float(re0), float(re1), int(n_re))
    ims = np.linspace(float(im0), float(im1), int(n_im))
    if eps_axis is not None:
        e0, e1, n_e = eps_axis
        eps_vals = [complex(e) for e in np.linspace(float(e0), float(e1),
                                                    int(n_e))]
    else:
        eps_vals = [complex(eps)]
    tasks = []
    idx = 0
    for a in res:
        for b in ims:
            for e in eps_vals:
                tasks.append((idx, complex(a, b), e, f, modes, tol,
                              max_iters, method))
                idx += 1
    if workers <= 1:
        records = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_sweep_point, tasks, chunksize=1))
    with open(out_path, "w") as fh:
        for rec in records:
            fh.write(jsonio.dumps(rec) + "\n")
    if family_path is not None:
        fam = _family_from_records(records,
                                   (len(res), len(ims), len(eps_vals)))
        jsonio.dump_path(fam.to_json_dict(), family_path)
    n_conv = sum(r["status"] == "converged" for r in records)
    return {"total": len(records), "converged": n_conv,
            "failed": len(records) - n_conv, "out": out_path,
            "family": family_path, "workers": workers}


def cmd_sweep(args) -> int:
    f = parse_series(args.f)
    workers = args.workers
    env = os.environ.get("KAMFORGE_WORKERS")
    if env:
        workers = int(env)
    eps_axis = None
    if args.eps_n is not None:
        if args.eps_min is None or args.eps_max is None:
            raise ValueError("--eps-n requires --eps-min and --eps-max")
        eps_axis = (args.eps_min, args.eps_max, args.eps_n)
    summary = run_sweep(
        omega_re=(args.omega_min, args.omega_max, args.omega_n),
        omega_im=(args.im_min, args.im_max, args.im_n),
        eps=complex(args.eps, args.eps_im), eps_axis=eps_axis, f=f,
        modes=args.modes, tol=args.tol, max_iters=args.max_iters,
        workers=workers, out_path=args.out, family_path=args.family,
        method=args.method)
    print(f"sweep: {summary['converged']}/{summary['total']} points "
          f"converged ({summary['workers']} workers)")
    print(f"wrote {summary['out']}"
          + (f" and {summary['family']}" if summary["family"] else ""))
    if summary["total"] > 0 and summary["converged"] == 0:
        print("all points failed", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# geometry / obstruction / taylor0 / crosscheck / verify


def cmd_geometry(args) -> int:
    cls = DiophantineClass(args.M, args.tau, args.mmax)
    geo = export_set_geometry(cls, boundary_n=args.boundary_n)
    jsonio.dump_path(geo.to_json_dict(), args.out)
    bound = cls.measure_bound()
    print(f"M={args.M} tau={args.tau} m_max={args.mmax}")
    print(f"excluded measure = {geo.total_gap_measure:.10f}")
    print(f"harmonic-series bound = {bound:.10f} "
          f"(within bound: {geo.total_gap_measure <= bound})")
    print(f"components = {geo.gap_lo.size}, "
          f"first untested denominator = {geo.first_untested_denominator}")
    print(f"wrote {args.out}")
    return 0


def cmd_obstruction(args) -> int:
    f = parse_series(args.f)
    rf = RationalFreq(args.p, args.m)
    rep = obstruction_order(f, rf, max_order=args.max_order,
                            threshold=args.threshold,
                            exactness=args.exactness)
    payload = rep.to_json_dict()
    if args.radial_eps is not None:
        payload["radial_diagnostic"] = radial_approach_diagnostic(
            f, args.p, args.m, args.radial_eps)
    jsonio.dump_path(payload, args.out)
    if rep.n_star is None:
        print(f"p/m = {rf.p}/{rf.m}: no obstruction through order "
              f"{rep.orders_computed}")
    else:
        print(f"p/m = {rf.p}/{rf.m}: first obstructed order n* = {rep.n_star}")
        print(f"witness norm = {rep.witness_norm:.6e} "
              f"(threshold {rep.threshold:.3e})")
        if rep.gamma_oracle is not None:
            print(f"gamma(n*) engine vs oracle relative gap = "
                  f"{rep.relative_gap:.3e}")
    print(f"wrote {args.out}")
    return 0


def cmd_taylor0(args) -> int:
    f = parse_series(args.f)
    eps = complex(args.eps, args.eps_im)
    data = taylor0_recursion(f, eps, N_q=args.orders)
    payload = {"data": data.to_json_dict()}
    if args.q_re is not None:
        q = complex(args.q_re, args.q_im)
        u, info = taylor0_eval(data, q, with_info=True)
        payload["eval"] = {
            "q": [q.real, q.imag],
            "u": u.to_json_dict(),
            "last_term": info["last_term"],
            "term_norms": info["term_norms"],
            "root_test": info["root_test"],
        }
        print(f"order-{args.orders} evaluation at q = {q}: "
              f"sup norm {sup_norm(u):.6e}, "
              f"last term {info['last_term']:.3e}")
    order_norms = [sup_norm(un) for un in data.orders]
    print(f"computed {len(data.orders)} orders; "
          f"||u_1|| = {order_norms[0]:.3e}, "
          f"||u_{len(order_norms)}|| = {order_norms[-1]:.3e}")
    jsonio.dump_path(payload, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_crosscheck(args) -> int:
    f = parse_series(args.f)
    rc = _runconfig_from_args(args)
    methods = tuple(s.strip() for s in args.methods.split(",") if s.strip())
    result = run_crosscheck(f, rc.frequency(), rc.eps, methods=methods,
                            config=rc.solver_config(), n_taylor=args.orders)
    jsonio.dump_path(_jsonable(result), args.out)
    failed = False
    for name, m in result["methods"].items():
        status = m["status"]
        failed = failed or status == "failed"
        extra = ""
        if "note" in m:
            extra = f" ({m['note']})"
        print(f"{name}: {status}{extra}")
    for pair, d in sorted(result["pairs"].items()):
        print(f"{pair}: sup diff = {d:.3e}")
    print(f"wrote {args.out}")
    return 1 if failed else 0


def cmd_verify(args) -> int:
    from .verify import format_table, run_suite

    results = run_suite(args.suite)
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


def _add_freq_args(sp) -> None:
    sp.add_argument("--omega", type=float, default=None,
                    help="rotation number (real part)")
    sp.add_argument("--omega-im", type=float, default=0.0,
                    help="imaginary part of omega")
    sp.add_argument("--q-re", type=float, default=None,
                    help="multiplier q = exp(2 pi i omega), real part")
    sp.add_argument("--q-im", type=float, default=0.0,
                    help="multiplier q, imaginary part")


def _add_eps_args(sp, default=0.05) -> None:
    sp.add_argument("--eps", type=float, default=default,
                    help="perturbation strength (real part)")
    sp.add_argument("--eps-im", type=float, default=0.0,
                    help="imaginary part of eps")


def _add_solver_args(sp, modes=256) -> None:
    sp.add_argument("--modes", type=int, default=modes,
                    help="Fourier mode cutoff")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--max-iters", type=int, default=30)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kamforge",
        description="Invariant curves of the standard twist-map family: "
                    "solves, sweeps, Diophantine geometry, and the rational "
                    "obstruction, as batch commands emitting JSON/CSV.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one invariant curve")
    _add_freq_args(sp)
    _add_eps_args(sp)
    sp.add_argument("--f", default="cos",
                    help="forcing: 'cos', inline JSON array, or JSON file")
    sp.add_argument("--method", choices=("newton", "picard"),
                    default="newton")
    _add_solver_args(sp)
    sp.add_argument("--out", default="curve.json")
    sp.add_argument("--csv", default=None,
                    help="CSV sample path (default: out with .csv)")
    sp.add_argument("--grid-n", type=int, default=256,
                    help="CSV sample count")
    sp.add_argument("--M", type=float, default=None,
                    help="check omega against this Diophantine class")
    sp.add_argument("--tau", type=float, default=0.5)
    sp.add_argument("--mmax", type=int, default=2000)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="grid of solves over frequency")
    sp.add_argument("--omega-min", type=float, required=True)
    sp.add_argument("--omega-max", type=float, required=True)
    sp.add_argument("--omega-n", type=int, required=True)
    sp.add_argument("--im-min", type=float, default=0.0)
    sp.add_argument("--im-max", type=float, default=0.0)
    sp.add_argument("--im-n", type=int, default=1)
    _add_eps_args(sp)
    sp.add_argument("--eps-min", type=float, default=None)
    sp.add_argument("--eps-max", type=float, default=None)
    sp.add_argument("--eps-n", type=int, default=None,
                    help="sweep eps too, over (--eps-min, --eps-max)")
    sp.add_argument("--f", default="cos")
    sp.add_argument("--method", choices=("newton", "picard"),
                    default="newton")
    _add_solver_args(sp, modes=64)
    sp.add_argument("--workers", type=int, default=1,
                    help="process count (KAMFORGE_WORKERS overrides)")
    sp.add_argument("--out", default="sweep.jsonl")
    sp.add_argument("--family", default=None,
                    help="also write the converged u-vectors as a sampled "
                         "family with finite-difference q-derivatives")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("geometry",
                        help="excluded gaps of a truncated Diophantine class")
    sp.add_argument("--M", type=float, required=True)
    sp.add_argument("--tau", type=float, default=0.5)
    sp.add_argument("--mmax", type=int, default=2000)
    sp.add_argument("--boundary-n", type=int, default=512)
    sp.add_argument("--out", default="geometry.json")
    sp.set_defaults(func=cmd_geometry)

    sp = sub.add_parser("obstruction",
                        help="formal obstruction at a rational frequency")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--f", default="cos")
    sp.add_argument("--max-order", type=int, default=None)
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--exactness", choices=("float", "extended"),
                    default="float")
    sp.add_argument("--radial-eps", type=float, default=None,
                    help="also probe q -> exp(2 pi i p/m) radially at this eps")
    sp.add_argument("--out", default="obstruction.json")
    sp.set_defaults(func=cmd_obstruction)

    sp = sub.add_parser("taylor0", help="Taylor-in-q data at q = 0")
    sp.add_argument("--f", default="cos")
    _add_eps_args(sp)
    sp.add_argument("--orders", type=int, default=40)
    sp.add_argument("--q-re", type=float, default=None,
                    help="evaluate the polynomial at this q")
    sp.add_argument("--q-im", type=float, default=0.0)
    sp.add_argument("--out", default="taylor0.json")
    sp.set_defaults(func=cmd_taylor0)

    sp = sub.add_parser("crosscheck",
                        help="pairwise method agreement at one point")
    _add_freq_args(sp)
    _add_eps_args(sp)
    sp.add_argument("--f", default="cos")
    sp.add_argument("--methods", default="newton,picard,taylor0")
    sp.add_argument("--orders", type=int, default=40)
    _add_solver_args(sp)
    sp.add_argument("--out", default="crosscheck.json")
    sp.set_defaults(func=cmd_crosscheck)

    sp = sub.add_parser("verify", help="run the named check suites")
    sp.add_argument("--suite", choices=("invariants", "acceptance", "all"),
                    default="all")
    sp.set_defaults(func=cmd_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
