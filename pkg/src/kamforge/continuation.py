"""Solutions away from the unit multiplier circle, three ways.

For |q| != 1 the invariance equation is equivalent to the fixed point

    u = eps E_q ( f(id + u) ),

which a Picard iteration contracts to for moderate eps (the divisor
operator E_q is bounded once q keeps a margin from the circle).  Near
q = 0 the same solution has a convergent Taylor expansion u = sum q^n u_n
whose orders obey an explicit recursion with two rigid structure laws:
u_n has no modes beyond |k| = n, and its extreme modes carry exactly
eps f_{+-n} — which is what makes the "inverse scattering" readout of f
from the solution family possible.  Cross-checking these against the
Newton solver (which does not need |q| != 1) is the practical meaning of
analytic continuation through the circle: all three must agree wherever
two of them are defined.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import KamforgeError, NoConvergenceError
from .fourier import (
    FourierSeries,
    compose_id_plus,
    mean,
    pad_to,
    product,
    sup_norm,
    truncate,
)
from .frequency import Frequency, reflected
from .kam import SolveReport, SolverConfig, dynamical_residual, solve_curve
from .operators import E_Q, apply, e_n

TAYLOR_ORDER_CAP = 60


@dataclass
class QTaylorData:
    """Orders u_1..u_Nq of the expansion u = sum q^n u_n at q = 0.

    Invariants (both exact by construction, asserted in tests): u_n has no
    modes beyond |k| = n; coeff(u_n, +-n) = eps * coeff(f_ref, +-n).
    """

    orders: list
    eps: complex
    f_ref: FourierSeries

    def order(self, n: int) -> FourierSeries:
        return self.orders[n - 1]

    def to_json_dict(self) -> dict:
        return {
            "eps": [complex(self.eps).real, complex(self.eps).imag],
            "f_ref": self.f_ref.to_json_dict(),
            "orders": [u.to_json_dict() for u in self.orders],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QTaylorData":
        return cls(
            orders=[FourierSeries.from_json_dict(o) for o in d["orders"]],
            eps=complex(d["eps"][0], d["eps"][1]),
            f_ref=FourierSeries.from_json_dict(d["f_ref"]),
        )


# ---------------------------------------------------------------------------
# Picard fixed point


def picard_solve(f: FourierSeries, freq: Frequency, eps,
                 config: SolverConfig | None = None):
    """Iterate u <- eps E_q(f(id + u)) to its fixed point.

    Returns ``(u, SolveReport)``; the report's residual history holds the
    successive sup-differences, and ``report.beta`` records the mean defect
    eps <f(id+u)> (an exact zero at the fixed point, so its size measures
    truncation only).  Requires | |q| - 1 | >= the configured margin.
    """
    config = config or SolverConfig()
    eps = complex(eps)
    modulus = math.exp(-freq.log_scale) if math.isfinite(freq.log_scale) else (
        0.0 if freq.log_scale > 0 else math.inf)
    gap = abs(modulus - 1.0) if math.isfinite(modulus) else 1.0
    if gap < config.picard_margin:
        raise ValueError(
            f"|q| = {modulus:.6g} is within {config.picard_margin} of the unit "
            "circle; the Picard contraction is not certified there"
        )
    lam = config.picard_damping
    u = FourierSeries.zero(0)
    history: list[float] = []
    tails: list[float] = []
    converged = False
    iters = 0
    for it in range(config.picard_max_iters):
        comp, rep = compose_id_plus(f, u)
        tails.append(rep.aliasing_tail)
        target = eps * apply(E_Q, comp, freq)
        u_next = target if lam == 1.0 else (1.0 - lam) * u + lam * target
        u_next, t_tail = truncate(u_next, config.cutoff)
        tails.append(t_tail)
        diff = sup_norm(u_next - u)
        history.append(diff)
        u = u_next
        iters = it + 1
        if diff < config.tol:
            converged = True
            break
    if not converged:
        raise NoConvergenceError(
            f"Picard did not contract below {config.tol:.1e} in "
            f"{config.picard_max_iters} iterations",
            residual_history=history,
            diagnostics={"q_modulus": modulus, "damping": lam},
        )
    bcomp, _ = compose_id_plus(f, u)
    report = SolveReport(
        residual_history=history,
        quadratic_fit_slope=math.nan,
        beta=eps * mean(bcomp),
        aliasing_tail=max(tails) if tails else 0.0,
        converged=True,
        method="picard",
        iterations=iters,
        diagnostics={"q_modulus": modulus, "damping": lam},
    )
    return u, report


# ---------------------------------------------------------------------------
# Taylor orders at q = 0


def taylor0_recursion(f: FourierSeries, eps, N_q: int = 40,
                      cap: int = TAYLOR_ORDER_CAP) -> QTaylorData:
    """Orders u_1..u_Nq of the solution's expansion at q = 0.

    u_1 = eps E^(1) f and, for n >= 2,

        u_n = eps E^(n) f
            + eps sum_{r>=1} sum_{n0=1}^{n-r} E^(n0)( f^(r)/r! * W_r[n-n0] )

    where W_r[s] collects sum over ordered tuples n_1+..+n_r = s of
    u_{n_1}..u_{n_r}.  The W table is memoized through the convolution
    W_r[s] = sum_a W_{r-1}[a] * u_{s-a}, which keeps the combinatorics
    polynomial; the order cap bounds the desk-scale budget.
    """
    N_q = int(N_q)
    if N_q < 1:
        raise ValueError("need at least one order")
    if N_q > cap:
        raise ValueError(f"N_q = {N_q} exceeds the order cap {cap}")
    eps = complex(eps)

    # f^(r)/r! has coefficients (2 pi i k)^r / r! — bounded by e^{2 pi |k|}
    scaled = [f]
    fact = 1.0
    ks = np.arange(-f.N, f.N + 1)
    base = 2j * np.pi * ks
    cur = f.coeffs.copy()
    for r in range(1, N_q):
        cur = cur * base
        fact *= r
        scaled.append(FourierSeries(cur / fact))

    u = {1: eps * e_n(f, 1)}
    wmemo: dict = {}

    def W(r: int, s: int) -> FourierSeries:
        if r == 1:
            return u[s]
        key = (r, s)
        got = wmemo.get(key)
        if got is None:
            acc = None
            for a in range(r - 1, s):
                term = product(W(r - 1, a), u[s - a])
                acc = term if acc is None else acc + term
            wmemo[key] = got = acc
        return got

    for n in range(2, N_q + 1):
        total = eps * e_n(f, n)
        for r in range(1, n):
            for n0 in range(1, n - r + 1):
                g = product(scaled[r], W(r, n - n0))
                total = total + eps * e_n(g, n0)
        u[n] = total
    return QTaylorData([u[n] for n in range(1, N_q + 1)], eps, f)


def taylor0_eval(data: QTaylorData, q, with_info: bool = False):
    """Partial sum sum_n q^n u_n over the available orders.

    Warns when the term magnitudes stop decaying (the partial sums are then
    not Cauchy at this q).  With ``with_info=True`` also returns the term
    norms, the last-term truncation indicator, and the root-test line
    |u_n|^(1/n) — reported without any threshold.
    """
    qq = complex(q)
    if abs(qq) >= 1.0:
        raise ValueError("Taylor data at q = 0 is only summable for |q| < 1")
    acc = FourierSeries.zero(0)
    qn = 1.0 + 0.0j
    term_norms = []
    order_norms = []
    for n, un in enumerate(data.orders, start=1):
        qn = qn * qq
        term = qn * un
        acc = acc + term
        term_norms.append(sup_norm(term))
        order_norms.append(sup_norm(un))
    last = term_norms[-1] if term_norms else 0.0
    scale = max(term_norms) if term_norms else 0.0
    if len(term_norms) >= 6 and scale > 0:
        head = term_norms[-6]
        if last > 1e-15 * scale and head > 0 and last > 0.9 * head:
            warnings.warn(
                f"Taylor partial sums not decaying at q = {qq:.4g} "
                f"(last term {last:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
    if not with_info:
        return acc
    root_test = [nn ** (1.0 / n) if nn > 0 else 0.0
                 for n, nn in enumerate(order_norms, start=1)]
    info = {
        "last_term": last,
        "term_norms": term_norms,
        "order_norms": order_norms,
        "root_test": root_test,
    }
    return acc, info


def inverse_scattering(data: QTaylorData) -> FourierSeries:
    """Read eps*f back out of the orders: coefficient k comes from u_{|k|}.

    The top-coefficient law makes coeff(u_{|k|}, k) = eps f_k, so the
    returned series equals eps * f_ref on the recovered range (mode 0 is
    zero: the orders are mean-free).
    """
    K = len(data.orders)
    out = np.zeros(2 * K + 1, dtype=np.complex128)
    for k in range(1, K + 1):
        un = data.order(k)
        out[k + K] = un.coeff(k)
        out[-k + K] = un.coeff(-k)
    return FourierSeries(out)


# ---------------------------------------------------------------------------
# cross-method agreement


def _demean(u: FourierSeries) -> FourierSeries:
    return u - FourierSeries.constant(mean(u))


def crosscheck(f: FourierSeries, freq: Frequency, eps,
               methods=("newton", "picard", "taylor0"),
               config: SolverConfig | None = None,
               n_taylor: int = 40,
               taylor_data: QTaylorData | None = None) -> dict:
    """Run the requested solvers at one (q, eps) and compare them pairwise.

    Methods whose preconditions fail are recorded as skipped with a notice
    (Picard on the unit circle, Taylor-at-0 outside |q| < 1); solver errors
    are recorded as failed.  Newton output is demeaned before comparison —
    all methods then share the zero-mean normalization.  Returns a report
    dict with per-method status and pairwise sup-norm differences.
    """
    config = config or SolverConfig()
    eps = complex(eps)
    status: dict = {}
    solutions: dict = {}

    for name in methods:
        try:
            if name == "newton":
                curve = solve_curve(f, freq, eps, config)
                solutions[name] = curve.u
                status[name] = {
                    "status": "ok",
                    "iterations": curve.report.iterations,
                    "residual": curve.report.residual_history[-1],
                    "dynamical_residual": dynamical_residual(curve, 1024),
                }
            elif name == "picard":
                u, rep = picard_solve(f, freq, eps, config)
                solutions[name] = u
                status[name] = {
                    "status": "ok",
                    "iterations": rep.iterations,
                    "beta": abs(rep.beta),
                }
            elif name == "taylor0":
                if freq.chart != "inner" or abs(freq.coord) >= 1.0:
                    raise ValueError(
                        "taylor0 needs |q| < 1 (inner chart, off the circle)"
                    )
                data = taylor_data
                if data is None or data.f_ref is not f or data.eps != eps:
                    data = taylor0_recursion(f, eps, N_q=n_taylor)
                solutions[name] = taylor0_eval(data, freq.coord)
                status[name] = {"status": "ok", "orders": len(data.orders)}
            else:
                raise ValueError(f"unknown method {name!r}")
        except ValueError as exc:
            status[name] = {"status": "skipped", "note": str(exc)}
        except KamforgeError as exc:
            status[name] = {"status": "failed", "note": str(exc)}

    pairs: dict = {}
    names = [n for n in methods if n in solutions]
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ua = _demean(solutions[a])
            ub = _demean(solutions[b])
            pairs[f"{a}_vs_{b}"] = sup_norm(ua - ub)
    return {"methods": status, "pairs": pairs}


def conjugate_reflection_check(f: FourierSeries, freq: Frequency, eps,
                               config: SolverConfig | None = None) -> float:
    """Defect of the real-symmetry pairing between q and 1/conj(q).

    Solves at omega and at conj(omega) and returns
    max_k |conj(u_k(q)) - u'_{-k}(1/conj(q))| — zero for exact arithmetic
    when f is real-symmetric and eps real.
    """
    fN = f.N
    sym_defect = max(
        abs(np.conj(f.coeff(k)) - f.coeff(-k)) for k in range(fN + 1)
    )
    if sym_defect > 1e-13:
        warnings.warn("f is not real-symmetric; the pairing law need not hold",
                      RuntimeWarning, stacklevel=2)
    if abs(complex(eps).imag) > 1e-15:
        warnings.warn("eps is not real; the pairing law need not hold",
                      RuntimeWarning, stacklevel=2)
    c1 = solve_curve(f, freq, eps, config)
    c2 = solve_curve(f, reflected(freq), eps, config)
    N = max(c1.u.N, c2.u.N)
    a = pad_to(c1.u, N).coeffs
    b = pad_to(c2.u, N).coeffs
    return float(np.max(np.abs(np.conj(a) - b[::-1])))
