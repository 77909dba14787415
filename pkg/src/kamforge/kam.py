"""Modified Newton solver for invariant curves of the standard family.

The map is T_eps(x, y) = (x + y + eps f(x), y + eps f(x)).  A curve
gamma(theta) = (theta + u(theta), omega + v(theta)) with v = u - u(. - omega)
is invariant iff the second difference equation

    u(theta+omega) - 2 u(theta) + u(theta-omega) = eps f(theta + u(theta))

holds, i.e. iff the error functional E(u) = -delta u + eps f(id + u)
vanishes.  Each Newton step solves the factorized linearized equation

    A delta(A w) - (A w) delta A = A E(u) - <A E(u)>,   A = 1 + u',

by quadratures: alpha = 1/(A A+), psi = Gamma-(A E), mu0 = -<alpha psi>/<alpha>,
w = Gamma(alpha psi + mu0 alpha), and updates u <- u + A w.  The mean
<A E(u)> vanishes identically (for any u, not only solutions), which is
what makes the scheme well-posed without eliminating a parameter.

Numerics: a fixed spectral cutoff with monitored aliasing tails replaces
the proof's shrinking-strip schedule; the scheduled strip norms are logged
as diagnostics only.  Smallness hypotheses are replaced by runtime checks
(grid-min of |A A+|, a 10x residual-growth safeguard with small-divisor
diagnostics).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, NearSingularError, NoConvergenceError
from .fourier import (
    DEFAULT_CUTOFF,
    EXP_CAP,
    FourierSeries,
    clamp_small,
    compose_id_plus,
    derivative,
    evaluate,
    invert_pointwise,
    mean,
    product,
    strip_norm_bound,
    sup_norm,
    truncate,
)
from .frequency import DiophantineClass, Frequency, in_KM
from .operators import (
    DELTA,
    E_Q,
    GAMMA,
    GAMMA_MINUS,
    NABLA_MINUS,
    SHIFT_PLUS,
    apply,
    max_divisor_magnitude,
)

_TWO_PI = 2.0 * math.pi


@dataclass
class SolverConfig:
    """Knobs of the Newton (and Picard) iterations.

    ``R0 > R`` are the strip parameters used only for the logged
    strip-norm diagnostics; ``exp_cap`` mirrors the module-wide exponent
    cap.  ``eps`` may be carried here or passed per call.  ``seed`` enables
    warm starts (continuation in eps); the default seed is u = 0.
    """

    tol: float = 1e-12
    max_iters: int = 30
    cutoff: int = DEFAULT_CUTOFF
    eps: complex | None = None
    R0: float = 0.5
    R: float = 0.25
    exp_cap: float = EXP_CAP
    divergence_factor: float = 10.0
    amin_floor: float = 1e-8
    clamp_rel: float = 1e-16
    seed: FourierSeries | None = None
    picard_max_iters: int = 200
    picard_margin: float = 0.05
    picard_damping: float = 1.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.R < self.R0:
            raise ValueError("strip parameters must satisfy 0 < R < R0")
        if self.clamp_rel < 0:
            raise ValueError("clamp_rel must be nonnegative")
        if not 0 < self.picard_damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class SolveReport:
    residual_history: list = field(default_factory=list)
    quadratic_fit_slope: float = math.nan
    beta: complex = 0j
    aliasing_tail: float = 0.0
    converged: bool = False
    method: str = "newton"
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "quadratic_fit_slope": float(self.quadratic_fit_slope),
            "beta": [self.beta.real, self.beta.imag],
            "aliasing_tail": float(self.aliasing_tail),
            "diagnostics": self.diagnostics,
        }


@dataclass
class InvariantCurve:
    """A solved curve gamma(theta) = (theta + u(theta), omega + v(theta)).

    ``u`` is zero-mean after normalization; ``v`` = u - u(. - omega).  The
    forcing ``f`` is kept with the curve so the dynamical residual can be
    re-verified from the object (and its serialization) alone.
    """

    u: FourierSeries
    v: FourierSeries
    freq: Frequency
    eps: complex
    report: SolveReport
    f: FourierSeries

    def to_json_dict(self, dynamical: float | None = None) -> dict:
        d = {
            "frequency": {
                "omega": [self.freq.omega.real, self.freq.omega.imag],
                "q": [self.freq.q.real, self.freq.q.imag],
                "chart": self.freq.chart,
                "log_scale": self.freq.log_scale,
            },
            "eps": [complex(self.eps).real, complex(self.eps).imag],
            "u": self.u.to_json_dict(),
            "v": self.v.to_json_dict(),
            "f": self.f.to_json_dict(),
            "report": self.report.to_json_dict(),
        }
        if dynamical is not None:
            d["dynamical_residual"] = float(dynamical)
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "InvariantCurve":
        from .frequency import from_omega

        rep = SolveReport()
        r = d.get("report", {})
        rep.method = r.get("method", "newton")
        rep.converged = bool(r.get("converged", False))
        rep.iterations = int(r.get("iterations", 0))
        rep.residual_history = [float(x) for x in r.get("residual_history", [])]
        rep.quadratic_fit_slope = float(r.get("quadratic_fit_slope", math.nan))
        b = r.get("beta", [0.0, 0.0])
        rep.beta = complex(b[0], b[1])
        rep.aliasing_tail = float(r.get("aliasing_tail", 0.0))
        rep.diagnostics = r.get("diagnostics", {})
        om = d["frequency"]["omega"]
        return cls(
            u=FourierSeries.from_json_dict(d["u"]),
            v=FourierSeries.from_json_dict(d["v"]),
            freq=from_omega(complex(om[0], om[1])),
            eps=complex(d["eps"][0], d["eps"][1]),
            report=rep,
            f=FourierSeries.from_json_dict(d["f"]),
        )

    def csv_rows(self, grid_n: int = 256):
        """Curve samples: theta, re_x, im_x, re_y, im_y."""
        theta = np.arange(grid_n) / grid_n
        x = theta + evaluate(self.u, theta)
        y = self.freq.omega + evaluate(self.v, theta)
        for j in range(grid_n):
            yield (float(theta[j]), float(x[j].real), float(x[j].imag),
                   float(y[j].real), float(y[j].imag))


# ---------------------------------------------------------------------------
# the error functional and the linearized solve


def _error_functional(u, f, freq, eps, cutoff=None):
    comp, rep = compose_id_plus(f, u, cutoff=cutoff)
    E = complex(eps) * comp - apply(DELTA, u, freq)
    return E, rep.aliasing_tail


def error_functional(u: FourierSeries, f: FourierSeries, freq: Frequency,
                     eps, cutoff: int | None = None) -> FourierSeries:
    """E(u) = -delta u + eps f(id + u); zero exactly on invariant curves."""
    return _error_functional(u, f, freq, eps, cutoff)[0]


def linearized_solve(A: FourierSeries, E: FourierSeries, freq: Frequency,
                     floor: float = 1e-8) -> FourierSeries:
    """Solve A delta(A w) - (A w) delta A = A E - <A E> with <w> = 0.

    Quadrature construction: alpha = 1/(A A+), psi = Gamma-(A E),
    mu0 = -<alpha psi>/<alpha>, w = Gamma(alpha psi + mu0 alpha).  The mean
    of w vanishes exactly because Gamma kills mode zero.
    """
    Ap = apply(SHIFT_PLUS, A, freq)
    alpha = invert_pointwise(product(A, Ap), floor=floor)
    psi = apply(GAMMA_MINUS, product(A, E), freq)
    alpha_mean = mean(alpha)
    if abs(alpha_mean) < 1e-8:
        raise NearSingularError(
            f"<alpha> = {abs(alpha_mean):.3e} too small for the mean correction",
            {"alpha_mean": [alpha_mean.real, alpha_mean.imag]},
        )
    ap = product(alpha, psi)
    mu0 = -mean(ap) / alpha_mean
    chi = ap + mu0 * alpha
    return apply(GAMMA, chi, freq)


def newton_step(u: FourierSeries, f: FourierSeries, freq: Frequency, eps):
    """One modified Newton update u -> u + A w, A = 1 + u'.

    Returns ``(u_next, step_report)`` with both residual sup-norms in the
    report.  Raises ``DivergenceError`` when the residual grows more than
    tenfold (safeguard; diagnostics carry the largest small divisor).
    """
    du = derivative(u)
    du_sup = sup_norm(du)
    if du_sup >= 1.0:
        raise DivergenceError(
            f"grid-sup of u' is {du_sup:.3g} >= 1; id + u no longer invertible",
            {"du_sup": du_sup},
        )
    E, tail0 = _error_functional(u, f, freq, eps)
    r0 = sup_norm(E)
    A = FourierSeries.constant(1.0) + du
    w = linearized_solve(A, E, freq)
    u_next = u + product(A, w)
    E1, tail1 = _error_functional(u_next, f, freq, eps)
    r1 = sup_norm(E1)
    report = {
        "residual_before": r0,
        "residual_after": r1,
        "aliasing_tail": max(tail0, tail1),
        "w_sup": sup_norm(w),
    }
    if r1 > 10.0 * r0 and r1 > 1e-13:
        lam, k = max_divisor_magnitude(freq, max(u.N, f.N, 1))
        raise DivergenceError(
            f"residual grew {r1 / max(r0, 1e-300):.2g}x in one step",
            {"residual_before": r0, "residual_after": r1,
             "max_divisor": lam, "max_divisor_k": k},
        )
    return u_next, report


def _fit_slope(history) -> float:
    """Least-squares slope of log r_{n+1} against log r_n, pre-floor pairs."""
    xs, ys = [], []
    for a, b in zip(history, history[1:]):
        if a > 0 and b >= 1e-13:
            xs.append(math.log10(a))
            ys.append(math.log10(b))
    if len(xs) < 2:
        xs, ys = [], []
        for a, b in zip(history, history[1:]):
            if a > 0 and b >= 1e-15:
                xs.append(math.log10(a))
                ys.append(math.log10(b))
    if len(xs) < 2:
        return math.nan
    return float(np.polyfit(xs, ys, 1)[0])


def _strip_log_entry(u, it, config):
    kappa = config.R0 - config.R
    Rn = config.R + kappa * 0.5 ** (it + 1)
    try:
        bound = strip_norm_bound(u, Rn)
    except Exception:
        bound = None
    return {"iter": it, "R_n": Rn, "strip_norm_bound": bound}


def _fixed_point_defect(u, eqcomp, eps):
    """Sup-norm of (u - <u>) - eps E_q(f(id+u)), given E_q of the composition.

    Because E_q delta = id - mean exactly, this vanishes precisely when the
    invariance error does (up to the mean gauge, which the normalization
    fixes at the end).  Unlike the raw error it never multiplies stored
    coefficients by the forward divisors q^k - 2 + q^{-k}, which grow like
    |q|^{-|k|} off the unit circle and would amplify round-off into a fake
    divergence signal.
    """
    return sup_norm((u - FourierSeries.constant(mean(u))) - eps * eqcomp)


def solve_curve(f: FourierSeries, freq: Frequency, eps=None,
                config: SolverConfig | None = None,
                dioph: DiophantineClass | None = None) -> InvariantCurve:
    """Newton iteration from u = 0 (or a warm seed), then normalization.

    Convergence is monitored by the gauge-fixed fixed-point defect
    ||(u - <u>) - eps E_q f(id+u)||, which is zero exactly when the
    invariance error is (and stays honest off the unit circle, where the
    raw error routes round-off through exponentially large multipliers;
    on the circle the two differ by a factor at most ||delta|| <= 4).
    Raises ``NoConvergenceError`` (carrying the residual history) when the
    budget runs out — this is the expected failure mode near resonances,
    where no analytic curve exists — and ``DivergenceError`` when a step
    blows up, with the largest small divisor in the diagnostics.  The
    converged u is shifted to exact zero mean by u(theta - u0) - u0, which
    maps solutions to solutions.
    """
    config = config or SolverConfig()
    if eps is None:
        eps = config.eps
    if eps is None:
        raise ValueError("eps must be given (argument or config.eps)")
    eps = complex(eps)
    diagnostics: dict = {"strip_log": []}
    if dioph is not None:
        member = in_KM(freq, dioph)
        diagnostics["in_KM"] = member
        if not member:
            warnings.warn(
                "frequency lies outside the truncated Diophantine set; "
                "convergence is not covered by the certified regime",
                RuntimeWarning,
                stacklevel=2,
            )
    fmean = abs(mean(f))
    if fmean > 1e-13 * max(sup_norm(f), 1.0):
        warnings.warn(
            f"forcing has mean {fmean:.3e}; the invariance equation is "
            "obstructed at first order",
            RuntimeWarning,
            stacklevel=2,
        )

    u = config.seed if config.seed is not None else FourierSeries.zero(0)
    history: list[float] = []
    tails: list[float] = []
    converged = False
    for it in range(config.max_iters + 1):
        comp, crep = compose_id_plus(f, u)
        tails.append(crep.aliasing_tail)
        eqcomp = apply(E_Q, comp, freq)
        r = _fixed_point_defect(u, eqcomp, eps)
        history.append(r)
        diagnostics["strip_log"].append(_strip_log_entry(u, it, config))
        if r <= config.tol:
            converged = True
            break
        if len(history) >= 2 and r > config.divergence_factor * history[-2]:
            lam, k = max_divisor_magnitude(freq, max(config.cutoff, f.N))
            raise DivergenceError(
                f"residual grew {r / history[-2]:.2g}x at iteration {it}",
                {"residual_history": history, "max_divisor": lam,
                 "max_divisor_k": k},
            )
        if it == config.max_iters:
            break
        du = derivative(u)
        if sup_norm(du) >= 1.0:
            raise DivergenceError(
                "grid-sup of u' reached 1; leaving the perturbative regime",
                {"residual_history": history},
            )
        A = FourierSeries.constant(1.0) + du
        E = eps * comp - apply(DELTA, u, freq)
        w = linearized_solve(A, E, freq, floor=config.amin_floor)
        w_sup = sup_norm(w)
        if w_sup >= 1.0:
            lam, k = max_divisor_magnitude(freq, max(w.N, f.N, 2))
            raise DivergenceError(
                f"Newton correction has sup {w_sup:.3g} >= 1; "
                "a small divisor has taken over",
                {"residual_history": history, "max_divisor": lam,
                 "max_divisor_k": k},
            )
        u_raw = u + product(A, w)
        u, t_tail = truncate(u_raw, config.cutoff)
        tails.append(t_tail)
        u = clamp_small(u, config.clamp_rel)

    if not converged:
        lam, k = max_divisor_magnitude(freq, max(config.cutoff, f.N))
        raise NoConvergenceError(
            f"no convergence to {config.tol:.1e} within {config.max_iters} "
            f"iterations (last residual {history[-1]:.3e})",
            residual_history=history,
            diagnostics={"max_divisor": lam, "max_divisor_k": k,
                         "residual_history": history},
        )

    # normalization: u~(theta) = u(theta - u0) - u0 (exactly mean-killing)
    u0 = mean(u)
    if u0 != 0:
        shifted, _ = compose_id_plus(u, FourierSeries.constant(-u0))
        u = shifted - FourierSeries.constant(u0)
        c = u.coeffs.copy()
        c[u.N] = 0.0  # analytically exact zero; strip the ~1e-17 roundoff
        u = FourierSeries(c)
    comp_n, crep_n = compose_id_plus(f, u)
    tails.append(crep_n.aliasing_tail)
    diagnostics["post_normalization_residual"] = _fixed_point_defect(
        u, apply(E_Q, comp_n, freq), eps)

    v = apply(NABLA_MINUS, u, freq)
    beta = eps * mean(comp_n)
    report = SolveReport(
        residual_history=history,
        quadratic_fit_slope=_fit_slope(history),
        beta=beta,
        aliasing_tail=max(tails),
        converged=converged,
        method="newton",
        iterations=len(history) - 1,
        diagnostics=diagnostics,
    )
    return InvariantCurve(u=u, v=v, freq=freq, eps=eps, report=report, f=f)


# ---------------------------------------------------------------------------
# verification functionals


def dynamical_residual(curve: InvariantCurve, grid_n: int = 1024) -> float:
    """Sup over a real grid of |gamma(theta+omega) - T_eps(gamma(theta))|.

    The x-component is compared modulo 1 (angles); f is evaluated through
    its holomorphic extension when the curve is complex.
    """
    om = curve.freq.omega
    if not math.isfinite(om.imag):
        raise ValueError("dynamical residual undefined at the chart poles")
    theta = np.arange(grid_n) / grid_n
    u_t = evaluate(curve.u, theta)
    v_t = evaluate(curve.v, theta)
    x = theta + u_t
    y = om + v_t
    fx = evaluate(curve.f, x)
    x1 = x + y + complex(curve.eps) * fx
    y1 = y + complex(curve.eps) * fx
    tw = theta + om
    xw = tw + evaluate(curve.u, tw)
    yw = om + evaluate(curve.v, tw)
    dx = xw - x1
    dx = dx - np.round(dx.real)  # angle component modulo 1
    dy = yw - y1
    return float(max(np.max(np.abs(dx)), np.max(np.abs(dy))))


def mean_identity_residual(u: FourierSeries, f: FourierSeries,
                           freq: Frequency, eps) -> float:
    """|<(1 + u') E(u)>| — vanishes identically for ANY u (not only solutions).

    What it actually measures numerically is composition aliasing; a
    nonzero forcing mean shows up here as |eps <f>|.
    """
    E, _ = _error_functional(u, f, freq, eps)
    A = FourierSeries.constant(1.0) + derivative(u)
    return abs(mean(product(A, E)))


def step_identity_residual(u: FourierSeries, h: FourierSeries,
                           f: FourierSeries, freq: Frequency, eps,
                           quad_nodes: int = 16) -> float:
    """Defect of the step-residual law E(u+h) = (h/A) E(u)' + Q(u, h).

    Q(u,h) = (int_0^1 eps f''(id+u+th) (1-t) dt) h^2, evaluated by
    Gauss-Legendre quadrature with ``quad_nodes`` nodes.  The defect is an
    exact-zero identity up to composition aliasing.
    """
    eps = complex(eps)
    E_u, _ = _error_functional(u, f, freq, eps)
    E_uh, _ = _error_functional(u + h, f, freq, eps)
    A = FourierSeries.constant(1.0) + derivative(u)
    h_over_A = product(h, invert_pointwise(A))
    first = product(h_over_A, derivative(E_u))
    f2 = derivative(f, 2)
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    t = 0.5 * (nodes + 1.0)       # map to [0, 1]
    wts = 0.5 * weights
    acc = None
    for ti, wi in zip(t, wts):
        comp, _ = compose_id_plus(f2, u + float(ti) * h)
        term = (wi * (1.0 - ti)) * comp
        acc = term if acc is None else acc + term
    Q = eps * product(acc, product(h, h))
    defect = E_uh - first - Q
    return sup_norm(defect)
