"""Rotation numbers, multiplier charts, and Diophantine set geometry.

A rotation number omega (complex, real part mod 1) maps to the multiplier
q = exp(2 pi i omega).  The Riemann sphere of multipliers is covered by two
charts: the *inner* chart (|q| <= 1, i.e. Im omega >= 0, coordinate q) and
the *outer* chart (coordinate xi = 1/q).  Both chart coordinates stay in
the closed unit disc, so no intermediate quantity here ever overflows no
matter how large |Im omega| gets; ``log_scale`` = 2 pi Im(omega) carries
the magnitude exactly.

The real Diophantine set of exponent tau and constant M is the complement
of the open intervals of radius 1/(M m^(2+tau)) around every rational n/m;
its complex extension admits omega whenever |Im omega| dominates the real
distance to the set.  Because floats are rational, membership is always
relative to a truncated union (denominators m <= m_max); every artifact
records m_max and the first untested denominator.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import zeta as _zeta

from .errors import BoundViolationError, ResonanceError

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# frequencies and charts


@dataclass(frozen=True)
class Frequency:
    """A rotation number together with its multiplier-chart data.

    ``coord`` is the coordinate in the active chart (q inner, xi outer) and
    always has modulus <= 1; ``q`` itself may overflow to inf deep in the
    outer chart, which is why downstream code works with ``coord``.
    """

    omega: complex
    q: complex
    chart: str        # "inner" | "outer"
    log_scale: float  # 2 pi Im(omega)
    coord: complex

    @property
    def is_pole(self) -> bool:
        """True at the chart centers q = 0 and q = infinity."""
        return self.coord == 0

    @property
    def xi(self) -> complex:
        if self.chart == "outer":
            return self.coord
        if self.coord == 0:
            return complex(math.inf, 0.0)
        return 1.0 / self.coord


def from_omega(omega) -> Frequency:
    om = complex(omega)
    if math.isinf(om.imag):
        if om.imag > 0:
            return Frequency(complex(0.0, math.inf), 0j, "inner", math.inf, 0j)
        return Frequency(complex(0.0, -math.inf), complex(math.inf, 0.0),
                         "outer", -math.inf, 0j)
    om = complex(om.real % 1.0, om.imag)
    log_scale = _TWO_PI * om.imag
    if om.imag >= 0:
        coord = cmath.exp(2j * math.pi * om)      # |coord| = e^{-2 pi Im} <= 1
        return Frequency(om, coord, "inner", log_scale, coord)
    coord = cmath.exp(-2j * math.pi * om)         # |coord| = e^{2 pi Im} < 1
    try:
        q = 1.0 / coord
    except ZeroDivisionError:  # pragma: no cover - coord never exactly 0 here
        q = complex(math.inf, 0.0)
    return Frequency(om, q, "outer", log_scale, coord)


def from_q(q) -> Frequency:
    qq = complex(q)
    if qq == 0:
        return from_omega(complex(0.0, math.inf))
    if math.isinf(abs(qq)):
        return from_omega(complex(0.0, -math.inf))
    re = cmath.phase(qq) / _TWO_PI
    im = -math.log(abs(qq)) / _TWO_PI
    return from_omega(complex(re, im))


def reflected(freq: Frequency) -> Frequency:
    """The real-symmetry partner: omega -> conj(omega), q -> 1/conj(q)."""
    om = freq.omega
    return from_omega(complex(om.real, -om.imag))


def lambda_k(freq: Frequency, k: int) -> complex:
    """The elementary divisor 1 / (q^k - 1), evaluated overflow-free.

    The branch is chosen by the sign of k * Im(omega) so the exponential
    w always has modulus <= 1; on the amplified side the algebraically
    equal form w / (1 - w) with w = q^{-k} is used.  (The reflection
    -1 - lambda_{-k} would be exact algebra too, but it cancels
    catastrophically once |lambda_k| drops under the ulp of 1, and the
    forward multipliers q^k - 1 grow fast enough to surface that absolute
    error; w / (1 - w) keeps full relative precision instead.)
    """
    k = int(k)
    if k == 0:
        raise ValueError("lambda_k is undefined at k = 0")
    if freq.is_pole:
        at_zero = -1.0 + 0.0j if k > 0 else 0.0 + 0.0j
        return at_zero if freq.chart == "inner" else (-1.0 - at_zero)
    om = freq.omega
    if k * om.imag >= 0:
        w = cmath.exp(2j * math.pi * k * om)
        d = w - 1.0
        if abs(d) < 1e-300:
            raise ResonanceError(
                f"q^k - 1 vanished at k = {k}", {"k": k, "omega": [om.real, om.imag]}
            )
        return 1.0 / d
    w = cmath.exp(-2j * math.pi * k * om)
    d = 1.0 - w
    if abs(d) < 1e-300:
        raise ResonanceError(
            f"q^k - 1 vanished at k = {k}", {"k": k, "omega": [om.real, om.imag]}
        )
    return w / d


def dist_to_integers(z) -> float:
    """Distance from a real or complex number to the integer lattice."""
    zz = complex(z)
    return math.hypot(zz.real - round(zz.real), zz.imag)


def check_exp_dist_bound(z) -> bool:
    """Certify |exp(2 pi i z) - 1| >= dist(z, Z) on the strip |Im z| <= 1/2.

    Raises ``BoundViolationError`` if the inequality fails (it cannot, for
    correct code), ``ValueError`` outside the strip.
    """
    zz = complex(z)
    if abs(zz.imag) > 0.5:
        raise ValueError("bound certified only for |Im z| <= 1/2")
    lhs = abs(cmath.exp(2j * math.pi * zz) - 1.0)
    rhs = dist_to_integers(zz)
    if lhs + 1e-15 < rhs:
        raise BoundViolationError(
            "exp-distance bound violated",
            {"z": [zz.real, zz.imag], "lhs": lhs, "rhs": rhs},
        )
    return True


# ---------------------------------------------------------------------------
# Diophantine classes


def _fold(x: float) -> float:
    """Reduce mod 1 and fold to [0, 1/2]; both maps are exact in binary."""
    y = float(x) % 1.0
    if y > 0.5:
        y = 1.0 - y
    return y


@dataclass
class DiophantineClass:
    """Parameters (M, tau) of the gap family, truncated at m_max.

    Admissibility requires M > 2 zeta(1+tau) so the gaps cannot cover the
    circle.  ``sigma`` = 4 + 2 tau is the loss-of-regularity exponent that
    the small-divisor bounds cost downstream.
    """

    M: float = 6.0
    tau: float = 0.5
    m_max: int = 2000
    sigma: float = field(init=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.m_max < 2:
            raise ValueError("m_max must be at least 2")
        bound = 2.0 * float(_zeta(1.0 + self.tau))
        if not self.M > bound:
            raise ValueError(
                f"M = {self.M} not admissible: need M > 2 zeta(1+tau) = {bound:.6f}"
            )
        self.sigma = 4.0 + 2.0 * self.tau
        self._gap_cache = None

    # -- real margins ------------------------------------------------------

    def gap_radius(self, m: int) -> float:
        return 1.0 / (self.M * float(m) ** (2.0 + self.tau))

    def measure_bound(self) -> float:
        return 2.0 * float(_zeta(1.0 + self.tau)) / self.M

    def _gaps(self):
        if self._gap_cache is None:
            self._gap_cache = _merged_gap_union(self.M, self.tau, self.m_max)
        return self._gap_cache


def dioph_real_margin(x: float, cls: DiophantineClass):
    """Worst normalized closeness of x to rationals with m <= m_max.

    Returns ``(margin, (n, m))`` where margin = min_m |x - n/m| M m^(2+tau)
    over 1 <= m <= m_max (n the nearest numerator), computed for the folded
    representative of x in [0, 1/2].  Membership in the truncated real set
    is margin >= 1.  The minimum over all m is attained at a continued-
    fraction convergent denominator (best-approximation property), so only
    convergents are scanned, in exact integer arithmetic.
    """
    y = _fold(x)
    fr = Fraction(y)
    margin = math.inf
    worst = (0, 1)
    num, den = fr.numerator, fr.denominator
    p_prev, q_prev, p_cur, q_cur = 0, 1, 1, 0  # convergents p/q, seeded before a0
    a = num // den
    rem = num - a * den
    while True:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur > cls.m_max:
            break
        dist = abs(q_cur * fr - p_cur)  # exact rational arithmetic
        val = float(dist) * cls.M * float(q_cur) ** (1.0 + cls.tau)
        if val < margin:
            margin = val
            worst = (p_cur, q_cur)
        if rem == 0:
            break
        num, den = den, rem
        a = num // den
        rem = num - a * den
    return margin, worst


def _merged_gap_union(M: float, tau: float, m_max: int):
    """Union of all truncated gaps, as merged intervals on [0 - , 1 + ].

    Centers n/m are enumerated for n = 0..m-1 coprime to m, plus the
    duplicate integer gap at 1, so the union covers one full period with
    the wrap-around components split at 0 and 1.  The merge is a vectorized
    event sweep: sorting the left and right endpoints independently is
    legitimate for a union, and a component starts exactly where the number
    of open intervals drops to zero.

    Returns ``(starts, ends, measure)`` with the measure already clipped to
    the circle.
    """
    los, his = [], []
    for m in range(1, m_max + 1):
        r = 1.0 / (M * float(m) ** (2.0 + tau))
        if m == 1:
            centers = np.array([0.0, 1.0])
        else:
            ns = np.arange(1, m, dtype=np.int64)
            ns = ns[np.gcd(ns, m) == 1]
            centers = ns.astype(np.float64) / m
        los.append(centers - r)
        his.append(centers + r)
    lo = np.concatenate(los)
    hi = np.concatenate(his)
    del los, his
    lo.sort()
    hi.sort()
    idx = np.arange(lo.size, dtype=np.int64)
    start_mask = (idx - np.searchsorted(hi, lo, side="left")) == 0
    end_mask = (np.searchsorted(lo, hi, side="right") - (idx + 1)) == 0
    starts = lo[start_mask]
    ends = hi[end_mask]
    del lo, hi, idx, start_mask, end_mask
    if starts.size < 2 or starts[0] >= 0 or ends[-1] <= 1:
        raise AssertionError("gap union lost its wrap components (bug)")
    measure = float(np.sum(ends - starts) + starts[0] - ends[-1] + 1.0)
    return starts, ends, measure


def dist_to_AMR(x: float, cls: DiophantineClass) -> float:
    """Distance (on the circle) from Re-coordinate x to the truncated real set.

    Zero iff x lies outside every truncated gap.
    """
    return float(_dist_many(np.array([float(x)]), cls)[0])


def _dist_many(xs: np.ndarray, cls: DiophantineClass) -> np.ndarray:
    starts, ends, _ = cls._gaps()
    y = np.asarray(xs, dtype=np.float64) % 1.0
    i = np.searchsorted(starts, y, side="right") - 1
    inside = (i >= 0) & (y < ends[np.clip(i, 0, ends.size - 1)])
    out = np.zeros_like(y)
    if not np.any(inside):
        return out
    yi = y[inside]
    ii = i[inside]
    left = yi - starts[ii]
    right = ends[ii] - yi
    # components containing 0 and 1 are one circular gap; use the partner edge
    first, last = 0, starts.size - 1
    left = np.where(ii == first, yi - (starts[last] - 1.0), left)
    right = np.where(ii == last, (ends[first] + 1.0) - yi, right)
    out[inside] = np.minimum(left, right)
    return out


def in_AMC(omega, cls: DiophantineClass) -> bool:
    """Membership of omega in the complex extension of the truncated set."""
    om = complex(omega)
    return dist_to_AMR(om.real, cls) <= abs(om.imag)


def in_KM(freq: Frequency, cls: DiophantineClass) -> bool:
    """Membership of the multiplier in the sphere-side set (poles included)."""
    if freq.is_pole:
        return True
    return in_AMC(freq.omega, cls)


def check_small_divisor_bound(freq: Frequency, cls: DiophantineClass,
                              k_max: int = 100) -> dict:
    """Certify |lambda_k| <= sqrt(2) M |k|^(1+tau) for 0 < |k| <= k_max.

    Returns a report with the worst ratio; raises ``BoundViolationError``
    when any ratio exceeds one (a bug, or a frequency outside the set).
    """
    worst = 0.0
    worst_k = 0
    for k in range(1, k_max + 1):
        for kk in (k, -k):
            lam = lambda_k(freq, kk)
            bound = math.sqrt(2.0) * cls.M * float(abs(kk)) ** (1.0 + cls.tau)
            ratio = abs(lam) / bound
            if ratio > worst:
                worst = ratio
                worst_k = kk
    report = {"k_max": k_max, "max_ratio": worst, "k_at_max": worst_k}
    if worst > 1.0:
        raise BoundViolationError(
            f"small-divisor bound violated at k = {worst_k} (ratio {worst:.3e})",
            report,
        )
    return report


# ---------------------------------------------------------------------------
# exported geometry


@dataclass
class SetGeometry:
    """Materialized truncated gap union plus boundary samples."""

    M: float
    tau: float
    m_max: int
    gap_lo: np.ndarray          # merged components; first may start < 0
    gap_hi: np.ndarray          # last may end > 1
    total_gap_measure: float    # clipped to one period
    boundary_samples: np.ndarray  # complex omega-plane points on the sawtooth

    @property
    def first_untested_denominator(self) -> int:
        return self.m_max + 1

    def to_json_dict(self) -> dict:
        lo = np.maximum(self.gap_lo, 0.0)
        hi = np.minimum(self.gap_hi, 1.0)
        return {
            "M": float(self.M),
            "tau": float(self.tau),
            "m_max": int(self.m_max),
            "first_untested_denominator": self.first_untested_denominator,
            "total_gap_measure": float(self.total_gap_measure),
            "gaps": [[float(a), float(b)] for a, b in zip(lo, hi)],
            "boundary_samples": [[float(z.real), float(z.imag)]
                                 for z in self.boundary_samples],
        }


def export_set_geometry(cls: DiophantineClass, boundary_n: int = 512) -> SetGeometry:
    """Materialize the truncated gap union and sample its complex boundary.

    The boundary of the complex extension is the sawtooth |Im omega| =
    dist(Re omega, real set); both branches are traced (upper left-to-right,
    then lower right-to-left) at ``boundary_n`` points per branch.
    """
    starts, ends, measure = cls._gaps()
    xs = (np.arange(boundary_n) + 0.5) / boundary_n
    d = _dist_many(xs, cls)
    upper = xs + 1j * d
    lower = xs[::-1] - 1j * d[::-1]
    return SetGeometry(
        M=cls.M,
        tau=cls.tau,
        m_max=cls.m_max,
        gap_lo=starts,
        gap_hi=ends,
        total_gap_measure=measure,
        boundary_samples=np.concatenate([upper, lower]),
    )


# ---------------------------------------------------------------------------
# sampled families and the C1-holomorphic norm estimate


@dataclass
class SampledFamily:
    """Values (and chart derivatives) of a quantity along frequency samples.

    ``values[i]`` is a complex vector attached to ``points[i]``; ``derivs[i]``
    is its derivative with respect to the point's own chart coordinate, or
    None when unavailable (e.g. an isolated sweep point).
    """

    points: list
    values: list
    derivs: list

    def to_json_dict(self) -> dict:
        pts = []
        for fr in self.points:
            pts.append({
                "omega": [fr.omega.real, fr.omega.imag],
                "chart": fr.chart,
                "coord": [fr.coord.real, fr.coord.imag],
            })
        def vec(v):
            if v is None:
                return None
            return [[float(c.real), float(c.imag)] for c in np.atleast_1d(v)]
        return {
            "points": pts,
            "values": [vec(v) for v in self.values],
            "derivs": [vec(v) for v in self.derivs],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampledFamily":
        pts = []
        for p in d["points"]:
            om = complex(p["omega"][0], p["omega"][1])
            pts.append(from_omega(om))
        def unvec(v):
            if v is None:
                return None
            return np.array([complex(re, im) for re, im in v])
        return cls(points=pts,
                   values=[unvec(v) for v in d["values"]],
                   derivs=[unvec(v) for v in d["derivs"]])


def c1hol_norm_estimate(family: SampledFamily):
    """Sampled three-part estimate of the C1-holomorphic norm.

    Returns ``(n0, n1, n2)``:

    * n0 — largest sup-norm of the values;
    * n1 — largest of the claimed chart derivatives and of the raw
      increments |phi(q') - phi(q)| within a chart;
    * n2 — largest defect |(phi(q') - phi(q)) / (q' - q) - phi'(q)| of the
      difference quotients against the claimed derivatives.

    Charts are treated separately (outer-chart data must already be given
    in the outer coordinate) and combined by the maximum.
    """
    vals = [np.atleast_1d(np.asarray(v, dtype=np.complex128))
            for v in family.values]
    n0 = max((float(np.max(np.abs(v))) for v in vals), default=0.0)
    n1 = 0.0
    n2 = 0.0
    for chart in ("inner", "outer"):
        idx = [i for i, p in enumerate(family.points) if p.chart == chart]
        if not idx:
            continue
        coords = np.array([family.points[i].coord for i in idx])
        V = np.stack([vals[i] for i in idx])
        D = [None if family.derivs[i] is None
             else np.atleast_1d(np.asarray(family.derivs[i], dtype=np.complex128))
             for i in idx]
        for a in range(len(idx)):
            if D[a] is not None:
                n1 = max(n1, float(np.max(np.abs(D[a]))))
            dq = coords - coords[a]
            dv = V - V[a]
            if len(idx) > 1:
                n1 = max(n1, float(np.max(np.abs(dv))))
            ok = np.abs(dq) > 1e-12
            if D[a] is None or not np.any(ok):
                continue
            quot = dv[ok] / dq[ok, None]
            n2 = max(n2, float(np.max(np.abs(quot - D[a][None, :]))))
    return n0, n1, n2
