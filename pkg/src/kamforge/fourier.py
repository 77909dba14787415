"""Truncated Fourier series on the circle, with complex extensions.

A series is stored as the coefficient vector (c_{-N}, ..., c_N) of

    phi(theta) = sum_{|k| <= N} c_k exp(2 pi i k theta),

which converges on any horizontal strip |Im theta| <= r once the
coefficients decay like exp(-2 pi r |k|).  All heavy operations (products,
compositions, pointwise inverses) go through equispaced grids and the FFT;
grids are oversampled by at least a factor of four relative to the joint
cutoff and every truncation reports the magnitude of what it dropped.

Double precision only.  Any exponent that would exceed ``EXP_CAP`` (the
IEEE-754 overflow threshold, with margin) raises ``OverflowRiskError``
instead of silently producing infinities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .errors import NearSingularError, OverflowRiskError

DEFAULT_CUTOFF = 256
HARD_CAP = 4096          # no series ever carries more than 2*HARD_CAP+1 modes
EXP_CAP = 700.0          # |exponent| cap; exp(709.78) overflows a double
GRID_FACTOR = 4          # minimal oversampling of composition grids

_TWO_PI = 2.0 * np.pi


class FourierSeries:
    """Immutable truncated Fourier series.

    Parameters
    ----------
    coeffs : array_like
        Complex coefficients ordered k = -N..N (odd length).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.ndim != 1 or arr.size % 2 != 1:
            raise ValueError("coeffs must be a 1-d odd-length array (k = -N..N)")
        if arr.size > 2 * HARD_CAP + 1:
            raise ValueError(f"cutoff exceeds hard cap {HARD_CAP}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FourierSeries is immutable")

    def __reduce__(self):
        # immutability blocks the default setattr-based unpickling;
        # rebuild through the constructor instead
        return (FourierSeries, (np.array(self.coeffs),))

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    def coeff(self, k: int) -> complex:
        """Coefficient c_k, zero beyond the cutoff."""
        if abs(k) > self.N:
            return 0.0 + 0.0j
        return complex(self.coeffs[k + self.N])

    def __call__(self, theta):
        return evaluate(self, theta)

    # -- small arithmetic (cutoffs align to the larger operand) ------------

    def _binary(self, other, sign):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        N = max(self.N, other.N)
        a = pad_to(self, N).coeffs
        b = pad_to(other, N).coeffs
        return FourierSeries(a + sign * b)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return FourierSeries(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, FourierSeries):
            return product(self, other)
        return FourierSeries(self.coeffs * complex(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"FourierSeries(N={self.N}, sup~{sup_norm(self):.3g})"

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, N: int = 0) -> "FourierSeries":
        return cls(np.zeros(2 * N + 1, dtype=np.complex128))

    @classmethod
    def constant(cls, value: complex) -> "FourierSeries":
        return cls(np.array([value], dtype=np.complex128))

    @classmethod
    def basis(cls, k: int, amplitude: complex = 1.0) -> "FourierSeries":
        """The pure mode e_k(theta) = amplitude * exp(2 pi i k theta)."""
        N = abs(k)
        c = np.zeros(2 * N + 1, dtype=np.complex128)
        c[k + N] = amplitude
        return cls(c)

    @classmethod
    def cos(cls) -> "FourierSeries":
        """cos(2 pi theta) = (e_1 + e_{-1}) / 2."""
        return cls(np.array([0.5, 0.0, 0.5], dtype=np.complex128))

    @classmethod
    def from_dict(cls, d: dict) -> "FourierSeries":
        """Build from a {mode: coefficient} mapping."""
        if not d:
            return cls.zero(0)
        N = max(abs(int(k)) for k in d)
        c = np.zeros(2 * N + 1, dtype=np.complex128)
        for k, v in d.items():
            c[int(k) + N] = v
        return cls(c)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "N": self.N,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FourierSeries":
        coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        if coeffs.size != 2 * int(d["N"]) + 1:
            raise ValueError("coeff count does not match N")
        return cls(coeffs)


@dataclass(frozen=True)
class CompositionReport:
    """What a grid composition dropped and how finely it sampled."""

    aliasing_tail: float
    grid_size: int


# ---------------------------------------------------------------------------
# point evaluation and exact grids


def evaluate(phi: FourierSeries, theta):
    """Evaluate phi at real or complex angles (scalar or array).

    Raises
    ------
    OverflowRiskError
        If 2 pi N |Im theta| exceeds the exponent cap for some point.
    """
    th = np.asarray(theta, dtype=np.complex128)
    scalar = th.ndim == 0
    th = np.atleast_1d(th)
    N = phi.N
    if N > 0:
        worst = _TWO_PI * N * float(np.max(np.abs(th.imag), initial=0.0))
        if worst > EXP_CAP:
            raise OverflowRiskError(
                f"evaluation exponent 2*pi*N*|Im theta| = {worst:.3g} exceeds cap",
                {"exponent": worst, "cap": EXP_CAP},
            )
    ks = np.arange(-N, N + 1)
    vals = np.exp(2j * np.pi * np.outer(th, ks)) @ phi.coeffs
    return complex(vals[0]) if scalar else vals


def grid_values(phi: FourierSeries, G: int) -> np.ndarray:
    """Exact samples phi(j/G), j = 0..G-1, via the inverse FFT.

    Requires G >= 2N+1 so no two retained modes alias.
    """
    N = phi.N
    if G < 2 * N + 1:
        raise ValueError("grid too coarse for the series cutoff")
    X = np.zeros(G, dtype=np.complex128)
    ks = np.arange(-N, N + 1)
    X[ks % G] = phi.coeffs
    return np.fft.ifft(X) * G


def _coeffs_from_grid(values: np.ndarray, K: int) -> np.ndarray:
    """Modes -K..K of the trigonometric interpolant through *values*."""
    G = values.size
    if 2 * K + 1 > G:
        raise ValueError("requested more modes than grid points")
    c = np.fft.fft(values) / G
    ks = np.arange(-K, K + 1)
    return c[ks % G]


def sup_norm(phi: FourierSeries) -> float:
    """Sup of |phi| over the real circle (anti-aliased grid max)."""
    G = next_fast_len(max(2 * (2 * phi.N + 1), 64))
    return float(np.max(np.abs(grid_values(phi, G))))


def mean(phi: FourierSeries) -> complex:
    """The average over the circle: the k = 0 coefficient."""
    return phi.coeff(0)


def coeff(phi: FourierSeries, k: int) -> complex:
    return phi.coeff(k)


def pad_to(phi: FourierSeries, N: int) -> FourierSeries:
    if N < phi.N:
        raise ValueError("pad_to cannot shrink; use truncate")
    if N == phi.N:
        return phi
    extra = N - phi.N
    return FourierSeries(np.pad(phi.coeffs, (extra, extra)))


def truncate(phi: FourierSeries, N: int):
    """Drop modes beyond |k| = N.  Returns (series, sup of dropped coeffs)."""
    if N >= phi.N:
        return phi, 0.0
    lo = phi.N - N
    dropped = np.concatenate([phi.coeffs[:lo], phi.coeffs[phi.coeffs.size - lo:]])
    tail = float(np.max(np.abs(dropped))) if dropped.size else 0.0
    return FourierSeries(phi.coeffs[lo:phi.coeffs.size - lo]), tail


def clamp_small(phi: FourierSeries, rel: float = 1e-16) -> FourierSeries:
    """Zero every coefficient below rel * max|coeffs| and trim the support.

    Coefficients that far below the leading one are round-off, not signal;
    when the multiplier q sits off the unit circle the forward difference
    operators amplify mode k by |q|^(-|k|), so leaving such noise in place
    destroys an iteration even though it is harmless for |q| = 1.  Clamping
    to an exact zero keeps the amplification acting on genuine data only.
    """
    if rel <= 0:
        return phi
    c = phi.coeffs
    m = float(np.max(np.abs(c)))
    if m == 0.0:
        return FourierSeries.zero(0)
    keep = np.abs(c) >= rel * m
    if bool(keep.all()):
        return phi
    out = np.where(keep, c, 0.0)
    nz = np.nonzero(out)[0]
    N = phi.N
    reach = max(abs(int(nz.min()) - N), abs(int(nz.max()) - N))
    return FourierSeries(out[N - reach:N + reach + 1])


# ---------------------------------------------------------------------------
# products and derivatives


def _conv(ca: np.ndarray, cb: np.ndarray) -> np.ndarray:
    """Full linear convolution of coefficient vectors."""
    la, lb = ca.size, cb.size
    if la * lb <= 200_000:
        return np.convolve(ca, cb)
    L = la + lb - 1
    G = next_fast_len(L)
    return np.fft.ifft(np.fft.fft(ca, G) * np.fft.fft(cb, G))[:L]


def product(a: FourierSeries, b: FourierSeries) -> FourierSeries:
    """Exact series product; the output cutoff is the sum of the cutoffs.

    Above the hard cap the result is truncated (the analytic tail of any
    well-resolved operand sits far below double precision there).
    """
    raw = _conv(a.coeffs, b.coeffs)
    Nout = (raw.size - 1) // 2
    if Nout > HARD_CAP:
        lo = Nout - HARD_CAP
        tail = float(np.max(np.abs(np.concatenate([raw[:lo], raw[raw.size - lo:]]))))
        raw = raw[lo:raw.size - lo]
        warnings.warn(
            f"product cutoff hit hard cap {HARD_CAP}; dropped tail {tail:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return FourierSeries(raw)


def derivative(phi: FourierSeries, order: int = 1) -> FourierSeries:
    """d^p/dtheta^p acting as multiplication by (2 pi i k)^p on mode k."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    ks = np.arange(-phi.N, phi.N + 1)
    mult = (2j * np.pi * ks) ** order
    return FourierSeries(phi.coeffs * mult)


# ---------------------------------------------------------------------------
# composition with a perturbed identity


def _compose_grid_size(joint: int) -> int:
    return int(next_fast_len(max(GRID_FACTOR * (joint + 1), 8)))


def compose_id_plus(f: FourierSeries, u: FourierSeries, cutoff: int | None = None):
    """Compute f(theta + u(theta)) as a truncated series.

    Returns (series, CompositionReport).  Two branches are exact:
    a zero displacement returns f unchanged (bit for bit), and a constant
    displacement c multiplies mode k by exp(2 pi i k c).  The general branch
    samples on an oversampled grid and reports the largest coefficient it
    discarded (the aliasing tail).
    """
    joint = f.N + u.N
    G_virtual = _compose_grid_size(joint)

    if not np.any(u.coeffs):
        return FourierSeries(f.coeffs), CompositionReport(0.0, G_virtual)

    if u.N == 0 or not np.any(np.delete(u.coeffs, u.N)):
        c = u.coeff(0)
        ks = np.arange(-f.N, f.N + 1)
        worst = _TWO_PI * f.N * abs(c.imag)
        if worst > EXP_CAP:
            raise OverflowRiskError(
                f"constant-shift exponent {worst:.3g} exceeds cap",
                {"exponent": worst, "cap": EXP_CAP},
            )
        shifted = f.coeffs * np.exp(2j * np.pi * ks * c)
        return FourierSeries(shifted), CompositionReport(0.0, G_virtual)

    out_cutoff = min(HARD_CAP, joint) if cutoff is None else min(cutoff, HARD_CAP)
    G = next_fast_len(max(GRID_FACTOR * (joint + 1), 2 * out_cutoff + 2, 8))
    theta = np.arange(G) / G
    z = theta + grid_values(u, G)
    if f.N > 0:
        worst = _TWO_PI * f.N * float(np.max(np.abs(z.imag)))
        if worst > EXP_CAP:
            raise OverflowRiskError(
                f"composition exponent {worst:.3g} exceeds cap",
                {"exponent": worst, "cap": EXP_CAP},
            )
    vals = evaluate(f, z)
    c_full = np.fft.fft(vals) / G
    keep = min(out_cutoff, (G - 1) // 2)
    ks = np.arange(-keep, keep + 1)
    out = c_full[ks % G]
    drop_mask = np.ones(G, dtype=bool)
    drop_mask[ks % G] = False
    tail = float(np.max(np.abs(c_full[drop_mask]))) if drop_mask.any() else 0.0
    return FourierSeries(out), CompositionReport(tail, G)


# ---------------------------------------------------------------------------
# pointwise inverse


def invert_pointwise(A: FourierSeries, floor: float = 1e-8,
                     cutoff: int | None = None) -> FourierSeries:
    """Series of 1/A(theta), built from an oversampled grid.

    The output cutoff adapts: it is the smallest K whose discarded grid
    spectrum sits below 1e-13 relative to the largest coefficient (one grid
    refinement is attempted if the first grid cannot get there).  Raises
    ``NearSingularError`` when min |A| on the grid is at or below *floor*.
    """
    G = next_fast_len(max(8 * (A.N + 1), 512))
    for attempt in range(2):
        vals = grid_values(A, G)
        gmin = float(np.min(np.abs(vals)))
        if gmin <= floor:
            raise NearSingularError(
                f"min |A| on grid = {gmin:.3e} at/below floor {floor:.1e}",
                {"grid_min": gmin, "floor": floor},
            )
        c_full = np.fft.fft(1.0 / vals) / G
        scale = float(np.max(np.abs(c_full)))
        idx = np.arange(G)
        abs_k = np.minimum(idx, G - idx)
        Kmax = (G - 1) // 2
        level = np.zeros(Kmax + 2)
        np.maximum.at(level, np.minimum(abs_k, Kmax + 1), np.abs(c_full))
        # suffix[j] = largest coefficient at |k| >= j
        suffix = np.maximum.accumulate(level[::-1])[::-1]
        tol = 1e-13 * scale
        if cutoff is not None:
            K = min(cutoff, Kmax)
            break
        ok = np.nonzero(suffix <= tol)[0]
        if ok.size and ok[0] <= Kmax + 1:
            K = max(int(ok[0]) - 1, 0) if ok[0] > 0 else 0
            K = min(max(K, min(A.N, Kmax)), Kmax)
            break
        if attempt == 0:
            G = next_fast_len(4 * G)
        else:
            K = Kmax
    ks = np.arange(-K, K + 1)
    return FourierSeries(c_full[ks % G])


# ---------------------------------------------------------------------------
# analytic-norm bookkeeping


def strip_norm_bound(phi: FourierSeries, r: float) -> float:
    """Upper bound sum_k |c_k| exp(2 pi r |k|) for the sup on |Im theta| <= r."""
    if r < 0:
        raise ValueError("strip half-width must be nonnegative")
    N = phi.N
    if N > 0 and _TWO_PI * r * N > EXP_CAP:
        raise OverflowRiskError(
            f"strip exponent 2*pi*r*N = {_TWO_PI * r * N:.3g} exceeds cap",
            {"exponent": _TWO_PI * r * N, "cap": EXP_CAP},
        )
    ks = np.abs(np.arange(-N, N + 1))
    total = float(np.sum(np.abs(phi.coeffs) * np.exp(_TWO_PI * r * ks)))
    if not np.isfinite(total):
        raise OverflowRiskError("strip norm bound overflowed", {"r": r})
    return total
