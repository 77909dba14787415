"""Exception taxonomy shared across the package.

Every failure mode the numerics can hit on purpose gets its own class so
callers (and the CLI) can map it to a machine-readable diagnostic instead
of pattern-matching message strings.
"""

from __future__ import annotations


class KamforgeError(Exception):
    """Base class for all package-specific errors.

    Carries an optional ``diagnostics`` dict that the CLI serializes into
    its error JSON.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics) if diagnostics else {}


class OverflowRiskError(KamforgeError):
    """An exponent would exceed the double-precision cap (|x| > ~700)."""


class ResonanceError(KamforgeError):
    """A small divisor q^k - 1 vanished to working precision."""


class NearSingularError(KamforgeError):
    """A pointwise inverse or average hit the configured floor."""


class BoundViolationError(KamforgeError):
    """A certified inequality failed: bug or non-member input."""


class DivergenceError(KamforgeError):
    """Newton residual grew by more than the safeguard factor."""


class NoConvergenceError(KamforgeError):
    """Iteration budget exhausted; carries the residual history."""

    def __init__(self, message: str, residual_history=None, diagnostics=None):
        super().__init__(message, diagnostics)
        self.residual_history = list(residual_history or [])
