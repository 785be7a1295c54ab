"""Smooth dyadic frequency cutoffs.

The whole decomposition is generated by a single even bump ``eta0`` that
equals 1 on [-1, 1] and vanishes outside [-2, 2].  From it we derive the
inhomogeneous dyadic family

    chi_0 = eta0,   chi_k(n) = eta0(n / 2^k) - eta0(n / 2^(k-1))  (k >= 1),

supported on the annulus I_k = {2^(k-1) <= |n| <= 2^(k+1)}, the derivative
weights psi_k(n) = n * chi_k'(n) used by the modified energies, and the
modulation cutoffs (same profile applied to the distance from the dispersion
surface).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline

TABLE_POINTS = 4096  # bump tabulated at 2^12 points across [-2, 2]


def _transition(t: np.ndarray) -> np.ndarray:
    """C-infinity step on [0, 1]: 0 at t=0, 1 at t=1, flat at both ends."""
    t = np.asarray(t, dtype=float)
    a = np.zeros_like(t)
    b = np.zeros_like(t)
    pos = t > 0.0
    a[pos] = np.exp(-1.0 / t[pos])
    neg = t < 1.0
    b[neg] = np.exp(-1.0 / (1.0 - t[neg]))
    return a / (a + b)


def bump(x) -> np.ndarray:
    """The profile eta0: 1 on [-1,1], 0 outside [-2,2], smooth in between."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    out[x <= 1.0] = 1.0
    mid = (x > 1.0) & (x < 2.0)
    out[mid] = _transition(2.0 - x[mid])
    return out


class CutoffFamily:
    """Tabulated bump profile together with its dyadic descendants.

    Values of eta0 come from the closed-form profile; the derivative (needed
    only for psi_k) comes from analytic differentiation of a clamped cubic
    spline through the tabulated transition region, never from finite
    differences of chi_k.
    """

    def __init__(self, table_points: int = TABLE_POINTS):
        # knot spacing 4 / table_points is dyadic, so dyadic-rational
        # arguments land exactly on knots
        knots = np.linspace(-2.0, 2.0, table_points + 1)
        right = knots[(knots >= 1.0) & (knots <= 2.0)]
        self._spline = CubicSpline(
            right, _transition(2.0 - right), bc_type=((1, 0.0), (1, 0.0))
        )
        self._dspline = self._spline.derivative()
        self._d2spline = self._dspline.derivative()

    def eta0(self, x) -> np.ndarray:
        return bump(x)

    def eta0_deriv(self, x, order: int = 1) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        mid = (np.abs(x) > 1.0) & (np.abs(x) < 2.0)
        table = self._dspline if order == 1 else self._d2spline
        out[mid] = table(np.abs(x[mid]))
        if order % 2 == 1:
            out[mid] *= np.sign(x[mid])
        return out

    def chi(self, k: int, n) -> np.ndarray:
        """Dyadic cutoff chi_k evaluated at frequency n."""
        if k < 0:
            raise ValueError(f"dyadic index must be >= 0, got {k}")
        if k == 0:
            return self.eta0(n)
        n = np.asarray(n, dtype=float)
        return self.eta0(n / 2.0**k) - self.eta0(n / 2.0 ** (k - 1))

    def chi_deriv(self, k: int, n) -> np.ndarray:
        if k < 0:
            raise ValueError(f"dyadic index must be >= 0, got {k}")
        n = np.asarray(n, dtype=float)
        if k == 0:
            return self.eta0_deriv(n)
        return self.eta0_deriv(n / 2.0**k) / 2.0**k - self.eta0_deriv(
            n / 2.0 ** (k - 1)
        ) / 2.0 ** (k - 1)

    def psi(self, k: int, n) -> np.ndarray:
        """Derivative weight psi_k(n) = n * chi_k'(n)."""
        n = np.asarray(n, dtype=float)
        return n * self.chi_deriv(k, n)

    def eta_mod(self, j: int, zeta) -> np.ndarray:
        """Modulation cutoff eta_j: the same dyadic family applied to
        zeta = tau - mu(n)."""
        return self.chi(j, zeta)

    def blocks_covering(self, max_abs_freq: float) -> int:
        """Smallest K such that chi_k vanishes on |n| <= max_abs_freq for
        all k > K."""
        if max_abs_freq < 1.0:
            return 0
        return max(0, int(math.ceil(math.log2(max_abs_freq))) + 1)


DEFAULT_CUTOFFS = CutoffFamily()


def chi(k: int, n) -> np.ndarray:
    return DEFAULT_CUTOFFS.chi(k, n)


def psi(k: int, n) -> np.ndarray:
    return DEFAULT_CUTOFFS.psi(k, n)
