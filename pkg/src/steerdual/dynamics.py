"""Amplitude damping from a Lorentzian bath and the resulting steerability region.

With ``z = lambda t / 2`` and ``w = sqrt(1 - 2u/lambda)`` (complex for strong
coupling) the excited-state amplitude is

    G(t) = exp(-z) (cosh(w z) + sinh(w z) / w),

and the damping parameter of the equivalent channel is ``r(t) = |G(t)|``.
All times are in units of ``1/lambda`` and couplings in units of ``lambda``
unless ``linewidth`` is given explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, PoleError

R_C_DEFAULT = 1 / math.sqrt(2)


@dataclass(frozen=True)
class LorentzianBath:
    """Coupling strength ``u`` and spectral linewidth ``linewidth`` (both positive)."""

    coupling: float
    linewidth: float = 1.0

    def __post_init__(self):
        if not (self.linewidth > 0 and math.isfinite(self.linewidth)):
            raise InvalidInputError("linewidth must be positive")
        if not (self.coupling > 0 and math.isfinite(self.coupling)):
            raise InvalidInputError("coupling must be positive")

    @property
    def w(self):
        return np.sqrt(complex(1 - 2 * self.coupling / self.linewidth))


def _parts(bath, t):
    """``exp(-z) cosh(wz)`` and ``exp(-z) sinh(wz)/w`` without overflow."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InvalidInputError("times must be non-negative")
    z = bath.linewidth * t / 2
    w = bath.w
    wz = w * z
    ep = np.exp((w - 1) * z)
    em = np.exp(-(w + 1) * z)
    c = (ep + em) / 2
    small = np.abs(wz) < 1e-3
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(small, 0.0, (ep - em) / (2 * w) if w != 0 else 0.0)
    x2 = wz**2
    series = z * np.exp(-z) * (1 + x2 / 6 + x2 * x2 / 120 + x2**3 / 5040)
    s = np.where(small, series, s)
    return c, s


def amplitude(bath, t):
    """Complex ``G(t)``."""
    c, s = _parts(bath, t)
    return c + s


def damping_factor(bath, t):
    """``r(t) = |G(t)|``; equals 1 at ``t = 0``."""
    return np.abs(amplitude(bath, t))


def decay_rate(bath, t):
    """``gamma(t) = -2 Re d/dt log G(t) = 2u Re[(sinh(wz)/w) / (cosh(wz) + sinh(wz)/w)]``.

    Negative values mark non-Markovian intervals.  Raises
    :class:`PoleError` at zeros of ``G``.
    """
    c, s = _parts(bath, t)
    g = c + s
    scale = np.abs(c) + np.abs(s)
    if np.any(np.abs(g) <= 1e-13 * scale):
        bad = np.asarray(t, dtype=float).reshape(-1)[np.argmin((np.abs(g) / scale).reshape(-1))]
        raise PoleError(f"G(t) vanishes at t = {bad:.12g}")
    return 2 * bath.coupling * np.real(s / g)


def count_windows(mask):
    """Number of maximal runs of ``True`` in a 1-d boolean array."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return 0
    return int(m[0]) + int(np.sum(m[1:] & ~m[:-1]))


@dataclass
class SteerableRegion:
    """``steerable[i, j]`` is ``r(t_j) >= r_c`` for coupling ``u[i]``."""

    u: np.ndarray
    t: np.ndarray
    r: np.ndarray
    steerable: np.ndarray
    r_c: float

    @property
    def windows(self):
        return [count_windows(row) for row in self.steerable]


def steerable_region(u_grid, t_grid, r_c=R_C_DEFAULT, linewidth=1.0):
    """Evaluate ``r(t) >= r_c`` on a ``(u, t)`` grid; both grids sorted ascending."""
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    for name, g in (("u", u), ("t", t)):
        if g.ndim != 1 or g.size == 0:
            raise InvalidInputError(f"{name} grid must be a non-empty 1-d array")
        if np.any(np.diff(g) < 0):
            raise InvalidInputError(f"{name} grid must be sorted ascending")
    r = np.array([damping_factor(LorentzianBath(float(uu), linewidth), t) for uu in u])
    return SteerableRegion(u, t, r, r >= r_c, float(r_c))
