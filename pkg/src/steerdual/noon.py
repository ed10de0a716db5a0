"""Noisy NOON states steered by coarse-grained quadrature measurements.

Everything lives on the two-dimensional span of ``{|0>, |N>}`` on each side.
The state ``eta |N00N><N00N| + (1 - eta)|00><00|`` corresponds, through the
duality, to an amplitude damping channel with ``r = sqrt(eta / (2 - eta))``
followed by a fixed unitary, so Alice's quadrature kernels turn into damped
kernels whose joint measurability decides steering.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError
from .finite import BipartiteState, KrausChannel, MeasurementAssemblage
from .jointmeas import BinaryQubitPovm, QubitKernelPovm, busch_compatible, coarse_grain
from .robustness import critical_noise, incompatibility_robustness

log = logging.getLogger(__name__)

DEFAULT_CUTOFF = 1.4
TABLE1_N_INT = (4, 6, 8, 10, 12, 14, 16, 18, 20)


@dataclass(frozen=True)
class NoonParams:
    """Photon number ``n``, phase ``alpha`` (radians) and noise ``eta`` in ``[0, 1]``."""

    n: int = 1
    alpha: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError("photon number must be a positive integer")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidInputError(f"eta must lie in [0, 1], got {self.eta}")
        if not math.isfinite(self.alpha):
            raise InvalidInputError("alpha must be finite")


def noon_state(p):
    """``rho_eta`` on the basis ``(|0>, |N>)`` of each side."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1 / np.sqrt(2)
    psi[2] = -np.exp(1j * p.n * p.alpha) / np.sqrt(2)
    vac = np.zeros(4)
    vac[0] = 1.0
    rho = p.eta * np.outer(psi, psi.conj()) + (1 - p.eta) * np.outer(vac, vac)
    return BipartiteState(rho, 2, 2)


def eta_to_r(eta):
    return math.sqrt(eta / (2 - eta))


def r_to_eta(r):
    return 2 * r * r / (1 + r * r)


def amplitude_damping(r):
    """Kraus pair ``diag(1, r)`` and ``sqrt(1 - r^2)|0><1|``."""
    if not 0.0 <= r <= 1.0:
        raise InvalidInputError("damping parameter r must lie in [0, 1]")
    k0 = np.diag([1.0, r]).astype(complex)
    k1 = np.array([[0.0, math.sqrt(1 - r * r)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((k0, k1))


def noon_channel(eta, n=1, alpha=0.0):
    """``(r, Lambda_r, U)`` with ``T*(A) = U^dagger Lambda_r*(A) U`` for the state ``rho_eta``."""
    if not 0.0 < eta <= 1.0:
        raise DomainError("eta must lie in (0, 1]; eta = 0 has a rank-deficient marginal")
    r = eta_to_r(eta)
    u = np.array([[0.0, 1.0], [-np.exp(1j * n * alpha), 0.0]], dtype=complex)
    return r, amplitude_damping(r), u


def hermite_normalized(n):
    """Ascending coefficients of ``h(q) = H_n(q) / sqrt(2^n n!)`` (physicists' ``H_n``)."""
    prev, cur = np.array([1.0]), np.array([0.0, 2.0])
    if n == 0:
        return prev
    for k in range(1, n):
        nxt = np.zeros(k + 2)
        nxt[1:] = 2 * cur
        nxt[: k] -= 2 * k * prev
        prev, cur = cur, nxt
    return cur / math.sqrt(2.0**n * math.factorial(n))


def _kernel_poly(theta, n, r):
    h = hermite_normalized(n)
    h2 = np.polynomial.polynomial.polymul(h, h)
    deg = len(h2)
    poly = np.zeros((2, 2, deg), dtype=complex)
    poly[0, 0, 0] = 1.0
    poly[0, 1, : len(h)] = r * np.exp(-1j * n * theta) * h
    poly[1, 0, : len(h)] = r * np.exp(1j * n * theta) * h
    poly[1, 1] = r * r * h2
    poly[1, 1, 0] += 1 - r * r
    return poly


def truncated_quadrature(theta, n=1):
    """Rotated quadrature PVM restricted to ``span{|0>, |N>}`` (rank one at every ``q``)."""
    if int(n) != n or n < 1:
        raise InvalidInputError("photon number must be a positive integer")
    return QubitKernelPovm(_kernel_poly(theta, int(n), 1.0))


def damped_quadrature(theta, n, r):
    """``Lambda_r*`` applied to :func:`truncated_quadrature`; determinant ``(1 - r^2) e^{-2q^2}/pi``."""
    if not 0.0 <= r <= 1.0:
        raise InvalidInputError("damping parameter r must lie in [0, 1]")
    if int(n) != n or n < 1:
        raise InvalidInputError("photon number must be a positive integer")
    return QubitKernelPovm(_kernel_poly(theta, int(n), float(r)))


@dataclass(frozen=True)
class IntervalPartition:
    """Tails ``(-inf, -c]``, ``[c, inf)`` and ``n_int - 2`` equal intervals on ``[-c, c]``.

    ``n_int = 2`` is the split at zero.
    """

    c: float = DEFAULT_CUTOFF
    n_int: int = 4

    def __post_init__(self):
        if int(self.n_int) != self.n_int or self.n_int < 2 or self.n_int % 2:
            raise InvalidInputError(f"n_int must be an even integer >= 2, got {self.n_int}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidInputError("cutoff c must be positive and finite")

    def edges(self):
        if self.n_int == 2:
            return np.array([-np.inf, 0.0, np.inf])
        inner = np.linspace(-self.c, self.c, self.n_int - 1)
        inner[(self.n_int - 2) // 2] = 0.0
        return np.concatenate([[-np.inf], inner, [np.inf]])

    def intervals(self):
        e = self.edges()
        return list(zip(e[:-1], e[1:]))

    def to_dict(self):
        return {"c": self.c, "n_int": self.n_int, "edges": [float(x) for x in self.edges()]}

    @classmethod
    def from_dict(cls, d):
        p = cls(float(d["c"]), int(d["n_int"]))
        if "edges" in d and not np.allclose(np.asarray(d["edges"], dtype=float), p.edges()):
            raise InvalidInputError("edges are inconsistent with (c, n_int)")
        return p


def partition_edges(p):
    """Intervals of an :class:`IntervalPartition` as ``(lo, hi)`` pairs."""
    return p.intervals()


def eta_lower_bound(n_settings):
    """``2 / (n + 1)``: below it the damped kernels are jointly measurable for any angles and ``N``."""
    if int(n_settings) != n_settings or n_settings < 1:
        raise InvalidInputError("number of settings must be a positive integer")
    return 2.0 / (n_settings + 1)


def eta_upper_bound_binarized(theta):
    """Noise above which the split-at-zero binarisations (``N = 1``) are incompatible.

    Busch's criterion for Bloch vectors of length ``r sqrt(2/pi)`` at relative
    angle ``theta`` reduces to ``r^2 >= pi / (2 (1 + sin theta))``.  Returns
    ``None`` when that exceeds ``r^2 = 1`` (no bound).
    """
    s = math.sin(theta)
    if abs(s) < 1e-15:
        raise DomainError("parallel quadratures (theta = 0 or pi) give no bound")
    if not 0 < theta < math.pi:
        raise DomainError("theta must lie in (0, pi)")
    r2 = math.pi / (2 * (1 + s))
    if r2 > 1:
        return None
    return 2 * r2 / (1 + r2)


def binarized_critical_eta(theta, tol=1e-12):
    """Same threshold found numerically from the coarse-grained effects and :func:`busch_compatible`."""
    split = IntervalPartition(1.0, 2)

    def incompatible(eta):
        r = eta_to_r(eta)
        pair = [coarse_grain(damped_quadrature(t, 1, r), split) for t in (0.0, theta)]
        p1, p2 = (BinaryQubitPovm.from_effect(e.effects[1]) for e in pair)
        return not busch_compatible(p1, p2)

    if not incompatible(1.0):
        return None
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if incompatible(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def noon_assemblage(eta, theta, n=1, c=DEFAULT_CUTOFF, n_int=4):
    """Damped coarse-grained pair ``{Q_{I|0}, Q_{I|theta}}`` at noise ``eta``."""
    r = eta_to_r(eta)
    part = IntervalPartition(c, n_int)
    return MeasurementAssemblage(tuple(coarse_grain(damped_quadrature(t, n, r), part) for t in (0.0, theta)))


def critical_eta(theta, n=1, c=DEFAULT_CUTOFF, n_int=4, tol=1e-3, lo=None, hi=1.0):
    """Bisection for the noise where the IR of :func:`noon_assemblage` turns positive."""
    lo = eta_lower_bound(2) - 0.01 if lo is None else lo
    return critical_noise(lambda eta: noon_assemblage(eta, theta, n, c, n_int), lo, hi, tol=tol)


@dataclass
class Table1Row:
    n_int: int
    eta_c: float
    ir_at_eta_c: float
    wall_time_s: float
    method: str
    error: str = ""


def _table1_row(args):
    n_int, theta, n, c, tol = args
    t0 = time.perf_counter()
    try:
        if n_int == 2 and n == 1 and 0 < theta < math.pi:
            eta = eta_upper_bound_binarized(theta)
            return Table1Row(n_int, float("nan") if eta is None else eta, float("nan"), time.perf_counter() - t0, "closed-form")
        eta, val = critical_eta(theta, n, c, n_int, tol)
        return Table1Row(n_int, eta, val, time.perf_counter() - t0, "sdp")
    except Exception as exc:  # recorded per row, reported by the caller
        log.warning("n_int=%s failed: %s", n_int, exc)
        return Table1Row(n_int, float("nan"), float("nan"), time.perf_counter() - t0, "failed", str(exc))


def table1_pipeline(n_int_list=TABLE1_N_INT, theta=math.pi / 2, n=1, c=DEFAULT_CUTOFF, tol=1e-3, workers=1):
    """Critical noise for each ``n_int``; rows come back in input order."""
    n_int_list = [int(k) for k in n_int_list]
    if not n_int_list:
        raise InvalidInputError("n_int list is empty")
    for k in n_int_list:
        IntervalPartition(c, k)
    jobs = [(k, theta, n, c, tol) for k in n_int_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_table1_row, jobs))
    return [_table1_row(j) for j in jobs]
