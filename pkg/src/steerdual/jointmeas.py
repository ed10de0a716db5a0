"""Joint measurability of qubit POVMs with continuous or discrete outcomes.

Continuous qubit POVMs are stored as a 2x2 matrix of polynomials times the
Gaussian weight ``exp(-q^2)/sqrt(pi)``.  That form covers every kernel of
the photon-number truncated quadratures, makes interval integrals exact in
terms of error functions, and keeps ratios like ``P(q)/P_00(q)`` free of
underflow far out in the tails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import erf, erfc

from .errors import DomainError, InvalidInputError, UnsupportedError
from .finite import DiscretePovm

GRID = np.linspace(-6.0, 6.0, 2001)
WEIGHT_CUTOFF = 1e-16
CONSTANT_VAR = 1e-12
SQRT_PI = np.sqrt(np.pi)


def gaussian_moment(k, a, b):
    """``int_a^b q^k exp(-q^2) dq`` for integer ``k >= 0``; endpoints may be infinite."""
    return _moments(k, a, b)[k]


def _moments(kmax, a, b):
    a, b = float(a), float(b)
    out = np.zeros(kmax + 1)
    if a >= 0:
        out[0] = SQRT_PI / 2 * (erfc(a) - erfc(b))
    elif b <= 0:
        out[0] = SQRT_PI / 2 * (erfc(-b) - erfc(-a))
    else:
        out[0] = SQRT_PI / 2 * (erf(b) - erf(a))

    def edge(k, q):
        # q^k exp(-q^2), zero at infinity
        return 0.0 if np.isinf(q) else q**k * np.exp(-q * q)

    if kmax >= 1:
        out[1] = (edge(0, a) - edge(0, b)) / 2
    for k in range(2, kmax + 1):
        out[k] = (edge(k - 1, a) - edge(k - 1, b)) / 2 + (k - 1) / 2 * out[k - 2]
    return out


@dataclass(frozen=True)
class QubitKernelPovm:
    """Qubit POVM density ``q -> P(q) exp(-q^2)/sqrt(pi)``.

    ``poly[i, j]`` holds the ascending coefficients of the polynomial entry
    ``P_ij``.  Construction checks Hermiticity, normalization (total integral
    equal to the identity within ``1e-8``) and positivity on a sample grid.
    """

    poly: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.poly, dtype=complex)
        if p.ndim != 3 or p.shape[:2] != (2, 2):
            raise InvalidInputError("kernel polynomial must have shape (2, 2, degree + 1)")
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("kernel coefficients are not finite")
        if np.max(np.abs(p - p.conj().transpose(1, 0, 2))) > 1e-12 * max(1.0, np.max(np.abs(p))):
            raise InvalidInputError("kernel is not Hermitian")
        object.__setattr__(self, "poly", p)
        if np.max(np.abs(self.integral(-np.inf, np.inf) - np.eye(2))) > 1e-8:
            raise InvalidInputError("kernel does not integrate to the identity")
        vals = self.matrix(np.linspace(-6, 6, 121))
        dets = np.linalg.eigvalsh(vals)[:, 0]
        if np.min(dets) < -1e-9 * max(1.0, np.max(np.abs(vals))):
            raise InvalidInputError("kernel is not PSD at sampled points")

    @property
    def degree(self):
        return self.poly.shape[2] - 1

    def matrix(self, q):
        """Polynomial part ``P(q)`` with shape ``q.shape + (2, 2)``."""
        q = np.asarray(q, dtype=float)
        out = np.empty(q.shape + (2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[..., i, j] = P.polyval(q, self.poly[i, j])
        return out

    def density(self, q):
        q = np.asarray(q, dtype=float)
        return self.matrix(q) * (np.exp(-q * q) / SQRT_PI)[..., None, None]

    def weight(self, q):
        """``p(q) = <0|kernel(q)|0>``."""
        q = np.asarray(q, dtype=float)
        return P.polyval(q, self.poly[0, 0]).real * np.exp(-q * q) / SQRT_PI

    def normalized(self, q):
        """``kernel(q) / p(q)``; raises where ``p`` vanishes."""
        m = self.matrix(q)
        p00 = m[..., 0, 0].real
        if np.any(p00 <= 0):
            bad = np.asarray(q, dtype=float).reshape(-1)[np.argmin(p00.reshape(-1))]
            raise DomainError(f"weight <0|kernel|0> vanishes at q = {bad:.6g}")
        return m / p00[..., None, None]

    def det_ratio(self, q):
        """``r(q) = det(kernel(q) / p(q))``."""
        return np.linalg.det(self.normalized(q)).real

    def integral(self, a, b):
        """Closed-form ``int_a^b kernel(q) dq``."""
        mom = _moments(self.degree, a, b) / SQRT_PI
        return self.poly @ mom

    def effects(self, edges):
        return [self.integral(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]


def _edges_from(partition):
    if hasattr(partition, "edges"):
        edges = np.asarray(partition.edges() if callable(partition.edges) else partition.edges, dtype=float)
    else:
        items = list(partition)
        if items and np.ndim(items[0]) == 1:
            for (a0, b0), (a1, b1) in zip(items[:-1], items[1:]):
                if b0 != a1:
                    raise InvalidInputError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap or leave a gap")
            edges = np.array([items[0][0]] + [it[1] for it in items], dtype=float)
        else:
            edges = np.asarray(items, dtype=float)
    if edges.ndim != 1 or len(edges) < 2:
        raise InvalidInputError("partition needs at least one interval")
    if edges[0] != -np.inf or edges[-1] != np.inf:
        raise InvalidInputError("partition does not cover the real line")
    if np.any(np.diff(edges) <= 0) or np.any(np.isnan(edges)):
        raise InvalidInputError("partition edges must be strictly increasing")
    return edges


def coarse_grain(povm, partition):
    """Integrate a kernel POVM over the intervals of ``partition``.

    ``partition`` is an object with an ``edges`` attribute or method, a list
    of ``(lo, hi)`` intervals, or a flat edge list from ``-inf`` to ``inf``.
    """
    edges = _edges_from(partition)
    effects = povm.effects(edges)
    # the closed forms leave the sum off the identity only by rounding
    effects = [(e + e.conj().T) / 2 for e in effects]
    return DiscretePovm(tuple(effects))


def _det_ratio_min(povm, grid):
    if isinstance(povm, DiscretePovm):
        rs = []
        for e in povm.effects:
            if e[0, 0].real <= 0:
                raise DomainError("effect has <0|E|0> = 0; the criterion is inapplicable")
            rs.append(np.linalg.det(e / e[0, 0].real).real)
        return float(min(rs))
    pts = np.asarray(grid, dtype=float)
    keep = povm.weight(pts) >= WEIGHT_CUTOFF
    m = povm.matrix(pts[keep])
    p00 = m[..., 0, 0].real
    if np.any(p00 <= 0):
        raise DomainError(f"weight vanishes at grid point q = {pts[keep][np.argmin(p00)]:.6g}")
    r = np.linalg.det(m / p00[:, None, None]).real
    if np.var(r) < CONSTANT_VAR:
        return float(np.mean(r))
    return float(np.min(r))


def delta_criterion(povms, grid=None):
    """Infimum of ``Delta(b_1..b_n) = sum_i r_i(b_i) - n + 1`` over outcomes.

    Kernel POVMs are evaluated on ``grid`` (default ``[-6, 6]`` with 2001
    points; points with weight below ``1e-16`` are skipped).  Because
    ``Delta`` is a sum of one-variable terms its infimum is the sum of the
    individual minima.  Discrete POVMs use their effects directly.  The
    POVMs are jointly measurable when the result is ``>= 0``.
    """
    povms = list(povms)
    if len(povms) < 1:
        raise InvalidInputError("need at least one POVM")
    grid = GRID if grid is None else grid
    return sum(_det_ratio_min(p, grid) for p in povms) - len(povms) + 1


class JointKernel:
    """Joint observable ``G(b_1, ..., b_n)`` built from the ``Delta`` construction.

    ``G / prod p_i = [[1, conj(F)], [F, |F|^2 + Delta]]`` with
    ``F = sum_i f_i(b_i)``, ``f_i = (kernel_i / p_i)[1, 0]``.
    """

    def __init__(self, povms, grid=None):
        self.povms = list(povms)
        if not self.povms:
            raise InvalidInputError("need at least one POVM")
        if not all(isinstance(p, QubitKernelPovm) for p in self.povms):
            raise InvalidInputError("joint_observable expects kernel POVMs")
        self.grid = GRID if grid is None else np.asarray(grid, dtype=float)
        n = len(self.povms)
        for i, p in enumerate(self.povms):
            keep = p.weight(self.grid) >= WEIGHT_CUTOFF
            r = p.det_ratio(self.grid[keep])
            lo = np.argmin(r)
            others = sum(_det_ratio_min(q, self.grid) for j, q in enumerate(self.povms) if j != i)
            delta = r[lo] + others - n + 1
            if delta < -1e-12:
                raise DomainError(
                    f"Delta = {delta:.3e} < 0 at grid point q_{i} = {self.grid[keep][lo]:.6g} "
                    "(other outcomes at their minimizers)"
                )

    def _parts(self, b):
        f = [p.normalized(x)[..., 1, 0] for p, x in zip(self.povms, b)]
        r = [p.det_ratio(x) for p, x in zip(self.povms, b)]
        w = [p.weight(x) for p, x in zip(self.povms, b)]
        return f, r, w

    def density(self, *b):
        """``G`` at outcome tuples; the ``b_i`` broadcast against each other."""
        if len(b) != len(self.povms):
            raise InvalidInputError("one outcome per POVM required")
        b = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in b])
        f, r, w = self._parts(b)
        F = sum(f)
        delta = sum(r) - len(self.povms) + 1
        pw = np.prod(w, axis=0)
        out = np.empty(F.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 1
        out[..., 0, 1] = F.conj()
        out[..., 1, 0] = F
        out[..., 1, 1] = np.abs(F) ** 2 + delta
        return out * pw[..., None, None]

    def delta(self, *b):
        b = np.broadcast_arrays(*[np.asarray(x, dtype=float) for x in b])
        return sum(p.det_ratio(x) for p, x in zip(self.povms, b)) - len(self.povms) + 1

    def marginal(self, i, q, order=80):
        """``int G db_j (j != i)`` at the points ``q`` by Gauss-Hermite quadrature."""
        nodes, weights = np.polynomial.hermite.hermgauss(order)
        q = np.asarray(q, dtype=float)
        n = len(self.povms)
        others = [j for j in range(n) if j != i]
        out = np.zeros(q.shape + (2, 2), dtype=complex)
        for combo in itertools.product(range(order), repeat=len(others)):
            b = [None] * n
            b[i] = q
            wprod = 1.0
            for j, k in zip(others, combo):
                b[j] = np.full(q.shape, nodes[k])
                # the rule already supplies exp(-b^2), so divide it out of G
                wprod *= weights[k] * np.exp(nodes[k] ** 2)
            out += wprod * self.density(*b)
        return out


def joint_observable(povms, grid=None):
    """Joint observable of kernel POVMs whose ``delta_criterion`` is non-negative.

    A single POVM is returned unchanged.  Raises :class:`DomainError` naming
    a grid point where ``Delta < 0``.
    """
    povms = list(povms)
    if len(povms) == 1:
        return povms[0]
    return JointKernel(povms, grid)


@dataclass(frozen=True)
class BinaryQubitPovm:
    """Two-outcome qubit POVM ``E_pm = ((1 pm gamma) 1 pm n.sigma) / 2``."""

    bias: float
    bloch: tuple

    def __post_init__(self):
        n = np.asarray(self.bloch, dtype=float)
        if n.shape != (3,) or not np.all(np.isfinite(n)) or not np.isfinite(self.bias):
            raise InvalidInputError("bloch must be a finite 3-vector")
        if np.linalg.norm(n) > 1 - abs(self.bias) + 1e-12:
            raise InvalidInputError("effects are not positive: |n| > 1 - |gamma|")
        object.__setattr__(self, "bloch", tuple(float(v) for v in n))
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def from_effect(cls, e):
        """Read ``(gamma, n)`` off the ``+`` effect."""
        e = np.asarray(e, dtype=complex)
        return cls(float(np.trace(e).real - 1), (2 * e[0, 1].real, -2 * e[0, 1].imag, (e[0, 0] - e[1, 1]).real))

    def effects(self):
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.diag([1.0 + 0j, -1.0])
        ns = sum(v * s for v, s in zip(self.bloch, (sx, sy, sz)))
        plus = ((1 + self.bias) * np.eye(2) + ns) / 2
        return plus, np.eye(2) - plus


def busch_compatible(p1, p2, tol=1e-12):
    """Exact compatibility test for two unbiased binary qubit POVMs."""
    for p in (p1, p2):
        if abs(p.bias) > tol:
            raise UnsupportedError("only unbiased binary POVMs are supported")
    n1, n2 = np.asarray(p1.bloch), np.asarray(p2.bloch)
    return bool(np.linalg.norm(n1 + n2) + np.linalg.norm(n1 - n2) <= 2 + tol)
