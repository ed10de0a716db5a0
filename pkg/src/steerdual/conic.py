"""Small dense semidefinite programs over Hermitian block variables.

A :class:`ConicProgram` is written in terms of

* Hermitian matrix variables constrained to be PSD (``add_block``),
* free real scalars (``add_scalar``),
* affine Hermitian equalities ``expr == 0`` and inequalities ``expr >= 0``,
* a linear objective in the scalars, always minimized.

:func:`solve` compiles the program to the standard primal form

    minimize  <C, X> + d.u   s.t.  A(X) + B u = b,   X >= 0 (block diagonal)

with every Hermitian ``d x d`` block embedded as a real symmetric
``2d x 2d`` block through :func:`steerdual.matcore.realify`, and runs an
infeasible-start primal-dual interior-point method (HKM search direction,
Mehrotra predictor-corrector).  Iteration order is fixed, so results are
bit-for-bit reproducible on a given platform.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SolverError
from .matcore import complexify, realify

log = logging.getLogger(__name__)


@dataclass
class AffineExpr:
    """``const + sum_j w_j L_j X_j L_j^dagger + sum_s u_s H_s`` (a ``dim x dim`` Hermitian matrix)."""

    dim: int
    const: np.ndarray = None
    block_terms: list = field(default_factory=list)
    scalar_terms: list = field(default_factory=list)

    def __post_init__(self):
        if self.const is None:
            self.const = np.zeros((self.dim, self.dim), dtype=complex)
        self.const = np.asarray(self.const, dtype=complex)

    def block(self, label, weight=1.0, left=None):
        """Add ``weight * L X L^dagger`` where ``X`` is the block ``label``."""
        self.block_terms.append((label, float(weight), None if left is None else np.asarray(left, dtype=complex)))
        return self

    def scalar(self, label, coeff):
        """Add ``u * coeff`` for the scalar ``label``; ``coeff`` may be a number."""
        coeff = np.asarray(coeff, dtype=complex)
        if coeff.ndim == 0:
            coeff = coeff * np.eye(self.dim)
        self.scalar_terms.append((label, coeff))
        return self

    def constant(self, c):
        c = np.asarray(c, dtype=complex)
        if c.ndim == 0:
            c = c * np.eye(self.dim)
        self.const = self.const + c
        return self


@dataclass
class Solution:
    """Solver output.  ``blocks`` maps labels to Hermitian values, ``scalars`` to floats."""

    status: str
    objective_value: float
    blocks: dict
    scalars: dict
    duality_gap: float
    primal_infeasibility: float
    dual_infeasibility: float
    iterations: int
    message: str = ""

    @property
    def optimal(self):
        return self.status == "optimal"

    def to_dict(self):
        return {
            "status": self.status,
            "objective_value": self.objective_value,
            "duality_gap": self.duality_gap,
            "primal_infeasibility": self.primal_infeasibility,
            "dual_infeasibility": self.dual_infeasibility,
            "iterations": self.iterations,
            "message": self.message,
            "scalars": dict(self.scalars),
            "blocks": {k: [[[z.real, z.imag] for z in row] for row in v] for k, v in self.blocks.items()},
        }


class ConicProgram:
    """Block-PSD variables, free scalars and affine Hermitian constraints."""

    def __init__(self):
        self.blocks = {}
        self.scalars = []
        self.equalities = []
        self.inequalities = []
        self.objective = {}

    def add_block(self, label, dim):
        if label in self.blocks or label in self.scalars:
            raise InvalidInputError(f"duplicate variable label {label!r}")
        if int(dim) < 1:
            raise InvalidInputError("block dimension must be positive")
        self.blocks[label] = int(dim)
        return label

    def add_scalar(self, label):
        if label in self.blocks or label in self.scalars:
            raise InvalidInputError(f"duplicate variable label {label!r}")
        self.scalars.append(label)
        return label

    def expr(self, dim):
        return AffineExpr(int(dim))

    def add_equality(self, expr):
        self._check(expr)
        self.equalities.append(expr)

    def add_psd(self, expr):
        self._check(expr)
        self.inequalities.append(expr)

    def minimize(self, coeffs):
        unknown = set(coeffs) - set(self.scalars)
        if unknown:
            raise InvalidInputError(f"objective refers to unknown scalars {sorted(unknown)}")
        self.objective = {k: float(v) for k, v in coeffs.items()}

    def _check(self, expr):
        for label, _, left in expr.block_terms:
            if label not in self.blocks:
                raise InvalidInputError(f"unknown block {label!r}")
            d = self.blocks[label]
            shape = (expr.dim, d) if left is not None else None
            if left is None and d != expr.dim:
                raise InvalidInputError(f"block {label!r} has dim {d}, expression has dim {expr.dim}")
            if left is not None and left.shape != shape:
                raise InvalidInputError(f"left factor for {label!r} must have shape {shape}")
        for label, coeff in expr.scalar_terms:
            if label not in self.scalars:
                raise InvalidInputError(f"unknown scalar {label!r}")
            if coeff.shape != (expr.dim, expr.dim):
                raise InvalidInputError("scalar coefficient has wrong shape")

    def to_dict(self):
        def mat(m):
            return [[[complex(z).real, complex(z).imag] for z in row] for row in np.asarray(m)]

        def ex(e):
            return {
                "dim": e.dim,
                "const": mat(e.const),
                "blocks": [[lab, w, None if left is None else mat(left)] for lab, w, left in e.block_terms],
                "scalars": [[lab, mat(c)] for lab, c in e.scalar_terms],
            }

        return {
            "blocks": [[k, v] for k, v in self.blocks.items()],
            "scalars": list(self.scalars),
            "equalities": [ex(e) for e in self.equalities],
            "psd": [ex(e) for e in self.inequalities],
            "objective": dict(self.objective),
        }

    @classmethod
    def from_dict(cls, data):
        def mat(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows])

        def ex(d):
            e = AffineExpr(d["dim"], const=mat(d["const"]))
            for lab, w, left in d["blocks"]:
                e.block(lab, w, None if left is None else mat(left))
            for lab, c in d["scalars"]:
                e.scalar(lab, mat(c))
            return e

        p = cls()
        for k, v in data["blocks"]:
            p.add_block(k, v)
        for s in data["scalars"]:
            p.add_scalar(s)
        for e in data["equalities"]:
            p.add_equality(ex(e))
        for e in data["psd"]:
            p.add_psd(ex(e))
        p.minimize(data.get("objective", {}))
        return p


def _hermitian_basis(k):
    """Orthonormal basis of ``k x k`` Hermitian matrices (real trace inner product)."""
    out = []
    s = 1 / np.sqrt(2)
    for i in range(k):
        e = np.zeros((k, k), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(k):
        for j in range(i + 1, k):
            e = np.zeros((k, k), dtype=complex)
            e[i, j] = e[j, i] = s
            out.append(e)
            e = np.zeros((k, k), dtype=complex)
            e[i, j] = 1j * s
            e[j, i] = -1j * s
            out.append(e)
    return np.array(out)


class _Standard:
    """Standard-form data with blocks grouped by size."""

    def __init__(self, sizes, rows, free, b, c_blocks, d):
        self.sizes = sizes
        self.m = len(b)
        self.nf = free
        self.b = np.asarray(b, dtype=float)
        self.d = np.asarray(d, dtype=float)
        groups = {}
        for idx, n in enumerate(sizes):
            groups.setdefault(n, []).append(idx)
        self.groups = [(n, np.array(ix)) for n, ix in sorted(groups.items())]
        self.where = {}
        for g, (n, ix) in enumerate(self.groups):
            for pos, idx in enumerate(ix):
                self.where[idx] = (g, pos)
        # a[g] has shape (K, n*n, m); each column is a flattened constraint matrix
        self.a = [np.zeros((len(ix), n * n, self.m)) for n, ix in self.groups]
        self.B = np.zeros((self.m, free))
        for i, (entries, fcoef) in enumerate(rows):
            for idx, mat in entries:
                g, pos = self.where[idx]
                self.a[g][pos, :, i] += mat.reshape(-1)
            for j, v in fcoef:
                self.B[i, j] += v
        self.C = [np.zeros((len(ix), n, n)) for n, ix in self.groups]
        for idx, mat in c_blocks:
            g, pos = self.where[idx]
            self.C[g][pos] += mat
        self.ntot = sum(sizes)

    def A(self, X):
        out = np.zeros(self.m)
        for a, x in zip(self.a, X):
            out += np.einsum("kpi,kp->i", a, x.reshape(x.shape[0], -1))
        return out

    def At(self, y):
        return [np.einsum("kpi,i->kp", a, y).reshape(-1, n, n) for a, (n, _) in zip(self.a, self.groups)]


def _compile(prog):
    labels = list(prog.blocks)
    sizes = [2 * prog.blocks[k] for k in labels]
    index = {k: i for i, k in enumerate(labels)}
    slack_ids = []
    for e in prog.inequalities:
        slack_ids.append(len(sizes))
        sizes.append(2 * e.dim)
    free_index = {s: j for j, s in enumerate(prog.scalars)}
    rows, b = [], []

    def emit(e, slack):
        basis = _hermitian_basis(e.dim)
        terms = []
        for label, w, left in e.block_terms:
            if left is None:
                mats = basis
            else:
                mats = np.einsum("ia,kij,jb->kab", left.conj(), basis, left)
            terms.append((index[label], w * realify(mats) / 2))
        if slack is not None:
            terms.append((slack, -realify(basis) / 2))
        scal = [(free_index[lab], np.einsum("kij,ji->k", basis, c).real) for lab, c in e.scalar_terms]
        rhs = -np.einsum("kij,ji->k", basis, e.const).real
        for q in range(len(basis)):
            entries = [(idx, mats[q]) for idx, mats in terms]
            rows.append((entries, [(j, v[q]) for j, v in scal]))
            b.append(rhs[q])

    for e in prog.equalities:
        emit(e, None)
    for e, sid in zip(prog.inequalities, slack_ids):
        emit(e, sid)
    d = np.zeros(len(prog.scalars))
    for lab, v in prog.objective.items():
        d[free_index[lab]] = v
    std = _Standard(sizes, rows, len(prog.scalars), b, [], d)
    return std, labels, slack_ids


def _sym(x):
    return (x + np.swapaxes(x, -1, -2)) / 2


def _inner(P, Q):
    return float(sum(np.sum(p * q) for p, q in zip(P, Q)))


def _max_step(X, dX):
    """Largest ``alpha`` with ``X + alpha dX`` PSD (``inf`` if unbounded, 0 if ``X`` lost definiteness)."""
    lo = np.inf
    for x, dx in zip(X, dX):
        try:
            L = np.linalg.cholesky(x)
        except np.linalg.LinAlgError:
            return 0.0
        Li = np.linalg.inv(L)
        w = np.linalg.eigvalsh(_sym(Li @ dx @ np.swapaxes(Li, -1, -2)))[:, 0]
        lo = min(lo, float(w.min()))
    return np.inf if lo >= 0 else -1.0 / lo


def _ipm(std, tol=1e-9, max_iter=100):
    m, nf, n = std.m, std.nf, std.ntot
    # Row scaling keeps the Schur complement well conditioned.
    norms = np.sqrt(sum(np.einsum("kpi,kpi->i", a, a) for a in std.a) + np.sum(std.B**2, axis=1))
    norms[norms == 0] = 1.0
    a_s = [a / norms for a in std.a]
    B = std.B / norms[:, None]
    b = std.b / norms
    saved = std.a
    std.a = a_s
    try:
        return _ipm_scaled(std, B, b, norms, tol, max_iter)
    finally:
        std.a = saved


def _ipm_scaled(std, B, b, norms, tol, max_iter):
    m, nf, n = std.m, std.nf, std.ntot
    C, d = std.C, std.d
    normC = np.sqrt(_inner(C, C))
    normb = float(np.linalg.norm(b))
    normd = float(np.linalg.norm(d))
    amax = max(float(np.sqrt(np.max(np.einsum("kpi,kpi->i", a, a)))) for a in std.a) if std.a else 1.0
    zeta = max(10.0, np.sqrt(max(std.sizes)), max(std.sizes) * float(np.max((1 + np.abs(b)) / (1 + amax))))
    eta = max(10.0, np.sqrt(max(std.sizes)), amax, normC)
    X = [zeta * np.broadcast_to(np.eye(k), (len(ix), k, k)).copy() for k, ix in std.groups]
    Z = [eta * np.broadcast_to(np.eye(k), (len(ix), k, k)).copy() for k, ix in std.groups]
    y = np.zeros(m)
    u = np.zeros(nf)
    eye = [np.broadcast_to(np.eye(k), (len(ix), k, k)) for k, ix in std.groups]
    status, message = "max-iter", "iteration limit reached"
    best = None
    since_best = 0
    stall = 0
    it = 0
    pinf = dinf = gap = np.inf
    for it in range(1, max_iter + 1):
        rp = b - std.A(X) - B @ u
        Aty = std.At(y)
        Rd = [c - z - at for c, z, at in zip(C, Z, Aty)]
        rdf = d - B.T @ y
        xz = _inner(X, Z)
        mu = xz / n
        pobj = _inner(C, X) + float(d @ u)
        dobj = float(b @ y)
        pinf = float(np.linalg.norm(rp)) / (1 + normb)
        dinf = float(np.sqrt(_inner(Rd, Rd) + rdf @ rdf)) / (1 + normC + normd)
        gap = abs(pobj - dobj)
        relgap = max(gap, xz) / (1 + abs(pobj) + abs(dobj))
        log.debug("it %3d pobj %+.10e dobj %+.10e gap %.2e pinf %.2e dinf %.2e", it, pobj, dobj, relgap, pinf, dinf)
        if relgap < tol and pinf < tol and dinf < tol:
            status, message = "optimal", "converged"
            break
        score = max(relgap, pinf, dinf)
        if best is None or score < 0.5 * best[0]:
            since_best = 0
        else:
            since_best += 1
        if best is None or score < best[0]:
            best = (score, relgap, pinf, dinf, gap, [x.copy() for x in X], u.copy(), y.copy(), [z.copy() for z in Z])
        if since_best >= 8:
            message = "no progress"
            break
        # infeasibility certificates (normalized rays)
        if dobj > 0:
            ray = np.sqrt(_inner([at + z for at, z in zip(Aty, Z)], [at + z for at, z in zip(Aty, Z)]))
            if ray / dobj < 1e-8 and np.linalg.norm(B.T @ y) / dobj < 1e-8 and dobj > 1e6:
                status, message = "infeasible", "primal infeasible (dual ray found)"
                break
        if pobj < 0:
            res = np.linalg.norm(std.A(X) + B @ u)
            if res / -pobj < 1e-8 and -pobj > 1e6:
                status, message = "infeasible", "dual infeasible (primal unbounded ray found)"
                break
        try:
            Zinv = [_sym(np.linalg.inv(z)) for z in Z]
        except np.linalg.LinAlgError:
            message = "dual iterate lost definiteness"
            break
        M = np.zeros((m, m))
        for a, x, zi in zip(std.a, X, Zinv):
            K, k = x.shape[0], x.shape[1]
            kr = np.einsum("kij,kab->kiajb", x, zi).reshape(K, k * k, k * k)
            t = kr @ a
            M += a.reshape(-1, m).T @ t.reshape(-1, m)
        M = (M + M.T) / 2
        kkt = M if nf == 0 else np.block([[M, B], [B.T, np.zeros((nf, nf))]])
        try:
            lu = _factor(kkt)
        except np.linalg.LinAlgError:
            status, message = "max-iter", "singular Newton system"
            break

        def direction(Rc):
            W = [(rc - x @ r) @ zi for rc, x, r, zi in zip(Rc, X, Rd, Zinv)]
            h = rp - std.A(W)
            rhs = h if nf == 0 else np.concatenate([h, rdf])
            sol = lu(rhs)
            dy, du = sol[:m], sol[m:]
            dZ = [r - at for r, at in zip(Rd, std.At(dy))]
            dX = [_sym((rc - x @ dz) @ zi) for rc, x, dz, zi in zip(Rc, X, dZ, Zinv)]
            # iterative refinement against the exact operators; M loses accuracy as mu -> 0
            for _ in range(2):
                res = rp - std.A(dX) - B @ du
                if np.linalg.norm(res) <= 1e-14 * (1 + np.linalg.norm(rp)):
                    break
                corr = lu(res if nf == 0 else np.concatenate([res, np.zeros(nf)]))
                ey, eu = corr[:m], corr[m:]
                at = std.At(ey)
                dy, du = dy + ey, du + eu
                dZ = [dz - a_ for dz, a_ in zip(dZ, at)]
                dX = [dx + _sym(x @ a_ @ zi) for dx, x, a_, zi in zip(dX, X, at, Zinv)]
            return dX, dy, du, dZ

        xzm = [x @ z for x, z in zip(X, Z)]
        dXa, dya, dua, dZa = direction([-p for p in xzm])
        ap = min(1.0, _max_step(X, dXa))
        ad = min(1.0, _max_step(Z, dZa))
        mu_aff = _inner([x + ap * dx for x, dx in zip(X, dXa)], [z + ad * dz for z, dz in zip(Z, dZa)]) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        Rc = [sigma * mu * e - p - dxa @ dza for e, p, dxa, dza in zip(eye, xzm, dXa, dZa)]
        dX, dy, du, dZ = direction(Rc)
        gamma = 0.9 if it < 3 else 0.98
        ap = min(1.0, gamma * _max_step(X, dX))
        ad = min(1.0, gamma * _max_step(Z, dZ))
        X = [_sym(x + ap * dx) for x, dx in zip(X, dX)]
        u = u + ap * du
        y = y + ad * dy
        Z = [_sym(z + ad * dz) for z, dz in zip(Z, dZ)]
        stall = stall + 1 if max(ap, ad) < 1e-8 else 0
        if stall >= 3:
            message = "step length collapsed"
            break
    if status == "max-iter" and best is not None:
        # fall back to the best iterate; it still counts as optimal at reduced accuracy
        _, relgap, pinf, dinf, gap, X, u, y, Z = best
        if relgap < 1e-7 and pinf < 1e-8 and dinf < 1e-8:
            status, message = "optimal", f"converged to reduced accuracy ({message})"
    return {
        "status": status,
        "message": message,
        "X": X,
        "u": u,
        "y": y / norms,
        "Z": Z,
        "iterations": it,
        "pinf": pinf,
        "dinf": dinf,
        "gap": gap,
    }


def _factor(K):
    import scipy.linalg as sla

    with warnings.catch_warnings():
        # singularity is detected below and handled by the caller
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(K, check_finite=True)
    if not np.all(np.isfinite(lu)) or np.min(np.abs(np.diag(lu))) == 0:
        raise np.linalg.LinAlgError("singular")
    return lambda rhs: sla.lu_solve((lu, piv), rhs)


def solve(prog, tol=1e-9, max_iter=100, raise_on_failure=False):
    """Solve a :class:`ConicProgram` and return a :class:`Solution`.

    ``tol`` bounds the relative duality gap and the scaled primal and dual
    residuals.  With ``raise_on_failure`` a non-optimal status raises
    :class:`SolverError` carrying the partial solution.
    """
    if not prog.blocks and not prog.inequalities:
        raise InvalidInputError("program has no conic variables")
    std, labels, _ = _compile(prog)
    if std.m == 0:
        raise InvalidInputError("program has no constraints")
    res = _ipm(std, tol=tol, max_iter=max_iter)
    blocks = {}
    for i, lab in enumerate(labels):
        g, pos = std.where[i]
        blocks[lab] = complexify(res["X"][g][pos])
    scalars = {s: float(res["u"][j]) for j, s in enumerate(prog.scalars)}
    obj = float(sum(prog.objective.get(s, 0.0) * scalars[s] for s in prog.scalars))
    sol = Solution(
        status=res["status"],
        objective_value=obj,
        blocks=blocks,
        scalars=scalars,
        duality_gap=float(res["gap"]),
        primal_infeasibility=float(res["pinf"]),
        dual_infeasibility=float(res["dinf"]),
        iterations=int(res["iterations"]),
        message=res["message"],
    )
    if raise_on_failure and not sol.optimal:
        raise SolverError(f"solver finished with status {sol.status}: {sol.message}", sol)
    return sol
