"""Incompatibility robustness (IR), consistent steering robustness (CSR) and critical noise.

Both robustness measures are a single SDP over a joint POVM indexed by the
deterministic strategies ``lambda = (a_1, ..., a_n)``:

    minimize t  s.t.  G_lambda >= 0,  sum_lambda G_lambda = (1 + t) S,
                      sum_{lambda_x = a} G_lambda - E_{a|x} >= 0,

with ``S`` the identity (IR, ``E = M``) or the assemblage marginal
(CSR, ``E = sigma``).  The recovered noise ``(marginal - E) / t`` is a valid
measurement (resp. sigma-consistent) assemblage.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .conic import ConicProgram, solve
from .errors import BracketError, SolverError
from .finite import deterministic_strategies, marginals_from_joint
from .matcore import min_eigenvalue

log = logging.getLogger(__name__)

POSITIVE_TOL = 1e-6


@dataclass
class RobustnessResult:
    """Optimal ``t`` with the joint POVM (or hidden-state ensemble) that certifies it."""

    value: float
    joint: dict
    solution: object

    def marginals(self, outcome_counts):
        return marginals_from_joint(self.joint, outcome_counts)


def robustness_program(members, reference):
    """Build the shared IR/CSR program.  ``members[x][a]`` are the targets."""
    members = [[np.asarray(e, dtype=complex) for e in row] for row in members]
    d = reference.shape[0]
    counts = [len(row) for row in members]
    prog = ConicProgram()
    prog.add_scalar("t")
    lams = deterministic_strategies(counts)
    for lam in lams:
        prog.add_block(lam, d)
    total = prog.expr(d).scalar("t", -reference).constant(-reference)
    for lam in lams:
        total.block(lam)
    prog.add_equality(total)
    for x, row in enumerate(members):
        for a, e in enumerate(row):
            ex = prog.expr(d).constant(-e)
            for lam in lams:
                if lam[x] == a:
                    ex.block(lam)
            prog.add_psd(ex)
    prog.minimize({"t": 1.0})
    return prog


def _run(members, reference, tol):
    prog = robustness_program(members, reference)
    sol = solve(prog, tol=tol)
    if not sol.optimal:
        raise SolverError(f"robustness SDP ended with status {sol.status}: {sol.message}", sol)
    t = sol.scalars["t"]
    return RobustnessResult(max(t, 0.0) if t > -1e-9 else t, sol.blocks, sol)


def incompatibility_robustness(assemblage, tol=1e-9, full=False):
    """IR of a measurement assemblage (0 iff jointly measurable).

    With ``full=True`` returns a :class:`RobustnessResult` whose ``joint``
    is the optimal parent POVM scaled by ``1 + t``.
    """
    members = [s.effects for s in assemblage.settings]
    res = _run(members, np.eye(assemblage.dim), tol)
    return res if full else res.value


def consistent_steering_robustness(assemblage, tol=1e-9, full=False):
    """CSR of a state assemblage (0 iff unsteerable)."""
    res = _run(assemblage.members, assemblage.marginal, tol)
    return res if full else res.value


def verify_certificate(result, members, tol=1e-7):
    """Re-check outside the solver that each marginal dominates its target; returns the worst margin."""
    counts = [len(row) for row in members]
    marg = result.marginals(counts)
    worst = np.inf
    for x, row in enumerate(members):
        for a, e in enumerate(row):
            worst = min(worst, min_eigenvalue(marg[x][a] - e))
    for g in result.joint.values():
        worst = min(worst, min_eigenvalue(g))
    return worst >= -tol, worst


def ir_bisection(assemblage, t_hi=1.0, tol=1e-6):
    """IR by bisection on ``t`` with a pure feasibility SDP at every step.

    Independent of :func:`incompatibility_robustness` (``t`` is a fixed
    constant rather than a variable); used as a cross-check.
    """
    members = [s.effects for s in assemblage.settings]
    d = assemblage.dim

    def feasible(t):
        prog = robustness_program(members, np.eye(d))
        # freeze t by an extra equality; the objective becomes irrelevant
        prog.add_equality(prog.expr(1).scalar("t", 1.0).constant(-t))
        prog.minimize({})
        sol = solve(prog, tol=1e-9, max_iter=200)
        return sol.optimal

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, float(t_hi)
    while not feasible(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def critical_noise(family, lo, hi, tol=1e-3, measure=None):
    """Smallest noise parameter where ``measure(family(eta))`` becomes positive.

    ``family`` maps ``eta`` to an assemblage; ``measure`` defaults to
    :func:`incompatibility_robustness`.  "Positive" means ``> 1e-6``; the
    value at ``lo`` must not be positive and the value at ``hi`` must be.
    Returns ``(eta_c, value)``: the midpoint of the final bracket and the
    measured value at its upper end.
    """
    measure = measure or incompatibility_robustness

    def f(eta):
        v = measure(family(eta))
        log.debug("critical_noise eta=%.6f value=%.3e", eta, v)
        return v

    f_lo, f_hi = f(lo), f(hi)
    if f_lo > POSITIVE_TOL:
        raise BracketError(f"value at lower end {lo} is already positive ({f_lo:.3e})")
    if f_hi <= POSITIVE_TOL:
        raise BracketError(f"value at upper end {hi} is not positive ({f_hi:.3e})")
    v_hi = f_hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        v = f(mid)
        if v > POSITIVE_TOL:
            hi, v_hi = mid, v
        else:
            lo = mid
    return (lo + hi) / 2, v_hi
