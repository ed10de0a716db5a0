"""Finite-dimensional states, POVMs, assemblages and the state-channel duality.

Bipartite matrices use Alice-major ordering: basis index ``a * dim_b + b``.
A channel produced by :func:`state_to_channel` maps Bob's space to Alice's
space, and :func:`channel_to_state` applies it to Alice's half of the
purification ``sum_n sqrt(s_n) w_n (x) w_n`` of Bob's marginal.  Transposes
are taken in the eigenbasis ``{w_n}``; it is stored as ``reference_basis``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidInputError
from .matcore import PSD_TOL, herm_part, hermitian, inv_sqrt_psd, min_eigenvalue, sqrt_psd

RANK_TOL = 1e-10
NORM_TOL = 1e-9


def density_matrix(m, tol=NORM_TOL):
    """Validate a density matrix (Hermitian, PSD, unit trace)."""
    a = hermitian(m)
    if min_eigenvalue(a) < -tol:
        raise InvalidInputError("density matrix is not PSD")
    if abs(np.trace(a).real - 1) > tol:
        raise InvalidInputError(f"density matrix has trace {np.trace(a).real:.12g}")
    return herm_part(a)


@dataclass(frozen=True)
class DiscretePovm:
    """Finite POVM; ``effects`` are PSD and sum to the identity."""

    effects: tuple

    def __post_init__(self):
        effects = tuple(herm_part(hermitian(e)) for e in self.effects)
        if not effects:
            raise InvalidInputError("POVM needs at least one effect")
        d = effects[0].shape[0]
        if any(e.shape != (d, d) for e in effects):
            raise InvalidInputError("POVM effects differ in dimension")
        for e in effects:
            if min_eigenvalue(e) < -PSD_TOL:
                raise InvalidInputError("POVM effect is not PSD")
        if np.max(np.abs(sum(effects) - np.eye(d))) > NORM_TOL:
            raise InvalidInputError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self):
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self):
        return len(self.effects)

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, a):
        return self.effects[a]


@dataclass(frozen=True)
class MeasurementAssemblage:
    """Family ``{M_{a|x}}``; ``settings[x][a]`` is an effect."""

    settings: tuple
    labels: tuple = None

    def __post_init__(self):
        settings = tuple(s if isinstance(s, DiscretePovm) else DiscretePovm(tuple(s)) for s in self.settings)
        if not settings:
            raise InvalidInputError("assemblage needs at least one setting")
        if len({s.dim for s in settings}) != 1:
            raise InvalidInputError("settings act on different dimensions")
        object.__setattr__(self, "settings", settings)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(len(settings))))

    @property
    def dim(self):
        return self.settings[0].dim

    @property
    def outcome_counts(self):
        return tuple(s.n_outcomes for s in self.settings)

    def __len__(self):
        return len(self.settings)

    def __getitem__(self, x):
        return self.settings[x]

    def conjugated(self, u):
        """``{U M U^dagger}`` for a unitary ``U``."""
        u = np.asarray(u)
        return MeasurementAssemblage(tuple(tuple(u @ e @ u.conj().T for e in s.effects) for s in self.settings))


@dataclass(frozen=True)
class StateAssemblage:
    """Family ``{sigma_{a|x}}`` of PSD matrices with a common marginal."""

    members: tuple
    labels: tuple = None

    def __post_init__(self):
        members = tuple(tuple(herm_part(hermitian(s)) for s in row) for row in self.members)
        if not members or any(not row for row in members):
            raise InvalidInputError("assemblage needs at least one setting and outcome")
        d = members[0][0].shape[0]
        for row in members:
            for s in row:
                if s.shape != (d, d):
                    raise InvalidInputError("assemblage members differ in dimension")
                if min_eigenvalue(s) < -PSD_TOL:
                    raise InvalidInputError("assemblage member is not PSD")
        sums = [sum(row) for row in members]
        for s in sums[1:]:
            if np.max(np.abs(s - sums[0])) > NORM_TOL:
                raise InvalidInputError("assemblage is signalling: marginals differ between settings")
        if abs(np.trace(sums[0]).real - 1) > NORM_TOL:
            raise InvalidInputError("assemblage marginal does not have unit trace")
        object.__setattr__(self, "members", members)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(len(members))))

    @property
    def dim(self):
        return self.members[0][0].shape[0]

    @property
    def marginal(self):
        return herm_part(sum(self.members[0]))

    @property
    def outcome_counts(self):
        return tuple(len(row) for row in self.members)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, x):
        return self.members[x]


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving CP map from ``dim_in`` to ``dim_out``."""

    kraus_ops: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops or any(k.ndim != 2 for k in ops):
            raise InvalidInputError("Kraus operators must be a non-empty list of matrices")
        if len({k.shape for k in ops}) != 1:
            raise InvalidInputError("Kraus operators differ in shape")
        if not all(np.all(np.isfinite(k)) for k in ops):
            raise InvalidInputError("Kraus operators have non-finite entries")
        tp = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(tp - np.eye(tp.shape[0]))) > 1e-8:
            raise InvalidInputError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim_in(self):
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self):
        return self.kraus_ops[0].shape[0]

    def apply(self, rho):
        """Schrodinger picture ``sum_k K rho K^dagger``."""
        rho = np.asarray(rho)
        if rho.shape != (self.dim_in, self.dim_in):
            raise InvalidInputError("state dimension does not match channel input")
        return herm_part(sum(k @ rho @ k.conj().T for k in self.kraus_ops))


@dataclass(frozen=True)
class BipartiteState:
    """Density matrix on ``C^dim_a (x) C^dim_b`` (Alice-major ordering).

    ``reference_basis`` holds the columns ``w_n`` of the basis in which
    transposes are taken, when the state came out of the duality.
    """

    matrix: np.ndarray
    dim_a: int
    dim_b: int
    reference_basis: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise InvalidInputError("subsystem dimensions must be positive")
        m = density_matrix(self.matrix)
        if m.shape[0] != self.dim_a * self.dim_b:
            raise InvalidInputError(f"matrix of size {m.shape[0]} does not match {self.dim_a}x{self.dim_b}")
        object.__setattr__(self, "matrix", m)

    def _tensor(self):
        return self.matrix.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)

    def marginal_a(self):
        return herm_part(np.einsum("ibjb->ij", self._tensor()))

    def marginal_b(self):
        return herm_part(np.einsum("aiaj->ij", self._tensor()))


def _phase_fixed(v):
    """Multiply each column by a phase making its largest-magnitude entry real positive."""
    idx = np.argmax(np.abs(v) - 1e-12 * np.arange(v.shape[0])[:, None], axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(ph) / ph)


def eigenbasis(sigma):
    """Eigenvalues (descending) and phase-fixed eigenvectors of ``sigma``."""
    w, v = np.linalg.eigh(herm_part(np.asarray(sigma, dtype=complex)))
    order = np.argsort(-w, kind="stable")
    return w[order], _phase_fixed(v[:, order])


def purify(sigma):
    """Pure state ``sum_n sqrt(s_n) w_n (x) w_n`` with both marginals equal to ``sigma``."""
    sigma = density_matrix(sigma)
    s, w = eigenbasis(sigma)
    s = np.clip(s, 0.0, None)
    d = sigma.shape[0]
    psi = np.einsum("n,in,jn->ij", np.sqrt(s), w, w).reshape(d * d)
    return BipartiteState(np.outer(psi, psi.conj()), d, d, reference_basis=w)


def transpose_in_basis(m, basis):
    """``W (W^dagger m W)^T W^dagger``: transpose relative to the columns of ``W``."""
    return basis @ (basis.conj().T @ m @ basis).T @ basis.conj().T


def channel_to_state(channel, sigma):
    """``(T (x) id)`` applied to the purification of ``sigma``."""
    sigma = density_matrix(sigma)
    if channel.dim_in != sigma.shape[0]:
        raise InvalidInputError(f"channel input dim {channel.dim_in} does not match state dim {sigma.shape[0]}")
    s, w = eigenbasis(sigma)
    base = np.einsum("n,in,jn->ij", np.sqrt(np.clip(s, 0.0, None)), w, w)
    rho = 0
    for k in channel.kraus_ops:
        psi = (k @ base).reshape(-1)
        rho = rho + np.outer(psi, psi.conj())
    return BipartiteState(herm_part(rho), channel.dim_out, sigma.shape[0], reference_basis=w)


def state_to_channel(rho, rank_tol=RANK_TOL):
    """Channel ``T`` from Bob to Alice with ``channel_to_state(T, tr_A rho) == rho``.

    Kraus operators come from the eigendecomposition of ``rho``, one per
    nonzero eigenvalue.  Bob's marginal must be full rank.
    """
    sigma = rho.marginal_b()
    s, w = eigenbasis(sigma)
    if s[0] <= 0 or s[-1] < rank_tol * s[0]:
        raise DomainError(f"marginal is rank deficient: eigenvalue {s[-1]:.3e}")
    isq = inv_sqrt_psd(sigma, rank_tol=rank_tol)
    lam, vecs = np.linalg.eigh(rho.matrix)
    keep = lam > rank_tol * lam[-1]
    right = w.conj() @ w.conj().T
    ops = []
    for val, vec in zip(lam[keep][::-1], vecs[:, keep][:, ::-1].T):
        psi = np.sqrt(val) * vec.reshape(rho.dim_a, rho.dim_b)
        ops.append(psi @ right @ isq)
    return KrausChannel(tuple(ops))


def heisenberg(channel, a):
    """``T*(A) = sum_k K_k^dagger A K_k``."""
    a = np.asarray(a)
    if a.shape != (channel.dim_out, channel.dim_out):
        raise InvalidInputError("operator dimension does not match channel output")
    return herm_part(sum(k.conj().T @ a @ k for k in channel.kraus_ops))


def heisenberg_assemblage(channel, meas):
    return MeasurementAssemblage(tuple(tuple(heisenberg(channel, e) for e in s.effects) for s in meas.settings))


def assemblage_from_state(rho, meas):
    """``sigma_{a|x} = tr_A[(A_{a|x} (x) 1) rho]``."""
    if meas.dim != rho.dim_a:
        raise InvalidInputError("measurements do not act on Alice's space")
    t = rho._tensor()
    rows = tuple(tuple(np.einsum("ji,ibjc->bc", e, t) for e in s.effects) for s in meas.settings)
    return StateAssemblage(rows)


def steering_equivalent_observables(assemblage, rank_tol=RANK_TOL):
    """``B_{a|x} = sigma^{-1/2} sigma_{a|x} sigma^{-1/2}`` with ``sigma`` the marginal."""
    isq = inv_sqrt_psd(assemblage.marginal, rank_tol=rank_tol)
    rows = []
    for row in assemblage.members:
        eff = [herm_part(isq @ s @ isq) for s in row]
        # absorb rounding so the effects sum exactly to the identity
        eff[-1] = eff[-1] + (np.eye(len(isq)) - sum(eff))
        rows.append(tuple(eff))
    return MeasurementAssemblage(tuple(rows))


def hidden_states_from_povm(povm, sigma):
    """``sigma_lambda = sigma^{1/2} G_lambda sigma^{1/2}``."""
    sigma = density_matrix(sigma)
    if povm.dim != sigma.shape[0]:
        raise InvalidInputError("POVM and state dimensions differ")
    sq = sqrt_psd(sigma)
    return [herm_part(sq @ g @ sq) for g in povm.effects]


def deterministic_strategies(outcome_counts):
    """All joint outcomes ``lambda = (a_1, ..., a_n)``; strategy ``D(a|x, lambda) = [lambda_x == a]``."""
    if not outcome_counts or any(int(m) < 1 for m in outcome_counts):
        raise InvalidInputError("outcome counts must be positive")
    return list(itertools.product(*(range(int(m)) for m in outcome_counts)))


def marginals_from_joint(joint, outcome_counts):
    """Post-process a joint POVM ``{lambda: G_lambda}`` by the deterministic strategies."""
    d = next(iter(joint.values())).shape[0]
    out = [[np.zeros((d, d), dtype=complex) for _ in range(m)] for m in outcome_counts]
    for lam, g in joint.items():
        for x, a in enumerate(lam):
            out[x][a] = out[x][a] + g
    return out


def projective_measurement(basis):
    """PVM from the columns of a unitary."""
    u = np.asarray(basis, dtype=complex)
    return DiscretePovm(tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(u.shape[1])))
