"""Gaussian states, channels and measurements as parameter triples.

Conventions: quadratures ``R = (q_1, p_1, q_2, p_2, ...)``, symplectic form
``Omega = oplus [[0, 1], [-1, 0]]`` and covariance matrices normalized so
the vacuum has ``V = 1``; the uncertainty relation reads ``V + i Omega >= 0``.
A quadrature ``x.R`` has variance ``x^T V x / 2``.

A channel ``(M, N, c)`` acts as ``V -> M^T V M + N``, ``r -> M^T r + c``.
For a bipartite state the covariance matrix is
``[[V_A, Gamma^T], [Gamma, V_sigma]]`` (Alice first), and the duality maps
it to a channel from Bob's modes to Alice's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, InvalidInputError
from .matcore import PSD_TOL, min_eigenvalue, schur_complement, sqrt_psd, symmetric, symplectic_form

NU_MARGIN = 1e-8


def _vec(v, n, name):
    v = np.zeros(n) if v is None else np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} must be a finite vector of length {n}")
    return v


def _mat(m, shape, name):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or (shape is not None and m.shape != shape) or not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} must be a finite matrix of shape {shape}, got {m.shape}")
    return m


def _modes(dim, name):
    if dim % 2:
        raise InvalidInputError(f"{name} has odd dimension {dim}")
    return dim // 2


def uncertainty_gap(v):
    """Smallest eigenvalue of ``V + i Omega``."""
    return min_eigenvalue(v + 1j * symplectic_form(v.shape[0] // 2))


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix ``V`` and displacement ``r``."""

    V: np.ndarray
    r: np.ndarray = None

    def __post_init__(self):
        v = symmetric(self.V)
        n = _modes(v.shape[0], "V")
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "r", _vec(self.r, 2 * n, "r"))
        if uncertainty_gap(v) < -PSD_TOL:
            raise InvalidInputError("V violates the uncertainty relation V + i Omega >= 0")

    @property
    def modes(self):
        return self.V.shape[0] // 2


@dataclass(frozen=True)
class GaussianBipartiteState:
    """Blocks ``V_A``, ``V_sigma`` (Bob) and ``Gamma`` (Bob rows, Alice columns)."""

    V_A: np.ndarray
    V_sigma: np.ndarray
    Gamma: np.ndarray
    r_A: np.ndarray = None
    r_sigma: np.ndarray = None

    def __post_init__(self):
        va, vs = symmetric(self.V_A), symmetric(self.V_sigma)
        na, nb = _modes(va.shape[0], "V_A"), _modes(vs.shape[0], "V_sigma")
        g = _mat(self.Gamma, (2 * nb, 2 * na), "Gamma")
        object.__setattr__(self, "V_A", va)
        object.__setattr__(self, "V_sigma", vs)
        object.__setattr__(self, "Gamma", g)
        object.__setattr__(self, "r_A", _vec(self.r_A, 2 * na, "r_A"))
        object.__setattr__(self, "r_sigma", _vec(self.r_sigma, 2 * nb, "r_sigma"))
        if uncertainty_gap(self.V) < -PSD_TOL:
            raise InvalidInputError("assembled covariance matrix violates the uncertainty relation")

    @classmethod
    def from_matrix(cls, V, modes_a, r=None):
        V = symmetric(V)
        k = 2 * int(modes_a)
        if not 0 < k < V.shape[0]:
            raise InvalidInputError("modes_a must leave at least one mode for each party")
        r = _vec(r, V.shape[0], "r")
        return cls(V[:k, :k], V[k:, k:], V[k:, :k], r[:k], r[k:])

    @property
    def modes_a(self):
        return self.V_A.shape[0] // 2

    @property
    def modes_b(self):
        return self.V_sigma.shape[0] // 2

    @property
    def V(self):
        return np.block([[self.V_A, self.Gamma.T], [self.Gamma, self.V_sigma]])

    @property
    def r(self):
        return np.concatenate([self.r_A, self.r_sigma])

    def marginal_b(self):
        return GaussianState(self.V_sigma, self.r_sigma)

    def marginal_a(self):
        return GaussianState(self.V_A, self.r_A)


def channel_cp_matrix(M, N, n_in, n_out):
    return N + 1j * symplectic_form(n_out) - 1j * M.T @ symplectic_form(n_in) @ M


@dataclass(frozen=True)
class GaussianChannel:
    """``M`` is ``2 n_in x 2 n_out``; ``N`` is ``2 n_out x 2 n_out``; ``c`` has length ``2 n_out``."""

    M: np.ndarray
    N: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        m = _mat(self.M, None, "M")
        n_in, n_out = _modes(m.shape[0], "M rows"), _modes(m.shape[1], "M columns")
        nm = symmetric(self.N)
        if nm.shape != (2 * n_out, 2 * n_out):
            raise InvalidInputError("N must match the output dimension of M")
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "N", nm)
        object.__setattr__(self, "c", _vec(self.c, 2 * n_out, "c"))
        if min_eigenvalue(channel_cp_matrix(m, nm, n_in, n_out)) < -PSD_TOL:
            raise InvalidInputError("channel is not completely positive: N + i Omega - i M^T Omega M is not PSD")

    @property
    def modes_in(self):
        return self.M.shape[0] // 2

    @property
    def modes_out(self):
        return self.M.shape[1] // 2

    @classmethod
    def identity(cls, modes):
        return cls(np.eye(2 * modes), np.zeros((2 * modes, 2 * modes)))

    def observable_matrix(self):
        """``C_{M,N} = N - i M^T Omega M``; PSD iff the channel parameters form a Gaussian observable."""
        return self.N - 1j * self.M.T @ symplectic_form(self.modes_in) @ self.M


@dataclass(frozen=True)
class GaussianMeasurement:
    """``K`` is ``2N x d``, ``L`` is ``d x d``, ``m`` has length ``d``; requires ``L - i K^T Omega K >= 0``."""

    K: np.ndarray
    L: np.ndarray
    m: np.ndarray = None

    def __post_init__(self):
        k = _mat(self.K, None, "K")
        _modes(k.shape[0], "K rows")
        lm = symmetric(self.L)
        if lm.shape != (k.shape[1], k.shape[1]):
            raise InvalidInputError("L must be d x d with d the number of columns of K")
        object.__setattr__(self, "K", k)
        object.__setattr__(self, "L", lm)
        object.__setattr__(self, "m", _vec(self.m, k.shape[1], "m"))
        if min_eigenvalue(self.positivity_matrix()) < -PSD_TOL:
            raise InvalidInputError("measurement violates L - i K^T Omega K >= 0")

    @property
    def modes(self):
        return self.K.shape[0] // 2

    @property
    def outcome_dim(self):
        return self.K.shape[1]

    def positivity_matrix(self):
        return self.L - 1j * self.K.T @ symplectic_form(self.K.shape[0] // 2) @ self.K

    @classmethod
    def noisy_quadrature(cls, x, xi):
        """Quadrature ``x.R`` convolved with Gaussian noise of variance ``xi^2``."""
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        return cls(x, [[2 * xi * xi]])


@dataclass(frozen=True)
class GaussianPostprocessing:
    """Classical Gaussian post-processing ``(M, N, c)``; only ``N >= 0`` is required."""

    M: np.ndarray
    N: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        m = _mat(self.M, None, "M")
        nm = symmetric(self.N)
        if nm.shape != (m.shape[1], m.shape[1]):
            raise InvalidInputError("N must match the output dimension of M")
        if min_eigenvalue(nm) < -PSD_TOL:
            raise InvalidInputError("post-processing noise N must be PSD")
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "N", nm)
        object.__setattr__(self, "c", _vec(self.c, m.shape[1], "c"))

    @classmethod
    def projection(cls, d, index):
        """Keep coordinate ``index`` of a ``d``-dimensional outcome."""
        m = np.zeros((d, 1))
        m[index, 0] = 1.0
        return cls(m, np.zeros((1, 1)))


def apply_channel_state(ch, st):
    if st.modes != ch.modes_in:
        raise InvalidInputError(f"channel expects {ch.modes_in} modes, state has {st.modes}")
    return GaussianState(ch.M.T @ st.V @ ch.M + ch.N, ch.M.T @ st.r + ch.c)


def compose(ch1, ch2):
    """Channel for ``ch1`` followed by ``ch2``."""
    if ch1.modes_out != ch2.modes_in:
        raise InvalidInputError("channel dimensions do not chain")
    return GaussianChannel(ch1.M @ ch2.M, ch2.M.T @ ch1.N @ ch2.M + ch2.N, ch2.M.T @ ch1.c + ch2.c)


def apply_channel_measurement(ch, meas):
    """Heisenberg picture: measurement on the channel output pulled back to its input."""
    if meas.modes != ch.modes_out:
        raise InvalidInputError("measurement does not act on the channel output")
    return GaussianMeasurement(ch.M @ meas.K, meas.L + meas.K.T @ ch.N @ meas.K, meas.m + meas.K.T @ ch.c)


def postprocess(meas, post):
    if post.M.shape[0] != meas.outcome_dim:
        raise InvalidInputError("post-processing does not match the outcome dimension")
    return GaussianMeasurement(meas.K @ post.M, post.N + post.M.T @ meas.L @ post.M, post.c + post.M.T @ meas.m)


def channel_as_measurement(ch):
    """Read a channel triple as a joint observable ``(K, L, m) = (M, N, c)``; needs ``C_{M,N} >= 0``."""
    return GaussianMeasurement(ch.M, ch.N, ch.c)


def outcome_moments(meas, st):
    """Mean ``K^T r + m`` and covariance ``(K^T V K + L) / 2`` of the outcome distribution."""
    if meas.modes != st.modes:
        raise InvalidInputError("measurement and state have different mode counts")
    return meas.K.T @ st.r + meas.m, (meas.K.T @ st.V @ meas.K + meas.L) / 2


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """``V = S^T diag(nu_1, nu_1, nu_2, nu_2, ...) S`` with ``S`` symplectic."""

    S: np.ndarray
    nu: np.ndarray

    @property
    def D(self):
        return np.diag(np.repeat(self.nu, 2))


def _phase_fix(u):
    idx = np.argmax(np.abs(u) - 1e-12 * np.arange(u.shape[0])[:, None], axis=0)
    ph = u[idx, np.arange(u.shape[1])]
    return u * (np.abs(ph) / ph)


def williamson(V):
    """Williamson normal form via the spectrum of ``i V^{1/2} Omega V^{1/2}``.

    Symplectic eigenvalues come sorted descending.  Each eigenvector ``u``
    for ``+nu`` is phased so its largest entry is real positive and gives
    the rows ``sqrt(2) Re u`` and ``-sqrt(2) Im u`` of the orthogonal factor.
    """
    v = symmetric(V)
    n = _modes(v.shape[0], "V")
    w = np.linalg.eigvalsh(v)
    if w[0] <= 1e-12 * max(1.0, w[-1]):
        raise DomainError("V must be positive definite")
    root = sqrt_psd(v)
    h = 1j * root @ symplectic_form(n) @ root
    lam, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    order = np.argsort(-lam, kind="stable")[:n]
    nu = lam[order]
    u = _phase_fix(vecs[:, order])
    o = np.empty((2 * n, 2 * n))
    o[:, 0::2] = np.sqrt(2) * u.real
    o[:, 1::2] = -np.sqrt(2) * u.imag
    s = np.diag(np.repeat(nu, 2) ** -0.5) @ o.T @ root
    return WilliamsonDecomposition(s, nu)


def symplectic_eigenvalues(V):
    v = symmetric(V)
    n = _modes(v.shape[0], "V")
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ v))
    return np.sort(ev)[::-1][::2]


def _z_factor(wd):
    if np.any(wd.nu <= 1 + NU_MARGIN):
        raise DomainError(
            f"symplectic eigenvalue {wd.nu.min():.12g} is not above 1; factor out vacuum modes first"
        )
    z = np.kron(np.diag(np.sqrt(wd.nu**2 - 1)), np.diag([1.0, -1.0]))
    return wd.S.T @ z @ wd.S


def gaussian_state_to_channel(rho):
    """Channel ``(M, N, c)`` from Bob to Alice with ``rho = (T (x) id)`` of the purification of ``V_sigma``."""
    stz = _z_factor(williamson(rho.V_sigma))
    m = np.linalg.solve(stz, rho.Gamma)
    n = rho.V_A - m.T @ rho.V_sigma @ m
    c = rho.r_A - m.T @ rho.r_sigma
    return GaussianChannel(m, n, c)


def gaussian_channel_to_state(ch, sigma):
    """Apply ``ch`` to Alice's half of the purification of ``sigma``."""
    if ch.modes_in != sigma.modes:
        raise InvalidInputError("channel input does not match the state")
    stz = _z_factor(williamson(sigma.V))
    return GaussianBipartiteState(
        ch.M.T @ sigma.V @ ch.M + ch.N,
        sigma.V,
        stz @ ch.M,
        ch.M.T @ sigma.r + ch.c,
        sigma.r,
    )


def purification(sigma):
    """Purification covariance of ``sigma`` (identity channel on the copy)."""
    return gaussian_channel_to_state(GaussianChannel.identity(sigma.modes), sigma)


def block_test_matrix(rho):
    """``V + i (0 (+) Omega_B)``."""
    k = 2 * rho.modes_a
    om = np.zeros((rho.V.shape[0],) * 2)
    om[k:, k:] = symplectic_form(rho.modes_b)
    return rho.V + 1j * om


@dataclass
class SteeringVerdict:
    steerable: bool
    block_min_eigenvalue: float
    channel_steerable: bool = None
    channel_min_eigenvalue: float = None


def is_steerable(rho, tol=PSD_TOL):
    """Alice can steer Bob iff ``V + i (0 (+) Omega_B)`` is not PSD."""
    return min_eigenvalue(block_test_matrix(rho)) < -tol


def steering_verdicts(rho, tol=PSD_TOL):
    """Block test and, when the duality applies, the channel test ``C_{M,N} >= 0``."""
    lo = min_eigenvalue(block_test_matrix(rho))
    out = SteeringVerdict(lo < -tol, lo)
    try:
        ch = gaussian_state_to_channel(rho)
    except DomainError:
        return out
    c = min_eigenvalue(ch.observable_matrix())
    out.channel_steerable = c < -tol
    out.channel_min_eigenvalue = c
    return out


def schur_block(rho):
    """Schur complement of ``V_sigma + i Omega_B`` in ``V + i (0 (+) Omega_B)``."""
    return schur_complement(block_test_matrix(rho), 2 * rho.modes_a)


@dataclass
class SteeringWitness:
    """Canonical pair ``x^T Omega y = 1`` whose channel images are not jointly measurable."""

    x: np.ndarray
    y: np.ndarray
    xi: float
    xi_prime: float
    commutator: float
    margin: float
    min_eigenvalue: float


def steering_witness(rho):
    """Canonical quadrature pair on Alice's side that certifies steering.

    Take the eigenvector ``y + i x`` of ``C_{M,N}`` for its most negative
    eigenvalue and rescale so that ``x^T Omega_A y = 1``.  With
    ``xi^2 = x^T N x / 2`` and ``xi'^2 = y^T N y / 2`` the margin
    ``|(Mx)^T Omega_B (My)| / 2 - xi xi'`` is positive.
    """
    ch = gaussian_state_to_channel(rho)
    c = ch.observable_matrix()
    lam, vecs = np.linalg.eigh((c + c.conj().T) / 2)
    if lam[0] >= -PSD_TOL:
        raise DomainError("state is not steerable; no witness exists")
    v = _phase_fix(vecs[:, :1])[:, 0]
    y, x = v.real.copy(), v.imag.copy()
    om_a = symplectic_form(rho.modes_a)
    r = float(x @ om_a @ y)
    if r < 0:
        x = -x
        r = -r
    if r <= 1e-14:
        raise DomainError("degenerate witness eigenvector")
    x, y = x / np.sqrt(r), y / np.sqrt(r)
    xi = float(np.sqrt(max(x @ ch.N @ x, 0.0) / 2))
    xip = float(np.sqrt(max(y @ ch.N @ y, 0.0) / 2))
    comm = float((ch.M @ x) @ symplectic_form(rho.modes_b) @ (ch.M @ y))
    return SteeringWitness(x, y, xi, xip, comm, abs(comm) / 2 - xi * xip, float(lam[0]))


def noisy_quadratures_jm(x, xi, y, xi_prime, modes=None, tol=1e-12):
    """Noisy quadratures are jointly measurable iff ``xi xi' >= |x^T Omega y| / 2``."""
    if xi < 0 or xi_prime < 0:
        raise InvalidInputError("noise parameters must be non-negative")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    om = symplectic_form(modes or x.shape[0] // 2)
    return bool(xi * xi_prime >= abs(x @ om @ y) / 2 - tol)


def covariant_joint_measurement(xi, xi_prime):
    """Gaussian joint measurement of ``q`` with noise ``xi`` and ``p`` with noise ``xi'``.

    Outcome ``(a, b)``; ``K = 1``, ``L = [[2 xi^2, l], [l, 2 xi'^2]]`` with
    ``l = -sqrt(4 xi^2 xi'^2 - 1)`` so that ``det L = 1`` (pure seed state).
    Projecting onto either coordinate gives the noisy quadratures exactly.
    """
    if xi <= 0 or xi_prime <= 0:
        raise InvalidInputError("noise parameters must be positive")
    prod = xi * xi_prime
    if prod < 0.5 - 1e-12:
        raise DomainError(f"xi * xi' = {prod:.6g} < 1/2: the pair is not jointly measurable")
    c = 1 / (4 * xi * xi)
    w = np.sqrt(max(c * (xi_prime**2 - c), 0.0))
    lo = -w / c
    return GaussianMeasurement(np.eye(2), [[2 * xi * xi, lo], [lo, 2 * xi_prime**2]])


@dataclass(frozen=True)
class GaussianLhs:
    """Gaussian hidden-state ensemble for Bob.

    ``lambda ~ N(0, V_A / 2)`` (density proportional to
    ``exp(-lambda^T V_A^{-1} lambda)``), hidden states with covariance
    ``V_lambda`` and displacement ``r_sigma + displacement_map @ lambda``.
    """

    V_A: np.ndarray
    V_lambda: np.ndarray
    displacement_map: np.ndarray
    r_sigma: np.ndarray

    def weight_covariance(self):
        return self.V_A / 2

    def mixture_covariance(self):
        """Covariance matrix of the ensemble average: ``V_lambda + 2 Cov(r_lambda)``."""
        cov = self.displacement_map @ self.weight_covariance() @ self.displacement_map.T
        return self.V_lambda + 2 * cov

    def sample(self, rng, size):
        lam = rng.multivariate_normal(np.zeros(self.V_A.shape[0]), self.weight_covariance(), size=size)
        return lam, self.r_sigma + lam @ self.displacement_map.T


def gaussian_lhs(rho):
    """Local hidden state model for an unsteerable Gaussian state."""
    if is_steerable(rho):
        raise DomainError("state is steerable; no local hidden state model exists")
    if np.linalg.eigvalsh(rho.V_A)[0] <= 0:
        raise DomainError("V_A must be positive definite")
    k = np.linalg.solve(rho.V_A, rho.Gamma.T).T
    v_lam = symmetric(rho.V_sigma - k @ rho.Gamma.T)
    return GaussianLhs(rho.V_A, v_lam, -k, rho.r_sigma)


def tmsv(squeezing, thermal_b=0.0):
    """Two-mode squeezed vacuum; ``thermal_b`` adds ``eps * 1`` to Bob's block."""
    c, s = np.cosh(2 * squeezing), np.sinh(2 * squeezing)
    z = np.diag([1.0, -1.0])
    return GaussianBipartiteState(c * np.eye(2), c * np.eye(2) + thermal_b * np.eye(2), s * z)


def random_symplectic(modes, rng, scale=0.5):
    h = rng.normal(size=(2 * modes, 2 * modes)) * scale
    h = (h + h.T) / 2
    return sla.expm(symplectic_form(modes) @ h)


def random_cm(modes, rng, nu_range=(1.05, 3.0)):
    """``S^T D S`` with random symplectic ``S`` and thermal ``D``."""
    nu = rng.uniform(*nu_range, size=modes)
    s = random_symplectic(modes, rng)
    return symmetric(s.T @ np.diag(np.repeat(nu, 2)) @ s)


def random_channel(modes_in, modes_out, rng, noise=0.3):
    """Random valid channel: ``N = |i(Omega_out - M^T Omega_in M)|`` plus random PSD noise."""
    m = rng.normal(size=(2 * modes_in, 2 * modes_out)) * rng.uniform(0.3, 1.5)
    h = 1j * (symplectic_form(modes_out) - m.T @ symplectic_form(modes_in) @ m)
    lam, vec = np.linalg.eigh(h)
    n = ((vec * np.abs(lam)) @ vec.conj().T).real
    g = rng.normal(size=(2 * modes_out, 2 * modes_out)) * noise
    n = symmetric(n + g @ g.T * rng.uniform(0, 1))
    return GaussianChannel(m, n, rng.normal(size=2 * modes_out) * 0.1)


def random_bipartite(rng, modes_a=1, modes_b=1):
    """Random channel applied to the purification of a random state of Bob."""
    sigma = GaussianState(random_cm(modes_b, rng), rng.normal(size=2 * modes_b) * 0.1)
    return gaussian_channel_to_state(random_channel(modes_b, modes_a, rng), sigma)
