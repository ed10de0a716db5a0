"""Dense matrix utilities shared by every other module.

Hermitian and real symmetric matrices are plain ``numpy`` arrays; the
helpers here validate them, test positivity, take square roots and
pseudo-inverses, and build the symplectic form.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidInputError

PSD_TOL = 1e-9
HERMITIAN_TOL = 1e-12


def _square(m, name="matrix"):
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def hermitian(m, tol=HERMITIAN_TOL):
    """Validate ``m`` as Hermitian and return it as a complex array.

    The deviation from Hermiticity is measured relative to ``max(1, |m|)``.
    """
    a = _square(m).astype(complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise InvalidInputError("matrix is not Hermitian")
    return a


def symmetric(m):
    """Return the real symmetric part of ``m`` (symmetrized on input)."""
    a = _square(m)
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag)) > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(a)))):
            raise InvalidInputError("symmetric matrix must be real")
        a = a.real
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2


def herm_part(m):
    """Hermitian part ``(m + m^dagger)/2``; no validation."""
    m = np.asarray(m)
    return (m + m.conj().T) / 2


def min_eigenvalue(m):
    """Smallest eigenvalue of a Hermitian matrix."""
    a = _square(m)
    return float(np.linalg.eigvalsh(herm_part(a))[0])


def is_psd(m, tol=PSD_TOL):
    """True iff the smallest eigenvalue of ``m`` is at least ``-tol``."""
    if tol < 0:
        raise InvalidInputError("tolerance must be non-negative")
    return min_eigenvalue(m) >= -tol


def sqrt_psd(m, tol=PSD_TOL):
    """Principal square root of a PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero before the root is
    taken; anything more negative raises :class:`DomainError`.
    """
    a = herm_part(_square(m))
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise DomainError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.sqrt(np.clip(w, 0.0, None))
    r = (v * w) @ v.conj().T
    if not np.iscomplexobj(m):
        r = r.real
    return herm_part(r)


def pinv_psd(m, rank_tol=1e-10):
    """Moore-Penrose pseudo-inverse of a PSD matrix.

    Eigenvalues below ``rank_tol * max_eigenvalue`` are treated as zero.
    """
    a = herm_part(_square(m))
    w, v = np.linalg.eigh(a)
    cut = rank_tol * max(float(w[-1]), 0.0)
    inv = np.zeros_like(w)
    keep = w > cut
    inv[keep] = 1.0 / w[keep]
    r = (v * inv) @ v.conj().T
    if not np.iscomplexobj(m):
        r = r.real
    return herm_part(r)


def inv_sqrt_psd(m, rank_tol=1e-10):
    """``m^{-1/2}`` for a positive definite matrix; raises on deficient rank."""
    a = herm_part(_square(m))
    w, v = np.linalg.eigh(a)
    if w[-1] <= 0 or w[0] < rank_tol * w[-1]:
        raise DomainError(
            f"matrix is rank deficient: eigenvalue {w[0]:.3e} below {rank_tol:.0e} relative"
        )
    r = (v / np.sqrt(w)) @ v.conj().T
    if not np.iscomplexobj(m):
        r = r.real
    return herm_part(r)


def schur_complement(m, block_a_dim, rank_tol=1e-12):
    """Schur complement of the lower-right block.

    For ``m = [[A, B^dagger], [B, C]]`` with ``A`` of size ``block_a_dim``
    returns ``A - B^dagger C^{-1} B``.  ``C`` need not be Hermitian, so the
    test on its invertibility uses singular values.
    """
    a = _square(m)
    n = a.shape[0]
    k = int(block_a_dim)
    if not 0 < k < n:
        raise InvalidInputError(f"block_a_dim must lie in (0, {n}), got {k}")
    top_left, top_right = a[:k, :k], a[:k, k:]
    bottom_left, bottom_right = a[k:, :k], a[k:, k:]
    s = np.linalg.svd(bottom_right, compute_uv=False)
    if s[-1] <= rank_tol * max(s[0], 1.0):
        raise DomainError(f"lower-right block is singular (smallest singular value {s[-1]:.3e})")
    return top_left - top_right @ np.linalg.solve(bottom_right, bottom_left)


def symplectic_form(modes):
    """Block-diagonal symplectic form with blocks ``[[0, 1], [-1, 0]]``."""
    modes = int(modes)
    if modes < 1:
        raise InvalidInputError("number of modes must be positive")
    return np.kron(np.eye(modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def direct_sum(*blocks):
    """Block-diagonal matrix from square or rectangular blocks."""
    blocks = [np.atleast_2d(np.asarray(b)) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    dtype = np.result_type(*blocks)
    out = np.zeros((rows, cols), dtype=dtype)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def realify(h):
    """Real embedding ``H -> [[Re H, -Im H], [Im H, Re H]]``.

    Works on a single matrix or a stack of matrices (last two axes).
    The spectrum of the image is that of ``H`` with doubled multiplicity.
    """
    h = np.asarray(h)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def complexify(x):
    """Hermitian matrix represented by a real symmetric ``2d x 2d`` block.

    Left inverse of :func:`realify` that also projects arbitrary symmetric
    blocks onto the image of the embedding.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1] // 2
    a, b = x[..., :d, :d], x[..., :d, d:]
    c, e = x[..., d:, :d], x[..., d:, d:]
    return (a + e) / 2 + 1j * (c - b) / 2


def max_abs(m):
    return float(np.max(np.abs(np.asarray(m))))
