"""Numerical primitives shared by every other module.

SVD based null spaces and ranks, principal angles, eigendecomposition,
the eigenvalue power stack used to describe eigen-motions, and a few
helpers for conjugate-closed spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInput, SpectrumNotConjugateClosed


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds, passed explicitly to every operation.

    rank_rel
        Singular values at or below ``rank_rel * s_max`` count as zero.
    zero_abs
        Gain entries with magnitude at or below this are counted as zeros.
    eig_abs
        Eigenvalue matching tolerance.
    subspace_angle
        Two subspaces of equal dimension are equal when their largest
        principal angle (radians) is at or below this.
    membership_rel
        Relative threshold on the pole-placement membership residual.
    """

    rank_rel: float = 1e-9
    zero_abs: float = 1e-6
    eig_abs: float = 1e-4
    subspace_angle: float = 1e-6
    membership_rel: float = 1e-7

    def __post_init__(self):
        for name in ("rank_rel", "zero_abs", "eig_abs", "subspace_angle", "membership_rel"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInput(f"tolerance {name} must be strictly positive, got {value}")


DEFAULT_TOL = Tolerances()


def as_matrix(M, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    """Return ``M`` as a 2-D float or complex array, rejecting NaN/Inf."""
    A = np.asarray(M)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {A.shape}")
    if not np.issubdtype(A.dtype, np.number):
        raise InvalidInput(f"{name} must be numeric")
    if not np.iscomplexobj(A):
        A = A.astype(float)
    if A.size == 0 and not allow_empty:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(A))[0])
        raise InvalidInput(f"{name} has a non-finite entry at {bad}")
    return A


def _svd_cut(M: np.ndarray, tol: Tolerances):
    U, s, Vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > tol.rank_rel * smax)) if smax > 0 else 0
    return U, s, Vh, r


def numerical_rank(M, tol: Tolerances = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol.rank_rel`` times the largest."""
    A = as_matrix(M)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol.rank_rel * s[0]))


def kernel_basis(M, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``M``.

    Returns an array of shape ``(cols(M), cols(M) - rank)``; the column
    count is zero when the kernel is trivial.
    """
    A = as_matrix(M)
    _, _, Vh, r = _svd_cut(A, tol)
    return Vh[r:].conj().T


def range_basis(M, tol: Tolerances = DEFAULT_TOL, return_svd: bool = False):
    """Orthonormal basis of the numerical column space of ``M``.

    With ``return_svd`` the truncated singular values and right singular
    vectors are returned as well, so callers can map coefficients back.
    """
    A = as_matrix(M, allow_empty=True)
    if A.size == 0:
        Q = np.zeros((A.shape[0], 0), dtype=A.dtype)
        if return_svd:
            return Q, np.zeros(0), np.zeros((A.shape[1], 0), dtype=A.dtype)
        return Q
    U, s, Vh, r = _svd_cut(A, tol)
    if return_svd:
        return U[:, :r], s[:r], Vh[:r].conj().T
    return U[:, :r]


def principal_angles(U1, U2) -> np.ndarray:
    """Principal angles between the column spaces of two orthonormal bases.

    Angles are returned in nondecreasing order (nonincreasing cosines) and
    lie in ``[0, pi/2]``. Small angles are computed from sines so that
    angles below ~1e-8 are resolved accurately.
    """
    Q1 = as_matrix(U1, "U1", allow_empty=True)
    Q2 = as_matrix(U2, "U2", allow_empty=True)
    if Q1.shape[0] != Q2.shape[0]:
        raise InvalidInput(f"row dimensions differ: {Q1.shape[0]} vs {Q2.shape[0]}")
    k = min(Q1.shape[1], Q2.shape[1])
    if k == 0:
        return np.zeros(0)
    if Q1.shape[1] < Q2.shape[1]:
        Q1, Q2 = Q2, Q1
    C = Q1.conj().T @ Q2
    cos = np.linalg.svd(C, compute_uv=False)[:k]
    theta = np.arccos(np.clip(cos, -1.0, 1.0))
    # sine route: singular values of (I - Q1 Q1^H) Q2
    R = Q2 - Q1 @ C
    sin = np.sort(np.linalg.svd(R, compute_uv=False))[:k]
    small = cos ** 2 > 0.5
    theta[small] = np.arcsin(np.clip(sin[small], 0.0, 1.0))
    return np.sort(theta)


def subspaces_equal(U1, U2, tol: Tolerances = DEFAULT_TOL) -> bool:
    Q1, Q2 = np.atleast_2d(U1), np.atleast_2d(U2)
    if Q1.shape[1] != Q2.shape[1]:
        return False
    angles = principal_angles(Q1, Q2)
    return bool(angles.size == 0 or angles.max() <= tol.subspace_angle)


def spectrum(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and unit-norm right eigenvectors (as columns) of ``M``."""
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise InvalidInput(f"spectrum needs a square matrix, got {A.shape}")
    w, V = np.linalg.eig(A)
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    return w, V


@dataclass(frozen=True)
class ShiftStack:
    """Stack ``[I; lam I; lam^2 I; ...; lam^T I]`` of shape ``n(T+1) x n``."""

    lam: complex
    n: int
    T: int
    lambda_block: np.ndarray

    def first_rows(self) -> np.ndarray:
        """Blocks 0..T-1 (the first ``nT`` rows)."""
        return self.lambda_block[: self.n * self.T]

    def last_rows(self) -> np.ndarray:
        """Blocks 1..T (the last ``nT`` rows)."""
        return self.lambda_block[self.n:]


def build_shift_stack(lam: complex, n: int, T: int) -> ShiftStack:
    if n < 1 or T < 1:
        raise InvalidInput(f"need n >= 1 and T >= 1, got n={n}, T={T}")
    lam = canonical_scalar(lam)
    powers = np.array([lam ** t for t in range(T + 1)])
    block = np.kron(powers.reshape(-1, 1), np.eye(n))
    return ShiftStack(lam=lam, n=n, T=T, lambda_block=block)


def canonical_scalar(lam) -> complex | float:
    """Return ``lam`` as a float when its imaginary part is exactly zero."""
    lam = complex(lam)
    if not np.isfinite(lam.real) or not np.isfinite(lam.imag):
        raise InvalidInput(f"non-finite eigenvalue {lam}")
    return lam.real if lam.imag == 0 else lam


def conjugate_partners(values, atol: float = 1e-10) -> list[int]:
    """Index of the conjugate partner of each entry (itself for real ones).

    Entries with ``|imag| <= atol`` are treated as real. Raises
    :class:`SpectrumNotConjugateClosed` when a non-real entry has no
    unmatched partner.
    """
    vals = np.asarray([complex(v) for v in values])
    partner = [-1] * len(vals)
    for i, v in enumerate(vals):
        if abs(v.imag) <= atol:
            partner[i] = i
    for i, v in enumerate(vals):
        if partner[i] >= 0:
            continue
        best = None
        for j in range(len(vals)):
            if j == i or partner[j] >= 0:
                continue
            if abs(vals[j] - np.conj(v)) <= atol * max(1.0, abs(v)):
                best = j
                break
        if best is None:
            raise SpectrumNotConjugateClosed(f"eigenvalue {v} has no conjugate partner")
        partner[i], partner[best] = best, i
    return partner


def clean_spectrum(values, atol: float = 1e-10) -> list:
    """Validate conjugate closure and make conjugate pairs exact."""
    vals = [canonical_scalar(v) for v in values]
    partner = conjugate_partners(vals, atol)
    out = list(vals)
    for i, j in enumerate(partner):
        if i == j:
            out[i] = float(complex(vals[i]).real)
        elif complex(vals[i]).imag > 0:
            out[j] = complex(vals[i]).conjugate()
    return out


def match_spectra(achieved, target) -> tuple[np.ndarray, np.ndarray]:
    """Pair achieved with target eigenvalues minimizing the total distance.

    Returns ``(errors, order)`` where ``errors[k] = |achieved[order[k]] -
    target[k]|``.
    """
    a = np.asarray(achieved, dtype=complex).ravel()
    t = np.asarray(target, dtype=complex).ravel()
    if a.size != t.size:
        raise InvalidInput(f"spectra have different sizes: {a.size} vs {t.size}")
    cost = np.abs(t[:, None] - a[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.empty(t.size, dtype=int)
    order[rows] = cols
    return cost[np.arange(t.size), order], order
