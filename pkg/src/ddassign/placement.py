"""Membership test for the set of pole-placing gains.

A gain ``K`` places ``lam`` exactly when some unit eigen-motion with
``x(t) = lam^t v`` (a kernel vector ``w`` of the eigen-motion matrix) is
driven by the static law ``u(t) = -K x(t)``, i.e.::

    [(I_T kron K) Z Lam X0 KU,  U K0] w = 0

The check is made per eigenvalue on the de-duplicated kernel generators,
so ``w`` is parameterized by unit eigenvector coordinates ``gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, KernelPair
from .errors import InvalidInput
from .numkit import DEFAULT_TOL, Tolerances, as_matrix, build_shift_stack
from .subspace import SubspaceBasis, subspaces_for_spectrum


def apply_blockdiag(K: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``(I_T kron K) @ M`` without forming the Kronecker product."""
    m, n = K.shape
    T = M.shape[0] // n
    slabs = M.reshape(T, n, M.shape[1])
    return np.einsum("ij,tjd->tid", K, slabs).reshape(T * m, M.shape[1])


@dataclass(frozen=True)
class PlacementConstraint:
    """Data blocks of the feedback-compatibility condition for one eigenvalue.

    ``ZLX`` is ``Z Lam X0 KU`` (nT x cols(KU)); ``right_block`` is ``U K0``.
    ``G`` and ``H`` are the same blocks composed with the kernel generators,
    so the constraint on unit coordinates ``gamma`` reads
    ``(I kron K) G gamma + H gamma = 0``.
    """

    lam: complex
    n: int
    m: int
    T: int
    ZLX: np.ndarray
    right_block: np.ndarray
    eig6_kernel: np.ndarray
    subspace: SubspaceBasis
    G: np.ndarray
    H: np.ndarray

    def left_block(self, K) -> np.ndarray:
        return apply_blockdiag(np.asarray(K), self.ZLX)

    def composite(self, K) -> np.ndarray:
        """``[(I kron K) Z Lam X0 KU, U K0]`` restricted to the generators (mT x d)."""
        return apply_blockdiag(np.asarray(K), self.G) + self.H

    def block_norm(self, K) -> float:
        """Scale of the composite block; the K factor is floored at 1 so the
        threshold cannot collapse when ``H`` vanishes (open-loop modes at K = 0)."""
        k = max(1.0, float(np.linalg.norm(K, 2)))
        return float(k * np.linalg.norm(self.G, 2) + np.linalg.norm(self.H, 2))


def build_constraint(ds: Dataset, kp: KernelPair, sb: SubspaceBasis) -> PlacementConstraint:
    stack = build_shift_stack(sb.lam, ds.n, ds.T)
    ZLX = stack.first_rows() @ (ds.X0 @ kp.KU)
    UK0 = ds.U @ kp.K0
    return PlacementConstraint(
        lam=sb.lam, n=ds.n, m=ds.m, T=ds.T, ZLX=ZLX, right_block=UK0,
        eig6_kernel=sb.kernel, subspace=sb,
        G=ZLX @ sb.alpha_coeffs, H=UK0 @ sb.beta_coeffs,
    )


def build_constraints(ds: Dataset, kp: KernelPair, spectrum_,
                      tol: Tolerances = DEFAULT_TOL,
                      subspaces: list[SubspaceBasis] | None = None) -> list[PlacementConstraint]:
    if subspaces is None:
        subspaces = subspaces_for_spectrum(ds, kp, spectrum_, tol)
    return [build_constraint(ds, kp, sb) for sb in subspaces]


@dataclass(frozen=True)
class LambdaResidual:
    lam: complex
    residual: float
    threshold: float
    gamma: np.ndarray
    witness_w: np.ndarray
    eigvec: np.ndarray


@dataclass(frozen=True)
class Membership:
    in_set: bool
    per_lambda: list[LambdaResidual]

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.per_lambda)


def membership_residual(K, constraints: list[PlacementConstraint],
                        tol: Tolerances = DEFAULT_TOL) -> Membership:
    """Smallest singular value of each composite block and its witness."""
    K = as_matrix(K, "K")
    per = []
    for c in constraints:
        if K.shape != (c.m, c.n):
            raise InvalidInput(f"K must be {c.m}x{c.n}, got {K.shape}")
        C = c.composite(K)
        _, s, Vh = np.linalg.svd(C, full_matrices=True)
        # d may exceed mT only in degenerate cases; then sigma_min is 0
        smin = float(s[-1]) if C.shape[1] <= C.shape[0] else 0.0
        gamma = Vh[-1].conj()
        thr = tol.membership_rel * max(c.block_norm(K), np.finfo(float).tiny)
        per.append(LambdaResidual(
            lam=c.lam, residual=smin, threshold=thr, gamma=gamma,
            witness_w=c.subspace.kernel_coeffs @ gamma, eigvec=c.subspace.basis @ gamma,
        ))
    return Membership(in_set=all(r.residual <= r.threshold for r in per), per_lambda=per)
