"""Allowable eigenvector subspaces.

For a desired closed-loop eigenvalue ``lam`` the vector ``v`` can be a
closed-loop eigenvector only if some input sequence keeps the state on the
ray ``x(t) = lam^t v``. In data coordinates this is the kernel of::

    [X KU - W Lam X0 KU,  X K0]

where ``W Lam`` stacks ``lam I, ..., lam^T I``. The allowable subspace is
the image of the alpha-part of that kernel under ``X0 KU``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, KernelPair, PlantModel
from .errors import EmptySubspace
from .numkit import (DEFAULT_TOL, Tolerances, build_shift_stack, canonical_scalar,
                     clean_spectrum, conjugate_partners, kernel_basis, range_basis)


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of the allowable subspace for ``lam``.

    ``kernel_coeffs`` maps basis coordinates ``gamma`` to kernel vectors
    ``w = [alpha; beta]`` such that ``X0 KU alpha = basis @ gamma``;
    its first ``n_alpha`` rows are the alpha part. ``kernel`` is the raw
    orthonormal kernel basis it was derived from (``None`` for the
    model-based oracle).
    """

    lam: complex
    basis: np.ndarray
    kernel_coeffs: np.ndarray | None = None
    kernel: np.ndarray | None = None
    n_alpha: int = 0

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def alpha_coeffs(self) -> np.ndarray:
        return self.kernel_coeffs[: self.n_alpha]

    @property
    def beta_coeffs(self) -> np.ndarray:
        return self.kernel_coeffs[self.n_alpha:]

    def conj(self) -> "SubspaceBasis":
        c = lambda M: None if M is None else M.conj()
        return replace(self, lam=np.conj(self.lam), basis=self.basis.conj(),
                       kernel_coeffs=c(self.kernel_coeffs), kernel=c(self.kernel))


def eigenmotion_matrix(ds: Dataset, kp: KernelPair, lam) -> np.ndarray:
    """``[X KU - W Lam X0 KU, X K0]``: its kernel holds the data
    coefficients of trajectories with ``x(t) = lam^t x(0)``."""
    stack = build_shift_stack(lam, ds.n, ds.T)
    F = ds.X0 @ kp.KU
    return np.hstack([ds.X @ kp.KU - stack.last_rows() @ F, ds.X @ kp.K0])


def allowable_subspace(ds: Dataset, kp: KernelPair, lam,
                       tol: Tolerances = DEFAULT_TOL) -> SubspaceBasis:
    lam = canonical_scalar(lam)
    n_alpha = kp.KU.shape[1]
    kernel = kernel_basis(eigenmotion_matrix(ds, kp, lam), tol)
    gen = ds.X0 @ kp.KU @ kernel[:n_alpha]
    # SVD drops generators that map to the zero vector (non-unique alpha/beta)
    basis, s, V = range_basis(gen, tol, return_svd=True)
    if basis.shape[1] == 0:
        raise EmptySubspace(f"allowable subspace for lambda={lam} is empty")
    coeffs = kernel @ V / s
    return SubspaceBasis(lam=lam, basis=basis, kernel_coeffs=coeffs, kernel=kernel,
                         n_alpha=n_alpha)


def model_subspace_oracle(model: PlantModel, lam, tol: Tolerances = DEFAULT_TOL) -> SubspaceBasis:
    """Model-based reference: state part of ker([A - lam I, -B])."""
    lam = canonical_scalar(lam)
    n = model.n
    M = np.hstack([model.A - lam * np.eye(n), -model.B])
    N = kernel_basis(M, tol)
    basis = range_basis(N[:n], tol)
    if basis.shape[1] == 0:
        raise EmptySubspace(f"model subspace for lambda={lam} is empty")
    return SubspaceBasis(lam=lam, basis=basis)


def subspaces_for_spectrum(ds: Dataset, kp: KernelPair, spectrum,
                           tol: Tolerances = DEFAULT_TOL) -> list[SubspaceBasis]:
    """One basis per eigenvalue; conjugate partners get conjugated bases."""
    vals = clean_spectrum(spectrum)
    partner = conjugate_partners(vals)
    out: list[SubspaceBasis | None] = [None] * len(vals)
    for i, lam in enumerate(vals):
        if out[i] is not None:
            continue
        sb = allowable_subspace(ds, kp, lam, tol)
        out[i] = sb
        j = partner[i]
        if j != i:
            out[j] = sb.conj()
    return out
