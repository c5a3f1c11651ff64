"""Closed-form eigenstructure assignment from T = 1 data.

For each target pair ``(lam_i, v_i)`` with ``v_i`` allowable, pick the
kernel vector ``[alpha_i; beta_i]`` whose free response starts at ``v_i``.
The unique gain is then::

    K = -U K0 [beta_1 ... beta_n] (X0 KU [alpha_1 ... alpha_n])^-1
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, KernelPair, PlantModel, kernel_pair, restrict_to_T1
from .errors import (ConjugacyViolation, DDAssignError, EigvecsDependent,
                     IllConditionedAssignment, InvalidInput, InvalidSpec, TargetNotAllowable)
from .jsonio import encode_complex_list, encode_matrix
from .numkit import (DEFAULT_TOL, Tolerances, as_matrix, clean_spectrum, conjugate_partners,
                     numerical_rank, spectrum)
from .subspace import SubspaceBasis, subspaces_for_spectrum

MAX_COND = 1e12
IMAG_TOL = 1e-8


@dataclass(frozen=True)
class AssignmentSpec:
    """Desired closed-loop spectrum and, optionally, eigenvectors (columns)."""

    spectrum: tuple
    eigvecs: np.ndarray | None = None

    def __post_init__(self):
        try:
            vals = tuple(clean_spectrum(self.spectrum))
        except DDAssignError as exc:
            raise type(exc)(str(exc), stage="spec") from exc
        if not vals:
            raise InvalidSpec("empty spectrum")
        object.__setattr__(self, "spectrum", vals)
        if self.eigvecs is None:
            return
        V = as_matrix(self.eigvecs, "eigvecs").astype(complex)
        n = len(vals)
        if V.shape != (n, n):
            raise InvalidSpec(f"eigvecs must be {n}x{n}, got {V.shape}")
        partner = conjugate_partners(vals)
        for i, j in enumerate(partner):
            if j == i:
                if np.abs(V[:, i].imag).max() > IMAG_TOL * max(1.0, np.abs(V[:, i]).max()):
                    raise InvalidSpec(f"eigenvector {i} of real eigenvalue is not real")
                V[:, i] = V[:, i].real
            elif complex(vals[i]).imag > 0:
                if np.abs(V[:, j] - V[:, i].conj()).max() > IMAG_TOL * max(1.0, np.abs(V[:, i]).max()):
                    raise InvalidSpec(f"eigenvectors {i} and {j} are not complex conjugates")
                V[:, j] = V[:, i].conj()
        if numerical_rank(V) < n:
            raise EigvecsDependent("target eigenvectors are linearly dependent")
        if np.all(V.imag == 0):
            V = V.real
        V.setflags(write=False)
        object.__setattr__(self, "eigvecs", V)

    @property
    def n(self) -> int:
        return len(self.spectrum)


@dataclass(frozen=True)
class GammaSolve:
    gamma: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


@dataclass
class FeedbackGain:
    K: np.ndarray
    spectrum: tuple
    eigvecs: np.ndarray | None = None
    achieved_spectrum: np.ndarray | None = None
    eigvec_residuals: np.ndarray | None = None
    max_imag_discarded: float = 0.0
    condition: float | None = None
    extra: dict = field(default_factory=dict)

    def attach_model(self, model: PlantModel) -> "FeedbackGain":
        """Fill the verification fields from a ground-truth model."""
        Acl = model.A - model.B @ self.K
        self.achieved_spectrum = spectrum(Acl)[0]
        if self.eigvecs is not None:
            lam = np.asarray(self.spectrum, dtype=complex)
            self.eigvec_residuals = np.linalg.norm(Acl @ self.eigvecs - self.eigvecs * lam, axis=0)
        return self

    def to_dict(self) -> dict:
        out = {
            "K": encode_matrix(self.K),
            "spectrum": encode_complex_list(self.spectrum),
            "max_imag_discarded": self.max_imag_discarded,
        }
        if self.eigvecs is not None:
            out["eigvecs"] = encode_matrix(self.eigvecs)
        if self.condition is not None:
            out["condition"] = self.condition
        if self.achieved_spectrum is not None:
            out["achieved_spectrum"] = encode_complex_list(self.achieved_spectrum)
        if self.eigvec_residuals is not None:
            out["eigvec_residuals"] = [float(r) for r in self.eigvec_residuals]
        return out


def project_to_allowable(sb: SubspaceBasis, target) -> np.ndarray:
    """Orthogonal projection of ``target`` onto the allowable subspace."""
    v = np.asarray(target).ravel()
    return sb.basis @ (sb.basis.conj().T @ v)


def solve_gamma(sb: SubspaceBasis, target, tol: Tolerances = DEFAULT_TOL) -> GammaSolve:
    v = np.asarray(target).ravel()
    if v.size != sb.basis.shape[0]:
        raise InvalidInput(f"target has {v.size} entries, expected {sb.basis.shape[0]}")
    gamma = sb.basis.conj().T @ v
    proj = sb.basis @ gamma
    resid = float(np.linalg.norm(v - proj))
    norm = float(np.linalg.norm(v))
    if norm == 0 or np.arcsin(min(1.0, resid / norm)) > tol.subspace_angle:
        raise TargetNotAllowable(
            f"target is outside the allowable subspace for lambda={sb.lam} "
            f"(residual {resid:.3e})", residual=resid, projection=proj)
    if np.isrealobj(sb.basis) and np.isrealobj(v):
        gamma = gamma.real
    coeffs = sb.kernel_coeffs @ gamma
    return GammaSolve(gamma=gamma, alpha=coeffs[: sb.n_alpha], beta=coeffs[sb.n_alpha:])


def _realify(M: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    if not np.iscomplexobj(M):
        return M, 0.0
    imag = float(np.abs(M.imag).max())
    if imag > IMAG_TOL * max(1.0, float(np.abs(M.real).max())):
        raise ConjugacyViolation(f"{what} has imaginary residue {imag:.3e}", imag=imag)
    return M.real.copy(), imag


def closed_form_gain(ds1: Dataset, kp: KernelPair, spec: AssignmentSpec,
                     tol: Tolerances = DEFAULT_TOL,
                     subspaces: list[SubspaceBasis] | None = None) -> FeedbackGain:
    """Unique gain assigning ``spec.spectrum`` with eigenvectors ``spec.eigvecs``."""
    if ds1.T != 1:
        raise InvalidInput(f"closed-form assignment needs T = 1 data, got T = {ds1.T}")
    if spec.eigvecs is None:
        raise InvalidSpec("closed-form assignment needs target eigenvectors")
    if spec.n != ds1.n:
        raise InvalidSpec(f"spectrum has {spec.n} values, state dimension is {ds1.n}")
    if subspaces is None:
        subspaces = subspaces_for_spectrum(ds1, kp, spec.spectrum, tol)
    V = spec.eigvecs
    if numerical_rank(V, tol) < ds1.n:
        raise EigvecsDependent("target eigenvectors are linearly dependent")
    solves = [solve_gamma(sb, V[:, i], tol) for i, sb in enumerate(subspaces)]
    alphas = np.column_stack([s.alpha for s in solves])
    betas = np.column_stack([s.beta for s in solves])
    M = ds1.X0 @ kp.KU @ alphas
    R = -ds1.U @ kp.K0 @ betas
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > MAX_COND:
        raise IllConditionedAssignment(f"X0 KU [alpha] has condition number {cond:.3e}",
                                       condition=cond)
    K = np.linalg.solve(M.T, R.T).T
    K, imag = _realify(K, "gain")
    return FeedbackGain(K=K, spectrum=spec.spectrum, eigvecs=V, max_imag_discarded=imag,
                        condition=cond)


def select_eigvecs(subspaces: list[SubspaceBasis], spectrum_, tol: Tolerances = DEFAULT_TOL,
                   seed: int = 0, max_attempts: int = 50) -> np.ndarray:
    """Pick one allowable eigenvector per eigenvalue with ``Rank(V) = n``.

    First basis columns are tried first, then random in-subspace
    combinations. Conjugate eigenvalues receive conjugate vectors.
    """
    vals = list(spectrum_)
    partner = conjugate_partners(vals)
    n = len(vals)
    rng = np.random.default_rng(seed)

    def assemble(pick):
        V = np.zeros((n, n), dtype=complex)
        for i, sb in enumerate(subspaces):
            j = partner[i]
            if j != i and complex(vals[i]).imag < 0:
                continue
            v = pick(sb)
            V[:, i] = v / np.linalg.norm(v)
            if j != i:
                V[:, j] = V[:, i].conj()
        return V

    V = None
    for attempt in range(max_attempts + 1):
        if attempt == 0:
            V = assemble(lambda sb: sb.basis[:, 0])
        else:
            def pick(sb):
                g = rng.standard_normal(sb.dim)
                if np.iscomplexobj(sb.basis):
                    g = g + 1j * rng.standard_normal(sb.dim)
                return sb.basis @ g
            V = assemble(pick)
        if numerical_rank(V, tol) == n and np.linalg.cond(V) < 1e8:
            return V.real.copy() if np.all(V.imag == 0) else V
    raise EigvecsDependent("could not select linearly independent allowable eigenvectors")


def assign(ds: Dataset, spec: AssignmentSpec, tol: Tolerances = DEFAULT_TOL,
           model: PlantModel | None = None, seed: int = 0) -> FeedbackGain:
    """Data-driven assignment pipeline.

    Without target eigenvectors an allowable set is chosen automatically,
    which turns this into plain pole placement. ``model`` is only used to
    fill the verification fields of the result.
    """
    if spec.n != ds.n:
        raise InvalidSpec(f"spectrum has {spec.n} values, state dimension is {ds.n}",
                          stage="spec")
    stages = []

    def run(stage, fn, *args, **kwargs):
        stages.append(stage)
        try:
            return fn(*args, **kwargs)
        except DDAssignError as exc:
            if exc.stage is None:
                exc.stage = stage
            raise

    ds1 = run("restrict", restrict_to_T1, ds, tol)
    kp = run("kernel_pair", kernel_pair, ds1, tol)
    subspaces = run("subspaces", subspaces_for_spectrum, ds1, kp, spec.spectrum, tol)
    if spec.eigvecs is None:
        V = run("select_eigvecs", select_eigvecs, subspaces, spec.spectrum, tol, seed)
        spec = AssignmentSpec(spec.spectrum, V)
    gain = run("closed_form", closed_form_gain, ds1, kp, spec, tol, subspaces)
    if model is not None:
        gain.attach_model(model)
    return gain
