"""Model-based ground truth for validating the data-driven routines.

Nothing here is used by the data-driven pipeline itself; the CLI
``verify`` command and the tests read a model explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import PlantModel
from .errors import EigvecsDependent, InvalidInput
from .numkit import DEFAULT_TOL, Tolerances, as_matrix, match_spectra, numerical_rank, spectrum


@dataclass(frozen=True)
class Fixture:
    name: str
    model: PlantModel


def batch_reactor() -> Fixture:
    """Discretized batch reactor (sampling time 0.1 s), open-loop unstable."""
    A = np.array([
        [1.178, 0.001, 0.511, -0.403],
        [-0.051, 0.661, -0.011, 0.061],
        [0.076, 0.335, 0.560, 0.382],
        [0.0, 0.335, 0.089, 0.849],
    ])
    B = np.array([
        [0.004, -0.087],
        [0.467, 0.001],
        [0.213, -0.235],
        [0.213, -0.016],
    ])
    return Fixture("batch_reactor", PlantModel(A, B))


BATCH_REACTOR_SPECTRUM = (1.2200, 1.0049, 0.4206, 0.6025)

# Published gains for the batch reactor with target spectrum {-0.3, 0.2, 0.5, 0.7}.
BATCH_REACTOR_TARGET = (-0.3, 0.2, 0.5, 0.7)
STRUCTURED_GAIN = np.array([
    [0.0000, 2.7633, 2.7324, 0.4122],
    [-2.3621, 1.2654, -0.0000, 1.1906],
])
STRUCTURED_EIGVECS = np.array([
    [0.0475, -0.1938, -0.2007, -0.5204],
    [0.9606, -0.8211, -0.6873, 0.3220],
    [-0.2581, 0.5266, 0.5699, -0.2354],
    [0.0914, 0.1046, 0.4032, -0.7550],
])
MAX_SPARSE_GAIN = np.array([
    [0.0000, 1.6901, 0.0000, 4.4741],
    [-1.9515, 0.0000, -1.0042, 0.0000],
])
# columns ordered as (0.7, 0.5, 0.2, -0.3)
MAX_SPARSE_EIGVEC_ORDER = (0.7, 0.5, 0.2, -0.3)
MAX_SPARSE_EIGVECS = np.array([
    [0.7460, 0.5153, 0.0752, -0.0053],
    [0.1892, 0.4018, 0.9439, 0.9901],
    [-0.6318, -0.7451, -0.2829, 0.1127],
    [-0.0922, -0.1332, -0.1532, 0.0834],
])


def random_plant(rng: np.random.Generator, n: int, m: int, tol: Tolerances = DEFAULT_TOL,
                 max_attempts: int = 50) -> PlantModel:
    """Random controllable plant with Rank(B) = m and spectral radius ~1."""
    for _ in range(max_attempts):
        A = rng.standard_normal((n, n)) / np.sqrt(n)
        B = rng.standard_normal((n, m))
        model = PlantModel(A, B)
        if numerical_rank(B, tol) == m and model.is_controllable(tol):
            return model
    raise RuntimeError("could not draw a controllable plant")


@dataclass
class GainSolve:
    K: np.ndarray
    residual: float


def model_gain_for_assignment(model: PlantModel, spectrum_, eigvecs,
                              tol: Tolerances = DEFAULT_TOL) -> GainSolve:
    """Least-squares solution of ``B K = A - V diag(L) V^-1``.

    The residual is ~0 exactly when every column of ``V`` is allowable for
    its eigenvalue.
    """
    V = as_matrix(eigvecs, "eigvecs")
    lam = np.asarray(spectrum_, dtype=complex).ravel()
    n = model.n
    if V.shape != (n, n) or lam.size != n:
        raise InvalidInput(f"need {n} eigenvalues and an {n}x{n} eigenvector matrix")
    if numerical_rank(V, tol) < n:
        raise EigvecsDependent("eigenvector matrix is rank deficient")
    # V diag(L) V^-1 via a solve on the transpose
    target = np.linalg.solve(V.T, (V * lam).T).T
    rhs = model.A - target
    K, *_ = np.linalg.lstsq(model.B.astype(complex), rhs, rcond=None)
    resid = float(np.linalg.norm(model.B @ K - rhs))
    return GainSolve(K=np.real(K), residual=resid)


@dataclass
class ClosedLoopReport:
    achieved: np.ndarray
    eig_errors: np.ndarray
    eigvec_residuals: np.ndarray | None
    stable: bool
    order: np.ndarray = field(repr=False, default=None)

    @property
    def max_eig_error(self) -> float:
        return float(self.eig_errors.max()) if self.eig_errors.size else 0.0


def verify_closed_loop(model: PlantModel, K, spectrum_, eigvecs=None) -> ClosedLoopReport:
    """Compare ``rho(A - B K)`` with the target spectrum (optimal matching)."""
    K = as_matrix(K, "K")
    if K.shape != (model.m, model.n):
        raise InvalidInput(f"K must be {model.m}x{model.n}, got {K.shape}")
    Acl = model.A - model.B @ K
    achieved, _ = spectrum(Acl)
    errors, order = match_spectra(achieved, spectrum_)
    res = None
    if eigvecs is not None:
        V = np.asarray(eigvecs)
        lam = np.asarray(spectrum_, dtype=complex)
        res = np.linalg.norm(Acl @ V - V * lam, axis=0)
    stable = bool(np.all(np.abs(achieved) < 1.0))
    return ClosedLoopReport(achieved=achieved, eig_errors=errors, eigvec_residuals=res,
                            stable=stable, order=order)
