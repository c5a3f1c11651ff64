"""Multi-experiment open-loop datasets.

N experiments of length T are recorded as three matrices::

    X0 = [x^1(0) ... x^N(0)]                           (n  x N)
    X  = [vec(x^i(1), ..., x^i(T))]_i                   (nT x N)
    U  = [vec(u^i(0), ..., u^i(T-1))]_i                 (mT x N)

Any trajectory of the plant is a combination of the recorded ones. With
``KU`` a basis of ker(U) and ``K0`` a basis of ker(X0), the free response
from ``x0`` is ``X KU alpha`` with ``X0 KU alpha = x0`` and the forced
response to ``u`` is ``X K0 beta`` with ``U K0 beta = u``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (ExcitationFailure, InsufficientExperiments, InvalidInput,
                     NotPersistent, ParseError, ReconstructionFailure)
from .jsonio import encode_matrix, parse_matrix, read_json, write_json
from .numkit import DEFAULT_TOL, Tolerances, as_matrix, kernel_basis, numerical_rank


@dataclass(frozen=True)
class PlantModel:
    """Ground-truth plant ``x(t+1) = A x(t) + B u(t)``; used only for
    simulation and verification, never by the data-driven routines."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise InvalidInput(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InvalidInput(f"B must have {A.shape[0]} rows, got {B.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def controllability_matrix(self) -> np.ndarray:
        blocks = [self.B]
        for _ in range(self.n - 1):
            blocks.append(self.A @ blocks[-1])
        return np.hstack(blocks)

    def is_controllable(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return numerical_rank(self.controllability_matrix(), tol) == self.n

    def rollout(self, x0, u_seq) -> np.ndarray:
        """States x(1..T) stacked into one vector of length nT."""
        u = np.asarray(u_seq, dtype=float).reshape(-1, self.m)
        x = np.asarray(x0, dtype=float).ravel()
        out = []
        for ut in u:
            x = self.A @ x + self.B @ ut
            out.append(x)
        return np.concatenate(out)

    @classmethod
    def from_json(cls, path) -> "PlantModel":
        doc = read_json(path)
        if not isinstance(doc, dict):
            raise ParseError("model file must be a JSON object")
        for key in ("A", "B"):
            if key not in doc:
                raise ParseError(f"model file is missing field {key!r}", field=key)
        A = parse_matrix(doc["A"], "A")
        if A.shape[0] != A.shape[1]:
            raise ParseError(f"field 'A' must be square, got {A.shape}", field="A")
        B = parse_matrix(doc["B"], "B")
        if B.shape[0] != A.shape[0]:
            raise ParseError(f"field 'B' must have {A.shape[0]} rows, got {B.shape[0]}", field="B")
        return cls(A, B)

    def to_json(self, path) -> None:
        write_json(path, {"A": encode_matrix(self.A), "B": encode_matrix(self.B)})


@dataclass(frozen=True)
class Dataset:
    n: int
    m: int
    T: int
    N: int
    X0: np.ndarray
    X: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        X0 = as_matrix(self.X0, "X0").copy()
        X = as_matrix(self.X, "X").copy()
        U = as_matrix(self.U, "U").copy()
        n, m, T, N = self.n, self.m, self.T, self.N
        if min(n, m, T, N) < 1:
            raise InvalidInput(f"dimensions must be positive: n={n}, m={m}, T={T}, N={N}")
        for name, M, rows in (("X0", X0, n), ("X", X, n * T), ("U", U, m * T)):
            if M.shape != (rows, N):
                raise InvalidInput(f"{name} has shape {M.shape}, expected {(rows, N)}")
            if np.iscomplexobj(M):
                raise InvalidInput(f"{name} must be real")
        for name, M in (("X0", X0), ("X", X), ("U", U)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @classmethod
    def from_arrays(cls, X0, X, U, T: int) -> "Dataset":
        X0, X, U = (np.asarray(M, dtype=float) for M in (X0, X, U))
        n, N = X0.shape
        return cls(n=n, m=U.shape[0] // T, T=T, N=N, X0=X0, X=X, U=U)

    def state(self, t: int) -> np.ndarray:
        """``n x N`` matrix of the states x(t) across experiments, t = 0..T."""
        if t == 0:
            return self.X0
        return self.X[self.n * (t - 1): self.n * t]

    def input(self, t: int) -> np.ndarray:
        """``m x N`` matrix of the inputs u(t), t = 0..T-1."""
        return self.U[self.m * t: self.m * (t + 1)]

    def select(self, columns) -> "Dataset":
        cols = np.asarray(columns, dtype=int)
        return Dataset(self.n, self.m, self.T, len(cols),
                       self.X0[:, cols], self.X[:, cols], self.U[:, cols])


@dataclass(frozen=True)
class PersistencyReport:
    satisfied: bool
    rank: int
    required: int


@dataclass(frozen=True)
class KernelPair:
    """Orthonormal bases of ker(U) and ker(X0)."""

    KU: np.ndarray
    K0: np.ndarray


@dataclass(frozen=True)
class CoeffPair:
    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class Reconstruction:
    x_traj: np.ndarray
    coeff: CoeffPair


_EXCITATIONS = ("normal", "uniform", "binary")


def _draw(rng: np.random.Generator, kind: str, shape) -> np.ndarray:
    if kind == "normal":
        return rng.standard_normal(shape)
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, shape)
    if kind == "binary":
        return rng.choice([-1.0, 1.0], size=shape)
    raise InvalidInput(f"unknown excitation {kind!r}; choose from {_EXCITATIONS}")


def simulate_experiments(model: PlantModel, T: int, N: int | None = None, seed: int = 0,
                         excitation: str = "normal", tol: Tolerances = DEFAULT_TOL,
                         max_attempts: int = 10) -> Dataset:
    """Run N open-loop experiments of length T with random x(0) and u(t).

    ``N`` defaults to the minimum ``mT + n``. Draws are repeated (up to
    ``max_attempts`` times) until the data is persistently exciting.
    """
    n, m = model.n, model.m
    if T < 1:
        raise InvalidInput(f"T must be >= 1, got {T}")
    if N is None:
        N = m * T + n
    if N < m * T + n:
        raise InsufficientExperiments(
            f"N={N} experiments cannot satisfy rank [X0; U] = mT + n = {m * T + n}")
    if excitation not in _EXCITATIONS:
        raise InvalidInput(f"unknown excitation {excitation!r}; choose from {_EXCITATIONS}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        X0 = _draw(rng, excitation, (n, N))
        U = _draw(rng, excitation, (m * T, N))
        X = np.empty((n * T, N))
        x = X0
        for t in range(T):
            x = model.A @ x + model.B @ U[m * t: m * (t + 1)]
            X[n * t: n * (t + 1)] = x
        ds = Dataset(n, m, T, N, X0, X, U)
        if check_persistency(ds, tol).satisfied:
            return ds
    raise ExcitationFailure(f"data not persistently exciting after {max_attempts} attempts")


def check_persistency(ds: Dataset, tol: Tolerances = DEFAULT_TOL) -> PersistencyReport:
    required = ds.m * ds.T + ds.n
    rank = numerical_rank(np.vstack([ds.X0, ds.U]), tol)
    return PersistencyReport(rank == required, rank, required)


def kernel_pair(ds: Dataset, tol: Tolerances = DEFAULT_TOL) -> KernelPair:
    rep = check_persistency(ds, tol)
    if not rep.satisfied:
        raise NotPersistent(f"rank [X0; U] = {rep.rank}, need {rep.required}")
    KU = kernel_basis(ds.U, tol)
    K0 = kernel_basis(ds.X0, tol)
    for M in (KU, K0):
        M.setflags(write=False)
    return KernelPair(KU=KU, K0=K0)


def reconstruct_trajectory(ds: Dataset, kp: KernelPair, x0, u_seq,
                           rtol: float = 1e-8) -> Reconstruction:
    """Express the response to ``(x0, u_seq)`` through the recorded data.

    The mixing coefficients are the minimum-norm least-squares solutions of
    ``X0 KU alpha = x0`` and ``U K0 beta = u``.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    u = np.asarray(u_seq, dtype=float).ravel()
    if x0.size != ds.n:
        raise InvalidInput(f"x0 must have {ds.n} entries, got {x0.size}")
    if u.size != ds.m * ds.T:
        raise InvalidInput(f"u_seq must have {ds.m * ds.T} entries, got {u.size}")
    F = ds.X0 @ kp.KU
    G = ds.U @ kp.K0
    alpha = np.linalg.lstsq(F, x0, rcond=None)[0]
    beta = np.linalg.lstsq(G, u, rcond=None)[0]
    for name, M, c, rhs in (("x0", F, alpha, x0), ("u", G, beta, u)):
        res = np.linalg.norm(M @ c - rhs)
        if res > rtol * max(1.0, np.linalg.norm(rhs)):
            raise ReconstructionFailure(f"cannot reproduce {name}: residual {res:.3e}",
                                        residual=res)
    x_traj = ds.X @ kp.KU @ alpha + ds.X @ kp.K0 @ beta
    return Reconstruction(x_traj, CoeffPair(alpha, beta))


def restrict_to_T1(ds: Dataset, tol: Tolerances = DEFAULT_TOL) -> Dataset:
    """Keep only the first step of every experiment."""
    if ds.T == 1:
        return ds
    out = Dataset(ds.n, ds.m, 1, ds.N, ds.X0, ds.X[: ds.n], ds.U[: ds.m])
    rep = check_persistency(out, tol)
    if not rep.satisfied:
        raise NotPersistent(f"T=1 restriction has rank {rep.rank}, need {rep.required}")
    return out


def dataset_to_dict(ds: Dataset) -> dict:
    return {"n": ds.n, "m": ds.m, "T": ds.T, "N": ds.N,
            "X0": encode_matrix(ds.X0), "X": encode_matrix(ds.X), "U": encode_matrix(ds.U)}


def dataset_from_dict(doc) -> Dataset:
    if not isinstance(doc, dict):
        raise ParseError("dataset file must be a JSON object")
    dims = {}
    for key in ("n", "m", "T", "N"):
        if key not in doc:
            raise ParseError(f"dataset is missing field {key!r}", field=key)
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParseError(f"field {key!r} must be a positive integer, got {v!r}", field=key)
        dims[key] = v
    n, m, T, N = dims["n"], dims["m"], dims["T"], dims["N"]
    mats = {}
    for key, rows in (("X0", n), ("X", n * T), ("U", m * T)):
        if key not in doc:
            raise ParseError(f"dataset is missing field {key!r}", field=key)
        mats[key] = parse_matrix(doc[key], key, shape=(rows, N))
    return Dataset(n, m, T, N, mats["X0"], mats["X"], mats["U"])


def save_dataset(ds: Dataset, path) -> None:
    write_json(path, dataset_to_dict(ds))


def load_dataset(path) -> Dataset:
    return dataset_from_dict(read_json(path))


def export_csv(ds: Dataset, directory) -> list[Path]:
    """Write X0.csv, X.csv and U.csv (one matrix per file) into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in ("X0", "X", "U"):
        p = d / f"{name}.csv"
        with p.open("w", newline="") as fh:
            csv.writer(fh).writerows((repr(float(v)) for v in row) for row in getattr(ds, name))
        paths.append(p)
    return paths
