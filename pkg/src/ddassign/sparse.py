"""Sparse pole placement by bilinear optimization.

Decision variables are the free entries of ``K`` and, per eigenvalue, the
coordinates ``gamma_i`` of a unit eigenvector in its allowable subspace
(one complex ``gamma`` per conjugate pair). Constraints::

    (I kron K) G_i gamma_i + H_i gamma_i = 0     (static feedback)
    ||gamma_i||^2 = 1                            (nontrivial eigenvector)

Objectives: ``0.5 ||K||_F^2`` with a zero pattern (structured), or the
smoothed l1 norm ``sum sqrt(K_ij^2 + eps^2)`` (max sparse).

Each restart runs a trust-region least-squares feasibility phase, an
augmented-Lagrangian outer loop around L-BFGS with
analytic gradients, then a Gauss-Newton projection onto the constraint
set. Masked entries are eliminated, so they are exactly zero.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.optimize import least_squares, minimize

from .assignment import FeedbackGain, solve_gamma
from .dataset import Dataset, KernelPair
from .errors import Infeasible, InvalidInput, ParseError, TooLarge
from .jsonio import encode_matrix, read_json
from .numkit import DEFAULT_TOL, Tolerances, clean_spectrum, conjugate_partners, numerical_rank
from .placement import PlacementConstraint, build_constraints, membership_residual

# feasibility-phase violation below which the optimization phase is attempted
FEASIBLE_START = 1e-6

FIXED_MODE_HINT = ("no restart satisfied the constraints; the pattern may leave fixed modes, "
                   "i.e. eigenvalues of A that cannot be changed using a sparse state feedback "
                   "respecting it")


@dataclass(frozen=True)
class SolverOptions:
    restarts: int = 32
    max_iters: int = 400
    max_outer: int = 40
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e10
    constraint_tol: float = 1e-7
    zero_abs: float = 1e-6
    seed: int = 0
    l1_smoothing: float = 1e-6
    init_scale: float = 1.0
    polish: bool = True
    polish_rel: float = 1e-2
    feasibility_iters: int = 200
    feasibility_only: bool = False
    stop_after: int = 0
    workers: int = 1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("seed", "polish", "feasibility_only", "stop_after"):
                continue
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise InvalidInput(f"solver option {f.name} must be positive, got {v!r}")
        if self.penalty_growth <= 1:
            raise InvalidInput("penalty_growth must exceed 1")
        if self.stop_after < 0:
            raise InvalidInput("stop_after must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverOptions":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(doc) - set(known)
        if unknown:
            raise ParseError(f"unknown solver options: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "SolverOptions":
        doc = read_json(path)
        if not isinstance(doc, dict):
            raise ParseError("options file must be a JSON object")
        return cls.from_dict(doc)


@dataclass(frozen=True)
class SparsityPattern:
    """Binary ``m x n`` mask; ones mark entries of ``K`` forced to zero."""

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S)
        if S.ndim != 2 or not np.all((S == 0) | (S == 1)):
            raise InvalidInput("sparsity pattern must be a 2-D 0/1 matrix")
        S = S.astype(int)
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @classmethod
    def parse(cls, text: str) -> "SparsityPattern":
        """Inline row syntax, e.g. ``"1000;0010"``."""
        rows = [r.strip().replace(",", "").replace(" ", "") for r in text.strip().split(";")]
        if not rows or any(not r or set(r) - {"0", "1"} for r in rows):
            raise ParseError(f"bad pattern {text!r}; expected rows of 0/1 separated by ';'")
        if len({len(r) for r in rows}) != 1:
            raise ParseError(f"pattern rows differ in length: {text!r}")
        return cls(np.array([[int(ch) for ch in r] for r in rows]))

    @classmethod
    def zeros(cls, m: int, n: int) -> "SparsityPattern":
        return cls(np.zeros((m, n), dtype=int))

    def __str__(self) -> str:
        return ";".join("".join(str(v) for v in row) for row in self.S)


@dataclass
class SolveReport:
    gain: FeedbackGain
    eigvecs: np.ndarray
    objective: float
    constraint_violation: float
    zero_count: int
    zero_positions: list
    restarts_used: int
    converged: bool
    restart_index: int = -1
    pattern: SparsityPattern | None = None
    history: list = field(default_factory=list)
    membership: float | None = None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "gain": self.gain.to_dict(),
            "eigvecs": encode_matrix(self.eigvecs),
            "objective": self.objective,
            "constraint_violation": self.constraint_violation,
            "membership_residual": self.membership,
            "zero_count": self.zero_count,
            "zero_positions": [list(p) for p in self.zero_positions],
            "restarts_used": self.restarts_used,
            "restart_index": self.restart_index,
            "pattern": None if self.pattern is None else str(self.pattern),
            "violation_history": self.history,
        }


class _Problem:
    """Constraint vector, Jacobian and objective over a flat real vector."""

    def __init__(self, constraints: list[PlacementConstraint], free: np.ndarray,
                 objective: str, eps: float = 1e-6, fixed_gammas=None):
        self.cons = constraints
        self.m, self.n = constraints[0].m, constraints[0].n
        self.T = constraints[0].T
        self.free = free
        self.nk = int(free.sum())
        self.objective = objective
        self.eps = eps
        lams = [c.lam for c in constraints]
        partner = conjugate_partners(lams)
        # primaries: real eigenvalues and the upper member of each pair
        self.primary = [i for i, lam in enumerate(lams)
                        if partner[i] == i or complex(lam).imag > 0]
        self.partner = partner
        self.fixed = fixed_gammas
        self.slices = []
        pos = self.nk
        for i in self.primary:
            d = constraints[i].subspace.dim
            width = 0 if fixed_gammas is not None else (2 * d if self.is_complex(i) else d)
            self.slices.append(slice(pos, pos + width))
            pos += width
        self.size = pos

    def is_complex(self, i) -> bool:
        return self.partner[i] != i

    def unpack(self, x):
        K = np.zeros((self.m, self.n))
        K[self.free] = x[: self.nk]
        gammas = []
        for idx, (i, sl) in enumerate(zip(self.primary, self.slices)):
            if self.fixed is not None:
                gammas.append(self.fixed[idx])
                continue
            d = self.cons[i].subspace.dim
            g = x[sl]
            gammas.append(g[:d] + 1j * g[d:] if self.is_complex(i) else g)
        return K, gammas

    def pack(self, K, gammas) -> np.ndarray:
        parts = [np.asarray(K)[self.free]]
        if self.fixed is None:
            for i, g in zip(self.primary, gammas):
                parts.append(np.concatenate([g.real, g.imag]) if self.is_complex(i) else np.real(g))
        return np.concatenate(parts)

    def constraints(self, x, jac: bool = True):
        K, gammas = self.unpack(x)
        m, n, T = self.m, self.n, self.T
        rows, jrows = [], []
        fi = np.flatnonzero(self.free.ravel())
        for i, sl, g in zip(self.primary, self.slices, gammas):
            c = self.cons[i]
            P = (c.G @ g).reshape(T, n)
            C = np.einsum("ij,tjd->tid", K, c.G.reshape(T, n, -1)).reshape(T * m, -1) + c.H
            r = C @ g
            if jac:
                # d r / d K_ab: rows (t, a) equal P[t, b]
                DK = np.einsum("ac,tb->tacb", np.eye(m), P).reshape(T * m, m * n)[:, fi]
            if self.is_complex(i):
                rows += [r.real, r.imag]
                if jac:
                    Jr = np.zeros((T * m, self.size))
                    Ji = np.zeros((T * m, self.size))
                    Jr[:, : self.nk], Ji[:, : self.nk] = DK.real, DK.imag
                    if self.fixed is None:
                        Jr[:, sl] = np.hstack([C.real, -C.imag])
                        Ji[:, sl] = np.hstack([C.imag, C.real])
                    jrows += [Jr, Ji]
            else:
                rows.append(np.real(r))
                if jac:
                    J = np.zeros((T * m, self.size))
                    J[:, : self.nk] = np.real(DK)
                    if self.fixed is None:
                        J[:, sl] = np.real(C)
                    jrows.append(J)
            if self.fixed is None:
                rows.append(np.array([np.vdot(g, g).real - 1.0]))
                if jac:
                    Jn = np.zeros((1, self.size))
                    Jn[0, sl] = 2 * (np.concatenate([g.real, g.imag]) if self.is_complex(i)
                                     else np.real(g))
                    jrows.append(Jn)
        cvec = np.concatenate(rows)
        if not jac:
            return cvec
        return cvec, np.vstack(jrows)

    def f(self, x):
        k = x[: self.nk]
        grad = np.zeros_like(x)
        if self.objective == "l2":
            grad[: self.nk] = k
            return 0.5 * float(k @ k), grad
        s = np.sqrt(k * k + self.eps ** 2)
        grad[: self.nk] = k / s
        return float(s.sum()), grad

    def true_objective(self, K) -> float:
        if self.objective == "l2":
            return 0.5 * float(np.sum(K * K))
        return float(np.abs(K).sum())

    def eigvecs(self, gammas) -> np.ndarray:
        V = np.zeros((self.n, len(self.cons)), dtype=complex)
        for i, g in zip(self.primary, gammas):
            v = self.cons[i].subspace.basis @ g
            V[:, i] = v
            if self.is_complex(i):
                V[:, self.partner[i]] = v.conj()
        return V.real.copy() if np.all(V.imag == 0) else V


def _project(prob: _Problem, x, iters: int = 30):
    """Gauss-Newton (minimum-norm steps) onto ``c(x) = 0``."""
    c, J = prob.constraints(x)
    best = np.abs(c).max()
    for _ in range(iters):
        if best < 1e-14:
            break
        step = np.linalg.lstsq(J, c, rcond=None)[0]
        x_new = x - step
        c_new, J_new = prob.constraints(x_new)
        v = np.abs(c_new).max()
        if not v < best:
            break
        x, c, J, best = x_new, c_new, J_new, v
    return x, best


def _feasibility(prob: _Problem, x0: np.ndarray, opts: SolverOptions):
    """Trust-region least squares on ``c(x) = 0`` from ``x0``.

    ``trf`` rather than MINPACK ``lm``: the latter is not bitwise
    reproducible across calls, which breaks restart determinism.
    """
    res = least_squares(lambda z: prob.constraints(z, jac=False), x0,
                        jac=lambda z: prob.constraints(z)[1], method="trf",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=opts.feasibility_iters)
    c = prob.constraints(res.x, jac=False)
    return res.x, float(np.abs(c).max())


def _run_restart(prob: _Problem, x0: np.ndarray, opts: SolverOptions,
                 eps_schedule: list[float] | None = None):
    """Feasibility phase, then an augmented-Lagrangian run.

    Returns ``(x, violation, history)``; ``history`` holds the violation
    after every accepted outer iteration (non-increasing by construction).
    """
    viol0 = float(np.abs(prob.constraints(x0, jac=False)).max())
    x, viol = _feasibility(prob, x0, opts)
    if not viol <= viol0:
        x, viol = x0.copy(), viol0
    if viol > FEASIBLE_START or opts.feasibility_only:
        if viol <= FEASIBLE_START:
            x, viol = _project(prob, x)
        return x, viol, [viol]
    c = prob.constraints(x, jac=False)
    y = np.zeros_like(c)
    mu = opts.penalty_init
    history = []
    viol = math.inf
    eps_iter = iter(eps_schedule or [])

    def phi(z):
        fz, gz = prob.f(z)
        cz, Jz = prob.constraints(z)
        lam = y + mu * cz
        val = fz + y @ cz + 0.5 * mu * (cz @ cz)
        return val, gz + Jz.T @ lam

    for _ in range(opts.max_outer):
        eps = next(eps_iter, None)
        if eps is not None:
            prob.eps = eps
        res = minimize(phi, x, jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.max_iters, "gtol": 1e-10, "ftol": 1e-15})
        c_new = prob.constraints(res.x, jac=False)
        v_new = float(np.abs(c_new).max())
        if v_new <= viol:
            x, c = res.x, c_new
            if v_new > 0.25 * viol:
                mu = min(mu * opts.penalty_growth, opts.penalty_max)
            viol = v_new
            y = y + mu * c
            history.append(viol)
        else:
            # rejected: accepted violations never increase
            mu = min(mu * opts.penalty_growth, opts.penalty_max)
        done_eps = eps_schedule is None or prob.eps <= eps_schedule[-1]
        if viol <= 0.1 * opts.constraint_tol and done_eps:
            break
        if mu >= opts.penalty_max and done_eps:
            break
    x, v_proj = _project(prob, x)
    if v_proj <= viol:
        viol = v_proj
        history.append(viol)
    return x, viol, history


def _initial_points(prob: _Problem, opts: SolverOptions, restart: int, K_init=None):
    rng = np.random.default_rng([opts.seed, restart])
    if K_init is not None and restart == 0:
        K = np.asarray(K_init, dtype=float) * prob.free
    elif restart == 0:
        K = np.zeros((prob.m, prob.n))
    else:
        K = opts.init_scale * rng.standard_normal((prob.m, prob.n)) * prob.free
    gammas = []
    for i in prob.primary:
        d = prob.cons[i].subspace.dim
        g = rng.standard_normal(d)
        if prob.is_complex(i):
            g = g + 1j * rng.standard_normal(d)
        gammas.append(g / np.linalg.norm(g))
    return prob.pack(K, gammas)


def _zeros(K, zero_abs):
    pos = [tuple(int(v) for v in p) for p in np.argwhere(np.abs(K) <= zero_abs)]
    return len(pos), pos


def _make_report(prob: _Problem, x, viol, history, restart, opts, tol, pattern, restarts_used):
    K, gammas = prob.unpack(x)
    V = prob.eigvecs(gammas)
    mem = membership_residual(K, prob.cons, tol)
    full_rank = numerical_rank(V, tol) == prob.n
    converged = bool(viol <= opts.constraint_tol and mem.in_set and full_rank)
    zc, zp = _zeros(K, opts.zero_abs)
    spectrum_ = tuple(c.lam for c in prob.cons)
    gain = FeedbackGain(K=K, spectrum=spectrum_, eigvecs=V)
    return SolveReport(gain=gain, eigvecs=V, objective=prob.true_objective(K),
                       constraint_violation=float(viol), zero_count=zc, zero_positions=zp,
                       restarts_used=restarts_used, converged=converged, restart_index=restart,
                       pattern=pattern, history=[float(h) for h in history],
                       membership=mem.max_residual)


def _check_inputs(ds: Dataset, spectrum_):
    vals = clean_spectrum(spectrum_)
    if len(vals) != ds.n:
        raise InvalidInput(f"spectrum has {len(vals)} values, state dimension is {ds.n}")
    return vals


def _best(reports, key):
    ok = [r for r in reports if r.converged]
    pool = ok if ok else reports
    return min(pool, key=key), bool(ok)


def _map_restarts(fn, opts: SolverOptions, count: int):
    """Run restarts, stopping early once ``opts.stop_after`` converged."""
    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as ex:
            reports = list(ex.map(fn, range(count)))
        if opts.stop_after:
            ok = [i for i, r in enumerate(reports) if r.converged]
            if len(ok) >= opts.stop_after:
                reports = reports[: ok[opts.stop_after - 1] + 1]
    else:
        reports, hits = [], 0
        for r in range(count):
            reports.append(fn(r))
            hits += reports[-1].converged
            if opts.stop_after and hits >= opts.stop_after:
                break
    for rep in reports:
        rep.restarts_used = len(reports)
    return reports


def solve_structured(ds: Dataset, kp: KernelPair, spectrum_, pattern: SparsityPattern | None = None,
                     opts: SolverOptions = SolverOptions(), tol: Tolerances = DEFAULT_TOL,
                     eigvecs=None, constraints: list[PlacementConstraint] | None = None,
                     K_init=None) -> SolveReport:
    """Minimum-norm pole placement with entries of ``K`` fixed to zero.

    With ``eigvecs`` the eigenvector coordinates are fixed and only ``K``
    is optimized. Raises :class:`Infeasible` (carrying the best attempt as
    ``details["report"]``) when no restart converges.
    """
    vals = _check_inputs(ds, spectrum_)
    if pattern is None:
        pattern = SparsityPattern.zeros(ds.m, ds.n)
    if pattern.S.shape != (ds.m, ds.n):
        raise InvalidInput(f"pattern must be {ds.m}x{ds.n}, got {pattern.S.shape}")
    if constraints is None:
        constraints = build_constraints(ds, kp, vals, tol)
    fixed = None
    if eigvecs is not None:
        V = np.asarray(eigvecs)
        fixed = []
        partner = conjugate_partners(vals)
        for i, c in enumerate(constraints):
            if partner[i] == i or complex(vals[i]).imag > 0:
                v = V[:, i] / np.linalg.norm(V[:, i])
                fixed.append(solve_gamma(c.subspace, v, tol).gamma)
    free = pattern.S == 0
    prob = _Problem(constraints, free, "l2", fixed_gammas=fixed)
    restarts = 1 if (fixed is not None or prob.size == 0) else opts.restarts

    def one(r):
        p = _Problem(constraints, free, "l2", fixed_gammas=fixed)
        x0 = _initial_points(p, opts, r, K_init)
        if p.size == 0:
            c = p.constraints(x0, jac=False)
            viol = float(np.abs(c).max()) if c.size else 0.0
            return _make_report(p, x0, viol, [viol], r, opts, tol, pattern, restarts)
        x, viol, hist = _run_restart(p, x0, opts)
        return _make_report(p, x, viol, hist, r, opts, tol, pattern, restarts)

    reports = _map_restarts(one, opts, restarts)
    best, ok = _best(reports, key=lambda r: (r.objective, r.restart_index))
    if not ok:
        raise Infeasible(FIXED_MODE_HINT, report=best)
    return best


def solve_max_sparse(ds: Dataset, kp: KernelPair, spectrum_, opts: SolverOptions = SolverOptions(),
                     tol: Tolerances = DEFAULT_TOL,
                     constraints: list[PlacementConstraint] | None = None) -> SolveReport:
    """Pole placement minimizing the smoothed l1 norm of ``K``.

    Zeros are counted with ``opts.zero_abs``. With ``opts.polish`` entries
    below ``polish_rel * max|K|`` are frozen to zero and the structured
    problem is re-solved from the current point.
    """
    vals = _check_inputs(ds, spectrum_)
    if constraints is None:
        constraints = build_constraints(ds, kp, vals, tol)
    free = np.ones((ds.m, ds.n), dtype=bool)
    target_eps = opts.l1_smoothing
    schedule = [e for e in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5) if e > target_eps] + [target_eps]

    def one(r):
        p = _Problem(constraints, free, "l1", eps=schedule[0])
        x0 = _initial_points(p, opts, r)
        x, viol, hist = _run_restart(p, x0, opts, eps_schedule=schedule)
        rep = _make_report(p, x, viol, hist, r, opts, tol, None, opts.restarts)
        if opts.polish and rep.converged:
            rep = _polish(rep, p, constraints, opts, tol, r) or rep
        return rep

    reports = _map_restarts(one, opts, opts.restarts)
    best, ok = _best(reports, key=lambda r: (-r.zero_count, r.objective, r.restart_index))
    if not ok:
        raise Infeasible(FIXED_MODE_HINT, report=best)
    return best


def _polish(rep: SolveReport, prob: _Problem, constraints, opts, tol, restart):
    K = rep.gain.K
    scale = max(1.0, float(np.abs(K).max()))
    S = (np.abs(K) <= opts.polish_rel * scale).astype(int)
    if S.sum() == 0:
        return None
    p = _Problem(constraints, S == 0, "l2")
    x0 = p.pack(K, _gammas_from_eigvecs(prob, rep.eigvecs))
    x, viol = _project(p, x0)
    out = _make_report(p, x, viol, rep.history + [viol], restart, opts, tol,
                       SparsityPattern(S), rep.restarts_used)
    if not out.converged or out.zero_count < rep.zero_count:
        return None
    out.objective = float(np.abs(out.gain.K).sum())
    out.pattern = None
    return out


def _gammas_from_eigvecs(prob: _Problem, V):
    return [prob.cons[i].subspace.basis.conj().T @ V[:, i] for i in prob.primary]


def enumerate_patterns(ds: Dataset, kp: KernelPair, spectrum_, max_zeros: int,
                       opts: SolverOptions = SolverOptions(), tol: Tolerances = DEFAULT_TOL,
                       max_entries: int = 12) -> list[SolveReport]:
    """Try every mask with at most ``max_zeros`` zeros; feasible ones are
    returned sorted by zero count (descending), then objective."""
    m, n = ds.m, ds.n
    if m * n > max_entries:
        raise TooLarge(f"m*n = {m * n} exceeds the enumeration guard {max_entries}")
    vals = _check_inputs(ds, spectrum_)
    constraints = build_constraints(ds, kp, vals, tol)
    out = []
    for k in range(min(max_zeros, m * n), -1, -1):
        for combo in itertools.combinations(range(m * n), k):
            S = np.zeros(m * n, dtype=int)
            S[list(combo)] = 1
            pattern = SparsityPattern(S.reshape(m, n))
            try:
                out.append(solve_structured(ds, kp, vals, pattern, opts, tol,
                                            constraints=constraints))
            except Infeasible:
                continue
    out.sort(key=lambda r: (-r.zero_count, r.objective))
    return out
