"""Command-line front end.

Exit codes: 0 success, 1 I/O or parse failure, 2 mathematical
infeasibility or validation failure. Spectra are comma lists of real or
complex literals; use ``--spectrum=-0.3,0.2`` when the list starts with
a minus sign.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .assignment import AssignmentSpec, assign
from .dataset import PlantModel, check_persistency, kernel_pair, load_dataset, save_dataset, \
    simulate_experiments
from .errors import DDAssignError, Infeasible, ParseError
from .jsonio import encode_matrix, encode_scalar, parse_complex, parse_matrix, read_json, \
    write_json
from .numkit import Tolerances, clean_spectrum
from .oracle import verify_closed_loop
from .placement import build_constraints, membership_residual
from .sparse import SolverOptions, SparsityPattern, solve_max_sparse, solve_structured
from .subspace import subspaces_for_spectrum


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_spectrum(text: str) -> list:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ParseError("empty spectrum")
    return clean_spectrum([parse_complex(t) for t in items])


def parse_pattern(text: str) -> SparsityPattern:
    if all(ch in "01;, " for ch in text.strip()):
        return SparsityPattern.parse(text)
    doc = read_json(text)
    S = doc.get("S", doc.get("pattern")) if isinstance(doc, dict) else doc
    return SparsityPattern(parse_matrix(S, "S"))


def load_eigvecs(path) -> np.ndarray:
    doc = read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("eigvecs", doc.get("V"))
    return parse_matrix(doc, "eigvecs", allow_complex=True)


def load_gain(path) -> np.ndarray:
    doc = read_json(path)
    if isinstance(doc, dict) and "gain" in doc:
        doc = doc["gain"]
    if isinstance(doc, dict):
        if "K" not in doc:
            raise ParseError(f"{path}: no field 'K'", field="K")
        doc = doc["K"]
    return parse_matrix(doc, "K")


def _tolerances(args) -> Tolerances:
    base = Tolerances()
    over = {k: v for k, v in (("rank_rel", args.tol_rank), ("zero_abs", args.tol_zero),
                              ("eig_abs", args.tol_eig), ("subspace_angle", args.tol_angle),
                              ("membership_rel", args.tol_membership)) if v is not None}
    return replace(base, **over)


def _fmt(z) -> str:
    z = complex(z)
    return f"{z.real:.6g}" if z.imag == 0 else f"{z.real:.6g}{z.imag:+.6g}i"


def _print_matrix(name, M):
    print(f"{name} =")
    for row in np.real_if_close(np.asarray(M)):
        print("  " + "  ".join(f"{v: .6f}" if np.isreal(v) else f"{_fmt(v):>14}" for v in row))


def _print_membership(mem):
    print("lambda        residual      threshold")
    for r in mem.per_lambda:
        print(f"{_fmt(r.lam):<12}  {r.residual:.3e}     {r.threshold:.3e}")
    print(f"in_set: {mem.in_set}")


def cmd_simulate(args) -> int:
    model = PlantModel.from_json(args.model)
    tol = _tolerances(args)
    ds = simulate_experiments(model, args.T, args.N, seed=args.seed,
                              excitation=args.excitation, tol=tol)
    save_dataset(ds, args.out)
    rep = check_persistency(ds, tol)
    print(f"wrote {args.out}: n={ds.n} m={ds.m} T={ds.T} N={ds.N}")
    print(f"rank {rep.rank}/{rep.required}")
    return 0 if rep.satisfied else 2


def cmd_check_data(args) -> int:
    ds = load_dataset(args.data)
    rep = check_persistency(ds, _tolerances(args))
    print(f"n={ds.n} m={ds.m} T={ds.T} N={ds.N}")
    print(f"rank {rep.rank}/{rep.required} ({'satisfied' if rep.satisfied else 'NOT satisfied'})")
    return 0 if rep.satisfied else 2


def cmd_subspace(args) -> int:
    tol = _tolerances(args)
    ds = load_dataset(args.data)
    spectrum_ = parse_spectrum(args.spectrum)
    kp = kernel_pair(ds, tol)
    sbs = subspaces_for_spectrum(ds, kp, spectrum_, tol)
    print("lambda        dim")
    for sb in sbs:
        print(f"{_fmt(sb.lam):<12}  {sb.dim}")
    if args.out:
        write_json(args.out, {"subspaces": [
            {"lambda": encode_scalar(sb.lam), "dim": sb.dim, "basis": encode_matrix(sb.basis)}
            for sb in sbs]})
    return 0


def cmd_assign(args) -> int:
    tol = _tolerances(args)
    ds = load_dataset(args.data)
    spectrum_ = parse_spectrum(args.spectrum)
    V = load_eigvecs(args.eigvecs) if args.eigvecs else None
    model = PlantModel.from_json(args.model) if args.model else None
    gain = assign(ds, AssignmentSpec(spectrum_, V), tol, model=model, seed=args.seed)
    _print_matrix("K", gain.K)
    kp = kernel_pair(ds, tol)
    mem = membership_residual(gain.K, build_constraints(ds, kp, spectrum_, tol), tol)
    _print_membership(mem)
    if args.out:
        doc = gain.to_dict()
        doc["membership"] = [r.residual for r in mem.per_lambda]
        write_json(args.out, doc)
    return 0 if mem.in_set else 2


def _solver_options(args) -> SolverOptions:
    opts = SolverOptions.from_json(args.options) if args.options else SolverOptions()
    over = {}
    if args.restarts is not None:
        over["restarts"] = args.restarts
    if args.seed is not None:
        over["seed"] = args.seed
    if args.workers is not None:
        over["workers"] = args.workers
    if args.tol_zero is not None:
        over["zero_abs"] = args.tol_zero
    return replace(opts, **over)


def cmd_place_sparse(args) -> int:
    tol = _tolerances(args)
    ds = load_dataset(args.data)
    spectrum_ = parse_spectrum(args.spectrum)
    opts = _solver_options(args)
    kp = kernel_pair(ds, tol)
    try:
        if args.pattern:
            rep = solve_structured(ds, kp, spectrum_, parse_pattern(args.pattern), opts, tol)
        else:
            rep = solve_max_sparse(ds, kp, spectrum_, opts, tol)
    except Infeasible as exc:
        rep = exc.details.get("report")
        print(f"infeasible: {exc}", file=sys.stderr)
        if args.out and rep is not None:
            write_json(args.out, rep.to_dict())
        return 2
    if args.model:
        rep.gain.attach_model(PlantModel.from_json(args.model))
    _print_matrix("K", rep.gain.K)
    print(f"objective {rep.objective:.6g}  violation {rep.constraint_violation:.3e}  "
          f"zeros {rep.zero_count}  restarts {rep.restarts_used}")
    if args.out:
        write_json(args.out, rep.to_dict())
    return 0 if rep.converged else 2


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    K = load_gain(args.gain)
    spectrum_ = parse_spectrum(args.spectrum)
    if not args.data and not args.model:
        raise ParseError("verify needs --data and/or --model")
    ok = True
    if args.data:
        ds = load_dataset(args.data)
        kp = kernel_pair(ds, tol)
        mem = membership_residual(K, build_constraints(ds, kp, spectrum_, tol), tol)
        _print_membership(mem)
        ok &= mem.in_set
    if args.model:
        model = PlantModel.from_json(args.model)
        rep = verify_closed_loop(model, K, spectrum_)
        print("achieved: " + ", ".join(_fmt(v) for v in rep.achieved))
        print(f"max eigenvalue error {rep.max_eig_error:.3e}  stable {rep.stable}")
        if not args.data:
            ok &= rep.max_eig_error <= tol.eig_abs
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("tolerances")
    g.add_argument("--tol-rank", type=float, help="relative singular-value cutoff")
    g.add_argument("--tol-zero", type=float, help="absolute zero threshold for gain entries")
    g.add_argument("--tol-eig", type=float, help="eigenvalue matching tolerance")
    g.add_argument("--tol-angle", type=float, help="principal-angle tolerance (rad)")
    g.add_argument("--tol-membership", type=float, help="relative membership threshold")

    p = _Parser(prog="ddassign", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="simulate open-loop experiments")
    s.add_argument("--model", required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--N", type=int, help="experiment count (default mT + n)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--excitation", default="normal", choices=["normal", "uniform", "binary"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("check-data", parents=[common], help="check persistency of excitation")
    s.add_argument("--data", required=True)
    s.set_defaults(func=cmd_check_data)

    s = sub.add_parser("subspace", parents=[common], help="allowable eigenvector subspaces")
    s.add_argument("--data", required=True)
    s.add_argument("--spectrum", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_subspace)

    s = sub.add_parser("assign", parents=[common], help="closed-form eigenstructure assignment")
    s.add_argument("--data", required=True)
    s.add_argument("--spectrum", required=True)
    s.add_argument("--eigvecs")
    s.add_argument("--model", help="optional model, only for reporting")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_assign)

    s = sub.add_parser("place-sparse", parents=[common], help="sparse pole placement")
    s.add_argument("--data", required=True)
    s.add_argument("--spectrum", required=True)
    s.add_argument("--pattern", help='mask file or inline rows, e.g. "1000;0010"')
    s.add_argument("--options", help="JSON solver options")
    s.add_argument("--restarts", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--model", help="optional model, only for reporting")
    s.add_argument("--out")
    s.set_defaults(func=cmd_place_sparse)

    s = sub.add_parser("verify", parents=[common], help="check a gain against a spectrum")
    s.add_argument("--gain", required=True)
    s.add_argument("--spectrum", required=True)
    s.add_argument("--model")
    s.add_argument("--data")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DDAssignError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
