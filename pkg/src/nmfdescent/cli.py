"""Command line entry point: ``python -m nmfdescent <command> ...``.

Exit codes: 0 on success, 1 when a computation or file read fails, 2 on
usage errors.
"""

import argparse
import sys

import numpy as np

from . import io as nio
from .bench import (RECORD_FIELDS, Campaign, format_table, gen_random_instance,
                    run_campaign, run_smooth)
from .constraints import ConstraintSet, run_grri
from .model import StopRule
from .solvers import Algorithm, SolverConfig, run
from .svd import SvdConvergenceError, nonneg_part_baseline, svd, truncation_error
from .tensor import kruskal_to_dense, run_tensor_rri


class UsageError(Exception):
    pass


def _ints(text, count=None, name="value"):
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None
    if count is not None and len(vals) not in (count if isinstance(count, tuple) else (count,)):
        raise UsageError(f"{name}: expected {count} integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise UsageError(f"{name}: values must be positive")
    return vals


def _floats(text, name="value"):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _algos(text):
    try:
        return [Algorithm.parse(a) for a in text.split(",")]
    except ValueError as e:
        raise UsageError(str(e)) from None


def read_config(path):
    """Turn a ``key=value`` file into ``--key value`` arguments."""
    argv = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise UsageError(f"{path}:{lineno}: expected key=value")
            argv += ["--" + key.strip().replace("_", "-"), value.strip()]
    return argv


def _add_common(p, size_help, repeat=False):
    p.add_argument("--size", help=size_help, action="append" if repeat else "store")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    ap = argparse.ArgumentParser(prog="nmfdescent",
                                 description="Nonnegative matrix and tensor factorization tools.")
    sub = ap.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("bench", help="run a timing campaign and print a summary table")
    _add_common(p, "m,n,r; repeat the flag for several sizes", repeat=True)
    p.add_argument("--eps", default="1e-2,1e-4")
    p.add_argument("--algo", default="rri,mult,cline")
    p.add_argument("--matrices", type=int, default=20)
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--time-limit", type=float, default=45.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", help="file of key=value lines mirroring the flags")

    p = sub.add_parser("factor", help="factorize one matrix and emit its trace")
    _add_common(p, "m,n,r for a random matrix (r is the rank)")
    p.add_argument("--input", help="matrix file (.csv or .pgm)")
    p.add_argument("--rank", type=int)
    p.add_argument("--algo", default="rri")
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--time-limit", type=float, default=45.0)
    p.add_argument("--max-sweeps", type=int, default=10**6)
    p.add_argument("--constraint", help="binary | sparsek:K | hoyer:S | nonneg | normed; "
                                        "switches to the generalized iteration")
    p.add_argument("--factors", help="prefix for U and V csv files")
    p.add_argument("--config")

    p = sub.add_parser("tensor", help="Kruskal fit of stacked images or a random tensor")
    _add_common(p, "n1,n2,...,r for a random tensor")
    p.add_argument("--images", nargs="+", help="PGM files stacked along the last mode")
    p.add_argument("--rank", type=int)
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--config")

    p = sub.add_parser("smooth", help="smooth-mixture experiment with smoothing weights")
    _add_common(p, argparse.SUPPRESS)
    p.add_argument("--delta", default="0,10,100")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds from --seed on")
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--config")

    p = sub.add_parser("baseline", help="SVD and [A_r]_+ errors")
    _add_common(p, "m,n,r for a random matrix")
    p.add_argument("--input")
    p.add_argument("--rank", type=int)
    p.add_argument("--config")
    return ap


def _expand_config(argv):
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    rest = argv[:i] + argv[i + 2:]
    # config values first so explicit flags override them
    return rest[:1] + read_config(argv[i + 1]) + rest[1:]


def _matrix_and_rank(args):
    if args.input and args.size:
        raise UsageError("give either --input or --size, not both")
    if args.input:
        A = nio.load_matrix(args.input)
        r = args.rank
        if r is None:
            raise UsageError("--rank is required with --input")
    else:
        m, n, r = _ints(args.size or "30,20,2", 3, "--size")
        if args.rank is not None:
            r = args.rank
        A = gen_random_instance(m, n, args.seed)
    if not 1 <= r <= min(A.shape):
        raise UsageError(f"rank {r} outside 1..{min(A.shape)}")
    return A, r


def cmd_factor(args):
    A, r = _matrix_and_rank(args)
    stop = StopRule(epsilon_rel=args.eps, max_seconds=args.time_limit,
                    max_sweeps=args.max_sweeps)
    if args.constraint:
        try:
            cs = ConstraintSet.parse(args.constraint)
        except ValueError as e:
            raise UsageError(str(e)) from None
        f, trace = run_grri(A, r, cs, cs, sweeps=min(args.max_sweeps, 1000),
                            seed=args.seed, tol=args.eps)
        rows = [{"sweep": i, "objective": v} for i, v in enumerate(trace)]
        nio.emit(rows, args.format, args.out, fields=("sweep", "objective"))
        if args.factors:
            nio.write_matrix_csv(f.X * f.d, args.factors + "U.csv")
            nio.write_matrix_csv(f.Y, args.factors + "V.csv")
        return 0
    algo = _algos(args.algo)
    if len(algo) != 1:
        raise UsageError("factor takes a single --algo")
    rep = run(A, SolverConfig(algo[0], rank=r, seed=args.seed, stop=stop))
    rows = [p._asdict() for p in rep.trace]
    nio.emit(rows, args.format, args.out, fields=("sweep", "elapsed", "objective", "pgrad_norm"))
    if args.factors:
        nio.write_matrix_csv(rep.final.U, args.factors + "U.csv")
        nio.write_matrix_csv(rep.final.V, args.factors + "V.csv")
    print(f"{algo[0].value}: {rep.stop_reason.value} after {rep.sweeps} sweeps, "
          f"objective {rep.trace[-1].objective:.6g}", file=sys.stderr)
    return 0


def cmd_bench(args):
    sizes = [_ints(s, 3, "--size") for s in (args.size or ["30,20,2"])]
    try:
        c = Campaign(sizes=sizes, epsilons=_floats(args.eps, "--eps"),
                     n_matrices=args.matrices, n_starts=args.starts,
                     algorithms=_algos(args.algo), time_limit_s=args.time_limit,
                     seed=args.seed, workers=args.workers)
    except ValueError as e:
        raise UsageError(str(e)) from None
    records = run_campaign(c)
    nio.emit(records, args.format, args.out, fields=RECORD_FIELDS)
    print(format_table(records, c.time_limit_s), file=sys.stderr)
    return 0


def cmd_tensor(args):
    if args.images and args.size:
        raise UsageError("give either --images or --size, not both")
    if args.images:
        T = nio.images_to_tensor(args.images)
        r = args.rank
        if r is None:
            raise UsageError("--rank is required with --images")
    else:
        vals = _ints(args.size or "5,4,3,2", (3, 4, 5, 6), "--size")
        dims, r = vals[:-1], vals[-1]
        if args.rank is not None:
            r = args.rank
        T = np.random.default_rng(args.seed).random(dims)
    if r < 1:
        raise UsageError("rank must be positive")
    S, trace = run_tensor_rri(T, r, sweeps=args.sweeps, seed=args.seed)
    rows = [{"sweep": i, "objective": v} for i, v in enumerate(trace)]
    nio.emit(rows, args.format, args.out, fields=("sweep", "objective"))
    rel = np.linalg.norm(T - kruskal_to_dense(S)) / np.linalg.norm(T)
    print(f"tensor {T.shape} rank {r}: relative error {rel:.6g}", file=sys.stderr)
    return 0


def cmd_smooth(args):
    deltas = _floats(args.delta, "--delta")
    if any(d < 0 for d in deltas):
        raise UsageError("--delta values must be nonnegative")
    stop = StopRule(epsilon_rel=args.eps, max_seconds=60, max_sweeps=args.max_sweeps)
    res = run_smooth(deltas, seeds=range(args.seed, args.seed + args.seeds), stop=stop)
    nio.emit([r._asdict() for r in res], args.format, args.out,
             fields=("delta", "seed", "energy", "rel_error", "sweeps", "stop_reason"))
    return 0


def cmd_baseline(args):
    A, r = _matrix_and_rank(args)
    s = svd(A)
    _, err_pos = nonneg_part_baseline(A, r)
    row = {"m": A.shape[0], "n": A.shape[1], "r": r,
           "svd_error": float(np.sqrt(2 * truncation_error(s, r))),
           "nonneg_part_error": err_pos}
    nio.emit([row], args.format, args.out)
    return 0


COMMANDS = {"bench": cmd_bench, "factor": cmd_factor, "tensor": cmd_tensor,
            "smooth": cmd_smooth, "baseline": cmd_baseline}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        argv = _expand_config(argv)
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # argparse usage errors and --help
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (nio.ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (SvdConvergenceError, np.linalg.LinAlgError, FloatingPointError,
            ValueError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
