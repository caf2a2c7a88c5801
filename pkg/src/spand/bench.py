"""Benchmark command line: generate or load a problem, factorize, solve.

Single runs emit a JSON report (stdout or --out); --sweep runs a cartesian
grid of configurations and emits one CSV row each.  Exit codes: 0 success,
1 usage or I/O error, 2 numerical breakdown, 3 non-convergence.
"""

import argparse
import csv
import io
import itertools
import json
import sys
import time

import numpy as np

from .errors import BreakdownError, IndefinitePreconditionerError, SpandError
from .factorizer import FactorOptions, default_skip, factorize
from .ordering import load_coords, order_and_cluster
from .pcg import pcg_solve
from .problems import gen_laplacian_2d, gen_laplacian_3d
from .sparsecore import adjacency, load_matrix_market

__all__ = ["build_parser", "run_benchmark", "run_sweep", "main"]

_SWEEP_KEYS = ("n", "eps", "rho", "variant")
_CSV_COLUMNS = [
    "gen",
    "n",
    "rho",
    "seed",
    "eps",
    "variant",
    "levels",
    "skip",
    "backend",
    "tP",
    "tF",
    "tS",
    "nCG",
    "sizeTop",
    "memF",
    "status",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the benchmark contract reserves 2 for
    # numerical breakdown, so route parse failures through UsageError.
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(
        prog="spand",
        description="Factorize and solve a sparse SPD system, reporting metrics as JSON/CSV.",
    )
    p.add_argument("--matrix", metavar="PATH", help="Matrix Market file to solve")
    p.add_argument("--coords", metavar="PATH", help="vertex coordinates (2-3 columns)")
    p.add_argument("--gen", choices=["lap2d", "lap3d"], help="generate a grid Laplacian")
    p.add_argument("--n", type=int, default=32, help="grid size per dimension")
    p.add_argument("--rho", type=float, default=1.0, help="coefficient contrast")
    p.add_argument("--seed", type=int, default=0, help="field / rhs seed")
    p.add_argument("--eps", type=float, default=1e-2, help="compression tolerance")
    p.add_argument("--variant", choices=["in", "ins", "orths"], default="orths")
    p.add_argument("--levels", type=int, default=0, help="hierarchy levels (0 = auto)")
    p.add_argument("--skip", type=int, default=None, help="levels without sparsification")
    p.add_argument("--backend", choices=["geo", "graph"], default=None)
    p.add_argument("--tol", type=float, default=1e-12, help="relative residual target")
    p.add_argument("--maxit", type=int, default=500, help="CG iteration cap")
    p.add_argument("--rhs", choices=["ones", "random"], default="ones")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--sweep", metavar="SPEC", help="e.g. 'n=16,32,64;eps=1e-4;variant=orths'")
    return p


def _validate(args):
    if args.sweep is None:
        if (args.matrix is None) == (args.gen is None):
            raise UsageError("exactly one of --matrix or --gen is required")
    elif args.matrix is not None:
        raise UsageError("--sweep generates problems; --matrix is not allowed")
    if args.coords is not None and args.matrix is None:
        raise UsageError("--coords only applies to --matrix input")


def _load_problem(args):
    if args.gen is not None:
        gen = gen_laplacian_2d if args.gen == "lap2d" else gen_laplacian_3d
        return gen(args.n, args.rho, args.seed)
    a = load_matrix_market(args.matrix)
    coords = load_coords(args.coords, a.n) if args.coords else None
    return a, coords


def _rhs(args, a):
    if args.rhs == "random":
        return np.random.default_rng(args.seed).random(a.n)
    return a.matvec(np.ones(a.n))


def run_benchmark(args):
    """Execute one configuration; returns the report dict."""
    a, coords = _load_problem(args)
    backend = args.backend if args.backend is not None else "auto"
    opts = FactorOptions(
        eps=args.eps,
        variant=args.variant,
        levels=args.levels,
        skip=args.skip,
        backend=backend,
    )

    t0 = time.perf_counter()
    hierarchy = order_and_cluster(
        adjacency(a), coords=coords, levels=opts.levels, backend=backend
    )
    t_partition = time.perf_counter() - t0

    skip = args.skip if args.skip is not None else min(default_skip(a.n), hierarchy.levels - 1)
    report = {
        "config": {
            "gen": args.gen,
            "matrix": args.matrix,
            "n": args.n if args.gen else a.n,
            "rho": args.rho,
            "seed": args.seed,
            "eps": args.eps,
            "variant": args.variant,
            "levels": hierarchy.levels,
            "skip": skip,
            "backend": backend,
            "tol": args.tol,
            "maxit": args.maxit,
            "rhs": args.rhs,
        },
        "tP": t_partition,
        "tF": 0.0,
        "tS": 0.0,
        "nCG": 0,
        "sizeTop": 0,
        "memF": 0,
        "perLevel": [],
        "residuals": [],
        "status": "ok",
    }

    t0 = time.perf_counter()
    try:
        precond = factorize(a, hierarchy, opts)
    except BreakdownError as e:
        report["tF"] = time.perf_counter() - t0
        report["status"] = "breakdown"
        report["breakdown"] = {"level": e.level, "cluster": e.cluster, "pivot": e.pivot}
        return report
    report["tF"] = time.perf_counter() - t0
    report["sizeTop"] = int(precond.size_top)
    report["memF"] = int(precond.nnz())
    report["perLevel"] = [
        {
            "level": st.level,
            "tElim": st.t_elim,
            "tScale": st.t_scale,
            "tSparsify": st.t_sparsify,
            "tMerge": st.t_merge,
            "cumNnz": int(st.cum_nnz),
        }
        for st in precond.level_stats
    ]

    b = _rhs(args, a)
    try:
        _, stats = pcg_solve(a, b, precond, tol=args.tol, maxit=args.maxit)
    except IndefinitePreconditionerError as e:
        report["status"] = "breakdown"
        report["breakdown"] = {"reason": str(e)}
        return report
    report["tS"] = stats.t_s
    report["nCG"] = int(stats.iterations)
    report["residuals"] = [float(r) for r in stats.residuals]
    if not stats.converged:
        report["status"] = "noconv"
    return report


def _parse_sweep_spec(spec, args):
    lists = {}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in _SWEEP_KEYS:
            raise UsageError(f"bad sweep term {part!r}; keys are {', '.join(_SWEEP_KEYS)}")
        items = [v.strip() for v in val.split(",") if v.strip()]
        try:
            if key == "n":
                lists[key] = [int(v) for v in items]
            elif key == "variant":
                for v in items:
                    if v not in ("in", "ins", "orths"):
                        raise ValueError(v)
                lists[key] = items
            else:
                lists[key] = [float(v) for v in items]
        except ValueError:
            raise UsageError(f"bad sweep value in {part!r}") from None
    if not lists:
        return []
    defaults = {"n": args.n, "eps": args.eps, "rho": args.rho, "variant": args.variant}
    axes = [lists.get(k, [defaults[k]]) for k in _SWEEP_KEYS]
    return [dict(zip(_SWEEP_KEYS, combo)) for combo in itertools.product(*axes)]


def run_sweep(args):
    """Run the cartesian sweep, writing one CSV row per configuration."""
    combos = _parse_sweep_spec(args.sweep, args)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS)
    writer.writeheader()
    for combo in combos:
        run_args = argparse.Namespace(**vars(args))
        run_args.sweep = None
        run_args.out = None
        if run_args.gen is None:
            run_args.gen = "lap2d"
        for key, val in combo.items():
            setattr(run_args, key, val)
        report = run_benchmark(run_args)
        row = {k: report["config"].get(k) for k in _CSV_COLUMNS[:9]}
        row.update(
            {
                "tP": f"{report['tP']:.6f}",
                "tF": f"{report['tF']:.6f}",
                "tS": f"{report['tS']:.6f}",
                "nCG": report["nCG"],
                "sizeTop": report["sizeTop"],
                "memF": report["memF"],
                "status": report["status"],
            }
        )
        writer.writerow(row)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        if args.sweep is not None:
            return run_sweep(args)
        report = run_benchmark(args)
        text = json.dumps(report, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        if report["status"] == "breakdown":
            return 2
        if report["status"] == "noconv":
            return 3
        return 0
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (OSError, SpandError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
