"""Command-line entry point: ``wcp <subcommand> ...`` or ``python -m wcp``.

Exit codes: 0 success, 2 configuration error, 3 guard-rail trip
(wrong regime), 4 numerical failure.  ``WCP_SEED`` in the environment
overrides ``--seed``.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import branching, experiments, io, kernel_full, kernel_typed, meanfield, oracle, weights
from .errors import (GuardTripped, IoError, NoConvergence, NotSupercritical, StepTooLarge,
                     WCPError)
from .parallel import default_workers
from .rng import derive_seed

log = logging.getLogger("wcp")

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_NUMERIC = 0, 2, 3, 4


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _law(text: str):
    try:
        return io.parse_law(text)
    except WCPError as e:
        raise argparse.ArgumentTypeError(str(e))


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="global 64-bit seed (WCP_SEED overrides)")
    g.add_argument("--workers", type=int, default=None, help="worker threads (default: all CPUs)")
    g.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    g.add_argument("--output", default=None, help="output path (default: stdout)")
    g.add_argument("--log-level", default="WARNING",
                   choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="wcp", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common], allow_abbrev=False)

    p = add("simulate", "run contact-process replicas")
    p.add_argument("--kernel", choices=("full", "typed"), default="full")
    p.add_argument("--dist", type=_law, required=True, help="weight law literal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--snapshots", type=_floats, default=[], help="comma-separated times")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--init", default="all", help='"all" or a number of initially infected')
    p.add_argument("--max-events", type=int, default=10 ** 12)
    p.add_argument("--exact-counts", action="store_true",
                   help="typed kernel: round p_i n instead of drawing type counts")
    p.add_argument("--bitmaps", action="store_true",
                   help="full kernel: include infected sets at snapshots (JSON output)")

    p = add("meanfield", "solve the mean-field fixed point")
    p.add_argument("--dist", type=_law, required=True)
    p.add_argument("--lambda", dest="lam", type=_floats, required=True,
                   help="one or more comma-separated values")

    p = add("critical", "critical value 1/E[w^2], optionally for the truncated law")
    p.add_argument("--dist", type=_law, required=True)
    p.add_argument("--truncate", type=int, default=None, metavar="M")

    p = add("exponents", "compare sigma near criticality with its asymptotic form")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--xm", type=float, default=1.0)
    p.add_argument("--deltas", type=_floats, required=True)
    p.add_argument("--log-corrected", action="store_true")

    p = add("branching", "spectral report of the dominating branching process")
    p.add_argument("--dist", type=_law, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)

    p = add("oracle", "exact marginals by uniformization (n <= 12)")
    p.add_argument("--dist", type=_law, default=None)
    p.add_argument("--weights", type=_floats, default=None, help="explicit weight vector")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--init", default="all", help='"all" or comma-separated 0-based vertices')

    p = add("validate", "run a property suite")
    p.add_argument("--suite", choices=("appendix", "duality", "monotone"), required=True)
    p.add_argument("--trials", type=int, default=None)

    p = add("exp", "experiments")
    p.add_argument("action", choices=("run",))
    p.add_argument("spec", help="experiment spec JSON file")

    p = add("sample-weights", "draw i.i.d. weights")
    p.add_argument("--dist", type=_law, required=True)
    p.add_argument("--n", type=int, required=True)
    return parser


# ---------------------------------------------------------------------------

def _emit(args, records, default="csv", columns=None, header=None):
    io.emit(records, args.format or default, args.output, columns=columns, header=header)


def _simulate(args):
    if args.kernel == "typed":
        if not isinstance(args.dist, weights.DiscreteLaw):
            raise GuardTripped("the typed kernel needs a discrete law")
        init = args.init if args.init == "all" else float(args.init) / args.n
        cfg = kernel_typed.TypedConfig.from_law(
            args.dist, args.lam, args.n, seed=args.seed, exact_counts=args.exact_counts,
            init=init, t_max=args.t_max, snapshot_times=args.snapshots,
            max_events=args.max_events)
        sums = kernel_typed.typed_replicas(cfg, args.reps, args.workers)
        rows = []
        for r, s in enumerate(sums):
            row = s.record(r)
            row.update({f"N{i + 1}": int(v) for i, v in enumerate(cfg.N)})
            rows.append(row)
    else:
        ws = weights.sample(args.dist, args.n, derive_seed(args.seed, -1))
        init = args.init if args.init == "all" else int(args.init)
        cfg = kernel_full.SimConfig(lam=args.lam, sample=ws, init=init, t_max=args.t_max,
                                    snapshot_times=args.snapshots, max_events=args.max_events,
                                    seed=args.seed, record_bitmaps=args.bitmaps)
        sums = kernel_full.run_replicas(cfg, args.reps, args.workers)
        rows = []
        for r, s in enumerate(sums):
            row = s.record(r)
            if args.bitmaps:
                row["infected"] = [np.flatnonzero(b).tolist() for b in s.bitmaps]
            rows.append(row)
    _emit(args, rows, default="json" if args.bitmaps else "csv",
          header={"seed": args.seed, "kernel": args.kernel})


def _meanfield(args):
    _emit(args, [meanfield.solve(args.dist, lam).as_record() for lam in args.lam], default="json")


def _critical(args):
    law = args.dist
    rec = {"law": io.format_law(law)}
    if args.truncate is not None:
        law = weights.truncate(law, args.truncate)
        rec["truncation_m"] = args.truncate
    rec["second_moment"] = weights.moment(law, 2)
    rec["lambda_c"] = meanfield.lambda_c(law)
    _emit(args, [rec], default="json")


def _exponents(args):
    law = weights.ParetoLaw(args.alpha, args.xm)
    rep = meanfield.asymptotic_report(law, args.deltas, log_corrected=args.log_corrected)
    _emit(args, rep.records(), columns=["alpha", "delta", "sigma_numeric", "sigma_asymptotic",
                                        "ratio"])


def _branching(args):
    ws = weights.sample(args.dist, args.n, derive_seed(args.seed, -1))
    _emit(args, [branching.spectral_report(ws, args.lam).as_record()], default="json")


def _oracle(args):
    if args.weights is not None:
        w = np.asarray(args.weights)
    elif args.dist is not None and args.n is not None:
        w = weights.sample(args.dist, args.n, derive_seed(args.seed, -1)).w
    else:
        raise ValueError("oracle needs --weights or both --dist and --n")
    init = "all" if args.init == "all" else [int(x) for x in args.init.split(",")]
    rec = oracle.exact_marginals(w, args.lam, args.t, init).as_record()
    rec["weights"] = w.tolist()
    _emit(args, [rec], default="json")


def _validate(args):
    rng = np.random.default_rng(args.seed)
    if args.suite == "appendix":
        trials = branching.diag_eig_trials(8, args.trials or 200, args.seed)
        recs = [{"trial": k, "top_U": t.top_U, "top_DU": t.top_DU, "passed": t.passed}
                for k, t in enumerate(trials)]
    elif args.suite == "duality":
        recs = []
        for k in range(args.trials or 5):
            n = int(rng.integers(2, 9))
            w = rng.uniform(0.5, 3.0, n)
            gap = oracle.duality_gap(w, 1.5, 2.0)
            recs.append({"trial": k, "n": n, "gap": gap, "passed": gap <= 1e-9})
    else:
        recs = []
        for k in range(args.trials or 10):
            n = int(rng.integers(2, 8))
            lo = rng.uniform(0.2, 2.0, n)
            hi = lo + rng.uniform(0.0, 1.0, n)
            gap = oracle.monotonicity_gap(lo, hi, 1.0, 1.0)
            recs.append({"trial": k, "n": n, "gap": gap, "passed": gap >= -1e-9})
    _emit(args, recs)
    if not all(r["passed"] for r in recs):
        print(f"wcp: {args.suite} suite: property failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _exp(args):
    spec = experiments.ExperimentSpec.from_json(args.spec)
    if args.workers is not None:
        spec.workers = args.workers
    spec.seed = args.seed if (args.seed_given or "WCP_SEED" in os.environ) else spec.seed
    res = experiments.run_experiment(spec, write=False)
    res.write(args.output if args.output is not None else spec.output)


def _sample_weights(args):
    ws = weights.sample(args.dist, args.n, args.seed)
    _emit(args, [{"i": i, "w": float(x)} for i, x in enumerate(ws.w)], columns=["i", "w"],
          header={"seed": args.seed, "law": io.format_law(args.dist)})


_COMMANDS = {"simulate": _simulate, "meanfield": _meanfield, "critical": _critical,
             "exponents": _exponents, "branching": _branching, "oracle": _oracle,
             "validate": _validate, "exp": _exp, "sample-weights": _sample_weights}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    env = os.environ.get("WCP_SEED")
    if env is not None:
        try:
            args.seed = int(env, 0)
        except ValueError:
            print(f"wcp: error: WCP_SEED={env!r} is not an integer", file=sys.stderr)
            return EXIT_CONFIG
    if args.workers is None:
        args.workers = default_workers() if args.command != "exp" else None
    elif args.workers < 1:
        print("wcp: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = _COMMANDS[args.command](args)
    except (GuardTripped, NotSupercritical) as e:
        print(f"wcp: guard rail: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (NoConvergence, StepTooLarge) as e:
        print(f"wcp: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IoError, OSError) as e:
        print(f"wcp: error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if code is None else code
