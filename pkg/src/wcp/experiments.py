"""Desk-scale reproductions of the phase transition and the mean-field profile.

An experiment is described by an ``ExperimentSpec`` (loadable from JSON) and
produces a table of records plus a few summary statistics.  Every random
stream is derived from the spec seed, so a spec reproduces its output byte for
byte whatever the worker count.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import GuardTripped, InvariantError, SchemaError
from .io import emit, format_law, parse_law
from .kernel_full import SimConfig, frequencies_from, run_replicas
from .kernel_typed import TypedConfig, typed_replicas
from .meanfield import asymptotic_report, lambda_c, profile, regime, rho, AsymptoticReport
from .rng import derive_seed
from .weights import DiscreteLaw, ParetoLaw, WeightLaw, moment, sample

KINDS = ("extinction_scaling", "survival_persistence", "profile_accuracy", "rho_curve",
         "exponent_fit")

# keys that never influence the numbers written
_NON_SEMANTIC = ("output", "workers")


@dataclass
class ExperimentSpec:
    """One experiment.

    ``lam`` is absolute unless ``lam_factor`` is given, in which case
    ``lam = lam_factor * lambda_c(law)``.  ``lambda_grid`` is used by
    ``rho_curve`` and ``delta_grid`` by ``exponent_fit``.
    """
    name: str
    kind: str
    law: str
    lam: Optional[float] = None
    lam_factor: Optional[float] = None
    lambda_grid: list = field(default_factory=list)
    delta_grid: list = field(default_factory=list)
    n_grid: list = field(default_factory=list)
    reps: int = 100
    t_grid: list = field(default_factory=list)
    t_max: float = 1e6
    kernel: str = "typed"
    exact_counts: bool = False
    log_corrected: bool = False
    max_events: int = 10 ** 12
    seed: int = 0
    output: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown experiment kind {self.kind!r}")
        if self.kernel not in ("full", "typed"):
            raise SchemaError(f"unknown kernel {self.kernel!r}")
        if self.reps < 1:
            raise InvariantError("reps must be at least 1")
        if self.workers < 1:
            raise InvariantError("workers must be at least 1")
        self.law_obj = parse_law(self.law)
        needs = {"extinction_scaling": ("n_grid",), "survival_persistence": ("n_grid",),
                 "profile_accuracy": ("n_grid", "t_grid"), "rho_curve": ("n_grid", "lambda_grid"),
                 "exponent_fit": ("delta_grid",)}[self.kind]
        for g in needs:
            if not getattr(self, g):
                raise InvariantError(f"{self.kind} needs a nonempty {g}")
        if self.kind not in ("rho_curve", "exponent_fit") and self.lambda_value is None:
            raise InvariantError(f"{self.kind} needs lam or lam_factor")
        if self.kernel == "typed" and self.kind != "exponent_fit" and \
                not isinstance(self.law_obj, DiscreteLaw):
            raise SchemaError("the typed kernel needs a discrete law")

    @property
    def lambda_value(self) -> Optional[float]:
        if self.lam_factor is not None:
            return self.lam_factor * lambda_c(self.law_obj)
        return self.lam

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise SchemaError(f"unknown spec keys {sorted(extra)}")
        missing = {"name", "kind", "law"} - set(d)
        if missing:
            raise SchemaError(f"spec is missing {sorted(missing)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def semantic_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in _NON_SEMANTIC}
        d["law"] = format_law(self.law_obj)
        return d

    def spec_hash(self) -> str:
        text = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list
    columns: list
    summary: dict

    def header(self) -> dict:
        h = {"experiment": self.spec.name, "kind": self.spec.kind,
             "seed": self.spec.seed, "spec-hash": self.spec.spec_hash()}
        h.update(self.summary)
        return h

    def write(self, path=None) -> None:
        emit(self.rows, "csv", path if path is not None else self.spec.output,
             columns=self.columns, header=self.header())


def _linfit(x, y):
    """Least-squares slope, intercept and R^2 (R^2 = nan for fewer than 3 points)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 2:
        return math.nan, math.nan, math.nan
    fit = stats.linregress(x, y)
    r2 = fit.rvalue ** 2 if len(x) > 2 else math.nan
    return float(fit.slope), float(fit.intercept), float(r2)


def _point_seed(spec: ExperimentSpec, k: int) -> int:
    # grid points use negative indices; replica r of a point uses derive_seed(point_seed, r)
    return derive_seed(spec.seed, -(k + 2))


def _simulate(spec: ExperimentSpec, k: int, n: int, lam: float, snaps=(), t_max=None):
    """Replicas at one grid point; returns (summaries, per-type totals)."""
    seed = _point_seed(spec, k)
    t_max = spec.t_max if t_max is None else t_max
    if spec.kernel == "typed":
        cfg = TypedConfig.from_law(spec.law_obj, lam, n, seed=seed, exact_counts=spec.exact_counts,
                                   t_max=t_max, snapshot_times=snaps, max_events=spec.max_events)
        return typed_replicas(cfg, spec.reps, spec.workers), cfg.N
    ws = sample(spec.law_obj, n, derive_seed(seed, -1))
    cfg = SimConfig(lam=lam, sample=ws, t_max=t_max, snapshot_times=snaps,
                    max_events=spec.max_events, seed=seed)
    return run_replicas(cfg, spec.reps, spec.workers), ws.counts


def _check_budget(summaries):
    if any(s.budget_exceeded for s in summaries):
        raise GuardTripped("event budget exhausted; raise max_events")


def extinction_scaling(spec: ExperimentSpec) -> ExperimentResult:
    """Extinction-time statistics from all-infected below threshold, per n."""
    lam = spec.lambda_value
    lc = lambda_c(spec.law_obj)
    if not lam < lc:
        raise GuardTripped(f"lambda={lam} is not below lambda_c={lc}")
    rows = []
    for k, n in enumerate(spec.n_grid):
        sums, _ = _simulate(spec, k, int(n), lam)
        _check_budget(sums)
        times = np.array([s.extinction_time for s in sums if s.extinction_time is not None])
        row = {"n": int(n), "reps": spec.reps, "extinct": len(times),
               "mean_extinction_time": float(times.mean()) if len(times) else math.nan,
               "sd": float(times.std(ddof=1)) if len(times) > 1 else math.nan,
               "max": float(times.max()) if len(times) else math.nan}
        rows.append(row)
    slope, icpt, r2 = _linfit(np.log([r["n"] for r in rows]),
                              [r["mean_extinction_time"] for r in rows])
    summary = {"lambda": lam, "lambda_c": lc, "slope_vs_log_n": slope, "intercept": icpt,
               "r_squared": r2, "all_extinct": all(r["extinct"] == r["reps"] for r in rows)}
    return ExperimentResult(spec, rows, list(rows[0]), summary)


def survival_persistence(spec: ExperimentSpec) -> ExperimentResult:
    """Fraction of replicas from all-infected still alive at t_max, per n."""
    lam = spec.lambda_value
    lc = lambda_c(spec.law_obj)
    if not lam > lc:
        raise GuardTripped(f"lambda={lam} is not above lambda_c={lc}")
    rows = []
    for k, n in enumerate(spec.n_grid):
        sums, _ = _simulate(spec, k, int(n), lam)
        _check_budget(sums)
        alive = sum(s.final_alive for s in sums)
        rows.append({"n": int(n), "reps": spec.reps, "alive": alive,
                     "fraction_alive_at_t_max": alive / spec.reps})
    return ExperimentResult(spec, rows, list(rows[0]), {"lambda": lam, "lambda_c": lc,
                                                        "t_max": float(spec.t_max)})


def _require_supercritical(spec, lam):
    lc = lambda_c(spec.law_obj)
    if not lam > lc:
        raise GuardTripped(f"lambda={lam} is not above lambda_c={lc}")
    if not isinstance(spec.law_obj, DiscreteLaw):
        raise SchemaError("per-type comparisons need a discrete law")
    return lc


def profile_accuracy(spec: ExperimentSpec) -> ExperimentResult:
    """Per-type infected fractions among surviving replicas versus the mean-field profile.

    Replicas count at a snapshot time iff they are alive at that time.
    """
    lam = spec.lambda_value
    lc = _require_supercritical(spec, lam)
    W = spec.law_obj.W
    prof = profile(spec.law_obj, lam)(W)
    times = sorted(float(t) for t in spec.t_grid)
    rows = []
    max_err = {}
    freq = {}
    for k, n in enumerate(spec.n_grid):
        sums, N = _simulate(spec, k, int(n), lam, snaps=times, t_max=times[-1])
        _check_budget(sums)
        rep = frequencies_from(sums, times, int(n), N)
        for ti, t in enumerate(times):
            for i in range(len(W)):
                emp = float(rep.per_type_cond[ti, i])
                err = float(abs(emp - prof[i]))
                rows.append({"n": int(n), "t": t, "type": i + 1, "weight": float(W[i]),
                             "alive": int(rep.alive[ti]), "empirical_freq": emp,
                             "meanfield_p": float(prof[i]), "abs_error": err})
                max_err[(n, t)] = max(max_err.get((n, t), 0.0), err)
                freq.setdefault((n, i), []).append(emp)
    errs = list(max_err.values())
    spread = max(max(e for (m, _), e in max_err.items() if m == n) -
                 min(e for (m, _), e in max_err.items() if m == n) for n in spec.n_grid)
    summary = {"lambda": lam, "lambda_c": lc, "max_abs_error": float(max(errs)),
               "error_spread_over_t": float(spread),
               "freq_spread_over_t": float(max(max(v) - min(v) for v in freq.values()))}
    return ExperimentResult(spec, rows, list(rows[0]), summary)


def rho_curve(spec: ExperimentSpec) -> ExperimentResult:
    """Mean infected fraction at t_max among survivors versus the mean-field rho."""
    lc = lambda_c(spec.law_obj)
    grid = sorted(float(x) for x in spec.lambda_grid)
    if any(not x > lc for x in grid):
        raise GuardTripped(f"every lambda must exceed lambda_c={lc}")
    rows = []
    k = 0
    for n in spec.n_grid:
        for lam in grid:
            sums, _ = _simulate(spec, k, int(n), lam, snaps=(float(spec.t_max),))
            k += 1
            _check_budget(sums)
            fr = np.array([s.counts[0] / n for s in sums if s.counts[0] > 0])
            rows.append({"n": int(n), "lambda": lam, "rho_meanfield": rho(spec.law_obj, lam),
                         "rho_empirical": float(fr.mean()) if len(fr) else math.nan,
                         "std_error": float(fr.std(ddof=1) / math.sqrt(len(fr))) if len(fr) > 1 else math.nan,
                         "alive": len(fr)})
    return ExperimentResult(spec, rows, list(rows[0]), {"lambda_c": lc, "t_max": float(spec.t_max)})


@dataclass
class ExponentFit:
    report: AsymptoticReport
    exponent: float
    theory: float
    r_squared: float
    constant: Optional[float] = None
    theory_constant: Optional[float] = None


def exponent_fit(alpha: float, law: Optional[WeightLaw] = None, delta_grid=(),
                 log_corrected: bool = False) -> ExponentFit:
    """Fit the near-critical power law of sigma(lambda_c + delta).

    The regressed variables depend on the tail regime:

    * alpha in (2,3) or (3,4): log sigma on log delta, theory 1/|3 - alpha|;
    * alpha = 3: log(-log sigma) on log delta, theory -1 (sigma ~ exp(-1/(2 C delta)));
    * alpha = 4: log sigma on log(delta / log(1/delta)), theory 1;
    * alpha > 4: log sigma on log delta, theory 1, plus the constant sigma/delta
      against 1/(lambda_c^2 E[w^3]) at the smallest delta.
    """
    law = ParetoLaw(alpha) if law is None else law
    if not isinstance(law, ParetoLaw) or law.alpha != alpha:
        raise SchemaError("exponent_fit needs the Pareto law with the given alpha")
    deltas = np.asarray(sorted(float(d) for d in delta_grid))
    if len(deltas) < 2:
        raise InvariantError("need at least two deltas")
    rep = asymptotic_report(law, deltas, log_corrected=log_corrected)
    s = np.asarray(rep.sigma_numeric)
    r = regime(alpha)
    x, y = np.log(deltas), np.log(s)
    if r == "3":
        y = np.log(-np.log(s))
        theory = -1.0
    elif r == "4":
        x = np.log(deltas / np.log(1.0 / deltas))
        theory = 1.0
    elif r == "(4,inf)":
        theory = 1.0
    else:
        theory = 1.0 / abs(3.0 - alpha)
    slope, _, r2 = _linfit(x, y)
    fit = ExponentFit(rep, slope, theory, r2)
    if r == "(4,inf)":
        fit.constant = float(s[0] / deltas[0])
        fit.theory_constant = 1.0 / (lambda_c(law) ** 2 * moment(law, 3))
    return fit


def _exponent_experiment(spec: ExperimentSpec) -> ExperimentResult:
    law = spec.law_obj
    if not isinstance(law, ParetoLaw):
        raise SchemaError("exponent_fit needs a Pareto law")
    fit = exponent_fit(law.alpha, law, spec.delta_grid, spec.log_corrected)
    rows = fit.report.records()
    summary = {"regime": fit.report.regime, "fitted_exponent": fit.exponent,
               "theory_exponent": fit.theory, "r_squared": fit.r_squared}
    if fit.constant is not None:
        summary["fitted_constant"] = fit.constant
        summary["theory_constant"] = fit.theory_constant
    return ExperimentResult(spec, rows, list(rows[0]), summary)


_RUNNERS = {"extinction_scaling": extinction_scaling, "survival_persistence": survival_persistence,
            "profile_accuracy": profile_accuracy, "rho_curve": rho_curve,
            "exponent_fit": _exponent_experiment}


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentResult:
    res = _RUNNERS[spec.kind](spec)
    if write and spec.output is not None:
        res.write()
    return res
