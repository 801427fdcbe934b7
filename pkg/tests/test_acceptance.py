"""Acceptance gate: the fourteen criteria at their stated tolerances.

Each test records (passed, detail) for its criterion; the conftest hook prints
one PASS/FAIL line per criterion at the end of the run.  Run alone with
``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE
from wcp import branching, experiments as ex, kernel_full, kernel_typed, meanfield as mf, oracle
from wcp.weights import DiscreteLaw, ParetoLaw, WeightSample, moment, point_mass, sample

D12 = DiscreteLaw((1, 2), (0.5, 0.5))
D12_TEXT = "discrete:W=1,2;p=0.5,0.5"


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def test_c01_meanfield_exactness():
    errs = [abs(mf.sigma(point_mass(), lam) - (lam - 1)) for lam in (1.1, 2.0, 5.0)]
    e2 = abs(mf.sigma(D12, 1.0) - math.sqrt(0.75))
    record(1, max(errs) <= 1e-12 and e2 <= 1e-10,
           f"point-mass max err {max(errs):.2e} (<=1e-12), W=(1,2) err {e2:.2e} (<=1e-10)")


def test_c02_lambda_c_table():
    laws = [point_mass(), D12, DiscreteLaw((1, 3), (0.8, 0.2)), ParetoLaw(2.5), ParetoLaw(3.0),
            ParetoLaw(3.5), ParetoLaw(5.0, 2.0)]
    bad = []
    for law in laws:
        m2 = moment(law, 2)
        want = 0.0 if math.isinf(m2) else 1.0 / m2
        if mf.lambda_c(law) != want:
            bad.append(law)
    zeros = [mf.lambda_c(ParetoLaw(a)) for a in (2.5, 3.0)]
    record(2, not bad and zeros == [0.0, 0.0],
           f"{len(laws)} laws match 1/E[w^2] exactly; Pareto 2.5 and 3 give {zeros}")


def test_c03_critical_exponents():
    f25 = ex.exponent_fit(2.5, delta_grid=np.logspace(-4, -2, 9))
    f35 = ex.exponent_fit(3.5, delta_grid=np.logspace(-3, -1.5, 9))
    const = mf.asymptotic_report(ParetoLaw(5.0), [1e-4]).ratios[0]
    p3 = ParetoLaw(3.0)
    d = 0.02
    a3 = math.log(mf.sigma(p3, d)) * 2 * p3.tail_constant * d
    a4 = mf.asymptotic_report(ParetoLaw(4.0), [1e-3], log_corrected=True).ratios[0]
    checks = {
        "alpha=2.5": (f25.exponent, abs(f25.exponent / 2.0 - 1) <= 0.05),
        "alpha=3.5": (f35.exponent, abs(f35.exponent / 2.0 - 1) <= 0.05),
        "alpha=5 const": (const, abs(const - 1) <= 0.02),
        "alpha=3": (a3, abs(a3 + 1) <= 0.1),
        "alpha=4 ratio": (a4, abs(a4 - 1) <= 0.1),
    }
    detail = ", ".join(f"{k} {v:.4f}" for k, (v, _) in checks.items())
    record(3, all(ok for _, ok in checks.values()), detail)


def test_c04_mellin_constant():
    v = mf.mellin_check(2.5)
    record(4, abs(v - math.pi) <= 1e-8, f"mellin_check(2.5) - pi = {v - math.pi:.2e}")


def _oracle_cases():
    vec = {2: [0.5, 2.0], 6: [0.4, 0.8, 1.2, 1.6, 2.4, 3.0],
           10: [0.3, 0.5, 0.7, 0.9, 1.1, 1.4, 1.8, 2.2, 2.7, 3.5]}
    for n, w in vec.items():
        for lam in (0.5, 2.0):
            yield n, np.array(w), lam


def test_c05_oracle_equivalence():
    reps, times = 10 ** 5, (1.0, 5.0)
    worst, fails, total = 0.0, [], 0
    for n, w, lam in _oracle_cases():
        cfg = kernel_full.SimConfig(lam=lam, sample=WeightSample.from_weights(w),
                                    t_max=times[-1], snapshot_times=times, seed=1000 + 10 * n + int(lam),
                                    record_bitmaps=True)
        sums = kernel_full.run_replicas(cfg, reps)
        bm = np.stack([s.bitmaps for s in sums]).astype(bool)      # reps x times x n
        Q = oracle.generator(w, lam)
        for k, t in enumerate(times):
            ex_ = oracle.exact_marginals(w, lam, t, Q=Q)
            pairs = [("survival", ex_.survival, bm[:, k].any(axis=1).mean())]
            pairs += [(f"v{i}", ex_.marginals[i], bm[:, k, i].mean()) for i in range(n)]
            for name, p, phat in pairs:
                total += 1
                se = math.sqrt(p * (1 - p) / reps)
                z = abs(phat - p) / se if se > 0 else (0.0 if phat == p else math.inf)
                worst = max(worst, z)
                if z > 3:
                    fails.append(f"n={n} lam={lam} t={t} {name} z={z:.2f}")
    record(5, not fails,
           f"{total - len(fails)}/{total} comparisons within 3 s.e. (max |z| {worst:.2f})"
           + (f"; outside: {'; '.join(fails)}" if fails else ""))


def test_c06_self_duality():
    rng = np.random.default_rng(6)
    vecs = [rng.uniform(0.3, 3.0, n) for n in (2, 4, 6, 8, 10)]
    gaps = [oracle.duality_gap(w, 1.5, 2.0) for w in vecs]
    # Monte Carlo side: survival from {i} against the exact all-start marginal
    w, lam, t, reps = vecs[2], 1.5, 2.0, 20000
    full = oracle.exact_marginals(w, lam, t).marginals
    zs = []
    for i in range(len(w)):
        cfg = kernel_full.SimConfig(lam=lam, sample=WeightSample.from_weights(w), init=[i],
                                    t_max=t, seed=600 + i)
        est = kernel_full.survival_probability(cfg, reps)
        zs.append(abs(est.estimate - full[i]) / math.sqrt(full[i] * (1 - full[i]) / reps))
    record(6, max(gaps) <= 1e-9 and max(zs) <= 4,
           f"max exact gap {max(gaps):.2e} (<=1e-9); Monte Carlo max |z| {max(zs):.2f} (<=4)")


def test_c07_monotonicity():
    rng = np.random.default_rng(7)
    gaps = []
    for k in range(10):
        n = int(rng.integers(2, 11))
        lo = rng.uniform(0.2, 2.0, n)
        hi = lo + rng.uniform(0.0, 1.5, n)
        gaps.append(oracle.monotonicity_gap(lo, hi, float(rng.uniform(0.3, 3.0)),
                                            float(rng.uniform(0.5, 5.0))))
    record(7, min(gaps) >= -1e-9, f"min gap over 10 ordered pairs {min(gaps):.3e} (>=-1e-9)")


def test_c08_cross_kernel():
    n, lam, t, reps = 200, 1.0, 20.0, 2000
    ws = sample(D12, n, 88)
    full = kernel_full.run_replicas(
        kernel_full.SimConfig(lam=lam, sample=ws, t_max=t, snapshot_times=[t], seed=81), reps)
    typed = kernel_typed.typed_replicas(
        kernel_typed.TypedConfig(law=D12, lam=lam, N=ws.counts, t_max=t, snapshot_times=[t],
                                 seed=82), reps)
    a = [s.counts[0] for s in full]
    b = [s.counts[0] for s in typed]
    p = stats.ks_2samp(a, b).pvalue
    record(8, p > 0.001, f"KS p = {p:.4f} (>0.001); means {np.mean(a):.2f} vs {np.mean(b):.2f}")


def test_c09_desk_scale_regimes():
    sub = ex.run_experiment(ex.ExperimentSpec(
        name="c9-sub", kind="extinction_scaling", law=D12_TEXT, lam_factor=0.5,
        n_grid=[1000, 10000, 100000], reps=100, kernel="typed", seed=9), write=False)
    sup = ex.run_experiment(ex.ExperimentSpec(
        name="c9-sup", kind="survival_persistence", law=D12_TEXT, lam_factor=2.0, n_grid=[500],
        reps=100, t_max=1000.0, kernel="typed", seed=9), write=False)
    alive = sup.rows[0]["alive"]
    r2 = sub.summary["r_squared"]
    record(9, sub.summary["all_extinct"] and r2 >= 0.95 and alive == 100,
           f"subcritical all extinct={sub.summary['all_extinct']}, R^2 {r2:.5f} (>=0.95); "
           f"supercritical {alive}/100 alive at t=1000")


def test_c10_profile():
    res = ex.run_experiment(ex.ExperimentSpec(
        name="c10", kind="profile_accuracy", law=D12_TEXT, lam=1.0, n_grid=[2000],
        t_grid=[25, 50, 100], reps=200, kernel="typed", exact_counts=True, seed=10), write=False)
    target = {1: 0.46410, 2: 0.63397}
    err = max(abs(r["empirical_freq"] - target[r["type"]]) for r in res.rows)
    spread = res.summary["freq_spread_over_t"]
    record(10, err <= 0.02 and spread <= 0.01,
           f"max |freq - (0.46410, 0.63397)| {err:.4f} (<=0.02), spread over t {spread:.4f} (<=0.01)")


def test_c11_branching_spectra():
    rng = np.random.default_rng(11)
    ident, slack = 0.0, -math.inf
    for k in range(20):
        n = int(rng.integers(5, 200))
        ws = WeightSample.from_weights(rng.uniform(0.2, 3.0, n))
        lam = 1.5 * n / ws.sum_w2 + float(rng.uniform(0.0, 2.0))
        rho = branching.extinction_probs(ws, lam)
        ident = max(ident, abs(lam / n * np.sum(ws.w ** 2 * rho) - 1))
        rep = branching.spectral_report(ws, lam)
        slack = max(slack, rep.top_eig_conditioned_numeric - rep.top_eig_bound_conditioned)
    ws = WeightSample.from_weights(np.ones(100))
    reps = 10 ** 5
    target = 1 - branching.extinction_probs(ws, 2.0)[0]
    est = branching.mtbp_survival(ws, 2.0, 0, 1e6, reps, seed=111, max_population=500)
    z = abs(est.estimate - target) / math.sqrt(target * (1 - target) / reps)
    record(11, ident <= 1e-9 and slack <= 1e-8 and z <= 3,
           f"identity err {ident:.2e} (<=1e-9); eig - bound max {slack:.3e} (<=1e-8); "
           f"MTBP survival {est.estimate:.4f} vs {target:.4f}, |z| {z:.2f} (<=3)")


def test_c12_diag_eig_property():
    trials = branching.diag_eig_trials(8, 200, seed=12)
    passed = sum(t.passed for t in trials)
    record(12, passed == 200, f"{passed}/200 trials")


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_c13_performance():
    law = ParetoLaw(3.5)
    # compile both kernels on small inputs first
    kernel_full.run(kernel_full.SimConfig(lam=1.0, sample=sample(law, 100, 1), max_events=1000))
    kernel_typed.typed_run(kernel_typed.TypedConfig(law=D12, lam=1.0, N=[50, 50], max_events=1000))
    ws = sample(law, 10 ** 6, 13)
    full, tf = _timed(lambda: kernel_full.run(kernel_full.SimConfig(
        lam=1.0, sample=ws, t_max=1e9, max_events=10 ** 6)))
    typed, tt = _timed(lambda: kernel_typed.typed_run(kernel_typed.TypedConfig(
        law=D12, lam=1.0, N=[5 * 10 ** 7, 5 * 10 ** 7], t_max=1e9, max_events=10 ** 7)))
    ok = full.events >= 10 ** 6 and tf <= 10 and typed.events >= 10 ** 7 and tt <= 10
    record(13, ok, f"full: {full.events} events at n=1e6 in {tf:.2f} s; "
                   f"typed: {typed.events} events at n=1e8 in {tt:.2f} s (each <=10 s)")


SPECS = [
    {"name": "d-prof", "kind": "profile_accuracy", "law": D12_TEXT, "lam": 1.0,
     "n_grid": [100, 150], "t_grid": [2, 5], "reps": 24, "kernel": "full", "seed": 14},
    {"name": "d-ext", "kind": "extinction_scaling", "law": D12_TEXT, "lam_factor": 0.5,
     "n_grid": [100, 1000], "reps": 30, "kernel": "typed", "seed": 15},
    {"name": "d-rho", "kind": "rho_curve", "law": D12_TEXT, "lambda_grid": [0.8, 1.2],
     "n_grid": [200], "reps": 16, "t_max": 10.0, "kernel": "full", "seed": 16},
]


def test_c14_determinism(tmp_path):
    import json
    identical = []
    for spec in SPECS:
        path = tmp_path / f"{spec['name']}.json"
        path.write_text(json.dumps(spec))
        outs = []
        for workers in ("1", "1", "3"):
            out = tmp_path / f"{spec['name']}-{len(outs)}.csv"
            r = subprocess.run([sys.executable, "-m", "wcp", "exp", "run", str(path),
                                "--workers", workers, "--output", str(out)],
                               capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            outs.append(out.read_bytes())
        identical.append(len(set(outs)) == 1)
    record(14, all(identical), f"{sum(identical)}/{len(SPECS)} specs byte-identical across "
                               "repeat runs and worker counts 1 and 3")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
