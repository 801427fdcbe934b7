import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcp import oracle
from wcp._fenwick import fw_prefix
from wcp.errors import Extinct
from wcp.kernel_full import (RECOVERY, FullState, SimConfig, infection_frequency, run,
                             run_replicas, survival_probability)
from wcp.rng import make_rng
from wcp.weights import DiscreteLaw, WeightSample, sample

ws = WeightSample.from_weights


def check_state(st_: FullState):
    w = st_.w
    inf = st_.infected.astype(bool)
    assert st_.count_infected == int(inf.sum())
    assert st_.W_inf == pytest.approx(w[inf].sum(), rel=1e-9, abs=1e-9)
    assert st_.W_inf + st_.W_heal == pytest.approx(w.sum(), rel=1e-9)
    assert fw_prefix(st_.tree_inf, st_.n) == pytest.approx(st_.W_inf, rel=1e-9, abs=1e-9)
    assert fw_prefix(st_.tree_heal, st_.n) == pytest.approx(st_.W_heal, rel=1e-9, abs=1e-9)
    listed = st_.inf_list[:st_.count_infected]
    assert sorted(listed) == list(np.flatnonzero(inf))
    assert np.all(st_.inf_pos[listed] == np.arange(st_.count_infected))


class TestStep:
    def test_rate_example(self):
        s = FullState(ws([1, 1, 2, 2]), init=[0, 2])
        R, I = s.rates(1.0)
        assert R == 2 and I == pytest.approx(2.25)

    def test_single_vertex_only_recovers(self):
        s = FullState(ws([1.0]), init="all")
        assert s.rates(3.0)[1] == 0
        ev = s.step(3.0, make_rng(0))
        assert ev.kind == RECOVERY and s.count_infected == 0
        with pytest.raises(Extinct):
            s.step(3.0, make_rng(0))

    def test_zero_weight_never_infected(self):
        w = np.array([0.0, 1.0, 2.0, 0.0, 3.0])
        s = FullState(ws(w), init=[4])
        rng = make_rng(5)
        for _ in range(20_000):
            if s.count_infected == 0:
                s = FullState(ws(w), init=[4])
            s.step(5.0, rng)
            assert not s.infected[0] and not s.infected[3]

    @settings(max_examples=25)
    @given(st.lists(st.floats(0, 5), min_size=1, max_size=40), st.integers(0, 2 ** 63),
           st.floats(0, 10))
    def test_invariants_hold_along_trajectory(self, w, seed, lam):
        s = FullState(ws(w), init="all")
        rng = make_rng(seed)
        for _ in range(300):
            if s.count_infected == 0:
                break
            s.step(lam, rng)
            check_state(s)

    def test_infection_target_proportional_to_weight(self):
        w = np.array([1.0, 1.0, 2.0, 4.0])
        counts = np.zeros(4)
        rng = make_rng(1)
        for _ in range(40_000):
            s = FullState(ws(w), init=[0])
            ev = s.step(100.0, rng)
            if ev.kind != RECOVERY:
                counts[ev.vertex] += 1
        p = counts[1:] / counts[1:].sum()
        assert p == pytest.approx([1 / 7, 2 / 7, 4 / 7], abs=0.01)

    def test_rebuild_drift_is_tiny(self):
        smp = sample(DiscreteLaw((0.1, 1.7, 9.3), (0.3, 0.4, 0.3)), 2000, 3)
        s = FullState(smp)
        rng = make_rng(2)
        for _ in range(200_000):
            if s.count_infected == 0:
                break
            s.step(2.0, rng)
        before = s.W_inf, s.W_heal
        s.rebuild()
        assert before[0] == pytest.approx(s.W_inf, rel=1e-6)
        assert before[1] == pytest.approx(s.W_heal, rel=1e-6)


class TestRun:
    def test_lambda_zero_harmonic(self):
        cfg = SimConfig(lam=0.0, sample=ws(np.ones(1000)), t_max=1e3, seed=4)
        times = [r.extinction_time for r in run_replicas(cfg, 200)]
        H = np.sum(1 / np.arange(1, 1001))
        assert np.mean(times) == pytest.approx(H, rel=0.1)

    def test_single_vertex_survival(self):
        cfg = SimConfig(lam=1.0, sample=ws([1.0]), init=0, t_max=1.0, seed=8)
        est = survival_probability(cfg, 20_000)
        assert abs(est.estimate - math.exp(-1)) < 3 * est.std_error

    def test_reps_one(self):
        est = survival_probability(SimConfig(lam=1.0, sample=ws([1.0]), t_max=1.0), 1)
        assert est.estimate in (0.0, 1.0) and est.std_error is None

    def test_pure_death_long_horizon(self):
        cfg = SimConfig(lam=0.0, sample=ws(np.ones(5)), init=2, t_max=10.0, seed=1)
        est = survival_probability(cfg, 2000)
        assert est.estimate <= 3 * math.sqrt(math.exp(-10) / 2000) + 1e-12

    def test_extinction_before_t_max_and_snapshots_zero(self):
        cfg = SimConfig(lam=0.0, sample=ws(np.ones(3)), t_max=100.0, snapshot_times=[50, 100], seed=3)
        r = run(cfg)
        assert r.extinction_time is not None and r.extinction_time <= 100
        assert list(r.counts) == [0, 0] and not r.final_alive

    def test_budget_is_flagged(self):
        cfg = SimConfig(lam=2.0, sample=ws(np.ones(50)), t_max=100.0, snapshot_times=[99],
                        max_events=10)
        r = run(cfg)
        assert r.budget_exceeded and r.events == 10 and r.counts[0] == -1

    def test_determinism_and_worker_independence(self):
        cfg = SimConfig(lam=1.5, sample=sample(DiscreteLaw((1, 2), (0.5, 0.5)), 100, 1),
                        t_max=5.0, snapshot_times=[1, 2.5, 5], seed=77)
        a = run_replicas(cfg, 16, workers=1)
        b = run_replicas(cfg, 16, workers=4)
        for x, y in zip(a, b):
            assert x.record(0) == y.record(0)
            assert np.array_equal(x.type_counts, y.type_counts)

    def test_branching_survival(self):
        # single seed at lam = 2 survives with probability about 1 - 1/lam
        cfg = SimConfig(lam=2.0, sample=ws(np.ones(2000)), init=0, t_max=50.0, seed=21)
        est = survival_probability(cfg, 2000)
        assert abs(est.estimate - 0.5) <= 0.02


class TestFrequencies:
    def test_pure_death_marginals(self):
        cfg = SimConfig(lam=0.0, sample=ws(np.ones(20)), t_max=2.0, snapshot_times=[0.5, 2.0], seed=2)
        rep = infection_frequency(cfg, 4000)
        for k, t in enumerate((0.5, 2.0)):
            se = math.sqrt(math.exp(-t) * (1 - math.exp(-t)) / 4000)
            assert np.all(np.abs(rep.per_vertex[k] - math.exp(-t)) < 4.5 * se)

    def test_frequencies_after_extinction(self):
        cfg = SimConfig(lam=0.0, sample=ws(np.ones(3)), t_max=200.0, snapshot_times=[200.0], seed=2)
        rep = infection_frequency(cfg, 200)
        assert np.all(rep.per_vertex == 0) and rep.alive[0] == 0

    def test_matches_oracle_small(self):
        w = np.array([0.5, 1.0, 1.5, 3.0])
        cfg = SimConfig(lam=2.0, sample=ws(w), t_max=1.0, snapshot_times=[1.0], seed=9)
        reps = 20_000
        rep = infection_frequency(cfg, reps)
        ex = oracle.exact_marginals(w, 2.0, 1.0)
        se = np.sqrt(ex.marginals * (1 - ex.marginals) / reps)
        assert np.all(np.abs(rep.per_vertex[0] - ex.marginals) < 4 * se)
        se_s = math.sqrt(ex.survival * (1 - ex.survival) / reps)
        assert abs(rep.alive[0] / reps - ex.survival) < 4 * se_s

    def test_duality_monte_carlo(self):
        w = np.array([0.5, 1.0, 2.0, 2.5, 1.0, 0.8])
        lam, t, reps = 1.5, 2.0, 20_000
        full = infection_frequency(SimConfig(lam=lam, sample=ws(w), t_max=t, snapshot_times=[t], seed=1), reps)
        for i in range(len(w)):
            est = survival_probability(SimConfig(lam=lam, sample=ws(w), init=i, t_max=t, seed=100 + i), reps)
            p = full.per_vertex[0, i]
            se = math.sqrt(est.std_error ** 2 + p * (1 - p) / reps)
            assert abs(est.estimate - p) < 4 * se
