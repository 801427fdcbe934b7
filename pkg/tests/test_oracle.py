import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from wcp import oracle
from wcp.errors import DomainMismatch, TooLarge


def test_pure_death_single_vertex():
    r = oracle.exact_marginals(np.ones(1), 1.0, 1.0, [0])
    assert r.survival == pytest.approx(math.exp(-1), abs=1e-11)
    assert r.survival == pytest.approx(0.3678794, abs=1e-7)


def test_two_vertices_closed_form():
    r2 = math.sqrt(2)
    want = 0.5 * ((1 + r2) * math.exp(-2 + r2) + (1 - r2) * math.exp(-2 - r2))
    r = oracle.exact_marginals(np.ones(2), 2.0, 1.0, "all")
    assert r.survival == pytest.approx(want, abs=1e-11)
    assert r.survival == pytest.approx(0.6652, abs=1e-4)


def test_time_zero_is_initial_indicator():
    r = oracle.exact_marginals([1, 2, 3], 1.0, 0.0, [1])
    assert list(r.marginals) == [0, 1, 0] and r.survival == 1.0


def test_too_large():
    with pytest.raises(TooLarge):
        oracle.exact_marginals(np.ones(13), 1.0, 1.0)


@settings(max_examples=20)
@given(st.lists(st.floats(0, 3), min_size=1, max_size=5), st.floats(0, 4), st.floats(0, 3))
def test_against_dense_expm(w, lam, t):
    Q = oracle.generator(w, lam).toarray()
    assert np.allclose(Q.sum(axis=1), 0, atol=1e-12)
    p0 = np.zeros(len(Q))
    p0[-1] = 1
    want = p0 @ expm(Q * t)
    r = oracle.exact_marginals(w, lam, t)
    assert np.allclose(r.distribution, want, atol=1e-10)
    assert r.truncation_error_bound <= 1e-10


@settings(max_examples=20)
@given(st.lists(st.floats(0.1, 3), min_size=1, max_size=7), st.floats(0, 4), st.floats(0, 6))
def test_result_invariants(w, lam, t):
    r = oracle.exact_marginals(w, lam, t)
    assert abs(r.distribution.sum() - 1) <= 1e-12
    assert np.all((0 <= r.marginals) & (r.marginals <= 1))
    assert r.survival >= r.marginals.max() - 1e-12


def test_absorbing_mass_nondecreasing():
    w = [0.5, 1, 2, 3, 1.5]
    dead = [oracle.exact_marginals(w, 1.7, t).distribution[0] for t in np.linspace(0, 8, 17)]
    assert all(b >= a - 1e-13 for a, b in zip(dead, dead[1:]))


def test_semigroup():
    w = np.array([0.5, 1, 2, 3, 1.5, 0.7])
    Q = oracle.generator(w, 2.0)
    p0 = np.zeros(64)
    p0[63] = 1
    one, _ = oracle.transient(Q, p0, 3.0)
    half, _ = oracle.transient(Q, p0, 1.5)
    two, _ = oracle.transient(Q, half, 1.5)
    assert np.max(np.abs(oracle.marginals_of(one, 6) - oracle.marginals_of(two, 6))) <= 1e-9


def test_duality_examples():
    assert oracle.duality_gap([1.0], 2.0, 1.0) == pytest.approx(0, abs=1e-12)
    assert oracle.duality_gap([1, 1, 2, 2, 3, 3], 1.3, 2.0) <= 1e-9
    assert oracle.duality_gap([1, 2, 3], 0.0, 1.5) <= 1e-12


def test_monotonicity_examples():
    w = np.array([1, 2, 0.5, 3])
    assert oracle.monotonicity_gap(w, w, 1.3, 2.0) == 0
    assert oracle.monotonicity_gap(np.ones(4), 2 * np.ones(4), 1.0, 1.0) > 0
    assert oracle.monotonicity_gap(np.ones(4), 2 * np.ones(4), 0.0, 1.0) == 0


def test_monotonicity_domain():
    with pytest.raises(DomainMismatch):
        oracle.monotonicity_gap([1, 2], [1, 2, 3], 1, 1)
    with pytest.raises(DomainMismatch):
        oracle.monotonicity_gap([1, 2], [2, 1], 1, 1)


def test_record_shape():
    rec = oracle.exact_marginals([1, 2], 1.0, 1.0).as_record()
    assert set(rec) == {"n", "lambda", "t", "init", "marginals", "survival", "method",
                        "truncation_error_bound"}
