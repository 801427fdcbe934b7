"""Multi-type birth-death chain for finite-support weight laws.

With weights in {W_1, ..., W_m} all vertices of a type are exchangeable, so
the contact process reduces to the vector X of infected counts per type.
Coordinate i jumps up at rate ``(N_i - X_i) * S * lam * W_i / n`` with
``S = sum_j X_j W_j`` and down at rate ``X_i``.  Each event is an O(m) scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numba as nb
import numpy as np

from .errors import Extinct
from .kernel_full import RunSummary
from .meanfield import ratio_moment
from .parallel import map_replicas
from .rng import derive_seed, make_rng
from .weights import DiscreteLaw

RESUM_EVERY = 1 << 20


@nb.njit(cache=True, nogil=True)
def _rates(X, N, W, lam, n, S, q_up, q_down):
    total = 0.0
    for i in range(X.shape[0]):
        q_up[i] = (N[i] - X[i]) * S * lam * W[i] / n
        q_down[i] = X[i]
        total += q_up[i] + q_down[i]
    return total


@nb.njit(cache=True, nogil=True)
def _pick(rng, total, q_up, q_down):
    """Returns (type, +1/-1) chosen proportionally to the rates."""
    m = q_up.shape[0]
    u = rng.random() * total
    last_i, last_d = -1, 0
    for i in range(m):
        if q_down[i] > 0.0:
            last_i, last_d = i, -1
            if u < q_down[i]:
                return i, -1
            u -= q_down[i]
        if q_up[i] > 0.0:
            last_i, last_d = i, 1
            if u < q_up[i]:
                return i, 1
            u -= q_up[i]
    # rounding left u at the top of the range: take the last positive rate
    return last_i, last_d


@nb.njit(cache=True, nogil=True)
def _typed_step(rng, X, N, W, lam, n, state, q_up, q_down):
    """state = [S, clock, events_since_resum]; returns (dt, type, delta)."""
    if state[2] >= RESUM_EVERY:
        s = 0.0
        for k in range(X.shape[0]):
            s += X[k] * W[k]
        state[0] = s
        state[2] = 0
    total = _rates(X, N, W, lam, n, state[0], q_up, q_down)
    dt = -math.log(1.0 - rng.random()) / total
    i, d = _pick(rng, total, q_up, q_down)
    X[i] += d
    state[0] += d * W[i]
    state[1] += dt
    state[2] += 1
    return dt, i, d


@nb.njit(cache=True, nogil=True)
def _typed_run(rng, X0, N, W, lam, n, t_max, snap_times, max_events):
    m = X0.shape[0]
    X = X0.copy()
    q_up = np.zeros(m)
    q_down = np.zeros(m)
    state = np.zeros(3)
    for k in range(m):
        state[0] += X[k] * W[k]
    alive = 0
    for k in range(m):
        alive += X[k]
    S_n = snap_times.shape[0]
    snaps = np.zeros((S_n, m), np.int64)
    si = 0
    events = 0
    ext_time = -1.0
    budget = False
    while True:
        if alive == 0:
            ext_time = state[1]
            break
        if events >= max_events:
            budget = True
            break
        if state[2] >= RESUM_EVERY:
            s = 0.0
            for k in range(m):
                s += X[k] * W[k]
            state[0] = s
            state[2] = 0
        total = _rates(X, N, W, lam, n, state[0], q_up, q_down)
        t_new = state[1] - math.log(1.0 - rng.random()) / total
        while si < S_n and snap_times[si] < t_new:
            snaps[si, :] = X
            si += 1
        if t_new > t_max:
            state[1] = t_max
            break
        i, d = _pick(rng, total, q_up, q_down)
        X[i] += d
        alive += d
        state[0] += d * W[i]
        state[1] = t_new
        state[2] += 1
        events += 1
    while si < S_n:
        if budget:
            snaps[si, :] = -1
        else:
            snaps[si, :] = X
        si += 1
    return ext_time, events, snaps, alive > 0, budget


# ---------------------------------------------------------------------------

def type_counts(law: DiscreteLaw, n: int, seed: int, exact: bool = False) -> np.ndarray:
    """Per-type vertex totals N_i.

    ``exact=False`` draws them multinomially, as i.i.d. weights would.
    ``exact=True`` rounds p_i n by largest remainder so the totals sum to n.
    """
    if n < law.m:
        raise ValueError("need n >= number of types")
    if not exact:
        return make_rng(seed).multinomial(n, law.p).astype(np.int64)
    raw = law.p * n
    N = np.floor(raw).astype(np.int64)
    short = n - int(N.sum())
    order = np.argsort(-(raw - N), kind="stable")
    N[order[:short]] += 1
    return N


def initial_counts(N: np.ndarray, init) -> np.ndarray:
    """"all", a fraction in (0, 1] of every type, or an explicit count vector."""
    N = np.asarray(N, np.int64)
    if isinstance(init, str):
        if init.lower() != "all":
            raise ValueError(f"unknown init {init!r}")
        return N.copy()
    if np.isscalar(init):
        f = float(init)
        if not 0 < f <= 1:
            raise ValueError("initial fraction must lie in (0, 1]")
        X = np.rint(f * N).astype(np.int64)
        if X.sum() == 0:
            X[np.argmax(N)] = 1
        return X
    X = np.asarray(init, np.int64)
    if X.shape != N.shape or np.any(X < 0) or np.any(X > N):
        raise ValueError("initial counts must satisfy 0 <= X_i <= N_i")
    return X


class TypedState:
    """Infected counts per type with the cached weighted sum S."""

    def __init__(self, W, N, lam: float, X=None):
        self.W = np.asarray(W, dtype=float)
        self.N = np.asarray(N, np.int64)
        self.lam = float(lam)
        self.X = self.N.copy() if X is None else np.array(X, np.int64)
        if np.any(self.X < 0) or np.any(self.X > self.N):
            raise ValueError("need 0 <= X_i <= N_i")
        self._state = np.array([float(np.dot(self.X, self.W)), 0.0, 0.0])
        self._q_up = np.zeros(len(self.W))
        self._q_down = np.zeros(len(self.W))

    @property
    def n(self) -> int:
        return int(self.N.sum())

    @property
    def m(self) -> int:
        return len(self.W)

    @property
    def S(self) -> float:
        return float(self._state[0])

    @property
    def clock(self) -> float:
        return float(self._state[1])

    def rates(self):
        """(q_plus, q_minus) per type."""
        _rates(self.X, self.N, self.W, self.lam, self.n, self._state[0], self._q_up, self._q_down)
        return self._q_up.copy(), self._q_down.copy()

    def step(self, rng):
        if self.X.sum() == 0:
            raise Extinct("no infected vertex left")
        dt, i, d = _typed_step(rng, self.X, self.N, self.W, self.lam, self.n, self._state,
                               self._q_up, self._q_down)
        return dt, int(i), int(d)


@dataclass
class TypedConfig:
    law: DiscreteLaw
    lam: float
    N: np.ndarray
    init: Union[str, float, Sequence[int]] = "all"
    t_max: float = 10.0
    snapshot_times: Sequence[float] = ()
    max_events: int = 10 ** 12
    seed: int = 0

    @classmethod
    def from_law(cls, law: DiscreteLaw, lam: float, n: int, seed: int = 0,
                 exact_counts: bool = False, **kw) -> "TypedConfig":
        # the weight draw uses its own derived stream so replica seeds stay free
        N = type_counts(law, n, derive_seed(seed, -1) if not exact_counts else 0, exact_counts)
        return cls(law=law, lam=lam, N=N, seed=seed, **kw)

    def __post_init__(self):
        self.N = np.asarray(self.N, np.int64)
        if len(self.N) != self.law.m:
            raise ValueError("N must have one entry per type")
        snaps = np.asarray(self.snapshot_times, dtype=float)
        if np.any(np.diff(snaps) < 0) or np.any(snaps < 0) or np.any(snaps > self.t_max):
            raise ValueError("snapshot times must be sorted and lie in [0, t_max]")

    @property
    def n(self) -> int:
        return int(self.N.sum())


def typed_run(config: TypedConfig, seed: Optional[int] = None) -> RunSummary:
    rng = make_rng(config.seed if seed is None else seed)
    snaps = np.asarray(config.snapshot_times, dtype=float)
    X0 = initial_counts(config.N, config.init)
    ext, events, types, alive, budget = _typed_run(
        rng, X0, config.N, config.law.W, float(config.lam), float(config.n),
        float(config.t_max), snaps, int(config.max_events))
    counts = np.where(types[:, 0] < 0, -1, types.sum(axis=1))
    return RunSummary(
        extinction_time=None if ext < 0 else float(ext), events=int(events),
        snapshot_times=snaps, counts=counts, type_counts=types,
        final_alive=bool(alive), budget_exceeded=bool(budget), type_totals=config.N.copy())


def typed_replicas(config: TypedConfig, reps: int, workers: int = 1, start: int = 0):
    return map_replicas(lambda r: typed_run(config, derive_seed(config.seed, r)),
                        range(start, start + reps), workers)


@dataclass
class RegionSpec:
    eta: float
    eps: float

    def __post_init__(self):
        if not 0 < self.eta <= self.eps:
            raise ValueError("region needs 0 < eta <= eps")


@dataclass
class DriftReport:
    Delta: float
    theta_plus: np.ndarray
    theta_minus: np.ndarray

    @property
    def positive(self) -> bool:
        return self.Delta > 0


def drift_check(law: DiscreteLaw, lam: float, region: RegionSpec) -> DriftReport:
    """Limiting per-type rate bounds (divided by n) on the region between eta and eps.

    ``theta_plus = (1 + Delta) * theta_minus`` so Delta > 0 certifies that
    every coordinate drifts upward there.
    """
    W, p = law.W, law.p
    eta, eps = region.eta, region.eps
    inner = float(np.sum(p * eta * W ** 2 / (1.0 + eta * W)))
    theta_minus = p * eps * W / (1.0 + eps * W)
    theta_plus = lam * p * W / (1.0 + eps * W) * inner
    delta = lam * eta / eps * ratio_moment(law, 2, eta) - 1.0
    return DriftReport(delta, theta_plus, theta_minus)
