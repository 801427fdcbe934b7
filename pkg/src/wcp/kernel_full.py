"""Exact event-driven simulation of the weighted contact process on K_n.

Vertex j infects healthy vertex k at rate ``lam * w_j * w_k / n`` and every
infected vertex recovers at rate 1.  Summed over pairs, the total infection
rate factorizes as ``lam * W_inf * W_heal / n`` with ``W_inf``/``W_heal`` the
total weight of the infected/healthy sets, and the next infected vertex is a
healthy one chosen proportionally to its weight.  The state therefore keeps

* a Fenwick tree over infected weights and one over healthy weights,
* an unordered array of infected vertices (with back-pointers) for uniform
  recovery picks,

so each event costs O(log n).  Cached weight totals are rebuilt from scratch
every ``2**20`` events to bound floating-point drift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numba as nb
import numpy as np

from ._fenwick import fw_add, fw_build, fw_find, fw_top
from .errors import Extinct
from .parallel import map_replicas
from .rng import derive_seed, make_rng
from .weights import WeightSample

REBUILD_EVERY = 1 << 20
RECOVERY, INFECTION = 0, 1

# fstate slots
_W_INF, _W_HEAL, _CLOCK = 0, 1, 2
# istate slots
_COUNT, _POS_INF, _POS_HEAL, _SINCE_REBUILD = 0, 1, 2, 3


@nb.njit(cache=True, nogil=True)
def _rebuild(w, infected, tree_inf, tree_heal, fstate, istate):
    n = w.shape[0]
    vals_inf = np.empty(n)
    vals_heal = np.empty(n)
    w_inf = 0.0
    w_heal = 0.0
    pos_inf = 0
    pos_heal = 0
    for j in range(n):
        if infected[j]:
            vals_inf[j] = w[j]
            vals_heal[j] = 0.0
            w_inf += w[j]
            if w[j] > 0.0:
                pos_inf += 1
        else:
            vals_inf[j] = 0.0
            vals_heal[j] = w[j]
            w_heal += w[j]
            if w[j] > 0.0:
                pos_heal += 1
    fw_build(tree_inf, vals_inf)
    fw_build(tree_heal, vals_heal)
    fstate[_W_INF] = w_inf
    fstate[_W_HEAL] = w_heal
    istate[_POS_INF] = pos_inf
    istate[_POS_HEAL] = pos_heal
    istate[_SINCE_REBUILD] = 0


@nb.njit(cache=True, nogil=True)
def _infect(j, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id, type_inf,
            fstate, istate):
    wj = w[j]
    infected[j] = 1
    c = istate[_COUNT]
    inf_list[c] = j
    inf_pos[j] = c
    istate[_COUNT] = c + 1
    type_inf[type_id[j]] += 1
    if wj > 0.0:
        fw_add(tree_inf, j, wj)
        fw_add(tree_heal, j, -wj)
        fstate[_W_INF] += wj
        fstate[_W_HEAL] -= wj
        istate[_POS_INF] += 1
        istate[_POS_HEAL] -= 1


@nb.njit(cache=True, nogil=True)
def _recover(i, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id, type_inf,
             fstate, istate):
    wi = w[i]
    infected[i] = 0
    c = istate[_COUNT] - 1
    k = inf_pos[i]
    last = inf_list[c]
    inf_list[k] = last
    inf_pos[last] = k
    istate[_COUNT] = c
    type_inf[type_id[i]] -= 1
    if wi > 0.0:
        fw_add(tree_inf, i, -wi)
        fw_add(tree_heal, i, wi)
        fstate[_W_INF] -= wi
        fstate[_W_HEAL] += wi
        istate[_POS_INF] -= 1
        istate[_POS_HEAL] += 1


@nb.njit(cache=True, nogil=True)
def _rates(lam, n, fstate, istate):
    w_inf = fstate[_W_INF] if istate[_POS_INF] > 0 else 0.0
    w_heal = fstate[_W_HEAL] if istate[_POS_HEAL] > 0 else 0.0
    if w_inf < 0.0:
        w_inf = 0.0
    if w_heal < 0.0:
        w_heal = 0.0
    return float(istate[_COUNT]), lam * w_inf * w_heal / n


@nb.njit(cache=True, nogil=True)
def _apply(rng, lam, top, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id,
           type_inf, fstate, istate, R, I):
    """Choose and apply one event given the current rates (R, I); returns (kind, vertex)."""
    n = w.shape[0]
    if istate[_SINCE_REBUILD] >= REBUILD_EVERY:
        _rebuild(w, infected, tree_inf, tree_heal, fstate, istate)
    istate[_SINCE_REBUILD] += 1
    if rng.random() * (R + I) < R:
        c = istate[_COUNT]
        k = int(rng.random() * c)
        if k >= c:
            k = c - 1
        i = inf_list[k]
        _recover(i, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id,
                 type_inf, fstate, istate)
        return RECOVERY, i
    attempts = 0
    while True:
        j = fw_find(tree_heal, rng.random() * fstate[_W_HEAL], top)
        if j < n and infected[j] == 0 and w[j] > 0.0:
            break
        attempts += 1
        if attempts % 32 == 0:
            _rebuild(w, infected, tree_inf, tree_heal, fstate, istate)
    _infect(j, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id, type_inf,
            fstate, istate)
    return INFECTION, j


@nb.njit(cache=True, nogil=True)
def _step(rng, lam, top, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id,
          type_inf, fstate, istate):
    """One event; returns (dt, kind, vertex).  Requires at least one infected."""
    R, I = _rates(lam, w.shape[0], fstate, istate)
    dt = -math.log(1.0 - rng.random()) / (R + I)
    fstate[_CLOCK] += dt
    kind, v = _apply(rng, lam, top, w, infected, tree_inf, tree_heal, inf_list, inf_pos,
                     type_id, type_inf, fstate, istate, R, I)
    return dt, kind, v


@nb.njit(cache=True, nogil=True)
def _init_state(w, init_mask, type_id, m):
    n = w.shape[0]
    infected = np.zeros(n, np.uint8)
    tree_inf = np.zeros(n + 1)
    tree_heal = np.zeros(n + 1)
    inf_list = np.zeros(n, np.int64)
    inf_pos = np.full(n, -1, np.int64)
    type_inf = np.zeros(m, np.int64)
    fstate = np.zeros(3)
    istate = np.zeros(4, np.int64)
    c = 0
    for j in range(n):
        if init_mask[j]:
            infected[j] = 1
            inf_list[c] = j
            inf_pos[j] = c
            type_inf[type_id[j]] += 1
            c += 1
    istate[_COUNT] = c
    _rebuild(w, infected, tree_inf, tree_heal, fstate, istate)
    return infected, tree_inf, tree_heal, inf_list, inf_pos, type_inf, fstate, istate


@nb.njit(cache=True, nogil=True)
def _run(rng, w, init_mask, type_id, m, lam, t_max, snap_times, max_events, record_bitmaps):
    n = w.shape[0]
    top = fw_top(n)
    infected, tree_inf, tree_heal, inf_list, inf_pos, type_inf, fstate, istate = \
        _init_state(w, init_mask, type_id, m)
    S = snap_times.shape[0]
    snap_counts = np.zeros(S, np.int64)
    snap_types = np.zeros((S, m), np.int64)
    bitmaps = np.zeros((S if record_bitmaps else 0, n), np.uint8)
    si = 0
    events = 0
    ext_time = -1.0
    budget = False
    while True:
        if istate[_COUNT] == 0:
            ext_time = fstate[_CLOCK]
            break
        if events >= max_events:
            budget = True
            break
        t_before = fstate[_CLOCK]
        # holding time of the current state
        R, I = _rates(lam, n, fstate, istate)
        dt = -math.log(1.0 - rng.random()) / (R + I)
        t_new = t_before + dt
        while si < S and snap_times[si] < t_new:
            snap_counts[si] = istate[_COUNT]
            for k in range(m):
                snap_types[si, k] = type_inf[k]
            if record_bitmaps:
                bitmaps[si, :] = infected
            si += 1
        if t_new > t_max:
            fstate[_CLOCK] = t_max
            break
        _apply(rng, lam, top, w, infected, tree_inf, tree_heal, inf_list, inf_pos, type_id,
               type_inf, fstate, istate, R, I)
        fstate[_CLOCK] = t_new
        events += 1
    # remaining snapshots: extinct state is all zero; alive-at-t_max state is current
    while si < S:
        if budget:
            snap_counts[si] = -1
            for k in range(m):
                snap_types[si, k] = -1
        else:
            snap_counts[si] = istate[_COUNT]
            for k in range(m):
                snap_types[si, k] = type_inf[k]
            if record_bitmaps:
                bitmaps[si, :] = infected
        si += 1
    return ext_time, events, snap_counts, snap_types, bitmaps, istate[_COUNT] > 0, budget


# ---------------------------------------------------------------------------
# Python surface

InitSpec = Union[str, int, Sequence[int]]


def init_mask(n: int, init: InitSpec) -> np.ndarray:
    """Boolean initial configuration: "all", a single vertex index, or a set of indices."""
    mask = np.zeros(n, np.bool_)
    if isinstance(init, str):
        if init.lower() != "all":
            raise ValueError(f"unknown init {init!r}")
        mask[:] = True
    elif isinstance(init, (int, np.integer)):
        mask[int(init)] = True
    else:
        mask[np.asarray(list(init), dtype=np.int64)] = True
    return mask


def _type_info(sample: WeightSample):
    if sample.types is None:
        return np.zeros(sample.n, np.int64), 1
    return np.asarray(sample.types, np.int64), sample.m


@dataclass
class Event:
    time_increment: float
    kind: int
    vertex: int

    @property
    def is_recovery(self) -> bool:
        return self.kind == RECOVERY


class FullState:
    """Mutable contact-process configuration with its sampling indexes.

    Confined to one thread at a time.
    """

    def __init__(self, sample: WeightSample, init: InitSpec = "all"):
        self.sample = sample
        self.w = np.ascontiguousarray(sample.w, dtype=float)
        self.type_id, self.m = _type_info(sample)
        (self.infected, self.tree_inf, self.tree_heal, self.inf_list, self.inf_pos,
         self.type_inf, self.fstate, self.istate) = _init_state(
            self.w, init_mask(sample.n, init), self.type_id, self.m)
        self._top = fw_top(sample.n)

    @property
    def n(self) -> int:
        return self.sample.n

    @property
    def count_infected(self) -> int:
        return int(self.istate[_COUNT])

    @property
    def W_inf(self) -> float:
        return float(self.fstate[_W_INF])

    @property
    def W_heal(self) -> float:
        return float(self.fstate[_W_HEAL])

    @property
    def clock(self) -> float:
        return float(self.fstate[_CLOCK])

    def rates(self, lam: float):
        """(total recovery rate, total infection rate)."""
        return _rates(lam, self.n, self.fstate, self.istate)

    def step(self, lam: float, rng: np.random.Generator) -> Event:
        if self.count_infected == 0:
            raise Extinct("no infected vertex left")
        dt, kind, v = _step(rng, lam, self._top, self.w, self.infected, self.tree_inf,
                            self.tree_heal, self.inf_list, self.inf_pos, self.type_id,
                            self.type_inf, self.fstate, self.istate)
        return Event(dt, int(kind), int(v))

    def rebuild(self):
        _rebuild(self.w, self.infected, self.tree_inf, self.tree_heal, self.fstate, self.istate)


@dataclass
class SimConfig:
    lam: float
    sample: WeightSample
    init: InitSpec = "all"
    t_max: float = 10.0
    snapshot_times: Sequence[float] = ()
    max_events: int = 10 ** 12
    seed: int = 0
    record_bitmaps: bool = False

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        snaps = np.asarray(self.snapshot_times, dtype=float)
        if np.any(np.diff(snaps) < 0) or np.any(snaps < 0) or np.any(snaps > self.t_max):
            raise ValueError("snapshot times must be sorted and lie in [0, t_max]")


@dataclass
class RunSummary:
    """Outcome of one replica.

    ``counts[k]`` / ``type_counts[k]`` are the infected totals at
    ``snapshot_times[k]``; entries are -1 when the event budget ran out
    first.  ``extinction_time`` is None if the process was alive when the
    run stopped.
    """
    extinction_time: Optional[float]
    events: int
    snapshot_times: np.ndarray
    counts: np.ndarray
    type_counts: Optional[np.ndarray]
    final_alive: bool
    budget_exceeded: bool = False
    bitmaps: Optional[np.ndarray] = None
    type_totals: Optional[np.ndarray] = field(default=None, repr=False)

    def record(self, rep: int) -> dict:
        row = {"rep": rep,
               "extinction_time": self.extinction_time,
               "events": self.events}
        for k, t in enumerate(self.snapshot_times):
            row[f"count@{t:g}"] = int(self.counts[k])
            if self.type_counts is not None:
                for i in range(self.type_counts.shape[1]):
                    row[f"X{i + 1}@{t:g}"] = int(self.type_counts[k, i])
        return row


def run(config: SimConfig, seed: Optional[int] = None) -> RunSummary:
    """Simulate one replica until extinction, ``t_max`` or ``max_events``."""
    sample = config.sample
    type_id, m = _type_info(sample)
    rng = make_rng(config.seed if seed is None else seed)
    snaps = np.asarray(config.snapshot_times, dtype=float)
    ext, events, counts, types, bitmaps, alive, budget = _run(
        rng, np.ascontiguousarray(sample.w, dtype=float), init_mask(sample.n, config.init),
        type_id, m, float(config.lam), float(config.t_max), snaps, int(config.max_events),
        bool(config.record_bitmaps))
    return RunSummary(
        extinction_time=None if ext < 0 else float(ext),
        events=int(events),
        snapshot_times=snaps,
        counts=counts,
        type_counts=types if sample.types is not None else None,
        final_alive=bool(alive),
        budget_exceeded=bool(budget),
        bitmaps=bitmaps if config.record_bitmaps else None,
        type_totals=None if sample.counts is None else np.asarray(sample.counts),
    )


def run_replicas(config: SimConfig, reps: int, workers: int = 1, start: int = 0):
    """Replica r runs with seed ``derive_seed(config.seed, r)``; order is by r."""
    return map_replicas(lambda r: run(config, derive_seed(config.seed, r)),
                        range(start, start + reps), workers)


@dataclass
class Estimate:
    estimate: float
    std_error: Optional[float]
    reps: int


def binomial_estimate(successes: int, reps: int) -> Estimate:
    p = successes / reps
    se = math.sqrt(p * (1.0 - p) / reps) if reps > 1 else None
    return Estimate(p, se, reps)


def survival_probability(config: SimConfig, reps: int, workers: int = 1) -> Estimate:
    """Fraction of replicas still infected at ``t_max``."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    alive = sum(s.final_alive for s in run_replicas(config, reps, workers))
    return binomial_estimate(alive, reps)


@dataclass
class FrequencyReport:
    """Empirical infection frequencies at each snapshot time.

    ``per_vertex[k, j]`` is the fraction of replicas with vertex j infected at
    ``times[k]`` (only when bitmaps were requested); ``per_type[k, i]`` is the
    replica average of X_i / N_i.  The ``*_cond`` variants average only over
    replicas alive at that snapshot time.
    """
    times: np.ndarray
    reps: int
    alive: np.ndarray
    per_type: Optional[np.ndarray]
    per_type_cond: Optional[np.ndarray]
    per_vertex: Optional[np.ndarray]
    per_vertex_cond: Optional[np.ndarray]


def frequencies_from(summaries, times, n, type_totals=None, per_vertex=False) -> FrequencyReport:
    """Aggregate per-replica snapshots; sums first, one division at the end."""
    S = len(times)
    alive = np.zeros(S, np.int64)
    vert = np.zeros((S, n)) if per_vertex else None
    typ = typ_c = None
    if type_totals is not None:
        tot = np.maximum(np.asarray(type_totals, float), 1.0)
        typ = np.zeros((S, len(tot)))
        typ_c = np.zeros((S, len(tot)))
    reps = 0
    for s in summaries:
        reps += 1
        live = s.counts > 0
        alive += live
        if vert is not None:
            vert += s.bitmaps
        if typ is not None:
            frac = s.type_counts / tot
            typ += frac
            typ_c += frac * live[:, None]
    denom = np.maximum(alive, 1)[:, None]
    return FrequencyReport(
        times=np.asarray(times, float), reps=reps, alive=alive,
        per_type=None if typ is None else typ / reps,
        per_type_cond=None if typ is None else typ_c / denom,
        per_vertex=None if vert is None else vert / reps,
        per_vertex_cond=None,
    )


def infection_frequency(config: SimConfig, reps: int, workers: int = 1,
                        per_vertex: Optional[bool] = None) -> FrequencyReport:
    """Per-vertex (small n) and per-type infection frequencies at the snapshot times."""
    if reps < 1 or len(config.snapshot_times) == 0:
        raise ValueError("need reps >= 1 and at least one snapshot time")
    if per_vertex is None:
        per_vertex = config.sample.n <= 10_000
    cfg = config if config.record_bitmaps == per_vertex else \
        SimConfig(**{**config.__dict__, "record_bitmaps": per_vertex})
    sums = run_replicas(cfg, reps, workers)
    rep = frequencies_from(sums, cfg.snapshot_times, cfg.sample.n,
                           cfg.sample.counts, per_vertex)
    if per_vertex:
        # conditioned per-vertex frequencies
        acc = np.zeros((len(cfg.snapshot_times), cfg.sample.n))
        for s in sums:
            acc += s.bitmaps * (s.counts > 0)[:, None]
        rep.per_vertex_cond = acc / np.maximum(rep.alive, 1)[:, None]
    return rep
