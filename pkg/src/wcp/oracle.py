"""Exact transient law of the contact process on all 2^n configurations.

A configuration is a bitmask (bit i set = vertex i infected).  The generator is
assembled as a sparse matrix and exponentiated by uniformization: with
``q >= max exit rate`` and ``P = I + Q/q``,
``p(t) = sum_k Pois(k; q t) p(0) P^k``, truncated once the remaining Poisson
mass is below the requested bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.stats import poisson

from .errors import DomainMismatch, TooLarge
from .weights import WeightSample

MAX_N = 12
TAIL_TOL = 1e-12


def _weights(sample_or_w) -> np.ndarray:
    w = sample_or_w.w if isinstance(sample_or_w, WeightSample) else sample_or_w
    return np.asarray(w, dtype=float)


def generator(w, lam: float) -> sp.csr_matrix:
    """Sparse generator Q (rows = from-state) of the contact process on K_n."""
    w = np.asarray(w, dtype=float)
    n = len(w)
    if n > MAX_N:
        raise TooLarge(f"oracle supports n <= {MAX_N}, got {n}")
    N = 1 << n
    states = np.arange(N)
    bits = (states[:, None] >> np.arange(n)) & 1
    w_inf = bits @ w
    rows, cols, vals = [], [], []
    for i in range(n):
        on = bits[:, i] == 1
        src = states[on]
        rows.append(src)
        cols.append(src ^ (1 << i))
        vals.append(np.ones(len(src)))
        src = states[~on]
        rate = lam * w[i] * w_inf[~on] / n
        keep = rate > 0
        rows.append(src[keep])
        cols.append(src[keep] | (1 << i))
        vals.append(rate[keep])
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    exit_rate = np.asarray(Q.sum(axis=1)).ravel()
    return (Q - sp.diags(exit_rate)).tocsr()


def transient(Q: sp.csr_matrix, p0: np.ndarray, t: float, tol: float = TAIL_TOL):
    """Distribution at time t from p0; returns (p_t, truncation bound)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    p0 = np.asarray(p0, dtype=float)
    q = float(np.max(-Q.diagonal())) if Q.shape[0] else 0.0
    if t == 0 or q == 0:
        return p0.copy(), 0.0
    PT = (sp.identity(Q.shape[0], format="csr") + Q / q).T.tocsr()
    mu = q * t
    K = int(poisson.isf(tol, mu)) + 1
    weights = poisson.pmf(np.arange(K + 1), mu)
    bound = float(poisson.sf(K, mu))
    v = p0.copy()
    out = weights[0] * v
    for k in range(1, K + 1):
        v = PT @ v
        out += weights[k] * v
    return out, bound


def init_state(n: int, init: Union[str, Iterable[int]]) -> int:
    if isinstance(init, str):
        if init.lower() != "all":
            raise ValueError(f"unknown init {init!r}")
        return (1 << n) - 1
    s = 0
    for i in init:
        if not 0 <= int(i) < n:
            raise ValueError(f"vertex {i} out of range")
        s |= 1 << int(i)
    return s


@dataclass
class OracleResult:
    n: int
    lam: float
    t: float
    init: tuple
    marginals: np.ndarray
    survival: float
    truncation_error_bound: float
    method: str = "uniformization"
    distribution: Optional[np.ndarray] = field(default=None, repr=False)

    def as_record(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "t": self.t, "init": list(self.init),
                "marginals": self.marginals.tolist(), "survival": self.survival,
                "method": self.method, "truncation_error_bound": self.truncation_error_bound}


def marginals_of(p: np.ndarray, n: int) -> np.ndarray:
    bits = (np.arange(len(p))[:, None] >> np.arange(n)) & 1
    return np.clip(p @ bits, 0.0, 1.0)


def exact_marginals(sample, lam: float, t: float, init="all", Q=None) -> OracleResult:
    """Per-vertex infection probabilities and survival probability at time t."""
    w = _weights(sample)
    n = len(w)
    if n > MAX_N:
        raise TooLarge(f"oracle supports n <= {MAX_N}, got {n}")
    Q = generator(w, lam) if Q is None else Q
    s0 = init_state(n, init)
    p0 = np.zeros(1 << n)
    p0[s0] = 1.0
    p, bound = transient(Q, p0, t)
    idx = tuple(i for i in range(n) if s0 >> i & 1)
    surv = float(min(max(1.0 - p[0], 0.0), 1.0))
    return OracleResult(n, float(lam), float(t), idx, marginals_of(p, n), surv, bound,
                        distribution=p)


def duality_gap(sample, lam: float, t: float) -> float:
    """max_i |P(alive at t | start {i}) - P(i infected at t | start all)|."""
    w = _weights(sample)
    Q = generator(w, lam)
    full = exact_marginals(w, lam, t, "all", Q=Q).marginals
    gaps = [abs(exact_marginals(w, lam, t, [i], Q=Q).survival - full[i]) for i in range(len(w))]
    return float(max(gaps))


def monotonicity_gap(sample_low, sample_high, lam: float, t: float) -> float:
    """min_i of P_high(i infected) - P_low(i infected), both started from all infected."""
    lo, hi = _weights(sample_low), _weights(sample_high)
    if lo.shape != hi.shape:
        raise DomainMismatch("weight vectors differ in length")
    if np.any(lo > hi):
        raise DomainMismatch("sample_low must be coordinatewise <= sample_high")
    if len(lo) > 10:
        raise TooLarge("monotonicity check supports n <= 10")
    a = exact_marginals(lo, lam, t).marginals
    b = exact_marginals(hi, lam, t).marginals
    return float(np.min(b - a))
