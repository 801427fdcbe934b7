"""Vertex-weight laws: moments, tails, i.i.d. sampling and the kappa_m truncation.

Two families are supported.  ``DiscreteLaw`` has finite support
``W_1 < ... < W_m`` with probabilities ``p_i``.  ``ParetoLaw`` has
``P(w > x) = (x / xm) ** -(alpha - 1)`` for ``x >= xm``, i.e. density
proportional to ``x ** -alpha``; ``alpha > 2`` so the mean is finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InvariantError
from .rng import make_rng


@dataclass(frozen=True)
class DiscreteLaw:
    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        if len(values) == 0 or len(values) != len(probs):
            raise InvariantError("discrete law needs matching, nonempty W and p")
        if any(p <= 0 for p in probs):
            raise InvariantError("discrete probabilities must be positive")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise InvariantError(f"discrete probabilities sum to {sum(probs)!r}, not 1")
        if any(v < 0 or not np.isfinite(v) for v in values):
            raise InvariantError("weights must be finite and nonnegative")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvariantError("weights must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def W(self) -> np.ndarray:
        return np.array(self.values)

    @property
    def p(self) -> np.ndarray:
        return np.array(self.probs)


@dataclass(frozen=True)
class ParetoLaw:
    alpha: float
    xm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "xm", float(self.xm))
        if not self.alpha > 2:
            raise InvariantError("Pareto tail index must satisfy alpha > 2")
        if not self.xm > 0:
            raise InvariantError("Pareto scale xm must be positive")

    @property
    def tail_constant(self) -> float:
        """C in P(w > x) = C x^-(alpha-1)."""
        return self.xm ** (self.alpha - 1.0)


WeightLaw = Union[DiscreteLaw, ParetoLaw]


def point_mass(w: float = 1.0) -> DiscreteLaw:
    return DiscreteLaw((w,), (1.0,))


@dataclass(frozen=True, eq=False)
class WeightSample:
    """A realized weight vector with cached aggregates.

    ``types``/``counts``/``values`` are set when the weights take values in a
    known finite support (sampled from a DiscreteLaw, or given explicitly).
    """
    w: np.ndarray
    sum_w: float
    sum_w2: float
    sum_w3: float
    types: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    law: Optional[WeightLaw] = field(default=None, compare=False)

    def __eq__(self, other):
        if not isinstance(other, WeightSample):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None
                                                 and np.array_equal(a, b))
        return same(self.w, other.w) and same(self.values, other.values)

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def m(self) -> int:
        return 0 if self.values is None else len(self.values)

    @classmethod
    def from_weights(cls, w, values=None, law=None) -> "WeightSample":
        """Wrap an explicit weight vector.

        If ``values`` is given (or ``law`` is discrete), every weight must be
        one of those support points and the type index is filled in.
        """
        w = np.array(w, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise InvariantError("weights must be a nonempty 1-d vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvariantError("weights must be finite and nonnegative")
        if values is None and isinstance(law, DiscreteLaw):
            values = law.values
        types = counts = None
        if values is not None:
            values = np.array(values, dtype=float)
            types = np.searchsorted(values, w)
            if np.any(types >= len(values)) or np.any(values[np.minimum(types, len(values) - 1)] != w):
                raise InvariantError("weights outside the declared support")
            counts = np.bincount(types, minlength=len(values))
            types.setflags(write=False)
            counts.setflags(write=False)
            values.setflags(write=False)
        w.setflags(write=False)
        return cls(w=w, sum_w=float(np.sum(w)), sum_w2=float(np.sum(w * w)),
                   sum_w3=float(np.sum(w ** 3)), types=types, values=values,
                   counts=counts, law=law)

    def empirical_law(self) -> DiscreteLaw:
        """Empirical distribution of the sample, as a finite-support law."""
        vals, cnt = np.unique(self.w, return_counts=True)
        return DiscreteLaw(tuple(vals), tuple(cnt / cnt.sum()))


def moment(law: WeightLaw, k: int) -> float:
    """E[w^k] for k in {1, 2, 3}; ``inf`` when the moment diverges."""
    if k not in (1, 2, 3):
        raise ValueError("moment order must be 1, 2 or 3")
    if isinstance(law, DiscreteLaw):
        return float(np.sum(law.p * law.W ** k))
    a1 = law.alpha - 1.0
    if a1 > k:
        return a1 * law.xm ** k / (a1 - k)
    return float("inf")


def tail(law: WeightLaw, x: float) -> float:
    """P(w > x)."""
    if x < 0:
        raise ValueError("tail is defined for x >= 0")
    if isinstance(law, DiscreteLaw):
        return float(np.sum(law.p[law.W > x]))
    if x < law.xm:
        return 1.0
    return (x / law.xm) ** -(law.alpha - 1.0)


def sample(law: WeightLaw, n: int, seed: int) -> WeightSample:
    """Draw n i.i.d. weights; a pure function of (law, n, seed)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    u = rng.random(n)
    if isinstance(law, ParetoLaw):
        # 1 - u lies in (0, 1], keeping the inverse CDF finite
        w = law.xm * (1.0 - u) ** (-1.0 / (law.alpha - 1.0))
        return WeightSample.from_weights(w, law=law)
    cdf = np.cumsum(law.p)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    return WeightSample.from_weights(law.W[idx], law=law)


def kappa(x, m: int):
    """kappa_m(x) = min(floor(x m) / m, m), elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.minimum(np.floor(x * m) / m, float(m))
    return out if out.ndim else float(out)


def truncate(law: WeightLaw, m: int) -> DiscreteLaw:
    """Law of kappa_m(w) for w ~ law.  A zero atom is kept if it has mass."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if isinstance(law, DiscreteLaw):
        vals, inv = np.unique(kappa(law.W, m), return_inverse=True)
        probs = np.bincount(inv.ravel(), weights=law.p, minlength=len(vals))
    else:
        # atoms k/m for k < m^2 get P(k/m <= w < (k+1)/m); atom m gets P(w >= m)
        k_lo = min(int(np.floor(law.xm * m)), m * m)
        k = np.arange(k_lo, m * m + 1)
        lower = np.array([tail(law, kk / m) for kk in k])
        upper = np.append(lower[1:], 0.0)
        vals = k / m
        probs = lower - upper
        keep = probs > 0
        vals, probs = vals[keep], probs[keep]
    probs = probs / probs.sum()
    return DiscreteLaw(tuple(vals), tuple(probs))
