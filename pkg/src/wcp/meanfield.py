"""Mean-field quantities of the weighted contact process.

The stationary infection probability of a weight-x vertex is
``p(x) = sigma x / (1 + sigma x)`` where ``sigma = sigma(lambda)`` is the
positive root of ``1 = lambda * E[w^2 / (1 + sigma w)]``.  Such a root exists
iff ``lambda > lambda_c = 1 / E[w^2]`` (``lambda_c = 0`` when E[w^2] is infinite).

All root finding is plain bisection on the strictly decreasing map
``sigma -> lambda * E[w^2 / (1 + sigma w)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import NotSupercritical, StepTooLarge, UnsupportedAlpha
from .weights import DiscreteLaw, ParetoLaw, WeightLaw, WeightSample, moment

RESIDUAL_TOL = 1e-10
_QUAD_EPSREL = 1e-13


# ---------------------------------------------------------------------------
# expectations E[w^k / (1 + sigma w)]

def _pareto_ratio_moment(law: ParetoLaw, k: int, sigma: float) -> float:
    """E[w^k / (1 + sigma w)] for a Pareto law, by quadrature.

    With x = xm / t the integral becomes
    ``(alpha-1) xm^k * int_0^1 t^(alpha-k-1) / (t + sigma xm) dt``.
    The algebraic endpoint factor is handled by QUADPACK's 'alg' weight on
    [0, s] (s = sigma xm) and the remainder is integrated in log t.
    """
    a, xm = law.alpha, law.xm
    expo = a - k - 1.0
    if sigma == 0.0:
        return moment(law, k)
    s = sigma * xm
    pre = (a - 1.0) * xm ** k
    total = 0.0
    split = min(s, 1.0)
    if expo <= -1.0:
        raise ValueError("E[w^k/(1+sigma w)] diverges for this alpha")
    val, _ = integrate.quad(lambda t: 1.0 / (t + s), 0.0, split, weight="alg",
                            wvar=(expo, 0.0), epsabs=0.0, epsrel=_QUAD_EPSREL, limit=200)
    total += val
    if split < 1.0:
        # int_{split}^1 t^expo / (t + s) dt with t = e^u
        lo = math.log(split)
        edges = np.linspace(lo, 0.0, max(2, int(math.ceil(-lo / 4.0)) + 1))
        for u0, u1 in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(lambda u: math.exp((expo + 1.0) * u) / (math.exp(u) + s),
                                    u0, u1, epsabs=0.0, epsrel=_QUAD_EPSREL, limit=200)
            total += val
    return pre * total


def ratio_moment(law_or_sample, k: int, sigma: float) -> float:
    """E[w^k / (1 + sigma w)] under a law, or the empirical mean over a sample."""
    if isinstance(law_or_sample, WeightSample):
        w = law_or_sample.w
        return float(np.mean(w ** k / (1.0 + sigma * w)))
    if isinstance(law_or_sample, DiscreteLaw):
        W, p = law_or_sample.W, law_or_sample.p
        return float(np.sum(p * W ** k / (1.0 + sigma * W)))
    return _pareto_ratio_moment(law_or_sample, k, sigma)


def fixed_point_map(law_or_sample, lam: float, sigma: float) -> float:
    """lambda * E[w^2 / (1 + sigma w)].

    When E[w^2] is finite this is evaluated as
    ``lambda * (E[w^2] - sigma * E[w^3 / (1 + sigma w)])`` so that the small
    deficit near criticality keeps its relative accuracy.
    """
    if isinstance(law_or_sample, ParetoLaw):
        m2 = moment(law_or_sample, 2)
        if math.isfinite(m2) and sigma > 0:
            return lam * (m2 - sigma * _pareto_ratio_moment(law_or_sample, 3, sigma))
    return lam * ratio_moment(law_or_sample, 2, sigma)


# ---------------------------------------------------------------------------
# critical value and sigma

def lambda_c(law: WeightLaw) -> float:
    m2 = moment(law, 2)
    return 1.0 / m2 if math.isfinite(m2) else 0.0


def empirical_lambda_c(sample: WeightSample) -> float:
    """n / sum(w^2): the threshold of the n-type branching process."""
    return sample.n / sample.sum_w2 if sample.sum_w2 > 0 else math.inf


@dataclass
class _Root:
    sigma: float
    iters: int
    residual: float


def _bisect(fmap: Callable[[float], float], xtol_abs=1e-14, xtol_rel=1e-13,
            max_iter=5000) -> _Root:
    """Root of fmap(sigma) = 1 for a strictly decreasing fmap with fmap(0+) > 1."""
    lo, hi = 0.0, 1.0
    iters = 0
    f_hi = fmap(hi)
    while f_hi >= 1.0:
        lo, hi = hi, 2.0 * hi
        f_hi = fmap(hi)
        iters += 1
        if hi > 1e300:
            raise NotSupercritical("no bracket for sigma")
    mid, res = hi, 1.0 - f_hi
    while iters < max_iter:
        m = 0.5 * (lo + hi)
        if m <= lo or m >= hi:
            break
        iters += 1
        mid = m
        f_mid = fmap(mid)
        res = 1.0 - f_mid
        if f_mid > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < max(xtol_abs, xtol_rel * mid) and abs(res) <= RESIDUAL_TOL:
            break
    return _Root(mid, iters, res)


def _solve(law_or_sample, lam: float) -> _Root:
    return _bisect(lambda s: fixed_point_map(law_or_sample, lam, s))


def sigma(law: WeightLaw, lam: float) -> float:
    """Unique sigma > 0 with lambda E[w^2/(1+sigma w)] = 1.

    Raises NotSupercritical when ``lam <= lambda_c(law)``.
    """
    if not lam > lambda_c(law):
        raise NotSupercritical(f"lambda={lam} does not exceed lambda_c={lambda_c(law)}")
    return _solve(law, lam).sigma


def sigma_hat(sample: WeightSample, lam: float) -> float:
    """Empirical analogue of sigma: root of 1 = (lambda/n) sum w_j^2/(1+sigma w_j)."""
    if not lam > empirical_lambda_c(sample):
        raise NotSupercritical(
            f"lambda={lam} does not exceed n/sum(w^2)={empirical_lambda_c(sample)}")
    return _solve(sample, lam).sigma


def rho(law: WeightLaw, lam: float) -> float:
    """Quasi-stationary infected fraction E[sigma w / (1 + sigma w)]."""
    s = sigma(law, lam)
    return s * ratio_moment(law, 1, s)


@dataclass
class MeanFieldSolution:
    lam: float
    lambda_c: float
    sigma: Optional[float] = None
    rho: Optional[float] = None
    solver_iters: int = 0
    residual: Optional[float] = None

    @property
    def supercritical(self) -> bool:
        return self.sigma is not None

    def as_record(self) -> dict:
        return {"lambda": self.lam, "lambda_c": self.lambda_c, "sigma": self.sigma,
                "rho": self.rho, "residual": self.residual}


def solve(law: WeightLaw, lam: float) -> MeanFieldSolution:
    """All mean-field quantities at one lambda; sigma/rho are None if subcritical."""
    lc = lambda_c(law)
    if not lam > lc:
        return MeanFieldSolution(lam=lam, lambda_c=lc)
    root = _solve(law, lam)
    r = root.sigma * ratio_moment(law, 1, root.sigma)
    return MeanFieldSolution(lam=lam, lambda_c=lc, sigma=root.sigma, rho=r,
                             solver_iters=root.iters, residual=abs(root.residual))


# ---------------------------------------------------------------------------
# stationary profile and mean-field ODE

@dataclass(frozen=True)
class StationaryProfile:
    """p(x) = sigma x / (1 + sigma x); ``support``/``probs`` set for finite support."""
    sigma: float
    support: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.sigma * x / (1.0 + self.sigma * x)
        return out if out.ndim else float(out)

    def as_dict(self) -> dict:
        if self.support is None:
            raise ValueError("profile has no finite support")
        return {float(x): float(p) for x, p in zip(self.support, self.probs)}


def profile(law_or_sample, lam: float) -> StationaryProfile:
    if isinstance(law_or_sample, WeightSample):
        s = sigma_hat(law_or_sample, lam)
        support = np.unique(law_or_sample.w)
    else:
        s = sigma(law_or_sample, lam)
        support = law_or_sample.W if isinstance(law_or_sample, DiscreteLaw) else None
    probs = None if support is None else s * support / (1.0 + s * support)
    return StationaryProfile(s, support, probs)


def ode_rhs(law: DiscreteLaw, lam: float, p: np.ndarray) -> np.ndarray:
    """dp_i/dt = -p_i + (1 - p_i) lambda W_i sum_j p_j W_j mu_j."""
    W, mu = law.W, law.p
    return -p + (1.0 - p) * lam * W * np.dot(p * W, mu)


def ode_flow(law: DiscreteLaw, lam: float, p0, t_end: float, dt: float,
             clamp_tol: float = 1e-9):
    """Classical RK4 with fixed step dt.

    Returns ``(times, P)`` with ``P[k]`` the per-type probabilities at
    ``times[k] = k dt``.  Values are clipped to [0, 1]; a clip larger than
    ``clamp_tol`` raises StepTooLarge.
    """
    if not isinstance(law, DiscreteLaw):
        raise TypeError("ode_flow needs a finite-support law")
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = np.array(p0, dtype=float) * np.ones(law.m)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("initial probabilities must lie in [0, 1]")
    steps = int(math.ceil(t_end / dt - 1e-12))
    out = np.empty((steps + 1, law.m))
    out[0] = p
    f = lambda q: ode_rhs(law, lam, q)
    for k in range(steps):
        k1 = f(p)
        k2 = f(p + 0.5 * dt * k1)
        k3 = f(p + 0.5 * dt * k2)
        k4 = f(p + dt * k3)
        p = p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        clipped = np.clip(p, 0.0, 1.0)
        if np.max(np.abs(clipped - p)) > clamp_tol:
            raise StepTooLarge(f"step {k}: integration left [0,1] by {np.max(np.abs(clipped - p)):.3g}")
        p = clipped
        out[k + 1] = p
    return dt * np.arange(steps + 1), out


# ---------------------------------------------------------------------------
# near-critical asymptotics

def regime(alpha: float) -> str:
    """Tail regime label; 3 and 4 are selected by exact equality."""
    if alpha <= 2:
        raise UnsupportedAlpha(f"alpha={alpha} must exceed 2")
    if alpha < 3:
        return "(2,3)"
    if alpha == 3:
        return "3"
    if alpha < 4:
        return "(3,4)"
    if alpha == 4:
        return "4"
    return "(4,inf)"


def sigma_asymptotic(alpha: float, C: float, delta: float, lam_c: float = 0.0,
                     m3: float = math.inf, log_corrected: bool = False) -> float:
    """Leading-order sigma(lambda_c + delta) as delta -> 0+.

    ``C`` is the tail constant in P(w > x) ~ C x^-(alpha-1).  For alpha > 3 the
    critical value ``lam_c`` is needed and for alpha > 4 also ``m3 = E[w^3]``.
    At alpha = 4 ``log_corrected=True`` returns the root of
    ``sigma log(1/sigma) = delta / (3 C lam_c^2)`` instead of its explicit
    inversion ``delta / (3 C lam_c^2 log(1/delta))``; the two agree to leading
    order but the implicit form carries the log-log correction.
    """
    r = regime(alpha)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if r == "(2,3)":
        pre = C * math.pi * (alpha - 1.0) / math.sin(math.pi * alpha)
        return (pre * delta) ** (1.0 / (3.0 - alpha))
    if r == "3":
        return math.exp(-1.0 / (2.0 * C * delta))
    if r == "(3,4)":
        pre = -math.sin(math.pi * alpha) / (C * lam_c ** 2 * (alpha - 1.0) * math.pi)
        return (pre * delta) ** (1.0 / (alpha - 3.0))
    if r == "4":
        a = delta / (3.0 * C * lam_c ** 2)
        if not log_corrected:
            return a / math.log(1.0 / delta)
        if a >= 1.0 / math.e:
            raise ValueError("delta too large for the log-corrected alpha=4 form")
        # s log(1/s) = a on (0, 1/e): s = a / L with L = log(L / a)
        L = math.log(1.0 / a)
        for _ in range(200):
            L_new = math.log(L / a)
            if abs(L_new - L) < 1e-15 * L:
                break
            L = L_new
        return a / L
    return delta / (lam_c ** 2 * m3)


def mellin_check(alpha: float, lower: float = 0.0) -> float:
    """int_lower^inf z^(2-alpha) / (1 + z) dz by quadrature.

    Split at z = 1; the tail is mapped by z -> 1/z onto
    ``int_0^1 u^(alpha-3) / (1 + u) du``.  For alpha in (2, 3) and lower = 0
    the value is pi / sin(pi alpha).  At alpha = 3 the integral diverges at 0
    and a positive ``lower`` is required.
    """
    if not 2 < alpha <= 3:
        raise UnsupportedAlpha("mellin_check needs alpha in (2, 3]")
    if alpha == 3 and not lower > 0:
        raise ValueError("the alpha = 3 integral needs a positive lower limit")
    if lower >= 1.0:
        tail, _ = integrate.quad(lambda u: 1.0 / (1.0 + u), 0.0, 1.0 / lower, weight="alg",
                                 wvar=(alpha - 3.0, 0.0), epsabs=0.0, epsrel=1e-13)
        return tail
    tail, _ = integrate.quad(lambda u: 1.0 / (1.0 + u), 0.0, 1.0, weight="alg",
                             wvar=(alpha - 3.0, 0.0), epsabs=0.0, epsrel=1e-13)
    if lower == 0.0:
        head, _ = integrate.quad(lambda z: 1.0 / (1.0 + z), 0.0, 1.0, weight="alg",
                                 wvar=(2.0 - alpha, 0.0), epsabs=0.0, epsrel=1e-13)
    else:
        # log-variable quadrature on [lower, 1]
        head, _ = integrate.quad(lambda u: math.exp((3.0 - alpha) * u) / (1.0 + math.exp(u)),
                                 math.log(lower), 0.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return head + tail


@dataclass
class AsymptoticReport:
    alpha: float
    regime: str
    deltas: list
    sigma_numeric: list = field(default_factory=list)
    sigma_asymptotic: list = field(default_factory=list)
    ratios: list = field(default_factory=list)

    def records(self) -> list:
        return [{"alpha": self.alpha, "delta": d, "sigma_numeric": s, "sigma_asymptotic": a,
                 "ratio": r}
                for d, s, a, r in zip(self.deltas, self.sigma_numeric,
                                      self.sigma_asymptotic, self.ratios)]


def asymptotic_report(law: ParetoLaw, deltas, log_corrected: bool = False) -> AsymptoticReport:
    """Compare sigma(lambda_c + delta) with its leading-order form on a delta grid."""
    lc = lambda_c(law)
    C = law.tail_constant
    m3 = moment(law, 3)
    rep = AsymptoticReport(alpha=law.alpha, regime=regime(law.alpha), deltas=[float(d) for d in deltas])
    for d in rep.deltas:
        s = sigma(law, lc + d)
        a = sigma_asymptotic(law.alpha, C, d, lc, m3, log_corrected=log_corrected)
        rep.sigma_numeric.append(s)
        rep.sigma_asymptotic.append(a)
        rep.ratios.append(s / a)
    return rep
