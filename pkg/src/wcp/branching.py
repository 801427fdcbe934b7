"""The n-type branching process that dominates the contact process.

Every individual of type k dies at rate 1 and produces a type-j child at rate
``lam * w_k * w_j / n``.  The generator of the mean matrix is
``A = (lam/n) w w^T - I``: rank one plus a multiple of the identity, so its
exponential and all related spectra are computed without forming n x n
matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from ._fenwick import fw_add, fw_build, fw_find, fw_top
from .errors import NoConvergence, NotSupercritical
from .kernel_full import Estimate, binomial_estimate
from .meanfield import empirical_lambda_c, sigma_hat
from .parallel import map_replicas
from .rng import derive_seed, make_rng
from .weights import WeightSample


def extinction_probs(sample: WeightSample, lam: float) -> np.ndarray:
    """Extinction probability of a lineage started by one type-i individual.

    Equal to ``1 / (1 + sigma_hat * w_i)`` above the threshold n / sum(w^2)
    and to 1 at or below it.
    """
    if not lam > empirical_lambda_c(sample):
        return np.ones(sample.n)
    s = sigma_hat(sample, lam)
    return 1.0 / (1.0 + s * sample.w)


def extinction_residual(sample: WeightSample, lam: float, s) -> np.ndarray:
    """u_i(s) = a_i (f_i(s) - s_i) built from the offspring generating functions.

    ``a_i = 1 + (lam/n) w_i sum_j w_j`` is the total event rate of a type-i
    individual and ``f_i`` its one-event generating function.  The
    extinction vector is the root of u in [0, 1).
    """
    w = sample.w
    s = np.asarray(s, dtype=float)
    k = lam / sample.n
    a = 1.0 + k * w * np.sum(w)
    f = (1.0 + k * w * s * np.dot(w, s)) / a
    return a * (f - s)


def mean_matrix_action(sample: WeightSample, lam: float, t: float, v) -> np.ndarray:
    """exp(A t) v with A = (lam/n) w w^T - I.

    v is split into its component along w, which grows at rate
    ``lam |w|^2 / n - 1``, and the orthogonal rest, which decays like e^-t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    w = sample.w
    v = np.asarray(v, dtype=float)
    norm2 = sample.sum_w2
    if norm2 == 0.0:
        return math.exp(-t) * v
    c = np.dot(w, v) / norm2
    perp = v - c * w
    top = lam * norm2 / sample.n - 1.0
    return math.exp(top * t) * c * w + math.exp(-t) * perp


def conditioned_top_eig(sample: WeightSample, lam: float, tol: float = 1e-10,
                        max_iter: int = 100_000) -> float:
    """Top eigenvalue of the mean-matrix generator of the process conditioned on extinction.

    That generator is ``D^-1 ((lam/n) D w w^T D - I)`` with ``D = diag(rho_hat)``.
    Conjugating by ``D^(1/2)`` gives the symmetric operator
    ``(lam/n) a a^T - D^-1`` with ``a = D^(1/2) w``; power iteration runs on that
    operator shifted by ``max(1/rho_hat)`` (which makes it positive
    semidefinite) and reports the Rayleigh quotient.
    """
    if not lam > empirical_lambda_c(sample):
        raise NotSupercritical("conditioned spectrum needs lam > n / sum(w^2)")
    rho = extinction_probs(sample, lam)
    k = lam / sample.n
    a = np.sqrt(rho) * sample.w
    dinv = 1.0 / rho
    shift = float(np.max(dinv))

    def op(v):
        return k * np.dot(a, v) * a - dinv * v

    v = a / np.linalg.norm(a)
    prev = float(np.dot(v, op(v)))
    for _ in range(max_iter):
        u = op(v) + shift * v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return -shift
        v = u / nu
        cur = float(np.dot(v, op(v)))
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise NoConvergence(f"power iteration did not settle in {max_iter} iterations")


@dataclass
class SpectralReport:
    n: int
    lam: float
    top_eig_A: float
    bulk_eig_A: float
    extinction: Optional[np.ndarray]
    top_eig_bound_conditioned: Optional[float]
    top_eig_conditioned_numeric: Optional[float]

    def as_record(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "top_eig_A": self.top_eig_A,
                "bulk_eig_A": self.bulk_eig_A,
                "extinction": None if self.extinction is None else self.extinction.tolist(),
                "top_eig_bound_conditioned": self.top_eig_bound_conditioned,
                "top_eig_conditioned_numeric": self.top_eig_conditioned_numeric}


def spectral_report(sample: WeightSample, lam: float) -> SpectralReport:
    n = sample.n
    top = lam * sample.sum_w2 / n - 1.0
    if not lam > empirical_lambda_c(sample):
        return SpectralReport(n, lam, top, -1.0, None, None, None)
    rho = extinction_probs(sample, lam)
    bound = lam / n * float(np.sum(sample.w ** 2 * rho ** 2)) - 1.0
    return SpectralReport(n, lam, top, -1.0, rho, bound, conditioned_top_eig(sample, lam))


# ---------------------------------------------------------------------------
# simulation

@nb.njit(cache=True, nogil=True)
def _mtbp_run(rng, w, cum_w, lam, init_type, t_max, max_pop):
    n = w.shape[0]
    top = fw_top(n)
    tree = np.zeros(n + 1)
    Z = np.zeros(n)
    Z[init_type] = 1.0
    fw_build(tree, Z)
    pop = 1
    sw = w[init_type]
    mean_w = cum_w[n - 1] / n
    t = 0.0
    events = 0
    while True:
        if pop == 0:
            return False, t
        if pop >= max_pop:
            return True, -1.0
        if events & 0xFFFFF == 0xFFFFF:
            sw = 0.0
            for k in range(n):
                sw += Z[k] * w[k]
        birth = lam * mean_w * sw
        if birth < 0.0:
            birth = 0.0
        total = pop + birth
        t += -math.log(1.0 - rng.random()) / total
        if t > t_max:
            return True, -1.0
        events += 1
        if rng.random() * total < pop:
            k = n
            while k >= n or Z[k] <= 0.0:
                k = fw_find(tree, rng.random() * pop, top)
            Z[k] -= 1.0
            fw_add(tree, k, -1.0)
            pop -= 1
            sw -= w[k]
            if pop == 0:
                sw = 0.0
        else:
            u = rng.random() * cum_w[n - 1]
            j = np.searchsorted(cum_w, u, side="right")
            if j >= n:
                j = n - 1
            while w[j] == 0.0:
                j = np.searchsorted(cum_w, rng.random() * cum_w[n - 1], side="right")
                if j >= n:
                    j = n - 1
            Z[j] += 1.0
            fw_add(tree, j, 1.0)
            pop += 1
            sw += w[j]


@dataclass
class MTBPOutcome:
    survived: bool
    extinction_time: Optional[float]


def mtbp_simulate(sample: WeightSample, lam: float, init_type: int, t_max: float,
                  seed: int, max_population: int = 10 ** 6) -> MTBPOutcome:
    """One branching-process lineage from a single type-``init_type`` individual.

    Reaching ``max_population`` counts as survival.
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    w = np.ascontiguousarray(sample.w, dtype=float)
    alive, t = _mtbp_run(make_rng(seed), w, np.cumsum(w), float(lam), int(init_type),
                         float(t_max), int(max_population))
    return MTBPOutcome(bool(alive), None if alive else float(t))


def mtbp_survival(sample: WeightSample, lam: float, init_type: int, t_max: float,
                  reps: int, seed: int, max_population: int = 10 ** 6,
                  workers: int = 1) -> Estimate:
    w = np.ascontiguousarray(sample.w, dtype=float)
    cum = np.cumsum(w)

    def one(r):
        alive, _ = _mtbp_run(make_rng(derive_seed(seed, r)), w, cum, float(lam), int(init_type),
                             float(t_max), int(max_population))
        return alive

    return binomial_estimate(sum(map_replicas(one, range(reps), workers)), reps)


# ---------------------------------------------------------------------------
# eigenvalues of D U for diagonal D >= 1

def jacobi_eigvalsh(A, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300 or abs(apq) < 1e-18 * (abs(A[p, p]) + abs(A[q, q])):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
    else:
        raise NoConvergence("Jacobi sweeps did not converge")
    return np.sort(np.diag(A))


def random_orthogonal(n: int, rng: np.random.Generator, rotations: Optional[int] = None) -> np.ndarray:
    """Product of random plane (Givens) rotations."""
    Q = np.eye(n)
    for _ in range(rotations or 4 * n * n):
        i, j = rng.choice(n, size=2, replace=False)
        th = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(th), math.sin(th)
        qi, qj = Q[i, :].copy(), Q[j, :].copy()
        Q[i, :] = c * qi - s * qj
        Q[j, :] = s * qi + c * qj
    return Q


@dataclass
class EigTrial:
    top_U: float
    top_DU: float

    @property
    def passed(self) -> bool:
        return self.top_DU <= self.top_U + 1e-9


def diag_eig_trials(n: int = 8, trials: int = 200, seed: int = 0,
                    top_range=(-5.0, -0.1), d_range=(1.0, 10.0)) -> list:
    """Random trials of: U symmetric with top eigenvalue l0 < 0, D diagonal >= 1 => eig(D U) <= l0.

    U = Q diag(l0, l0 - x_2, ...) Q^T with Q a random rotation; the spectrum
    of D U is read off the similar symmetric matrix D^(1/2) U D^(1/2).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    out = []
    for r in range(trials):
        rng = make_rng(derive_seed(seed, r))
        l0 = rng.uniform(*top_range)
        eig = np.concatenate([[l0], l0 - rng.uniform(0.0, 5.0, n - 1)])
        Q = random_orthogonal(n, rng)
        U = (Q * eig) @ Q.T
        U = 0.5 * (U + U.T)
        d = rng.uniform(*d_range, n)
        sq = np.sqrt(d)
        M = sq[:, None] * U * sq[None, :]
        out.append(EigTrial(float(l0), float(jacobi_eigvalsh(M)[-1])))
    return out


def diag_eig_property(n: int = 8, trials: int = 200, seed: int = 0, **kw) -> bool:
    return all(t.passed for t in diag_eig_trials(n, trials, seed, **kw))
