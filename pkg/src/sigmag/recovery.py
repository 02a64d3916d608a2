"""Last-zero (honest) times and nested Monte Carlo checks of the recovery formula.

The fixture is ``X = (k - M)^+`` with ``M`` a Brownian martingale absorbed at
0.  ``X`` vanishes exactly when ``M >= k``, so the event "``X`` has no zero
after ``T``" is the event that ``M`` is absorbed at 0 before returning to
``k``.  Inner continuations run until one of the two barriers is hit, which
happens almost surely in finite time, so no horizon truncation is needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import SigmaDecomposition, make_grid
from .generators import gen_absorbed_bm_martingale
from .rng import INNER, stream

__all__ = [
    "honest_time",
    "exit_at_upper",
    "RecoveryReport",
    "recovery_check",
    "supremum_identity_check",
]


def honest_time(d: SigmaDecomposition, tol: float = 0.0):
    """Largest grid time where ``X`` or ``X_-`` is zero (within ``tol``)."""
    X = d.X
    hit = (np.abs(X.post) <= tol) | (np.abs(X.pre) <= tol)
    hit[..., 0] = True
    last = X.grid.n_points - 1 - np.argmax(hit[..., ::-1], axis=-1)
    g = X.grid.times[last]
    return float(g) if np.ndim(g) == 0 else g


def exit_at_upper(m: float, k: float, n: int, rng: np.random.Generator,
                  dt: float = 0.01) -> np.ndarray:
    """Simulate ``n`` Brownian paths from ``m`` until they leave ``(0, k)``.

    Returns a boolean array, true where the upper barrier ``k`` was reached
    first.  Each step applies the Brownian-bridge crossing test for both
    barriers.  Only surviving paths consume draws, in index order, so the
    result is a function of the generator state alone.
    """
    if m <= 0.0:
        return np.zeros(n, dtype=bool)
    if m >= k:
        return np.ones(n, dtype=bool)
    idx = np.arange(n)
    x = np.full(n, float(m))
    upper = np.zeros(n, dtype=bool)
    sd = math.sqrt(dt)
    while idx.size:
        x0 = x
        x1 = x0 + sd * rng.standard_normal(idx.size)
        u = rng.random((2, idx.size))
        p0 = np.exp(-2.0 * np.maximum(x0, 0) * np.maximum(x1, 0) / dt)
        pk = np.exp(-2.0 * np.maximum(k - x0, 0) * np.maximum(k - x1, 0) / dt)
        hit0 = (x1 <= 0.0) | (u[0] < p0)
        hitk = ~hit0 & ((x1 >= k) | (u[1] < pk))
        upper[idx[hitk]] = True
        keep = ~(hit0 | hitk)
        idx, x = idx[keep], x1[keep]
    return upper


@dataclass(frozen=True)
class RecoveryReport:
    """Per outer path: target, inner estimate, inner standard error, oracle."""

    check: str
    k: float
    start: float
    T: float
    n_outer: int
    n_inner: int
    target: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    oracle: np.ndarray
    mean_abs_error: float
    mean_bound: float
    oracle_max_dev: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "k": self.k,
            "start": self.start,
            "T": self.T,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "mean_abs_error": self.mean_abs_error,
            "mean_3sigma_bound": self.mean_bound,
            "oracle_max_dev": self.oracle_max_dev,
            "pass": self.passed,
            "paths": [[float(a), float(b), float(c)]
                      for a, b, c in zip(self.target, self.estimate, self.stderr)],
        }


def _validate(k, start, T, n_outer, n_inner):
    if not (math.isfinite(k) and k > 0):
        raise ValueError("level k must be positive")
    if not (math.isfinite(start) and start > 0):
        raise ValueError("start must be positive")
    if not (math.isfinite(T) and T >= 0):
        raise ValueError("checkpoint must be non-negative")
    if n_outer < 1 or n_inner < 2:
        raise ValueError("need n_outer >= 1 and n_inner >= 2")


def _outer_levels(start, T, n_outer, seed, outer_dt):
    if T == 0:
        return np.full(n_outer, float(start))
    steps = max(1, int(round(T / outer_dt)))
    d = gen_absorbed_bm_martingale(make_grid(T, steps), seed, start, member=range(n_outer))
    return d.M.post[:, -1].copy()


def _inner_fractions(levels, k, n_inner, seed, inner_dt, threads):
    def one(i):
        return exit_at_upper(levels[i], k, n_inner, stream(seed, i, INNER), inner_dt).mean()

    idx = range(len(levels))
    if threads <= 1:
        return np.array([one(i) for i in idx])
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return np.array(list(ex.map(one, idx)))


def _report(check, k, start, T, n_inner, target, est, se, oracle):
    err = np.abs(target - est)
    bound = 3.0 * se
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(se > 0, np.abs(est - oracle) / se,
                       np.where(est == oracle, 0.0, np.inf))
    mae, mb = float(err.mean()), float(bound.mean())
    return RecoveryReport(check, float(k), float(start), float(T), len(target), int(n_inner),
                          target, est, se, oracle, mae, mb, float(dev.max()), bool(mae <= mb))


def recovery_check(k: float = 2.0, start: float = 1.0, T: float = 1.0, n_outer: int = 200,
                   n_inner: int = 2000, seed: int = 0, *, outer_dt: float = 1e-3,
                   inner_dt: float = 0.01, threads: int = 1) -> RecoveryReport:
    """Compare ``X_T = (k - M_T)^+`` with ``k * P(no return to k after T | M_T)``."""
    _validate(k, start, T, n_outer, n_inner)
    if not start < k:
        raise ValueError("recovery fixture needs 0 < start < k")
    m = _outer_levels(start, T, n_outer, seed, outer_dt)
    p_up = _inner_fractions(m, k, n_inner, seed, inner_dt, threads)
    p = 1.0 - p_up
    est = k * p
    se = k * np.sqrt(p * (1.0 - p) / n_inner)
    target = np.maximum(k - m, 0.0)
    oracle = k * np.maximum(1.0 - m / k, 0.0)
    return _report("recovery", k, start, T, n_inner, target, est, se, oracle)


def supremum_identity_check(k: float = 2.0, start: float = 1.0, t: float = 1.0,
                            n_outer: int = 200, n_inner: int = 2000, seed: int = 0, *,
                            outer_dt: float = 1e-3, inner_dt: float = 0.01,
                            threads: int = 1) -> RecoveryReport:
    """Compare ``P(M reaches k after t | M_t)`` with ``min(1, M_t / k)``.

    At ``t = 0`` every outer path sits at ``start``, so a single outer path is
    used and the check reduces to an unconditional estimate.
    """
    _validate(k, start, t, n_outer, n_inner)
    if t == 0:
        n_outer = 1
    m = _outer_levels(start, t, n_outer, seed, outer_dt)
    est = _inner_fractions(m, k, n_inner, seed, inner_dt, threads)
    se = np.sqrt(est * (1.0 - est) / n_inner)
    oracle = np.minimum(1.0, m / k)
    return _report("supremum", k, start, t, n_inner, oracle, est, se, oracle)
