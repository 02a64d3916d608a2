"""Path transformations: drift split, balayage, positive/negative parts,
products, multiplicative decomposition, drift-function scaling, local time.

Conventions shared by all operations:

* a drift charge at index ``i`` is the continuous increment arriving at
  ``t_i`` plus the jump at ``t_i``;
* integrands are predictable: the continuous increment into ``t_i`` is
  weighted by the value at ``t_{i-1}`` and the jump at ``t_i`` by the left
  limit ``X_{t_i-}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CadlagPath, SigmaDecomposition, left_point, stieltjes_integral

__all__ = [
    "ZeroSetIndicators",
    "OrthogonalityError",
    "zero_set",
    "drift_split",
    "last_zero_index",
    "balayage",
    "tanaka_split",
    "product",
    "cross_covariation",
    "mult_decomposition",
    "scale_by_drift_function",
    "local_time",
]


@dataclass(frozen=True, eq=False)
class ZeroSetIndicators:
    """Zero sets of a path, evaluated within ``tol``.

    ``crossed[i]`` is true when the continuous motion over ``(t_{i-1}, t_i)``
    reaches zero: an endpoint is within ``tol`` of 0 or the sign changes.
    It classifies continuous drift increments, for which ``X_s`` and
    ``X_{s-}`` coincide.
    """

    at_zero: np.ndarray
    left_zero: np.ndarray
    either_zero: np.ndarray
    crossed: np.ndarray
    tol: float


def zero_set(d: SigmaDecomposition | CadlagPath, tol: float = 0.0) -> ZeroSetIndicators:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    X = d.X if isinstance(d, SigmaDecomposition) else d
    at = np.abs(X.post) <= tol
    left = np.abs(X.pre) <= tol
    lp = left_point(X)
    crossed = (np.abs(lp) <= tol) | left | (lp * X.pre < 0)
    crossed[..., 0] = at[..., 0]
    return ZeroSetIndicators(at, left, at | left, crossed, float(tol))


def _charges(p: CadlagPath, cont_mask, jump_mask) -> CadlagPath:
    return stieltjes_integral(cont_mask.astype(float), p, jump_mask.astype(float))


def drift_split(d: SigmaDecomposition, tol: float = 0.0):
    """Split the drift into a part on ``{X = 0}`` and a part on ``{X != 0 = X_-}``.

    Returns ``(C, V, residual)`` where ``residual`` accumulates the charges
    that fall on neither set; it vanishes on members of the class.
    """
    z = zero_set(d, tol)
    A = d.A
    c_cont, c_jump = z.crossed, z.at_zero
    v_jump = ~z.at_zero & z.left_zero
    r_cont, r_jump = ~z.crossed, ~z.either_zero
    has_v = np.any((A.jump != 0) & v_jump)
    has_r = np.any((A.increment != 0) & r_cont) or np.any((A.jump != 0) & r_jump)
    has_c = np.any((A.increment != 0) & c_cont) or np.any((A.jump != 0) & c_jump)
    zero = CadlagPath.zeros(A.grid, A.batch_shape)
    # single-carrier drifts are returned verbatim so the split is exact
    if not has_v and not has_r:
        return A, zero, zero
    if not has_c and not has_r:
        return zero, A, zero
    C = _charges(A, c_cont, c_jump)
    V = _charges(A, np.zeros_like(v_jump), v_jump)
    R = _charges(A, r_cont, r_jump)
    return C, V, R


def last_zero_index(X: CadlagPath, tol: float = 0.0) -> np.ndarray:
    """Index of the last ``j <= i`` with ``X_{t_j} = 0`` (0 when there is none)."""
    idx = np.arange(X.grid.n_points)
    marks = np.where(np.abs(X.post) <= tol, idx, 0)
    return np.maximum.accumulate(marks, axis=-1)


def _weights(k, X: CadlagPath) -> np.ndarray:
    if callable(k):
        k = k(X.grid.times)
    k = np.asarray(k, dtype=np.float64)
    if k.shape[-1:] != (X.grid.n_points,):
        raise ValueError(f"weight has length {k.shape[-1:]}, expected {X.grid.n_points}")
    if not np.all(np.isfinite(k)):
        raise ValueError("weights must be finite (bounded, no NaN)")
    return np.broadcast_to(k, X.post.shape)


def balayage(d: SigmaDecomposition, k, tol: float = 0.0) -> SigmaDecomposition:
    """``Y_t = k_{gamma_t} X_t`` with ``gamma_t`` the last zero of ``X``.

    ``k`` is an array on the grid (or a callable of the grid times).  Each
    component is integrated against the weight frozen at the last zero before
    the increment, so ``Y = int k_gamma dX`` holds step by step.
    """
    X = d.X
    k = _weights(k, X)
    gamma = last_zero_index(X, tol)
    kg = np.take_along_axis(k, gamma, axis=-1)
    w = np.empty_like(kg)
    w[..., 0] = kg[..., 0]
    w[..., 1:] = kg[..., :-1]
    Y = CadlagPath(X.grid, w * X.pre, kg * X.post)
    M = stieltjes_integral(w, d.M)
    C = stieltjes_integral(w, d.C)
    V = stieltjes_integral(w, d.V)
    return SigmaDecomposition(Y, M, C + V, C, V, {**d.info, "transform": "balayage"})


def _jump_sum(grid, values: np.ndarray) -> CadlagPath:
    post = np.cumsum(values, axis=-1)
    pre = np.empty_like(post)
    pre[..., 0] = post[..., 0]
    pre[..., 1:] = post[..., :-1]
    return CadlagPath(grid, pre, post)


def _positive_part(d: SigmaDecomposition) -> SigmaDecomposition:
    X, g = d.X, d.grid
    plus_X = CadlagPath(g, np.maximum(X.pre, 0.0), np.maximum(X.post, 0.0))
    ind_cont = (left_point(X) > 0).astype(float)
    ind_jump = (X.pre > 0).astype(float)
    M = stieltjes_integral(ind_cont, d.M, ind_jump)
    IC = stieltjes_integral(ind_cont, d.C, ind_jump)
    y = np.where(X.pre <= 0, np.maximum(X.post, 0.0), 0.0)
    z = np.where(X.pre > 0, np.maximum(-X.post, 0.0), 0.0)
    y[..., 0] = z[..., 0] = 0.0
    Y = _jump_sum(g, y)
    Z = _jump_sum(g, z)
    # half local time at 0, by subtraction
    L = plus_X - M - Y - Z - IC
    C = IC + Z + L
    return SigmaDecomposition(plus_X, M, C + Y, C, Y,
                              {**d.info, "transform": "positive_part", "half_local_time": L})


def tanaka_split(d: SigmaDecomposition):
    """Positive and negative parts, each with its own decomposition.

    Jumps from ``X_- <= 0`` into positive values go to the V-type drift; jumps
    from ``X_- > 0`` into negative values, the drift of ``X`` seen from
    ``X_- > 0``, and the half local time go to the C-type drift.  The half
    local time is the residual, stored under ``info["half_local_time"]``.
    """
    return _positive_part(d), _positive_part(-d)


class OrthogonalityError(ValueError):
    """The martingale parts of a product's factors are not orthogonal."""

    def __init__(self, message, covariation):
        super().__init__(message)
        self.covariation = covariation


def cross_covariation(p: CadlagPath, q: CadlagPath) -> np.ndarray:
    """Per-step products of increments (continuous and jump parts)."""
    return p.increment * q.increment + p.jump * q.jump


def _check_orthogonal(d1, d2, z_max=3.0):
    terms = cross_covariation(d1.M, d2.M)
    per_path = terms.sum(axis=-1)
    if np.ndim(per_path) == 0:
        total, se = float(per_path), float(np.sqrt(np.sum(terms ** 2)))
    else:
        flat = np.ravel(per_path)
        total = float(flat.mean())
        se = float(flat.std(ddof=1) / np.sqrt(flat.size)) if flat.size > 1 else 0.0
    if (se == 0 and total != 0) or (se > 0 and abs(total) > z_max * se):
        raise OrthogonalityError(
            f"martingale parts are not orthogonal: covariation {total:.4g} "
            f"(stderr {se:.3g})", total)
    return total, se


def product(d1: SigmaDecomposition, d2: SigmaDecomposition, check: bool = True
            ) -> SigmaDecomposition:
    """Product of two decompositions with orthogonal martingale parts.

    Each component integrates one factor's left values against the other's
    component.  The discrete covariation left over is stored as
    ``info["residual"]`` (``X - M - A``) and ``info["max_residual"]``.
    For batched inputs orthogonality is tested across the ensemble, for
    single paths across the steps.
    """
    if d1.grid != d2.grid:
        raise ValueError("factors live on different grids")
    if check:
        cov, se = _check_orthogonal(d1, d2)
    else:
        cov, se = float("nan"), float("nan")
    X1, X2 = d1.X, d2.X
    l1, l2 = left_point(X1), left_point(X2)

    def cross(p1, p2):
        return stieltjes_integral(l1, p2, X1.pre) + stieltjes_integral(l2, p1, X2.pre)

    Y = CadlagPath(X1.grid, X1.pre * X2.pre, X1.post * X2.post)
    M = cross(d1.M, d2.M)
    C = cross(d1.C, d2.C)
    V = cross(d1.V, d2.V)
    A = C + V
    resid = Y - M - A
    info = {"transform": "product", "covariation": cov, "covariation_stderr": se,
            "residual": resid, "max_residual": float(np.max(np.abs(resid.post)))}
    return SigmaDecomposition(Y, M, A, C, V, info)


def mult_decomposition(d: SigmaDecomposition):
    """``X = Gamma * W - 1`` with ``Gamma = exp(C)`` and ``W = exp(-C)(X + 1)``.

    ``W`` comes back as a decomposition starting at 1: martingale part
    ``1 + int exp(-C_-) dM``, V-part ``int exp(-C_-) dV``, and a C-part holding
    what jumps of ``C`` add (zero when ``C`` is continuous).
    """
    X, C = d.X, d.C
    if np.min(X.post) < -1e-10 or np.min(X.pre) < -1e-10:
        raise ValueError("multiplicative decomposition needs a non-negative process")
    g = d.grid
    Gamma = CadlagPath(g, np.exp(C.pre), np.exp(C.post))
    WX = CadlagPath(g, np.exp(-C.pre) * (X.pre + 1.0), np.exp(-C.post) * (X.post + 1.0))
    wc, wj = np.exp(-left_point(C)), np.exp(-C.pre)
    mart = stieltjes_integral(wc, d.M, wj)
    m = CadlagPath(g, mart.pre + 1.0, mart.post + 1.0)
    l = stieltjes_integral(wc, d.V, wj)
    rest = WX - m - l
    W = SigmaDecomposition(WX, m, rest + l, rest, l,
                           {"transform": "mult_decomposition", "initial_value": 1.0})
    return Gamma, W


def scale_by_drift_function(d: SigmaDecomposition, f: Callable[[np.ndarray], np.ndarray]
                            ) -> SigmaDecomposition:
    """``Y = f(C) X`` with every component integrated against ``f(C_-)``."""
    C = d.C
    fpre, fpost = np.asarray(f(C.pre), dtype=float), np.asarray(f(C.post), dtype=float)
    if not (np.all(np.isfinite(fpre)) and np.all(np.isfinite(fpost))):
        raise ValueError("f is not finite on the range of C")
    wc, wj = np.asarray(f(left_point(C)), dtype=float), fpre
    Y = CadlagPath(d.grid, fpre * d.X.pre, fpost * d.X.post)
    M = stieltjes_integral(wc, d.M, wj)
    C2 = stieltjes_integral(wc, d.C, wj)
    V2 = stieltjes_integral(wc, d.V, wj)
    return SigmaDecomposition(Y, M, C2 + V2, C2, V2, {**d.info, "transform": "scale"})


def local_time(d: SigmaDecomposition | CadlagPath, eps: float):
    """Two estimators of the local time at 0: Tanaka residual and occupation.

    ``tanaka = |X| - |X_0| - int sgn(X_-) dX`` with ``sgn(0) = +1``;
    ``occupation = (1 / 2 eps) * sum 1{|X| <= eps} (dX)^2`` over continuous
    increments, with the indicator taken at the left end of each step.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    X = d.X if isinstance(d, SigmaDecomposition) else d
    lp = left_point(X)
    sgn = np.where(lp >= 0.0, 1.0, -1.0)
    sgn_j = np.where(X.pre >= 0.0, 1.0, -1.0)
    x0 = np.abs(X.post[..., :1])
    absX = CadlagPath(X.grid, np.abs(X.pre) - x0, np.abs(X.post) - x0)
    tanaka = absX - stieltjes_integral(sgn, X, sgn_j)
    occ = np.cumsum((np.abs(lp) <= eps) * X.increment ** 2, axis=-1) / (2.0 * eps)
    return tanaka, CadlagPath.continuous(X.grid, occ)
