"""Seeded generators of decomposed semimartingales with exact zeros.

All generators draw Brownian increments from the per-member stream
``rng.stream(seed, member, GAUSS)``, so for a fixed ``(seed, member)`` every
generator is driven by the same Brownian path.

Absorption at 0 uses a Brownian-bridge crossing test inside each step, which
makes the stopped martingale exact at grid times.  Absorbed and waiting values
are stored as exactly ``0.0``.

The reset / injection constructions of members of the larger class that lie
outside both smaller classes are this package's own choices.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import rng
from .core import (CadlagPath, PathEnsemble, SigmaDecomposition, TimeGrid, as_index_list,
                   left_point, stieltjes_integral)

__all__ = [
    "GENERATOR_IDS",
    "GeneratorSpec",
    "gen_abs_bm",
    "gen_drawdown",
    "gen_reset",
    "gen_injection",
    "gen_sigma_g",
    "gen_absorbed_bm_martingale",
    "brownian",
    "make_ensemble",
    "map_ensemble",
    "default_chunk_size",
    "snap_times",
    "predictable_jumps",
]

GENERATOR_IDS = ("abs_bm", "drawdown", "reset", "injection", "sigma_g", "absorbed_bm_martingale")

# event times as fractions of the horizon, used when a parameter is omitted
DEFAULT_FRACTIONS = {
    "reset": {"reset_times": [0.3, 0.6, 0.9]},
    "injection": {"injection_times": [0.1, 0.4, 0.7], "injection_sizes": [0.5, 0.5, 0.5]},
    "sigma_g": {"reset_times": [0.3, 0.8], "injection_times": [0.1, 0.5],
                "injection_sizes": [0.5, 0.5]},
    "absorbed_bm_martingale": {"start_level": 1.0},
}

_PARAM_KEYS = {
    "abs_bm": set(),
    "drawdown": set(),
    "reset": {"reset_times"},
    "injection": {"injection_times", "injection_sizes"},
    "sigma_g": {"reset_times", "injection_times", "injection_sizes"},
    "absorbed_bm_martingale": {"start_level"},
}


def snap_times(grid: TimeGrid, times: Sequence[float], what: str = "event") -> np.ndarray:
    """Snap event times to grid indices; they must lie strictly inside (0, T)."""
    idx = []
    for t in times:
        t = float(t)
        if not (0.0 < t < grid.horizon):
            raise ValueError(f"{what} time {t} is not strictly inside (0, {grid.horizon})")
        i = int(round(t / grid.dt))
        if not (1 <= i <= grid.steps - 1):
            raise ValueError(f"{what} time {t} snaps to the grid boundary (index {i})")
        idx.append(i)
    idx = np.asarray(idx, dtype=int)
    if np.any(np.diff(idx) <= 0):
        raise ValueError(f"snapped {what} times must be strictly increasing: {idx.tolist()}")
    return idx


def _check_injections(times, sizes):
    if len(times) != len(sizes):
        raise ValueError(
            f"injection_times and injection_sizes differ in length ({len(times)} vs {len(sizes)})")
    if any(not (float(a) > 0) for a in sizes):
        raise ValueError("injection sizes must be positive")


def _brownian_arrays(grid: TimeGrid, seed: int, members) -> np.ndarray:
    dB = rng.gaussian_increments(seed, members, grid.steps, grid.dt)
    B = np.zeros((len(members), grid.n_points))
    B[:, 1:] = np.cumsum(dB, axis=1)
    return B


def brownian(grid: TimeGrid, seed: int, member=0) -> CadlagPath:
    """The driving Brownian path of ``(seed, member)``."""
    batched, idx = as_index_list(member)
    B = _brownian_arrays(grid, seed, idx)
    return CadlagPath.continuous(grid, B if batched else B[0])


def gen_abs_bm(grid: TimeGrid, seed: int, member=0) -> SigmaDecomposition:
    """``|B|`` with Tanaka martingale ``sum sgn(B) dB`` and local time as drift.

    ``sgn(0)`` is taken as ``+1``.  The drift is the residual ``|B| - M``,
    hence non-decreasing step by step.
    """
    B = brownian(grid, seed, member)
    sgn = np.where(left_point(B) >= 0.0, 1.0, -1.0)
    M = stieltjes_integral(sgn, B)
    X = CadlagPath.continuous(grid, np.abs(B.post))
    A = X - M
    zero = CadlagPath.zeros(grid, A.batch_shape)
    return SigmaDecomposition(X, M, A, A, zero, {"generator": "abs_bm"})


def gen_drawdown(grid: TimeGrid, seed: int, member=0) -> SigmaDecomposition:
    """Drawdown ``S - B`` of the running maximum ``S``; the drift is ``S``."""
    B = brownian(grid, seed, member)
    S = np.maximum.accumulate(B.post, axis=-1)
    X = CadlagPath.continuous(grid, S - B.post)
    A = CadlagPath.continuous(grid, S)
    zero = CadlagPath.zeros(grid, A.batch_shape)
    return SigmaDecomposition(X, -B, A, A, zero, {"generator": "drawdown"})


def _event_kernel(grid: TimeGrid, seed: int, members: list[int], *, reset_idx=(),
                  inj_idx=(), inj_sizes=(), absorbing: bool, start: float = 0.0):
    """Step-by-step simulation shared by the reset/injection generators.

    Vectorized over members.  Non-absorbing mode: ``X`` moves with ``dB``
    between events.  Absorbing mode: ``X`` is stopped at its first hit of 0
    (bridge-corrected) and waits at exactly 0 until an injection lifts it.
    Resets jump the drift by ``-X_{t-}``; injections of size ``a`` fire only
    where ``X_{t-} == 0``.  Both rules read left limits only.
    """
    n, dt = grid.steps, grid.dt
    N = len(members)
    dB = rng.gaussian_increments(seed, members, n, dt)
    U = rng.uniforms(seed, members, n) if absorbing else None
    events = {}
    for i in reset_idx:
        events[int(i)] = ("reset", 0.0)
    for i, a in zip(inj_idx, inj_sizes):
        if int(i) in events:
            raise ValueError(f"reset and injection snap to the same grid index {int(i)}")
        events[int(i)] = ("inject", float(a))

    Xpre = np.empty((N, n + 1))
    Xpost = np.empty((N, n + 1))
    M = np.empty((N, n + 1))
    Cpre, Cpost = np.zeros((N, n + 1)), np.zeros((N, n + 1))
    Vpre, Vpost = np.zeros((N, n + 1)), np.zeros((N, n + 1))

    x = np.full(N, float(start))
    m = np.full(N, float(start))
    c = np.zeros(N)
    v = np.zeros(N)
    waiting = np.full(N, absorbing and start == 0.0)
    Xpre[:, 0] = Xpost[:, 0] = x
    M[:, 0] = m
    for i in range(1, n + 1):
        db = dB[:, i - 1]
        if absorbing:
            y = x + db
            # P(bridge from x to y touches 0) = exp(-2 x y / dt) for x, y > 0
            with np.errstate(under="ignore"):
                p = np.exp(-2.0 * np.maximum(x, 0.0) * np.maximum(y, 0.0) / dt)
            hit = ~waiting & ((y <= 0.0) | (U[:, i - 1] < p))
            moving = ~waiting & ~hit
            dm = np.where(moving, db, np.where(hit, -x, 0.0))
            pre = np.where(moving, y, 0.0)
            waiting = waiting | hit
        else:
            pre = x + db
            dm = db
        m = m + dm
        Cpre[:, i] = c
        Vpre[:, i] = v
        post = pre
        ev = events.get(i)
        if ev is not None and ev[0] == "reset":
            c = c - pre
            post = np.zeros(N)
            if absorbing:
                waiting = np.ones(N, dtype=bool)
        elif ev is not None:
            fire = pre == 0.0
            v = v + np.where(fire, ev[1], 0.0)
            post = np.where(fire, ev[1], pre)
            waiting = waiting & ~fire
        Xpre[:, i] = pre
        Xpost[:, i] = post
        M[:, i] = m
        Cpost[:, i] = c
        Vpost[:, i] = v
        x = post
    return Xpre, Xpost, M, Cpre, Cpost, Vpre, Vpost


def _from_kernel(grid, batched, arrays, info) -> SigmaDecomposition:
    Xpre, Xpost, M, Cpre, Cpost, Vpre, Vpost = (a if batched else a[0] for a in arrays)
    X = CadlagPath(grid, Xpre, Xpost)
    Mp = CadlagPath.continuous(grid, M)
    C = CadlagPath(grid, Cpre, Cpost)
    V = CadlagPath(grid, Vpre, Vpost)
    return SigmaDecomposition(X, Mp, C + V, C, V, info)


def gen_reset(grid: TimeGrid, seed: int, reset_times: Sequence[float] = (), member=0):
    """Brownian motion sent back to exactly 0 at deterministic reset times."""
    ridx = snap_times(grid, reset_times, "reset")
    batched, idx = as_index_list(member)
    arrays = _event_kernel(grid, seed, idx, reset_idx=ridx, absorbing=False)
    return _from_kernel(grid, batched, arrays, {"generator": "reset"})


def gen_injection(grid: TimeGrid, seed: int, injection_times: Sequence[float] = (),
                  injection_sizes: Sequence[float] = (), member=0):
    """Zero process lifted by positive injections and absorbed back at 0."""
    _check_injections(injection_times, injection_sizes)
    iidx = snap_times(grid, injection_times, "injection")
    batched, idx = as_index_list(member)
    arrays = _event_kernel(grid, seed, idx, inj_idx=iidx, inj_sizes=injection_sizes,
                           absorbing=True)
    return _from_kernel(grid, batched, arrays, {"generator": "injection"})


def gen_sigma_g(grid: TimeGrid, seed: int, reset_times: Sequence[float] = (),
                injection_times: Sequence[float] = (), injection_sizes: Sequence[float] = (),
                member=0):
    """Resets (drift charged on ``{X = 0}``) and injections (on ``{X_- = 0}``).

    With injections present the process is absorbed at 0 between events and
    stays non-negative; without them it is ``gen_reset`` (and plain Brownian
    motion when both lists are empty).
    """
    _check_injections(injection_times, injection_sizes)
    ridx = snap_times(grid, reset_times, "reset")
    iidx = snap_times(grid, injection_times, "injection")
    if set(ridx.tolist()) & set(iidx.tolist()):
        raise ValueError("reset and injection times overlap after snapping")
    batched, idx = as_index_list(member)
    arrays = _event_kernel(grid, seed, idx, reset_idx=ridx, inj_idx=iidx,
                           inj_sizes=injection_sizes, absorbing=len(iidx) > 0)
    return _from_kernel(grid, batched, arrays, {"generator": "sigma_g"})


def gen_absorbed_bm_martingale(grid: TimeGrid, seed: int, start_level: float = 1.0, member=0):
    """``start_level + B`` stopped at its first hit of 0.

    A martingale fixture (``M_0 = start_level``), not a member of the classes.
    """
    if not start_level > 0:
        raise ValueError(f"start_level must be positive, got {start_level}")
    batched, idx = as_index_list(member)
    arrays = _event_kernel(grid, seed, idx, absorbing=True, start=float(start_level))
    info = {"generator": "absorbed_bm_martingale", "initial_value": float(start_level),
            "fixture": True}
    return _from_kernel(grid, batched, arrays, info)


def predictable_jumps(grid: TimeGrid, spec: "GeneratorSpec", X_pre: np.ndarray):
    """Recompute the drift jumps of ``C`` and ``V`` from left limits alone."""
    p = spec.resolved_params(grid)
    dC = np.zeros_like(X_pre)
    dV = np.zeros_like(X_pre)
    for i in snap_times(grid, p.get("reset_times", ()), "reset"):
        dC[..., i] = -X_pre[..., i]
    inj = snap_times(grid, p.get("injection_times", ()), "injection")
    for i, a in zip(inj, p.get("injection_sizes", ())):
        dV[..., i] = np.where(X_pre[..., i] == 0.0, float(a), 0.0)
    return dC, dV


@dataclass(frozen=True)
class GeneratorSpec:
    """Generator id plus parameters; missing event lists get defaults scaled to T."""

    generator_id: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.generator_id not in GENERATOR_IDS:
            raise ValueError(f"unknown generator_id {self.generator_id!r}; "
                             f"expected one of {GENERATOR_IDS}")
        extra = set(self.params) - _PARAM_KEYS[self.generator_id]
        if extra:
            raise ValueError(f"unknown parameters for {self.generator_id}: {sorted(extra)}")
        object.__setattr__(self, "params", dict(self.params))

    def resolved_params(self, grid: TimeGrid) -> dict:
        out = {}
        for key, val in DEFAULT_FRACTIONS.get(self.generator_id, {}).items():
            if key in self.params:
                out[key] = self.params[key]
            elif key.endswith("_times"):
                out[key] = [f * grid.horizon for f in val]
            else:
                out[key] = val
        return out

    def generate(self, grid: TimeGrid, seed: int, member=0) -> SigmaDecomposition:
        p = self.resolved_params(grid)
        fn = _DISPATCH[self.generator_id]
        return fn(grid, seed, member=member, **p)


_DISPATCH: dict[str, Callable[..., SigmaDecomposition]] = {
    "abs_bm": gen_abs_bm,
    "drawdown": gen_drawdown,
    "reset": gen_reset,
    "injection": gen_injection,
    "sigma_g": gen_sigma_g,
    "absorbed_bm_martingale": gen_absorbed_bm_martingale,
}


def _chunks(size: int, chunk_size: int) -> list[range]:
    return [range(s, min(s + chunk_size, size)) for s in range(0, size, chunk_size)]


def default_chunk_size(grid: TimeGrid, budget: int = 2_000_000) -> int:
    """Members per chunk so that one array of the chunk holds about ``budget`` floats."""
    return max(1, budget // grid.n_points)


def map_ensemble(spec: GeneratorSpec, grid: TimeGrid, seed: int, size: int,
                 fn: Callable[[SigmaDecomposition], Any], *, chunk_size: int | None = None,
                 threads: int = 1) -> list:
    """Generate ``size`` members in chunks and apply ``fn`` to each batch.

    Returns the per-chunk results in member order.  Only one chunk per thread
    is alive at a time, so memory is bounded by ``chunk_size``.
    """
    if size < 1:
        raise ValueError("ensemble size must be positive")
    if chunk_size is None:
        chunk_size = default_chunk_size(grid)
    parts = _chunks(size, chunk_size)

    def work(r):
        return fn(spec.generate(grid, seed, member=r))

    if threads <= 1:
        return [work(r) for r in parts]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(work, parts))


def make_ensemble(spec: GeneratorSpec, grid: TimeGrid, master_seed: int, size: int, *,
                  chunk_size: int | None = None, threads: int = 1) -> PathEnsemble:
    batches = map_ensemble(spec, grid, master_seed, size, lambda d: d,
                           chunk_size=chunk_size, threads=threads)
    batch = batches[0] if len(batches) == 1 else _concat(batches)
    return PathEnsemble(master_seed, spec.generator_id, spec.resolved_params(grid), batch)


def _concat(batches: list[SigmaDecomposition]) -> SigmaDecomposition:
    def cat(name):
        paths = [getattr(b, name) for b in batches]
        return CadlagPath(paths[0].grid, np.concatenate([p.pre for p in paths]),
                          np.concatenate([p.post for p in paths]))
    return SigmaDecomposition(cat("X"), cat("M"), cat("A"), cat("C"), cat("V"), batches[0].info)
