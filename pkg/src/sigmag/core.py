"""Time grids, càdlàg paths with explicit left limits, and decomposition bundles.

A path on a grid ``t_i = i * dt`` stores two arrays: ``pre[i]`` is the left
limit ``X_{t_i-}`` and ``post[i]`` is the value ``X_{t_i}``.  Jumps live
exactly at grid points, diffusive motion lives strictly inside intervals, so
the continuous increment into ``t_i`` is ``pre[i] - post[i-1]`` and the jump
at ``t_i`` is ``post[i] - pre[i]``.

Every array may carry leading batch axes; time is always the last axis.  A
batched path is an ensemble of paths sharing one grid.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "TimeGrid",
    "CadlagPath",
    "SigmaDecomposition",
    "PathEnsemble",
    "make_grid",
    "total_variation",
    "stieltjes_integral",
    "left_point",
    "write_csv",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("t", "X_pre", "X_post", "M_post", "A_post", "C_post", "V_post")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, horizon]`` with ``steps`` intervals."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not (isinstance(self.horizon, (int, float)) and math.isfinite(self.horizon)
                and self.horizon > 0):
            raise ValueError(f"horizon must be a positive finite real, got {self.horizon!r}")
        if isinstance(self.steps, bool) or int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def n_points(self) -> int:
        return self.steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def index(self, t: float) -> int:
        """Nearest grid index to time ``t`` (clipped to the grid)."""
        i = int(round(t / self.dt))
        return min(max(i, 0), self.steps)


def make_grid(horizon: float, steps: int) -> TimeGrid:
    return TimeGrid(horizon, steps)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CadlagPath:
    """Left limits ``pre`` and values ``post`` of a càdlàg path on ``grid``."""

    grid: TimeGrid
    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        pre = _frozen(self.pre)
        post = _frozen(self.post)
        if pre.shape != post.shape:
            raise ValueError(f"pre/post shape mismatch: {pre.shape} vs {post.shape}")
        if pre.ndim == 0 or pre.shape[-1] != self.grid.n_points:
            raise ValueError(
                f"path length {pre.shape[-1:]} does not match grid of {self.grid.n_points} points")
        if not np.array_equal(pre[..., 0], post[..., 0]):
            raise ValueError("a path cannot jump at time 0 (pre[0] must equal post[0])")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)

    @classmethod
    def continuous(cls, grid: TimeGrid, values) -> "CadlagPath":
        """Path without jumps: left limits equal values."""
        v = _frozen(values)
        return cls(grid, v, v)

    @classmethod
    def zeros(cls, grid: TimeGrid, batch_shape: tuple = ()) -> "CadlagPath":
        return cls.continuous(grid, np.zeros(batch_shape + (grid.n_points,)))

    @property
    def batch_shape(self) -> tuple:
        return self.post.shape[:-1]

    @property
    def jump(self) -> np.ndarray:
        return self.post - self.pre

    @property
    def increment(self) -> np.ndarray:
        """Continuous increment arriving at each grid point (0 at index 0)."""
        inc = np.zeros_like(self.post)
        inc[..., 1:] = self.pre[..., 1:] - self.post[..., :-1]
        return inc

    def __getitem__(self, idx) -> "CadlagPath":
        """Select ensemble members along the batch axes."""
        if not self.batch_shape:
            raise IndexError("cannot index a single path; it has no batch axis")
        return CadlagPath(self.grid, self.pre[idx], self.post[idx])

    def __add__(self, other: "CadlagPath") -> "CadlagPath":
        _check_same_grid(self, other)
        return CadlagPath(self.grid, self.pre + other.pre, self.post + other.post)

    def __sub__(self, other: "CadlagPath") -> "CadlagPath":
        _check_same_grid(self, other)
        return CadlagPath(self.grid, self.pre - other.pre, self.post - other.post)

    def __neg__(self) -> "CadlagPath":
        return CadlagPath(self.grid, -self.pre, -self.post)

    def scale(self, c: float) -> "CadlagPath":
        return CadlagPath(self.grid, c * self.pre, c * self.post)

    def at(self, t: float) -> np.ndarray:
        return self.post[..., self.grid.index(t)]


def _check_same_grid(*paths: CadlagPath) -> None:
    g = paths[0].grid
    for p in paths[1:]:
        if p.grid != g:
            raise ValueError("paths live on different grids")


def left_point(p: CadlagPath) -> np.ndarray:
    """Value at the left end of the interval leading into each grid point.

    ``out[i] = post[i-1]`` for ``i >= 1`` and ``out[0] = post[0]``; this is the
    predictable evaluation for continuous increments.
    """
    out = np.empty_like(p.post)
    out[..., 0] = p.post[..., 0]
    out[..., 1:] = p.post[..., :-1]
    return out


def total_variation(p: CadlagPath) -> np.ndarray | float:
    """Sum of absolute continuous increments and absolute jumps."""
    tv = np.abs(p.increment).sum(axis=-1) + np.abs(p.jump).sum(axis=-1)
    return float(tv) if np.ndim(tv) == 0 else tv


def stieltjes_integral(h, p: CadlagPath, h_jump=None) -> CadlagPath:
    """Cumulative Stieltjes sum of ``h`` against ``p``.

    ``h[i]`` weights the continuous increment arriving at ``t_i`` and
    ``h_jump[i]`` (default ``h``) weights the jump at ``t_i``.  Supplying
    ``left_point(x)`` for ``h`` and ``x.pre`` for ``h_jump`` gives the
    predictable (left-point) integral.  The result starts at 0.
    """
    h = np.asarray(h, dtype=np.float64)
    hj = h if h_jump is None else np.asarray(h_jump, dtype=np.float64)
    for name, arr in (("h", h), ("h_jump", hj)):
        if arr.shape[-1:] != (p.grid.n_points,):
            raise ValueError(f"{name} has length {arr.shape[-1:]}, expected {p.grid.n_points}")
    cont = h * p.increment
    jmp = hj * p.jump
    shape = np.broadcast_shapes(cont.shape, jmp.shape)
    cont = np.broadcast_to(cont, shape)
    jmp = np.broadcast_to(jmp, shape)
    post = np.cumsum(cont + jmp, axis=-1)
    pre = np.empty(shape)
    pre[..., 0] = 0.0
    pre[..., 1:] = post[..., :-1] + cont[..., 1:]
    post = post.copy()
    post[..., 0] = 0.0
    return CadlagPath(p.grid, pre, post)


@dataclass(frozen=True, eq=False)
class SigmaDecomposition:
    """``X = M + A`` with the drift split ``A = C + V``, all on one grid.

    ``info`` carries generator metadata, e.g. ``initial_value`` for martingale
    fixtures that do not start at zero.
    """

    X: CadlagPath
    M: CadlagPath
    A: CadlagPath
    C: CadlagPath
    V: CadlagPath
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        _check_same_grid(self.X, self.M, self.A, self.C, self.V)
        shapes = {p.post.shape for p in (self.X, self.M, self.A, self.C, self.V)}
        if len(shapes) != 1:
            raise ValueError(f"components have different shapes: {sorted(shapes)}")

    @classmethod
    def from_parts(cls, M: CadlagPath, C: CadlagPath, V: CadlagPath,
                   X: CadlagPath | None = None, **info) -> "SigmaDecomposition":
        A = C + V
        if X is None:
            X = M + A
        return cls(X, M, A, C, V, dict(info))

    @property
    def grid(self) -> TimeGrid:
        return self.X.grid

    @property
    def batch_shape(self) -> tuple:
        return self.X.batch_shape

    def __len__(self) -> int:
        if not self.batch_shape:
            raise TypeError("single-path decomposition has no length")
        return self.batch_shape[0]

    def __getitem__(self, idx) -> "SigmaDecomposition":
        return SigmaDecomposition(self.X[idx], self.M[idx], self.A[idx],
                                  self.C[idx], self.V[idx], self.info)

    def __neg__(self) -> "SigmaDecomposition":
        return SigmaDecomposition(-self.X, -self.M, -self.A, -self.C, -self.V, self.info)

    def additivity_error(self) -> float:
        """Largest relative violation of ``X = M + A`` and ``A = C + V``."""
        err = 0.0
        for lhs, parts in ((self.X, (self.M, self.A)), (self.A, (self.C, self.V))):
            for arr in ("pre", "post"):
                x = getattr(lhs, arr)
                s = getattr(parts[0], arr) + getattr(parts[1], arr)
                err = max(err, float(np.max(np.abs(x - s) / (1.0 + np.abs(x)))))
        return err

    def check(self, rtol: float = 1e-10) -> None:
        """Raise ``AssertionError`` if a structural invariant fails."""
        if self.additivity_error() > rtol:
            raise AssertionError(f"additivity violated: {self.additivity_error():.3e}")
        m0 = self.info.get("initial_value", 0.0)
        if not np.all(self.M.post[..., 0] == m0):
            raise AssertionError("M does not start at its initial value")
        if not np.all(self.A.post[..., 0] == 0.0):
            raise AssertionError("A does not start at 0")


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Seeded ensemble; member ``k`` is regenerable from ``(master_seed, k)``.

    Members are stored batched along the first axis of ``batch``.
    """

    master_seed: int
    generator_id: str
    params: Mapping[str, Any]
    batch: SigmaDecomposition
    indices: tuple = ()

    def __post_init__(self):
        if not self.indices:
            object.__setattr__(self, "indices", tuple(range(len(self.batch))))

    def __len__(self) -> int:
        return len(self.batch)

    def __getitem__(self, k: int) -> SigmaDecomposition:
        return self.batch[k]

    def __iter__(self) -> Iterator[SigmaDecomposition]:
        for k in range(len(self)):
            yield self.batch[k]

    @property
    def members(self) -> list[SigmaDecomposition]:
        return list(self)

    @property
    def grid(self) -> TimeGrid:
        return self.batch.grid


def write_csv(d: SigmaDecomposition, path) -> None:
    """Dump one path in the fixed column layout; floats use ``repr``."""
    if d.batch_shape:
        raise ValueError("write_csv takes a single path; index the ensemble first")
    cols = (d.grid.times, d.X.pre, d.X.post, d.M.post, d.A.post, d.C.post, d.V.post)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array(body, dtype=np.float64).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def as_index_list(members: int | Sequence[int]) -> tuple[bool, list[int]]:
    """Normalize a member selector: ``(is_batched, indices)``."""
    if isinstance(members, (int, np.integer)):
        return False, [int(members)]
    idx = [int(k) for k in members]
    return True, idx
