"""Characterization functionals and statistical martingale tests.

Each functional maps a decomposition and a C² test function ``F`` to a path
that should be a martingale exactly when the input belongs to the matching
class.  The tests compare increments between checkpoints against
functionals of the path at the earlier checkpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import CadlagPath, SigmaDecomposition, TimeGrid

__all__ = [
    "TestFunction",
    "TEST_FUNCTIONS",
    "FUNCTIONALS",
    "functional_sigma_nik",
    "functional_sigma",
    "functional_sigma_r",
    "functional_sigma_g",
    "MartingaleTestReport",
    "martingale_test",
    "martingale_test_paths",
    "submartingale_sign_test",
    "default_checkpoints",
    "DEFAULT_H",
    "MIN_PATHS",
    "sample_functional",
    "ensemble_martingale_test",
]

MIN_PATHS = 100


@dataclass(frozen=True)
class TestFunction:
    id: str
    F: Callable[[np.ndarray], np.ndarray]
    dF: Callable[[np.ndarray], np.ndarray]
    d2F: Callable[[np.ndarray], np.ndarray]

    __test__ = False  # keep pytest from collecting the class


TEST_FUNCTIONS: dict[str, TestFunction] = {
    "poly1": TestFunction("poly1", lambda x: x, np.ones_like, np.zeros_like),
    "poly2": TestFunction("poly2", lambda x: x * x, lambda x: 2.0 * x, lambda x: np.full_like(x, 2.0)),
    "poly3": TestFunction("poly3", lambda x: x ** 3, lambda x: 3.0 * x * x, lambda x: 6.0 * x),
    "exp": TestFunction("exp", np.exp, np.exp, np.exp),
}


def _tf(tf) -> TestFunction:
    if isinstance(tf, TestFunction):
        return tf
    try:
        return TEST_FUNCTIONS[tf]
    except KeyError:
        raise ValueError(f"unknown test function {tf!r}; choose from {sorted(TEST_FUNCTIONS)}") from None


def _cum_jumps(jump: np.ndarray):
    """Cumulative jumps up to and including ``i`` (post) and before ``i`` (pre)."""
    post = np.cumsum(jump, axis=-1)
    pre = post - jump
    return pre, post


def _assemble(grid: TimeGrid, base: CadlagPath, X: CadlagPath, tf: TestFunction,
              weighted_jumps: Sequence[tuple[np.ndarray, np.ndarray]]) -> CadlagPath:
    """``F(B^c) - F'(B^c) X + sum [F'(B^c) - F''(B^c) Y] dJ``.

    ``base`` is the drift, ``weighted_jumps`` pairs each jump array ``dJ``
    with the value array ``Y`` it is weighted by.
    """
    # continuous part as the running sum of continuous increments, which is
    # exactly zero for a pure-jump drift
    bc_post = np.cumsum(base.increment, axis=-1)
    bc_pre = bc_post
    terms = 0.0
    for j, y in weighted_jumps:
        terms = terms + (tf.dF(bc_post) - tf.d2F(bc_post) * y) * j
    js_pre, js_post = _cum_jumps(terms)
    pre = tf.F(bc_pre) - tf.dF(bc_pre) * X.pre + js_pre
    post = tf.F(bc_post) - tf.dF(bc_post) * X.post + js_post
    return CadlagPath(grid, pre, post)


def functional_sigma_nik(d: SigmaDecomposition, tf) -> CadlagPath:
    """``F(A) - F'(A) X`` for a continuous drift."""
    tf = _tf(tf)
    if np.max(np.abs(d.A.jump), initial=0.0) > 1e-12:
        raise ValueError("drift has jumps; this form needs a continuous drift")
    return _assemble(d.grid, d.A, d.X, tf, [])


def functional_sigma(d: SigmaDecomposition, tf) -> CadlagPath:
    """Drift jumps weighted by the value after the jump."""
    tf = _tf(tf)
    return _assemble(d.grid, d.A, d.X, tf, [(d.A.jump, d.X.post)])


def functional_sigma_r(d: SigmaDecomposition, tf) -> CadlagPath:
    """Drift jumps weighted by the left limit."""
    tf = _tf(tf)
    return _assemble(d.grid, d.A, d.X, tf, [(d.A.jump, d.X.pre)])


def functional_sigma_g(d: SigmaDecomposition, tf) -> CadlagPath:
    """C-jumps weighted by the value after the jump, V-jumps by the left limit."""
    tf = _tf(tf)
    return _assemble(d.grid, d.A, d.X, tf, [(d.C.jump, d.X.post), (d.V.jump, d.X.pre)])


FUNCTIONALS: dict[str, Callable[[SigmaDecomposition, object], CadlagPath]] = {
    "sigma_nik": functional_sigma_nik,
    "sigma": functional_sigma,
    "sigma_r": functional_sigma_r,
    "sigma_g": functional_sigma_g,
}


def default_checkpoints(grid: TimeGrid) -> list[float]:
    T = grid.horizon
    return [T / 4, T / 2, 3 * T / 4, T]


DEFAULT_H: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "one": np.ones_like,
    "x": lambda x: x,
    "x2": lambda x: x * x,
    "above_median": lambda x: (x > np.median(x)).astype(float),
}


@dataclass(frozen=True)
class MartingaleTestReport:
    """One z-score per ``(s, t, h)`` row; ``passed`` iff ``max_abs_z <= z_threshold``.

    A row whose products have zero spread reports ``z = 0`` for a zero mean
    and ``z = inf`` otherwise.
    """

    checkpoints: list
    stats: list
    max_abs_z: float
    n_paths: int
    z_threshold: float
    passed: bool
    flags: dict = field(default_factory=dict)

    def z_table(self) -> dict:
        return {(s, t, h): z for s, t, h, z in self.stats}

    def to_json(self, **extra) -> dict:
        def enc(z):
            return z if math.isfinite(z) else ("+inf" if z > 0 else "-inf")
        return {
            **extra,
            "checkpoints": list(self.checkpoints),
            "table": [{"s": s, "t": t, "h": h, "z": enc(z)} for s, t, h, z in self.stats],
            "max_abs_z": enc(self.max_abs_z),
            "n_paths": self.n_paths,
            "z_threshold": self.z_threshold,
            "pass": self.passed,
            **({"flags": self.flags} if self.flags else {}),
        }


def _z(products: np.ndarray) -> float:
    n = products.shape[0]
    mean = float(np.mean(products))
    sd = float(np.std(products, ddof=1))
    if sd == 0.0 or not math.isfinite(sd):
        return 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
    return mean / (sd / math.sqrt(n))


def _check_inputs(values: np.ndarray, checkpoints) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(checkpoints):
        raise ValueError("values must have shape (n_paths, n_checkpoints)")
    if values.shape[0] < MIN_PATHS:
        raise ValueError(f"martingale tests need at least {MIN_PATHS} paths, got {values.shape[0]}")
    return values


def martingale_test(values, checkpoints: Sequence[float], state=None,
                    h: Mapping[str, Callable] | None = None, z_threshold: float = 4.0,
                    flags: dict | None = None) -> MartingaleTestReport:
    """Test ``E[(N_t - N_s) h(X_s)] = 0`` for every checkpoint pair ``s < t``.

    ``values[k, j]`` is ``N`` of path ``k`` at ``checkpoints[j]``; ``state``
    (same shape, default ``values``) is the process fed to the ``h`` functions.
    """
    values = _check_inputs(values, checkpoints)
    state = values if state is None else np.asarray(state, dtype=float)
    h = DEFAULT_H if h is None else h
    stats = []
    for a in range(len(checkpoints)):
        hs = {name: np.asarray(fn(state[:, a]), dtype=float) for name, fn in h.items()}
        for b in range(a + 1, len(checkpoints)):
            inc = values[:, b] - values[:, a]
            for name, hv in hs.items():
                stats.append((float(checkpoints[a]), float(checkpoints[b]), name, _z(inc * hv)))
    max_abs = max((abs(r[3]) for r in stats), default=0.0)
    return MartingaleTestReport(list(map(float, checkpoints)), stats, max_abs,
                                values.shape[0], z_threshold, bool(max_abs <= z_threshold),
                                dict(flags or {}))


def martingale_test_paths(N: CadlagPath, X: CadlagPath | None = None,
                          checkpoints: Sequence[float] | None = None, **kw) -> MartingaleTestReport:
    """``martingale_test`` on batched paths, sampled at grid checkpoints."""
    if len(N.batch_shape) != 1:
        raise ValueError("expected a batch of paths with one batch axis")
    cps = default_checkpoints(N.grid) if checkpoints is None else list(checkpoints)
    idx = [N.grid.index(t) for t in cps]
    X = N if X is None else X
    flags = dict(kw.pop("flags", {}) or {})
    if np.min(X.post) < -1e-10:
        flags.setdefault("signed_input", True)
    return martingale_test(N.post[:, idx], [N.grid.times[i] for i in idx],
                           state=X.post[:, idx], flags=flags, **kw)


def submartingale_sign_test(values, checkpoints: Sequence[float], z_min: float = -3.0
                            ) -> MartingaleTestReport:
    """One-sided test that mean increments between checkpoints are ``>= z_min`` stderr.

    ``values`` holds the process (e.g. ``X^+``) at the checkpoints.  The
    report's ``max_abs_z`` field carries the most negative z.
    """
    values = _check_inputs(values, checkpoints)
    stats = []
    for a in range(len(checkpoints)):
        for b in range(a + 1, len(checkpoints)):
            stats.append((float(checkpoints[a]), float(checkpoints[b]), "one",
                          _z(values[:, b] - values[:, a])))
    worst = min((r[3] for r in stats), default=0.0)
    return MartingaleTestReport(list(map(float, checkpoints)), stats, worst,
                                values.shape[0], z_min, bool(worst >= z_min))


def sample_functional(spec, grid: TimeGrid, seed: int, size: int, functional: str, tf,
                      checkpoints: Sequence[float] | None = None, *, chunk_size: int = 1000,
                      threads: int = 1):
    """Generate an ensemble chunk by chunk and sample ``N`` and ``X`` at checkpoints.

    Returns ``(times, N_values, X_values)`` with arrays of shape
    ``(size, n_checkpoints)``; full paths are never held for the whole ensemble.
    """
    from .generators import map_ensemble

    fn = FUNCTIONALS[functional]
    cps = default_checkpoints(grid) if checkpoints is None else list(checkpoints)
    idx = [grid.index(t) for t in cps]

    def per_chunk(d):
        N = fn(d, tf)
        return N.post[:, idx], d.X.post[:, idx]

    parts = map_ensemble(spec, grid, seed, size, per_chunk, chunk_size=chunk_size, threads=threads)
    return ([float(grid.times[i]) for i in idx], np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]))


def ensemble_martingale_test(spec, grid: TimeGrid, seed: int, size: int, functional: str, tf,
                             checkpoints: Sequence[float] | None = None, *,
                             z_threshold: float = 4.0, chunk_size: int = 1000,
                             threads: int = 1) -> MartingaleTestReport:
    times, N, X = sample_functional(spec, grid, seed, size, functional, tf, checkpoints,
                                    chunk_size=chunk_size, threads=threads)
    flags = {"signed_input": True} if np.min(X) < -1e-10 else {}
    return martingale_test(N, times, state=X, z_threshold=z_threshold, flags=flags)
