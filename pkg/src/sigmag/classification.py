"""Class membership measured as the share of drift variation off each carrier set."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SigmaDecomposition, total_variation
from .pathops import zero_set

__all__ = ["ClassReport", "class_diagnostics", "default_threshold", "EXACT_THRESHOLD"]

EXACT_THRESHOLD = 1e-6
_DELTA = 1e-15


def default_threshold(tol: float, dt: float) -> float:
    """Verdict threshold: strict for exact-zero inputs, ``10 sqrt(dt)`` otherwise."""
    return EXACT_THRESHOLD if tol == 0 else 10.0 * math.sqrt(dt)


@dataclass(frozen=True)
class ClassReport:
    """Leakages in ``[0, 1]``; for ensembles the worst member is reported.

    ``per_member`` holds the ``(N, 3)`` leakage table (columns Σ, Σ^r, Σ^g)
    when the input was batched.
    """

    leakage_sigma: float
    leakage_sigma_r: float
    leakage_sigma_g: float
    tv_drift: float
    tol: float
    threshold: float
    per_member: np.ndarray | None = None

    @property
    def verdicts(self) -> dict[str, bool]:
        return {
            "sigma": self.leakage_sigma <= self.threshold,
            "sigma_r": self.leakage_sigma_r <= self.threshold,
            "sigma_g": self.leakage_sigma_g <= self.threshold,
        }

    def to_json(self, generator: str | None = None) -> dict:
        return {
            "generator": generator,
            "tol": self.tol,
            "leakage_sigma": self.leakage_sigma,
            "leakage_sigma_r": self.leakage_sigma_r,
            "leakage_sigma_g": self.leakage_sigma_g,
            "tv_drift": self.tv_drift,
            "threshold": self.threshold,
            "verdicts": self.verdicts,
        }


def leakages(d: SigmaDecomposition, tol: float = 0.0) -> np.ndarray:
    """Per-path leakages, shape ``batch_shape + (3,)``; columns Σ, Σ^r, Σ^g.

    A continuous drift increment is on the carrier when the motion over its
    interval reaches the zero band; jumps are judged by the value after the
    jump (Σ), before it (Σ^r), or either (Σ^g).
    """
    z = zero_set(d, tol)
    cont = np.abs(d.A.increment)
    jump = np.abs(d.A.jump)
    off_cont = (cont * ~z.crossed).sum(axis=-1)
    out = np.stack([
        off_cont + (jump * ~z.at_zero).sum(axis=-1),
        off_cont + (jump * ~z.left_zero).sum(axis=-1),
        off_cont + (jump * ~z.either_zero).sum(axis=-1),
    ], axis=-1)
    tv = np.asarray(total_variation(d.A))
    return out / np.maximum(tv, _DELTA)[..., None]


def class_diagnostics(d: SigmaDecomposition, tol: float = 0.0,
                      threshold: float | None = None) -> ClassReport:
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if threshold is None:
        threshold = default_threshold(tol, d.grid.dt)
    leak = leakages(d, tol)
    tv = np.asarray(total_variation(d.A))
    worst = leak.reshape(-1, 3).max(axis=0)
    return ClassReport(
        leakage_sigma=float(worst[0]),
        leakage_sigma_r=float(worst[1]),
        leakage_sigma_g=float(worst[2]),
        tv_drift=float(tv.max()),
        tol=float(tol),
        threshold=float(threshold),
        per_member=leak.reshape(-1, 3) if d.batch_shape else None,
    )
