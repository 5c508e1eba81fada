"""Synthetic functional samples for size/power studies and tests.

Base process is a discretized Brownian motion started at 0, matching the
shape of log cumulative-return curves. Alternatives add a per-group drift
delta * m(t) (m(t) = t by default) or rescale whole groups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import FunctionalSample, PooledDataset, TimeGrid
from .errors import DataValidationError


@dataclass(frozen=True)
class ScenarioSpec:
    sizes: tuple
    J: int
    seed: int = 0
    mean_shift: tuple | None = None  # delta per group, default all 0
    scale: tuple | None = None  # sigma per group, default all 1

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if len(self.sizes) < 2 or any(n < 2 for n in self.sizes):
            raise DataValidationError("need K >= 2 groups with n_j >= 2")
        if self.J < 2:
            raise DataValidationError("J must be >= 2")
        K = len(self.sizes)
        shift = self.mean_shift if self.mean_shift is not None else (0.0,) * K
        scale = self.scale if self.scale is not None else (1.0,) * K
        if len(shift) != K or len(scale) != K:
            raise DataValidationError("mean_shift and scale must have one entry per group")
        if any(s <= 0 for s in scale):
            raise DataValidationError("scale factors must be positive")
        object.__setattr__(self, "mean_shift", tuple(float(v) for v in shift))
        object.__setattr__(self, "scale", tuple(float(v) for v in scale))

    @property
    def K(self) -> int:
        return len(self.sizes)


def generate(spec: ScenarioSpec, mean_shape=None) -> PooledDataset:
    """Brownian curves on an equispaced grid, deterministic given the seed."""
    grid = TimeGrid.equispaced(spec.J)
    t = grid.points
    m = t if mean_shape is None else np.asarray([mean_shape(tk) for tk in t])
    rng = np.random.default_rng(spec.seed)
    samples = []
    for g, n in enumerate(spec.sizes):
        increments = rng.standard_normal((n, spec.J - 1)) * np.sqrt(np.diff(t))
        curves = np.zeros((n, spec.J))
        curves[:, 1:] = np.cumsum(increments, axis=1)
        curves *= spec.scale[g]
        curves += spec.mean_shift[g] * m
        # drift is added everywhere except the fixed start at t_1 = 0
        curves[:, 0] = spec.mean_shift[g] * m[0]
        samples.append(FunctionalSample(f"g{g + 1}", curves, grid))
    return PooledDataset(tuple(samples), grid)
