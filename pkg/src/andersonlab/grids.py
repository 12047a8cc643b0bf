"""Uniform interior-node grids on the centered square box."""

from dataclasses import dataclass

import numpy as np

__all__ = ["GridSpec"]


@dataclass(frozen=True)
class GridSpec:
    """n x n interior nodes tiling the open box (-L/2, L/2)^2.

    Spacing is h = L/(n+1); node i sits at -L/2 + (i+1)h, so the first and
    last nodes are one spacing away from the Dirichlet boundary.
    """

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"box side must be positive, got L={self.L}")
        if self.n < 1:
            raise ValueError(f"need at least one interior node per side, got n={self.n}")

    @property
    def h(self):
        return self.L / (self.n + 1)

    def coords(self):
        """1D interior node coordinates (shared by both axes)."""
        return -self.L / 2 + self.h * np.arange(1, self.n + 1)

    def boundary_distance(self):
        """n x n array of node distances to the nearest box wall."""
        x = self.coords()
        d = np.minimum(x + self.L / 2, self.L / 2 - x)
        return np.minimum(d[:, None], d[None, :])
