"""Exact Gaussian sampling of Brownian motions and bridges.

Bridges are generated by sequential conditioning (at each step the mean is
pulled toward the pinned endpoint by dt/(time left)), which pins the endpoint
exactly instead of subtracting a drift from a motion path and losing the
endpoint to cancellation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .seeding import stream

__all__ = ["PathEnsemble", "sample_paths", "girsanov_weight"]


@dataclass(frozen=True)
class PathEnsemble:
    """m sampled paths on the uniform time grid {0, dt, ..., t}.

    kind is "motion" (Brownian motion from 0) or "bridge" (pinned to 0 at
    both ends).  points has shape (m, n_t + 1, d).
    """

    kind: str
    t: float
    d: int
    n_t: int
    m: int
    seed: int
    points: np.ndarray

    @property
    def dt(self):
        return self.t / self.n_t

    def times(self):
        return np.linspace(0.0, self.t, self.n_t + 1)


def sample_paths(kind, t, d, n_t, m, seed, rng=None):
    """Exact path sampling at uniform times; see PathEnsemble.

    Passing an explicit generator `rng` (e.g. a realization substream)
    overrides the seed-keyed one; `seed` is still recorded as metadata.
    """
    if kind not in ("motion", "bridge"):
        raise ValueError(f"kind must be 'motion' or 'bridge', got {kind!r}")
    if t <= 0 or n_t < 1 or m < 1:
        raise ValueError(f"need t > 0, n_t >= 1, m >= 1, got t={t} n_t={n_t} m={m}")
    if rng is None:
        rng = stream(seed)
    dt = t / n_t
    pts = np.empty((m, n_t + 1, d))
    pts[:, 0] = 0.0
    if kind == "motion":
        inc = rng.standard_normal((m, n_t, d)) * math.sqrt(dt)
        np.cumsum(inc, axis=1, out=pts[:, 1:])
    else:
        x = np.zeros((m, d))
        for k in range(n_t - 1):
            remaining = t - k * dt
            var = dt * (remaining - dt) / remaining
            x = x * (1.0 - dt / remaining) + rng.standard_normal((m, d)) * math.sqrt(var)
            pts[:, k + 1] = x
        pts[:, n_t] = 0.0
    return PathEnsemble(kind=kind, t=t, d=d, n_t=n_t, m=m, seed=seed, points=pts)


def girsanov_weight(points_u, t, u, x=None):
    """Radon-Nikodym weight turning motion paths on [0, u] into bridge paths.

    For B sampled as a motion up to time u < t, weighting by

        (t/(t-u))^(d/2) exp(-|x|^2 u / (2t(t-u)) - |B_u|^2/(2(t-u)) + <x, B_u>/(t-u))

    reproduces the law of the bridge from 0 at time 0 to x at time t,
    restricted to [0, u].  `points_u` holds the motion endpoints B_u, shape
    (m, d) or (n_t+1, d) for a single path (the last row is used).
    """
    if not 0 < u < t:
        raise ValueError(f"need 0 < u < t, got u={u}, t={t}")
    pts = np.asarray(points_u, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    elif pts.ndim == 3:
        pts = pts[:, -1, :]
    d = pts.shape[-1]
    if x is None:
        x = np.zeros(d)
    x = np.asarray(x, dtype=float)
    bu2 = np.einsum("md,md->m", pts, pts)
    xb = pts @ x
    log_w = (
        0.5 * d * math.log(t / (t - u))
        - float(x @ x) * u / (2 * t * (t - u))
        - bu2 / (2 * (t - u))
        + xb / (t - u)
    )
    return np.exp(log_w)
