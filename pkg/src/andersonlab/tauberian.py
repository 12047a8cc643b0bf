"""Exact tail/transform exponent-constant conversions and log-asymptotic fits.

A distribution function with log rho(lambda) ~ -A |lambda|^alpha as
lambda -> -infinity has Laplace transform log k(t) ~ B t^gamma with

    alpha = gamma/(gamma - 1),   A = (gamma - 1) gamma^(gamma/(1-gamma)) B^(1/(1-gamma))

and conversely; both directions are closed-form and exactly involutive on the
admissible domain alpha, gamma > 1.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["TauberianPair", "tauberian_convert", "laplace_of_samples", "fit_log_asymptotics"]


@dataclass(frozen=True)
class TauberianPair:
    alpha: float
    A: float
    gamma: float
    B: float


def tauberian_convert(direction, exponent, constant):
    """Fill the complementary (exponent, constant) pair.

    direction "tail_to_transform" maps (alpha, A) to (gamma, B);
    "transform_to_tail" maps (gamma, B) to (alpha, A).
    """
    if exponent <= 1:
        raise ValueError(f"conversion degenerates at exponent <= 1, got {exponent}")
    if constant <= 0:
        raise ValueError(f"constant must be positive, got {constant}")
    if direction == "transform_to_tail":
        gamma, B = exponent, constant
        alpha = gamma / (gamma - 1)
        A = (gamma - 1) * gamma ** (gamma / (1 - gamma)) * B ** (1 / (1 - gamma))
    elif direction == "tail_to_transform":
        alpha, A = exponent, constant
        gamma = alpha / (alpha - 1)
        # invert A = (gamma-1) gamma^(gamma/(1-gamma)) B^(1/(1-gamma))
        B = (A / (gamma - 1)) ** (1 - gamma) * gamma ** (-gamma)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return TauberianPair(alpha=alpha, A=A, gamma=gamma, B=B)


def laplace_of_samples(values, weights, t):
    """sum_i w_i exp(-t v_i), evaluated through log-sum-exp.

    Never raises on overflow; +inf is returned when the float range is
    exceeded.  Weights must be nonnegative.
    """
    v = np.asarray(values, dtype=float)
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    if v.size == 0:
        return 0.0
    x = -t * v
    keep = w > 0
    if not keep.any():
        return 0.0
    x = x[keep] + np.log(w[keep])
    mx = float(np.max(x))
    if not math.isfinite(mx):
        return math.inf if mx > 0 else 0.0
    log_sum = mx + math.log(float(np.sum(np.exp(x - mx))))
    return math.exp(log_sum) if log_sum < 709.0 else math.inf


@dataclass(frozen=True)
class LogAsymptoticFit:
    constant: float
    stderr: float
    curvature: float
    curvature_z: float
    hypothesis: float
    kind: str
    window: tuple
    n_points: int

    def curvature_flag(self, z_crit=4.0):
        return abs(self.curvature_z) > z_crit


def fit_log_asymptotics(points, exponent, kind="transform"):
    """Constant of log k(t) ~ B t^gamma (or log rho ~ -A |lambda|^alpha).

    `points` is a sequence of (t, k(t)) pairs for kind="transform", or
    (lambda, rho(lambda)) with lambda < 0 for kind="tail"; `exponent` is the
    hypothesized gamma (resp. alpha).  The regression is log of the second
    coordinate against the powered first coordinate with an intercept for the
    subleading factor; the quadratic refit's z-score flags a wrong exponent
    hypothesis.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise ValueError("need at least 4 (abscissa, value) pairs")
    a, val = pts[:, 0], pts[:, 1]
    if np.any(val <= 0):
        raise ValueError("values must be positive to take logs")
    if kind == "transform":
        x = a**exponent
        sign = 1.0
    elif kind == "tail":
        if np.any(a >= 0):
            raise ValueError("tail fits expect negative abscissas")
        x = np.abs(a) ** exponent
        sign = -1.0
    else:
        raise ValueError(f"unknown kind {kind!r}")
    y = np.log(val)
    span = x.max() - x.min()
    if span <= 0:
        raise ValueError("degenerate window: no spread in the abscissa")

    X1 = np.column_stack([np.ones_like(x), x])
    beta1, res1, *_ = np.linalg.lstsq(X1, y, rcond=None)
    resid = y - X1 @ beta1
    dof = max(x.size - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X1.T @ X1)
    stderr = math.sqrt(max(cov[1, 1], 0.0))

    xc = (x - x.mean()) / span  # conditioning for the quadratic refit
    X2 = np.column_stack([np.ones_like(xc), xc, xc**2])
    beta2, *_ = np.linalg.lstsq(X2, y, rcond=None)
    resid2 = y - X2 @ beta2
    dof2 = max(x.size - 3, 1)
    # floor the residual scale at float-level noise so exactly representable
    # data does not read as infinitely significant curvature
    s22 = max(float(resid2 @ resid2) / dof2, (1e-10 * max(1.0, float(np.abs(y).max()))) ** 2)
    cov2 = s22 * np.linalg.inv(X2.T @ X2)
    curv_z = float(beta2[2] / math.sqrt(max(cov2[2, 2], 1e-300)))

    return LogAsymptoticFit(
        constant=sign * float(beta1[1]),
        stderr=stderr,
        curvature=float(beta2[2]) / span**2,
        curvature_z=curv_z,
        hypothesis=exponent,
        kind=kind,
        window=(float(a.min()), float(a.max())),
        n_points=int(x.size),
    )
