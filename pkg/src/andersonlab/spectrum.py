"""Discretized box Hamiltonians, their low spectra, and counting measures.

The operator is the 5-point Dirichlet Laplacian scaled by 1/2 plus the
diagonal renormalized potential.  Low eigenvalues come from shift-invert
Lanczos (ARPACK) with a deterministic start vector, or a dense solve for
small grids; completeness of a lambda <= lambda_max sweep is certified by
buffer eigenvalues above the cut.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import GridSpec

__all__ = [
    "SpectrumResult",
    "EmpiricalIDS",
    "assemble",
    "dirichlet_eigenvalues_free",
    "lowest_eigenvalues",
    "counting_function",
    "laplace_of_counting",
    "aggregate_ids",
    "lifshitz_fit",
]

_DENSE_DIM = 4096
_BUFFER = 5


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted low eigenvalues of one disorder realization."""

    grid: GridSpec
    eps: float
    seed: int
    eigenvalues: np.ndarray
    lambda_max: float
    complete: bool
    pot_max: float
    eigenvectors: np.ndarray | None = None

    def counting(self, lam):
        return counting_function(self, lam)


@dataclass(frozen=True)
class EmpiricalIDS:
    """Mean eigenvalue-counting function over realizations with a bootstrap band."""

    L: float
    eps: float
    lambdas: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    counts: np.ndarray
    n_realizations: int
    per_realization: np.ndarray = field(repr=False, default=None)


def assemble(grid, noise):
    """Sparse symmetric -(1/2) Lap_h - (values - c_eps) on the n^2 nodes."""
    if noise.grid != grid:
        raise ValueError("noise was sampled on a different grid")
    n, h = grid.n, grid.h
    lap1 = sp.diags(
        [np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)], [-1, 0, 1]
    ) / h**2
    eye = sp.identity(n)
    kinetic = 0.5 * (sp.kron(lap1, eye) + sp.kron(eye, lap1))
    return (kinetic - sp.diags(noise.potential().ravel())).tocsc()


def dirichlet_eigenvalues_free(grid, count=None):
    """All eigenvalues of -(1/2) Lap_h with zero potential, sorted.

    Closed form (2/h^2)(sin^2(j pi / (2(n+1))) + sin^2(k pi / (2(n+1)))).
    """
    n, h = grid.n, grid.h
    j = np.arange(1, n + 1)
    s = np.sin(j * np.pi / (2 * (n + 1))) ** 2
    mu = (2.0 / h**2) * (s[:, None] + s[None, :])
    vals = np.sort(mu.ravel())
    return vals if count is None else vals[:count]


def _solve_dense(H, want_vectors):
    Hd = H.toarray()
    if want_vectors:
        return np.linalg.eigh(Hd)
    return np.linalg.eigvalsh(Hd), None


def lowest_eigenvalues(
    grid, noise, lambda_max=None, k=None, want_vectors=False, buffer=_BUFFER, method="auto"
):
    """SpectrumResult with either all eigenvalues <= lambda_max or the k lowest.

    The lambda_max sweep grows the Krylov block until at least `buffer`
    computed eigenvalues sit above the cut, which certifies that no
    eigenvalue below it was missed.  `method` forces "dense" or "krylov"
    (shift-invert Lanczos); "auto" solves densely up to 4096 unknowns.
    """
    if (lambda_max is None) == (k is None):
        raise ValueError("specify exactly one of lambda_max or k")
    if method not in ("auto", "dense", "krylov"):
        raise ValueError(f"unknown method {method!r}")
    H = assemble(grid, noise)
    dim = H.shape[0]
    pot = noise.potential()
    pot_max = float(pot.max())

    if method == "dense" or (method == "auto" and dim <= _DENSE_DIM):
        vals, vecs = _solve_dense(H, want_vectors)
        if lambda_max is None:
            sel = slice(0, min(k, dim))
            complete = True
            lam_cut = float(vals[min(k, dim) - 1])
        else:
            m = int(np.searchsorted(vals, lambda_max, side="right"))
            sel = slice(0, m)
            complete = True
            lam_cut = lambda_max
        return SpectrumResult(
            grid=grid,
            eps=noise.eps,
            seed=noise.seed,
            eigenvalues=vals[sel].copy(),
            lambda_max=lam_cut,
            complete=complete,
            pot_max=pot_max,
            eigenvectors=vecs[:, sel].copy() if want_vectors else None,
        )

    sigma = -pot_max - 1.0  # strictly below the spectrum: lambda_1 >= -max(V)
    v0 = np.full(dim, 1.0 / math.sqrt(dim))

    def run(k_try):
        k_try = min(k_try, dim - 1)
        if want_vectors:
            vals, vecs = spla.eigsh(H, k=k_try, sigma=sigma, which="LM", mode="normal", v0=v0)
        else:
            vals = spla.eigsh(
                H, k=k_try, sigma=sigma, which="LM", mode="normal", v0=v0,
                return_eigenvectors=False,
            )
            vecs = None
        order = np.argsort(vals)
        return np.sort(vals), (vecs[:, order] if vecs is not None else None)

    if lambda_max is None:
        vals, vecs = run(k + buffer)
        return SpectrumResult(
            grid=grid,
            eps=noise.eps,
            seed=noise.seed,
            eigenvalues=vals[:k].copy(),
            lambda_max=float(vals[k - 1]),
            complete=True,
            pot_max=pot_max,
            eigenvectors=vecs[:, :k].copy() if want_vectors else None,
        )

    # initial block size from the exact free-spectrum count, widened by one
    # potential standard deviation to absorb disorder broadening
    pot_std = float(pot.std())
    mu = dirichlet_eigenvalues_free(grid)
    k_try = int(np.searchsorted(mu, lambda_max + pot_std)) + buffer + 10
    while True:
        vals, vecs = run(k_try)
        above = int((vals > lambda_max).sum())
        if above >= buffer or k_try >= dim - 1:
            complete = above >= 1
            keep = int((vals <= lambda_max).sum())
            return SpectrumResult(
                grid=grid,
                eps=noise.eps,
                seed=noise.seed,
                eigenvalues=vals[:keep].copy(),
                lambda_max=lambda_max,
                complete=complete,
                pot_max=pot_max,
                eigenvectors=vecs[:, :keep].copy() if want_vectors else None,
            )
        k_try = max(k_try + buffer, int(1.5 * k_try))


def counting_function(spec, lam):
    """N_L(lambda) = #(eigenvalues <= lambda) / L^2."""
    if lam > spec.lambda_max and not spec.complete:
        raise ValueError(
            f"count at lambda={lam} is not certified (lambda_max={spec.lambda_max}, incomplete)"
        )
    return float(np.searchsorted(spec.eigenvalues, lam, side="right")) / spec.grid.L**2


def _tail_bound(spec, t):
    """Certified bound on (1/L^2) sum of exp(-t lambda) over omitted eigenvalues.

    Uses lambda_j >= mu_j - max(V) with mu_j the closed-form zero-potential
    spectrum, so the omitted sum is at most
    e^{t max V} sum_{mu_j > lambda_max - max V} e^{-t mu_j}.
    """
    mu = dirichlet_eigenvalues_free(spec.grid)
    cut = spec.lambda_max - spec.pot_max
    tail = mu[mu > cut]
    return float(np.exp(t * spec.pot_max) * np.exp(-t * tail).sum()) / spec.grid.L**2


def laplace_of_counting(spec, t, tail_tol=0.01):
    """(1/L^2) sum of exp(-t lambda_n) plus a certified truncation bound.

    Returns (value, tail_bound, ok) where ok flags tail_bound <= tail_tol
    relative to the value.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    val = float(np.exp(-t * spec.eigenvalues).sum()) / spec.grid.L**2
    bound = _tail_bound(spec, t)
    return val, bound, bound <= tail_tol * max(val, 1e-300)


def aggregate_ids(realizations, lambdas, n_boot=500, seed=0, level=0.95):
    """Pointwise mean and bootstrap band of N_L over disorder realizations."""
    if not realizations:
        raise ValueError("need at least one realization")
    g0 = realizations[0]
    for r in realizations:
        if r.grid != g0.grid or abs(r.eps - g0.eps) > 1e-15:
            raise ValueError("realizations mix different (L, eps)")
        for lam in np.atleast_1d(lambdas):
            if lam > r.lambda_max and not r.complete:
                raise ValueError(f"realization seed={r.seed} cannot certify counts at {lam}")
    lambdas = np.asarray(lambdas, dtype=float)
    L2 = g0.grid.L**2
    per = np.array(
        [np.searchsorted(r.eigenvalues, lambdas, side="right") for r in realizations],
        dtype=float,
    )
    mean = per.mean(axis=0) / L2
    counts = per.sum(axis=0)
    m = len(realizations)
    if m == 1:
        lo = hi = mean.copy()
    else:
        rng = np.random.default_rng(seed)
        boot = np.empty((n_boot, lambdas.size))
        for b in range(n_boot):
            boot[b] = per[rng.integers(0, m, m)].mean(axis=0) / L2
        alpha = (1 - level) / 2
        lo, hi = np.quantile(boot, [alpha, 1 - alpha], axis=0)
    return EmpiricalIDS(
        L=g0.grid.L,
        eps=g0.eps,
        lambdas=lambdas,
        mean=mean,
        lo=lo,
        hi=hi,
        counts=counts,
        n_realizations=m,
        per_realization=per / L2,
    )


@dataclass(frozen=True)
class LifshitzFit:
    slope: float
    stderr: float
    curvature: float
    curvature_z: float
    window: tuple
    n_points: int


def lifshitz_fit(ids, window, min_counts=30):
    """Weighted least-squares slope of log of the mean counting function.

    Points are weighted by their aggregate eigenvalue counts (Poisson-like
    variance of log N is ~1/count).  The curvature diagnostic refits with a
    quadratic term and reports its z-score; |z| >> 1 flags a window where a
    single exponential is misspecified.
    """
    lo, hi = window
    sel = (ids.lambdas >= lo) & (ids.lambdas <= hi) & (ids.counts > 0)
    if not np.any(sel):
        raise ValueError(f"no strictly positive counts inside window {window}")
    if ids.counts[sel].min() < min_counts:
        raise ValueError(
            f"window {window} has points with fewer than {min_counts} counts "
            f"(min {int(ids.counts[sel].min())})"
        )
    x = ids.lambdas[sel]
    y = np.log(ids.mean[sel])
    w = ids.counts[sel].astype(float)
    if x.size < 3:
        raise ValueError("need at least 3 usable points in the window")

    def wls(design):
        wd = design * w[:, None]
        cov = np.linalg.inv(design.T @ wd)
        beta = cov @ (wd.T @ y)
        resid = y - design @ beta
        dof = max(x.size - design.shape[1], 1)
        s2 = float((w * resid**2).sum() / w.sum()) * x.size / dof
        # floor at float-level noise: exactly representable data must not
        # read as infinitely significant curvature
        s2 = max(s2, (1e-10 * max(1.0, float(np.abs(y).max()))) ** 2)
        return beta, cov * s2

    lin = np.column_stack([np.ones_like(x), x])
    beta1, cov1 = wls(lin)
    quad = np.column_stack([np.ones_like(x), x, x**2])
    beta2, cov2 = wls(quad)
    curv_z = float(beta2[2] / math.sqrt(max(cov2[2, 2], 1e-300)))
    return LifshitzFit(
        slope=float(beta1[1]),
        stderr=float(math.sqrt(max(cov1[1, 1], 0.0))),
        curvature=float(beta2[2]),
        curvature_z=curv_z,
        window=(float(lo), float(hi)),
        n_points=int(x.size),
    )
