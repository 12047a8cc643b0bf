"""Experiment drivers behind the CLI: run a validated config, write records.

Each run derives one independent stream per realization index from the master
seed, dispatches to the computational modules, and persists JSONL records
plus CSV tables.  Reductions are ordered by realization index, so results do
not depend on the parallelism degree.
"""

import json
import math
import time
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import constants as vc
from . import records as rec
from .config import ExperimentConfig
from .fields import sample_mollified
from .grids import GridSpec
from .pam import annealed_moment, dt_guard, evolve, heat_trace, mass_duality_check
from .paths import sample_paths
from .riesz import RieszFieldSpec, RieszSampler
from .seeding import derive_seed, substream
from .silt import RegionDescriptor, exp_moment, expected_silt, silt_chi, tail_rate
from .spectrum import aggregate_ids, laplace_of_counting, lifshitz_fit, lowest_eigenvalues
from .tauberian import fit_log_asymptotics, tauberian_convert

__all__ = ["run", "report", "leftmost_window"]


def _record(cfg, module, operation, outputs, t0, error=None):
    return rec.ResultRecord(
        config_hash=cfg.digest(),
        module=module,
        operation=operation,
        inputs_digest=f"{cfg.digest()}:{operation}",
        outputs=outputs,
        wall_time=time.time() - t0,
        error=error,
    )


# ------------------------------------------------------------------- ids


def _ids_worker(args):
    L, n, eps, seed, lam_max = args
    grid = GridSpec(L, n)
    noise = sample_mollified(grid, eps, seed)
    spec = lowest_eigenvalues(grid, noise, lambda_max=lam_max)
    return seed, spec.eigenvalues.tolist(), spec.complete, spec.pot_max


def compute_spectra(L, n, eps, lam_max, seeds, parallelism=1):
    """Spectra for a seed list, order-stable regardless of scheduling."""
    args = [(L, n, eps, s, lam_max) for s in seeds]
    if parallelism > 1 and len(args) > 1:
        with get_context("fork").Pool(parallelism) as pool:
            out = pool.map(_ids_worker, args)
    else:
        out = [_ids_worker(a) for a in args]
    return out


def leftmost_window(ids, width, min_counts=30):
    """Leftmost fit window whose left edge already holds >= min_counts."""
    admissible = ids.lambdas[ids.counts >= min_counts]
    if admissible.size == 0:
        raise ValueError("no grid point accumulates the required counts")
    lo = float(admissible[0])
    return (lo, lo + width)


def _rebuild_spectrum(grid, eps, seed, eigenvalues, lam_max, complete, pot_max):
    from .spectrum import SpectrumResult

    return SpectrumResult(
        grid=grid,
        eps=eps,
        seed=seed,
        eigenvalues=np.asarray(eigenvalues, dtype=float),
        lambda_max=lam_max,
        complete=complete,
        pot_max=pot_max,
    )


def _run_ids(cfg, outdir, records):
    t0 = time.time()
    grid = GridSpec(cfg.L, cfg.n)
    lambdas = np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.lambda_points)
    seeds = [derive_seed(cfg.master_seed, i) for i in range(cfg.realizations)]
    first = sample_mollified(grid, cfg.eps, seeds[0])
    rec.write_field_dump(
        outdir / "noise_000000.f64",
        first.values,
        {"L": cfg.L, "n": cfg.n, "eps": cfg.eps, "seed": seeds[0], "c_eps": first.c_eps},
    )
    raw = compute_spectra(cfg.L, cfg.n, cfg.eps, cfg.lambda_max, seeds, cfg.parallelism)

    spectra_path = outdir / "spectra.jsonl"
    with spectra_path.open("w") as fh:
        for seed, eigs, complete, _pm in raw:
            fh.write(
                json.dumps(
                    {
                        "L": cfg.L,
                        "n": cfg.n,
                        "eps": cfg.eps,
                        "seed": seed,
                        "lambda_max": cfg.lambda_max,
                        "complete": complete,
                        "eigenvalues": eigs,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    specs = [
        _rebuild_spectrum(grid, cfg.eps, s, e, cfg.lambda_max, c, pm) for s, e, c, pm in raw
    ]
    ids = aggregate_ids(specs, lambdas)
    rec.write_csv(
        outdir / "ids_table.csv",
        ["lambda", "mean_N", "lo", "hi", "count"],
        [
            (lam, m, lo, hi, int(c))
            for lam, m, lo, hi, c in zip(ids.lambdas, ids.mean, ids.lo, ids.hi, ids.counts)
        ],
    )
    records.append(_record(cfg, "hamiltonian-spectrum", "aggregate_ids",
                           {"table": "ids_table.csv", "realizations": cfg.realizations}, t0))
    try:
        window = leftmost_window(ids, width=0.3)
        fit = lifshitz_fit(ids, window)
        records.append(
            _record(cfg, "hamiltonian-spectrum", "lifshitz_fit",
                    {"window": list(fit.window), "slope": fit.slope, "stderr": fit.stderr,
                     "curvature_z": fit.curvature_z, "n_points": fit.n_points}, t0)
        )
    except ValueError as exc:
        records.append(_record(cfg, "hamiltonian-spectrum", "lifshitz_fit", {}, t0, error=str(exc)))
    return ids


# ------------------------------------------------------------------- silt


def zeta_ensemble(t, eps_list, m, master_seed, n_t=None, kind="bridge", chunk=None):
    """chi samples of the full triangle for each eps, chunked over paths.

    Returns (chi array of shape (m, n_eps), renorm list).  Chunks use
    independent substreams keyed by chunk index, so the ensemble is
    reproducible regardless of chunk size... except that changing `chunk`
    changes which seeds generate which paths; chunk is therefore fixed by
    callers that promise byte-stable output.
    """
    eps_list = list(eps_list)
    if n_t is None:
        n_t = int(math.ceil(10.0 * t / min(eps_list)))
    if chunk is None:
        chunk = max(64, min(m, int(2.0e7 / (n_t + 1))))
    tri = RegionDescriptor.triangle(0.0, t)
    out = np.empty((m, len(eps_list)))
    done = 0
    ci = 0
    while done < m:
        take = min(chunk, m - done)
        pe = sample_paths(kind, t, 2, n_t, take, seed=0, rng=substream(master_seed, ci))
        out[done : done + take] = np.atleast_2d(
            silt_chi(pe, eps_list, tri).reshape(take, len(eps_list))
        )
        done += take
        ci += 1
    renorms = [expected_silt(kind, t, e, tri) for e in eps_list]
    return out, renorms


def _run_silt(cfg, outdir, records):
    t0 = time.time()
    eps_list = cfg.params.get("eps_ladder") or [cfg.eps]
    chi, renorms = zeta_ensemble(
        cfg.t, eps_list, cfg.m_paths, cfg.master_seed, n_t=cfg.params.get("n_t")
    )
    tri = RegionDescriptor.triangle(0.0, cfg.t)
    rows = []
    for e_idx, (e, rn) in enumerate(zip(eps_list, renorms)):
        for p in range(cfg.m_paths):
            c = chi[p, e_idx]
            rows.append((cfg.master_seed, p, e, tri.label(), c, rn, c - rn))
    rec.write_csv(
        outdir / "zeta_samples.csv",
        ["seed", "path_index", "eps", "region", "chi", "renorm", "zeta"],
        rows,
    )
    records.append(_record(cfg, "paths-silt", "silt_mollified",
                           {"table": "zeta_samples.csv", "m": cfg.m_paths,
                            "eps": eps_list, "mean_chi": [float(chi[:, i].mean()) for i in range(len(eps_list))],
                            "renorm": renorms}, t0))

    zeta = chi[:, -1] - renorms[-1]  # finest scale
    t_grid = cfg.params.get("t_grid") or [0.5, 1.0, 2.0]
    em_rows = []
    for tp in t_grid:
        em = exp_moment(zeta, tp)
        em_rows.append((tp, em.estimate, em.lo, em.hi, int(em.heavy_tail)))
    rec.write_csv(outdir / "exp_moment.csv",
                  ["t_param", "estimate", "lo", "hi", "heavy_tail"], em_rows)
    records.append(_record(cfg, "paths-silt", "exp_moment", {"table": "exp_moment.csv"}, t0))

    th = cfg.params.get("thresholds")
    if th:
        try:
            fit = tail_rate(zeta, th)
            records.append(_record(cfg, "paths-silt", "tail_rate",
                                   {"rate": fit.rate, "stderr": fit.stderr,
                                    "thresholds": list(map(float, fit.thresholds)),
                                    "exceedances": list(map(int, fit.exceedances))}, t0))
        except ValueError as exc:
            records.append(_record(cfg, "paths-silt", "tail_rate", {}, t0, error=str(exc)))


# ------------------------------------------------------------------- pam


def _run_pam(cfg, outdir, records):
    t0 = time.time()
    grid = GridSpec(cfg.L, cfg.n)
    t_grid = cfg.params.get("t_grid") or [cfg.t]
    eps_list = cfg.params.get("eps_ladder") or [cfg.eps]
    eps0 = eps_list[0]
    trace_rows = []
    duality_rows = []
    for i in range(cfg.realizations):
        seed = derive_seed(cfg.master_seed, i)
        noise = sample_mollified(grid, eps0, seed)
        for t in t_grid:
            est, half = heat_trace(grid, noise, t, cfg.probes, seed=derive_seed(seed, 1))
            lam_max = 4 * float(np.pi**2 / cfg.L**2) + float(
                np.quantile(np.abs(noise.potential()), 0.99)
            )
            lam_max = max(lam_max, (math.log(1e4)) / t + noise.potential().max())
            spec = lowest_eigenvalues(grid, noise, lambda_max=lam_max)
            lap, bound, ok = laplace_of_counting(spec, t)
            spectral = lap * cfg.L**2
            resid = abs(est - spectral) / max(abs(spectral), 1e-300)
            trace_rows.append((seed, t, est, half, spectral, bound * cfg.L**2, resid))
        center = (grid.n // 2, grid.n // 2)
        duality_rows.append(
            (seed, cfg.t, mass_duality_check(grid, noise, center, cfg.t, dt_guard(noise)))
        )
        if i == 0:
            state = evolve(grid, noise, center, cfg.t, dt_guard(noise))
            rec.write_field_dump(
                outdir / "pam_state_000000.f64",
                state.u,
                {"L": cfg.L, "n": cfg.n, "eps": eps0, "seed": seed,
                 "t": state.t, "initial": state.initial},
            )
    rec.write_csv(outdir / "trace_identity.csv",
                  ["seed", "t", "hutchinson", "half_width", "spectral", "tail_bound", "residual"],
                  trace_rows)
    rec.write_csv(outdir / "mass_duality.csv", ["seed", "t", "residual"], duality_rows)
    records.append(_record(cfg, "pam-evolution", "heat_trace",
                           {"table": "trace_identity.csv"}, t0))
    records.append(_record(cfg, "pam-evolution", "mass_duality_check",
                           {"table": "mass_duality.csv"}, t0))

    ann_rows = []
    for t in t_grid:
        for e in eps_list:
            am = annealed_moment(t, e, cfg.m_paths, seed=derive_seed(cfg.master_seed, 10_000))
            ann_rows.append((t, e, am.form_direct, am.form_scaled, am.lo, am.hi))
    rec.write_csv(outdir / "annealed_moment.csv",
                  ["t", "eps", "estimate_form1", "estimate_form2", "lo", "hi"], ann_rows)
    records.append(_record(cfg, "pam-evolution", "annealed_moment",
                           {"table": "annealed_moment.csv"}, t0))


# ------------------------------------------------------------------- others


def _run_constants(cfg, outdir, records):
    t0 = time.time()
    sigmas = cfg.params.get("sigma_list") or [cfg.sigma]
    rows = []
    for s in sigmas:
        res = vc.optimize_kappa(cfg.d, s)
        rc = vc.rate_constants(cfg.d, s, cfg.nu, res.kappa)
        rows.append((cfg.d, s, res.kappa, res.M, res.rho, res.residual,
                     rc.lifshitz_constant, rc.lifshitz_exponent))
    rec.write_csv(outdir / "constants.csv",
                  ["d", "sigma", "kappa", "M", "rho", "residual",
                   "lifshitz_constant", "exponent"], rows)
    records.append(_record(cfg, "variational-constants", "optimize_kappa",
                           {"table": "constants.csv",
                            "kappa": rows[-1][2], "d": cfg.d, "sigma": sigmas[-1]}, t0))


def riesz_tauberian_residual(sigma, nu, rho):
    """Gap in the closed loop: intersection-rate constant -> transform growth
    constant -> tail constant, against 1/(2 nu rho)."""
    gamma = (4 - sigma) / (2 - sigma)
    B = (nu / 2) ** (2 / (2 - sigma)) * vc.intersection_rate_constant(0, sigma, rho)
    pair = tauberian_convert("transform_to_tail", gamma, B)
    target = 1.0 / (2 * nu * rho)
    return abs(pair.A - target) / target, pair


def _run_tauberian(cfg, outdir, records):
    t0 = time.time()
    rng = substream(cfg.master_seed, 0)
    worst = 0.0
    for _ in range(100):
        gamma = 1.0 + rng.uniform(0.1, 4.0)
        B = rng.uniform(0.1, 10.0)
        pair = tauberian_convert("transform_to_tail", gamma, B)
        back = tauberian_convert("tail_to_transform", pair.alpha, pair.A)
        worst = max(worst, abs(back.B - B) / B, abs(back.gamma - gamma) / gamma)
    rows = []
    for s in cfg.params.get("sigma_list") or [0.5, 1.0, 1.5]:
        resid, pair = riesz_tauberian_residual(s, cfg.nu, rho=1.0)
        rows.append((s, pair.gamma, pair.alpha, resid))
    rec.write_csv(outdir / "tauberian.csv", ["sigma", "gamma", "alpha", "loop_residual"], rows)
    records.append(_record(cfg, "tauberian-laplace", "tauberian_convert",
                           {"table": "tauberian.csv", "roundtrip_worst": worst}, t0))

    # demonstration fit record: synthetic transform with a known growth law
    ts = np.linspace(1.0, 3.0, 12)
    gamma0, b0 = 3.0, 0.7
    fit = fit_log_asymptotics(np.column_stack([ts, np.exp(b0 * ts**gamma0)]), gamma0)
    (outdir / "fit.json").write_text(
        json.dumps(
            {
                "hypothesis": fit.hypothesis,
                "constant": fit.constant,
                "stderr": fit.stderr,
                "curvature": fit.curvature,
                "window": list(fit.window),
            },
            sort_keys=True,
        )
        + "\n"
    )
    records.append(_record(cfg, "tauberian-laplace", "fit_log_asymptotics",
                           {"file": "fit.json", "constant": fit.constant}, t0))


def _run_riesz(cfg, outdir, records):
    t0 = time.time()
    grid = GridSpec(cfg.L, cfg.n)
    spec = RieszFieldSpec(d=cfg.d, sigma=cfg.sigma, nu=cfg.nu, reg=cfg.reg)
    sampler = RieszSampler(spec, grid)
    lags = [int(v) for v in (cfg.params.get("lags") or [8, 16, 24])]
    acc = {ell: [] for ell in lags}
    rng = substream(cfg.master_seed, 0)
    pairs = (cfg.realizations + 1) // 2
    for _ in range(pairs):
        for f in sampler.sample_pair(rng):
            for ell in lags:
                v = 0.5 * (
                    float(np.mean(f[:, :-ell] * f[:, ell:]))
                    + float(np.mean(f[:-ell, :] * f[ell:, :]))
                )
                acc[ell].append(v)
    rows = []
    for ell in lags:
        v = np.asarray(acc[ell][: cfg.realizations])
        r = ell * grid.h
        rows.append((ell, r, float(v.mean()),
                     float(v.std(ddof=1) / math.sqrt(v.size)), cfg.nu * r**-cfg.sigma))
    rec.write_csv(outdir / "riesz_covariance.csv",
                  ["lag_nodes", "lag", "emp_cov", "se", "target"], rows)
    records.append(_record(cfg, "gaussian-fields", "sample_riesz_field",
                           {"table": "riesz_covariance.csv"}, t0))


_RUNNERS = {
    "ids": _run_ids,
    "silt": _run_silt,
    "pam": _run_pam,
    "constants": _run_constants,
    "tauberian": _run_tauberian,
    "riesz": _run_riesz,
}


def run(cfg: ExperimentConfig):
    """Validate, dispatch, persist; returns the list of result records."""
    cfg.validate()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.txt").write_text(cfg.canonical() + "\n")
    records = []
    try:
        _RUNNERS[cfg.kind](cfg, outdir, records)
    except Exception as exc:  # noqa: BLE001 - recorded, then re-raised by CLI policy
        records.append(_record(cfg, "lab-cli", "run", {}, time.time(), error=repr(exc)))
        raise
    finally:
        rec_path = outdir / "records.jsonl"
        if rec_path.exists():
            rec_path.unlink()
        for r in records:
            rec.append_record(rec_path, r)
    return records


def report(directory):
    """Aggregate the records in a run directory into plain-CSV summaries.

    Corrupt record lines are listed but do not block the report.  Returns the
    report directory path.
    """
    directory = Path(directory)
    repdir = directory / "report"
    repdir.mkdir(parents=True, exist_ok=True)
    records, corrupt = rec.read_records(directory / "records.jsonl")
    lines = []
    if not records:
        lines.append("no records")
    kappa_inv = None
    for r in records:
        if r.get("operation") == "optimize_kappa" and r["outputs"].get("sigma") == 2.0:
            kappa_inv = 1.0 / r["outputs"]["kappa"]
    summary_rows = []
    for r in records:
        summary_rows.append(
            (r["module"], r["operation"],
             r.get("error") or "ok",
             json.dumps(r["outputs"], sort_keys=True)[:160])
        )
    rec.write_csv(repdir / "summary.csv", ["module", "operation", "status", "outputs"],
                  summary_rows or [("-", "-", "no records", "-")])
    if kappa_inv is not None:
        lines.append(f"kappa_inv_marker = {rec.fmt_float(kappa_inv)}")
    for name in ("ids_table.csv", "exp_moment.csv", "annealed_moment.csv",
                 "trace_identity.csv", "riesz_covariance.csv", "constants.csv",
                 "tauberian.csv"):
        src = directory / name
        if src.exists():
            (repdir / name).write_bytes(src.read_bytes())
            lines.append(f"table {name}")
    if corrupt:
        lines.append("corrupt records:")
        lines.extend(f"  line {ln}: {frag}" for ln, frag in corrupt)
    (repdir / "REPORT.txt").write_text("\n".join(lines) + "\n")
    return repdir
