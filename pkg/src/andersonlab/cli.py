"""Command line entry points: run, report, validate, constants, tauberian."""

import argparse
import os
import sys

from .config import load_config
from . import experiments
from .records import fmt_float


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="andersonlab",
        description="Box spectra, bridge self-intersection functionals, and "
        "Lifshitz-tail constants for the mollified white-noise Hamiltonian.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("--output-dir", help="override the config output_dir")
    p_run.add_argument("--threads", type=int, help="override parallelism degree")

    p_rep = sub.add_parser("report", help="summarize a run directory")
    p_rep.add_argument("directory")

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")

    p_con = sub.add_parser("constants", help="variational constants for (d, sigma)")
    p_con.add_argument("--d", type=int, required=True)
    p_con.add_argument("--sigma", type=float, required=True)
    p_con.add_argument("--nu", type=float, default=1.0)
    p_con.add_argument("--resolution", type=int, default=600)

    p_tau = sub.add_parser("tauberian", help="convert tail/transform constants")
    group = p_tau.add_mutually_exclusive_group(required=True)
    group.add_argument("--gamma", type=float)
    group.add_argument("--alpha", type=float)
    p_tau.add_argument("--B", type=float)
    p_tau.add_argument("--A", type=float)

    args = parser.parse_args(argv)

    if args.command in ("run", "validate"):
        try:
            cfg = load_config(args.config)
            if args.command == "run":
                if args.output_dir or os.environ.get("ANDERSONLAB_OUTPUT_DIR"):
                    cfg.params["output_dir"] = args.output_dir or os.environ[
                        "ANDERSONLAB_OUTPUT_DIR"
                    ]
                if args.threads or os.environ.get("ANDERSONLAB_THREADS"):
                    cfg.params["parallelism"] = int(
                        args.threads or os.environ["ANDERSONLAB_THREADS"]
                    )
            cfg.validate()
        except (ValueError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if args.command == "validate":
            print(f"ok: {cfg.kind} config, hash {cfg.digest()}")
            return 0
        records = experiments.run(cfg)
        failed = [r for r in records if r.error]
        for r in records:
            status = "error" if r.error else "ok"
            print(f"{r.module}.{r.operation}: {status}")
        return 1 if failed else 0

    if args.command == "report":
        repdir = experiments.report(args.directory)
        print(f"report written to {repdir}")
        return 0

    if args.command == "constants":
        from .constants import optimize_kappa, rate_constants

        res = optimize_kappa(args.d, args.sigma, resolution=args.resolution)
        rc = rate_constants(args.d, args.sigma, args.nu, res.kappa)
        for key, val in (
            ("kappa", res.kappa),
            ("kappa_inv", 1.0 / res.kappa),
            ("M", res.M),
            ("rho", res.rho),
            ("residual", res.residual),
            ("lifshitz_constant", rc.lifshitz_constant),
            ("lifshitz_exponent", rc.lifshitz_exponent),
        ):
            print(f"{key} = {fmt_float(val)}")
        return 0

    if args.command == "tauberian":
        from .tauberian import tauberian_convert

        if args.gamma is not None:
            if args.B is None:
                print("tauberian --gamma requires --B", file=sys.stderr)
                return 2
            pair = tauberian_convert("transform_to_tail", args.gamma, args.B)
        else:
            if args.A is None:
                print("tauberian --alpha requires --A", file=sys.stderr)
                return 2
            pair = tauberian_convert("tail_to_transform", args.alpha, args.A)
        for key in ("alpha", "A", "gamma", "B"):
            print(f"{key} = {fmt_float(getattr(pair, key))}")
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
