"""``tdiff`` command line: simulate, estimate, experiment suites, self-check.

Exit codes: 0 success, 1 acceptance failure (failed self-check), 2 degenerate
data (one-sided paths), 3 input error (bad arguments, config or CSV parse
failures).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__, experiments
from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .estimators import (
    OneSidedPathError,
    attach_standard_errors,
    dmle_drift,
    format_report,
    gme_drift,
    gme_volatility,
    report_items,
)
from .inference import BatchSpec, OneSidedBatchError, batch_means_cov
from .simulate import read_path_csv, simulate_path, write_path_csv
from .stats import sufficient_stats

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_DEGENERATE = 2
EXIT_INPUT = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract reserves 2 for
    # degenerate data, so remap usage errors to the input-error code
    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(EXIT_INPUT if status else 0)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdiff", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_config=True):
        p.add_argument("--config", required=need_config, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads")

    common(sub.add_parser("simulate", help="simulate one path to CSV"))

    est = sub.add_parser("estimate", help="estimate from a t,x path CSV")
    est.add_argument("input", help="path CSV file")
    est.add_argument("--threshold", type=float, required=True)
    est.add_argument("--h", type=float, default=None, help="override inferred lag")
    est.add_argument("--batches", type=int, default=100, help="batch-means blocks")

    exp = sub.add_parser("experiment", help="run an experiment suite")
    exp.add_argument("kind", choices=KINDS)
    common(exp)

    chk = sub.add_parser("check", help="run the analytic self-check suite")
    common(chk, need_config=False)
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("TDIFF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"TDIFF_THREADS is not an integer: {env!r}")
    return 1


def _resolve(config: ExperimentConfig, args) -> ExperimentConfig:
    from dataclasses import replace

    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    return config


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, header, rows, config: ExperimentConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")
        fh.write(
            f"# config-hash={config.config_hash()}, seed={config.seed}, "
            f"version={__version__}\n"
        )


def cmd_simulate(args) -> int:
    config = _resolve(load_config(args.config), args)
    path = simulate_path(
        config.model,
        x0=config.model.threshold,
        scheme=config.sampling,
        seed=config.seed,
    )
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_file = out_dir / "path.csv"
    with open(out_file, "w") as fh:
        write_path_csv(path, fh)
    s = sufficient_stats(path, config.model.threshold)
    print(f"wrote {out_file}")
    print(f"N = {path.n_obs}")
    print(f"h = {path.h:.17g}")
    print(f"crossings = {s.crossings}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    try:
        with open(args.input) as fh:
            path = read_path_csv(fh)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.h is not None:
        from dataclasses import replace

        if args.h <= 0:
            print("error: lag override must be positive", file=sys.stderr)
            return EXIT_INPUT
        path = replace(path, h=args.h)

    try:
        s = sufficient_stats(path, args.threshold)
        gme = gme_drift(s)
        dmle = dmle_drift(s)
        vol = gme_volatility(s)
    except OneSidedPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE

    try:
        spec = BatchSpec(n_batches=args.batches, discard_fraction=0.05)
        cov_gme = batch_means_cov(path, args.threshold, spec, "gme")
        cov_dmle = batch_means_cov(path, args.threshold, spec, "dmle")
        gme = attach_standard_errors(gme, cov_gme, s.n_obs)
        dmle = attach_standard_errors(dmle, cov_dmle, s.n_obs)
    except (OneSidedBatchError, ValueError) as exc:
        print(f"note: no standard errors ({exc})", file=sys.stderr)

    out = format_report(report_items(gme, vol, s.n_obs, s.h))
    out += format_report(report_items(dmle, None, s.n_obs, s.h))
    sys.stdout.write(out)
    return EXIT_OK


_RUNNERS = {
    "mse": experiments.run_mse_sweep,
    "clt": experiments.run_clt_check,
    "hf_rate": experiments.run_hf_rate,
}


def cmd_experiment(args) -> int:
    config = _resolve(load_config(args.config), args)
    if config.kind != args.kind:
        print(
            f"error: config is for kind {config.kind!r}, not {args.kind!r}",
            file=sys.stderr,
        )
        return EXIT_INPUT
    threads = _threads(args)
    if args.kind == "analytic_check":
        return _run_checks(config)
    if args.kind == "lt_bias":
        result = experiments.run_lt_bias(config)
    else:
        result = _RUNNERS[args.kind](config, threads=threads)
    out_file = Path(config.output_dir) / f"{config.kind}.csv"
    _write_csv(out_file, result.header, result.rows, config)
    print(f"wrote {out_file}")
    return EXIT_OK


def _run_checks(config: ExperimentConfig | None, seed: int = 7) -> int:
    from .model import ModelParams

    if config is not None:
        params = config.model
        seed = config.seed
    else:
        params = ModelParams.ergodic(
            b_plus=-0.01, b_minus=0.02, sigma_plus=0.10, sigma_minus=0.07
        )
    checks = experiments.run_analytic_check(params, seed=seed)
    all_ok = True
    for c in checks:
        tag = "PASS" if c.passed else "FAIL"
        print(f"{tag} {c.name}: residual {c.residual:.3e} (tol {c.tolerance:.1e})")
        all_ok = all_ok and c.passed
    print("all checks passed" if all_ok else "SELF-CHECK FAILED")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_check(args) -> int:
    config = None
    if args.config:
        config = _resolve(load_config(args.config), args)
    return _run_checks(config)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "estimate":
            return cmd_estimate(args)
        if args.command == "experiment":
            return cmd_experiment(args)
        return cmd_check(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
