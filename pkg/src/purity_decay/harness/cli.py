"""Command-line entry point: run, sweep, predict, analyze, mc-oracle.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 partial sweep failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


from .. import semiclassics as sc
from .analysis import analyze, format_table, write_summary
from .config import FIELD_PARSERS, SCHEMA, ConfigError, ExperimentConfig, load_config
from .output import EmitError, emit, load_records
from .runner import CellFailure, NUMERICAL_ERRORS, build_model, run_experiment, run_sweep, semiclassical_chain

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("purity_decay")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    for (section, key), (name, _) in SCHEMA.items():
        flag = "--model" if (section, key) == ("model", "name") else "--" + key.replace("_", "-")
        if (section, key) == ("output", "directory"):
            flag = "--output-dir"
        p.add_argument(flag, dest=name, default=None, metavar=key.upper(),
                       help=f"[{section}] {key}")


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for (section, key), (name, _) in SCHEMA.items():
        raw = getattr(args, name, None)
        if raw is None:
            continue
        try:
            overrides[name] = FIELD_PARSERS[name](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for --{key}: {exc}") from exc
    return load_config(args.config, **overrides)


def _emit_all(records, cfg: ExperimentConfig) -> None:
    for rec in records:
        paths = emit(rec, cfg.output_dir, cfg.formats)
        log.info("wrote %s", ", ".join(str(p) for p in paths))


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    rec = run_experiment(cfg, cfg.hbar_list[0], cfg.delta_list[0])
    _emit_all([rec], cfg)
    print(format_table(analyze([rec])))
    return EXIT_OK


def cmd_sweep(args, quantum: bool = True) -> int:
    cfg = _config_from_args(args)
    results = run_sweep(cfg, quantum=quantum)
    records = [r for r in results if not isinstance(r, CellFailure)]
    failures = [r for r in results if isinstance(r, CellFailure)]
    _emit_all(records, cfg)
    if records:
        rows = analyze(records)
        write_summary(rows, Path(cfg.output_dir) / "summary.csv")
        print(format_table(rows))
    for f in failures:
        print(f"FAILED hbar={f.hbar:g} delta={f.delta:g} [{f.kind}]: {f.message}", file=sys.stderr)
    if failures and not records:
        return EXIT_CONFIG if all(f.kind == "config" for f in failures) else EXIT_NUMERICAL
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_analyze(args) -> int:
    records = load_records(args.directory)
    if not records:
        print(f"no emitted records found in {args.directory}", file=sys.stderr)
        return EXIT_CONFIG
    rows = analyze(records, args.fit_min, args.fit_max)
    out = write_summary(rows, Path(args.directory) / "summary.csv")
    print(format_table(rows))
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_mc_oracle(args) -> int:
    cfg = _config_from_args(args)
    hbar, delta = cfg.hbar_list[0], cfg.delta_list[0]
    if delta <= 0:
        raise ConfigError("mc-oracle needs delta > 0")
    model = build_model(cfg, hbar, delta)
    pred = semiclassical_chain(model, cfg)
    scaled = [float(x) for x in args.scaled_times.split(",")]
    worst = 0.0
    print("delta_t  monte_carlo  stderr  prediction  n_sigma")
    for x in scaled:
        mc, err = sc.phase_space_purity_mc(pred.vbar, pred.packet, hbar, delta, x / delta,
                                           args.mc_samples, args.seed)
        theory = sc.purity_prediction(pred.u, delta, x / delta)
        nsig = abs(mc - theory) / err if err > 0 else 0.0
        worst = max(worst, nsig)
        print(f"{x:7.4g}  {mc:11.6f}  {err:6.1e}  {theory:10.6f}  {nsig:7.2f}")
    return EXIT_OK if worst <= 3.0 else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="purity-decay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "single (hbar, delta) cell"), ("sweep", "hbar x delta grid"),
                        ("predict", "semiclassical prediction only, no quantum evolution"),
                        ("mc-oracle", "phase-space Monte-Carlo check of the determinant formula")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("-v", "--verbose", action="store_true")
        _add_config_flags(p)
        if name == "mc-oracle":
            p.add_argument("--scaled-times", default="0.5,1,2")
            p.add_argument("--mc-samples", type=int, default=10**6)
            p.add_argument("--seed", type=int, default=12345)
    p = sub.add_parser("analyze", help="post-process emitted files")
    p.add_argument("directory", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--fit-min", type=float, default=None)
    p.add_argument("--fit-max", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "predict":
            return cmd_sweep(args, quantum=False)
        if args.command == "analyze":
            return cmd_analyze(args)
        return cmd_mc_oracle(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except EmitError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
