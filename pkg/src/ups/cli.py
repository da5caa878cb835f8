"""``ups`` command line: tune, estimate and emit figure data.

Exit codes: 0 success, 1 configuration error (bad flags, bad config file,
missing input files), 2 numeric failure (no meeting, non-convergence).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, NumericError
from .estimators import UpsEstimate, aggregate
from .experiments import (
    ESTIMATE_FIELDS,
    EXPERIMENTS,
    ExperimentConfig,
    estimate_row,
    figure_tables,
    get,
    run_estimates,
    run_tune,
)
from .tuning import TuningReport

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

TUNING_FILE = "tuning.json"
CONFIG_FILE = "config.txt"
ESTIMATES_FILE = "estimates.csv"
SUMMARY_FILE = "summary.json"

# keys fixed by the tuning run; estimate refuses to change them
_TUNING_KEYS = ("experiment", "grid", "L", "k_quantile", "k_multiplier", "k", "m", "path", "adapt", "data_seed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p, tuning_flags: bool):
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--replicates", type=int)
    if tuning_flags:
        p.add_argument("--grid", choices=("equispaced", "log"))
        p.add_argument("--L", type=int)
        p.add_argument("--survey-replicates", type=int, dest="survey_replicates")
        p.add_argument("--m2-replicates", type=int, dest="m2_replicates")
        p.add_argument("--k-quantile", type=float, dest="k_quantile")
        p.add_argument("--k-multiplier", type=float, dest="k_multiplier")
        p.add_argument("--k", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--path")
        p.add_argument("--adapt", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--data-seed", type=int, dest="data_seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ups", description="Unbiased path sampling experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tune = sub.add_parser("tune", help="meeting-time survey, k, m, m2 and the lambda proposal")
    _add_common(tune, tuning_flags=True)

    est = sub.add_parser("estimate", help="M independent replicates and their aggregate")
    _add_common(est, tuning_flags=False)
    est.add_argument("--tuning", required=True, help="tuning.json written by 'ups tune'")

    fig = sub.add_parser("figures", help="per-panel CSV files from a run directory")
    fig.add_argument("--from", dest="source", required=True)
    fig.add_argument("--out", help="defaults to the --from directory")
    return parser


_FLAG_KEYS = {f for f in ExperimentConfig.__dataclass_fields__}


def _overrides(args) -> dict:
    return {k: v for k, v in vars(args).items() if k in _FLAG_KEYS and v is not None}


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _config_from(args, base: dict | None = None) -> ExperimentConfig:
    values = dict(base or {})
    if args.config:
        values.update(ExperimentConfig.parse_values(_read_text(args.config)))
    values.update(_overrides(args))
    if "experiment" not in values:
        raise ConfigError("no experiment given (use --experiment or a config file)")
    name = values.pop("experiment")
    return ExperimentConfig.for_experiment(name, **values)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _sidecar(path: Path, cfg: ExperimentConfig, **extra):
    """``<file>.meta.json`` next to every output: config and seed."""
    _write_json(path.with_name(path.name + ".meta.json"),
                {"file": path.name, "config": cfg.to_dict(), "seed": cfg.seed, **extra})


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_tune(args) -> int:
    cfg = _config_from(args)
    out = _out_dir(cfg)
    report = run_tune(cfg)
    report.save(out / TUNING_FILE)
    _sidecar(out / TUNING_FILE, cfg)
    (out / CONFIG_FILE).write_text(cfg.to_text(), encoding="utf-8")
    k_rng = (int(report.k.min()), int(report.k.max()))
    print(f"{cfg.experiment}: {len(report.grid)} grid points, k in [{k_rng[0]}, {k_rng[1]}], "
          f"m in [{int(report.m.min())}, {int(report.m.max())}] -> {out / TUNING_FILE}")
    return EXIT_OK


def _load_report(path) -> TuningReport:
    if not Path(path).is_file():
        raise ConfigError(f"tuning file {path} not found")
    try:
        return TuningReport.load(path)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path} is not a tuning report: {exc}") from exc


def _estimate_config(args, report: TuningReport) -> ExperimentConfig:
    tuned = dict(report.extra.get("config") or {})
    if not tuned:
        raise ConfigError("tuning report carries no config")
    cfg = _config_from(args, base=tuned)
    for key in _TUNING_KEYS:
        if key in tuned and tuned[key] != getattr(cfg, key):
            raise ConfigError(f"{key} = {getattr(cfg, key)!r} does not match the tuning report ({tuned[key]!r})")
    return cfg


def cmd_estimate(args) -> int:
    report = _load_report(args.tuning)
    cfg = _estimate_config(args, report)
    out = _out_dir(cfg)
    est_path = out / ESTIMATES_FILE
    estimates: list[UpsEstimate] = []
    with open(est_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ESTIMATE_FIELDS)
        if cfg.workers <= 1:
            one = get(cfg.experiment).replicator(cfg, report)
            for i in range(cfg.replicates):
                est = one(i)
                estimates.append(est)
                writer.writerow(estimate_row(est))
        else:
            estimates = run_estimates(cfg, report)
            writer.writerows(estimate_row(e) for e in estimates)
    tuning_ref = os.path.relpath(Path(args.tuning).resolve(), out.resolve())
    _sidecar(est_path, cfg, tuning=tuning_ref)
    summary = {
        "experiment": cfg.experiment,
        "estimand": get(cfg.experiment).estimand(cfg),
        **aggregate(estimates).to_dict(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "tuning": tuning_ref,
    }
    _write_json(out / SUMMARY_FILE, summary)
    _sidecar(out / SUMMARY_FILE, cfg, tuning=tuning_ref)
    lo, hi = summary["ci"]
    print(f"{cfg.experiment}: {summary['estimand']} = {summary['mean']:.6g} "
          f"(95% CI [{lo:.6g}, {hi:.6g}], M = {summary['M']}) -> {out / SUMMARY_FILE}")
    return EXIT_OK


def _read_estimates(path: Path) -> list[UpsEstimate]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            left = row["split_left_out_index"]
            val = float(row["estimate"])
            out.append(UpsEstimate(
                lam=float(row["lambda"]), value=val, raw_e_hat=float(row["raw_e_hat"]),
                q_density=float(row["q_density"]), tau=int(row["tau"]), cost_units=int(row["cost_units"]),
                left_out=int(left) if left else None, replicate=int(row["replicate_index"]),
            ))
    return out


def _find_report(src: Path, meta: dict) -> TuningReport | None:
    candidates = [src / TUNING_FILE]
    if meta.get("tuning"):
        candidates.append(src / meta["tuning"])
    for c in candidates:
        if c.is_file():
            return _load_report(c)
    return None


def cmd_figures(args) -> int:
    src = Path(args.source)
    if not src.is_dir():
        raise ConfigError(f"run directory {src} not found")
    meta, estimates = {}, []
    if (src / SUMMARY_FILE).is_file():
        meta = json.loads((src / SUMMARY_FILE).read_text(encoding="utf-8"))
    if (src / ESTIMATES_FILE).is_file():
        estimates = _read_estimates(src / ESTIMATES_FILE)
    report = _find_report(src, meta)
    if meta.get("config"):
        cfg = ExperimentConfig(**meta["config"])
    elif report is not None and report.extra.get("config"):
        cfg = ExperimentConfig(**report.extra["config"])
    else:
        raise ConfigError(f"{src} holds neither {SUMMARY_FILE} nor {TUNING_FILE}")
    out = Path(args.out) if args.out else src
    out.mkdir(parents=True, exist_ok=True)
    for panel, (header, rows) in figure_tables(cfg.experiment, report, estimates).items():
        path = out / f"{cfg.experiment}.{panel}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        _sidecar(path, cfg, panel=panel, rows=len(rows))
        print(f"{path} ({len(rows)} rows)")
    return EXIT_OK


COMMANDS = {"tune": cmd_tune, "estimate": cmd_estimate, "figures": cmd_figures}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"ups: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"ups: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
