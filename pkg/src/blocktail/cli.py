"""Command line interface.

Subcommands: estimate (point estimate from a block CSV or raw sample),
ci (confidence intervals), simulate (one coverage/length study from a config
file or flags), tables (reproduce the bundled study grid and compare against
the reference values).

Exit codes: 0 on success, 2 for input problems (bad files, malformed
arguments, invalid configs), 3 for domain problems (parameters outside the
calibrated regime, including warnings escalated by --strict).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from fractions import Fraction
from typing import Optional

from . import __version__
from .blocks import blockify, read_blocks_csv, read_raw_sample
from .distributions import parse_model
from .estimators import quantile_hat_star
from .exceptions import (
    BlocktailWarning,
    DomainError,
    ValidationError,
)
from .likelihood import DEFAULT_CORRECTION, likelihood_ci, normal_ci
from .montecarlo import SimConfig, run_study
from .reference import (
    COVERAGE_TOL,
    LENGTH_RTOL,
    TABLE_META,
    TABLE_MODELS,
    load_reference,
    reference_k_grid,
)

WORKERS_ENV = "BLOCKTAIL_WORKERS"

_CONFIG_KEYS = {
    "scheme", "model", "k_grid", "replicates", "alpha", "methods",
    "a_n", "master_seed", "v", "r", "lengths",
}


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_correction(text: str) -> float:
    """Accept a float or a fraction like 19/12."""
    try:
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"cannot parse weight {text!r}") from None


def _parse_k_grid(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.replace(" ", "").split(",") if part)
    except ValueError:
        raise ValidationError(f"cannot parse k grid {text!r}") from None
    if not ks:
        raise ValidationError("k grid is empty")
    return ks


def _parse_methods(text: str) -> tuple[str, ...]:
    if text.strip().lower() == "all":
        return ("normal", "el", "ael")
    methods = tuple(part.strip().lower() for part in text.split(",") if part.strip())
    if not methods:
        raise ValidationError("no methods given")
    return methods


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot parse boolean {text!r}")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse the key = value study config format ('#' starts a comment)."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError(f"config line {lineno}: expected key = value, got {raw!r}")
        key = key.strip().lower()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in out:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        if not value:
            raise ValidationError(f"config line {lineno}: empty value for {key!r}")
        out[key] = value
    return out


def build_sim_config(mapping: dict[str, str]) -> SimConfig:
    """Turn a raw key/value mapping into a validated SimConfig."""
    missing = [key for key in ("scheme", "model", "k_grid") if key not in mapping]
    if missing:
        raise ValidationError(f"config is missing required keys: {', '.join(missing)}")
    try:
        replicates = int(mapping.get("replicates", "5000"))
        master_seed = int(mapping.get("master_seed", "0"))
        r = int(mapping.get("r", "1"))
        alpha = float(mapping.get("alpha", "0.05"))
    except ValueError as exc:
        raise ValidationError(f"bad numeric config value: {exc}") from None
    v = float(mapping["v"]) if "v" in mapping else None
    return SimConfig(
        scheme=mapping["scheme"].strip().lower(),
        model=parse_model(mapping["model"]),
        k_grid=_parse_k_grid(mapping["k_grid"]),
        r=r,
        replicates=replicates,
        alpha=alpha,
        methods=_parse_methods(mapping.get("methods", "ael,normal")),
        correction=_parse_correction(mapping.get("a_n", "19/12")),
        master_seed=master_seed,
        v=v,
        lengths=_parse_bool(mapping.get("lengths", "true")),
    )


def _load_block_data(args):
    if getattr(args, "raw", False):
        if args.k is None:
            raise ValidationError("--raw input needs --k (block count)")
        sample = read_raw_sample(args.input)
        return blockify(sample, k=args.k, r=args.r)
    return read_blocks_csv(args.input)


def _estimate_payload(data, p: float) -> dict:
    est = quantile_hat_star(data, p)
    return {
        "gamma_hat": est.gamma_hat,
        "log_xp_hat": est.log_xp_hat,
        "xp_hat": math.exp(est.log_xp_hat),
        "a_coeff": est.a_coeff,
        "total_ranks": est.total_ranks,
        "se_log_xp": est.se_log_xp,
        "heterogeneous": not data.homogeneous,
    }


def _cmd_estimate(args) -> int:
    data = _load_block_data(args)
    payload = _estimate_payload(data, args.p)
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    elif args.format == "csv":
        keys = list(payload)
        print(",".join(keys))
        print(",".join(repr(payload[key]) if isinstance(payload[key], float) else str(payload[key]) for key in keys))
    else:
        for key, value in payload.items():
            print(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")
    return 0


def _cmd_ci(args) -> int:
    data = _load_block_data(args)
    payload = _estimate_payload(data, args.p)
    est = quantile_hat_star(data, args.p)
    methods = _parse_methods(args.method)
    intervals = []
    for method in methods:
        if method == "normal":
            ci = normal_ci(est, args.alpha)
        elif method in ("el", "ael"):
            ci = likelihood_ci(data, args.p, alpha=args.alpha, method=method,
                               correction=args.an)
        else:
            raise ValidationError(f"unknown method {method!r}")
        intervals.append(ci)

    if args.format == "json":
        print(json.dumps({
            "point": payload,
            "alpha": args.alpha,
            "intervals": [
                {
                    "method": ci.method,
                    "level": ci.level,
                    "lower": ci.lower,
                    "upper": ci.upper,
                    "diagnostics": sorted(ci.diagnostics),
                }
                for ci in intervals
            ],
        }, indent=2))
    elif args.format == "csv":
        print("method,level,lower,upper,point,diagnostics")
        for ci in intervals:
            print(f"{ci.method},{ci.level!r},{ci.lower!r},{ci.upper!r},{ci.point!r},"
                  f"{'|'.join(sorted(ci.diagnostics))}")
    else:
        print(f"log_xp_hat = {payload['log_xp_hat']:.6g}  (xp_hat = {payload['xp_hat']:.6g}, "
              f"gamma_hat = {payload['gamma_hat']:.6g})")
        for ci in intervals:
            note = f"  [{', '.join(sorted(ci.diagnostics))}]" if ci.diagnostics else ""
            print(f"{ci.method:>7}: ({ci.lower:.6g}, {ci.upper:.6g}){note}")
    return 0


def _progress_printer(label: str):
    state = {"last": -1}

    def update(done: int, total: int):
        pct = (100 * done) // total
        if pct != state["last"]:
            state["last"] = pct
            print(f"\r{label}: {done}/{total} chunks ({pct}%)", end="", file=sys.stderr, flush=True)
            if done == total:
                print(file=sys.stderr)

    return update


def _cmd_simulate(args) -> int:
    mapping: dict[str, str] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                mapping = parse_config_text(fh.read())
        except OSError as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
    overrides = {
        "scheme": args.scheme,
        "model": args.model,
        "k_grid": args.k_grid,
        "replicates": args.replicates,
        "alpha": args.alpha,
        "methods": args.method,
        "a_n": args.an,
        "master_seed": args.seed,
        "v": args.v,
        "r": args.r,
    }
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = str(value)
    if args.no_lengths:
        mapping["lengths"] = "false"
    config = build_sim_config(mapping)

    progress = _progress_printer("simulate") if not args.quiet else None
    report = run_study(config, workers=args.workers, progress=progress)
    csv_text = report.to_csv()
    sys.stdout.write(csv_text)
    if args.output:
        with open(args.output + ".csv", "w") as fh:
            fh.write(csv_text)
        with open(args.output + ".txt", "w") as fh:
            fh.write(report.to_text())
        print(f"wrote {args.output}.csv and {args.output}.txt", file=sys.stderr)
    return 0


def _model_slug(model_spec: str) -> str:
    return model_spec.replace(":", "_").replace("=", "").replace(",", "_").replace(".", "")


def _cmd_tables(args) -> int:
    k_grid = _parse_k_grid(args.k_grid) if args.k_grid else reference_k_grid()
    reference = load_reference()
    need_lengths = args.coverage_only is False
    reports = {}
    for scheme in ("scheme1", "scheme2"):
        for model_spec in TABLE_MODELS:
            config = SimConfig(
                scheme=scheme,
                model=parse_model(model_spec),
                k_grid=k_grid,
                replicates=args.replicates,
                methods=("ael", "normal"),
                correction=args.an,
                master_seed=args.seed,
                lengths=need_lengths,
            )
            label = f"{scheme} {model_spec}"
            progress = _progress_printer(label) if not args.quiet else None
            reports[(scheme, model_spec)] = run_study(
                config, workers=args.workers, progress=progress
            )

    lines = []
    flagged = 0
    total = 0
    for table, (scheme, quantity) in TABLE_META.items():
        if quantity == "length" and not need_lengths:
            continue
        lines.append(f"== table {table}: {quantity}, {scheme} ==")
        for model_spec in TABLE_MODELS:
            report = reports[(scheme, model_spec)]
            by = {(row.k, row.method): row for row in report.rows}
            lines.append(f"model {model_spec}")
            lines.append(
                f"{'k':>6} {'ael':>9} {'ref':>9} {'diff':>8} "
                f"{'normal':>9} {'ref':>9} {'diff':>8}  flags"
            )
            for k in k_grid:
                cells = []
                flags = []
                for method in ("ael", "normal"):
                    row = by[(k, method)]
                    ours = row.coverage if quantity == "coverage" else row.mean_length
                    ref = reference.get((table, model_spec, k, method))
                    total += 1
                    if ref is None:
                        cells.append(f"{ours:>9.4f} {'-':>9} {'-':>8}")
                        continue
                    diff = ours - ref
                    if quantity == "coverage":
                        bad = abs(diff) > COVERAGE_TOL
                        cells.append(f"{ours:>9.4f} {ref:>9.4f} {diff:>+8.4f}")
                    else:
                        bad = abs(diff) > LENGTH_RTOL * abs(ref)
                        cells.append(f"{ours:>9.3f} {ref:>9.3f} {diff:>+8.3f}")
                    if bad:
                        flagged += 1
                        flags.append(method)
                mark = ("  << " + ",".join(flags)) if flags else ""
                lines.append(f"{k:>6} " + " ".join(cells) + mark)
            lines.append("")
    lines.append(f"cells compared: {total}, out of tolerance: {flagged} "
                 f"(coverage tol {COVERAGE_TOL}, length rel tol {LENGTH_RTOL})")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)

    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        for (scheme, model_spec), report in reports.items():
            name = f"study_{scheme}_{_model_slug(model_spec)}.csv"
            with open(os.path.join(args.output_dir, name), "w") as fh:
                fh.write(report.to_csv())
        with open(os.path.join(args.output_dir, "comparison.txt"), "w") as fh:
            fh.write(text)
        print(f"wrote study CSVs and comparison.txt to {args.output_dir}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocktail",
        description="High-quantile estimation from per-block top order statistics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_input(sp):
        sp.add_argument("--input", required=True, help="block CSV file (or raw sample with --raw)")
        sp.add_argument("--raw", action="store_true",
                        help="treat --input as a raw sample, one positive value per line")
        sp.add_argument("--k", type=int, default=None, help="block count for --raw input")
        sp.add_argument("--r", type=int, default=1, help="top ranks kept per block for --raw input")
        sp.add_argument("--p", type=float, required=True, help="tail probability of the target quantile")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--strict", action="store_true",
                        help="escalate warnings to errors (exit 3)")

    sp = sub.add_parser("estimate", help="point estimate of the upper p-quantile")
    add_common_input(sp)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("ci", help="confidence intervals for the log-quantile")
    add_common_input(sp)
    sp.add_argument("--alpha", type=float, default=0.05, help="significance level")
    sp.add_argument("--method", default="ael",
                    help="normal, el, ael, all, or a comma list")
    sp.add_argument("--an", type=_parse_correction, default=DEFAULT_CORRECTION,
                    help="adjusted-likelihood pseudo-value weight (float or fraction)")
    sp.set_defaults(func=_cmd_ci)

    sp = sub.add_parser("simulate", help="run one coverage/length study")
    sp.add_argument("--config", default=None, help="key = value study config file")
    sp.add_argument("--scheme", default=None, choices=("scheme1", "scheme2"))
    sp.add_argument("--model", default=None, help="model string, e.g. burr:a=0.5,b=1")
    sp.add_argument("--k-grid", dest="k_grid", default=None, help="comma list of block counts")
    sp.add_argument("--replicates", type=int, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--method", default=None, help="comma list of methods, or 'all'")
    sp.add_argument("--an", type=_parse_correction, default=None)
    sp.add_argument("--seed", type=int, default=None, help="master seed")
    sp.add_argument("--v", type=float, default=None, help="scheme2 block growth exponent")
    sp.add_argument("--r", type=int, default=None)
    sp.add_argument("--no-lengths", action="store_true",
                    help="skip interval construction (coverage only)")
    sp.add_argument("--output", default=None, help="prefix for report files (.csv, .txt)")
    sp.add_argument("--workers", type=int, default=_default_workers(),
                    help=f"worker processes (default ${WORKERS_ENV} or 1)")
    sp.add_argument("--quiet", action="store_true", help="suppress progress output")
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("tables", help="reproduce the bundled study tables and compare")
    sp.add_argument("--replicates", type=int, default=5000)
    sp.add_argument("--k-grid", dest="k_grid", default=None,
                    help="comma list of block counts (default: the full reference grid)")
    sp.add_argument("--an", type=_parse_correction, default=DEFAULT_CORRECTION)
    sp.add_argument("--seed", type=int, default=0, help="master seed")
    sp.add_argument("--coverage-only", action="store_true",
                    help="skip the length tables (much faster)")
    sp.add_argument("--output-dir", default=None, help="directory for study CSVs and comparison")
    sp.add_argument("--workers", type=int, default=_default_workers())
    sp.add_argument("--quiet", action="store_true")
    sp.add_argument("--strict", action="store_true")
    sp.set_defaults(func=_cmd_tables)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            if getattr(args, "strict", False):
                warnings.simplefilter("error", category=BlocktailWarning)
            return args.func(args)
    except BlocktailWarning as exc:
        print(f"error (strict): {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except ValidationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
