"""Coverage and interval-length studies over a grid of block counts.

Reproducibility contract: replicate j of cell k draws from a dedicated
counter-based stream keyed by (master_seed, k, j), so any replicate can be
regenerated in isolation and results do not depend on how replicates are
chunked or distributed over worker processes. Chunk size is a fixed module
constant for the same reason. Per-cell reductions use exact summation
(math.fsum) and integer counts, which are order-free, so the emitted report
is byte-identical for any worker count.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import chi2, norm

from .distributions import (
    Burr,
    Frechet,
    HeavyTailModel,
    exponential_top_orders,
)
from .estimators import a_coeff
from .exceptions import DomainError, UnknownV, ValidationError
from .likelihood import (
    DEFAULT_CORRECTION,
    _augment_rows,
    _el_stat_rows,
    _gap_terms,
    _levelset_bound,
    _z_rows,
)

__all__ = [
    "SimConfig",
    "MethodOutcome",
    "ReplicateRecord",
    "ReportRow",
    "SimulationReport",
    "scheme_params",
    "run_cell",
    "run_study",
]

REPLICATE_CHUNK = 256  # fixed: changing it changes nothing but task granularity

_METHODS = ("normal", "el", "ael")

# scheme-2 block growth exponents for the bundled study models
_V_DEFAULTS = (
    (Frechet(a=1.0), 0.5),
    (Burr(a=0.5, b=1.0), 0.5),
    (Burr(a=1.0, b=0.5), 0.25),
)


@dataclass(frozen=True)
class SimConfig:
    """Study definition: one model, one scheme, a grid of block counts."""

    scheme: str
    model: HeavyTailModel
    k_grid: tuple[int, ...]
    r: int = 1
    replicates: int = 5000
    alpha: float = 0.05
    methods: tuple[str, ...] = ("ael", "normal")
    correction: float = DEFAULT_CORRECTION
    master_seed: int = 0
    v: Optional[float] = None
    lengths: bool = True

    def __post_init__(self):
        if self.scheme not in ("scheme1", "scheme2"):
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if not self.k_grid:
            raise ValidationError("k_grid must not be empty")
        for k in self.k_grid:
            if int(k) != k or k < 2 or k >= 2**32:
                raise ValidationError(f"block counts must be integers >= 2, got {k}")
        if int(self.r) != self.r or self.r < 1:
            raise DomainError(f"need integer r >= 1, got {self.r}")
        if self.replicates < 1 or self.replicates >= 2**32:
            raise ValidationError(f"replicates must be >= 1, got {self.replicates}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.methods:
            raise ValidationError("at least one method is required")
        for meth in self.methods:
            if meth not in _METHODS:
                raise ValidationError(f"unknown method {meth!r} (expected one of {_METHODS})")
        if not (self.correction > 0.0):
            raise DomainError(f"pseudo-value weight must be > 0, got {self.correction}")
        if not (0 <= self.master_seed < 2**64):
            raise ValidationError("master_seed must fit in 64 bits")
        if self.v is not None and not (0.0 < self.v <= 1.0):
            raise DomainError(f"block growth exponent v must lie in (0, 1], got {self.v}")


@dataclass(frozen=True)
class MethodOutcome:
    covered: bool
    lower: float
    upper: float
    length: float
    hull_failure: bool
    failed: bool


@dataclass(frozen=True)
class ReplicateRecord:
    k: int
    m: int
    p: float
    replicate_index: int
    true_log_quantile: float
    outcomes: dict[str, MethodOutcome]


@dataclass(frozen=True)
class ReportRow:
    k: int
    m: int
    p: float
    method: str
    coverage: float
    mean_length: float
    mc_se: float
    hull_failures: int


@dataclass(frozen=True)
class SimulationReport:
    config: SimConfig
    rows: tuple[ReportRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,m,p,method,coverage,mean_length,mc_se,hull_failures\n")
        for row in self.rows:
            buf.write(
                f"{row.k},{row.m},{row.p!r},{row.method},{row.coverage!r},"
                f"{row.mean_length!r},{row.mc_se!r},{row.hull_failures}\n"
            )
        return buf.getvalue()

    def to_text(self) -> str:
        """Human-readable layout: one row per k, one column per method, a
        coverage block first and a mean-length block when lengths were run."""
        methods = sorted(self.config.methods)
        ks = sorted(set(row.k for row in self.rows))
        by = {(row.k, row.method): row for row in self.rows}
        head = (
            f"model={self.config.model.spec_string()}  scheme={self.config.scheme}  "
            f"alpha={self.config.alpha:g}  replicates={self.config.replicates}"
        )
        lines = [f"# coverage  {head}"]
        header = f"{'k':>6} {'m':>7} {'p':>12}" + "".join(f" {m:>9}" for m in methods)
        lines.append(header)
        for k in ks:
            any_row = by[(k, methods[0])]
            cells = "".join(f" {by[(k, m)].coverage:>9.4f}" for m in methods)
            lines.append(f"{k:>6} {any_row.m:>7} {any_row.p:>12.6g}" + cells)
        if any(math.isfinite(row.mean_length) for row in self.rows):
            lines.append("")
            lines.append(f"# mean interval length  {head}")
            lines.append(header)
            for k in ks:
                any_row = by[(k, methods[0])]
                cells = "".join(f" {by[(k, m)].mean_length:>9.3f}" for m in methods)
                lines.append(f"{k:>6} {any_row.m:>7} {any_row.p:>12.6g}" + cells)
        return "\n".join(lines) + "\n"


def scheme_params(scheme: str, k: int, model: HeavyTailModel, v: Optional[float] = None):
    """Block size and tail probability for cell k of a study scheme.

    scheme1: fixed budget of 1000 observations, m = floor(1000/k), p = 1/1000.
    scheme2: growing blocks m = floor(50 * k^v), p = 1/(k m); v defaults per
    bundled model (0.5 for frechet:a=1 and burr:a=0.5,b=1, 0.25 for
    burr:a=1,b=0.5) and must be given explicitly for anything else.
    """
    if int(k) != k or k < 2:
        raise DomainError(f"need integer k >= 2, got {k}")
    if scheme == "scheme1":
        m = 1000 // k
        if m < 2:
            raise DomainError(f"scheme1 needs k <= 500, got k={k}")
        return m, 1.0 / 1000.0
    if scheme == "scheme2":
        if v is None:
            for ref, ref_v in _V_DEFAULTS:
                if model == ref:
                    v = ref_v
                    break
            else:
                raise UnknownV(
                    f"no bundled growth exponent for {model.spec_string()}; pass v explicitly"
                )
        if not (0.0 < v <= 1.0):
            raise DomainError(f"block growth exponent v must lie in (0, 1], got {v}")
        # sqrt composition keeps m exact for the common v = 1/2, 1/4
        if v == 0.5:
            grow = math.sqrt(k)
        elif v == 0.25:
            grow = math.sqrt(math.sqrt(k))
        else:
            grow = float(k) ** v
        m = math.floor(50.0 * grow)
        return m, 1.0 / (k * m)
    raise ValidationError(f"unknown scheme {scheme!r}")


def _stream(master_seed: int, k: int, replicate_index: int) -> np.random.Generator:
    """Dedicated counter-based stream for one replicate of one cell."""
    if not (0 <= replicate_index < 2**32):
        raise ValidationError("replicate index must fit in 32 bits")
    key = (int(master_seed) << 64) | (int(k) << 32) | int(replicate_index)
    return np.random.Generator(np.random.Philox(key=key))


def _sample_chunk(
    model: HeavyTailModel, m: int, r: int, k: int, master_seed: int, lo: int, hi: int
) -> np.ndarray:
    """Log top-order matrices for replicates lo..hi-1: shape (hi-lo, k, r+1)."""
    e = np.empty((hi - lo, k, r + 1), dtype=float)
    for i, rep in enumerate(range(lo, hi)):
        rng = _stream(master_seed, k, rep)
        e[i] = exponential_top_orders(m, r, k, rng)
    return np.maximum(model.log_u_exp(e), 0.0)


def _evaluate_chunk(
    top_log: np.ndarray,
    m: int,
    p: float,
    r: int,
    y_true: float,
    alpha: float,
    methods: tuple[str, ...],
    correction: float,
    compute_lengths: bool,
) -> dict[str, dict[str, np.ndarray]]:
    """Coverage indicators and interval bounds for every requested method."""
    rows, k, _ = top_log.shape
    gaps, tail = _gap_terms(top_log)
    a = a_coeff(m, r, p)
    g = gaps.sum(axis=(1, 2)) / (k * r)
    tail_mean = tail.mean(axis=1)
    log_xp = tail_mean - a * g
    se = abs(a) * g / math.sqrt(k * r)
    failed = g == 0.0

    zq = float(norm.ppf(1.0 - alpha / 2.0))
    crit = float(chi2.ppf(1.0 - alpha, df=1))
    nan = np.full(rows, np.nan)

    out: dict[str, dict[str, np.ndarray]] = {}
    for method in methods:
        if method == "normal":
            half = zq * se
            lower = log_xp - half
            upper = log_xp + half
            covered = (lower < y_true) & (y_true < upper) & ~failed
            length = np.where(failed, np.nan, 2.0 * half)
            hull = np.zeros(rows, dtype=bool)
        else:
            augmented = method == "ael"

            def stat_at(y: np.ndarray, _aug=augmented) -> np.ndarray:
                z = _z_rows(gaps, tail, a, y)
                if _aug:
                    z = _augment_rows(z, correction)
                return _el_stat_rows(z)[0]

            s0 = stat_at(np.full(rows, y_true))
            covered = (s0 < crit) & ~failed
            hull = np.isinf(s0)
            if compute_lengths:
                step = np.where(se > 0, zq * se, 1.0)
                upper, fail_u, _, _ = _levelset_bound(stat_at, log_xp, step, crit, +1)
                lower, fail_l, _, _ = _levelset_bound(stat_at, log_xp, step, crit, -1)
                length = np.where(failed, np.nan, upper - lower)
            else:
                lower = upper = length = nan
        out[method] = {
            "covered": covered,
            "lower": lower,
            "upper": upper,
            "length": length,
            "hull": hull,
            "failed": failed,
        }
    return out


def _cell_geometry(config: SimConfig, k: int) -> tuple[int, float, float]:
    m, p = scheme_params(config.scheme, k, config.model, config.v)
    if m <= config.r:
        raise DomainError(f"cell k={k}: block size m={m} must exceed r={config.r}")
    a = a_coeff(m, config.r, p)
    if a >= 0.0 and any(meth in config.methods for meth in ("el", "ael")):
        raise DomainError(
            f"cell k={k}: a(m,r,p) = {a:g} >= 0; likelihood methods need a tail-side quantile"
        )
    y_true = config.model.true_log_quantile(p)
    return m, p, y_true


def _run_chunk_task(config: SimConfig, k: int, lo: int, hi: int):
    m, p, y_true = _cell_geometry(config, k)
    top_log = _sample_chunk(config.model, m, config.r, k, config.master_seed, lo, hi)
    ev = _evaluate_chunk(
        top_log, m, p, config.r, y_true, config.alpha,
        config.methods, config.correction, config.lengths,
    )
    payload = {
        meth: (d["covered"], d["length"], d["hull"], d["failed"]) for meth, d in ev.items()
    }
    return k, lo, payload


def run_cell(config: SimConfig, k: int, replicate_index: int) -> ReplicateRecord:
    """Regenerate and evaluate a single replicate, intervals included.

    Bit-for-bit reproducible: the same (master_seed, k, replicate_index)
    always yields the same record, whether called directly or as part of a
    chunked study run.
    """
    m, p, y_true = _cell_geometry(config, k)
    top_log = _sample_chunk(
        config.model, m, config.r, k, config.master_seed, replicate_index, replicate_index + 1
    )
    ev = _evaluate_chunk(
        top_log, m, p, config.r, y_true, config.alpha,
        config.methods, config.correction, compute_lengths=True,
    )
    outcomes = {
        meth: MethodOutcome(
            covered=bool(d["covered"][0]),
            lower=float(d["lower"][0]),
            upper=float(d["upper"][0]),
            length=float(d["length"][0]),
            hull_failure=bool(d["hull"][0]),
            failed=bool(d["failed"][0]),
        )
        for meth, d in ev.items()
    }
    return ReplicateRecord(
        k=k, m=m, p=p, replicate_index=replicate_index,
        true_log_quantile=y_true, outcomes=outcomes,
    )


def run_study(
    config: SimConfig,
    workers: int = 1,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SimulationReport:
    """Run the full study grid and aggregate one report row per (k, method).

    workers > 1 distributes fixed-size replicate chunks over processes; the
    aggregated report is byte-identical for any worker count.
    """
    for k in config.k_grid:
        _cell_geometry(config, k)  # fail fast on an invalid cell

    tasks = [
        (k, lo, min(lo + REPLICATE_CHUNK, config.replicates))
        for k in config.k_grid
        for lo in range(0, config.replicates, REPLICATE_CHUNK)
    ]
    results: dict[tuple[int, int], dict] = {}
    done = 0
    if workers <= 1:
        for k, lo, hi in tasks:
            rk, rlo, payload = _run_chunk_task(config, k, lo, hi)
            results[(rk, rlo)] = payload
            done += 1
            if progress:
                progress(done, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk_task, config, k, lo, hi) for k, lo, hi in tasks]
            for fut in as_completed(futures):
                rk, rlo, payload = fut.result()
                results[(rk, rlo)] = payload
                done += 1
                if progress:
                    progress(done, len(tasks))

    rows = []
    for k in sorted(set(config.k_grid)):
        m, p, _ = _cell_geometry(config, k)
        chunk_keys = sorted(key for key in results if key[0] == k)
        for method in sorted(set(config.methods)):
            covered = 0
            hull = 0
            lengths: list[float] = []
            for key in chunk_keys:
                cov, lens, hl, _failed = results[key][method]
                covered += int(np.sum(cov))
                hull += int(np.sum(hl))
                lengths.extend(float(x) for x in lens)
            n = config.replicates
            coverage = covered / n
            finite = [x for x in lengths if math.isfinite(x)]
            mean_length = math.fsum(finite) / len(finite) if finite else float("nan")
            mc_se = math.sqrt(coverage * (1.0 - coverage) / n)
            rows.append(
                ReportRow(
                    k=k, m=m, p=p, method=method, coverage=coverage,
                    mean_length=mean_length, mc_se=mc_se, hull_failures=hull,
                )
            )
    return SimulationReport(config=config, rows=tuple(rows))
