"""Container types and IO for per-block top order statistics.

The data unit is a block of ``m`` raw observations from which only the
``r + 1`` largest are retained, stored on log scale in decreasing order.
Raw observations are clamped at 1 before taking logs, so every stored
value is >= 0 and the left endpoint of the support never interferes with
tail quantities.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Sequence, Union

import numpy as np

from .exceptions import (
    DomainError,
    HeterogeneousData,
    InsufficientData,
    NegativeLogValue,
    NonMonotoneBlock,
    RanksExceedBlockSize,
    TooFewBlocks,
    ValidationError,
)

PathOrFile = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class Block:
    """Top order statistics of one block.

    Attributes:
        m: number of raw observations the block was formed from.
        top_log: the r+1 largest observations on log scale, non-increasing.
    """

    m: int
    top_log: tuple[float, ...]

    @property
    def r(self) -> int:
        return len(self.top_log) - 1

    def check(self, index: int = 0) -> None:
        """Raise a validation error if the block is malformed."""
        if int(self.m) != self.m or self.m < 2:
            raise DomainError(f"block {index}: block size m must be an integer >= 2, got {self.m}")
        if len(self.top_log) < 2:
            raise DomainError(f"block {index}: need at least the top two order statistics")
        if len(self.top_log) > self.m:
            raise RanksExceedBlockSize(
                f"block {index}: {len(self.top_log)} top order statistics from a block of size {self.m}"
            )
        arr = np.asarray(self.top_log, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"block {index}: non-finite log value")
        if np.any(arr < 0.0):
            raise NegativeLogValue(f"block {index}: log values must be >= 0")
        if np.any(np.diff(arr) > 0.0):
            raise NonMonotoneBlock(f"block {index}: top order statistics must be non-increasing")


@dataclass(frozen=True)
class BlockData:
    """A validated collection of blocks.

    Ties are allowed within a block; blocks may differ in (m, r), in which
    case only the pooled (starred) estimators apply.
    """

    blocks: tuple[Block, ...]

    def __post_init__(self):
        if len(self.blocks) < 2:
            raise TooFewBlocks(f"need at least 2 blocks, got {len(self.blocks)}")
        for i, b in enumerate(self.blocks):
            b.check(i)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @cached_property
    def homogeneous(self) -> bool:
        first = (self.blocks[0].m, self.blocks[0].r)
        return all((b.m, b.r) == first for b in self.blocks)

    @property
    def m(self) -> int:
        """Common block size. Only defined for homogeneous data."""
        self._require_homogeneous()
        return self.blocks[0].m

    @property
    def r(self) -> int:
        """Common number of retained ranks minus one (top r+1 stored)."""
        self._require_homogeneous()
        return self.blocks[0].r

    @property
    def total_ranks(self) -> int:
        """Sum of r_i over blocks; the effective sample size of gap statistics."""
        return sum(b.r for b in self.blocks)

    def _require_homogeneous(self):
        if not self.homogeneous:
            raise HeterogeneousData("blocks differ in (m, r); use the starred estimators")

    def top_log_matrix(self) -> np.ndarray:
        """(k, r+1) array of log order statistics; homogeneous data only."""
        self._require_homogeneous()
        return np.array([b.top_log for b in self.blocks], dtype=float)


def validate(raw) -> BlockData:
    """Coerce candidate block data into a validated BlockData.

    Accepts a BlockData (returned unchanged), an iterable of Block, or an
    iterable of ``(m, top_log_sequence)`` pairs. Raises a subclass of
    ValidationError or DomainError describing the first defect found.
    """
    if isinstance(raw, BlockData):
        return raw
    blocks = []
    for item in raw:
        if isinstance(item, Block):
            blocks.append(item)
        else:
            try:
                m, values = item
            except (TypeError, ValueError):
                raise ValidationError(f"cannot interpret {item!r} as a block") from None
            blocks.append(Block(m=int(m), top_log=tuple(float(v) for v in values)))
    return BlockData(blocks=tuple(blocks))


def blockify(sample: Sequence[float], k: int, r: int) -> BlockData:
    """Split a raw sample into k consecutive blocks and keep the top r+1 of each.

    The block size is m = floor(n / k); trailing observations beyond k*m are
    discarded. Observations are clamped at 1 before logs are taken.

    Raises:
        InsufficientData: when k * (r + 1) exceeds the sample size.
        DomainError: for k < 2 or r < 1.
    """
    if k < 2:
        raise TooFewBlocks(f"need at least 2 blocks, got k={k}")
    if r < 1:
        raise DomainError(f"need r >= 1, got r={r}")
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1:
        raise ValidationError("sample must be one-dimensional")
    n = x.size
    if k * (r + 1) > n:
        raise InsufficientData(
            f"sample of size {n} cannot provide {r + 1} top order statistics in each of {k} blocks"
        )
    m = n // k
    clamped = np.maximum(x[: k * m], 1.0).reshape(k, m)
    # top r+1 per block, decreasing; full sort is fine at these sizes
    top = -np.sort(-clamped, axis=1)[:, : r + 1]
    logs = np.log(top)
    blocks = tuple(Block(m=m, top_log=tuple(row)) for row in logs)
    return BlockData(blocks=blocks)


# -- file formats ------------------------------------------------------------

_HEADER = ["block_id", "m", "rank", "log_value"]


def write_blocks_csv(data: BlockData, dest: PathOrFile) -> None:
    """Write block data in the long CSV format (block_id,m,rank,log_value).

    Floats are written with repr so a read-back reproduces them bit-exactly.
    """
    if hasattr(dest, "write"):
        _write_blocks(data, dest)
    else:
        with open(dest, "w", newline="") as fh:
            _write_blocks(data, fh)


def _write_blocks(data: BlockData, fh: IO[str]) -> None:
    w = csv.writer(fh)
    w.writerow(_HEADER)
    for i, b in enumerate(data.blocks, start=1):
        for rank, value in enumerate(b.top_log, start=1):
            w.writerow([i, b.m, rank, repr(float(value))])


def read_blocks_csv(src: PathOrFile) -> BlockData:
    """Read block data from the long CSV format.

    Each block must carry ranks 1..r+1 exactly once and a consistent m.
    Errors name the offending row (1-based, counting the header as row 1).
    """
    if hasattr(src, "read"):
        return _read_blocks(src)
    with open(src, newline="") as fh:
        return _read_blocks(fh)


def _read_blocks(fh: IO[str]) -> BlockData:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty block CSV") from None
    if [h.strip() for h in header] != _HEADER:
        raise ValidationError(f"expected header {','.join(_HEADER)!r}, got {','.join(header)!r}")

    order: list[str] = []
    ms: dict[str, int] = {}
    ranks: dict[str, dict[int, float]] = {}
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ValidationError(f"row {rownum}: expected 4 columns, got {len(row)}")
        bid = row[0].strip()
        try:
            m = int(row[1])
        except ValueError:
            raise ValidationError(f"row {rownum}: malformed m column {row[1]!r}") from None
        try:
            rank = int(row[2])
        except ValueError:
            raise ValidationError(f"row {rownum}: malformed rank column {row[2]!r}") from None
        try:
            value = float(row[3])
        except ValueError:
            raise ValidationError(f"row {rownum}: malformed log_value column {row[3]!r}") from None
        if rank < 1:
            raise ValidationError(f"row {rownum}: rank must be >= 1, got {rank}")
        if bid not in ranks:
            order.append(bid)
            ranks[bid] = {}
            ms[bid] = m
        elif ms[bid] != m:
            raise ValidationError(f"row {rownum}: block {bid!r} has conflicting m ({ms[bid]} vs {m})")
        if rank in ranks[bid]:
            raise ValidationError(f"row {rownum}: duplicate rank {rank} in block {bid!r}")
        ranks[bid][rank] = value

    blocks = []
    for bid in order:
        got = ranks[bid]
        expect = set(range(1, len(got) + 1))
        if set(got) != expect:
            missing = sorted(expect - set(got)) or sorted(set(got) - expect)
            raise ValidationError(
                f"block {bid!r}: ranks must cover 1..{len(got)} exactly (problem near rank {missing[0]})"
            )
        blocks.append(Block(m=ms[bid], top_log=tuple(got[j] for j in sorted(got))))
    return BlockData(blocks=tuple(blocks))


def read_raw_sample(src: PathOrFile) -> np.ndarray:
    """Read a raw sample: one positive real per line, blank lines ignored."""
    if hasattr(src, "read"):
        lines = src.readlines()
    else:
        with open(src) as fh:
            lines = fh.readlines()
    values = []
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s:
            continue
        try:
            x = float(s)
        except ValueError:
            raise ValidationError(f"line {lineno}: not a number: {s!r}") from None
        if not np.isfinite(x) or x <= 0.0:
            raise ValidationError(f"line {lineno}: observations must be finite and > 0, got {s}")
        values.append(x)
    return np.asarray(values, dtype=float)
