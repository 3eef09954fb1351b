"""Call-log parsing, ID interning, work/leisure classification and link aggregation."""
from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
from array import array
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
# 1970-01-01 was a Thursday; Monday is weekday 0.
_EPOCH_WEEKDAY = 3

MONDAY, TUESDAY, WEDNESDAY, THURSDAY, FRIDAY, SATURDAY, SUNDAY = range(7)
WEEKDAYS = frozenset(range(5))


class FormatError(ValueError):
    """Raised when an on-disk artifact does not match its declared format."""


class Period(str, enum.Enum):
    FULL = "full"
    WORK = "work"
    LEISURE = "leisure"


class CallRecord(NamedTuple):
    caller: str
    callee: str
    timestamp: int
    duration: int


@dataclass(frozen=True)
class PeriodConfig:
    """Work-period definition plus ingest switches.

    The work interval is half-open: ``[work_start_hour, work_end_hour)`` in
    local time on one of ``work_days``. Local time is UTC shifted by a fixed
    ``utc_offset_minutes``; there is no DST handling.
    """

    work_start_hour: int = 8
    work_end_hour: int = 18
    work_days: frozenset = WEEKDAYS
    utc_offset_minutes: int = 60
    keep_self_calls: bool = False

    def __post_init__(self):
        if not 0 <= self.work_start_hour < self.work_end_hour <= 24:
            raise ValueError(
                f"need 0 <= work_start_hour < work_end_hour <= 24, got "
                f"{self.work_start_hour}, {self.work_end_hour}"
            )
        days = frozenset(self.work_days)
        if not days or not days <= frozenset(range(7)):
            raise ValueError(f"work_days must be a non-empty subset of 0..6, got {sorted(days)}")
        object.__setattr__(self, "work_days", days)


class NodeInterner:
    """Dense first-seen-order mapping between ID strings and node indices."""

    def __init__(self, ids: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        self._ids: list[str] = []
        for s in ids:
            self.intern(s)

    def intern(self, s: str) -> int:
        i = self._index.get(s)
        if i is None:
            i = len(self._ids)
            self._index[s] = i
            self._ids.append(s)
        return i

    def index_of(self, s: str) -> int:
        return self._index[s]

    def id_of(self, i: int) -> str:
        return self._ids[i]

    @property
    def ids(self) -> list[str]:
        return self._ids

    @property
    def next_index(self) -> int:
        return len(self._ids)

    def __len__(self):
        return len(self._ids)

    def __contains__(self, s):
        return s in self._index

    def __eq__(self, other):
        if not isinstance(other, NodeInterner):
            return NotImplemented
        return self._ids == other._ids


@dataclass
class ParseStats:
    parsed: int = 0
    skipped: int = 0


def parse_log(lines: Iterable[str], stats: ParseStats | None = None) -> Iterator[CallRecord]:
    """Yield one CallRecord per well-formed ``caller,callee,epoch,duration`` line.

    Malformed lines are skipped and counted in ``stats.skipped``. Errors raised
    by the underlying iterable (I/O failures) propagate.
    """
    if stats is None:
        stats = ParseStats()
    for line in lines:
        parts = line.rstrip("\r\n").split(",")
        if len(parts) != 4:
            stats.skipped += 1
            continue
        caller, callee, ts, dur = parts
        try:
            t = int(ts)
            d = int(dur)
        except ValueError:
            stats.skipped += 1
            continue
        if not caller or not callee or d < 0:
            stats.skipped += 1
            continue
        stats.parsed += 1
        yield CallRecord(caller, callee, t, d)


def _local_fields(t, cfg: PeriodConfig):
    local = t + cfg.utc_offset_minutes * 60
    days = local // SECONDS_PER_DAY
    weekday = (days + _EPOCH_WEEKDAY) % 7
    hour = (local % SECONDS_PER_DAY) // 3600
    return days, weekday, hour


def classify_period(t: int, cfg: PeriodConfig) -> Period:
    _, weekday, hour = _local_fields(t, cfg)
    if weekday in cfg.work_days and cfg.work_start_hour <= hour < cfg.work_end_hour:
        return Period.WORK
    return Period.LEISURE


def is_work(t: np.ndarray, cfg: PeriodConfig) -> np.ndarray:
    """Vectorised :func:`classify_period`; True where the call is in the work period."""
    t = np.asarray(t, dtype=np.int64)
    _, weekday, hour = _local_fields(t, cfg)
    mask = np.zeros(7, dtype=bool)
    mask[list(cfg.work_days)] = True
    return mask[weekday] & (hour >= cfg.work_start_hour) & (hour < cfg.work_end_hour)


@dataclass(frozen=True, eq=False)
class CallBatch:
    """Columnar buffer of calls over interned node indices."""

    src: np.ndarray
    dst: np.ndarray
    timestamp: np.ndarray
    duration: np.ndarray
    self_calls_dropped: int = 0

    def __len__(self):
        return len(self.src)


def collect_calls(records: Iterable[CallRecord], interner: NodeInterner,
                  cfg: PeriodConfig = PeriodConfig()) -> CallBatch:
    """Intern IDs in first-seen order and buffer the calls as arrays.

    Self-calls are dropped before interning unless ``cfg.keep_self_calls``.
    """
    src, dst = array("q"), array("q")
    ts, dur = array("q"), array("q")
    intern = interner.intern
    keep_self = cfg.keep_self_calls
    dropped = 0
    for caller, callee, t, d in records:
        if caller == callee and not keep_self:
            dropped += 1
            continue
        src.append(intern(caller))
        dst.append(intern(callee))
        ts.append(t)
        dur.append(d)
    return CallBatch(
        np.frombuffer(src, dtype=np.int64) if src else np.zeros(0, np.int64),
        np.frombuffer(dst, dtype=np.int64) if dst else np.zeros(0, np.int64),
        np.frombuffer(ts, dtype=np.int64) if ts else np.zeros(0, np.int64),
        np.frombuffer(dur, dtype=np.int64) if dur else np.zeros(0, np.int64),
        dropped,
    )


@dataclass(frozen=True, eq=False)
class PairCounts:
    """Directed pair totals for one period, sorted by (src, dst)."""

    src: np.ndarray
    dst: np.ndarray
    calls: np.ndarray
    duration: np.ndarray

    def __len__(self):
        return len(self.src)

    @classmethod
    def empty(cls):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy())

    def to_dict(self) -> dict[tuple[int, int], tuple[int, int]]:
        return {
            (s, d): (c, u)
            for s, d, c, u in zip(self.src.tolist(), self.dst.tolist(),
                                  self.calls.tolist(), self.duration.tolist())
        }

    def equals(self, other: "PairCounts") -> bool:
        return all(
            np.array_equal(a, b)
            for a, b in ((self.src, other.src), (self.dst, other.dst),
                         (self.calls, other.calls), (self.duration, other.duration))
        )


@dataclass(frozen=True, eq=False)
class LinkTable:
    node_count: int
    full: PairCounts
    work: PairCounts
    leisure: PairCounts

    def period(self, p: Period | str) -> PairCounts:
        return getattr(self, Period(p).value)

    def equals(self, other: "LinkTable") -> bool:
        return self.node_count == other.node_count and all(
            self.period(p).equals(other.period(p)) for p in Period
        )

    def check_partition(self) -> None:
        """Raise AssertionError unless Full = Work + Leisure for every pair."""
        n = max(self.node_count, 1)
        full_keys = self.full.src * n + self.full.dst
        total = np.zeros(len(self.full), dtype=np.int64)
        for part in (self.work, self.leisure):
            keys = part.src * n + part.dst
            pos = np.searchsorted(full_keys, keys)
            if len(keys) and (np.any(pos >= len(full_keys)) or np.any(full_keys[pos] != keys)):
                raise AssertionError("period table holds a pair missing from the full table")
            np.add.at(total, pos, part.calls)
        if not np.array_equal(total, self.full.calls):
            raise AssertionError("full call counts differ from work + leisure")
        if len(self.full) and (self.full.calls.min() < 1 or self.full.src.max() >= self.node_count
                               or self.full.dst.max() >= self.node_count):
            raise AssertionError("link table holds an invalid count or node index")


def _group_pairs(src, dst, dur, node_count) -> PairCounts:
    if len(src) == 0:
        return PairCounts.empty()
    n = max(node_count, 1)
    keys = src * n + dst
    uniq, inverse, calls = np.unique(keys, return_inverse=True, return_counts=True)
    total = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(total, inverse, dur)
    return PairCounts(uniq // n, uniq % n, calls.astype(np.int64), total)


def aggregate_batch(batch: CallBatch, cfg: PeriodConfig, node_count: int) -> LinkTable:
    work = is_work(batch.timestamp, cfg)
    leisure = ~work
    table = LinkTable(
        node_count,
        _group_pairs(batch.src, batch.dst, batch.duration, node_count),
        _group_pairs(batch.src[work], batch.dst[work], batch.duration[work], node_count),
        _group_pairs(batch.src[leisure], batch.dst[leisure], batch.duration[leisure], node_count),
    )
    table.check_partition()
    return table


def aggregate(records: Iterable[CallRecord], cfg: PeriodConfig,
              interner: NodeInterner) -> LinkTable:
    """Aggregate calls into per-period directed link totals.

    ``interner`` grows with every first-seen ID; the returned table's
    ``node_count`` equals its final size.
    """
    batch = collect_calls(records, interner, cfg)
    return aggregate_batch(batch, cfg, len(interner))


def daily_volume(records: Iterable[CallRecord] | CallBatch,
                 cfg: PeriodConfig = PeriodConfig()) -> list[tuple[dt.date, int]]:
    """Call counts per local calendar date, in date order."""
    if isinstance(records, CallBatch):
        t = records.timestamp
    else:
        t = np.fromiter((r.timestamp for r in records), dtype=np.int64)
    if len(t) == 0:
        return []
    days, _, _ = _local_fields(t, cfg)
    uniq, counts = np.unique(days, return_counts=True)
    epoch = dt.date(1970, 1, 1)
    return [(epoch + dt.timedelta(days=int(d)), int(c)) for d, c in zip(uniq, counts)]


def filter_prefix(table: LinkTable, interner: NodeInterner,
                  prefix: str) -> tuple[LinkTable, NodeInterner]:
    """Keep links whose source and destination IDs both start with ``prefix``.

    Surviving nodes are re-interned densely, preserving their original order.
    """
    ids = interner.ids
    keep_node = np.fromiter((s.startswith(prefix) for s in ids), dtype=bool, count=len(ids))
    full = table.full
    keep = keep_node[full.src] & keep_node[full.dst] if len(full) else np.zeros(0, bool)
    used = np.zeros(table.node_count, dtype=bool)
    used[full.src[keep]] = True
    used[full.dst[keep]] = True
    old = np.flatnonzero(used)
    remap = np.full(table.node_count, -1, dtype=np.int64)
    remap[old] = np.arange(len(old))
    new_interner = NodeInterner(ids[i] for i in old.tolist())

    def _sub(pc: PairCounts) -> PairCounts:
        if len(pc) == 0:
            return PairCounts.empty()
        k = keep_node[pc.src] & keep_node[pc.dst]
        # remap is monotone, so (src, dst) order survives
        return PairCounts(remap[pc.src[k]], remap[pc.dst[k]], pc.calls[k], pc.duration[k])

    out = LinkTable(len(old), _sub(table.full), _sub(table.work), _sub(table.leisure))
    out.check_partition()
    return out, new_interner


# -- on-disk formats ---------------------------------------------------------

LINKS_HEADER = ["src_id", "dst_id", "period", "call_count", "total_duration"]
NODES_HEADER = ["id_string", "node_index"]


def write_link_table(table: LinkTable, interner: NodeInterner,
                     links_path: Path | str, nodes_path: Path | str) -> None:
    ids = interner.ids
    with open(links_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(LINKS_HEADER)
        for p in Period:
            pc = table.period(p)
            for s, d, c, u in zip(pc.src.tolist(), pc.dst.tolist(),
                                  pc.calls.tolist(), pc.duration.tolist()):
                w.writerow((ids[s], ids[d], p.value, c, u))
    with open(nodes_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(NODES_HEADER)
        w.writerows((s, i) for i, s in enumerate(ids))


def read_link_table(links_path: Path | str,
                    nodes_path: Path | str) -> tuple[LinkTable, NodeInterner]:
    interner = NodeInterner()
    with open(nodes_path, newline="", encoding="utf-8") as f:
        r = csv.reader(f)
        if next(r, None) != NODES_HEADER:
            raise FormatError(f"{nodes_path}: expected header {','.join(NODES_HEADER)}")
        for row in r:
            if len(row) != 2 or not row[1].isdigit() or interner.intern(row[0]) != int(row[1]):
                raise FormatError(f"{nodes_path}: bad manifest row {row!r}")
    cols = {p: ([], [], [], []) for p in Period}
    with open(links_path, newline="", encoding="utf-8") as f:
        r = csv.reader(f)
        if next(r, None) != LINKS_HEADER:
            raise FormatError(f"{links_path}: expected header {','.join(LINKS_HEADER)}")
        for row in r:
            try:
                s, d, p, c, u = row
                c_ = cols[Period(p)]
                c_[0].append(interner.index_of(s))
                c_[1].append(interner.index_of(d))
                c_[2].append(int(c))
                c_[3].append(int(u))
            except (ValueError, KeyError) as e:
                raise FormatError(f"{links_path}: bad link row {row!r}") from e
    n = len(interner)
    parts = {}
    for p, (s, d, c, u) in cols.items():
        s, d = np.array(s, dtype=np.int64), np.array(d, dtype=np.int64)
        order = np.lexsort((d, s))
        parts[p] = PairCounts(s[order], d[order], np.array(c, dtype=np.int64)[order],
                              np.array(u, dtype=np.int64)[order])
    table = LinkTable(n, parts[Period.FULL], parts[Period.WORK], parts[Period.LEISURE])
    try:
        table.check_partition()
    except AssertionError as e:
        raise FormatError(f"{links_path}: {e}") from e
    return table, interner


def write_daily_volume(volume: list[tuple[dt.date, int]], path: Path | str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["date", "call_count"])
        w.writerows((d.isoformat(), c) for d, c in volume)
