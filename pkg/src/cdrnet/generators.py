"""Seeded synthetic graphs and call logs with known structure.

Every generator draws from ``numpy.random.Generator(numpy.random.PCG64(seed))``
(numpy seeds PCG64 through ``SeedSequence(seed)``), so a given seed gives the
same output on every platform numpy supports.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .graph import UndirectedGraph
from .ingest import (CallRecord, LinkTable, NodeInterner, PairCounts,
                     SECONDS_PER_DAY, WEEKDAYS)

MAX_LINK_ATTEMPTS = 100


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class _Uniforms:
    """Block-buffered U[0, 1) draws; the stream is the same as one draw at a time."""

    def __init__(self, rng: np.random.Generator, block: int = 1 << 16):
        self._rng = rng
        self._block = block
        self._buf: list[float] = []
        self._i = 0

    def __call__(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._rng.random(self._block).tolist()
            self._i = 0
        x = self._buf[self._i]
        self._i += 1
        return x


@dataclass(frozen=True)
class PAParams:
    n: int
    m: int = 2
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.n < self.m + 1:
            raise ValueError(f"n must be >= m + 1 = {self.m + 1}, got {self.n}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class PAStats:
    internal_links: int = 0
    skipped_internal_links: int = 0


def generate_pa(params: PAParams, stats: PAStats | None = None) -> UndirectedGraph:
    """Grow a preferential-attachment graph with optional internal links.

    Starts from a clique on ``m + 1`` nodes. Each step draws u ~ U[0, 1): if
    ``u < beta`` one link is added between two existing nodes, both picked
    proportionally to degree; otherwise a new node joins with ``m`` links to
    distinct existing nodes picked proportionally to degree. Degree-weighted
    picks sample uniformly from the list of edge endpoints. An internal link
    that hits a self-loop or an existing edge is redrawn, up to
    ``MAX_LINK_ATTEMPTS`` times, then dropped and counted in ``stats``.
    """
    if stats is None:
        stats = PAStats()
    n, m, beta = params.n, params.m, params.beta
    draw = _Uniforms(make_rng(params.seed))

    us: list[int] = []
    vs: list[int] = []
    pool: list[int] = []
    seen: set[int] = set()
    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            us.append(a)
            vs.append(b)
            pool += (a, b)
            seen.add(a * n + b)

    nodes = m + 1
    while nodes < n:
        if draw() < beta:
            for _ in range(MAX_LINK_ATTEMPTS):
                a = pool[int(draw() * len(pool))]
                b = pool[int(draw() * len(pool))]
                if a == b:
                    continue
                key = a * n + b if a < b else b * n + a
                if key in seen:
                    continue
                seen.add(key)
                us.append(a)
                vs.append(b)
                pool += (a, b)
                stats.internal_links += 1
                break
            else:
                stats.skipped_internal_links += 1
            continue
        new = nodes
        targets: list[int] = []
        size = len(pool)
        while len(targets) < m:
            t = pool[int(draw() * size)]
            if t not in targets:
                targets.append(t)
        for t in targets:
            us.append(t)
            vs.append(new)
            seen.add(t * n + new)
            pool += (t, new)
        nodes += 1
    return UndirectedGraph(n, us, vs)


def generate_uniform(n: int, edge_count: int, seed: int = 0) -> UndirectedGraph:
    """Uniformly random simple graph with exactly ``edge_count`` edges."""
    total = n * (n - 1) // 2
    if n < 0 or edge_count < 0 or edge_count > total:
        raise ValueError(f"cannot place {edge_count} edges on {n} nodes (max {total})")
    rng = make_rng(seed)
    idx = np.sort(rng.choice(total, size=edge_count, replace=False)) if edge_count else \
        np.zeros(0, dtype=np.int64)
    u, v = _unrank_pairs(np.asarray(idx, dtype=np.int64), n)
    return UndirectedGraph(n, u, v)


def _unrank_pairs(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map ranks 0..n(n-1)/2-1 onto pairs (0,1), (0,2), ..., (n-2,n-1)."""
    if len(idx) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy()

    def start(i):
        return i * (2 * n - i - 1) // 2

    b = 2.0 * n - 1.0
    i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * idx, 0.0))) / 2.0).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    # float estimate can be off by one near row boundaries
    for _ in range(3):
        i = np.where(start(i) > idx, i - 1, i)
        i = np.where((i + 1 <= n - 2) & (start(i + 1) <= idx), i + 1, i)
    j = idx - start(i) + i + 1
    return i, j


# -- synthetic call logs -----------------------------------------------------

REGION_PREFIXES = ("PnLa", "QxRt", "ZbWm", "KcHd")


@dataclass(frozen=True)
class LogSynthParams:
    """Knobs for :func:`synthesize_log`.

    ``weekday_weights`` gives the relative call volume per day of week
    (Monday first). Node popularity follows a Zipf law with exponent
    ``popularity_exponent`` so the link graph has a deep core.
    """

    node_count: int
    total_calls: int
    work_call_fraction: float = 0.6
    reciprocation_probability: float = 0.5
    weekday_weights: tuple = (1.25, 1.1, 1.05, 1.05, 0.95, 0.75, 0.65)
    seed: int = 0
    calls_per_link: float = 4.0
    popularity_exponent: float = 0.75
    start_date: dt.date = dt.date(2005, 8, 1)
    days: int = 28
    utc_offset_minutes: int = 60
    prefixes: tuple = REGION_PREFIXES

    def __post_init__(self):
        for name in ("work_call_fraction", "reciprocation_probability"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.total_calls < 0:
            raise ValueError("total_calls must be >= 0")
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if len(self.weekday_weights) != 7 or min(self.weekday_weights) < 0 \
                or sum(self.weekday_weights[:5]) <= 0:
            raise ValueError("weekday_weights needs 7 non-negative weights with some weekday mass")
        if self.calls_per_link < 1 or self.days < 1 or not self.prefixes:
            raise ValueError("calls_per_link >= 1, days >= 1 and a prefix are required")


@dataclass(eq=False)
class SyntheticLog:
    """A generated call log in columnar form plus the table ingest must recover.

    ``caller``/``callee`` index into ``ids``; records are in timestamp order.
    """

    ids: list[str]
    caller: np.ndarray
    callee: np.ndarray
    timestamp: np.ndarray
    duration: np.ndarray
    is_work: np.ndarray
    truth: LinkTable
    truth_interner: NodeInterner
    params: LogSynthParams = field(repr=False, default=None)

    def __len__(self):
        return len(self.caller)

    def records(self) -> Iterator[CallRecord]:
        ids = self.ids
        for c, d, t, u in zip(self.caller.tolist(), self.callee.tolist(),
                              self.timestamp.tolist(), self.duration.tolist()):
            yield CallRecord(ids[c], ids[d], t, u)

    def lines(self, chunk: int = 1 << 18) -> Iterator[str]:
        ids = self.ids
        for lo in range(0, len(self), chunk):
            hi = lo + chunk
            yield "".join(
                f"{ids[c]},{ids[d]},{t},{u}\n"
                for c, d, t, u in zip(self.caller[lo:hi].tolist(), self.callee[lo:hi].tolist(),
                                      self.timestamp[lo:hi].tolist(), self.duration[lo:hi].tolist())
            )

    def write(self, path: Path | str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for block in self.lines():
                f.write(block)


def _node_ids(count: int, prefixes, rng) -> list[str]:
    region = rng.integers(0, len(prefixes), size=count).tolist()
    width = max(6, len(f"{count:x}"))
    return [f"{prefixes[r]}{i:0{width}x}" for i, r in enumerate(region)]


def _distinct_pairs(want: int, weights: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``want`` distinct unordered node pairs, endpoints picked by weight."""
    n = len(weights)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    want = min(want, n * (n - 1) // 2)
    keys = np.zeros(0, dtype=np.int64)
    first = np.zeros(0, dtype=np.int64)
    drawn = 0
    while len(keys) < want:
        batch = max(int((want - len(keys)) * 1.3), 1024)
        a = np.minimum(np.searchsorted(cdf, rng.random(batch), side="right"), n - 1)
        b = np.minimum(np.searchsorted(cdf, rng.random(batch), side="right"), n - 1)
        ok = a != b
        k = np.minimum(a, b)[ok] * n + np.maximum(a, b)[ok]
        order = np.flatnonzero(ok) + drawn
        drawn += batch
        keys = np.concatenate([keys, k])
        first = np.concatenate([first, order])
        keys, pos = np.unique(keys, return_index=True)
        first = first[pos]
    # earliest draws first, so the result does not depend on key layout
    sel = keys[np.argsort(first, kind="stable")[:want]]
    return sel // n, sel % n


def synthesize_log(params: LogSynthParams) -> SyntheticLog:
    """Generate a call log together with its exact ground-truth LinkTable.

    Undirected pairs are drawn first; each gets a random orientation and is
    reciprocated with ``reciprocation_probability``. Every directed link gets
    at least one call, the rest are spread with exponential link weights.
    A call is a work call with probability ``work_call_fraction``; its day
    follows ``weekday_weights`` (weekdays only for work calls) and its time is
    uniform inside the chosen period of that day.
    """
    p = params
    rng = make_rng(p.seed)
    ids = _node_ids(p.node_count, p.prefixes, rng)
    empty = np.zeros(0, dtype=np.int64)
    if p.total_calls == 0:
        table = LinkTable(0, PairCounts.empty(), PairCounts.empty(), PairCounts.empty())
        return SyntheticLog(ids, empty, empty.copy(), empty.copy(), empty.copy(),
                            np.zeros(0, bool), table, NodeInterner(), p)

    popularity = 1.0 / np.arange(1, p.node_count + 1) ** p.popularity_exponent
    popularity = popularity[rng.permutation(p.node_count)]
    pairs_wanted = max(1, round(p.total_calls / (p.calls_per_link * (1 + p.reciprocation_probability))))
    a, b = _distinct_pairs(pairs_wanted, popularity, rng)
    flip = rng.random(len(a)) < 0.5
    a, b = np.where(flip, b, a), np.where(flip, a, b)
    recip = rng.random(len(a)) < p.reciprocation_probability
    src = np.concatenate([a, b[recip]])
    dst = np.concatenate([b, a[recip]])
    if len(src) > p.total_calls:
        src, dst = src[:p.total_calls], dst[:p.total_calls]
    links = len(src)

    weight = rng.exponential(size=links)
    extra = rng.multinomial(p.total_calls - links, weight / weight.sum())
    per_link = 1 + extra
    link_of_call = np.repeat(np.arange(links), per_link)
    calls = len(link_of_call)
    link_of_call = link_of_call[rng.permutation(calls)]

    work = rng.random(calls) < p.work_call_fraction
    day_of_week = (np.arange(p.days) + p.start_date.weekday()) % 7
    w = np.asarray(p.weekday_weights, dtype=float)[day_of_week]
    weekday_mask = np.isin(day_of_week, list(WEEKDAYS))
    day = np.empty(calls, dtype=np.int64)
    day[work] = rng.choice(p.days, size=int(work.sum()), p=_norm(w * weekday_mask))
    day[~work] = rng.choice(p.days, size=int((~work).sum()), p=_norm(w))
    # seconds into the local day: work calls inside [08:00, 18:00)
    secs = np.empty(calls, dtype=np.int64)
    secs[work] = 8 * 3600 + rng.integers(0, 10 * 3600, size=int(work.sum()))
    lz = ~work
    on_weekday = weekday_mask[day[lz]]
    # leisure on a weekday: 14 h outside the work window; weekend: whole day
    raw = rng.random(int(lz.sum()))
    weekday_secs = (raw * 14 * 3600).astype(np.int64)
    weekday_secs = np.where(weekday_secs >= 8 * 3600, weekday_secs + 10 * 3600, weekday_secs)
    weekend_secs = (raw * SECONDS_PER_DAY).astype(np.int64)
    secs[lz] = np.where(on_weekday, weekday_secs, weekend_secs)

    epoch_day = (p.start_date - dt.date(1970, 1, 1)).days
    local = (epoch_day + day) * SECONDS_PER_DAY + secs
    timestamp = local - p.utc_offset_minutes * 60
    duration = rng.geometric(1.0 / 120.0, size=calls).astype(np.int64) - 1

    order = np.argsort(timestamp, kind="stable")
    timestamp, duration, work = timestamp[order], duration[order], work[order]
    link_of_call = link_of_call[order]
    caller, callee = src[link_of_call], dst[link_of_call]

    truth, interner = _ground_truth(ids, src, dst, link_of_call, work, duration, caller, callee)
    return SyntheticLog(ids, caller, callee, timestamp, duration, work, truth, interner, p)


def _norm(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def _ground_truth(ids, src, dst, link_of_call, work, duration, caller, callee):
    """Per-link tallies from the generator's own bookkeeping, in ingest's index space."""
    links = len(src)
    seq = np.empty(2 * len(caller), dtype=np.int64)
    seq[0::2] = caller
    seq[1::2] = callee
    nodes, first = np.unique(seq, return_index=True)
    seen_order = nodes[np.argsort(first)]
    interner = NodeInterner(ids[i] for i in seen_order.tolist())
    remap = np.full(len(ids), -1, dtype=np.int64)
    remap[seen_order] = np.arange(len(seen_order))

    def part(mask):
        calls = np.bincount(link_of_call[mask], minlength=links)
        dur = np.zeros(links, dtype=np.int64)
        np.add.at(dur, link_of_call[mask], duration[mask])
        has = calls > 0
        s, d = remap[src[has]], remap[dst[has]]
        o = np.lexsort((d, s))
        return PairCounts(s[o], d[o], calls[has][o].astype(np.int64), dur[has][o])

    everything = np.ones(len(link_of_call), dtype=bool)
    table = LinkTable(len(seen_order), part(everything), part(work), part(~work))
    return table, interner
