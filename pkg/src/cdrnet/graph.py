"""Immutable undirected link graphs in compressed sparse row form."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import FormatError, LinkTable, Period


@dataclass(frozen=True)
class LinkFilter:
    """Link selection rule: every link, or only pairs with >= r calls each way."""

    min_reciprocal: int | None = None

    def __post_init__(self):
        if self.min_reciprocal is not None and self.min_reciprocal < 1:
            raise ValueError("reciprocity threshold must be >= 1")

    @classmethod
    def all(cls):
        return cls(None)

    @classmethod
    def reciprocated(cls, r: int = 1):
        return cls(r)

    @classmethod
    def parse(cls, text: str) -> "LinkFilter":
        """Accept ``all`` or ``recipN`` (N >= 1)."""
        if text == "all":
            return cls.all()
        m = re.fullmatch(r"recip(\d+)", text)
        if not m or int(m.group(1)) < 1:
            raise ValueError(f"unknown link filter {text!r}; use 'all' or 'recipN'")
        return cls.reciprocated(int(m.group(1)))

    @property
    def label(self) -> str:
        return "all" if self.min_reciprocal is None else f"recip{self.min_reciprocal}"


class UndirectedGraph:
    """Simple undirected graph with a per-edge reciprocity flag.

    Edges are kept twice: as a canonical ``u < v`` list sorted by ``(u, v)``
    and as CSR adjacency with sorted neighbour lists. ``labels`` maps node
    indices back to a parent graph's indices for induced subgraphs.
    """

    __slots__ = ("node_count", "edge_u", "edge_v", "edge_reciprocated",
                 "indptr", "indices", "adj_reciprocated", "labels")

    def __init__(self, node_count, edge_u, edge_v, edge_reciprocated=None, labels=None):
        u = np.asarray(edge_u, dtype=np.int64)
        v = np.asarray(edge_v, dtype=np.int64)
        if u.shape != v.shape:
            raise ValueError("edge endpoint arrays differ in length")
        flags = (np.zeros(len(u), dtype=bool) if edge_reciprocated is None
                 else np.asarray(edge_reciprocated, dtype=bool))
        if len(u):
            if min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= node_count:
                raise ValueError("edge endpoint out of range")
            if np.any(u == v):
                raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((hi, lo))
        lo, hi, flags = lo[order], hi[order], flags[order]
        if len(lo) > 1 and np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
            raise ValueError("duplicate edges are not allowed")
        self.node_count = int(node_count)
        self.edge_u, self.edge_v, self.edge_reciprocated = lo, hi, flags
        for a in (lo, hi, flags):
            a.flags.writeable = False

        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        f2 = np.concatenate([flags, flags])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.adj_reciprocated = f2[order]
        counts = np.bincount(src, minlength=self.node_count)
        self.indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)
        for a in (self.indices, self.adj_reciprocated, self.indptr):
            a.flags.writeable = False

    @classmethod
    def from_edges(cls, node_count, edges, reciprocated=None):
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(node_count, e[:, 0], e[:, 1], reciprocated)

    @property
    def edge_count(self) -> int:
        return len(self.edge_u)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, i: int) -> int:
        if not 0 <= i < self.node_count:
            raise IndexError(f"node {i} out of range for {self.node_count} nodes")
        return int(self.indptr[i + 1] - self.indptr[i])

    def neighbors(self, i: int) -> np.ndarray:
        if not 0 <= i < self.node_count:
            raise IndexError(f"node {i} out of range for {self.node_count} nodes")
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.edge_u.tolist(), self.edge_v.tolist()))

    def same_as(self, other: "UndirectedGraph") -> bool:
        return (self.node_count == other.node_count
                and np.array_equal(self.edge_u, other.edge_u)
                and np.array_equal(self.edge_v, other.edge_v)
                and np.array_equal(self.edge_reciprocated, other.edge_reciprocated))

    def __repr__(self):
        return f"UndirectedGraph(nodes={self.node_count}, edges={self.edge_count})"


def build_graph(table: LinkTable, period: Period | str = Period.FULL,
                link_filter: LinkFilter = LinkFilter()) -> UndirectedGraph:
    """Collapse one period's directed pairs into an undirected graph.

    With ``LinkFilter.all()`` any call in either direction makes an edge;
    ``LinkFilter.reciprocated(r)`` needs at least ``r`` calls each way. Every
    edge's reciprocity flag uses r = 1 regardless of the filter. All interned
    nodes are kept, including those left without edges.
    """
    pc = table.period(period)
    n = table.node_count
    keep = pc.src != pc.dst
    src, dst, calls = pc.src[keep], pc.dst[keep], pc.calls[keep]
    if len(src) == 0:
        return UndirectedGraph(n, [], [])
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    keys = lo * n + hi
    uniq, inverse = np.unique(keys, return_inverse=True)
    forward = np.zeros(len(uniq), dtype=np.int64)
    backward = np.zeros(len(uniq), dtype=np.int64)
    is_fwd = src < dst
    np.add.at(forward, inverse[is_fwd], calls[is_fwd])
    np.add.at(backward, inverse[~is_fwd], calls[~is_fwd])
    both = np.minimum(forward, backward)
    if link_filter.min_reciprocal is None:
        sel = np.ones(len(uniq), dtype=bool)
    else:
        sel = both >= link_filter.min_reciprocal
    return UndirectedGraph(n, uniq[sel] // n, uniq[sel] % n, both[sel] >= 1)


def degree(g: UndirectedGraph, i: int) -> int:
    return g.degree(i)


def write_edge_list(g: UndirectedGraph, path: Path | str) -> None:
    """Write ``i j reciprocated_flag`` lines (i < j, sorted).

    A leading ``# nodes N`` comment keeps isolated nodes in the round trip.
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# nodes {g.node_count}\n")
        for u, v, r in zip(g.edge_u.tolist(), g.edge_v.tolist(), g.edge_reciprocated.tolist()):
            f.write(f"{u} {v} {int(r)}\n")


def read_edge_list(path: Path | str) -> UndirectedGraph:
    node_count = None
    us, vs, fs = [], [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.fullmatch(r"#\s*nodes\s+(\d+)", line)
                if m:
                    node_count = int(m.group(1))
                continue
            parts = line.split()
            try:
                if len(parts) == 2:
                    u, v, r = int(parts[0]), int(parts[1]), 0
                elif len(parts) == 3:
                    u, v, r = int(parts[0]), int(parts[1]), int(parts[2])
                else:
                    raise ValueError
            except ValueError:
                raise FormatError(f"{path}:{lineno}: expected 'i j [flag]', got {line!r}") from None
            us.append(u)
            vs.append(v)
            fs.append(bool(r))
    if node_count is None:
        node_count = max(max(us, default=-1), max(vs, default=-1)) + 1
    try:
        return UndirectedGraph(node_count, us, vs, fs)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e
