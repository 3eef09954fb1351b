"""K-core decomposition: linear-time bucket peeling plus a literal pruning oracle."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .graph import UndirectedGraph
from .ingest import FormatError


class CoreDecomposition:
    """Per-node core numbers with a flat shell index.

    ``order`` lists node indices sorted by (core number, node index);
    shell ``k`` occupies ``order[offsets[k]:offsets[k + 1]]``.
    """

    __slots__ = ("core_number", "order", "offsets")

    def __init__(self, core_number):
        core = np.asarray(core_number, dtype=np.int64)
        core.flags.writeable = False
        self.core_number = core
        self.order = np.argsort(core, kind="stable")
        top = int(core.max()) + 1 if len(core) else 0
        self.offsets = np.zeros(top + 1, dtype=np.int64)
        np.cumsum(np.bincount(core, minlength=top), out=self.offsets[1:])

    @property
    def node_count(self) -> int:
        return len(self.core_number)

    @property
    def k_max(self) -> int:
        """Deepest non-empty shell; 0 for a graph without nodes."""
        return max(len(self.offsets) - 2, 0)

    def shell(self, k: int) -> np.ndarray:
        if k < 0 or k + 1 >= len(self.offsets):
            return np.zeros(0, dtype=np.int64)
        return self.order[self.offsets[k]:self.offsets[k + 1]]

    def shell_sizes(self) -> np.ndarray:
        """Array indexed by k holding |shell k| for k = 0..k_max."""
        return np.diff(self.offsets)

    @property
    def shells(self) -> dict[int, np.ndarray]:
        sizes = self.shell_sizes()
        return {k: self.shell(k) for k in range(len(sizes)) if sizes[k]}

    def __eq__(self, other):
        if not isinstance(other, CoreDecomposition):
            return NotImplemented
        return np.array_equal(self.core_number, other.core_number)

    def __repr__(self):
        return f"CoreDecomposition(nodes={self.node_count}, k_max={self.k_max})"


def decompose(g: UndirectedGraph) -> CoreDecomposition:
    """Core numbers by the O(V + E) bin-sort peeling of Batagelj and Zaversnik."""
    n = g.node_count
    deg = g.degrees().tolist()
    indptr = g.indptr.tolist()
    adj = g.indices.tolist()
    max_deg = max(deg, default=0)

    bins = [0] * (max_deg + 1)
    for d in deg:
        bins[d] += 1
    start = 0
    for d in range(max_deg + 1):
        bins[d], start = start, start + bins[d]
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        p = bins[deg[v]]
        pos[v] = p
        vert[p] = v
        bins[deg[v]] += 1
    for d in range(max_deg, 0, -1):
        bins[d] = bins[d - 1]
    if bins:
        bins[0] = 0

    for i in range(n):
        v = vert[i]
        dv = deg[v]
        for j in range(indptr[v], indptr[v + 1]):
            u = adj[j]
            du = deg[u]
            if du > dv:
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bins[du] += 1
                deg[u] = du - 1
    return CoreDecomposition(deg)


def naive_decompose(g: UndirectedGraph) -> CoreDecomposition:
    """Recursive k-pruning, one round per k; quadratic, for verification only.

    Round k repeatedly deletes every remaining node with fewer than k
    remaining neighbours; nodes deleted in round k get core number k - 1.
    """
    n = g.node_count
    nbrs = [set(g.neighbors(i).tolist()) for i in range(n)]
    alive = set(range(n))
    core = [0] * n
    k = 1
    while alive:
        while True:
            doomed = [v for v in alive if len(nbrs[v]) < k]
            if not doomed:
                break
            for v in doomed:
                core[v] = k - 1
                alive.discard(v)
            for v in doomed:
                for u in nbrs[v]:
                    nbrs[u].discard(v)
                nbrs[v] = set()
        k += 1
    return CoreDecomposition(core)


def kcore_subgraph(g: UndirectedGraph, d: CoreDecomposition, k: int) -> UndirectedGraph:
    """Induced subgraph on nodes with core number >= k, relabelled densely.

    ``labels`` on the result holds each node's index in ``g``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    keep = d.core_number >= k
    old = np.flatnonzero(keep)
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[old] = np.arange(len(old))
    e = keep[g.edge_u] & keep[g.edge_v]
    return UndirectedGraph(len(old), remap[g.edge_u[e]], remap[g.edge_v[e]],
                           g.edge_reciprocated[e], labels=old)


def write_core_numbers(d: CoreDecomposition, path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for i, c in enumerate(d.core_number.tolist()):
            f.write(f"{i} {c}\n")


def read_core_numbers(path: Path | str) -> CoreDecomposition:
    core = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                i, c = map(int, line.split())
            except ValueError:
                raise FormatError(f"{path}:{lineno}: expected 'node_index core_number'") from None
            if i != len(core) or c < 0:
                raise FormatError(f"{path}:{lineno}: node indices must be 0..N-1 in order")
            core.append(c)
    return CoreDecomposition(core)
