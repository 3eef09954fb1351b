"""Shell-level structure metrics over a graph and its core decomposition."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import UndirectedGraph
from .kcore import CoreDecomposition


@dataclass(frozen=True)
class ShellReport:
    """Per-shell sizes and link tallies.

    ``shell_sizes`` covers every non-empty shell including shell 0 (isolated
    nodes), so its values sum to ``node_count``; writers drop shell 0 unless
    asked. A link is tallied once for each distinct shell it touches.
    """

    node_count: int
    k_max: int
    shell_sizes: dict[int, int]
    links_per_shell: dict[int, int]
    recip_links: dict[int, int]

    @property
    def recip_fraction(self) -> dict[int, float]:
        return {k: self.recip_links[k] / n for k, n in self.links_per_shell.items() if n}


@dataclass(frozen=True)
class PairEntry:
    total: int
    recip: int

    @property
    def fraction(self) -> float:
        return self.recip / self.total


@dataclass(frozen=True)
class ShellPairMatrix:
    source: int
    entries: dict[int, PairEntry]

    def fractions(self) -> dict[int, float]:
        return {k: e.fraction for k, e in self.entries.items()}


@dataclass(frozen=True)
class NucleusCandidate:
    k_lo: int
    k_hi: int
    node_count: int
    internal_link_count: int
    links_below_range: int
    is_deepest: bool

    @property
    def shell_range(self) -> tuple[int, int]:
        return self.k_lo, self.k_hi


@dataclass(frozen=True)
class DegreeCorrelation:
    knn: dict[int, float]
    count: dict[int, int]


def _edge_cores(g, d):
    if d.node_count != g.node_count:
        raise ValueError("decomposition does not belong to this graph")
    return d.core_number[g.edge_u], d.core_number[g.edge_v]


def _tally(keys, weights=None, size=None):
    return np.bincount(keys, weights=weights, minlength=size).astype(np.int64)


def shell_report(g: UndirectedGraph, d: CoreDecomposition) -> ShellReport:
    cu, cv = _edge_cores(g, d)
    size = d.k_max + 1
    flags = g.edge_reciprocated.astype(np.int64)
    cross = cu != cv
    # once for the u-side shell, once more for the v-side shell when it differs
    links = _tally(cu, size=size) + _tally(cv[cross], size=size)
    recip = _tally(cu, flags, size) + _tally(cv[cross], flags[cross], size)
    sizes = d.shell_sizes()
    return ShellReport(
        node_count=d.node_count,
        k_max=d.k_max,
        shell_sizes={k: int(s) for k, s in enumerate(sizes.tolist()) if s},
        links_per_shell={k: int(n) for k, n in enumerate(links.tolist()) if n},
        recip_links={k: int(r) for k, r in enumerate(recip.tolist()) if links[k]},
    )


def shell_pair_matrix(g: UndirectedGraph, d: CoreDecomposition, s: int) -> ShellPairMatrix:
    """Links between shell ``s`` and every other shell, with reciprocated counts."""
    if s < 0 or s > d.k_max or len(d.shell(s)) == 0:
        raise KeyError(f"shell {s} is empty")
    cu, cv = _edge_cores(g, d)
    at_u = cu == s
    other = np.where(at_u, cv, cu)[at_u | (cv == s)]
    flags = g.edge_reciprocated[at_u | (cv == s)].astype(np.int64)
    size = d.k_max + 1
    total = _tally(other, size=size)
    recip = _tally(other, flags, size)
    return ShellPairMatrix(s, {k: PairEntry(int(total[k]), int(recip[k]))
                               for k in np.flatnonzero(total).tolist()})


def shell_pair_matrices(g: UndirectedGraph, d: CoreDecomposition,
                        shells: Iterable[int] | None = None) -> dict[int, ShellPairMatrix]:
    """Several rows of the shell-pair table from one pass over the edges."""
    sizes = d.shell_sizes()
    if shells is None:
        shells = [k for k, n in enumerate(sizes.tolist()) if n]
    cu, cv = _edge_cores(g, d)
    size = d.k_max + 1
    lo, hi = np.minimum(cu, cv), np.maximum(cu, cv)
    key = lo * size + hi
    total = _tally(key, size=size * size).reshape(size, size)
    recip = _tally(key, g.edge_reciprocated.astype(np.int64), size * size).reshape(size, size)
    total = total + np.triu(total, 1).T
    recip = recip + np.triu(recip, 1).T
    out = {}
    for s in shells:
        if s < 0 or s > d.k_max or sizes[s] == 0:
            raise KeyError(f"shell {s} is empty")
        out[s] = ShellPairMatrix(s, {k: PairEntry(int(total[s, k]), int(recip[s, k]))
                                     for k in np.flatnonzero(total[s]).tolist()})
    return out


def detect_nuclei(g: UndirectedGraph, d: CoreDecomposition,
                  gap_threshold: int = 1) -> list[NucleusCandidate]:
    """Split the non-empty shells k >= 1 into runs and report deep clusters.

    Runs are separated by at least ``gap_threshold`` consecutive empty shell
    indices. With a single run the only candidate is the deepest shell. With
    several, the top shell of the lowest run (the end of the main
    distribution) is a candidate and so is every higher run in full. The last
    candidate always ends at ``k_max``.
    """
    if gap_threshold < 1:
        raise ValueError("gap_threshold must be >= 1")
    if d.k_max < 1:
        raise ValueError("no shell above 0; nothing to detect")
    sizes = d.shell_sizes()
    present = [k for k in range(1, d.k_max + 1) if sizes[k]]
    runs = [[present[0], present[0]]]
    for k in present[1:]:
        if k - runs[-1][1] - 1 >= gap_threshold:
            runs.append([k, k])
        else:
            runs[-1][1] = k
    ranges = [(runs[0][1], runs[0][1])] + [tuple(r) for r in runs[1:]]

    core = d.core_number
    cu, cv = _edge_cores(g, d)
    out = []
    for i, (lo, hi) in enumerate(ranges):
        in_u = (cu >= lo) & (cu <= hi)
        in_v = (cv >= lo) & (cv <= hi)
        below = (in_u & (cv < lo)) | (in_v & (cu < lo))
        out.append(NucleusCandidate(
            k_lo=lo, k_hi=hi,
            node_count=int(np.count_nonzero((core >= lo) & (core <= hi))),
            internal_link_count=int(np.count_nonzero(in_u & in_v)),
            links_below_range=int(np.count_nonzero(below)),
            is_deepest=i == len(ranges) - 1,
        ))
    return out


def population_spikes(report: ShellReport, window: int = 5, factor: float = 3.0,
                      field: str = "size") -> list[int]:
    """Shells standing out from their neighbours on both sides.

    Shell k is a spike when its value (``"size"`` or ``"links"``) exceeds
    ``factor`` times the median of the ``window`` nearest non-empty shells
    below it, and likewise above it. Shell 0 and ``k_max`` are never spikes.
    """
    if window < 1 or factor <= 1:
        raise ValueError("need window >= 1 and factor > 1")
    source = {"size": report.shell_sizes, "links": report.links_per_shell}[field]
    ks = sorted(k for k in source if k >= 1)
    vals = [source[k] for k in ks]
    spikes = []
    for i, k in enumerate(ks):
        if k == report.k_max:
            continue
        left = vals[max(0, i - window):i]
        right = vals[i + 1:i + 1 + window]
        if not left or not right:
            continue
        if vals[i] > factor * np.median(left) and vals[i] > factor * np.median(right):
            spikes.append(k)
    return spikes


def avg_neighbor_degree(g: UndirectedGraph) -> DegreeCorrelation:
    """Mean over nodes of degree d of their mean neighbour degree; degree 0 skipped."""
    deg = g.degrees()
    nbr_sum = np.bincount(g.edge_u, weights=deg[g.edge_v], minlength=g.node_count) + \
        np.bincount(g.edge_v, weights=deg[g.edge_u], minlength=g.node_count)
    has = deg > 0
    per_node = nbr_sum[has] / deg[has]
    dd = deg[has]
    uniq, inv, counts = np.unique(dd, return_inverse=True, return_counts=True)
    sums = np.bincount(inv, weights=per_node)
    return DegreeCorrelation(
        knn={int(k): float(s / c) for k, s, c in zip(uniq, sums, counts)},
        count={int(k): int(c) for k, c in zip(uniq, counts)},
    )


def degree_core_profile(g: UndirectedGraph, d: CoreDecomposition) -> dict[int, tuple[int, int]]:
    """Per shell, the largest original degree and the lowest node index attaining it."""
    deg = g.degrees()
    out = {}
    for k in range(d.k_max + 1):
        nodes = d.shell(k)  # ascending node index within a shell
        if len(nodes):
            i = int(np.argmax(deg[nodes]))
            out[k] = (int(deg[nodes[i]]), int(nodes[i]))
    return out


# -- serialisation ----------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _shells(mapping, include_zero):
    return sorted(k for k in mapping if include_zero or k > 0)


def write_shell_sizes(report: ShellReport, path, include_zero=False):
    _write_rows(path, ["k", "size"],
                ((k, report.shell_sizes[k]) for k in _shells(report.shell_sizes, include_zero)))


def write_shell_links(report: ShellReport, path, include_zero=False):
    frac = report.recip_fraction
    _write_rows(path, ["k", "links", "recip_links", "recip_fraction"],
                ((k, report.links_per_shell[k], report.recip_links[k], repr(frac[k]))
                 for k in _shells(report.links_per_shell, include_zero)))


def write_shell_pairs(matrices: dict[int, ShellPairMatrix], path):
    _write_rows(path, ["s", "k", "total", "recip", "fraction"],
                ((s, k, e.total, e.recip, repr(e.fraction))
                 for s, m in sorted(matrices.items()) for k, e in sorted(m.entries.items())))


def write_degree_correlation(corr: DegreeCorrelation, path):
    _write_rows(path, ["d", "knn", "count"],
                ((k, repr(corr.knn[k]), corr.count[k]) for k in sorted(corr.knn)))


def build_report(g: UndirectedGraph, d: CoreDecomposition, *, gap_threshold: int = 1,
                 spike_window: int = 5, spike_factor: float = 3.0,
                 pair_shells: Sequence[int] | None = None, include_zero: bool = False,
                 meta: dict | None = None) -> dict:
    """One JSON-ready document with everything needed to redraw the shell plots."""
    rep = shell_report(g, d)
    keep = (lambda k: include_zero or k > 0)
    frac = rep.recip_fraction
    if pair_shells is None:
        pair_shells = [k for k in sorted(rep.shell_sizes) if keep(k)]
    matrices = shell_pair_matrices(g, d, pair_shells)
    corr = avg_neighbor_degree(g)
    nuclei = detect_nuclei(g, d, gap_threshold) if d.k_max >= 1 else []
    return {
        "meta": dict(meta or {}),
        "node_count": g.node_count,
        "edge_count": g.edge_count,
        "k_max": rep.k_max,
        "shells": [
            {"k": k, "size": rep.shell_sizes.get(k, 0), "links": rep.links_per_shell.get(k, 0),
             "recip_links": rep.recip_links.get(k, 0), "recip_fraction": frac.get(k)}
            for k in sorted(rep.shell_sizes) if keep(k)
        ],
        "shell_pairs": [
            {"s": s, "k": k, "total": e.total, "recip": e.recip, "fraction": e.fraction}
            for s, m in sorted(matrices.items()) for k, e in sorted(m.entries.items())
        ],
        "nuclei": [
            {"k_lo": c.k_lo, "k_hi": c.k_hi, "node_count": c.node_count,
             "internal_link_count": c.internal_link_count,
             "links_below_range": c.links_below_range, "is_deepest": c.is_deepest}
            for c in nuclei
        ],
        "spikes": {
            "size": population_spikes(rep, spike_window, spike_factor, "size") if rep.shell_sizes else [],
            "links": population_spikes(rep, spike_window, spike_factor, "links") if rep.shell_sizes else [],
            "window": spike_window,
            "factor": spike_factor,
        },
        "degree_core_profile": [
            {"k": k, "max_degree": dg, "node": i}
            for k, (dg, i) in sorted(degree_core_profile(g, d).items()) if keep(k)
        ],
        "degree_correlation": [
            {"d": k, "knn": corr.knn[k], "count": corr.count[k]} for k in sorted(corr.knn)
        ],
    }


def dump_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=1)
        f.write("\n")
