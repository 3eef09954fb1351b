"""Exit criteria for the toolkit. Each test is one criterion; a summary line per
criterion is printed at the end of the run (see conftest)."""
import datetime as dt
import itertools
import math
import random
import resource
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from cdrnet import cli
from cdrnet.generators import (LogSynthParams, PAParams, generate_pa, generate_uniform,
                               synthesize_log)
from cdrnet.graph import LinkFilter, UndirectedGraph, build_graph
from cdrnet.ingest import (CallRecord, NodeInterner, Period, PeriodConfig, aggregate,
                           classify_period)
from cdrnet.kcore import decompose, naive_decompose
from cdrnet.metrics import (avg_neighbor_degree, detect_nuclei, shell_pair_matrices,
                            shell_pair_matrix, shell_report)

from .conftest import complete


def _graph(n, edges, flags=None):
    return UndirectedGraph.from_edges(n, edges, flags)


def test_criterion_1_kcore_oracle_equivalence():
    start = time.perf_counter()
    checked = 0
    for n in range(1, 7):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            g = _graph(n, [p for i, p in enumerate(pairs) if mask >> i & 1])
            assert decompose(g) == naive_decompose(g), (n, mask)
            checked += 1
    rnd = random.Random(2024)
    pairs8 = list(itertools.combinations(range(8), 2))
    for trial in range(10_000):
        density = rnd.random()
        g = _graph(8, [p for p in pairs8 if rnd.random() < density])
        assert decompose(g) == naive_decompose(g), ("random 8-node", trial)
        checked += 1
    for mean_degree in (1, 2, 4, 8, 16):
        for seed in range(20):
            g = generate_uniform(256, 256 * mean_degree // 2, seed)
            assert decompose(g) == naive_decompose(g), (mean_degree, seed)
            checked += 1
    elapsed = time.perf_counter() - start
    assert checked >= 10_000 + 100
    assert elapsed < 60, f"took {elapsed:.1f} s"


def shell_power_fit(sizes: np.ndarray, k_max: int):
    """Least-squares line through (log k, log size) over non-empty shells 1..ceil(k_max/2)."""
    top = math.ceil(k_max / 2)
    ks = np.arange(1, top + 1)
    s = sizes[1:top + 1] if len(sizes) > 1 else np.zeros(0)
    keep = s > 0
    if keep.sum() < 2:
        return None
    x, y = np.log(ks[keep]), np.log(s[keep].astype(float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1 - (resid @ resid) / ((y - y.mean()) @ (y - y.mean()))
    return slope, r2


@pytest.mark.slow
@pytest.mark.parametrize("beta,seed", [(b, s) for b in (0.0, 0.3) for s in (1, 2, 3)])
def test_criterion_2_power_law_shells(beta, seed):
    start = time.perf_counter()
    g = generate_pa(PAParams(200_000, 2, beta, seed))
    d = decompose(g)
    elapsed = time.perf_counter() - start
    sizes = d.shell_sizes()
    fit = shell_power_fit(sizes, d.k_max)
    shells = {k: int(v) for k, v in enumerate(sizes.tolist()) if v}
    assert fit is not None, (
        f"no log-log fit possible: k_max={d.k_max}, shells={shells}; "
        f"fewer than two non-empty shells in k=1..{math.ceil(d.k_max / 2)}")
    slope, r2 = fit
    assert slope < 0 and r2 >= 0.90, f"slope={slope:.3f} R2={r2:.4f} shells={shells}"
    assert elapsed < 120, f"took {elapsed:.1f} s"


def test_criterion_3_ingest_round_trip():
    for p in (0.0, 0.5, 1.0):
        s = synthesize_log(LogSynthParams(200_000, 1_000_000, reciprocation_probability=p,
                                          seed=31))
        start = time.perf_counter()
        it = NodeInterner()
        table = aggregate(s.records(), PeriodConfig(), it)
        elapsed = time.perf_counter() - start
        assert len(s) == 1_000_000
        assert it == s.truth_interner
        for period in Period:
            assert table.period(period).equals(s.truth.period(period)), (p, period)
        assert elapsed < 60, f"p={p}: took {elapsed:.1f} s"


def _local(*args):
    return int(dt.datetime(*args, tzinfo=dt.timezone(dt.timedelta(hours=1))).timestamp())


def test_criterion_4_partition_law():
    cfg = PeriodConfig()
    assert classify_period(_local(2005, 8, 3, 8, 0, 0), cfg) is Period.WORK
    assert classify_period(_local(2005, 8, 3, 18, 0, 0), cfg) is Period.LEISURE

    boundary = [CallRecord("a", "b", _local(2005, 8, 3, 8, 0, 0), 1),
                CallRecord("a", "b", _local(2005, 8, 3, 18, 0, 0), 1)]
    it = NodeInterner()
    t = aggregate(boundary, cfg, it)
    assert t.work.to_dict() == {(0, 1): (1, 1)}
    assert t.leisure.to_dict() == {(0, 1): (1, 1)}
    assert t.full.to_dict() == {(0, 1): (2, 2)}

    for seed in range(5):
        s = synthesize_log(LogSynthParams(5_000, 100_000, seed=seed))
        it = NodeInterner()
        table = aggregate(s.records(), cfg, it)
        full, work, leisure = (table.period(p).to_dict() for p in Period)
        for pair, (c, _) in full.items():
            assert c == work.get(pair, (0, 0))[0] + leisure.get(pair, (0, 0))[0]
        assert set(work) | set(leisure) == set(full)


def test_criterion_5_metric_cross_consistency():
    for seed in range(20):
        g0 = generate_pa(PAParams(10_000, 2, 0.3, seed))
        flags = np.random.default_rng(seed).random(g0.edge_count) < 0.5
        g = UndirectedGraph(g0.node_count, g0.edge_u, g0.edge_v, flags)
        d = decompose(g)
        rep = shell_report(g, d)
        assert sum(rep.shell_sizes.values()) == 10_000
        matrices = shell_pair_matrices(g, d)
        for s, m in matrices.items():
            assert sum(e.total for e in m.entries.values()) == rep.links_per_shell.get(s, 0)
            assert sum(e.recip for e in m.entries.values()) == rep.recip_links.get(s, 0)
            for k, e in m.entries.items():
                assert matrices[k].entries[s].total == e.total
            assert shell_pair_matrix(g, d, s) == m


def test_criterion_6_reciprocity_forcing():
    s = synthesize_log(LogSynthParams(20_000, 200_000, reciprocation_probability=0.5, seed=6))
    for period in Period:
        for r in (1, 4):
            g = build_graph(s.truth, period, LinkFilter.reciprocated(r))
            rep = shell_report(g, decompose(g))
            assert rep.links_per_shell, (period, r)
            assert set(rep.recip_fraction.values()) == {1.0}, (period, r)
    one_way = synthesize_log(LogSynthParams(20_000, 200_000, reciprocation_probability=0.0,
                                            seed=6))
    for period in Period:
        g = build_graph(one_way.truth, period, LinkFilter.all())
        rep = shell_report(g, decompose(g))
        assert rep.links_per_shell
        assert set(rep.recip_fraction.values()) == {0.0}, period


def test_criterion_7_hand_fixtures():
    triangle = _graph(3, [(0, 1), (1, 2), (0, 2)], [True] * 3)
    star = _graph(6, [(0, i) for i in range(1, 6)])
    k4p = _graph(5, complete(range(4)) + [(0, 4)])
    k10k4 = _graph(14, complete(range(10)) + complete(range(10, 14)))
    tri_pendant = _graph(4, [(0, 1), (1, 2), (0, 2), (0, 3)])

    d = decompose(triangle)
    assert d.core_number.tolist() == [2, 2, 2] and d.k_max == 2
    rep = shell_report(triangle, d)
    assert (rep.shell_sizes, rep.links_per_shell, rep.recip_fraction) == ({2: 3}, {2: 3}, {2: 1.0})
    (c,) = detect_nuclei(triangle, d)
    assert (c.k_lo, c.k_hi, c.is_deepest) == (2, 2, True)

    d = decompose(star)
    assert d.core_number.tolist() == [1] * 6
    assert shell_report(star, d).links_per_shell == {1: 5}
    four_star = _graph(5, [(0, i) for i in range(1, 5)])
    assert avg_neighbor_degree(four_star).knn == {4: 1.0, 1: 4.0}
    assert avg_neighbor_degree(_graph(4, complete(range(4)))).knn == {3: 3.0}

    d = decompose(k4p)
    assert d.core_number.tolist() == [3, 3, 3, 3, 1]
    rep = shell_report(k4p, d)
    assert (rep.shell_sizes, rep.links_per_shell) == ({1: 1, 3: 4}, {1: 1, 3: 7})

    d = decompose(tri_pendant)
    rep = shell_report(tri_pendant, d)
    assert (rep.shell_sizes, rep.links_per_shell) == ({1: 1, 2: 3}, {1: 1, 2: 4})

    d = decompose(k10k4)
    assert d.core_number.tolist() == [9] * 10 + [3] * 4
    nuclei = detect_nuclei(k10k4, d)
    assert len(nuclei) == 2
    assert [(n.k_lo, n.k_hi) for n in nuclei] == [(3, 3), (9, 9)]
    assert all(n.links_below_range == 0 for n in nuclei)
    assert nuclei[-1].is_deepest and nuclei[-1].node_count == 10


def _tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file()}


def test_criterion_8_determinism(tmp_path):
    assert generate_pa(PAParams(20_000, 2, 0.3, 8)).same_as(generate_pa(PAParams(20_000, 2, 0.3, 8)))
    assert generate_uniform(5_000, 20_000, 8).same_as(generate_uniform(5_000, 20_000, 8))
    a = synthesize_log(LogSynthParams(5_000, 50_000, seed=8))
    b = synthesize_log(LogSynthParams(5_000, 50_000, seed=8))
    assert "".join(a.lines()) == "".join(b.lines()) and a.truth.equals(b.truth)

    runs = []
    for i in (1, 2):
        out = tmp_path / f"run{i}"
        assert cli.run(["generate-log", "--nodes", "5000", "--calls", "60000", "--seed", "8",
                        "--out", str(out / "gen")]) == 0
        assert cli.run(["generate-pa", "--n", "5000", "--beta", "0.3", "--seed", "8",
                        "--out", str(out / "pa.txt")]) == 0
        assert cli.run(["pipeline", str(out / "gen" / "calls.log"), "--out",
                        str(out / "pipe")]) == 0
        runs.append(_tree_bytes(out))
    assert runs[0].keys() == runs[1].keys() and len(runs[0]) > 50
    for name in runs[0]:
        assert runs[0][name] == runs[1][name], name


@pytest.mark.slow
def test_criterion_9_scale_smoke(tmp_path):
    cmd = [sys.executable, "-m", "cdrnet"]
    start = time.perf_counter()
    subprocess.run(cmd + ["generate-log", "--nodes", "1000000", "--calls", "10000000",
                          "--seed", "9", "--out", str(tmp_path / "gen")], check=True)
    subprocess.run(cmd + ["pipeline", str(tmp_path / "gen" / "calls.log"),
                          "--out", str(tmp_path / "pipe")], check=True)
    elapsed = time.perf_counter() - start
    peak_mb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss / 1024
    # the six period x {all, recip1} variants; recip4 comes along as extras
    six = [f"{p}_{f}" for p in ("full", "work", "leisure") for f in ("all", "recip1")]
    assert all((tmp_path / "pipe" / v / "report.json").exists() for v in six)
    assert elapsed < 600, f"took {elapsed:.0f} s"
    assert peak_mb < 8 * 1024, f"peak RSS {peak_mb:.0f} MB"
