"""Command-line front end: generate, ingest, build, decompose, metrics, report, pipeline.

Exit status: 0 success, 1 usage error, 2 input I/O or format error,
3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import generators, ingest, kcore, metrics
from .graph import LinkFilter, build_graph, read_edge_list, write_edge_list
from .ingest import FormatError, Period, PeriodConfig

log = logging.getLogger("cdrnet")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3

LINKS_FILE = "links.csv"
NODES_FILE = "nodes.csv"
DAILY_FILE = "daily_volume.csv"
FILTERS = ("all", "recip1", "recip4")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _period_config(args) -> PeriodConfig:
    return PeriodConfig(utc_offset_minutes=args.utc_offset, keep_self_calls=args.keep_self_calls)


def _link_filter(text) -> LinkFilter:
    try:
        return LinkFilter.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _outdir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def ingest_log(log_path, cfg: PeriodConfig, prefix: str | None = None):
    """Parse, aggregate and optionally prefix-filter one log file."""
    stats = ingest.ParseStats()
    interner = ingest.NodeInterner()
    with open(log_path, encoding="utf-8") as f:
        batch = ingest.collect_calls(ingest.parse_log(f, stats), interner, cfg)
    table = ingest.aggregate_batch(batch, cfg, len(interner))
    volume = ingest.daily_volume(batch, cfg)
    log.info("parsed %d calls, skipped %d lines, dropped %d self-calls, %d ids, %d links",
             stats.parsed, stats.skipped, batch.self_calls_dropped, len(interner), len(table.full))
    if prefix:
        table, interner = ingest.filter_prefix(table, interner, prefix)
        log.info("prefix %r keeps %d ids, %d links", prefix, len(interner), len(table.full))
    return table, interner, volume


def _write_metrics(g, d, out: Path, args):
    rep = metrics.shell_report(g, d)
    metrics.write_shell_sizes(rep, out / "shell_sizes.csv", args.include_zero)
    metrics.write_shell_links(rep, out / "shell_links.csv", args.include_zero)
    shells = [k for k in sorted(rep.shell_sizes) if args.include_zero or k > 0]
    metrics.write_shell_pairs(metrics.shell_pair_matrices(g, d, shells), out / "shell_pairs.csv")
    metrics.write_degree_correlation(metrics.avg_neighbor_degree(g), out / "degree_correlation.csv")


def _report(g, d, args, meta):
    return metrics.build_report(
        g, d, gap_threshold=args.gap_threshold, spike_window=args.spike_window,
        spike_factor=args.spike_factor, include_zero=args.include_zero, meta=meta)


# -- subcommands ---------------------------------------------------------------

def cmd_generate_pa(args):
    params = generators.PAParams(args.n, args.m, args.beta, args.seed)
    stats = generators.PAStats()
    g = generators.generate_pa(params, stats)
    write_edge_list(g, args.out)
    log.info("wrote %r (%d internal links, %d skipped)", g, stats.internal_links,
             stats.skipped_internal_links)


def cmd_generate_uniform(args):
    g = generators.generate_uniform(args.n, args.edges, args.seed)
    write_edge_list(g, args.out)
    log.info("wrote %r", g)


def cmd_generate_log(args):
    params = generators.LogSynthParams(
        node_count=args.nodes, total_calls=args.calls, work_call_fraction=args.work_fraction,
        reciprocation_probability=args.recip_prob, seed=args.seed,
        calls_per_link=args.calls_per_link)
    synth = generators.synthesize_log(params)
    out = _outdir(args.out)
    synth.write(out / "calls.log")
    ingest.write_link_table(synth.truth, synth.truth_interner,
                            out / "truth_links.csv", out / "truth_nodes.csv")
    log.info("wrote %d calls over %d links", len(synth), len(synth.truth.full))


def cmd_ingest(args):
    table, interner, volume = ingest_log(args.log, _period_config(args), args.prefix)
    out = _outdir(args.out)
    ingest.write_link_table(table, interner, out / LINKS_FILE, out / NODES_FILE)
    ingest.write_daily_volume(volume, out / DAILY_FILE)


def _read_links(path):
    p = Path(path)
    return ingest.read_link_table(p / LINKS_FILE, p / NODES_FILE)


def cmd_build(args):
    table, _ = _read_links(args.links)
    g = build_graph(table, args.period, args.filter)
    write_edge_list(g, args.out)
    log.info("%s/%s: %r", args.period.value, args.filter.label, g)


def cmd_decompose(args):
    g = read_edge_list(args.edges)
    d = kcore.decompose(g)
    kcore.write_core_numbers(d, args.out)
    log.info("k_max = %d", d.k_max)


def _load_pair(args):
    g = read_edge_list(args.edges)
    d = kcore.read_core_numbers(args.cores) if args.cores else kcore.decompose(g)
    if d.node_count != g.node_count:
        raise FormatError("core-number file and edge list disagree on node count")
    return g, d


def cmd_metrics(args):
    g, d = _load_pair(args)
    _write_metrics(g, d, _outdir(args.out), args)


def cmd_report(args):
    if args.links:
        table, _ = _read_links(args.links)
        g = build_graph(table, args.period, args.filter)
        d = kcore.decompose(g)
        meta = {"period": args.period.value, "filter": args.filter.label}
    elif args.edges:
        g, d = _load_pair(args)
        meta = {}
    else:
        raise UsageError("report needs --links DIR or --edges FILE")
    metrics.dump_report(_report(g, d, args, meta), args.out)


def cmd_pipeline(args):
    """Ingest once, then build, decompose and report every period/filter pair."""
    table, interner, volume = ingest_log(args.log, _period_config(args), args.prefix)
    out = _outdir(args.out)
    ingest.write_link_table(table, interner, out / LINKS_FILE, out / NODES_FILE)
    ingest.write_daily_volume(volume, out / DAILY_FILE)
    for period in Period:
        for label in args.filters:
            filt = LinkFilter.parse(label)
            g = build_graph(table, period, filt)
            d = kcore.decompose(g)
            sub = _outdir(out / f"{period.value}_{label}")
            write_edge_list(g, sub / "edges.txt")
            kcore.write_core_numbers(d, sub / "cores.txt")
            _write_metrics(g, d, sub, args)
            meta = {"period": period.value, "filter": label}
            metrics.dump_report(_report(g, d, args, meta), sub / "report.json")
            log.info("%s/%s: %r, k_max %d", period.value, label, g, d.k_max)


# -- argument parsing ------------------------------------------------------------

def _add_ingest_flags(p):
    p.add_argument("--prefix", default=None, help="keep only links whose two IDs share this prefix")
    p.add_argument("--utc-offset", type=int, default=60, help="local time offset in minutes")
    p.add_argument("--keep-self-calls", action="store_true")


def _add_metric_flags(p):
    p.add_argument("--gap-threshold", type=int, default=1)
    p.add_argument("--spike-window", type=int, default=5)
    p.add_argument("--spike-factor", type=float, default=3.0)
    p.add_argument("--include-zero", action="store_true", help="report shell 0 (isolated nodes)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdrnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate-pa", help="preferential-attachment graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_pa)

    p = sub.add_parser("generate-uniform", help="uniform random simple graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_uniform)

    p = sub.add_parser("generate-log", help="synthetic call log plus ground truth")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--calls", type=int, required=True)
    p.add_argument("--work-fraction", type=float, default=0.6)
    p.add_argument("--recip-prob", type=float, default=0.5)
    p.add_argument("--calls-per-link", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate_log)

    p = sub.add_parser("ingest", help="call log -> link table")
    p.add_argument("log")
    _add_ingest_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="link table -> undirected edge list")
    p.add_argument("links", help="directory written by ingest")
    p.add_argument("--period", type=Period, choices=list(Period), default=Period.FULL)
    p.add_argument("--filter", type=_link_filter, default=LinkFilter.all())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("decompose", help="edge list -> core numbers")
    p.add_argument("edges")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("metrics", help="edge list + core numbers -> CSV tables")
    p.add_argument("edges")
    p.add_argument("cores", nargs="?")
    _add_metric_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", help="one JSON report for a period/filter pair")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--links", help="directory written by ingest")
    src.add_argument("--edges", help="edge list (with optional --cores)")
    p.add_argument("--cores")
    p.add_argument("--period", type=Period, choices=list(Period), default=Period.FULL)
    p.add_argument("--filter", type=_link_filter, default=LinkFilter.all())
    _add_metric_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="ingest plus every period/filter variant in memory")
    p.add_argument("log")
    _add_ingest_flags(p)
    _add_metric_flags(p)
    p.add_argument("--filters", nargs="+", default=list(FILTERS))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)
    return parser


def run(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except UsageError as e:
        print(f"cdrnet: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as e:
        print(f"cdrnet: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError, UnicodeDecodeError) as e:
        print(f"cdrnet: input error: {e}", file=sys.stderr)
        return EXIT_IO
    except AssertionError as e:
        print(f"cdrnet: invariant violated: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as e:
        print(f"cdrnet: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
