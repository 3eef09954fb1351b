"""K-shell analysis of call-detail-record link graphs."""
from .generators import LogSynthParams, PAParams, generate_pa, generate_uniform, synthesize_log
from .graph import LinkFilter, UndirectedGraph, build_graph, degree
from .ingest import (CallRecord, LinkTable, NodeInterner, Period, PeriodConfig, aggregate,
                     classify_period, daily_volume, filter_prefix, parse_log)
from .kcore import CoreDecomposition, decompose, kcore_subgraph, naive_decompose
from .metrics import (avg_neighbor_degree, degree_core_profile, detect_nuclei,
                      population_spikes, shell_pair_matrix, shell_report)

__all__ = [
    "CallRecord", "CoreDecomposition", "LinkFilter", "LinkTable", "LogSynthParams",
    "NodeInterner", "PAParams", "Period", "PeriodConfig", "UndirectedGraph", "aggregate",
    "avg_neighbor_degree", "build_graph", "classify_period", "daily_volume", "decompose",
    "degree", "degree_core_profile", "detect_nuclei", "filter_prefix", "generate_pa",
    "generate_uniform", "kcore_subgraph", "naive_decompose", "parse_log", "population_spikes",
    "shell_pair_matrix", "shell_report", "synthesize_log",
]
__version__ = "0.1.0"
