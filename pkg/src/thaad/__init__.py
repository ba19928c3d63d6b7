"""Trend-based anomaly detection with approximate matching of symbolic strings.

Time series are abstracted into trend intervals, the interval endpoints of
each entity are merged into a numeric string, and the trailing pattern of
that string is looked up in its own history with an (alpha, beta) bounded
distance. Novel or strongly trending patterns become anomaly reports.
"""
from .abstraction import (AbstractionConfig, SymbolicTimeInterval, TimePoint, TimePointSeries,
                          TrendSymbol, TrendTracker, abstract_series, angle, classify_symbol,
                          relation, slope)
from .encoding import (Endpoint, EventString, NumericString, decode, encode, encode_endpoint,
                       encode_intervals, merge_endpoints, split_interval, split_text_pattern)
from .evaluation import EvalResult, GroundTruthEvent, score, sweep
from .matching import (INF, MatchQuery, MatchResult, Metric, SlidingIndex, TextIndex,
                       append_symbol, brute_force_match, brute_force_shifts, build_index,
                       exact_match_hash, occurs_at, query_match)
from .pipeline import (AnomalyReport, DetectionState, Origin, PatternCandidate, PipelineConfig,
                       detect, detect_many, filter_candidates, run_entity, run_online_cycle)
from .synthetic import AnomalySpec, TrafficProfile, generate_synthetic

__version__ = "0.1.0"
