"""Time-bounded relaxation of structured queries using precomputed statistics."""

from .catalog import Catalog, Item, StructuredQuery, load_catalog, parse_query, render_query
from .distance import DistanceModel, aggregate_distance, load_distances, mean_dist
from .executor import MatchSet, index_hits, match_items, top_k
from .rewrite import (
    RewriteBudget,
    RewriteOutcome,
    attribute_removal,
    brute_force_optimal,
    dp_rewrite,
    fd_preprocess,
    greedy_rewrite,
)
from .stats import RelaxedQuery, StatsSnapshot, ball, ball_count, build_stats, estimate_matches

__version__ = "0.1.0"
