"""Workload runner, parameter sweeps and synthetic corpora.

Each query goes through two phases: a rewrite phase that sees only the
statistics snapshot, then an execution phase against the catalog that
scores the result set with Mean-Dist and counts index hits.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import random
import statistics
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

from .catalog import CATEGORICAL, NUMERIC, Catalog, Item, StructuredQuery, dump_catalog, render_query
from .distance import DistanceModel, dump_distances, mean_dist
from .errors import CorpusSpecError, RelaxqError
from .executor import index_hits, match_items
from .rewrite import (
    FD_MODES,
    FD_OFF,
    RewriteBudget,
    RewriteOutcome,
    attribute_removal,
    dp_rewrite,
    fd_preprocess,
    greedy_rewrite,
)
from .stats import StatsSnapshot

log = logging.getLogger(__name__)

ALGORITHMS = ("greedy", "dp", "attribute-removal")
REPORT_HEADER = ("query_id", "algo", "epsilon", "T", "fd", "tr", "estimate", "target_met", "evals",
                 "index_hits", "mean_dist")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "greedy"
    k: int = 10
    T: int = 10
    epsilon: float = 0.1
    fd: str = FD_OFF
    fd_threshold: float = 0.9

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; pick one of {ALGORITHMS}")
        if self.fd not in FD_MODES:
            raise ValueError(f"unknown fd mode {self.fd!r}; pick one of {FD_MODES}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0.0 < self.fd_threshold <= 1.0:
            raise ValueError("fd_threshold must lie in (0, 1]")
        RewriteBudget(self.T, self.epsilon)


@dataclass(frozen=True)
class ReportRow:
    query_id: str
    algo: str
    epsilon: float
    T: int
    fd: str
    tr: float
    estimate: float
    target_met: bool
    evals: int
    index_hits: int
    mean_dist: float
    error: str = field(default="", compare=False)


def rewrite_query(query: StructuredQuery, snapshot: StatsSnapshot, config: RunConfig) -> RewriteOutcome:
    """Rewrite phase: optional FD preprocessing, then the configured strategy."""
    reduced = query
    if config.fd != FD_OFF:
        reduced = fd_preprocess(query, snapshot.condprobs, config.fd_threshold, config.fd)
    fd_dropped = tuple(a for a in query.attributes if a not in reduced.attributes)
    budget = RewriteBudget(config.T, config.epsilon)
    if config.algorithm == "greedy":
        outcome = greedy_rewrite(reduced, snapshot, config.k, budget)
    elif config.algorithm == "dp":
        outcome = dp_rewrite(reduced, snapshot, config.k, budget)
    else:
        outcome = attribute_removal(reduced, snapshot, config.k)
    return replace(outcome, dropped_attributes=fd_dropped + outcome.dropped_attributes)


def _run_one(query_id: str, query: StructuredQuery, catalog: Catalog, snapshot: StatsSnapshot,
             model: DistanceModel, config: RunConfig) -> ReportRow:
    base = dict(query_id=query_id, algo=config.algorithm, epsilon=config.epsilon, T=config.T, fd=config.fd)
    try:
        outcome = rewrite_query(query, snapshot, config)
    except RelaxqError as exc:
        log.warning("query %s failed: %s", query_id, exc)
        # Nothing retrieved, so Mean-Dist is the full shortfall penalty.
        return ReportRow(**base, tr=0.0, estimate=0.0, target_met=False, evals=0, index_hits=0,
                         mean_dist=1.0, error=str(exc))
    matches = match_items(catalog, outcome.relaxed, model)
    return ReportRow(
        **base,
        tr=outcome.total_relaxation,
        estimate=outcome.estimate,
        target_met=outcome.target_met,
        evals=outcome.evaluations_used,
        index_hits=index_hits(matches),
        # Scored against the original query, FD-dropped attributes included.
        mean_dist=mean_dist(matches.items, query, model, config.k),
    )


def run_workload(queries: Sequence[StructuredQuery], catalog: Catalog, snapshot: StatsSnapshot,
                 model: DistanceModel, config: RunConfig, ids: Sequence[str] | None = None,
                 workers: int = 1) -> list[ReportRow]:
    """One report row per query, in input order."""
    if ids is None:
        ids = [str(i) for i in range(len(queries))]
    if len(ids) != len(queries):
        raise ValueError("ids and queries differ in length")
    jobs = list(zip(ids, queries))
    if workers <= 1:
        return [_run_one(qid, q, catalog, snapshot, model, config) for qid, q in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _run_one(job[0], job[1], catalog, snapshot, model, config), jobs))


@dataclass(frozen=True)
class SweepPoint:
    axis: str
    value: float
    algo: str
    queries: int
    mean_mean_dist: float
    median_index_hits: float
    target_met_fraction: float


def aggregate(rows: Sequence[ReportRow], axis: str = "", value: float = 0.0) -> SweepPoint:
    if not rows:
        raise ValueError("cannot aggregate an empty report")
    return SweepPoint(
        axis=axis,
        value=value,
        algo=rows[0].algo,
        queries=len(rows),
        mean_mean_dist=statistics.fmean(r.mean_dist for r in rows),
        median_index_hits=statistics.median(r.index_hits for r in rows),
        target_met_fraction=sum(r.target_met for r in rows) / len(rows),
    )


def sweep(queries: Sequence[StructuredQuery], catalog: Catalog, snapshot: StatsSnapshot, model: DistanceModel,
          base: RunConfig, axis: str, values: Sequence[float]) -> list[SweepPoint]:
    """Rerun the workload at each point of an epsilon or T axis and aggregate."""
    if axis not in ("epsilon", "steps"):
        raise ValueError(f"axis must be 'epsilon' or 'steps', got {axis!r}")
    if not values:
        raise ValueError("sweep axis is empty")
    points = []
    for value in values:
        config = replace(base, epsilon=float(value)) if axis == "epsilon" else replace(base, T=int(value))
        rows = run_workload(queries, catalog, snapshot, model, config)
        points.append(aggregate(rows, axis, value))
    return points


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(round(value, 10))
    return str(value)


def format_report(rows: Sequence[ReportRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for row in rows:
        writer.writerow([_fmt(getattr(row, name)) for name in REPORT_HEADER])
    return out.getvalue()


def format_sweep(points: Sequence[SweepPoint]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    names = [f.name for f in fields(SweepPoint)]
    writer.writerow(names)
    for point in points:
        writer.writerow([_fmt(getattr(point, name)) for name in names])
    return out.getvalue()


# -- synthetic corpora ----------------------------------------------------------

MAX_ATTRIBUTES = 8
MAX_VALUES = 64
MAX_ITEMS = 100_000
NEIGHBOURS = 3


def _per_attr(value, n: int, name: str) -> tuple:
    if isinstance(value, (tuple, list)):
        if len(value) != n:
            raise CorpusSpecError(f"{name} lists {len(value)} entries for {n} attributes")
        return tuple(value)
    return (value,) * n


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of a generated corpus.

    ``values`` and ``missing_distance`` take one number or one per attribute.
    The first two attributes are coupled by ``correlation``: with that
    probability an item's second value is a fixed function of its first.
    The last ``numeric`` attributes are numeric and use the formula distance.
    ``cohesion`` > 0 draws each item around a latent point so that values
    close to each other (by distance) tend to co-occur across attributes.
    Queries are drawn near real items and kept only when fewer than ``k``
    items match them exactly.
    """

    attributes: int = 3
    values: int | tuple[int, ...] = 10
    items: int = 1000
    correlation: float = 0.0
    missing_distance: float | tuple[float, ...] = 0.0
    missing_values: float = 0.0
    numeric: int = 0
    queries: int = 50
    query_attributes: int | None = None
    k: int = 10
    skew: float = 1.0
    cohesion: float = 0.0
    distance_scale: float = 2.0
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        n = self.attributes
        if not 1 <= n <= MAX_ATTRIBUTES:
            raise CorpusSpecError(f"attributes must be in 1..{MAX_ATTRIBUTES}")
        if any(not 2 <= v <= MAX_VALUES for v in self.domain_sizes):
            raise CorpusSpecError(f"domain sizes must be in 2..{MAX_VALUES}")
        if not 1 <= self.items <= MAX_ITEMS:
            raise CorpusSpecError(f"items must be in 1..{MAX_ITEMS}")
        if not 0.0 <= self.correlation <= 1.0 or (self.correlation > 0 and n < 2):
            raise CorpusSpecError("correlation must lie in [0, 1] and needs two attributes")
        if any(not 0.0 <= p <= 1.0 for p in self.missing_fractions):
            raise CorpusSpecError("missing_distance must lie in [0, 1]")
        if not 0.0 <= self.missing_values < 1.0:
            raise CorpusSpecError("missing_values must lie in [0, 1)")
        if not 0 <= self.numeric <= n:
            raise CorpusSpecError("numeric must be between 0 and attributes")
        if self.query_attributes is not None and not 1 <= self.query_attributes <= n:
            raise CorpusSpecError("query_attributes must be between 1 and attributes")
        if self.cohesion < 0:
            raise CorpusSpecError("cohesion must be >= 0")
        if self.queries < 0 or self.k < 1:
            raise CorpusSpecError("queries must be >= 0 and k >= 1")
        if self.names is not None and (len(self.names) != n or len(set(self.names)) != n):
            raise CorpusSpecError("names must give one distinct name per attribute")

    @property
    def domain_sizes(self) -> tuple[int, ...]:
        return _per_attr(self.values, self.attributes, "values")

    @property
    def missing_fractions(self) -> tuple[float, ...]:
        return _per_attr(self.missing_distance, self.attributes, "missing_distance")

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return self.names or tuple(f"a{i}" for i in range(self.attributes))


_SPEC_KEYS = {f.name for f in fields(CorpusSpec)}


def parse_corpus_spec(text: str) -> CorpusSpec:
    """``key=value`` pairs separated by commas; per-attribute lists use ``/``.

    Example: ``attributes=3,values=64/8/10,correlation=1,missing_distance=0.95/0/0``.
    """
    kwargs: dict = {}
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        key, sep, raw = chunk.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _SPEC_KEYS:
            raise CorpusSpecError(f"bad spec entry {chunk!r}")
        parts = raw.split("/")
        if key == "names":
            kwargs[key] = tuple(parts)
            continue
        cast = int if key in ("attributes", "values", "items", "numeric", "queries", "query_attributes", "k") else float
        try:
            vals = tuple(cast(p) for p in parts)
        except ValueError:
            raise CorpusSpecError(f"bad number in {chunk!r}") from None
        kwargs[key] = vals if len(vals) > 1 else vals[0]
    return CorpusSpec(**kwargs)


@dataclass(frozen=True)
class SyntheticCorpus:
    catalog: Catalog
    model: DistanceModel
    queries: tuple[StructuredQuery, ...]

    def files(self) -> dict[str, str]:
        return {
            "catalog.csv": dump_catalog(self.catalog),
            "distances.csv": dump_distances(self.model),
            "queries.txt": "".join(render_query(q) + "\n" for q in self.queries),
        }


def gen_synthetic(seed: int, spec: CorpusSpec) -> SyntheticCorpus:
    rng = random.Random(seed)
    names = spec.attribute_names
    n = spec.attributes
    first_numeric = n - spec.numeric
    schema = {name: (NUMERIC if i >= first_numeric else CATEGORICAL) for i, name in enumerate(names)}

    domains: list[list] = []
    positions: list[list[float]] = []
    weights: list[list[float]] = []
    tables: dict[str, dict] = {}
    for i, (name, size) in enumerate(zip(names, spec.domain_sizes)):
        if schema[name] == NUMERIC:
            domain = [float(v) for v in sorted(rng.sample(range(10, 10 + 4 * size), size))]
            lo, hi = domain[0], domain[-1]
            position = [(v - lo) / (hi - lo) for v in domain]
        else:
            domain = [f"{name}_{j:02d}" for j in range(size)]
            position = [rng.random() for _ in domain]
            table = {}
            for a, v in enumerate(domain):
                for b, w in enumerate(domain):
                    if a == b:
                        continue
                    dist = round(spec.distance_scale * abs(position[a] - position[b]), 2)
                    keep = rng.random() >= spec.missing_fractions[i]
                    if keep and dist < 1.0:
                        table[(v, w)] = max(dist, 0.01)
            if table:
                tables[name] = table
        ranks = list(range(size))
        rng.shuffle(ranks)
        domains.append(domain)
        positions.append(position)
        weights.append([1.0 / (r + 1) ** spec.skew for r in ranks])

    def draw(i: int, latent: float) -> int:
        w = weights[i]
        if spec.cohesion > 0:
            w = [x * math.exp(-spec.cohesion * abs(p - latent)) for x, p in zip(w, positions[i])]
        return rng.choices(range(len(w)), w)[0]

    link = [rng.randrange(len(domains[1])) for _ in domains[0]] if n >= 2 else []
    items = []
    for idx in range(spec.items):
        latent = rng.random()
        parent = draw(0, latent)
        attrs = {names[0]: domains[0][parent]}
        for i in range(1, n):
            if i == 1 and spec.correlation > 0 and rng.random() < spec.correlation:
                value = domains[1][link[parent]]
            else:
                value = domains[i][draw(i, latent)]
            if rng.random() >= spec.missing_values:
                attrs[names[i]] = value
        items.append(Item(f"p{idx:06d}", attrs))
    catalog = Catalog(tuple(items), schema)
    model = DistanceModel(frozenset(a for a, k in schema.items() if k == NUMERIC), tables)
    queries = _gen_queries(rng, spec, catalog, domains, positions, weights)
    return SyntheticCorpus(catalog, model, tuple(queries))


def _gen_queries(rng: random.Random, spec: CorpusSpec, catalog: Catalog, domains, positions, weights) -> list[StructuredQuery]:
    names = spec.attribute_names
    m = spec.query_attributes or spec.attributes
    qattrs = names[:m]
    exact = Counter(tuple(item.get(a) for a in qattrs) for item in catalog.items)
    # Keep correlated pairs intact so queries look like "<brand> <model>" lookups.
    coupled = {0, 1} if spec.correlation > 0 else set()
    perturbable = [i for i in range(m) if i not in coupled]
    queries: list[StructuredQuery] = []
    seen: set[tuple] = set()
    attempts = 0
    while len(queries) < spec.queries:
        attempts += 1
        if attempts > 200 * max(spec.queries, 1):
            raise CorpusSpecError("could not find enough under-matching queries for this spec")
        anchor = rng.choice(catalog.items)
        picks = []
        for i, attr in enumerate(qattrs):
            value = anchor.get(attr)
            picks.append(domains[i].index(value) if value is not None else rng.choices(range(len(domains[i])), weights[i])[0])
        # Ask for a neighbour of a real value, the way a user misremembers a spec.
        # With only coupled attributes the query stays a real pair and under-matches by rarity.
        if perturbable:
            i = rng.choice(perturbable)
            here = positions[i][picks[i]]
            near = sorted((j for j in range(len(domains[i])) if j != picks[i]), key=lambda j: abs(positions[i][j] - here))
            picks[i] = rng.choice(near[:NEIGHBOURS])
        values = [domains[i][j] for i, j in enumerate(picks)]
        key = tuple(values)
        if key in seen or exact[key] >= spec.k:
            continue
        seen.add(key)
        queries.append(StructuredQuery(tuple(zip(qattrs, values))))
    return queries

