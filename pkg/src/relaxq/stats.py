"""Precomputed catalog statistics and the match estimator built on them.

Everything a rewrite strategy may consult lives in a :class:`StatsSnapshot`:
exact per-value histograms, missing-value counts, pairwise conditional
probabilities and the distance model that defines relaxation balls.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .catalog import KINDS, NUMERIC, Catalog, StructuredQuery, Value, format_value, parse_value
from .distance import DistanceModel
from .errors import StatsFormatError, UnknownAttributeError

STATS_VERSION = 1

# Guards float noise when comparing a distance against a grid radius.
_DELTA_SLACK = 1e-12


@dataclass(frozen=True)
class Histogram:
    counts: Mapping[Value, int]
    missing: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values()) + self.missing


@dataclass(frozen=True)
class CondProbTable:
    """``P(a_i = v_i | a_j = v_j)`` for value pairs that co-occur; other pairs read as 0."""

    probs: Mapping[tuple[str, Value, str, Value], float] = field(default_factory=dict)

    def prob(self, attr_i: str, v_i: Value, attr_j: str, v_j: Value) -> float:
        return self.probs.get((attr_i, v_i, attr_j, v_j), 0.0)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class RelaxedQuery:
    """A structured query whose every attribute carries a radius in [0, 1]."""

    pairs: tuple[tuple[str, Value, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        for attr, _, delta in self.pairs:
            if attr in seen:
                raise ValueError(f"repeated attribute {attr!r}")
            if not 0.0 <= delta <= 1.0:
                raise ValueError(f"radius for {attr!r} must lie in [0, 1], got {delta}")
            seen.add(attr)

    @classmethod
    def exact(cls, query: StructuredQuery) -> RelaxedQuery:
        return cls(tuple((attr, value, 0.0) for attr, value in query.pairs))

    @classmethod
    def from_deltas(cls, query: StructuredQuery, deltas) -> RelaxedQuery:
        return cls(tuple((a, v, float(d)) for (a, v), d in zip(query.pairs, deltas, strict=True)))

    @property
    def deltas(self) -> tuple[float, ...]:
        return tuple(d for _, _, d in self.pairs)

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for a, _, _ in self.pairs)

    @property
    def total_relaxation(self) -> float:
        return sum(self.deltas)

    def delta(self, attr: str) -> float:
        for name, _, d in self.pairs:
            if name == attr:
                return d
        raise KeyError(attr)

    def __iter__(self) -> Iterator[tuple[str, Value, float]]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __str__(self) -> str:
        return ";".join(f"{a}:{format_value(v)}+-{d:g}" for a, v, d in self.pairs)


@dataclass(frozen=True)
class StatsSnapshot:
    size: int
    kinds: Mapping[str, str]
    histograms: Mapping[str, Histogram]
    model: DistanceModel
    condprobs: CondProbTable = field(default_factory=CondProbTable)
    # (attr, v) -> (sorted distances of occurring values, running counts)
    _profiles: dict = field(default_factory=dict, repr=False, compare=False)

    def histogram(self, attr: str) -> Histogram:
        try:
            return self.histograms[attr]
        except KeyError:
            raise UnknownAttributeError(f"no histogram for attribute {attr!r}") from None

    def _profile(self, attr: str, v: Value) -> tuple[list[float], list[int]]:
        key = (attr, v)
        profile = self._profiles.get(key)
        if profile is None:
            hist = self.histogram(attr)
            pairs = sorted((self.model.distance(attr, v, w), c) for w, c in hist.counts.items())
            dists = [d for d, _ in pairs]
            running, acc = [], 0
            for _, c in pairs:
                acc += c
                running.append(acc)
            profile = (dists, running)
            self._profiles[key] = profile
        return profile


def build_stats(catalog: Catalog, model: DistanceModel) -> StatsSnapshot:
    """Exact histograms and conditional probabilities for every attribute pair."""
    if catalog.size == 0:
        raise ValueError("cannot build statistics for an empty catalog")
    counts: dict[str, Counter] = {attr: Counter() for attr in catalog.schema}
    joint: Counter = Counter()
    for item in catalog.items:
        present = list(item.attrs.items())
        for attr, value in present:
            counts[attr][value] += 1
        for a_i, v_i in present:
            for a_j, v_j in present:
                if a_i != a_j:
                    joint[(a_i, v_i, a_j, v_j)] += 1
    histograms = {
        attr: Histogram(dict(c), catalog.size - sum(c.values())) for attr, c in counts.items()
    }
    probs = {key: n / counts[key[2]][key[3]] for key, n in joint.items()}
    return StatsSnapshot(catalog.size, dict(catalog.schema), histograms, model, CondProbTable(probs))


def ball(snapshot: StatsSnapshot, attr: str, v: Value, delta: float) -> set[Value]:
    """Occurring values of ``attr`` within distance ``delta`` of ``v``."""
    hist = snapshot.histogram(attr)
    return {w for w in hist.counts if snapshot.model.distance(attr, v, w) <= delta + _DELTA_SLACK}


def ball_count(snapshot: StatsSnapshot, attr: str, v: Value, delta: float) -> int:
    """Number of items whose ``attr`` value lies in the ball; missing values count only at radius 1."""
    snapshot.histogram(attr)  # unknown attributes fail even at radius 1
    if delta >= 1.0 - _DELTA_SLACK:
        return snapshot.size
    dists, running = snapshot._profile(attr, v)
    idx = bisect.bisect_right(dists, delta + _DELTA_SLACK)
    return running[idx - 1] if idx else 0


def ball_counts(snapshot: StatsSnapshot, rq: RelaxedQuery) -> list[int]:
    return [ball_count(snapshot, a, v, d) for a, v, d in rq.pairs]


def estimate_from_counts(counts: list[int], size: int) -> float:
    """``|P| * prod(count / |P|)`` evaluated as one exact integer ratio."""
    return math.prod(counts) / size ** (len(counts) - 1)


def meets_target(counts: list[int], size: int, k: float) -> bool:
    """Whether the estimate reaches ``k``, decided without rounding error."""
    if k <= 0:
        return True
    return math.prod(counts) >= k * size ** (len(counts) - 1)


def estimate_matches(snapshot: StatsSnapshot, rq: RelaxedQuery) -> float:
    """Independence-assumption estimate of how many items match ``rq``."""
    if snapshot.size <= 0:
        raise ValueError("estimation needs a non-empty catalog")
    if not rq.pairs:
        return float(snapshot.size)
    return estimate_from_counts(ball_counts(snapshot, rq), snapshot.size)


# -- stats file ---------------------------------------------------------------

def dump_stats(snapshot: StatsSnapshot) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["V", STATS_VERSION])
    w.writerow(["N", snapshot.size])
    for attr, kind in snapshot.kinds.items():
        w.writerow(["K", attr, kind])
    for attr, hist in snapshot.histograms.items():
        w.writerow(["M", attr, hist.missing])
        for value, count in hist.counts.items():
            w.writerow(["H", attr, format_value(value), count])
    for attr, table in snapshot.model.tables.items():
        for (v, x), dist in table.items():
            w.writerow(["D", attr, format_value(v), format_value(x), repr(dist)])
    for (a_i, v_i, a_j, v_j), p in snapshot.condprobs.probs.items():
        w.writerow(["C", a_i, format_value(v_i), a_j, format_value(v_j), repr(p)])
    return out.getvalue()


def load_stats(source: Iterable[str] | str) -> StatsSnapshot:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    version = size = None
    kinds: dict[str, str] = {}
    counts: dict[str, dict[Value, int]] = {}
    missing: dict[str, int] = {}
    tables: dict[str, dict[tuple[Value, Value], float]] = {}
    probs: dict[tuple[str, Value, str, Value], float] = {}

    def kind_of(attr: str, lineno: int) -> str:
        if attr not in kinds:
            raise StatsFormatError(f"line {lineno}: attribute {attr!r} used before its K line")
        return kinds[attr]

    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        tag = row[0]
        try:
            if tag == "V":
                version = int(row[1])
                if version != STATS_VERSION:
                    raise StatsFormatError(f"unsupported stats version {version}")
            elif tag == "N":
                size = int(row[1])
            elif tag == "K":
                _, attr, kind = row
                if kind not in KINDS:
                    raise StatsFormatError(f"line {lineno}: unknown kind {kind!r}")
                kinds[attr] = kind
                counts.setdefault(attr, {})
            elif tag == "M":
                _, attr, n = row
                kind_of(attr, lineno)
                missing[attr] = int(n)
            elif tag == "H":
                _, attr, value, n = row
                kind = kind_of(attr, lineno)
                counts[attr][parse_value(value, kind)] = int(n)
            elif tag == "D":
                _, attr, v, x, dist = row
                kind = kind_of(attr, lineno)
                tables.setdefault(attr, {})[(parse_value(v, kind), parse_value(x, kind))] = float(dist)
            elif tag == "C":
                _, a_i, v_i, a_j, v_j, p = row
                key = (a_i, parse_value(v_i, kind_of(a_i, lineno)), a_j, parse_value(v_j, kind_of(a_j, lineno)))
                probs[key] = float(p)
            else:
                raise StatsFormatError(f"line {lineno}: unknown record tag {tag!r}")
        except (ValueError, IndexError) as exc:
            if isinstance(exc, StatsFormatError):
                raise
            raise StatsFormatError(f"line {lineno}: malformed {tag!r} record: {exc}") from None
    if version is None or size is None:
        raise StatsFormatError("stats file lacks its V or N header line")
    histograms = {attr: Histogram(counts[attr], missing.get(attr, 0)) for attr in kinds}
    for attr, hist in histograms.items():
        if hist.total != size:
            raise StatsFormatError(f"histogram for {attr!r} sums to {hist.total}, expected {size}")
    model = DistanceModel(frozenset(a for a, k in kinds.items() if k == NUMERIC), tables)
    return StatsSnapshot(size, kinds, histograms, model, CondProbTable(probs))


def read_stats(path) -> StatsSnapshot:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_stats(fh)


def write_stats(snapshot: StatsSnapshot, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dump_stats(snapshot))

