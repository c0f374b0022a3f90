"""Run relaxed queries against the real catalog and rank what comes back."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .catalog import Catalog, Item, StructuredQuery
from .distance import DistanceModel, aggregate_distance
from .stats import RelaxedQuery

_DELTA_SLACK = 1e-12


@dataclass(frozen=True)
class MatchSet:
    items: tuple[Item, ...]

    @property
    def count(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def ids(self) -> list[str]:
        return [item.id for item in self.items]


def match_items(catalog: Catalog, rq: RelaxedQuery, model: DistanceModel) -> MatchSet:
    """Items whose every query attribute lies inside its ball, in catalog order.

    An item without a value for a query attribute matches only at radius 1.
    """
    # Distances are memoised per distinct item value; catalogs repeat values a lot.
    memo: list[dict] = [{} for _ in rq.pairs]
    hits = []
    for item in catalog.items:
        for (attr, value, delta), seen in zip(rq.pairs, memo):
            held = item.get(attr)
            ok = seen.get(held)
            if ok is None:
                ok = model.distance(attr, value, held) <= delta + _DELTA_SLACK
                seen[held] = ok
            if not ok:
                break
        else:
            hits.append(item)
    return MatchSet(tuple(hits))


def top_k(matches: MatchSet, query: StructuredQuery, model: DistanceModel, k: int) -> list[Item]:
    """The k matches closest to the original query; ties keep catalog order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    ranked = sorted(matches.items, key=lambda item: aggregate_distance(item, query, model))
    return ranked[:k]


def index_hits(matches: MatchSet) -> int:
    return matches.count


def result_distances(items: Sequence[Item], query: StructuredQuery, model: DistanceModel) -> list[float]:
    return [aggregate_distance(item, query, model) for item in items]
