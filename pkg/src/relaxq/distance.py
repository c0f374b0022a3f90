"""Per-attribute distances, the mean aggregate distance and Mean-Dist.

Distance-table files hold one ``attr,v,w,distance`` entry per line.  Lookups
are directional: ``v`` is the value asked for in the query, ``w`` the value
an item holds.  A pair missing from the table is at distance 1, except that
numeric attributes fall back to the relative-difference formula.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .catalog import NUMERIC, Item, StructuredQuery, Value, format_value, parse_value
from .errors import CatalogFormatError, UnknownAttributeError


def numeric_distance(v: float, w: float) -> float:
    """``min(1, |v - w| / |v|)``; a zero query value is only close to itself."""
    if v == 0:
        return 0.0 if w == 0 else 1.0
    return min(1.0, abs(v - w) / abs(v))


@dataclass(frozen=True)
class DistanceModel:
    """Distance functions for every attribute of a schema.

    ``tables`` maps an attribute to explicit ``(v, w) -> distance`` entries.
    For a numeric attribute those entries override the formula pair by pair.
    """

    numeric: frozenset[str] = frozenset()
    tables: Mapping[str, Mapping[tuple[Value, Value], float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for attr, table in self.tables.items():
            for (v, w), dist in table.items():
                if not 0.0 <= dist <= 1.0:
                    raise ValueError(f"{attr}: distance {dist} for ({v!r}, {w!r}) outside [0, 1]")
                if v == w and dist != 0.0:
                    raise ValueError(f"{attr}: a value must be at distance 0 from itself ({v!r})")

    def distance(self, attr: str, v: Value, w: Value | None) -> float:
        if w is None:
            return 1.0
        if v == w:
            return 0.0
        table = self.tables.get(attr)
        if table is not None:
            dist = table.get((v, w))
            if dist is not None:
                return dist
        if attr in self.numeric:
            return numeric_distance(float(v), float(w))
        return 1.0


def categorical_distance(model: DistanceModel, attr: str, v: Value, w: Value | None) -> float:
    if w is None:
        return 1.0
    if v == w:
        return 0.0
    return model.tables.get(attr, {}).get((v, w), 1.0)


def aggregate_distance(item: Item, query: StructuredQuery, model: DistanceModel) -> float:
    """Mean per-attribute distance over the query's attributes."""
    total = sum(model.distance(attr, value, item.get(attr)) for attr, value in query.pairs)
    return total / len(query.pairs)


def mean_dist(results: Sequence[Item], query: StructuredQuery, model: DistanceModel, k: int) -> float:
    """Average aggregate distance of a result set, padding any shortfall below k with 1s."""
    if k < 1:
        raise ValueError("k must be at least 1")
    total = sum(aggregate_distance(item, query, model) for item in results)
    if len(results) >= k:
        return total / len(results)
    return (total + (k - len(results))) / k


def load_distances(source: Iterable[str] | str, schema: Mapping[str, str] | None = None) -> DistanceModel:
    """Read a distance-table file.

    With a schema, values of numeric attributes are parsed as numbers and
    entries for attributes outside the schema are rejected.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    tables: dict[str, dict[tuple[Value, Value], float]] = {}
    reader = csv.reader(source)
    for row in reader:
        lineno = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise CatalogFormatError(f"expected 'attr,v,w,distance', got {len(row)} fields", line=lineno)
        attr, v_text, w_text, d_text = row
        kind = "cat"
        if schema is not None:
            if attr not in schema:
                raise UnknownAttributeError(f"line {lineno}: unknown attribute {attr!r}")
            kind = schema[attr]
        try:
            v, w = parse_value(v_text, kind), parse_value(w_text, kind)
            dist = float(d_text)
        except ValueError as exc:
            raise CatalogFormatError(str(exc), line=lineno) from None
        if not 0.0 <= dist <= 1.0:
            raise CatalogFormatError(f"distance {d_text} outside [0, 1]", line=lineno)
        table = tables.setdefault(attr, {})
        if (v, w) in table:
            raise CatalogFormatError(f"duplicate entry for {attr} ({v_text}, {w_text})", line=lineno)
        table[(v, w)] = dist
    numeric = frozenset(a for a, k in (schema or {}).items() if k == NUMERIC)
    try:
        return DistanceModel(numeric, tables)
    except ValueError as exc:
        raise CatalogFormatError(str(exc)) from None


def read_distances(path, schema: Mapping[str, str] | None = None) -> DistanceModel:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_distances(fh, schema)


def dump_distances(model: DistanceModel) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for attr, table in model.tables.items():
        for (v, w), dist in table.items():
            writer.writerow([attr, format_value(v), format_value(w), repr(dist)])
    return out.getvalue()
