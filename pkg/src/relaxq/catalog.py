"""Items, catalogs and structured queries, plus their text formats.

Catalog files are CSV with a typed header::

    id,Brand:cat,Model:cat,Type:cat,Diagonal:num
    t1,Samsung,UN46B6000,LED,46

An empty field means the item has no value for that attribute.  Queries use
``attr:value(;attr:value)*``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

from .errors import CatalogFormatError, QuerySyntaxError, UnknownAttributeError

Value = Union[str, float]

CATEGORICAL = "cat"
NUMERIC = "num"
KINDS = (CATEGORICAL, NUMERIC)


def format_value(value: Value) -> str:
    """Canonical text form of a value; numbers print without a trailing ``.0``."""
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    return value


def parse_value(text: str, kind: str) -> Value:
    if kind == NUMERIC:
        try:
            number = float(text)
        except ValueError:
            raise ValueError(f"not a number: {text!r}") from None
        if not math.isfinite(number):
            raise ValueError(f"numeric value must be finite: {text!r}")
        return number
    if not text:
        raise ValueError("categorical value must be non-empty")
    return text


@dataclass(frozen=True)
class Item:
    id: str
    attrs: Mapping[str, Value]

    def get(self, attr: str) -> Value | None:
        return self.attrs.get(attr)


@dataclass(frozen=True)
class Catalog:
    """An immutable, ordered collection of items with a typed schema."""

    items: tuple[Item, ...]
    schema: Mapping[str, str]
    _positions: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for kind in self.schema.values():
            if kind not in KINDS:
                raise ValueError(f"unknown attribute kind {kind!r}")
        positions = {}
        for pos, item in enumerate(self.items):
            if item.id in positions:
                raise CatalogFormatError(f"duplicate item id {item.id!r}")
            extra = set(item.attrs) - set(self.schema)
            if extra:
                raise CatalogFormatError(f"item {item.id!r} has attributes outside the schema: {sorted(extra)}")
            positions[item.id] = pos
        self._positions.update(positions)

    @property
    def size(self) -> int:
        return len(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Item]:
        return iter(self.items)

    def position(self, item_id: str) -> int:
        return self._positions[item_id]

    def kind(self, attr: str) -> str:
        return self.schema[attr]


@dataclass(frozen=True)
class StructuredQuery:
    """A conjunction of ``attr:value`` constraints in query order."""

    pairs: tuple[tuple[str, Value], ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise QuerySyntaxError("a query needs at least one attribute")
        seen = set()
        for attr, _ in self.pairs:
            if attr in seen:
                raise QuerySyntaxError(f"repeated attribute {attr!r}")
            seen.add(attr)

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(attr for attr, _ in self.pairs)

    def value(self, attr: str) -> Value:
        for name, value in self.pairs:
            if name == attr:
                return value
        raise KeyError(attr)

    def without(self, attrs: Iterable[str]) -> StructuredQuery:
        drop = set(attrs)
        return StructuredQuery(tuple(p for p in self.pairs if p[0] not in drop))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[str, Value]]:
        return iter(self.pairs)

    def __str__(self) -> str:
        return render_query(self)


def _parse_header(row: list[str]) -> dict[str, str]:
    if not row or row[0] != "id":
        raise CatalogFormatError("header must start with 'id'", line=1)
    schema: dict[str, str] = {}
    for col in row[1:]:
        name, sep, kind = col.rpartition(":")
        if not sep or not name:
            raise CatalogFormatError(f"header column {col!r} is not 'name:kind'", line=1)
        if kind not in KINDS:
            raise CatalogFormatError(f"unknown kind {kind!r} for {name!r}", line=1)
        if name in schema:
            raise CatalogFormatError(f"attribute {name!r} declared twice", line=1)
        schema[name] = kind
    return schema


def load_catalog(source: Iterable[str] | str) -> Catalog:
    """Parse a catalog from an iterable of lines (or a whole string)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise CatalogFormatError("missing header", line=1) from None
    schema = _parse_header(header)
    names = list(schema)
    items: list[Item] = []
    seen: set[str] = set()
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(names) + 1:
            raise CatalogFormatError(f"expected {len(names) + 1} fields, got {len(row)}", line=lineno)
        item_id = row[0]
        if not item_id:
            raise CatalogFormatError("empty item id", line=lineno)
        if item_id in seen:
            raise CatalogFormatError(f"duplicate item id {item_id!r}", line=lineno)
        seen.add(item_id)
        attrs: dict[str, Value] = {}
        for name, text in zip(names, row[1:]):
            if text == "":
                continue
            try:
                attrs[name] = parse_value(text, schema[name])
            except ValueError as exc:
                raise CatalogFormatError(f"attribute {name!r}: {exc}", line=lineno) from None
        if not attrs:
            raise CatalogFormatError(f"item {item_id!r} has no attribute values", line=lineno)
        items.append(Item(item_id, attrs))
    return Catalog(tuple(items), schema)


def read_catalog(path) -> Catalog:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_catalog(fh)


def dump_catalog(catalog: Catalog) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    names = list(catalog.schema)
    writer.writerow(["id"] + [f"{n}:{catalog.schema[n]}" for n in names])
    for item in catalog.items:
        row = [item.id]
        for name in names:
            value = item.get(name)
            row.append("" if value is None else format_value(value))
        writer.writerow(row)
    return out.getvalue()


def parse_query(text: str, schema: Mapping[str, str] | None = None) -> StructuredQuery:
    """Parse ``attr:value(;attr:value)*``.

    With a schema, numeric attributes get float values and unknown attribute
    names are rejected; without one every value stays a string.
    """
    text = text.strip()
    if not text:
        raise QuerySyntaxError("empty query")
    pairs: list[tuple[str, Value]] = []
    seen: set[str] = set()
    for chunk in text.split(";"):
        attr, sep, raw = chunk.partition(":")
        attr, raw = attr.strip(), raw.strip()
        if not sep or not attr or not raw:
            raise QuerySyntaxError(f"expected 'attr:value', got {chunk!r}")
        if attr in seen:
            raise QuerySyntaxError(f"repeated attribute {attr!r}")
        seen.add(attr)
        value: Value = raw
        if schema is not None:
            if attr not in schema:
                raise UnknownAttributeError(f"unknown attribute {attr!r}")
            try:
                value = parse_value(raw, schema[attr])
            except ValueError as exc:
                raise QuerySyntaxError(f"attribute {attr!r}: {exc}") from None
        pairs.append((attr, value))
    return StructuredQuery(tuple(pairs))


def render_query(query: StructuredQuery) -> str:
    return ";".join(f"{attr}:{format_value(value)}" for attr, value in query.pairs)


def load_queries(lines: Iterable[str], schema: Mapping[str, str] | None = None) -> list[StructuredQuery]:
    """One query per line; blank lines and ``#`` comments are skipped."""
    queries = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            queries.append(parse_query(line, schema))
        except (QuerySyntaxError, UnknownAttributeError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return queries
