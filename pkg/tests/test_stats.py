import pytest
from hypothesis import given, settings, strategies as st

from relaxq.catalog import Catalog, Item, parse_query
from relaxq.distance import DistanceModel
from relaxq.errors import StatsFormatError, UnknownAttributeError
from relaxq.stats import (
    RelaxedQuery,
    ball,
    ball_count,
    build_stats,
    dump_stats,
    estimate_matches,
    load_stats,
    meets_target,
)

from oracles import random_instance, scan_count, scan_estimate, scan_matches


def relaxed(text, deltas, schema=None):
    return RelaxedQuery.from_deltas(parse_query(text, schema), deltas)


def test_histograms(tv_stats):
    brand = tv_stats.histogram("Brand")
    assert dict(brand.counts) == {"Samsung": 5, "Sony": 3, "Sharp": 2}
    assert brand.missing == 0
    assert tv_stats.histogram("Diagonal").counts[52.0] == 3
    assert tv_stats.size == 10
    with pytest.raises(UnknownAttributeError):
        tv_stats.histogram("Colour")


def test_conditional_probabilities(tv_stats):
    cp = tv_stats.condprobs
    assert cp.prob("Brand", "Samsung", "Model", "UN46B6000") == 1.0
    assert cp.prob("Model", "UN46B6000", "Brand", "Samsung") == pytest.approx(0.2)
    assert cp.prob("Type", "LED", "Brand", "Samsung") == pytest.approx(0.6)
    assert cp.prob("Brand", "Sony", "Model", "UN46B6000") == 0.0


def test_single_item_catalog():
    cat = Catalog((Item("only", {"a": "x", "b": 3.0}),), {"a": "cat", "b": "num"})
    stats = build_stats(cat, DistanceModel(frozenset({"b"})))
    for attr in ("a", "b"):
        assert sum(stats.histogram(attr).counts.values()) == 1
        assert len(stats.histogram(attr).counts) == 1


def test_empty_catalog_has_no_stats():
    with pytest.raises(ValueError):
        build_stats(Catalog((), {"a": "cat"}), DistanceModel())


def test_balls(tv_stats):
    assert ball(tv_stats, "Brand", "Samsung", 0.2) == {"Samsung", "Sony"}
    assert ball(tv_stats, "Brand", "Samsung", 0.0) == {"Samsung"}
    assert ball(tv_stats, "Diagonal", 50.0, 0.3) == {50.0, 52.0, 46.0}
    assert ball(tv_stats, "Type", "LED", 1.0) == {"LED", "LCD", "Plasma", "CRT"}


@pytest.mark.parametrize("attr, v, delta, expected", [
    ("Brand", "Samsung", 0.0, 5),
    ("Type", "LED", 0.1, 8),
    ("Diagonal", 50.0, 0.3, 7),
    ("Diagonal", 50.0, 0.0, 1),
    ("Diagonal", 50.0, 0.1, 4),
    ("Brand", "Samsung", 0.3, 10),
    ("Type", "LED", 0.5, 9),
])
def test_ball_counts(tv_stats, tv_catalog, tv_model, attr, v, delta, expected):
    assert ball_count(tv_stats, attr, v, delta) == expected
    assert scan_count(tv_catalog, tv_model, attr, v, delta) == expected


SCHEMA = {"Brand": "cat", "Type": "cat", "Diagonal": "num"}


@pytest.mark.parametrize("deltas, expected", [
    ((0.2, 0.2, 0.3), 4.48),
    ((0.0, 0.0, 0.0), 0.20),
    ((1.0, 1.0, 1.0), 10.0),
])
def test_estimates(tv_stats, deltas, expected):
    rq = relaxed("Brand:Samsung;Type:LED;Diagonal:50", deltas, SCHEMA)
    assert estimate_matches(tv_stats, rq) == pytest.approx(expected, abs=1e-9)


def test_missing_values_count_only_at_radius_one():
    cat = Catalog((Item("a", {"c": "x"}), Item("b", {"c": "y"}), Item("c", {"d": "z"})),
                  {"c": "cat", "d": "cat"})
    model = DistanceModel(frozenset(), {"c": {("x", "y"): 0.5}})
    stats = build_stats(cat, model)
    assert stats.histogram("c").missing == 1
    assert ball_count(stats, "c", "x", 0.99) == 2
    assert ball_count(stats, "c", "x", 1.0) == 3


def test_meets_target_is_exact():
    # 3 * 7 * 5 / 10**2 = 1.05 exactly reaches 1.05 only through integer arithmetic
    assert meets_target([3, 7, 5], 10, 1.05)
    assert not meets_target([3, 7, 5], 10, 1.06)
    assert meets_target([0], 10, 0)


def test_relaxed_query_validation():
    q = parse_query("a:x;b:y")
    with pytest.raises(ValueError):
        RelaxedQuery.from_deltas(q, [0.1, 1.5])
    with pytest.raises(ValueError):
        RelaxedQuery((("a", "x", 0.1), ("a", "y", 0.2)))
    rq = RelaxedQuery.from_deltas(q, [0.25, 0.5])
    assert rq.total_relaxation == 0.75
    assert rq.delta("b") == 0.5
    assert str(rq) == "a:x+-0.25;b:y+-0.5"
    assert RelaxedQuery.exact(q).deltas == (0.0, 0.0)


def test_stats_file_round_trip(tv_stats):
    again = load_stats(dump_stats(tv_stats))
    assert again.size == tv_stats.size
    assert dict(again.kinds) == dict(tv_stats.kinds)
    assert again.histograms == tv_stats.histograms
    assert again.model == tv_stats.model
    assert dict(again.condprobs.probs) == pytest.approx(dict(tv_stats.condprobs.probs))
    rq = relaxed("Brand:Samsung;Type:LED;Diagonal:50", (0.2, 0.2, 0.3), SCHEMA)
    assert estimate_matches(again, rq) == estimate_matches(tv_stats, rq)


@pytest.mark.parametrize("text", [
    "N,10\nK,a,cat\nH,a,x,10\n",             # no version line
    "V,2\nN,10\n",                           # unknown version
    "V,1\nN,10\nK,a,cat\nH,a,x,9\n",         # counts do not add up to N
    "V,1\nN,10\nH,a,x,10\n",                 # attribute before its kind
    "V,1\nN,10\nK,a,cat\nQ,a\n",             # unknown tag
    "V,1\nN,ten\n",
])
def test_stats_file_errors(text):
    with pytest.raises(StatsFormatError):
        load_stats(text)


# -- properties over random catalogs -----------------------------------------

seeds = st.integers(min_value=0, max_value=10**6)
radius = st.floats(min_value=0.0, max_value=1.0)


@settings(max_examples=60, deadline=None)
@given(seeds, radius, radius)
def test_ball_nesting_and_count_monotone(seed, d1, d2):
    catalog, model, stats, pairs, _ = random_instance(seed)
    lo, hi = sorted((d1, d2))
    for attr, v in pairs:
        assert ball(stats, attr, v, lo) <= ball(stats, attr, v, hi)
        assert ball_count(stats, attr, v, lo) <= ball_count(stats, attr, v, hi)
        assert ball_count(stats, attr, v, hi) == scan_count(catalog, model, attr, v, hi)


@settings(max_examples=60, deadline=None)
@given(seeds, st.data())
def test_estimate_bounds_and_monotonicity(seed, data):
    catalog, model, stats, pairs, _ = random_instance(seed)
    q = parse_query(";".join(f"{a}:{v}" for a, v in pairs))
    deltas = data.draw(st.lists(radius, min_size=len(pairs), max_size=len(pairs)))
    rq = RelaxedQuery.from_deltas(q, deltas)
    est = estimate_matches(stats, rq)
    assert 0.0 <= est <= stats.size
    assert est == pytest.approx(scan_estimate(catalog, model, rq))
    i = data.draw(st.integers(min_value=0, max_value=len(pairs) - 1))
    bumped = list(deltas)
    bumped[i] = data.draw(st.floats(min_value=deltas[i], max_value=1.0))
    assert estimate_matches(stats, RelaxedQuery.from_deltas(q, bumped)) >= est


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_histograms_conserve_catalog_size(seed):
    catalog, _, stats, _, _ = random_instance(seed)
    for attr in catalog.schema:
        hist = stats.histogram(attr)
        assert all(c >= 0 for c in hist.counts.values())
        assert hist.total == stats.size
    for p in stats.condprobs.probs.values():
        assert 0.0 <= p <= 1.0


@settings(max_examples=60, deadline=None)
@given(seeds, radius)
def test_single_attribute_estimate_is_exact(seed, delta):
    catalog, model, stats, pairs, _ = random_instance(seed)
    attr, v = pairs[0]
    rq = RelaxedQuery(((attr, v, delta),))
    assert estimate_matches(stats, rq) == pytest.approx(len(scan_matches(catalog, model, rq)))
