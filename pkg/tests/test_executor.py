import pytest
from hypothesis import given, settings, strategies as st

from relaxq.catalog import Catalog, Item, parse_query
from relaxq.distance import DistanceModel, aggregate_distance
from relaxq.executor import MatchSet, index_hits, match_items, result_distances, top_k
from relaxq.stats import RelaxedQuery, estimate_matches

from oracles import random_instance, scan_matches


def rq(query, deltas):
    return RelaxedQuery.from_deltas(query, deltas)


def test_greedy_rewrite_matches(tv_catalog, tv_model, tv_query):
    matches = match_items(tv_catalog, rq(tv_query, (0.2, 0.1, 0.3)), tv_model)
    assert matches.ids() == ["UN46B6000", "KDL-52XBR9", "KDL-46EX700"]
    assert index_hits(matches) == 3


def test_worked_dp_rewrite_matches(tv_catalog, tv_model, tv_query):
    matches = match_items(tv_catalog, rq(tv_query, (0.3, 0.1, 0.1)), tv_model)
    assert sorted(matches.ids()) == sorted(["KDL-52XBR9", "LC-52D85UN", "LC-52LE700UN"])


def test_exact_query_matches_equal_items(tv_catalog, tv_model):
    query = parse_query("Brand:Samsung;Type:LED;Diagonal:55", tv_catalog.schema)
    assert match_items(tv_catalog, RelaxedQuery.exact(query), tv_model).ids() == ["UN55B7000"]


def test_removal_rewrite_hits(tv_catalog, tv_model, tv_query):
    matches = match_items(tv_catalog, rq(tv_query, (0.0, 1.0, 1.0)), tv_model)
    assert index_hits(matches) == 5


def test_empty_match_set():
    assert index_hits(MatchSet(())) == 0


def test_missing_values_match_only_at_radius_one():
    cat = Catalog((Item("a", {"c": "x"}), Item("b", {"d": "y"})), {"c": "cat", "d": "cat"})
    model = DistanceModel()
    query = parse_query("c:x")
    assert match_items(cat, rq(query, (0.99,)), model).ids() == ["a"]
    assert match_items(cat, rq(query, (1.0,)), model).ids() == ["a", "b"]


def test_top_k_order(tv_catalog, tv_model, tv_query):
    matches = match_items(tv_catalog, rq(tv_query, (0.2, 0.1, 0.3)), tv_model)
    ranked = top_k(matches, tv_query, tv_model, 3)
    assert [i.id for i in ranked] == ["UN46B6000", "KDL-52XBR9", "KDL-46EX700"]
    assert result_distances(ranked, tv_query, tv_model) == pytest.approx([0.1, 0.4 / 3, 0.2])
    assert top_k(matches, tv_query, tv_model, 10) == ranked
    assert top_k(matches, tv_query, tv_model, 1) == ranked[:1]
    with pytest.raises(ValueError):
        top_k(matches, tv_query, tv_model, 0)


def test_top_k_ties_keep_catalog_order(tv_catalog, tv_model):
    query = parse_query("Brand:Samsung", tv_catalog.schema)
    matches = match_items(tv_catalog, rq(query, (0.0,)), tv_model)
    ranked = top_k(matches, query, tv_model, 5)
    assert [i.id for i in ranked] == [i.id for i in tv_catalog.items if i.get("Brand") == "Samsung"]


seeds = st.integers(min_value=0, max_value=10**6)
radius = st.floats(min_value=0.0, max_value=1.0)


@settings(max_examples=60, deadline=None)
@given(seeds, st.data())
def test_matching_agrees_with_scan_and_is_monotone(seed, data):
    catalog, model, _, pairs, k = random_instance(seed)
    query = parse_query(";".join(f"{a}:{v}" for a, v in pairs))
    deltas = data.draw(st.lists(radius, min_size=len(pairs), max_size=len(pairs)))
    matches = match_items(catalog, rq(query, deltas), model)
    assert matches.ids() == scan_matches(catalog, model, rq(query, deltas))
    assert matches.count == len(matches.items)
    wider = [data.draw(st.floats(min_value=d, max_value=1.0)) for d in deltas]
    assert set(matches.ids()) <= set(match_items(catalog, rq(query, wider), model).ids())
    ranked = top_k(matches, query, model, k)
    dists = [aggregate_distance(i, query, model) for i in ranked]
    assert dists == sorted(dists)
    assert len(ranked) == min(k, matches.count)


@settings(max_examples=60, deadline=None)
@given(seeds, radius)
def test_single_attribute_estimate_equals_hits(seed, delta):
    catalog, model, stats, pairs, _ = random_instance(seed)
    single = RelaxedQuery(((pairs[0][0], pairs[0][1], delta),))
    assert match_items(catalog, single, model).count == pytest.approx(estimate_matches(stats, single))
