"""Query-rewrite strategies that work only from a :class:`StatsSnapshot`.

Nothing in this module takes a catalog.  Radii live on an epsilon grid: the
i-th grid point is ``min(1, i * epsilon)``, so every strategy reaches 1.0
even when epsilon does not divide it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .catalog import StructuredQuery
from .errors import BudgetError, GridTooLargeError
from .stats import (
    CondProbTable,
    RelaxedQuery,
    StatsSnapshot,
    ball_count,
    estimate_from_counts,
    meets_target,
)

FD_OFF = "off"
DROP_DETERMINED = "drop-determined"
DROP_DETERMINING = "drop-determining"
FD_MODES = (FD_OFF, DROP_DETERMINED, DROP_DETERMINING)

BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class RewriteBudget:
    T: int
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        if self.T < 1:
            raise BudgetError(f"T must be at least 1, got {self.T}")
        if not 0.0 < self.epsilon <= 1.0:
            raise BudgetError(f"epsilon must lie in (0, 1], got {self.epsilon}")


def grid_steps(epsilon: float) -> int:
    """Index of the first grid point that reaches radius 1."""
    return math.ceil(round(1.0 / epsilon, 9))


def grid_delta(index: int, epsilon: float) -> float:
    return min(1.0, round(index * epsilon, 12))


@dataclass(frozen=True)
class TraceStep:
    deltas: tuple[float, ...]
    counts: tuple[int, ...]
    estimate: float


@dataclass(frozen=True)
class RewriteOutcome:
    relaxed: RelaxedQuery
    estimate: float
    evaluations_used: int
    target_met: bool
    dropped_attributes: tuple[str, ...] = ()
    trace: tuple[TraceStep, ...] = field(default=(), repr=False)

    @property
    def total_relaxation(self) -> float:
        return self.relaxed.total_relaxation


def _counts_at(snapshot: StatsSnapshot, query: StructuredQuery, deltas) -> list[int]:
    return [ball_count(snapshot, a, v, d) for (a, v), d in zip(query.pairs, deltas)]


def greedy_rewrite(query: StructuredQuery, snapshot: StatsSnapshot, k: int, budget: RewriteBudget) -> RewriteOutcome:
    """Widen the most constraining attribute by one step until the estimate reaches k.

    The unrelaxed query is the first evaluation.  Each further evaluation
    raises the radius of the attribute with the smallest ball count (earliest
    in query order on ties, attributes already at radius 1 excluded).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    eps = budget.epsilon
    top = grid_steps(eps)
    m = len(query)
    steps = [0] * m
    deltas = [0.0] * m
    counts = _counts_at(snapshot, query, deltas)
    evaluations = 1
    trace = [TraceStep(tuple(deltas), tuple(counts), estimate_from_counts(counts, snapshot.size))]
    met = meets_target(counts, snapshot.size, k)
    while not met and evaluations < budget.T:
        open_attrs = [i for i in range(m) if steps[i] < top]
        if not open_attrs:
            break
        i = min(open_attrs, key=lambda j: (counts[j], j))
        steps[i] += 1
        deltas[i] = grid_delta(steps[i], eps)
        attr, value = query.pairs[i]
        counts[i] = ball_count(snapshot, attr, value, deltas[i])
        evaluations += 1
        trace.append(TraceStep(tuple(deltas), tuple(counts), estimate_from_counts(counts, snapshot.size)))
        met = meets_target(counts, snapshot.size, k)
    return RewriteOutcome(
        relaxed=RelaxedQuery.from_deltas(query, deltas),
        estimate=trace[-1].estimate,
        evaluations_used=evaluations,
        target_met=met,
        trace=tuple(trace),
    )


@dataclass(frozen=True)
class DPTable:
    """Filled table of the knapsack-style program.

    ``numerators[j][d]`` is the best product of ball counts over the first
    ``j + 1`` attributes with at most ``d`` grid steps of relaxation, i.e. the
    product fraction times ``size ** (j + 1)``.  Exact integers keep ties and
    threshold tests free of rounding error.
    """

    epsilon: float
    rho: int
    size: int
    numerators: tuple[tuple[int, ...], ...]
    choices: tuple[tuple[int, ...], ...]

    @property
    def evaluations(self) -> int:
        # The zero-relaxation cell of each row is the unrelaxed prefix, not a new rewrite.
        return sum(len(row) - 1 for row in self.numerators)

    def fraction(self, j: int, d: float) -> float:
        """``F(j, d)`` with ``j`` counted from 1 and ``d`` a grid radius."""
        row = self.numerators[j - 1]
        idx = round(d / self.epsilon)
        if not 0 <= idx < len(row):
            raise IndexError(f"F({j}, {d}) was not computed")
        return row[idx] / self.size**j

    def reconstruct(self, d_index: int) -> list[int]:
        """Per-attribute grid steps behind cell ``F(m, d_index)``."""
        m = len(self.numerators)
        steps = [0] * m
        d = d_index
        for j in range(m - 1, 0, -1):
            pick = self.choices[j][d]
            steps[j] = pick
            d = min(d - pick, len(self.numerators[j - 1]) - 1)
        steps[0] = d
        return steps


def build_dp_table(query: StructuredQuery, snapshot: StatsSnapshot, budget: RewriteBudget) -> DPTable:
    m = len(query)
    rho = budget.T // m
    if rho < 1:
        raise BudgetError(f"T={budget.T} is smaller than the number of attributes ({m})")
    eps = budget.epsilon
    top = grid_steps(eps)

    attr, value = query.pairs[0]
    first = tuple(ball_count(snapshot, attr, value, grid_delta(d, eps)) for d in range(min(rho, top) + 1))
    rows = [first]
    choices: list[tuple[int, ...]] = [tuple(range(len(first)))]
    for j in range(1, m):
        attr, value = query.pairs[j]
        own = [ball_count(snapshot, attr, value, grid_delta(d, eps)) for d in range(top + 1)]
        prev = rows[-1]
        last_prev = len(prev) - 1
        row, picks = [], []
        for d in range(min(rho, (j + 1) * top) + 1):
            best, best_pick = -1, 0
            for pick in range(min(d, top) + 1):
                # Beyond the previous row's end the prefix is already fully relaxed.
                cand = own[pick] * prev[min(d - pick, last_prev)]
                if cand > best:
                    best, best_pick = cand, pick
            row.append(best)
            picks.append(best_pick)
        rows.append(tuple(row))
        choices.append(tuple(picks))
    return DPTable(eps, rho, snapshot.size, tuple(rows), tuple(choices))


def dp_rewrite(query: StructuredQuery, snapshot: StatsSnapshot, k: int, budget: RewriteBudget) -> RewriteOutcome:
    """Pick the least total relaxation whose best product estimate reaches k.

    With ``rho = T // m`` grid steps per attribute only the cells up to
    ``rho * epsilon`` are filled; when none of them reaches k the most relaxed
    computed cell is returned with ``target_met=False``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    table = build_dp_table(query, snapshot, budget)
    m = len(query)
    last = table.numerators[-1]
    threshold = k * snapshot.size ** (m - 1)
    chosen = next((d for d, num in enumerate(last) if num >= threshold), None)
    met = chosen is not None
    if chosen is None:
        chosen = len(last) - 1
    steps = table.reconstruct(chosen)
    deltas = [grid_delta(s, table.epsilon) for s in steps]
    return RewriteOutcome(
        relaxed=RelaxedQuery.from_deltas(query, deltas),
        estimate=last[chosen] / snapshot.size ** (m - 1),
        evaluations_used=table.evaluations,
        target_met=met,
    )


def attribute_removal(query: StructuredQuery, snapshot: StatsSnapshot, k: int) -> RewriteOutcome:
    """Baseline: drop the most constraining attribute outright until the estimate reaches k.

    A dropped attribute is kept in the relaxed query at radius 1, which has
    the same matches and the same estimate as leaving it out.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    m = len(query)
    exact_counts = _counts_at(snapshot, query, [0.0] * m)
    counts = list(exact_counts)
    deltas = [0.0] * m
    active = list(range(m))
    dropped: list[str] = []
    evaluations = 1
    met = meets_target(counts, snapshot.size, k)
    while not met and len(active) > 1:
        i = min(active, key=lambda j: (exact_counts[j], j))
        active.remove(i)
        deltas[i] = 1.0
        counts[i] = snapshot.size
        dropped.append(query.pairs[i][0])
        evaluations += 1
        met = meets_target(counts, snapshot.size, k)
    return RewriteOutcome(
        relaxed=RelaxedQuery.from_deltas(query, deltas),
        estimate=estimate_from_counts(counts, snapshot.size),
        evaluations_used=evaluations,
        target_met=met,
        dropped_attributes=tuple(dropped),
    )


def fd_preprocess(query: StructuredQuery, condprobs: CondProbTable, threshold: float = 0.9,
                  direction: str = DROP_DETERMINED) -> StructuredQuery:
    """Drop one side of every attribute pair whose values look functionally dependent.

    For an ordered pair ``(a_i, a_j)`` with ``P(a_i = v_i | a_j = v_j) >=
    threshold``, ``drop-determined`` removes ``a_i`` and ``drop-determining``
    removes ``a_j``.  Pairs are scanned in query order, removals apply at
    once, and the last remaining attribute is never removed.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    if direction == FD_OFF:
        return query
    if direction not in (DROP_DETERMINED, DROP_DETERMINING):
        raise ValueError(f"unknown FD direction {direction!r}")
    kept = list(query.pairs)
    for a_i, v_i in query.pairs:
        for a_j, v_j in query.pairs:
            if a_i == a_j or len(kept) <= 1:
                continue
            if (a_i, v_i) not in kept or (a_j, v_j) not in kept:
                continue
            if condprobs.prob(a_i, v_i, a_j, v_j) >= threshold:
                kept.remove((a_i, v_i) if direction == DROP_DETERMINED else (a_j, v_j))
    return StructuredQuery(tuple(kept))


def brute_force_optimal(query: StructuredQuery, snapshot: StatsSnapshot, k: float, epsilon: float) -> RewriteOutcome:
    """Exhaustive search of the epsilon grid for the least total relaxation.

    Ties go to the lexicographically smallest radius vector.  Meant as a
    test oracle, so the grid is capped at ``BRUTE_FORCE_LIMIT`` points.
    """
    if not 0.0 < epsilon <= 1.0:
        raise BudgetError(f"epsilon must lie in (0, 1], got {epsilon}")
    m = len(query)
    top = grid_steps(epsilon)
    if (top + 1) ** m > BRUTE_FORCE_LIMIT:
        raise GridTooLargeError(f"{(top + 1) ** m} grid points exceed the {BRUTE_FORCE_LIMIT} limit")
    radii = [grid_delta(i, epsilon) for i in range(top + 1)]
    per_attr = [[ball_count(snapshot, a, v, r) for r in radii] for a, v in query.pairs]
    best = None
    best_tr = math.inf
    evaluations = 0
    for steps in itertools.product(range(top + 1), repeat=m):
        evaluations += 1
        counts = [per_attr[i][s] for i, s in enumerate(steps)]
        if not meets_target(counts, snapshot.size, k):
            continue
        tr = round(sum(radii[s] for s in steps), 9)
        if tr < best_tr:
            best, best_tr = steps, tr
    met = best is not None
    if best is None:
        best = (top,) * m
    counts = [per_attr[i][s] for i, s in enumerate(best)]
    return RewriteOutcome(
        relaxed=RelaxedQuery.from_deltas(query, [radii[s] for s in best]),
        estimate=estimate_from_counts(counts, snapshot.size),
        evaluations_used=evaluations,
        target_met=met,
    )
