import functools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qneat.evolution import Agent, EvolutionConfig, Species, reproduce
from qneat.genome import Genome, InnovationRegistry
from qneat.moo import (
    RankedAgent,
    assign_ranks,
    crowding_distance,
    dominates,
    evolve_moo,
    fast_non_dominated_sort,
    gate_objectives,
    nsga2_select,
    sort_by_total_order,
)


def brute_force_peel(points):
    """Repeatedly strip the points that nothing remaining dominates."""
    remaining = list(range(len(points)))
    fronts = []
    while remaining:
        front = [p for p in remaining if not any(dominates(points[q], points[p]) for q in remaining if q != p)]
        fronts.append(sorted(front))
        remaining = [p for p in remaining if p not in front]
    return fronts


def eq8_select(items, n):
    """Selection written straight from the pairwise order: i precedes j when
    rank_i < rank_j, or ranks tie and distance_i > distance_j."""

    def before(i, j):
        a, b = items[i], items[j]
        if a.rank < b.rank or (a.rank == b.rank and a.crowding > b.crowding):
            return -1
        if b.rank < a.rank or (a.rank == b.rank and b.crowding > a.crowding):
            return 1
        return i - j

    order = sorted(range(len(items)), key=functools.cmp_to_key(before))
    return [items[i] for i in order[:n]]


def random_points(rng, size, dims=2, integer=True):
    if integer:
        return [tuple(float(v) for v in rng.integers(0, 6, dims)) for _ in range(size)]
    return [tuple(rng.normal(size=dims)) for _ in range(size)]


def items_for(points):
    return [RankedAgent(Agent(Genome(1), 0.0), tuple(p)) for p in points]


class TestDominates:
    def test_examples(self):
        assert dominates((1, 1), (2, 2))
        assert not dominates((1, 2), (2, 1)) and not dominates((2, 1), (1, 2))
        assert not dominates((1, 1), (1, 1))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dominates((1,), (1, 2))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=3, max_size=3))
    def test_strict_partial_order(self, pts):
        a, b, c = pts
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)


class TestSort:
    def test_examples(self):
        assert fast_non_dominated_sort([(1, 2), (2, 1)]) == [[0, 1]]
        assert fast_non_dominated_sort([(2, 2), (1, 1), (3, 3)]) == [[1], [0], [2]]

    def test_empty(self):
        with pytest.raises(ValueError):
            fast_non_dominated_sort([])

    def test_matches_peel_32(self, rng):
        for _ in range(20):
            pts = random_points(rng, 32, integer=False)
            assert fast_non_dominated_sort(pts) == brute_force_peel(pts)

    def test_front_zero_undominated(self, rng):
        pts = random_points(rng, 40, dims=3)
        for p in fast_non_dominated_sort(pts)[0]:
            assert not any(dominates(q, pts[p]) for q in pts)


class TestCrowding:
    def test_small_fronts_infinite(self):
        assert crowding_distance([(1, 2)]) == [math.inf]
        assert crowding_distance([(1, 2), (2, 1)]) == [math.inf, math.inf]

    def test_equal_spacing(self):
        assert crowding_distance([(0, 2), (1, 1), (2, 0)])[1] == pytest.approx(2.0)

    def test_single_objective_equal_spacing(self):
        assert crowding_distance([(0,), (1,), (2,)])[1] == pytest.approx(1.0)

    def test_degenerate_objective(self):
        d = crowding_distance([(0, 5), (1, 5), (3, 5)])
        assert d[1] == pytest.approx(1.0)

    def test_duplicates(self):
        d = crowding_distance([(0,), (1,), (1,), (2,)])
        assert sorted(d)[:2] == [pytest.approx(0.5), pytest.approx(0.5)]
        d = crowding_distance([(0,), (0,), (0,), (1,)])
        assert 0.0 in d


class TestSelect:
    def test_single_front_by_crowding(self):
        pts = [(0, 4), (1, 3), (2, 2.5), (3, 1), (4, 0)]
        chosen = nsga2_select(items_for(pts), 3)
        # Interior crowding: (1,3) -> 0.875, (2,2.5) -> 1.0, (3,1) -> 1.125.
        assert {c.objectives for c in chosen} == {(0, 4), (4, 0), (3, 1)}

    def test_second_front_dropped(self):
        first = [(0, 3), (1, 2), (2, 1), (3, 0)]
        second = [(p[0] + 1, p[1] + 1) for p in first]
        chosen = nsga2_select(items_for(first + second), 4)
        assert {c.objectives for c in chosen} == set(first)

    def test_bounds(self):
        with pytest.raises(ValueError):
            nsga2_select(items_for([(0, 0)]), 2)

    def test_matches_eq8_oracle(self, rng):
        for _ in range(50):
            size = 2 * int(rng.integers(1, 17))
            items = items_for(random_points(rng, size))
            chosen = nsga2_select(items, size // 2)
            oracle = eq8_select(items, size // 2)
            assert [id(c) for c in sort_by_total_order(chosen)] == [id(c) for c in oracle]
            assert {id(c) for c in chosen} == {id(c) for c in oracle}

    def test_monotonicity(self, rng):
        for _ in range(50):
            items = items_for(random_points(rng, 30))
            chosen = nsga2_select(items, 15)
            ids = {id(c) for c in chosen}
            rejected = [it for it in items if id(it) not in ids]
            for s in chosen:
                for r in rejected:
                    assert s.rank < r.rank or (s.rank == r.rank and s.crowding >= r.crowding)


class TestGateObjectives:
    def test_negated_not_reciprocal(self):
        a = Agent(Genome(2), 0.0)
        assert gate_objectives(a) == (0.0, 0.0)

    def test_values(self):
        from conftest import random_genome

        g = random_genome(np.random.default_rng(0))
        assert gate_objectives(Agent(g, 3.5)) == (-3.5, float(g.n_gates))


class TestEvolveMoo:
    def test_single_member_species_survives_under_constant_fitness(self, rng):
        lone = Agent(Genome(2), 1.0)
        config = EvolutionConfig(n_wires=2, p_rot=1.0, p_cnot=1.0)
        (child,) = reproduce(Species(lone, [lone]), 1, config, InnovationRegistry(), rng, elitism=False)
        child.fitness = 1.0
        chosen = nsga2_select([RankedAgent(lone, gate_objectives(lone)), RankedAgent(child, gate_objectives(child))], 1)
        assert chosen[0].agent is lone

    def test_constant_fitness_gate_count_does_not_grow(self):
        means = []
        config = EvolutionConfig(generations=8, population=20, n_wires=2)
        evolve_moo(config, lambda g, r: 1.0, on_generation=lambda rec, pop: means.append(np.mean([a.genome.n_gates for a in pop])))
        assert all(b <= a + 1e-12 for a, b in zip(means, means[1:]))

    def test_records_fronts(self):
        config = EvolutionConfig(generations=3, population=12, n_wires=2)
        _, history = evolve_moo(config, lambda g, r: float(r.random()))
        for rec in history:
            assert sum(rec.front_sizes) == 12
            assert len(rec.best_objectives) == 2

    def test_deterministic_and_sized(self):
        sizes = []
        config = EvolutionConfig(generations=4, population=15, n_wires=2)
        run = lambda: evolve_moo(config, lambda g, r: float(g.n_rot + r.random()), on_generation=lambda rec, pop: sizes.append(len(pop)))[1]
        assert run() == run()
        assert set(sizes) == {15}
