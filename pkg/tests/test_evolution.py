"""NSGA-II machinery: sorting, crowding, operators, and the search loop."""

import random

import pytest

from evopatch.evolution import (
    EvolutionConfig,
    RepairProblem,
    crowding_distance,
    evolve,
    fast_nondominated_sort,
    hux_crossover,
    init_population,
    mutate,
)
from evopatch.fitness import EvalOutcome, EvaluationError, FitnessVector
from evopatch.patches import PatchGenome, decode_genome

from conftest import cand, loc, stmt


def fv(f1, f2) -> FitnessVector:
    return FitnessVector(float(f1), float(f2))


def oracle_fronts(fitnesses):
    """Brute force: peel non-dominated layers by O(N^2) pairwise dominance."""

    def dom(a, b):
        return a.f1 <= b.f1 and a.f2 <= b.f2 and (a.f1, a.f2) != (b.f1, b.f2)

    remaining = list(range(len(fitnesses)))
    fronts = []
    while remaining:
        layer = [
            i
            for i in remaining
            if not any(dom(fitnesses[j], fitnesses[i]) for j in remaining if j != i)
        ]
        fronts.append(sorted(layer))
        remaining = [i for i in remaining if i not in layer]
    return fronts


def random_lbs(rng, n=None):
    n = n or rng.randint(1, 6)
    out = []
    for i in range(n):
        out.append(
            stmt(
                loc("m.src", i + 1),
                susp=rng.random(),
                replace=[cand(f"r{i}_{k}") for k in range(rng.randint(0, 4))],
                insert=[cand(f"i{i}_{k}") for k in range(rng.randint(0, 4))],
            )
        )
    return out


def random_genome(rng, lbs) -> PatchGenome:
    b, u, p, q = [], [], [], []
    for s in lbs:
        b.append(rng.randint(0, 1))
        u.append(rng.randint(1, 3))
        p.append(rng.randrange(max(1, len(s.replacement_candidates))))
        q.append(rng.randrange(max(1, len(s.insertion_candidates))))
    return PatchGenome(tuple(b), tuple(u), tuple(p), tuple(q))


class TestSorting:
    def test_singleton(self):
        assert fast_nondominated_sort([fv(1, 0.5)]) == [[0]]

    def test_three_point_example(self):
        # (1,0.2) and (2,0.1) are incomparable; (2,0.3) is dominated by both.
        fronts = fast_nondominated_sort([fv(1, 0.2), fv(2, 0.1), fv(2, 0.3)])
        assert fronts == [[0, 1], [2]]

    def test_all_identical_in_one_front(self):
        fronts = fast_nondominated_sort([fv(1, 1)] * 5)
        assert fronts == [[0, 1, 2, 3, 4]]

    def test_agrees_with_brute_force_on_random_populations(self):
        rng = random.Random(314)
        for _ in range(500):
            size = rng.randint(1, 64)
            pop = [fv(rng.randint(0, 5), round(rng.random(), 3)) for _ in range(size)]
            got = [sorted(front) for front in fast_nondominated_sort(pop)]
            assert got == oracle_fronts(pop)


class TestCrowding:
    def test_small_fronts_all_infinite(self):
        assert crowding_distance([fv(1, 1)]) == [float("inf")]
        assert crowding_distance([fv(1, 1), fv(2, 0)]) == [float("inf")] * 2

    def test_three_point_diagonal(self):
        # middle point: (2-0)/2 per objective after range normalization = 1+1
        dist = crowding_distance([fv(0, 0), fv(1, 1), fv(2, 2)])
        assert dist[0] == float("inf") and dist[2] == float("inf")
        assert dist[1] == pytest.approx(2.0)

    def test_zero_range_objective_contributes_nothing(self):
        # all f2 equal: spacing comes from f1 alone
        dist = crowding_distance([fv(0, 7), fv(1, 7), fv(4, 7)])
        assert dist[1] == pytest.approx((4 - 0) / 4)

    def test_four_point_front_hand_values(self):
        # f1 sorted 0,1,3,6 (span 6); f2 sorted 0,4,5,6 (span 6)
        # (1,4): (3-0)/6 + (5-0)/6 = 4/3 ; (3,5): (6-1)/6 + (6-4)/6 = 7/6
        dist = crowding_distance([fv(0, 0), fv(1, 4), fv(3, 5), fv(6, 6)])
        assert dist[1] == pytest.approx(4 / 3, abs=1e-9)
        assert dist[2] == pytest.approx(7 / 6, abs=1e-9)


class TestHux:
    def test_identical_parents_give_identical_children(self):
        rng = random.Random(0)
        lbs = random_lbs(rng, 5)
        g = random_genome(rng, lbs)
        c1, c2 = hux_crossover(g, g, rng)
        assert c1 == g and c2 == g

    def test_single_difference_swaps_nothing(self):
        a = PatchGenome((0, 0), (1, 1), (0, 0), (0, 0))
        b = PatchGenome((0, 1), (1, 1), (0, 0), (0, 0))
        c1, c2 = hux_crossover(a, b, random.Random(1))
        assert (c1, c2) == (a, b)

    def test_four_differences_swap_exactly_two(self):
        a = PatchGenome((0, 0, 0, 0), (1, 1, 1, 1), (0, 0, 0, 0), (0, 0, 0, 0))
        b = PatchGenome((1, 1, 1, 1), (2, 2, 2, 2), (1, 1, 1, 1), (1, 1, 1, 1))
        seen_swap_sets = set()
        for seed in range(300):
            c1, c2 = hux_crossover(a, b, random.Random(seed))
            swapped = tuple(j for j in range(4) if c1.b[j] == 1)
            assert len(swapped) == 2
            # children mirror each other at every position
            for j in range(4):
                pair = {(c1.b[j], c1.u[j], c1.p[j], c1.q[j]), (c2.b[j], c2.u[j], c2.p[j], c2.q[j])}
                assert pair == {(0, 1, 0, 0), (1, 2, 1, 1)}
            seen_swap_sets.add(swapped)
        # all C(4,2)=6 possible selections occur across seeds
        assert len(seen_swap_sets) == 6

    def test_property_agreeing_positions_kept_and_half_swapped(self):
        rng = random.Random(424242)
        for _ in range(2000):
            lbs = random_lbs(rng)
            a, b = random_genome(rng, lbs), random_genome(rng, lbs)
            ta = list(zip(a.b, a.u, a.p, a.q))
            tb = list(zip(b.b, b.u, b.p, b.q))
            diff = [j for j in range(len(ta)) if ta[j] != tb[j]]
            c1, c2 = hux_crossover(a, b, rng)
            tc1 = list(zip(c1.b, c1.u, c1.p, c1.q))
            tc2 = list(zip(c2.b, c2.u, c2.p, c2.q))
            swapped = 0
            for j in range(len(ta)):
                if ta[j] == tb[j]:
                    assert tc1[j] == ta[j] and tc2[j] == ta[j]
                elif tc1[j] == tb[j]:
                    assert tc2[j] == ta[j]
                    swapped += 1
                else:
                    assert tc1[j] == ta[j] and tc2[j] == tb[j]
            assert swapped == len(diff) // 2

    def test_length_mismatch_rejected(self):
        a = PatchGenome((0,), (1,), (0,), (0,))
        b = PatchGenome((0, 1), (1, 1), (0, 0), (0, 0))
        with pytest.raises(ValueError):
            hux_crossover(a, b, random.Random(0))


class TestMutate:
    def test_flips_the_only_position(self):
        lbs = [stmt(loc("m.src", 1))]
        g = PatchGenome((0,), (1,), (0,), (0,))
        mutated = mutate(g, lbs, random.Random(0))
        assert mutated.b == (1,)

    def test_b_hamming_distance_is_exactly_one(self):
        rng = random.Random(77)
        for _ in range(500):
            lbs = random_lbs(rng)
            g = random_genome(rng, lbs)
            mutated = mutate(g, lbs, rng)
            assert sum(x != y for x, y in zip(g.b, mutated.b)) == 1

    def test_untouched_positions_unchanged_and_indices_in_range(self):
        rng = random.Random(78)
        for _ in range(500):
            lbs = random_lbs(rng)
            g = random_genome(rng, lbs)
            mutated = mutate(g, lbs, rng)
            j = next(i for i in range(len(g)) if g.b[i] != mutated.b[i])
            for i in range(len(g)):
                if i != j:
                    assert (g.b[i], g.u[i], g.p[i], g.q[i]) == (
                        mutated.b[i],
                        mutated.u[i],
                        mutated.p[i],
                        mutated.q[i],
                    )
            for i, s in enumerate(lbs):
                assert 0 <= mutated.p[i] < max(1, len(s.replacement_candidates))
                assert 0 <= mutated.q[i] < max(1, len(s.insertion_candidates))

    def test_empty_candidate_ranges_stay_zero(self):
        lbs = [stmt(loc("m.src", 1))]  # no candidates
        for seed in range(20):
            mutated = mutate(PatchGenome((0,), (1,), (0,), (0,)), lbs, random.Random(seed))
            assert mutated.p == (0,) and mutated.q == (0,)


class TestInit:
    def test_deterministic_for_equal_seeds(self):
        rng_a, rng_b = random.Random(5), random.Random(5)
        lbs = random_lbs(random.Random(1), 4)
        cfg = EvolutionConfig(pop_size=10, generations=1)
        pop_a = init_population(lbs, cfg, rng_a)
        pop_b = init_population(lbs, cfg, rng_b)
        assert [i.genome for i in pop_a] == [i.genome for i in pop_b]

    def test_mu_one_with_max_susp_always_enables(self):
        lbs = [stmt(loc("m.src", 1), susp=1.0, replace=[cand("x")])]
        cfg = EvolutionConfig(pop_size=10, generations=1, mu=1.0)
        pop = init_population(lbs, cfg, random.Random(3))
        assert all(ind.genome.b == (1,) for ind in pop)

    def test_indices_within_candidate_ranges(self):
        rng = random.Random(9)
        for _ in range(50):
            lbs = random_lbs(rng)
            cfg = EvolutionConfig(pop_size=8, generations=1)
            for ind in init_population(lbs, cfg, rng):
                for i, s in enumerate(lbs):
                    assert 0 <= ind.genome.p[i] < max(1, len(s.replacement_candidates))
                    assert 0 <= ind.genome.q[i] < max(1, len(s.insertion_candidates))

    def test_config_invariants_enforced(self):
        with pytest.raises(ValueError):
            EvolutionConfig(pop_size=5)  # odd
        with pytest.raises(ValueError):
            EvolutionConfig(mu=0.0)
        with pytest.raises(ValueError):
            EvolutionConfig(stop_mode="bogus")


def synthetic_problem(lbs, oracle_edits):
    """An in-memory evaluator: f2 falls to 0 only for the oracle edit list."""

    def evaluate(genome):
        edits = decode_genome(genome, lbs)
        key = tuple((str(e.location), e.kind, e.text) for e in edits)
        f1 = float(len(edits))
        if key == oracle_edits:
            return EvalOutcome(FitnessVector(f1, 0.0), True)
        overlap = len(set(key) & set(oracle_edits))
        f2 = 1.0 - 0.4 * overlap / max(1, len(oracle_edits))
        return EvalOutcome(FitnessVector(f1, f2), False)

    def validate(genome):
        edits = decode_genome(genome, lbs)
        return tuple((str(e.location), e.kind, e.text) for e in edits) == oracle_edits

    def key(genome):
        return tuple(
            (str(e.location), e.kind, e.text) for e in decode_genome(genome, lbs)
        )

    def render(genome):
        return repr(key(genome))

    return RepairProblem(lbs, evaluate, validate, key, render)


class TestEvolve:
    def _lbs(self):
        return [
            stmt(
                loc("m.src", i + 1),
                susp=1.0,
                replace=[cand(f"r{i}_{k}") for k in range(5)],
                insert=[cand(f"i{i}_{k}") for k in range(5)],
            )
            for i in range(3)
        ]

    def test_finds_injected_oracle_and_counts_evaluations(self):
        lbs = self._lbs()
        oracle = (("m.src:2-2", "replace", "r1_3"),)
        problem = synthetic_problem(lbs, oracle)
        cfg = EvolutionConfig(pop_size=8, generations=30, mu=0.2)
        result = evolve(problem, cfg, random.Random(42))
        assert result.archive, "oracle patch should be discovered"
        first = result.archive[0]
        assert first.f1 == 1.0 and first.f2 == 0.0
        assert 1 <= first.evaluations_at_discovery <= result.evaluations
        assert result.archive == sorted(
            result.archive, key=lambda e: e.evaluations_at_discovery
        )

    def test_full_budget_evaluation_count_is_exact(self):
        # N initial + N offspring per generation, no early stop
        lbs = self._lbs()
        problem = synthetic_problem(lbs, (("nope", "delete", ""),))
        cfg = EvolutionConfig(pop_size=6, generations=4, stop_mode="full_budget")
        result = evolve(problem, cfg, random.Random(1))
        assert result.evaluations == 6 * (4 + 1)
        assert result.stopped_by == "generations"
        assert len(result.generations) == 5

    def test_first_plausible_stops_early(self):
        lbs = self._lbs()
        oracle = (("m.src:1-1", "replace", "r0_0"),)
        problem = synthetic_problem(lbs, oracle)
        cfg = EvolutionConfig(pop_size=8, generations=50, mu=0.3, stop_mode="first_plausible")
        result = evolve(problem, cfg, random.Random(7))
        assert result.archive
        assert result.stopped_by == "first_plausible"
        full = evolve(
            synthetic_problem(lbs, oracle),
            EvolutionConfig(pop_size=8, generations=50, mu=0.3),
            random.Random(7),
        )
        assert result.evaluations <= full.evaluations

    def test_identical_seeds_reproduce_identical_runs(self):
        lbs = self._lbs()
        oracle = (("m.src:2-2", "replace", "r1_3"),)
        runs = []
        for _ in range(2):
            result = evolve(
                synthetic_problem(lbs, oracle),
                EvolutionConfig(pop_size=8, generations=15, mu=0.2),
                random.Random(123),
            )
            runs.append(result)
        assert [e.diff for e in runs[0].archive] == [e.diff for e in runs[1].archive]
        assert runs[0].generations == runs[1].generations
        assert runs[0].evaluations == runs[1].evaluations

    def test_jobs_do_not_change_the_outcome(self):
        lbs = self._lbs()
        oracle = (("m.src:3-3", "replace", "r2_1"),)
        results = []
        for jobs in (1, 3):
            cfg = EvolutionConfig(pop_size=8, generations=10, mu=0.2, jobs=jobs)
            results.append(evolve(synthetic_problem(lbs, oracle), cfg, random.Random(5)))
        assert [e.diff for e in results[0].archive] == [e.diff for e in results[1].archive]
        assert results[0].generations == results[1].generations

    def test_evaluator_failure_aborts_with_partial_report(self):
        lbs = self._lbs()

        calls = {"n": 0}

        def flaky(genome):
            calls["n"] += 1
            if calls["n"] > 10:
                raise EvaluationError("adapter exploded")
            return EvalOutcome(FitnessVector(0.0, 1.0), False)

        problem = RepairProblem(lbs, flaky, lambda g: False, lambda g: (), lambda g: "")
        cfg = EvolutionConfig(pop_size=8, generations=5)
        result = evolve(problem, cfg, random.Random(2))
        assert result.error == "adapter exploded"
        assert result.stopped_by == "error"

    def test_wall_clock_limit_stops_the_loop(self):
        lbs = self._lbs()
        problem = synthetic_problem(lbs, (("never", "delete", ""),))
        cfg = EvolutionConfig(pop_size=8, generations=10_000, wall_clock_limit=0.0)
        result = evolve(problem, cfg, random.Random(2))
        assert result.stopped_by == "wall_clock"
        assert result.evaluations == 8  # only the initial population
