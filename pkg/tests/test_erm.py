"""Exact ERM: dynamic program vs exhaustive search, and best-first enumeration."""

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from transel.classifiers import BoundaryHypothesis, TabularHypothesis
from transel.distributions import LabeledSample
from transel.erm import (
    SEARCH_EMPTY,
    SEARCH_FOUND,
    SEARCH_INCONCLUSIVE,
    BoundaryClassHierarchy,
    FiniteClassHierarchy,
    OneSidedThresholdHierarchy,
    empirical_disagreement,
    empirical_risk,
    erm_bruteforce,
    hypothesis_sort_key,
    mistake_count,
)


def _sample(xs, ys) -> LabeledSample:
    return LabeledSample(np.asarray(xs, dtype=float), np.asarray(ys, dtype=np.int8))


def _random_case(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 13))
    # one-decimal grid forces duplicate x values with conflicting labels
    xs = np.round(rng.uniform(0.0, 1.0, size=n), 1)
    ys = rng.choice([-1, 1], size=n)
    if rng.random() < 0.5:
        hierarchy = BoundaryClassHierarchy(max_level=int(rng.integers(0, 5)))
    else:
        hierarchy = OneSidedThresholdHierarchy(max_level=int(rng.integers(1, 5)))
    level = int(rng.integers(hierarchy.min_level, hierarchy.max_level + 1))
    return _sample(xs, ys), hierarchy, level


class TestCounting:
    def test_mistake_count(self):
        s = _sample([0.0, 0.5, 1.0], [1, -1, 1])
        h = BoundaryHypothesis((), 1)
        assert mistake_count(h, s) == 1
        assert empirical_risk(h, s) == pytest.approx(1 / 3)

    def test_empty_sample(self):
        s = _sample([], [])
        h = BoundaryHypothesis((), 1)
        assert mistake_count(h, s) == 0
        assert empirical_risk(h, s) == 0.0
        assert empirical_disagreement(h, h, s) == 0.0

    def test_disagreement(self):
        s = _sample([0.0, 1.0, 2.0, 3.0], [1, 1, 1, 1])
        h1 = BoundaryHypothesis((), 1)
        h2 = BoundaryHypothesis((1.5,), 1)
        assert empirical_disagreement(h1, h2, s) == pytest.approx(0.5)


class TestSortKey:
    def test_orders_by_count_then_cuts_then_sign(self):
        hs = [
            BoundaryHypothesis((0.5,), -1),
            BoundaryHypothesis((), -1),
            BoundaryHypothesis((0.5,), 1),
            BoundaryHypothesis((), 1),
            BoundaryHypothesis((0.25,), 1),
        ]
        ordered = sorted(hs, key=hypothesis_sort_key)
        assert ordered == [
            BoundaryHypothesis((), 1),
            BoundaryHypothesis((), -1),
            BoundaryHypothesis((0.25,), 1),
            BoundaryHypothesis((0.5,), 1),
            BoundaryHypothesis((0.5,), -1),
        ]

    def test_tabular_and_unknown(self):
        t = TabularHypothesis((0.0,), (1,))
        assert hypothesis_sort_key(t)[0] == 1
        with pytest.raises(TypeError):
            hypothesis_sort_key(object())


class TestDpAgainstBruteforce:
    @pytest.mark.parametrize("seed", range(80))
    def test_random_cases(self, seed):
        sample, hierarchy, level = _random_case(seed)
        budgets = hierarchy.flip_budgets(level)
        got = hierarchy.erm(sample, level)
        want = erm_bruteforce(sample, budgets)
        assert got.mistakes == want.mistakes
        assert got.hypothesis == want.hypothesis
        assert hierarchy.contains(got.hypothesis, level)
        assert mistake_count(got.hypothesis, sample) == got.mistakes

    def test_duplicate_points_with_conflicts(self):
        # each site carries a conflicting label, so one mistake per site is forced
        s = _sample([0.1, 0.1, 0.1, 0.7, 0.7], [1, 1, -1, -1, 1])
        h = BoundaryClassHierarchy(max_level=2)
        res = h.erm(s, 1)
        assert res.mistakes == erm_bruteforce(s, {1: 1, -1: 1}).mistakes == 2

    def test_separable_data_is_fit_exactly(self):
        truth = BoundaryHypothesis((0.3, 0.6), -1)
        xs = np.linspace(0.0, 1.0, 11)
        s = _sample(xs, truth.evaluate_many(xs))
        res = BoundaryClassHierarchy(max_level=3).erm(s, 2)
        assert res.mistakes == 0
        assert np.array_equal(res.hypothesis.evaluate_many(xs), s.ys)

    def test_empty_sample_constant(self):
        s = _sample([], [])
        res = BoundaryClassHierarchy(max_level=2).erm(s, 1)
        assert res.hypothesis == BoundaryHypothesis((), 1)
        assert res.mistakes == 0

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=120, deadline=None)
    def test_mistakes_match_property(self, seed):
        sample, hierarchy, level = _random_case(seed)
        got = hierarchy.erm(sample, level)
        want = erm_bruteforce(sample, hierarchy.flip_budgets(level))
        assert got.mistakes == want.mistakes

    def test_bruteforce_size_guard(self):
        s = _sample(np.arange(21.0), np.ones(21))
        with pytest.raises(ValueError):
            erm_bruteforce(s, {1: 1, -1: 1})


class TestBestFirstSearch:
    def test_accept_all_returns_canonical_erm(self):
        for seed in range(25):
            sample, hierarchy, level = _random_case(seed)
            res = hierarchy.search_min_mistakes(sample, level, lambda h, m: True)
            erm = hierarchy.erm(sample, level)
            assert res.status == SEARCH_FOUND
            assert res.hypothesis == erm.hypothesis
            assert res.mistakes == erm.mistakes

    def test_completions_in_nondecreasing_mistake_order(self):
        sample, _, _ = _random_case(3)
        hierarchy = BoundaryClassHierarchy(max_level=3)
        seen = []

        def log_all(h, m):
            seen.append(m)
            return False

        res = hierarchy.search_min_mistakes(sample, 2, log_all)
        assert res.status == SEARCH_EMPTY
        assert seen == sorted(seen)

    def test_targets_specific_hypothesis(self):
        xs = np.asarray([0.0, 0.25, 0.5, 0.75, 1.0])
        sample = _sample(xs, [1, -1, 1, -1, 1])
        hierarchy = BoundaryClassHierarchy(max_level=4)
        target = BoundaryHypothesis((0.125, 0.375), 1)
        res = hierarchy.search_min_mistakes(
            sample, 3, lambda h, m: h == target
        )
        assert res.status == SEARCH_FOUND
        assert res.hypothesis == target
        assert res.mistakes == mistake_count(target, sample)

    def test_mistake_cap_prunes_to_empty(self):
        sample = _sample([0.0, 1.0], [1, -1])
        hierarchy = BoundaryClassHierarchy(max_level=0)
        res = hierarchy.search_min_mistakes(
            sample, 0, lambda h, m: False, mistake_cap=0
        )
        assert res.status == SEARCH_EMPTY

    def test_pop_cap_reports_inconclusive(self):
        sample, _, _ = _random_case(11)
        hierarchy = BoundaryClassHierarchy(max_level=2)
        res = hierarchy.search_min_mistakes(
            sample, 2, lambda h, m: False, pop_cap=1
        )
        assert res.status == SEARCH_INCONCLUSIVE
        assert res.pops == 2

    def test_empty_sample_search(self):
        s = _sample([], [])
        hierarchy = BoundaryClassHierarchy(max_level=1)
        res = hierarchy.search_min_mistakes(s, 1, lambda h, m: h.first_sign == -1)
        assert res.status == SEARCH_FOUND
        assert res.hypothesis == BoundaryHypothesis((), -1)


class TestHierarchies:
    def test_boundary_budgets_and_dims(self):
        h = BoundaryClassHierarchy(max_level=3)
        assert h.flip_budgets(2) == {1: 2, -1: 2}
        assert [h.vc_dim(i) for i in range(4)] == [1, 2, 3, 4]

    def test_one_sided_budgets_and_dims(self):
        h = OneSidedThresholdHierarchy(max_level=3)
        assert h.flip_budgets(1) == {-1: 1, 1: 0}
        assert h.flip_budgets(2) == {-1: 2, 1: 1}
        assert [h.vc_dim(i) for i in (1, 2, 3)] == [1, 2, 3]

    def test_one_sided_containment(self):
        h = OneSidedThresholdHierarchy(max_level=3)
        threshold = BoundaryHypothesis((0.5,), -1)
        reversed_threshold = BoundaryHypothesis((0.5,), 1)
        assert h.contains(threshold, 1)
        assert not h.contains(reversed_threshold, 1)
        assert h.contains(reversed_threshold, 2)

    def test_nesting(self):
        h = BoundaryClassHierarchy(max_level=4)
        pts = tuple(np.linspace(0.0, 1.0, 5))
        for level in range(4):
            for hyp in h.enumerate_on(pts, level):
                assert h.contains(hyp, level + 1)

    def test_enumerate_respects_class(self):
        h = OneSidedThresholdHierarchy(max_level=2)
        pts = (0.0, 0.5, 1.0)
        for hyp in h.enumerate_on(pts, 1):
            assert h.contains(hyp, 1)

    def test_level_range_validation(self):
        h = BoundaryClassHierarchy(max_level=2)
        with pytest.raises(ValueError):
            h.flip_budgets(3)
        with pytest.raises(ValueError):
            OneSidedThresholdHierarchy(max_level=2, min_level=0)
        with pytest.raises(ValueError):
            BoundaryClassHierarchy(max_level=0, min_level=1)

    def test_spec_mirrors_hierarchy(self):
        h = BoundaryClassHierarchy(max_level=2, min_level=1)
        spec = h.spec
        assert (spec.min_level, spec.max_level) == (1, 2)
        assert spec.vc_dims == (2, 3)


class TestFiniteClassHierarchy:
    def _build(self):
        a = BoundaryHypothesis((), 1)
        b = BoundaryHypothesis((), -1)
        c = BoundaryHypothesis((0.5,), 1)
        return FiniteClassHierarchy({1: (a, b), 2: (a, b, c)}, vc_dims=(1, 2)), (a, b, c)

    def test_erm_uses_sort_key_ties(self):
        hier, (a, b, c) = self._build()
        s = _sample([0.25, 0.75], [1, -1])
        # a and b each make one mistake, c none at level 2
        assert hier.erm(s, 1).hypothesis == a
        assert hier.erm(s, 2).hypothesis == c

    def test_search_and_contains(self):
        hier, (a, b, c) = self._build()
        s = _sample([0.25, 0.75], [1, -1])
        res = hier.search_min_mistakes(s, 2, lambda h, m: h == b)
        assert res.status == SEARCH_FOUND and res.hypothesis == b
        assert hier.contains(c, 2) and not hier.contains(c, 1)

    def test_nesting_validation(self):
        a = BoundaryHypothesis((), 1)
        c = BoundaryHypothesis((0.5,), 1)
        with pytest.raises(ValueError):
            FiniteClassHierarchy({1: (a, c), 2: (a,)}, vc_dims=(1, 1))
        with pytest.raises(ValueError):
            FiniteClassHierarchy({1: (a,), 3: (a, c)}, vc_dims=(1, 2))
