from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrictype import spaces
from metrictype.spaces import FiniteSpace, StructureError

from conftest import random_metric_type_space


def brute_force_alpha(space: FiniteSpace, n: int) -> float:
    """Largest D(x, y) / chain cost over every chain in X^n, repeats allowed."""
    m = space.dist
    k = len(space)
    best = 1.0
    for i, j in itertools.permutations(range(k), 2):
        for chain in itertools.product(range(k), repeat=n):
            path = (i, *chain, j)
            cost = sum(m[a, b] for a, b in zip(path, path[1:]))
            if cost == 0:
                if m[i, j] > 0:
                    return math.inf
                continue
            best = max(best, m[i, j] / cost)
    return best


class TestFiniteSpace:
    def test_rejects_malformed_matrices(self):
        with pytest.raises(StructureError):
            FiniteSpace(["a", "b"], [[0, 1]])
        with pytest.raises(StructureError):
            FiniteSpace(["a", "b"], [[0, -1], [-1, 0]])
        with pytest.raises(StructureError):
            FiniteSpace(["a", "b"], [[0, float("nan")], [1, 0]])
        with pytest.raises(StructureError):
            FiniteSpace([], [])
        with pytest.raises(StructureError):
            FiniteSpace(["a", "a"], [[0, 1], [1, 0]])
        with pytest.raises(StructureError):
            FiniteSpace(["a"], [[0]], alpha=0.5)

    def test_json_round_trip(self, three_point):
        again = FiniteSpace.from_dict(json.loads(three_point.dumps()))
        assert again.points == three_point.points
        assert np.array_equal(again.dist, three_point.dist)
        assert again.alpha == three_point.alpha and again.chain_len == three_point.chain_len

    def test_unknown_point(self, three_point):
        with pytest.raises(StructureError):
            three_point.index("z")


class TestVerifyAxioms:
    def test_three_point_passes_with_two(self, three_point):
        assert spaces.verify_axioms(three_point).ok

    def test_three_point_fails_with_one_at_a_c(self, three_point):
        rep = spaces.verify_axioms(three_point.with_alpha(1.0))
        assert not rep.ok and not rep.d1 and not rep.d2
        assert rep.named_d3()[0] == ("a", "c", ("b",), 0.5, 0.45)
        assert {(x, y) for x, y, *_ in rep.named_d3()} == {("a", "c"), ("c", "a")}

    def test_single_point(self):
        assert spaces.verify_axioms(FiniteSpace(["a"], [[0.0]])).ok

    def test_reports_d1_and_d2(self):
        rep = spaces.verify_axioms(FiniteSpace(["a", "b"], [[0.1, 1.0], [2.0, 0.0]]))
        assert rep.d1 and rep.d2

    def test_rounding_noise_tolerated(self):
        sp = FiniteSpace(["a", "b", "c"], [[0, 1, 2 + 1e-15], [1, 0, 1], [2 + 1e-15, 1, 0]])
        assert spaces.verify_axioms(sp).ok

    def test_longer_chains(self):
        # a path metric 0-1-2-3 with the far pair stretched
        d = np.array([[0, 1, 2, 6], [1, 0, 1, 2], [2, 1, 0, 1], [6, 2, 1, 0]], float)
        sp = FiniteSpace(list("wxyz"), d, alpha=1.0, chain_len=2)
        rep = spaces.verify_axioms(sp)
        assert ("w", "z", ("x", "y"), 6.0, 3.0) in rep.named_d3()

    def test_sampled_interval(self, squared_interval):
        rep = spaces.verify_axioms_sampled(squared_interval, 64, seed=1)
        assert rep.ok and rep.sampled and rep.n_samples >= 64
        rep = spaces.verify_axioms_sampled(squared_interval.__class__(
            squared_interval.dist_fn, 1.0, squared_interval.sampler, squared_interval.grid,
            "alpha too small"), 64, seed=1)
        assert not rep.ok


class TestMinimalAlpha:
    def test_three_point(self, three_point):
        assert spaces.minimal_alpha(three_point, 1) == pytest.approx(10 / 9, abs=1e-12)

    def test_metric_is_one(self):
        x = np.array([0.0, 0.3, 1.0, 2.5])
        sp = FiniteSpace(list("abcd"), np.abs(x[:, None] - x[None, :]))
        assert spaces.minimal_alpha(sp) == 1.0

    def test_squared_interval_samples(self):
        x = np.linspace(0, 1, 64)
        sp = FiniteSpace(list(range(64)), (x[:, None] - x[None, :]) ** 2)
        assert 1.0 < spaces.minimal_alpha(sp) <= 2.0 * (1 + 1e-12)

    def test_unbounded(self):
        sp = FiniteSpace(list("abc"), [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
        assert spaces.minimal_alpha(sp) == math.inf

    @pytest.mark.parametrize("seed", range(15))
    def test_matches_exhaustive_chains(self, seed):
        rng = np.random.default_rng(seed)
        sp = random_metric_type_space(rng, int(rng.integers(2, 7)))
        for n in (1, 2, 3):
            assert spaces.minimal_alpha(sp, n) == pytest.approx(brute_force_alpha(sp, n), rel=1e-12)

    @pytest.mark.parametrize("seed", range(15))
    def test_non_decreasing_in_chain_length(self, seed):
        # a chain of n intermediates pads to n + 1 with a repeat, so costs only shrink
        rng = np.random.default_rng(100 + seed)
        sp = random_metric_type_space(rng, int(rng.integers(2, 7)))
        a = [spaces.minimal_alpha(sp, n) for n in (1, 2, 3)]
        assert a[0] <= a[1] * (1 + 1e-12) and a[1] <= a[2] * (1 + 1e-12)


@st.composite
def finite_spaces(draw):
    n = draw(st.integers(2, 7))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_metric_type_space(np.random.default_rng(seed), n)


@settings(max_examples=60, deadline=None)
@given(finite_spaces(), st.integers(1, 3))
def test_minimal_alpha_is_tight(sp, n):
    a = spaces.minimal_alpha(sp, n)
    sp_n = FiniteSpace(sp.points, sp.dist, alpha=a, chain_len=n)
    assert spaces.verify_axioms(sp_n).ok
    if a > 1:
        below = FiniteSpace(sp.points, sp.dist, alpha=a - 1e-9 * a, chain_len=n)
        assert not spaces.verify_axioms(below, rtol=0.0).ok


@settings(max_examples=60, deadline=None)
@given(finite_spaces(), st.floats(1e-3, 1e3))
def test_minimal_alpha_scale_invariant(sp, c):
    scaled = FiniteSpace(sp.points, sp.dist * c)
    assert spaces.minimal_alpha(scaled) == pytest.approx(spaces.minimal_alpha(sp), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(finite_spaces(), st.floats(1e-3, 2.0))
def test_epsilon_net_covers(sp, eps):
    net = spaces.greedy_epsilon_net(sp, eps)
    assert net.covers(sp)
    assert 1 <= len(net.centers) <= len(sp)


class TestEpsilonNet:
    def test_one_center_when_epsilon_is_large(self, three_point):
        assert len(spaces.greedy_epsilon_net(three_point, 0.5).centers) == 1

    def test_quarter(self, three_point):
        net = spaces.greedy_epsilon_net(three_point, 0.25)
        assert set(net.centers) in ({"a", "c"}, {"a", "b"})
        assert net.covers(three_point)

    def test_small_epsilon_keeps_everything(self, three_point):
        assert set(spaces.greedy_epsilon_net(three_point, 0.01).centers) == {"a", "b", "c"}

    def test_rejects_nonpositive(self, three_point):
        with pytest.raises(StructureError):
            spaces.greedy_epsilon_net(three_point, 0.0)
