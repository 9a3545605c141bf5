from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrictype import solvers
from metrictype.maps import affine, affine_section, bilinear, identity
from metrictype.solvers import SolverConfig

from conftest import contraction_case

half = affine(0.5)
quarter_sum = bilinear(0.25, 0.25)


class TestConfig:
    @pytest.mark.parametrize("kw", [{"tol": 0}, {"max_iter": 0}, {"ratio_source": "guess"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)


class TestBounds:
    def test_sound_bound_is_tight_for_halving(self):
        # D(x_n, 0) = 4^-n and K r^n d0 / (1 - K r) = 2 * 4^-n * (1/4) / (1/2)
        for n in range(10):
            assert solvers.apriori_bound(2, 0.25, n, 0.25) == 4.0 ** -n

    def test_naive_bound_undershoots_for_halving(self):
        assert solvers.naive_apriori_bound(2, 0.25, 0, 0.25) == pytest.approx(2 / 3)
        assert solvers.naive_apriori_bound(2, 0.25, 0, 0.25) < 1.0  # true D(x_0, x*) is 1

    def test_invalid_ratio(self):
        assert solvers.apriori_bound(2, 0.5, 3, 1.0) == math.inf
        assert solvers.apriori_bound(2, 0.5, 3, 0.0) == 0.0


class TestPicard:
    def test_halving_closed_form(self, squared_interval):
        x, tr = solvers.picard(squared_interval, half, 1.0, 0.25)
        assert tr.converged and x == 2.0 ** -tr.iterations
        assert tr.step_dists == [0.25 ** n * 0.25 for n in range(tr.iterations + 1)]
        for n, p in enumerate(tr.iterates):
            assert p * p <= tr.apriori_bounds[n] * (1 + 1e-9)
        assert tr.apriori_bounds[-1] < 1e-10
        assert all(b1 <= b0 for b0, b1 in zip(tr.apriori_bounds, tr.apriori_bounds[1:]))

    def test_identity_from_any_point(self, squared_interval):
        x, tr = solvers.picard(squared_interval, identity, 0.3, 0.0)
        assert x == 0.3 and tr.iterations == 0 and tr.converged

    def test_ratio_invalid(self, squared_interval):
        x, tr = solvers.picard(squared_interval, half, 1.0, 0.5)
        assert tr.terminated == solvers.RATIO_INVALID and x == 1.0 and tr.iterations == 0

    def test_breach(self, squared_interval):
        with pytest.raises(solvers.CertificateBreach) as exc:
            solvers.picard(squared_interval, affine(0.9), 1.0, 0.25)
        assert exc.value.step == 1 and exc.value.observed == pytest.approx(0.81)

    def test_max_iter(self, squared_interval):
        x, tr = solvers.picard(squared_interval, half, 1.0, 0.25, SolverConfig(max_iter=3))
        assert tr.terminated == solvers.MAX_ITER and tr.iterations == 3

    def test_fixed_point_half(self, squared_interval):
        x, tr = solvers.picard(squared_interval, affine(0.5, 0.25), 0.0, 0.25)
        assert tr.converged and abs(x - 0.5) ** 2 <= 1e-10

    def test_empirical(self, squared_interval):
        x, tr = solvers.picard(squared_interval, half, 1.0, cfg=SolverConfig(ratio_source="empirical"))
        assert tr.converged and tr.ratio == 0.25 and tr.ratio_source == "empirical"

    def test_empirical_rejects_slow_maps(self, squared_interval):
        x, tr = solvers.picard(squared_interval, affine(0.9), 1.0, cfg=SolverConfig(ratio_source="empirical"))
        assert tr.terminated == solvers.RATIO_INVALID

    def test_finite_space_exact_zero_step(self):
        sp, f, ratio, attractor = contraction_case(3)
        x, tr = solvers.picard(sp, f, sp.points[-1], ratio)
        assert tr.converged and x == attractor and tr.step_dists[-1] == 0

    @pytest.mark.parametrize("x0", [1.0, 0.7, 0.3])
    def test_sound_bound_over_trace(self, squared_interval, x0):
        x, tr = solvers.picard(squared_interval, half, x0, 0.25)
        for n, p in enumerate(tr.iterates):
            assert squared_interval.d(p, x) <= tr.apriori_bounds[n] * (1 + 1e-9)

    def test_deterministic(self, squared_interval):
        a = solvers.picard(squared_interval, half, 0.7, 0.25)[1]
        b = solvers.picard(squared_interval, half, 0.7, 0.25)[1]
        assert a.to_csv() == b.to_csv() and a.summary() == b.summary()


class TestTraceFiles:
    def test_real_round_trip(self, squared_interval):
        _, tr = solvers.picard(squared_interval, half, 0.7, 0.25)
        again = solvers.ConvergenceTrace.from_files(tr.to_csv(), json.loads(json.dumps(tr.summary())))
        assert again == tr

    def test_label_round_trip(self):
        sp, f, ratio, _ = contraction_case(5)
        _, tr = solvers.picard(sp, f, sp.points[-1], ratio)
        again = solvers.ConvergenceTrace.from_files(tr.to_csv(), json.loads(json.dumps(tr.summary())))
        assert again == tr

    def test_coupled_round_trip(self, squared_interval):
        _, tr = solvers.coupled_solve(squared_interval, quarter_sum, identity, identity, 1.0, 0.5, 0.25)
        again = solvers.ConvergenceTrace.from_files(tr.to_csv(), json.loads(json.dumps(tr.summary())))
        assert again == tr


class TestFamily:
    def test_identical_halvings(self, squared_interval):
        fam = {0: half, 1: half}
        x, tr = solvers.family_solve(squared_interval, fam, 1, 0, 1.0, 1 / 8)
        assert tr.converged and x * x <= 1e-10
        assert tr.residuals["alpha"] <= 1e-10 and tr.residuals["beta"] <= 1e-10
        assert tr.ratio == 0.25

    def test_start_at_common_fixed_point(self, squared_interval):
        x, tr = solvers.family_solve(squared_interval, {0: half, 1: affine(0.25)}, 1, 0, 0.0, 1 / 8)
        assert x == 0.0 and tr.iterations == 0 and tr.residuals == {"alpha": 0.0, "beta": 0.0}

    def test_distinct_contractions(self, squared_interval):
        x, tr = solvers.family_solve(squared_interval, {1: affine(1 / 3), 2: affine(1 / 4)}, 2, 1, 1.0, 1 / 8)
        assert tr.converged and x * x <= 1e-10
        ratios = [b / a for a, b in zip(tr.step_dists, tr.step_dists[1:])]
        assert ratios[:2] == pytest.approx([9 / 64, 4 / 81])
        assert max(ratios) <= 0.25

    def test_ratio_invalid(self, squared_interval):
        _, tr = solvers.family_solve(squared_interval, {0: half}, 0, 0, 1.0, 0.5)
        assert tr.terminated == solvers.RATIO_INVALID

    def test_common_fixed_point_failure(self, squared_interval):
        fam = {0: affine(0.5), 1: affine(0.5, 0.25)}
        with pytest.raises(solvers.CommonFixedPointFailure):
            solvers.family_solve(squared_interval, fam, 1, 0, 1.0, 1 / 8, SolverConfig(max_iter=200))


class TestCoupled:
    def test_quarter_sum_example(self, squared_interval):
        (x, y), tr = solvers.coupled_solve(squared_interval, quarter_sum, identity, identity, 1.0, 1.0, 0.25)
        assert tr.converged and tr.iterations <= 40
        assert max(tr.residuals.values()) <= 1e-10
        assert x == y == 2.0 ** -18

    def test_already_coincidence(self, squared_interval):
        pair, tr = solvers.coupled_solve(squared_interval, quarter_sum, identity, identity, 0.0, 0.0, 0.25)
        assert pair == (0.0, 0.0) and tr.iterations == 0

    def test_halving_g(self, squared_interval):
        # F(c, c) = c / 2 = g(c), so every diagonal pair is a coincidence point
        pair, tr = solvers.coupled_solve(squared_interval, quarter_sum, half, affine_section(0.5),
                                         1.0, 1.0, 0.25)
        assert pair == (1.0, 1.0) and tr.iterations == 0
        pair, tr = solvers.coupled_solve(squared_interval, quarter_sum, half, affine_section(0.5),
                                         1.0, 0.2, 0.25)
        assert pair == (0.6, 0.6) and tr.iterations == 1

    def test_section_violation(self, squared_interval):
        with pytest.raises(solvers.SectionError):
            solvers.coupled_solve(squared_interval, quarter_sum, half, identity, 1.0, 0.0, 0.25)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_swap_symmetry(self, x0, y0):
        from metrictype.spaces import power_interval
        sp = power_interval(0, 1, 2)
        (x, y), a = solvers.coupled_solve(sp, quarter_sum, identity, identity, x0, y0, 0.25)
        (u, v), b = solvers.coupled_solve(sp, quarter_sum, identity, identity, y0, x0, 0.25)
        assert (u, v) == (y, x)
        assert b.iterates == [(q, p) for p, q in a.iterates]


class TestCommonFixedPoint:
    def test_quarter_sum_example(self, squared_interval):
        pair, _ = solvers.coupled_solve(squared_interval, quarter_sum, identity, identity, 1.0, 1.0, 0.25)
        cfp = solvers.coupled_common_fixed_point(squared_interval, quarter_sum, identity, pair)
        assert cfp.ok and squared_interval.d(cfp.z, 0.0) <= 1e-8 and cfp.residuals["diagonal"] == 0

    def test_constant(self, squared_interval):
        cfp = solvers.coupled_common_fixed_point(squared_interval, lambda x, y: 0.3, identity, (0.3, 0.3))
        assert cfp.ok and cfp.z == 0.3

    def test_halving_g_at_zero(self, squared_interval):
        cfp = solvers.coupled_common_fixed_point(squared_interval, quarter_sum, half, (0.0, 0.0))
        assert cfp.ok and cfp.z == 0.0

    def test_halving_g_elsewhere_is_not_fixed(self, squared_interval):
        cfp = solvers.coupled_common_fixed_point(squared_interval, quarter_sum, half, (1.0, 1.0))
        assert cfp.status == "not_fixed" and cfp.z == 0.5

    def test_not_coincidence(self, squared_interval):
        cfp = solvers.coupled_common_fixed_point(squared_interval, quarter_sum, identity, (1.0, 0.0))
        assert cfp.status == "not_coincidence" and cfp.z is None

    def test_off_diagonal(self, squared_interval):
        F = lambda x, y: x
        cfp = solvers.coupled_common_fixed_point(squared_interval, F, identity, (0.2, 0.8))
        assert cfp.status == "off_diagonal"

    def test_not_w_compatible(self, squared_interval):
        F = lambda x, y: 0.5
        g = lambda x: 0.5 if x == 0.25 else x * x
        cfp = solvers.coupled_common_fixed_point(squared_interval, F, g, (0.25, 0.25))
        assert cfp.status == "not_w_compatible"
