import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from bhreduce.limits import (
    corollary1_mrca,
    corollary2_mrca,
    event_predictor,
    intermediate_reduced_limit,
    local_limit_predictor,
    regularized_gamma_p,
    survival_predictor,
    theorem1_limit,
    theorem1_tail_bound,
    theorem2_limit,
    yaglom_cdf,
    yaglom_laplace,
)
from bhreduce.models import ModelConstants
from bhreduce.schedules import parse_schedule
from bhreduce.simulate import EventSpec


class TestIncompleteGamma:
    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.5, 50, size=1000)
        x = rng.uniform(0.0, 100, size=1000)
        ours = np.array([regularized_gamma_p(ai, xi) for ai, xi in zip(a, x)])
        ref = scipy.special.gammainc(a, x)
        assert np.allclose(ours, ref, rtol=1e-12, atol=1e-14)

    def test_against_quadrature(self):
        # independent oracle: adaptive quadrature of the defining integral
        rng = np.random.default_rng(1)
        for _ in range(1000):
            j = int(rng.integers(1, 12))
            z = rng.uniform(0.01, 30)
            quad, _ = scipy.integrate.quad(
                lambda u: u ** (j - 1) * math.exp(-u) / math.factorial(j - 1), 0, z
            )
            assert regularized_gamma_p(j, z) == pytest.approx(quad, abs=1e-9)

    def test_boundaries(self):
        assert regularized_gamma_p(3.0, 0.0) == 0.0
        assert regularized_gamma_p(1.0, 50.0) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            regularized_gamma_p(-1.0, 1.0)
        with pytest.raises(ValueError):
            regularized_gamma_p(1.0, -1.0)


class TestTheorem1:
    def test_j1_values(self):
        assert theorem1_limit(1, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
        assert theorem1_limit(2, 1.0) == pytest.approx(1 - 2 * math.exp(-1), abs=1e-12)

    @pytest.mark.parametrize("y", [0.25, 1.0, 4.0])
    def test_normalization(self, y):
        total = sum(theorem1_limit(j, y) for j in range(1, 201))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_tail_bound(self):
        y = 0.25
        tail = 1.0 - sum(theorem1_limit(j, y) for j in range(1, 51))
        assert 0 <= tail <= theorem1_tail_bound(50, y)

    def test_within_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            j = int(rng.integers(1, 40))
            y = float(rng.uniform(0.05, 20))
            assert 0.0 <= theorem1_limit(j, y) <= 1.0

    def test_guards(self):
        with pytest.raises(ValueError):
            theorem1_limit(0, 1.0)
        with pytest.raises(ValueError):
            theorem1_limit(1, 0.0)


class TestCorollary1:
    def test_value(self):
        assert corollary1_mrca(1.0) == pytest.approx(0.6321206, abs=1e-7)

    def test_limit_at_large_y(self):
        assert abs(corollary1_mrca(1e6) - 1.0) < 1e-6

    def test_reduces_to_theorem1(self):
        for y in np.linspace(0.1, 10, 25):
            assert corollary1_mrca(y) == pytest.approx(theorem1_limit(1, y), abs=1e-12)

    def test_strictly_increasing_and_bounded(self):
        ys = np.linspace(0.05, 50, 200)
        vals = [corollary1_mrca(y) for y in ys]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert all(v <= 1.0 for v in vals)


class TestTheorem2:
    def test_value(self):
        expected = 0.5 * (1 - math.exp(-2)) / (1 - math.exp(-1))
        assert theorem2_limit(1, 0.5, 1.0) == pytest.approx(expected, abs=1e-12)
        assert theorem2_limit(1, 0.5, 1.0) == pytest.approx(0.683940, abs=1e-6)

    @pytest.mark.parametrize("x", [0.3, 0.5, 0.7])
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
    def test_normalization(self, x, a):
        total = sum(theorem2_limit(j, x, a) for j in range(1, 401))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_boundary_small_x(self):
        assert theorem2_limit(1, 1e-6, 1.0) == pytest.approx(1.0, abs=1e-5)

    def test_guards(self):
        for bad in ((0, 0.5, 1.0), (1, 0.0, 1.0), (1, 1.0, 1.0), (1, 0.5, 0.0)):
            with pytest.raises(ValueError):
                theorem2_limit(*bad)


class TestCorollary2:
    def test_value(self):
        assert corollary2_mrca(0.5, 1.0) == pytest.approx(0.683940, abs=1e-6)

    def test_boundary_x1(self):
        assert corollary2_mrca(1.0, 2.0) == pytest.approx(1.0, abs=1e-12)

    def test_identity_with_theorem2(self):
        for x in np.linspace(0.05, 0.95, 19):
            for a in (0.5, 1.0, 2.0):
                assert corollary2_mrca(x, a) == pytest.approx(
                    theorem2_limit(1, 1.0 - x, a), abs=1e-12
                )

    def test_strictly_increasing_in_x(self):
        xs = np.linspace(0.02, 0.999, 100)
        vals = [corollary2_mrca(x, 1.0) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert all(v <= 1.0 for v in vals)


class TestYaglom:
    def test_laplace(self):
        assert yaglom_laplace(1.0) == 0.5
        assert yaglom_laplace(0.0) == 1.0

    def test_cdf_median(self):
        assert yaglom_cdf(math.log(2)) == pytest.approx(0.5, abs=1e-15)
        assert yaglom_cdf(-1.0) == 0.0


class TestPredictors:
    consts = ModelConstants(mu=1.0, sigma2=2.0, B=1.0, is_lattice=True)

    def test_survival(self):
        assert survival_predictor(self.consts, 100) == pytest.approx(0.01)

    def test_event_small_pop(self):
        phi = parse_schedule("const:10")
        ev = EventSpec("small-pop", phi=phi)
        assert event_predictor(self.consts, 100, ev) == pytest.approx(1e-3)

    def test_event_band(self):
        ev = EventSpec("linear-band", a=1.0)
        assert event_predictor(self.consts, 100, ev) == pytest.approx(
            (1 - math.exp(-1)) / 100
        )

    def test_event_survival_kind(self):
        assert event_predictor(self.consts, 50, EventSpec("survival")) == pytest.approx(
            0.02
        )

    def test_local_limit(self):
        assert local_limit_predictor(self.consts, 10, 10) == pytest.approx(
            math.exp(-1) / 100
        )


class TestIntermediate:
    def test_values(self):
        assert intermediate_reduced_limit(1, 0.5) == 0.5
        assert intermediate_reduced_limit(3, 0.5) == 0.125

    def test_normalization(self):
        total = sum(intermediate_reduced_limit(j, 0.5) for j in range(1, 200))
        assert total == pytest.approx(1.0, abs=1e-12)
