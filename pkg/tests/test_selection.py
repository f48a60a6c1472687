import math
import warnings

import numpy as np
import pytest

from conftest import separated_problem
from gtnar.estimator import fit
from gtnar.selection import default_kappa, qic, select


class _Fake:
    def __init__(self, q_value, n_groups, tss=1.0):
        self.q_value = q_value
        self.n_groups = n_groups
        self.tss = tss


class TestQIC:
    def test_no_penalty(self):
        assert qic(_Fake(5.0, (2, 2)), 0.0) == math.log(5.0)

    def test_penalty_linear(self):
        a = qic(_Fake(3.0, (2, 2)), 0.07)
        b = qic(_Fake(3.0, (3, 4)), 0.07)
        assert b - a == pytest.approx(0.07 * 3, abs=1e-15)

    def test_direct_value(self):
        assert qic(_Fake(math.e**2, (2, 3)), 0.1) == pytest.approx(2.5, abs=1e-15)

    def test_perfect_fit(self):
        with pytest.warns(RuntimeWarning):
            assert qic(_Fake(0.0, (1, 1)), 0.1) == -math.inf


class TestKappa:
    def test_closed_form(self):
        assert default_kappa(math.exp(8)) == pytest.approx(1 / (40 * 8 * math.e), rel=1e-12)

    def test_t20(self):
        exact = 1.0 / (40.0 * math.log(20.0) * 20.0**0.125)
        assert default_kappa(20) == pytest.approx(exact, rel=1e-14)
        assert default_kappa(20) == pytest.approx(0.00575, rel=5e-3)

    def test_decreasing(self):
        vals = [default_kappa(t) for t in range(2, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_rejects_short(self):
        with pytest.raises(ValueError):
            default_kappa(1)


@pytest.fixture(scope="module")
def noiseless():
    return separated_problem((20, 15), 10, (2, 2), noise_sd=0.0, seed=1)


@pytest.fixture(scope="module")
def noisy():
    return separated_problem((20, 15), 10, (2, 2), noise_sd=1.0, seed=2)


class TestSelect:
    def test_single_tuple(self, noisy):
        res = select(noisy.design, (1, 1), seed=0)
        assert len(res.grid) == 1 and res.chosen == (1, 1)

    def test_noiseless_truth(self, noiseless):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = select(noiseless.design, (3, 3), seed=0)
        assert res.chosen == (2, 2)

    def test_no_penalty_picks_largest(self, noisy):
        res = select(noisy.design, (3, 3), kappa=0.0, seed=0)
        assert res.chosen == (3, 3)

    def test_chosen_is_minimum(self, noisy):
        res = select(noisy.design, (2, 3), seed=4)
        best = min(e.qic for e in res.grid)
        assert next(e for e in res.grid if e.n_groups == res.chosen).qic == best

    def test_order_invariant(self, noisy):
        a = select(noisy.design, (2, 2), seed=7)
        b = select(noisy.design, (2, 2), seed=7, order=[3, 1, 2, 0])
        assert a.chosen == b.chosen
        assert [e.qic for e in a.grid] == [e.qic for e in b.grid]

    def test_tie_break_smaller(self, noiseless):
        # every tuple at or above the truth fits exactly; the smallest wins
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = select(noiseless.design, (3, 3), seed=0)
        tied = [e.n_groups for e in res.grid if e.qic == -math.inf]
        assert res.chosen == min(tied, key=lambda g: (sum(g), g))

    def test_grid_serializes(self, noisy):
        res = select(noisy.design, (2, 1), seed=0)
        doc = res.to_dict()
        assert doc["chosen"] == list(res.chosen)
        assert len(doc["grid"]) == 2
        assert "QIC" in res.table()

    def test_reuses_fit(self, noisy):
        res = select(noisy.design, (2, 2), seed=3)
        assert res.best_fit.n_groups == res.chosen
        direct = fit(noisy.design, (1, 1))
        np.testing.assert_allclose(res.grid[0].objective, direct.q_value)
