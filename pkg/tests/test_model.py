import numpy as np
import pytest

from conftest import Problem, random_params
from gtnar.exceptions import UnstableParametersError
from gtnar.model import (
    CovariatePanel,
    GroupedParameters,
    TensorSeries,
    example_parameters,
    flatten_theta,
    gen_covariates,
    node_feature,
    simulate,
    stability_check,
)
from gtnar.networks import GroupAssignment, row_normalize
from oracles import loop_feature, loop_mean, loop_simulate


def zero_params(n_groups, n_covariates, noise_sd=0.0):
    return GroupedParameters(
        [np.zeros(g) for g in n_groups],
        [np.zeros((g, p)) for g, p in zip(n_groups, n_covariates)],
        np.zeros(tuple(n_groups)),
        noise_sd,
    )


def ring(n):
    return row_normalize(np.roll(np.eye(n), 1, axis=1))


class TestStability:
    def test_zero(self):
        rep = stability_check(zero_params((2, 2), (1, 1)))
        assert rep.stable and rep.value == 0

    def test_unstable(self):
        p = GroupedParameters([np.array([0.5]), np.array([0.4])], [np.zeros((1, 0))] * 2, np.full((1, 1), 0.2))
        rep = stability_check(p)
        assert not rep.stable
        assert np.isclose(rep.value, 1.1)

    def test_two_tuples(self):
        p = GroupedParameters(
            [np.array([0.3, -0.3]), np.array([0.2])], [np.zeros((2, 0)), np.zeros((1, 0))], np.full((2, 1), 0.1)
        )
        rep = stability_check(p)
        assert rep.stable
        assert np.isclose(rep.value, 0.6)
        assert rep.worst_tuple == (0, 0)

    def test_simulate_refuses_unstable(self):
        p = GroupedParameters([np.array([0.6]), np.array([0.6])], [np.zeros((1, 0))] * 2, np.zeros((1, 1)))
        mem = [GroupAssignment(np.zeros(3, dtype=int), 1)] * 2
        with pytest.raises(UnstableParametersError):
            simulate(p, [ring(3), ring(3)], mem, None, 4)


class TestParameters:
    def test_xi_round_trip(self, rng):
        p = random_params(rng, (2, 3), (2, 1))
        back = GroupedParameters.from_xi(p.to_xi(), p.n_groups, p.n_covariates)
        np.testing.assert_array_equal(back.to_xi(), p.to_xi())
        assert p.n_params == 2 * 3 + 3 * 2 + 6

    def test_permuted(self, rng):
        p = random_params(rng, (3, 2), (1, 1))
        perms = [np.array([2, 0, 1]), np.array([1, 0])]
        q = p.permuted(perms)
        for g in range(3):
            assert q.lambdas[0][perms[0][g]] == p.lambdas[0][g]
        assert q.alpha[perms[0][1], perms[1][0]] == p.alpha[1, 0]

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            GroupedParameters([np.array([np.nan])], [np.zeros((1, 0))], np.zeros(1))

    def test_example_parameters(self):
        p = example_parameters((3, 3), (3, 3))
        assert stability_check(p).stable
        thetas = p.theta(0)
        gaps = [np.linalg.norm(thetas[a] - thetas[b]) for a in range(3) for b in range(a)]
        assert min(gaps) >= 0.5


class TestSimulate:
    def test_zero_parameters(self):
        p = zero_params((1, 1), (2, 2), noise_sd=0.0)
        mem = [GroupAssignment(np.zeros(3, dtype=int), 1), GroupAssignment(np.zeros(2, dtype=int), 1)]
        cov = gen_covariates((2, 2), (3, 2), 5, seed=0)
        y = simulate(p, [ring(3), ring(2)], mem, cov, 5, seed=1)
        assert y.values.shape == (6, 3, 2)
        assert not y.values.any()

    def test_first_step_zero_without_covariates(self, rng):
        p = random_params(rng, (1, 1), (0, 0), noise_sd=0.0)
        mem = [GroupAssignment(np.zeros(3, dtype=int), 1)] * 2
        y = simulate(p, [ring(3), ring(3)], mem, None, 3)
        assert not y.values[1].any()

    def test_hand_set_two_by_two(self):
        p = GroupedParameters(
            [np.array([0.3]), np.array([-0.2])],
            [np.array([[0.5]]), np.array([[1.0]])],
            np.array([[0.4]]),
            noise_sd=1.0,
        )
        mem = [GroupAssignment(np.zeros(2, dtype=int), 1)] * 2
        nets = [ring(2), ring(2)]
        cov = gen_covariates((1, 1), (2, 2), 2, seed=3)
        y, noise = simulate(p, nets, mem, cov, 2, seed=4, return_noise=True)
        ref = loop_simulate(p.lambdas, p.zetas, p.alpha, [n.weights for n in nets], [m.labels for m in mem], cov.values, noise)
        np.testing.assert_allclose(y.values, ref, rtol=1e-12, atol=1e-14)

    def test_deterministic(self):
        prob_a = Problem((4, 3), 5, (2, 2), seed=11)
        prob_b = Problem((4, 3), 5, (2, 2), seed=11)
        np.testing.assert_array_equal(prob_a.series.values, prob_b.series.values)

    def test_noise_identity(self, small_problem):
        pb = small_problem
        theta = flatten_theta(pb.params, pb.memberships)
        for t in range(1, pb.series.n_times + 1):
            for idx in np.ndindex(*pb.series.dims):
                f = node_feature(pb.series, pb.networks, pb.covariates, idx, t)
                resid = pb.series.values[t][idx] - f @ theta[idx]
                assert abs(resid - pb.noise[t][idx]) < 1e-12

    def test_long_horizon_bounded(self):
        p = example_parameters((2, 2), (1, 1))
        mem = [GroupAssignment(np.array([0, 1, 0]), 2), GroupAssignment(np.array([1, 0]), 2)]
        cov = gen_covariates((1, 1), (3, 2), 2000, seed=0)
        y = simulate(p, [ring(3), ring(2)], mem, cov, 2000, seed=1)
        assert np.all(np.isfinite(y.values))
        assert np.abs(y.values).max() < 50

    def test_burn_in(self):
        p = example_parameters((1, 1), (1, 1), noise_sd=0.5)
        mem = [GroupAssignment(np.zeros(3, dtype=int), 1)] * 2
        cov = gen_covariates((1, 1), (3, 3), 15, seed=0)
        y = simulate(p, [ring(3), ring(3)], mem, cov, 10, burn_in=5, seed=2)
        assert y.n_times == 10
        assert y.values[0].any()
        with pytest.raises(ValueError):
            simulate(p, [ring(3), ring(3)], mem, cov, 10, seed=2)

    def test_shape_checks(self):
        p = example_parameters((1, 1), (1, 1))
        mem = [GroupAssignment(np.zeros(3, dtype=int), 1)] * 2
        with pytest.raises(ValueError):
            simulate(p, [ring(3), ring(4)], mem, gen_covariates((1, 1), (3, 3), 4), 4)


class TestCovariates:
    def test_empty_panel(self):
        cov = gen_covariates((0, 0), (3, 2), 4, seed=0)
        assert cov.n_covariates == (0, 0)

    def test_moments(self):
        cov = gen_covariates((2,), (400,), 100, seed=5)
        means = cov.values[0].reshape(-1, 2).mean(axis=0)
        assert np.all(np.abs(means) < 3 * 3 / np.sqrt(40000))

    def test_deterministic(self):
        a = gen_covariates((2, 1), (5, 4), 3, seed=1)
        b = gen_covariates((2, 1), (5, 4), 3, seed=1)
        for u, v in zip(a.values, b.values):
            np.testing.assert_array_equal(u, v)

    def test_single_intercept_mode(self):
        vals = [np.ones((3, 2, 1)), np.ones((3, 2, 1))]
        CovariatePanel(vals, (True, False))
        with pytest.raises(ValueError):
            CovariatePanel(vals, (True, True))


class TestNodeFeature:
    def test_zero_lag(self):
        y = TensorSeries(np.zeros((3, 3, 3)))
        cov = gen_covariates((2, 1), (3, 3), 2, seed=0)
        f = node_feature(y, [ring(3), ring(3)], cov, (1, 2), 1)
        np.testing.assert_array_equal(f, [0, *cov.values[0][0, 1], 0, *cov.values[1][0, 2], 0])

    def test_isolated_node(self, rng):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 2] = 1
        net = row_normalize(a)
        y = TensorSeries(rng.normal(size=(3, 3, 3)))
        f = node_feature(y, [net, ring(3)], None, (2, 0), 2)
        assert f[0] == 0.0

    def test_matches_definition(self, rng):
        y = rng.normal(size=(4, 3, 3))
        a = [(rng.random((3, 3)) < 0.6).astype(float) for _ in range(2)]
        for m in a:
            np.fill_diagonal(m, 0)
        nets = [row_normalize(m) for m in a]
        cov = gen_covariates((2, 1), (3, 3), 3, seed=1)
        for t in range(1, 4):
            for idx in np.ndindex(3, 3):
                f = node_feature(TensorSeries(y), nets, cov, idx, t)
                ref = loop_feature(y, [n.weights for n in nets], cov.values, idx, t)
                np.testing.assert_array_equal(f, ref)

    def test_out_of_range(self):
        y = TensorSeries(np.zeros((3, 2, 2)))
        with pytest.raises(IndexError):
            node_feature(y, [ring(2), ring(2)], None, (0, 0), 3)
        with pytest.raises(IndexError):
            node_feature(y, [ring(2), ring(2)], None, (0, 2), 1)


class TestFlattenTheta:
    def test_single_group(self, rng):
        p = random_params(rng, (1, 1), (2, 1))
        mem = [GroupAssignment(np.zeros(4, dtype=int), 1), GroupAssignment(np.zeros(3, dtype=int), 1)]
        theta = flatten_theta(p, mem)
        assert np.all(theta == theta[0, 0])

    def test_factorizes(self, rng):
        p = random_params(rng, (2, 2), (1, 1))
        mem = [GroupAssignment(np.array([0, 1, 1, 0]), 2), GroupAssignment(np.array([1, 0, 1]), 2)]
        theta = flatten_theta(p, mem)
        for i in range(4):
            for j in range(3):
                gi, gj = mem[0].labels[i], mem[1].labels[j]
                expected = np.concatenate([p.theta(0)[gi], p.theta(1)[gj], [p.alpha[gi, gj]]])
                np.testing.assert_array_equal(theta[i, j], expected)

    def test_inner_product_is_mean(self, rng):
        for seed in range(5):
            pb = Problem((3, 4), 3, (2, 2), (1, 2), seed=seed)
            theta = flatten_theta(pb.params, pb.memberships)
            for t in range(1, 4):
                x_t = [x[t - 1] for x in pb.x]
                ref = loop_mean(pb.series.values[t - 1], pb.params.lambdas, pb.params.zetas, pb.params.alpha, pb.weights, pb.labels, x_t)
                for idx in np.ndindex(3, 4):
                    f = node_feature(pb.series, pb.networks, pb.covariates, idx, t)
                    assert abs(f @ theta[idx] - ref[idx]) <= 1e-12 * max(1.0, abs(ref[idx]))
