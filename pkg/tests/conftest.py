import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gtnar import (  # noqa: E402
    GroupAssignment,
    GroupedParameters,
    example_parameters,
    gen_covariates,
    gen_sbm,
    make_design,
    row_normalize,
    simulate,
    stability_check,
)
from gtnar.experiment import balanced_memberships  # noqa: E402


def random_params(rng, n_groups, n_covariates, scale=0.3, noise_sd=1.0):
    """Random parameters satisfying the stability condition."""
    q = len(n_groups)
    while True:
        lambdas = [rng.uniform(-scale, scale, g) / q for g in n_groups]
        zetas = [rng.normal(size=(g, p)) for g, p in zip(n_groups, n_covariates)]
        alpha = rng.uniform(-scale, scale, tuple(n_groups))
        p = GroupedParameters(lambdas, zetas, alpha, noise_sd)
        if stability_check(p).stable:
            return p


def random_labels(rng, n, g):
    """Labels with every group present (requires n >= g)."""
    lab = np.concatenate([np.arange(g), rng.integers(0, g, n - g)])
    rng.shuffle(lab)
    return GroupAssignment(lab, g)


def random_network(rng, n, p=0.4):
    a = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(a, 0.0)
    return row_normalize(a)


class Problem:
    def __init__(self, dims, n_times, n_groups, n_covariates=None, noise_sd=1.0, seed=0, params=None, sbm=True):
        rng = np.random.default_rng(seed)
        q = len(dims)
        n_covariates = n_covariates or (2,) * q
        self.params = params or random_params(rng, n_groups, n_covariates, noise_sd=noise_sd)
        self.memberships = [balanced_memberships(n, g, rng) for n, g in zip(dims, n_groups)]
        if sbm:
            self.networks = [gen_sbm(n, m, seed=rng) for n, m in zip(dims, self.memberships)]
        else:
            self.networks = [random_network(rng, n) for n in dims]
        self.covariates = gen_covariates(self.params.n_covariates, dims, n_times, rng)
        self.series, self.noise = simulate(
            self.params, self.networks, self.memberships, self.covariates, n_times, seed=rng, return_noise=True
        )
        self.design = make_design(self.series, self.networks, self.covariates)

    # plain-array views for the loop oracles
    @property
    def weights(self):
        return [n.weights for n in self.networks]

    @property
    def labels(self):
        return [m.labels for m in self.memberships]

    @property
    def x(self):
        return self.covariates.values


def separated_problem(dims, n_times, n_groups, noise_sd=1.0, seed=0, n_covariates=None):
    q = len(dims)
    params = example_parameters(n_groups, n_covariates or (3,) * q, noise_sd)
    return Problem(dims, n_times, n_groups, params.n_covariates, noise_sd, seed, params=params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_problem():
    return Problem((4, 3), 6, (2, 2), (2, 1), seed=7)
