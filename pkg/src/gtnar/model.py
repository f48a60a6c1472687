"""Grouped tensor network autoregression: parameters, data containers and simulation.

For a tensor series ``Y_t`` of shape ``(N_1, ..., N_q)`` the model reads

    Y_t = sum_l (Y_{t-1} x_l W_l) x_l diag(lam_l[g_l]) + A * Y_{t-1}
          + sum_l broadcast_l(X_{l,t} zeta_l[g_l]) + E_t

where ``g_l`` are the mode-``l`` group labels and ``A`` holds the
self-momentum of each group tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._rng import make_rng
from .exceptions import UnstableParametersError
from .networks import GroupAssignment, NetworkLayer
from .tensor import DenseTensor, mode_dot


@dataclass
class GroupedParameters:
    """Group-level coefficients.

    Attributes
    ----------
    lambdas : list of ndarray, each of shape (G_l,)
        Network effects per mode.
    zetas : list of ndarray, each of shape (G_l, p_l)
        Covariate effects per mode.
    alpha : ndarray of shape (G_1, ..., G_q)
        Self-momentum per group tuple.
    noise_sd : float
    """

    lambdas: list
    zetas: list
    alpha: np.ndarray
    noise_sd: float = 1.0

    def __post_init__(self):
        self.lambdas = [np.atleast_1d(np.asarray(v, dtype=float)) for v in self.lambdas]
        self.zetas = [
            np.asarray(z, dtype=float).reshape(lam.size, -1) for z, lam in zip(self.zetas, self.lambdas)
        ]
        if len(self.zetas) != len(self.lambdas):
            raise ValueError("need one zeta matrix per mode")
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(self.n_groups)
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        for arr in (*self.lambdas, *self.zetas, self.alpha):
            if not np.all(np.isfinite(arr)):
                raise ValueError("parameters must be finite")

    @property
    def order(self) -> int:
        return len(self.lambdas)

    @property
    def n_groups(self) -> tuple[int, ...]:
        return tuple(lam.size for lam in self.lambdas)

    @property
    def n_covariates(self) -> tuple[int, ...]:
        return tuple(z.shape[1] for z in self.zetas)

    @property
    def n_params(self) -> int:
        return n_params(self.n_groups, self.n_covariates)

    def theta(self, mode: int) -> np.ndarray:
        """``(G_l, p_l + 1)`` matrix of rows ``(lambda_g, zeta_g)``."""
        return np.column_stack([self.lambdas[mode], self.zetas[mode]])

    def to_xi(self) -> np.ndarray:
        """Stack into the block order (theta_1, ..., theta_q, vec(alpha))."""
        parts = [self.theta(l).ravel() for l in range(self.order)]
        parts.append(self.alpha.ravel(order="F"))
        return np.concatenate(parts)

    @classmethod
    def from_xi(cls, xi, n_groups: Sequence[int], n_covariates: Sequence[int], noise_sd=1.0):
        xi = np.asarray(xi, dtype=float)
        if xi.size != n_params(n_groups, n_covariates):
            raise ValueError(f"xi has length {xi.size}, expected {n_params(n_groups, n_covariates)}")
        lambdas, zetas, pos = [], [], 0
        for g, p in zip(n_groups, n_covariates):
            block = xi[pos : pos + g * (p + 1)].reshape(g, p + 1)
            lambdas.append(block[:, 0].copy())
            zetas.append(block[:, 1:].copy())
            pos += g * (p + 1)
        alpha = xi[pos:].reshape(tuple(n_groups), order="F").copy()
        return cls(lambdas, zetas, alpha, noise_sd)

    def permuted(self, perms: Sequence[np.ndarray]) -> "GroupedParameters":
        """Relabel groups: new group ``perms[l][g]`` takes the values of old group ``g``."""
        lambdas, zetas = [], []
        alpha = self.alpha
        for l, perm in enumerate(perms):
            inv = np.argsort(np.asarray(perm))
            lambdas.append(self.lambdas[l][inv])
            zetas.append(self.zetas[l][inv])
            alpha = np.take(alpha, inv, axis=l)
        return GroupedParameters(lambdas, zetas, alpha, self.noise_sd)


def n_params(n_groups: Sequence[int], n_covariates: Sequence[int]) -> int:
    return int(sum(g * (p + 1) for g, p in zip(n_groups, n_covariates)) + np.prod(n_groups))


def feature_length(n_covariates: Sequence[int]) -> int:
    return int(sum(p + 1 for p in n_covariates) + 1)


@dataclass
class CovariatePanel:
    """Per-mode exogenous covariates.

    ``values[l]`` has shape ``(T, N_l, p_l)``; row ``t - 1`` holds the
    covariates entering the equation for ``Y_t``. ``intercept[l]`` flags that
    column 0 of mode ``l`` is a constant.
    """

    values: list
    intercept: tuple = ()

    def __post_init__(self):
        self.values = [np.asarray(v, dtype=float) for v in self.values]
        for v in self.values:
            if v.ndim != 3:
                raise ValueError("covariate arrays must have shape (T, N_l, p_l)")
            if not np.all(np.isfinite(v)):
                raise ValueError("covariates must be finite")
        if len({v.shape[0] for v in self.values}) > 1:
            raise ValueError("covariate panels disagree on T")
        self.intercept = tuple(bool(b) for b in self.intercept) or (False,) * len(self.values)
        if len(self.intercept) != len(self.values):
            raise ValueError("need one intercept flag per mode")
        if sum(self.intercept) > 1:
            raise ValueError(
                "intercept columns in more than one mode make the model unidentifiable; "
                "keep the intercept in a single mode"
            )

    @property
    def n_times(self) -> int:
        return self.values[0].shape[0]

    @property
    def n_covariates(self) -> tuple[int, ...]:
        return tuple(v.shape[2] for v in self.values)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(v.shape[1] for v in self.values)

    def tail(self, n_times: int) -> "CovariatePanel":
        return CovariatePanel([v[-n_times:] for v in self.values], self.intercept)

    @classmethod
    def empty(cls, dims: Sequence[int], n_times: int) -> "CovariatePanel":
        return cls([np.zeros((n_times, n, 0)) for n in dims])


@dataclass
class TensorSeries:
    """Observations ``Y_0, ..., Y_T`` stored as one array of shape ``(T + 1, *dims)``."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim < 2:
            raise ValueError("series needs a time axis and at least one mode")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series entries must be finite")

    @property
    def n_times(self) -> int:
        """Number of transitions ``T`` (one less than the number of snapshots)."""
        return self.values.shape[0] - 1

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def __getitem__(self, t) -> DenseTensor:
        return DenseTensor.from_array(self.values[t])

    def __len__(self):
        return self.values.shape[0]


class StabilityReport(NamedTuple):
    stable: bool
    worst_tuple: tuple
    value: float


def stability_check(params: GroupedParameters) -> StabilityReport:
    """Check ``max |sum_l lambda_l[g_l] + alpha[g]| < 1`` over all group tuples."""
    total = params.alpha.copy()
    for l, lam in enumerate(params.lambdas):
        shape = [1] * params.order
        shape[l] = lam.size
        total = total + lam.reshape(shape)
    absval = np.abs(total)
    worst = np.unravel_index(int(np.argmax(absval)), absval.shape)
    value = float(absval[worst])
    return StabilityReport(value < 1.0, tuple(int(i) for i in worst), value)


def _check_inputs(params, networks, memberships, covariates, dims=None):
    q = params.order
    if len(networks) != q or len(memberships) != q:
        raise ValueError(f"need {q} networks and membership vectors")
    sizes = tuple(net.size for net in networks)
    if dims is not None and tuple(dims) != sizes:
        raise ValueError(f"series dims {tuple(dims)} do not match network sizes {sizes}")
    for l, (net, mem) in enumerate(zip(networks, memberships)):
        if len(mem) != net.size:
            raise ValueError(f"mode {l}: {len(mem)} memberships for {net.size} nodes")
        if mem.n_groups != params.n_groups[l]:
            raise ValueError(
                f"mode {l}: memberships use {mem.n_groups} groups, parameters have {params.n_groups[l]}"
            )
    if covariates is not None:
        if covariates.dims != sizes:
            raise ValueError(f"covariate node counts {covariates.dims} do not match {sizes}")
        if covariates.n_covariates != params.n_covariates:
            raise ValueError(
                f"covariate dims {covariates.n_covariates} do not match parameters {params.n_covariates}"
            )
    return sizes


def momentum_tensor(params: GroupedParameters, memberships) -> np.ndarray:
    return params.alpha[np.ix_(*[m.labels for m in memberships])]


def one_step_mean(prev, params, networks, memberships, covariates, t):
    """Conditional mean of ``Y_t`` given ``Y_{t-1} = prev`` (``t`` is 1-based)."""
    q = params.order
    mean = momentum_tensor(params, memberships) * prev
    for l in range(q):
        lam = params.lambdas[l][memberships[l].labels]
        mean = mean + mode_dot(mode_dot(prev, networks[l].weights, l), np.diag(lam), l)
        if covariates is not None and params.n_covariates[l] > 0:
            x = covariates.values[l][t - 1]
            beta = np.einsum("ip,ip->i", x, params.zetas[l][memberships[l].labels])
            shape = [1] * q
            shape[l] = beta.size
            mean = mean + beta.reshape(shape)
    return mean


def simulate(
    params: GroupedParameters,
    networks: Sequence[NetworkLayer],
    memberships: Sequence[GroupAssignment],
    covariates: CovariatePanel | None,
    n_times: int,
    burn_in: int = 0,
    seed=None,
    return_noise: bool = False,
):
    """Draw ``Y_0 = 0, Y_1, ..., Y_{burn_in + T}`` and keep the last ``T + 1`` snapshots.

    With ``burn_in > 0`` the covariate panel must cover ``burn_in + T`` steps;
    the returned series then lines up with ``covariates.tail(T)``.
    """
    sizes = _check_inputs(params, networks, memberships, covariates)
    report = stability_check(params)
    if not report.stable:
        raise UnstableParametersError(
            f"parameters violate the stability condition: |sum| = {report.value:.4g} "
            f"at group tuple {report.worst_tuple}"
        )
    steps = int(burn_in) + int(n_times)
    if covariates is not None and covariates.n_times != steps:
        raise ValueError(f"covariates cover {covariates.n_times} steps, need {steps}")
    rng = make_rng(seed)
    y = np.zeros((steps + 1, *sizes))
    noise = np.zeros_like(y)
    for t in range(1, steps + 1):
        noise[t] = params.noise_sd * rng.standard_normal(sizes)
        y[t] = one_step_mean(y[t - 1], params, networks, memberships, covariates, t) + noise[t]
    series = TensorSeries(y[burn_in:])
    if return_noise:
        return series, noise[burn_in:]
    return series


def gen_covariates(n_covariates: Sequence[int], dims: Sequence[int], n_times: int, seed=None):
    """Standard normal covariates, independent across nodes, times and columns."""
    rng = make_rng(seed)
    return CovariatePanel(
        [rng.standard_normal((int(n_times), int(n), int(p))) for p, n in zip(n_covariates, dims)]
    )


def network_regressor(prev: np.ndarray, network: NetworkLayer, mode: int) -> np.ndarray:
    return mode_dot(prev, network.weights, mode)


def node_feature(series: TensorSeries, networks, covariates, index, t) -> np.ndarray:
    """Regression feature of one cell at time ``t`` (1-based, ``1 <= t <= T``).

    Layout: (network regressor, covariates) for each mode, then the lagged value.
    """
    y = series.values
    if not 1 <= t <= series.n_times:
        raise IndexError(f"t={t} outside 1..{series.n_times}")
    index = tuple(int(i) for i in index)
    if len(index) != y.ndim - 1 or any(not 0 <= i < n for i, n in zip(index, series.dims)):
        raise IndexError(f"cell index {index} out of range for dims {series.dims}")
    prev = y[t - 1]
    parts = []
    for l, net in enumerate(networks):
        fiber = prev[index[:l] + (slice(None),) + index[l + 1 :]]
        parts.append([net.weights[index[l]] @ fiber])
        if covariates is not None:
            parts.append(covariates.values[l][t - 1, index[l]])
    parts.append([prev[index]])
    return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])


def flatten_theta(params: GroupedParameters, memberships) -> np.ndarray:
    """Node-level parameter tensor of shape ``(N_1, ..., N_q, m)``.

    The last axis uses the same layout as :func:`node_feature`, so the model
    mean of a cell is the inner product of the two.
    """
    dims = tuple(len(m) for m in memberships)
    q = len(dims)
    blocks = []
    for l in range(q):
        theta = params.theta(l)[memberships[l].labels]
        shape = [1] * q + [theta.shape[1]]
        shape[l] = dims[l]
        blocks.append(np.broadcast_to(theta.reshape(shape), dims + (theta.shape[1],)))
    blocks.append(momentum_tensor(params, memberships)[..., None])
    return np.concatenate(blocks, axis=-1)


def group_tuples(n_groups: Sequence[int]):
    """All group tuples in vec order (first mode fastest)."""
    return [tuple(reversed(t)) for t in itertools.product(*[range(g) for g in reversed(n_groups)])]


def example_parameters(n_groups: Sequence[int], n_covariates: Sequence[int], noise_sd=1.0) -> GroupedParameters:
    """Deterministic, stable parameter set with well separated groups.

    Network effects of mode ``l`` are spread evenly over ``[-0.6/q, 0.6/q]``;
    covariate effects put 1 on one coordinate and -0.5 elsewhere (sign-flipped
    once the coordinates run out); self-momentum falls from 0.2 to -0.2
    along the total group index. ``max |sum lambda + alpha| <= 0.8``.
    """
    q = len(n_groups)
    amp = 0.6 / q
    lambdas, zetas = [], []
    for l, (g_l, p_l) in enumerate(zip(n_groups, n_covariates)):
        lam = np.zeros(g_l) if g_l == 1 else amp * (1 - 2 * np.arange(g_l) / (g_l - 1))
        z = np.full((g_l, p_l), -0.5)
        for g in range(g_l):
            if p_l:
                z[g, (g + l) % p_l] = 1.0
                if g >= p_l:
                    z[g] = -z[g]
        lambdas.append(lam)
        zetas.append(z)
    span = sum(g - 1 for g in n_groups)
    alpha = np.zeros(tuple(n_groups))
    for tup in itertools.product(*[range(g) for g in n_groups]):
        alpha[tup] = 0.2 if span == 0 else 0.2 - 0.4 * sum(tup) / span
    return GroupedParameters(lambdas, zetas, alpha, noise_sd)
