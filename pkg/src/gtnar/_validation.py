"""Input coercion shared by the functional API and the estimator classes."""

from __future__ import annotations

import numpy as np

from .model import CovariatePanel, TensorSeries
from .networks import GroupAssignment, NetworkLayer, row_normalize


def check_series(data) -> TensorSeries:
    if isinstance(data, TensorSeries):
        return data
    return TensorSeries(np.asarray(data, dtype=float))


def check_networks(networks, dims) -> list[NetworkLayer]:
    if isinstance(networks, (NetworkLayer, np.ndarray)):
        networks = [networks]
    out = [net if isinstance(net, NetworkLayer) else row_normalize(net) for net in networks]
    sizes = tuple(net.size for net in out)
    if sizes != tuple(dims):
        raise ValueError(f"network sizes {sizes} do not match series dims {tuple(dims)}")
    return out


def check_covariates(covariates, dims, n_times) -> CovariatePanel:
    if covariates is None:
        return CovariatePanel.empty(dims, n_times)
    if not isinstance(covariates, CovariatePanel):
        covariates = CovariatePanel(list(covariates))
    if covariates.dims != tuple(dims):
        raise ValueError(f"covariate node counts {covariates.dims} do not match {tuple(dims)}")
    if covariates.n_times != n_times:
        raise ValueError(f"covariates cover {covariates.n_times} steps, series has {n_times}")
    return covariates


def check_n_groups(n_groups, order) -> tuple[int, ...]:
    if np.isscalar(n_groups):
        n_groups = (int(n_groups),) * order
    n_groups = tuple(int(g) for g in n_groups)
    if len(n_groups) != order or any(g < 1 for g in n_groups):
        raise ValueError(f"need {order} positive group counts, got {n_groups}")
    return n_groups


def check_memberships(memberships, dims, n_groups=None) -> list[GroupAssignment]:
    out = []
    for l, m in enumerate(memberships):
        if not isinstance(m, GroupAssignment):
            m = GroupAssignment(np.asarray(m), n_groups[l] if n_groups else 0)
        if len(m) != dims[l]:
            raise ValueError(f"mode {l}: {len(m)} labels for {dims[l]} nodes")
        if n_groups and m.n_groups != n_groups[l]:
            raise ValueError(f"mode {l}: labels use {m.n_groups} groups, expected {n_groups[l]}")
        out.append(m)
    if len(out) != len(dims):
        raise ValueError(f"need memberships for {len(dims)} modes")
    return out
