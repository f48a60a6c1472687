"""Alternating least squares for group-wise parameters and latent memberships.

Each iteration solves the normal equations for all coefficients given the
memberships (Step 1), then reassigns every node of every mode to the group
that minimizes the squared residuals of its slice (Step 2).

All routines work on a :class:`Design`, which caches the lagged network
regressors and the per-cell Gram matrices summed over time. Those statistics
do not depend on the memberships, so assembling the normal system for a new
partition only aggregates cells by group tuple.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from sklearn.cluster import KMeans

from ._rng import make_rng, spawn_seeds
from ._validation import check_covariates, check_memberships, check_n_groups, check_networks, check_series
from .exceptions import EmptyGroupError, GTNARError, SingularSystemError
from .model import GroupedParameters, n_params
from .networks import GroupAssignment

logger = logging.getLogger(__name__)

RCOND_THRESHOLD = 1e-12


class Design:
    """Cached regressors of a tensor series.

    Attributes
    ----------
    response, lag : ndarray of shape (T, *dims)
        ``Y_1..Y_T`` and ``Y_0..Y_{T-1}``.
    net_reg : list of ndarray of shape (T, *dims)
        ``Y_{t-1} x_l W_l`` for every mode.
    cov : list of ndarray of shape (T, N_l, p_l)
    """

    def __init__(self, series, networks, covariates=None):
        series = check_series(series)
        self.series = series
        self.dims = tuple(series.dims)
        self.order = len(self.dims)
        self.n_times = series.n_times
        if self.n_times < 1:
            raise ValueError("need at least two snapshots")
        self.networks = check_networks(networks, self.dims)
        self.covariates = check_covariates(covariates, self.dims, self.n_times)
        y = series.values
        self.response = y[1:]
        self.lag = y[:-1]
        self.net_reg = [
            np.moveaxis(np.tensordot(net.weights, self.lag, axes=([1], [l + 1])), 0, l + 1)
            for l, net in enumerate(self.networks)
        ]
        self.cov = self.covariates.values
        self.n_covariates = self.covariates.n_covariates
        self.offsets = np.cumsum([0] + [p + 1 for p in self.n_covariates]).tolist()
        self.n_features = self.offsets[-1] + 1
        self.n_obs = int(self.n_times * np.prod(self.dims))
        self.tss = float(np.sum(self.response**2))
        self._gram = None

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    def broadcast_cov(self, mode: int, values: np.ndarray) -> np.ndarray:
        """Expand a (T, N_l, ...) array of mode-``mode`` quantities over the other modes."""
        shape = [values.shape[0]] + [1] * self.order + list(values.shape[2:])
        shape[mode + 1] = self.dims[mode]
        return values.reshape(shape)

    def features(self) -> np.ndarray:
        """Full feature array of shape ``(T, *dims, m)``."""
        full = self.response.shape
        cols = []
        for l in range(self.order):
            cols.append(self.net_reg[l][..., None])
            if self.n_covariates[l]:
                cols.append(np.broadcast_to(self.broadcast_cov(l, self.cov[l]), full + (self.n_covariates[l],)))
        cols.append(self.lag[..., None])
        return np.concatenate(cols, axis=-1)

    def cell_statistics(self):
        """Per-cell ``sum_t f f^T`` and ``sum_t f y``, flattened over cells (C order)."""
        if self._gram is None:
            f = self.features().reshape(self.n_times, self.n_cells, self.n_features)
            y = self.response.reshape(self.n_times, self.n_cells)
            f_c = np.ascontiguousarray(f.transpose(1, 2, 0))
            gram = f_c @ f_c.transpose(0, 2, 1)
            cross = np.einsum("cat,tc->ca", f_c, y)
            self._gram = (gram, cross)
        return self._gram


def make_design(series, networks, covariates=None) -> Design:
    return series if isinstance(series, Design) else Design(series, networks, covariates)


# -- parameter layout -------------------------------------------------------


def theta_offset(n_groups, n_covariates, mode, group) -> int:
    base = sum(g * (p + 1) for g, p in zip(n_groups[:mode], n_covariates[:mode]))
    return int(base + group * (n_covariates[mode] + 1))


def alpha_offset(n_groups, n_covariates, group_tuple) -> int:
    base = sum(g * (p + 1) for g, p in zip(n_groups, n_covariates))
    return int(base + np.ravel_multi_index(tuple(group_tuple), tuple(n_groups), order="F"))


def parameter_names(n_groups, n_covariates) -> list[str]:
    names = []
    for l, (g_l, p_l) in enumerate(zip(n_groups, n_covariates)):
        for g in range(g_l):
            names.append(f"lambda[{l + 1}][{g + 1}]")
            names.extend(f"zeta[{l + 1}][{g + 1},{j + 1}]" for j in range(p_l))
    for flat in range(int(np.prod(n_groups))):
        tup = np.unravel_index(flat, tuple(n_groups), order="F")
        names.append("alpha[" + ",".join(str(int(i) + 1) for i in tup) + "]")
    return names


def build_design_block(design: Design, memberships, group_tuple, mode: int, t: int) -> np.ndarray:
    """Mode-``mode`` regressors of the cells in ``group_tuple`` at time ``t`` (1-based).

    Returns a ``(prod_l N_{l g_l}, p_mode + 1)`` matrix: the network regressor
    followed by the covariates broadcast over the other modes. Rows follow the
    vec order (first index fastest) of the sliced response.
    """
    memberships = check_memberships(memberships, design.dims)
    if not 1 <= t <= design.n_times:
        raise IndexError(f"t={t} outside 1..{design.n_times}")
    members = []
    for l, (mem, g) in enumerate(zip(memberships, group_tuple)):
        idx = mem.members(int(g))
        if idx.size == 0:
            raise EmptyGroupError(l, int(g))
        members.append(idx)
    net = design.net_reg[mode][t - 1][np.ix_(*members)].ravel(order="F")
    x = design.cov[mode][t - 1][members[mode]]
    # covariate row for node i_mode repeated over the other modes' members
    node_pos = np.indices([m.size for m in members])[mode].ravel(order="F")
    return np.column_stack([net, x[node_pos]])


def _tuple_positions(n_groups, n_covariates) -> np.ndarray:
    """Row ``c`` lists the xi positions matched by the feature vector of group tuple ``c``."""
    n_tuples = int(np.prod(n_groups))
    rows = []
    for flat in range(n_tuples):
        tup = np.unravel_index(flat, tuple(n_groups), order="F")
        idx = []
        for l, p_l in enumerate(n_covariates):
            start = theta_offset(n_groups, n_covariates, l, int(tup[l]))
            idx.extend(range(start, start + p_l + 1))
        idx.append(alpha_offset(n_groups, n_covariates, tup))
        rows.append(idx)
    return np.array(rows, dtype=np.int64)


def _cell_tuple_index(memberships, dims) -> np.ndarray:
    """Flat (vec-order) group tuple of every cell, cells in C order."""
    q = len(dims)
    stride = 1
    index = np.zeros(dims, dtype=np.int64)
    for l, mem in enumerate(memberships):
        shape = [1] * q
        shape[l] = dims[l]
        index = index + (mem.labels * stride).reshape(shape)
        stride *= mem.n_groups
    return index.ravel()


# -- normal system ----------------------------------------------------------


@dataclass
class NormalSystem:
    """Normal equations ``M xi = b`` for fixed memberships.

    ``active`` marks coefficients observed by at least one cell; rows and
    columns of inactive coefficients (empty groups) are identically zero.
    """

    M: np.ndarray
    b: np.ndarray
    n_groups: tuple
    n_covariates: tuple
    active: np.ndarray

    @property
    def names(self) -> list[str]:
        return parameter_names(self.n_groups, self.n_covariates)

    def block_slices(self) -> dict:
        out, pos = {}, 0
        for l, (g, p) in enumerate(zip(self.n_groups, self.n_covariates)):
            out[f"theta{l + 1}"] = slice(pos, pos + g * (p + 1))
            pos += g * (p + 1)
        out["alpha"] = slice(pos, pos + int(np.prod(self.n_groups)))
        return out


def assemble_normal_system(design: Design, memberships, allow_empty=False) -> NormalSystem:
    memberships = check_memberships(memberships, design.dims)
    n_groups = tuple(m.n_groups for m in memberships)
    if not allow_empty:
        for l, mem in enumerate(memberships):
            empty = np.flatnonzero(mem.sizes == 0)
            if empty.size:
                raise EmptyGroupError(l, int(empty[0]))
    gram, cross = design.cell_statistics()
    m = design.n_features
    n_tuples = int(np.prod(n_groups))
    tuple_idx = _cell_tuple_index(memberships, design.dims)
    onehot = np.zeros((design.n_cells, n_tuples))
    onehot[np.arange(design.n_cells), tuple_idx] = 1.0
    s_gram = (onehot.T @ gram.reshape(design.n_cells, m * m)).reshape(n_tuples, m, m)
    s_cross = onehot.T @ cross
    counts = onehot.sum(axis=0)

    k = n_params(n_groups, design.n_covariates)
    M = np.zeros((k, k))
    b = np.zeros(k)
    active = np.zeros(k, dtype=bool)
    positions = _tuple_positions(n_groups, design.n_covariates)
    for c in range(n_tuples):
        if counts[c] == 0:
            continue
        idx = positions[c]
        M[np.ix_(idx, idx)] += s_gram[c]
        b[idx] += s_cross[c]
        active[idx] = True
    M = 0.5 * (M + M.T)
    return NormalSystem(M, b, n_groups, tuple(design.n_covariates), active)


def solve_params(system: NormalSystem, previous=None) -> np.ndarray:
    """Solve the normal equations by Cholesky; inactive coefficients keep ``previous`` (or 0)."""
    k = system.b.size
    xi = np.zeros(k) if previous is None else np.array(previous, dtype=float)
    act = np.flatnonzero(system.active)
    if act.size == 0:
        return xi
    M = system.M[np.ix_(act, act)]
    b = system.b[act]
    d = np.sqrt(np.diag(M))
    names = system.names
    if np.any(d == 0):
        raise SingularSystemError(names[act[int(np.argmin(d))]], 0.0)
    scaled = M / np.outer(d, d)
    eig, vec = np.linalg.eigh(scaled)
    rcond = eig[0] / eig[-1] if eig[-1] > 0 else 0.0
    if rcond < RCOND_THRESHOLD:
        raise SingularSystemError(names[act[int(np.argmax(np.abs(vec[:, 0])))]], float(rcond))
    factor = scipy.linalg.cho_factor(scaled, lower=True)
    xi[act] = scipy.linalg.cho_solve(factor, b / d) / d
    return xi


# -- objective and membership updates --------------------------------------


def _params(design, xi, n_groups) -> GroupedParameters:
    if isinstance(xi, GroupedParameters):
        return xi
    return GroupedParameters.from_xi(xi, n_groups, design.n_covariates)


def _mode_terms(design: Design, params: GroupedParameters, mode: int, labels: np.ndarray) -> np.ndarray:
    """Network and covariate contribution of one mode under the given labels."""
    q = design.order
    shape = [1] * (q + 1)
    shape[mode + 1] = labels.size
    out = params.lambdas[mode][labels].reshape(shape) * design.net_reg[mode]
    if design.n_covariates[mode]:
        beta = np.einsum("tnp,np->tn", design.cov[mode], params.zetas[mode][labels])
        out = out + design.broadcast_cov(mode, beta)
    return out


def fitted_values(design: Design, xi, memberships) -> np.ndarray:
    """Model mean of ``Y_1..Y_T``, shape ``(T, *dims)``."""
    memberships = check_memberships(memberships, design.dims)
    params = _params(design, xi, tuple(m.n_groups for m in memberships))
    alpha = params.alpha[np.ix_(*[m.labels for m in memberships])]
    mean = alpha[None] * design.lag
    for l, mem in enumerate(memberships):
        mean = mean + _mode_terms(design, params, l, mem.labels)
    return mean


def objective_q(design: Design, xi, memberships) -> float:
    """Sum of squared one-step residuals over all cells and times."""
    xi_arr = xi.to_xi() if isinstance(xi, GroupedParameters) else np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi_arr)):
        raise ValueError("xi contains non-finite values")
    resid = design.response - fitted_values(design, xi, memberships)
    return float(np.sum(resid**2))


def node_losses(design: Design, xi, memberships, mode: int, method="stats") -> np.ndarray:
    """``(N_l, G_l)`` slice losses of every node of ``mode`` under every candidate label.

    ``method="stats"`` expands the squared residuals through the cached cell
    statistics; ``method="residual"`` sums explicit residuals (slower, used as
    a cross-check).
    """
    memberships = check_memberships(memberships, design.dims)
    n_groups = tuple(m.n_groups for m in memberships)
    params = _params(design, xi, n_groups)
    if method == "residual":
        return _node_losses_residual(design, params, memberships, mode)
    if method != "stats":
        raise ValueError(f"unknown method {method!r}")
    gram, cross = design.cell_statistics()
    m = design.n_features
    q = design.order
    n_l = design.dims[mode]
    others = [l for l in range(q) if l != mode]
    other_groups = tuple(n_groups[l] for l in others)
    n_other = int(np.prod(other_groups)) if others else 1

    # cells grouped as (node of `mode`, group tuple of the remaining modes)
    other_dims = tuple(design.dims[l] for l in others)
    other_index = _cell_tuple_index([memberships[l] for l in others], other_dims) if others else np.zeros(1, int)
    onehot = np.zeros((other_index.size, n_other))
    onehot[np.arange(other_index.size), other_index] = 1.0
    g = np.moveaxis(gram.reshape(design.dims + (m * m,)), mode, 0).reshape(n_l, -1, m * m)
    r = np.moveaxis(cross.reshape(design.dims + (m,)), mode, 0).reshape(n_l, -1, m)
    yy = np.moveaxis(np.sum(design.response**2, axis=0), mode, 0).reshape(n_l, -1).sum(axis=1)
    g_agg = np.matmul(onehot.T, g).reshape(n_l, n_other, m, m)
    r_agg = np.matmul(onehot.T, r)

    theta = np.zeros((n_groups[mode], n_other, m))
    for k in range(n_other):
        rest = np.unravel_index(k, other_groups, order="F") if others else ()
        for cand in range(n_groups[mode]):
            tup = list(rest)
            tup.insert(mode, cand)
            vec = []
            for l in range(q):
                vec.extend(params.theta(l)[tup[l]])
            vec.append(params.alpha[tuple(tup)])
            theta[cand, k] = vec
    quad = np.einsum("gka,nkab,gkb->ng", theta, g_agg, theta, optimize=True)
    lin = np.einsum("gka,nka->ng", theta, r_agg, optimize=True)
    return np.maximum(yy[:, None] - 2.0 * lin + quad, 0.0)


def _node_losses_residual(design, params, memberships, mode):
    n_groups = tuple(m.n_groups for m in memberships)
    base = np.zeros_like(design.response)
    for l, mem in enumerate(memberships):
        if l != mode:
            base = base + _mode_terms(design, params, l, mem.labels)
    partial = design.response - base
    axes = tuple(a for a in range(design.order + 1) if a != mode + 1)
    n_l = design.dims[mode]
    losses = np.empty((n_l, n_groups[mode]))
    index = [m.labels for m in memberships]
    for g in range(n_groups[mode]):
        labels = np.full(n_l, g)
        index[mode] = np.array([g])
        alpha = params.alpha[np.ix_(*index)]
        resid = partial - _mode_terms(design, params, mode, labels) - alpha[None] * design.lag
        losses[:, g] = np.sum(resid**2, axis=axes)
    return losses


def update_memberships_mode(design: Design, xi, memberships, mode: int, method="stats") -> GroupAssignment:
    """Reassign each node of ``mode`` to its loss-minimizing group (ties go to the smaller label)."""
    losses = node_losses(design, xi, memberships, mode, method)
    return GroupAssignment(np.argmin(losses, axis=1), losses.shape[1])


# -- results -----------------------------------------------------------------


@dataclass
class FitResult:
    xi: np.ndarray
    memberships: list
    q_value: float
    system: NormalSystem
    trace: list = field(default_factory=list)
    converged: bool = True
    n_iter: int = 0
    n_obs: int = 0
    tss: float = 0.0
    init: str = ""

    @property
    def n_groups(self) -> tuple:
        return self.system.n_groups

    @property
    def n_covariates(self) -> tuple:
        return self.system.n_covariates

    @property
    def n_params(self) -> int:
        return self.xi.size

    @property
    def params(self) -> GroupedParameters:
        return GroupedParameters.from_xi(self.xi, self.n_groups, self.n_covariates)

    @property
    def effective_groups(self) -> tuple:
        return tuple(int(np.count_nonzero(m.sizes)) for m in self.memberships)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "n_groups": list(self.n_groups),
            "n_covariates": list(self.n_covariates),
            "effective_groups": list(self.effective_groups),
            "parameters": {
                "lambda": [lam.tolist() for lam in p.lambdas],
                "zeta": [z.tolist() for z in p.zetas],
                "alpha": p.alpha.tolist(),
            },
            "xi": self.xi.tolist(),
            "names": self.system.names,
            "memberships": [(m.labels + 1).tolist() for m in self.memberships],
            "objective": self.q_value,
            "n_obs": self.n_obs,
            "converged": bool(self.converged),
            "n_iter": int(self.n_iter),
            "init": self.init,
            "trace": [{"objective": float(qv), "changes": int(ch)} for qv, ch in self.trace],
        }


def _step1(design, memberships, previous=None, allow_empty=False):
    system = assemble_normal_system(design, memberships, allow_empty=allow_empty)
    return system, solve_params(system, previous)


def _run_als(design: Design, memberships, max_iter=100, tol=1e-10, init_label=""):
    memberships = list(memberships)
    system, xi = _step1(design, memberships)
    q_val = objective_q(design, xi, memberships)
    trace = []
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        changes = 0
        for l in range(design.order):
            new = update_memberships_mode(design, xi, memberships, l)
            changes += int(np.count_nonzero(new.labels != memberships[l].labels))
            memberships[l] = new
        trace.append((q_val, changes))
        if changes == 0:
            converged = True
            break
        system, xi = _step1(design, memberships, previous=xi, allow_empty=True)
        q_new = objective_q(design, xi, memberships)
        decrease = q_val - q_new
        q_val = q_new
        if decrease <= tol * max(q_new, np.finfo(float).tiny):
            logger.debug("stopping on objective stall after %d iterations", n_iter)
            trace.append((q_val, 0))
            converged = True
            break
    else:
        trace.append((q_val, 0))
    return FitResult(
        xi, memberships, q_val, system, trace, converged, n_iter, design.n_obs, design.tss, init_label
    )


def _canonical_key(memberships):
    parts = []
    for m in memberships:
        _, first = np.unique(m.labels, return_index=True)
        order = np.argsort(first)
        relabel = np.empty(m.n_groups, dtype=np.int64)
        relabel[np.unique(m.labels)[order]] = np.arange(order.size)
        parts.append(relabel[m.labels].tobytes())
    return tuple(parts)


@dataclass
class Candidate:
    memberships: list
    score: float
    kind: str
    trial: int


def node_coefficients(design: Design, mode: int):
    """Per-node pooled regression of the node's slice on the full feature vector.

    Returns coefficient rows of shape ``(N_l, m)`` and a mask of nodes with a
    well-conditioned regression.
    """
    gram, cross = design.cell_statistics()
    m = design.n_features
    g = gram.reshape(design.dims + (m, m))
    r = cross.reshape(design.dims + (m,))
    axes = tuple(a for a in range(design.order) if a != mode)
    g_node = g.sum(axis=axes) if axes else g
    r_node = r.sum(axis=axes) if axes else r
    diag = np.sqrt(np.maximum(np.einsum("naa->na", g_node), 0))
    ok = np.all(diag > 0, axis=1)
    safe = np.where(diag > 0, diag, 1.0)
    scaled = g_node / (safe[:, :, None] * safe[:, None, :])
    scaled[~ok] = np.eye(m)
    ev = np.linalg.eigvalsh(scaled)
    ok &= ev[:, 0] > 1e-10 * ev[:, -1]
    scaled[~ok] = np.eye(m)
    coef = np.linalg.solve(scaled, (r_node / safe)[..., None])[..., 0] / safe
    coef[~ok] = 0.0
    return coef, ok


def _kmeans_labels(points, n_groups, seed):
    if np.unique(points, axis=0).shape[0] < n_groups:
        rng = make_rng(seed)
        return rng.integers(n_groups, size=points.shape[0])
    z = points - points.mean(axis=0)
    sd = z.std(axis=0)
    z = z / np.where(sd > 0, sd, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=n_groups, n_init=1, random_state=seed % (2**32)).fit(z)
    return km.labels_


def init_memberships(design: Design, n_groups, n_trials=3, seed=None, score=True) -> list[Candidate]:
    """Candidate starting partitions, best-scoring first.

    Three kinds, ``n_trials`` each: k-means on the per-node coefficients of
    the node's own mode plus its lag term ("coef"), k-means on the network
    and lag coefficients only ("net"), and uniform random labels ("random").
    Each candidate is scored by the objective after one full iteration.
    """
    n_groups = check_n_groups(n_groups, design.order)
    if all(g == 1 for g in n_groups):
        mem = [GroupAssignment(np.zeros(n, dtype=np.int64), 1) for n in design.dims]
        return [Candidate(mem, np.nan, "trivial", 0)]
    seeds = spawn_seeds(seed, 3 * n_trials)
    m = design.n_features
    coefs = []
    for l in range(design.order):
        enough = design.n_obs // design.dims[l] >= m
        coefs.append(node_coefficients(design, l) if enough else None)

    raw = []
    for kind_idx, kind in enumerate(("coef", "net", "random")):
        for trial in range(n_trials):
            rng = make_rng(seeds[kind_idx * n_trials + trial])
            mem = []
            for l, g_l in enumerate(n_groups):
                n_l = design.dims[l]
                labels = rng.integers(g_l, size=n_l)
                if g_l > 1 and kind != "random" and coefs[l] is not None:
                    coef, ok = coefs[l]
                    off = design.offsets[l]
                    if kind == "coef":
                        cols = list(range(off, off + design.n_covariates[l] + 1)) + [m - 1]
                    else:
                        cols = [off, m - 1]
                    if np.count_nonzero(ok) >= g_l:
                        labels[ok] = _kmeans_labels(coef[ok][:, cols], g_l, int(rng.integers(2**32)))
                elif g_l == 1:
                    labels = np.zeros(n_l, dtype=np.int64)
                mem.append(GroupAssignment(labels, g_l))
            raw.append((mem, kind, trial))

    seen = set()
    candidates = []
    for mem, kind, trial in raw:
        key = _canonical_key(mem)
        if key in seen:
            continue
        seen.add(key)
        if not score:
            candidates.append(Candidate(mem, np.nan, kind, trial))
            continue
        try:
            res = _run_als(design, mem, max_iter=1)
        except (EmptyGroupError, SingularSystemError) as exc:
            logger.debug("discarding %s candidate %d: %s", kind, trial, exc)
            continue
        candidates.append(Candidate(mem, res.q_value, kind, trial))
    if score:
        candidates.sort(key=lambda c: c.score)
    return candidates


def fit(
    design: Design,
    n_groups,
    max_iter=100,
    n_trials=3,
    seed=None,
    init=None,
    fixed=False,
    n_refine=None,
    tol=1e-10,
) -> FitResult:
    """Alternate the two steps from each starting partition and keep the lowest objective.

    Parameters
    ----------
    init : sequence of memberships, optional
        Start from this partition instead of the generated candidates.
    fixed : bool
        With ``init``, skip membership updates entirely (oracle fit).
    n_refine : int, optional
        Only iterate the ``n_refine`` best-scoring candidates to convergence.
    """
    n_groups = check_n_groups(n_groups, design.order)
    if design.n_times < 2:
        raise ValueError("need T >= 2")
    if init is not None:
        init = check_memberships(init, design.dims, n_groups)
        if fixed:
            system, xi = _step1(design, init)
            q_val = objective_q(design, xi, init)
            return FitResult(xi, list(init), q_val, system, [(q_val, 0)], True, 0, design.n_obs, design.tss, "fixed")
        starts = [Candidate(init, np.nan, "given", 0)]
    else:
        starts = init_memberships(design, n_groups, n_trials, seed, score=n_refine is not None)
        if n_refine is not None:
            starts = starts[: max(1, int(n_refine))]
    best = None
    failures = []
    for cand in starts:
        try:
            res = _run_als(design, cand.memberships, max_iter, tol, f"{cand.kind}:{cand.trial}")
        except (EmptyGroupError, SingularSystemError) as exc:
            failures.append(str(exc))
            continue
        if best is None or res.q_value < best.q_value:
            best = res
    if best is None:
        raise GTNARError("every initialization failed: " + "; ".join(failures or ["no candidates"]))
    return best


def fit_oracle(design: Design, memberships) -> FitResult:
    """Least squares at known memberships."""
    n_groups = tuple(
        m.n_groups if isinstance(m, GroupAssignment) else int(np.max(m)) + 1 for m in memberships
    )
    return fit(design, n_groups, init=memberships, fixed=True)
