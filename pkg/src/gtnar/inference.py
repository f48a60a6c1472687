"""Plug-in standard errors and the evaluation metrics used in simulation studies."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from .estimator import FitResult, parameter_names
from .exceptions import SingularSystemError
from .model import GroupedParameters, flatten_theta
from .networks import GroupAssignment

Z95 = 1.96


def residual_variance(result: FitResult) -> float:
    """``Q / (T * prod(N_l) - k)`` with ``k`` the number of estimated coefficients."""
    k = int(np.count_nonzero(result.system.active))
    dof = result.n_obs - k
    if dof <= 0:
        raise ValueError(f"non-positive residual degrees of freedom ({result.n_obs} obs, {k} coefficients)")
    return result.q_value / dof


@dataclass
class InferenceResult:
    estimate: np.ndarray
    sigma2: float
    covariance: np.ndarray
    names: list

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def ci(self) -> np.ndarray:
        se = self.se
        return np.column_stack([self.estimate - Z95 * se, self.estimate + Z95 * se])

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.estimate / self.se

    @property
    def pvalues(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    def to_dict(self) -> dict:
        ci = self.ci

        def clean(v):
            return None if not np.isfinite(v) else float(v)

        return {
            "sigma2": self.sigma2,
            "coefficients": [
                {
                    "name": n,
                    "estimate": clean(e),
                    "se": clean(s),
                    "ci_low": clean(lo),
                    "ci_high": clean(hi),
                    "p_value": clean(p),
                }
                for n, e, s, (lo, hi), p in zip(self.names, self.estimate, self.se, ci, self.pvalues)
            ],
            "covariance": [[clean(v) for v in row] for row in self.covariance],
        }

    def table(self) -> str:
        lines = [f"{'coefficient':<20} {'estimate':>10} {'se':>10} {'p-value':>10}"]
        for n, e, s, p in zip(self.names, self.estimate, self.se, self.pvalues):
            stars = "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""
            lines.append(f"{n:<20} {e:>10.4f} {s:>10.4f} {p:>10.4f} {stars}")
        return "\n".join(lines)


def coefficient_inference(result: FitResult, sigma2=None) -> InferenceResult:
    """Covariance ``sigma2 * M^{-1}`` of the stacked estimate.

    Coefficients of empty groups get NaN variances.
    """
    if sigma2 is None:
        sigma2 = residual_variance(result)
    system = result.system
    act = np.flatnonzero(system.active)
    k = system.b.size
    cov = np.full((k, k), np.nan)
    M = system.M[np.ix_(act, act)]
    d = np.sqrt(np.diag(M))
    try:
        chol = np.linalg.cholesky(M / np.outer(d, d))
    except np.linalg.LinAlgError:
        raise SingularSystemError("the Gram matrix", 0.0) from None
    inv_chol = np.linalg.solve(chol, np.eye(act.size))
    inv = (inv_chol.T @ inv_chol) / np.outer(d, d)
    cov[np.ix_(act, act)] = sigma2 * 0.5 * (inv + inv.T)
    return InferenceResult(result.xi.copy(), float(sigma2), cov, system.names)


def pseudo_distance(theta_hat: np.ndarray, theta_true: np.ndarray, n_covariates) -> float:
    """Node-averaged squared distance between two node-level parameter tensors.

    Both tensors have shape ``(N_1, ..., N_q, m)`` with the layout of
    :func:`gtnar.model.flatten_theta`.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_true = np.asarray(theta_true, dtype=float)
    if theta_hat.shape != theta_true.shape:
        raise ValueError(f"shape mismatch {theta_hat.shape} vs {theta_true.shape}")
    q = theta_hat.ndim - 1
    diff = theta_hat - theta_true
    total = 0.0
    off = 0
    for l, p in enumerate(n_covariates):
        block = np.sum(diff[..., off : off + p + 1] ** 2, axis=-1)
        # the block is constant along the other modes; average keeps it exact
        other = tuple(a for a in range(q) if a != l)
        total += float(np.mean(block.mean(axis=other) if other else block))
        off += p + 1
    total += float(np.mean(diff[..., -1] ** 2))
    return total


def _labels(x):
    return x.labels if isinstance(x, GroupAssignment) else np.asarray(x, dtype=np.int64)


def _n_groups(x, labels):
    return x.n_groups if isinstance(x, GroupAssignment) else int(labels.max(initial=-1)) + 1


def confusion_matrix(est, truth, n_est=None, n_true=None) -> np.ndarray:
    e, t = _labels(est), _labels(truth)
    n_est = n_est or _n_groups(est, e)
    n_true = n_true or _n_groups(truth, t)
    conf = np.zeros((n_est, n_true), dtype=np.int64)
    np.add.at(conf, (e, t), 1)
    return conf


def best_permutation(est, truth) -> np.ndarray:
    """``perm[g]`` is the true label matched to estimated label ``g`` (max agreement)."""
    e, t = _labels(est), _labels(truth)
    g = max(_n_groups(est, e), _n_groups(truth, t))
    conf = confusion_matrix(e, t, g, g)
    if g <= 6:
        best, best_hits = None, -1
        for perm in itertools.permutations(range(g)):
            hits = int(conf[np.arange(g), perm].sum())
            if hits > best_hits:
                best, best_hits = perm, hits
        return np.array(best)
    rows, cols = linear_sum_assignment(-conf)
    perm = np.empty(g, dtype=np.int64)
    perm[rows] = cols
    return perm


def misclustering_rate(est, truth) -> float:
    """Fraction of nodes mislabelled under the best relabeling of ``est``."""
    e, t = _labels(est), _labels(truth)
    if e.size != t.size:
        raise ValueError("label vectors differ in length")
    if _n_groups(est, e) != _n_groups(truth, t):
        raise ValueError("group counts differ; use chi_error_rate")
    perm = best_permutation(e, t)
    return float(np.mean(perm[e] != t))


def chi_mapping(est, truth) -> np.ndarray:
    """Map each estimated group to the true label holding most of its nodes."""
    e, t = _labels(est), _labels(truth)
    conf = confusion_matrix(e, t, _n_groups(est, e), _n_groups(truth, t))
    return np.argmax(conf, axis=1)


def chi_error_rate(est, truth) -> float:
    """Fraction of nodes whose true label differs from the majority label of their estimated group."""
    e, t = _labels(est), _labels(truth)
    if e.size != t.size:
        raise ValueError("label vectors differ in length")
    return float(np.mean(chi_mapping(est, truth)[e] != t))


# -- replicate-level metrics -----------------------------------------------


def block_names(order: int) -> list[str]:
    names = []
    for l in range(order):
        names += [f"lambda{l + 1}", f"zeta{l + 1}"]
    return names + ["alpha"]


def _block_vectors(params: GroupedParameters) -> dict:
    out = {}
    for l in range(params.order):
        out[f"lambda{l + 1}"] = params.lambdas[l]
        out[f"zeta{l + 1}"] = params.zetas[l].ravel()
    out["alpha"] = params.alpha.ravel(order="F")
    return out


def align(result: FitResult, truth_memberships):
    """Relabel a fit onto the truth labeling; returns (params, index map into ``result.xi``)."""
    perms = [best_permutation(m, t) for m, t in zip(result.memberships, truth_memberships)]
    index = GroupedParameters.from_xi(np.arange(result.n_params, dtype=float), result.n_groups, result.n_covariates)
    index_map = index.permuted(perms).to_xi().astype(np.int64)
    return result.params.permuted(perms), index_map, perms


@dataclass
class Replicate:
    fit: FitResult
    inference: InferenceResult | None = None
    oracle: FitResult | None = None
    oracle_inference: InferenceResult | None = None
    selected: tuple | None = None


@dataclass
class MetricReport:
    blocks: list
    rmse: dict
    rmse_oracle: dict
    block_errors: dict
    coverage: dict
    block_coverage: dict
    misclustering: list
    chi_error: list
    selection_freq: list
    rmse_all: dict
    pseudo_distances: list
    n_replicates: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(d):
            return {k: (None if v is None or not np.isfinite(v) else float(v)) for k, v in d.items()}

        return {
            "n_replicates": self.n_replicates,
            "blocks": self.blocks,
            "rmse": clean(self.rmse),
            "rmse_oracle": clean(self.rmse_oracle),
            "coverage": clean(self.coverage),
            "block_coverage": clean(self.block_coverage),
            "misclustering": [float(v) if np.isfinite(v) else None for v in self.misclustering],
            "chi_error": [float(v) for v in self.chi_error],
            "selection_freq": [{str(k): float(v) for k, v in d.items()} for d in self.selection_freq],
            "rmse_all": clean(self.rmse_all),
            "pseudo_distance_mean": float(np.mean(self.pseudo_distances)) if self.pseudo_distances else None,
            "meta": self.meta,
        }

    def rows(self, dims, n_times) -> list[dict]:
        out = []
        for b in self.blocks:
            row = {"block": b}
            row.update({f"N{l + 1}": int(n) for l, n in enumerate(dims)})
            row["T"] = int(n_times)
            row["RMSE"] = self.rmse.get(b, np.nan)
            row["RMSE_oracle"] = self.rmse_oracle.get(b, np.nan)
            row["CP"] = self.block_coverage.get(b, np.nan)
            row["misclustering"] = self.misclustering[int(b[-1]) - 1] if b != "alpha" else np.nan
            out.append(row)
        return out


def write_metric_csv(rows: list[dict], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0].keys())
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if isinstance(v, float) and not np.isfinite(v) else v) for k, v in row.items()})


def _rmse_all(params_hat, mem_hat, params_true, mem_true) -> dict:
    out = {}
    for l in range(params_true.order):
        eh, et = mem_hat[l].labels, mem_true[l].labels
        out[f"lambda{l + 1}"] = float(np.mean((params_hat.lambdas[l][eh] - params_true.lambdas[l][et]) ** 2))
        out[f"zeta{l + 1}"] = float(
            np.mean(np.sum((params_hat.zetas[l][eh] - params_true.zetas[l][et]) ** 2, axis=1))
        )
    a_hat = params_hat.alpha[np.ix_(*[m.labels for m in mem_hat])]
    a_true = params_true.alpha[np.ix_(*[m.labels for m in mem_true])]
    out["alpha"] = float(np.mean((a_hat - a_true) ** 2))
    return out


def simulation_metrics(replicates, truth: GroupedParameters, truth_memberships, candidates=None) -> MetricReport:
    """Aggregate replicate fits against the data-generating truth.

    Block RMSEs use the replicates whose group counts match the truth, after
    relabeling each fit with the permutation that minimizes mis-clustering.
    """
    if not replicates:
        raise ValueError("need at least one replicate")
    q = truth.order
    blocks = block_names(q)
    true_blocks = _block_vectors(truth)
    true_xi = truth.to_xi()
    names = parameter_names(truth.n_groups, truth.n_covariates)
    theta_true = flatten_theta(truth, truth_memberships)

    errors = {b: [] for b in blocks}
    oracle_errors = {b: [] for b in blocks}
    hits, hit_counts = np.zeros(true_xi.size), np.zeros(true_xi.size)
    mis = [[] for _ in range(q)]
    chi = [[] for _ in range(q)]
    all_sq = {b: [] for b in blocks}
    pdist = []
    for rep in replicates:
        res = rep.fit
        for l in range(q):
            chi[l].append(chi_error_rate(res.memberships[l], truth_memberships[l]))
        all_rep = _rmse_all(res.params, res.memberships, truth, truth_memberships)
        for b in blocks:
            all_sq[b].append(all_rep[b])
        pdist.append(pseudo_distance(flatten_theta(res.params, res.memberships), theta_true, truth.n_covariates))
        if res.n_groups != truth.n_groups:
            continue
        aligned, index_map, _ = align(res, truth_memberships)
        for l in range(q):
            mis[l].append(misclustering_rate(res.memberships[l], truth_memberships[l]))
        est_blocks = _block_vectors(aligned)
        for b in blocks:
            errors[b].append(float(np.linalg.norm(est_blocks[b] - true_blocks[b])))
        if rep.inference is not None:
            ci = rep.inference.ci[index_map]
            ok = np.isfinite(ci).all(axis=1)
            hits += ok & (ci[:, 0] <= true_xi) & (true_xi <= ci[:, 1])
            hit_counts += ok
        if rep.oracle is not None:
            o_blocks = _block_vectors(rep.oracle.params)
            for b in blocks:
                oracle_errors[b].append(float(np.linalg.norm(o_blocks[b] - true_blocks[b])))

    def rmse(errs):
        return float(np.sqrt(np.mean(np.square(errs)))) if errs else np.nan

    coverage = {}
    block_cov = {}
    if hit_counts.any():
        cp = np.where(hit_counts > 0, hits / np.maximum(hit_counts, 1), np.nan)
        coverage = dict(zip(names, cp.tolist()))
        sl = GroupedParameters.from_xi(np.arange(true_xi.size, dtype=float), truth.n_groups, truth.n_covariates)
        for b, idx in _block_vectors(sl).items():
            block_cov[b] = float(np.nanmean(cp[idx.astype(int)]))

    freq = []
    if candidates is not None or any(r.selected is not None for r in replicates):
        selected = [r.selected for r in replicates if r.selected is not None]
        for l in range(q):
            grid = candidates[l] if candidates is not None else sorted({s[l] for s in selected})
            freq.append({int(g): float(np.mean([s[l] == g for s in selected])) for g in grid})

    return MetricReport(
        blocks=blocks,
        rmse={b: rmse(errors[b]) for b in blocks},
        rmse_oracle={b: rmse(oracle_errors[b]) for b in blocks},
        block_errors={b: np.array(errors[b]) for b in blocks},
        coverage=coverage,
        block_coverage=block_cov,
        misclustering=[float(np.mean(m)) if m else np.nan for m in mis],
        chi_error=[float(np.mean(c)) for c in chi],
        selection_freq=freq,
        rmse_all={b: float(np.sqrt(np.mean(all_sq[b]))) for b in blocks},
        pseudo_distances=pdist,
        n_replicates=len(replicates),
    )
