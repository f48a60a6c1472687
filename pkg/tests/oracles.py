"""Slow reference implementations written straight from the scalar model definition.

Nothing here calls the vectorized library code; the helpers take plain numpy
arrays (weight matrices, 0-based label vectors, covariate arrays) and loop.
"""

import itertools

import numpy as np


def cells(dims):
    return list(itertools.product(*[range(n) for n in dims]))


def loop_mean(prev, lambdas, zetas, alpha, weights, labels, x_t):
    """Conditional mean of every cell from the scalar recursion, for one time step.

    ``x_t[l]`` has shape (N_l, p_l) and holds the covariates of that step.
    """
    dims = prev.shape
    q = len(dims)
    out = np.zeros(dims)
    for idx in cells(dims):
        val = 0.0
        for l in range(q):
            g = labels[l][idx[l]]
            neigh = 0.0
            for k in range(dims[l]):
                other = idx[:l] + (k,) + idx[l + 1 :]
                neigh += weights[l][idx[l], k] * prev[other]
            val += lambdas[l][g] * neigh
            for j in range(x_t[l].shape[1]):
                val += x_t[l][idx[l], j] * zetas[l][g, j]
        gt = tuple(labels[l][idx[l]] for l in range(q))
        val += alpha[gt] * prev[idx]
        out[idx] = val
    return out


def loop_simulate(lambdas, zetas, alpha, weights, labels, x, noise):
    """``Y_0 = 0`` then the scalar recursion with the given noise draws.

    ``x[l]`` has shape (T, N_l, p_l); ``noise`` has shape (T + 1, *dims)
    with ``noise[0]`` unused.
    """
    n_steps = noise.shape[0] - 1
    dims = noise.shape[1:]
    y = np.zeros((n_steps + 1,) + dims)
    for t in range(1, n_steps + 1):
        x_t = [xl[t - 1] for xl in x]
        y[t] = loop_mean(y[t - 1], lambdas, zetas, alpha, weights, labels, x_t) + noise[t]
    return y


def loop_feature(y, weights, x, idx, t):
    dims = y.shape[1:]
    parts = []
    for l in range(len(dims)):
        s = 0.0
        for k in range(dims[l]):
            other = tuple(idx[:l]) + (k,) + tuple(idx[l + 1 :])
            s += weights[l][idx[l], k] * y[t - 1][other]
        parts.append(s)
        parts.extend(x[l][t - 1, idx[l]].tolist())
    parts.append(y[t - 1][tuple(idx)])
    return np.array(parts)


def column_layout(n_groups, n_covariates):
    """Column of (mode, group, j) and of each alpha tuple in the stacked design.

    Modes in order, groups in order within a mode, then (lambda, zeta_1..p);
    alpha tuples follow with the first mode's group varying fastest.
    """
    theta_col = {}
    col = 0
    for l, (g_l, p_l) in enumerate(zip(n_groups, n_covariates)):
        for g in range(g_l):
            for j in range(p_l + 1):
                theta_col[(l, g, j)] = col
                col += 1
    alpha_col = {}
    stride = 1
    strides = []
    for g_l in n_groups:
        strides.append(stride)
        stride *= g_l
    for tup in itertools.product(*[range(g) for g in n_groups]):
        alpha_col[tup] = col + sum(s * g for s, g in zip(strides, tup))
    return theta_col, alpha_col, col + stride


def stacked_design(y, weights, x, labels, n_groups):
    """Explicit dummy-expanded design ``D`` (rows: t then cells) and response."""
    dims = y.shape[1:]
    n_cov = [xl.shape[2] for xl in x]
    theta_col, alpha_col, k = column_layout(n_groups, n_cov)
    rows, resp = [], []
    for t in range(1, y.shape[0]):
        for idx in cells(dims):
            f = loop_feature(y, weights, x, idx, t)
            row = np.zeros(k)
            pos = 0
            for l in range(len(dims)):
                g = labels[l][idx[l]]
                for j in range(n_cov[l] + 1):
                    row[theta_col[(l, g, j)]] = f[pos]
                    pos += 1
            row[alpha_col[tuple(labels[l][idx[l]] for l in range(len(dims)))]] = f[pos]
            rows.append(row)
            resp.append(y[t][idx])
    return np.array(rows), np.array(resp)


def loop_objective(y, weights, x, labels, xi, n_groups):
    d, r = stacked_design(y, weights, x, labels, n_groups)
    return float(np.sum((r - d @ xi) ** 2))


def brute_misclustering(est, truth, g):
    n = len(truth)
    best = n
    for perm in itertools.permutations(range(g)):
        wrong = sum(1 for a, b in zip(est, truth) if perm[a] != b)
        best = min(best, wrong)
    return best / n


def brute_chi_error(est, truth):
    est, truth = list(est), list(truth)
    n = len(truth)
    wrong = 0
    for g in sorted(set(est)):
        members = [i for i in range(n) if est[i] == g]
        counts = {}
        for i in members:
            counts[truth[i]] = counts.get(truth[i], 0) + 1
        top = max(counts.values())
        chi = min(k for k, v in counts.items() if v == top)
        wrong += sum(1 for i in members if truth[i] != chi)
    return wrong / n


def loop_pseudo_distance(theta_hat, theta_true, n_covariates):
    """Mode-wise node averages of squared theta gaps plus the cell average alpha gap."""
    dims = theta_hat.shape[:-1]
    q = len(dims)
    total = 0.0
    start = 0
    for l in range(q):
        width = n_covariates[l] + 1
        for i in range(dims[l]):
            idx = [0] * q
            idx[l] = i
            a = theta_hat[tuple(idx)][start : start + width]
            b = theta_true[tuple(idx)][start : start + width]
            total += sum((u - v) ** 2 for u, v in zip(a, b)) / dims[l]
        start += width
    acc = 0.0
    for idx in cells(dims):
        acc += (theta_hat[idx][-1] - theta_true[idx][-1]) ** 2
    return total + acc / np.prod(dims)


def random_adjacency(n, rng, p=0.4):
    a = (rng.random((n, n)) < p).astype(float)
    np.fill_diagonal(a, 0.0)
    return a


def row_normalize_loop(a):
    w = np.zeros_like(a, dtype=float)
    for i in range(a.shape[0]):
        s = sum(a[i])
        if s > 0:
            for j in range(a.shape[1]):
                w[i, j] = a[i, j] / s
    return w
