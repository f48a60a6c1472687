"""Network layers, group assignments and synthetic network generators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import make_rng


@dataclass(frozen=True)
class NetworkLayer:
    """Binary adjacency matrix of one mode together with its row-normalized weights.

    ``isolated`` lists (0-based) nodes with zero out-degree; their weight rows
    are all zero, so their network regressor is identically zero.
    """

    adjacency: np.ndarray
    weights: np.ndarray
    isolated: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    @property
    def out_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def in_degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)


@dataclass(frozen=True)
class GroupAssignment:
    """Membership labels of the ``N_l`` nodes of one mode.

    Labels are 0-based, in ``range(n_groups)``. Empty groups are allowed here.
    """

    labels: np.ndarray
    n_groups: int = field(default=0)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError("labels must be a 1-d array")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        n_groups = int(self.n_groups) if self.n_groups else int(labels.max(initial=-1)) + 1
        if n_groups < 1:
            raise ValueError("n_groups must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= n_groups):
            raise ValueError(f"labels must lie in [0, {n_groups})")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_groups", n_groups)

    def __len__(self):
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_groups)

    def members(self, g: int) -> np.ndarray:
        return np.flatnonzero(self.labels == g)

    def __eq__(self, other):
        if not isinstance(other, GroupAssignment):
            return NotImplemented
        return self.n_groups == other.n_groups and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.n_groups, self.labels.tobytes()))


def row_normalize(adjacency) -> NetworkLayer:
    """Build a :class:`NetworkLayer` from a square binary matrix with zero diagonal."""
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diag(a) != 0):
        bad = np.flatnonzero(np.diag(a))
        raise ValueError(f"adjacency has nonzero diagonal at nodes {bad.tolist()}")
    a = a.astype(float)
    deg = a.sum(axis=1)
    w = np.divide(a, deg[:, None], out=np.zeros_like(a), where=deg[:, None] > 0)
    a.flags.writeable = False
    w.flags.writeable = False
    return NetworkLayer(a, w, tuple(np.flatnonzero(deg == 0).tolist()))


def gen_sbm(n, memberships: GroupAssignment, p_in=None, p_out=None, seed=None) -> NetworkLayer:
    """Stochastic block model with within-group rate ``p_in`` and between-group ``p_out``.

    Defaults follow the usual sparse design: ``p_in = 20/n``, ``p_out = 2/n``
    (clipped to 1 for tiny networks).
    """
    n = int(n)
    if len(memberships) != n:
        raise ValueError(f"memberships has length {len(memberships)}, expected {n}")
    p_in = min(1.0, 20.0 / n) if p_in is None else float(p_in)
    p_out = min(1.0, 2.0 / n) if p_out is None else float(p_out)
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    rng = make_rng(seed)
    lab = memberships.labels
    prob = np.where(lab[:, None] == lab[None, :], p_in, p_out)
    a = (rng.random((n, n)) < prob).astype(float)
    np.fill_diagonal(a, 0.0)
    return row_normalize(a)


def powerlaw_pmf(exponent: float, k_max: int) -> np.ndarray:
    """Probabilities of ``k = 1..k_max`` proportional to ``k**-exponent``."""
    k = np.arange(1, k_max + 1, dtype=float)
    w = k ** -float(exponent)
    return w / w.sum()


def gen_powerlaw(n, exponent=2.5, multiplier=4, k_max=None, seed=None, return_degrees=False):
    """Directed network whose in-degrees follow a truncated power law.

    Node ``i`` draws ``d~_i`` with ``P(d~_i = k) ~ k**-exponent`` on ``1..k_max``,
    gets in-degree ``min(multiplier * d~_i, n - 1)``, and that many distinct
    followers ``j`` chosen uniformly at random get ``a[j, i] = 1``.
    """
    n = int(n)
    if n <= 1:
        raise ValueError("power-law network needs n > 1")
    k_max = n if k_max is None else int(k_max)
    if exponent <= 1 or multiplier < 1 or k_max < 1:
        raise ValueError("need exponent > 1, multiplier >= 1 and k_max >= 1")
    rng = make_rng(seed)
    raw = rng.choice(np.arange(1, k_max + 1), size=n, p=powerlaw_pmf(exponent, k_max))
    degrees = np.minimum(int(multiplier) * raw, n - 1)
    a = np.zeros((n, n))
    for i in range(n):
        others = np.delete(np.arange(n), i)
        followers = rng.choice(others, size=degrees[i], replace=False)
        a[followers, i] = 1.0
    layer = row_normalize(a)
    if return_degrees:
        return layer, raw, degrees
    return layer


def sample_memberships(n, n_groups, probs=None, seed=None) -> GroupAssignment:
    """I.i.d. categorical labels; uniform over groups by default."""
    n, n_groups = int(n), int(n_groups)
    if n_groups < 1:
        raise ValueError("n_groups must be positive")
    probs = np.full(n_groups, 1.0 / n_groups) if probs is None else np.asarray(probs, dtype=float)
    if probs.shape != (n_groups,) or np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
        raise ValueError(f"invalid probability vector {probs.tolist()}")
    rng = make_rng(seed)
    return GroupAssignment(rng.choice(n_groups, size=n, p=probs / probs.sum()), n_groups)


def read_edge_csv(path, n=None) -> NetworkLayer:
    """Read a ``src,dst`` edge list with 1-based node ids."""
    path = Path(path)
    edges = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["src", "dst"]:
            raise ValueError(f"{path}: expected header 'src,dst'")
        for row in reader:
            edges.append((int(row["src"]), int(row["dst"])))
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and e.min() < 1:
        raise ValueError(f"{path}: node ids are 1-based")
    size = int(e.max(initial=0)) if n is None else int(n)
    if e.size and e.max() > size:
        raise ValueError(f"{path}: node id {int(e.max())} exceeds network size {size}")
    if np.any(e[:, 0] == e[:, 1]):
        raise ValueError(f"{path}: self-loops are not allowed")
    a = np.zeros((size, size))
    a[e[:, 0] - 1, e[:, 1] - 1] = 1.0
    return row_normalize(a)


def write_edge_csv(layer: NetworkLayer, path) -> None:
    src, dst = np.nonzero(layer.adjacency)
    with Path(path).open("w", newline="") as fh:
        fh.write("src,dst\n")
        for s, d in zip(src, dst):
            fh.write(f"{s + 1},{d + 1}\n")
