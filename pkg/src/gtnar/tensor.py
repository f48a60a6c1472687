"""Dense q-way tensors with first-index-fastest vectorization.

The flat storage of :class:`DenseTensor` enumerates entries as
``x[0,0,...,0], x[1,0,...,0], ..., x[n1-1,0,...,0], x[0,1,0,...,0], ...``,
i.e. Fortran order. :attr:`DenseTensor.array` exposes the same values as a
regular numpy array of shape ``dims`` so that the rest of the library can use
plain numpy indexing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class DenseTensor:
    """Real tensor of extents ``dims`` stored as a flat vector ``data``."""

    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise ValueError(f"invalid tensor dims {self.dims!r}")
        data = np.array(self.data, dtype=float).ravel()
        if data.size != int(np.prod(dims)):
            raise ValueError(
                f"data has {data.size} entries, expected {int(np.prod(dims))} for dims {dims}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor entries must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array) -> "DenseTensor":
        array = np.asarray(array, dtype=float)
        if array.ndim == 0:
            array = array.reshape(1)
        return cls(array.shape, array.ravel(order="F"))

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "DenseTensor":
        return cls(tuple(dims), np.zeros(int(np.prod(dims))))

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def array(self) -> np.ndarray:
        """Read-only view of shape ``dims``."""
        return self.data.reshape(self.dims, order="F")

    @property
    def strides_table(self) -> tuple[int, ...]:
        """Offset of a unit step in each mode within :attr:`data`."""
        return tuple(int(s) for s in np.cumprod((1,) + self.dims[:-1]))

    def __getitem__(self, index):
        return self.array[index]

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.dims, self.data.tobytes()))


@dataclass(frozen=True)
class IndexSubset:
    """Per-mode index sets (0-based, strictly increasing)."""

    indices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sets = tuple(tuple(int(i) for i in c) for c in self.indices)
        for c in sets:
            if len(c) == 0:
                raise ValueError("index sets must be nonempty")
            if any(b <= a for a, b in zip(c, c[1:])):
                raise ValueError(f"index set {c} is not strictly increasing")
        object.__setattr__(self, "indices", sets)

    @classmethod
    def full(cls, dims: Sequence[int]) -> "IndexSubset":
        return cls(tuple(tuple(range(n)) for n in dims))


def _as_tensor(t) -> DenseTensor:
    return t if isinstance(t, DenseTensor) else DenseTensor.from_array(t)


def vectorize(t: DenseTensor) -> np.ndarray:
    """Return the entries of ``t`` with the first index varying fastest."""
    return _as_tensor(t).data.copy()


def unvectorize(vec, dims: Sequence[int]) -> DenseTensor:
    return DenseTensor(tuple(dims), np.asarray(vec, dtype=float))


def mode_multiply(t: DenseTensor, m, mode: int) -> DenseTensor:
    """Mode-``mode`` product: contract index ``mode`` of ``t`` with the columns of ``m``.

    ``m`` has shape ``(s, dims[mode])``; the result replaces that extent by ``s``.
    Modes are 0-based.
    """
    t = _as_tensor(t)
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("mode_multiply expects a 2-d matrix")
    if not 0 <= mode < t.order:
        raise ValueError(f"mode {mode} out of range for order-{t.order} tensor")
    if m.shape[1] != t.dims[mode]:
        raise ValueError(
            f"matrix has {m.shape[1]} columns but mode {mode} has extent {t.dims[mode]}"
        )
    if m.shape[0] == m.shape[1] and np.array_equal(m, np.eye(m.shape[0])):
        return t
    return DenseTensor.from_array(mode_dot(t.array, m, mode))


def mode_dot(array: np.ndarray, m: np.ndarray, axis: int) -> np.ndarray:
    """ndarray form of :func:`mode_multiply` without validation."""
    return np.moveaxis(np.tensordot(m, array, axes=([1], [axis])), 0, axis)


def elementwise_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.dims != b.dims:
        raise ValueError(f"shape mismatch {a.dims} vs {b.dims}")
    return DenseTensor(a.dims, a.data * b.data)


def outer_product(vectors: Sequence) -> DenseTensor:
    """Tensor with entry ``(i_1, ..., i_q)`` equal to ``prod_l vectors[l][i_l]``."""
    if len(vectors) < 1:
        raise ValueError("need at least one vector")
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if any(v.size == 0 for v in vecs):
        raise ValueError("vectors must be nonempty")
    out = vecs[0]
    for v in vecs[1:]:
        out = np.multiply.outer(out, v)
    return DenseTensor.from_array(out)


def subset(t: DenseTensor, s: IndexSubset) -> DenseTensor:
    """Extract the sub-tensor selected by one index set per mode."""
    t = _as_tensor(t)
    if len(s.indices) != t.order:
        raise ValueError(f"subset has {len(s.indices)} index sets, tensor has order {t.order}")
    for mode, (c, n) in enumerate(zip(s.indices, t.dims)):
        if c[0] < 0 or c[-1] >= n:
            raise IndexError(f"index out of range in mode {mode} (extent {n})")
    return DenseTensor.from_array(t.array[np.ix_(*s.indices)])
