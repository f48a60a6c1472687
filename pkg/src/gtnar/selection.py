"""Choice of the group counts by a penalized log-objective."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._rng import spawn_seeds
from ._validation import check_n_groups
from .estimator import Design, FitResult, fit
from .exceptions import GTNARError

ZERO_FIT_TOL = 1e-24


def default_kappa(n_times, C=40.0) -> float:
    """Penalty weight ``1 / (C log(T) T^(1/8))``."""
    if n_times < 2:
        raise ValueError("need T >= 2")
    return 1.0 / (C * math.log(n_times) * n_times**0.125)


def qic(result: FitResult, kappa: float) -> float:
    """``log Q + kappa * sum(G)``.

    A fit whose objective is zero up to rounding (below ``ZERO_FIT_TOL`` times
    the total sum of squares) returns ``-inf``.
    """
    q_value = result.q_value
    if q_value <= ZERO_FIT_TOL * max(result.tss, np.finfo(float).tiny):
        warnings.warn("perfect fit: objective is zero, QIC is -inf", RuntimeWarning, stacklevel=2)
        return -math.inf
    return math.log(q_value) + kappa * sum(result.n_groups)


@dataclass
class GridEntry:
    n_groups: tuple
    qic: float
    objective: float = math.nan
    n_iter: int = 0
    converged: bool = False
    error: str | None = None
    fit: FitResult | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n_groups": list(self.n_groups),
            "qic": None if not math.isfinite(self.qic) else self.qic,
            "objective": None if not math.isfinite(self.objective) else self.objective,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "error": self.error,
        }


@dataclass
class SelectionResult:
    grid: list
    chosen: tuple
    kappa: float

    @property
    def best_fit(self) -> FitResult:
        return next(e.fit for e in self.grid if e.n_groups == self.chosen)

    def to_dict(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "kappa": self.kappa,
            "grid": [e.to_dict() for e in self.grid],
        }

    def table(self) -> str:
        lines = [f"{'G':>12}  {'QIC':>14}  {'objective':>14}  iter"]
        for e in self.grid:
            g = ",".join(map(str, e.n_groups))
            mark = " *" if e.n_groups == self.chosen else ""
            if e.error:
                lines.append(f"{g:>12}  {'failed':>14}  {e.error}")
            else:
                lines.append(f"{g:>12}  {e.qic:>14.6f}  {e.objective:>14.6g}  {e.n_iter:>4}{mark}")
        return "\n".join(lines)


def _tie_key(entry: GridEntry):
    return (entry.qic, sum(entry.n_groups), entry.n_groups)


def select(design: Design, g_max, kappa=None, C=40.0, seed=None, order=None, **fit_options) -> SelectionResult:
    """Fit every tuple in ``[1, g_max_1] x ... x [1, g_max_q]`` and return the QIC minimizer.

    Ties go to the smaller total group count, then to the lexicographically
    smaller tuple. ``order`` optionally permutes the evaluation sequence;
    each tuple's fit seed depends only on ``seed`` and the tuple itself.
    """
    g_max = check_n_groups(g_max, design.order)
    if kappa is None:
        kappa = default_kappa(design.n_times, C)
    tuples = list(itertools.product(*[range(1, g + 1) for g in g_max]))
    seeds = dict(zip(tuples, spawn_seeds(seed, len(tuples))))
    if order is not None:
        tuples = [tuples[i] for i in order]
    grid = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for g in tuples:
            try:
                res = fit(design, g, seed=seeds[g], **fit_options)
            except GTNARError as exc:
                grid.append(GridEntry(g, math.inf, error=str(exc)))
                continue
            grid.append(GridEntry(g, qic(res, kappa), res.q_value, res.n_iter, res.converged, None, res))
    grid.sort(key=lambda e: e.n_groups)
    valid = [e for e in grid if e.error is None]
    if not valid:
        raise GTNARError("no candidate group tuple could be fitted")
    chosen = min(valid, key=_tie_key).n_groups
    return SelectionResult(grid, chosen, float(kappa))
