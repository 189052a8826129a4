"""Exact and Monte Carlo Shapley attribution over arbitrary value functions.

A value function maps feature subsets of [d] to a real score.  The exact
engine averages incremental values with the combinatorial weights
1 / (d * C(d-1, |u|)); the Monte Carlo engine averages increments along
uniformly sampled permutations, which keeps the efficiency identity exact
for every sample by telescoping.  Both explain nu([d]) - nu(empty).
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionTooLarge
from .sampling import fisher_yates, rng_from

DEFAULT_DIMENSION_CAP = 25
EXHAUSTIVE_PERMUTATION_CAP = 8


class ValueFunction(ABC):
    """Evaluable map nu from subsets of [d] to reals.

    ``cost`` ("cheap" or "expensive") declares roughly how costly a single
    evaluation is, as a hint for engine heuristics.  nu(empty) need not be
    zero; engines explain nu([d]) - nu(empty).  Subclasses may override
    ``all_values`` or ``permutation_increments`` when they can batch the
    work more efficiently than one evaluation per subset.
    """

    #: set by concrete value functions tied to one observation
    target_index: Optional[int] = None

    def __init__(self, d: int, cost: str = "expensive"):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        self.d = d
        self.cost = cost

    @abstractmethod
    def evaluate(self, u: Sequence[int]) -> float:
        """nu(u) for a subset u given as a sequence of feature indices."""

    def all_values(self) -> np.ndarray:
        """nu at every subset, indexed by bitmask (bit j set means j in u)."""
        d = self.d
        if d > 30:
            raise DimensionTooLarge(d, 30)
        out = np.empty(1 << d)
        for mask in range(1 << d):
            out[mask] = self.evaluate(_mask_to_subset(mask, d))
        return out

    def permutation_increments(self, perm: np.ndarray) -> np.ndarray:
        """Incremental values nu(prefix + {j}) - nu(prefix) along one permutation,
        returned in feature order (entry j is the increment when j was added)."""
        inc = np.empty(self.d)
        prefix: list[int] = []
        prev = self.evaluate(())
        for j in perm:
            prefix.append(int(j))
            cur = self.evaluate(tuple(prefix))
            inc[int(j)] = cur - prev
            prev = cur
        return inc


def _mask_to_subset(mask: int, d: int) -> tuple[int, ...]:
    return tuple(j for j in range(d) if (mask >> j) & 1)


def _popcounts(size: int) -> np.ndarray:
    """Popcount of every integer in [0, size); size must be a power of two."""
    pop = np.zeros(size, dtype=np.int64)
    stride = 1
    while stride < size:
        pop[stride : 2 * stride] = pop[:stride] + 1
        stride *= 2
    return pop


@dataclass
class Attribution:
    """Per-feature attribution values with the bookkeeping needed to audit them.

    ``efficiency_gap`` is (nu_full - nu_empty) - sum(values); it is zero up
    to rounding for exact methods and reflects quadrature error for
    integrated-gradient attributions.  ``stderr`` is present for Monte Carlo
    estimates only.
    """

    method: str
    values: np.ndarray
    nu_empty: float
    nu_full: float
    efficiency_gap: float
    target_index: Optional[int] = None
    stderr: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.values)


def _finish(method, values, nu_empty, nu_full, target_index, stderr=None, **meta) -> Attribution:
    values = np.asarray(values, dtype=float)
    gap = (nu_full - nu_empty) - float(values.sum())
    return Attribution(
        method=method,
        values=values,
        nu_empty=float(nu_empty),
        nu_full=float(nu_full),
        efficiency_gap=gap,
        target_index=target_index,
        stderr=stderr,
        meta=meta,
    )


def exact_shapley(nu: ValueFunction, cap: int = DEFAULT_DIMENSION_CAP) -> Attribution:
    """Exact Shapley values phi_j = (1/d) sum_u C(d-1,|u|)^-1 (nu(u+j) - nu(u)).

    Evaluates nu on all 2^d subsets (vectorized when the value function
    supports it) and combines increments with exact weights, so the result
    is deterministic and satisfies efficiency to rounding error.
    """
    d = nu.d
    if d > cap:
        raise DimensionTooLarge(d, cap)
    vals = np.asarray(nu.all_values(), dtype=float)
    pop = _popcounts(1 << d)
    weights = np.array([1.0 / (d * math.comb(d - 1, s)) for s in range(d)])
    phi = np.empty(d)
    for j in range(d):
        pairs = vals.reshape(-1, 2, 1 << j)
        without = pairs[:, 0, :].ravel()
        with_j = pairs[:, 1, :].ravel()
        sizes = pop.reshape(-1, 2, 1 << j)[:, 0, :].ravel()
        phi[j] = np.sum(weights[sizes] * (with_j - without))
    return _finish(
        "exact", phi, vals[0], vals[-1], nu.target_index, evaluations=1 << d
    )


def mc_shapley(
    nu: ValueFunction,
    samples: int,
    seed: Union[int, np.random.Generator] = 0,
) -> Attribution:
    """Monte Carlo Shapley estimate from uniformly sampled permutations.

    Each permutation contributes the incremental value of every feature as
    it joins the growing prefix, so the estimate sums exactly to
    nu([d]) - nu(empty) for any number of samples.  ``stderr`` holds the
    per-coordinate standard error over the sampled permutations (zeros when
    samples == 1).  Reproducible for a given integer seed.
    """
    if samples < 1:
        raise ValueError(f"need samples >= 1, got {samples}")
    rng = seed if isinstance(seed, np.random.Generator) else rng_from(seed)
    d = nu.d
    acc = np.zeros(d)
    acc_sq = np.zeros(d)
    for _ in range(samples):
        inc = nu.permutation_increments(fisher_yates(rng, d))
        acc += inc
        acc_sq += inc * inc
    values = acc / samples
    if samples > 1:
        var = np.maximum(acc_sq - samples * values**2, 0.0) / (samples - 1)
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.zeros(d)
    nu_empty = nu.evaluate(())
    nu_full = nu.evaluate(tuple(range(d)))
    label = seed if isinstance(seed, int) else None
    return _finish(
        "permutation-mc", values, nu_empty, nu_full, nu.target_index,
        stderr=stderr, samples=samples, seed=label,
    )


def exhaustive_permutation_shapley(nu: ValueFunction, cap: int = EXHAUSTIVE_PERMUTATION_CAP) -> Attribution:
    """Average the increments of all d! permutations (small d only).

    This is the permutation-form definition of the Shapley value; it is the
    engine switch used to cross-check the subset-weighted exact engine.
    """
    d = nu.d
    if d > cap:
        raise DimensionTooLarge(d, cap)
    acc = np.zeros(d)
    count = 0
    for perm in itertools.permutations(range(d)):
        acc += nu.permutation_increments(np.array(perm))
        count += 1
    values = acc / count
    nu_empty = nu.evaluate(())
    nu_full = nu.evaluate(tuple(range(d)))
    return _finish(
        "exhaustive-permutations", values, nu_empty, nu_full, nu.target_index,
        permutations=count,
    )
