"""Model-free value functions: cohort mean, Gaussian-kernel weighted mean,
and cohort uniqueness."""

from __future__ import annotations

import math
import threading
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .data import ColumnKind, Dataset
from .errors import (
    CategoricalFeatureUnsupported,
    ConfigError,
    DimensionTooLarge,
    SingularCovariance,
    TargetOutOfRange,
)
from .shapley import ValueFunction
from .similarity import SimilarityProfile


def _superset_sums(masks: np.ndarray, weights: np.ndarray, d: int) -> np.ndarray:
    """out[u] = sum of weights over rows whose mask is a superset of u.

    Standard subset-lattice transform: one accumulation pass per bit over an
    array of 2^d entries, so the whole table costs O(d 2^d) instead of
    O(4^d) from direct enumeration.
    """
    acc = np.zeros(1 << d)
    np.add.at(acc, masks, weights)
    for b in range(d):
        view = acc.reshape(-1, 2, 1 << b)
        view[:, 0, :] += view[:, 1, :]
    return acc


def _similar_masks(profile: SimilarityProfile) -> np.ndarray:
    """Per-row bitmask of the similar features [d] \\ J_i (needs d <= 62)."""
    bits = np.int64(1) << np.arange(profile.d, dtype=np.int64)
    return (profile.indicators * bits).sum(axis=1)


class CohortValue(ValueFunction):
    """nu(u) = mean response over the cohort similar to the target on u.

    The cohort always contains the target, so the mean is defined for every
    subset; nu(empty) is the grand mean.
    """

    def __init__(self, profile: SimilarityProfile, responses):
        super().__init__(profile.d, cost="cheap")
        responses = np.asarray(responses, dtype=float)
        if responses.shape != (profile.n,):
            raise ValueError(f"responses must have shape ({profile.n},), got {responses.shape}")
        self.profile = profile
        self.responses = responses
        self.target_index = profile.target_index

    def evaluate(self, u: Sequence[int]) -> float:
        u = list(u)
        if not u:
            return float(self.responses.mean())
        members = self.profile.indicators[:, u].all(axis=1)
        return float(self.responses[members].mean())

    def all_values(self) -> np.ndarray:
        d = self.d
        if d > 30:
            raise DimensionTooLarge(d, 30)
        masks = _similar_masks(self.profile)
        counts = _superset_sums(masks, np.ones(self.profile.n), d)
        sums = _superset_sums(masks, self.responses, d)
        return sums / counts

    def permutation_increments(self, perm: np.ndarray) -> np.ndarray:
        # Shrinking index list: refining on one feature only ever removes
        # rows, so each step filters the current cohort in O(|cohort|).
        dissim = ~self.profile.indicators
        resp = self.responses
        idx = np.arange(self.profile.n)
        prev = float(resp.mean())
        inc = np.empty(self.d)
        for j in perm:
            j = int(j)
            keep = ~dissim[idx, j]
            if not keep.all():
                idx = idx[keep]
            cur = float(resp[idx].mean())
            inc[j] = cur - prev
            prev = cur
        return inc


class UniquenessValue(ValueFunction):
    """nu(u) = -log2 |C_u|: how strongly conditioning on u isolates the target.

    Always <= 0, and 0 exactly when the cohort is the target alone (or its
    duplicates, which are kept as-is).
    """

    def __init__(self, profile: SimilarityProfile):
        super().__init__(profile.d, cost="cheap")
        self.profile = profile
        self.target_index = profile.target_index

    def evaluate(self, u: Sequence[int]) -> float:
        u = list(u)
        if not u:
            size = self.profile.n
        else:
            size = int(self.profile.indicators[:, u].all(axis=1).sum())
        return -math.log2(size)

    def all_values(self) -> np.ndarray:
        d = self.d
        if d > 30:
            raise DimensionTooLarge(d, 30)
        masks = _similar_masks(self.profile)
        counts = _superset_sums(masks, np.ones(self.profile.n), d)
        return -np.log2(counts)

    def permutation_increments(self, perm: np.ndarray) -> np.ndarray:
        dissim = ~self.profile.indicators
        idx = np.arange(self.profile.n)
        prev = -math.log2(len(idx))
        inc = np.empty(self.d)
        for j in perm:
            j = int(j)
            keep = ~dissim[idx, j]
            if not keep.all():
                idx = idx[keep]
            cur = -math.log2(len(idx))
            inc[j] = cur - prev
            prev = cur
        return inc


class GkwValue(ValueFunction):
    """Gaussian-kernel weighted mean of observed responses.

    Weights decay with the scaled Mahalanobis distance between the target
    and each observation restricted to the conditioning subset:
    D_u^2 = (x_iu - x_tu)^T Sigma_uu^-1 (x_iu - x_tu) / |u| and
    w_i = exp(-D_u^2 / (2 sigma^2)).  Features are standardized internally
    and the covariance gets a ridge of ``ridge * trace(Sigma)/d`` before any
    submatrix is factorized, so collinear data stays invertible.  nu(empty)
    is the grand mean (all weights 1), matching the cohort-mean baseline.
    """

    def __init__(self, ds: Dataset, target_index: int, sigma: float = 0.1, ridge: float = 1e-6):
        super().__init__(ds.d, cost="expensive")
        if any(kind is ColumnKind.CATEGORICAL for kind in ds.kinds):
            raise CategoricalFeatureUnsupported(
                "the kernel-weight value function needs all-numeric features"
            )
        if not 0 <= target_index < ds.n:
            raise TargetOutOfRange(target_index, ds.n)
        if not sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {sigma}")
        if ridge < 0:
            raise ConfigError(f"ridge must be >= 0, got {ridge}")
        if ds.n < 2:
            raise SingularCovariance("sample covariance needs at least 2 rows")
        X = ds.features
        mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1)
        scale = np.where(std > 0, std, 1.0)
        self._X = (X - mean) / scale
        cov = np.atleast_2d(np.cov(self._X, rowvar=False, ddof=1))
        if ridge > 0:
            cov = cov + (ridge * np.trace(cov) / ds.d) * np.eye(ds.d)
        self._cov = cov
        self.responses = ds.responses
        self.target_index = target_index
        self.sigma = sigma
        self._cache: dict[tuple[int, ...], tuple] = {}
        self._lock = threading.Lock()

    def _factor(self, u: tuple[int, ...]):
        with self._lock:
            hit = self._cache.get(u)
        if hit is not None:
            return hit
        try:
            factor = cho_factor(self._cov[np.ix_(u, u)])
        except LinAlgError as exc:
            raise SingularCovariance(f"covariance submatrix for {u} is not positive definite") from exc
        with self._lock:
            self._cache[u] = factor
        return factor

    def weights(self, u: Sequence[int]) -> np.ndarray:
        """Kernel weight of every observation for the subset u (target gets 1)."""
        u = tuple(sorted(set(int(j) for j in u)))
        if not u:
            return np.ones(len(self.responses))
        factor = self._factor(u)
        cols = list(u)
        delta = self._X[:, cols] - self._X[self.target_index, cols]
        solved = cho_solve(factor, delta.T)
        d_sq = np.maximum(np.einsum("ij,ji->i", delta, solved), 0.0) / len(u)
        return np.exp(-d_sq / (2.0 * self.sigma**2))

    def evaluate(self, u: Sequence[int]) -> float:
        u = tuple(u)
        if not u:
            return float(self.responses.mean())
        w = self.weights(u)
        return float((w @ self.responses) / w.sum())
