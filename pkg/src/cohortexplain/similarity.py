"""Per-target similarity indicators, dissimilarity bitsets, cohorts, and
soft similarity.

For a fixed target t the binary indicator S[i, j] says whether observation i
is similar to the target on feature j under the per-column rule.  The
dissimilarity set J_i = {j : S[i, j] = 0} of each row is also kept as a
fixed-width bitset of d bits so that audits and bit-level consumers can use
popcounts directly; hot loops work on the boolean matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import ColumnKind, Dataset, Equality, RelativeRange, SimilaritySpec, feature_ranges
from .errors import ConfigError, TargetOutOfRange, ZOutOfRange


@dataclass(frozen=True)
class SimilarityProfile:
    """Binary similarity of every observation to one target.

    ``indicators[i, j]`` is True when observation i is similar to the target
    on feature j; ``dissim_packed[i]`` is J_i packed little-endian, 8 bits
    per byte; ``dissim_counts[i]`` is |J_i|.  The target row is all-similar,
    so J_t is empty.
    """

    target_index: int
    d: int
    indicators: np.ndarray
    dissim_packed: np.ndarray = field(init=False)
    dissim_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        S = np.array(self.indicators, dtype=bool)
        if S.ndim != 2 or S.shape[1] != self.d:
            raise ValueError(f"indicators must have shape (n, {self.d}), got {S.shape}")
        if not 0 <= self.target_index < S.shape[0]:
            raise TargetOutOfRange(self.target_index, S.shape[0])
        if not S[self.target_index].all():
            raise ValueError("target row must be similar to itself on every feature")
        packed = np.packbits(~S, axis=1, bitorder="little")
        counts = (~S).sum(axis=1).astype(np.int64)
        for arr in (S, packed, counts):
            arr.setflags(write=False)
        object.__setattr__(self, "indicators", S)
        object.__setattr__(self, "dissim_packed", packed)
        object.__setattr__(self, "dissim_counts", counts)

    @property
    def n(self) -> int:
        return self.indicators.shape[0]

    def dissim_set(self, i: int) -> frozenset[int]:
        """Decode J_i from its bitset."""
        bits = np.unpackbits(self.dissim_packed[i], bitorder="little", count=self.d)
        return frozenset(np.flatnonzero(bits).tolist())

    @classmethod
    def from_indicators(cls, indicators: np.ndarray, target_index: int) -> "SimilarityProfile":
        S = np.asarray(indicators, dtype=bool)
        return cls(target_index=target_index, d=S.shape[1], indicators=S)


def build_profile(ds: Dataset, spec: SimilaritySpec, target_index: int) -> SimilarityProfile:
    """Compute the indicator matrix for one target under the similarity spec."""
    if not 0 <= target_index < ds.n:
        raise TargetOutOfRange(target_index, ds.n)
    if len(spec.rules) != ds.d:
        raise ConfigError(f"spec has {len(spec.rules)} rules for {ds.d} columns")
    X = ds.features
    xt = X[target_index]
    ranges = feature_ranges(ds)
    S = np.empty((ds.n, ds.d), dtype=bool)
    for j, rule in enumerate(spec.rules):
        if isinstance(rule, Equality):
            S[:, j] = X[:, j] == xt[j]
        elif isinstance(rule, RelativeRange):
            if ds.kinds[j] is ColumnKind.CATEGORICAL:
                raise ConfigError(f"categorical column {ds.column_names[j]!r} must use the equality rule")
            S[:, j] = np.abs(X[:, j] - xt[j]) <= rule.delta * ranges[j]
        else:
            S[:, j] = np.abs(X[:, j] - xt[j]) <= rule.width
    return SimilarityProfile.from_indicators(S, target_index)


def cohort(profile: SimilarityProfile, u) -> np.ndarray:
    """Indices of observations similar to the target on every feature in u.

    The empty set conditions on nothing, so it returns all rows; the target
    is always a member.
    """
    u = sorted(set(int(j) for j in u))
    if u and (u[0] < 0 or u[-1] >= profile.d):
        raise ValueError(f"feature subset {u} not contained in [0, {profile.d})")
    if not u:
        return np.arange(profile.n)
    return np.flatnonzero(profile.indicators[:, u].all(axis=1))


def check_unit_cube(z, d: int) -> np.ndarray:
    """Validate a point of the weight space [0, 1]^d."""
    z = np.asarray(z, dtype=float)
    if z.shape != (d,):
        raise ZOutOfRange(f"z must have shape ({d},), got {z.shape}")
    if not (np.all(z >= 0.0) and np.all(z <= 1.0)):
        raise ZOutOfRange("z must lie in [0, 1]^d")
    return z


def soft_similarity(profile: SimilarityProfile, z) -> np.ndarray:
    """Soft similarity s_z(x_i) = prod_{j in J_i} (1 - z_j).

    Interpolates each indicator linearly from 1 at z_j = 0 down to
    S[i, j] at z_j = 1, so corners of the cube reproduce the binary
    S_u indicators and the target always scores exactly 1.
    """
    z = check_unit_cube(z, profile.d)
    factors = np.where(profile.indicators, 1.0, 1.0 - z[np.newaxis, :])
    return factors.prod(axis=1)
