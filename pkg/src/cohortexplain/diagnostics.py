"""Runnable convergence diagnostics and a head-to-head comparison harness.

The soft cohort value is nearly multilinear wherever the non-target soft
similarity mass stays below a threshold eps.  These diagnostics estimate how
much of the unit cube (and how many of its corners) violate that, and report
the matching analytic bounds, so users can check whether the
integrated-gradient attribution can be trusted to track the exact one on
their data.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
import numpy as np
from scipy.stats import spearmanr

from .data import Dataset, SimilaritySpec
from .errors import DimensionTooLarge, EpsOutOfRange, EmptyDissimSet
from .evaluation import abc_report
from .igcs import QuadratureSpec, SoftValue, igcs_attribution
from .sampling import rng_from
from .shapley import DEFAULT_DIMENSION_CAP, exact_shapley, mc_shapley
from .similarity import SimilarityProfile, build_profile
from .values import CohortValue


@dataclass(frozen=True)
class ConvergenceReport:
    """Estimated mass of the non-convergence region H_eps and its bound.

    ``a`` and ``A`` are the min and max dissimilarity fractions |J_i|/d over
    the rows backing the bound; rows identical to the target (|J_i| = 0) are
    counted separately as ``duplicates`` and excluded from ``a``, since the
    bound requires a > 0 and duplicates are handled by renormalizing the
    soft cohort mean.  ``theorem_bound`` is m^2/eps * exp(-floor(a d)/4)
    with m = ``rows_used``, the number of non-target, non-duplicate rows.
    """

    target_index: int
    eps: float
    a: float
    A: float
    duplicates: int
    rows_used: int
    mass_estimate: float
    mass_se: float
    theorem_bound: float
    samples: int
    seed: int


def heps_mass(
    profile: SimilarityProfile, eps: float, samples: int, seed: int = 0
) -> ConvergenceReport:
    """Monte Carlo estimate of Pr(z in H_eps) for z uniform on [0,1]^d.

    Membership is tested with the exact per-row products
    sum_{i != t} prod_{j in J_i} (1 - z_j) >= eps (computed in log space;
    the diagonal shortcut does not apply off the diagonal).
    """
    if not 0.0 < eps < 1.0:
        raise EpsOutOfRange(eps)
    if samples < 1:
        raise ValueError(f"need samples >= 1, got {samples}")
    t = profile.target_index
    counts = profile.dissim_counts
    nontarget = np.ones(profile.n, dtype=bool)
    nontarget[t] = False
    duplicate = nontarget & (counts == 0)
    backing = nontarget & (counts > 0)
    m = int(backing.sum())
    d = profile.d
    a = float(counts[backing].min() / d) if m else 0.0
    A = float(counts[nontarget].max() / d) if nontarget.any() else 0.0
    bound = (m * m / eps) * math.exp(-math.floor(a * d) / 4.0) if m else 0.0

    dissim = (~profile.indicators[nontarget]).astype(float)  # (n-1, d)
    rng = rng_from(seed)
    hits = 0
    done = 0
    chunk = max(1, min(samples, 4_000_000 // max(1, dissim.shape[0])))
    while done < samples:
        batch = min(chunk, samples - done)
        z = rng.random((batch, d))
        log_products = np.log1p(-z) @ dissim.T  # (batch, n-1)
        mass = np.exp(log_products).sum(axis=1)
        hits += int((mass >= eps).sum())
        done += batch
    p_hat = hits / samples
    se = math.sqrt(p_hat * (1.0 - p_hat) / samples)
    return ConvergenceReport(
        target_index=t,
        eps=eps,
        a=a,
        A=A,
        duplicates=int(duplicate.sum()),
        rows_used=m,
        mass_estimate=p_hat,
        mass_se=se,
        theorem_bound=bound,
        samples=samples,
        seed=seed,
    )


@dataclass(frozen=True)
class CornerReport:
    """Exact fraction of cube corners inside H_eps and the analytic cap."""

    fraction: float
    bound: float
    corners_inside: int
    d: int


def corner_convergence(profile: SimilarityProfile, cap: int = 20) -> CornerReport:
    """Exhaustive corner census: the corner 1_u:0_-u lies inside H_eps
    (for any eps <= 1) iff some non-target row has u disjoint from J_i.

    Counted for all 2^d corners with one subset-sum pass, so d must stay
    small.  The fraction can never exceed m * 2^(-d a); that inequality is
    checked here as a self-test.
    """
    d = profile.d
    if d > cap:
        raise DimensionTooLarge(d, cap)
    t = profile.target_index
    counts = profile.dissim_counts
    nontarget = np.ones(profile.n, dtype=bool)
    nontarget[t] = False
    m = int(nontarget.sum())
    if m == 0:
        return CornerReport(fraction=0.0, bound=0.0, corners_inside=0, d=d)
    bits = np.int64(1) << np.arange(d, dtype=np.int64)
    dissim_masks = ((~profile.indicators[nontarget]) * bits).sum(axis=1)
    table = np.zeros(1 << d)
    np.add.at(table, dissim_masks, 1.0)
    for b in range(d):
        view = table.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    # table[w] now counts rows with J_i a subset of w; corner u is inside
    # H_eps iff some row has J_i inside the complement of u.
    inside = int(np.count_nonzero(table))
    fraction = inside / (1 << d)
    min_count = int(counts[nontarget].min())
    bound = m * 2.0 ** (-min_count)
    assert fraction <= bound
    return CornerReport(fraction=fraction, bound=bound, corners_inside=inside, d=d)


def second_order_weights(ji, jip, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form attribution weights for one second-order pair term.

    The pair term g(z) = prod_{J_i}(1-z_j) prod_{J_i'}(1-z_j) explains a unit
    drop between the corners z=0 and z=1.  The exact Shapley route spreads it
    uniformly over the union; the integrated-gradient route weights the
    intersection twice as much as the symmetric difference:
    2/(2|inter| + |diff|) versus 1/(2|inter| + |diff|).  Both weight vectors
    sum to 1 over the union.
    """
    a = frozenset(int(j) for j in ji)
    b = frozenset(int(j) for j in jip)
    if not a or not b:
        raise EmptyDissimSet("both dissimilarity sets must be nonempty")
    if max(a | b) >= d or min(a | b) < 0:
        raise ValueError(f"indices must lie in [0, {d})")
    union = sorted(a | b)
    inter = sorted(a & b)
    diff = sorted(a ^ b)
    cs = np.zeros(d)
    cs[union] = 1.0 / len(union)
    scale = 2 * len(inter) + len(diff)
    ig = np.zeros(d)
    ig[inter] = 2.0 / scale
    ig[diff] = 1.0 / scale
    return cs, ig


@dataclass(frozen=True)
class ComparisonRecord:
    """Exact-or-sampled cohort Shapley versus its integrated-gradient
    approximation on one target: values, ordering agreement, ABC scores,
    and wall-clock."""

    target_index: int
    cs_method: str
    cs_values: np.ndarray
    igcs_values: np.ndarray
    difference: np.ndarray
    rank_correlation: float
    cs_abc_insertion: float
    cs_abc_deletion: float
    igcs_abc_insertion: float
    igcs_abc_deletion: float
    cs_seconds: float
    igcs_seconds: float


def cs_vs_igcs(
    ds: Dataset,
    spec: SimilaritySpec,
    target_index: int,
    quad: QuadratureSpec = QuadratureSpec(),
    mc_budget: int = 1000,
    seed: int = 0,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> ComparisonRecord:
    """Compute both attributions for one target and score them side by side.

    Uses the exact engine when d fits under the cap and permutation sampling
    with ``mc_budget`` samples otherwise.
    """
    profile = build_profile(ds, spec, target_index)
    cv = CohortValue(profile, ds.responses)

    start = time.perf_counter()
    if ds.d <= cap:
        cs_attr = exact_shapley(cv, cap=cap)
        cs_method = "exact"
    else:
        cs_attr = mc_shapley(cv, mc_budget, seed=rng_from(seed, target_index))
        cs_method = "permutation-mc"
    cs_seconds = time.perf_counter() - start

    start = time.perf_counter()
    igcs_attr = igcs_attribution(SoftValue(profile, ds.responses), quad)
    igcs_seconds = time.perf_counter() - start

    cs_abc = abc_report(cv, cs_attr)
    ig_abc = abc_report(cv, igcs_attr)
    rho = spearmanr(cs_attr.values, igcs_attr.values).statistic
    return ComparisonRecord(
        target_index=target_index,
        cs_method=cs_method,
        cs_values=cs_attr.values,
        igcs_values=igcs_attr.values,
        difference=igcs_attr.values - cs_attr.values,
        rank_correlation=float(rho),
        cs_abc_insertion=cs_abc.abc_insertion,
        cs_abc_deletion=cs_abc.abc_deletion,
        igcs_abc_insertion=ig_abc.abc_insertion,
        igcs_abc_deletion=ig_abc.abc_deletion,
        cs_seconds=cs_seconds,
        igcs_seconds=igcs_seconds,
    )
