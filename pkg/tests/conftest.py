import numpy as np
import pytest

from cohortexplain import (
    CohortValue,
    ColumnKind,
    Dataset,
    Equality,
    SimilarityProfile,
    SimilaritySpec,
)

D3_FEATURES = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
D3_RESPONSES = np.array([1.0, 2.0, 3.0])


def make_dataset(features, responses, kinds=None, names=None, response_name="y") -> Dataset:
    features = np.asarray(features, dtype=float)
    d = features.shape[1]
    kinds = tuple(kinds) if kinds is not None else (ColumnKind.NUMERIC,) * d
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(d))
    categories = tuple(
        tuple(str(v) for v in sorted(set(features[:, j]))) if kinds[j] is ColumnKind.CATEGORICAL else None
        for j in range(d)
    )
    return Dataset(
        features=features,
        responses=np.asarray(responses, dtype=float),
        column_names=names,
        kinds=kinds,
        categories=categories,
        response_name=response_name,
    )


def random_binary_profile(rng, n, d, target=0, density=0.5) -> SimilarityProfile:
    """Random indicator matrix with an all-similar target row."""
    S = rng.random((n, d)) < density
    S[target] = True
    return SimilarityProfile.from_indicators(S, target)


def random_cohort_instance(rng, n, d, target=0, density=0.5):
    profile = random_binary_profile(rng, n, d, target=target, density=density)
    responses = rng.normal(size=n)
    return profile, responses, CohortValue(profile, responses)


@pytest.fixture
def d3_dataset() -> Dataset:
    return make_dataset(D3_FEATURES, D3_RESPONSES)


@pytest.fixture
def d3_spec() -> SimilaritySpec:
    return SimilaritySpec((Equality(), Equality()))


@pytest.fixture
def d3_profile() -> SimilarityProfile:
    S = np.array([[1, 1], [1, 0], [0, 0]], dtype=bool)
    return SimilarityProfile.from_indicators(S, 0)


@pytest.fixture
def d3_cohort_value(d3_profile) -> CohortValue:
    return CohortValue(d3_profile, D3_RESPONSES)
