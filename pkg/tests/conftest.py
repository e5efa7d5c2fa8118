import numpy as np
import pytest

from cgrg import MetricMode, ModelSpec


@pytest.fixture
def spec_k1() -> ModelSpec:
    return ModelSpec(d=2, alphabet=("a",), nu=np.array([1.0]), lam=np.array([[1.0]]))


@pytest.fixture
def spec_k2() -> ModelSpec:
    return ModelSpec(
        d=2,
        alphabet=("a", "b"),
        nu=np.array([0.4, 0.6]),
        lam=np.array([[1.0, 0.5], [0.5, 2.0]]),
    )


@pytest.fixture
def spec_k3_cube() -> ModelSpec:
    return ModelSpec(
        d=3,
        alphabet=("a", "b", "c"),
        nu=np.array([0.2, 0.3, 0.5]),
        lam=np.array([[1.0, 0.0, 0.5], [0.0, 2.0, 1.0], [0.5, 1.0, 0.25]]),
        metric=MetricMode.CUBE,
    )


def spec_for(k: int, d: int, metric: MetricMode) -> ModelSpec:
    """Deterministic small ensemble for each alphabet size used in tests."""
    if k == 1:
        nu = np.array([1.0])
        lam = np.array([[1.0]])
    elif k == 2:
        nu = np.array([0.4, 0.6])
        lam = np.array([[1.0, 0.5], [0.5, 2.0]])
    elif k == 3:
        nu = np.array([0.2, 0.3, 0.5])
        lam = np.array([[1.0, 0.0, 0.5], [0.0, 2.0, 1.0], [0.5, 1.0, 0.25]])
    else:
        raise ValueError(k)
    names = tuple("abc"[:k])
    return ModelSpec(d=d, alphabet=names, nu=nu, lam=lam, metric=metric)
