from pathlib import Path

import numpy as np
import pytest

from bundlelearn import History, batch_ols

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def line_history() -> History:
    """Four unit singletons plus the chain pairs {1,2}, {2,3}, {3,4}."""
    X = np.vstack(
        [np.eye(4), [1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]]
    ).astype(float)
    beta = np.array([1.0, 2.0, 3.0, 4.0])
    return History(X, X @ beta)


@pytest.fixture
def line_state():
    return batch_ols(line_history())


@pytest.fixture
def corpus20_path() -> Path:
    return FIXTURES / "corpus20.csv"


@pytest.fixture
def fig6_path() -> Path:
    return FIXTURES / "fig6.toml"


def random_full_rank_state(rng: np.random.Generator, n: int):
    """A well-conditioned batch state with a random estimate."""
    X = np.vstack([np.eye(n), rng.normal(size=(2 * n, n))])
    u = rng.normal(size=3 * n)
    return batch_ols(History(X, u))
