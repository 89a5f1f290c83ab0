from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from corrnet.correlation import DistanceMatrix


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(str(resources.files("corrnet") / "data"))


@pytest.fixture(scope="session")
def panel_csv(data_dir) -> Path:
    return data_dir / "synthetic_panel.csv"


@pytest.fixture(scope="session")
def attrs_csv(data_dir) -> Path:
    return data_dir / "table3_attributes.csv"


def distance_from_pairs(names, pairs) -> DistanceMatrix:
    """Build a DistanceMatrix from {("A", "B"): d, ...}."""
    idx = {n: k for k, n in enumerate(names)}
    d = np.zeros((len(names), len(names)))
    for (a, b), w in pairs.items():
        d[idx[a], idx[b]] = d[idx[b], idx[a]] = w
    return DistanceMatrix(names, d)


def random_distance(rng, n) -> DistanceMatrix:
    """Symmetric matrix of distinct off-diagonal distances in (0, 2)."""
    d = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    d[iu] = rng.uniform(0.05, 1.95, size=len(iu[0]))
    d = d + d.T
    return DistanceMatrix([f"N{k:02d}" for k in range(n)], d)


def write_csv(path: Path, text: str) -> Path:
    path.write_text(text.lstrip("\n"), encoding="utf-8")
    return path
