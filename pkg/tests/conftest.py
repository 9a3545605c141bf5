from __future__ import annotations

import itertools

import numpy as np
import pytest

from metrictype import spaces
from metrictype.maps import table_map


@pytest.fixture
def three_point():
    return spaces.FiniteSpace(["a", "b", "c"],
                              [[0, 0.2, 0.5], [0.2, 0, 0.25], [0.5, 0.25, 0]], alpha=2.0)


@pytest.fixture
def squared_interval():
    return spaces.power_interval(0.0, 1.0, 2.0)


def line_space(coords, labels, q: float) -> spaces.FiniteSpace:
    """Points on the real line under |x - y|^q with their minimal coefficient."""
    x = np.asarray(coords, dtype=float)
    dist = np.abs(x[:, None] - x[None, :]) ** q
    sp = spaces.FiniteSpace(list(labels), dist)
    return sp.with_alpha(spaces.minimal_alpha(sp))


def random_metric_type_space(rng: np.random.Generator, n: int, q: float | None = None):
    """Random planar points under Euclidean distance to a random power in [1, 2]."""
    q = float(rng.uniform(1, 2)) if q is None else q
    pts = rng.uniform(0, 1, size=(n, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1) ** q
    sp = spaces.FiniteSpace(list(range(n)), dist)
    return sp.with_alpha(spaces.minimal_alpha(sp))


def contraction_case(seed: int):
    """A finite space and a map pulled toward one attracting point.

    Returns (space, f, exact ratio, attracting label).  The ratio is the
    largest D(fx, fy) / D(x, y) and is below 1 / alpha.
    """
    rng = np.random.default_rng(seed)
    while True:
        m = int(rng.integers(2, 11))
        q = float(rng.choice([1.0, 2.0]))
        rho = float(rng.uniform(0.3, 0.7))
        coords = [0.0] + [rho ** i * float(rng.uniform(0.95, 1.05)) for i in range(m - 1)]
        labels = [f"p{int(v)}" for v in rng.permutation(1000)[:m]]
        sp = line_space(coords, labels, q)
        shift = int(rng.integers(1, 3))
        # coordinates shrink toward labels[0], which sits at 0
        tab = {lab: labels[i + shift] if 0 < i < m - shift else labels[0]
               for i, lab in enumerate(labels)}
        f = table_map(tab)
        ratio = max((sp.d(f(x), f(y)) / sp.d(x, y)
                     for x, y in itertools.permutations(sp.points, 2)), default=0.0)
        off = sp.dist[~np.eye(m, dtype=bool)]
        if ratio < 1 / sp.alpha and (off.size == 0 or off.min() > 1e-8):
            return sp, f, ratio, labels[0]


def two_fixed_point_case(seed: int):
    """Random space with a random map that has at least two fixed points."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    sp = random_metric_type_space(rng, n)
    fixed = rng.choice(n, size=int(rng.integers(2, n + 1)), replace=False)
    tab = {p: int(rng.integers(n)) for p in sp.points}
    for p in fixed:
        tab[int(p)] = int(p)
    return sp, table_map(tab)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
