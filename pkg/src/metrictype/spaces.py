"""Metric type spaces: finite distance matrices and sampled continuous domains.

A metric type space is a set X with a symmetric distance D vanishing on the
diagonal and a relaxed polygon inequality

    D(x, y) <= alpha * (D(x, z_1) + D(z_1, z_2) + ... + D(z_n, y))

for a fixed chain length n >= 1 and a constant alpha >= 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Sequence

import numpy as np

RTOL = 1e-12


class StructureError(ValueError):
    """Malformed input (shape, sign, NaN, unknown point), as opposed to an axiom failure."""


@dataclass
class FiniteSpace:
    points: list
    dist: np.ndarray
    alpha: float = 1.0
    chain_len: int = 1

    def __post_init__(self):
        self.points = list(self.points)
        try:
            self.dist = np.array(self.dist, dtype=float)
        except (TypeError, ValueError) as exc:
            raise StructureError(f"distance matrix is not numeric: {exc}") from exc
        n = len(self.points)
        if n == 0:
            raise StructureError("point list is empty")
        if len(set(self.points)) != n:
            raise StructureError("point labels must be distinct")
        if self.dist.shape != (n, n):
            raise StructureError(f"distance matrix has shape {self.dist.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(self.dist)):
            raise StructureError("distance matrix has NaN or infinite entries")
        if np.any(self.dist < 0):
            raise StructureError("distance matrix has negative entries")
        if not (self.alpha >= 1 and math.isfinite(self.alpha)):
            raise StructureError(f"alpha must be a finite real >= 1, got {self.alpha}")
        if int(self.chain_len) != self.chain_len or self.chain_len < 1:
            raise StructureError(f"chain_len must be an integer >= 1, got {self.chain_len}")
        self.chain_len = int(self.chain_len)
        self._index = {p: i for i, p in enumerate(self.points)}

    @classmethod
    def from_function(cls, points: Sequence, dist_fn: Callable[[Any, Any], float],
                      alpha: float = 1.0, chain_len: int = 1) -> FiniteSpace:
        pts = list(points)
        mat = [[float(dist_fn(x, y)) for y in pts] for x in pts]
        return cls(pts, mat, alpha, chain_len)

    def __len__(self):
        return len(self.points)

    def __iter__(self) -> Iterator:
        return iter(self.points)

    def __contains__(self, p) -> bool:
        try:
            return p in self._index
        except TypeError:
            return False

    def index(self, p: Hashable) -> int:
        try:
            return self._index[p]
        except (KeyError, TypeError):
            raise StructureError(f"point {p!r} is not in the space") from None

    def d(self, x, y) -> float:
        return float(self.dist[self.index(x), self.index(y)])

    def with_alpha(self, alpha: float) -> FiniteSpace:
        return FiniteSpace(self.points, self.dist, alpha, self.chain_len)

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "dist": self.dist.tolist(),
            "alpha": self.alpha,
            "chain_len": self.chain_len,
        }

    @classmethod
    def from_dict(cls, data: dict) -> FiniteSpace:
        missing = [k for k in ("points", "dist") if k not in data]
        if missing:
            raise StructureError(f"finite space is missing field(s): {', '.join(missing)}")
        if not isinstance(data["points"], list):
            raise StructureError("'points' must be a list")
        return cls(data["points"], data["dist"], float(data.get("alpha", 1.0)),
                   data.get("chain_len", 1))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class DistanceSpace:
    """A continuous domain known only through a distance function and a sampler.

    ``sampler(n, rng)`` must return ``n`` points of the domain; ``grid(m)``
    returns ``m`` deterministic points (used alongside random samples).
    """

    dist_fn: Callable[[float, float], float]
    alpha: float
    sampler: Callable[[int, np.random.Generator], Sequence[float]]
    grid: Callable[[int], Sequence[float]]
    domain_descriptor: str = ""
    chain_len: int = 1

    def __post_init__(self):
        if not (self.alpha >= 1 and math.isfinite(self.alpha)):
            raise StructureError(f"alpha must be a finite real >= 1, got {self.alpha}")

    def d(self, x, y) -> float:
        return float(self.dist_fn(x, y))

    def sample(self, n: int, seed: int = 0) -> list:
        return list(self.sampler(n, np.random.default_rng(seed)))


def power_interval(a: float = 0.0, b: float = 1.0, p: float = 1.0) -> DistanceSpace:
    """[a, b] with D(x, y) = |x - y|**p and alpha = 2**(p - 1)."""
    if not b > a:
        raise StructureError(f"interval needs a < b, got [{a}, {b}]")
    if not p >= 1:
        raise StructureError(f"exponent p must be >= 1, got {p}")

    def dist(x, y):
        return abs(x - y) ** p

    def sampler(n, rng):
        return [float(v) for v in rng.uniform(a, b, n)]

    def grid(m):
        return [float(v) for v in np.linspace(a, b, m)]

    return DistanceSpace(dist, 2.0 ** (p - 1), sampler, grid,
                         f"[{a}, {b}] with D(x,y)=|x-y|^{p}")


# -- axioms ------------------------------------------------------------------

def _exceeds(lhs: float, rhs: float, rtol: float) -> bool:
    return lhs > rhs + rtol * max(abs(lhs), abs(rhs))


@dataclass
class AxiomReport:
    d1: list = field(default_factory=list)  # (i, j) with D(p_i, p_i) != 0, i == j
    d2: list = field(default_factory=list)  # (i, j), i < j, with D asymmetric
    d3: list = field(default_factory=list)  # (i, j, chain, lhs, alpha * chain cost)
    points: list = field(default_factory=list)
    sampled: bool = False
    n_samples: int = 0

    @property
    def ok(self) -> bool:
        return not (self.d1 or self.d2 or self.d3)

    def named_d3(self) -> list:
        """D3 violations with labels instead of indices."""
        lab = self.points
        return [(lab[i], lab[j], tuple(lab[z] for z in chain), lhs, rhs)
                for i, j, chain, lhs, rhs in self.d3]

    def to_dict(self) -> dict:
        lab = self.points
        return {
            "ok": self.ok,
            "sampled": self.sampled,
            "n_samples": self.n_samples,
            "d1": [lab[i] for i, _ in self.d1],
            "d2": [[lab[i], lab[j]] for i, j in self.d2],
            "d3": [{"x": x, "y": y, "chain": list(c), "lhs": lhs, "rhs": rhs}
                   for x, y, c, lhs, rhs in self.named_d3()],
        }


def _chains(n_pts: int, start: int, end: int, max_len: int) -> Iterator[tuple]:
    """Chains of 1..max_len intermediates with no repeated consecutive points."""
    def extend(prefix, last):
        if prefix and last != end:
            yield tuple(prefix)
        if len(prefix) == max_len:
            return
        for z in range(n_pts):
            if z != last:
                prefix.append(z)
                yield from extend(prefix, z)
                prefix.pop()
    yield from extend([], start)


def verify_axioms(space: FiniteSpace, rtol: float = RTOL) -> AxiomReport:
    """Check D1-D3 exhaustively on a finite space.

    D3 is checked over chains of up to ``chain_len`` intermediates whose
    consecutive points differ; a chain with repeats costs the same as the
    shorter chain obtained by collapsing them, so nothing is lost.
    """
    m = space.dist
    n = len(space)
    alpha = space.alpha
    rep = AxiomReport(points=list(space.points))
    for i in range(n):
        if m[i, i] != 0:
            rep.d1.append((i, i))
    for i in range(n):
        for j in range(i + 1, n):
            if not math.isclose(m[i, j], m[j, i], rel_tol=rtol, abs_tol=0.0):
                rep.d2.append((i, j))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lhs = float(m[i, j])
            for chain in _chains(n, i, j, space.chain_len):
                path = (i,) + chain + (j,)
                cost = float(sum(m[path[k], path[k + 1]] for k in range(len(path) - 1)))
                if _exceeds(lhs, alpha * cost, rtol):
                    rep.d3.append((i, j, chain, lhs, alpha * cost))
    rep.d3.sort(key=lambda v: (v[0], v[1], len(v[2]), v[2]))
    return rep


def verify_axioms_sampled(space: DistanceSpace, n_samples: int = 64, seed: int = 0,
                          rtol: float = RTOL) -> AxiomReport:
    """Try to refute D1-D3 on grid plus random samples of a continuous domain.

    A passing report means "not refuted on these samples", never a proof.
    """
    pts = sorted(set(space.grid(min(n_samples, 17)) + space.sample(n_samples, seed)))
    fin = FiniteSpace.from_function(pts, space.d, space.alpha, space.chain_len)
    rep = verify_axioms(fin, rtol)
    rep.sampled = True
    rep.n_samples = len(pts)
    return rep


def shortest_chain_costs(dist: np.ndarray, chain_len: int) -> np.ndarray:
    """Minimum cost of a path using at most ``chain_len + 1`` edges, for every pair.

    Min-plus Bellman-Ford relaxation; equals the minimum D3 chain cost with
    exactly ``chain_len`` intermediates because zero-cost self-steps pad shorter paths.
    """
    best = np.array(dist, dtype=float)
    for _ in range(chain_len):
        relaxed = np.min(best[:, :, None] + dist[None, :, :], axis=1)
        best = np.minimum(best, relaxed)
    return best


def minimal_alpha(space: FiniteSpace, chain_len: int | None = None) -> float:
    """Smallest alpha >= 1 for which D3 holds; ``inf`` when no finite alpha exists.

    The stored ``space.alpha`` is ignored.
    """
    n = space.chain_len if chain_len is None else chain_len
    if n < 1:
        raise StructureError(f"chain_len must be >= 1, got {n}")
    m = space.dist
    sp = shortest_chain_costs(m, n)
    off = ~np.eye(len(space), dtype=bool)
    if np.any(off & (sp == 0) & (m > 0)):
        return math.inf
    mask = off & (m > 0)
    if not mask.any():
        return 1.0
    return max(1.0, float(np.max(m[mask] / sp[mask])))


# -- epsilon nets ------------------------------------------------------------

@dataclass
class EpsilonNet:
    epsilon: float
    centers: list

    def covers(self, space: FiniteSpace) -> bool:
        return all(any(space.d(p, c) <= self.epsilon for c in self.centers) for p in space)


def greedy_epsilon_net(space: FiniteSpace, epsilon: float) -> EpsilonNet:
    """Farthest-point greedy net: start at the first point, add the worst-covered point."""
    if not epsilon > 0:
        raise StructureError(f"epsilon must be > 0, got {epsilon}")
    m = space.dist
    centers = [0]
    gap = m[:, 0].copy()
    while True:
        far = int(np.argmax(gap))
        if gap[far] <= epsilon:
            break
        centers.append(far)
        gap = np.minimum(gap, m[:, far])
    return EpsilonNet(epsilon, [space.points[i] for i in centers])
