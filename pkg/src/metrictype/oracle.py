"""Brute-force ground truth on finite spaces.

Scans every point (or pair of points) for fixed, coupled and coincidence
points, and searches coefficient grids for passing certificates.  Nothing
here iterates a map, so it stays independent of :mod:`metrictype.solvers`.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import certificates as cert
from .maps import MappingSpec, tabulate, tabulate_binary
from .spaces import FiniteSpace, StructureError

MAX_POINTS = 64
MAX_COUPLED_POINTS = 24


@dataclass
class FixedPointInventory:
    fixed_points: list = field(default_factory=list)
    coupled_points: list = field(default_factory=list)
    coincidence_points: list = field(default_factory=list)
    common_points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "fixed_points": list(self.fixed_points),
            "coupled_points": [list(p) for p in self.coupled_points],
            "coincidence_points": [list(p) for p in self.coincidence_points],
            "common_points": [list(p) for p in self.common_points],
        }


def reject_zero_distances(space: FiniteSpace) -> None:
    """Ground truth is label identity, so distinct points at distance 0 are refused."""
    m = space.dist
    n = len(space)
    for i in range(n):
        for j in range(i + 1, n):
            if m[i, j] == 0 or m[j, i] == 0:
                raise StructureError(f"distinct points {space.points[i]!r} and "
                                     f"{space.points[j]!r} are at distance 0")


def _in_space(space: FiniteSpace, value, what: str):
    if value not in space:
        raise StructureError(f"{what} = {value!r} is outside the space")
    return value


def enumerate_fixed_points(space: FiniteSpace, f: Callable | None = None,
                           F: Callable | None = None, g: Callable | None = None,
                           ) -> FixedPointInventory:
    """Complete inventory by exhaustive scan of X (and X x X when F is given)."""
    reject_zero_distances(space)
    if len(space) > MAX_POINTS:
        raise StructureError(f"oracle scans at most {MAX_POINTS} points, got {len(space)}")
    inv = FixedPointInventory()
    if f is not None:
        inv.fixed_points = [p for p in space if _in_space(space, f(p), f"f({p!r})") == p]
    if F is not None:
        if len(space) > MAX_COUPLED_POINTS:
            raise StructureError(f"coupled scans allow at most {MAX_COUPLED_POINTS} points")
        gtab = {p: _in_space(space, g(p), f"g({p!r})") for p in space} if g is not None else None
        for x, y in itertools.product(space.points, repeat=2):
            fxy = _in_space(space, F(x, y), f"F({x!r}, {y!r})")
            fyx = _in_space(space, F(y, x), f"F({y!r}, {x!r})")
            if fxy == x and fyx == y:
                inv.coupled_points.append((x, y))
            if gtab is not None and fxy == gtab[x] and fyx == gtab[y]:
                inv.coincidence_points.append((x, y))
                if gtab[x] == x and gtab[y] == y:
                    inv.common_points.append((x, y))
    return inv


@dataclass
class Verdict:
    ok: bool
    reason: str
    inventory: FixedPointInventory
    report: cert.ViolationReport | None = None
    bundle: dict | None = None


def counterexample_bundle(space: FiniteSpace, mapping: MappingSpec, certificate: cert.Certificate,
                          inventory: FixedPointInventory, solver_result: Any = None,
                          report: cert.ViolationReport | None = None) -> dict:
    """Everything needed to replay a disagreement, as one JSON-ready document."""
    if mapping.kind == "coupled":
        map_table = {"F": {str(x): {str(y): v for y, v in row.items()}
                           for x, row in tabulate_binary(mapping.F, space.points).items()},
                     "g": {str(k): v for k, v in tabulate(mapping.g, space.points).items()}}
    elif mapping.kind == "family":
        map_table = {str(i): {str(k): v for k, v in tabulate(T, space.points).items()}
                     for i, T in mapping.family.items()}
    else:
        map_table = {str(k): v for k, v in tabulate(mapping.f, space.points).items()}
    return {
        "space": space.to_dict(),
        "map": map_table,
        "certificate": certificate.to_dict(),
        "inventory": inventory.to_dict(),
        "solver_result": list(solver_result) if isinstance(solver_result, tuple) else solver_result,
        "report": report.to_dict() if report is not None else None,
    }


def cross_check(space: FiniteSpace, mapping: MappingSpec, certificate: cert.Certificate,
                solver_result: Any, check_cfg: cert.CheckConfig | None = None) -> Verdict:
    """Compare a solver's answer with the exhaustive inventory.

    OK iff the certificate passes exhaustively and the inventory has exactly
    one fixed point (for coupled certificates: one coupled common fixed point,
    on the diagonal) equal to ``solver_result``.  Coupled results may be given
    as the point z or as the pair (z, z).  Disagreement is returned, not raised.
    """
    report = cert.check_certificate(space, mapping, certificate, check_cfg)
    if mapping.kind == "coupled":
        inv = enumerate_fixed_points(space, F=mapping.F, g=mapping.g)
        found = inv.common_points
        expected = solver_result if isinstance(solver_result, tuple) else (solver_result, solver_result)
        unique_ok = len(found) == 1 and found[0][0] == found[0][1]
    elif mapping.kind == "family":
        fam = list(mapping.family.values())
        inv = FixedPointInventory(fixed_points=[
            p for p in space if all(_in_space(space, T(p), "T(p)") == p for T in fam)])
        reject_zero_distances(space)
        found, expected = inv.fixed_points, solver_result
        unique_ok = len(found) == 1
    else:
        inv = enumerate_fixed_points(space, f=mapping.f)
        found, expected = inv.fixed_points, solver_result
        unique_ok = len(found) == 1

    if not report.ok:
        reason = "certificate_failed"
    elif not report.exhaustive:
        reason = "certificate_not_exhaustive"
    elif not unique_ok:
        reason = f"expected one fixed point, inventory has {len(found)}"
    elif found[0] != expected:
        reason = f"solver returned {expected!r}, oracle found {found[0]!r}"
    else:
        return Verdict(True, "ok", inv, report)
    bundle = counterexample_bundle(space, mapping, certificate, inv, solver_result, report)
    return Verdict(False, reason, inv, report, bundle)


def dump_bundle(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2, default=str)


# -- coefficient grid search ------------------------------------------------------

GRID_ARITY = {"corollary2": 5, "corollary3": 1, "corollary4": 1, "corollary5": 2,
              "corollary6": 1, "generalized": 4}


def coefficient_grid(arity: int, step: float = 1 / 16) -> np.ndarray:
    """All tuples with entries in {0, step, 2 step, ...} below 1."""
    vals = np.arange(0, 1, step)
    mesh = np.meshgrid(*([vals] * arity), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, arity)


def certificate_grid_search(space: FiniteSpace, f: Callable, kind: str,
                            step: float = 1 / 16, atol: float = cert.ATOL,
                            rtol: float = cert.RTOL) -> np.ndarray:
    """Constant coefficient tuples on the grid that pass both budget and inequality.

    The `theorem1` kind with constant coefficients is ``corollary2``.
    """
    grid = coefficient_grid(GRID_ARITY[kind], step)
    grid = grid[cert.linear_budget_mask(kind, grid, space.alpha)]
    if len(grid) == 0:
        return grid
    _, lhs, W = cert.linear_terms(space, f, kind)
    return grid[cert.linear_inequality_mask(lhs, W, grid, atol, rtol)]


def contrapositive_sweep(space: FiniteSpace, f: Callable, step: float = 1 / 16,
                         kinds=tuple(GRID_ARITY)) -> dict:
    """Passing grid certificates per kind; for a map with two fixed points all must be empty."""
    return {k: certificate_grid_search(space, f, k, step) for k in kinds}
