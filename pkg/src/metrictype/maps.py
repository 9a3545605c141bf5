"""Self-maps, binary maps and indexed families, plus the built-in families used by the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .spaces import StructureError


@dataclass
class MappingSpec:
    """What gets iterated or certified.

    ``kind`` is ``"self"`` (``f``), ``"coupled"`` (``F`` with ``g`` and its
    section ``g_inv``) or ``"family"`` (``family`` indexed maps, iterated with
    ``alpha_index`` then ``beta_index``).
    """

    kind: str = "self"
    f: Callable | None = None
    F: Callable | None = None
    g: Callable | None = None
    g_inv: Callable | None = None
    family: dict = field(default_factory=dict)
    alpha_index: Any = None
    beta_index: Any = None
    description: str = ""


def identity(x):
    return x


def table_map(table: Mapping) -> Callable:
    """Finite lookup table as a function; unknown points raise StructureError."""
    tab = dict(table)

    def f(x):
        try:
            return tab[x]
        except (KeyError, TypeError):
            raise StructureError(f"map is undefined at {x!r}") from None

    f.table = tab
    return f


def binary_table_map(table: Mapping) -> Callable:
    """``table[x][y]`` as a function of two arguments."""
    tab = {x: dict(row) for x, row in table.items()}

    def F(x, y):
        try:
            return tab[x][y]
        except (KeyError, TypeError):
            raise StructureError(f"binary map is undefined at ({x!r}, {y!r})") from None

    F.table = tab
    return F


def affine(c: float, d: float = 0.0) -> Callable[[float], float]:
    def f(x):
        return c * x + d
    f.params = {"c": c, "d": d}
    return f


def affine_section(c: float, d: float = 0.0) -> Callable[[float], float]:
    """Right inverse of ``affine(c, d)``."""
    if c == 0:
        raise StructureError("affine map with c = 0 has no section")

    def s(z):
        return (z - d) / c
    return s


def bilinear(u: float, v: float, w: float = 0.0) -> Callable[[float, float], float]:
    def F(x, y):
        return u * x + v * y + w
    F.params = {"u": u, "v": v, "w": w}
    return F


def tabulate(f: Callable, points) -> dict:
    return {p: f(p) for p in points}


def tabulate_binary(F: Callable, points) -> dict:
    return {x: {y: F(x, y) for y in points} for x in points}


def check_closed(space, f: Callable) -> None:
    """Raise StructureError unless ``f`` maps the finite space into itself."""
    for p in space:
        q = f(p)
        if q not in space:
            raise StructureError(f"f({p!r}) = {q!r} is outside the space")
