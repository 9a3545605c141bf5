"""Contraction certificates: coefficient budgets and the contractive inequalities.

Every checker returns a :class:`ViolationReport`.  Budget failures (a
coefficient out of range, a budget inequality not strict) are listed
separately from inequality violations; a certificate passes only when both
lists are empty.  On a :class:`~metrictype.spaces.FiniteSpace` all pairs
(or 4-tuples) are checked; on a :class:`~metrictype.spaces.DistanceSpace` a
deterministic grid plus seeded random samples are checked and the report is
marked non-exhaustive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .maps import MappingSpec
from .spaces import FiniteSpace

ATOL = 1e-12
RTOL = 1e-9


class CertificateError(ValueError):
    """Malformed certificate: unknown kind, wrong arity, unusable coefficient."""


@dataclass
class CheckConfig:
    n_samples: int = 2000
    grid: int = 9
    seed: int = 0
    atol: float = ATOL
    rtol: float = RTOL
    orbit_depth: int = 16


def violates(lhs: float, rhs: float, atol: float = ATOL, rtol: float = RTOL) -> bool:
    return lhs > rhs + atol + rtol * abs(rhs)


@dataclass
class Violation:
    witness: tuple
    lhs: float
    rhs: float


@dataclass
class ViolationReport:
    kind: str
    violations: list = field(default_factory=list)
    n_checked: int = 0
    exhaustive: bool = True
    budget_failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.budget_failures

    def witnesses(self) -> list:
        return [v.witness for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ok": self.ok,
            "n_checked": self.n_checked,
            "exhaustive": self.exhaustive,
            "budget_failures": list(self.budget_failures),
            "violations": [{"witness": list(v.witness), "lhs": v.lhs, "rhs": v.rhs}
                           for v in self.violations],
            "extra": _jsonable(self.extra),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ViolationReport:
        return cls(
            kind=data["kind"],
            violations=[Violation(tuple(_untuple(w) for w in v["witness"]), v["lhs"], v["rhs"])
                        for v in data["violations"]],
            n_checked=data["n_checked"],
            exhaustive=data["exhaustive"],
            budget_failures=list(data["budget_failures"]),
            extra=dict(data.get("extra", {})),
        )

    def table(self, limit: int = 20) -> str:
        mode = "exhaustive" if self.exhaustive else "sampled (not refuted only)"
        lines = [f"certificate {self.kind}: {'PASS' if self.ok else 'FAIL'}"
                 f"  [{self.n_checked} tuples, {mode}]"]
        for msg in self.budget_failures:
            lines.append(f"  budget: {msg}")
        for key, val in self.extra.items():
            lines.append(f"  {key} = {val}")
        if self.violations:
            lines.append(f"  {'witness':<40} {'lhs':>22} {'rhs':>22}")
            for v in self.violations[:limit]:
                w = ", ".join(_fmt(p) for p in v.witness)
                lines.append(f"  ({w}){'':<{max(0, 38 - len(w))}} {v.lhs:>22.17g} {v.rhs:>22.17g}")
            if len(self.violations) > limit:
                lines.append(f"  ... {len(self.violations) - limit} more")
        return "\n".join(lines)


def _fmt(p) -> str:
    return f"{p:.17g}" if isinstance(p, float) else str(p)


def _untuple(w):
    return tuple(w) if isinstance(w, list) else w


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- check domains -------------------------------------------------------------

def check_points(space, cfg: CheckConfig) -> tuple[list, bool]:
    if isinstance(space, FiniteSpace):
        return list(space.points), True
    pts = list(space.grid(cfg.grid)) + space.sample(cfg.n_samples, cfg.seed)
    return pts, False


def pair_domain(space, cfg: CheckConfig) -> tuple[list, bool]:
    """All ordered pairs on a finite space; grid pairs plus random pairs (both orders) otherwise."""
    if isinstance(space, FiniteSpace):
        return list(itertools.product(space.points, repeat=2)), True
    grid = list(space.grid(cfg.grid))
    pairs = list(itertools.product(grid, repeat=2))
    s = space.sample(2 * cfg.n_samples, cfg.seed)
    for x, y in zip(s[0::2], s[1::2]):
        pairs.append((x, y))
        pairs.append((y, x))
    return pairs, False


def quad_domain(space, cfg: CheckConfig) -> tuple[list, bool]:
    """4-tuples (x, y, u, v); random tuples are also checked as (u, v, x, y)."""
    if isinstance(space, FiniteSpace):
        return list(itertools.product(space.points, repeat=4)), True
    grid = list(space.grid(cfg.grid))
    quads = list(itertools.product(grid, repeat=4))
    s = space.sample(4 * cfg.n_samples, cfg.seed)
    for x, y, u, v in zip(s[0::4], s[1::4], s[2::4], s[3::4]):
        quads.append((x, y, u, v))
        quads.append((u, v, x, y))
    return quads, False


def _coef(c, x) -> float:
    if isinstance(c, Mapping):
        try:
            return float(c[x])
        except KeyError:
            raise CertificateError(f"coefficient table has no entry for {x!r}") from None
    if callable(c):
        return float(c(x))
    return float(c)


def _coef2(c, x, y) -> float:
    if isinstance(c, Mapping):
        try:
            if (x, y) in c:
                return float(c[(x, y)])
            return float(c[x][y])
        except (KeyError, TypeError):
            raise CertificateError(f"coefficient table has no entry for ({x!r}, {y!r})") from None
    if callable(c):
        return float(c(x, y))
    return float(c)


def _require_constants_off_finite(space, coeffs: Sequence) -> None:
    if not isinstance(space, FiniteSpace) and any(isinstance(c, Mapping) for c in coeffs):
        raise CertificateError("per-point coefficient tables need a finite space")


def _in_unit(name: str, value: float, where: str = "") -> list:
    if 0 <= value < 1:
        return []
    return [f"{name}{where} = {value!r} is outside [0, 1)"]


def _nonneg(names: Sequence[str], values: Sequence[float]) -> list:
    return [f"{n} = {v!r} is negative" for n, v in zip(names, values) if v < 0]


def _scan(kind: str, tuples: list, exhaustive: bool, lhs_rhs: Callable, cfg: CheckConfig,
          ) -> ViolationReport:
    rep = ViolationReport(kind, n_checked=len(tuples), exhaustive=exhaustive)
    for t in tuples:
        lhs, rhs = lhs_rhs(*t)
        if violates(lhs, rhs, cfg.atol, cfg.rtol):
            rep.violations.append(Violation(tuple(t), lhs, rhs))
    return rep


# -- point-dependent coefficients, inner product form -------------------------------

@dataclass(frozen=True)
class FunctionCoefficients:
    """Each field is a constant, a per-point table, or a callable on points."""

    eta: Any = 0.0
    lam: Any = 0.0
    zeta: Any = 0.0
    mu: Any = 0.0
    xi: Any = 0.0

    NAMES = ("eta", "lam", "zeta", "mu", "xi")

    def fields(self) -> tuple:
        return (self.eta, self.lam, self.zeta, self.mu, self.xi)

    def at(self, x) -> tuple:
        return tuple(_coef(c, x) for c in self.fields())


def function_budget_failures(space, f: Callable, coeffs: FunctionCoefficients,
                             cfg: CheckConfig, budget: Callable | None = None) -> list:
    """Range, descent along orbits, and the pointwise budget.

    ``budget(values, alpha)`` defaults to eta + lam + zeta + mu + 2 alpha xi.
    """
    _require_constants_off_finite(space, coeffs.fields())
    alpha = space.alpha
    if budget is None:
        def budget(h, a):
            return h[0] + h[1] + h[2] + h[3] + 2 * a * h[4]
    out = []
    pts, _ = check_points(space, cfg)
    for x in pts:
        h = coeffs.at(x)
        for name, v in zip(FunctionCoefficients.NAMES, h):
            out += _in_unit(name, v, f"({_fmt(x)})")
        b = budget(h, alpha)
        if not b < 1:
            out.append(f"budget at {_fmt(x)} is {b!r}, must be < 1")
    tables = [c for c in coeffs.fields() if not isinstance(c, (int, float))]
    if tables:
        seen = set()
        for x0 in pts:
            z = x0
            for _ in range(cfg.orbit_depth):
                if z in seen:
                    break
                seen.add(z)
                fz = f(z)
                for name, c in zip(FunctionCoefficients.NAMES, coeffs.fields()):
                    if _coef(c, fz) > _coef(c, z):
                        out.append(f"{name} increases along f at {_fmt(z)}: "
                                   f"{_coef(c, fz)!r} > {_coef(c, z)!r}")
                z = fz
    return out


def theorem1_ratio(coeffs: FunctionCoefficients, x0, alpha: float) -> float:
    """Picard ratio (eta + lam + alpha xi) / (1 - zeta - alpha xi) at the seed."""
    eta, lam, zeta, _, xi = coeffs.at(x0)
    den = 1 - zeta - alpha * xi
    if den <= 0:
        return math.inf
    return (eta + lam + alpha * xi) / den


def check_theorem1(space, f: Callable, coeffs: FunctionCoefficients,
                   cfg: CheckConfig | None = None) -> ViolationReport:
    """D(fx, fy) <= H(x) . [D(x,y), D(x,fx), D(y,fy), D(fx,y), D(x,fy)] on every checked pair."""
    cfg = cfg or CheckConfig()
    budget = function_budget_failures(space, f, coeffs, cfg)
    d = space.d

    def lhs_rhs(x, y):
        fx, fy = f(x), f(y)
        h = coeffs.at(x)
        v = (d(x, y), d(x, fx), d(y, fy), d(fx, y), d(x, fy))
        return d(fx, fy), sum(a * b for a, b in zip(h, v))

    pairs, exhaustive = pair_domain(space, cfg)
    rep = _scan("theorem1", pairs, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = budget
    pts, _ = check_points(space, cfg)
    if not budget:
        rep.extra["ratio"] = max(theorem1_ratio(coeffs, x, space.alpha) for x in pts)
    return rep


# -- constant and reduced special cases (kinds corollary1..corollary6) ---------------

COROLLARY_PARAMS = {
    1: ("eta", "lam", "mu"),
    2: ("a", "beta", "gamma", "k", "l"),
    3: ("beta",),
    4: ("beta",),
    5: ("a", "beta"),
    6: ("a",),
}


def _variant(variant) -> int:
    v = str(variant).replace("corollary", "").replace("cor", "")
    try:
        n = int(v)
    except ValueError:
        raise CertificateError(f"unknown corollary variant {variant!r}") from None
    if n not in COROLLARY_PARAMS:
        raise CertificateError(f"unknown corollary variant {variant!r}")
    return n


def _named(names: Sequence[str], constants) -> dict:
    if isinstance(constants, Mapping):
        extra = set(constants) - set(names)
        missing = set(names) - set(constants)
        if extra or missing:
            raise CertificateError(f"expected coefficients {list(names)}, got {sorted(constants)}")
        return {n: constants[n] for n in names}
    vals = list(constants)
    if len(vals) != len(names):
        raise CertificateError(f"expected {len(names)} coefficients {list(names)}, got {len(vals)}")
    return dict(zip(names, vals))


def embed_corollary(variant, constants) -> FunctionCoefficients:
    """Point-dependent coefficients that reproduce a special case's inequality."""
    n = _variant(variant)
    c = _named(COROLLARY_PARAMS[n], constants)
    if n == 1:
        return FunctionCoefficients(c["eta"], c["lam"], c["lam"], c["mu"], c["mu"])
    if n == 2:
        return FunctionCoefficients(c["a"], c["beta"], c["gamma"], c["k"], c["l"])
    if n == 3:
        return FunctionCoefficients(0.0, c["beta"], c["beta"], 0.0, 0.0)
    if n == 4:
        return FunctionCoefficients(0.0, 0.0, 0.0, c["beta"], c["beta"])
    if n == 5:
        return FunctionCoefficients(c["a"], 0.0, 0.0, c["beta"], 0.0)
    return FunctionCoefficients(c["a"], 0.0, 0.0, 0.0, 0.0)


def _corollary_budget(n: int, c: dict, alpha: float, space, f, cfg) -> list:
    if n == 1:
        coeffs = FunctionCoefficients(c["eta"], c["lam"], 0.0, c["mu"], 0.0)
        return function_budget_failures(
            space, f, coeffs, cfg,
            budget=lambda h, a: h[0] + 2 * h[1] + 2 * (1 + a) * h[3])
    vals = {k: float(v) for k, v in c.items()}
    out = _nonneg(list(vals), list(vals.values()))
    if n == 2:
        b = vals["a"] + vals["beta"] + vals["gamma"] + vals["k"] + 2 * alpha * vals["l"]
        if not b < 1:
            out.append(f"a + beta + gamma + k + 2 alpha l = {b!r}, must be < 1")
    elif n == 3:
        if not vals["beta"] < 0.5:
            out.append(f"beta = {vals['beta']!r} is outside [0, 1/2)")
    elif n == 4:
        if not vals["beta"] * (1 + 2 * alpha) < 1:
            out.append(f"beta = {vals['beta']!r} is outside [0, 1/(1 + 2 alpha))")
    elif n == 5:
        if not vals["a"] + vals["beta"] < 1:
            out.append(f"a + beta = {vals['a'] + vals['beta']!r}, must be < 1")
    elif n == 6:
        if not vals["a"] < 1:
            out.append(f"a = {vals['a']!r}, must be < 1")
    return out


def check_corollaries(space, f: Callable, variant, constants,
                      cfg: CheckConfig | None = None) -> ViolationReport:
    """Check a corollary1..corollary6 certificate with its own inequality and budget."""
    cfg = cfg or CheckConfig()
    n = _variant(variant)
    c = _named(COROLLARY_PARAMS[n], constants)
    if n != 1:
        for k, v in c.items():
            if isinstance(v, Mapping) or callable(v):
                raise CertificateError(f"corollary {n} takes constants, {k} is not one")
    d = space.d

    if n == 1:
        def lhs_rhs(x, y):
            fx, fy = f(x), f(y)
            eta, lam, mu = (_coef(c[k], x) for k in ("eta", "lam", "mu"))
            rhs = eta * d(x, y) + lam * (d(x, fx) + d(y, fy)) + mu * (d(fx, y) + d(x, fy))
            return d(fx, fy), rhs
    elif n == 2:
        a, beta, gamma, k, l = (float(c[k]) for k in COROLLARY_PARAMS[2])

        def lhs_rhs(x, y):
            fx, fy = f(x), f(y)
            rhs = (a * d(x, y) + beta * d(x, fx) + gamma * d(y, fy)
                   + k * d(fx, y) + l * d(x, fy))
            return d(fx, fy), rhs
    elif n == 3:
        beta = float(c["beta"])

        def lhs_rhs(x, y):
            fx, fy = f(x), f(y)
            return d(fx, fy), beta * (d(x, fx) + d(y, fy))
    elif n == 4:
        beta = float(c["beta"])

        def lhs_rhs(x, y):
            fx, fy = f(x), f(y)
            return d(fx, fy), beta * (d(fx, y) + d(x, fy))
    elif n == 5:
        a, beta = float(c["a"]), float(c["beta"])

        def lhs_rhs(x, y):
            fx, fy = f(x), f(y)
            return d(fx, fy), a * d(x, y) + beta * d(fx, y)
    else:
        a = float(c["a"])

        def lhs_rhs(x, y):
            return d(f(x), f(y)), a * d(x, y)

    pairs, exhaustive = pair_domain(space, cfg)
    rep = _scan(f"corollary{n}", pairs, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = _corollary_budget(n, c, space.alpha, space, f, cfg)
    if not rep.budget_failures:
        pts, _ = check_points(space, cfg)
        emb = embed_corollary(n, c)
        rep.extra["ratio"] = max(theorem1_ratio(emb, x, space.alpha) for x in pts)
    return rep


# -- implicit condition ---------------------------------------------------------------

@dataclass(frozen=True)
class ImplicitCoefficients:
    a: float
    beta: float
    gamma: float
    k: float
    l: float
    s: float
    t: float

    NAMES = ("a", "beta", "gamma", "k", "l", "s", "t")

    def values(self) -> tuple:
        return (self.a, self.beta, self.gamma, self.k, self.l, self.s, self.t)

    @property
    def step_ratio(self) -> float:
        """(s - beta) / (a + gamma): the per-step ratio the iteration actually obeys."""
        den = self.a + self.gamma
        return math.inf if den <= 0 else (self.s - self.beta) / den

    @property
    def uniform_ratio(self) -> float:
        """(s - l) / (a + k)."""
        den = self.a + self.k
        return math.inf if den <= 0 else (self.s - self.l) / den


def implicit_budget_failures(c: ImplicitCoefficients, alpha: float) -> list:
    out = _nonneg(ImplicitCoefficients.NAMES, c.values())
    if not c.s >= c.a >= c.l:
        out.append(f"need s >= a >= l, got s={c.s!r}, a={c.a!r}, l={c.l!r}")
    if not c.gamma >= c.k >= c.t:
        out.append(f"need gamma >= k >= t, got gamma={c.gamma!r}, k={c.k!r}, t={c.t!r}")
    if not c.a + c.k > 0:
        out.append("need a + k > 0")
    else:
        r = c.uniform_ratio
        if not 0 <= r < 1 / alpha:
            out.append(f"(s - l)/(a + k) = {r!r} is outside [0, 1/alpha) = [0, {1 / alpha!r})")
    return out


def check_theorem2(space, f: Callable, coeffs: ImplicitCoefficients,
                   cfg: CheckConfig | None = None) -> ViolationReport:
    """a D(fx,fy) + beta D(x,fx) + gamma D(y,fy) + k D(x,fy) + l D(y,fx) <= s D(x,y) + t D(x,f(fx))."""
    cfg = cfg or CheckConfig()
    a, beta, gamma, k, l, s, t = coeffs.values()
    d = space.d

    def lhs_rhs(x, y):
        fx, fy = f(x), f(y)
        lhs = a * d(fx, fy) + beta * d(x, fx) + gamma * d(y, fy) + k * d(x, fy) + l * d(y, fx)
        return lhs, s * d(x, y) + t * d(x, f(fx))

    pairs, exhaustive = pair_domain(space, cfg)
    rep = _scan("theorem2", pairs, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = implicit_budget_failures(coeffs, space.alpha)
    rep.extra["step_ratio"] = coeffs.step_ratio
    rep.extra["uniform_ratio"] = coeffs.uniform_ratio
    return rep


# -- generalized contractions -----------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedCoefficients:
    """Functions of pairs: constants, callables ``c(x, y)`` or tables keyed by (x, y)."""

    alpha: Any = 0.0
    beta: Any = 0.0
    gamma: Any = 0.0
    delta: Any = 0.0

    NAMES = ("alpha", "beta", "gamma", "delta")

    def fields(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def at(self, x, y) -> tuple:
        return tuple(_coef2(c, x, y) for c in self.fields())


def check_generalized(space, T: Callable, coeffs: GeneralizedCoefficients,
                      cfg: CheckConfig | None = None) -> ViolationReport:
    """D(Tx,Ty) <= alpha D(x,y) + beta D(x,Tx) + gamma D(y,Ty) + delta [D(x,Ty) + D(y,Tx)].

    ``extra["lambda_sup"]`` is the sup of alpha + beta + gamma + 2 K delta
    over the checked pairs; it must be < 1.
    """
    cfg = cfg or CheckConfig()
    _require_constants_off_finite(space, coeffs.fields())
    K = space.alpha
    d = space.d
    pairs, exhaustive = pair_domain(space, cfg)
    budget = []
    lam_sup, arg = -math.inf, None
    for x, y in pairs:
        h = coeffs.at(x, y)
        for name, v in zip(GeneralizedCoefficients.NAMES, h):
            if not 0 <= v < 1 and len(budget) < 50:
                budget += _in_unit(name, v, f"({_fmt(x)}, {_fmt(y)})")
        lam = h[0] + h[1] + h[2] + 2 * K * h[3]
        if lam > lam_sup:
            lam_sup, arg = lam, (x, y)
    if not lam_sup < 1:
        budget.append(f"lambda = sup(alpha + beta + gamma + 2K delta) = {lam_sup!r} >= 1, "
                      f"attained at ({_fmt(arg[0])}, {_fmt(arg[1])})")

    def lhs_rhs(x, y):
        tx, ty = T(x), T(y)
        al, be, ga, de = coeffs.at(x, y)
        rhs = al * d(x, y) + be * d(x, tx) + ga * d(y, ty) + de * (d(x, ty) + d(y, tx))
        return d(tx, ty), rhs

    rep = _scan("generalized", pairs, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = budget
    rep.extra["lambda_sup"] = lam_sup
    rep.extra["lambda_sup_at"] = list(arg)
    return rep


def _max_form(d, x, y, tx, ty) -> float:
    return max(d(x, y), d(x, tx), d(y, ty), 0.5 * (d(x, ty) + d(y, tx)))


def check_eq10(space, T: Callable, lam: float, cfg: CheckConfig | None = None) -> ViolationReport:
    """D(Tx,Ty) <= lam max{D(x,y), D(x,Tx), D(y,Ty), (D(x,Ty) + D(y,Tx))/2}, 0 < lam < 1."""
    cfg = cfg or CheckConfig()
    d = space.d

    def lhs_rhs(x, y):
        tx, ty = T(x), T(y)
        return d(tx, ty), lam * _max_form(d, x, y, tx, ty)

    pairs, exhaustive = pair_domain(space, cfg)
    rep = _scan("eq10", pairs, exhaustive, lhs_rhs, cfg)
    if not 0 < lam < 1:
        rep.budget_failures.append(f"lambda = {lam!r} is outside (0, 1)")
    rep.extra["ratio"] = lam * space.alpha
    return rep


def check_eq1m(space, T: Callable, lams: Sequence[float],
               cfg: CheckConfig | None = None) -> ViolationReport:
    """D(Tx,Ty) <= l1 D(x,Tx) + l2 D(y,Ty) + l3 D(x,Ty) + l4 D(y,Tx).

    Budget: each l_i in [0, 1) and l1 + l2 + K (l3 + l4) < min(1, 2/K).
    """
    cfg = cfg or CheckConfig()
    if len(lams) != 4:
        raise CertificateError(f"eq1m takes 4 coefficients, got {len(lams)}")
    l1, l2, l3, l4 = (float(v) for v in lams)
    K = space.alpha
    d = space.d

    def lhs_rhs(x, y):
        tx, ty = T(x), T(y)
        return d(tx, ty), l1 * d(x, tx) + l2 * d(y, ty) + l3 * d(x, ty) + l4 * d(y, tx)

    pairs, exhaustive = pair_domain(space, cfg)
    rep = _scan("eq1m", pairs, exhaustive, lhs_rhs, cfg)
    for i, v in enumerate((l1, l2, l3, l4), 1):
        rep.budget_failures += _in_unit(f"lambda{i}", v)
    b = l1 + l2 + K * (l3 + l4)
    if not b < min(1.0, 2.0 / K):
        rep.budget_failures.append(f"l1 + l2 + K(l3 + l4) = {b!r}, must be < min(1, 2/K)")
    den = 1 - l2 - K * l3
    rep.extra["ratio"] = math.inf if den <= 0 else (l1 + K * l3) / den
    return rep


# -- families ---------------------------------------------------------------------------

@dataclass
class FamilyCoefficients:
    lambda_of: dict
    beta_index: Any


def check_family(space, family: Mapping, coeffs: FamilyCoefficients,
                 cfg: CheckConfig | None = None) -> ViolationReport:
    """For every index i: D(T_i x, T_b y) <= lam(i) max{D(x,y), D(x,T_i x), D(y,T_b y), (D(x,T_b y) + D(y,T_i x))/2}."""
    cfg = cfg or CheckConfig()
    K = space.alpha
    b = coeffs.beta_index
    if b not in family:
        raise CertificateError(f"beta index {b!r} is not in the family")
    missing = [i for i in family if i not in coeffs.lambda_of]
    if missing:
        raise CertificateError(f"no lambda for indices {missing}")
    d = space.d
    Tb = family[b]
    pairs, exhaustive = pair_domain(space, cfg)
    rep = ViolationReport("family", exhaustive=exhaustive)
    for i, Ti in family.items():
        lam = float(coeffs.lambda_of[i])
        rep.budget_failures += _in_unit("lambda", lam, f"[{i}]")
        if not lam * K < 1:
            rep.budget_failures.append(f"lambda[{i}] K = {lam * K!r}, must be < 1")
        for x, y in pairs:
            tx, ty = Ti(x), Tb(y)
            lhs, rhs = d(tx, ty), lam * _max_form(d, x, y, tx, ty)
            if violates(lhs, rhs, cfg.atol, cfg.rtol):
                rep.violations.append(Violation((i, x, y), lhs, rhs))
        rep.n_checked += len(pairs)
    return rep


# -- coupled maps ------------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledCoefficients:
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0
    a5: float = 0.0
    a6: float = 0.0

    def values(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4, self.a5, self.a6)

    def budget(self, K: float) -> float:
        a1, a2, a3, a4, a5, a6 = self.values()
        return 2 * K * (a1 + a3) + (K + 1) * (a2 + a4) + (K * K + K) * (a5 + a6)

    def rate(self, K: float) -> float:
        """(2a1 + a2 + 2a3 + a4 + K(a5 + a6)) / (2 - a2 - a4 - K(a5 + a6))."""
        a1, a2, a3, a4, a5, a6 = self.values()
        den = 2 - a2 - a4 - K * (a5 + a6)
        if den <= 0:
            return math.inf
        return (2 * a1 + a2 + 2 * a3 + a4 + K * (a5 + a6)) / den


def coupled_budget_failures(c: CoupledCoefficients, K: float) -> list:
    out = _nonneg([f"a{i}" for i in range(1, 7)], c.values())
    b = c.budget(K)
    if not b < 2:
        out.append(f"2K(a1+a3) + (K+1)(a2+a4) + (K^2+K)(a5+a6) = {b!r}, must be < 2")
    lam = c.rate(K)
    if not lam < 1 / K:
        out.append(f"rate lambda = {lam!r}, must be < 1/K = {1 / K!r}")
    return out


def _range_failures(space, F, g, g_inv, cfg: CheckConfig) -> list:
    """F(X x X) inside g(X): exact on finite spaces, via the section on samples otherwise."""
    if isinstance(space, FiniteSpace):
        image = {g(p) for p in space}
        bad = sorted({repr(F(x, y)) for x in space for y in space if F(x, y) not in image})
        return [f"F(X x X) is not inside g(X): {', '.join(bad)} not attained by g"] if bad else []
    if g_inv is None:
        return []
    pairs, _ = pair_domain(space, cfg)
    for x, y in pairs:
        z = F(x, y)
        if violates(space.d(g(g_inv(z)), z), 0.0, cfg.atol, cfg.rtol):
            return [f"g(g_inv(F({_fmt(x)}, {_fmt(y)}))) != F({_fmt(x)}, {_fmt(y)})"]
    return []


def check_coupled(space, F: Callable, g: Callable, coeffs: CoupledCoefficients,
                  cfg: CheckConfig | None = None, g_inv: Callable | None = None) -> ViolationReport:
    """D(F(x,y),F(u,v)) <= a1 D(gx,gu) + a2 D(F(x,y),gx) + a3 D(gy,gv)
    + a4 D(F(u,v),gu) + a5 D(F(x,y),gu) + a6 D(F(u,v),gx) over 4-tuples."""
    cfg = cfg or CheckConfig()
    a1, a2, a3, a4, a5, a6 = coeffs.values()
    d = space.d

    def lhs_rhs(x, y, u, v):
        fxy, fuv = F(x, y), F(u, v)
        gx, gy, gu, gv = g(x), g(y), g(u), g(v)
        rhs = (a1 * d(gx, gu) + a2 * d(fxy, gx) + a3 * d(gy, gv)
               + a4 * d(fuv, gu) + a5 * d(fxy, gu) + a6 * d(fuv, gx))
        return d(fxy, fuv), rhs

    quads, exhaustive = quad_domain(space, cfg)
    rep = _scan("coupled", quads, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = (coupled_budget_failures(coeffs, space.alpha)
                           + _range_failures(space, F, g, g_inv, cfg))
    rep.extra["lambda"] = coeffs.rate(space.alpha)
    return rep


COUPLED_COROLLARY_PARAMS = {
    "2.4": ("alpha", "beta", "gamma"),
    "2.5": ("alpha", "beta"),
    "2.6": ("alpha", "beta"),
}


def _coupled_variant(variant) -> str:
    v = str(variant).replace("coupled_cor", "").replace("cor", "").replace(".", "")
    key = {"24": "2.4", "25": "2.5", "26": "2.6"}.get(v)
    if key is None:
        raise CertificateError(f"unknown coupled corollary {variant!r}")
    return key


def embed_coupled_corollary(variant, constants) -> CoupledCoefficients:
    key = _coupled_variant(variant)
    c = {k: float(v) for k, v in _named(COUPLED_COROLLARY_PARAMS[key], constants).items()}
    if key == "2.4":
        return CoupledCoefficients(c["alpha"], c["alpha"], c["beta"], c["beta"], c["gamma"], c["gamma"])
    if key == "2.5":
        return CoupledCoefficients(a1=c["alpha"], a3=c["beta"])
    return CoupledCoefficients(a5=c["alpha"], a6=c["beta"])


def check_coupled_corollaries(space, F: Callable, g: Callable, variant, constants,
                              cfg: CheckConfig | None = None,
                              g_inv: Callable | None = None) -> ViolationReport:
    """Coupled special cases with their own inequalities and budgets.

    2.4: alpha[D(gx,gu) + D(F(x,y),gx)] + beta[D(gy,gv) + D(F(u,v),gu)]
         + gamma[D(F(x,y),gu) + D(F(u,v),gx)], (3K+1)(alpha+beta) + 2(K^2+K) gamma < 2
    2.5: alpha D(gx,gu) + beta D(gy,gv), alpha + beta < 1/K
    2.6: alpha D(F(x,y),gu) + beta D(F(u,v),gx), alpha + beta < 2/(K^2+K)
    """
    cfg = cfg or CheckConfig()
    key = _coupled_variant(variant)
    c = {k: float(v) for k, v in _named(COUPLED_COROLLARY_PARAMS[key], constants).items()}
    K = space.alpha
    d = space.d
    al, be, ga = c["alpha"], c["beta"], c.get("gamma", 0.0)

    if key == "2.4":
        def rhs_of(fxy, fuv, gx, gy, gu, gv):
            return (al * (d(gx, gu) + d(fxy, gx)) + be * (d(gy, gv) + d(fuv, gu))
                    + ga * (d(fxy, gu) + d(fuv, gx)))
        b = (3 * K + 1) * (al + be) + 2 * (K * K + K) * ga
        bound, label = 2.0, "(3K+1)(alpha+beta) + 2(K^2+K) gamma"
    elif key == "2.5":
        def rhs_of(fxy, fuv, gx, gy, gu, gv):
            return al * d(gx, gu) + be * d(gy, gv)
        b, bound, label = al + be, 1 / K, "alpha + beta"
    else:
        def rhs_of(fxy, fuv, gx, gy, gu, gv):
            return al * d(fxy, gu) + be * d(fuv, gx)
        b, bound, label = al + be, 2 / (K * K + K), "alpha + beta"

    def lhs_rhs(x, y, u, v):
        fxy, fuv = F(x, y), F(u, v)
        return d(fxy, fuv), rhs_of(fxy, fuv, g(x), g(y), g(u), g(v))

    quads, exhaustive = quad_domain(space, cfg)
    rep = _scan(f"coupled_cor{key.replace('.', '')}", quads, exhaustive, lhs_rhs, cfg)
    rep.budget_failures = _nonneg(list(c), list(c.values()))
    if not b < bound:
        rep.budget_failures.append(f"{label} = {b!r}, must be < {bound!r}")
    rep.budget_failures += _range_failures(space, F, g, g_inv, cfg)
    rep.extra["lambda"] = embed_coupled_corollary(key, c).rate(K)
    return rep


# -- vectorised linear forms (for coefficient grid sweeps) ---------------------------------

LINEAR_KINDS = ("corollary2", "corollary3", "corollary4", "corollary5", "corollary6", "generalized")


def linear_terms(space: FiniteSpace, f: Callable, kind: str) -> tuple[list, np.ndarray, np.ndarray]:
    """Witness pairs, LHS D(fx, fy) and the term matrix W with RHS = W @ coeffs.

    Valid for constant-coefficient certificates whose right side is linear in
    the coefficients.
    """
    if kind not in LINEAR_KINDS:
        raise CertificateError(f"{kind!r} has no linear form")
    d = space.d
    pairs = list(itertools.product(space.points, repeat=2))
    lhs, rows = [], []
    for x, y in pairs:
        fx, fy = f(x), f(y)
        lhs.append(d(fx, fy))
        dxy, dxfx, dyfy, dfxy, dxfy = d(x, y), d(x, fx), d(y, fy), d(fx, y), d(x, fy)
        rows.append({
            "corollary2": (dxy, dxfx, dyfy, dfxy, dxfy),
            "corollary3": (dxfx + dyfy,),
            "corollary4": (dfxy + dxfy,),
            "corollary5": (dxy, dfxy),
            "corollary6": (dxy,),
            "generalized": (dxy, dxfx, dyfy, dxfy + dfxy),
        }[kind])
    return pairs, np.array(lhs), np.array(rows, dtype=float)


def linear_budget_mask(kind: str, grid: np.ndarray, alpha: float) -> np.ndarray:
    """Rows of a coefficient grid that satisfy the kind's budget."""
    g = np.asarray(grid, dtype=float)
    ok = np.all(g >= 0, axis=1)
    if kind == "corollary2":
        return ok & (g[:, 0] + g[:, 1] + g[:, 2] + g[:, 3] + 2 * alpha * g[:, 4] < 1)
    if kind == "corollary3":
        return ok & (g[:, 0] < 0.5)
    if kind == "corollary4":
        return ok & (g[:, 0] * (1 + 2 * alpha) < 1)
    if kind == "corollary5":
        return ok & (g[:, 0] + g[:, 1] < 1)
    if kind == "corollary6":
        return ok & (g[:, 0] < 1)
    if kind == "generalized":
        return ok & np.all(g < 1, axis=1) & (g[:, 0] + g[:, 1] + g[:, 2] + 2 * alpha * g[:, 3] < 1)
    raise CertificateError(f"{kind!r} has no linear form")


def linear_inequality_mask(lhs: np.ndarray, W: np.ndarray, grid: np.ndarray,
                           atol: float = ATOL, rtol: float = RTOL) -> np.ndarray:
    """Rows of ``grid`` whose inequality holds at every pair (same tolerance as the checkers)."""
    rhs = np.asarray(grid, dtype=float) @ W.T
    bad = lhs[None, :] > rhs + atol + rtol * np.abs(rhs)
    return ~bad.any(axis=1)


# -- tagged union ----------------------------------------------------------------------------

CERTIFICATE_PARAMS = {
    "theorem1": FunctionCoefficients.NAMES,
    **{f"corollary{n}": names for n, names in COROLLARY_PARAMS.items()},
    "theorem2": ImplicitCoefficients.NAMES,
    "generalized": GeneralizedCoefficients.NAMES,
    "eq10": ("lam",),
    "eq1m": ("lam1", "lam2", "lam3", "lam4"),
    "family": ("lambdas", "beta_index"),
    "coupled": ("a1", "a2", "a3", "a4", "a5", "a6"),
    **{f"coupled_cor{k.replace('.', '')}": names for k, names in COUPLED_COROLLARY_PARAMS.items()},
}


@dataclass
class Certificate:
    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in CERTIFICATE_PARAMS:
            raise CertificateError(f"unknown certificate kind {self.kind!r}; "
                                   f"expected one of {sorted(CERTIFICATE_PARAMS)}")
        names = CERTIFICATE_PARAMS[self.kind]
        self.params = _named(names, self.params) if self.kind != "family" else dict(self.params)
        if self.kind == "family":
            if set(self.params) != set(names):
                raise CertificateError(f"family certificate needs {list(names)}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: Mapping) -> Certificate:
        if "kind" not in data:
            raise CertificateError("certificate has no 'kind'")
        params = {k: v for k, v in data.items() if k != "kind"}
        return cls(data["kind"], params)


def check_certificate(space, mapping: MappingSpec, cert: Certificate,
                      cfg: CheckConfig | None = None) -> ViolationReport:
    cfg = cfg or CheckConfig()
    k, p = cert.kind, cert.params
    if k.startswith("coupled"):
        if mapping.F is None or mapping.g is None:
            raise CertificateError(f"{k} needs a binary map F and a map g")
        if k == "coupled":
            return check_coupled(space, mapping.F, mapping.g,
                                 CoupledCoefficients(*(float(p[f"a{i}"]) for i in range(1, 7))),
                                 cfg, mapping.g_inv)
        return check_coupled_corollaries(space, mapping.F, mapping.g, k, p, cfg, mapping.g_inv)
    if k == "family":
        fam = mapping.family
        if not fam:
            raise CertificateError("family certificate needs an indexed family of maps")
        lambdas = {_index_key(fam, i): float(v) for i, v in p["lambdas"].items()}
        return check_family(space, fam, FamilyCoefficients(lambdas, _index_key(fam, p["beta_index"])), cfg)
    f = mapping.f
    if f is None:
        raise CertificateError(f"{k} needs a self-map f")
    if k == "theorem1":
        return check_theorem1(space, f, FunctionCoefficients(**p), cfg)
    if k.startswith("corollary"):
        return check_corollaries(space, f, k, p, cfg)
    if k == "theorem2":
        return check_theorem2(space, f, ImplicitCoefficients(**{n: float(v) for n, v in p.items()}), cfg)
    if k == "generalized":
        return check_generalized(space, f, GeneralizedCoefficients(**p), cfg)
    if k == "eq10":
        return check_eq10(space, f, float(p["lam"]), cfg)
    return check_eq1m(space, f, [p[f"lam{i}"] for i in range(1, 5)], cfg)


def _index_key(family: Mapping, i):
    """JSON object keys are strings; map them back onto the family's own keys."""
    if i in family:
        return i
    for key in family:
        if str(key) == str(i):
            return key
    raise CertificateError(f"index {i!r} is not in the family")


def certificate_ratio(cert: Certificate, space, x0=None) -> float:
    """Geometric ratio the Picard (or alternating, or coupled) iteration obeys under ``cert``."""
    k, p = cert.kind, cert.params
    K = space.alpha
    if k == "theorem1":
        return theorem1_ratio(FunctionCoefficients(**p), x0, K)
    if k.startswith("corollary"):
        return theorem1_ratio(embed_corollary(k, p), x0, K)
    if k == "theorem2":
        c = ImplicitCoefficients(**{n: float(v) for n, v in p.items()})
        return max(c.step_ratio, c.uniform_ratio)
    if k == "generalized":
        c = GeneralizedCoefficients(**p)
        if any(isinstance(v, Mapping) or callable(v) for v in c.fields()):
            raise CertificateError("ratio of a non-constant generalized certificate comes from "
                                   "check_generalized(...).extra['lambda_sup']")
        a, b, g, dl = (float(v) for v in c.fields())
        return a + b + g + 2 * K * dl
    if k == "eq10":
        return float(p["lam"]) * K
    if k == "eq1m":
        l1, l2, l3, _ = (float(p[f"lam{i}"]) for i in range(1, 5))
        den = 1 - l2 - K * l3
        return math.inf if den <= 0 else (l1 + K * l3) / den
    if k == "family":
        raise CertificateError("family ratios depend on the iterated index; use family_solve")
    if k == "coupled":
        return CoupledCoefficients(*(float(p[f"a{i}"]) for i in range(1, 7))).rate(K)
    return embed_coupled_corollary(k, p).rate(K)
