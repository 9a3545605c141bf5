"""Picard, alternating-family and coupled iterations with certified stopping.

All three iterations share one driver.  A step distance ``d_n`` is recorded
for every iterate (for coupled runs ``d_n = D(g x_n, g x_{n+1}) + D(g y_n, g y_{n+1})``)
and must decay geometrically with the ratio ``r`` supplied by a certificate.
With ``r < 1/K`` the relaxed polygon inequality gives

    D(x_n, x_m) <= sum_j K^(j+1) d_(n+j) <= K r^n d_0 / (1 - K r)

which is the a-priori bound stored in the trace and used to stop.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .spaces import StructureError

CONVERGED = "converged"
MAX_ITER = "max_iter"
RATIO_INVALID = "ratio_invalid"


class CertificateBreach(RuntimeError):
    """An observed step broke the certified geometric decay."""

    def __init__(self, step: int, observed: float, ratio: float, trace: ConvergenceTrace):
        super().__init__(f"step {step}: observed ratio {observed!r} exceeds certified {ratio!r}")
        self.step = step
        self.observed = observed
        self.ratio = ratio
        self.trace = trace


class CommonFixedPointFailure(RuntimeError):
    def __init__(self, residuals: dict, trace: ConvergenceTrace):
        super().__init__(f"limit is not a common fixed point: residuals {residuals}")
        self.residuals = residuals
        self.trace = trace


class SectionError(StructureError):
    """The caller's section g_inv is not a right inverse of g at a produced point."""


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 10000
    ratio_source: str = "certified"  # or "empirical"
    seed: int = 0
    rtol: float = 1e-9
    atol: float = 0.0
    warmup: int = 8
    section_atol: float = 1e-12

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.ratio_source not in ("certified", "empirical"):
            raise ValueError(f"ratio_source must be 'certified' or 'empirical', got {self.ratio_source!r}")


def apriori_bound(K: float, ratio: float, n: int, d0: float) -> float:
    """K r^n d0 / (1 - K r): bound on D(x_n, x*) given geometric decay with ratio r < 1/K."""
    if d0 == 0:
        return 0.0
    if not K * ratio < 1:
        return math.inf
    return K * ratio ** n * d0 / (1 - K * ratio)


def naive_apriori_bound(K: float, ratio: float, n: int, d0: float) -> float:
    """K r^n d0 / (1 - r).

    Only valid when D obeys the polygon inequality with a single factor K over
    chains of any length; fails e.g. for |x - y|^2.  Kept for comparison.
    """
    if d0 == 0:
        return 0.0
    return K * ratio ** n * d0 / (1 - ratio)


@dataclass
class ConvergenceTrace:
    iterates: list
    step_dists: list
    ratio: float
    apriori_bounds: list
    terminated: str
    K: float = 1.0
    ratio_source: str = "certified"
    residuals: dict = field(default_factory=dict)
    coupled: bool = False

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    @property
    def converged(self) -> bool:
        return self.terminated == CONVERGED

    def summary(self) -> dict:
        last = self.iterates[-1]
        return {
            "terminated": self.terminated,
            "iterations": self.iterations,
            "ratio": self.ratio,
            "ratio_source": self.ratio_source,
            "K": self.K,
            "coupled": self.coupled,
            "point_type": _point_type(self.iterates),
            "result": list(last) if self.coupled else last,
            "residuals": dict(self.residuals),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ptype = _point_type(self.iterates)
        cols = ["x", "y"] if self.coupled else ["point"]
        w.writerow(["iter", *cols, "step_dist", "apriori_bound"])
        for n, (p, d, b) in enumerate(zip(self.iterates, self.step_dists, self.apriori_bounds)):
            pts = p if self.coupled else (p,)
            w.writerow([n, *(_fmt_point(q, ptype) for q in pts), f"{d:.17g}", f"{b:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_files(cls, csv_text: str, summary: Mapping) -> ConvergenceTrace:
        rows = list(csv.reader(io.StringIO(csv_text)))
        header, body = rows[0], rows[1:]
        coupled = header[1:3] == ["x", "y"]
        ptype = summary["point_type"]
        iterates, steps, bounds = [], [], []
        for row in body:
            if coupled:
                iterates.append((_parse_point(row[1], ptype), _parse_point(row[2], ptype)))
            else:
                iterates.append(_parse_point(row[1], ptype))
            steps.append(float(row[-2]))
            bounds.append(float(row[-1]))
        return cls(iterates, steps, summary["ratio"], bounds, summary["terminated"],
                   summary["K"], summary["ratio_source"], dict(summary["residuals"]), coupled)


def _point_type(iterates: list) -> str:
    flat = [q for p in iterates for q in (p if isinstance(p, tuple) else (p,))]
    return "real" if all(isinstance(q, float) for q in flat) else "label"


def _fmt_point(q, ptype: str) -> str:
    return f"{q:.17g}" if ptype == "real" else json.dumps(q)


def _parse_point(s: str, ptype: str):
    return float(s) if ptype == "real" else json.loads(s)


def _drive(step: Callable, s0, K: float, ratio: float | None, cfg: SolverConfig,
           coupled: bool = False) -> ConvergenceTrace:
    """Run ``state -> (next_state, step_dist)`` until the a-priori bound is below tol.

    ``ratio=None`` means empirical: the ratio is the largest observed step
    ratio, estimated over ``cfg.warmup`` steps and tracked afterwards.
    """
    empirical = ratio is None
    trace = ConvergenceTrace([s0], [], math.nan if empirical else ratio, [], MAX_ITER, K,
                             "empirical" if empirical else "certified", coupled=coupled)
    if not empirical and not 0 <= ratio < 1 / K:
        trace.terminated = RATIO_INVALID
        trace.step_dists.append(math.nan)
        trace.apriori_bounds.append(math.inf)
        return trace

    state = s0
    nxt, d = step(state, 0)
    trace.step_dists.append(d)
    d0 = d
    observed = 0.0
    n = 0
    while True:
        if d == 0:
            trace.terminated = CONVERGED
            break
        if empirical:
            if n >= cfg.warmup:
                trace.ratio = observed
                if not observed < 1 / K:
                    trace.terminated = RATIO_INVALID
                    break
                if apriori_bound(K, observed, n, d0) < cfg.tol:
                    trace.terminated = CONVERGED
                    break
        elif apriori_bound(K, ratio, n, d0) < cfg.tol:
            trace.terminated = CONVERGED
            break
        if n >= cfg.max_iter:
            break
        prev = d
        state = nxt
        n += 1
        nxt, d = step(state, n)
        trace.iterates.append(state)
        trace.step_dists.append(d)
        r = d / prev
        if empirical:
            observed = max(observed, r)
        elif d > ratio * prev * (1 + cfg.rtol) + cfg.atol:
            trace.apriori_bounds = [apriori_bound(K, ratio, i, d0) for i in range(n + 1)]
            trace.terminated = "certificate_breach"
            raise CertificateBreach(n, r, ratio, trace)

    if empirical:
        trace.ratio = observed
    trace.apriori_bounds = [apriori_bound(K, trace.ratio, i, d0) for i in range(len(trace.iterates))]
    return trace


def picard(space, f: Callable, x0, lam: float | None = None,
           cfg: SolverConfig | None = None) -> tuple[Any, ConvergenceTrace]:
    """Iterate x_{n+1} = f(x_n) from ``x0``.

    ``lam`` is the certified step ratio and must lie in [0, 1/K); otherwise the
    trace terminates with ``ratio_invalid`` before iterating.  Returns the last
    iterate and the trace; ``trace.residuals["fixed"]`` is D(x*, f(x*)).
    """
    cfg = cfg or SolverConfig()
    d = space.d
    if cfg.ratio_source == "certified" and lam is None:
        raise ValueError("certified mode needs a ratio lam")
    ratio = None if cfg.ratio_source == "empirical" else lam

    def step(x, n):
        fx = f(x)
        return fx, d(x, fx)

    trace = _drive(step, x0, space.alpha, ratio, cfg)
    trace.residuals["fixed"] = trace.step_dists[-1]
    return trace.iterates[-1], trace


def family_solve(space, family: Mapping, beta_index, alpha_index, x0, lam: float | None = None,
                 cfg: SolverConfig | None = None) -> tuple[Any, ConvergenceTrace]:
    """Alternate x_{2n+1} = T_alpha x_{2n}, x_{2n+2} = T_beta x_{2n+1}.

    ``lam`` is lambda(alpha_index); the steps decay with ratio lam * K, which must
    be below 1/K for the a-priori bound.  After convergence both residuals
    D(T_alpha x*, x*) and D(T_beta x*, x*) must be within tol.
    """
    cfg = cfg or SolverConfig()
    K = space.alpha
    d = space.d
    Ta, Tb = family[alpha_index], family[beta_index]
    if cfg.ratio_source == "certified":
        if lam is None:
            raise ValueError("certified mode needs lambda(alpha_index)")
        ratio = lam * K
    else:
        ratio = None

    def step(x, n):
        nx = Ta(x) if n % 2 == 0 else Tb(x)
        return nx, d(x, nx)

    trace = _drive(step, x0, K, ratio, cfg)
    x = trace.iterates[-1]
    trace.residuals = {"alpha": d(Ta(x), x), "beta": d(Tb(x), x)}
    if trace.converged and max(trace.residuals.values()) > cfg.tol:
        raise CommonFixedPointFailure(dict(trace.residuals), trace)
    return x, trace


def coupled_solve(space, F: Callable, g: Callable, g_inv: Callable, x0, y0, lam: float,
                  cfg: SolverConfig | None = None) -> tuple[tuple, ConvergenceTrace]:
    """Coupled iteration g x_{n+1} = F(x_n, y_n), g y_{n+1} = F(y_n, x_n).

    ``lam`` is the coupled rate; the caller's section ``g_inv`` turns each
    F-value back into a point.  Returns the last pair and its trace with
    residuals D(F(x*,y*), g x*) and D(F(y*,x*), g y*).
    """
    cfg = cfg or SolverConfig()
    d = space.d

    def lift(z):
        p = g_inv(z)
        if d(g(p), z) > cfg.section_atol:
            raise SectionError(f"g(g_inv({z!r})) = {g(p)!r} differs from {z!r}")
        return p

    def step(state, n):
        x, y = state
        fxy, fyx = F(x, y), F(y, x)
        return (lift(fxy), lift(fyx)), d(g(x), fxy) + d(g(y), fyx)

    ratio = None if cfg.ratio_source == "empirical" else lam
    trace = _drive(step, (x0, y0), space.alpha, ratio, cfg, coupled=True)
    x, y = trace.iterates[-1]
    trace.residuals = {"x": d(F(x, y), g(x)), "y": d(F(y, x), g(y))}
    return (x, y), trace


@dataclass
class CommonFixedPoint:
    z: Any
    status: str  # ok | not_coincidence | not_w_compatible | off_diagonal | not_fixed
    residuals: dict

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def coupled_common_fixed_point(space, F: Callable, g: Callable, pair: tuple,
                               cfg: SolverConfig | None = None) -> CommonFixedPoint:
    """Upgrade a coupled coincidence pair to the common fixed point z = g(x*).

    Requires w-compatibility at the pair, g(F(x*,y*)) = F(gx*, gy*), and the
    diagonal property g x* = g y*; then checks g z = F(z, z) = z.
    """
    cfg = cfg or SolverConfig()
    d = space.d
    tol = cfg.tol
    x, y = pair
    gx, gy = g(x), g(y)
    res = {"coincidence_x": d(F(x, y), gx), "coincidence_y": d(F(y, x), gy)}
    if max(res.values()) > tol:
        return CommonFixedPoint(None, "not_coincidence", res)
    res["w_compatibility"] = d(g(F(x, y)), F(gx, gy))
    if res["w_compatibility"] > tol:
        return CommonFixedPoint(None, "not_w_compatible", res)
    res["diagonal"] = d(gx, gy)
    z = gx
    gz = g(z)
    res["gz_vs_Fzz"] = d(gz, F(z, z))
    res["z_vs_gz"] = d(z, gz)
    if res["diagonal"] > tol:
        return CommonFixedPoint(z, "off_diagonal", res)
    if max(res["gz_vs_Fzz"], res["z_vs_gz"]) > tol:
        return CommonFixedPoint(z, "not_fixed", res)
    return CommonFixedPoint(z, "ok", res)

