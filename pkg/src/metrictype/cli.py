"""Command-line front end.

One JSON config per invocation (``"schema": 1``); flags only override solver
settings and the output directory.  Exit status: 0 success, 1 mathematical
failure (axiom or certificate violation, non-convergence), 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import certificates as cert
from . import oracle, solvers, spaces
from .maps import (MappingSpec, affine, affine_section, bilinear, binary_table_map, identity,
                   table_map)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class ConfigError(ValueError):
    pass


def _field(obj: dict, key: str, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in obj:
        raise ConfigError(f"{where}.{key}: missing field")
    return obj[key]


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA}, got {cfg.get('schema')!r}")
    return cfg


# -- builders -----------------------------------------------------------------------

def build_space(conf: dict):
    kind = conf.get("type", "finite") if isinstance(conf, dict) else None
    if kind == "finite":
        try:
            return spaces.FiniteSpace.from_dict(conf)
        except spaces.StructureError as exc:
            raise ConfigError(f"space: {exc}") from None
    if kind == "interval":
        try:
            return spaces.power_interval(float(conf.get("a", 0.0)), float(conf.get("b", 1.0)),
                                         float(conf.get("p", 1.0)))
        except spaces.StructureError as exc:
            raise ConfigError(f"space: {exc}") from None
    raise ConfigError(f"space.type: expected 'finite' or 'interval', got {kind!r}")


def _resolve_label(space, key):
    """JSON keys are strings; match them to labels of any JSON type."""
    if key in space:
        return key
    for p in space:
        if str(p) == str(key) or json.dumps(p) == key:
            return p
    raise ConfigError(f"map: {key!r} is not a point of the space")


def _self_map(conf: dict, space, where: str):
    kind = _field(conf, "type", where)
    if kind == "identity":
        return identity
    if kind == "affine":
        return affine(float(conf.get("c", 1.0)), float(conf.get("d", 0.0)))
    if kind == "constant":
        value = _field(conf, "value", where)
        if isinstance(space, spaces.FiniteSpace):
            value = _resolve_label(space, value)
        return lambda x: value
    if kind == "table":
        if not isinstance(space, spaces.FiniteSpace):
            raise ConfigError(f"{where}: table maps need a finite space")
        tab = _field(conf, "table", where)
        return table_map({_resolve_label(space, k): _resolve_label(space, v) for k, v in tab.items()})
    raise ConfigError(f"{where}.type: unknown map type {kind!r}")


def _section(conf: dict, gconf: dict | None, space, where: str):
    if "g_inv" in conf:
        return _self_map(conf["g_inv"], space, f"{where}.g_inv")
    if gconf is None or gconf.get("type") == "identity":
        return identity
    if gconf.get("type") == "affine":
        try:
            return affine_section(float(gconf.get("c", 1.0)), float(gconf.get("d", 0.0)))
        except spaces.StructureError as exc:
            raise ConfigError(f"{where}.g: {exc}") from None
    raise ConfigError(f"{where}.g_inv: a section of g must be supplied")


def build_mapping(conf: dict, space) -> MappingSpec:
    kind = _field(conf, "type", "map")
    if kind in ("bilinear", "coupled_table"):
        if kind == "bilinear":
            F = bilinear(float(conf.get("u", 0.0)), float(conf.get("v", 0.0)), float(conf.get("w", 0.0)))
        else:
            if not isinstance(space, spaces.FiniteSpace):
                raise ConfigError("map: coupled_table needs a finite space")
            tab = _field(conf, "F", "map")
            F = binary_table_map({_resolve_label(space, x): {_resolve_label(space, y): _resolve_label(space, v)
                                                             for y, v in row.items()}
                                  for x, row in tab.items()})
        gconf = conf.get("g")
        g = _self_map(gconf, space, "map.g") if gconf is not None else identity
        return MappingSpec("coupled", F=F, g=g, g_inv=_section(conf, gconf, space, "map"),
                           description=kind)
    if kind == "family":
        maps = _field(conf, "maps", "map")
        family = {i: _self_map(m, space, f"map.maps.{i}") for i, m in maps.items()}
        a, b = str(_field(conf, "alpha_index", "map")), str(_field(conf, "beta_index", "map"))
        for idx in (a, b):
            if idx not in family:
                raise ConfigError(f"map: index {idx!r} is not in maps")
        return MappingSpec("family", family=family, alpha_index=a, beta_index=b, description=kind)
    return MappingSpec("self", f=_self_map(conf, space, "map"), description=kind)


def build_certificate(conf: dict, space) -> cert.Certificate:
    try:
        c = cert.Certificate.from_dict(conf)
    except cert.CertificateError as exc:
        raise ConfigError(f"certificate: {exc}") from None
    if isinstance(space, spaces.FiniteSpace):
        # per-point tables arrive with string keys
        for name, v in c.params.items():
            if isinstance(v, dict) and name not in ("lambdas",):
                c.params[name] = {_resolve_label(space, k): v2 for k, v2 in v.items()}
    return c


def check_config(cfg: dict, args) -> cert.CheckConfig:
    conf = cfg.get("check", {})
    seed = args.seed if getattr(args, "seed", None) is not None else conf.get("seed", 0)
    return cert.CheckConfig(n_samples=int(conf.get("n_samples", 2000)), grid=int(conf.get("grid", 9)),
                            seed=int(seed))


def solver_config(cfg: dict, args) -> solvers.SolverConfig:
    conf = cfg.get("solver", {})
    tol = args.tol if args.tol is not None else conf.get("tol", 1e-10)
    max_iter = args.max_iter if args.max_iter is not None else conf.get("max_iter", 10000)
    seed = args.seed if args.seed is not None else conf.get("seed", 0)
    try:
        return solvers.SolverConfig(tol=float(tol), max_iter=int(max_iter),
                                    ratio_source=conf.get("ratio_source", "certified"), seed=int(seed))
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None


def _point(value, space, where):
    if isinstance(space, spaces.FiniteSpace):
        return _resolve_label(space, value)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None


# -- output ---------------------------------------------------------------------------

def _out_dir(cfg: dict, args) -> Path | None:
    out = args.out or cfg.get("output", {}).get("dir")
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n"


def _write(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        (out / name).write_text(text, encoding="utf-8")


# -- commands ---------------------------------------------------------------------------

def cmd_verify_space(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    out = _out_dir(cfg, args)
    if isinstance(space, spaces.FiniteSpace):
        rep = spaces.verify_axioms(space)
        payload = rep.to_dict()
        payload["alpha"] = space.alpha
        payload["minimal_alpha"] = spaces.minimal_alpha(space) if not (rep.d1 or rep.d2) else None
    else:
        n = int(cfg.get("check", {}).get("n_samples", 64))
        rep = spaces.verify_axioms_sampled(space, n, seed=check_config(cfg, args).seed)
        payload = rep.to_dict()
        payload["alpha"] = space.alpha
    print(f"axioms: {'PASS' if rep.ok else 'FAIL'}" + (" (not refuted on samples)" if rep.sampled and rep.ok else ""))
    for i in payload["d1"]:
        print(f"  D1 fails at {i}")
    for i, j in payload["d2"]:
        print(f"  D2 fails at ({i}, {j})")
    for v in payload["d3"]:
        print(f"  D3 fails at ({v['x']}, {v['y']}) via {v['chain']}: {v['lhs']!r} > {v['rhs']!r}")
    if payload.get("minimal_alpha") is not None:
        print(f"minimal alpha: {payload['minimal_alpha']!r}")
    _write(out, "axioms.json", _dump(payload))
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_min_alpha(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    if not isinstance(space, spaces.FiniteSpace):
        raise ConfigError("space: min-alpha needs a finite space")
    n = args.chain_len or space.chain_len
    rep = spaces.verify_axioms(space.with_alpha(max(space.alpha, 1.0)))
    if rep.d1 or rep.d2:
        print("minimal alpha undefined: D1/D2 fail")
        return EXIT_FAIL
    a = spaces.minimal_alpha(space, n)
    print(f"minimal alpha (chain_len={n}): {a!r}")
    _write(_out_dir(cfg, args), "min_alpha.json", _dump({"chain_len": n, "minimal_alpha": a}))
    return EXIT_OK if math.isfinite(a) else EXIT_FAIL


def cmd_epsilon_net(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    if not isinstance(space, spaces.FiniteSpace):
        raise ConfigError("space: epsilon-net needs a finite space")
    eps = args.epsilon if args.epsilon is not None else cfg.get("epsilon")
    if eps is None:
        raise ConfigError("epsilon: missing (config field or --epsilon)")
    try:
        net = spaces.greedy_epsilon_net(space, float(eps))
    except spaces.StructureError as exc:
        raise ConfigError(f"epsilon: {exc}") from None
    print(f"epsilon-net ({eps}): {net.centers}")
    _write(_out_dir(cfg, args), "epsilon_net.json", _dump({"epsilon": net.epsilon, "centers": net.centers}))
    return EXIT_OK


def cmd_check(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    mapping = build_mapping(_field(cfg, "map", "config"), space)
    c = build_certificate(_field(cfg, "certificate", "config"), space)
    try:
        rep = cert.check_certificate(space, mapping, c, check_config(cfg, args))
    except cert.CertificateError as exc:
        raise ConfigError(f"certificate: {exc}") from None
    print(rep.table())
    _write(_out_dir(cfg, args), "report.json", _dump(rep.to_dict()))
    return EXIT_OK if rep.ok else EXIT_FAIL


def _ratio(cfg: dict, space, mapping: MappingSpec, x0) -> float | None:
    conf = cfg.get("solver", {})
    if "lambda" in conf:
        return float(conf["lambda"])
    if "certificate" not in cfg:
        return None
    c = build_certificate(cfg["certificate"], space)
    if c.kind == "family":
        lambdas = {str(k): float(v) for k, v in c.params["lambdas"].items()}
        if mapping.alpha_index not in lambdas:
            raise ConfigError(f"certificate.lambdas: no entry for {mapping.alpha_index!r}")
        return lambdas[mapping.alpha_index]
    try:
        return cert.certificate_ratio(c, space, x0)
    except cert.CertificateError as exc:
        raise ConfigError(f"certificate: {exc}") from None


def run_solver(cfg: dict, args, space, mapping: MappingSpec):
    scfg = solver_config(cfg, args)
    conf = cfg.get("solver", {})
    x0 = _point(_field(conf, "x0", "solver"), space, "solver.x0")
    lam = None
    if scfg.ratio_source == "certified":
        lam = _ratio(cfg, space, mapping, x0)
        if lam is None:
            raise ConfigError("solver: certified mode needs solver.lambda or a certificate")
    extra = {}
    if mapping.kind == "coupled":
        y0 = _point(conf.get("y0", conf["x0"]), space, "solver.y0")
        pair, trace = solvers.coupled_solve(space, mapping.F, mapping.g, mapping.g_inv, x0, y0, lam, scfg)
        if trace.converged:
            cfp = solvers.coupled_common_fixed_point(space, mapping.F, mapping.g, pair, scfg)
            extra["common_fixed_point"] = {"z": cfp.z, "status": cfp.status, "residuals": cfp.residuals}
        result = pair
    elif mapping.kind == "family":
        result, trace = solvers.family_solve(space, mapping.family, mapping.beta_index,
                                             mapping.alpha_index, x0, lam, scfg)
    else:
        result, trace = solvers.picard(space, mapping.f, x0, lam, scfg)
    return result, trace, scfg, extra


def cmd_solve(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    mapping = build_mapping(_field(cfg, "map", "config"), space)
    out = _out_dir(cfg, args)
    try:
        result, trace, scfg, extra = run_solver(cfg, args, space, mapping)
    except (solvers.CertificateBreach, solvers.CommonFixedPointFailure) as exc:
        trace = exc.trace
        print(f"solve failed: {exc}")
        summary = {**trace.summary(), "error": str(exc)}
        _write(out, "trace.csv", trace.to_csv())
        _write(out, "summary.json", _dump(summary))
        return EXIT_FAIL
    summary = {**trace.summary(), **extra, "tol": scfg.tol}
    ok = trace.converged and all(v <= scfg.tol for v in trace.residuals.values())
    print(f"{trace.terminated} after {trace.iterations} iterations, ratio {trace.ratio!r}")
    print(f"result: {summary['result']}")
    print(f"residuals: {trace.residuals}")
    if "common_fixed_point" in extra:
        cfp = extra["common_fixed_point"]
        print(f"common fixed point: {cfp['z']} ({cfp['status']})")
    _write(out, "trace.csv", trace.to_csv())
    _write(out, "summary.json", _dump(summary))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    if not isinstance(space, spaces.FiniteSpace):
        raise ConfigError("space: the oracle needs a finite space")
    mapping = build_mapping(_field(cfg, "map", "config"), space)
    if mapping.kind == "coupled":
        inv = oracle.enumerate_fixed_points(space, F=mapping.F, g=mapping.g)
    elif mapping.kind == "family":
        raise ConfigError("map: the oracle scans a single map or a coupled pair")
    else:
        inv = oracle.enumerate_fixed_points(space, f=mapping.f)
    text = _dump(inv.to_dict())
    print(text, end="")
    _write(_out_dir(cfg, args), "inventory.json", text)
    return EXIT_OK


def cmd_cross_check(cfg, args) -> int:
    space = build_space(_field(cfg, "space", "config"))
    if not isinstance(space, spaces.FiniteSpace):
        raise ConfigError("space: cross-check needs a finite space")
    mapping = build_mapping(_field(cfg, "map", "config"), space)
    c = build_certificate(_field(cfg, "certificate", "config"), space)
    out = _out_dir(cfg, args)
    try:
        result, trace, scfg, extra = run_solver(cfg, args, space, mapping)
    except (solvers.CertificateBreach, solvers.CommonFixedPointFailure) as exc:
        print(f"solve failed: {exc}")
        return EXIT_FAIL
    if mapping.kind == "coupled":
        result = extra.get("common_fixed_point", {}).get("z")
    verdict = oracle.cross_check(space, mapping, c, result, check_config(cfg, args))
    print(f"cross-check: {'OK' if verdict.ok else 'DISAGREE'} ({verdict.reason})")
    print(f"solver: {result!r} after {trace.iterations} iterations; "
          f"oracle: {verdict.inventory.to_dict()}")
    if verdict.bundle is not None:
        _write(out, "counterexample.json", oracle.dump_bundle(verdict.bundle) + "\n")
    return EXIT_OK if verdict.ok else EXIT_FAIL


COMMANDS = {
    "verify-space": cmd_verify_space,
    "min-alpha": cmd_min_alpha,
    "epsilon-net": cmd_epsilon_net,
    "check": cmd_check,
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "cross-check": cmd_cross_check,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metrictype",
                                     description="Fixed points in metric type spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON job config")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--seed", type=int)
        if name == "min-alpha":
            p.add_argument("--chain-len", type=int)
        if name == "epsilon-net":
            p.add_argument("--epsilon", type=float)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    for attr in ("chain_len", "epsilon"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, spaces.StructureError, cert.CertificateError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
