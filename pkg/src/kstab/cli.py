"""Command-line front end: ``kstab <kind> [--scenario FILE] [--seed N] [--out DIR]``.

Exit codes: 0 success, 2 validation error (nothing computed), 3 computation
error (the report carries the error payload).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTATION = 0, 2, 3
KINDS = ("futaki", "parastab", "moment", "bergman", "cone", "reproduce")

CSV_HELP = """\
CSV columns (fixed per kind):
  futaki    g,d1,d2,F1
  moment    t,FCh
  bergman   theta,phi,x,y,z,rho,scal
  cone      radius,ratio_min,ratio_max
parastab and reproduce write JSON only.
"""


class ValidationError(ValueError):
    pass


# --- JSON helpers ----------------------------------------------------------------

def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        from .exact import q_str
        return q_str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable, allow_nan=True)


def _complex_matrix(a: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(a, dtype=complex)]


# --- parameter validation -----------------------------------------------------------

def _req(params: dict, key: str, kind: type, where: str):
    if key not in params:
        raise ValidationError(f"{where}: missing {key!r}")
    return _typed(params[key], kind, f"{where}.{key}")


def _typed(value, kind: type, where: str):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{where}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ValidationError(f"{where}: must be finite")
        return float(value)
    if kind is list:
        if not isinstance(value, list):
            raise ValidationError(f"{where}: expected a list")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ValidationError(f"{where}: expected an object")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ValidationError(f"{where}: expected a string")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: expected true/false")
        return value
    return value


def _parse_range(text: str, where: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in text.split(".."))
    except ValueError:
        raise ValidationError(f"{where}: expected 'lo..hi', got {text!r}") from None
    if hi < lo:
        raise ValidationError(f"{where}: empty range {text!r}")
    return lo, hi


def validate_futaki(p: dict) -> dict:
    if "grid" in p:
        grid = p["grid"]
        if isinstance(grid, str):
            parts = grid.split(",")
            if len(parts) != 2:
                raise ValidationError("futaki.grid: expected 'gmin..gmax,dmin..dmax'")
            g, d = (_parse_range(s.strip(), "futaki.grid") for s in parts)
            grid = {"genus": list(g), "degree": list(d)}
        grid = _typed(grid, dict, "futaki.grid")
        g = [_typed(v, int, "futaki.grid.genus") for v in _req(grid, "genus", list, "futaki.grid")]
        d = [_typed(v, int, "futaki.grid.degree") for v in _req(grid, "degree", list, "futaki.grid")]
        if len(g) != 2 or len(d) != 2 or g[0] < 0 or d[0] < 1 or g[1] < g[0] or d[1] < d[0]:
            raise ValidationError("futaki.grid: need genus >= 0 and degrees >= 1 as [lo, hi] ranges")
        return {"grid": {"genus": g, "degree": d}}
    g = _req(p, "genus", int, "futaki")
    d1 = _req(p, "d1", int, "futaki")
    d2 = _req(p, "d2", int, "futaki")
    if g < 0:
        raise ValidationError("futaki.genus: must be >= 0")
    return {"genus": g, "d1": d1, "d2": d2}


def validate_parastab(p: dict) -> dict:
    if "parabolic" in p:
        _typed(p["parabolic"], dict, "parastab.parabolic")
        return {"parabolic": p["parabolic"]}
    bundle = _req(p, "bundle", dict, "parastab")
    if "genus" not in bundle:
        raise ValidationError("parastab.bundle: missing 'genus'")
    if "extension" not in bundle and not ("rank" in bundle and "degree" in bundle):
        raise ValidationError("parastab.bundle: needs 'extension' or 'rank' and 'degree'")
    extras = _typed(p.get("extras", []), list, "parastab.extras")
    for s in extras:
        _typed(s, dict, "parastab.extras[]")
    return {"bundle": bundle, "extras": extras}


def _vector_pairs(vec, where):
    vec = _typed(vec, list, where)
    out = []
    for e in vec:
        if isinstance(e, list) and len(e) == 2:
            out.append([_typed(e[0], float, where), _typed(e[1], float, where)])
        else:
            out.append([_typed(e, float, where), 0.0])
    return out


def validate_moment(p: dict) -> dict:
    out: dict[str, Any] = {}
    if "cycle" in p:
        cyc = _typed(p["cycle"], dict, "moment.cycle")
        N = _req(cyc, "N", int, "moment.cycle")
        if N < 1:
            raise ValidationError("moment.cycle.N: must be >= 1")
        samples = []
        for s in _req(cyc, "samples", list, "moment.cycle"):
            s = _typed(s, dict, "moment.cycle.samples[]")
            vec = _vector_pairs(_req(s, "vector", list, "moment.cycle.samples[]"), "moment.cycle.samples[].vector")
            if len(vec) != N + 1:
                raise ValidationError(f"moment.cycle: vector of length {len(vec)} in C^{N + 1}")
            mass = _typed(s.get("mass", 1.0), float, "moment.cycle.samples[].mass")
            if mass <= 0:
                raise ValidationError("moment.cycle: masses must be positive")
            samples.append({"vector": vec, "mass": mass})
        if not samples:
            raise ValidationError("moment.cycle: no samples")
        out["cycle"] = {"N": N, "samples": samples}
    elif "random" in p:
        r = _typed(p["random"], dict, "moment.random")
        N = _req(r, "N", int, "moment.random")
        n = _req(r, "points", int, "moment.random")
        if N < 1 or n < 1:
            raise ValidationError("moment.random: N and points must be >= 1")
        out["random"] = {"N": N, "points": n}
    else:
        raise ValidationError("moment: needs 'cycle' or 'random'")
    dim = (out["cycle"]["N"] if "cycle" in out else out["random"]["N"]) + 1
    if "A" in p:
        rows = _typed(p["A"], list, "moment.A")
        mat = [_vector_pairs(row, "moment.A[]") for row in rows]
        if len(mat) != dim or any(len(row) != dim for row in mat):
            raise ValidationError(f"moment.A: must be {dim}x{dim}")
        out["A"] = mat
    tg = _typed(p.get("t_grid", {}), dict, "moment.t_grid")
    start = _typed(tg.get("start", -3.0), float, "moment.t_grid.start")
    stop = _typed(tg.get("stop", 3.0), float, "moment.t_grid.stop")
    num = _typed(tg.get("num", 200), int, "moment.t_grid.num")
    if num < 2 or stop <= start:
        raise ValidationError("moment.t_grid: need num >= 2 and stop > start")
    out["t_grid"] = {"start": start, "stop": stop, "num": num}
    out["t_neg"] = _typed(p.get("t_neg", -20.0), float, "moment.t_neg")
    if out["t_neg"] >= 0:
        raise ValidationError("moment.t_neg: must be negative")
    out["descent_steps"] = _typed(p.get("descent_steps", 2000), int, "moment.descent_steps")
    return out


def _parse_phi(value) -> dict:
    from .bergman import FAMILIES

    if isinstance(value, str):
        name, _, amp = value.partition(":")
        try:
            value = {"family": name, "amplitude": float(amp) if amp else None}
        except ValueError:
            raise ValidationError(f"bergman.phi: bad amplitude in {value!r}") from None
    value = _typed(value, dict, "bergman.phi")
    fam = value.get("family", "zero")
    if fam not in FAMILIES:
        raise ValidationError(f"bergman.phi: unknown family {fam!r}; choose from {sorted(FAMILIES)}")
    amp = value.get("amplitude")
    amp = 0.0 if fam == "zero" else (0.1 if amp is None else _typed(amp, float, "bergman.phi.amplitude"))
    return {"family": fam, "amplitude": amp}


def validate_bergman(p: dict) -> dict:
    k = _typed(p.get("k", 8), int, "bergman.k")
    if k < 1:
        raise ValidationError("bergman.k: must be positive")
    k_list = [_typed(v, int, "bergman.k_list[]") for v in _typed(p.get("k_list", []), list, "bergman.k_list")]
    if k_list and (len(k_list) < 3 or any(b <= a for a, b in zip(k_list, k_list[1:])) or k_list[0] < 1):
        raise ValidationError("bergman.k_list: need >= 3 increasing positive values")
    iters = _typed(p.get("iters", 0), int, "bergman.iters")
    tol = _typed(p.get("tol", 1e-3), float, "bergman.tol")
    n_theta = _typed(p.get("n_theta", 64), int, "bergman.n_theta")
    n_phi = _typed(p.get("n_phi", 128), int, "bergman.n_phi")
    if iters < 0 or tol <= 0 or n_theta < 4 or n_phi < 4 or n_phi % 2:
        raise ValidationError("bergman: iters >= 0, tol > 0, n_theta >= 4 and even n_phi >= 4 required")
    return {"k": k, "k_list": k_list, "phi": _parse_phi(p.get("phi", "zero")), "iters": iters,
            "tol": tol, "n_theta": n_theta, "n_phi": n_phi}


def _parse_points(values) -> list:
    from .cone import parse_point

    out = []
    for v in _typed(values, list, "cone.points"):
        try:
            z = parse_point(v)
        except (TypeError, ValueError):
            raise ValidationError(f"cone.points: cannot read {v!r}") from None
        out.append("inf" if math.isinf(abs(z)) else [z.real, z.imag])
    return out


def validate_cone(p: dict) -> dict:
    pts = _parse_points(_req(p, "points", list, "cone"))
    if not pts:
        raise ValidationError("cone.points: at least one point")
    beta = _req(p, "beta", float, "cone")
    if not 0 < beta <= 1:
        raise ValidationError("cone.beta: must lie in (0, 1]")
    c = p.get("c")
    if c is not None:
        c = _typed(c, float, "cone.c")
        if c <= 0:
            raise ValidationError("cone.c: must be positive")
    find_c = _typed(p.get("find_c", c is None), bool, "cone.find_c")
    annuli = [_typed(r, float, "cone.annuli[]") for r in _typed(p.get("annuli", []), list, "cone.annuli")]
    if annuli and (any(not 0 < r < 1 for r in annuli) or any(b >= a for a, b in zip(annuli, annuli[1:]))):
        raise ValidationError("cone.annuli: radii must be strictly decreasing in (0, 1)")
    idx = _typed(p.get("point_index", 0), int, "cone.point_index")
    if not 0 <= idx < len(pts):
        raise ValidationError("cone.point_index: out of range")
    n_theta = _typed(p.get("n_theta", 128), int, "cone.n_theta")
    n_phi = _typed(p.get("n_phi", 256), int, "cone.n_phi")
    if n_theta < 4 or n_phi < 4 or n_phi % 2:
        raise ValidationError("cone: n_theta >= 4 and even n_phi >= 4 required")
    return {"points": pts, "beta": beta, "c": c, "find_c": find_c, "annuli": annuli,
            "point_index": idx, "n_theta": n_theta, "n_phi": n_phi}


def validate_reproduce(p: dict) -> dict:
    from .recipes import RECIPES

    name = _req(p, "name", str, "reproduce")
    if name not in RECIPES:
        raise ValidationError(f"reproduce: unknown name {name!r}; choose from {sorted(RECIPES)}")
    return {"name": name}


# --- runners --------------------------------------------------------------------------

CsvTable = Optional[tuple[list[str], list[list[Any]]]]


def run_futaki(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .futaki import df_invariant

    header = ["g", "d1", "d2", "F1"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if "grid" in p:
            (g0, g1), (d0, d1_) = p["grid"]["genus"], p["grid"]["degree"]
            rows, table = [], []
            for g in range(g0, g1 + 1):
                for a in range(d0, d1_ + 1):
                    for b in range(d0, d1_ + 1):
                        r = df_invariant(g, a, b)
                        rows.append({"g": g, "d1": a, "d2": b, "F1": r.F1, "verdict": r.verdict.value})
                        table.append([g, a, b, r.F1])
            result = {"grid": p["grid"], "rows": rows}
        else:
            r = df_invariant(p["genus"], p["d1"], p["d2"])
            result = r.to_json()
            table = [[r.genus, r.d1, r.d2, r.F1]]
    result["warnings"] = sorted({str(w.message) for w in caught})
    return result, (header, table)


def run_parastab(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .bundles import SubobjectSpec, bundle_from_json, is_slope_semistable
    from .parabolic import ParabolicBundle, check_parabolic_stability, stabilize

    if "parabolic" in p:
        pb = ParabolicBundle.from_json(p["parabolic"])
        return {"parabolic": pb.to_json(), "verdict": check_parabolic_stability(pb).to_json()}, None
    b = bundle_from_json(p["bundle"])
    extras = [SubobjectSpec.from_json(s, default_label=f"X{i}") for i, s in enumerate(p["extras"])]
    before = is_slope_semistable(b)
    pb = stabilize(b, extras)
    return {
        "before": {"bundle": b.to_json(), "slope": b.slope, "verdict": before.to_json()},
        "after": {"parabolic": pb.to_json(), "verdict": check_parabolic_stability(pb).to_json(),
                  "points_added": len(pb.points), "schedule": list(pb.schedule)},
    }, None


def run_moment(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .moment import (center_of_mass, chow_weight, cycle_from_json, kempf_ness_descent,
                         limit_inequality_check, matrix_from_json, monotonicity_check,
                         random_hermitian, random_point_cycle, schatten2)

    rng = np.random.default_rng(seed)
    if "cycle" in p:
        x = cycle_from_json(p["cycle"])
    else:
        x = random_point_cycle(p["random"]["N"], p["random"]["points"], rng)
    a = matrix_from_json(p["A"]) if "A" in p else random_hermitian(x.N + 1, rng)
    tg = p["t_grid"]
    t = np.linspace(tg["start"], tg["stop"], tg["num"])
    mu = center_of_mass(x)
    mono = monotonicity_check(a, x, t)
    ineq = limit_inequality_check(a, x, p["t_neg"])
    desc = kempf_ness_descent(x, steps=p["descent_steps"])
    result = {
        "N": x.N,
        "volume": x.volume,
        "A": _complex_matrix(a),
        "center_of_mass": _complex_matrix(mu),
        "mu_norm": schatten2(mu),
        "FCh": chow_weight(a, x),
        "monotonicity": {"nondecreasing": not mono.violations, "min_slope": mono.min_slope,
                         "violations": [list(v) for v in mono.violations], "tolerance": mono.tolerance,
                         "unresolved_t": mono.unresolved_t},
        "inequality": {"lhs": ineq.lhs, "rhs": ineq.rhs, "holds": ineq.holds, "slack": ineq.slack,
                       "t_neg": ineq.t_neg, "rhs_forward": ineq.rhs_forward,
                       "holds_forward": ineq.holds_forward},
        "descent": {"status": desc.status, "residual": desc.residual, "steps": desc.steps,
                    "direction": None if desc.direction is None else _complex_matrix(desc.direction)},
    }
    return result, (["t", "FCh"], [[float(ti), float(v)] for ti, v in zip(mono.t, mono.values)])


def run_bergman(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .bergman import (MetricWeight, almost_cscK_deviation, bergman_density, expansion_check,
                          named_potential, t_iteration)

    pot = named_potential(p["phi"]["family"], p["phi"]["amplitude"])
    w = MetricWeight.from_potential(pot, p["k"], p["n_theta"], p["n_phi"])
    rep = bergman_density(w)
    dev = almost_cscK_deviation(w)
    result: dict[str, Any] = {
        "k": p["k"], "phi": p["phi"], "grid": [p["n_theta"], p["n_phi"]],
        "sup_dev": rep.sup_dev, "integral": rep.integral, "expansion_residual": rep.expansion_residual,
        "rho_min": float(rep.rho.min()), "rho_max": float(rep.rho.max()),
        "cscK_deviation": dev.deviation, "s_hat": dev.s_hat,
    }
    if p["k_list"]:
        fit = expansion_check(pot, p["k_list"])
        result["expansion"] = {"k": fit.ks, "residuals": fit.residuals, "slope": fit.slope}
    if p["iters"]:
        ab = t_iteration(p["k"], w, max_iters=p["iters"], tol=p["tol"])
        result["t_iteration"] = {"status": "almost_balanced", "sup_dev": ab.sup_dev,
                                 "iterations": ab.iterations, "history": ab.history}
    T, P = w.grid.mesh
    X, Y, Z = w.grid.cartesian()
    table = np.column_stack([a.ravel() for a in (T, P, X, Y, Z, rep.rho, rep.scal)]).tolist()
    return result, (["theta", "phi", "x", "y", "z", "rho", "scal"], table)


def run_cone(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .cone import ConeSetup, cone_grid, minimal_c, positivity_margin, quasi_isometry_constants

    pts = [complex("inf") if v == "inf" else complex(v[0], v[1]) for v in p["points"]]
    grid = cone_grid(pts, p["n_theta"], p["n_phi"])
    result: dict[str, Any] = {"points": p["points"], "beta": p["beta"], "grid_nodes": grid.size}
    c = p["c"]
    if p["find_c"]:
        cmin = minimal_c(pts, p["beta"], grid)
        result["minimal_c"] = cmin
        if c is None:
            c = 2 * cmin if cmin > 0 else 1.0
    result["c"] = c
    setup = ConeSetup(tuple(pts), p["beta"], c, grid)
    result["positivity_margin"] = positivity_margin(setup, grid)
    table = None
    if p["annuli"]:
        q = quasi_isometry_constants(setup, p["point_index"], p["annuli"])
        result["quasi_isometry"] = {"point_index": p["point_index"], **q.to_json()}
        table = (["radius", "ratio_min", "ratio_max"],
                 [[r, lo, hi] for r, lo, hi in zip(q.radii, q.ratio_min, q.ratio_max)])
    return result, table


def run_reproduce(p: dict, seed: int) -> tuple[dict, CsvTable]:
    from .recipes import RECIPES

    return RECIPES[p["name"]](seed), None


KIND_TABLE: dict[str, tuple[Callable[[dict], dict], Callable[[dict, int], tuple[dict, CsvTable]]]] = {
    "futaki": (validate_futaki, run_futaki),
    "parastab": (validate_parastab, run_parastab),
    "moment": (validate_moment, run_moment),
    "bergman": (validate_bergman, run_bergman),
    "cone": (validate_cone, run_cone),
    "reproduce": (validate_reproduce, run_reproduce),
}


# --- execution ----------------------------------------------------------------------

def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _report(kind: str, seed: int, status: str, params: Any, body: dict) -> dict:
    return {"schema": f"kstab.{kind}/v{SCHEMA_VERSION}", "kind": kind, "seed": seed, "status": status,
            "parameters": params, "timestamp": _timestamp(), **body}


def _write(report: dict, table: CsvTable, out: Optional[Path], name: str, csv_path: Optional[Path] = None) -> None:
    text = dumps(report) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(text)
    if table is not None:
        header, rows = table
        with open(csv_path or out / f"{name}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for row in rows:
                wr.writerow([_jsonable(v) if isinstance(v, Fraction) else v for v in row])


def execute(kind: str, params: Any, seed: int = 0, out: Optional[Path] = None,
            name: Optional[str] = None) -> int:
    name = name or kind
    if kind not in KIND_TABLE:
        _write(_report(str(kind), seed, "invalid", params, {"error": {"type": "ValidationError",
               "message": f"unknown kind {kind!r}"}}), None, out, name)
        return EXIT_VALIDATION
    validate, run = KIND_TABLE[kind]
    try:
        if not isinstance(params, dict):
            raise ValidationError(f"{kind}: parameters must be an object")
        clean = validate(params)
    except ValidationError as exc:
        _write(_report(kind, seed, "invalid", params, {"error": {"type": "ValidationError", "message": str(exc)}}),
               None, out, name)
        return EXIT_VALIDATION
    try:
        result, table = run(clean, seed)
    except Exception as exc:  # every failure after validation is a computation error
        payload = {"type": type(exc).__name__, "message": str(exc)}
        for attr in ("sup_dev", "iterations"):
            if hasattr(exc, attr):
                payload[attr] = getattr(exc, attr)
        _write(_report(kind, seed, "error", clean, {"error": payload}), None, out, name)
        return EXIT_COMPUTATION
    _write(_report(kind, seed, "ok", clean, {"result": result}), table, out, name)
    return EXIT_OK


def _load_scenario(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read scenario {path!r}: {exc}") from None


def _split_scenario(obj: Any, kind: Optional[str]) -> tuple[str, dict, Optional[int]]:
    """Accept either a bare parameter object or ``{kind, parameters, seed}``."""
    if not isinstance(obj, dict):
        raise ValidationError("a scenario must be a JSON object")
    if "parameters" in obj or "kind" in obj:
        k = obj.get("kind", kind)
        if kind is not None and k != kind:
            raise ValidationError(f"scenario kind {k!r} does not match subcommand {kind!r}")
        params = obj.get("parameters", {})
        seed = obj.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise ValidationError("scenario seed must be an integer")
        return k, params, seed
    if kind is None:
        raise ValidationError("scenario has no 'kind'")
    return kind, obj, None


def _flag_params(kind: str, ns: argparse.Namespace) -> dict:
    p: dict[str, Any] = {}

    def put(key, value):
        if value is not None:
            p[key] = value

    if kind == "futaki":
        put("genus", ns.genus)
        put("d1", ns.d1)
        put("d2", ns.d2)
        put("grid", ns.grid)
    elif kind == "parastab":
        if ns.bundle:
            p["bundle"] = _load_scenario(ns.bundle)
    elif kind == "moment":
        if ns.cycle:
            p["cycle"] = _load_scenario(ns.cycle)
        if ns.random_points is not None:
            p["random"] = {"N": ns.N, "points": ns.random_points}
        if ns.matrix:
            p["A"] = _load_scenario(ns.matrix)
        if ns.t_range is not None:
            p["t_grid"] = {"start": ns.t_range[0], "stop": ns.t_range[1], "num": ns.t_num}
        put("t_neg", ns.t_neg)
    elif kind == "bergman":
        put("k", ns.k)
        put("k_list", ns.k_list)
        put("phi", ns.phi)
        put("iters", ns.iters)
        put("tol", ns.tol)
        put("n_theta", ns.n_theta)
        put("n_phi", ns.n_phi)
    elif kind == "cone":
        put("points", ns.points)
        put("beta", ns.beta)
        put("c", ns.c)
        if ns.find_c:
            p["find_c"] = True
        put("annuli", ns.annuli)
        put("point_index", ns.point_index)
    elif kind == "reproduce":
        put("name", ns.name)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstab", description=__doc__.splitlines()[0],
                                     epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="FILE", help="JSON scenario (flags override its parameters)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized parts (default 0)")
    common.add_argument("--out", metavar="DIR", help="write <kind>.json/.csv here instead of printing JSON")
    sub = parser.add_subparsers(dest="kind", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, epilog=CSV_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    f = add("futaki", "Futaki invariant of the normal-cone degeneration of a ruled surface")
    f.add_argument("--genus", type=int)
    f.add_argument("--d1", type=int)
    f.add_argument("--d2", type=int)
    f.add_argument("--grid", help="gmin..gmax,dmin..dmax (all d1, d2 pairs)")

    ps = add("parastab", "stabilize a bundle with parabolic weights")
    ps.add_argument("--bundle", metavar="FILE", help="bundle JSON {genus, rank, degree | extension, oracle}")

    m = add("moment", "center of mass, Chow weight flow and Kempf-Ness descent")
    m.add_argument("--cycle", metavar="FILE", help="cycle JSON {N, samples: [{vector, mass}]}")
    m.add_argument("--random-points", type=int, help="sample this many random points instead")
    m.add_argument("--N", type=int, default=2, help="ambient dimension for --random-points")
    m.add_argument("--matrix", metavar="FILE", help="Hermitian A as rows of [re, im] pairs (random if absent)")
    m.add_argument("--t-range", type=float, nargs=2, metavar=("START", "STOP"))
    m.add_argument("--t-num", type=int, default=200)
    m.add_argument("--t-neg", type=float)

    b = add("bergman", "Bergman function, expansion check and Donaldson iteration on CP^1")
    b.add_argument("--k", type=int)
    b.add_argument("--k-list", type=int, nargs="+")
    b.add_argument("--phi", help="FAMILY[:AMPLITUDE], families: zero, bump, zonal, linear")
    b.add_argument("--iters", type=int, help="run the T-iteration with this many steps")
    b.add_argument("--tol", type=float)
    b.add_argument("--n-theta", type=int)
    b.add_argument("--n-phi", type=int)

    c = add("cone", "model cone metric: positivity threshold and quasi-isometry")
    c.add_argument("--points", nargs="+", help="chart coordinates such as 0 1+1j inf")
    c.add_argument("--beta", type=float)
    c.add_argument("--c", type=float)
    c.add_argument("--find-c", action="store_true")
    c.add_argument("--annuli", type=float, nargs="+", help="decreasing radii")
    c.add_argument("--point-index", type=int)

    r = add("reproduce", "run a pre-registered check")
    r.add_argument("name", nargs="?", help="prop2, prop3, thm4, def2-demo or ineq3-demo")

    run = sub.add_parser("run", help="run scenario files (a scenario or a list of them)")
    run.add_argument("files", nargs="+")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", metavar="DIR")
    return parser


def _run_files(ns: argparse.Namespace) -> int:
    out = Path(ns.out) if ns.out else None
    code = EXIT_OK
    for path in ns.files:
        try:
            obj = _load_scenario(path)
            items = obj if isinstance(obj, list) else [obj]
            scenarios = [_split_scenario(it, None) for it in items]
        except ValidationError as exc:
            _write(_report("scenario", ns.seed or 0, "invalid", None,
                           {"error": {"type": "ValidationError", "message": str(exc)}}), None, out,
                   Path(path).stem)
            code = max(code, EXIT_VALIDATION)
            continue
        for i, (kind, params, seed) in enumerate(scenarios):
            name = Path(path).stem if len(scenarios) == 1 else f"{Path(path).stem}-{i}"
            s = ns.seed if ns.seed is not None else (seed if seed is not None else 0)
            code = max(code, execute(kind, params, s, out, name))
    return code


def main(argv: Optional[list[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.kind == "run":
        return _run_files(ns)
    out = Path(ns.out) if ns.out else None
    try:
        params: dict = {}
        seed = None
        if ns.scenario:
            _, params, seed = _split_scenario(_load_scenario(ns.scenario), ns.kind)
            if not isinstance(params, dict):
                raise ValidationError(f"{ns.kind}: parameters must be an object")
        params = {**params, **_flag_params(ns.kind, ns)}
    except ValidationError as exc:
        _write(_report(ns.kind, ns.seed or 0, "invalid", None,
                       {"error": {"type": "ValidationError", "message": str(exc)}}), None, out, ns.kind)
        return EXIT_VALIDATION
    seed = ns.seed if ns.seed is not None else (seed if seed is not None else 0)
    return execute(ns.kind, params, seed, out)


if __name__ == "__main__":
    sys.exit(main())
