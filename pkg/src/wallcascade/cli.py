"""Command line: run identity suites, sweeps and single pairings from a JSON config.

Usage::

    wallcascade verify --config configs/potential_sphere.cfg --out runs/pot
    wallcascade sweep  --config configs/bl_sqrt_nu.cfg --out runs/bl
    wallcascade pair form_drag --config configs/potential_sphere.cfg
    wallcascade schema

Each run writes ``records.csv`` (deterministic given config and thread
count) and ``report.json`` (config echo, records, verdicts, versions and
timing).  Exit codes: 0 pass, 1 verdict failure, 2 configuration error,
3 data error.
"""

import argparse
import copy
import csv
import io
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, replace

import jsonschema
import numpy as np
import scipy

from . import __version__
from .budgets import (
    QuadratureOrders,
    coarse_grained_budget_residual,
    drag_decomposition,
    identity_residual_normal,
    identity_residual_tangential,
    lighthill_balance,
    lighthill_surface_pairing,
    momentum_flux_pairing,
    pair_wall_pressure,
    pair_wall_shear,
    pressure_weak_neumann_residual,
)
from .errors import ConfigError, DataError
from .fields import BoundaryLayerFamily, PotentialSphere, StokesSphere, UniformField, read_snapshot
from .geometry import Sphere, make_body
from .profiles import TimeBump
from .sections import ScalarTestFunction, extend, normal_section, tangential_section
from .sweeps import SweepPlan, dyadic, run_scale_sweep, run_viscosity_sweep

REPORT_SCHEMA_VERSION = "1.0"

EXIT_PASS, EXIT_VERDICT, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3

_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_MAT = {"type": "array", "items": _VEC, "minItems": 3, "maxItems": 3}
_POS = {"type": "number", "exclusiveMinimum": 0}
_GRID = {
    "oneOf": [
        {"type": "array", "items": _POS},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["base", "first", "last"],
            "properties": {"base": _POS, "first": {"type": "integer"}, "last": {"type": "integer"}},
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "wallcascade run config",
    "type": "object",
    "additionalProperties": False,
    "required": ["body", "field"],
    "properties": {
        "body": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["sphere", "ellipsoid"]},
                "radius": _POS,
                "semi_axes": {"type": "array", "items": _POS, "minItems": 3, "maxItems": 3},
                "tubular_radius": _POS,
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["potential_sphere", "stokes_sphere", "boundary_layer", "uniform", "snapshot"]},
                "U": {"type": "number"},
                "nu": {"type": "number", "minimum": 0},
                "direction": _VEC,
                "T": _POS,
                "p_inf": {"type": "number"},
                "exponent": _POS,
                "delta_scale": _POS,
                "normal_correction": {"type": "boolean"},
                "V": _VEC,
                "p": {"type": "number"},
                "path": {"type": "string"},
            },
        },
        "sections": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": ["tangential", "normal"]},
                    "b": _VEC,
                    "M": _MAT,
                    "c": _VEC,
                    "K": _MAT,
                    "c0": {"type": "number"},
                    "m": _VEC,
                    "Q": _MAT,
                    "time_support": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "filter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h": _POS,
                "ell": _POS,
                "eps": _POS,
                "kernel_radial": {"type": "integer", "minimum": 1},
                "kernel_angular": {"type": "integer", "minimum": 1},
            },
        },
        "suite": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tangential_identity": {"type": "boolean"},
                "normal_identity": {"type": "boolean"},
                "coarse_grained_budget": {"type": "array", "items": {"type": "string"}},
                "lighthill": {"type": "array", "items": {"type": "string"}},
                "pressure_neumann": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"cutoff": _POS, "a0": {"type": "number"}, "b": _VEC, "A": _MAT},
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "section"],
            "properties": {
                "kind": {"enum": ["scale", "viscosity"]},
                "section": {"type": "string"},
                "normal_section": {"type": "string"},
                "h_grid": _GRID,
                "nu_grid": _GRID,
                "ell_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "extension": {"enum": ["ext0", "drift"]},
                "component": {"enum": ["advective", "pressure"]},
                "with_forcing": {"type": "boolean"},
                "expected_exponent": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"min": {"type": "number"}, "max": {"type": "number"}},
                },
            },
        },
        "orders": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "integer", "minimum": 2}
                for k in ("surface", "radial", "shell", "time", "kernel_radial", "kernel_angular")
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"factor": _POS},
        },
        "seed": {"type": "integer"},
        "output": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    """Validated, fully parsed run configuration."""

    document: dict
    body: object
    field: object
    sections: dict
    orders: QuadratureOrders
    h: float
    ell: float
    eps: float
    suite: dict
    sweep: dict
    factor: float
    threads: int = 1


def _grid(spec):
    if isinstance(spec, dict):
        return dyadic(spec["base"], spec["first"], spec["last"])
    return tuple(float(v) for v in spec)


def _make_field(spec, body):
    spec = dict(spec)
    kind = spec.pop("kind")
    common = {k: spec[k] for k in ("U", "direction", "T", "p_inf") if k in spec}
    if kind in ("potential_sphere", "stokes_sphere", "boundary_layer"):
        if not isinstance(body, Sphere):
            raise ConfigError(f"field {kind} needs a sphere body")
        common["radius"] = body.radius
    if kind == "potential_sphere":
        return PotentialSphere(**common)
    if kind == "stokes_sphere":
        return StokesSphere(nu=spec.get("nu", 1.0), **common)
    if kind == "boundary_layer":
        extra = {k: spec[k] for k in ("exponent", "delta_scale", "normal_correction") if k in spec}
        if "nu" not in spec:
            raise ConfigError("boundary_layer field needs nu")
        return BoundaryLayerFamily(spec["nu"], **extra, **common)
    if kind == "uniform":
        return UniformField(spec.get("V", (0.0, 0.0, 0.0)), spec.get("p", 0.0), spec.get("nu", 0.0),
                            spec.get("T", 1.0), body)
    if "path" not in spec:
        raise ConfigError("snapshot field needs a path")
    return read_snapshot(spec["path"], body=body)


def _make_section(spec, body, T):
    spec = dict(spec)
    time = TimeBump(T, tuple(spec.get("time_support", (0.2, 0.8))))
    if spec["kind"] == "tangential":
        bad = set(spec) - {"id", "kind", "b", "M", "c", "K", "time_support"}
        if bad:
            raise ConfigError(f"tangential section {spec['id']!r} has normal-only keys {sorted(bad)}")
        return tangential_section(body, spec.get("b", (0.0, 0.0, 0.0)), spec.get("M"), spec.get("c"),
                                  spec.get("K"), time, spec["id"])
    bad = set(spec) - {"id", "kind", "c0", "b", "m", "Q", "time_support"}
    if bad:
        raise ConfigError(f"normal section {spec['id']!r} has tangential-only keys {sorted(bad)}")
    return normal_section(body, spec.get("c0", 0.0), spec.get("b", (0.0, 0.0, 0.0)), spec.get("m", (0.0, 0.0, 0.0)),
                          spec.get("Q"), time, spec["id"])


def parse_config(document, threads=1, quad_order=None):
    """Validate and build a :class:`RunConfig`; raises :class:`ConfigError`."""
    try:
        jsonschema.validate(document, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    doc = copy.deepcopy(document)
    if quad_order is not None:
        if quad_order < 2:
            raise ConfigError("quadrature order override must be at least 2")
        doc.setdefault("orders", {}).update(surface=quad_order, radial=quad_order)
    if threads < 1:
        raise ConfigError("thread count must be positive")
    try:
        body = make_body(doc["body"])
        field = _make_field(doc["field"], body)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise ConfigError(str(exc)) from None
    if field.body is None:
        field.body = body
    sections = {}
    for spec in doc.get("sections", []):
        if spec["id"] in sections:
            raise ConfigError(f"duplicate section id {spec['id']!r}")
        try:
            sections[spec["id"]] = _make_section(spec, body, field.T)
        except ValueError as exc:
            raise ConfigError(f"section {spec['id']!r}: {exc}") from None
    orders = QuadratureOrders(**doc.get("orders", {}))
    flt = doc.get("filter", {})
    eps = flt.get("eps", 0.9 * body.tubular_radius)
    h = flt.get("h", 0.25 * eps)
    ell = flt.get("ell", 0.5 * h)
    if eps >= body.tubular_radius:
        raise ConfigError("extension cutoff eps must be below the tubular radius")
    if not ell < h:
        raise ConfigError("filter scales need l < h")
    if not h + ell < eps:
        raise ConfigError("filter scales need h + l < eps")
    if "kernel_radial" in flt or "kernel_angular" in flt:
        orders = replace(orders, kernel_radial=flt.get("kernel_radial", orders.kernel_radial),
                         kernel_angular=flt.get("kernel_angular", orders.kernel_angular))
    suite = doc.get("suite", {})
    for key in ("coarse_grained_budget", "lighthill"):
        for sid in suite.get(key, []):
            if sid not in sections:
                raise ConfigError(f"suite {key} names undefined section {sid!r}")
    for sid in suite.get("lighthill", []):
        if sections[sid].kind != "tangential":
            raise ConfigError(f"Lighthill balance needs a tangential section, got {sid!r}")
    sweep = doc.get("sweep")
    if sweep is not None:
        for key in ("section", "normal_section"):
            if key in sweep and sweep[key] not in sections:
                raise ConfigError(f"sweep {key} {sweep[key]!r} is not defined")
        plan = _plan(sweep, eps, orders, threads)
        try:
            plan.validate(need_h=sweep["kind"] == "scale", need_nu=sweep["kind"] == "viscosity")
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if sweep["kind"] == "viscosity" and not isinstance(field, BoundaryLayerFamily):
            raise ConfigError("viscosity sweeps need a boundary_layer field family")
    tol = doc.get("tolerances", {})
    return RunConfig(doc, body, field, sections, orders, h, ell, eps, suite, sweep,
                     tol.get("factor", 10.0), threads)


def _plan(sweep, eps, orders, threads):
    kw = dict(eps=eps, orders=orders, threads=threads)
    for key in ("h_grid", "nu_grid"):
        if key in sweep:
            kw[key] = _grid(sweep[key])
    for key in ("ell_ratio", "extension"):
        if key in sweep:
            kw[key] = sweep[key]
    return SweepPlan(**kw)


def load_config(path, threads=1, quad_order=None):
    try:
        with open(path) as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(document, threads, quad_order)


# --------------------------------------------------------------------------
# records


CSV_COLUMNS = ("operation", "name", "section", "param", "value", "error", "left", "right", "residual",
               "tolerance", "passed", "inputs")


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _residual_row(op, r, section=""):
    return {
        "operation": op, "name": r.name, "section": section, "left": r.left, "right": r.right,
        "error": max(r.left_error, r.right_error), "residual": r.residual, "tolerance": r.tolerance,
        "passed": r.passed, "value": r.relative, "inputs": r.inputs, "record": r.as_record(),
    }


def _pairing_row(op, pv, section="", param=None):
    return {"operation": op, "name": pv.name, "section": section, "param": param, "value": pv.value,
            "error": pv.error, "inputs": pv.inputs, "record": pv.as_record()}


def records_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        out = []
        for col in CSV_COLUMNS:
            v = row.get(col)
            if col == "inputs":
                v = json.dumps(v or {}, sort_keys=True, default=_json_default)
            out.append(_fmt(v))
        writer.writerow(out)
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def _tune(r, cfg):
    r.factor = cfg.factor
    return r


def cmd_verify(cfg):
    """Run the identity suite configured in ``cfg``; returns record rows."""
    suite = cfg.suite
    rows = []
    field = cfg.field
    tang = [s for s in cfg.sections.values() if s.kind == "tangential"]
    norm = [s for s in cfg.sections.values() if s.kind == "normal"]
    if suite.get("tangential_identity", True):
        for s in tang:
            r = identity_residual_tangential(field, s, cfg.eps, cfg.orders)
            rows.append(_residual_row("verify", _tune(r, cfg), s.ident))
    if suite.get("normal_identity", True):
        for s in norm:
            r = identity_residual_normal(field, s, cfg.eps, cfg.orders)
            rows.append(_residual_row("verify", _tune(r, cfg), s.ident))
    # windowed checks are costlier; by default one section of each kind
    default = [group[0].ident for group in (tang, norm) if group]
    for sid in suite.get("coarse_grained_budget", default):
        s = cfg.sections[sid]
        r = coarse_grained_budget_residual(field, cfg.h, cfg.ell, extend(s, cfg.eps), cfg.orders)
        rows.append(_residual_row("verify", _tune(r, cfg), sid))
    for sid in suite.get("lighthill", []):
        r = lighthill_balance(field, cfg.h, cfg.ell, cfg.sections[sid], cfg.eps, cfg.orders)
        rows.append(_residual_row("verify", _tune(r, cfg), sid))
    if "pressure_neumann" in suite:
        spec = dict(suite["pressure_neumann"])
        cutoff = spec.pop("cutoff", cfg.eps)
        phi = ScalarTestFunction(cfg.body, cutoff, **spec)
        r = pressure_weak_neumann_residual(field, phi, orders=cfg.orders)
        rows.append(_residual_row("verify", _tune(r, cfg)))
    return rows


def _band_ok(fit, band):
    if fit.identically_zero:
        # an exactly vanishing curve meets any decay requirement
        return band.get("min", 0.0) >= 0.0
    lo, hi = band.get("min", -np.inf), band.get("max", np.inf)
    return bool(lo <= fit.exponent <= hi)


def cmd_sweep(cfg):
    """Run the configured sweep; returns ``(rows, fit)``."""
    sw = cfg.sweep
    if sw is None:
        raise ConfigError("config has no sweep section")
    plan = _plan(sw, cfg.eps, cfg.orders, cfg.threads)
    section = cfg.sections[sw["section"]]
    rows = []
    if sw["kind"] == "scale":
        res = run_scale_sweep(cfg.field, section, plan, component=sw.get("component"))
        for h, pv, gap in zip(res.h, res.pairings, res.gaps):
            row = _pairing_row("sweep", pv, section.ident, h)
            row.update(left=pv.value if not sw.get("component") else pv.components[sw["component"]],
                       right=res.target, residual=gap)
            rows.append(row)
        failures = res.failures
    else:
        base = cfg.document["field"]
        fam = lambda nu: _make_field(dict(base, nu=nu), cfg.body)
        normal = cfg.sections.get(sw.get("normal_section"))
        res = run_viscosity_sweep(fam, plan, section, normal, with_forcing=sw.get("with_forcing", False))
        for nu, s, e, p, g in zip(res.nu, res.shear, res.shear_errors, res.pressure, res.forcing):
            rows.append({"operation": "sweep", "name": "wall_shear", "section": section.ident, "param": nu,
                         "value": s, "error": e, "left": None if np.isnan(p) else p,
                         "right": None if np.isnan(g) else g, "inputs": {"nu": nu, "field": base["kind"]}})
        failures = res.failures
    fit = res.fit
    band = sw.get("expected_exponent", {})
    passed = _band_ok(fit, band) and not failures
    rows.append({"operation": "rate_fit", "name": sw["kind"], "section": section.ident,
                 "value": fit.exponent, "error": fit.stderr, "residual": fit.residual,
                 "passed": passed if band else None,
                 "inputs": {"band": band, "points": int(sum(fit.used)), "failures": failures,
                            "note": "fitted exponent is a property of this field family and quadrature"}})
    return rows, fit


PAIR_IDS = ("form_drag", "skin_drag", "total_drag", "wall_shear:<section>", "wall_pressure:<section>",
            "flux:<section>", "lighthill_surface:<section>")


def cmd_pair(cfg, pairing_id):
    """Evaluate one pairing; returns a single record row."""
    kind, _, sid = pairing_id.partition(":")
    field = cfg.field
    if kind in ("form_drag", "skin_drag", "total_drag"):
        direction = getattr(field, "e", np.array([1.0, 0.0, 0.0]))
        d = drag_decomposition(field, direction, orders=cfg.orders)
        key = kind.split("_")[0]
        return {"operation": "pair", "name": kind, "value": d[key], "error": d["error"],
                "inputs": {"field": field.ident, "nu": field.nu, "direction": list(map(float, direction))}}
    if kind not in ("wall_shear", "wall_pressure", "flux", "lighthill_surface"):
        raise ConfigError(f"unknown pairing id {pairing_id!r}; choose from {', '.join(PAIR_IDS)}")
    if sid not in cfg.sections:
        raise ConfigError(f"pairing {pairing_id!r} names an undefined section")
    s = cfg.sections[sid]
    if kind == "wall_shear":
        pv = pair_wall_shear(field, s, cfg.orders)
    elif kind == "wall_pressure":
        pv = pair_wall_pressure(field, s, cfg.orders)
    elif kind == "lighthill_surface":
        pv = lighthill_surface_pairing(field, s, cfg.orders)
    else:
        pv = momentum_flux_pairing(field, cfg.h, cfg.ell, s, cfg.eps, orders=cfg.orders)
    return _pairing_row("pair", pv, sid)


RATE_NOTE = ("fitted exponents depend on the mollifier, window step, catalog field and "
             "quadrature used here; they are implementation-specific, not limit theorems")


def build_report(command, cfg, rows, seconds):
    verdicts = [r.get("passed") for r in rows if r.get("passed") is not None]
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "config": cfg.document,
        "threads": cfg.threads,
        "records": [r.get("record", {k: v for k, v in r.items() if k != "record"}) for r in rows],
        "verdicts": {"checked": len(verdicts), "failed": int(sum(not v for v in verdicts)),
                     "all_passed": bool(all(verdicts))},
        "versions": {"wallcascade": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "timing": {"seconds": seconds},
        "notes": [RATE_NOTE] if command == "sweep" else [],
    }


def write_outputs(out_dir, rows, report):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "records.csv"), "w", newline="") as fh:
        fh.write(records_csv(rows))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def build_parser():
    parser = argparse.ArgumentParser(prog="wallcascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("verify", "run the identity suite"), ("sweep", "run the configured sweep"),
                           ("pair", "evaluate one pairing")):
        p = sub.add_parser(name, help=helptext)
        if name == "pair":
            p.add_argument("pairing", help="one of: " + ", ".join(PAIR_IDS))
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", help="output directory (default: config 'output' or none)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--quad-order", type=int, help="override surface and radial quadrature orders")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True))
        return EXIT_PASS
    start = time.perf_counter()
    try:
        cfg = load_config(args.config, args.threads, args.quad_order)
        if args.command == "verify":
            rows = cmd_verify(cfg)
        elif args.command == "sweep":
            rows, _ = cmd_sweep(cfg)
        else:
            rows = [cmd_pair(cfg, args.pairing)]
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = build_report(args.command, cfg, rows, time.perf_counter() - start)
    out = args.out or cfg.document.get("output")
    if out:
        write_outputs(out, rows, report)
    for row in rows:
        status = {True: "PASS", False: "FAIL", None: "----"}[row.get("passed")]
        if row.get("tolerance") is not None and row["operation"] == "verify":
            detail = f"residual {row['residual']:.3e} (tolerance {row['tolerance']:.3e})"
        else:
            detail = f"value {_fmt(row.get('value'))}"
        print(f"{status}  {row['operation']:<9} {row['name']:<24} {row.get('section', ''):<10} {detail}")
    return EXIT_PASS if report["verdicts"]["all_passed"] else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
