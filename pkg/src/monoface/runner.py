"""Experiment configs: schema, loading, and dispatch of checks to reports."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import limits
from .jsonio import dumps, fmt_float, parse_float
from .limits import LimitProbe, Tolerances, VerificationReport
from .operators import Operator, SubdiffMaxAffine, operator_from_dict
from .resolvent import Schedule, yosida_trajectory
from .space import SpaceSpec

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


_VEC = {"type": "array", "items": {"type": ["number", "string"]}, "minItems": 1}
_OPREF = {"oneOf": [{"type": "string"},
                    {"type": "object", "required": ["variant"]}]}

THEOREM_IDS = (
    "estimate_limsup_face", "constructive_face_sequence", "minnorm_limsup_face",
    "support_via_minnorm", "support_via_selection", "boundary_estimate", "decompose",
    "local_bound_check", "unique_determination_check", "lipschitz_bound",
    "min_norm_via_yosida", "graph_membership", "monotonicity_probe",
    "resolvent_nonexpansive",
)

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["name", "space", "checks"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "tags": {"type": "array", "items": {"type": "string"}},
        "space": {"type": "object", "required": ["dim"],
                  "properties": {"dim": {"type": "integer", "minimum": 1},
                                 "p": {"type": "number", "exclusiveMinimum": 1}},
                  "additionalProperties": False},
        "operator": _OPREF,
        "operators": {"type": "object", "additionalProperties": {"type": "object"}},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "object",
                   "properties": {"path": {"type": "string"},
                                  "format": {"enum": ["json", "csv"]}},
                   "additionalProperties": False},
        "checks": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "theorem_id"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "theorem_id": {"enum": list(THEOREM_IDS)},
                    "operator": _OPREF,
                    "operator2": _OPREF,
                    "x": _VEC, "v": _VEC, "xstar": _VEC,
                    "probe": {"type": "object"},
                    "tolerances": {"type": "object"},
                    "params": {"type": "object"},
                    "note": {"type": "string"},
                },
            },
        },
    },
}


@dataclass
class ExperimentConfig:
    name: str
    space: SpaceSpec
    checks: list
    operator: object = None
    operators: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str = None
    output_format: str = "json"
    tags: tuple = ()
    description: str = ""

    @classmethod
    def from_dict(cls, d):
        try:
            jsonschema.validate(d, CONFIG_SCHEMA)
        except jsonschema.ValidationError as e:
            path = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"config field {path}: {e.message}") from None
        ids = [c["id"] for c in d["checks"]]
        if len(set(ids)) != len(ids):
            raise ConfigError("check ids must be unique")
        out = d.get("output", {})
        return cls(d["name"], SpaceSpec.from_dict(d["space"]), d["checks"], d.get("operator"),
                   d.get("operators", {}), d.get("seed", 0), out.get("path"),
                   out.get("format", "json"), tuple(d.get("tags", ())), d.get("description", ""))

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
        return cls.from_dict(d)

    def resolve_operator(self, ref) -> Operator:
        ref = self.operator if ref is None else ref
        if ref is None:
            raise ConfigError("check has no operator and the config defines none")
        if isinstance(ref, str):
            if ref not in self.operators:
                raise ConfigError(f"unknown operator reference {ref!r}")
            ref = self.operators[ref]
        spec = dict(ref)
        space = SpaceSpec.from_dict(spec.pop("space")) if "space" in spec else self.space
        return operator_from_dict(spec, space)


def _vec(v):
    return None if v is None else np.array([parse_float(t) for t in v], dtype=float)


def _probe(check, seed):
    d = dict(check.get("probe", {}))
    d.setdefault("seed", seed)
    return LimitProbe.from_dict(d)


def _tol(check):
    return Tolerances().updated(check.get("tolerances"))


def run_check(cfg: ExperimentConfig, check) -> VerificationReport:
    """Dispatch one config check to its verification routine."""
    tid = check["theorem_id"]
    A = cfg.resolve_operator(check.get("operator"))
    x, v, xs = _vec(check.get("x")), _vec(check.get("v")), _vec(check.get("xstar"))
    prm = dict(check.get("params", {}))
    seed = prm.pop("seed", cfg.seed)
    tol = _tol(check)

    def need(*names):
        vals = {"x": x, "v": v, "xstar": xs}
        for n in names:
            if vals[n] is None:
                raise ConfigError(f"check {check['id']!r} ({tid}) needs {n!r}")

    if tid in ("estimate_limsup_face", "minnorm_limsup_face", "support_via_minnorm",
               "support_via_selection"):
        need("x", "v")
        return getattr(limits, tid)(A, x, v, _probe(check, seed), tol)
    if tid == "constructive_face_sequence":
        need("x", "xstar", "v")
        return limits.constructive_face_sequence(A, x, xs, v, prm.get("n_max", 40), tol)
    if tid == "boundary_estimate":
        need("x")
        return limits.boundary_estimate(A, x, _probe(check, seed), tol)
    if tid == "decompose":
        need("x")
        return limits.decompose(A, x, _probe(check, seed), prm.get("variant", "m5"), tol)
    if tid == "local_bound_check":
        need("x")
        return limits.local_bound_check(A, x, prm["r"], prm["rho"], prm.get("n_samples", 64),
                                        seed, tol)
    if tid == "unique_determination_check":
        need("x")
        B = cfg.resolve_operator(check.get("operator2"))
        return limits.unique_determination_check(
            A, B, x, prm.get("radius", 1.0), prm.get("n_samples", 64),
            prm.get("mode", "minnorm"), seed, tol)
    if tid == "lipschitz_bound":
        if not isinstance(A, SubdiffMaxAffine):
            raise ConfigError("lipschitz_bound needs a SubdiffMaxAffine operator")
        return limits.lipschitz_bound(A.f, A.space, prm["ell"], prm.get("n_dense", 256),
                                      prm.get("n_pairs", 500), seed, prm.get("box", 2.0), tol)
    if tid == "min_norm_via_yosida":
        need("x")
        return limits.min_norm_via_yosida_report(A, x, Schedule.from_dict(prm.get("schedule", {})),
                                                 prm.get("tol", 1e-5))
    if tid == "graph_membership":
        need("x", "xstar")
        return limits.graph_membership_report(A, x, xs, prm.get("radius", 0.1),
                                              prm.get("n_samples", 64), seed)
    if tid == "monotonicity_probe":
        return limits.monotonicity_report(A, prm.get("n_pairs", 100), seed)
    if tid == "resolvent_nonexpansive":
        return limits.resolvent_nonexpansive(A, prm.get("lam", 1.0), prm.get("n_pairs", 100),
                                             seed)
    raise ConfigError(f"unknown theorem_id {tid!r}")


@dataclass
class CheckOutcome:
    check_id: str
    theorem_id: str
    report: VerificationReport = None
    error: str = None

    @property
    def status(self):
        return "error" if self.error is not None else self.report.status

    def summary_row(self, example):
        r = self.report
        return {"example": example, "check": self.check_id, "theorem_id": self.theorem_id,
                "status": self.status,
                "distance": float("nan") if r is None else r.distance,
                "tolerance": float("nan") if r is None else r.tolerance,
                "detail": "" if r is None else _detail(r), "error": self.error or ""}


def _detail(r):
    dg = r.diagnostics
    if dg.get("strict"):
        return "strict inclusion: cluster set is a proper subset of the face"
    if "strict" in dg:
        return "equality with the face"
    return str(dg.get("note", ""))


def run_config(cfg: ExperimentConfig):
    """Run every check in config order; errors are captured per check."""
    out = []
    for check in cfg.checks:
        try:
            rep = run_check(cfg, check)
            out.append(CheckOutcome(check["id"], check["theorem_id"], rep))
        except (ValueError, RuntimeError, KeyError, TypeError) as e:
            msg = f"missing parameter {e}" if isinstance(e, KeyError) else str(e)
            out.append(CheckOutcome(check["id"], check["theorem_id"], error=msg))
    return out


def exit_code(outcomes):
    st = {o.status for o in outcomes}
    if "error" in st:
        return EXIT_ERROR
    if st - {"pass", "premise_failed"}:
        return EXIT_FAIL
    return EXIT_OK


SUMMARY_FIELDS = ("example", "check", "theorem_id", "status", "distance", "tolerance", "detail",
                  "error")


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for r in rows:
        w.writerow([fmt_float(r[k]) if isinstance(r[k], float) else r[k] for k in SUMMARY_FIELDS])
    return buf.getvalue()


def trace_csv(report: VerificationReport):
    rows = report.trace_csv_rows()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for i, row in enumerate(rows):
        if i == 0:
            w.writerow(row)
            continue
        w.writerow([fmt_float(c) if isinstance(c, (float, np.floating)) else
                    dumps(c, indent=0) if isinstance(c, (list, dict)) else c for c in row])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, outcomes, directory, fmt):
    """One file per check plus a summary, all byte-stable."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    rows = [o.summary_row(cfg.name) for o in outcomes]
    for o in outcomes:
        if fmt == "json":
            body = o.report.to_dict() if o.report else {"check": o.check_id, "error": o.error}
            (d / f"{o.check_id}.json").write_text(dumps(body))
        elif o.report is not None:
            (d / f"{o.check_id}.csv").write_text(trace_csv(o.report))
    if fmt == "json":
        (d / "summary.json").write_text(dumps({"name": cfg.name, "seed": cfg.seed,
                                               "exit_code": exit_code(outcomes),
                                               "results": rows}))
    else:
        (d / "summary.csv").write_text(summary_csv(rows))


def trajectory_csv(cfg: ExperimentConfig, check_id=None):
    """Per-lambda rows for a min_norm_via_yosida check of the config."""
    cands = [c for c in cfg.checks if c["theorem_id"] == "min_norm_via_yosida"]
    if check_id is not None:
        cands = [c for c in cands if c["id"] == check_id]
    if not cands:
        raise ConfigError("config has no matching min_norm_via_yosida check")
    c = cands[0]
    A = cfg.resolve_operator(c.get("operator"))
    if c.get("x") is None:
        raise ConfigError(f"check {c['id']!r} needs 'x'")
    sched = Schedule.from_dict(c.get("params", {}).get("schedule", {}))
    return c["id"], yosida_trajectory(A, _vec(c["x"]), sched).to_csv()
