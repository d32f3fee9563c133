"""Canonical JSON for fragments, tables, frames, cones, certificates and reports.

Output is canonical: keys sorted, no whitespace, floats written with
``%.17g`` so that emit -> parse -> emit is byte-identical. Matrices are
stored flat in row-major order next to their shape.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .embed.cones import ConeDescription
from .embed.embedding import EmbeddingCertificate, FarkasCertificate
from .errors import GptError
from .frames import FrameEntry, build_frame
from .gptcore import GptEffect, GptFragment, GptState, GptTransformation, SystemSpec
from .quotient import Procedure, StatsTable, TesterSet


class SchemaError(GptError, ValueError):
    """Malformed or unsupported JSON document."""


# ---------------------------------------------------------------------------
# canonical encoding
# ---------------------------------------------------------------------------

def _encode(obj: Any, out: list[str]) -> None:
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise SchemaError(f"non-finite number {x!r} cannot be serialized")
        out.append("%.17g" % x)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise SchemaError(f"object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(list(obj)):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise SchemaError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def loads(text: str) -> Any:
    return json.loads(text)


def sha256(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def write(path: str | Path, obj: Any) -> str:
    text = dumps(obj)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def read(path: str | Path) -> Any:
    return loads(Path(path).read_text(encoding="utf-8"))


def _flat(mat) -> dict:
    a = np.asarray(mat, dtype=float)
    a2 = a.reshape(a.shape[0], -1) if a.ndim >= 2 else a.reshape(1, -1)
    return {"rows": int(a2.shape[0]), "cols": int(a2.shape[1]), "data": [float(x) for x in a2.ravel()]}


def _unflat(d: dict) -> np.ndarray:
    try:
        return np.array(d["data"], dtype=float).reshape(int(d["rows"]), int(d["cols"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise SchemaError(f"bad matrix block: {exc}") from exc


def _vec(v) -> list[float]:
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def _expect(doc: dict, schema: str) -> None:
    if not isinstance(doc, dict) or doc.get("schema") != schema:
        found = doc.get("schema") if isinstance(doc, dict) else type(doc).__name__
        raise SchemaError(f"expected schema {schema!r}, found {found!r}")


# ---------------------------------------------------------------------------
# fragment.v1
# ---------------------------------------------------------------------------

def system_to_dict(s: SystemSpec) -> dict:
    return {"id": s.id, "dim": int(s.dim), "unit_effect": _vec(s.unit_effect), "factors": list(s.factors)}


def system_from_dict(d: dict) -> SystemSpec:
    return SystemSpec(d["id"], int(d["dim"]), np.array(d["unit_effect"], dtype=float), tuple(d.get("factors", ())))


def fragment_to_dict(f: GptFragment) -> dict:
    return {
        "schema": "fragment.v1",
        "name": f.name,
        "systems": [system_to_dict(s) for s in f.systems],
        "states": [{"system": s.system.id, "vec": _vec(s.vec), "normalized": bool(s.normalized), "label": s.label}
                   for s in f.states],
        "effects": [{"system": e.system.id, "covec": _vec(e.covec), "label": e.label} for e in f.effects],
        "transformations": [
            {"in": t.in_system.id, "out": t.out_system.id, "mat": _flat(t.mat), "channel": bool(t.channel), "label": t.label}
            for t in f.transformations
        ],
        "state_cone_rays": {k: _flat(v) for k, v in f.state_cone_rays.items()},
        "effect_cone_rays": {k: _flat(v) for k, v in f.effect_cone_rays.items()},
    }


def fragment_from_dict(d: dict) -> GptFragment:
    _expect(d, "fragment.v1")
    try:
        systems = {s["id"]: system_from_dict(s) for s in d["systems"]}
        states = [GptState(systems[s["system"]], np.array(s["vec"], dtype=float), bool(s.get("normalized", True)),
                           s.get("label", "")) for s in d.get("states", [])]
        effects = [GptEffect(systems[e["system"]], np.array(e["covec"], dtype=float), e.get("label", ""))
                   for e in d.get("effects", [])]
        trans = [GptTransformation(systems[t["in"]], systems[t["out"]], _unflat(t["mat"]), bool(t.get("channel", False)),
                                   t.get("label", "")) for t in d.get("transformations", [])]
    except KeyError as exc:
        raise SchemaError(f"fragment.v1 refers to unknown field or system {exc}") from exc
    return GptFragment(
        tuple(systems.values()), tuple(states), tuple(effects), tuple(trans),
        {k: _unflat(v) for k, v in d.get("state_cone_rays", {}).items()},
        {k: _unflat(v) for k, v in d.get("effect_cone_rays", {}).items()},
        d.get("name", ""),
    )


# ---------------------------------------------------------------------------
# statstable.v1
# ---------------------------------------------------------------------------

def table_to_dict(t: StatsTable) -> dict:
    return {
        "schema": "statstable.v1",
        "testers": {k: {"id": v.id, "labels": list(v.labels)} for k, v in t.testers.items()},
        "procedures": [
            {"id": p.id, "context": p.context, "signature": list(p.signature), "stats": _vec(p.stats),
             "wiring": list(p.wiring) if p.wiring is not None else None}
            for p in t.procedures
        ],
        "deterministic_effect_ids": list(t.deterministic_effect_ids),
    }


def table_from_dict(d: dict) -> StatsTable:
    _expect(d, "statstable.v1")
    try:
        testers = {k: TesterSet(v["id"], tuple(v["labels"])) for k, v in d["testers"].items()}
        procs = tuple(
            Procedure(p["id"], p.get("context", ""), tuple(p["signature"]), np.array(p["stats"], dtype=float),
                      tuple(p["wiring"]) if p.get("wiring") else None)
            for p in d["procedures"]
        )
    except KeyError as exc:
        raise SchemaError(f"statstable.v1 is missing field {exc}") from exc
    return StatsTable(testers, procs, tuple(d.get("deterministic_effect_ids", ())))


# ---------------------------------------------------------------------------
# frame.v1
# ---------------------------------------------------------------------------

def frame_to_dict(entry: FrameEntry) -> dict:
    return {
        "schema": "frame.v1",
        "system": system_to_dict(entry.system),
        "labels": list(entry.ontic.labels),
        "chi": _flat(entry.chi),
        "exact": bool(entry.exact),
    }


def frame_from_dict(d: dict, tol: float | None = None) -> FrameEntry:
    _expect(d, "frame.v1")
    system = system_from_dict(d["system"])
    chi = _unflat(d["chi"])
    kwargs = {} if tol is None else {"tol": tol}
    return build_frame(system, chi, labels=d.get("labels"), allow_overcomplete=chi.shape[0] != system.dim, **kwargs)


# ---------------------------------------------------------------------------
# cone.v1 and certificate.v1
# ---------------------------------------------------------------------------

def cone_to_dict(c: ConeDescription) -> dict:
    out = {"schema": "cone.v1", "ambient_dim": int(c.ambient_dim), "rays": _flat(np.asarray(c.rays, dtype=float).reshape(-1, c.ambient_dim))}
    out["facets"] = _flat(np.asarray(c.facets, dtype=float).reshape(-1, c.ambient_dim)) if c.facets is not None else None
    return out


def cone_from_dict(d: dict) -> ConeDescription:
    _expect(d, "cone.v1")
    facets = _unflat(d["facets"]) if d.get("facets") else None
    return ConeDescription(int(d["ambient_dim"]), _unflat(d["rays"]), facets)


def certificate_to_dict(c: EmbeddingCertificate | FarkasCertificate) -> dict:
    out = {
        "schema": "certificate.v1",
        "system": c.system_id,
        "dim": int(c.dim),
        "tol": float(c.tol),
        "f_rays": _flat(c.f_rays),
        "d_rays": _flat(c.d_rays),
        "state_map": _flat(c.state_map),
        "effect_map": _flat(c.effect_map),
    }
    if isinstance(c, EmbeddingCertificate):
        out["kind"] = "embedding"
        out["weights"] = _flat(c.weights)
        out["ontic_count"] = int(c.ontic_count)
    else:
        out["kind"] = "farkas"
        out["functional"] = _flat(c.functional)
        out["gap"] = c.gap
    return out


def certificate_from_dict(d: dict) -> EmbeddingCertificate | FarkasCertificate:
    _expect(d, "certificate.v1")
    common = dict(
        system_id=d["system"], f_rays=_unflat(d["f_rays"]), d_rays=_unflat(d["d_rays"]),
        state_map=_unflat(d["state_map"]), effect_map=_unflat(d["effect_map"]), tol=float(d.get("tol", 1e-9)),
    )
    kind = d.get("kind")
    if kind == "embedding":
        return EmbeddingCertificate(weights=_unflat(d["weights"]), **common)
    if kind == "farkas":
        return FarkasCertificate(functional=_unflat(d["functional"]), **common)
    raise SchemaError(f"unknown certificate kind {kind!r}")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

DECODERS = {
    "fragment.v1": fragment_from_dict,
    "statstable.v1": table_from_dict,
    "frame.v1": frame_from_dict,
    "cone.v1": cone_from_dict,
    "certificate.v1": certificate_from_dict,
    "report.v1": dict,
    "runreport.v1": dict,
}


def to_dict(obj) -> dict:
    if isinstance(obj, GptFragment):
        return fragment_to_dict(obj)
    if isinstance(obj, StatsTable):
        return table_to_dict(obj)
    if isinstance(obj, FrameEntry):
        return frame_to_dict(obj)
    if isinstance(obj, ConeDescription):
        return cone_to_dict(obj)
    if isinstance(obj, (EmbeddingCertificate, FarkasCertificate)):
        return certificate_to_dict(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise SchemaError(f"no schema for {type(obj).__name__}")


def from_dict(d: dict):
    schema = d.get("schema") if isinstance(d, dict) else None
    if schema not in DECODERS:
        raise SchemaError(f"unsupported schema {schema!r}")
    return DECODERS[schema](d)
