"""JSON interchange: complex numbers are [re, im] pairs, angles are radians."""
from __future__ import annotations

import json

import numpy as np

from .classifier import ClassificationReport, NormalFormWire
from .compiler import CompilationPlan, PlanStep
from .mps import WireTensor, from_preparation_unitary


class FormatError(ValueError):
    """Input file does not follow the documented format."""


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        return [encode_complex(z) for z in m]
    return [encode_matrix(row) for row in m]


def decode_matrix(data, shape=None) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"not a numeric array: {exc}") from None
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise FormatError("complex entries must be [re, im] pairs")
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and out.shape != tuple(shape):
        raise FormatError(f"expected shape {tuple(shape)}, got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise FormatError("entries must be finite")
    return out


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def wire_from_json(data) -> WireTensor:
    """Accepts {"a0", "a1"}, {"preparation_unitary"} or {"normal_form": {"w", "phi"}}."""
    if not isinstance(data, dict):
        raise FormatError("wire file must hold a JSON object")
    if "a0" in data and "a1" in data:
        return WireTensor(decode_matrix(data["a0"], (2, 2)), decode_matrix(data["a1"], (2, 2)), tol=1e-8)
    if "preparation_unitary" in data:
        return from_preparation_unitary(decode_matrix(data["preparation_unitary"], (4, 4)), tol=1e-8)
    if "normal_form" in data:
        return normal_form_from_json(data["normal_form"]).tensor
    raise FormatError("wire file needs a0/a1, preparation_unitary or normal_form")


def wire_to_json(t: WireTensor) -> dict:
    return {"a0": encode_matrix(t.a0), "a1": encode_matrix(t.a1)}


def normal_form_to_json(nf: NormalFormWire) -> dict:
    return {"w": encode_matrix(nf.w), "phi": nf.phi}


def normal_form_from_json(data) -> NormalFormWire:
    try:
        return NormalFormWire(decode_matrix(data["w"], (2, 2)), float(data["phi"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"normal form needs w and phi ({exc})") from None


def report_to_json(r: ClassificationReport) -> dict:
    out = {
        "verdict": r.verdict.value,
        "gap": r.gap,
        "unitality_residual": r.unitality_residual,
        "assumptions": list(r.assumptions),
    }
    if r.choi_rank is not None:
        out["choi_rank"] = r.choi_rank
    if r.normal_form is not None:
        out["normal_form"] = normal_form_to_json(r.normal_form)
        g = r.gauge
        out["gauge"] = {
            "v": encode_matrix(g.v),
            "x": encode_matrix(g.x),
            "alpha": g.alpha,
            "mix": g.mix,
            "g": encode_matrix(g.g),
            "residual": g.residual,
        }
    return out


def plan_to_json(plan: CompilationPlan, nf: NormalFormWire) -> dict:
    return {
        "wire": normal_form_to_json(nf),
        "target": encode_matrix(plan.target),
        "residual": plan.residual,
        "steps": [{"theta": s.theta, "delta": s.delta, "prob": s.prob} for s in plan.steps],
    }


def plan_from_json(data) -> tuple[CompilationPlan, NormalFormWire]:
    try:
        nf = normal_form_from_json(data["wire"])
        steps = tuple(PlanStep(float(s["theta"]), float(s["delta"]), float(s["prob"])) for s in data["steps"])
        return CompilationPlan(steps, decode_matrix(data["target"], (2, 2)), float(data["residual"])), nf
    except (KeyError, TypeError) as exc:
        raise FormatError(f"plan file is missing fields ({exc})") from None


def plan_overrides(data) -> dict:
    """Optional per-step "basis" (two [re, im] vectors) and forced "outcome" entries."""
    out = {}
    for k, step in enumerate(data.get("steps", [])):
        extra = {}
        if "basis" in step:
            basis = decode_matrix(step["basis"], (2, 2))
            if np.linalg.norm(basis @ basis.conj().T - np.eye(2)) > 1e-9:
                raise FormatError(f"step {k}: basis vectors are not orthonormal")
            extra["basis"] = (basis[0], basis[1])
        if "outcome" in step:
            if step["outcome"] not in (0, 1):
                raise FormatError(f"step {k}: outcome must be 0 or 1")
            extra["outcome"] = int(step["outcome"])
        if extra:
            out[k] = extra
    return out


def target_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        if "target" not in data:
            raise FormatError("target file needs a 'target' entry")
        data = data["target"]
    return decode_matrix(data, (2, 2))
