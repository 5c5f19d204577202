"""Run a compilation plan on a simulated chain, adapting after unwanted outcomes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from . import oracle
from .classifier import NormalFormWire
from .compiler import CompilationPlan, basis_action, compile_su2, theta_basis
from .errors import NotReached, ZeroProbabilityBranch
from .mps import local_operator


@dataclass
class ReplayResult:
    records: list = field(default_factory=list)
    status: str = "completed"
    max_deviation: float = 0.0
    state_fidelity: float = 1.0
    target_residual: float = float("nan")

    def summary(self) -> dict:
        return {
            "status": self.status,
            "sites_used": len(self.records),
            "max_deviation": self.max_deviation,
            "state_fidelity": self.state_fidelity,
            "target_residual": None if np.isnan(self.target_residual) else self.target_residual,
        }


def replay_plan(nf: NormalFormWire, plan: CompilationPlan, rng: np.random.Generator, n_sites: int,
                tol: float = 1e-9, max_len: int = 12, overrides=None) -> ReplayResult:
    """Measure sites 1, 2, ... of an n-site chain following the plan.

    After an outcome that does not realize the planned phase gate, the rest
    of the target is recompiled from the operator actually applied.  Every
    oracle probability is compared with the correlation-space prediction,
    and at the end the unmeasured part of the chain is compared with the
    wire state generated from the predicted correlation vector.

    `overrides` maps a plan position to {"basis": (v0, v1), "outcome": k};
    either key may be omitted.  A step measured in a foreign basis ends the
    target bookkeeping, since its branch need not be unitary.
    """
    overrides = overrides or {}
    state = oracle.prepare_from_mps(nf.tensor, n_sites)
    acc = la.I2
    corr = np.array([1, 0], dtype=complex)
    pending = list(enumerate(plan.steps))
    out = ReplayResult()
    vectors = []
    tracking = True
    site = 0
    while pending:
        if site + 1 >= n_sites:
            out.status = "exhausted"
            break
        index, step = pending.pop(0)
        extra = overrides.get(index, {}) if tracking else {}
        site += 1
        basis = extra.get("basis", theta_basis(step.theta))
        try:
            rec, state = oracle.measure_site(state, site, basis, branch=extra.get("outcome"), rng=rng)
        except ZeroProbabilityBranch as exc:
            out.status = "zero_probability"
            out.records.append({"site": site, "error": "ZeroProbabilityBranch", "message": str(exc)})
            return out
        vec = np.asarray(basis[rec.outcome], dtype=complex)
        local = local_operator(nf.tensor, vec) @ corr
        predicted = float(np.vdot(local, local).real)
        corr = local / np.sqrt(predicted)
        record = {
            "site": site,
            "theta": step.theta,
            "outcome": rec.outcome,
            "p_oracle": rec.probability,
            "p_predicted": predicted,
            "deviation": abs(rec.probability - predicted),
            "delta_planned": step.delta,
        }
        vectors.append(vec)
        out.max_deviation = max(out.max_deviation, record["deviation"])
        if "basis" in extra:
            tracking = False
            record["theta"] = None
            out.records.append(record)
            continue
        branch = basis_action(nf, step.theta)[rec.outcome]
        record["delta_applied"] = branch.delta
        out.records.append(record)
        if not tracking:
            continue
        acc = branch.unitary @ acc
        if rec.outcome == 1:
            remaining = plan.target @ la.dagger(acc)
            if la.phase_distance(remaining, la.I2) <= tol:
                pending = []
            else:
                try:
                    pending = list(enumerate(compile_su2(nf, remaining, tol, max_len).steps, start=len(plan.steps)))
                except NotReached:
                    out.status = "unreachable"
                    break
    rest = state.tensor
    for v in vectors:
        rest = np.tensordot(np.conj(v), rest, axes=([0], [0]))
    expected = oracle.prepare_from_mps(nf.tensor, n_sites - site, boundary=corr).tensor
    out.state_fidelity = la.fidelity(rest, expected)
    if not tracking:
        out.status = "untracked"
    elif out.status == "completed":
        out.target_residual = la.phase_distance(acc, plan.target)
    return out
