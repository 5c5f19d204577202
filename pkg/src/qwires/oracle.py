"""Exact state-vector simulator for short chains.

States are stored as tensors of shape (d,)*n where axis k is site k+1.
Sites are numbered from 1 in every public function.  The flat amplitude
vector uses site 1 as the least significant digit.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import TooLarge, ZeroProbabilityBranch
from .mps import WireTensor, all_amplitudes, local_operator

DEFAULT_CAP = 14
ZERO_PROB = 1e-14


def site_cap() -> int:
    return int(os.environ.get("QWIRES_CAP", DEFAULT_CAP))


def _check_size(n: int, cap: int | None) -> None:
    cap = site_cap() if cap is None else cap
    if n > cap:
        raise TooLarge(f"{n} sites exceeds the cap of {cap}")
    if n < 1:
        raise ValueError("need at least one site")


@dataclass(frozen=True, eq=False)
class StateVector:
    tensor: np.ndarray

    @property
    def n(self) -> int:
        return self.tensor.ndim

    @property
    def d(self) -> int:
        return self.tensor.shape[0]

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1, order="F")

    @classmethod
    def from_amplitudes(cls, amps, n: int, d: int = 2) -> "StateVector":
        return cls(np.asarray(amps, dtype=complex).reshape((d,) * n, order="F"))

    @classmethod
    def product(cls, vectors) -> "StateVector":
        t = np.array(1, dtype=complex)
        for v in vectors:
            t = np.multiply.outer(t, np.asarray(v, dtype=complex))
        return cls(t)

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))


@dataclass(frozen=True)
class MeasurementRecord:
    site: int
    basis: tuple
    outcome: int
    probability: float


def zero_state(n: int, d: int = 2, cap: int | None = None) -> StateVector:
    _check_size(n, cap)
    t = np.zeros((d,) * n, dtype=complex)
    t[(0,) * n] = 1
    return StateVector(t)


def apply_gate(s: StateVector, gate, sites, tol: float = 1e-10) -> StateVector:
    """Apply a k-site unitary; sites[0] is the most significant factor of gate."""
    sites = [int(q) for q in np.atleast_1d(sites)]
    k = len(sites)
    gate = la.require_unitary(gate, tol, "gate")
    if gate.shape[0] != s.d**k:
        raise ValueError(f"gate of size {gate.shape[0]} does not fit {k} sites of dimension {s.d}")
    if len(set(sites)) != k or min(sites) < 1 or max(sites) > s.n:
        raise ValueError(f"invalid sites {sites} for a chain of {s.n}")
    return StateVector(_contract(s.tensor, gate.reshape((s.d,) * (2 * k)), sites))


def apply_operator(s: StateVector, op, sites) -> StateVector:
    """Apply an arbitrary (not necessarily unitary) operator, without renormalizing."""
    sites = [int(q) for q in np.atleast_1d(sites)]
    op = np.asarray(op, dtype=complex)
    return StateVector(_contract(s.tensor, op.reshape((s.d,) * (2 * len(sites))), sites))


def _contract(tensor, op, sites):
    k = len(sites)
    axes = [q - 1 for q in sites]
    out = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def prepare_chain(u, n: int, cap: int | None = None) -> StateVector:
    """Sequential preparation: u on sites (2,1), (3,2), ..., (n,n-1) from |0...0>."""
    s = zero_state(n, 2, cap)
    u = la.require_unitary(u, 1e-10, "preparation unitary")
    for k in range(1, n):
        s = apply_gate(s, u, (k + 1, k))
    return s


def prepare_from_mps(t: WireTensor, n: int, boundary=None, cap: int | None = None) -> StateVector:
    """Direct contraction; `boundary` replaces the right boundary vector |0>."""
    _check_size(n, cap)
    if boundary is None:
        return StateVector(all_amplitudes(t, n))
    b = np.asarray(boundary, dtype=complex)
    b = b / np.linalg.norm(b)
    psi = b
    stack = t.stacked()
    for _ in range(n - 1):
        psi = np.tensordot(psi, stack, axes=([-1], [2]))
    return StateVector(psi)


def branch_probability(s: StateVector, site: int, vec) -> float:
    proj = np.tensordot(np.conj(vec), s.tensor, axes=([0], [site - 1]))
    return float(np.vdot(proj, proj).real)


def measure_site(s: StateVector, site: int, basis, branch=None, rng=None):
    """Projective measurement of one site in an orthonormal basis.

    Pass `branch` to force an outcome, otherwise an outcome is drawn with
    `rng`.  The measured site is left in the corresponding basis vector.
    Returns (MeasurementRecord, post-measurement StateVector).
    """
    basis = [np.asarray(v, dtype=complex) for v in basis]
    gram = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    if np.linalg.norm(gram - np.eye(len(basis))) > 1e-10:
        raise ValueError("measurement basis is not orthonormal")
    projected = [np.tensordot(np.conj(v), s.tensor, axes=([0], [site - 1])) for v in basis]
    probs = np.array([np.vdot(p, p).real for p in projected])
    if branch is None:
        if rng is None:
            raise ValueError("either a branch or a random generator is required")
        branch = int(rng.choice(len(basis), p=probs / probs.sum()))
    branch = int(branch)
    if probs[branch] < ZERO_PROB:
        raise ZeroProbabilityBranch(f"outcome {branch} at site {site} has probability {probs[branch]:.3g}")
    rest = projected[branch] / np.sqrt(probs[branch])
    post = np.moveaxis(np.multiply.outer(basis[branch], rest), 0, site - 1)
    record = MeasurementRecord(site, tuple(tuple(v) for v in basis), branch, float(probs[branch]))
    return record, StateVector(post)


def project_site(s: StateVector, site: int, vec) -> StateVector:
    """Unnormalized <vec| on a site, removing it from the chain."""
    return StateVector(np.tensordot(np.conj(vec), s.tensor, axes=([0], [site - 1])))


def reduced_density(s: StateVector, sites) -> np.ndarray:
    """Partial trace onto `sites`, ordered as given (first = most significant)."""
    sites = [int(q) for q in np.atleast_1d(sites)]
    keep = [q - 1 for q in sites]
    rest = [a for a in range(s.n) if a not in keep]
    t = np.transpose(s.tensor, keep + rest).reshape(s.d ** len(keep), -1)
    rho = t @ t.conj().T
    return rho / np.trace(rho).real


def schmidt_values(s: StateVector, cut: int) -> np.ndarray:
    m = s.tensor.reshape(s.d**cut, -1)
    sv = np.linalg.svd(m, compute_uv=False)
    return sv / np.linalg.norm(sv)


def entanglement_entropy(s: StateVector, cut: int) -> float:
    """Entropy (bits) between sites 1..cut and cut+1..n."""
    if cut <= 0 or cut >= s.n:
        return 0.0
    return la.shannon_entropy(schmidt_values(s, cut) ** 2)


def correlation_state_extract(t: WireTensor, prefix) -> np.ndarray:
    """Normalized A[v_k] ... A[v_1]|0> for measured prefix vectors v_1..v_k.

    Each prefix entry is either a measurement vector or an integer outcome in
    the computational basis.
    """
    v = np.array([1, 0], dtype=complex)
    for item in prefix:
        vec = np.eye(2)[item] if np.ndim(item) == 0 else item
        v = local_operator(t, vec) @ v
        nrm = np.linalg.norm(v)
        if nrm**2 < ZERO_PROB:
            raise ZeroProbabilityBranch("measured prefix has zero probability")
        v = v / nrm
    return v
