"""Bond-dimension-two, translation-invariant matrix product states ("wires").

Conventions used across the package:

* A wire state on n sites is  sum_x <x_n| A[x_{n-1}] ... A[x_1] |0> |x_1 ... x_n>.
  Site 1 touches the right boundary vector |0>, the last site's physical
  index is the readout index.
* The preparation unitary acts on (site k+1, site k) with site k+1 the most
  significant qubit, and A[x]_{i,j} = <i,x| U |0,j>, i.e. A[x][i, j] = U[2i+x, j].
* Operators are vectorized row-major, so vec(A rho B) = (A kron B^T) vec(rho).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from .errors import NoGap, NotNormalized

DEFAULT_TOL = 1e-9
GAP_THRESHOLD = 1e-6


@dataclass(frozen=True, eq=False)
class WireTensor:
    """The pair (A[0], A[1]); right-normalized on construction."""

    a0: np.ndarray
    a1: np.ndarray
    tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        a0 = np.array(self.a0, dtype=complex).reshape(2, 2)
        a1 = np.array(self.a1, dtype=complex).reshape(2, 2)
        if not (np.all(np.isfinite(a0)) and np.all(np.isfinite(a1))):
            raise NotNormalized("tensor entries must be finite")
        a0.setflags(write=False)
        a1.setflags(write=False)
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)
        err = self.normalization_residual()
        if err > self.tol:
            raise NotNormalized(
                f"A0^dag A0 + A1^dag A1 deviates from identity by {err:.3g}; "
                "use canonicalize() to gauge-fix"
            )

    @property
    def mats(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a0, self.a1

    def __getitem__(self, x: int) -> np.ndarray:
        return self.mats[x]

    def stacked(self) -> np.ndarray:
        return np.stack(self.mats)

    def normalization_residual(self) -> float:
        g = sum(la.dagger(a) @ a for a in (self.a0, self.a1))
        return float(np.linalg.norm(g - la.I2))

    def allclose(self, other: "WireTensor", tol: float = DEFAULT_TOL) -> bool:
        return bool(
            np.linalg.norm(self.a0 - other.a0) <= tol and np.linalg.norm(self.a1 - other.a1) <= tol
        )

    @cached_property
    def channel(self) -> "TransferChannel":
        return transfer_channel(self)


def canonicalize(a0, a1) -> tuple[WireTensor, np.ndarray]:
    """Bring an arbitrary injective pair to right-normal form.

    Finds the dominant fixed point L of rho -> sum A^dag rho A, factors
    L = Y^dag Y and returns (Y A Y^-1 / sqrt(lambda), Y).  The boundary vector
    transforms as |0> -> Y|0>, which the caller must track if it matters.
    """
    mats = [np.asarray(a0, dtype=complex), np.asarray(a1, dtype=complex)]
    dual = sum(np.kron(la.dagger(a), a.T) for a in mats)
    w, v = np.linalg.eig(dual)
    k = int(np.argmax(w.real))
    lam = w[k].real
    if lam <= 0:
        raise NotNormalized("tensor has no positive dominant eigenvalue")
    fixed = v[:, k].reshape(2, 2)
    fixed = fixed / np.trace(fixed)
    fixed = (fixed + la.dagger(fixed)) / 2
    evals, evecs = np.linalg.eigh(fixed)
    if evals.min() <= 1e-12 * evals.max():
        raise NotNormalized("dominant fixed point is not full rank; tensor is not injective")
    y = np.diag(np.sqrt(evals)) @ la.dagger(evecs)
    y_inv = np.linalg.inv(y)
    out = [y @ a @ y_inv / np.sqrt(lam) for a in mats]
    return WireTensor(*out, tol=1e-8), y


def normal_form_tensor(w: np.ndarray, phi: float) -> WireTensor:
    """B[0] = W/sqrt2, B[1] = W S(phi)/sqrt2."""
    w = np.asarray(w, dtype=complex)
    return WireTensor(w / np.sqrt(2), w @ la.phase_gate(phi) / np.sqrt(2))


def from_preparation_unitary(u: np.ndarray, tol: float = 1e-10) -> WireTensor:
    u = la.require_unitary(u, tol, "preparation unitary")
    if u.shape != (4, 4):
        raise la.NotUnitary(f"preparation unitary must be 4x4, got {u.shape}")
    cols = u[:, :2].reshape(2, 2, 2)  # (i, x, j)
    return WireTensor(cols[:, 0, :], cols[:, 1, :], tol=max(tol, 1e-10) * 10)


def to_preparation_unitary(t: WireTensor) -> np.ndarray:
    iso = np.empty((4, 2), dtype=complex)
    for x in (0, 1):
        for i in (0, 1):
            iso[2 * i + x, :] = t[x][i, :]
    return la.complete_orthonormal(iso)


@dataclass(frozen=True, eq=False)
class TransferChannel:
    m: np.ndarray
    eigenvalues: np.ndarray

    @property
    def gap(self) -> float:
        return float(1.0 - abs(self.eigenvalues[1]))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.m @ np.asarray(rho, dtype=complex).reshape(4)).reshape(2, 2)

    def unitality_residual(self) -> float:
        return float(np.linalg.norm(self.apply(la.I2) - la.I2))

    def is_unital(self, tol: float = DEFAULT_TOL) -> bool:
        return self.unitality_residual() <= tol

    def is_gapped(self, threshold: float = GAP_THRESHOLD) -> bool:
        return self.gap > threshold

    def fixed_point(self) -> np.ndarray:
        """Unit-trace fixed point of the channel (unique when gapped)."""
        w, v = np.linalg.eig(self.m)
        k = int(np.argmin(abs(w - 1)))
        rho = v[:, k].reshape(2, 2)
        rho = rho / np.trace(rho)
        return (rho + la.dagger(rho)) / 2

    def choi(self) -> np.ndarray:
        """Choi matrix sum_{ij} |i><j| (x) E(|i><j|), first factor the input."""
        out = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2), dtype=complex)
                e[i, j] = 1
                out += np.kron(e, self.apply(e))
        return out


def transfer_channel(t: WireTensor) -> TransferChannel:
    m = sum(np.kron(a, a.conj()) for a in t.mats)
    w = np.linalg.eigvals(m)
    w = w[np.argsort(-abs(w), kind="stable")]
    return TransferChannel(m, w)


def local_operator(t: WireTensor, vec) -> np.ndarray:
    """A[vec] = conj(c0) A[0] + conj(c1) A[1] for measurement outcome |vec>."""
    c = np.asarray(vec, dtype=complex)
    return np.conj(c[0]) * t.a0 + np.conj(c[1]) * t.a1


def amplitude(t: WireTensor, outcomes) -> complex:
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("need at least one site")
    v = np.array([1, 0], dtype=complex)
    for x in outcomes[:-1]:
        v = t[x] @ v
    return complex(v[outcomes[-1]])


def all_amplitudes(t: WireTensor, n: int) -> np.ndarray:
    """Tensor of shape (2,)*n with axis k holding site k+1."""
    # contract left to right, carrying the bond index as the last axis
    psi = np.array([1, 0], dtype=complex).reshape(2)
    stack = t.stacked()  # (x, i, j)
    for _ in range(n - 1):
        psi = np.tensordot(psi, stack, axes=([-1], [2]))  # (..., x, i)
    return psi


def site_density(t: WireTensor, site: int, boundary=None) -> np.ndarray:
    """Reduced density matrix of a bulk site (1-based, not the last one) of a finite chain.

    The correlation system enters site k in E^(k-1)(|b><b|); the sites to its
    right act as an isometry and drop out of the trace.
    """
    b = np.array([1, 0], dtype=complex) if boundary is None else np.asarray(boundary, dtype=complex)
    rho = np.outer(b, b.conj()) / np.vdot(b, b).real
    for _ in range(site - 1):
        rho = t.channel.apply(rho)
    return np.array([[np.trace(t[x] @ rho @ la.dagger(t[y])) for y in (0, 1)] for x in (0, 1)])


def single_site_rho(phi: float) -> np.ndarray:
    """Bulk single-site density matrix of a normal-form wire (fixed point 1/2)."""
    c = np.cos(phi / 2)
    return np.array([[1, c], [c, 1]], dtype=complex) / 2


def single_site_entropy(phi: float) -> float:
    c = abs(np.cos(phi / 2))
    return la.shannon_entropy([(1 + c) / 2, (1 - c) / 2])


def halfchain_entropy_limit(t: WireTensor, gap_threshold: float = GAP_THRESHOLD, tol: float = DEFAULT_TOL) -> float:
    """Entanglement between half-chains deep in the bulk, in ebits.

    The state of the correlation system after k sites is E^k(|0><0|), and the
    remaining sites act as an isometry on it, so the bulk value is the entropy
    of the channel's fixed point.
    """
    ch = t.channel
    if not ch.is_gapped(gap_threshold):
        raise NoGap(f"transfer channel gap {ch.gap:.3g} below threshold {gap_threshold:g}")
    if ch.is_unital(tol):
        return 1.0
    return la.von_neumann_entropy(ch.fixed_point())


def random_wire(rng: np.random.Generator) -> WireTensor:
    """Right-normalized tensor from a Haar-random preparation unitary."""
    return from_preparation_unitary(la.haar_unitary(rng, 4))
