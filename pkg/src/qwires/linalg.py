"""Small dense linear-algebra helpers for 2x2 and 4x4 complex matrices."""
from __future__ import annotations

import numpy as np

from .errors import NotUnitary

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
PAULIS = (X, Y, Z)


def phase_gate(angle: float) -> np.ndarray:
    """S(angle) = diag(exp(-i angle/2), exp(i angle/2))."""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def ket(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    return bool(np.linalg.norm(dagger(m) @ m - np.eye(m.shape[-1])) <= tol)


def require_unitary(m: np.ndarray, tol: float = 1e-10, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotUnitary(f"{what} must be square, got shape {m.shape}")
    err = np.linalg.norm(dagger(m) @ m - np.eye(m.shape[0]))
    if not np.isfinite(err) or err > tol:
        raise NotUnitary(f"{what} is not unitary (||U^dag U - 1|| = {err:.3g})")
    return m


def unitarity_residual(m: np.ndarray) -> float:
    """Relative distance of m^dag m from a multiple of the identity."""
    g = dagger(m) @ m
    scale = np.trace(g).real / g.shape[0]
    if scale <= 0:
        return float("inf")
    return float(np.linalg.norm(g - scale * np.eye(g.shape[0])) / scale)


def is_proportional_to_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    return unitarity_residual(m) <= tol


def is_rank_one(m: np.ndarray, tol: float = 1e-10) -> bool:
    s = np.linalg.svd(m, compute_uv=False)
    return bool(s[0] > tol and s[1] <= tol * max(1.0, s[0]))


def to_special_unitary(u: np.ndarray) -> np.ndarray:
    """Divide out a square root of the determinant."""
    det = np.linalg.det(u)
    return u / np.sqrt(det + 0j)


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over chi of ||a - exp(i chi) b||_F, evaluated without cancellation."""
    overlap = np.vdot(b, a)
    chi = np.angle(overlap) if abs(overlap) > 0 else 0.0
    return float(np.linalg.norm(a - np.exp(1j * chi) * b))


def normalized_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """phase_distance after scaling both operands to unit Frobenius norm."""
    return phase_distance(a / np.linalg.norm(a), b / np.linalg.norm(b))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized state vectors (any shape, flattened)."""
    a = np.ravel(a)
    b = np.ravel(b)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def von_neumann_entropy(rho: np.ndarray, base: float = 2.0) -> float:
    w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
    w = w[w > 1e-15]
    return max(0.0, float(-np.sum(w * np.log(w)) / np.log(base)))


def shannon_entropy(p, base: float = 2.0) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-15]
    return max(0.0, float(-np.sum(p * np.log(p)) / np.log(base)))


def operator_schmidt(m: np.ndarray, dims=(2, 2)) -> np.ndarray:
    """Operator-Schmidt coefficients of m acting on C^dA (x) C^dB.

    Coefficients are normalized so their squares sum to one.
    """
    da, db = dims
    t = np.asarray(m).reshape(da, db, da, db).transpose(0, 2, 1, 3).reshape(da * da, db * db)
    s = np.linalg.svd(t, compute_uv=False)
    return s / np.linalg.norm(s)


def operator_schmidt_rank(m: np.ndarray, dims=(2, 2), tol: float = 1e-6) -> int:
    return int(np.sum(operator_schmidt(m, dims) > tol))


def haar_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / abs(d))


def haar_su2(rng: np.random.Generator) -> np.ndarray:
    return to_special_unitary(haar_unitary(rng, 2))


def bloch_to_spinor(n) -> np.ndarray:
    """Unit vector v with v v^dag = (1 + n.sigma)/2 and real, non-negative v[0]."""
    nx, ny, nz = n
    t = np.arccos(np.clip(nz, -1.0, 1.0))
    psi = np.arctan2(ny, nx)
    return np.array([np.cos(t / 2), np.exp(1j * psi) * np.sin(t / 2)])


def complete_orthonormal(columns: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a square unitary.

    Deterministic pivot rule: repeatedly project the standard basis vectors
    onto the orthogonal complement and keep the one with the largest residual
    (lowest index on ties).
    """
    q = np.array(columns, dtype=complex)
    dim = q.shape[0]
    while q.shape[1] < dim:
        resid = np.eye(dim, dtype=complex) - q @ dagger(q)
        norms = np.linalg.norm(resid, axis=0)
        k = int(np.argmax(np.round(norms, 12)))
        v = resid[:, k]
        v = v - q @ (dagger(q) @ v)
        q = np.column_stack([q, v / np.linalg.norm(v)])
    return q
