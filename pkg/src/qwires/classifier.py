"""Decide whether a wire tensor is a computational wire and reduce it to (W, phi).

The reduction is a sequence of gauge moves that keep the generated state
family fixed up to local unitaries:

* a physical-basis change  A[x] -> sum_j G[x, j] A[j]  (G unitary),
* a correlation-space conjugation  A[x] -> X A[x] X^dag  (X unitary).

The composed transformation is returned so the caller can verify it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from .errors import ChoiRankExceeded, Degenerate, NoGap, NotUnital, NotUnitary
from .mps import DEFAULT_TOL, GAP_THRESHOLD, WireTensor, normal_form_tensor, transfer_channel

DEGENERACY = 1e-6
TWO_PI = 2 * np.pi


class Verdict(str, Enum):
    WIRE = "Wire"
    NOT_GAPPED = "NotGapped"
    NOT_UNITAL = "NotUnital"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True, eq=False)
class NormalFormWire:
    """Always-on operation w (special unitary) and by-product angle phi in (0, 2pi)."""

    w: np.ndarray
    phi: float

    def __post_init__(self):
        w = np.array(self.w, dtype=complex).reshape(2, 2)
        la.require_unitary(w, 1e-8, "always-on operation")
        if abs(np.linalg.det(w) - 1) > 1e-8:
            raise NotUnitary("always-on operation must have unit determinant")
        phi = float(self.phi)
        if not (DEGENERACY <= phi <= TWO_PI - DEGENERACY):
            raise Degenerate(f"by-product angle {phi!r} is outside (0, 2pi)")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "phi", phi)

    @property
    def b0(self) -> np.ndarray:
        return self.w / np.sqrt(2)

    @property
    def b1(self) -> np.ndarray:
        return self.w @ la.phase_gate(self.phi) / np.sqrt(2)

    @property
    def tensor(self) -> WireTensor:
        return normal_form_tensor(self.w, self.phi)

    def byproduct(self, outcome: int) -> np.ndarray:
        """Correlation-space unitary applied by a computational-basis outcome."""
        return self.w if outcome == 0 else self.w @ la.phase_gate(self.phi)


def cluster() -> NormalFormWire:
    return NormalFormWire(la.H * 1j, np.pi)  # i*H has unit determinant


def t_resource() -> NormalFormWire:
    return NormalFormWire(la.H * 1j, np.pi / 2)


def cluster_tensor() -> WireTensor:
    """The textbook cluster tensor A[x] = H |x><x|."""
    return WireTensor(la.H @ np.diag([1, 0]), la.H @ np.diag([0, 1]))


@dataclass(frozen=True, eq=False)
class GaugeData:
    """Gauge relating the input tensor A to the normal form B.

    B[x] = sum_j g[x, j] * x_conj A[j] x_conj^dag, where g composes the
    physical moves (v, then the alpha phase on outcome 1, then the real
    mixing rotation by `mix`, then a sign fixing phi into (0, 2pi)).
    """

    v: np.ndarray
    x: np.ndarray
    alpha: float
    mix: float
    g: np.ndarray
    residual: float


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    verdict: Verdict
    gap: float
    unitality_residual: float
    normal_form: NormalFormWire | None = None
    gauge: GaugeData | None = None
    choi_rank: int | None = None
    assumptions: tuple = field(default=("gap means a unique eigenvalue of modulus one",))

    @property
    def is_wire(self) -> bool:
        return self.verdict is Verdict.WIRE

    def unwrap(self) -> NormalFormWire:
        """The normal form, or the exception matching the verdict."""
        if self.verdict is Verdict.WIRE:
            return self.normal_form
        raise {
            Verdict.NOT_GAPPED: NoGap,
            Verdict.NOT_UNITAL: NotUnital,
            Verdict.DEGENERATE: Degenerate,
        }[self.verdict](f"tensor is not a computational wire: {self.verdict.value}")


def apply_gauge(t: WireTensor, g, x) -> WireTensor:
    """A[x] -> sum_j g[x, j] X A[j] X^dag."""
    g = la.require_unitary(g, 1e-9, "physical gauge")
    x = la.require_unitary(x, 1e-9, "correlation gauge")
    conj = [x @ a @ la.dagger(x) for a in t.mats]
    return WireTensor(*(g[r, 0] * conj[0] + g[r, 1] * conj[1] for r in (0, 1)), tol=1e-8)


def random_gauge(t: WireTensor, seed=None) -> WireTensor:
    rng = np.random.default_rng(seed)
    return apply_gauge(t, la.haar_unitary(rng), la.haar_unitary(rng))


def _unitary_mixing(mats, rank_tol: float = 1e-9) -> np.ndarray:
    """Unit vector v such that v[0] A[0] + v[1] A[1] is proportional to a unitary.

    M^dag M is proportional to the identity iff its three Pauli components
    vanish.  Each component is a Hermitian form in v; writing v v^dag through
    its Bloch vector n turns the conditions into a + B n = 0 with |n| = 1.
    """
    a = np.zeros(3)
    b = np.zeros((3, 3))
    for m, sigma in enumerate(la.PAULIS):
        q = np.array([[np.trace(sigma @ la.dagger(mats[j]) @ mats[k]) / 2 for k in (0, 1)] for j in (0, 1)])
        # the form is v^dag q v with q indexed (j, k) -> conj(v_j) v_k
        a[m] = np.trace(q).real / 2
        b[m] = [np.trace(q @ s).real / 2 for s in la.PAULIS]
    u, s, vh = np.linalg.svd(b)
    keep = s > rank_tol * max(1.0, s[0])
    s_inv = np.where(keep, 1 / np.where(keep, s, 1), 0)
    n = -(vh.T * s_inv) @ (u.T @ a)
    slack = 1 - n @ n
    if keep.sum() < 3:
        null = vh[int(keep.sum())]
        n = n + np.sqrt(max(slack, 0.0)) * null
    n = n / np.linalg.norm(n)
    # the form is conj(v) in the local-operator sense: M = sum_j v_j A_j uses
    # q[j,k] -> conj(v_j) v_k, and v v^dag has Bloch vector n
    return la.bloch_to_spinor(n)


def _choi_rank(t: WireTensor, tol: float) -> int:
    w = np.linalg.eigvalsh(t.channel.choi())
    return int(np.sum(w > tol))


def classify(t: WireTensor, tol: float = DEFAULT_TOL, gap_threshold: float = GAP_THRESHOLD) -> ClassificationReport:
    ch = transfer_channel(t)
    gap = ch.gap
    unital = ch.unitality_residual()
    if gap <= gap_threshold:
        return ClassificationReport(Verdict.NOT_GAPPED, gap, unital)
    if unital > max(tol, 1e-12):
        return ClassificationReport(Verdict.NOT_UNITAL, gap, unital)
    rank = _choi_rank(t, 1e-8)
    if rank > 2:
        raise ChoiRankExceeded(f"Choi rank {rank} for a two-outcome tensor")

    # two Kraus operators each proportional to a unitary
    v0 = _unitary_mixing(t.mats)
    v = np.array([v0, [-np.conj(v0[1]), np.conj(v0[0])]])
    kraus = [v[i, 0] * t.a0 + v[i, 1] * t.a1 for i in (0, 1)]
    p = np.array([np.trace(la.dagger(k) @ k).real / 2 for k in kraus])
    u0 = kraus[0] / np.sqrt(p[0])
    u1 = kraus[1] / np.sqrt(p[1])
    # make u0 special unitary by rephasing the first physical row
    ph = np.sqrt(np.linalg.det(u0))
    u0 = u0 / ph
    v[0] = v[0] / ph

    # diagonalize u0^dag u1 = X^dag e^{i alpha} S(phi) X
    tri, zmat = sla.schur(la.dagger(u0) @ u1, output="complex")
    mu = np.diag(tri)
    phi = float(np.mod(np.angle(mu[1]) - np.angle(mu[0]), TWO_PI))
    alpha = float(np.angle(mu[0]) + phi / 2)
    x = la.dagger(zmat)
    w = x @ u0 @ la.dagger(x)

    # equalize the two probabilities by a real rotation on the outcome index
    c_half = np.cos(phi / 2)
    mix = 0.5 * np.arctan2(-(p[0] - p[1]), 2 * np.sqrt(p[0] * p[1]) * c_half)
    c, s = np.cos(mix), np.sin(mix)
    d_plus = c * np.sqrt(p[0]) + s * np.sqrt(p[1]) * np.exp(0.5j * phi)
    e_plus = -s * np.sqrt(p[0]) + c * np.sqrt(p[1]) * np.exp(0.5j * phi)
    eta = np.angle(d_plus)
    w = w @ la.phase_gate(2 * eta)
    phi_raw = 2 * (np.angle(e_plus) - eta)
    wraps = np.floor(phi_raw / TWO_PI)
    phi = float(phi_raw - TWO_PI * wraps)

    g = (
        np.diag([1, (-1) ** int(wraps)])
        @ np.array([[c, s], [-s, c]])
        @ np.diag([1, np.exp(-1j * alpha)])
        @ v
    )
    if phi < DEGENERACY or phi > TWO_PI - DEGENERACY:
        return ClassificationReport(Verdict.DEGENERATE, gap, unital, choi_rank=rank)

    nf = NormalFormWire(w, phi)
    rebuilt = apply_gauge(t, g, x)
    residual = float(np.linalg.norm(rebuilt.a0 - nf.b0) + np.linalg.norm(rebuilt.a1 - nf.b1))
    gauge = GaugeData(v=v, x=x, alpha=alpha, mix=float(mix), g=g, residual=residual)
    return ClassificationReport(Verdict.WIRE, gap, unital, nf, gauge, rank)


def _best_angles(coeffs: np.ndarray, freqs: np.ndarray, points: int) -> np.ndarray:
    """Angles maximizing |sum_k c_k exp(i f_k . angles)| over the torus.

    A coarse grid locates the basin and Newton steps on the squared modulus
    polish it to machine precision, which a bracketing search cannot do when
    the distance being minimized has a kink at zero.
    """
    m = freqs.shape[1]
    axes = np.meshgrid(*[np.linspace(0, 4 * np.pi, points, endpoint=False)] * m, indexing="ij")
    grid = np.stack([a.ravel() for a in axes], axis=1)
    vals = abs(np.exp(1j * grid @ freqs.T) @ coeffs)
    theta = grid[int(np.argmax(vals))]
    for _ in range(50):
        e = coeffs * np.exp(1j * freqs @ theta)
        ov = e.sum()
        grad_ov = 1j * (freqs.T @ e)
        hess_ov = -(freqs.T * e) @ freqs
        grad = 2 * np.real(np.conj(ov) * grad_ov)
        hess = 2 * np.real(np.outer(np.conj(grad_ov), grad_ov) + np.conj(ov) * hess_ov)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)) or np.linalg.norm(step) > 0.5:
            break
        theta = theta - step
        if np.linalg.norm(step) < 1e-15:
            break
    return theta


def _diag_conj(w: np.ndarray, beta: float) -> np.ndarray:
    return w * np.array([[1, np.exp(1j * beta)], [np.exp(-1j * beta), 1]])


def gauge_distance(w1: np.ndarray, w2: np.ndarray) -> float:
    """min over global phase and diagonal conjugation D of ||w2 - e^{i chi} D w1 D^dag||."""
    coeffs = (np.conj(w2) * w1).ravel()
    freqs = np.array([[0.0], [1.0], [-1.0], [0.0]])
    (beta,) = _best_angles(coeffs, freqs, 97)
    return la.phase_distance(w2, _diag_conj(w1, beta))


def _angle_close(a: float, b: float, tol: float) -> bool:
    d = np.mod(a - b + np.pi, TWO_PI) - np.pi
    return abs(d) <= tol


def equivalent(n1: NormalFormWire, n2: NormalFormWire, tol: float = 1e-7) -> bool:
    """True iff the normal forms differ by a residual gauge symmetry.

    The symmetries are a global phase on W, conjugation by diagonal unitaries,
    relabeling the correlation basis (W, phi) -> (X W X, -phi), and swapping
    the two outcome labels (W, phi) -> (W S(phi), -phi).  At phi = pi the
    family W S(beta) is also equivalent.
    """
    w1, s1, xx = n1.w, la.phase_gate(n1.phi), la.X
    candidates = []
    if _angle_close(n2.phi, n1.phi, tol):
        candidates += [w1, xx @ w1 @ s1 @ xx]
    if _angle_close(n2.phi, -n1.phi, tol):
        candidates += [xx @ w1 @ xx, w1 @ s1]
    if any(gauge_distance(c, n2.w) <= tol for c in candidates):
        return True
    if candidates and _angle_close(n1.phi, np.pi, tol):
        # at phi = pi every real outcome mixing keeps the probabilities equal,
        # which adds the continuous family W -> W S(beta)
        return _phase_family_distance(w1, n2.w) <= tol
    return False


def _phase_family_distance(w1: np.ndarray, w2: np.ndarray) -> float:
    """gauge_distance minimized over the extra right factor S(b)."""
    coeffs = (np.conj(w2) * w1).ravel()
    # entries pick up exp(-+i b/2) from S(b) and exp(+-i beta) from the conjugation
    freqs = np.array([[-0.5, 0.0], [0.5, 1.0], [-0.5, -1.0], [0.5, 0.0]])
    b, beta = _best_angles(coeffs, freqs, 41)
    return la.phase_distance(w2, _diag_conj(w1 @ la.phase_gate(b), beta))
