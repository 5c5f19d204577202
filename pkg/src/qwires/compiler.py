"""Single-qubit logic on a classified wire.

Measuring one site in the basis
    |0_theta> = sin(theta)|0> + cos(theta)|1>,  |1_theta> = cos(theta)|0> - sin(theta)|1>
applies W diag(conj(l), l)/sqrt2 to the correlation space for outcome 0, with
l = sin(theta) + cos(theta) e^{i phi/2}.  That is the unitary W S(2 arg l),
obtained with probability |l|^2 / 2.  Outcome 1 has the same structure with
m = cos(theta) - sin(theta) e^{i phi/2}.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import least_squares

from . import linalg as la
from .classifier import DEGENERACY, NormalFormWire
from .errors import Degenerate, InfiniteGroup, NotReached

TWO_PI = 2 * np.pi


def theta_basis(theta: float) -> tuple[np.ndarray, np.ndarray]:
    s, c = np.sin(theta), np.cos(theta)
    return np.array([s, c], dtype=complex), np.array([c, -s], dtype=complex)


@dataclass(frozen=True, eq=False)
class BranchOutcome:
    outcome: int
    unitary: np.ndarray  # special unitary W S(delta)
    delta: float
    prob: float


def _lambda_plus(phi: float, theta: float) -> complex:
    return np.sin(theta) + np.cos(theta) * np.exp(0.5j * phi)


def _mu_plus(phi: float, theta: float) -> complex:
    return np.cos(theta) - np.sin(theta) * np.exp(0.5j * phi)


def basis_action(nf: NormalFormWire, theta: float) -> tuple[BranchOutcome, BranchOutcome]:
    out = []
    for outcome, amp in enumerate((_lambda_plus(nf.phi, theta), _mu_plus(nf.phi, theta))):
        delta = 2 * np.angle(amp)
        out.append(BranchOutcome(outcome, nf.w @ la.phase_gate(delta), float(delta), float(abs(amp) ** 2 / 2)))
    return tuple(out)


def realizable_locus(nf: NormalFormWire, k: int) -> list[tuple[float, float]]:
    """Samples (arg l, |l|^2/2) of the outcome-0 branch over theta in [0, 2pi).

    The point l = sqrt(2p) e^{i arg l} traces the image of the unit circle
    under [[1, cos(phi/2)], [0, sin(phi/2)]], an ellipse (a circle at phi = pi).
    The realized gate is W S(2 arg l).
    """
    if k < 2:
        raise ValueError("need at least two samples")
    thetas = np.linspace(0, TWO_PI, k, endpoint=False)
    lam = _lambda_plus(nf.phi, thetas)
    return [(float(d), float(p)) for d, p in zip(np.angle(lam), abs(lam) ** 2 / 2)]


def ellipse_residual(phi: float, delta: float, prob: float) -> float:
    """Distance from the unit circle of the pre-image of sqrt(2p) e^{i delta}."""
    lam = np.sqrt(2 * prob) * np.exp(1j * delta)
    m = np.array([[1, np.cos(phi / 2)], [0, np.sin(phi / 2)]])
    pre = np.linalg.solve(m, [lam.real, lam.imag])
    return float(abs(np.hypot(*pre) - 1))


def solve_phase_basis(nf: NormalFormWire, delta: float) -> tuple[float, float]:
    """theta whose outcome 0 applies W S(delta), with that outcome's probability."""
    if np.sin(nf.phi / 2) < DEGENERACY:
        raise Degenerate("phase gates are not tunable at phi = 0")
    theta = float(np.arctan2(np.sin((nf.phi - delta) / 2), np.sin(delta / 2)))
    return theta, float(abs(_lambda_plus(nf.phi, theta)) ** 2 / 2)


@dataclass(frozen=True)
class PlanStep:
    theta: float
    delta: float
    prob: float


@dataclass(frozen=True, eq=False)
class CompilationPlan:
    """Phase-gate sequence with W S(d_n) ... W S(d_1) equal to target up to phase."""

    steps: tuple[PlanStep, ...]
    target: np.ndarray
    residual: float

    @property
    def deltas(self) -> list[float]:
        return [s.delta for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


def sequence_unitary(w: np.ndarray, deltas) -> np.ndarray:
    out = la.I2
    for d in deltas:
        out = w @ la.phase_gate(d) @ out
    return out


def tilt_angle(w: np.ndarray) -> float:
    """Angle between the z axis and its image under w; 0 or pi marks an exceptional wire."""
    zz = np.trace(la.Z @ la.dagger(w) @ la.Z @ w).real / 2
    return float(np.arccos(np.clip(zz, -1.0, 1.0)))


def _is_exceptional(w: np.ndarray, tol: float) -> bool:
    return min(abs(w[0, 1]), abs(w[0, 0])) <= tol


def _zyz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles with u = e^{i chi} Rz(a) Ry(b) Rz(c)."""
    u = la.to_special_unitary(u)
    b = 2 * np.arctan2(abs(u[1, 0]), abs(u[0, 0]))
    s = 2 * np.angle(u[1, 1]) if abs(u[1, 1]) > 1e-14 else 0.0
    d = 2 * np.angle(u[1, 0]) if abs(u[1, 0]) > 1e-14 else 0.0
    return (s + d) / 2, b, (s - d) / 2


def _hadamard_like(nf: NormalFormWire, target: np.ndarray):
    """Three angles when W = D H D^dag up to phase, else None."""
    w = nf.w
    if not (np.isclose(abs(w[0, 0]), 1 / np.sqrt(2), atol=1e-12) and np.isclose(abs(w[0, 1]), 1 / np.sqrt(2), atol=1e-12)):
        return None
    # W = e^{i chi} D H D^dag with D = diag(1, e^{i beta})
    ratio = w[1, 1] / w[0, 0]
    if abs(ratio + 1) > 1e-9:
        return None
    beta = np.angle(w[1, 0] / w[0, 0])
    d = np.diag([1, np.exp(1j * beta)])
    rotated = la.H @ la.dagger(d) @ target @ d
    # Rz(a) Rx(b) Rz(c) with Rx(b) = Rz(-pi/2) Ry(b) Rz(pi/2)
    a, b, c = _zyz(rotated)
    return [c - np.pi / 2, b, a + np.pi / 2]


def _residuals(params, w, target):
    n = len(params) - 1
    p = sequence_unitary(w, params[:n])
    diff = p - np.exp(1j * params[n]) * target
    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])


def _solve_length(w, target, n, rng, tol, starts):
    best = (np.inf, None)
    method = "lm" if n <= 7 else "trf"
    for _ in range(starts):
        x0 = rng.uniform(-np.pi, np.pi, n + 1)
        res = least_squares(_residuals, x0, args=(w, target), method=method, xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=2000 * (n + 1))
        deltas = res.x[:n]
        r = la.phase_distance(sequence_unitary(w, deltas), target)
        if r < best[0]:
            best = (r, deltas)
        if r <= tol:
            break
    return best


def compile_su2(nf: NormalFormWire, target, tol: float = 1e-9, max_len: int = 12,
                seed: int = 0, starts: int = 8) -> CompilationPlan:
    target = la.require_unitary(target, 1e-8, "target")
    target = la.to_special_unitary(target)
    w = nf.w

    def finish(deltas):
        deltas = [float(np.mod(d, 2 * TWO_PI)) for d in deltas]
        steps = []
        for d in deltas:
            theta, prob = solve_phase_basis(nf, d)
            steps.append(PlanStep(theta, d, prob))
        residual = la.phase_distance(sequence_unitary(w, deltas), target)
        return CompilationPlan(tuple(steps), target, residual)

    # one step: target = W S(delta)
    m = la.dagger(w) @ target
    one = finish([np.angle(m[1, 1]) - np.angle(m[0, 0])])
    if one.residual <= tol:
        return one
    if max_len < 2:
        raise NotReached("no single phase gate reaches the target", one.residual)

    if max_len >= 3:
        fast = _hadamard_like(nf, target)
        if fast is not None:
            plan = finish(fast)
            if plan.residual <= tol:
                return plan

    rng = np.random.default_rng(seed)
    longest = 2 if _is_exceptional(w, 1e-9) else max_len
    best = (one.residual, None)
    for n in range(2, longest + 1):
        r, deltas = _solve_length(w, target, n, rng, tol, starts)
        if r < best[0]:
            best = (r, deltas)
        if r <= tol:
            return finish(deltas)
    raise NotReached(f"residual {best[0]:.3g} above {tol:g} with up to {longest} steps", best[0])


@dataclass(frozen=True, eq=False)
class ByproductGroup:
    elements: list
    generators: tuple
    order: int | None  # None marks a group that exceeded max_order

    @property
    def finite(self) -> bool:
        return self.order is not None

    def index_of(self, g: np.ndarray, tol: float = 1e-8) -> int | None:
        stack = np.array(self.elements)
        ov = abs(np.einsum("kij,ij->k", stack.conj(), g))
        k = int(np.argmax(ov))
        return k if ov[k] >= 2 - tol else None


def byproduct_group(nf: NormalFormWire, tol: float = 1e-9, max_order: int = 10000) -> ByproductGroup:
    gens = (nf.byproduct(0), nf.byproduct(1))
    elements = [la.I2]
    stack = np.zeros((max_order + 1, 2, 2), dtype=complex)
    stack[0] = la.I2
    count = 1
    queue = deque([la.I2])
    while queue:
        g = queue.popleft()
        for h in gens:
            cand = h @ g
            ov = abs(np.einsum("kij,ij->k", stack[:count].conj(), cand))
            if ov.max() >= 2 - tol:
                continue
            if count >= max_order:
                return ByproductGroup(elements, gens, None)
            stack[count] = cand
            count += 1
            elements.append(cand)
            queue.append(cand)
    return ByproductGroup(elements, gens, count)


@lru_cache(maxsize=64)
def _cached_group(wbytes: bytes, phi: float, max_order: int) -> ByproductGroup:
    w = np.frombuffer(wbytes, dtype=complex).reshape(2, 2)
    return byproduct_group(NormalFormWire(w, phi), max_order=max_order)


@dataclass(frozen=True)
class TrajectoryStep:
    site: int
    theta: float
    outcome: int
    prob: float
    operator: np.ndarray = field(compare=False)


def _is_diagonal(g: np.ndarray, tol: float) -> bool:
    return abs(g[0, 1]) + abs(g[1, 0]) <= tol


def compensate(nf: NormalFormWire, wrong, rng: np.random.Generator, intended_delta: float = 0.0,
               tol: float = 1e-9, max_steps: int = 100000, max_order: int = 10000):
    """Random walk in the computational basis until the wrong by-product turns into a phase gate.

    Returns (trajectory, corrective_delta).  With G the accumulated walk
    operator, G @ wrong = e^{i chi} S(d) at the end, and a subsequent step
    W S(intended_delta - d) completes the intended W S(intended_delta).
    """
    wrong = np.asarray(wrong, dtype=complex)
    group = _cached_group(np.ascontiguousarray(nf.w).tobytes(), nf.phi, max_order)
    if not group.finite:
        raise InfiniteGroup(f"by-product group exceeds {max_order} elements")
    steps = []
    acc = wrong
    site = 0
    while not _is_diagonal(acc, tol):
        if site >= max_steps:
            raise NotReached(f"walk did not reach a phase gate within {max_steps} steps")
        site += 1
        outcome = int(rng.integers(2))
        op = nf.byproduct(outcome)
        acc = op @ acc
        steps.append(TrajectoryStep(site, np.pi / 2, outcome, 0.5, op))
    d = float(np.angle(acc[1, 1]) - np.angle(acc[0, 0]))
    return steps, float(intended_delta - d)


def walk_operator(steps) -> np.ndarray:
    out = la.I2
    for s in steps:
        out = s.operator @ out
    return out


def preparation_vector(phi: float) -> np.ndarray:
    return np.array([1, -np.exp(-0.5j * phi)], dtype=complex) / np.sqrt(2)


def prepare(nf: NormalFormWire) -> tuple[np.ndarray, np.ndarray]:
    """(measurement vector, heralded correlation state W|1>).

    The local operator of the vector is W|1><1| (1 - e^{i phi})/2, so whatever
    the correlation state was, a success leaves it in W|1>.
    """
    if np.sin(nf.phi / 2) < DEGENERACY:
        raise Degenerate("preparation needs phi away from 0")
    return preparation_vector(nf.phi), nf.w[:, 1].copy()


def readout_basis(nf: NormalFormWire) -> tuple[np.ndarray, np.ndarray]:
    """(outcome-0 vector, outcome-1 vector); outcome 1 is the preparation vector."""
    c = preparation_vector(nf.phi)
    return np.array([1, np.exp(-0.5j * nf.phi)], dtype=complex) / np.sqrt(2), c


def readout_povm(nf: NormalFormWire) -> tuple[np.ndarray, np.ndarray]:
    """Correlation-space effects (E0, E1) of a single readout site, E1 = sin^2(phi/2)|1><1|."""
    if np.sin(nf.phi / 2) < DEGENERACY:
        raise Degenerate("readout needs phi away from 0")
    e1 = np.diag([0, np.sin(nf.phi / 2) ** 2]).astype(complex)
    return la.I2 - e1, e1
