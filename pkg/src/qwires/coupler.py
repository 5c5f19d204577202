"""Coupling two wires into an entangling gate between their correlation spaces.

Site layout of the Ising-type gadget (numbered from 1):

    top wire     1 - 2 - 3
                     |
    ancilla          4        prepared in |+>
                     |
    bottom wire  5 - 6 - 7

CZ acts on (2, 4), then C CZ C^dag on (4, 6) with C the coupling matrix
acting on site 6.  Site 6 is measured in the computational basis (z6),
site 4 in the X basis (x4), site 2 in the basis (psi_0, psi_1).  Sites 1 and
5 are measured in |0> to feed the gadget, sites 3 and 7 hold the output
correlation states.  Two-wire operators are ordered bottom (x) top.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import linalg as la
from . import oracle
from .classifier import NormalFormWire, cluster, equivalent
from .errors import ConstraintViolated, Degenerate, NotClusterWire

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
COMPUTATIONAL = (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex))
X_BASIS = (PLUS, MINUS)


def coupling_matrix(phi: float) -> np.ndarray:
    """diag(1, e^{i phi/2}) H: columns (1, e^{i phi/2}) and (1, -e^{i phi/2}), over sqrt2."""
    return np.diag([1, np.exp(0.5j * phi)]) @ la.H


@dataclass(frozen=True)
class CouplingAngles:
    gamma: float
    epsilon: float
    delta: float


def angle_residuals(phi: float, a: CouplingAngles) -> tuple[float, float]:
    r1 = abs(np.exp(0.5j * a.epsilon) * np.sin(a.gamma) - (1 - np.exp(1j * phi)) / 2)
    r2 = abs(abs(np.cos(a.delta))
             - abs(np.sin(a.delta) * np.sin(a.gamma) + np.cos(a.delta) * np.cos(a.gamma) * np.exp(0.5j * phi)))
    return float(r1), float(r2)


def solve_coupling_angles(phi: float, branch: int = 0) -> CouplingAngles:
    """Solve both constraints; delta is taken in (0, pi/2).

    branch 0 picks gamma in (0, pi/2], branch 1 its supplement pi - gamma.
    In both cases epsilon = phi - pi.
    """
    s = np.sin(phi / 2)
    if not (0 < phi < 2 * np.pi) or s < 1e-9:
        raise Degenerate("coupling angles need phi in (0, 2pi)")
    gamma = float(np.arcsin(min(s, 1.0)))
    if branch:
        gamma = float(np.pi - gamma)
    z = (1 - np.exp(1j * phi)) / 2
    epsilon = float(2 * np.angle(z / np.sin(gamma)))
    # tan(delta) is the positive root of t^2 + 2 k t - 1 = 0
    k = np.cos(gamma) / np.sin(gamma) * np.cos(phi / 2)
    tau = 1.0 / (k + np.sqrt(k * k + 1)) if k >= 0 else -k + np.sqrt(k * k + 1)
    return CouplingAngles(gamma, epsilon, float(np.arctan(tau)))


def measurement_basis_site2(angles: CouplingAngles) -> tuple[np.ndarray, np.ndarray]:
    e = np.exp(-1j * angles.epsilon)
    s, c = np.sin(angles.delta), np.cos(angles.delta)
    return np.array([e * s, c]), np.array([-e * c, s])


@dataclass(frozen=True, eq=False)
class EntanglingGate:
    v: np.ndarray
    scale: float
    schmidt: np.ndarray

    @property
    def schmidt_rank(self) -> int:
        return int(np.sum(self.schmidt > 1e-6))

    @property
    def unitarity_residual(self) -> float:
        return la.unitarity_residual(self.v)


def formula_gate(nf: NormalFormWire, angles: CouplingAngles) -> np.ndarray:
    """The closed-form two-wire operator (bottom (x) top)."""
    w, a0, a1 = nf.w, nf.b0, nf.b1
    g, d = angles.gamma, angles.delta
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    return (np.kron(w @ p0, np.cos(d) * a1)
            + np.kron(w @ p1, np.sin(d) * np.sin(g) * a0 + np.cos(d) * np.cos(g) * a1))


def entangling_gate(nf: NormalFormWire, angles: CouplingAngles, tol: float = 1e-9) -> EntanglingGate:
    res = angle_residuals(nf.phi, angles)
    if max(res) > tol:
        raise ConstraintViolated(f"coupling angles violate the constraints by {max(res):.3g}")
    v = formula_gate(nf, angles)
    scale = float(np.sqrt(np.trace(la.dagger(v) @ v).real / 4))
    return EntanglingGate(v, scale, la.operator_schmidt(v))


@dataclass(frozen=True, eq=False)
class CouplingGadget:
    top: NormalFormWire
    bottom: NormalFormWire
    angles: CouplingAngles
    coupling: np.ndarray

    @classmethod
    def build(cls, nf: NormalFormWire, bottom: NormalFormWire | None = None, branch: int = 0) -> "CouplingGadget":
        return cls(nf, bottom or nf, solve_coupling_angles(nf.phi, branch), coupling_matrix(nf.phi))

    @property
    def site2_basis(self):
        return measurement_basis_site2(self.angles)

    def wire_state(self, top_boundary, bottom_boundary) -> oracle.StateVector:
        """Seven-site state before coupling, with the given right-boundary vectors."""
        top = oracle.prepare_from_mps(self.top.tensor, 3, boundary=top_boundary)
        bot = oracle.prepare_from_mps(self.bottom.tensor, 3, boundary=bottom_boundary)
        return oracle.StateVector(np.multiply.outer(np.multiply.outer(top.tensor, PLUS), bot.tensor))

    def couple(self, s: oracle.StateVector) -> oracle.StateVector:
        s = oracle.apply_gate(s, la.CZ, (2, 4))
        c6 = np.kron(la.I2, self.coupling)
        return oracle.apply_gate(s, c6 @ la.CZ @ la.dagger(c6), (4, 6))


def decouple(g: CouplingGadget, rng: np.random.Generator, top_boundary=(1, 0), bottom_boundary=(1, 0)):
    """Measure the ancilla in the computational basis after coupling.

    Returns (outcome, (byproduct on site 2, byproduct on site 6), fidelity)
    where fidelity compares the post-measurement state, corrected by the
    by-products, with the uncoupled state.
    """
    before = g.wire_state(top_boundary, bottom_boundary)
    record, after = oracle.measure_site(g.couple(before), 4, COMPUTATIONAL, rng=rng)
    outcome = record.outcome
    if outcome == 0:
        byproducts = (la.I2, la.I2)
    else:
        byproducts = (la.Z, g.coupling @ la.Z @ la.dagger(g.coupling))
    fixed = oracle.apply_gate(after, byproducts[0], 2)
    fixed = oracle.apply_gate(fixed, byproducts[1], 6)
    # strip the ancilla, which is left in |outcome>
    reduced = np.take(fixed.tensor, outcome, axis=3)
    ref = np.take(before.tensor, 0, axis=3) * np.sqrt(2)
    return outcome, byproducts, la.fidelity(reduced, ref)


def branch_operator(g: CouplingGadget, x4: int, z6: int, psi) -> np.ndarray:
    """Two-wire operator (bottom (x) top) induced by one measurement branch.

    Obtained from the seven-site state vector: for every pair of boundary
    basis vectors the sites 1 and 5 are projected on |0>, the gadget is run,
    sites 6, 4, 2 are projected on their outcomes and the surviving
    (site 7, site 3) amplitudes form one column.  The fixed input step
    B[0] (x) B[0] is divided out at the end.
    """
    cols = np.zeros((4, 4), dtype=complex)
    for j, i in itertools.product(range(2), range(2)):
        s = g.wire_state(np.eye(2)[i], np.eye(2)[j])
        s = oracle.apply_operator(s, np.outer(COMPUTATIONAL[0], COMPUTATIONAL[0]), 1)
        s = oracle.apply_operator(s, np.outer(COMPUTATIONAL[0], COMPUTATIONAL[0]), 5)
        s = g.couple(s)
        t = s.tensor
        # remaining axes after each projection shift left; project from the highest site down
        t = np.tensordot(COMPUTATIONAL[z6].conj(), t, axes=([0], [5]))
        t = np.tensordot(X_BASIS[x4].conj(), t, axes=([0], [3]))
        t = np.tensordot(np.conj(psi), t, axes=([0], [1]))
        t = t[0, :, 0, :]  # sites 1 and 5 were projected on |0>; axes now (site 3, site 7)
        cols[:, 2 * j + i] = t.T.reshape(4)  # bottom index most significant
    feed = np.kron(g.bottom.b0, g.top.b0)
    return cols @ np.linalg.inv(feed)


def closed_form_branch(g: CouplingGadget, x4: int, z6: int, psi) -> np.ndarray:
    """Same operator from the gadget algebra, used to cross-check the simulation.

    The ancilla in the X basis contributes (1/2) sum_a (-1)^{x4 a}; branch a
    attaches Z^a to site 2 and (C Z C^dag)^a to site 6.
    """
    czc = g.coupling @ la.Z @ la.dagger(g.coupling)
    total = np.zeros((4, 4), dtype=complex)
    for a in (0, 1):
        top = sum(np.conj(psi[x]) * (-1) ** (a * x) * g.top.tensor[x] for x in (0, 1))
        n = la.I2 if a == 0 else czc
        bottom = sum(n[z6, y] * g.bottom.tensor[y] for y in (0, 1))
        total = total + (-1) ** (x4 * a) * np.kron(bottom, top) / 2
    return total


@dataclass(frozen=True, eq=False)
class BranchRecord:
    x4: int
    z6: int
    outcome2: int
    basis: tuple
    operator: np.ndarray
    weight: float  # branch probability for maximally mixed inputs
    unitarity_residual: float
    schmidt: np.ndarray
    distance_to_formula: float


def branch_table(g: CouplingGadget, basis=None) -> list[BranchRecord]:
    """All eight (x4, z6, site-2) branches, by default with the closed-form site-2 basis.

    Since the input step B[0] (x) B[0] is proportional to a unitary, a
    branch's probability for maximally mixed inputs is proportional to the
    squared Frobenius norm of its operator.
    """
    formula = formula_gate(g.top, g.angles)
    basis = g.site2_basis if basis is None else basis
    keys = list(itertools.product((0, 1), repeat=3))
    ops = [branch_operator(g, x4, z6, basis[k]) for x4, z6, k in keys]
    total = sum(np.linalg.norm(op) ** 2 for op in ops)
    return [
        BranchRecord(x4, z6, k, tuple(tuple(v) for v in basis), op, float(np.linalg.norm(op) ** 2 / total),
                     la.unitarity_residual(op), la.operator_schmidt(op), la.normalized_phase_distance(op, formula))
        for (x4, z6, k), op in zip(keys, ops)
    ]


def resolve_site2_basis(g: CouplingGadget, x4: int, z6: int, seed: int = 0, min_schmidt: float = 1e-3):
    """Site-2 basis (e^{-i e} sin d, cos d) whose first outcome is unitary and entangling.

    Searched numerically over (e, d); returns (basis, (e, d), residual).
    """
    rng = np.random.default_rng(seed)

    def basis_of(p):
        e, d = p
        return (np.array([np.exp(-1j * e) * np.sin(d), np.cos(d)]),
                np.array([-np.exp(-1j * e) * np.cos(d), np.sin(d)]))

    def cost(p):
        op = closed_form_branch(g, x4, z6, basis_of(p)[0])
        if np.linalg.norm(op) < 1e-12:
            return 10.0
        penalty = max(0.0, min_schmidt - la.operator_schmidt(op)[1]) * 10
        return la.unitarity_residual(op) + penalty

    best = None
    for start in itertools.chain([(np.pi / 2, g.angles.delta), (-np.pi / 2, g.angles.delta)],
                                 rng.uniform([-np.pi, 0], [np.pi, np.pi], (16, 2))):
        r = minimize(cost, start, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
        if best is None or r.fun < best.fun:
            best = r
        if best.fun < 1e-10:
            break
    e, d = best.x
    return basis_of(best.x), (float(np.angle(np.exp(1j * e))), float(d)), float(best.fun)


def simulate_gadget(nf: NormalFormWire, rng: np.random.Generator, top_boundary=None, bottom_boundary=None):
    """One sampled run of the entangling gadget on a seven-site state vector.

    Returns (records, operator, formula_distance) where records lists the
    three oracle measurements (sites 6, 4, 2 in that order), operator is the
    branch operator extracted for the sampled outcomes, and formula_distance
    is its phase- and scale-insensitive distance from the closed-form gate.
    """
    g = CouplingGadget.build(nf)
    tb = la.haar_unitary(rng)[:, 0] if top_boundary is None else top_boundary
    bb = la.haar_unitary(rng)[:, 0] if bottom_boundary is None else bottom_boundary
    s = g.couple(g.wire_state(tb, bb))
    # feed each wire through its site with outcome 0 so the input step is known
    s = oracle.measure_site(s, 1, COMPUTATIONAL, branch=0)[1]
    s = oracle.measure_site(s, 5, COMPUTATIONAL, branch=0)[1]
    records = []
    rec6, s = oracle.measure_site(s, 6, COMPUTATIONAL, rng=rng)
    rec4, s = oracle.measure_site(s, 4, X_BASIS, rng=rng)
    rec2, s = oracle.measure_site(s, 2, g.site2_basis, rng=rng)
    records += [rec6, rec4, rec2]
    op = branch_operator(g, rec4.outcome, rec6.outcome, g.site2_basis[rec2.outcome])
    return records, op, la.normalized_phase_distance(op, formula_gate(nf, g.angles))


# exchange coupling ------------------------------------------------------------

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def exchange_coupling_unitary() -> np.ndarray:
    """exp(i pi/2 |Psi-><Psi-|) = 1 + (i - 1)|Psi-><Psi-|."""
    return np.eye(4, dtype=complex) + (1j - 1) * np.outer(SINGLET, SINGLET.conj())


@dataclass(frozen=True)
class ExchangeLayout:
    """Two cluster wires of `length` sites joined by one exchange link at `link`.

    Sites before the link are fed with outcome |0>; the last site of each
    wire is the readout.
    """

    length: int = 3
    link: int = 2
    couple: bool = True


@dataclass(frozen=True, eq=False)
class ExchangeVerdict:
    branches: list = field(repr=False)
    entangling: bool
    best_branch: tuple
    best_schmidt: float
    sampled_branch: tuple


def _exchange_operator(nf, layout, bases, outcomes):
    n = layout.length
    mats = []
    for j, i in itertools.product(range(2), range(2)):
        top = oracle.prepare_from_mps(nf.tensor, n, boundary=np.eye(2)[i]).tensor
        bot = oracle.prepare_from_mps(nf.tensor, n, boundary=np.eye(2)[j]).tensor
        s = oracle.StateVector(np.multiply.outer(top, bot))
        if layout.couple:
            s = oracle.apply_gate(s, exchange_coupling_unitary(), (layout.link, n + layout.link))
        t = s.tensor
        # project the bottom link, then the top link, then all other non-readout sites on |0>
        t = np.tensordot(np.conj(bases[1][outcomes[1]]), t, axes=([0], [n + layout.link - 1]))
        t = np.tensordot(np.conj(bases[0][outcomes[0]]), t, axes=([0], [layout.link - 1]))
        # remaining axes: top sites except link, then bottom sites except link
        top_rest = [q for q in range(1, n + 1) if q != layout.link]
        idx_top = [0] * (len(top_rest) - 1) + [slice(None)]
        idx = tuple(idx_top + idx_top)
        mats.append(t[idx].T.reshape(4))
    cols = np.array(mats).T
    feed = np.kron(nf.b0, nf.b0)
    return cols @ np.linalg.inv(np.linalg.matrix_power(feed, layout.link - 1))


def exchange_couple_cluster(layout: ExchangeLayout, rng: np.random.Generator,
                            nf: NormalFormWire | None = None) -> ExchangeVerdict:
    """Enumerate link-site measurement branches on the minimal two-wire patch.

    The link sites are measured in the computational or X basis; every other
    site except the readout ends is projected on |0>.  A branch is entangling
    when its second operator-Schmidt coefficient exceeds 1e-6.
    """
    nf = nf or cluster()
    if not (np.isclose(nf.phi, np.pi, atol=1e-9) and equivalent(nf, cluster())):
        raise NotClusterWire("exchange coupling is defined for cluster wires only")
    if layout.link != layout.length - 1 or layout.length < 2:
        raise ValueError("the link must sit on the site just before the readout site")
    branches = []
    for b_top, b_bot in itertools.product((COMPUTATIONAL, X_BASIS), repeat=2):
        for o_top, o_bot in itertools.product((0, 1), repeat=2):
            op = _exchange_operator(nf, layout, (b_top, b_bot), (o_top, o_bot))
            label = ("Z" if b_top is COMPUTATIONAL else "X", o_top, "Z" if b_bot is COMPUTATIONAL else "X", o_bot)
            norm = np.linalg.norm(op)
            sch = la.operator_schmidt(op) if norm > 1e-12 else np.zeros(4)
            branches.append((label, op, sch, la.unitarity_residual(op) if norm > 1e-12 else np.inf))
    best = max(branches, key=lambda b: b[2][1])
    sampled = branches[int(rng.integers(len(branches)))][0]
    return ExchangeVerdict(branches, bool(best[2][1] > 1e-6), best[0], float(best[2][1]), sampled)
