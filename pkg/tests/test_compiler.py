import numpy as np
import pytest

from qwires import compiler
from qwires import linalg as la
from qwires import oracle
from qwires.classifier import NormalFormWire, cluster, t_resource
from qwires.errors import Degenerate, InfiniteGroup, NotReached


def test_theta_basis_is_orthonormal():
    for theta in np.linspace(0, 3, 7):
        b = np.array(compiler.theta_basis(theta))
        assert np.allclose(b @ b.conj().T, np.eye(2))


def test_outcome_probabilities_sum_to_one(rng):
    nf = NormalFormWire(la.haar_su2(rng), 2.3)
    for theta in rng.uniform(0, 2 * np.pi, 10):
        b0, b1 = compiler.basis_action(nf, theta)
        assert b0.prob + b1.prob == pytest.approx(1, abs=1e-12)


def test_basis_action_matches_local_operators(rng):
    nf = NormalFormWire(la.haar_su2(rng), 1.4)
    for theta in rng.uniform(0, 2 * np.pi, 5):
        for vec, branch in zip(compiler.theta_basis(theta), compiler.basis_action(nf, theta)):
            local = np.conj(vec[0]) * nf.b0 + np.conj(vec[1]) * nf.b1
            assert la.phase_distance(local / np.sqrt(branch.prob), branch.unitary) < 1e-12


def test_cluster_locus_is_a_circle():
    assert all(p == pytest.approx(0.5) for _, p in compiler.realizable_locus(cluster(), 16))


def test_quarter_turn_locus_is_an_ellipse():
    samples = compiler.realizable_locus(t_resource(), 32)
    probs = [p for _, p in samples]
    assert max(probs) - min(probs) > 0.1
    assert all(compiler.ellipse_residual(np.pi / 2, d, p) < 1e-12 for d, p in samples)


def test_locus_needs_two_samples():
    with pytest.raises(ValueError):
        compiler.realizable_locus(cluster(), 1)


@pytest.mark.parametrize("delta", [-np.pi / 2, 0.3, 2.0, np.pi])
def test_solve_phase_basis(delta):
    nf = t_resource()
    theta, prob = compiler.solve_phase_basis(nf, delta)
    branch = compiler.basis_action(nf, theta)[0]
    assert la.phase_distance(branch.unitary, nf.w @ la.phase_gate(delta)) < 1e-12
    assert branch.prob == pytest.approx(prob)


def test_single_step_target():
    nf = cluster()
    target = nf.w @ la.phase_gate(0.7)
    plan = compiler.compile_su2(nf, target)
    assert len(plan) == 1
    assert plan.steps[0].delta == pytest.approx(0.7)


def test_hadamard_like_wire_uses_three_steps(rng):
    nf = cluster()
    for _ in range(5):
        target = la.haar_unitary(rng)
        plan = compiler.compile_su2(nf, target)
        assert len(plan) <= 3
        assert la.phase_distance(compiler.sequence_unitary(nf.w, plan.deltas), target) < 1e-9


def test_identity_target_has_a_plan(rng):
    nf = NormalFormWire(la.haar_su2(rng), 1.0)
    plan = compiler.compile_su2(nf, la.I2)
    assert la.phase_distance(compiler.sequence_unitary(nf.w, plan.deltas), la.I2) < 1e-9


def test_diagonal_wire_cannot_reach_bit_flip():
    nf = NormalFormWire(la.phase_gate(0.9), 1.1)
    with pytest.raises(NotReached) as err:
        compiler.compile_su2(nf, la.X)
    assert err.value.residual > 0.1


def test_tilt_angle_flags_exceptional_wires():
    assert compiler.tilt_angle(la.phase_gate(0.4)) == pytest.approx(0)
    assert compiler.tilt_angle(1j * la.X) == pytest.approx(np.pi)
    assert compiler.tilt_angle(1j * la.H) == pytest.approx(np.pi / 2)


def test_byproduct_group_orders():
    assert compiler.byproduct_group(cluster()).order == 8
    assert compiler.byproduct_group(t_resource()).order == 24
    assert not compiler.byproduct_group(NormalFormWire(la.phase_gate(np.sqrt(2)), 1.0), max_order=500).finite


def test_group_is_closed():
    g = compiler.byproduct_group(t_resource())
    for a in g.elements:
        for b in g.generators:
            assert g.index_of(b @ a) is not None


def test_compensation_on_cluster(rng):
    nf = cluster()
    wrong = nf.byproduct(1)
    steps, corrective = compiler.compensate(nf, wrong, rng, intended_delta=0.4)
    acc = compiler.walk_operator(steps) @ wrong
    assert abs(acc[0, 1]) + abs(acc[1, 0]) < 1e-9
    assert la.phase_distance(nf.w @ la.phase_gate(corrective) @ acc, nf.w @ la.phase_gate(0.4)) < 1e-9


def test_compensation_needs_a_finite_group(rng):
    nf = NormalFormWire(la.phase_gate(np.sqrt(2)) @ la.haar_su2(np.random.default_rng(0)), 1.0)
    with pytest.raises(InfiniteGroup):
        compiler.compensate(nf, nf.byproduct(1), rng, max_order=200)


def test_preparation_heralds_w_one(rng):
    nf = NormalFormWire(la.haar_su2(rng), 2.0)
    vec, heralded = compiler.prepare(nf)
    local = np.conj(vec[0]) * nf.b0 + np.conj(vec[1]) * nf.b1
    for _ in range(3):
        out = local @ la.haar_unitary(rng)[:, 0]
        assert la.fidelity(out, heralded) == pytest.approx(1, abs=1e-12)


def test_readout_povm_matches_oracle(rng):
    nf = NormalFormWire(la.haar_su2(rng), 2.0)
    e0, e1 = compiler.readout_povm(nf)
    assert np.allclose(e0 + e1, la.I2)
    _, success = compiler.readout_basis(nf)
    corr = la.haar_unitary(rng)[:, 0]
    s = oracle.prepare_from_mps(nf.tensor, 4, boundary=corr)
    assert oracle.branch_probability(s, 1, success) == pytest.approx(np.vdot(corr, e1 @ corr).real, abs=1e-12)


def test_readout_undefined_near_zero_angle():
    with pytest.raises(Degenerate):
        compiler.readout_povm(NormalFormWire(la.I2, 1e-6))
