import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holonomy_forge import spin as S
from holonomy_forge import warped as W
from holonomy_forge import zoo
from holonomy_forge.cylinder import P_field
from holonomy_forge.errors import DimTooLarge, NonParallelFiber, NotCodazzi, VanishingSpinor, WrongBase
from holonomy_forge.fixtures import build_fixture
from holonomy_forge.geometry import ensure_frame
from holonomy_forge.holonomy import remote_points


@pytest.mark.parametrize("n", range(1, 8))
def test_clifford_relations(n):
    rep = S.clifford_rep(n, 1)
    assert rep.relation_residual() < 1e-12
    assert rep.kappa_relation_residual() < 1e-12
    # timelike generator Hermitian, spacelike anti-Hermitian
    assert np.allclose(rep.gamma0, rep.gamma0.conj().T)
    for g in rep.gammas[1:]:
        assert np.allclose(g, -g.conj().T)
    for K in rep.kappas:
        assert np.allclose(K, -K.conj().T)


def test_clifford_dimension_cap():
    with pytest.raises(DimTooLarge):
        S.clifford_rep(S.MAX_CLIFFORD_DIM, 1)


def test_hat_is_gamma0():
    rep = S.clifford_rep(3, 1)
    u = np.arange(rep.module_dim) + 1j
    assert np.allclose(S.hat(rep, u), rep.gamma0 @ u)
    assert np.isclose(rep.ip1(u, u), rep.ip0(rep.gamma0 @ u, u))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=16, max_size=16))
def test_q_equals_dist_squared_times_norm(vals):
    rep = S.clifford_rep(6, 1)
    d = rep.module_dim
    psi = np.array(vals[:d]) + 1j * np.array(vals[d:2 * d])
    if np.linalg.norm(psi) < 1e-3:
        return
    cur = S.dirac_current(rep, psi)
    assert cur.q_value >= -1e-12
    assert cur.q_value == pytest.approx(cur.dist_value ** 2 * cur.norm_sq, abs=1e-10)


def test_vanishing_spinor_rejected():
    rep = S.clifford_rep(3, 1)
    with pytest.raises(VanishingSpinor):
        S.dirac_current(rep, np.zeros(rep.module_dim))


def test_spin_curvature_on_sphere_and_eh():
    sphere = zoo.round_sphere()
    p = sphere.sample_points(np.random.default_rng(0), 3, margin=0.2)
    res = S.spin_curvature_residual(sphere, S.clifford_rep(2, 1), p)
    assert res["same_sign"] < 1e-6 < res["opposite_sign"]
    eh = zoo.eguchi_hanson()
    res = S.spin_curvature_residual(eh, S.clifford_rep(4, 1), zoo.eh_sample_points(np.random.default_rng(1), 2))
    assert res["same_sign"] < 1e-6


def test_eh_has_two_parallel_spinors():
    eh = ensure_frame(zoo.eguchi_hanson())
    rep = S.clifford_rep(4, 1)
    base = eh.metadata["basepoint"]
    ker = S.parallel_spinors(eh, rep, base)
    assert ker.shape[1] == 2
    f = S.codazzi_spinor_from(eh, rep, base, ker[:, 0], A=lambda x: np.zeros(np.shape(x)[:-1] + (4, 4)))
    pts = remote_points(eh, base, 4, 0.5, 0)
    assert S.codazzi_spinor_residual(f, lambda x: np.zeros(np.shape(x)[:-1] + (4, 4)), pts)["residual"] < 1e-6


@pytest.fixture(scope="module")
def torus_killing():
    fx = build_fixture("cylinder-torus")
    rep = S.clifford_rep(4, 1)
    ks = S.construct_warped_killing_spinor(fx.wp, rep)
    pts = remote_points(fx.wp.model, ks.base, 6, 0.5, 0)
    return fx, rep, ks, pts


def test_killing_spinor_on_torus_warped(torus_killing):
    fx, rep, ks, pts = torus_killing
    res = S.codazzi_spinor_residual(ks.field, None, pts)
    assert res["residual"] < 1e-6
    # the Codazzi tensor is recovered from the spinor
    assert res["recovery_residual"] < 1e-6
    psi = ks.field(pts)
    s = pts[:, 0]
    assert np.allclose(np.real(rep.ip0(psi, psi)), np.exp(-2 * s), rtol=1e-5)
    Wc = S.riemannian_current(rep, psi)
    assert np.allclose(Wc[:, 0], -np.exp(-2 * s), atol=1e-5)
    assert np.max(np.abs(Wc[:, 1:])) < 1e-5
    assert max(abs(S.dirac_current(rep, v).q_value) for v in psi) < 1e-8
    assert S.ricci_constraint_residual(fx.wp.model, None, pts[:2]) < 1e-4


def test_transfer_and_lift(torus_killing):
    fx, rep, ks, pts = torus_killing
    H = fx.codazzi
    tr = S.phi_transfer(ks.field, H)
    assert S.codazzi_spinor_residual(tr, H.inverse(), pts[:3])["residual"] < 1e-6
    lift = S.lift_to_cylinder(fx.cyl, ks.field, points=pts[:2])
    q = np.concatenate([np.array([[-0.2], [0.1], [0.25], [0.0], [0.3], [-0.1]]), pts], axis=1)
    assert np.max(np.abs(S.spinor_covariant_derivative(lift, q))) < 1e-5
    V = S.cylinder_current(lift, q)
    g = fx.cyl.model.metric(q)
    assert np.max(np.abs(np.einsum("ki,kij,kj->k", V, g, V))) < 1e-6
    assert np.max(np.abs(V - P_field(fx.cyl)(q))) < 1e-6


def test_lift_rejects_non_codazzi_spinor(torus_killing):
    fx, rep, ks, pts = torus_killing
    fake = S.SpinorField(ks.field.model, rep, lambda p: np.ones(np.shape(p)[:-1] + (rep.module_dim,), complex))
    with pytest.raises(NotCodazzi):
        S.lift_to_cylinder(fx.cyl, fake, points=pts[:2])


def test_killing_construction_preconditions():
    F = zoo.flat_torus(3)
    with pytest.raises(WrongBase):
        S.construct_warped_killing_spinor(W.warped_product(F, W.Warping.exponential(-1.0)))
    with pytest.raises(NonParallelFiber):
        S.construct_warped_killing_spinor(W.warped_product(zoo.round_sphere()))


def test_ricci_identity_for_killing_spinor(torus_killing):
    fx, rep, ks, pts = torus_killing
    assert S.ricci_spinor_identity_residual(fx.wp.model, rep, pts[:1], ks.field(pts[:1])) < 1e-6
