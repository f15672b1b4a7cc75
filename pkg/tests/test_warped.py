import numpy as np
import pytest

from holonomy_forge import zoo
from holonomy_forge import warped as W
from holonomy_forge.errors import BoundViolated, NonCodazziT


def torus_warped():
    F = zoo.flat_torus(3)
    T = W.constant_field(F, np.diag([2.0, 2.5, 3.0]))
    return F, T, W.warped_product(F)


def pts(model, n=20, seed=0, margin=0.1):
    return model.sample_points(np.random.default_rng(seed), n, margin)


def test_hessian_is_codazzi_and_non_hessian_is_not():
    M = zoo.flat(3)
    h, hess = zoo.cubic_hessian_fixture(3)
    T = zoo.flat_hessian_codazzi(h, model=M, hessian=hess)
    p = pts(M)
    assert W.codazzi_max_residual(M, T, p) < 1e-8
    # the same tensor from nested finite differences
    Tfd = zoo.flat_hessian_codazzi(h, model=M)
    assert np.max(np.abs(Tfd(p) - T(p))) < 1e-6

    def bad(x):
        out = np.zeros(np.shape(x)[:-1] + (3, 3))
        out[..., 0, 0] = x[..., 1]
        out[..., 1, 1] = out[..., 2, 2] = 1.0
        return out

    assert W.codazzi_max_residual(M, W.EndomorphismField(bad, M), p) > 0.5


def test_codazzi_residual_rejects_asymmetric_fields():
    from holonomy_forge.errors import AsymmetricField

    M = zoo.flat(2)
    A = W.constant_field(M, np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(AsymmetricField):
        W.codazzi_max_residual(M, A, pts(M, 3))


def test_cone_codazzi_eigenvalues():
    C = zoo.cone()
    T = zoo.cone_codazzi(C)
    p = pts(C)
    assert W.codazzi_max_residual(C, T, p) < 1e-6
    ev = np.sort(W.eigenvalues(T, p), axis=1)
    r = p[:, 0]
    assert np.allclose(ev, np.stack([0 * r, 1 / r, 1 / r], 1), atol=1e-10)


def test_E_family_closed_form_for_unit_b():
    F, T, wp = torus_warped()
    E = W.build_E_family(T, lambda s: np.ones_like(np.asarray(s, dtype=float)), wp)
    p = pts(wp.model)
    s = p[:, 0]
    expected = np.exp(2 * s)[:, None, None] * T(p[:, 1:]) + (1 - np.exp(2 * s))[:, None, None] * np.eye(3)
    assert np.max(np.abs(E(p) - expected)) < 1e-12


@pytest.mark.parametrize("fiber", ["torus", "eh"])
def test_bde_conditions_and_assembled_codazzi(fiber):
    if fiber == "torus":
        F, T, wp = torus_warped()
    else:
        F = zoo.eguchi_hanson()
        T = W.identity_field(F, 2.0)
        wp = W.warped_product(F)
    split = W.simple_split(T, lambda s: 1.0 + 0.3 * np.sin(np.asarray(s)), wp)
    p = pts(wp.model, 15, seed=1, margin=0.15)
    res = W.check_bde_conditions(wp, split, p)
    for key in ("codazzi5", "codazzi6", "codazzi7", "codazzi8", "assembled"):
        assert res[key] < 1e-6, key


def test_non_codazzi_T_is_rejected():
    F = zoo.flat(3)
    T = W.EndomorphismField(lambda x: np.einsum("...,ij->...ij", x[..., 1], np.diag([1.0, 0, 0])), F)
    wp = W.warped_product(F)
    with pytest.raises(NonCodazziT):
        W.build_E_family(T, lambda s: np.ones_like(s), wp, check_points=pts(F, 5))


def test_bounded_codazzi_is_nonnegative_and_needs_strict_bound():
    F = zoo.flat_torus(3)
    wp = W.warped_product(F)
    bc = W.build_bounded_codazzi(W.identity_field(F, 5.0), 4.0, 0.0, wp)
    p = pts(wp.model, 50)
    assert np.min(W.eigenvalues(bc.H, p)) >= -1e-10
    assert W.codazzi_max_residual(wp.model, bc.H, p[:10]) < 1e-6
    with pytest.raises(BoundViolated):
        W.build_bounded_codazzi(W.identity_field(F, 4.0), 4.0, 0.0, wp)


def test_tilde_E_is_fiber_codazzi():
    F, T, wp = torus_warped()
    split = W.simple_split(T, lambda s: 1.0 + 0.3 * np.sin(np.asarray(s)), wp)
    assert W.tilde_E_residual(wp, split, pts(wp.model, 10, margin=0.15)) < 1e-6


def test_conjugated_connection_identities():
    from holonomy_forge.geometry import ensure_frame

    M = ensure_frame(zoo.flat(3))
    h, hess = zoo.cubic_hessian_fixture(3)
    A = zoo.flat_hessian_codazzi(h, model=M, hessian=hess).shifted(8.0)
    res = W.conjugated_connection_check(M, A, pts(M, 5, margin=0.2))
    assert res["connection"] < 1e-6
    assert res["curvature"] < 1e-4
    assert res["inverse_codazzi"] < 1e-6
    assert res["ricci_commutation"] < 1e-4


def test_pullback_metric_of_constant_map():
    M = zoo.flat(2)
    A = W.constant_field(M, np.array([[2.0, 1.0], [1.0, 3.0]]))
    P = W.pullback_model(M, A)
    assert np.allclose(P.metric(np.zeros(2)), A(np.zeros(2)).T @ A(np.zeros(2)))


def test_spectral_scan_of_constant_field():
    F = zoo.flat_torus(3)
    b = W.spectral_scan(W.constant_field(F, np.diag([-1.0, 2.0, 5.0])), lattice=3, n_random=5)
    assert (b.global_inf, b.global_sup, b.inf_positive, b.sup_negative) == pytest.approx((-1, 5, 2, -1))
    assert b.mu_plus == pytest.approx(5.0) and b.mu_minus == pytest.approx(-1.0)


def test_gauss_integral_is_exact_for_polynomials():
    s = np.array([-0.7, 0.0, 0.4])
    assert np.allclose(W.gauss_integral(lambda x: 3 * x ** 2, s), s ** 3, atol=1e-14)


def test_warping_exponential_detection():
    F = zoo.flat(2)
    assert W.warped_product(F).is_exponential(-2.0)
    assert not W.warped_product(F, W.Warping.exponential(-1.0)).is_exponential(-2.0)
