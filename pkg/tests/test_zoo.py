import numpy as np
import pytest

from holonomy_forge import geometry as G
from holonomy_forge import zoo
from holonomy_forge.errors import FixtureError
from holonomy_forge.fixtures import build_fixture, list_fixtures


def test_cone_over_unit_sphere_is_flat():
    C = zoo.cone()
    p = C.sample_points(np.random.default_rng(0), 8, margin=0.1)
    assert np.max(np.abs(G.riemann(C, p).riemann)) < 1e-6


def test_eh_functions():
    r = np.linspace(1.3, 3.8, 7)
    f = zoo.eh_f(r)
    assert np.allclose(f, np.sqrt(1 - r ** -4))
    fp = (zoo.eh_f(r + 1e-6) - zoo.eh_f(r - 1e-6)) / 2e-6
    assert np.allclose(fp + f / r, zoo.eh_gamma(r), atol=1e-8)
    assert np.allclose(2 / (r * f) - f / r, zoo.eh_gamma(r), atol=1e-12)


def test_eh_gamma_shift_corrupts_only_the_analytic_table():
    good = zoo.eguchi_hanson()
    bad = zoo.eguchi_hanson(gamma_shift=1e-3)
    p = zoo.eh_sample_points(np.random.default_rng(1), 10)
    diff = np.max(np.abs(G.frame_commutators(bad, p) - G.numerical_commutators(bad, p)))
    assert diff == pytest.approx(1e-3, rel=1e-3)
    assert np.allclose(good.metric(p), bad.metric(p))


def test_binary_icosahedral_group_closes():
    Q = zoo.binary_icosahedral()
    assert len(Q) == 120
    assert np.allclose(np.linalg.norm(Q, axis=1), 1.0)
    iso = zoo.eh_isometries()
    prods = np.einsum("aij,bjk->abik", iso[:10], iso).reshape(-1, 16)
    flat = iso.reshape(-1, 16)
    d = np.min(np.linalg.norm(prods[:, None, :] - flat[None, :, :], axis=-1), axis=1)
    assert d.max() < 1e-9


def test_eh_isometries_preserve_metric_and_frame():
    M = zoo.eguchi_hanson()
    iso = zoo.eh_isometries()[::17]
    p = zoo.eh_sample_points(np.random.default_rng(2), 3)
    E = M.frame.vectors(p)
    for Qm in iso:
        q = p @ Qm.T
        # pushforward of the frame equals the frame at the image point
        assert np.allclose(np.einsum("ij,njk->nik", Qm, E), M.frame.vectors(q), atol=1e-12)


def test_sphere_average_is_a_projection():
    M = zoo.eguchi_hanson()
    x = zoo.eh_sample_points(np.random.default_rng(3), 4)
    fld = lambda y: np.sin(y[..., 0]) + y[..., 1] * y[..., 2]  # noqa: E731
    once = zoo.sphere_average(fld, x)
    twice = zoo.sphere_average(lambda y: zoo.sphere_average(fld, y), x)
    assert np.allclose(once, twice, atol=1e-12)
    # radial functions are fixed
    rad = lambda y: np.linalg.norm(y, axis=-1) ** 2  # noqa: E731
    assert np.allclose(zoo.sphere_average(rad, x), rad(x))
    assert M.dim == 4


def test_product_model_blocks():
    M, T = zoo.product_model([zoo.flat_torus(3), zoo.eguchi_hanson()], [1.0, 2.0])
    p = G.default_basepoint(M)
    g = M.metric(p)
    assert np.allclose(g[:3, 3:], 0) and np.allclose(g[:3, :3], np.eye(3))
    assert np.allclose(np.diag(T(p)), [1, 1, 1, 2, 2, 2, 2])


def test_fixture_registry():
    names = set(list_fixtures())
    assert {"flat", "flat-torus", "hessian", "cone", "eguchi-hanson", "product", "warped"} <= names
    assert any(n.startswith("cylinder-") for n in names)
    for n in names:
        fx = build_fixture(n)
        assert fx.model.contains(fx.basepoint)
    with pytest.raises(FixtureError):
        build_fixture("no-such")
    with pytest.raises(FixtureError):
        build_fixture("flat", bogus=1)
    with pytest.raises(FixtureError):
        build_fixture("warped", fiber="klein-bottle")
