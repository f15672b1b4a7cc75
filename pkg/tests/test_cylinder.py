import numpy as np
import pytest

from holonomy_forge import cylinder as C
from holonomy_forge import warped as W
from holonomy_forge import zoo
from holonomy_forge.errors import EmptyInterval, NonCodazziH, WrongBase
from holonomy_forge.fixtures import build_fixture
from holonomy_forge.geometry import CurvePath
from holonomy_forge.suites import sample_points


@pytest.fixture(scope="module")
def cyl_torus():
    return build_fixture("cylinder-torus")


@pytest.fixture(scope="module")
def cyl_eh():
    return build_fixture("cylinder-eh")


def qpts(fx, n=12, seed=0):
    return sample_points(fx.model, np.random.default_rng(seed), n)


@pytest.mark.parametrize("name", ["cyl_torus", "cyl_eh"])
def test_first_order_identities(name, request):
    fx = request.getfixturevalue(name)
    q = qpts(fx)
    assert C.weingarten_residuals(fx.cyl, q)["P1"] < 1e-6
    cov = C.covariant_residuals(fx.cyl, q)
    for key in ("P2", "P3", "P4", "P5"):
        assert cov[key] < 1e-6, key
    assert C.hinv_dot_residual(fx.cyl, q) < 1e-6


def test_weingarten_closed_form(cyl_eh):
    q = qpts(cyl_eh, 4)
    t, p = q[:, 0], q[:, 1:]
    Bi = cyl_eh.cyl.B_inv(t, p)
    assert np.allclose(C.weingarten(cyl_eh.cyl, t, p), 2 * Bi, atol=1e-12)


def test_lifted_field_identities(cyl_eh):
    q = qpts(cyl_eh, 6, seed=1)
    rng = np.random.default_rng(2)
    lf = C.lifted_field_residuals(cyl_eh.cyl, q, rng.normal(size=(6, 4)), rng.normal(size=(6, 4)))
    for key in ("P6", "P7", "P8", "P9", "P10"):
        assert lf[key] < 1e-6, key


def test_curvature_identities(cyl_eh):
    rng = np.random.default_rng(3)
    q = qpts(cyl_eh, 5, seed=3)
    res = C.curvature_residuals(cyl_eh.cyl, q, rng)
    for key in ("item1", "curv1", "curv1_tangent", "curv2", "curv3"):
        assert res[key] < 1e-4, key
    wres = C.warped_curvature_residuals(cyl_eh.wp, q[:, 1:], rng)
    for key in ("P12", "P13", "P14", "P15"):
        assert wres[key] < 1e-4, key


def test_flatness_equivalence(cyl_torus, cyl_eh):
    assert C.max_curvature_norm(cyl_torus.cyl, qpts(cyl_torus, 20)) <= 1e-6
    assert C.max_curvature_norm(cyl_eh.cyl, qpts(cyl_eh, 20)) >= 1e-2


def test_P_is_parallel_null_and_pairs_with_Q(cyl_eh):
    q = qpts(cyl_eh, 8)
    pq = C.pq_fields(cyl_eh.cyl, q)
    assert np.max(np.abs(pq.gPP)) < 1e-10 and np.max(np.abs(pq.gQQ)) < 1e-10
    assert np.allclose(pq.gPQ, -1.0, atol=1e-10)
    assert pq.parallel_residual < 1e-6
    # future-directed: negative pairing with d_t
    assert np.all(pq.P[:, 0] > 0)


def test_t_line_transport(cyl_eh):
    q = cyl_eh.basepoint
    Z = np.array([0.0, 0.3, -1.0, 0.5, 0.2])
    assert C.t_line_transport_residual(cyl_eh.cyl, q, Z, 0.3) < 1e-8


def test_transport_of_AZ_matches_closed_form(cyl_eh):
    x0 = cyl_eh.basepoint[2:]
    step = np.array([0.2, -0.1, 0.15, 0.1])

    def par(r):
        r = np.asarray(r, dtype=float)
        return np.concatenate([(0.15 * np.sin(np.pi * r))[..., None], (0.4 * r * (1 - r))[..., None],
                               x0 + r[..., None] * step], -1)

    def vel(r):
        r = np.asarray(r, dtype=float)
        return np.concatenate([(0.15 * np.pi * np.cos(np.pi * r))[..., None], (0.4 * (1 - 2 * r))[..., None],
                               np.broadcast_to(step, r.shape + (4,))], -1)

    res = C.transport_AZ(cyl_eh.cyl, CurvePath(par, vel), np.array([1.0, 0.5, -0.3, 0.2]))
    assert res["residual"] < 1e-6


def test_causality_closed_form_for_identity():
    fx = build_fixture("cylinder-identity")
    t = np.array([-0.3, 0.0, 0.2, 0.35])
    rep = C.causality_bounds(fx.cyl, t, sample_points(fx.cyl.base, np.random.default_rng(0), 20))
    assert np.allclose(rep.gh_bound, 1 / (1 - 2 * t), atol=1e-10, rtol=0)
    assert np.allclose(rep.bbc_bound, 4 / (1 - 2 * t), atol=1e-10, rtol=0)


def test_causality_finite_on_eh(cyl_eh):
    rep = C.causality_bounds(cyl_eh.cyl, [-0.1, 0.1], sample_points(cyl_eh.cyl.base, np.random.default_rng(0), 20))
    assert np.all(np.isfinite(rep.gh_bound)) and np.all(np.isfinite(rep.bbc_bound))


def test_interval_conventions():
    b = W.spectral_bounds_from(np.array([[1.0, 3.0]]))
    assert C.interval_from_bounds(b, "C(M;A)", margin=0.0) == (-np.inf, pytest.approx(1 / 6))
    assert C.interval_from_bounds(b, "C[F;H]", margin=0.0) == (-np.inf, pytest.approx(0.5))
    with pytest.raises(EmptyInterval):
        C._window((0.5, 1.0), (-0.4, 0.4))


def test_builder_rejects_non_codazzi_and_wrong_base():
    M = zoo.flat(3)

    def bad(x):
        out = np.zeros(np.shape(x)[:-1] + (3, 3))
        out[..., 0, 0] = 1.0 + x[..., 1]
        out[..., 1, 1] = out[..., 2, 2] = 1.0
        return out

    with pytest.raises(NonCodazziH):
        C.build_cylinder(M, W.EndomorphismField(bad, M))
    fx = build_fixture("cylinder-identity")
    with pytest.raises(WrongBase):
        C.P_field(fx.cyl)
