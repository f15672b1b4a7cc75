import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holonomy_forge import geometry as G
from holonomy_forge import zoo
from holonomy_forge.errors import OutOfChart, SingularMetric


def polar_plane():
    def metric(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = x[..., 0] ** 2
        return out

    return G.ManifoldModel(dim=2, metric=metric, lower=np.array([0.5, -3.0]), upper=np.array([3.0, 3.0]),
                           signature=(2, 0), name="polar")


def test_euclidean_christoffels_vanish():
    M = zoo.flat(3)
    p = M.sample_points(np.random.default_rng(0), 10)
    assert np.max(np.abs(G.christoffel(M, p))) == 0.0


def test_polar_christoffels_match_closed_form():
    M = polar_plane()
    p = M.sample_points(np.random.default_rng(1), 20, margin=0.1)
    Gam = G.christoffel(M, p)
    r = p[:, 0]
    assert np.allclose(Gam[:, 0, 1, 1], -r, atol=1e-8)
    assert np.allclose(Gam[:, 1, 0, 1], 1.0 / r, atol=1e-8)
    assert np.allclose(Gam[:, 1, 1, 0], 1.0 / r, atol=1e-8)
    assert abs(Gam[:, 0, 0, 0]).max() < 1e-8


def test_halving_fd_step_reduces_metric_derivative_error():
    p = np.array([[1.3, 0.2], [2.0, -1.0]])

    def metric(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.exp(np.sin(3 * x[..., 0]))
        return out

    exact = 3 * np.cos(3 * p[:, 0]) * np.exp(np.sin(3 * p[:, 0]))
    e1 = np.max(np.abs(G.fd_gradient(metric, p, 2e-2, 2)[:, 0, 1, 1] - exact))
    e2 = np.max(np.abs(G.fd_gradient(metric, p, 1e-2, 2)[:, 0, 1, 1] - exact))
    assert e1 / e2 >= 3.0


def test_sphere_riemann_closed_form():
    S = zoo.round_sphere()
    p = S.sample_points(np.random.default_rng(2), 15, margin=0.1)
    R = G.riemann(S, p)
    th = p[:, 0]
    # R(d_th, d_ph) d_ph = K g_phph d_th with K = 1
    assert np.allclose(R.riemann[:, 0, 1, 0, 1], np.sin(th) ** 2, atol=1e-6)
    assert np.allclose(R.ricci, R.metric, atol=1e-6)
    assert np.allclose(R.scalar, 2.0, atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2.6), st.floats(-2.5, 2.5))
def test_sphere_curvature_symmetries(th, ph):
    S = zoo.round_sphere()
    R = G.riemann(S, np.array([th, ph]))
    assert max(R.symmetry_residuals().values()) < 1e-6


def test_eh_ricci_flat_and_symmetries():
    M = zoo.eguchi_hanson()
    p = zoo.eh_sample_points(np.random.default_rng(3), 6)
    R = G.riemann(M, p)
    assert np.max(np.abs(R.ricci)) < 1e-6
    assert max(R.symmetry_residuals().values()) < 1e-6
    assert np.max(np.abs(R.riemann)) > 1e-2


def test_eh_frame_connection_tables_agree():
    M = zoo.eguchi_hanson()
    p = zoo.eh_sample_points(np.random.default_rng(4), 50)
    r = np.linalg.norm(p, axis=-1)
    table = zoo.eh_connection_table(r)
    assert np.max(np.abs(G.frame_connection_table(M, p) - table)) < 1e-8
    assert np.max(np.abs(G.chart_frame_connection(M, p) - table)) < 1e-5
    assert np.max(np.abs(G.numerical_commutators(M, p) - G.frame_commutators(M, p))) < 1e-8
    assert G.frame_orthonormality_residual(M, p) < 1e-10
    assert G.metric_compatibility_residual(M, p) < 1e-6


def test_koszul_of_sphere_frame():
    S = zoo.round_sphere()
    p = S.sample_points(np.random.default_rng(5), 8, margin=0.1)
    tab = G.frame_connection_table(S, p)
    # nabla_{e_ph} e_ph = -cot(th) e_th
    assert np.allclose(tab[:, 1, 1, 0], -np.cos(p[:, 0]) / np.sin(p[:, 0]), atol=1e-10)
    assert np.max(np.abs(G.chart_frame_connection(S, p) - tab)) < 1e-6


def test_lie_bracket_of_coordinate_fields():
    M = zoo.flat(2)
    X = lambda x: np.stack([np.ones(x.shape[:-1]), np.zeros(x.shape[:-1])], -1)  # noqa: E731
    Y = lambda x: np.stack([np.zeros(x.shape[:-1]), x[..., 0]], -1)  # noqa: E731
    p = np.array([[0.1, 0.2], [0.3, -0.4]])
    assert np.allclose(G.lie_bracket(M, X, Y, p), [[0, 1], [0, 1]], atol=1e-8)


def test_covariant_derivative_of_radial_field():
    M = polar_plane()
    d_theta = lambda x: np.stack([np.zeros(x.shape[:-1]), np.ones(x.shape[:-1])], -1)  # noqa: E731
    p = np.array([[1.5, 0.3]])
    # nabla_{d_th} d_th = -r d_r
    assert np.allclose(G.covariant_derivative(M, d_theta, p, np.array([[0.0, 1.0]])), [[-1.5, 0.0]], atol=1e-8)


def test_out_of_chart_and_singular_metric():
    M = zoo.flat(3)
    with pytest.raises(OutOfChart):
        G.christoffel(M, np.array([5.0, 0.0, 0.0]))

    def metric(x):
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        return out

    bad = G.ManifoldModel(dim=2, metric=metric, lower=-np.ones(2), upper=np.ones(2), signature=(2, 0))
    with pytest.raises(SingularMetric):
        G.christoffel(bad, np.zeros(2))


def test_default_basepoint_avoids_eh_origin():
    M = zoo.eguchi_hanson()
    b = G.default_basepoint(M)
    assert M.contains(b)
    assert np.linalg.norm(b) > 1.2


def test_geodesic_on_sphere_is_great_circle():
    S = zoo.round_sphere()
    c = G.geodesic(S, np.array([np.pi / 2, -1.0]), np.array([0.0, 1.0]))
    end = c.end()
    assert abs(end[0] - np.pi / 2) < 1e-8
    assert abs(end[1] - 0.0) < 1e-6
