import numpy as np
import pytest

from holonomy_forge import zoo
from holonomy_forge.errors import StepUnderflow
from holonomy_forge.geometry import CurvePath, TangentVector
from holonomy_forge.transport import (
    levi_civita_connection,
    parallel_transport,
    tangent_transport_matrix,
    transport_isometry_defect,
    transport_matrix,
)


def latitude_arc(theta0, phi0, phi1):
    return CurvePath(
        lambda r: np.stack([np.full(np.shape(r), theta0), phi0 + (phi1 - phi0) * np.asarray(r)], -1),
        lambda r: np.stack([np.zeros(np.shape(r)), np.full(np.shape(r), phi1 - phi0)], -1),
    )


@pytest.mark.parametrize("theta0", [0.6, 1.2, 2.1])
def test_latitude_transport_is_rotation_by_cos_theta(theta0):
    S = zoo.round_sphere()
    dphi = 4.0
    res = tangent_transport_matrix(S, latitude_arc(theta0, -2.0, 2.0))
    # in the orthonormal frame (d_th, d_ph / sin) the transport rotates by dphi * cos(theta0)
    D = np.diag([1.0, np.sin(theta0)])
    rot = D @ res.matrix @ np.linalg.inv(D)
    w = dphi * np.cos(theta0)
    expected = np.array([[np.cos(w), np.sin(w)], [-np.sin(w), np.cos(w)]])
    assert np.max(np.abs(rot - expected)) < 1e-9
    assert res.error < 1e-9


def test_flat_plaquette_holonomy_is_identity():
    M = zoo.flat(3)
    res = tangent_transport_matrix(M, CurvePath.plaquette(np.zeros(3), 0, 2, 0.3))
    assert np.max(np.abs(res.matrix - np.eye(3))) < 1e-14


def test_transport_preserves_lengths():
    M = zoo.eguchi_hanson()
    a = np.array([2.0, 0.3, 0.4, -0.5])
    curve = CurvePath.polyline([a, a + [0.3, 0.2, 0.0, 0.1], a + [0.1, -0.3, 0.2, 0.0]])
    res = tangent_transport_matrix(M, curve)
    v0 = np.array([0.3, -1.0, 0.5, 2.0])
    assert transport_isometry_defect(M, curve, v0, res) < 1e-9


def test_reversed_curve_inverts_transport():
    S = zoo.round_sphere()
    c = CurvePath.polyline([[1.0, 0.0], [1.5, 0.7], [0.9, 1.2]])
    fwd = tangent_transport_matrix(S, c).matrix
    back = tangent_transport_matrix(S, c.reversed()).matrix
    assert np.max(np.abs(back @ fwd - np.eye(2))) < 1e-10


def test_small_loop_holonomy_tracks_curvature():
    S = zoo.round_sphere()
    h = 0.05
    base = np.array([1.0, 0.0])
    tau = tangent_transport_matrix(S, CurvePath.plaquette(base, 0, 1, h)).matrix
    # enclosed area ~ h^2 sin(theta); rotation angle = area for K = 1
    angle = np.arctan2(tau[1, 0] * np.sin(1.0), tau[0, 0])
    assert abs(abs(angle) - h * h * np.sin(1.0 + h / 2)) < 5e-4 * h * h


def test_parallel_transport_checks_basepoint():
    S = zoo.round_sphere()
    c = latitude_arc(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        parallel_transport(S, c, TangentVector(np.array([0.5, 0.0]), np.array([1.0, 0.0])))
    v = parallel_transport(S, c, TangentVector(np.array([1.0, 0.0]), np.array([1.0, 0.0])))
    assert np.allclose(v.basepoint, [1.0, 1.0])


def test_tolerance_driven_refinement_and_underflow():
    S = zoo.round_sphere()
    conn = levi_civita_connection(S)
    c = latitude_arc(1.0, -2.0, 2.0)
    res = transport_matrix(conn, c, steps_per_unit=4, tol=1e-10)
    assert res.error <= 1e-10
    with pytest.raises(StepUnderflow):
        transport_matrix(conn, c, steps_per_unit=2, tol=1e-30, max_steps=64)
