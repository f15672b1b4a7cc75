import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holonomy_forge import obstruction as O
from holonomy_forge.errors import GridTooCoarse


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=5, max_size=5), st.floats(0.5, 2.0))
def test_chebyshev_differentiates_polynomials_exactly(coef, lo):
    hi = lo + 2.5
    r, D = O.chebyshev(12, lo, hi)
    p = np.polynomial.Polynomial(coef)
    assert np.allclose(D @ p(r), p.deriv()(r), atol=1e-8)


def test_quadrature_integrates_polynomials():
    lo, hi = 1.3, 3.8
    r, _ = O.chebyshev(16, lo, hi)
    w = O.quadrature_weights(16, lo, hi)
    p = np.polynomial.Polynomial([1.0, -2.0, 0.5, 0.25])
    P = p.integ()
    assert np.sum(w * p(r)) == pytest.approx(P(hi) - P(lo), rel=1e-12)


def test_chebyshev_needs_two_nodes():
    with pytest.raises(GridTooCoarse):
        O.chebyshev(1, 0.0, 1.0)


def test_identity_is_annihilated_pointwise():
    r = np.linspace(1.2, 4.0, 9)
    Mval, _ = O.codazzi_operator(r)
    ident = np.array([1.0 if a == b else 0.0 for a, b in O.SYM_INDEX])
    assert np.max(np.abs(Mval @ ident)) < 1e-12


def test_null_space_requires_a_gap():
    L = np.diag([1.0, 0.5, 0.2, 0.1])
    B, _, ratio = O.null_space(L, rel=0.9, gap=10)
    assert B.shape[1] == 0 and ratio < 10
    L = np.diag([1.0, 0.5, 1e-12])
    B, _, _ = O.null_space(L)
    assert B.shape[1] == 1 and abs(B[2, 0]) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def report():
    return O.eh_codazzi_obstruction()


def test_only_constant_multiples_of_identity(report):
    assert report.verdict == "constants only"
    n = sorted(report.nullity)
    assert report.nullity[n[0]] == report.nullity[n[1]] == 1
    assert report.identity_residual < 1e-8
    assert report.gap >= 10


def test_no_nonzero_homothetic_field(report):
    assert report.homothetic_min_singular >= 1e-3


def test_pair_displays_match_assembled_operator(report):
    assert max(report.pair_residuals.values()) < 1e-10
    other = O.pair_displays(2.7, rng=np.random.default_rng(5))
    assert max(other.values()) < 1e-10


def test_grid_must_avoid_bolt():
    with pytest.raises(ValueError):
        O.eh_codazzi_obstruction(grid=(1.0, 3.0))


def test_averaging_is_idempotent_and_commutes():
    res = O.averaging_checks(np.random.default_rng(0), 1)
    assert res["idempotence"] < 1e-10
    assert res["commutation"] < 1e-6
