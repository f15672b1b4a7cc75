import numpy as np
import pytest

from holonomy_forge import holonomy as Hh
from holonomy_forge import zoo
from holonomy_forge.errors import AmbiguousRank
from holonomy_forge.fixtures import build_fixture
from holonomy_forge.geometry import default_basepoint


def so_basis(d):
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            B = np.zeros((d, d))
            B[i, j], B[j, i] = 1.0, -1.0
            out.append(B)
    return np.array(out)


def test_numerical_rank_of_clean_span():
    rng = np.random.default_rng(0)
    gens = so_basis(4)[:3]
    mats = np.einsum("nk,kij->nij", rng.normal(size=(12, 3)), gens)
    info = Hh.numerical_rank(mats)
    assert info.rank == 3 and info.gap > 1e6


def test_numerical_rank_rejects_missing_gap():
    mats = np.array([np.diag([1.0, 0, 0]), np.diag([0, 0.3, 0]), np.diag([0, 0, 0.05])])
    with pytest.raises(AmbiguousRank):
        Hh.numerical_rank(mats, rel=0.1)
    assert Hh.numerical_rank(mats, rel=0.1, strict=False).rank == 2


def test_noise_floor_gives_zero():
    assert Hh.numerical_rank(1e-9 * np.ones((3, 2, 2))).rank == 0
    assert Hh.numerical_rank(np.zeros((0, 2, 2))).rank == 0


def test_skew_and_closure_of_so3():
    B = so_basis(3)
    g = np.diag([1.0, 2.0, 3.0])
    # skew with respect to g means g B is antisymmetric
    Bg = np.array([np.linalg.solve(g, b) for b in B])
    assert Hh.skew_residual(Bg, g) < 1e-12
    assert Hh.closure_residual(Hh.span_basis(B, 3)) < 1e-12
    # a two-dimensional slice of so(3) does not close
    assert Hh.closure_residual(Hh.span_basis(B[:2], 2)) > 0.1


def test_subspace_gap():
    B = so_basis(3)
    assert Hh.subspace_gap(Hh.span_basis(B, 3), Hh.span_basis(B[::-1], 3)) < 1e-6
    assert Hh.subspace_gap(Hh.span_basis(B[:1], 1), Hh.span_basis(B[1:2], 1)) > 0.5


def _estimate(basis, g):
    return Hh.HolonomyEstimate(np.zeros(len(g)), basis, len(basis), np.ones(len(basis)), "test", np.inf,
                               Hh.span_basis(basis, len(basis)), g)


def test_classify_blocks_on_constructed_algebras():
    g = np.eye(4)
    full = _estimate(so_basis(4), g)
    assert Hh.classify_blocks(full).verdict == "irreducible"
    split = np.zeros((2, 4, 4))
    split[0, 0, 1], split[0, 1, 0] = 1, -1
    split[1, 2, 3], split[1, 3, 2] = 1, -1
    assert Hh.classify_blocks(_estimate(split, g)).verdict == "decomposable"
    assert Hh.classify_blocks(_estimate(np.zeros((0, 4, 4)), g)).verdict == "flat/trivial"


def test_classify_blocks_null_line():
    # Lorentzian plane with a null vector P fixed by the generators: weakly irreducible
    eta = np.array([[0.0, 0, -1], [0, 1, 0], [-1, 0, 0]])
    # null rotation: fixes P = e0, skew for eta
    N = np.array([[0.0, 1, 0], [0, 0, 1], [0, 0, 0]])
    assert np.allclose(eta @ N + N.T @ eta, 0)
    bc = Hh.classify_blocks(_estimate(N[None], eta), P=np.array([1.0, 0, 0]))
    assert bc.verdict == "weakly-irreducible"
    assert bc.stabilized_vector is not None
    assert all(s.degenerate for s in bc.invariant_subspaces)


@pytest.mark.parametrize("model,expected", [
    (zoo.flat(3), 0),
    (zoo.flat_torus(3), 0),
    (zoo.round_sphere(), 1),
])
def test_small_models(model, expected):
    cmp = Hh.estimate_holonomy(model, default_basepoint(model), n_remote=6)
    assert cmp.loop.dimension == expected
    assert cmp.ranks_agree


@pytest.fixture(scope="module")
def eh_holonomy():
    fx = build_fixture("eguchi-hanson")
    return Hh.estimate_holonomy(fx.model, fx.basepoint)


def test_eh_holonomy_is_su2(eh_holonomy):
    cmp = eh_holonomy
    assert cmp.loop.dimension == cmp.curvature.dimension == 3
    assert cmp.subspace_gap < 1e-4
    assert min(cmp.loop.gap, cmp.curvature.gap) >= 10
    assert Hh.skew_residual(cmp.loop.basis, cmp.loop.metric) < 1e-6
    assert Hh.closure_residual(cmp.curvature.basis) < 1e-4


def test_warped_torus_holonomy_is_so4():
    fx = build_fixture("warped", fiber="torus")
    cmp = Hh.estimate_holonomy(fx.model, fx.basepoint)
    assert cmp.loop.dimension == cmp.curvature.dimension == 6
    assert cmp.subspace_gap < 1e-4


@pytest.mark.slow
def test_cylinder_eh_is_weakly_irreducible():
    from holonomy_forge.cylinder import P_field, adapted_basis

    fx = build_fixture("cylinder-eh")
    cmp = Hh.estimate_holonomy(fx.model, fx.basepoint)
    est = cmp.loop
    assert est.dimension == 7 and cmp.ranks_agree
    P = P_field(fx.cyl)(fx.basepoint)
    assert np.max(np.abs(est.generators @ P)) < 1e-6
    bc = Hh.classify_blocks(est, P=P, adapted=adapted_basis(fx.cyl, fx.basepoint), groups=fx.expected["groups"])
    assert bc.verdict == "weakly-irreducible"
    assert bc.pattern_residual < 1e-6
    probe = Hh.m_nonvanishing_probe(fx.cyl, [0, 1, 2, 3], basepoint=fx.basepoint)
    assert probe["value"] >= 1e-3
