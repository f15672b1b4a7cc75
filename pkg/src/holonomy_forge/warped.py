"""Warped products, endomorphism fields and Codazzi tensors.

A warped product ``R x_f F`` uses coordinates ``(s, x)`` with ``x`` the
fiber chart, so that the metric is ``diag(1, f(s)^2 g_F(x))``.
Endomorphism fields are mixed tensors ``A^i_j`` in chart components.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AsymmetricField, BoundViolated, NonCodazziT, SingularA
from .geometry import (
    DEFAULT_TOL,
    SINGULAR_COND,
    FrameField,
    ManifoldModel,
    PointFn,
    christoffel_unchecked,
    fd_gradient,
    metric_derivative,
    riemann,
)

Array = np.ndarray

GAUSS_NODES = 48


# ---------------------------------------------------------------------------
# endomorphism fields


@dataclass(frozen=True)
class EndomorphismField:
    """Point-dependent linear map ``A^i_j`` on tangent spaces of ``model``."""

    matrix: PointFn
    model: ManifoldModel
    name: str = ""
    # step used when differentiating this field; set larger for fields that
    # are themselves finite-difference products
    step: Optional[float] = None

    def __call__(self, p) -> Array:
        return self.matrix(np.asarray(p, dtype=float))

    def apply(self, p, X) -> Array:
        return np.einsum("...ij,...j->...i", self(p), X)

    def inverse(self) -> "EndomorphismField":
        return EndomorphismField(lambda x: np.linalg.inv(self.matrix(x)), self.model, f"inv({self.name})", self.step)

    def shifted(self, c: float) -> "EndomorphismField":
        eye = np.eye(self.model.dim)
        return EndomorphismField(lambda x: self.matrix(x) + c * eye, self.model, f"{self.name}+{c:g}", self.step)

    def scaled(self, c: float) -> "EndomorphismField":
        return EndomorphismField(lambda x: c * self.matrix(x), self.model, f"{c:g}*{self.name}", self.step)

    def __add__(self, other: "EndomorphismField") -> "EndomorphismField":
        return EndomorphismField(lambda x: self.matrix(x) + other.matrix(x), self.model, f"{self.name}+{other.name}", self.step)


def constant_field(model: ManifoldModel, M, name: str = "") -> EndomorphismField:
    M = np.asarray(M, dtype=float)
    return EndomorphismField(lambda x: np.broadcast_to(M, np.shape(x)[:-1] + M.shape).copy(), model, name)


def identity_field(model: ManifoldModel, c: float = 1.0) -> EndomorphismField:
    return constant_field(model, c * np.eye(model.dim), "Id" if c == 1.0 else f"{c:g}Id")


def orthonormal_basis(g: Array) -> Array:
    """Columns form a ``g``-orthonormal basis (Riemannian ``g``)."""
    L = np.linalg.cholesky(g)
    eye = np.broadcast_to(np.eye(g.shape[-1]), g.shape)
    return np.swapaxes(np.linalg.solve(L, eye), -1, -2)


def g_norm(g: Array, v: Array) -> Array:
    return np.sqrt(np.abs(np.einsum("...i,...ij,...j->...", v, g, v)))


def symmetry_residual(A: EndomorphismField, p) -> float:
    """``max |g(Au, v) - g(u, Av)|`` relative to ``1 + |A|``."""
    p = np.asarray(p, dtype=float)
    g = A.model.metric(p)
    M = A(p)
    gA = g @ M
    return float(np.max(np.abs(gA - np.swapaxes(gA, -1, -2))) / (1.0 + np.max(np.abs(M))))


def covariant_endomorphism_derivative(model: ManifoldModel, A: EndomorphismField, p) -> Array:
    """``out[..., k, i, j] = (nabla_k A)^i_j``."""
    p = model.require_inside(p)
    h = A.step if A.step is not None else model.fd_step
    dA = fd_gradient(A.matrix, p, h, model.dim)
    G = christoffel_unchecked(model, p)
    M = A(p)
    return dA + np.einsum("...ikl,...lj->...kij", G, M) - np.einsum("...il,...lkj->...kij", M, G)


def codazzi_defect(model: ManifoldModel, A: EndomorphismField, p) -> Array:
    """``D[..., i, a, b]``: components of ``(nabla_a A) d_b - (nabla_b A) d_a``."""
    C = covariant_endomorphism_derivative(model, A, p)
    T = np.einsum("...aib->...iab", C)
    return T - np.swapaxes(T, -1, -2)


def _check_symmetric(A: EndomorphismField, p, tol: float):
    res = symmetry_residual(A, p)
    if res > tol:
        raise AsymmetricField(f"{A.name or 'field'} is not symmetric (residual {res:.3g})")


def codazzi_residual(model: ManifoldModel, A: EndomorphismField, p, X, Y, sym_tol: float = 1e-8) -> Array:
    """``|(nabla_X A)Y - (nabla_Y A)X|_g`` at the points ``p``."""
    p = np.asarray(p, dtype=float)
    _check_symmetric(A, p, sym_tol)
    D = codazzi_defect(model, A, p)
    v = np.einsum("...iab,...a,...b->...i", D, X, Y)
    return g_norm(model.metric(p), v)


def codazzi_max_residual(model: ManifoldModel, A: EndomorphismField, points, sym_tol: float = 1e-8) -> float:
    """Largest defect over all pairs of a ``g``-orthonormal basis at each point."""
    p = np.asarray(points, dtype=float)
    _check_symmetric(A, p, sym_tol)
    D = codazzi_defect(model, A, p)
    g = model.metric(p)
    E = orthonormal_basis(g)
    v = np.einsum("...iab,...ap,...bq->...pqi", D, E, E)
    return float(np.max(g_norm(g[..., None, None, :, :], v)))


def random_unit_vectors(model: ManifoldModel, p, rng: np.random.Generator) -> Array:
    p = np.asarray(p, dtype=float)
    g = model.metric(p)
    v = rng.normal(size=p.shape)
    return v / g_norm(g, v)[..., None]


# ---------------------------------------------------------------------------
# spectral bounds


@dataclass(frozen=True)
class SpectralBounds:
    inf_positive: float  # +inf when no positive eigenvalue was sampled
    sup_negative: float  # -inf when no negative eigenvalue was sampled
    global_inf: float
    global_sup: float
    sample_count: int

    @property
    def mu_plus(self) -> float:
        """Largest positive eigenvalue, or 0."""
        return max(self.global_sup, 0.0)

    @property
    def mu_minus(self) -> float:
        """Smallest negative eigenvalue, or 0."""
        return min(self.global_inf, 0.0)


def scan_points(model: ManifoldModel, lattice: int = 17, n_random: int = 100, seed: int = 0,
                margin: float = 0.05, max_points: int = 20000) -> Array:
    """Deterministic lattice plus seeded random points inside the chart."""
    per_axis = lattice
    while per_axis > 2 and per_axis ** model.dim > max_points:
        per_axis = (per_axis - 1) // 2 + 1  # keeps the lattice nested
    axes = [np.linspace(lo + margin, hi - margin, per_axis) for lo, hi in zip(model.lower, model.upper)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.dim)
    grid = grid[model.contains(grid, margin)]
    rnd = model.sample_points(np.random.default_rng(seed), n_random, margin) if n_random else np.empty((0, model.dim))
    return np.concatenate([grid, rnd])


def eigenvalues(A: EndomorphismField, p) -> Array:
    """Eigenvalues of a ``g``-symmetric field via the pencil ``(gA, g)``."""
    from scipy.linalg import eigh

    p = np.asarray(p, dtype=float).reshape(-1, A.model.dim)
    g = A.model.metric(p)
    gA = g @ A(p)
    gA = 0.5 * (gA + np.swapaxes(gA, -1, -2))
    return np.array([eigh(a, b, eigvals_only=True) for a, b in zip(gA, g)])


def spectral_bounds_from(values: Array) -> SpectralBounds:
    ev = np.asarray(values, dtype=float).ravel()
    pos = ev[ev > 0]
    neg = ev[ev < 0]
    return SpectralBounds(
        inf_positive=float(pos.min()) if pos.size else np.inf,
        sup_negative=float(neg.max()) if neg.size else -np.inf,
        global_inf=float(ev.min()),
        global_sup=float(ev.max()),
        sample_count=int(np.asarray(values).shape[0]),
    )


def spectral_scan(A: EndomorphismField, lattice: int = 17, n_random: int = 100, seed: int = 0,
                  margin: float = 0.05, max_points: int = 20000) -> SpectralBounds:
    pts = scan_points(A.model, lattice, n_random, seed, margin, max_points)
    return spectral_bounds_from(eigenvalues(A, pts))


# ---------------------------------------------------------------------------
# warped products


@dataclass(frozen=True)
class Warping:
    f: Callable[[Array], Array]
    fdot: Callable[[Array], Array]
    fddot: Callable[[Array], Array]
    name: str = ""

    @staticmethod
    def exponential(k: float) -> "Warping":
        return Warping(
            lambda s: np.exp(k * s),
            lambda s: k * np.exp(k * s),
            lambda s: k * k * np.exp(k * s),
            name=f"exp({k:g}s)",
        )


@dataclass(frozen=True)
class WarpedProductModel:
    fiber: ManifoldModel
    warping: Warping
    s_range: tuple
    model: ManifoldModel = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "model", _assemble_warped(self))

    @property
    def dim(self) -> int:
        return self.fiber.dim + 1

    def split(self, p):
        p = np.asarray(p, dtype=float)
        return p[..., 0], p[..., 1:]

    def is_exponential(self, k: float, tol: float = 1e-12) -> bool:
        s = np.linspace(*self.s_range, 7)
        return bool(np.allclose(self.warping.f(s), np.exp(k * s), rtol=tol, atol=0.0)
                    and np.allclose(self.warping.fdot(s), k * np.exp(k * s), rtol=tol, atol=0.0))


def _assemble_warped(wp: WarpedProductModel) -> ManifoldModel:
    F = wp.fiber
    w = wp.warping
    m = F.dim

    def metric(p):
        s, x = p[..., 0], p[..., 1:]
        out = np.zeros(p.shape[:-1] + (m + 1, m + 1))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = (w.f(s) ** 2)[..., None, None] * F.metric(x)
        return out

    def dmetric(p):
        s, x = p[..., 0], p[..., 1:]
        f = w.f(s)[..., None, None]
        out = np.zeros(p.shape[:-1] + (m + 1, m + 1, m + 1))
        out[..., 0, 1:, 1:] = 2.0 * f * w.fdot(s)[..., None, None] * F.metric(x)
        out[..., 1:, 1:, 1:] = f[..., None] * f[..., None] * metric_derivative(F, x)
        return out

    inside = None
    if F.inside is not None:
        inside = lambda p: F.inside(p[..., 1:])  # noqa: E731

    frame = None
    if F.frame is not None:
        frame = _warped_frame(F.frame, w, m)

    return ManifoldModel(
        dim=m + 1,
        metric=metric,
        lower=np.concatenate([[wp.s_range[0]], F.lower]),
        upper=np.concatenate([[wp.s_range[1]], F.upper]),
        signature=(m + 1, 0),
        name=f"R x_{w.name} {F.name}",
        metric_derivative=dmetric,
        frame=frame,
        inside=inside,
        scale=F.scale,
        metadata={"warped": True, "basepoint": np.concatenate([[0.0], _centre(F)])},
    )


def _centre(model: ManifoldModel) -> Array:
    p = model.metadata.get("basepoint")
    return 0.5 * (model.lower + model.upper) if p is None else np.asarray(p, dtype=float)


def _warped_frame(Ff: FrameField, w: Warping, m: int) -> FrameField:
    def vectors(p):
        s, x = p[..., 0], p[..., 1:]
        out = np.zeros(p.shape[:-1] + (m + 1, m + 1))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = Ff.vectors(x) / w.f(s)[..., None, None]
        return out

    commutators = None
    if Ff.commutators is not None:
        def commutators(p):
            s, x = p[..., 0], p[..., 1:]
            f = w.f(s)
            c = np.zeros(p.shape[:-1] + (m + 1, m + 1, m + 1))
            c[..., 1:, 1:, 1:] = Ff.commutators(x) / f[..., None, None, None]
            # [d_s, e_a / f] = -(f'/f) e_a / f
            rate = -(w.fdot(s) / f)
            for a in range(1, m + 1):
                c[..., 0, a, a] = rate
                c[..., a, 0, a] = -rate
            return c

    return FrameField(vectors, (1.0,) + tuple(Ff.signs), commutators)


def warped_product(fiber: ManifoldModel, warping: Warping | None = None, s_range=(-1.0, 1.0)) -> WarpedProductModel:
    """``R x_f F``; the default warping is ``f = e^{-2s}``."""
    return WarpedProductModel(fiber, warping or Warping.exponential(-2.0), tuple(s_range))


# ---------------------------------------------------------------------------
# block decomposition H(b, D, E)


@dataclass(frozen=True)
class BDESplit:
    """Blocks of ``H(b, D, E)``; every callable takes full ``(s, x)`` points.

    ``b`` returns scalars, ``D`` the fiber vector ``D(d_s)`` and ``E`` the
    fiber endomorphism ``E(s)`` in fiber chart components.
    """

    b: Callable[[Array], Array]
    D: Callable[[Array], Array]
    E: Callable[[Array], Array]
    step: Optional[float] = None


def zero_vector_field(m: int):
    return lambda p: np.zeros(np.shape(p)[:-1] + (m,))


def assemble(wp: WarpedProductModel, split: BDESplit, name: str = "H") -> EndomorphismField:
    """The mixed tensor ``[[b, f^2 (g_F D)^T], [D, E]]``."""
    m = wp.fiber.dim

    def matrix(p):
        p = np.asarray(p, dtype=float)
        s, x = p[..., 0], p[..., 1:]
        D = split.D(p)
        out = np.zeros(p.shape[:-1] + (m + 1, m + 1))
        out[..., 0, 0] = split.b(p)
        out[..., 1:, 0] = D
        out[..., 0, 1:] = (wp.warping.f(s) ** 2)[..., None] * np.einsum("...ij,...i->...j", wp.fiber.metric(x), D)
        out[..., 1:, 1:] = split.E(p)
        return out

    return EndomorphismField(matrix, wp.model, name, split.step)


def _fiber_d_nabla(wp: WarpedProductModel, Efn, p, step: float) -> Array:
    """Fiber exterior covariant derivative of an ``s``-family of endomorphisms.

    Returns ``D[..., i, a, b]`` with ``a, b`` fiber indices.
    """
    x = p[..., 1:]
    dE = fd_gradient(Efn, p, step, wp.dim)[..., 1:, :, :]  # (..., k, i, j)
    G = christoffel_unchecked(wp.fiber, x)
    M = Efn(p)
    C = dE + np.einsum("...ikl,...lj->...kij", G, M) - np.einsum("...il,...lkj->...kij", M, G)
    T = np.einsum("...aib->...iab", C)
    return T - np.swapaxes(T, -1, -2)


def _pair_norm(g: Array, T: Array) -> float:
    """Max ``g``-norm of ``T(e_a, e_b)`` over an orthonormal basis."""
    E = orthonormal_basis(g)
    v = np.einsum("...iab,...ap,...bq->...pqi", T, E, E)
    return float(np.max(g_norm(g[..., None, None, :, :], v)))


def _single_norm(g: Array, T: Array) -> float:
    """Max ``g``-norm of ``T(e_a)`` over an orthonormal basis."""
    E = orthonormal_basis(g)
    v = np.einsum("...ia,...ap->...pi", T, E)
    return float(np.max(g_norm(g[..., None, :, :], v)))


def check_bde_conditions(wp: WarpedProductModel, split: BDESplit, points, include_assembled: bool = True) -> dict:
    """Residual maxima of the four block conditions for ``H(b, D, E)`` to be Codazzi."""
    p = wp.model.require_inside(points, margin=3.0 * wp.model.curvature_step + 2.0 * wp.model.fd_step)
    s, x = p[..., 0], p[..., 1:]
    w = wp.warping
    f, fd, fdd = w.f(s), w.fdot(s), w.fddot(s)
    m = wp.fiber.dim
    h = split.step if split.step is not None else wp.model.fd_step
    gF = wp.fiber.metric(x)
    GF = christoffel_unchecked(wp.fiber, x)
    D = split.D(p)
    E = split.E(p)
    eye = np.eye(m)

    dD = fd_gradient(split.D, p, h, wp.dim)  # (..., k, i)
    nablaD = np.swapaxes(dD[..., 1:, :], -1, -2) + np.einsum("...ikj,...j->...ik", GF, D)  # (..., i, k)
    Edot = fd_gradient(split.E, p, h, wp.dim)[..., 0, :, :]
    ratio = (fd / f)[..., None, None]
    r5 = nablaD - Edot - ratio * E + split.b(p)[..., None, None] * ratio * eye

    db = fd_gradient(split.b, p, h, wp.dim)
    grad_b = np.linalg.solve(gF, db[..., 1:][..., None])[..., 0]
    r6 = grad_b - (3.0 * f * fd)[..., None] * D - (f * f)[..., None] * dD[..., 0, :]

    gD = np.einsum("...ij,...j->...i", gF, D)
    rhs7 = (f * fd)[..., None, None, None] * (
        np.einsum("...a,ib->...iab", gD, eye) - np.einsum("...b,ia->...iab", gD, eye)
    )
    r7 = _fiber_d_nabla(wp, split.E, p, h) - rhs7

    RF = riemann(wp.fiber, x).riemann
    lhs8 = np.einsum("...lkab,...k->...lab", RF, D)
    rhs8 = (f * fdd - fd * fd)[..., None, None, None] * (
        np.einsum("...a,ib->...iab", gD, eye) - np.einsum("...b,ia->...iab", gD, eye)
    )
    r8 = lhs8 - rhs8

    out = {
        "codazzi5": _single_norm(gF, r5),
        "codazzi6": float(np.max(g_norm(gF, r6))),
        "codazzi7": _pair_norm(gF, r7),
        "codazzi8": _pair_norm(gF, r8),
    }
    if include_assembled:
        out["assembled"] = codazzi_max_residual(wp.model, assemble(wp, split), p)
    return out


# ---------------------------------------------------------------------------
# constructions


def gauss_integral(fn: Callable[[Array], Array], s, nodes: int = GAUSS_NODES) -> Array:
    """``int_0^s fn`` by fixed-node Gauss-Legendre, smooth in ``s``."""
    xi, wts = np.polynomial.legendre.leggauss(nodes)
    s = np.asarray(s, dtype=float)
    sig = 0.5 * s[..., None] * (xi + 1.0)
    return 0.5 * s * np.sum(wts * fn(sig), axis=-1)


def require_codazzi(model: ManifoldModel, T: EndomorphismField, points, tol: float, error=NonCodazziT):
    res = codazzi_max_residual(model, T, points)
    if res > tol:
        raise error(f"{T.name or 'field'} has Codazzi residual {res:.3g} > {tol:.3g}")
    return res


def build_E_family(T: EndomorphismField, b: Callable[[Array], Array], wp: WarpedProductModel,
                   check_points=None, tol: float = DEFAULT_TOL, nodes: int = GAUSS_NODES):
    """``E(s) = (T + int_0^s b fdot * Id) / f`` as a callable on ``(s, x)`` points."""
    if check_points is not None:
        require_codazzi(wp.fiber, T, check_points, tol)
    w = wp.warping
    m = wp.fiber.dim
    eye = np.eye(m)

    def integrand(sig):
        return b(sig) * w.fdot(sig)

    def E(p):
        p = np.asarray(p, dtype=float)
        s, x = p[..., 0], p[..., 1:]
        I = gauss_integral(integrand, s, nodes)
        return (T(x) + I[..., None, None] * eye) / w.f(s)[..., None, None]

    E.integral = lambda s: gauss_integral(integrand, s, nodes)
    return E


def simple_split(T: EndomorphismField, b: Callable[[Array], Array], wp: WarpedProductModel, **kw) -> BDESplit:
    """``H(b, 0, E)`` with ``b = b(s)`` and ``E`` from :func:`build_E_family`."""
    E = build_E_family(T, b, wp, **kw)
    return BDESplit(lambda p: b(np.asarray(p)[..., 0]), zero_vector_field(wp.fiber.dim), E)


@dataclass(frozen=True)
class BoundedCodazzi:
    H: EndomorphismField
    split: BDESplit
    shift: float
    h: Callable
    hdot: Callable


def default_h(k: float):
    """Strictly increasing ``h < k/2``; ``(k/pi) arctan(s) - 1e-6 k`` for ``k > 0``."""
    width = k if k > 0 else 1.0
    eps = 1e-6 * width
    h = lambda s: k / 2.0 + (width / np.pi) * (np.arctan(s) - np.pi / 2.0) - eps  # noqa: E731
    hdot = lambda s: (width / np.pi) / (1.0 + np.asarray(s) ** 2)  # noqa: E731
    return h, hdot


def build_bounded_codazzi(T: EndomorphismField, k: float, c: float, wp: WarpedProductModel,
                          h=None, hdot=None, check_points=None, tol: float = DEFAULT_TOL) -> BoundedCodazzi:
    """Codazzi tensor ``H(b, 0, E) + c Id`` with ``b = e^{2s} h'`` on ``R x_{e^{-2s}} F``."""
    if not wp.is_exponential(-2.0):
        raise ValueError("bounded construction needs the warping f = e^{-2s}")
    pts = check_points
    if pts is None:
        pts = scan_points(wp.fiber, lattice=5, n_random=20)
    ev = eigenvalues(T, pts)
    if np.min(ev) <= k:
        raise BoundViolated(f"sampled eigenvalue {np.min(ev):.6g} of T is not above k = {k:g}")
    if h is None:
        h, hdot = default_h(k)
    elif hdot is None:
        raise ValueError("hdot is required with a custom h")
    b = lambda s: np.exp(2.0 * np.asarray(s)) * hdot(s)  # noqa: E731
    split = simple_split(T, b, wp, check_points=check_points, tol=tol)
    base = assemble(wp, split, "H(b,0,E)")
    return BoundedCodazzi(base.shifted(c), split, c, h, hdot)


def tilde_E(wp: WarpedProductModel, split: BDESplit):
    """``(f f'' - f'^2) E - f f' nabla^F D(d_s)`` as an ``s``-family on the fiber."""
    w = wp.warping
    h = split.step if split.step is not None else wp.model.fd_step

    def Et(p):
        p = np.asarray(p, dtype=float)
        s, x = p[..., 0], p[..., 1:]
        f, fd, fdd = w.f(s), w.fdot(s), w.fddot(s)
        D = split.D(p)
        dD = fd_gradient(split.D, p, h, wp.dim)[..., 1:, :]
        nablaD = np.swapaxes(dD, -1, -2) + np.einsum("...ikj,...j->...ik", christoffel_unchecked(wp.fiber, x), D)
        return (f * fdd - fd * fd)[..., None, None] * split.E(p) - (f * fd)[..., None, None] * nablaD

    return Et


def tilde_E_residual(wp: WarpedProductModel, split: BDESplit, points) -> float:
    """Fiber Codazzi residual of :func:`tilde_E` at fixed ``s``."""
    p = wp.model.require_inside(points, margin=3.0 * wp.model.curvature_step + 4.0 * wp.model.fd_step)
    Et = tilde_E(wp, split)
    return _pair_norm(wp.fiber.metric(p[..., 1:]), _fiber_d_nabla(wp, Et, p, wp.model.curvature_step))


# ---------------------------------------------------------------------------
# pulled-back metrics


def pullback_model(model: ManifoldModel, A: EndomorphismField, name: str | None = None) -> ManifoldModel:
    """``(A^* g)(X, Y) = g(AX, AY)``."""

    def metric(x):
        M = A.matrix(x)
        return np.swapaxes(M, -1, -2) @ model.metric(x) @ M

    return ManifoldModel(
        dim=model.dim,
        metric=metric,
        lower=model.lower,
        upper=model.upper,
        signature=model.signature,
        name=name or f"{A.name}^* {model.name}",
        inside=model.inside,
        scale=model.scale,
    )


def require_invertible(A: EndomorphismField, p):
    cond = np.linalg.cond(A(p))
    if np.any(~np.isfinite(cond)) or np.any(cond > SINGULAR_COND):
        raise SingularA(f"{A.name or 'field'} is not invertible (condition {np.max(cond):.3g})")


def conjugated_connection_check(model: ManifoldModel, A: EndomorphismField, points) -> dict:
    """Compare the Levi-Civita data of ``A^* g`` with the conjugated data of ``g``.

    ``connection``: ``nabla' = A^{-1} nabla A``; ``curvature``:
    ``A R'(X, Y) = R(X, Y) A``; ``inverse_codazzi``: Codazzi residual of
    ``A^{-1}`` for ``A^* g``; ``ricci_commutation``: ``Ric o A = A o Ric``.
    """
    p = model.require_inside(points, margin=3.0 * model.curvature_step + 2.0 * model.fd_step)
    require_invertible(A, p)
    pulled = pullback_model(model, A)
    M = A(p)
    Minv = np.linalg.inv(M)
    G1 = christoffel_unchecked(pulled, p)
    h = A.step if A.step is not None else model.fd_step
    dA = fd_gradient(A.matrix, p, h, model.dim)  # (..., i, l, j)
    G0 = christoffel_unchecked(model, p)
    inner = np.einsum("...ilj->...lij", dA) + np.einsum("...lim,...mj->...lij", G0, M)
    conj = np.einsum("...kl,...lij->...kij", Minv, inner)
    scale = 1.0 + np.max(np.abs(G0))

    R0 = riemann(model, p)
    R1 = riemann(pulled, p)
    lhs = np.einsum("...ml,...lkij->...mkij", M, R1.riemann)
    rhs = np.einsum("...mlij,...lk->...mkij", R0.riemann, M)
    ric = R0.ricci_endomorphism()
    return {
        "connection": float(np.max(np.abs(G1 - conj)) / scale),
        "curvature": float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(rhs)))),
        "inverse_codazzi": codazzi_max_residual(pulled, EndomorphismField(A.inverse().matrix, pulled, "A^-1", A.step), p),
        "ricci_commutation": float(np.max(np.abs(ric @ M - M @ ric)) / (1.0 + np.max(np.abs(ric)))),
    }
