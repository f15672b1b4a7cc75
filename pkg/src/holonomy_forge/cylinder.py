"""Lorentzian cylinders ``(a, b) x M`` with metric ``-dt^2 + g_t``.

Two presentations share one implementation.  For ``C(M; A)`` the slices are
``g_t = (1 - 2tA)^* g_0``; for ``C[F; H]`` over a warped product they are
``g_t = (H - 2t)^* g_wp``.  Both are written ``g_t = B_t^* G`` with
``B_t = L - 2t S``.  Chart coordinates on the cylinder are ``(t, p)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyInterval, NonCodazziH, WrongBase
from .geometry import (
    CurvePath,
    ManifoldModel,
    christoffel_unchecked,
    covariant_derivative,
    geodesic,
    riemann,
)
from .transport import tangent_transport_matrix, transport_matrix
from .warped import (
    EndomorphismField,
    SpectralBounds,
    WarpedProductModel,
    _centre,
    codazzi_max_residual,
    eigenvalues,
    identity_field,
    scan_points,
    spectral_bounds_from,
)

Array = np.ndarray

INTERVAL_MARGIN = 1e-3
DEFAULT_WINDOW = (-0.4, 0.4)


@dataclass(frozen=True)
class CylinderModel:
    base: ManifoldModel
    L: EndomorphismField
    S: EndomorphismField
    kind: str  # "C[F;H]" or "C(M;A)"
    t_interval: tuple
    window: tuple
    bounds: SpectralBounds
    wp: Optional[WarpedProductModel] = None
    model: ManifoldModel = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "model", _assemble(self))

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    @property
    def H(self) -> EndomorphismField:
        return self.L

    def B(self, t, p) -> Array:
        t = np.asarray(t, dtype=float)
        return self.L(p) - 2.0 * t[..., None, None] * self.S(p)

    def B_inv(self, t, p) -> Array:
        return np.linalg.inv(self.B(t, p))

    def slice_metric(self, t, p) -> Array:
        Bt = self.B(t, p)
        return np.swapaxes(Bt, -1, -2) @ self.base.metric(p) @ Bt

    def slice_metric_dot(self, t, p) -> Array:
        Bt = self.B(t, p)
        SGB = np.swapaxes(self.S(p), -1, -2) @ self.base.metric(p) @ Bt
        return -2.0 * (SGB + np.swapaxes(SGB, -1, -2))

    def split(self, q):
        q = np.asarray(q, dtype=float)
        return q[..., 0], q[..., 1:]

    def lift(self, X) -> Array:
        """Spatial components ``X`` as cylinder components with zero ``dt`` part."""
        X = np.asarray(X, dtype=float)
        return np.concatenate([np.zeros(X.shape[:-1] + (1,)), X], axis=-1)

    def sample(self, rng: np.random.Generator, n: int, margin: float = 0.1) -> Array:
        return self.model.sample_points(rng, n, margin)


def _assemble(cyl: CylinderModel) -> ManifoldModel:
    n = cyl.base.dim

    def metric(q):
        t, p = q[..., 0], q[..., 1:]
        out = np.zeros(q.shape[:-1] + (n + 1, n + 1))
        out[..., 0, 0] = -1.0
        out[..., 1:, 1:] = cyl.slice_metric(t, p)
        return out

    inside = None
    if cyl.base.inside is not None:
        inside = lambda q: cyl.base.inside(q[..., 1:])  # noqa: E731

    return ManifoldModel(
        dim=n + 1,
        metric=metric,
        lower=np.concatenate([[cyl.window[0]], cyl.base.lower]),
        upper=np.concatenate([[cyl.window[1]], cyl.base.upper]),
        signature=(n, 1),
        name=f"{cyl.kind} over {cyl.base.name}",
        inside=inside,
        scale=cyl.base.scale,
        metadata={"kind": cyl.kind, "basepoint": np.concatenate([[0.0], _centre(cyl.base)])},
    )


def interval_from_bounds(bounds: SpectralBounds, kind: str, margin: float = INTERVAL_MARGIN) -> tuple:
    """Maximal ``t`` interval on which ``B_t`` stays invertible, shrunk by ``margin``."""
    if kind == "C[F;H]":
        # H - 2t invertible: sup_neg/2 < t < inf_pos/2
        a = bounds.sup_negative / 2.0
        b = bounds.inf_positive / 2.0
    else:
        # 1 - 2t mu invertible: 1/(2 mu_-) < t < 1/(2 mu_+)
        a = 1.0 / (2.0 * bounds.mu_minus) if bounds.mu_minus < 0 else -np.inf
        b = 1.0 / (2.0 * bounds.mu_plus) if bounds.mu_plus > 0 else np.inf
    if not a < b:
        raise EmptyInterval(f"empty cylinder interval ({a}, {b})")
    a = a * (1.0 - margin) if np.isfinite(a) else a
    b = b * (1.0 - margin) if np.isfinite(b) else b
    return (float(a), float(b))


def _window(interval, window):
    lo = max(interval[0], window[0])
    hi = min(interval[1], window[1])
    if not lo < hi:
        raise EmptyInterval(f"chart window {window} misses interval {interval}")
    return (float(lo), float(hi))


def _require_codazzi(base, H, check_points, tol, seed):
    pts = check_points
    if pts is None:
        pts = base.sample_points(np.random.default_rng(seed), 20, margin=0.1)
    res = codazzi_max_residual(base, H, pts)
    if res > tol:
        raise NonCodazziH(f"{H.name or 'H'} has Codazzi residual {res:.3g} > {tol:.3g}")


def build_cylinder(base, H: EndomorphismField, window=DEFAULT_WINDOW, check_points=None, tol: float = 1e-6,
                   scan: dict | None = None, seed: int = 0) -> CylinderModel:
    """``C[F; H]`` when ``base`` is a warped product, otherwise ``C(M; A)`` with ``A = H``."""
    wp = base if isinstance(base, WarpedProductModel) else None
    M = wp.model if wp is not None else base
    _require_codazzi(M, H, check_points, tol, seed)
    bounds = spectral_bounds_from(eigenvalues(H, scan_points(M, seed=seed, **(scan or {}))))
    if wp is not None:
        kind, L, S = "C[F;H]", H, identity_field(M)
    else:
        kind, L, S = "C(M;A)", identity_field(M), H
    interval = interval_from_bounds(bounds, kind)
    return CylinderModel(M, L, S, kind, interval, _window(interval, window), bounds, wp)


# ---------------------------------------------------------------------------
# closed forms


def weingarten(cyl: CylinderModel, t, p) -> Array:
    """``W_t = 2 B_t^{-1} S``; equals ``2 H_t^{-1}`` on ``C[F;H]``."""
    return 2.0 * np.linalg.solve(cyl.B(t, p), cyl.S(p))


def weingarten_oracle(cyl: CylinderModel, q) -> Array:
    """``-nabla^C d_t`` read off the cylinder Christoffel symbols."""
    G = christoffel_unchecked(cyl.model, cyl.model.require_inside(q))
    return -G[..., 1:, 1:, 0]


def weingarten_residuals(cyl: CylinderModel, q) -> dict:
    q = cyl.model.require_inside(q)
    t, p = cyl.split(q)
    W = weingarten(cyl, t, p)
    oracle = weingarten_oracle(cyl, q)
    gt = cyl.slice_metric(t, p)
    # g_t(W X, Y) = -1/2 gdot_t(X, Y)
    shape = np.einsum("...ki,...kj->...ij", gt, W) + 0.5 * cyl.slice_metric_dot(t, p)
    scale = 1.0 + np.max(np.abs(W))
    return {
        "P1": float(np.max(np.abs(W - oracle)) / scale),
        "P1_shape": float(np.max(np.abs(shape)) / scale),
    }


def conjugated_slice_connection(cyl: CylinderModel, t, p) -> Array:
    """Spatial Christoffels ``B_t^{-1}(dB_t + Gamma^G B_t)`` of ``g_t``."""
    from .geometry import fd_gradient

    M = cyl.base
    h = cyl.L.step if cyl.L.step is not None else M.fd_step
    t = np.asarray(t, dtype=float)
    dB = fd_gradient(lambda x: cyl.B(np.broadcast_to(t[..., None, None], x.shape[:-1]), x), p, h, M.dim)
    G0 = christoffel_unchecked(M, p)
    Bt = cyl.B(t, p)
    inner = np.einsum("...ilj->...lij", dB) + np.einsum("...lim,...mj->...lij", G0, Bt)
    return np.einsum("...kl,...lij->...kij", np.linalg.inv(Bt), inner)


def covariant_residuals(cyl: CylinderModel, q) -> dict:
    """Chart-level comparison of the cylinder connection with the closed forms."""
    q = cyl.model.require_inside(q)
    t, p = cyl.split(q)
    G = christoffel_unchecked(cyl.model, q)
    W = weingarten(cyl, t, p)
    Bt = cyl.B(t, p)
    SGB = np.swapaxes(cyl.S(p), -1, -2) @ cyl.base.metric(p) @ Bt
    spatial = conjugated_slice_connection(cyl, t, p)
    scale = 1.0 + np.max(np.abs(G))
    return {
        # P2: spatial part and the d_t coefficient -2 g(S X, B_t Y)
        "P2": float(max(np.max(np.abs(G[..., 1:, 1:, 1:] - spatial)),
                        np.max(np.abs(G[..., 0, 1:, 1:] + (SGB + np.swapaxes(SGB, -1, -2))))) / scale),
        "P3": float(np.max(np.abs(G[..., 1:, 1:, 0] + W)) / scale),
        "P4": float(np.max(np.abs(G[..., 1:, 0, 1:] + W)) / scale),
        "P5": float(np.max(np.abs(G[..., :, 0, 0])) / scale),
    }


def hinv_dot_residual(cyl: CylinderModel, q, h: float = 1e-3) -> float:
    """``d/dt H_t^{-1} = 2 H_t^{-2}`` by central differences in ``t``."""
    t, p = cyl.split(q)
    d = (8.0 * (cyl.B_inv(t + h, p) - cyl.B_inv(t - h, p)) - (cyl.B_inv(t + 2 * h, p) - cyl.B_inv(t - 2 * h, p))) / (12 * h)
    Bi = cyl.B_inv(t, p)
    expected = 2.0 * np.einsum("...ij,...jk,...kl->...il", Bi, cyl.S(p), Bi)
    return float(np.max(np.abs(d - expected)) / (1.0 + np.max(np.abs(expected))))


def _require_designated(cyl: CylinderModel):
    if cyl.kind != "C[F;H]" or cyl.wp is None or not cyl.wp.is_exponential(-2.0):
        raise WrongBase("needs C[F;H] over the warped product with f = e^{-2s}")


def t_line_transport_residual(cyl: CylinderModel, q, Z, t1: float) -> float:
    """Transport ``H^{-1} Z`` along the ``t``-line from ``t(q)`` to ``t1``; compare with ``H_{t1}^{-1} Z``."""
    q = np.asarray(q, dtype=float)
    t0, p = q[0], q[1:]
    end = q.copy()
    end[0] = t1
    res = tangent_transport_matrix(cyl.model, CurvePath.line(q, end))
    v0 = cyl.lift(cyl.B_inv(t0, p) @ Z)
    expected = cyl.lift(cyl.B_inv(t1, p) @ Z)
    return float(np.max(np.abs(res.matrix @ v0 - expected)) / (1.0 + np.max(np.abs(expected))))


def lifted_field_residuals(cyl: CylinderModel, q, V, W) -> dict:
    """P6 in differential form and P7 to P10 for fiber lifts ``V``, ``W`` (constant chart components)."""
    _require_designated(cyl)
    M = cyl.model
    q = M.require_inside(q)
    t, p = cyl.split(q)
    s, x = p[..., 0], p[..., 1:]
    n = cyl.base.dim
    e_s = np.zeros(q.shape[:-1] + (n,))
    e_s[..., 0] = 1.0
    Vb = np.concatenate([np.zeros(q.shape[:-1] + (1,)), V], axis=-1)
    Wb = np.concatenate([np.zeros(q.shape[:-1] + (1,)), W], axis=-1)

    def tilde(Z):
        # t-line displacement of A Z:  H_t^{-1} Z  as a field on the cylinder
        def field(y):
            tt, pp = y[..., 0], y[..., 1:]
            Zb = np.broadcast_to(Z, pp.shape[:-1] + (n,))
            return cyl.lift(np.einsum("...ij,...j->...i", cyl.B_inv(tt, pp), Zb))
        return field

    Zs = np.zeros(n)
    Zs[0] = 1.0
    dt = np.zeros(q.shape[:-1] + (n + 1,))
    dt[..., 0] = 1.0
    ds = cyl.lift(e_s)
    Vc, Wc = cyl.lift(Vb), cyl.lift(Wb)

    def cov(fieldfn, X):
        return covariant_derivative(M, fieldfn, q, X)

    Bi = cyl.B_inv(t, p)
    HV = cyl.lift(np.einsum("...ij,...j->...i", Bi, Vb))
    HS = cyl.lift(np.einsum("...ij,...j->...i", Bi, e_s))

    out = {"P7": float(np.max(np.abs(cov(tilde(Zs), ds) + 2.0 * dt)))}
    res6 = [float(np.max(np.abs(cov(tilde(Zs), dt))))]
    res8 = []
    res9 = []
    res10 = []
    gF = cyl.wp.fiber.metric(x)
    GF = christoffel_unchecked(cyl.wp.fiber, x)
    for idx in np.ndindex(q.shape[:-1]):
        qi = q[idx]
        Vi, Wi = Vb[idx], Wb[idx]
        # P6: the displaced field is parallel along t-lines
        res6.append(np.max(np.abs(covariant_derivative(M, tilde(Vi), qi, dt[idx]))))
        f8 = covariant_derivative(M, tilde(Vi), qi, ds[idx])
        res8.append(np.max(np.abs(f8 + 2.0 * HV[idx])))
        f9 = covariant_derivative(M, tilde(Zs), qi, Vc[idx])
        res9.append(np.max(np.abs(f9 + 2.0 * HV[idx])))
        f10 = covariant_derivative(M, tilde(Wi), qi, Vc[idx])
        nabla_F = np.concatenate([[0.0], np.einsum("ikj,k,j->i", GF[idx], V[idx], W[idx])])
        gvw = V[idx] @ gF[idx] @ W[idx]
        expect = -2.0 * np.exp(-4.0 * s[idx]) * gvw * (dt[idx] - HS[idx]) + cyl.lift(Bi[idx] @ nabla_F)
        res10.append(np.max(np.abs(f10 - expect)))
    out["P6"] = float(np.max(res6))
    out["P8"] = float(np.max(res8))
    out["P9"] = float(np.max(res9))
    out["P10"] = float(np.max(res10))
    return out


# ---------------------------------------------------------------------------
# curvature


def _embed(cyl: CylinderModel, op: Array) -> Array:
    """Spatial matrices as cylinder matrices."""
    out = np.zeros(op.shape[:-2] + (cyl.dim, cyl.dim))
    out[..., 1:, 1:] = op
    return out


def curvature_residuals(cyl: CylinderModel, q, rng: np.random.Generator) -> dict:
    """Cylinder curvature identities against the chart-level Riemann tensor.

    Fiber lifts are random fiber vectors; ``d_s`` enters for the warped
    identities.  Generic vectors ``X, Y, V`` are random spatial vectors.
    """
    q = cyl.model.require_inside(q, margin=3.0 * cyl.model.curvature_step + 2.0 * cyl.model.fd_step)
    t, p = cyl.split(q)
    n = cyl.base.dim
    RC = riemann(cyl.model, q)
    RG = riemann(cyl.base, p)
    Bt = cyl.B(t, p)
    Bi = np.linalg.inv(Bt)
    W = weingarten(cyl, t, p)
    gt = cyl.slice_metric(t, p)
    scale = 1.0 + np.max(np.abs(RC.riemann))
    shape = q.shape[:-1]

    X, Y, V = (rng.normal(size=shape + (n,)) for _ in range(3))
    lx, ly, lv = cyl.lift(X), cyl.lift(Y), cyl.lift(V)
    dt = np.zeros(shape + (n + 1,))
    dt[..., 0] = 1.0
    Xc = rng.normal(size=shape + (n + 1,))
    Yc = rng.normal(size=shape + (n + 1,))

    out = {}
    out["item1"] = float(max(
        np.max(np.abs(RC.apply(Xc, Yc, dt))),
        np.max(np.abs(RC.apply(Xc, dt, Yc))),
        np.max(np.abs(RC.apply(Xc, dt, dt))),
    ) / scale)

    # generic Gauss formula; equals curv1 on C[F;H]
    conj = np.einsum("...ij,...jklm,...kn->...inlm", Bi, RG.riemann, Bt)
    lhs = RC.apply(lx, ly, lv)[..., 1:]
    WX = np.einsum("...ij,...j->...i", W, X)
    WY = np.einsum("...ij,...j->...i", W, Y)
    rhs = (np.einsum("...iklm,...k,...l,...m->...i", conj, V, X, Y)
           - np.einsum("...i,...ij,...j->...", WX, gt, V)[..., None] * WY
           + np.einsum("...i,...ij,...j->...", WY, gt, V)[..., None] * WX)
    out["curv1"] = float(np.max(np.abs(lhs - rhs)) / scale)
    out["curv1_tangent"] = float(np.max(np.abs(RC.apply(lx, ly, lv)[..., 0])) / scale)

    if cyl.kind == "C[F;H]" and cyl.wp is not None:
        x = p[..., 1:]
        m = cyl.wp.fiber.dim
        RF = riemann(cyl.wp.fiber, x)
        Xf, Yf, Vf = (np.concatenate([np.zeros(shape + (1,)), rng.normal(size=shape + (m,))], axis=-1) for _ in range(3))
        es = np.zeros(shape + (n,))
        es[..., 0] = 1.0
        HiV = np.einsum("...ij,...j->...i", Bi, Vf)
        lhs2 = RC.apply(cyl.lift(Xf), cyl.lift(Yf), cyl.lift(HiV))[..., 1:]
        RFV = np.concatenate([np.zeros(shape + (1,)), RF.apply(Xf[..., 1:], Yf[..., 1:], Vf[..., 1:])], axis=-1)
        rhs2 = np.einsum("...ij,...j->...i", Bi, RFV)
        out["curv2"] = float(np.max(np.abs(lhs2 - rhs2)) / scale)
        HiS = cyl.lift(np.einsum("...ij,...j->...i", Bi, es))
        HiX = cyl.lift(np.einsum("...ij,...j->...i", Bi, Xf))
        lds = cyl.lift(es)
        out["curv3"] = float(max(
            np.max(np.abs(RC.apply(cyl.lift(Xf), cyl.lift(Yf), HiS))),
            np.max(np.abs(RC.apply(lds, cyl.lift(Yf), HiS))),
            np.max(np.abs(RC.apply(lds, cyl.lift(Yf), HiX))),
        ) / scale)
    return out


def warped_curvature_residuals(wp: WarpedProductModel, p, rng: np.random.Generator) -> dict:
    """Warped-product curvature for ``f = e^{-2s}`` against the chart Riemann tensor."""
    if not wp.is_exponential(-2.0):
        raise WrongBase("warped identities are stated for f = e^{-2s}")
    M = wp.model
    p = M.require_inside(p, margin=3.0 * M.curvature_step + 2.0 * M.fd_step)
    shape = p.shape[:-1]
    m = wp.fiber.dim
    s, x = p[..., 0], p[..., 1:]
    R = riemann(M, p)
    RF = riemann(wp.fiber, x)
    g = M.metric(p)
    gF = wp.fiber.metric(x)
    f = wp.warping.f(s)

    def fib():
        return np.concatenate([np.zeros(shape + (1,)), rng.normal(size=shape + (m,))], axis=-1)

    X, Y, U = fib(), fib(), fib()
    ds = np.zeros(shape + (m + 1,))
    ds[..., 0] = 1.0
    gw = lambda a, b: np.einsum("...i,...ij,...j->...", a, g, b)  # noqa: E731
    scale = 1.0 + np.max(np.abs(R.riemann))
    RFU = np.concatenate([np.zeros(shape + (1,)), RF.apply(X[..., 1:], Y[..., 1:], U[..., 1:])], axis=-1)
    p12 = R.apply(X, Y, U) - (RFU + 4.0 * gw(X, U)[..., None] * Y - 4.0 * gw(Y, U)[..., None] * X)
    gFYU = np.einsum("...i,...ij,...j->...", Y[..., 1:], gF, U[..., 1:])
    p13 = R.apply(ds, Y, U) + 4.0 * (f * f * gFYU)[..., None] * ds
    p14 = R.apply(ds, Y, ds) - 4.0 * Y
    p15 = R.apply(X, Y, ds)
    return {k: float(np.max(np.abs(v)) / scale) for k, v in
            (("P12", p12), ("P13", p13), ("P14", p14), ("P15", p15))}


def max_curvature_norm(cyl: CylinderModel, q) -> float:
    return float(np.max(np.abs(riemann(cyl.model, q).riemann)))


# ---------------------------------------------------------------------------
# P, Q and explicit transport


def P_field(cyl: CylinderModel):
    _require_designated(cyl)
    n = cyl.base.dim

    def P(q):
        q = np.asarray(q, dtype=float)
        t, p = q[..., 0], q[..., 1:]
        e = np.exp(-2.0 * p[..., 0])
        out = np.zeros(q.shape[:-1] + (n + 1,))
        out[..., 0] = e
        out[..., 1:] = -e[..., None] * cyl.B_inv(t, p)[..., :, 0]
        return out

    return P


def Q_field(cyl: CylinderModel):
    _require_designated(cyl)
    n = cyl.base.dim

    def Q(q):
        q = np.asarray(q, dtype=float)
        t, p = q[..., 0], q[..., 1:]
        e = 0.5 * np.exp(2.0 * p[..., 0])
        out = np.zeros(q.shape[:-1] + (n + 1,))
        out[..., 0] = e
        out[..., 1:] = e[..., None] * cyl.B_inv(t, p)[..., :, 0]
        return out

    return Q


@dataclass(frozen=True)
class PQFrame:
    P: Array
    Q: Array
    gPP: Array
    gQQ: Array
    gPQ: Array
    parallel_residual: float


def pq_fields(cyl: CylinderModel, q, rng: np.random.Generator | None = None) -> PQFrame:
    """Values of ``P, Q``, their inner products and ``max |nabla_X P|`` over random ``X``."""
    Pf, Qf = P_field(cyl), Q_field(cyl)
    q = cyl.model.require_inside(q)
    g = cyl.model.metric(q)
    P, Q = Pf(q), Qf(q)
    ip = lambda a, b: np.einsum("...i,...ij,...j->...", a, g, b)  # noqa: E731
    rng = rng or np.random.default_rng(0)
    X = rng.normal(size=q.shape)
    par = covariant_derivative(cyl.model, Pf, q, X)
    return PQFrame(P, Q, ip(P, P), ip(Q, Q), ip(P, Q), float(np.max(np.abs(par))))


def adapted_basis(cyl: CylinderModel, q, fiber_basis: Array | None = None) -> Array:
    """Columns ``(P, H_t^{-1} v_1, ..., H_t^{-1} v_m, Q)`` with ``v_i`` a ``g_F``-orthonormal basis."""
    from .warped import orthonormal_basis

    q = np.asarray(q, dtype=float)
    t, p = q[0], q[1:]
    m = cyl.wp.fiber.dim
    if fiber_basis is None:
        fiber_basis = orthonormal_basis(cyl.wp.fiber.metric(p[1:]))
    Bi = cyl.B_inv(t, p)
    cols = [P_field(cyl)(q)]
    for j in range(m):
        v = np.concatenate([[0.0], fiber_basis[:, j]])
        cols.append(cyl.lift(Bi @ v))
    cols.append(Q_field(cyl)(q))
    return np.stack(cols, axis=1)


def _fiber_conn_augmented(cyl: CylinderModel):
    """Connection on ``(Y, a)`` for ``Y' = -Gamma^F(gamma', Y)``, ``a' = 2 g_F(Y, gamma')``."""
    F = cyl.wp.fiber
    m = F.dim

    def conn(x):
        G = christoffel_unchecked(F, x)  # (..., i, a, j)
        C = np.zeros(x.shape[:-1] + (m, m + 1, m + 1))
        C[..., :, :m, :m] = np.swapaxes(G, -3, -2)
        C[..., :, m, :m] = -2.0 * F.metric(x)
        return C

    return conn


def transport_AZ(cyl: CylinderModel, delta: CurvePath, Z) -> dict:
    """Closed-form transport of ``A Z`` along ``delta = (t, s, gamma)`` vs generic integration.

    Returns the closed-form vector, the integrated vector, ``a(1)`` and the
    relative gap between the two vectors.
    """
    _require_designated(cyl)
    q0 = delta.start()
    if abs(q0[0]) > 1e-12 or abs(q0[1]) > 1e-12:
        raise ValueError("delta must start at t = 0, s = 0")
    m = cyl.wp.fiber.dim
    Z = np.asarray(Z, dtype=float)
    gamma = CurvePath(lambda r: delta.parametrization(r)[..., 2:], lambda r: delta.velocity(r)[..., 2:],
                      delta.closed, delta.breaks)
    aug = transport_matrix(_fiber_conn_augmented(cyl), gamma)
    state = aug.matrix @ np.concatenate([Z, [0.0]])
    Y, a = state[:m], state[m]
    q1 = delta.end()
    t1, p1 = q1[0], q1[1:]
    Yb = np.concatenate([[0.0], Y])
    closed = a * P_field(cyl)(q1) + np.exp(2.0 * p1[0]) * cyl.lift(cyl.B_inv(t1, p1) @ Yb)
    v0 = cyl.lift(cyl.B_inv(0.0, q0[1:]) @ np.concatenate([[0.0], Z]))
    generic = tangent_transport_matrix(cyl.model, delta)
    integrated = generic.matrix @ v0
    gap = float(np.max(np.abs(closed - integrated)) / (1.0 + np.max(np.abs(closed))))
    return {"closed_form": closed, "integrated": integrated, "a": float(a), "Y": Y, "residual": gap,
            "error_estimate": generic.error + aug.error}


def fiber_geodesic_curve(cyl: CylinderModel, x0, v0, t: float = 0.0, s: float = 0.0, steps: int = 400) -> CurvePath:
    """``r -> (t, s, gamma(r))`` with ``gamma`` a fiber geodesic."""
    gam = geodesic(cyl.wp.fiber, x0, v0, steps)

    def param(r):
        y = gam.parametrization(r)
        return np.concatenate([np.full(y.shape[:-1] + (1,), t), np.full(y.shape[:-1] + (1,), s), y], axis=-1)

    def vel(r):
        y = gam.velocity(r)
        return np.concatenate([np.zeros(y.shape[:-1] + (2,)), y], axis=-1)

    return CurvePath(param, vel)


# ---------------------------------------------------------------------------
# causality


@dataclass(frozen=True)
class CausalityReport:
    strongly_causal: bool
    t_values: Array
    gh_bound: Array
    bbc_bound: Array
    fiber_complete_flag: bool
    globally_hyperbolic: str
    bbc: str
    note: str


def slice_bounds(cyl: CylinderModel, t: float, points: Array) -> tuple:
    """``sup`` of eigenvalues of ``A_t^{-1}`` and of ``|eig(gdot_t, g_t)|`` over ``points``."""
    from scipy.linalg import eigh

    p = np.asarray(points, dtype=float)
    tt = np.full(p.shape[:-1], t)
    # A_t = L^{-1} B_t is the operator with g_t = A_t^* (L^* G)
    At_inv = np.linalg.solve(cyl.B(tt, p), cyl.L(p))
    gh = np.max(np.real(np.linalg.eigvals(At_inv)))
    gt = cyl.slice_metric(tt, p)
    gd = cyl.slice_metric_dot(tt, p)
    bbc = max(np.max(np.abs(eigh(0.5 * (a + a.T), 0.5 * (b + b.T), eigvals_only=True))) for a, b in zip(gd, gt))
    return float(gh), float(bbc)


def causality_bounds(cyl: CylinderModel, t_values, points=None, fiber_complete: bool = False,
                     growth_tol: float = 0.1, seed: int = 0) -> CausalityReport:
    """Sampled versions of the global hyperbolicity and bbc eigenvalue criteria.

    Bounds are suprema over a sample of the base.  A refined sample that
    raises a bound by more than ``growth_tol`` (relative) leaves the bound
    "not established".
    """
    t_values = np.asarray(t_values, dtype=float)
    a, b = cyl.t_interval
    if np.any(t_values <= a) or np.any(t_values >= b):
        raise ValueError(f"t values must lie in {cyl.t_interval}")
    if points is None:
        coarse = scan_points(cyl.base, lattice=5, n_random=50, seed=seed, max_points=2000)
        fine = scan_points(cyl.base, lattice=9, n_random=200, seed=seed + 1, max_points=8000)
    else:
        coarse = fine = np.asarray(points, dtype=float)
    gh, bbc = [], []
    stable = True
    for t in t_values:
        g0, b0 = slice_bounds(cyl, t, coarse)
        g1, b1 = slice_bounds(cyl, t, fine)
        if g1 > g0 * (1 + growth_tol) + 1e-12 or b1 > b0 * (1 + growth_tol) + 1e-12:
            stable = False
        gh.append(max(g0, g1))
        bbc.append(max(b0, b1))
    gh, bbc = np.array(gh), np.array(bbc)
    finite = bool(np.all(np.isfinite(gh)) and np.all(np.isfinite(bbc)))
    complete_meta = cyl.base.metadata.get("complete", True)
    if cyl.wp is not None:
        complete_meta = cyl.wp.fiber.metadata.get("complete", True)
    if not (finite and stable):
        gh_v = bbc_v = "bound not established"
    elif not (fiber_complete and complete_meta):
        gh_v = bbc_v = "bound established on compactum only"
    else:
        gh_v, bbc_v = "globally hyperbolic", "bbc"
    note = "sampled bounds; completeness is an input assertion"
    if not complete_meta:
        note = "fiber is not complete; bounds hold on the sampled compactum only"
    return CausalityReport(True, t_values, gh, bbc, fiber_complete, gh_v, bbc_v, note)
