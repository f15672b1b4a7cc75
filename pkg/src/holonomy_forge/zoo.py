"""Concrete fixtures: flat spaces, spheres, cones, products and Eguchi-Hanson."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .geometry import FrameField, ManifoldModel, fd_gradient
from .warped import EndomorphismField, _centre, constant_field

Array = np.ndarray


def _const_metric(M: Array):
    M = np.asarray(M, dtype=float)
    return lambda x: np.broadcast_to(M, np.shape(x)[:-1] + M.shape).copy()


def _zero_derivative(dim: int):
    return lambda x: np.zeros(np.shape(x)[:-1] + (dim, dim, dim))


def _identity_frame(dim: int) -> FrameField:
    return FrameField(
        _const_metric(np.eye(dim)),
        tuple([1.0] * dim),
        lambda x: np.zeros(np.shape(x)[:-1] + (dim, dim, dim)),
    )


def flat(dim: int = 3, half_width: float = 1.0) -> ManifoldModel:
    """Euclidean space on the box ``[-w, w]^dim``."""
    return ManifoldModel(
        dim=dim,
        metric=_const_metric(np.eye(dim)),
        lower=np.full(dim, -half_width),
        upper=np.full(dim, half_width),
        signature=(dim, 0),
        name=f"R^{dim}",
        metric_derivative=_zero_derivative(dim),
        frame=_identity_frame(dim),
        metadata={"flat": True, "complete": True},
    )


def flat_torus(dim: int = 3, period: float = 2 * np.pi) -> ManifoldModel:
    """Flat torus presented on one fundamental box."""
    m = flat(dim)
    return ManifoldModel(
        dim=dim,
        metric=m.metric,
        lower=np.zeros(dim),
        upper=np.full(dim, period),
        signature=(dim, 0),
        name=f"T^{dim}",
        metric_derivative=m.metric_derivative,
        frame=m.frame,
        metadata={"flat": True, "complete": True},
    )


def round_sphere(radius: float = 1.0, margin: float = 0.3) -> ManifoldModel:
    """Round 2-sphere in coordinates ``(theta, phi)``."""
    R2 = radius * radius

    def metric(x):
        th = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = R2
        out[..., 1, 1] = R2 * np.sin(th) ** 2
        return out

    def dmetric(x):
        th = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 0, 1, 1] = 2.0 * R2 * np.sin(th) * np.cos(th)
        return out

    def vectors(x):
        th = x[..., 0]
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0 / radius
        out[..., 1, 1] = 1.0 / (radius * np.sin(th))
        return out

    def commutators(x):
        th = x[..., 0]
        c = np.zeros(x.shape[:-1] + (2, 2, 2))
        # [e_th, e_ph] = -(cot th / R) e_ph
        val = -np.cos(th) / (np.sin(th) * radius)
        c[..., 0, 1, 1] = val
        c[..., 1, 0, 1] = -val
        return c

    return ManifoldModel(
        dim=2,
        metric=metric,
        lower=np.array([margin, -np.pi]),
        upper=np.array([np.pi - margin, np.pi]),
        signature=(2, 0),
        name=f"S^2({radius:g})",
        metric_derivative=dmetric,
        frame=FrameField(vectors, (1.0, 1.0), commutators),
        metadata={"sectional_curvature": 1.0 / R2, "complete": True},
    )


# ---------------------------------------------------------------------------
# cones


def cone(link: ManifoldModel | None = None, r_range=(0.5, 2.0)) -> ManifoldModel:
    """``(r, y) -> dr^2 + r^2 g_N(y)``; the unit round sphere link gives flat space."""
    N = link if link is not None else round_sphere()
    n = N.dim

    def metric(x):
        r, y = x[..., 0], x[..., 1:]
        out = np.zeros(x.shape[:-1] + (n + 1, n + 1))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = (r * r)[..., None, None] * N.metric(y)
        return out

    dN = N.metric_derivative

    def dmetric(x):
        r, y = x[..., 0], x[..., 1:]
        out = np.zeros(x.shape[:-1] + (n + 1, n + 1, n + 1))
        out[..., 0, 1:, 1:] = 2.0 * r[..., None, None] * N.metric(y)
        if dN is not None:
            out[..., 1:, 1:, 1:] = (r * r)[..., None, None, None] * dN(y)
        else:
            out[..., 1:, 1:, 1:] = (r * r)[..., None, None, None] * fd_gradient(N.metric, y, N.fd_step, n)
        return out

    frame = None
    if N.frame is not None:
        def vectors(x):
            r, y = x[..., 0], x[..., 1:]
            out = np.zeros(x.shape[:-1] + (n + 1, n + 1))
            out[..., 0, 0] = 1.0
            out[..., 1:, 1:] = N.frame.vectors(y) / r[..., None, None]
            return out

        commutators = None
        if N.frame.commutators is not None:
            def commutators(x):
                r, y = x[..., 0], x[..., 1:]
                c = np.zeros(x.shape[:-1] + (n + 1, n + 1, n + 1))
                c[..., 1:, 1:, 1:] = N.frame.commutators(y) / r[..., None, None, None]
                for a in range(1, n + 1):
                    c[..., 0, a, a] = -1.0 / r
                    c[..., a, 0, a] = 1.0 / r
                return c

        frame = FrameField(vectors, (1.0,) + tuple(N.frame.signs), commutators)

    unit_sphere = link is None
    return ManifoldModel(
        dim=n + 1,
        metric=metric,
        lower=np.concatenate([[r_range[0]], N.lower]),
        upper=np.concatenate([[r_range[1]], N.upper]),
        signature=(n + 1, 0),
        name=f"C({N.name})",
        metric_derivative=dmetric,
        frame=frame,
        scale=1.0,
        metadata={"flat": unit_sphere, "complete": False},
    )


def cone_codazzi(model: ManifoldModel) -> EndomorphismField:
    """``T = nabla d_r``; in the cone chart ``T = diag(0, 1/r, ..., 1/r)``."""
    n = model.dim

    def matrix(x):
        r = np.asarray(x)[..., 0]
        out = np.zeros(np.shape(x)[:-1] + (n, n))
        for a in range(1, n):
            out[..., a, a] = 1.0 / r
        return out

    return EndomorphismField(matrix, model, "nabla d_r")


# ---------------------------------------------------------------------------
# Hessian Codazzi tensors


def flat_hessian_codazzi(h: Callable[[Array], Array], model: ManifoldModel | None = None,
                         hessian: Callable[[Array], Array] | None = None, dim: int | None = None) -> EndomorphismField:
    """``T = nabla grad h`` on flat space; nested central differences when no Hessian is supplied."""
    if model is None:
        model = flat(dim or 3)
    if hessian is None:
        step = 10.0 * model.fd_step

        def grad(x):
            return fd_gradient(h, x, step, model.dim)

        def hessian(x):
            H = fd_gradient(grad, x, step, model.dim)
            return 0.5 * (H + np.swapaxes(H, -1, -2))

    return EndomorphismField(hessian, model, "Hess h")


def cubic_hessian_fixture(dim: int = 3):
    """``h = x_1^3 + x_1 x_2^2 / 2 + x_3^2`` with its analytic Hessian."""

    def h(x):
        out = x[..., 0] ** 3 + 0.5 * x[..., 0] * x[..., 1] ** 2
        if dim > 2:
            out = out + x[..., 2] ** 2
        return out

    def hess(x):
        H = np.zeros(np.shape(x)[:-1] + (dim, dim))
        H[..., 0, 0] = 6.0 * x[..., 0]
        H[..., 0, 1] = H[..., 1, 0] = x[..., 1]
        H[..., 1, 1] = x[..., 0]
        if dim > 2:
            H[..., 2, 2] = 2.0
        return H

    return h, hess


# ---------------------------------------------------------------------------
# products


def product_model(factors: Sequence[ManifoldModel], lambdas: Sequence[float] | None = None):
    """Riemannian product and ``T = sum_i lambda_i Id_{F_i}``."""
    factors = list(factors)
    if not factors:
        raise ValueError("product needs at least one factor")
    lambdas = [1.0] * len(factors) if lambdas is None else list(lambdas)
    if len(lambdas) != len(factors):
        raise ValueError("one lambda per factor")
    dims = [F.dim for F in factors]
    offs = np.concatenate([[0], np.cumsum(dims)])
    n = int(offs[-1])
    sl = [slice(int(offs[i]), int(offs[i + 1])) for i in range(len(factors))]

    def metric(x):
        out = np.zeros(x.shape[:-1] + (n, n))
        for F, s in zip(factors, sl):
            out[..., s, s] = F.metric(x[..., s])
        return out

    def dmetric(x):
        out = np.zeros(x.shape[:-1] + (n, n, n))
        for F, s in zip(factors, sl):
            y = x[..., s]
            d = F.metric_derivative(y) if F.metric_derivative is not None else fd_gradient(F.metric, y, F.fd_step, F.dim)
            out[..., s, s, s] = d
        return out

    def inside(x):
        ok = np.ones(x.shape[:-1], dtype=bool)
        for F, s in zip(factors, sl):
            if F.inside is not None:
                ok &= np.asarray(F.inside(x[..., s]), dtype=bool)
        return ok

    frame = None
    if all(F.frame is not None for F in factors):
        def vectors(x):
            out = np.zeros(x.shape[:-1] + (n, n))
            for F, s in zip(factors, sl):
                out[..., s, s] = F.frame.vectors(x[..., s])
            return out

        commutators = None
        if all(F.frame.commutators is not None for F in factors):
            def commutators(x):
                c = np.zeros(x.shape[:-1] + (n, n, n))
                for F, s in zip(factors, sl):
                    c[..., s, s, s] = F.frame.commutators(x[..., s])
                return c

        signs = tuple(v for F in factors for v in F.frame.signs)
        frame = FrameField(vectors, signs, commutators)

    model = ManifoldModel(
        dim=n,
        metric=metric,
        lower=np.concatenate([F.lower for F in factors]),
        upper=np.concatenate([F.upper for F in factors]),
        signature=(n, 0),
        name=" x ".join(F.name for F in factors),
        metric_derivative=dmetric,
        frame=frame,
        inside=inside if any(F.inside is not None for F in factors) else None,
        scale=min(F.scale for F in factors),
        metadata={"factor_dims": tuple(dims), "flat_factors": tuple(bool(F.metadata.get("flat")) for F in factors),
                  "basepoint": np.concatenate([_centre(F) for F in factors])},
    )
    T = constant_field(model, np.diag(np.concatenate([np.full(d, lam, dtype=float) for d, lam in zip(dims, lambdas)])), "sum lambda_i Id")
    return model, T


# ---------------------------------------------------------------------------
# Eguchi-Hanson

L_X = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)
L_Y = np.array([[0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
L_Z = np.array([[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]], dtype=float)


def eh_f(r, a: float = 1.0):
    return np.sqrt(1.0 - (a / r) ** 4)


def eh_gamma(r, a: float = 1.0):
    """``gamma = f' + f/r = 2/(r f) - f/r``."""
    f = eh_f(r, a)
    return 2.0 / (r * f) - f / r


def eh_commutator_table(r, a: float = 1.0, gamma_shift: float = 0.0) -> Array:
    """``c[..., a, b, c]`` with ``[e_a, e_b] = c^c_ab e_c`` for the Eguchi-Hanson frame."""
    r = np.asarray(r, dtype=float)
    f = eh_f(r, a)
    g = eh_gamma(r, a) + gamma_shift
    c = np.zeros(r.shape + (4, 4, 4))
    entries = {
        (0, 1, 1): -f / r,
        (0, 2, 2): -f / r,
        (0, 3, 3): -g,
        (1, 2, 3): -2.0 * f / r,
        (1, 3, 2): 2.0 / (r * f),
        (2, 3, 1): -2.0 / (r * f),
    }
    for (i, j, k), v in entries.items():
        c[..., i, j, k] = v
        c[..., j, i, k] = -v
    return c


def eh_connection_table(r, a: float = 1.0) -> Array:
    """Closed-form ``<nabla_{e_i} e_j, e_k>`` for the Eguchi-Hanson frame."""
    r = np.asarray(r, dtype=float)
    f = eh_f(r, a)
    g = eh_gamma(r, a)
    Gam = np.zeros(r.shape + (4, 4, 4))
    fr = f / r
    entries = {
        (1, 0, 1): fr, (1, 1, 0): -fr, (1, 2, 3): -fr, (1, 3, 2): fr,
        (2, 0, 2): fr, (2, 1, 3): fr, (2, 2, 0): -fr, (2, 3, 1): -fr,
        (3, 0, 3): g, (3, 1, 2): -g, (3, 2, 1): g, (3, 3, 0): -g,
    }
    for idx, v in entries.items():
        Gam[(...,) + idx] = v
    return Gam


EH_BASEPOINT = np.array([2.0, 0.3, 0.4, -0.5])


def eguchi_hanson(a: float = 1.0, r_range=(1.2, 4.0), gamma_shift: float = 0.0) -> ManifoldModel:
    """Eguchi-Hanson metric on a Cartesian chart of ``R^4`` minus a ball.

    The metric is ``h_a = dr^2 / f^2 + r^2 (sx^2 + sy^2) + r^2 f^2 sz^2`` with
    the left-invariant forms ``sigma`` realised through the complex
    structures ``L_X, L_Y, L_Z``.  ``gamma_shift`` corrupts the analytic
    commutator table only, never the metric.
    """
    r_lo, r_hi = r_range
    if not a > 0 or r_lo <= a:
        raise ValueError("need a > 0 and r_range above a")

    def metric(x):
        r2 = np.sum(x * x, axis=-1)
        u = a ** 4 / r2 ** 2
        z = x @ L_Z  # L_Z^T x
        xx = np.einsum("...i,...j->...ij", x, x)
        zz = np.einsum("...i,...j->...ij", z, z)
        return np.eye(4) + (u / (1.0 - u) / r2)[..., None, None] * xx - (u / r2)[..., None, None] * zz

    def vectors(x):
        r = np.linalg.norm(x, axis=-1)
        f = eh_f(r, a)
        out = np.empty(x.shape[:-1] + (4, 4))
        out[..., :, 0] = x * (f / r)[..., None]
        out[..., :, 1] = (x @ L_X) / r[..., None]
        out[..., :, 2] = (x @ L_Y) / r[..., None]
        out[..., :, 3] = (x @ L_Z) / (r * f)[..., None]
        return out

    def commutators(x):
        return eh_commutator_table(np.linalg.norm(x, axis=-1), a, gamma_shift)

    def inside(x):
        r = np.linalg.norm(x, axis=-1)
        return (r >= r_lo) & (r <= r_hi)

    return ManifoldModel(
        dim=4,
        metric=metric,
        lower=np.full(4, -r_hi),
        upper=np.full(4, r_hi),
        signature=(4, 0),
        name=f"EH(a={a:g})",
        frame=FrameField(vectors, (1.0, 1.0, 1.0, 1.0), commutators),
        inside=inside,
        metadata={"a": a, "r_range": tuple(r_range), "complete": True, "holonomy": "SU(2)", "gamma_shift": gamma_shift,
                  "basepoint": EH_BASEPOINT * (a if a > 0 else 1.0)},
    )


def eh_sample_points(rng: np.random.Generator, n: int, r_range=(1.3, 3.8)) -> Array:
    """Points with radius uniform in ``r_range`` and uniform direction."""
    d = rng.normal(size=(n, 4))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(*r_range, size=n)
    return d * r[:, None]


def _commutant_basis() -> Array:
    """Antisymmetric 4x4 matrices commuting with ``L_X, L_Y, L_Z``."""
    basis = []
    for i in range(4):
        for j in range(i + 1, 4):
            B = np.zeros((4, 4))
            B[i, j], B[j, i] = 1.0, -1.0
            basis.append(B)
    rows = np.concatenate([np.stack([(B @ L - L @ B).ravel() for B in basis], axis=1) for L in (L_X, L_Y, L_Z)])
    _, s, vt = np.linalg.svd(rows)
    null = vt[np.sum(s > 1e-10):]
    return np.einsum("kn,nij->kij", null, np.array(basis))


def eh_isometry_generators() -> Array:
    """Unit-quaternion generators ``R_1, R_2, R_3 = R_1 R_2`` of the commutant ``su(2)``."""
    X = _commutant_basis()
    R1 = X[0] / np.sqrt(np.sum(X[0] ** 2) / 4.0)
    X2 = X[1] - np.sum(X[1] * R1) / np.sum(R1 * R1) * R1
    R2 = X2 / np.sqrt(np.sum(X2 ** 2) / 4.0)
    return np.array([R1, R2, R1 @ R2])


def binary_icosahedral() -> Array:
    """The 120 unit quaternions of the binary icosahedral group."""
    from itertools import permutations, product

    phi = 0.5 * (1.0 + np.sqrt(5.0))
    out = []
    for i in range(4):
        for s in (1.0, -1.0):
            q = np.zeros(4)
            q[i] = s
            out.append(q)
    for signs in product((0.5, -0.5), repeat=4):
        out.append(np.array(signs))
    base = np.array([0.0, 0.5, 0.5 * phi, 0.5 / phi])
    even = [p for p in permutations(range(4)) if _parity(p) == 0]
    for p in even:
        for signs in product((1.0, -1.0), repeat=3):
            v = base.copy()
            v[1:] *= signs
            out.append(v[list(p)])
    Q = np.unique(np.round(np.array(out), 12), axis=0)
    return Q


def _parity(p) -> int:
    p = list(p)
    par = 0
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            par ^= p[i] > p[j]
    return int(par)


def eh_isometries() -> Array:
    """120 orthogonal maps preserving the Eguchi-Hanson metric and frame."""
    R = eh_isometry_generators()
    Q = binary_icosahedral()
    return Q[:, 0, None, None] * np.eye(4) + np.einsum("na,aij->nij", Q[:, 1:], R)


def sphere_average(field_components: Callable[[Array], Array], x, group: Array | None = None) -> Array:
    """Average frame components of ``field_components`` over the orbit of ``x``.

    The isometries commute with the frame, so frame components at ``Qx``
    are the components of the pulled-back field at ``x``.
    """
    group = eh_isometries() if group is None else group
    x = np.asarray(x, dtype=float)
    pts = np.einsum("nij,...j->...ni", group, x)
    return np.mean(field_components(pts), axis=x.ndim - 1)
