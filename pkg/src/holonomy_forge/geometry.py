"""Charts, metrics, Levi-Civita connection and curvature by finite differences.

Every callable attached to a model is vectorised: it takes an array of
points with shape ``(..., dim)`` and returns the value with matching leading
axes.  Index conventions used throughout the package:

* ``christoffel(...)[..., k, i, j]`` is ``Gamma^k_{ij}``.
* ``riemann[..., l, k, i, j]`` is ``R^l_{kij}`` with
  ``R(d_i, d_j) d_k = R^l_{kij} d_l`` and
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MissingFrame, OutOfChart, SingularMetric

Array = np.ndarray
PointFn = Callable[[Array], Array]

#: Global sign of the curvature operator.  Flipping it changes every
#: curvature evaluation at once; it is never adjusted per formula.
CURVATURE_SIGN = 1.0

DEFAULT_TOL = 1e-6
DEFAULT_CURVATURE_TOL = 1e-4
SINGULAR_COND = 1e12

# 4th-order central difference stencil for a first derivative
_D1_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_D1_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
# sixth-order rule for second derivatives of strongly warped metrics
_D1_OFFSETS6 = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
_D1_WEIGHTS6 = np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0


@dataclass(frozen=True)
class FrameField:
    """Point-dependent frame ``e_a``; ``vectors(x)[..., :, a]`` is ``e_a``.

    ``commutators(x)[..., a, b, c]`` are the structure functions ``c^c_ab``
    with ``[e_a, e_b] = c^c_ab e_c``.
    """

    vectors: PointFn
    signs: tuple
    commutators: Optional[PointFn] = None


@dataclass(frozen=True)
class ManifoldModel:
    dim: int
    metric: PointFn
    lower: Array
    upper: Array
    signature: tuple
    name: str = ""
    metric_derivative: Optional[PointFn] = None
    frame: Optional[FrameField] = None
    inside: Optional[Callable[[Array], Array]] = None
    scale: float = 1.0
    metadata: dict = field(default_factory=dict)

    @property
    def fd_step(self) -> float:
        return 1e-4 * self.scale

    @property
    def curvature_step(self) -> float:
        return 2e-3 * self.scale

    def contains(self, p, margin: float = 0.0) -> Array:
        p = np.asarray(p, dtype=float)
        ok = np.all((p >= self.lower + margin) & (p <= self.upper - margin), axis=-1)
        if self.inside is not None:
            ok = ok & np.asarray(self.inside(p), dtype=bool)
        return ok

    def require_inside(self, p, margin: float | None = None) -> Array:
        p = np.asarray(p, dtype=float)
        if margin is None:
            margin = 2.0 * self.fd_step
        if not np.all(self.contains(p, margin)):
            raise OutOfChart(f"{self.name or 'model'}: point outside chart domain with margin {margin:g}")
        return p

    def sample_points(self, rng: np.random.Generator, n: int, margin: float = 0.05) -> Array:
        """Uniform rejection samples inside the chart, ``margin`` away from its box."""
        out = []
        lo = self.lower + margin
        hi = self.upper - margin
        while sum(len(o) for o in out) < n:
            cand = rng.uniform(lo, hi, size=(max(4 * n, 16), self.dim))
            out.append(cand[self.contains(cand, margin)])
        return np.concatenate(out)[:n]

    def eta(self) -> Array:
        p, q = self.signature
        return np.diag([-1.0] * q + [1.0] * p) if q else np.eye(self.dim)


@dataclass(frozen=True)
class TangentVector:
    basepoint: Array
    components: Array
    basis: str = "chart"  # "chart" or "frame"


@dataclass(frozen=True)
class CurvePath:
    """Curve ``r in [0, 1] -> x(r)``; ``breaks`` lists parameter values of kinks."""

    parametrization: Callable[[Array], Array]
    velocity: Callable[[Array], Array]
    closed: bool = False
    breaks: tuple = (0.0, 1.0)

    def start(self) -> Array:
        return self.parametrization(np.array([0.0]))[0]

    def end(self) -> Array:
        return self.parametrization(np.array([1.0]))[0]

    def coordinate_length(self, samples: int = 257) -> float:
        r = np.linspace(0.0, 1.0, samples)
        v = self.velocity(r)
        trapezoid = getattr(np, "trapezoid", None) or np.trapz
        return float(trapezoid(np.linalg.norm(v, axis=-1), r))

    def velocity_residual(self, samples: int = 33, h: float = 1e-5) -> float:
        """Max gap between ``velocity`` and a central difference of the parametrization."""
        r = np.linspace(2 * h, 1 - 2 * h, samples)
        for b in self.breaks[1:-1]:
            r = r[np.abs(r - b) > 2 * h]
        fd = (self.parametrization(r + h) - self.parametrization(r - h)) / (2 * h)
        return float(np.max(np.abs(fd - self.velocity(r))))

    @staticmethod
    def polyline(points, closed: bool = False) -> "CurvePath":
        pts = np.asarray(points, dtype=float)
        if closed and not np.allclose(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[:1]])
        seg = np.diff(pts, axis=0)
        lengths = np.linalg.norm(seg, axis=1)
        total = lengths.sum()
        if total == 0.0:
            cum = np.linspace(0.0, 1.0, len(pts))
        else:
            cum = np.concatenate([[0.0], np.cumsum(lengths) / total])
        # zero-length pieces get no parameter range
        def locate(r):
            r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
            idx = np.searchsorted(cum, r, side="right") - 1
            idx = np.clip(idx, 0, len(seg) - 1)
            width = cum[idx + 1] - cum[idx]
            return idx, width

        def param(r):
            r = np.asarray(r, dtype=float)
            idx, width = locate(r)
            frac = np.where(width > 0, (np.clip(r, 0, 1) - cum[idx]) / np.where(width > 0, width, 1), 0.0)
            return pts[idx] + frac[..., None] * seg[idx]

        def vel(r):
            idx, width = locate(r)
            return seg[idx] / np.where(width > 0, width, 1.0)[..., None]

        return CurvePath(param, vel, closed=closed, breaks=tuple(np.unique(cum)))

    @staticmethod
    def line(a, b) -> "CurvePath":
        return CurvePath.polyline([a, b])

    @staticmethod
    def plaquette(base, i: int, j: int, h: float) -> "CurvePath":
        """Closed square of side ``h`` in the (x_i, x_j) coordinate plane."""
        base = np.asarray(base, dtype=float)
        ei = np.zeros_like(base)
        ej = np.zeros_like(base)
        ei[i] = h
        ej[j] = h
        return CurvePath.polyline([base, base + ei, base + ei + ej, base + ej, base], closed=True)

    def reversed(self) -> "CurvePath":
        return CurvePath(
            lambda r: self.parametrization(1.0 - np.asarray(r)),
            lambda r: -self.velocity(1.0 - np.asarray(r)),
            closed=self.closed,
            breaks=tuple(sorted(1.0 - np.asarray(self.breaks))),
        )


@dataclass(frozen=True)
class CurvatureSample:
    basepoint: Array
    riemann: Array
    ricci: Array
    scalar: Array
    metric: Array

    def operator(self, X, Y) -> Array:
        """Matrix of ``R(X, Y)`` acting on chart components."""
        return np.einsum("...lkij,...i,...j->...lk", self.riemann, X, Y)

    def apply(self, X, Y, Z) -> Array:
        return np.einsum("...lk,...k->...l", self.operator(X, Y), Z)

    def lowered(self) -> Array:
        """``R_{mkij} = g_{ml} R^l_{kij}``."""
        return np.einsum("...ml,...lkij->...mkij", self.metric, self.riemann)

    def ricci_endomorphism(self) -> Array:
        return np.linalg.solve(self.metric, self.ricci)

    def symmetry_residuals(self) -> dict:
        R = self.riemann
        low = self.lowered()
        scale = 1.0 + np.max(np.abs(R))
        bianchi = R + np.einsum("...lijk->...lkij", R) + np.einsum("...ljki->...lkij", R)
        return {
            "antisymmetry": float(np.max(np.abs(R + np.swapaxes(R, -1, -2))) / scale),
            "bianchi": float(np.max(np.abs(bianchi)) / scale),
            "pair_symmetry": float(np.max(np.abs(low - np.einsum("...ijmk->...mkij", low))) / scale),
            "ricci_symmetry": float(np.max(np.abs(self.ricci - np.swapaxes(self.ricci, -1, -2))) / scale),
        }


def _stencil(p: Array, h: float, dim: int, offsets: Array = _D1_OFFSETS) -> Array:
    """Points ``p + o*h*e_k`` with shape ``(..., dim, len(offsets), dim)``."""
    eye = np.eye(dim)
    offs = offsets[:, None] * h
    return p[..., None, None, :] + eye[:, None, :] * offs[None, :, :]


def fd_gradient(fn: PointFn, p: Array, h: float, dim: int, order: int = 4) -> Array:
    """Central differences of ``fn`` (order 4 or 6); result has shape ``(..., dim, *value_shape)``."""
    offsets, weights = (_D1_OFFSETS, _D1_WEIGHTS) if order == 4 else (_D1_OFFSETS6, _D1_WEIGHTS6)
    pts = _stencil(p, h, dim, offsets)
    vals = fn(pts)  # (..., dim, k, *value)
    extra = vals.ndim - (p.ndim - 1) - 2
    w = weights.reshape((len(weights),) + (1,) * extra)
    return np.sum(vals * w, axis=p.ndim) / h


def metric_derivative(model: ManifoldModel, p: Array) -> Array:
    """``dg[..., k, i, j] = d_k g_ij``."""
    if model.metric_derivative is not None:
        return model.metric_derivative(p)
    return fd_gradient(model.metric, p, model.fd_step, model.dim)


def _inverse_metric(model: ManifoldModel, g: Array) -> Array:
    with np.errstate(all="ignore"):
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError:
            raise SingularMetric(f"{model.name or 'model'}: metric is singular") from None
        # 1-norm condition number, reusing the inverse
        cond = np.abs(g).sum(axis=-2).max(axis=-1) * np.abs(ginv).sum(axis=-2).max(axis=-1)
    if np.any(~np.isfinite(cond)) or np.any(cond > SINGULAR_COND):
        raise SingularMetric(f"{model.name or 'model'}: metric condition number {np.max(cond):.3g}")
    return ginv


def christoffel_unchecked(model: ManifoldModel, p: Array) -> Array:
    g = model.metric(p)
    dg = metric_derivative(model, p)
    ginv = _inverse_metric(model, g)
    # Gamma_{l i j} = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    low = 0.5 * (np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg)
    return np.einsum("...kl,...lij->...kij", ginv, low)


def christoffel(model: ManifoldModel, p) -> Array:
    """Levi-Civita coefficients ``Gamma^k_ij`` at ``p`` (batched)."""
    p = model.require_inside(p)
    return christoffel_unchecked(model, p)


def covariant_derivative(model: ManifoldModel, field: PointFn, p, X) -> Array:
    """``nabla_X Y`` for a vector field ``Y`` given by chart components."""
    p = model.require_inside(p)
    X = np.asarray(X, dtype=float)
    dY = fd_gradient(field, p, model.fd_step, model.dim)  # (..., k, i)
    G = christoffel_unchecked(model, p)
    Y = field(p)
    return np.einsum("...k,...ki->...i", X, dY) + np.einsum("...ikj,...k,...j->...i", G, X, Y)


def riemann(model: ManifoldModel, p) -> CurvatureSample:
    """Riemann, Ricci and scalar curvature by differentiating the Christoffel field."""
    p = model.require_inside(p, margin=3.0 * model.curvature_step + 2.0 * model.fd_step)
    G = christoffel_unchecked(model, p)
    dG = fd_gradient(lambda x: christoffel_unchecked(model, x), p, model.curvature_step, model.dim, order=6)
    # dG[..., a, l, b, k] = d_a Gamma^l_{bk}
    term1 = np.einsum("...iljk->...lkij", dG)
    term2 = np.einsum("...jlik->...lkij", dG)
    term3 = np.einsum("...lim,...mjk->...lkij", G, G)
    term4 = np.einsum("...ljm,...mik->...lkij", G, G)
    R = CURVATURE_SIGN * (term1 - term2 + term3 - term4)
    ricci = np.einsum("...ikij->...kj", R)
    g = model.metric(p)
    scalar = np.einsum("...kj,...kj->...", np.linalg.inv(g), ricci)
    return CurvatureSample(basepoint=p, riemann=R, ricci=ricci, scalar=scalar, metric=g)


def lie_bracket(model: ManifoldModel, X: PointFn, Y: PointFn, p) -> Array:
    """``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`` by finite differences."""
    p = model.require_inside(p)
    dX = fd_gradient(X, p, model.fd_step, model.dim)
    dY = fd_gradient(Y, p, model.fd_step, model.dim)
    return np.einsum("...j,...ji->...i", X(p), dY) - np.einsum("...j,...ji->...i", Y(p), dX)


def _frame(model: ManifoldModel) -> FrameField:
    if model.frame is None:
        raise MissingFrame(f"{model.name or 'model'} has no frame")
    return model.frame


def frame_field(model: ManifoldModel, a: int) -> PointFn:
    fr = _frame(model)
    return lambda x: fr.vectors(x)[..., :, a]


def numerical_commutators(model: ManifoldModel, p) -> Array:
    """Structure functions ``c^c_ab`` obtained from finite-difference brackets."""
    fr = _frame(model)
    p = model.require_inside(p)
    E = fr.vectors(p)
    dE = fd_gradient(fr.vectors, p, model.fd_step, model.dim)  # (..., k, i, a)
    # [e_a, e_b]^i = e_a^k d_k e_b^i - e_b^k d_k e_a^i
    dEa = np.einsum("...ka,...kib->...iab", E, dE)
    br = dEa - np.swapaxes(dEa, -1, -2)
    coeff = np.linalg.solve(E[..., None, None, :, :], np.moveaxis(br, -3, -1)[..., None])[..., 0]
    # coeff[..., a, b, c]
    return coeff


def frame_commutators(model: ManifoldModel, p) -> Array:
    fr = _frame(model)
    if fr.commutators is not None:
        return fr.commutators(np.asarray(p, dtype=float))
    return numerical_commutators(model, p)


def koszul_table(signs, c: Array) -> Array:
    """``Gam[..., i, j, k] = <nabla_{e_i} e_j, e_k>`` from structure functions.

    Uses ``2<nabla_i e_j, e_k> = -<e_i,[e_j,e_k]> - <e_j,[e_i,e_k]> + <e_k,[e_i,e_j]>``
    for a frame with constant inner products ``signs``.
    """
    eps = np.asarray(signs, dtype=float)
    # <e_m, [e_a, e_b]> = eps_m c^m_ab -> T[..., a, b, m]
    T = c * eps
    t1 = np.einsum("...jki->...ijk", T)
    t2 = np.einsum("...ikj->...ijk", T)
    t3 = T  # [..., i, j, k]
    return 0.5 * (-t1 - t2 + t3)


def frame_connection_table(model: ManifoldModel, p) -> Array:
    fr = _frame(model)
    return koszul_table(fr.signs, frame_commutators(model, p))


def frame_connection(model: ManifoldModel, i: int, j: int, k: int, p) -> Array:
    """``<nabla_{e_i} e_j, e_k>`` via the Koszul formula."""
    return frame_connection_table(model, p)[..., i, j, k]


def chart_frame_connection(model: ManifoldModel, p) -> Array:
    """Same table as :func:`frame_connection_table`, computed from chart Christoffels."""
    fr = _frame(model)
    p = model.require_inside(p)
    E = fr.vectors(p)
    dE = fd_gradient(fr.vectors, p, model.fd_step, model.dim)
    G = christoffel_unchecked(model, p)
    g = model.metric(p)
    # nabla_{e_i} e_j = e_i^k d_k e_j + Gamma(e_i, e_j)
    D = np.einsum("...ki,...klj->...lij", E, dE) + np.einsum("...lkm,...ki,...mj->...lij", G, E, E)
    return np.einsum("...lij,...lm,...mk->...ijk", D, g, E)


def connection_one_form(model: ManifoldModel, p) -> Array:
    """``omega[..., mu, a, b] = g(nabla_{d_mu} e_a, e_b)`` for the model's frame."""
    fr = _frame(model)
    p = model.require_inside(p)
    return _connection_one_form_unchecked(model, fr, p)


def _connection_one_form_unchecked(model, fr, p):
    E = fr.vectors(p)
    dE = fd_gradient(fr.vectors, p, model.fd_step, model.dim)  # (..., mu, i, a)
    G = christoffel_unchecked(model, p)
    g = model.metric(p)
    D = dE + np.einsum("...imk,...ka->...mia", G, E)  # (..., mu, i, a)
    return np.einsum("...mia,...ij,...jb->...mab", D, g, E)


def frame_orthonormality_residual(model: ManifoldModel, p) -> float:
    fr = _frame(model)
    p = np.asarray(p, dtype=float)
    E = fr.vectors(p)
    gram = np.einsum("...ia,...ij,...jb->...ab", E, model.metric(p), E)
    return float(np.max(np.abs(gram - np.diag(np.asarray(fr.signs, dtype=float)))))


def metric_residuals(model: ManifoldModel, p) -> dict:
    """Symmetry, signature and analytic-derivative consistency at ``p``."""
    p = np.asarray(p, dtype=float)
    g = model.metric(p)
    out = {"symmetry": float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))}
    ev = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    neg = np.sum(ev < 0, axis=-1)
    out["signature_ok"] = bool(np.all(neg == model.signature[1]))
    if model.metric_derivative is not None:
        fd = fd_gradient(model.metric, p, model.fd_step, model.dim)
        out["derivative"] = float(np.max(np.abs(fd - model.metric_derivative(p))))
    return out


def metric_compatibility_residual(model: ManifoldModel, p) -> float:
    """``max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|``."""
    p = model.require_inside(p)
    G = christoffel_unchecked(model, p)
    g = model.metric(p)
    dg = metric_derivative(model, p)
    res = dg - np.einsum("...lki,...lj->...kij", G, g) - np.einsum("...lkj,...il->...kij", G, g)
    return float(np.max(np.abs(res)))


def cholesky_frame(metric: PointFn) -> PointFn:
    """Smooth orthonormal frame ``E = L^{-T}`` from ``g = L L^T`` (Riemannian only)."""

    def vectors(x):
        L = np.linalg.cholesky(metric(x))
        eye = np.broadcast_to(np.eye(L.shape[-1]), L.shape)
        return np.swapaxes(np.linalg.solve(L, eye), -1, -2)

    return vectors


def with_frame(model: ManifoldModel, frame: FrameField) -> ManifoldModel:
    return ManifoldModel(
        dim=model.dim,
        metric=model.metric,
        lower=model.lower,
        upper=model.upper,
        signature=model.signature,
        name=model.name,
        metric_derivative=model.metric_derivative,
        frame=frame,
        inside=model.inside,
        scale=model.scale,
        metadata=model.metadata,
    )


def ensure_frame(model: ManifoldModel) -> ManifoldModel:
    """Attach a Cholesky frame to a Riemannian model lacking one."""
    if model.frame is not None:
        return model
    if model.signature[1] != 0:
        raise MissingFrame("automatic frames are only built for Riemannian models")
    return with_frame(model, FrameField(cholesky_frame(model.metric), tuple([1.0] * model.dim)))


def default_basepoint(model: ManifoldModel) -> Array:
    """``metadata["basepoint"]`` when present, otherwise the centre of the chart box."""
    p = model.metadata.get("basepoint")
    p = 0.5 * (model.lower + model.upper) if p is None else np.asarray(p, dtype=float)
    if not model.contains(p):
        raise OutOfChart(f"{model.name or 'model'}: no usable default basepoint")
    return np.array(p, dtype=float)


def geodesic(model: ManifoldModel, p0, v0, steps: int = 400) -> CurvePath:
    """Geodesic ``r -> exp_p0(r v0)`` for ``r in [0, 1]`` by RK4, with cubic Hermite output."""
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    h = 1.0 / steps

    def rhs(y):
        x, v = y[: model.dim], y[model.dim:]
        G = christoffel(model, x)
        return np.concatenate([v, -np.einsum("kij,i,j->k", G, v, v)])

    ys = np.empty((steps + 1, 2 * model.dim))
    ys[0] = np.concatenate([p0, v0])
    for n in range(steps):
        y = ys[n]
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        ys[n + 1] = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    xs, vs = ys[:, : model.dim], ys[:, model.dim:]

    def _hermite(r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        idx = np.minimum((r / h).astype(int), steps - 1)
        u = (r - idx * h) / h
        x0, x1, m0, m1 = xs[idx], xs[idx + 1], vs[idx] * h, vs[idx + 1] * h
        u = u[..., None]
        pos = (2 * u**3 - 3 * u**2 + 1) * x0 + (u**3 - 2 * u**2 + u) * m0 + (-2 * u**3 + 3 * u**2) * x1 + (u**3 - u**2) * m1
        vel = ((6 * u**2 - 6 * u) * x0 + (3 * u**2 - 4 * u + 1) * m0 + (-6 * u**2 + 6 * u) * x1 + (3 * u**2 - 2 * u) * m1) / h
        return pos, vel

    return CurvePath(lambda r: _hermite(r)[0], lambda r: _hermite(r)[1])
