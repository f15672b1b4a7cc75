"""Fixed-step RK4 transport for linear connections along curves.

A connection is described by a vectorised callable ``conn(x)`` returning
``(..., dim, k, k)``: the matrix ``C_a`` for each coordinate direction, so
that a section ``v`` is parallel along ``x(r)`` iff ``dv/dr = -x'^a C_a v``.
The Levi-Civita case uses ``C_a[i, j] = Gamma^i_{aj}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfChart, StepUnderflow
from .geometry import CurvePath, ManifoldModel, TangentVector, christoffel_unchecked

_trapezoid = getattr(np, "trapezoid", None) or np.trapz
STEPS_PER_UNIT = 1000
MAX_STEPS = 64000


@dataclass(frozen=True)
class TransportResult:
    matrix: np.ndarray
    error: float
    steps: int


def _grid(curve: CurvePath, steps_per_unit: float, min_steps: int) -> np.ndarray:
    """Piecewise-uniform parameter grid that contains every break of ``curve``."""
    breaks = np.asarray(curve.breaks, dtype=float)
    pieces = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        mid = np.linspace(a, b, 9)
        length = float(_trapezoid(np.linalg.norm(curve.velocity(mid), axis=-1), mid))
        n = max(min_steps, int(np.ceil(steps_per_unit * length)))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append(np.array([breaks[-1]]))
    return np.concatenate(pieces)


def _chain_product(P: np.ndarray) -> np.ndarray:
    """``P[n-1] @ ... @ P[1] @ P[0]`` by pairwise reduction."""
    while P.shape[0] > 1:
        if P.shape[0] % 2:
            P = np.concatenate([P, np.broadcast_to(np.eye(P.shape[-1], dtype=P.dtype), (1,) + P.shape[1:])])
        P = P[1::2] @ P[0::2]
    return P[0]


def _rk4_product(C0, Ch, C1, v0, vh, v1, h, dtype) -> np.ndarray:
    M0 = -np.einsum("na,naij->nij", v0, C0).astype(dtype)
    Mh = -np.einsum("na,naij->nij", vh, Ch).astype(dtype)
    M1 = -np.einsum("na,naij->nij", v1, C1).astype(dtype)
    eye = np.broadcast_to(np.eye(M0.shape[-1], dtype=dtype), M0.shape)
    hh = h[:, None, None]
    K1 = M0
    K2 = Mh @ (eye + 0.5 * hh * K1)
    K3 = Mh @ (eye + 0.5 * hh * K2)
    K4 = M1 @ (eye + hh * K3)
    return _chain_product(eye + hh / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4))


def _velocities(curve: CurvePath, r0, r1):
    # sampled just inside each step so kinks at breaks stay one-sided
    eps = 1e-12
    h = r1 - r0
    return curve.velocity(r0 + eps * h), curve.velocity(0.5 * (r0 + r1)), curve.velocity(r1 - eps * h)


def _coarse_and_fine(conn, curve: CurvePath, grid: np.ndarray, dtype):
    """RK4 propagators on ``grid`` and on its midpoint refinement.

    The connection is evaluated once per distinct parameter value: the
    coarse steps only use nodes of the refined grid.
    """
    n = len(grid) - 1
    nodes = np.empty(2 * n + 1)
    nodes[0::2] = grid
    nodes[1::2] = 0.5 * (grid[:-1] + grid[1:])
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    C = conn(curve.parametrization(np.concatenate([nodes, mids])))
    Cn, Cm = C[: 2 * n + 1], C[2 * n + 1:]
    coarse = _rk4_product(Cn[0:-1:2], Cn[1::2], Cn[2::2], *_velocities(curve, grid[:-1], grid[1:]),
                          np.diff(grid), dtype)
    fine = _rk4_product(Cn[:-1], Cm, Cn[1:], *_velocities(curve, nodes[:-1], nodes[1:]), np.diff(nodes), dtype)
    return coarse, fine, 2 * n


def transport_matrix(
    conn,
    curve: CurvePath,
    steps_per_unit: float = STEPS_PER_UNIT,
    min_steps: int = 8,
    tol: float | None = None,
    dtype=float,
    max_steps: int = MAX_STEPS,
) -> TransportResult:
    """Propagator of the parallel-transport ODE with a Richardson error estimate.

    The estimate compares the run at ``n`` steps against ``2n`` steps; when
    ``tol`` is given the step count is doubled until the estimate drops below
    it, raising :class:`StepUnderflow` past ``max_steps``.
    """
    spu = float(steps_per_unit)
    while True:
        grid = _grid(curve, spu, min_steps)
        coarse, fine, steps = _coarse_and_fine(conn, curve, grid, dtype)
        err = float(np.max(np.abs(fine - coarse)) / 15.0)
        if tol is None or err <= tol:
            return TransportResult(fine, err, steps)
        if steps >= max_steps:
            raise StepUnderflow(f"transport error {err:.3g} above {tol:.3g} at {steps} steps")
        spu *= 2.0
        min_steps *= 2


def levi_civita_connection(model: ManifoldModel):
    def conn(x):
        if not np.all(model.contains(x, 2.0 * model.fd_step)):
            raise OutOfChart(f"{model.name or 'model'}: curve leaves the chart")
        G = christoffel_unchecked(model, x)  # (..., i, a, j)
        return np.swapaxes(G, -3, -2)  # (..., a, i, j)

    return conn


def tangent_transport_matrix(model: ManifoldModel, curve: CurvePath, **kw) -> TransportResult:
    return transport_matrix(levi_civita_connection(model), curve, **kw)


def parallel_transport(model: ManifoldModel, curve: CurvePath, v0: TangentVector, tol: float | None = None, **kw) -> TangentVector:
    """Transport ``v0`` (chart components) along ``curve`` with the Levi-Civita connection."""
    start = curve.start()
    if not np.allclose(start, v0.basepoint, atol=1e-12):
        raise ValueError("v0 is not based at the start of the curve")
    res = tangent_transport_matrix(model, curve, tol=tol, **kw)
    return TangentVector(curve.end(), res.matrix @ np.asarray(v0.components, dtype=float))


def transport_isometry_defect(model: ManifoldModel, curve: CurvePath, v0, result: TransportResult) -> float:
    """``|g(tau v, tau v) - g(v, v)| / (1 + |g(v, v)|)``."""
    v0 = np.asarray(v0, dtype=float)
    g0 = model.metric(curve.start())
    g1 = model.metric(curve.end())
    v1 = result.matrix @ v0
    a = v0 @ g0 @ v0
    b = v1 @ g1 @ v1
    return float(abs(b - a) / (1.0 + abs(a)))
