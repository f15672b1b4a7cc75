"""Holonomy algebra estimates from loop transports and curvature spans.

Generators are endomorphisms of the tangent space at a basepoint, in chart
components.  Loop generators are principal logarithms of transports around
small plaquettes, either at the basepoint or at remote points conjugated back
along straight lines.  Curvature generators are back-transported curvature
endomorphisms ``tau^{-1} R_q(d_i, d_j) tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import logm

from .errors import AmbiguousRank, LogDivergence, OpenLoop, OutOfChart
from .geometry import CurvePath, ManifoldModel, riemann
from .transport import tangent_transport_matrix

Array = np.ndarray

RANK_REL = 1e-5
RANK_GAP = 10.0
NOISE_FLOOR = 1e-6
PLAQUETTE_SIZES = (0.05, 0.1)
N_REMOTE = 20
REMOTE_RADIUS = 0.5


@dataclass(frozen=True)
class RankInfo:
    rank: int
    singular_values: Array
    gap: float
    threshold: float


def numerical_rank(mats, rel: float = RANK_REL, gap: float = RANK_GAP, floor: float = NOISE_FLOOR,
                   strict: bool = True) -> RankInfo:
    """Rank of the span of ``mats`` with a relative threshold and a gap test."""
    mats = np.asarray(mats, dtype=float)
    if mats.size == 0:
        return RankInfo(0, np.zeros(0), np.inf, floor)
    flat = mats.reshape(len(mats), -1)
    s = np.linalg.svd(flat, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    if smax < floor:
        return RankInfo(0, s, np.inf, floor)
    thr = rel * smax
    r = int(np.sum(s > thr))
    dropped = s[r] if r < len(s) else 0.0
    ratio = float(s[r - 1] / dropped) if dropped > 0 else np.inf
    if strict and ratio < gap:
        raise AmbiguousRank(f"singular-value gap {ratio:.3g} below {gap:g} at rank {r}", s)
    return RankInfo(r, s, ratio, thr)


def span_basis(mats, rank: int) -> Array:
    """Frobenius-orthonormal basis of the leading ``rank`` directions."""
    mats = np.asarray(mats, dtype=float)
    d = mats.shape[-1]
    if rank == 0:
        return np.zeros((0, d, d))
    _, _, vt = np.linalg.svd(mats.reshape(len(mats), -1), full_matrices=False)
    return vt[:rank].reshape(rank, d, d)


@dataclass(frozen=True)
class HolonomyEstimate:
    basepoint: Array
    generators: Array
    dimension: int
    singular_values: Array
    method: str
    gap: float
    basis: Array
    metric: Array

    def skew_residual(self) -> float:
        return skew_residual(self.generators, self.metric)

    def closure_residual(self) -> float:
        return closure_residual(self.basis)


def skew_residual(gens: Array, g: Array) -> float:
    """``max |g B + B^T g| / |B|`` over generators."""
    if len(gens) == 0:
        return 0.0
    gB = np.einsum("ij,njk->nik", g, gens)
    num = np.abs(gB + np.swapaxes(gB, -1, -2)).max(axis=(1, 2))
    den = np.abs(gens).max(axis=(1, 2)) + 1e-300
    return float(np.max(num / den))


def closure_residual(basis: Array) -> float:
    """Distance of basis brackets from the span, relative to the bracket size."""
    k = len(basis)
    if k < 2:
        return 0.0
    flat = basis.reshape(k, -1)
    worst = 0.0
    for i, j in combinations(range(k), 2):
        br = (basis[i] @ basis[j] - basis[j] @ basis[i]).ravel()
        nb = np.linalg.norm(br)
        if nb < 1e-14:
            continue
        proj = flat.T @ (flat @ br)
        worst = max(worst, float(np.linalg.norm(br - proj) / nb))
    return worst


def subspace_gap(a: Array, b: Array) -> float:
    """Largest distance of a unit vector of span ``a`` from span ``b`` (Frobenius bases)."""
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return 1.0
    A = a.reshape(len(a), -1)
    B = b.reshape(len(b), -1)
    s = np.linalg.svd(A @ B.T, compute_uv=False)
    return float(np.sqrt(max(0.0, 1.0 - np.min(s) ** 2))) if len(a) == len(b) else 1.0


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class RemoteSample:
    point: Array
    transport: Array  # base -> point


def remote_points(model: ManifoldModel, basepoint, n: int = N_REMOTE, radius: float = REMOTE_RADIUS,
                  seed: int = 0, margin: float = 0.12) -> Array:
    """Seeded points within ``radius`` of the basepoint whose straight segments stay in the chart."""
    rng = np.random.default_rng(seed)
    base = np.asarray(basepoint, dtype=float)
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 200 * n:
            raise OutOfChart("could not place remote points around the basepoint")
        d = rng.normal(size=model.dim)
        q = base + radius * rng.uniform(0.3, 1.0) * d / np.linalg.norm(d)
        seg = base + np.linspace(0, 1, 9)[:, None] * (q - base)
        if np.all(model.contains(seg, margin)):
            out.append(q)
    return np.array(out)


def remote_samples(model: ManifoldModel, basepoint, points: Array) -> list:
    return [RemoteSample(q, tangent_transport_matrix(model, CurvePath.line(basepoint, q)).matrix) for q in points]


def _loop_log(model: ManifoldModel, loop: CurvePath) -> Array:
    if not loop.closed or not np.allclose(loop.start(), loop.end(), atol=1e-12):
        raise OpenLoop("loop does not close")
    tau = tangent_transport_matrix(model, loop).matrix
    dist = np.linalg.norm(tau - np.eye(len(tau)), 2)
    if dist >= 1.0:
        raise LogDivergence(f"transport is {dist:.3g} from the identity")
    L = logm(tau)
    if np.max(np.abs(np.imag(L))) > 1e-8:
        raise LogDivergence("matrix logarithm is not real")
    return np.real(L)


def _plaquette_area_and_loop(model, q, i, j, h):
    loop = CurvePath.plaquette(q, i, j, h)
    corners = q + np.array([[0, 0], [h, 0], [h, h], [0, h]]) @ np.eye(model.dim)[[i, j]]
    if not np.all(model.contains(corners, 2.0 * model.fd_step)):
        return None, None
    return h * h, loop


def loop_holonomy(model: ManifoldModel, basepoint, sizes: Sequence[float] = PLAQUETTE_SIZES,
                  n_remote: int = N_REMOTE, radius: float = REMOTE_RADIUS, planes_per_remote: int = 3,
                  remote_size: float | None = None, seed: int = 0, loops: Sequence[CurvePath] | None = None,
                  remote: list | None = None, strict: bool = True) -> HolonomyEstimate:
    """Generators ``log(tau_loop)/area`` from plaquettes at and around the basepoint."""
    base = np.asarray(basepoint, dtype=float)
    gens = []
    if loops is not None:
        for lp in loops:
            if not np.allclose(lp.start(), base, atol=1e-12):
                raise OpenLoop("loop does not start at the basepoint")
            gens.append(_loop_log(model, lp))
    else:
        for h in sizes:
            for i, j in combinations(range(model.dim), 2):
                area, lp = _plaquette_area_and_loop(model, base, i, j, h)
                if lp is not None:
                    gens.append(_loop_log(model, lp) / area)
        if remote is None and n_remote:
            remote = remote_samples(model, base, remote_points(model, base, n_remote, radius, seed))
        rng = np.random.default_rng([seed, 1])
        planes = list(combinations(range(model.dim), 2))
        hr = remote_size or max(sizes)
        for smp in remote or []:
            for k in rng.choice(len(planes), size=min(planes_per_remote, len(planes)), replace=False):
                i, j = planes[k]
                area, lp = _plaquette_area_and_loop(model, smp.point, i, j, hr)
                if lp is None:
                    continue
                Lq = _loop_log(model, lp) / area
                gens.append(np.linalg.solve(smp.transport, Lq @ smp.transport))
    gens = np.array(gens)
    info = numerical_rank(gens, strict=strict)
    return HolonomyEstimate(base, gens, info.rank, info.singular_values, "loop-sampling", info.gap,
                            span_basis(gens, info.rank), model.metric(base))


def curvature_endomorphisms(model: ManifoldModel, q) -> Array:
    """``R_q(d_i, d_j)`` for ``i < j`` as matrices, shape ``(..., pairs, d, d)``."""
    R = riemann(model, q).riemann
    return np.stack([R[..., :, :, i, j] for i, j in combinations(range(model.dim), 2)], axis=-3)


def ambrose_singer_span(model: ManifoldModel, basepoint, n_remote: int = N_REMOTE, radius: float = REMOTE_RADIUS,
                        seed: int = 0, remote: list | None = None, strict: bool = True) -> HolonomyEstimate:
    """Span of basepoint curvature and back-transported remote curvature."""
    base = np.asarray(basepoint, dtype=float)
    if remote is None and n_remote:
        remote = remote_samples(model, base, remote_points(model, base, n_remote, radius, seed))
    remote = remote or []
    gens = [curvature_endomorphisms(model, base)]
    if remote:
        pts = np.array([r.point for r in remote])
        Rq = curvature_endomorphisms(model, pts)
        for smp, R in zip(remote, Rq):
            gens.append(np.linalg.solve(smp.transport[None], R @ smp.transport[None]))
    gens = np.concatenate(gens)
    info = numerical_rank(gens, strict=strict)
    return HolonomyEstimate(base, gens, info.rank, info.singular_values, "ambrose-singer", info.gap,
                            span_basis(gens, info.rank), model.metric(base))


@dataclass(frozen=True)
class HolonomyComparison:
    loop: HolonomyEstimate
    curvature: HolonomyEstimate
    ranks_agree: bool
    subspace_gap: float

    @property
    def dimension(self) -> int:
        return self.loop.dimension


def estimate_holonomy(model: ManifoldModel, basepoint, n_remote: int = N_REMOTE, radius: float = REMOTE_RADIUS,
                      seed: int = 0, **loop_kw) -> HolonomyComparison:
    """Both estimates on a shared set of remote points."""
    base = np.asarray(basepoint, dtype=float)
    remote = remote_samples(model, base, remote_points(model, base, n_remote, radius, seed)) if n_remote else []
    lp = loop_holonomy(model, base, n_remote=0, remote=remote, seed=seed, **loop_kw)
    cv = ambrose_singer_span(model, base, n_remote=0, remote=remote, seed=seed)
    return HolonomyComparison(lp, cv, lp.dimension == cv.dimension, subspace_gap(lp.basis, cv.basis))


# ---------------------------------------------------------------------------
# block structure


@dataclass(frozen=True)
class InvariantSubspace:
    name: str
    basis: Array  # columns
    dimension: int
    degenerate: bool
    invariance_residual: float


@dataclass(frozen=True)
class BlockClassification:
    stabilized_vector: Optional[Array]
    invariant_subspaces: list
    blocks: dict
    verdict: str
    pattern_residual: float = float("nan")
    candidates_checked: int = 0
    notes: list = field(default_factory=list)


def _orth(V: Array, tol: float = 1e-9) -> Array:
    if V.size == 0:
        return V.reshape(V.shape[0], 0)
    u, s, _ = np.linalg.svd(V, full_matrices=False)
    return u[:, s > tol * max(1.0, s[0] if s.size else 1.0)]


def invariance_residual(basis: Array, V: Array) -> float:
    """``max |(1 - Pi_V) B V| / |B|`` with the Euclidean projector ``Pi_V``."""
    Q = _orth(V)
    if Q.shape[1] == 0 or len(basis) == 0:
        return 0.0
    Pi = Q @ Q.T
    out = 0.0
    for B in basis:
        nB = np.linalg.norm(B, 2)
        if nB == 0:
            continue
        out = max(out, float(np.linalg.norm((np.eye(len(B)) - Pi) @ B @ Q, 2) / nB))
    return out


def is_degenerate(V: Array, g: Array, tol: float = 1e-8) -> bool:
    Q = _orth(V)
    G = Q.T @ g @ Q
    s = np.linalg.svd(G, compute_uv=False)
    return bool(s.size and s[-1] < tol * max(1.0, s[0]))


def common_kernel(basis: Array, tol: float = 1e-6) -> Array:
    d = basis.shape[-1]
    if len(basis) == 0:
        return np.eye(d)
    stack = basis.reshape(-1, d)
    _, s, vt = np.linalg.svd(stack)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    s_full = np.concatenate([s, np.zeros(d - len(s))]) if len(s) < d else s
    return vt[s_full < tol * scale].T


def classify_blocks(est: HolonomyEstimate, g: Array | None = None, P: Array | None = None,
                    adapted: Array | None = None, groups: Sequence[Sequence[int]] | None = None,
                    tol: float = 1e-6) -> BlockClassification:
    """Invariant-subspace classification of an estimated holonomy algebra.

    ``adapted`` is a basis ``(P, A v_1, ..., A v_m, Q)`` as columns and
    ``groups`` lists the column indices of each fiber factor.  Candidate
    subspaces are unions of adapted blocks, ``P^perp``, and the sums of
    generator images and intersections of kernels.
    """
    g = est.metric if g is None else np.asarray(g, dtype=float)
    d = g.shape[0]
    basis = est.basis
    if est.dimension == 0:
        return BlockClassification(None, [], {}, "flat/trivial", notes=["every subspace is invariant"])

    ker = common_kernel(basis, tol)
    stabilized = None
    notes = []
    if P is not None:
        P = np.asarray(P, dtype=float)
        res = max(np.linalg.norm(B @ P) / np.linalg.norm(B, 2) for B in basis) / np.linalg.norm(P)
        if res <= tol:
            stabilized = P
        else:
            notes.append(f"P not annihilated (residual {res:.3g})")
    elif ker.shape[1] == 1:
        stabilized = ker[:, 0]

    candidates = []
    if ker.shape[1]:
        candidates.append(("kernel", ker))
    if stabilized is not None:
        candidates.append(("R P", stabilized[:, None]))
        gp = g @ stabilized
        _, _, vt = np.linalg.svd(gp[None, :])
        candidates.append(("P^perp", vt[1:].T))
    images = _orth(np.concatenate([B for B in basis], axis=1))
    if 0 < images.shape[1] < d:
        candidates.append(("image", images))
    for k, B in enumerate(basis):
        candidates.append((f"image[{k}]", _orth(B)))
        candidates.append((f"kernel[{k}]", common_kernel(B[None], tol)))
    if adapted is not None and groups:
        blocks = [("P", [0])] + [(f"F{i}", list(gr)) for i, gr in enumerate(groups)] + [("Q", [d - 1])]
        for r in range(1, len(blocks)):
            for combo in combinations(range(len(blocks)), r):
                cols = [c for k in combo for c in blocks[k][1]]
                name = "+".join(blocks[k][0] for k in combo)
                candidates.append((name, adapted[:, cols]))

    found = []
    for name, V in candidates:
        Q = _orth(V)
        k = Q.shape[1]
        if k == 0 or k == d:
            continue
        res = invariance_residual(basis, Q)
        if res <= tol:
            found.append(InvariantSubspace(name, Q, k, is_degenerate(Q, g), res))

    if any(not s.degenerate for s in found):
        verdict = "decomposable"
    elif found:
        verdict = "weakly-irreducible"
    else:
        verdict = "irreducible"

    blocks_out = {}
    pattern = float("nan")
    if adapted is not None and groups:
        Vinv = np.linalg.inv(adapted)
        Bs = np.array([Vinv @ B @ adapted for B in basis])
        scale = np.max(np.abs(Bs))
        mask = np.zeros((d, d), dtype=bool)
        for gr in groups:
            gr = list(gr)
            mask[0, gr] = True
            mask[np.ix_(gr, gr)] = True
            mask[gr, d - 1] = True
        pattern = float(np.max(np.abs(Bs[:, ~mask])) / scale)
        for i, gr in enumerate(groups):
            gr = list(gr)
            h_i = Bs[:, gr][:, :, gr]
            m_i = Bs[:, 0, gr]
            blocks_out[f"h{i}"] = numerical_rank(h_i, strict=False).rank
            blocks_out[f"m{i}"] = numerical_rank(m_i[:, :, None], strict=False).rank
            blocks_out[f"m{i}_norm"] = float(np.max(np.abs(m_i)))
    return BlockClassification(stabilized, found, blocks_out, verdict, pattern, len(candidates), notes)


# ---------------------------------------------------------------------------
# m_i probe on cylinders


def m_nonvanishing_probe(cyl, factor: Sequence[int], n_geodesics: int = 4, length: float = 0.5,
                         seed: int = 0, basepoint=None) -> dict:
    """Projection of back-transported curvature onto ``R P ^ A T F_i``.

    ``factor`` lists the fiber coordinates of factor ``i``.  Along fiber
    geodesics ``delta = (0, 0, gamma)`` the ``P``-row entries of
    ``tau^{-1} R^C(X, Y) tau`` in the adapted basis are compared with
    ``-2 g_F(gamma'(1), R^F(X, Y) tau^F v_j)``.
    """
    from .cylinder import adapted_basis, fiber_geodesic_curve
    from .transport import tangent_transport_matrix as ttm
    from .warped import orthonormal_basis

    F = cyl.wp.fiber
    m = F.dim
    rng = np.random.default_rng(seed)
    q0 = np.asarray(basepoint, dtype=float) if basepoint is not None else None
    if q0 is None:
        x0 = 0.5 * (F.lower + F.upper)
        q0 = np.concatenate([[0.0, 0.0], x0])
    x0 = q0[2:]
    gF0 = F.metric(x0)
    vb = orthonormal_basis(gF0)
    V = adapted_basis(cyl, q0, vb)
    Vinv = np.linalg.inv(V)
    cols = [1 + j for j in factor]  # v_j with the block-diagonal Cholesky basis of a product
    worst, value = 0.0, 0.0
    for _ in range(n_geodesics):
        v0 = rng.normal(size=m)
        v0 *= length / np.sqrt(v0 @ gF0 @ v0)
        delta = fiber_geodesic_curve(cyl, x0, v0)
        tau = ttm(cyl.model, delta).matrix
        q1 = delta.end()
        x1 = q1[2:]
        tauF = ttm(F, CurvePath(lambda r: delta.parametrization(r)[..., 2:],
                                lambda r: delta.velocity(r)[..., 2:])).matrix
        gam_dot = delta.velocity(np.array([1.0]))[0, 2:]
        RF = riemann(F, x1[None])
        RC = riemann(cyl.model, q1[None])
        for _ in range(2):
            X, Y = rng.normal(size=m), rng.normal(size=m)
            Xc = np.concatenate([[0.0, 0.0], X])
            Yc = np.concatenate([[0.0, 0.0], Y])
            op = RC.operator(Xc[None], Yc[None])[0]
            B = Vinv @ np.linalg.solve(tau, op @ tau) @ V
            got = B[0, cols]
            RFop = RF.operator(X[None], Y[None])[0]
            gF1 = F.metric(x1)
            expect = np.array([-2.0 * gam_dot @ gF1 @ (RFop @ (tauF @ vb[:, j])) for j in factor])
            value = max(value, float(np.max(np.abs(got))))
            worst = max(worst, float(np.max(np.abs(got - expect))))
    return {"value": value, "formula_residual": worst}
