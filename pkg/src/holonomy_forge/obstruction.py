"""Codazzi and homothetic-field obstructions on Eguchi-Hanson.

Candidates are written in the left-invariant frame with entries depending
on ``r`` only.  Along ``r`` the frame derivative is ``e_0 = f d_r``; the
other frame vectors are tangent to the spheres and kill radial functions.
The Codazzi equations become a linear system for the entry values on a
Chebyshev grid, and its null space is counted with the holonomy rank policy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import GridTooCoarse
from .holonomy import RANK_GAP, RANK_REL
from .zoo import eh_connection_table, eh_f, eh_gamma

Array = np.ndarray

SYM_INDEX = [(a, b) for a in range(4) for b in range(a, 4)]  # 10 entries: A B C D E F G H I J
ENTRY_NAMES = "ABCDEFGHIJ"
DEFAULT_GRID = (1.3, 3.8)
DEFAULT_NODES = 24


def chebyshev(n: int, lo: float, hi: float) -> tuple:
    """Chebyshev-Lobatto nodes on ``[lo, hi]`` and the matching differentiation matrix."""
    if n < 2:
        raise GridTooCoarse("need at least two nodes")
    k = np.arange(n)
    x = np.cos(np.pi * k / (n - 1))
    c = np.where((k == 0) | (k == n - 1), 2.0, 1.0) * (-1.0) ** k
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    r = lo + 0.5 * (hi - lo) * (1.0 - x)
    return r, -2.0 / (hi - lo) * D


def quadrature_weights(n: int, lo: float, hi: float) -> Array:
    """Clenshaw-Curtis weights for the nodes of :func:`chebyshev`."""
    x = np.cos(np.pi * np.arange(n) / (n - 1))
    V = np.polynomial.chebyshev.chebvander(x, n - 1)
    k = np.arange(n)
    moments = np.where(k % 2 == 0, 2.0 / (1.0 - k ** 2 + (k == 1)), 0.0)
    w = np.linalg.solve(V.T, moments)
    return 0.5 * (hi - lo) * w


def _sym_basis() -> Array:
    """``basis[m]`` is the symmetric 4x4 matrix of entry ``m``."""
    out = np.zeros((10, 4, 4))
    for m, (a, b) in enumerate(SYM_INDEX):
        out[m, a, b] = out[m, b, a] = 1.0
    return out


def codazzi_operator(r: Array, a: float = 1.0) -> tuple:
    """Pointwise maps for ``(nabla_{e_i} W)(e_j) - (nabla_{e_j} W)(e_i)``.

    Returns ``(Mval, Mder)`` of shape ``(N, pairs, 4, 10)``: the residual
    component ``k`` equals ``Mval @ W + Mder @ W'`` with ``W'`` the
    ``r``-derivative of the entries.
    """
    r = np.asarray(r, dtype=float)
    Gam = eh_connection_table(r, a)  # [i, j, k] = <nabla_i e_j, e_k>
    f = eh_f(r, a)
    S = _sym_basis()
    pairs = list(combinations(range(4), 2))
    Mval = np.zeros(r.shape + (len(pairs), 4, 10))
    Mder = np.zeros_like(Mval)
    for p, (i, j) in enumerate(pairs):
        for m in range(10):
            W = S[m]
            # (nabla_i W)(e_j) = sum_k e_i(W_kj) e_k + W_lj Gam[i,l,k] e_k - W_kl Gam[i,j,l] e_k
            val_i = np.einsum("l,...lk->...k", W[:, j], Gam[..., i, :, :]) - np.einsum("...l,kl->...k", Gam[..., i, j, :], W)
            val_j = np.einsum("l,...lk->...k", W[:, i], Gam[..., j, :, :]) - np.einsum("...l,kl->...k", Gam[..., j, i, :], W)
            Mval[..., p, :, m] = val_i - val_j
            # only e_0 differentiates radial entries
            der = np.zeros(r.shape + (4,))
            if i == 0:
                der += f[..., None] * W[:, j]
            if j == 0:
                der -= f[..., None] * W[:, i]
            Mder[..., p, :, m] = der
    return Mval, Mder


def codazzi_system(n: int = DEFAULT_NODES, grid=DEFAULT_GRID, a: float = 1.0) -> tuple:
    """Global constraint matrix on ``n`` nodes; unknowns ordered node-major."""
    r, D = chebyshev(n, *grid)
    Mval, Mder = codazzi_operator(r, a)
    rows = Mval.shape[1] * 4
    L = np.zeros((n * rows, n * 10))
    for s in range(n):
        blk = Mval[s].reshape(rows, 10)
        L[s * rows:(s + 1) * rows, s * 10:(s + 1) * 10] += blk
        der = Mder[s].reshape(rows, 10)
        for t in range(n):
            L[s * rows:(s + 1) * rows, t * 10:(t + 1) * 10] += D[s, t] * der
    # discrete L2 weighting: rows by sqrt(w_s), unknowns by 1/sqrt(w_t)
    sw = np.sqrt(quadrature_weights(n, *grid))
    L = np.repeat(sw, rows)[:, None] * L / np.repeat(sw, 10)[None, :]
    return r, L


def homothetic_system(n: int = DEFAULT_NODES, grid=DEFAULT_GRID, a: float = 1.0) -> tuple:
    """Constraint matrix for ``nabla V = c Id`` with unknowns ``(V at nodes, c)``."""
    r, D = chebyshev(n, *grid)
    Gam = eh_connection_table(r, a)
    f = eh_f(r, a)
    L = np.zeros((n * 16, n * 4 + 1))
    for s in range(n):
        for i in range(4):
            for k in range(4):
                row = s * 16 + i * 4 + k
                # <nabla_i V, e_k> = e_i(V_k) + sum_j V_j Gam[i, j, k]
                L[row, s * 4:(s + 1) * 4] += Gam[s, i, :, k]
                if i == 0:
                    L[row, k::4][: n] += f[s] * D[s]
                if i == k:
                    L[row, -1] = -1.0
    sw = np.sqrt(quadrature_weights(n, *grid))
    L = np.repeat(sw, 16)[:, None] * L
    L[:, :-1] /= np.repeat(sw, 4)[None, :]
    return r, L


def null_space(L: Array, rel: float = RANK_REL, gap: float = RANK_GAP) -> tuple:
    """``(basis columns, singular values, gap ratio)`` of the numerical null space.

    Singular values below ``rel * s_max`` are candidates; the null space is
    cut at the largest ratio between consecutive candidates, which must
    reach ``gap``.  The radial operator has a slowly decaying tail of small
    singular values, so a plain threshold would miscount under refinement.
    """
    _, s, vh = np.linalg.svd(L, full_matrices=True)
    cols = L.shape[1]
    s_full = np.concatenate([s, np.zeros(max(0, cols - len(s)))])
    tiny = np.finfo(float).tiny
    cand = np.flatnonzero(s_full <= rel * s_full[0])
    if cand.size == 0:
        return np.zeros((cols, 0)), s_full, np.inf
    ratios = [(s_full[c - 1] / max(s_full[c], tiny), c) for c in cand if c > 0]
    best, cut = max(ratios)
    if best < gap:
        return np.zeros((cols, 0)), s_full, float(best)
    return vh[cut:].T, s_full, float(best)


@dataclass(frozen=True)
class ObstructionReport:
    verdict: str
    nullity: dict
    identity_residual: float
    constant_residual: float
    gap: float
    homothetic_min_singular: float
    pair_residuals: dict = field(default_factory=dict)
    log: list = field(default_factory=list)


def _entries_matrix(vec: Array) -> Array:
    """Node-major entry vector ``(n*10,)`` to matrices ``(n, 4, 4)``."""
    return np.einsum("nm,mab->nab", vec.reshape(-1, 10), _sym_basis())


def eh_codazzi_obstruction(n: int = DEFAULT_NODES, grid=DEFAULT_GRID, a: float = 1.0,
                           gap: float = RANK_GAP) -> ObstructionReport:
    """Radial Codazzi tensors on EH are constant multiples of the identity.

    Solves the constraint system on ``n`` and ``2n`` nodes; the null space
    must be one-dimensional on both and spanned by the identity.
    """
    lo, hi = grid
    if not lo > a:
        raise ValueError("grid must stay above r = a")
    log = []
    nullity = {}
    gaps = []
    basis = None
    for m in (n, 2 * n):
        r, L = codazzi_system(m, grid, a)
        B, s, ratio = null_space(L, gap=gap)
        nullity[m] = B.shape[1]
        gaps.append(ratio)
        log.append(f"nodes={m} nullity={B.shape[1]} gap={ratio:.3g} smallest={s[-3:].tolist()}")
        if m == n:
            basis = B
    if nullity[n] != nullity[2 * n]:
        raise GridTooCoarse(f"null-space dimension changed under refinement: {nullity}")
    if basis.shape[1] == 1:
        sw = np.sqrt(quadrature_weights(n, *grid))
        W = _entries_matrix(basis[:, 0] / np.repeat(sw, 10))
        W = W / W[0, 0, 0]
        ident = float(np.max(np.abs(W - np.eye(4))))
        const = float(np.max(np.abs(W - W[0])))
    else:
        ident = const = np.inf
    _, Lh = homothetic_system(n, grid, a)
    sh = np.linalg.svd(Lh, compute_uv=False)
    hmin = float(sh[-1])
    verdict = "constants only" if (basis.shape[1] == 1 and ident < 1e-8 and hmin >= 1e-3) else "obstruction not established"
    r_mid = 0.5 * (lo + hi)
    return ObstructionReport(verdict, nullity, ident, const, float(min(gaps)), hmin, pair_displays(r_mid, a), log)


def pair_residual(W: Array, dW: Array, r: float, a: float = 1.0) -> dict:
    """Frame components of the Codazzi defect for each pair at radius ``r``.

    ``W`` and ``dW`` hold the ten entries and their ``r``-derivatives.
    """
    Mval, Mder = codazzi_operator(np.array([r]), a)
    out = Mval[0] @ np.asarray(W, dtype=float) + Mder[0] @ np.asarray(dW, dtype=float)
    return {pair: out[p] for p, pair in enumerate(combinations(range(4), 2))}


def _vec(**entries) -> Array:
    v = np.zeros(10)
    for name, val in entries.items():
        v[ENTRY_NAMES.index(name)] = val
    return v


def pair_displays(r: float, a: float = 1.0, rng: np.random.Generator | None = None) -> dict:
    """Compare the hand-derived pair constraints with the assembled operator.

    Each entry is the largest deviation between the operator output and the
    closed form for random ansatz coefficients.
    """
    rng = rng or np.random.default_rng(0)
    f = float(eh_f(np.array(r), a))
    g = float(eh_gamma(np.array(r), a))
    fr = f / r
    B, E, G, F, K, A, D, J = rng.normal(size=8)
    zero = np.zeros(10)
    out = {}
    # U-antisymmetric part, pair (e1, e2): f/r ((-B + 3G) e1 + (-B - 3G) e2)
    w = _vec(B=B, C=-B, E=E, H=-E, G=G, I=-G)
    res = pair_residual(w, zero, r, a)[(1, 2)]
    out["antisymmetric_e1e2"] = float(np.max(np.abs(res - fr * np.array([0, -B + 3 * G, -B - 3 * G, 0]))))
    # after B = G = 0, pair (e1, e3): E (gamma + 2/(r f)) e2
    w = _vec(E=E, H=-E)
    res = pair_residual(w, zero, r, a)[(1, 3)]
    out["antisymmetric_e1e3"] = float(np.max(np.abs(res - E * (g + 2.0 / (r * f)) * np.array([0, 0, 1, 0]))))
    # U-symmetric part, pair (e1, e2): f/r (2D e0 + (B + 3G) e1 + (-B + 3G) e2 + (2J - 2E) e3)
    w = _vec(A=A, B=B, C=B, D=D, E=E, H=E, F=F, G=G, I=G, J=J)
    res = pair_residual(w, zero, r, a)[(1, 2)]
    out["symmetric_e1e2"] = float(np.max(np.abs(res - fr * np.array([2 * D, B + 3 * G, -B + 3 * G, 2 * J - 2 * E]))))
    # symmetric diag(A, K, K, K) with F in the (1,2) slot, pair (e1, e3): F (-gamma - 2/(r f)) e1
    w = _vec(A=A, E=K, H=K, J=K, F=F)
    res = pair_residual(w, zero, r, a)[(1, 3)]
    out["symmetric_e1e3"] = float(np.max(np.abs(res - F * (-g - 2.0 / (r * f)) * np.array([0, 1, 0, 0]))))
    # diag(A, K, K, K): pairs (e0, e1) and (e0, e3) give e0(K) = f/r (A - K) and e0(K) = gamma (A - K)
    dK = rng.normal()
    w = _vec(A=A, E=K, H=K, J=K)
    dw = _vec(E=dK, H=dK, J=dK)
    prs = pair_residual(w, dw, r, a)
    out["radial_e0e1"] = float(abs(abs(prs[(0, 1)][1]) - abs(f * dK - fr * (A - K))))
    out["radial_e0e3"] = float(abs(abs(prs[(0, 3)][3]) - abs(f * dK - g * (A - K))))
    return out


def averaging_checks(rng: np.random.Generator, n_candidates: int = 3) -> dict:
    """Averaging over the isometry group is idempotent and commutes with the Codazzi defect.

    Candidates are random smooth symmetric fields; the defect is evaluated
    in frame components at ``x`` and its group orbit.
    """
    from .geometry import covariant_derivative
    from .zoo import eguchi_hanson, eh_isometries, sphere_average

    model = eguchi_hanson()
    group = eh_isometries()
    x = np.array([2.0, 0.3, 0.4, -0.5])
    idem = comm = 0.0
    for _ in range(n_candidates):
        P = rng.normal(size=(4, 4, 4))
        Q = rng.normal(size=(4, 4))
        P = P + np.swapaxes(P, 1, 2)
        Q = Q + Q.T

        def comps(y, P=P, Q=Q):
            return Q + 0.1 * np.einsum("...i,iab->...ab", y, P)

        avg = lambda y: sphere_average(comps, y, group)  # noqa: E731
        once = avg(x)
        twice = sphere_average(avg, x, group)
        idem = max(idem, float(np.max(np.abs(once - twice))))

        def defect(field):
            def d(y):
                y = np.atleast_2d(y)
                E = model.frame.vectors(y)

                def endo(z):
                    Ez = model.frame.vectors(z)
                    return Ez @ field(z) @ np.linalg.inv(Ez)

                out = np.zeros(y.shape[:-1] + (4, 4, 4))
                for i in range(4):
                    for j in range(4):
                        Yj = lambda z, j=j: model.frame.vectors(z)[..., :, j]  # noqa: E731
                        WYj = lambda z, j=j: np.einsum("...ab,...b->...a", endo(z), model.frame.vectors(z)[..., :, j])  # noqa: E731
                        nab = covariant_derivative(model, WYj, y, E[..., :, i])
                        corr = np.einsum("...ab,...b->...a", endo(y), covariant_derivative(model, Yj, y, E[..., :, i]))
                        out[..., i, j, :] = np.linalg.solve(E, (nab - corr)[..., None])[..., 0]
                return out - np.swapaxes(out, -2, -3)
            return d

        lhs = defect(avg)(x)[0]
        rhs = sphere_average(lambda y: defect(comps)(y.reshape(-1, 4)).reshape(y.shape[:-1] + (4, 4, 4)), x, group)
        comm = max(comm, float(np.max(np.abs(lhs - rhs))))
    return {"idempotence": idem, "commutation": comm}
