"""Clifford modules, spinor connections, Killing and Codazzi spinors, Dirac currents.

One module ``Delta_{1,n}`` serves a Riemannian ``n``-manifold and its
Lorentzian cylinder.  The Lorentzian Clifford action ``gamma_a`` satisfies
``gamma_a gamma_b + gamma_b gamma_a = -2 eta_ab`` with ``eta = diag(-1, 1, ...)``,
and the Riemannian action is ``kappa_j = i gamma_0 gamma_j``.
Spinor components are always taken in an orthonormal frame of the model.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .errors import (
    OutOfChart,
    DimTooLarge,
    HolonomyObstruction,
    MissingFrame,
    NonParallelFiber,
    NotCodazzi,
    SingularA,
    VanishingSpinor,
)
from .geometry import (
    CurvePath,
    FrameField,
    ManifoldModel,
    _connection_one_form_unchecked,
    default_basepoint,
    ensure_frame,
    fd_gradient,
    riemann,
    with_frame,
)
from .transport import transport_matrix

Array = np.ndarray

MAX_CLIFFORD_DIM = 10
BATCH_STEPS_PER_UNIT = 100


# ---------------------------------------------------------------------------
# Clifford algebra

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def hermitian_generators(N: int) -> Array:
    """``N`` Hermitian matrices with ``G_a G_b + G_b G_a = 2 delta_ab`` (Jordan-Wigner)."""
    m = N // 2
    gens = []
    for k in range(m):
        pre = [_Z] * k
        post = [_I2] * (m - k - 1)
        gens.append(_kron_all(pre + [_X] + post))
        gens.append(_kron_all(pre + [_Y] + post))
    if N % 2:
        prod = np.eye(2 ** m, dtype=complex)
        for G in gens:
            prod = prod @ G
        gens.append((1j ** m) * prod)
    if m == 0:
        gens = [np.eye(1, dtype=complex)] if N == 1 else []
    return np.array(gens)


@dataclass(frozen=True)
class CliffordRep:
    p: int
    q: int
    gammas: Array  # (p+q, d, d); timelike generators first
    eta: Array

    @property
    def module_dim(self) -> int:
        return self.gammas.shape[-1]

    @property
    def n(self) -> int:
        """Number of spacelike directions."""
        return self.p

    @property
    def gamma0(self) -> Array:
        return self.gammas[0]

    @property
    def kappas(self) -> Array:
        """Riemannian action ``kappa_j = i gamma_0 gamma_j`` of ``Cl_n`` (needs ``q = 1``)."""
        if self.q != 1:
            raise ValueError("kappa needs one timelike direction")
        return np.array([1j * self.gamma0 @ g for g in self.gammas[1:]])

    def clifford(self, x) -> Array:
        """``x .`` for frame components ``x`` (Lorentzian action)."""
        return np.einsum("...a,aij->...ij", np.asarray(x), self.gammas)

    def kappa(self, x) -> Array:
        """``x *`` for spatial frame components ``x``."""
        return np.einsum("...a,aij->...ij", np.asarray(x), self.kappas)

    def ip0(self, u, v) -> Array:
        """``<u, v>_0 = sum u conj(v)``."""
        return np.einsum("...i,...i->...", u, np.conj(v))

    def ip1(self, u, v) -> Array:
        """``<u, v>_1 = <gamma_0 u, v>_0``."""
        return self.ip0(np.einsum("ij,...j->...i", self.gamma0, u), v)

    def relation_residual(self) -> float:
        G = self.gammas
        anti = np.einsum("aij,bjk->abik", G, G) + np.einsum("bij,ajk->abik", G, G)
        expect = -2.0 * np.einsum("ab,ik->abik", self.eta, np.eye(self.module_dim))
        return float(np.max(np.abs(anti - expect)))

    def kappa_relation_residual(self) -> float:
        K = self.kappas
        anti = np.einsum("aij,bjk->abik", K, K) + np.einsum("bij,ajk->abik", K, K)
        expect = -2.0 * np.einsum("ab,ik->abik", np.eye(len(K)), np.eye(self.module_dim))
        return float(np.max(np.abs(anti - expect)))

    def volume_element(self) -> Array:
        """``c kappa_1 ... kappa_n`` normalised to square to the identity."""
        w = np.eye(self.module_dim, dtype=complex)
        for K in self.kappas:
            w = w @ K
        sq = (w @ w)[0, 0]
        return w / np.sqrt(sq)

    def parity_projector(self, sign: int) -> Array:
        """Projector onto the ``sign`` eigenspace of the volume element (odd ``n`` only)."""
        if self.n % 2 == 0:
            raise ValueError("the volume element is central only for odd n")
        return 0.5 * (np.eye(self.module_dim) + sign * self.volume_element())


def clifford_rep(p: int, q: int = 1) -> CliffordRep:
    """Complex representation of the Clifford algebra of signature ``(p, q)``.

    Timelike generators are Hermitian with square ``+1``; spacelike ones are
    ``i`` times Hermitian with square ``-1``.
    """
    N = p + q
    if N > MAX_CLIFFORD_DIM:
        raise DimTooLarge(f"p + q = {N} exceeds {MAX_CLIFFORD_DIM}")
    if N == 0:
        raise ValueError("empty signature")
    H = hermitian_generators(N)
    gammas = np.array([H[a] if a < q else 1j * H[a] for a in range(N)])
    eta = np.diag([-1.0] * q + [1.0] * p)
    rep = CliffordRep(p, q, gammas, eta)
    assert rep.relation_residual() < 1e-12
    return rep


def hat(rep: CliffordRep, u) -> Array:
    """``u -> e_0 . u``."""
    return np.einsum("ij,...j->...i", rep.gamma0, u)


# ---------------------------------------------------------------------------
# spinor connections


def _frame_of(model: ManifoldModel) -> FrameField:
    if model.frame is None:
        raise MissingFrame(f"{model.name or 'model'} has no frame")
    return model.frame


def action_matrices(model: ManifoldModel, rep: CliffordRep) -> Array:
    """Clifford action of the frame vectors: ``kappa`` on Riemannian, ``gamma`` on Lorentzian models."""
    if model.signature[1] == 0:
        mats = rep.kappas
    else:
        mats = rep.gammas
    if len(mats) != model.dim:
        raise ValueError(f"Clifford module has {len(mats)} generators, model has dimension {model.dim}")
    return mats


def spin_matrices(omega: Array, signs, cliff: Array) -> Array:
    """``Omega = 1/4 sum_ab eps_a eps_b omega_ab c_a c_b`` for ``omega[..., a, b]``."""
    eps = np.asarray(signs, dtype=float)
    w = omega * eps[:, None] * eps[None, :]
    cc = np.einsum("aij,bjk->abik", cliff, cliff)
    return 0.25 * np.einsum("...ab,abik->...ik", w, cc)


def spinor_connection(model: ManifoldModel, rep: CliffordRep):
    """``conn(x)[..., mu]`` is ``Omega_mu``; parallel spinors solve ``d psi = -Omega psi``."""
    fr = _frame_of(model)
    cliff = action_matrices(model, rep)

    def conn(x):
        x = np.asarray(x, dtype=float)
        omega = _connection_one_form_unchecked(model, fr, x)  # (..., mu, a, b)
        return spin_matrices(omega, fr.signs, cliff)

    return conn


def frame_components(model: ManifoldModel, x, X) -> Array:
    """Frame components ``E^{-1} X`` of chart vectors ``X``."""
    E = _frame_of(model).vectors(np.asarray(x, dtype=float))
    return np.linalg.solve(E, np.asarray(X, dtype=float)[..., None])[..., 0]


def codazzi_connection(model: ManifoldModel, rep: CliffordRep, A=None, mu: float = 1.0):
    """Connection ``D_X = nabla_X - i mu A(X) *``; ``A = None`` means the identity."""
    base = spinor_connection(model, rep)
    fr = _frame_of(model)
    K = action_matrices(model, rep)

    def conn(x):
        x = np.asarray(x, dtype=float)
        Om = base(x)
        E = fr.vectors(x)
        M = np.eye(model.dim) if A is None else A(x)
        F = np.linalg.solve(E, M)  # (..., a, mu): frame components of A(d_mu)
        return Om - 1j * mu * np.einsum("...am,aij->...mij", F, K)

    return conn


# ---------------------------------------------------------------------------
# transport


def batched_line_transport(conn, base, targets, steps: int | None = None,
                           steps_per_unit: float = BATCH_STEPS_PER_UNIT, psi0=None) -> Array:
    """Transport along straight segments ``base -> targets`` with one shared step count.

    Sharing the step count makes the integration error a smooth function of
    the endpoint, so finite differences of transported fields stay accurate.
    Returns matrices ``(K, d, d)``, or vectors when ``psi0`` is given.
    """
    base = np.asarray(base, dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    v = targets - base
    if steps is None:
        steps = max(8, int(np.ceil(steps_per_unit * np.max(np.linalg.norm(v, axis=-1)))))
    h = 1.0 / steps
    C0 = conn(base[None])[0]
    d = C0.shape[-1]
    K = len(targets)
    if psi0 is None:
        Y = np.broadcast_to(np.eye(d, dtype=complex), (K, d, d)).copy()
    else:
        Y = np.broadcast_to(np.asarray(psi0, dtype=complex)[:, None], (K, d, 1)).copy()

    def M(r):
        x = base + r * v
        return -np.einsum("ka,kaij->kij", v, conn(x))

    Ma = M(0.0)
    for k in range(steps):
        r0 = k * h
        Mh = M(r0 + 0.5 * h)
        Mb = M(r0 + h)
        K1 = Ma @ Y
        K2 = Mh @ (Y + 0.5 * h * K1)
        K3 = Mh @ (Y + 0.5 * h * K2)
        K4 = Mb @ (Y + h * K3)
        Y = Y + h / 6.0 * (K1 + 2 * K2 + 2 * K3 + K4)
        Ma = Mb
    return Y if psi0 is None else Y[..., 0]


def loop_fixed_space(conn, model: ManifoldModel, base, size: float = 0.1, remote: int = 6, radius: float = 0.4,
                     seed: int = 0, tol: float = 1e-8) -> tuple:
    """Common fixed vectors of transports around plaquettes at and near ``base``.

    Returns ``(basis columns, singular values)`` of the stacked ``tau - 1``.
    """
    from .holonomy import remote_points

    base = np.asarray(base, dtype=float)
    rows = []
    for i, j in combinations(range(model.dim), 2):
        lp = CurvePath.plaquette(base, i, j, size)
        rows.append(transport_matrix(conn, lp, dtype=complex).matrix - np.eye(_dim_of(conn, base)))
    if remote:
        rng = np.random.default_rng([seed, 7])
        pts = remote_points(model, base, remote, radius, seed)
        planes = list(combinations(range(model.dim), 2))
        for q in pts:
            i, j = planes[rng.integers(len(planes))]
            e = np.eye(model.dim)
            loop = CurvePath.polyline([base, q, q + size * e[i], q + size * (e[i] + e[j]), q + size * e[j], q, base],
                                      closed=True)
            rows.append(transport_matrix(conn, loop, dtype=complex).matrix - np.eye(_dim_of(conn, base)))
    stack = np.concatenate(rows)
    _, s, vh = np.linalg.svd(stack)
    d = stack.shape[1]
    s_full = np.concatenate([s, np.zeros(d - len(s))])
    return np.conj(vh[s_full < tol]).T, s


def _dim_of(conn, base) -> int:
    return conn(np.asarray(base, dtype=float)[None]).shape[-1]


# ---------------------------------------------------------------------------
# spinor fields


@dataclass(frozen=True)
class SpinorField:
    """Frame components ``values(p)`` of a spinor on ``model``."""

    model: ManifoldModel
    rep: CliffordRep
    values: Callable[[Array], Array]
    parity: str = "full"
    step: Optional[float] = None

    def __call__(self, p) -> Array:
        return self.values(np.asarray(p, dtype=float))

    @property
    def fd_step(self) -> float:
        return self.step if self.step is not None else 1e-3 * self.model.scale


def transported_field(model: ManifoldModel, rep: CliffordRep, conn, base, psi0, parity: str = "full",
                      steps_per_unit: float = BATCH_STEPS_PER_UNIT) -> SpinorField:
    """Spinor field ``p -> tau(base -> p) psi0`` along straight segments."""
    base = np.asarray(base, dtype=float)
    psi0 = np.asarray(psi0, dtype=complex)

    def values(p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, model.dim)
        r = np.linspace(0.0, 1.0, 17)[:, None, None]
        if not np.all(model.contains(base + r * (flat - base))):
            raise OutOfChart("a straight segment from the base leaves the chart")
        # one shared step count for the whole batch
        out = batched_line_transport(conn, base, flat, steps_per_unit=steps_per_unit, psi0=psi0)
        return out.reshape(p.shape[:-1] + (len(psi0),))

    return SpinorField(model, rep, values, parity)


def spinor_covariant_derivative(field: SpinorField, p, X=None) -> Array:
    """``nabla_X psi`` in frame components; all chart directions when ``X`` is ``None``.

    Field values at the whole stencil are requested in one batch.
    """
    model = field.model
    p = model.require_inside(p, margin=3.0 * field.fd_step)
    h = field.fd_step
    dpsi = fd_gradient(field.values, p, h, model.dim)  # (..., mu, i)
    psi = field(p)
    Om = spinor_connection(model, field.rep)(p)  # (..., mu, i, j)
    nab = dpsi + np.einsum("...mij,...j->...mi", Om, psi)
    if X is None:
        return nab
    return np.einsum("...m,...mi->...i", np.asarray(X, dtype=float), nab)


def codazzi_spinor_residual(field: SpinorField, A=None, points=None, mu: float = 1.0) -> dict:
    """``max |nabla_X psi - i mu A(X) * psi|`` over frame directions, plus recovery of ``A``."""
    model = field.model
    p = np.asarray(points, dtype=float)
    psi = field(p)
    norm2 = np.real(field.rep.ip0(psi, psi))
    if np.any(norm2 < 1e-14):
        raise VanishingSpinor("spinor vanishes at a sample point")
    nab = spinor_covariant_derivative(field, p)  # chart directions
    E = _frame_of(model).vectors(p)
    nabE = np.einsum("...ma,...mi->...ai", E, nab)  # along frame vectors
    K = action_matrices(model, field.rep)
    Amat = np.broadcast_to(np.eye(model.dim), p.shape[:-1] + (model.dim, model.dim)) if A is None else A(p)
    F = np.linalg.solve(E, Amat @ E)  # frame matrix of A
    AX = np.einsum("...ba,bij,...j->...ai", F, K, psi)
    res = nabE - 1j * mu * AX
    # g(A e_a, e_b) = -1/2 Im <e_a * nabla_b psi + e_b * nabla_a psi, psi> / |psi|^2
    t = np.einsum("aij,...bj->...abi", K, nabE)
    inner = field.rep.ip0(t + np.swapaxes(t, -2, -3), psi[..., None, None, :])
    rec = -0.5 * np.imag(inner) / norm2[..., None, None]
    return {
        "residual": float(np.max(np.abs(res))),
        "recovered_A": rec / mu,
        "recovery_residual": float(np.max(np.abs(rec / mu - F))),
    }


# ---------------------------------------------------------------------------
# currents


@dataclass(frozen=True)
class DiracCurrentSample:
    basepoint: Array
    W: Array  # frame components
    norm_sq: float
    q_value: float
    dist_value: float


def riemannian_current(rep: CliffordRep, psi) -> Array:
    """Frame components ``W_a = i <e_a * psi, psi>_0``."""
    psi = np.asarray(psi, dtype=complex)
    Kp = np.einsum("aij,...j->...ai", rep.kappas, psi)
    return np.real(1j * rep.ip0(Kp, psi[..., None, :]))


def spinor_dist(rep: CliffordRep, psi) -> Array:
    """Distance of ``i psi`` from the real span of ``e_j * psi`` (real least squares)."""
    psi = np.atleast_2d(np.asarray(psi, dtype=complex))
    out = []
    for v in psi:
        cols = np.array([K @ v for K in rep.kappas]).T
        Areal = np.concatenate([cols.real, cols.imag])
        target = np.concatenate([(1j * v).real, (1j * v).imag])
        coef, *_ = np.linalg.lstsq(Areal, target, rcond=None)
        out.append(np.linalg.norm(Areal @ coef - target))
    return np.array(out)


def dirac_current(rep: CliffordRep, psi, p=None) -> DiracCurrentSample:
    psi = np.asarray(psi, dtype=complex)
    n2 = float(np.real(rep.ip0(psi, psi)))
    if n2 < 1e-14:
        raise VanishingSpinor("dist is undefined for a vanishing spinor")
    W = riemannian_current(rep, psi)
    q = n2 * n2 - float(W @ W)
    return DiracCurrentSample(p, W, n2, q, float(spinor_dist(rep, psi)[0]))


def lorentzian_current(rep: CliffordRep, psi, signs=None) -> Array:
    """Frame components ``V^a`` with ``g(V, Y) = -<Y . psi, psi>_1``."""
    psi = np.asarray(psi, dtype=complex)
    eps = np.diag(rep.eta) if signs is None else np.asarray(signs, dtype=float)
    Gp = np.einsum("aij,...j->...ai", rep.gammas, psi)
    low = -np.real(rep.ip1(Gp, psi[..., None, :]))
    return eps * low


# ---------------------------------------------------------------------------
# Killing spinors on warped products


@dataclass(frozen=True)
class KillingSpinor:
    field: SpinorField
    psi0: Array
    base: Array
    kernel_dim: int
    fiber_kernel_dim: int
    integrability: Array


def construct_warped_killing_spinor(wp, rep: CliffordRep | None = None, x0=None, fiber_spinor=None,
                                    size: float = 0.1, seed: int = 0, tol: float = 1e-8,
                                    steps_per_unit: float = BATCH_STEPS_PER_UNIT) -> KillingSpinor:
    """Imaginary Killing spinor ``nabla_X psi = i X * psi`` on ``R x_{e^{-2s}} F``.

    The initial value at ``(0, x0)`` is a common fixed vector of the loop
    transports of ``nabla - i Id *`` in the ``i``-eigenspace of ``d_s *``;
    it is then transported along straight segments.  The fiber must carry
    parallel spinors.
    """
    from .errors import WrongBase

    if not wp.is_exponential(-2.0):
        raise WrongBase("the Killing spinor construction needs f = e^{-2s}")
    M = wp.model
    F = ensure_frame(wp.fiber)
    n = M.dim
    rep = rep or clifford_rep(n, 1)
    x0 = default_basepoint(F) if x0 is None else np.asarray(x0, dtype=float)
    base = np.concatenate([[0.0], x0])

    frep = clifford_rep(F.dim, 1)
    fconn = spinor_connection(F, frep)
    fker, _ = loop_fixed_space(fconn, F, x0, size, remote=4, seed=seed, tol=tol)
    if fiber_spinor is not None:
        phi = np.asarray(fiber_spinor, dtype=complex)
        proj = fker @ (np.conj(fker).T @ phi) if fker.shape[1] else np.zeros_like(phi)
        if np.linalg.norm(phi - proj) > 1e-6 * np.linalg.norm(phi):
            raise NonParallelFiber("supplied fiber spinor is not parallel")
    if fker.shape[1] == 0:
        raise NonParallelFiber("the fiber has no parallel spinors")

    conn = codazzi_connection(M, rep)
    ker, sv = loop_fixed_space(conn, M, base, size, remote=4, seed=seed, tol=tol)
    # i-eigenspace of d_s * at the base (d_s is the first frame vector)
    Ks = rep.kappas[0]
    w, U = np.linalg.eig(Ks)
    Ei = U[:, np.abs(w - 1j) < 1e-8]
    spaces = [Ei]
    if n % 2 == 1:
        spaces = [_intersect(Ei, rep.parity_projector(sgn)) for sgn in (1, -1)]
    cand = None
    for S in spaces:
        inter = _intersect_spaces(ker, S)
        if inter.shape[1]:
            cand = inter
            break
    if cand is None:
        raise HolonomyObstruction("no loop-invariant spinor in the i-eigenspace of d_s")
    psi0 = cand[:, 0] / np.linalg.norm(cand[:, 0])
    # fix the phase so the first nonzero component is real and positive
    k = int(np.argmax(np.abs(psi0) > 1e-8))
    psi0 = psi0 * np.exp(-1j * np.angle(psi0[k]))
    field = transported_field(M, rep, conn, base, psi0, steps_per_unit=steps_per_unit)
    return KillingSpinor(field, psi0, base, ker.shape[1], fker.shape[1], np.asarray(sv))


def parallel_spinors(model: ManifoldModel, rep: CliffordRep | None = None, base=None, size: float = 0.1,
                     seed: int = 0, tol: float = 1e-8) -> Array:
    """Basis (columns) of spinors at ``base`` fixed by all sampled loop transports."""
    model = ensure_frame(model)
    rep = rep or clifford_rep(model.dim, 1)
    base = default_basepoint(model) if base is None else np.asarray(base, dtype=float)
    ker, _ = loop_fixed_space(spinor_connection(model, rep), model, base, size, seed=seed, tol=tol)
    return ker


def codazzi_spinor_from(model: ManifoldModel, rep: CliffordRep, base, psi0, A=None, mu: float = 1.0,
                        steps_per_unit: float = BATCH_STEPS_PER_UNIT) -> SpinorField:
    """Field obtained by transporting ``psi0`` with ``nabla - i mu A *`` along straight segments.

    It is a Codazzi spinor exactly when ``psi0`` is fixed by the holonomy of that connection.
    """
    conn = codazzi_connection(model, rep, A, mu)
    return transported_field(model, rep, conn, base, psi0, steps_per_unit=steps_per_unit)


def _intersect(S: Array, Pr: Array) -> Array:
    """Vectors of span ``S`` fixed by the projector ``Pr``."""
    if S.shape[1] == 0:
        return S
    M = (Pr - np.eye(len(Pr))) @ S
    _, s, vh = np.linalg.svd(M)
    s_full = np.concatenate([s, np.zeros(S.shape[1] - len(s))])
    coeff = np.conj(vh[s_full < 1e-8]).T
    return _orth_c(S @ coeff)


def _intersect_spaces(A: Array, B: Array) -> Array:
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    M = np.concatenate([A, -B], axis=1)
    _, s, vh = np.linalg.svd(M)
    s_full = np.concatenate([s, np.zeros(M.shape[1] - len(s))])
    null = np.conj(vh[s_full < 1e-7]).T
    return _orth_c(A @ null[: A.shape[1]])


def _orth_c(V: Array) -> Array:
    if V.shape[1] == 0:
        return V
    u, s, _ = np.linalg.svd(V, full_matrices=False)
    return u[:, s > 1e-10]


def killing_integrability_residual(conn, model: ManifoldModel, points, size: float = 0.05) -> float:
    """Largest ``|tau_loop - 1|`` around coordinate plaquettes at ``points``; zero for a flat connection."""
    worst = 0.0
    for q in np.atleast_2d(points):
        for i, j in combinations(range(model.dim), 2):
            tau = transport_matrix(conn, CurvePath.plaquette(q, i, j, size), dtype=complex).matrix
            worst = max(worst, float(np.max(np.abs(tau - np.eye(len(tau))))))
    return worst


# ---------------------------------------------------------------------------
# transfer and lift


def transferred_model(model: ManifoldModel, A) -> ManifoldModel:
    """``(M, A^* g)`` with the frame ``A^{-1} E``."""
    from .warped import pullback_model

    fr = _frame_of(model)
    pulled = pullback_model(model, A, name=f"{A.name}^* {model.name}")

    def vectors(x):
        return np.linalg.solve(A.matrix(x), fr.vectors(x))

    return with_frame(pulled, FrameField(vectors, fr.signs, None))


def phi_transfer(field: SpinorField, A) -> SpinorField:
    """Spinor on ``(M, A^* g)`` with the same components in the frame ``A^{-1} E``."""
    cond = np.linalg.cond(A(field.model.sample_points(np.random.default_rng(0), 8, margin=0.1)))
    if np.any(cond > 1e12):
        raise SingularA("transfer needs an invertible A")
    return SpinorField(transferred_model(field.model, A), field.rep, field.values, field.parity, field.step)


def cylinder_frame(cyl) -> FrameField:
    """``(d_t, B_t^{-1} E_i)``; the spatial vectors are parallel along ``t``-lines."""
    base = ensure_frame(cyl.base)
    fr = base.frame
    n = cyl.base.dim

    def vectors(q):
        t, p = q[..., 0], q[..., 1:]
        out = np.zeros(q.shape[:-1] + (n + 1, n + 1))
        out[..., 0, 0] = 1.0
        out[..., 1:, 1:] = np.linalg.solve(cyl.B(t, p), fr.vectors(p))
        return out

    return FrameField(vectors, (-1.0,) + tuple(fr.signs), None)


def lift_to_cylinder(cyl, field: SpinorField, A=None, points=None, tol: float = 1e-5) -> SpinorField:
    """Parallel extension of a Codazzi spinor of the base along the ``t``-lines.

    Components in the frame ``(d_t, B_t^{-1} E)`` do not depend on ``t``.
    ``field`` lives on the base metric ``G`` with frame ``E``.  With
    ``points`` the Codazzi precondition is checked first.
    """
    if points is not None:
        base_field = field
        if cyl.kind == "C[F;H]":
            # the Codazzi spinor lives on (M, H^* g_wp) with tensor H^{-1}
            base_field = phi_transfer(field, cyl.L)
            A = cyl.L.inverse()
        res = codazzi_spinor_residual(base_field, A, points)["residual"]
        if res > tol:
            raise NotCodazzi(f"base spinor has Codazzi residual {res:.3g}")
    model = with_frame(cyl.model, cylinder_frame(cyl))

    def values(q):
        return field.values(np.asarray(q, dtype=float)[..., 1:])

    return SpinorField(model, field.rep, values, field.parity, field.step)


def cylinder_current(field: SpinorField, q) -> Array:
    """Chart components of the Lorentzian Dirac current of a cylinder spinor."""
    q = np.asarray(q, dtype=float)
    Va = lorentzian_current(field.rep, field(q), field.model.frame.signs)
    return np.einsum("...ia,...a->...i", field.model.frame.vectors(q), Va)


# ---------------------------------------------------------------------------
# curvature identities


def spin_curvature(model: ManifoldModel, rep: CliffordRep, p) -> Array:
    """``F_{mu nu} = d_mu Omega_nu - d_nu Omega_mu + [Omega_mu, Omega_nu]`` by finite differences."""
    conn = spinor_connection(model, rep)
    p = model.require_inside(p, margin=2.0 * model.curvature_step + 2.0 * model.fd_step)
    Om = conn(p)
    dOm = fd_gradient(conn, p, model.curvature_step, model.dim)  # (..., mu, nu, i, j)
    comm = np.einsum("...mik,...nkj->...mnij", Om, Om)
    return dOm - np.swapaxes(dOm, -3, -4) + comm - np.swapaxes(comm, -3, -4)


def clifford_curvature(model: ManifoldModel, rep: CliffordRep, p) -> Array:
    """``1/4 sum_ab eps_a eps_b g(R(d_mu, d_nu) E_a, E_b) c_a c_b``."""
    fr = _frame_of(model)
    p = np.asarray(p, dtype=float)
    R = riemann(model, p)
    E = fr.vectors(p)
    # R(d_mu, d_nu) E_a, lowered against E_b
    RE = np.einsum("...lkmn,...ka->...mnla", R.riemann, E)
    w = np.einsum("...mnla,...lj,...jb->...mnab", RE, R.metric, E)
    return spin_matrices(w, fr.signs, action_matrices(model, rep))


def spin_curvature_residual(model: ManifoldModel, rep: CliffordRep, p) -> dict:
    Fs = spin_curvature(model, rep, p)
    Fc = clifford_curvature(model, rep, p)
    scale = 1.0 + np.max(np.abs(Fc))
    return {"same_sign": float(np.max(np.abs(Fs - Fc)) / scale),
            "opposite_sign": float(np.max(np.abs(Fs + Fc)) / scale)}


def ricci_spinor_identity_residual(model: ManifoldModel, rep: CliffordRep, p, psi) -> float:
    """``Ric(X) * psi = -2 sum_k s_k * R^S(X, s_k) psi`` on frame directions."""
    fr = _frame_of(model)
    p = np.asarray(p, dtype=float)
    E = fr.vectors(p)
    Fs = spin_curvature(model, rep, p)
    FE = np.einsum("...mnij,...ma,...nb->...abij", Fs, E, E)
    K = action_matrices(model, rep)
    R = riemann(model, p)
    ric = R.ricci_endomorphism()
    ricE = np.linalg.solve(E, ric @ E)  # frame matrix
    lhs = np.einsum("...ba,bij,...j->...ai", ricE, K, psi)
    rhs = -2.0 * np.einsum("kil,...aklj,...j->...ai", K, FE, psi)
    return float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(lhs))))


def ricci_constraint_residual(model: ManifoldModel, A, points) -> float:
    """``|Ric - 4 A^2 + 4 tr(A) A|`` relative to ``1 + |Ric|``."""
    p = np.asarray(points, dtype=float)
    ric = riemann(model, p).ricci_endomorphism()
    Am = np.broadcast_to(np.eye(model.dim), ric.shape) if A is None else A(p)
    tr = np.trace(Am, axis1=-2, axis2=-1)[..., None, None]
    res = ric - 4.0 * Am @ Am + 4.0 * tr * Am
    return float(np.max(np.abs(res)) / (1.0 + np.max(np.abs(ric))))
