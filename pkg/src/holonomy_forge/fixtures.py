"""Named fixtures for the command-line driver and the acceptance tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cylinder import CylinderModel, build_cylinder
from .errors import FixtureError
from .geometry import ManifoldModel, default_basepoint
from .warped import (
    EndomorphismField,
    WarpedProductModel,
    assemble,
    constant_field,
    identity_field,
    simple_split,
    warped_product,
)
from . import zoo

Array = np.ndarray


@dataclass(frozen=True)
class Fixture:
    """A model together with the structure the suites need.

    ``codazzi`` is the Codazzi tensor of the fixture (``T`` on plain models,
    ``H`` on warped products and cylinders).  ``expected`` holds reference
    outcomes such as the holonomy dimension.
    """

    name: str
    params: dict
    model: ManifoldModel
    basepoint: Array
    codazzi: Optional[EndomorphismField] = None
    wp: Optional[WarpedProductModel] = None
    cyl: Optional[CylinderModel] = None
    split: object = None
    T: Optional[EndomorphismField] = None
    expected: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        if self.cyl is not None:
            return "cylinder"
        if self.wp is not None:
            return "warped"
        return "riemannian"


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    summary: str
    params: dict  # name -> default
    build: Callable[..., Fixture]


def _b(amplitude: float):
    return lambda s: 1.0 + amplitude * np.sin(np.asarray(s))


def _fiber(name: str, a: float = 1.0):
    if name == "torus":
        F = zoo.flat_torus(3)
        return F, constant_field(F, np.diag([2.0, 2.5, 3.0]), "diag(2, 2.5, 3)")
    if name == "torus-hessian":
        F = zoo.flat_torus(3)
        h, hess = zoo.cubic_hessian_fixture(3)
        return F, zoo.flat_hessian_codazzi(h, model=F, hessian=hess)
    if name == "eh":
        F = zoo.eguchi_hanson(a)
        return F, identity_field(F, 2.0)
    if name == "product":
        return zoo.product_model([zoo.flat_torus(3), zoo.eguchi_hanson(a)], [1.0, 2.0])
    raise FixtureError(f"unknown fiber {name!r}")


def _flat(dim=3):
    M = zoo.flat(int(dim))
    return Fixture("flat", {"dim": int(dim)}, M, default_basepoint(M), identity_field(M),
                   expected={"holonomy_dim": 0, "flat": True})


def _flat_torus(dim=3):
    M = zoo.flat_torus(int(dim))
    return Fixture("flat-torus", {"dim": int(dim)}, M, default_basepoint(M), identity_field(M),
                   expected={"holonomy_dim": 0, "flat": True})


def _hessian(dim=3):
    dim = int(dim)
    M = zoo.flat(dim)
    h, hess = zoo.cubic_hessian_fixture(dim)
    T = zoo.flat_hessian_codazzi(h, model=M, hessian=hess)
    return Fixture("hessian", {"dim": dim}, M, default_basepoint(M), T, T=T,
                   expected={"holonomy_dim": 0, "flat": True})


def _cone(r_lo=0.5, r_hi=2.0):
    M = zoo.cone(r_range=(float(r_lo), float(r_hi)))
    T = zoo.cone_codazzi(M)
    return Fixture("cone", {"r_lo": float(r_lo), "r_hi": float(r_hi)}, M, default_basepoint(M), T, T=T,
                   expected={"holonomy_dim": 0, "flat": True})


def _eguchi_hanson(a=1.0, gamma_shift=0.0):
    M = zoo.eguchi_hanson(float(a), gamma_shift=float(gamma_shift))
    return Fixture("eguchi-hanson", {"a": float(a), "gamma_shift": float(gamma_shift)}, M, default_basepoint(M),
                   identity_field(M), expected={"holonomy_dim": 3, "parallel_spinors": 2})


def _product(lambdas="1,2"):
    lam = [float(v) for v in str(lambdas).split(",")]
    if len(lam) != 2:
        raise FixtureError("product expects two lambdas (torus, EH)")
    M, T = zoo.product_model([zoo.flat_torus(3), zoo.eguchi_hanson()], lam)
    return Fixture("product", {"lambdas": ",".join(f"{v:g}" for v in lam)}, M, default_basepoint(M), T, T=T,
                   expected={"holonomy_dim": 3})


def _warped(fiber="torus-hessian", b_amplitude=0.3):
    F, T = _fiber(fiber)
    wp = warped_product(F)
    split = simple_split(T, _b(float(b_amplitude)), wp)
    H = assemble(wp, split, "H(b,0,E)")
    hol = {"torus": 6, "torus-hessian": 6, "eh": 3, "product": 6}[fiber]
    return Fixture("warped", {"fiber": fiber, "b_amplitude": float(b_amplitude)}, wp.model,
                   default_basepoint(wp.model), H, wp=wp, split=split, T=T, expected={"holonomy_dim": hol})


def _cylinder(name, fiber, b_amplitude, expected, groups):
    F, T = _fiber(fiber)
    wp = warped_product(F)
    split = simple_split(T, _b(float(b_amplitude)), wp)
    H = assemble(wp, split, "H(b,0,E)")
    cyl = build_cylinder(wp, H)
    exp = dict(expected)
    exp["groups"] = groups
    return Fixture(name, {"b_amplitude": float(b_amplitude)}, cyl.model, default_basepoint(cyl.model), H, wp=wp,
                   cyl=cyl, split=split, T=T, expected=exp)


def _cylinder_torus(b_amplitude=0.3):
    return _cylinder("cylinder-torus", "torus", b_amplitude,
                     {"holonomy_dim": 0, "flat": True, "verdict": "flat/trivial"}, [])


def _cylinder_eh(b_amplitude=0.3):
    return _cylinder("cylinder-eh", "eh", b_amplitude,
                     {"holonomy_dim": 7, "verdict": "weakly-irreducible", "m_factors": [[0, 1, 2, 3]]}, [[1, 2, 3, 4]])


def _cylinder_product(b_amplitude=0.3):
    return _cylinder("cylinder-product", "product", b_amplitude,
                     {"holonomy_dim": 7, "verdict": "decomposable"}, [[1, 2, 3], [4, 5, 6, 7]])


def _cylinder_identity(dim=3):
    M = zoo.flat_torus(int(dim))
    A = identity_field(M)
    cyl = build_cylinder(M, A)
    return Fixture("cylinder-identity", {"dim": int(dim)}, cyl.model, default_basepoint(cyl.model), A, cyl=cyl,
                   expected={"holonomy_dim": 0, "flat": True})


REGISTRY = {
    s.name: s
    for s in [
        FixtureSpec("flat", "Euclidean box", {"dim": 3}, _flat),
        FixtureSpec("flat-torus", "flat 3-torus chart", {"dim": 3}, _flat_torus),
        FixtureSpec("hessian", "flat box with the Hessian of a cubic as Codazzi tensor", {"dim": 3}, _hessian),
        FixtureSpec("cone", "cone over the unit round sphere with T = nabla d_r", {"r_lo": 0.5, "r_hi": 2.0}, _cone),
        FixtureSpec("eguchi-hanson", "Eguchi-Hanson metric, left-invariant frame", {"a": 1.0, "gamma_shift": 0.0},
                    _eguchi_hanson),
        FixtureSpec("product", "flat torus x Eguchi-Hanson with T = l1 Id + l2 Id", {"lambdas": "1,2"}, _product),
        FixtureSpec("warped", "R x_{e^{-2s}} F with H(b, 0, E)", {"fiber": "torus-hessian", "b_amplitude": 0.3},
                    _warped),
        FixtureSpec("cylinder-torus", "C[F;H] over the flat torus", {"b_amplitude": 0.3}, _cylinder_torus),
        FixtureSpec("cylinder-eh", "C[F;H] over Eguchi-Hanson", {"b_amplitude": 0.3}, _cylinder_eh),
        FixtureSpec("cylinder-product", "C[F;H] over flat torus x Eguchi-Hanson", {"b_amplitude": 0.3},
                    _cylinder_product),
        FixtureSpec("cylinder-identity", "C(M;Id) over the flat torus", {"dim": 3}, _cylinder_identity),
    ]
}


def list_fixtures() -> list:
    return sorted(REGISTRY)


def build_fixture(name: str, **params) -> Fixture:
    """Build a registered fixture; unknown names or parameters raise :class:`FixtureError`."""
    spec = REGISTRY.get(name)
    if spec is None:
        raise FixtureError(f"unknown fixture {name!r}; known: {', '.join(list_fixtures())}")
    unknown = set(params) - set(spec.params)
    if unknown:
        raise FixtureError(f"fixture {name!r} has no parameter(s) {sorted(unknown)}")
    merged = {**spec.params, **params}
    try:
        return spec.build(**merged)
    except FixtureError:
        raise
    except (TypeError, ValueError) as exc:
        raise FixtureError(f"cannot build {name!r}: {exc}") from exc
