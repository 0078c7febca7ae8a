"""Closed-form surface catalog.

Each entry packages a Gauss-map pair generator with whatever analytic ground
truth exists for it: the integrated surface, the conformal factor, a default
sampling rectangle that keeps a safety margin of 0.25 from any singularity.
The grim reaper cylinder and its tilted deformations live in R^3; the
Lagrangian translator lives in R^4.  Two deliberately broken pair families
are provided as negative controls, plus a compatible-but-non-integrable
family obtained by solving the profile ODE with a complex initial value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .grid import ComplexGrid, field_from_function
from .gaussmap import (EXTENDED_PLANE, STRICT_DISC, GaussMapPair, make_pair,
                       r3_lift)

CATALOG_NAMES = ("grim_reaper", "tilted_reaper", "lagrangian_castro_lerma",
                 "custom_expression")

GRIM_DOMAIN = (-2.0, 2.0, -2.0, 2.0)
LAGRANGIAN_DOMAIN = (-3.0, 0.5, -2.0, 2.0)


@dataclass(frozen=True)
class ExampleSpec:
    name: str
    pair_generator: Callable[[ComplexGrid], GaussMapPair]
    closed_form_X: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]]
    closed_form_metric: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]]
    default_domain: tuple[float, float, float, float]
    mode: str
    dim: int
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TiltedFrame:
    """Orthonormal triple adapted to a tilted reaper.

    U1 spans the invariant horizontal direction, U3 the direction the
    surface is a cylinder over, and the graph height is measured along the
    remaining U2.  x0 = c2*x2 + c3*x3 is the cylinder coordinate.
    """

    theta: float
    U1: np.ndarray
    U2: np.ndarray
    U3: np.ndarray
    x0_coefficients: tuple[float, float]


def grim_gauss(u, v):
    return np.tanh(u) + 0.0 * v


def tilted_gauss(theta: float):
    c, s = np.cosh(theta), np.sinh(theta)

    def G(u, v):
        return (c * np.sinh(2.0 * u) + 1j * s) / (1.0 + c * np.cosh(2.0 * u)) \
            + 0.0 * v

    return G


def grim_closed_X(uu: np.ndarray, vv: np.ndarray) -> np.ndarray:
    return np.stack([-2.0 * np.arctan(np.tanh(uu)),
                     2.0 * vv,
                     -np.log(np.cosh(2.0 * uu))], axis=-1)


def tilted_closed_X(theta: float):
    c, s = np.cosh(theta), np.sinh(theta)

    def X(uu, vv):
        lc = np.log(np.cosh(2.0 * uu))
        return np.stack([-2.0 * c * np.arctan(np.tanh(uu)),
                         s * lc + 2.0 * vv,
                         -lc + 2.0 * vv * s], axis=-1)

    return X


def lagrangian_curve(u):
    """Canonical real profile (u+1)/(u-1); pole at u = 1."""
    return (u + 1.0) / (u - 1.0)


def lagrangian_closed_X(uu: np.ndarray, vv: np.ndarray) -> np.ndarray:
    return np.stack([uu * np.sin(vv),
                     -uu * np.cos(vv),
                     -vv,
                     -uu ** 2 / 2.0], axis=-1)


def _lagrangian_pair(grid: ComplexGrid, curve=lagrangian_curve,
                     tag="lagrangian_castro_lerma") -> GaussMapPair:
    spiral = np.exp(1j * grid.vv)
    return make_pair(grid, spiral, curve(grid.uu) * spiral,
                     mode=EXTENDED_PLANE, family_tag=tag)


def catalog(name: str, **params) -> ExampleSpec:
    """Look up an example by name.

    tilted_reaper takes theta (default 0.7); custom_expression takes g1_fn,
    g2_fn callables of (u, v) plus optional mode/domain/dim.
    """
    if name == "grim_reaper":
        return ExampleSpec(
            name=name,
            pair_generator=lambda g: r3_lift(
                field_from_function(g, grim_gauss), mode=STRICT_DISC,
                family_tag=name),
            closed_form_X=grim_closed_X,
            closed_form_metric=lambda uu, vv: 4.0 + 0.0 * uu,
            default_domain=GRIM_DOMAIN,
            mode=STRICT_DISC,
            dim=3,
        )
    if name == "tilted_reaper":
        theta = float(params.get("theta", 0.7))
        if not math.isfinite(theta):
            raise ValueError(f"tilt angle must be finite, got {theta}")
        c = np.cosh(theta)
        return ExampleSpec(
            name=name,
            pair_generator=lambda g: r3_lift(
                field_from_function(g, tilted_gauss(theta)), mode=STRICT_DISC,
                family_tag=name),
            closed_form_X=tilted_closed_X(theta),
            closed_form_metric=lambda uu, vv: 4.0 * c * c + 0.0 * uu,
            default_domain=GRIM_DOMAIN,
            mode=STRICT_DISC,
            dim=3,
            params={"theta": theta},
        )
    if name == "lagrangian_castro_lerma":
        return ExampleSpec(
            name=name,
            pair_generator=_lagrangian_pair,
            closed_form_X=lagrangian_closed_X,
            closed_form_metric=lambda uu, vv: 1.0 + uu ** 2,
            default_domain=LAGRANGIAN_DOMAIN,
            mode=EXTENDED_PLANE,
            dim=4,
        )
    if name == "custom_expression":
        g1_fn = params.get("g1_fn")
        g2_fn = params.get("g2_fn")
        if g1_fn is None or g2_fn is None:
            raise ValueError("custom_expression needs g1_fn and g2_fn")
        mode = params.get("mode", EXTENDED_PLANE)
        domain = tuple(params.get("domain", GRIM_DOMAIN))

        def gen(g: ComplexGrid) -> GaussMapPair:
            g1 = np.asarray(g1_fn(g.uu, g.vv), dtype=complex) + 0j * g.uu
            g2 = np.asarray(g2_fn(g.uu, g.vv), dtype=complex) + 0j * g.uu
            return make_pair(g, g1, g2, mode=mode, family_tag=name)

        return ExampleSpec(
            name=name,
            pair_generator=gen,
            closed_form_X=None,
            closed_form_metric=None,
            default_domain=domain,
            mode=mode,
            dim=4,
            params={k: v for k, v in params.items() if k not in ("g1_fn", "g2_fn")},
        )
    raise ValueError(f"unknown example {name!r}; choices: {CATALOG_NAMES}")


def lagrangian_ode_residual(G_fn, u_min: float = -3.0, u_max: float = 0.0,
                            h: float = 0.005) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise defect of the profile equation 1/2 = (G - G')/(1 + G^2)
    with G' by second-order finite differences on a 1-D u-grid.

    Returns (u_nodes, residual).  Intervals containing the pole u = 1 of
    the canonical profile are rejected outright.
    """
    if u_min >= u_max:
        raise ValueError("empty u-interval")
    if u_min <= 1.0 <= u_max:
        raise ValueError("u-interval must exclude u = 1")
    n = max(5, int(round((u_max - u_min) / h)) + 1)
    u = np.linspace(u_min, u_max, n)
    vals = np.asarray(G_fn(u), dtype=complex)
    dG = np.gradient(vals, u, edge_order=2)
    res = np.abs(0.5 - (vals - dG) / (1.0 + vals ** 2))
    return u, res


def tilted_frame(theta: float) -> TiltedFrame:
    if not math.isfinite(theta):
        raise ValueError(f"tilt angle must be finite, got {theta}")
    c, s = math.cosh(theta), math.sinh(theta)
    return TiltedFrame(
        theta=theta,
        U1=np.array([1.0, 0.0, 0.0]),
        U2=np.array([0.0, -s / c, 1.0 / c]),
        U3=np.array([0.0, 1.0 / c, s / c]),
        x0_coefficients=(1.0 / c, s / c),
    )


def tilted_height_profile(theta: float):
    """The planar reaper profile T(t) = c*ln cos(t/c), c = cosh(theta),
    defined on |t| < c*pi/2."""
    c = math.cosh(theta)

    def T(t):
        return c * np.log(np.cos(np.asarray(t) / c))

    return T


def tilted_strip_width(theta: float) -> float:
    """Width of the maximal strip the tilted reaper graphs over."""
    return math.pi * math.cosh(theta)


def tilted_repatch(theta: float, x1: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Rebuild the tilted surface from its profile-times-line structure:
    points x1*U1 + T(x1)*U2 + x0*U3."""
    fr = tilted_frame(theta)
    T = tilted_height_profile(theta)(x1)
    return (np.asarray(x1)[..., None] * fr.U1
            + T[..., None] * fr.U2
            + np.asarray(x0)[..., None] * fr.U3)


def grim_height(x1, x2):
    """Height function of the grim reaper graph over its strip."""
    return np.log(np.cos(np.asarray(x1))) + 0.0 * np.asarray(x2)


def tilted_height(theta: float):
    """Height function of the tilted reaper over the strip of width
    pi*cosh(theta): c*T(x1) + s*x2."""
    c, s = math.cosh(theta), math.sinh(theta)
    T = tilted_height_profile(theta)

    def F(x1, x2):
        return c * T(x1) + s * np.asarray(x2)

    return F


def perturbed_lagrangian_curve(g0: complex = -1.0 + 0.3j,
                               u_min: float = -3.0, u_max: float = 0.5):
    """Complex solution of the compatibility ODE for spiral pairs,
    G' = G - (1 - G)(1 + |G|^2) / (2 (1 - conj(G))).

    Real solutions of this ODE reduce to translates of the canonical
    profile and make both integrability expressions vanish identically; a
    complex initial value keeps compatibility exact while breaking
    integrability, giving a documented non-integrable control.  Returns a
    vectorized interpolant over [u_min, u_max].
    """

    def rhs(u, y):
        G = y[0] + 1j * y[1]
        dG = G - (1.0 - G) * (1.0 + abs(G) ** 2) / (2.0 * (1.0 - np.conj(G)))
        return [dG.real, dG.imag]

    u0 = min(max(0.0, u_min), u_max)

    def leg(target):
        if target == u0:
            return None
        sol = solve_ivp(rhs, (u0, target), [g0.real, g0.imag],
                        method="DOP853", rtol=1e-12, atol=1e-12,
                        dense_output=True)
        if not sol.success:
            raise RuntimeError(f"profile ODE solve failed: {sol.message}")
        return sol.sol

    fwd = leg(u_max)
    bwd = leg(u_min)

    def curve(u):
        u = np.asarray(u, dtype=float)
        flat = u.ravel()
        out = np.full(flat.shape, g0, dtype=complex)
        if fwd is not None:
            hi = flat > u0
            y = fwd(np.clip(flat, u0, u_max))
            out = np.where(hi, y[0] + 1j * y[1], out)
        if bwd is not None:
            lo = flat < u0
            y = bwd(np.clip(flat, u_min, u0))
            out = np.where(lo, y[0] + 1j * y[1], out)
        return out.reshape(u.shape)

    return curve


def perturbed_lagrangian_pair(grid: ComplexGrid,
                              g0: complex = -1.0 + 0.3j) -> GaussMapPair:
    curve = perturbed_lagrangian_curve(g0, grid.u_min, grid.u_max)
    return _lagrangian_pair(grid, curve=curve, tag="perturbed_lagrangian")


def control_pair_symmetric(grid: ComplexGrid) -> GaussMapPair:
    """Symmetric pair 0.5*tanh(u)*e^{iu}: compatibility holds trivially,
    integrability fails at O(1).  Negative control."""
    g = 0.5 * np.tanh(grid.uu) * np.exp(1j * grid.uu)
    return make_pair(grid, g, g.copy(), mode=STRICT_DISC,
                     family_tag="control_symmetric")


def control_G_antiholomorphic(grid: ComplexGrid):
    """Anti-holomorphic scalar map 0.3*(u - iv) for the R^3 equation
    residual control: nowhere-holomorphic, but not a solution."""
    from .grid import ComplexField
    return ComplexField(grid, 0.3 * (grid.uu - 1j * grid.vv))
