"""The null-curve derivative field generated by a compatible pair.

From a pair (g1, g2) and its compatibility scalar F the surface derivative
X_z = phi is assembled algebraically:

    f     = -2i conj(F)
    phi   = f * (1 + g1 g2,  i (1 - g1 g2),  g1 - g2,  -i (g1 + g2))

Two identities hold for every input, compatible or not, because they are
pointwise algebra:

    nullity        phi . phi = 0
    norm identity  |phi|^2 = 2 |f|^2 (1 + |g1|^2)(1 + |g2|^2)

When the pair additionally satisfies the solution conditions, each slot of
dzbar(phi) is real with the closed forms

    dzbar(phi_1) =  |f|^2 ((1 - |g2|^2) Im g1 + (1 - |g1|^2) Im g2)
    dzbar(phi_2) = -|f|^2 ((1 - |g2|^2) Re g1 + (1 - |g1|^2) Re g2)
    dzbar(phi_3) =  2 |f|^2 Im(conj(g1) g2)
    dzbar(phi_4) = -|f|^2 (1 - 2 Re(conj(g1) g2) + |g1|^2 |g2|^2)

and realness of dzbar(phi) is exactly the closedness needed to integrate phi
into a surface patch.  integrability_residual compares a finite-difference
dzbar(phi) against these closed forms on an eroded interior: the comparison
differentiates already-differentiated data, so the outermost two node rings
(where one-sided closures change the error coefficient) are dropped and
counted rather than polluting the measured order.

The symmetric lift (g1, g2) = (iG, iG) produces phi_3 identically zero; the
surviving slots (phi_1, phi_2, phi_4) are the scalar three-space null curve
f * (1 - G^2, i (1 + G^2), 2 G) with f = 2 dz(conj G) / (|G|^4 - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussmap import GaussMapPair
from .grid import ComplexField, ComplexGrid, RealField, wirtinger_dzbar

R3_SLOTS = (0, 1, 3)  # surviving slot indices when slot 3 vanishes identically
DEFAULT_INTERIOR_MARGIN = 2


@dataclass
class NullCurveField:
    """phi and its ingredients.  phi always keeps all four slots; dim records
    whether the surface lives in R^3 (slot ordering R3_SLOTS) or R^4."""

    pair: GaussMapPair
    F: ComplexField
    f: ComplexField
    phi: tuple[ComplexField, ComplexField, ComplexField, ComplexField]
    phi_zbar_closed: tuple[RealField, RealField, RealField, RealField]
    dim: int

    @property
    def grid(self) -> ComplexGrid:
        return self.f.grid

    @property
    def surface_slots(self) -> tuple[int, ...]:
        return R3_SLOTS if self.dim == 3 else (0, 1, 2, 3)


def phi_zbar_closed_form(pair: GaussMapPair, f: ComplexField
                         ) -> tuple[RealField, RealField, RealField, RealField]:
    """Closed-form slot values of dzbar(phi); all four are real fields."""
    grid = f.grid
    g1 = np.where(grid.mask, pair.g1.values, 0.0)
    g2 = np.where(grid.mask, pair.g2.values, 0.0)
    f2 = np.abs(np.where(grid.mask, f.values, 0.0)) ** 2
    a1 = 1.0 - np.abs(g2) ** 2
    a2 = 1.0 - np.abs(g1) ** 2
    cross = np.conj(g1) * g2
    t1 = f2 * (a1 * g1.imag + a2 * g2.imag)
    t2 = -f2 * (a1 * g1.real + a2 * g2.real)
    t3 = 2.0 * f2 * cross.imag
    t4 = -f2 * (1.0 - 2.0 * cross.real + np.abs(g1) ** 2 * np.abs(g2) ** 2)
    return (RealField(grid, t1), RealField(grid, t2),
            RealField(grid, t3), RealField(grid, t4))


def build_null_curve(pair: GaussMapPair, F: ComplexField,
                     reduce_to_r3: bool = False) -> NullCurveField:
    """Assemble phi from a pair and its compatibility scalar.

    reduce_to_r3 asserts that slot 3 vanishes identically (the symmetric-lift
    case) and records dim 3 so exports use the three surviving slots.
    """
    grid = F.grid
    g1 = np.where(grid.mask, pair.g1.values, 0.0)
    g2 = np.where(grid.mask, pair.g2.values, 0.0)
    f_vals = -2j * np.conj(np.where(grid.mask, F.values, 0.0))
    prod = g1 * g2
    phi_vals = (
        f_vals * (1.0 + prod),
        1j * f_vals * (1.0 - prod),
        f_vals * (g1 - g2),
        -1j * f_vals * (g1 + g2),
    )
    dim = 4
    if reduce_to_r3:
        scale = max(float(np.abs(phi_vals[0][grid.mask]).max(initial=0.0)), 1.0)
        slot3 = float(np.abs(phi_vals[2][grid.mask]).max(initial=0.0))
        if slot3 > 1e-12 * scale:
            raise ValueError(
                f"slot 3 of phi is not identically zero (max {slot3:.3g}); "
                "the three-space reduction needs the symmetric lift"
            )
        dim = 3
    f = ComplexField(grid, f_vals)
    phi = tuple(ComplexField(grid, v) for v in phi_vals)
    closed = phi_zbar_closed_form(pair, f)
    return NullCurveField(pair, F, f, phi, closed, dim)


def nullity_defect(ncf: NullCurveField) -> RealField:
    """|phi . phi| pointwise; zero up to rounding for every input."""
    grid = ncf.grid
    total = np.zeros((grid.n_u, grid.n_v), dtype=np.complex128)
    for comp in ncf.phi:
        total = total + comp.values * comp.values
    return RealField(grid, np.abs(np.where(grid.mask, total, 0.0)))


def norm_identity_defect(ncf: NullCurveField) -> RealField:
    """| |phi|^2 - 2|f|^2 (1+|g1|^2)(1+|g2|^2) | pointwise."""
    grid = ncf.grid
    norm2 = np.zeros((grid.n_u, grid.n_v))
    for comp in ncf.phi:
        norm2 = norm2 + np.abs(comp.values) ** 2
    g1 = np.where(grid.mask, ncf.pair.g1.values, 0.0)
    g2 = np.where(grid.mask, ncf.pair.g2.values, 0.0)
    expected = (2.0 * np.abs(ncf.f.values) ** 2
                * (1.0 + np.abs(g1) ** 2) * (1.0 + np.abs(g2) ** 2))
    return RealField(grid, np.abs(np.where(grid.mask, norm2 - expected, 0.0)))


def phi_scale(ncf: NullCurveField) -> float:
    """Scale reference for relative rounding tolerances: max(1, max |phi|^2)."""
    grid = ncf.grid
    norm2 = np.zeros((grid.n_u, grid.n_v))
    for comp in ncf.phi:
        norm2 = norm2 + np.abs(comp.values) ** 2
    return float(max(1.0, norm2[grid.mask].max(initial=0.0)))


@dataclass
class PhiIntegrabilityReport:
    """Finite-difference dzbar(phi) against the closed forms."""

    residual: RealField        # max over slots of |fd - closed|, eroded interior
    max_imag: float            # max over slots of |Im fd|, same interior
    dropped_nodes: int         # active nodes excluded by the interior margin


def integrability_residual(ncf: NullCurveField,
                           margin: int = DEFAULT_INTERIOR_MARGIN
                           ) -> PhiIntegrabilityReport:
    """Compare dzbar(phi_k) computed by stencils against the closed forms."""
    grid = ncf.grid
    inner = grid.eroded(margin)
    worst = np.zeros((grid.n_u, grid.n_v))
    max_imag = 0.0
    for k in range(4):
        fd = wirtinger_dzbar(ncf.phi[k]).values
        diff = np.abs(fd - ncf.phi_zbar_closed[k].values)
        worst = np.maximum(worst, np.where(inner.mask, diff, 0.0))
        if inner.mask.any():
            max_imag = max(max_imag, float(np.abs(fd.imag[inner.mask]).max()))
    dropped = grid.n_active - inner.n_active
    return PhiIntegrabilityReport(RealField(inner, worst), max_imag, dropped)
