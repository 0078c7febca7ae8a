"""Prescribed Gauss-map pairs and their pointwise solution conditions.

A pair (g1, g2) of complex fields on a common grid encodes the two projective
factors of a candidate surface direction map.  Two pointwise conditions govern
whether the pair generates a translating surface:

  compatibility   dzbar(g1) / ((1 - g1*conj(g2)) (1 + |g1|^2))
                    = dzbar(g2) / ((1 - conj(g1)*g2) (1 + |g2|^2))  =: F

  integrability   L := dz dzbar(g1)
                       + (conj(g2)/(1 - g1 conj(g2)) - conj(g1)/(1 + |g1|^2))
                         * dz(g1) dzbar(g1)
                       + (g1 + g2)/((1 - conj(g1) g2)(1 + |g1|^2))
                         * |dzbar(g1)|^2  = 0

together with the mirrored condition R = 0 obtained by swapping the roles of
g1 and g2.  Under compatibility alone the two mirrored conditions are
equivalent: L/dzbar(g1) = R/dzbar(g2) pointwise, which equivalence_check_L_R
measures directly.

The scalar surfaces in R^3 arise from a single map G through the symmetric
lift (g1, g2) = (iG, iG); translator_equation_residual_r3 evaluates the
corresponding single-map equation

  dz dzbar(G) + 2 conj(G)|G|^2/(1-|G|^4) dz(G) dzbar(G)
             + 2 G/(1-|G|^4) |dzbar(G)|^2 = 0.

Both conditions here are checked as sufficiency certificates for prescribed
fields; nothing in this module attempts to solve them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (ComplexField, ComplexGrid, RealField, field_from_function,
                   mixed_dz_dzbar, wirtinger_dz, wirtinger_dzbar)

STRICT_DISC = "strict_disc"
EXTENDED_PLANE = "extended_plane"
MODES = (STRICT_DISC, EXTENDED_PLANE)

DEFAULT_EPS_BRANCH = 1e-6
DEFAULT_EPS_HOL_SCALE = 1e-8


class BranchPointError(ValueError):
    """Branch-point denominator vanished on the active set in strict mode."""


@dataclass
class GaussMapPair:
    """A prescribed pair on one grid.  In strict_disc mode both maps take
    values in the open unit disc; extended_plane relaxes that and instead
    masks nodes where the branch denominator 1 - g1*conj(g2) degenerates."""

    g1: ComplexField
    g2: ComplexField
    mode: str = STRICT_DISC
    family_tag: str | None = None
    branch_masked_nodes: int = 0

    @property
    def grid(self) -> ComplexGrid:
        return self.g1.grid


def make_pair(grid: ComplexGrid, g1_values: np.ndarray, g2_values: np.ndarray,
              mode: str = STRICT_DISC, family_tag: str | None = None,
              eps_branch: float = DEFAULT_EPS_BRANCH) -> GaussMapPair:
    """Validate and assemble a pair, branch-masking in extended_plane mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    g1 = ComplexField(grid, np.asarray(g1_values, dtype=np.complex128).copy())
    g2 = ComplexField(grid, np.asarray(g2_values, dtype=np.complex128).copy())
    active = grid.mask
    branch_masked = 0
    if mode == STRICT_DISC:
        m1 = np.abs(g1.values[active]).max(initial=0.0)
        m2 = np.abs(g2.values[active]).max(initial=0.0)
        if m1 >= 1.0 or m2 >= 1.0:
            raise ValueError(
                "strict_disc mode requires |g1|, |g2| < 1 on the active set "
                f"(got max moduli {m1:.6g}, {m2:.6g})"
            )
    else:
        denom = np.abs(1.0 - g1.values * np.conj(g2.values))
        bad = active & (denom < eps_branch)
        branch_masked = int(bad.sum())
        if branch_masked:
            grid = grid.with_mask(active & ~bad)
            g1 = ComplexField(grid, g1.values)
            g2 = ComplexField(grid, g2.values)
    return GaussMapPair(g1, g2, mode, family_tag, branch_masked)


def pair_from_functions(grid: ComplexGrid, fn1, fn2, mode: str = STRICT_DISC,
                        family_tag: str | None = None,
                        eps_branch: float = DEFAULT_EPS_BRANCH) -> GaussMapPair:
    a = field_from_function(grid, fn1)
    b = field_from_function(grid, fn2)
    return make_pair(grid, a.values, b.values, mode, family_tag, eps_branch)


def holomorphy_margin(pair: GaussMapPair) -> float:
    """min over active nodes of min(|dzbar g1|, |dzbar g2|).

    The construction requires nowhere-holomorphic inputs; callers compare
    this margin against eps_hol_scale times the field scale.
    """
    active = pair.grid.mask
    d1 = np.abs(wirtinger_dzbar(pair.g1).values[active])
    d2 = np.abs(wirtinger_dzbar(pair.g2).values[active])
    return float(min(d1.min(), d2.min()))


def field_scale(pair: GaussMapPair) -> float:
    active = pair.grid.mask
    return float(max(1.0,
                     np.abs(pair.g1.values[active]).max(),
                     np.abs(pair.g2.values[active]).max()))


def _zero_filled(field: ComplexField) -> np.ndarray:
    return np.where(field.grid.mask, field.values, 0.0)


def compatibility_F(pair: GaussMapPair,
                    eps_branch: float = DEFAULT_EPS_BRANCH
                    ) -> tuple[ComplexField, RealField]:
    """Evaluate both compatibility expressions and average them into F.

    Returns (F, cp_residual) where cp_residual is the pointwise modulus of
    the difference of the two expressions.  Averaging symmetrizes the
    discretization error of the two one-sided views of the same quantity.
    """
    grid = pair.grid
    g1 = _zero_filled(pair.g1)
    g2 = _zero_filled(pair.g2)
    d1 = wirtinger_dzbar(pair.g1).values
    d2 = wirtinger_dzbar(pair.g2).values
    den1 = (1.0 - g1 * np.conj(g2)) * (1.0 + np.abs(g1) ** 2)
    den2 = (1.0 - np.conj(g1) * g2) * (1.0 + np.abs(g2) ** 2)
    small = grid.mask & ((np.abs(den1) < eps_branch) | (np.abs(den2) < eps_branch))
    if small.any():
        if pair.mode == STRICT_DISC:
            raise BranchPointError(
                f"compatibility denominator below {eps_branch:g} at "
                f"{int(small.sum())} active node(s)"
            )
        grid = grid.with_mask(grid.mask & ~small)
    e1 = np.where(grid.mask, d1 / np.where(grid.mask, den1, 1.0), 0.0)
    e2 = np.where(grid.mask, d2 / np.where(grid.mask, den2, 1.0), 0.0)
    F = ComplexField(grid, 0.5 * (e1 + e2))
    cp = RealField(grid, np.abs(e1 - e2))
    return F, cp


@dataclass
class ConditionResiduals:
    """Pointwise condition data for a pair.

    cp_residual, L_residual, R_residual are real moduli fields; L and R keep
    the complex values so the ratio equivalence can be formed without
    recomputation.  holo_floor is the nowhere-holomorphic margin.
    """

    cp_residual: RealField
    L_residual: RealField
    R_residual: RealField
    holo_floor: float
    L: ComplexField
    R: ComplexField
    dzbar_g1: ComplexField
    dzbar_g2: ComplexField


def _integrability_L(g_a, g_b, dz_a, dzbar_a, ddz_a):
    """The integrability expression for slot a against slot b (zero-filled arrays)."""
    term_coeff = (np.conj(g_b) / (1.0 - g_a * np.conj(g_b))
                  - np.conj(g_a) / (1.0 + np.abs(g_a) ** 2))
    tail = (g_a + g_b) / ((1.0 - np.conj(g_a) * g_b) * (1.0 + np.abs(g_a) ** 2))
    return ddz_a + term_coeff * dz_a * dzbar_a + tail * np.abs(dzbar_a) ** 2


def integrability_residuals(pair: GaussMapPair,
                            F: ComplexField | None = None) -> ConditionResiduals:
    """Evaluate compatibility and both mirrored integrability expressions.

    F is accepted for call-site symmetry with the rest of the chain; the
    residuals depend on the pair alone.
    """
    grid = pair.grid
    _, cp = compatibility_F(pair)
    g1 = _zero_filled(pair.g1)
    g2 = _zero_filled(pair.g2)
    dz_g1 = wirtinger_dz(pair.g1)
    dz_g2 = wirtinger_dz(pair.g2)
    dzbar_g1 = wirtinger_dzbar(pair.g1)
    dzbar_g2 = wirtinger_dzbar(pair.g2)
    ddz_g1 = mixed_dz_dzbar(pair.g1)
    ddz_g2 = mixed_dz_dzbar(pair.g2)
    L_vals = _integrability_L(g1, g2, dz_g1.values, dzbar_g1.values, ddz_g1.values)
    R_vals = _integrability_L(g2, g1, dz_g2.values, dzbar_g2.values, ddz_g2.values)
    L_vals = np.where(grid.mask, L_vals, 0.0)
    R_vals = np.where(grid.mask, R_vals, 0.0)
    return ConditionResiduals(
        cp_residual=cp,
        L_residual=RealField(grid, np.abs(L_vals)),
        R_residual=RealField(grid, np.abs(R_vals)),
        holo_floor=holomorphy_margin(pair),
        L=ComplexField(grid, L_vals),
        R=ComplexField(grid, R_vals),
        dzbar_g1=dzbar_g1,
        dzbar_g2=dzbar_g2,
    )


def equivalence_check_L_R(res: ConditionResiduals, pair: GaussMapPair,
                          eps_hol: float | None = None) -> tuple[float, RealField]:
    """Max over active nodes of |L/dzbar(g1) - R/dzbar(g2)|.

    Under compatibility the two ratios agree identically, whether or not the
    integrability conditions themselves hold.  Nodes where either dzbar
    modulus falls below eps_hol are excluded (the ratio is undefined there).
    """
    grid = res.L.grid
    if eps_hol is None:
        eps_hol = DEFAULT_EPS_HOL_SCALE * field_scale(pair)
    d1 = res.dzbar_g1.values
    d2 = res.dzbar_g2.values
    ok = grid.mask & (np.abs(d1) > eps_hol) & (np.abs(d2) > eps_hol)
    ratio1 = np.where(ok, res.L.values / np.where(ok, d1, 1.0), 0.0)
    ratio2 = np.where(ok, res.R.values / np.where(ok, d2, 1.0), 0.0)
    diff = RealField(grid.with_mask(ok), np.abs(ratio1 - ratio2))
    max_diff = float(diff.values[ok].max(initial=0.0))
    return max_diff, diff


def r3_lift(G: ComplexField, mode: str = STRICT_DISC,
            family_tag: str | None = None) -> GaussMapPair:
    """Lift a single map G to the symmetric pair (iG, iG)."""
    lifted = 1j * np.where(G.grid.mask, G.values, 0.0)
    return make_pair(G.grid, lifted, lifted, mode=mode, family_tag=family_tag)


def translator_equation_residual_r3(G: ComplexField,
                                    eps_unit: float = DEFAULT_EPS_BRANCH
                                    ) -> RealField:
    """Pointwise modulus of the single-map translator equation for G.

    Nodes where 1 - |G|^4 falls below eps_unit are masked out of the result.
    """
    grid = G.grid
    g = np.where(grid.mask, G.values, 0.0)
    one_minus = 1.0 - np.abs(g) ** 4
    ok = grid.mask & (np.abs(one_minus) >= eps_unit)
    newgrid = grid.with_mask(ok) if int((grid.mask & ~ok).sum()) else grid
    dz_g = wirtinger_dz(G).values
    dzbar_g = wirtinger_dzbar(G).values
    ddz_g = mixed_dz_dzbar(G).values
    safe = np.where(ok, one_minus, 1.0)
    resid = (ddz_g
             + 2.0 * np.conj(g) * np.abs(g) ** 2 / safe * dz_g * dzbar_g
             + 2.0 * g / safe * np.abs(dzbar_g) ** 2)
    return RealField(newgrid, np.where(ok, np.abs(resid), 0.0))
