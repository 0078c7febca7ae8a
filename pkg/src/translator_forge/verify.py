"""Independent geometric checks on an integrated patch.

Everything here plays adversary to the construction pipeline: the mean
curvature vector is recomputed by finite differences straight from the patch
coordinates, the normal projection of the translation direction is evaluated
both from the prescribed pair and from the discrete frame, and the Gauss map
is recovered from X_z and compared with what was prescribed.  Agreement at
second order in h is the evidence that the surface actually translates.

Finite differences of quantities that are themselves finite differences of
the integrated X are only clean O(h^2) away from the active-region edge:
X carries an O(h^2) error ramp whose slope jumps where the stencil type
changes, and each further differentiation drags that kink one more node
inward while dividing by h.  A quantity built from k chained stencil
applications on X is therefore evaluated on the (k+1)-eroded interior
(margin 2 for the frame, 3 for the curvature vector), and the report says
how many nodes that drops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (ComplexField, ComplexGrid, RealField, mixed_dz_dzbar,
                   partial_u, partial_uu, partial_v, partial_vv, wirtinger_dz,
                   wirtinger_dzbar)
from .gaussmap import GaussMapPair
from .immersion import ImmersionPatch
from .nullcurve import R3_SLOTS, NullCurveField

CLOSED_FORM = "closed_form"
FINITE_DIFFERENCE = "finite_difference"
DEFAULT_MARGIN = 2
CURVATURE_MARGIN = 3
DEFAULT_CHART_EPS = 1e-9


@dataclass(frozen=True)
class CurvatureReport:
    """Mean curvature vector H against the normal part of the velocity.

    H and e4_perp live on ``grid`` (the eroded interior for the
    finite-difference method); residual is the pointwise Euclidean norm of
    their difference.
    """

    grid: ComplexGrid
    H: np.ndarray
    e4_perp: np.ndarray
    residual: RealField
    method: str
    dim: int
    dropped_nodes: int


@dataclass(frozen=True)
class E4ProjectionReport:
    closed: np.ndarray
    frame: np.ndarray
    grid: ComplexGrid
    inner_grid: ComplexGrid
    max_disagreement: float


@dataclass(frozen=True)
class ProjectiveGaussMap:
    zeta: np.ndarray
    recovered_g1: ComplexField
    recovered_g2: ComplexField
    q2_defect: RealField
    flagged_nodes: int


@dataclass(frozen=True)
class HeightField:
    """Graph heights over an (x1, x2) rectangle; axis 0 is x1."""

    grid: ComplexGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError("height values shape does not match grid")
        if not np.isfinite(self.values[self.grid.mask]).all():
            raise ValueError("non-finite height value on active node")


def _e4_bracket(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """The four components of the normal projection of (0,0,0,-1),
    already divided by (1+|g1|^2)(1+|g2|^2)."""
    a1, a2 = np.abs(g1) ** 2, np.abs(g2) ** 2
    cross = np.conj(g1) * g2
    b = np.empty(g1.shape + (4,))
    b[..., 0] = (1.0 - a2) * g1.imag + (1.0 - a1) * g2.imag
    b[..., 1] = -((1.0 - a2) * g1.real + (1.0 - a1) * g2.real)
    b[..., 2] = 2.0 * cross.imag
    b[..., 3] = -(1.0 - 2.0 * cross.real + a1 * a2)
    return b / ((1.0 + a1) * (1.0 + a2))[..., None]


def _e4_closed(pair: GaussMapPair, slots) -> np.ndarray:
    b = _e4_bracket(pair.g1.values, pair.g2.values)
    return b[..., list(slots)]


def _patch_frame(patch: ImmersionPatch):
    """Discrete (X_u, X_v) from the integrated coordinates, plus the frame
    conformal factor (|X_u|^2 + |X_v|^2)/2."""
    grid = patch.grid
    Xu = np.empty_like(patch.X)
    Xv = np.empty_like(patch.X)
    for k in range(patch.dim):
        dz = wirtinger_dz(ComplexField(grid, patch.X[:, :, k])).values
        Xu[:, :, k] = 2.0 * dz.real
        Xv[:, :, k] = -2.0 * dz.imag
    lam2 = 0.5 * ((Xu ** 2).sum(axis=2) + (Xv ** 2).sum(axis=2))
    return Xu, Xv, lam2


def _e4_frame(patch: ImmersionPatch):
    """perp part of -e_last via subtraction of the tangential part,
    entirely from the discrete frame."""
    Xu, Xv, lam2 = _patch_frame(patch)
    lam2_safe = np.where(lam2 > 0.0, lam2, 1.0)
    tang = (Xu[..., -1:] * Xu + Xv[..., -1:] * Xv) / lam2_safe[..., None]
    out = tang.copy()
    out[..., -1] -= 1.0
    return out, lam2_safe


def mean_curvature(patch: ImmersionPatch, ncf: NullCurveField | None = None,
                   method: str = FINITE_DIFFERENCE,
                   margin: int = CURVATURE_MARGIN) -> CurvatureReport:
    """Mean curvature vector H = (4/Lambda^2) d/dzbar (X_z).

    closed_form evaluates the pair expressions for both H and the velocity
    projection (their difference is a pure algebra check).  finite_difference
    rebuilds everything from the patch coordinates alone: X_z by stencils,
    its dzbar by stencils, Lambda^2 from the discrete frame.  That path
    never touches the prescribed pair, which is what makes the comparison
    an actual test.
    """
    if method == CLOSED_FORM:
        if ncf is None:
            raise ValueError("closed_form method needs the null-curve field")
        grid = patch.grid
        lam2 = 4.0 * np.abs(ncf.f.values) ** 2 \
            * (1.0 + np.abs(ncf.pair.g1.values) ** 2) \
            * (1.0 + np.abs(ncf.pair.g2.values) ** 2)
        lam2 = np.where(grid.mask & (lam2 > 0.0), lam2, 1.0)
        slots = ncf.surface_slots
        H = np.stack([ncf.phi_zbar_closed[k].values for k in slots], axis=-1)
        H = 4.0 * H / lam2[..., None]
        e4 = _e4_closed(ncf.pair, slots)
        dropped = 0
    elif method == FINITE_DIFFERENCE:
        grid = patch.grid.eroded(margin) if margin > 0 else patch.grid
        full = patch.grid
        phi_fd = [wirtinger_dz(ComplexField(full, patch.X[:, :, k]))
                  for k in range(patch.dim)]
        Hc = np.stack([wirtinger_dzbar(p).values for p in phi_fd], axis=-1)
        e4, lam2 = _e4_frame(patch)
        H = 4.0 * Hc.real / lam2[..., None]
        dropped = patch.grid.n_active - grid.n_active
    else:
        raise ValueError(f"unknown curvature method: {method!r}")

    diff = np.linalg.norm(H - e4, axis=-1)
    residual = RealField(grid, np.where(grid.mask, diff, 0.0))
    zero = np.zeros_like(patch.X[..., 0])[..., None]
    H = np.where(grid.mask[..., None], H, zero)
    e4 = np.where(grid.mask[..., None], e4, zero)
    return CurvatureReport(grid=grid, H=H, e4_perp=e4, residual=residual,
                           method=method, dim=patch.dim, dropped_nodes=dropped)


def translator_residual(report: CurvatureReport) -> tuple[float, float]:
    """(max, area-weighted L2) of ||H - (-e_last)^perp|| over active nodes."""
    g = report.grid
    r = report.residual.values[g.mask]
    if r.size == 0:
        return 0.0, 0.0
    l2 = float(np.sqrt((r ** 2).sum() * g.h_u * g.h_v))
    return float(np.abs(r).max()), l2


def e4_normal_projection(patch: ImmersionPatch, pair: GaussMapPair,
                         margin: int = DEFAULT_MARGIN) -> E4ProjectionReport:
    """Velocity projection two ways: pair closed form on the full active
    set, frame subtraction on the eroded interior."""
    slots = R3_SLOTS if patch.dim == 3 else (0, 1, 2, 3)
    closed = _e4_closed(pair, slots)
    frame, _ = _e4_frame(patch)
    inner = patch.grid.eroded(margin) if margin > 0 else patch.grid
    diff = np.linalg.norm(closed - frame, axis=-1)
    dis = float(diff[inner.mask].max()) if inner.n_active else 0.0
    return E4ProjectionReport(closed=closed, frame=frame, grid=patch.grid,
                              inner_grid=inner, max_disagreement=dis)


def recover_gauss_map(patch: ImmersionPatch, margin: int = DEFAULT_MARGIN,
                      chart_eps: float = DEFAULT_CHART_EPS) -> ProjectiveGaussMap:
    """Read the Gauss map back off the surface.

    zeta = X_z by stencils, then g1 = (zeta3 + i zeta4)/(zeta1 - i zeta2)
    and g2 = -(zeta3 - i zeta4)/(zeta1 - i zeta2).  Nodes where the chart
    denominator nearly vanishes are flagged and masked out rather than
    filled with garbage.
    """
    full = patch.grid
    inner = full.eroded(margin) if margin > 0 else full
    zeta = np.zeros(full.shape + (4,), dtype=complex)
    slots = R3_SLOTS if patch.dim == 3 else (0, 1, 2, 3)
    for k, slot in enumerate(slots):
        zeta[..., slot] = wirtinger_dz(ComplexField(full, patch.X[:, :, k])).values

    denom = zeta[..., 0] - 1j * zeta[..., 1]
    scale = np.maximum(1.0, np.abs(zeta).max(axis=-1))
    ok = np.abs(denom) > chart_eps * scale
    flagged = int((inner.mask & ~ok).sum())
    good = inner.with_mask(inner.mask & ok)

    denom_safe = np.where(ok, denom, 1.0)
    g1 = (zeta[..., 2] + 1j * zeta[..., 3]) / denom_safe
    g2 = -(zeta[..., 2] - 1j * zeta[..., 3]) / denom_safe
    g1 = np.where(good.mask, g1, 0.0)
    g2 = np.where(good.mask, g2, 0.0)

    nd = np.abs((zeta ** 2).sum(axis=-1))
    nz = (np.abs(zeta) ** 2).sum(axis=-1)
    q2 = np.where(good.mask, nd / np.where(nz > 0.0, nz, 1.0), 0.0)

    return ProjectiveGaussMap(zeta=zeta,
                              recovered_g1=ComplexField(good, g1),
                              recovered_g2=ComplexField(good, g2),
                              q2_defect=RealField(good, q2),
                              flagged_nodes=flagged)


def q2_defect_max(pgm: ProjectiveGaussMap) -> float:
    g = pgm.q2_defect.grid
    vals = pgm.q2_defect.values[g.mask]
    return float(vals.max()) if vals.size else 0.0


def graphical_pde_residual(hf: HeightField) -> RealField:
    """Pointwise residual of the graph equation

        div(grad F / sqrt(1 + |grad F|^2)) + 1/sqrt(1 + |grad F|^2) = 0

    in expanded form, second-order stencils throughout.  A flat graph gives
    residual identically 1.
    """
    g = hf.grid
    F = ComplexField(g, hf.values.astype(complex))
    p = partial_u(F).values.real
    q = partial_v(F).values.real
    f11 = partial_uu(F).values.real
    f22 = partial_vv(F).values.real
    f12 = partial_v(partial_u(F)).values.real
    w2 = 1.0 + p ** 2 + q ** 2
    w = np.sqrt(w2)
    res = ((1.0 + q ** 2) * f11 - 2.0 * p * q * f12
           + (1.0 + p ** 2) * f22) / (w2 * w) + 1.0 / w
    return RealField(g, np.where(g.mask, res, 0.0))


def laplace_beltrami(scalar: RealField, lambda2: RealField) -> RealField:
    """(4/Lambda^2) * quarter-Laplacian of the scalar: the metric Laplacian
    in an isothermal parameter."""
    g = scalar.grid
    if lambda2.grid.shape != g.shape:
        raise ValueError("scalar and metric live on different grids")
    lam = lambda2.values
    if np.any(lam[g.mask] <= 0.0):
        raise ValueError("Lambda^2 must be positive on active nodes")
    mixed = mixed_dz_dzbar(ComplexField(g, scalar.values.astype(complex)))
    lam_safe = np.where(g.mask, lam, 1.0)
    out = 4.0 * mixed.values.real / lam_safe
    return RealField(g, np.where(g.mask, out, 0.0))


def unwrap_phase(field: RealField) -> RealField:
    """2-D phase unwrap for a solid rectangular active set.

    Works on the bounding box of the mask, which must be fully active inside
    it (true for plain and eroded rectangles).  Rows are unwrapped
    independently, then stitched with offsets from the unwrapped first
    column; offsets are exact multiples of 2*pi, so smooth inputs stay
    smooth.  Inactive nodes pass through unchanged.
    """
    g = field.grid
    ri = np.flatnonzero(g.mask.any(axis=1))
    cj = np.flatnonzero(g.mask.any(axis=0))
    if ri.size == 0:
        return RealField(g, field.values.copy())
    i0, i1 = ri[0], ri[-1] + 1
    j0, j1 = cj[0], cj[-1] + 1
    if not g.mask[i0:i1, j0:j1].all():
        raise ValueError("phase unwrap needs a solid rectangular active set")
    vals = field.values.copy()
    box = vals[i0:i1, j0:j1]
    rows = np.unwrap(box, axis=1)
    col0 = np.unwrap(box[:, 0])
    vals[i0:i1, j0:j1] = rows + (col0 - box[:, 0])[:, None]
    return RealField(g, vals)
