"""Path integration of the null-curve field into a surface patch.

The surface X satisfies X_u = 2 Re phi and X_v = -2 Im phi.  Integration uses
trapezoidal quadrature along a deterministic spanning tree of L-shaped paths
from the anchor node: first the anchor's u-column, then every v-row
independently (row_major), or the transpose order (column_major).  Exactness
at the anchor is bitwise: X(anchor) = anchor_pos.

Before integrating, the loop-closure residual gates the run: the circulation
of (X_u, X_v) around each interior grid cell, normalized by cell area, must
stay below a threshold proportional to h^2 or the integration refuses (the
field is not closed enough for path independence to be meaningful).  --force
semantics are exposed through the force flag.

Masked grids integrate over a breadth-first spanning tree instead, visiting
active nodes in deterministic row-major neighbor order; the catalog examples
never need this fallback, full rectangles always take the L-path route.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import ComplexGrid, RealField, validate_active_region
from .nullcurve import NullCurveField

DEFAULT_REFUSAL_FACTOR = 1e3


class IntegrationRefusal(RuntimeError):
    """Loop-closure residual too large for trustworthy path integration."""


@dataclass
class ImmersionPatch:
    """Integrated surface patch.  X has shape (n_u, n_v, dim) and the induced
    conformal factor satisfies Lambda^2 = 4 |f|^2 (1+|g1|^2)(1+|g2|^2)."""

    grid: ComplexGrid
    X: np.ndarray
    Lambda2: RealField
    dim: int
    anchor_index: tuple[int, int]
    anchor_pos: np.ndarray
    loop_residual: float


def _frame_fields(ncf: NullCurveField) -> tuple[np.ndarray, np.ndarray]:
    """(X_u, X_v) arrays of shape (n_u, n_v, dim) from phi."""
    slots = ncf.surface_slots
    grid = ncf.grid
    Xu = np.empty((grid.n_u, grid.n_v, len(slots)))
    Xv = np.empty((grid.n_u, grid.n_v, len(slots)))
    for out_k, k in enumerate(slots):
        vals = ncf.phi[k].values
        Xu[:, :, out_k] = 2.0 * vals.real
        Xv[:, :, out_k] = -2.0 * vals.imag
    return Xu, Xv


def loop_closure_field(ncf: NullCurveField, margin: int = 1) -> RealField:
    """Per-cell circulation of (X_u, X_v), normalized by cell area.

    The value for cell (i, j) is stored at its lower-left corner.  Cells must
    have all four corners inside the eroded active region; margin 1 keeps the
    boundary ring (whose one-sided derivative errors are not smooth) out of
    the closure estimate.  Cell nodes outside that region carry zero and are
    masked off in the returned field.
    """
    grid = ncf.grid
    Xu, Xv = _frame_fields(ncf)
    h_u, h_v = grid.h_u, grid.h_v
    act = grid.eroded(margin).mask if margin > 0 else grid.mask
    corners = act[:-1, :-1] & act[1:, :-1] & act[:-1, 1:] & act[1:, 1:]

    # counterclockwise: bottom edge +u, right edge +v, top edge -u, left edge -v
    bottom = 0.5 * h_u * (Xu[:-1, :-1] + Xu[1:, :-1])
    top = 0.5 * h_u * (Xu[:-1, 1:] + Xu[1:, 1:])
    right = 0.5 * h_v * (Xv[1:, :-1] + Xv[1:, 1:])
    left = 0.5 * h_v * (Xv[:-1, :-1] + Xv[:-1, 1:])
    circ = bottom + right - top - left
    norm = np.linalg.norm(circ, axis=2) / (h_u * h_v)

    cell_vals = np.zeros((grid.n_u, grid.n_v))
    cell_vals[:-1, :-1] = np.where(corners, norm, 0.0)
    cell_mask = np.zeros((grid.n_u, grid.n_v), dtype=bool)
    cell_mask[:-1, :-1] = corners
    return RealField(grid.with_mask(cell_mask), cell_vals)


def loop_closure_residual(ncf: NullCurveField, margin: int = 1) -> float:
    field = loop_closure_field(ncf, margin)
    if not field.grid.mask.any():
        return 0.0
    return float(field.values[field.grid.mask].max())


def _cumtrap(deriv: np.ndarray, start: np.ndarray, h: float, axis: int,
             i0: int) -> np.ndarray:
    """Cumulative trapezoid along axis in both directions from index i0."""
    out = np.zeros_like(deriv)
    d = np.moveaxis(deriv, axis, 0)
    o = np.moveaxis(out, axis, 0)
    n = d.shape[0]
    o[i0] = start
    if i0 + 1 < n:
        steps = 0.5 * h * (d[i0:n - 1] + d[i0 + 1:n])
        o[i0 + 1:] = start + np.cumsum(steps, axis=0)
    if i0 > 0:
        steps = 0.5 * h * (d[i0:0:-1] + d[i0 - 1::-1])
        o[i0 - 1::-1] = start - np.cumsum(steps, axis=0)
    return out


def _integrate_full(Xu, Xv, grid, anchor, anchor_pos, order):
    i0, j0 = anchor
    if order == "row_major":
        # anchor's u-column first, then each v-row from the column
        col = _cumtrap(Xu[:, j0, :], anchor_pos, grid.h_u, 0, i0)
        return _cumtrap(Xv, col, grid.h_v, 1, j0)
    # column_major: anchor's v-row first, then each u-column from the row
    row = _cumtrap(Xv[i0, :, :], anchor_pos, grid.h_v, 0, j0)
    return _cumtrap(Xu, row, grid.h_u, 0, i0)


def _integrate_bfs(Xu, Xv, grid, anchor, anchor_pos):
    """Deterministic breadth-first tree over the active set."""
    act = grid.mask
    dim = Xu.shape[2]
    X = np.zeros((grid.n_u, grid.n_v, dim))
    seen = np.zeros_like(act)
    i0, j0 = anchor
    X[i0, j0] = anchor_pos
    seen[i0, j0] = True
    queue = deque([(i0, j0)])
    h_u, h_v = grid.h_u, grid.h_v
    while queue:
        i, j = queue.popleft()
        for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ni, nj = i + di, j + dj
            if 0 <= ni < grid.n_u and 0 <= nj < grid.n_v \
                    and act[ni, nj] and not seen[ni, nj]:
                if di:
                    step = 0.5 * h_u * di * (Xu[i, j] + Xu[ni, nj])
                else:
                    step = 0.5 * h_v * dj * (Xv[i, j] + Xv[ni, nj])
                X[ni, nj] = X[i, j] + step
                seen[ni, nj] = True
                queue.append((ni, nj))
    return X


def induced_metric_field(ncf: NullCurveField) -> RealField:
    """Lambda^2 = 4 |f|^2 (1 + |g1|^2)(1 + |g2|^2) on the active set."""
    grid = ncf.grid
    g1 = np.where(grid.mask, ncf.pair.g1.values, 0.0)
    g2 = np.where(grid.mask, ncf.pair.g2.values, 0.0)
    lam = (4.0 * np.abs(ncf.f.values) ** 2
           * (1.0 + np.abs(g1) ** 2) * (1.0 + np.abs(g2) ** 2))
    return RealField(grid, np.where(grid.mask, lam, 0.0))


@dataclass
class MetricCrossCheck:
    """Lambda^2 with the two alternative single-slot expressions.

    Each alternative uses only one map's dzbar derivative:
        16 |dzbar g1|^2 / |1 - g1 conj(g2)|^2 * (1+|g2|^2)/(1+|g1|^2)
    and the mirrored form.  All three agree under compatibility.
    """

    Lambda2: RealField
    max_disagreement: float


def induced_metric(ncf: NullCurveField) -> MetricCrossCheck:
    from .grid import wirtinger_dzbar  # local import to keep module deps flat

    grid = ncf.grid
    lam = induced_metric_field(ncf)
    g1 = np.where(grid.mask, ncf.pair.g1.values, 0.0)
    g2 = np.where(grid.mask, ncf.pair.g2.values, 0.0)
    d1 = wirtinger_dzbar(ncf.pair.g1).values
    d2 = wirtinger_dzbar(ncf.pair.g2).values
    den = np.where(grid.mask, np.abs(1.0 - g1 * np.conj(g2)) ** 2, 1.0)
    alt1 = 16.0 * np.abs(d1) ** 2 / den * (1.0 + np.abs(g2) ** 2) / (1.0 + np.abs(g1) ** 2)
    alt2 = 16.0 * np.abs(d2) ** 2 / den * (1.0 + np.abs(g1) ** 2) / (1.0 + np.abs(g2) ** 2)
    spread = np.maximum(np.abs(alt1 - lam.values), np.abs(alt2 - lam.values))
    disagreement = float(spread[grid.mask].max(initial=0.0))
    return MetricCrossCheck(lam, disagreement)


def integrate_immersion(ncf: NullCurveField,
                        anchor: tuple[int, int] | None = None,
                        anchor_pos: np.ndarray | None = None,
                        order: str = "row_major",
                        refusal_factor: float = DEFAULT_REFUSAL_FACTOR,
                        force: bool = False) -> ImmersionPatch:
    """Integrate phi into a patch, refusing on poor loop closure.

    The refusal threshold is refusal_factor * max(h_u, h_v)^2 against the
    maximum normalized cell circulation.
    """
    grid = ncf.grid
    validate_active_region(grid)
    if order not in ("row_major", "column_major"):
        raise ValueError(f"unknown integration order {order!r}")
    if anchor is None:
        anchor = grid.nearest_node(0.0, 0.0)
    i0, j0 = anchor
    if not grid.mask[i0, j0]:
        raise ValueError(f"anchor node {anchor} is not active")
    dim = 3 if ncf.dim == 3 else 4
    if anchor_pos is None:
        anchor_pos = np.zeros(dim)
    anchor_pos = np.asarray(anchor_pos, dtype=np.float64)
    if anchor_pos.shape != (dim,):
        raise ValueError(f"anchor position must have {dim} components")

    loop_max = loop_closure_residual(ncf)
    h = max(grid.h_u, grid.h_v)
    threshold = refusal_factor * h * h
    if loop_max > threshold and not force:
        raise IntegrationRefusal(
            f"loop-closure residual {loop_max:.3g} exceeds refusal threshold "
            f"{threshold:.3g}; the field is not integrable at this tolerance "
            "(pass force to integrate anyway)"
        )

    Xu, Xv = _frame_fields(ncf)
    if grid.mask.all():
        X = _integrate_full(Xu, Xv, grid, anchor, anchor_pos, order)
    else:
        X = _integrate_bfs(Xu, Xv, grid, anchor, anchor_pos)
    X[~grid.mask] = 0.0
    return ImmersionPatch(grid, X, induced_metric_field(ncf), dim,
                          (i0, j0), anchor_pos, loop_max)


def conformality_defect(patch: ImmersionPatch,
                        margin: int = 2) -> tuple[RealField, RealField]:
    """Normalized conformality checks from the discrete frame.

    Returns (| |X_u|^2 - |X_v|^2 | / Lambda^2, |X_u . X_v| / Lambda^2) as
    fields on the margin-eroded active set.  X itself carries an O(h^2) error
    ramp whose slope jumps where the stencil type changes, so differentiating
    it is only clean O(h^2) away from the active-region edge; margin=2 skips
    the polluted ring.
    """
    from .grid import ComplexField, wirtinger_dz  # late import, avoids cycle

    grid = patch.grid
    inner = grid.eroded(margin) if margin > 0 else grid
    lam = np.where(inner.mask, patch.Lambda2.values, 1.0)
    lam = np.where(lam == 0.0, 1.0, lam)
    Xu = np.empty_like(patch.X)
    Xv = np.empty_like(patch.X)
    for k in range(patch.dim):
        dz = wirtinger_dz(ComplexField(grid, patch.X[:, :, k])).values
        Xu[:, :, k] = 2.0 * dz.real
        Xv[:, :, k] = -2.0 * dz.imag
    nu = (Xu ** 2).sum(axis=2)
    nv = (Xv ** 2).sum(axis=2)
    dot = (Xu * Xv).sum(axis=2)
    ratio = RealField(inner, np.where(inner.mask, np.abs(nu - nv) / lam, 0.0))
    cross = RealField(inner, np.where(inner.mask, np.abs(dot) / lam, 0.0))
    return ratio, cross
