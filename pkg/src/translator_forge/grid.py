"""Masked rectangular grids in the complex parameter plane and Wirtinger operators.

The parameter domain is a rectangle [u_min, u_max] x [v_min, v_max] sampled on
an equispaced node lattice, with a per-node boolean mask selecting the active
region.  All differential operators are second-order accurate: central
three-point stencils in the interior of the active region and one-sided
stencils of the same order where a neighbor is missing.  Operators never read
values at masked nodes; a node whose every admissible stencil would touch a
masked node raises StencilError instead of extrapolating.

Conventions: array axis 0 runs along u, axis 1 along v, and z = u + i v, so

    d/dz    = (d/du - i d/dv) / 2
    d/dzbar = (d/du + i d/dv) / 2
"""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

_AXIS_NAMES = {0: "u", 1: "v"}


class StencilError(ValueError):
    """No second-order stencil fits inside the active region at some node."""


class MaskTopologyError(ValueError):
    """Active region is not edge-connected or encloses inactive holes."""


@dataclass(frozen=True)
class ComplexGrid:
    """Equispaced node lattice on a rectangle with an active-node mask."""

    u_min: float
    u_max: float
    v_min: float
    v_max: float
    n_u: int
    n_v: int
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not (self.u_max > self.u_min and self.v_max > self.v_min):
            raise ValueError("grid bounds must satisfy u_min < u_max and v_min < v_max")
        if self.n_u < 5 or self.n_v < 5:
            raise ValueError("grid needs at least 5 nodes per direction")
        if self.mask is None:
            m = np.ones((self.n_u, self.n_v), dtype=bool)
        else:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != (self.n_u, self.n_v):
                raise ValueError(
                    f"mask shape {m.shape} does not match grid ({self.n_u}, {self.n_v})"
                )
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def h_u(self) -> float:
        return (self.u_max - self.u_min) / (self.n_u - 1)

    @property
    def h_v(self) -> float:
        return (self.v_max - self.v_min) / (self.n_v - 1)

    @property
    def u_axis(self) -> np.ndarray:
        return np.linspace(self.u_min, self.u_max, self.n_u)

    @property
    def v_axis(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_v)

    @property
    def uu(self) -> np.ndarray:
        return np.broadcast_to(self.u_axis[:, None], (self.n_u, self.n_v))

    @property
    def vv(self) -> np.ndarray:
        return np.broadcast_to(self.v_axis[None, :], (self.n_u, self.n_v))

    @property
    def z(self) -> np.ndarray:
        return self.uu + 1j * self.vv

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_u, self.n_v)

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    def with_mask(self, mask: np.ndarray) -> "ComplexGrid":
        return ComplexGrid(self.u_min, self.u_max, self.v_min, self.v_max,
                           self.n_u, self.n_v, mask)

    def eroded(self, k: int) -> "ComplexGrid":
        """Shrink the active region by k nodes in every direction."""
        if k <= 0:
            return self
        structure = np.ones((2 * k + 1, 2 * k + 1), dtype=bool)
        shrunk = ndimage.binary_erosion(self.mask, structure=structure, border_value=0)
        return self.with_mask(shrunk)

    def same_geometry(self, other: "ComplexGrid") -> bool:
        return (self.n_u == other.n_u and self.n_v == other.n_v
                and self.u_min == other.u_min and self.u_max == other.u_max
                and self.v_min == other.v_min and self.v_max == other.v_max)

    def nearest_node(self, u: float, v: float) -> tuple[int, int]:
        i = int(round((u - self.u_min) / self.h_u))
        j = int(round((v - self.v_min) / self.h_v))
        return min(max(i, 0), self.n_u - 1), min(max(j, 0), self.n_v - 1)


def grid_from_spacing(u_min: float, u_max: float, v_min: float, v_max: float,
                      h: float, mask: np.ndarray | None = None) -> ComplexGrid:
    """Build a grid whose spacing is as close to h as the spans allow."""
    if h <= 0:
        raise ValueError("spacing h must be positive")
    n_u = int(round((u_max - u_min) / h)) + 1
    n_v = int(round((v_max - v_min) / h)) + 1
    return ComplexGrid(u_min, u_max, v_min, v_max, n_u, n_v, mask)


@dataclass
class ComplexField:
    """Complex-valued node samples on a grid.  Values at inactive nodes are
    never read; they carry no meaning."""

    grid: ComplexGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n_u, self.grid.n_v):
            raise ValueError(
                f"field shape {vals.shape} does not match grid "
                f"({self.grid.n_u}, {self.grid.n_v})"
            )
        vals = vals.astype(np.complex128, copy=False)
        if not np.all(np.isfinite(vals[self.grid.mask])):
            raise ValueError("field has non-finite values at active nodes")
        self.values = vals


@dataclass
class RealField:
    """Real-valued node samples on a grid."""

    grid: ComplexGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n_u, self.grid.n_v):
            raise ValueError(
                f"field shape {vals.shape} does not match grid "
                f"({self.grid.n_u}, {self.grid.n_v})"
            )
        if not np.all(np.isfinite(vals[self.grid.mask])):
            raise ValueError("field has non-finite values at active nodes")
        self.values = vals


def field_from_function(grid: ComplexGrid, fn) -> ComplexField:
    """Sample fn(u, v) on the grid.  fn receives broadcastable coordinate arrays."""
    vals = np.asarray(fn(grid.uu, grid.vv), dtype=np.complex128)
    vals = np.broadcast_to(vals, (grid.n_u, grid.n_v)).copy()
    vals[~grid.mask] = 0.0
    return ComplexField(grid, vals)


def validate_active_region(grid: ComplexGrid) -> None:
    """Reject masks whose active set is disconnected or encloses holes."""
    active = grid.mask
    if not active.any():
        raise MaskTopologyError("active region is empty")
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    _, n_components = ndimage.label(active, structure=structure)
    if n_components != 1:
        raise MaskTopologyError(
            f"active region has {n_components} edge-connected components, expected 1"
        )
    inactive = ~active
    if inactive.any():
        labels, n_holes = ndimage.label(inactive, structure=structure)
        border = np.zeros_like(inactive)
        border[0, :] = border[-1, :] = True
        border[:, 0] = border[:, -1] = True
        touching = np.unique(labels[border & inactive])
        enclosed = set(range(1, n_holes + 1)) - set(int(t) for t in touching)
        if enclosed:
            raise MaskTopologyError(
                "active region is not simply connected: mask has "
                f"{len(enclosed)} enclosed hole(s)"
            )


def _shifted(arr: np.ndarray, offset: int, axis: int, fill) -> np.ndarray:
    """Array whose entry at index i equals arr at i + offset, fill beyond edges."""
    out = np.full_like(arr, fill)
    n = arr.shape[axis]
    if abs(offset) >= n:
        return out
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if offset >= 0:
        src[axis] = slice(offset, n)
        dst[axis] = slice(0, n - offset)
    else:
        src[axis] = slice(0, n + offset)
        dst[axis] = slice(-offset, n)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def _first_derivative(values: np.ndarray, active: np.ndarray, axis: int,
                      h: float) -> np.ndarray:
    """Second-order d/dx along axis on the active set.

    Central stencil where both neighbors are active, else the one-sided
    three-point stencil whose support lies in the active set.
    """
    w = np.where(active, values, 0.0)

    def sh(a, k):
        return _shifted(a, k, axis, False if a.dtype == bool else 0.0)

    ap1, ap2 = sh(active, 1), sh(active, 2)
    am1, am2 = sh(active, -1), sh(active, -2)
    wp1, wp2 = sh(w, 1), sh(w, 2)
    wm1, wm2 = sh(w, -1), sh(w, -2)

    central_ok = am1 & ap1
    fwd_ok = ap1 & ap2
    bwd_ok = am1 & am2

    central = (wp1 - wm1) / (2.0 * h)
    fwd = (-3.0 * w + 4.0 * wp1 - wp2) / (2.0 * h)
    bwd = (3.0 * w - 4.0 * wm1 + wm2) / (2.0 * h)

    out = np.where(central_ok, central, np.where(fwd_ok, fwd, bwd))
    unserved = active & ~(central_ok | fwd_ok | bwd_ok)
    if unserved.any():
        raise StencilError(
            f"no second-order {_AXIS_NAMES[axis]}-stencil fits at "
            f"{int(unserved.sum())} active node(s); active runs must span "
            "at least 3 nodes"
        )
    out[~active] = 0.0
    return out


def _second_derivative(values: np.ndarray, active: np.ndarray, axis: int,
                       h: float) -> np.ndarray:
    """Second-order d2/dx2 along axis on the active set."""
    w = np.where(active, values, 0.0)

    def sh(a, k):
        return _shifted(a, k, axis, False if a.dtype == bool else 0.0)

    ap = [sh(active, k) for k in (1, 2, 3)]
    am = [sh(active, -k) for k in (1, 2, 3)]
    wp = [sh(w, k) for k in (1, 2, 3)]
    wm = [sh(w, -k) for k in (1, 2, 3)]

    central_ok = am[0] & ap[0]
    fwd_ok = ap[0] & ap[1] & ap[2]
    bwd_ok = am[0] & am[1] & am[2]

    h2 = h * h
    central = (wp[0] - 2.0 * w + wm[0]) / h2
    fwd = (2.0 * w - 5.0 * wp[0] + 4.0 * wp[1] - wp[2]) / h2
    bwd = (2.0 * w - 5.0 * wm[0] + 4.0 * wm[1] - wm[2]) / h2

    out = np.where(central_ok, central, np.where(fwd_ok, fwd, bwd))
    unserved = active & ~(central_ok | fwd_ok | bwd_ok)
    if unserved.any():
        raise StencilError(
            f"no second-order {_AXIS_NAMES[axis]}-stencil for a second "
            f"derivative fits at {int(unserved.sum())} active node(s); "
            "active runs must span at least 4 nodes"
        )
    out[~active] = 0.0
    return out


def partial_u(field: ComplexField) -> ComplexField:
    g = field.grid
    return ComplexField(g, _first_derivative(field.values, g.mask, 0, g.h_u))


def partial_v(field: ComplexField) -> ComplexField:
    g = field.grid
    return ComplexField(g, _first_derivative(field.values, g.mask, 1, g.h_v))


def partial_uu(field: ComplexField) -> ComplexField:
    g = field.grid
    return ComplexField(g, _second_derivative(field.values, g.mask, 0, g.h_u))


def partial_vv(field: ComplexField) -> ComplexField:
    g = field.grid
    return ComplexField(g, _second_derivative(field.values, g.mask, 1, g.h_v))


def wirtinger_dz(field: ComplexField) -> ComplexField:
    """d/dz = (d/du - i d/dv)/2, second order on the active set."""
    g = field.grid
    du = _first_derivative(field.values, g.mask, 0, g.h_u)
    dv = _first_derivative(field.values, g.mask, 1, g.h_v)
    return ComplexField(g, 0.5 * (du - 1j * dv))


def wirtinger_dzbar(field: ComplexField) -> ComplexField:
    """d/dzbar = (d/du + i d/dv)/2, second order on the active set."""
    g = field.grid
    du = _first_derivative(field.values, g.mask, 0, g.h_u)
    dv = _first_derivative(field.values, g.mask, 1, g.h_v)
    return ComplexField(g, 0.5 * (du + 1j * dv))


def mixed_dz_dzbar(field: ComplexField) -> ComplexField:
    """d2/dz dzbar = (d2/du2 + d2/dv2)/4 via direct second-derivative stencils."""
    g = field.grid
    duu = _second_derivative(field.values, g.mask, 0, g.h_u)
    dvv = _second_derivative(field.values, g.mask, 1, g.h_v)
    return ComplexField(g, 0.25 * (duu + dvv))


def field_to_csv(f: ComplexField | RealField, path: str | os.PathLike) -> None:
    """Write active nodes as rows (index, u, v, re, im) atomically."""
    g = f.grid
    uu, vv = g.uu, g.vv
    vals = np.asarray(f.values, dtype=np.complex128)
    idx = np.flatnonzero(g.mask.ravel())
    rows = zip(idx,
               uu.ravel()[idx], vv.ravel()[idx],
               vals.ravel()[idx].real, vals.ravel()[idx].imag)
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "u", "v", "re", "im"])
            for index, u, v, re, im in rows:
                writer.writerow([int(index), f"{u:.17g}", f"{v:.17g}",
                                 f"{re:.17g}", f"{im:.17g}"])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
