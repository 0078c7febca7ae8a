"""Matplotlib renderings of residual fields, patches, and convergence data.

Everything renders off-screen and lands on disk through the same atomic
replace used for the delimited output, so a crashed run never leaves a
truncated image behind.
"""

from __future__ import annotations

import io
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import RealField  # noqa: E402
from .immersion import ImmersionPatch  # noqa: E402
from .report import atomic_write_bytes  # noqa: E402

_DPI = 130


def _save(fig, path: str | os.PathLike) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI,
                metadata={"Software": "translator-forge"})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def residual_heatmap(res: RealField, title: str,
                     path: str | os.PathLike) -> None:
    """log10 of |residual| over the active region, inactive nodes blank."""
    g = res.grid
    vals = np.abs(np.asarray(res.values, dtype=float))
    floor = 1e-17
    img = np.where(g.mask, np.log10(np.maximum(vals, floor)), np.nan)
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")
    # axis 0 runs along u, so transpose to put u on the horizontal axis
    im = ax.imshow(img.T, origin="lower", aspect="auto", cmap=cmap,
                   extent=(g.u_min, g.u_max, g.v_min, g.v_max))
    fig.colorbar(im, ax=ax, label="log10 |residual|")
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_title(title)
    _save(fig, path)


def patch_surface(patch: ImmersionPatch, title: str,
                  path: str | os.PathLike,
                  slots: tuple[int, int, int] | None = None) -> None:
    """Render the patch as a surface over three coordinate slots.

    Four-component patches default to the first three slots and carry
    the remaining one as the color channel.
    """
    if slots is None:
        slots = (0, 1, 2)
    if len(slots) != 3 or any(s < 0 or s >= patch.dim for s in slots):
        raise ValueError(f"slots {slots!r} out of range for dim {patch.dim}")
    g = patch.grid
    coords = [np.where(g.mask, patch.X[..., s], np.nan) for s in slots]
    fig = plt.figure(figsize=(6.8, 5.8))
    ax = fig.add_subplot(projection="3d")
    kwargs = {"rcount": min(g.n_u, 80), "ccount": min(g.n_v, 80),
              "linewidth": 0, "antialiased": True}
    rest = [s for s in range(patch.dim) if s not in slots]
    if rest:
        color_vals = np.where(g.mask, patch.X[..., rest[0]], np.nan)
        norm = plt.Normalize(np.nanmin(color_vals), np.nanmax(color_vals))
        kwargs["facecolors"] = plt.get_cmap("viridis")(norm(color_vals))
        kwargs["shade"] = False
    else:
        kwargs["cmap"] = "viridis"
    ax.plot_surface(*coords, **kwargs)
    ax.set_xlabel(f"x{slots[0] + 1}")
    ax.set_ylabel(f"x{slots[1] + 1}")
    ax.set_zlabel(f"x{slots[2] + 1}")
    ax.set_title(title)
    _save(fig, path)


def convergence_plot(hs, errors_by_name: dict[str, list],
                     title: str, path: str | os.PathLike) -> None:
    """log-log error-vs-h curves with an h^2 guide line."""
    hs = np.asarray(hs, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    for name in sorted(errors_by_name):
        errs = np.asarray(errors_by_name[name], dtype=float)
        shown = np.maximum(errs, 1e-17)
        ax.loglog(hs, shown, marker="o", label=name)
    anchor = max(max(np.maximum(e, 1e-17).max() for e in errors_by_name.values()), 1e-16)
    guide = anchor * (hs / hs.max()) ** 2
    ax.loglog(hs, guide, "k--", linewidth=1, label="h^2 guide")
    ax.set_xlabel("h")
    ax.set_ylabel("max residual")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    _save(fig, path)
