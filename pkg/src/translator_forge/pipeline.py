"""End-to-end runs: configuration, verification, integration, export.

The functions here sit between the numerical core and the command line.
Each run builds a pair on a grid, pushes it through the construction, and
leaves a residual report plus figures and delimited data in the output
directory.  Nothing here prints; the CLI owns presentation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .catalog import CATALOG_NAMES, ExampleSpec, catalog
from .exprlang import ExpressionError, parse_expression
from .gaussmap import (MODES, compatibility_F, equivalence_check_L_R,
                       integrability_residuals)
from .grid import ComplexGrid, field_to_csv, grid_from_spacing
from .immersion import (ImmersionPatch, conformality_defect,
                        integrate_immersion, loop_closure_field)
from .nullcurve import (build_null_curve, integrability_residual,
                        norm_identity_defect, nullity_defect, phi_scale)
from .report import (Evaluation, ResidualReport, atomic_write_text,
                     evaluate_report, load_baselines, summarize_value)
from .verify import CURVATURE_MARGIN, mean_curvature

DEFAULT_H = 0.02
CONVERGE_LEVELS = 3
# physical interior margin for curvature checks across refinement levels,
# so the compared region stays fixed while h shrinks
CURVATURE_PHYSICAL_MARGIN = 0.12


class ConfigError(ValueError):
    """Bad flag, config key, or inconsistent combination."""


CONFIG_KEYS = ("example", "theta", "expr_g1", "expr_g2", "h", "domain",
               "mode", "anchor", "out_dir", "force")


@dataclass(frozen=True)
class RunConfig:
    example: str | None = None
    theta: float | None = None
    expr_g1: str | None = None
    expr_g2: str | None = None
    h: float = DEFAULT_H
    domain: tuple[float, float, float, float] | None = None
    mode: str | None = None
    anchor: tuple[float, float] | None = None
    out_dir: str = "."
    force: bool = False


def parse_config_file(path: str | os.PathLike) -> dict:
    """Flat key = value lines; '#' starts a comment; unknown keys fail."""
    values: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _to_float(key: str, text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {text!r}") from None


def _to_floats(key: str, text, n: int) -> tuple:
    if isinstance(text, (tuple, list)):
        parts = list(text)
    else:
        parts = [p for p in str(text).replace(",", " ").split() if p]
    if len(parts) != n:
        raise ConfigError(f"{key} needs {n} comma-separated numbers, "
                          f"got {text!r}")
    return tuple(_to_float(key, p) for p in parts)


def _to_bool(key: str, text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {text!r}")


def make_config(file_values: dict | None = None, need_example: bool = True,
                **flags) -> RunConfig:
    """Merge config-file values with flags; flags win."""
    merged: dict = dict(file_values or {})
    for key, val in flags.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown option {key!r}")
        if val is not None:
            merged[key] = val

    cfg = RunConfig()
    if "example" in merged:
        cfg = replace(cfg, example=str(merged["example"]))
    if "theta" in merged:
        cfg = replace(cfg, theta=_to_float("theta", merged["theta"]))
    if "expr_g1" in merged:
        cfg = replace(cfg, expr_g1=str(merged["expr_g1"]))
    if "expr_g2" in merged:
        cfg = replace(cfg, expr_g2=str(merged["expr_g2"]))
    if "h" in merged:
        cfg = replace(cfg, h=_to_float("h", merged["h"]))
    if "domain" in merged:
        cfg = replace(cfg, domain=_to_floats("domain", merged["domain"], 4))
    if "mode" in merged:
        cfg = replace(cfg, mode=str(merged["mode"]))
    if "anchor" in merged:
        cfg = replace(cfg, anchor=_to_floats("anchor", merged["anchor"], 2))
    if "out_dir" in merged:
        cfg = replace(cfg, out_dir=str(merged["out_dir"]))
    if "force" in merged:
        cfg = replace(cfg, force=_to_bool("force", merged["force"]))
    validate_config(cfg, need_example=need_example)
    return cfg


def validate_config(cfg: RunConfig, need_example: bool = True) -> None:
    if cfg.h <= 0:
        raise ConfigError(f"h must be positive, got {cfg.h}")
    if cfg.mode is not None and cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    has_exprs = cfg.expr_g1 is not None or cfg.expr_g2 is not None
    if has_exprs and (cfg.expr_g1 is None or cfg.expr_g2 is None):
        raise ConfigError("expr_g1 and expr_g2 must be given together")
    if has_exprs:
        if cfg.example not in (None, "custom_expression"):
            raise ConfigError("expressions conflict with a named example")
    elif need_example:
        if cfg.example is None:
            raise ConfigError("either an example name or an expression pair "
                              "is required")
        if cfg.example == "custom_expression":
            raise ConfigError("custom_expression needs expr_g1 and expr_g2")
        if cfg.example not in CATALOG_NAMES:
            raise ConfigError(f"unknown example {cfg.example!r}; choices: "
                              f"{', '.join(CATALOG_NAMES)}")
    if cfg.theta is not None and not has_exprs and need_example \
            and cfg.example != "tilted_reaper":
        raise ConfigError("theta only applies to tilted_reaper")
    if cfg.domain is not None:
        u0, u1, v0, v1 = cfg.domain
        if not (u0 < u1 and v0 < v1):
            raise ConfigError(f"degenerate domain {cfg.domain}")


def resolve_spec(cfg: RunConfig) -> ExampleSpec:
    if cfg.expr_g1 is not None:
        source = cfg.expr_g1
        try:
            g1 = parse_expression(source)
            source = cfg.expr_g2
            g2 = parse_expression(source)
        except ExpressionError as exc:
            raise ConfigError(f"bad expression {source!r}: {exc}") from exc
        params: dict = {"g1_fn": g1, "g2_fn": g2}
        if cfg.mode is not None:
            params["mode"] = cfg.mode
        if cfg.domain is not None:
            params["domain"] = cfg.domain
        return catalog("custom_expression", **params)
    params = {}
    if cfg.example == "tilted_reaper" and cfg.theta is not None:
        params["theta"] = cfg.theta
    try:
        spec = catalog(cfg.example, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.mode is not None and cfg.mode != spec.mode:
        raise ConfigError(f"{spec.name} is fixed to mode {spec.mode}")
    return spec


def build_grid(cfg: RunConfig, spec: ExampleSpec) -> ComplexGrid:
    domain = cfg.domain if cfg.domain is not None else spec.default_domain
    try:
        return grid_from_spacing(*domain, cfg.h)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _anchor_index(cfg: RunConfig, grid: ComplexGrid):
    if cfg.anchor is None:
        return None
    au, av = cfg.anchor
    if not (grid.u_min <= au <= grid.u_max and grid.v_min <= av <= grid.v_max):
        raise ConfigError(f"anchor {cfg.anchor} lies outside the domain")
    idx = grid.nearest_node(au, av)
    if not grid.mask[idx]:
        raise ConfigError(f"anchor {cfg.anchor} maps to an inactive node")
    return idx


@dataclass
class RunArtifacts:
    report: ResidualReport
    evaluation: Evaluation | None
    paths: list[str]
    patch: ImmersionPatch | None = None


def _closed_form_errors(spec, patch):
    """(max component error, relative metric error field) where defined."""
    grid = patch.grid
    x_err = None
    metric_field = None
    if spec.closed_form_X is not None:
        want = spec.closed_form_X(grid.uu, grid.vv)
        i0, j0 = patch.anchor_index
        want = want - want[i0, j0] + patch.anchor_pos
        diff = np.abs(patch.X - want)
        x_err = float(diff[grid.mask].max())
    if spec.closed_form_metric is not None:
        from .grid import RealField
        want_m = spec.closed_form_metric(grid.uu, grid.vv)
        rel = np.abs(patch.Lambda2.values - want_m) / np.abs(want_m)
        metric_field = RealField(grid, np.where(grid.mask, rel, 0.0))
    return x_err, metric_field


def _core_run(cfg: RunConfig, spec: ExampleSpec, grid: ComplexGrid,
              curvature_margin: int = CURVATURE_MARGIN):
    """Shared computation: pair through curvature, all residuals."""
    pair = spec.pair_generator(grid)
    F, cp = compatibility_F(pair)
    conds = integrability_residuals(pair, F)
    equiv_max, _ = equivalence_check_L_R(conds, pair)
    ncf = build_null_curve(pair, F, reduce_to_r3=(spec.dim == 3))
    # phi_scale is already quadratic in phi, the same order as both defects
    scale2 = phi_scale(ncf)
    patch = integrate_immersion(ncf, anchor=_anchor_index(cfg, grid),
                                force=cfg.force)
    conf_ratio, conf_cross = conformality_defect(patch)
    curv = mean_curvature(patch, margin=curvature_margin)

    report = ResidualReport(example=spec.name, grid=grid)
    report.add("compatibility", conds.cp_residual)
    report.add("integrability_L", conds.L_residual)
    report.add("integrability_R", conds.R_residual)
    report.add("ratio_equivalence", equiv_max)
    nullity = nullity_defect(ncf)
    norm_id = norm_identity_defect(ncf)
    n_active = grid.n_active
    report.add("nullity", summarize_value(
        float(nullity.values[grid.mask].max()) / scale2, n_active))
    report.add("norm_identity", summarize_value(
        float(norm_id.values[grid.mask].max()) / scale2, n_active))
    report.add("phi_integrability", integrability_residual(ncf).residual)
    report.add("loop_closure", patch.loop_residual)
    report.add("conformality_ratio", conf_ratio)
    report.add("conformality_cross", conf_cross)
    report.add("translator", curv.residual)

    x_err, metric_field = _closed_form_errors(spec, patch)
    if x_err is not None:
        report.add("closed_form_X", x_err)
    if metric_field is not None:
        report.add("closed_form_metric", metric_field)
    return report, patch, curv, cp, ncf


def run_verify(cfg: RunConfig) -> RunArtifacts:
    from .figures import patch_surface, residual_heatmap

    spec = resolve_spec(cfg)
    grid = build_grid(cfg, spec)
    report, patch, curv, cp, _ = _core_run(cfg, spec, grid)
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []

    json_path = os.path.join(cfg.out_dir, f"{spec.name}_report.json")
    report.write(json_path)
    paths.append(json_path)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_translator.png")
    residual_heatmap(curv.residual, f"{spec.name}: translator defect", fig)
    paths.append(fig)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_compatibility.png")
    residual_heatmap(cp, f"{spec.name}: compatibility defect", fig)
    paths.append(fig)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_surface.png")
    patch_surface(patch, spec.name, fig)
    paths.append(fig)

    evaluation = evaluate_report(report, load_baselines())
    return RunArtifacts(report, evaluation, paths, patch)


def run_integrate(cfg: RunConfig) -> RunArtifacts:
    from .figures import patch_surface, residual_heatmap

    spec = resolve_spec(cfg)
    grid = build_grid(cfg, spec)
    report, patch, curv, _, ncf = _core_run(cfg, spec, grid)
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []

    csv_path = os.path.join(cfg.out_dir, f"{spec.name}_patch.csv")
    patch_to_csv(patch, csv_path)
    paths.append(csv_path)
    obj_path = os.path.join(cfg.out_dir, f"{spec.name}.obj")
    paths.extend(patch_to_obj(patch, obj_path))
    json_path = os.path.join(cfg.out_dir, f"{spec.name}_report.json")
    report.write(json_path)
    paths.append(json_path)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_surface.png")
    patch_surface(patch, spec.name, fig)
    paths.append(fig)
    loops = loop_closure_field(ncf)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_loop_closure.png")
    residual_heatmap(loops, f"{spec.name}: cell circulation", fig)
    paths.append(fig)

    evaluation = evaluate_report(report, load_baselines())
    return RunArtifacts(report, evaluation, paths, patch)


CONVERGENCE_NAMES = ("compatibility", "phi_integrability", "loop_closure",
                     "conformality_ratio", "conformality_cross", "translator",
                     "closed_form_X", "closed_form_metric")


def run_converge(cfg: RunConfig) -> RunArtifacts:
    """Run the residual suite at h, h/2, h/4 and report decay ratios."""
    from .figures import convergence_plot

    spec = resolve_spec(cfg)
    hs = [cfg.h / (2 ** k) for k in range(CONVERGE_LEVELS)]
    reports = []
    for h_k in hs:
        level_cfg = replace(cfg, h=h_k)
        grid = build_grid(level_cfg, spec)
        margin = max(CURVATURE_MARGIN,
                     int(round(CURVATURE_PHYSICAL_MARGIN / max(grid.h_u,
                                                               grid.h_v))))
        rep, _, _, _, _ = _core_run(level_cfg, spec, grid,
                                    curvature_margin=margin)
        reports.append(rep)

    final = reports[-1]
    errs_by_name: dict[str, list] = {}
    for name in CONVERGENCE_NAMES:
        if all(name in r.residuals for r in reports):
            errs = [r.residuals[name].max for r in reports]
            errs_by_name[name] = errs
            if errs[-1] > 1e-13 and errs[-2] > 1e-13:
                final.convergence[name] = errs[-2] / errs[-1]

    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []
    json_path = os.path.join(cfg.out_dir, f"{spec.name}_convergence.json")
    final.write(json_path)
    paths.append(json_path)
    fig = os.path.join(cfg.out_dir, f"{spec.name}_convergence.png")
    convergence_plot(hs, errs_by_name, f"{spec.name}: residual decay", fig)
    paths.append(fig)

    evaluation = evaluate_report(final, load_baselines())
    return RunArtifacts(final, evaluation, paths)


def run_export_catalog(cfg: RunConfig) -> RunArtifacts:
    """Write mesh, patch, and Gauss-map data for every built-in example."""
    from .figures import patch_surface

    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []
    names = [n for n in CATALOG_NAMES if n != "custom_expression"]
    last_report = None
    for name in names:
        params = {}
        if name == "tilted_reaper" and cfg.theta is not None:
            params["theta"] = cfg.theta
        spec = catalog(name, **params)
        grid = grid_from_spacing(*spec.default_domain, cfg.h)
        pair = spec.pair_generator(grid)
        F, _ = compatibility_F(pair)
        ncf = build_null_curve(pair, F, reduce_to_r3=(spec.dim == 3))
        patch = integrate_immersion(ncf, force=cfg.force)

        csv_path = os.path.join(cfg.out_dir, f"{name}_patch.csv")
        patch_to_csv(patch, csv_path)
        paths.append(csv_path)
        obj_path = os.path.join(cfg.out_dir, f"{name}.obj")
        paths.extend(patch_to_obj(patch, obj_path))
        for label, fld in (("g1", pair.g1), ("g2", pair.g2)):
            fpath = os.path.join(cfg.out_dir, f"{name}_{label}.csv")
            field_to_csv(fld, fpath)
            paths.append(fpath)
        fig = os.path.join(cfg.out_dir, f"{name}_surface.png")
        patch_surface(patch, name, fig)
        paths.append(fig)

        last_report = ResidualReport(example=name, grid=grid)
        last_report.add("loop_closure", patch.loop_residual)
    return RunArtifacts(last_report, None, paths)


def patch_to_csv(patch: ImmersionPatch, path: str | os.PathLike) -> None:
    """Active nodes as rows (u, v, x1..xd), row-major, atomic write."""
    g = patch.grid
    header = ["u", "v"] + [f"x{k + 1}" for k in range(patch.dim)]
    lines = [",".join(header)]
    uu, vv = g.uu, g.vv
    for i in range(g.n_u):
        for j in range(g.n_v):
            if not g.mask[i, j]:
                continue
            row = [f"{uu[i, j]:.17g}", f"{vv[i, j]:.17g}"]
            row += [f"{patch.X[i, j, k]:.17g}" for k in range(patch.dim)]
            lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def patch_to_obj(patch: ImmersionPatch, path: str | os.PathLike,
                 slots: tuple[int, int, int] = (0, 1, 2)) -> list[str]:
    """Triangulated mesh over the active nodes.

    Components outside the three OBJ slots go to a sidecar csv keyed by
    OBJ vertex id, so a four-component patch loses nothing.  Returns the
    list of files written.
    """
    g = patch.grid
    if any(s < 0 or s >= patch.dim for s in slots):
        raise ValueError(f"slots {slots!r} out of range for dim {patch.dim}")
    vid = np.zeros((g.n_u, g.n_v), dtype=int)
    verts = []
    next_id = 1
    for i in range(g.n_u):
        for j in range(g.n_v):
            if g.mask[i, j]:
                vid[i, j] = next_id
                verts.append((i, j))
                next_id += 1
    lines = ["# translator-forge surface mesh",
             f"# components: {patch.dim}, obj slots: "
             + " ".join(f"x{s + 1}" for s in slots)]
    for i, j in verts:
        xyz = " ".join(f"{patch.X[i, j, s]:.17g}" for s in slots)
        lines.append(f"v {xyz}")
    quad_ok = (g.mask[:-1, :-1] & g.mask[1:, :-1]
               & g.mask[1:, 1:] & g.mask[:-1, 1:])
    for i, j in zip(*np.nonzero(quad_ok)):
        a, b = vid[i, j], vid[i + 1, j]
        c, d = vid[i + 1, j + 1], vid[i, j + 1]
        lines.append(f"f {a} {b} {c}")
        lines.append(f"f {a} {c} {d}")
    atomic_write_text(path, "\n".join(lines) + "\n")
    written = [os.fspath(path)]

    rest = [s for s in range(patch.dim) if s not in slots]
    if rest:
        stem, _ = os.path.splitext(os.fspath(path))
        side = stem + "_extra.csv"
        header = ["vertex", "u", "v"] + [f"x{s + 1}" for s in rest]
        rows = [",".join(header)]
        for i, j in verts:
            row = [str(vid[i, j]), f"{g.uu[i, j]:.17g}", f"{g.vv[i, j]:.17g}"]
            row += [f"{patch.X[i, j, s]:.17g}" for s in rest]
            rows.append(",".join(row))
        atomic_write_text(side, "\n".join(rows) + "\n")
        written.append(side)
    return written
