"""Translating-soliton surfaces from prescribed Gauss map pairs.

The package turns a pair of complex-valued maps on a planar grid into an
immersed surface patch whose mean curvature vector equals the normal part
of a fixed translation direction, and checks every step of that
construction against finite-difference residuals.
"""

from .catalog import CATALOG_NAMES, ExampleSpec, catalog
from .gaussmap import (BranchPointError, GaussMapPair, compatibility_F,
                       equivalence_check_L_R, integrability_residuals,
                       make_pair, pair_from_functions)
from .grid import (ComplexField, ComplexGrid, MaskTopologyError, RealField,
                   StencilError, field_from_function, grid_from_spacing)
from .immersion import (ImmersionPatch, IntegrationRefusal,
                        conformality_defect, integrate_immersion)
from .nullcurve import (NullCurveField, build_null_curve, norm_identity_defect,
                        nullity_defect)
from .report import ResidualReport, evaluate_report, load_baselines
from .verify import (graphical_pde_residual, mean_curvature,
                     recover_gauss_map, translator_residual)

__all__ = [
    "BranchPointError",
    "CATALOG_NAMES",
    "ComplexField",
    "ComplexGrid",
    "ExampleSpec",
    "GaussMapPair",
    "ImmersionPatch",
    "IntegrationRefusal",
    "MaskTopologyError",
    "NullCurveField",
    "RealField",
    "ResidualReport",
    "StencilError",
    "build_null_curve",
    "catalog",
    "compatibility_F",
    "conformality_defect",
    "equivalence_check_L_R",
    "evaluate_report",
    "field_from_function",
    "graphical_pde_residual",
    "grid_from_spacing",
    "integrability_residuals",
    "integrate_immersion",
    "load_baselines",
    "make_pair",
    "mean_curvature",
    "norm_identity_defect",
    "nullity_defect",
    "pair_from_functions",
    "recover_gauss_map",
    "translator_residual",
]

__version__ = "0.1.0"
