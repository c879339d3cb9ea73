"""Quantum geometry of parameterized states from two-point generating functions."""

__version__ = "0.1.0"

from .errors import QGeomError
from .genfun import fidelity, fidelity_2x2_closed, genfun_eval, two_slot, uhlmann_fidelity
from .geometry import GeometryReport, geometry_report, qfim
from .numdiff import (
    StencilConfig,
    berry_matrix,
    christoffel_from_genfun,
    qfim_from_genfun,
    ray_series_fit,
)
from .states import StateFamily, build_family, load_model_config

__all__ = [
    "GeometryReport",
    "QGeomError",
    "StateFamily",
    "StencilConfig",
    "berry_matrix",
    "build_family",
    "christoffel_from_genfun",
    "fidelity",
    "fidelity_2x2_closed",
    "genfun_eval",
    "geometry_report",
    "load_model_config",
    "qfim",
    "qfim_from_genfun",
    "ray_series_fit",
    "two_slot",
    "uhlmann_fidelity",
]
