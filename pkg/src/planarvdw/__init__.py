"""Van der Waals (Casimir-Lifshitz) pressure in planar multilayers of dissipative media."""

from .constants import C, HBAR, KB
from .em_core import (
    POLARIZATIONS,
    Layer,
    Polarization,
    ReflectionSide,
    Stack,
    composition,
    fresnel,
    generalized_reflection,
    kz,
)
from .kernel import (
    MatsubaraSpec,
    PressureResult,
    ProbeGeometry,
    QuadratureSpec,
    SeriesResult,
    SeriesTruncationError,
    gap_closure_derivative,
    kernel_Kn,
    matsubara_frequency,
    stress_tensor_avg,
    work_to_close_gap,
)
from .materials import VACUUM, MaterialModel, OscillatorTerm, eval_permeability, eval_permittivity
from .pressure import (
    free_energy_lr,
    pressure_in_layer,
    pressure_lr,
    pressure_lr_dlp,
    pressure_lv,
    pressure_vv,
)
from .quadrature import QuadratureError

__all__ = [
    "C",
    "HBAR",
    "KB",
    "POLARIZATIONS",
    "Layer",
    "Polarization",
    "ReflectionSide",
    "Stack",
    "composition",
    "fresnel",
    "generalized_reflection",
    "kz",
    "MatsubaraSpec",
    "PressureResult",
    "ProbeGeometry",
    "QuadratureSpec",
    "SeriesResult",
    "SeriesTruncationError",
    "gap_closure_derivative",
    "kernel_Kn",
    "matsubara_frequency",
    "stress_tensor_avg",
    "work_to_close_gap",
    "VACUUM",
    "MaterialModel",
    "OscillatorTerm",
    "eval_permeability",
    "eval_permittivity",
    "free_energy_lr",
    "pressure_in_layer",
    "pressure_lr",
    "pressure_lr_dlp",
    "pressure_lv",
    "pressure_vv",
    "QuadratureError",
]

__version__ = "0.1.0"
