"""Thevenin-equivalent estimation from phasor measurements at the point of common coupling."""

__version__ = "0.1.0"

from .circuit import LoadSchedule, NoiseSpec, SourceSpec, StepEvent, run_schedule, solve_parallel, solve_single
from .linear import assemble, estimate_linear, recover_polar, solve_linear
from .multi_source import estimate_all, split_by_source
from .nonlinear import NlsConfig, estimate_nonlinear, jacobian_f, model_f
from .phasor import (ComplexImpedance, MeasurementSet, Phasor, TheveninParams, ThreePhaseSample,
                     normalize_angle, phasor_to_rect, positive_sequence, rect_to_phasor)
from .report import DegenerateSystemError, EstimateReport, EstimationError

__all__ = [
    "ComplexImpedance", "DegenerateSystemError", "EstimateReport", "EstimationError", "LoadSchedule",
    "MeasurementSet", "NlsConfig", "NoiseSpec", "Phasor", "SourceSpec", "StepEvent", "TheveninParams",
    "ThreePhaseSample", "assemble", "estimate_all", "estimate_linear", "estimate_nonlinear", "jacobian_f",
    "model_f", "normalize_angle", "phasor_to_rect", "positive_sequence", "rect_to_phasor", "recover_polar",
    "run_schedule", "solve_linear", "solve_parallel", "solve_single", "split_by_source",
]
