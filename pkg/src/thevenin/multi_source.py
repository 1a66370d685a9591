"""Per-source estimation for parallel sources sharing one PCC.

Each branch obeys ``E_k = V_pcc + I_k Z_k`` on its own, so every source is
fitted independently from the shared voltage and its own branch current.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .linear import estimate_linear
from .nonlinear import NlsConfig, estimate_nonlinear
from .phasor import MeasurementFormatError, MeasurementSet, check_batch
from .report import EstimateReport, EstimationError

METHODS = ("nonlinear", "linear")


@dataclass
class MultiSourceReport:
    per_source: dict[str, EstimateReport]
    n_sources: int
    n_sets_used: int
    errors: dict[str, str] = field(default_factory=dict)
    source_ids: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors and all(r.converged for r in self.per_source.values())

    def to_dict(self, degrees: bool = False) -> dict:
        per = {}
        for sid in self.source_ids or (*self.per_source, *self.errors):
            if sid in self.per_source:
                per[sid] = {"status": "ok", **self.per_source[sid].to_dict(degrees)}
            else:
                per[sid] = {"status": "error", "error": self.errors[sid]}
        return {"n_sources": self.n_sources, "n_sets_used": self.n_sets_used, "per_source": per}


def split_by_source(measurements: Sequence[MeasurementSet]) -> dict[str, list[MeasurementSet]]:
    ids = check_batch(measurements)
    return {sid: [m.branch(sid) for m in measurements] for sid in ids}


def estimate_one(sets: Sequence[MeasurementSet], method: str = "nonlinear",
                 cfg: NlsConfig = NlsConfig()) -> EstimateReport:
    if method == "nonlinear":
        return estimate_nonlinear(sets, cfg)
    if method == "linear":
        return estimate_linear(sets)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def estimate_all(measurements: Sequence[MeasurementSet], method: str = "nonlinear",
                 cfg: NlsConfig = NlsConfig()) -> MultiSourceReport:
    """Estimate every source; a failing source is recorded without stopping the rest."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    try:
        branches = split_by_source(measurements)
    except MeasurementFormatError as exc:
        raise EstimationError(str(exc)) from exc
    reports: dict[str, EstimateReport] = {}
    errors: dict[str, str] = {}
    for sid, sets in branches.items():
        try:
            reports[sid] = estimate_one(sets, method, cfg)
        except EstimationError as exc:
            errors[sid] = str(exc)
    return MultiSourceReport(reports, len(branches), len(measurements), errors, tuple(branches))
