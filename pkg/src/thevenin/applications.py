"""Uses of an estimated Thevenin equivalent: load power, battery SOC and voltage-stability proximity."""

from __future__ import annotations

import math
from dataclasses import dataclass

DENOM_TOL = 1e-12


@dataclass(frozen=True)
class StabilityInput:
    """Thevenin emf/impedance and load admittance, in polar form.

    ``theta_z`` is the Thevenin impedance angle and ``phi_load`` the load
    impedance angle.
    """

    e_th: float
    z_th: float
    theta_z: float
    y_load: float
    phi_load: float

    def __post_init__(self):
        if self.e_th < 0 or self.z_th <= 0 or self.y_load < 0:
            raise ValueError("need e_th >= 0, z_th > 0, y_load >= 0")


@dataclass(frozen=True)
class SocCalibration:
    slope_a: float
    intercept_b: float

    def __post_init__(self):
        if self.slope_a == 0:
            raise ValueError("SOC calibration slope must be nonzero")


@dataclass(frozen=True)
class SocResult:
    soc: float

    @property
    def out_of_range(self) -> bool:
        return not 0.0 <= self.soc <= 1.0


def load_power(v_th: float, r_th: float, r_load: float) -> float:
    """Power into a resistive load, (V / (R_th + R_L))² R_L."""
    if v_th < 0 or r_th < 0 or r_load < 0:
        raise ValueError("load_power inputs must be non-negative")
    total = r_th + r_load
    if total <= 0:
        raise ValueError("r_th + r_load must be > 0")
    return (v_th / total) ** 2 * r_load


def load_power_complex(v_th: float, z_th: complex, z_load: complex) -> float:
    """Real power into a complex load; maximal at the conjugate match."""
    total = z_th + z_load
    if abs(total) <= 0:
        raise ValueError("z_th + z_load must be nonzero")
    return abs(v_th / total) ** 2 * z_load.real


def soc_from_voc(voc: float, cal: SocCalibration) -> SocResult:
    """Affine open-circuit-voltage map (voc - b) / a. Values outside [0, 1] are flagged, not clamped."""
    return SocResult((voc - cal.intercept_b) / cal.slope_a)


def apparent_power(inp: StabilityInput) -> float:
    """|S| delivered to the load as a function of its admittance magnitude."""
    zy = inp.z_th * inp.y_load
    return inp.e_th ** 2 * inp.y_load / (1.0 + zy * zy + 2.0 * zy * math.cos(inp.theta_z - inp.phi_load))


def stability_derivative(inp: StabilityInput) -> float:
    """dS/dY; it reaches zero when |Z_load| equals |Z_th|."""
    zy = inp.z_th * inp.y_load
    denom = (1.0 + zy * zy + 2.0 * zy * math.cos(inp.theta_z - inp.phi_load)) ** 2
    if denom < DENOM_TOL:
        raise ValueError("stability derivative denominator vanishes")
    return inp.e_th ** 2 * (1.0 - zy * zy) / denom


def at_stability_limit(inp: StabilityInput, tol: float = 1e-6) -> bool:
    return abs(stability_derivative(inp)) < tol
