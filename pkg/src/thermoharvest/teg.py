"""Thermoelectric conversion: voltage, resistance, load power and the
self-consistent operating point with Peltier feedback on the thermal network."""

from __future__ import annotations

from dataclasses import dataclass

from .calibration import DEFAULT_CALIBRATION
from .materials import TeMaterial
from .thermal import ThermalNetwork, solve_steady


class OperatingPointConvergenceError(RuntimeError):
    """The coupled thermo-electric fixed point failed to converge."""


@dataclass(frozen=True)
class TeLegGeometry:
    """Square-section leg pair geometry."""

    height: float  # m
    width: float  # m
    legs_in_series: int = 2  # one p-n pair

    def __post_init__(self):
        if not 1e-6 <= self.height <= 5e-5:
            raise ValueError("leg height must lie in [1e-6, 5e-5] m")
        if self.width <= 0:
            raise ValueError("leg width must be positive")
        if self.legs_in_series < 1 or self.legs_in_series % 2 != 0:
            raise ValueError("legs_in_series must be a positive even count")


@dataclass(frozen=True)
class TegOutput:
    open_circuit_voltage: float  # V
    internal_resistance: float  # ohm
    load_resistance: float  # ohm
    current: float  # A
    power: float  # W
    power_density: float  # W/m^2

    def __post_init__(self):
        if self.internal_resistance <= 0 or self.load_resistance <= 0:
            raise ValueError("resistances must be positive")
        bound = self.open_circuit_voltage**2 / (4 * self.internal_resistance)
        if self.power > bound + 1e-15:
            raise ValueError("power exceeds the matched-load bound")


@dataclass(frozen=True)
class CoupledOperatingPoint:
    delta_T: float  # K
    current_density: float  # A/m^2
    heat_flux: float  # W/m^2
    output: TegOutput
    iterations: int


def open_circuit_voltage(seebeck: float, delta_T: float) -> float:
    """Seebeck voltage S * delta_T; the sign of delta_T carries through."""
    if seebeck <= 0:
        raise ValueError("seebeck must be positive")
    return seebeck * delta_T


def internal_resistance(geom: TeLegGeometry, electrical_conductivity: float) -> float:
    """Series resistance of the legs: n * height / (sigma * width^2)."""
    if electrical_conductivity <= 0:
        raise ValueError("electrical conductivity must be positive")
    return geom.legs_in_series * geom.height / (electrical_conductivity * geom.width**2)


def load_power(v_oc: float, r_int: float, r_load: float) -> float:
    """Power delivered to the load: V^2 R_L / (R_L + R_int)^2."""
    if r_int <= 0 or r_load <= 0:
        raise ValueError("resistances must be positive")
    return v_oc**2 * r_load / (r_load + r_int) ** 2


def matched_power(v_oc: float, r_int: float) -> float:
    """Maximum deliverable power V^2 / (4 R_int), reached at R_L = R_int."""
    if r_int <= 0:
        raise ValueError("internal resistance must be positive")
    return v_oc**2 / (4.0 * r_int)


def power_density(power_per_junction: float, junction_density: float) -> float:
    """Areal power density from per-junction power and junctions per m^2."""
    if power_per_junction <= 0 or junction_density <= 0:
        raise ValueError("power and junction density must be positive")
    return power_per_junction * junction_density


def _teg_output(seebeck, delta_T, r_int, r_load, junction_density) -> TegOutput:
    v_oc = seebeck * delta_T
    if r_load == float("inf"):
        current, power = 0.0, 0.0
    else:
        current = v_oc / (r_load + r_int)
        power = current**2 * r_load
    return TegOutput(
        open_circuit_voltage=v_oc,
        internal_resistance=r_int,
        load_resistance=r_load,
        current=current,
        power=power,
        power_density=power * junction_density,
    )


def coupled_operating_point(network: ThermalNetwork, te: TeMaterial,
                            geom: TeLegGeometry, r_load: float,
                            tol: float = 1e-9, max_iterations: int = 100,
                            junction_density: float = DEFAULT_CALIBRATION.junction_density_m2,
                            ) -> CoupledOperatingPoint:
    """Fixed-point solve of the loaded junction on its thermal network.

    Each iteration solves the network, draws the load current from the
    resulting gradient, then re-injects the Peltier sink (hot side) and
    source (cold side) plus an even Joule split before solving again, until
    the gradient moves less than ``tol`` kelvin.

    The network must label its hot and cold nodes (see build_network).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if network.hot_node is None or network.cold_node is None:
        raise ValueError("coupled solve needs a network with labeled hot/cold nodes")
    r_int = internal_resistance(geom, te.electrical_conductivity)
    if r_load <= 0:
        raise ValueError("load resistance must be positive")

    base_sources = network.sources
    leg_area = geom.width**2

    solution = solve_steady(network)
    delta_T = solution.delta_T
    for iteration in range(1, max_iterations + 1):
        current = te.seebeck * delta_T / (r_load + r_int)
        joule = 0.5 * current**2 * r_int
        peltier_hot = te.seebeck * solution.hot_temp * current
        peltier_cold = te.seebeck * solution.cold_temp * current
        loaded = network.with_sources(
            base_sources
            + ((network.hot_node, -peltier_hot + joule),
               (network.cold_node, peltier_cold + joule))
        )
        solution = solve_steady(loaded)
        previous, delta_T = delta_T, solution.delta_T
        if abs(delta_T - previous) < tol:
            conducted = te.thermal_conductivity * delta_T / geom.height
            current = te.seebeck * delta_T / (r_load + r_int)
            current_density = current / leg_area
            heat_flux = conducted + solution.hot_temp * te.seebeck * current_density
            return CoupledOperatingPoint(
                delta_T=float(delta_T),
                current_density=float(current_density),
                heat_flux=float(heat_flux),
                output=_teg_output(te.seebeck, delta_T, r_int, r_load, junction_density),
                iterations=iteration,
            )
    raise OperatingPointConvergenceError(
        f"no convergence in {max_iterations} iterations; "
        f"last residual {abs(delta_T - previous):.3e} K"
    )


def operating_point_report(point: CoupledOperatingPoint) -> dict:
    """JSON-ready summary of a coupled operating point."""
    return {
        "delta_T_K": point.delta_T,
        "v_oc_V": point.output.open_circuit_voltage,
        "r_int_ohm": point.output.internal_resistance,
        "r_load_ohm": point.output.load_resistance,
        "current_A": point.output.current,
        "power_W": point.output.power,
        "power_density_W_m2": point.output.power_density,
    }
