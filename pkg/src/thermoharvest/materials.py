"""Optical, thermoelectric and thermal material registries.

All registries are built once at import time from the calibration ledger and
are immutable afterwards, so they are safe to read from any number of
workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .calibration import DEFAULT_CALIBRATION

VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
SPEED_OF_LIGHT = 299792458.0  # m/s

AL_PERMITTIVITY_RESOURCE = "al_permittivity.csv"
PERMITTIVITY_CSV_HEADER = ["wavelength_m", "eps_real", "eps_imag"]


class MaterialLookupError(KeyError):
    """Raised when a material id is not in a registry."""


class WavelengthRangeError(ValueError):
    """Raised for permittivity queries outside the tabulated range."""


@dataclass(frozen=True)
class PermittivityTable:
    """Tabulated complex permittivity, strictly ascending in wavelength."""

    material_id: str
    wavelengths: np.ndarray
    eps_real: np.ndarray
    eps_imag: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=float)
        er = np.asarray(self.eps_real, dtype=float)
        ei = np.asarray(self.eps_imag, dtype=float)
        if wl.size < 2:
            raise ValueError("permittivity table needs at least 2 entries")
        if not (wl.size == er.size == ei.size):
            raise ValueError("permittivity table columns must have equal length")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("wavelengths must be strictly ascending")
        if np.any(ei < 0):
            raise ValueError("eps_imag must be >= 0 for a passive material")
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "eps_real", er)
        object.__setattr__(self, "eps_imag", ei)


@dataclass(frozen=True)
class DrudeParams:
    """Free-electron permittivity parameters (analytic fallback)."""

    eps_inf: float
    plasma_freq: float  # rad/s
    damping: float  # rad/s

    def __post_init__(self):
        if self.plasma_freq <= 0 or self.damping <= 0:
            raise ValueError("plasma_freq and damping must be positive")


@dataclass(frozen=True)
class TeMaterial:
    """Thermoelectric transport triple."""

    seebeck: float  # V/K
    thermal_conductivity: float  # W/(m K)
    electrical_conductivity: float  # S/m

    def __post_init__(self):
        if min(self.seebeck, self.thermal_conductivity, self.electrical_conductivity) <= 0:
            raise ValueError("all thermoelectric properties must be strictly positive")


@dataclass(frozen=True)
class ThermalLayerProps:
    density: float  # kg/m^3
    specific_heat: float  # J/(kg K)
    conductivity: float  # W/(m K)

    def __post_init__(self):
        if min(self.density, self.specific_heat, self.conductivity) <= 0:
            raise ValueError("thermal layer properties must be strictly positive")


def permittivity(table: PermittivityTable, wavelength: float) -> tuple[float, float]:
    """Linearly interpolate (eps_real, eps_imag) at the given wavelength.

    Raises WavelengthRangeError outside the tabulated interval.
    """
    lo, hi = table.wavelengths[0], table.wavelengths[-1]
    if not (lo <= wavelength <= hi):
        raise WavelengthRangeError(
            f"wavelength {wavelength:.4e} m outside table range "
            f"[{lo:.4e}, {hi:.4e}] m for '{table.material_id}'"
        )
    er = float(np.interp(wavelength, table.wavelengths, table.eps_real))
    ei = float(np.interp(wavelength, table.wavelengths, table.eps_imag))
    return er, ei


def drude_permittivity(params: DrudeParams, angular_freq: float) -> tuple[float, float]:
    """Closed-form free-electron permittivity at an angular frequency."""
    if angular_freq <= 0:
        raise ValueError("angular frequency must be positive")
    w, wp, g = angular_freq, params.plasma_freq, params.damping
    eps_real = params.eps_inf - wp**2 / (w**2 + g**2)
    eps_imag = wp**2 * g / (w * (w**2 + g**2))
    return eps_real, eps_imag


def wavelength_to_angular_freq(wavelength: float) -> float:
    return 2.0 * np.pi * SPEED_OF_LIGHT / wavelength


# Free-electron parameters for aluminum; also the generator of the shipped
# table. The interband feature near 0.8 um is not represented.
DEFAULT_AL_DRUDE = DrudeParams(eps_inf=1.0, plasma_freq=2.24e16, damping=1.22e14)


def load_permittivity_csv(path, material_id: str | None = None) -> PermittivityTable:
    """Load a table from CSV with header ``wavelength_m,eps_real,eps_imag``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PERMITTIVITY_CSV_HEADER:
            raise ValueError(
                f"expected CSV header {','.join(PERMITTIVITY_CSV_HEADER)!r}, got {header!r}"
            )
        rows = [tuple(float(v) for v in row) for row in reader if row]
    if material_id is None:
        material_id = str(path)
    wl, er, ei = (np.array(col) for col in zip(*rows))
    return PermittivityTable(material_id, wl, er, ei)


def _load_builtin_al_table() -> PermittivityTable:
    path = resources.files("thermoharvest.data").joinpath(AL_PERMITTIVITY_RESOURCE)
    with resources.as_file(path) as fspath:
        return load_permittivity_csv(fspath, material_id="aluminum")


ALUMINUM_TABLE = _load_builtin_al_table()

# Seebeck / thermal / electrical conductivity windows for the thin-film
# bismuth-antimony telluride record; construction fails if an edit drifts
# outside them.
_TE_BOUNDS = {
    "seebeck": (200e-6, 230e-6),
    "thermal_conductivity": (1.2, 1.5),
    "electrical_conductivity": (0.8e5, 1.2e5),
}


def _bounded_te_record(seebeck, thermal_conductivity, electrical_conductivity) -> TeMaterial:
    values = {
        "seebeck": seebeck,
        "thermal_conductivity": thermal_conductivity,
        "electrical_conductivity": electrical_conductivity,
    }
    for name, value in values.items():
        lo, hi = _TE_BOUNDS[name]
        if not (lo <= value <= hi):
            raise ValueError(f"{name}={value} outside allowed window [{lo}, {hi}]")
    return TeMaterial(**values)


_TE_REGISTRY = {
    "bi2te3_thin_film": _bounded_te_record(210e-6, 1.35, 1.0e5),
}


def te_properties(material_id: str) -> TeMaterial:
    """Look up a registered thermoelectric material."""
    try:
        return _TE_REGISTRY[material_id]
    except KeyError:
        known = ", ".join(sorted(_TE_REGISTRY))
        raise MaterialLookupError(
            f"unknown thermoelectric material '{material_id}'; known ids: {known}"
        ) from None


def _build_layer_registry() -> dict[str, ThermalLayerProps]:
    registry = {}
    for layer_id, rec in DEFAULT_CALIBRATION.layer_thermal.items():
        registry[layer_id] = ThermalLayerProps(
            density=rec["density"],
            specific_heat=rec["specific_heat"],
            conductivity=rec["conductivity"],
        )
    # the TE layer must agree with the thermoelectric registry
    te = te_properties("bi2te3_thin_film")
    if registry["te_film"].conductivity != te.thermal_conductivity:
        raise ValueError("te_film conductivity disagrees with the thermoelectric registry")
    return registry


_LAYER_REGISTRY = _build_layer_registry()


def layer_thermal_properties(layer_id: str) -> ThermalLayerProps:
    """Look up the thermal property triple of a stack layer."""
    try:
        return _LAYER_REGISTRY[layer_id]
    except KeyError:
        known = ", ".join(sorted(_LAYER_REGISTRY))
        raise MaterialLookupError(
            f"unknown layer '{layer_id}'; known ids: {known}"
        ) from None


def known_layers() -> tuple[str, ...]:
    return tuple(sorted(_LAYER_REGISTRY))
