"""Calibration ledger: the single versioned record of every model constant.

Anything the physics modules need that is not a textbook constant lives here,
each entry carrying a provenance tag:

* ``configuration`` -- a default someone may legitimately override,
* ``calibrated``    -- chosen by hand so a documented behaviour emerges,
* ``derived``       -- solved numerically from an anchor value; the solving
  procedure is implemented in code and re-run by the test suite.

The ledger ships as ``data/calibration_ledger.json`` and is immutable after
load, so it can be shared freely between worker processes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

LEDGER_RESOURCE = "calibration_ledger.json"


@dataclass(frozen=True)
class Calibration:
    """Immutable snapshot of the calibration ledger."""

    version: str
    effective_index: float
    flare_ref_deg: float
    gap_ref_m: float
    gap_decay_m: float
    flare_exponent: float
    rel_bandwidth_ref: float
    peak_absorptance: float
    enhancement_scale: float
    grid_points: int
    grid_min_m: float
    grid_max_m: float
    pitch_default_m: float
    pitch_arm_factor: float
    spacer_confinement_scale_m: float
    spacer_spreading_scale_m: float
    pdms_thickness_m: float
    polyimide_thickness_m: float
    hotspot_concentration: float
    textile_coeff_w_m2k: float
    junction_density_m2: float
    layer_thermal: dict = field(repr=False)
    notes: dict = field(repr=False)


def _read_ledger_document() -> dict:
    path = resources.files("thermoharvest.data").joinpath(LEDGER_RESOURCE)
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def load_ledger() -> Calibration:
    """Parse the shipped ledger file into a Calibration value."""
    doc = _read_ledger_document()
    constants = {name: entry["value"] for name, entry in doc["constants"].items()}
    notes = {name: (entry["tag"], entry["note"]) for name, entry in doc["constants"].items()}
    layers = {
        layer_id: {
            "density": rec["density"],
            "specific_heat": rec["specific_heat"],
            "conductivity": rec["conductivity"],
        }
        for layer_id, rec in doc["layer_thermal"].items()
    }
    constants["grid_points"] = int(constants["grid_points"])
    return Calibration(version=doc["version"], layer_thermal=layers, notes=notes, **constants)


DEFAULT_CALIBRATION = load_ledger()


def ledger_version() -> str:
    return DEFAULT_CALIBRATION.version
