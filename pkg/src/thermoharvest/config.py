"""Strict JSON run configuration.

Unknown keys are rejected by name; every applied default is echoed in the
provenance log.  All randomness flows from the single master seed here --
subcommands derive labeled child seeds, never the wall clock.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields

from .calibration import DEFAULT_CALIBRATION
from .designs import DESIGN_COLUMNS, DesignBounds, DesignPoint, default_bounds, default_design
from .optics import IncidentSpectrum
from .thermal import Environment

DEFAULT_MASTER_SEED = 42

# bound windows the model was calibrated over; configs may exceed them but
# get a warning
REFERENCE_BOUND_WINDOWS = {
    "gap_m": (2e-9, 2e-8),
    "flare_deg": (25.0, 40.0),
    "tmetal_m": (4e-8, 6e-8),
    "tspacer_m": (3e-8, 6e-8),
    "hte_m": (5e-6, 1e-5),
}


class ConfigError(ValueError):
    """Invalid run configuration document."""


@dataclass(frozen=True)
class SamplerSettings:
    n: int = 200

    def __post_init__(self):
        if not 1 <= self.n <= 100000:
            raise ConfigError("sampler.n must lie in [1, 100000]")


@dataclass(frozen=True)
class GprSettings:
    noise_variance: float = 1e-8
    restarts: int = 2
    folds: int = 5

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ConfigError("gpr.noise_variance must be positive")
        if self.restarts < 1:
            raise ConfigError("gpr.restarts must be >= 1")
        if self.folds < 2:
            raise ConfigError("gpr.folds must be >= 2")


@dataclass(frozen=True)
class NsgaSettings:
    population: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    sbx_eta: float = 15.0
    mutation_prob_per_var: float = 1.0 / 9.0
    mutation_eta: float = 20.0
    evaluator: str = "surrogate"

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ConfigError("nsga.population must be even and >= 4")
        if self.generations < 1:
            raise ConfigError("nsga.generations must be >= 1")
        if self.evaluator not in ("surrogate", "direct"):
            raise ConfigError("nsga.evaluator must be 'surrogate' or 'direct'")


@dataclass(frozen=True)
class RunConfig:
    design: DesignPoint
    bounds: DesignBounds
    environment: Environment
    incident: IncidentSpectrum
    sampler: SamplerSettings
    gpr: GprSettings
    nsga: NsgaSettings
    master_seed: int
    workers: int
    output_dir: str
    provenance: tuple[str, ...] = field(default_factory=tuple)
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def child_seed(self, label: str) -> int:
        """Stable labeled child seed derived from the master seed."""
        digest = hashlib.sha256(f"{self.master_seed}:{label}".encode()).digest()
        return int.from_bytes(digest[:8], "big") % (2**63)


def _require_keys(section: dict, allowed: set, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {where}")


def _design_from_doc(doc: dict, provenance: list) -> DesignPoint:
    base = default_design()
    allowed = set(DESIGN_COLUMNS)
    _require_keys(doc, allowed, "design")
    values = dict(zip(DESIGN_COLUMNS, base.to_array()))
    for column in DESIGN_COLUMNS:
        if column in doc:
            values[column] = float(doc[column])
        else:
            provenance.append(f"design.{column} = {values[column]!r} (default)")
    ordered = [values[c] for c in DESIGN_COLUMNS]
    return DesignPoint.from_array(ordered)


def _bounds_from_doc(doc: dict, provenance: list, warnings: list) -> DesignBounds:
    base = default_bounds()
    _require_keys(doc, set(DESIGN_COLUMNS), "bounds")
    kwargs = {}
    for column, bound_field in zip(DESIGN_COLUMNS, fields(DesignBounds)):
        if column in doc:
            pair = doc[column]
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ConfigError(f"bounds.{column} must be a [min, max] pair")
            lo, hi = float(pair[0]), float(pair[1])
            kwargs[bound_field.name] = (lo, hi)
            window = REFERENCE_BOUND_WINDOWS.get(column)
            if window and (lo < window[0] or hi > window[1]):
                warnings.append(
                    f"bounds.{column} = [{lo!r}, {hi!r}] exceeds the calibrated window "
                    f"[{window[0]!r}, {window[1]!r}]"
                )
        else:
            default_pair = getattr(base, bound_field.name)
            kwargs[bound_field.name] = default_pair
            provenance.append(f"bounds.{column} = {list(default_pair)!r} (default)")
    try:
        return DesignBounds(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _environment_from_doc(doc: dict, provenance: list) -> Environment:
    defaults = {
        "ambient_temp_K": 298.15,
        "skin_temp_K": 306.15,
        "convection_coeff_W_m2K": 10.0,
        "emissivity": 0.9,
    }
    _require_keys(doc, set(defaults), "environment")
    values = {}
    for key, default in defaults.items():
        if key in doc:
            values[key] = float(doc[key])
        else:
            values[key] = default
            provenance.append(f"environment.{key} = {default!r} (default)")
    try:
        return Environment(
            ambient_temp=values["ambient_temp_K"],
            skin_temp=values["skin_temp_K"],
            convection_coeff=values["convection_coeff_W_m2K"],
            emissivity=values["emissivity"],
        )
    except ValueError as exc:
        raise ConfigError(f"environment: {exc}") from exc


def _incident_from_doc(doc: dict, provenance: list) -> IncidentSpectrum:
    defaults = {
        "kind": "uniform_band",
        "total_intensity_W_m2": 300.0,
        "band_m": [2e-6, 1.2e-5],
        "blackbody_temp_K": None,
    }
    _require_keys(doc, set(defaults), "incident")
    values = {}
    for key, default in defaults.items():
        if key in doc:
            values[key] = doc[key]
        else:
            values[key] = default
            if key != "blackbody_temp_K" or default is not None:
                provenance.append(f"incident.{key} = {default!r} (default)")
    band = values["band_m"]
    if not (isinstance(band, (list, tuple)) and len(band) == 2):
        raise ConfigError("incident.band_m must be a [min, max] pair")
    temp = values["blackbody_temp_K"]
    try:
        return IncidentSpectrum(
            kind=str(values["kind"]),
            total_intensity=float(values["total_intensity_W_m2"]),
            band=(float(band[0]), float(band[1])),
            blackbody_temp=None if temp is None else float(temp),
        )
    except ValueError as exc:
        raise ConfigError(f"incident: {exc}") from exc


def _settings_from_doc(cls, doc: dict, where: str, provenance: list):
    names = {f.name for f in fields(cls)}
    _require_keys(doc, names, where)
    kwargs = {}
    for f in fields(cls):
        if f.name in doc:
            kwargs[f.name] = doc[f.name]
        else:
            provenance.append(f"{where}.{f.name} = {f.default!r} (default)")
    return cls(**kwargs)


def parse_config(document: str | dict) -> RunConfig:
    """Parse a JSON document (text or already-decoded dict) into a RunConfig."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")

    allowed = {"design", "bounds", "environment", "incident", "sampler",
               "gpr", "nsga", "master_seed", "workers", "output_dir"}
    _require_keys(doc, allowed, "configuration root")

    provenance: list[str] = []
    warnings: list[str] = []

    design = _design_from_doc(doc.get("design", {}), provenance)
    bounds = _bounds_from_doc(doc.get("bounds", {}), provenance, warnings)
    environment = _environment_from_doc(doc.get("environment", {}), provenance)
    incident = _incident_from_doc(doc.get("incident", {}), provenance)
    sampler = _settings_from_doc(SamplerSettings, doc.get("sampler", {}), "sampler", provenance)
    gpr = _settings_from_doc(GprSettings, doc.get("gpr", {}), "gpr", provenance)
    nsga = _settings_from_doc(NsgaSettings, doc.get("nsga", {}), "nsga", provenance)

    if "master_seed" in doc:
        master_seed = int(doc["master_seed"])
    else:
        master_seed = DEFAULT_MASTER_SEED
        provenance.append(f"master_seed = {DEFAULT_MASTER_SEED} (default)")
    if "workers" in doc:
        workers = int(doc["workers"])
        if workers < 1:
            raise ConfigError("workers must be >= 1")
    else:
        workers = 1
        provenance.append("workers = 1 (default)")
    if "output_dir" in doc:
        output_dir = str(doc["output_dir"])
    else:
        output_dir = "thermoharvest_out"
        provenance.append("output_dir = 'thermoharvest_out' (default)")

    return RunConfig(
        design=design, bounds=bounds, environment=environment, incident=incident,
        sampler=sampler, gpr=gpr, nsga=nsga, master_seed=master_seed,
        workers=workers, output_dir=output_dir,
        provenance=tuple(provenance), warnings=tuple(warnings),
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def output_header_meta(config: RunConfig) -> dict:
    from . import __version__
    return {
        "master_seed": config.master_seed,
        "calibration_ledger": DEFAULT_CALIBRATION.version,
        "version": __version__,
    }
