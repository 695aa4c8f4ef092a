"""Design-space types: the seven geometric degrees of freedom (nine scalars,
since the three antenna groups carry independent arm lengths)."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .calibration import DEFAULT_CALIBRATION, Calibration
from .optics import AntennaGroup, MetasurfaceDesign

# Column names shared by dataset CSV, bounds configs and prediction inputs.
DESIGN_COLUMNS = (
    "arm1_m", "arm2_m", "arm3_m", "flare_deg", "gap_m",
    "tmetal_m", "tspacer_m", "hte_m", "wte_m",
)


@dataclass(frozen=True)
class DesignPoint:
    """A candidate device geometry.

    Arm lengths are ascending by convention: group 1 resonates in the
    near-infrared, group 3 in the long-wave band.
    """

    arm_length_1: float  # m
    arm_length_2: float  # m
    arm_length_3: float  # m
    flare_angle: float  # deg
    gap: float  # m
    metal_thickness: float  # m
    spacer_thickness: float  # m
    te_height: float  # m
    te_width: float  # m

    def __post_init__(self):
        if not self.arm_length_1 <= self.arm_length_2 <= self.arm_length_3:
            raise ValueError("arm lengths must be ascending (group 3 longest)")
        for name in ("te_height", "te_width", "metal_thickness", "spacer_thickness"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DesignPoint":
        values = np.asarray(values, dtype=float)
        names = [f.name for f in fields(cls)]
        if values.shape != (len(names),):
            raise ValueError(f"expected {len(names)} design values, got shape {values.shape}")
        return cls(**dict(zip(names, values)))


N_DESIGN_VARS = len(fields(DesignPoint))


@dataclass(frozen=True)
class DesignBounds:
    """Per-variable (min, max) box, in DesignPoint field order."""

    arm_length_1: tuple[float, float] = (2.857143e-7, 7.142857e-7)   # resonance 0.8-2 um
    arm_length_2: tuple[float, float] = (1.071429e-6, 1.785714e-6)   # resonance 3-5 um
    arm_length_3: tuple[float, float] = (2.857143e-6, 5.0e-6)        # resonance 8-14 um
    flare_angle: tuple[float, float] = (25.0, 40.0)
    gap: tuple[float, float] = (2e-9, 2e-8)
    metal_thickness: tuple[float, float] = (4e-8, 6e-8)
    spacer_thickness: tuple[float, float] = (3e-8, 6e-8)
    te_height: tuple[float, float] = (5e-6, 1e-5)
    te_width: tuple[float, float] = (2e-6, 2e-5)

    def __post_init__(self):
        for f in fields(self):
            lo, hi = getattr(self, f.name)
            if not lo < hi:
                raise ValueError(f"bounds for {f.name} must satisfy min < max")

    def lows(self) -> np.ndarray:
        return np.array([getattr(self, f.name)[0] for f in fields(self)])

    def highs(self) -> np.ndarray:
        return np.array([getattr(self, f.name)[1] for f in fields(self)])

    def contains(self, design: DesignPoint) -> bool:
        x = design.to_array()
        return bool(np.all(x >= self.lows()) and np.all(x <= self.highs()))

    def clip(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lows(), self.highs())


# Geometry whose model outputs sit on the calibration anchors: resonances at
# 1.2/4.2/10.6 um for n_eff = 1.4, reference gap and flare, and a leg sized so
# one p-n pair measures 12 ohm.
DEFAULT_TE_WIDTH = float(np.sqrt(2 * 1e-5 / (1e5 * 12.0)))  # ~4.082 um


def default_design(calibration: Calibration = DEFAULT_CALIBRATION) -> DesignPoint:
    n2 = 2.0 * calibration.effective_index
    return DesignPoint(
        arm_length_1=1.2e-6 / n2,
        arm_length_2=4.2e-6 / n2,
        arm_length_3=1.06e-5 / n2,
        flare_angle=calibration.flare_ref_deg,
        gap=calibration.gap_ref_m,
        metal_thickness=5e-8,
        spacer_thickness=4e-8,
        te_height=1e-5,
        te_width=DEFAULT_TE_WIDTH,
    )


def default_bounds() -> DesignBounds:
    return DesignBounds()


def design_pitch(design: DesignPoint, calibration: Calibration = DEFAULT_CALIBRATION) -> float:
    """Unit-cell pitch: the configured default, grown if the longest arm needs room."""
    return max(calibration.pitch_default_m, calibration.pitch_arm_factor * design.arm_length_3)


def to_metasurface(design: DesignPoint,
                   calibration: Calibration = DEFAULT_CALIBRATION) -> MetasurfaceDesign:
    """Expand a design point into the three-group metasurface it describes."""
    groups = tuple(
        AntennaGroup(
            arm_length=arm,
            flare_angle=design.flare_angle,
            gap=design.gap,
            peak_absorptance=calibration.peak_absorptance,
            rel_bandwidth_ref=calibration.rel_bandwidth_ref,
        )
        for arm in (design.arm_length_1, design.arm_length_2, design.arm_length_3)
    )
    return MetasurfaceDesign(
        groups=groups,
        n_eff=calibration.effective_index,
        metal_thickness=design.metal_thickness,
        pitch=design_pitch(design, calibration),
    )
