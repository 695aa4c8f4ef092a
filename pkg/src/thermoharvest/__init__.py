"""thermoharvest: design toolkit for plasmonically heated wearable
thermoelectric harvesters.

Reduced-order optical, thermal and electrical models of a multiband
cross-bowtie metasurface over thin-film telluride junctions, with Latin
hypercube dataset generation, Gaussian-process surrogates and NSGA-II
Pareto optimization over (temperature gradient, output power, thickness).
"""

__version__ = "0.1.0"

from .calibration import DEFAULT_CALIBRATION, load_ledger  # noqa: F401
from .designs import DesignBounds, DesignPoint, default_bounds, default_design  # noqa: F401
from .optics import (AbsorptionSpectrum, AntennaGroup, IncidentSpectrum,  # noqa: F401
                     MetasurfaceDesign, absorptance_spectrum, absorbed_power,
                     field_enhancement, find_resonance_peaks, resonance_wavelength)
from .thermal import (Environment, StackModel, ThermalNetwork, ThermalSolution,  # noqa: F401
                      build_network, solve_steady, solve_transient, stack_fd_profile,
                      series_resistance_oracle)
from .teg import (CoupledOperatingPoint, TegOutput, TeLegGeometry,  # noqa: F401
                  coupled_operating_point, internal_resistance, load_power,
                  matched_power, open_circuit_voltage, power_density)
from .pipeline import (Dataset, PerformanceMetrics, evaluate_design,  # noqa: F401
                       generate_dataset, sample_designs)
from .surrogate import (GprModel, RegressionMetrics, cross_validate, gpr_fit,  # noqa: F401
                        gpr_predict, regression_metrics, tune_hyperparameters)
from .moo import (NsgaConfig, ParetoFront, crowding_distance, dominates,  # noqa: F401
                  evolve, extract_front_from_dataset, hypervolume,
                  non_dominated_sort)
