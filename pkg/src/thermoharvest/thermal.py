"""Lumped thermal network and 1-D stack solvers.

The device reduces to a two-node network (hot = absorber and leg top, cold =
leg bottom and substrate) coupled to ambient, textile and skin reservoirs.  A
finite-volume stack solver and an analytic series-resistance formula provide
independent cross-checks of the network results.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import DEFAULT_CALIBRATION, Calibration
from .designs import DesignPoint, design_pitch
from .materials import layer_thermal_properties, te_properties, ThermalLayerProps

STEFAN_BOLTZMANN = 5.670374419e-8  # W/(m^2 K^4)

AMBIENT_RESERVOIR = "ambient"
TEXTILE_RESERVOIR = "textile"
SKIN_RESERVOIR = "skin"
HOT_NODE = "hot"
COLD_NODE = "cold"


class NetworkConnectivityError(ValueError):
    """A node has no path to any reservoir; the steady system is singular."""


class ThermalConfigurationError(ValueError):
    """Invalid solver configuration (zero capacity, zero conductivity, ...)."""


@dataclass(frozen=True)
class Environment:
    ambient_temp: float = 298.15  # K
    skin_temp: float = 306.15  # K
    convection_coeff: float = 10.0  # W/(m^2 K)
    emissivity: float = 0.9

    def __post_init__(self):
        if self.skin_temp < self.ambient_temp:
            raise ValueError("skin_temp must be >= ambient_temp")
        if self.convection_coeff <= 0:
            raise ValueError("convection_coeff must be positive")
        if not 0.0 <= self.emissivity <= 1.0:
            raise ValueError("emissivity must lie in [0, 1]")


@dataclass(frozen=True)
class ThermalNetwork:
    """Nodes, reservoirs, resistive edges and heat sources.

    ``nodes`` maps internal node id -> heat capacity (J/K).  ``reservoirs``
    maps reservoir id -> fixed temperature (K).  Edges are (a, b, resistance)
    with resistance in K/W.  Sources are (node, power) in W.
    """

    nodes: tuple[tuple[str, float], ...]
    reservoirs: tuple[tuple[str, float], ...]
    edges: tuple[tuple[str, str, float], ...]
    sources: tuple[tuple[str, float], ...] = ()
    hot_node: str | None = None
    cold_node: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "reservoirs", tuple(self.reservoirs))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "sources", tuple(self.sources))
        if not self.reservoirs:
            raise ValueError("a thermal network needs at least one reservoir")
        ids = [n for n, _ in self.nodes] + [r for r, _ in self.reservoirs]
        if len(set(ids)) != len(ids):
            raise ValueError("node and reservoir ids must be distinct")
        known = set(ids)
        for a, b, r in self.edges:
            if r <= 0:
                raise ValueError(f"edge ({a}, {b}) has non-positive resistance {r}")
            if a not in known or b not in known:
                raise ValueError(f"edge ({a}, {b}) references an unknown id")
        node_ids = {n for n, _ in self.nodes}
        for node, _ in self.sources:
            if node not in node_ids:
                raise ValueError(f"source references unknown node '{node}'")

    def with_sources(self, sources) -> "ThermalNetwork":
        return replace(self, sources=tuple(sources))


@dataclass(frozen=True)
class ThermalSolution:
    """Temperatures of a steady or transient state.

    Network solves fill ``node_temps``; stack solves fill ``grid_z`` and
    ``grid_temps``.  ``delta_T`` is always hot_temp - cold_temp.
    """

    hot_temp: float
    cold_temp: float
    delta_T: float
    node_temps: dict | None = None
    grid_z: np.ndarray | None = None
    grid_temps: np.ndarray | None = None
    energy_residual: float = 0.0

    def __post_init__(self):
        if abs(self.delta_T - (self.hot_temp - self.cold_temp)) > 1e-9:
            raise ValueError("delta_T must equal hot_temp - cold_temp")


@dataclass(frozen=True)
class TransientResult:
    times: np.ndarray
    solutions: tuple[ThermalSolution, ...]

    def final(self) -> ThermalSolution:
        return self.solutions[-1]


def _assemble(network: ThermalNetwork):
    """Conductance matrix G and constant vector b with reservoirs eliminated."""
    node_ids = [n for n, _ in network.nodes]
    index = {n: i for i, n in enumerate(node_ids)}
    reservoir_temp = dict(network.reservoirs)
    n = len(node_ids)
    G = np.zeros((n, n))
    b = np.zeros(n)
    for a, bb, r in network.edges:
        g = 1.0 / r
        a_int, b_int = a in index, bb in index
        if a_int and b_int:
            i, j = index[a], index[bb]
            G[i, i] += g
            G[j, j] += g
            G[i, j] -= g
            G[j, i] -= g
        elif a_int:
            i = index[a]
            G[i, i] += g
            b[i] += g * reservoir_temp[bb]
        elif b_int:
            j = index[bb]
            G[j, j] += g
            b[j] += g * reservoir_temp[a]
        # reservoir-to-reservoir edges carry flux but do not enter the system
    for node, power in network.sources:
        b[index[node]] += power
    return node_ids, index, G, b


def _check_connected(network: ThermalNetwork):
    """Every internal node must reach a reservoir through the edge set."""
    adjacency: dict[str, set[str]] = {}
    for a, b, _ in network.edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    reached = {r for r, _ in network.reservoirs}
    frontier = list(reached)
    while frontier:
        current = frontier.pop()
        for neighbor in adjacency.get(current, ()):
            if neighbor not in reached:
                reached.add(neighbor)
                frontier.append(neighbor)
    missing = [n for n, _ in network.nodes if n not in reached]
    if missing:
        raise NetworkConnectivityError(
            f"nodes {missing} are not connected to any reservoir; steady system is singular"
        )


def _reservoir_flows(network: ThermalNetwork, temps: dict) -> dict:
    """Net power flowing from the network into each reservoir."""
    reservoir_temp = dict(network.reservoirs)
    flows = {r: 0.0 for r in reservoir_temp}
    for a, b, r in network.edges:
        g = 1.0 / r
        if a in reservoir_temp and b in reservoir_temp:
            continue
        if b in reservoir_temp:
            flows[b] += g * (temps[a] - reservoir_temp[b])
        elif a in reservoir_temp:
            flows[a] += g * (temps[b] - reservoir_temp[a])
    return flows


def _solution_from_temps(network: ThermalNetwork, temps: dict,
                         residual: float) -> ThermalSolution:
    if network.hot_node is not None and network.cold_node is not None:
        hot = temps[network.hot_node]
        cold = temps[network.cold_node]
    else:
        hot = max(temps.values())
        cold = min(temps.values())
    return ThermalSolution(
        hot_temp=float(hot),
        cold_temp=float(cold),
        delta_T=float(hot - cold),
        node_temps=dict(temps),
        energy_residual=residual,
    )


def solve_steady(network: ThermalNetwork) -> ThermalSolution:
    """Solve the nodal conductance system G T = b.

    The returned solution carries the relative energy-balance residual
    (injected source power vs. net reservoir outflow).
    """
    _check_connected(network)
    node_ids, _, G, b = _assemble(network)
    temps_vec = np.linalg.solve(G, b) if node_ids else np.zeros(0)
    temps = dict(zip(node_ids, temps_vec))
    flows = _reservoir_flows(network, temps)
    source_total = sum(p for _, p in network.sources)
    outflow = sum(flows.values())
    scale = max(abs(source_total), max((abs(f) for f in flows.values()), default=0.0), 1e-30)
    residual = abs(source_total - outflow) / scale
    return _solution_from_temps(network, temps, residual)


def solve_transient(network: ThermalNetwork, t_end: float, dt: float) -> TransientResult:
    """Integrate C dT/dt = -G T + b with implicit Euler steps.

    Unconditionally stable; the initial state is the source-free steady
    solution (reservoir-driven equilibrium).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    capacities = np.array([c for _, c in network.nodes], dtype=float)
    if np.any(capacities <= 0):
        raise ThermalConfigurationError("every node needs a positive heat capacity")
    _check_connected(network)
    node_ids, _, G, b = _assemble(network)

    # start from the equilibrium the network holds before the sources switch on
    cold_start = solve_steady(network.with_sources(()))
    temps = np.array([cold_start.node_temps[n] for n in node_ids])

    C = np.diag(capacities)
    lhs = C / dt + G
    steps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    times = [0.0]
    states = [temps.copy()]
    for k in range(steps):
        rhs = C @ temps / dt + b
        temps = np.linalg.solve(lhs, rhs)
        times.append((k + 1) * dt)
        states.append(temps.copy())

    solutions = []
    for state in states:
        temp_map = dict(zip(node_ids, state))
        solutions.append(_solution_from_temps(network, temp_map, 0.0))
    return TransientResult(times=np.array(times), solutions=tuple(solutions))


@dataclass(frozen=True)
class BoundaryCondition:
    """Stack boundary: fixed temperature, or a film coefficient to a reservoir."""

    kind: str  # "fixed" | "convective"
    temp: float  # K
    h: float | None = None  # W/(m^2 K), convective only

    def __post_init__(self):
        if self.kind not in ("fixed", "convective"):
            raise ValueError(f"unknown boundary kind '{self.kind}'")
        if self.kind == "convective" and (self.h is None or self.h <= 0):
            raise ValueError("convective boundaries need a positive film coefficient")


@dataclass(frozen=True)
class StackModel:
    """Ordered 1-D layer stack, top (index 0) to bottom."""

    layers: tuple[tuple[str, float, ThermalLayerProps], ...]
    area: float  # m^2
    source_profile: tuple[float, ...]  # W/m^3 per layer
    top_bc: BoundaryCondition
    bottom_bc: BoundaryCondition

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "source_profile", tuple(self.source_profile))
        if not self.layers:
            raise ValueError("stack needs at least one layer")
        if len(self.source_profile) != len(self.layers):
            raise ValueError("source_profile must give one value per layer")
        if self.area <= 0:
            raise ValueError("area must be positive")
        for layer_id, thickness, props in self.layers:
            if thickness <= 0:
                raise ValueError(f"layer '{layer_id}' has non-positive thickness")
            if props.conductivity <= 0:
                raise ThermalConfigurationError(f"layer '{layer_id}' has zero conductivity")


def stack_fd_profile(stack: StackModel, n_cells: int) -> ThermalSolution:
    """Steady finite-volume solve of the stack with n_cells cells per layer.

    Interface conductances use the harmonic (series) combination of the two
    half-cells, which is exact for piecewise-linear profiles.  hot/cold are
    the face temperatures of the ``te_film`` layer when present, otherwise the
    outer faces of the stack.
    """
    if n_cells < 2:
        raise ValueError("need at least 2 cells per layer")

    dz, conductivity, source = [], [], []
    layer_of_cell = []
    for li, (layer_id, thickness, props) in enumerate(stack.layers):
        for _ in range(n_cells):
            dz.append(thickness / n_cells)
            conductivity.append(props.conductivity)
            source.append(stack.source_profile[li])
            layer_of_cell.append(li)
    dz = np.array(dz)
    k = np.array(conductivity)
    q = np.array(source)
    n = dz.size
    A = stack.area

    G = np.zeros((n, n))
    b = np.zeros(n)
    # interior interfaces
    for i in range(n - 1):
        g = A / (dz[i] / (2 * k[i]) + dz[i + 1] / (2 * k[i + 1]))
        G[i, i] += g
        G[i + 1, i + 1] += g
        G[i, i + 1] -= g
        G[i + 1, i] -= g
    # boundaries
    def boundary_conductance(bc: BoundaryCondition, cell: int) -> float:
        half = dz[cell] / (2 * k[cell])
        if bc.kind == "fixed":
            return A / half
        return A / (half + 1.0 / bc.h)

    g_top = boundary_conductance(stack.top_bc, 0)
    G[0, 0] += g_top
    b[0] += g_top * stack.top_bc.temp
    g_bot = boundary_conductance(stack.bottom_bc, n - 1)
    G[n - 1, n - 1] += g_bot
    b[n - 1] += g_bot * stack.bottom_bc.temp
    # volumetric sources
    b += q * A * dz

    temps = np.linalg.solve(G, b)
    centers = np.cumsum(dz) - dz / 2

    # face temperatures: boundary faces from the film drop, interior layer
    # faces from flux-weighted interpolation between adjacent cell centers
    def face_temperature(left_cell: int, right_cell: int) -> float:
        gl = 2 * k[left_cell] / dz[left_cell]
        gr = 2 * k[right_cell] / dz[right_cell]
        return (gl * temps[left_cell] + gr * temps[right_cell]) / (gl + gr)

    def top_face() -> float:
        if stack.top_bc.kind == "fixed":
            return stack.top_bc.temp
        flow = g_top * (temps[0] - stack.top_bc.temp)  # W leaving through the top
        return stack.top_bc.temp + flow / (stack.top_bc.h * A)

    def bottom_face() -> float:
        if stack.bottom_bc.kind == "fixed":
            return stack.bottom_bc.temp
        flow = g_bot * (temps[n - 1] - stack.bottom_bc.temp)
        return stack.bottom_bc.temp + flow / (stack.bottom_bc.h * A)

    layer_ids = [layer_id for layer_id, _, _ in stack.layers]
    if "te_film" in layer_ids:
        li = layer_ids.index("te_film")
        first = li * n_cells
        last = first + n_cells - 1
        hot = top_face() if first == 0 else face_temperature(first - 1, first)
        cold = bottom_face() if last == n - 1 else face_temperature(last, last + 1)
    else:
        hot = top_face()
        cold = bottom_face()

    return ThermalSolution(
        hot_temp=float(hot),
        cold_temp=float(cold),
        delta_T=float(hot - cold),
        grid_z=centers,
        grid_temps=temps,
    )


def series_resistance_oracle(stack: StackModel, flux: float) -> float:
    """Analytic temperature drop of a source-free stack carrying a through-flux.

    Returns flux * sum(thickness/conductivity) plus flux/h for each convective
    boundary film; flux is per unit area (W/m^2).
    """
    if any(q != 0 for q in stack.source_profile):
        raise ValueError("series-resistance oracle requires a source-free stack")
    resistance = sum(t / props.conductivity for _, t, props in stack.layers)
    for bc in (stack.top_bc, stack.bottom_bc):
        if bc.kind == "convective":
            resistance += 1.0 / bc.h
    return float(flux * resistance)


def linearized_radiation_coeff(emissivity: float, mean_temp: float) -> float:
    """Radiative film coefficient linearized about a mean temperature."""
    return 4.0 * emissivity * STEFAN_BOLTZMANN * mean_temp**3


def build_network(design: DesignPoint, env: Environment, hotspot_power: float,
                  calibration: Calibration = DEFAULT_CALIBRATION) -> ThermalNetwork:
    """Assemble the two-node device network for a design and environment.

    Hot node: absorber plus leg top.  Cold node: leg bottom plus substrate.
    Edges: hot->ambient through the encapsulation (conduction plus convection
    and linearized radiation), hot->cold through the spacer and leg in series,
    cold->textile and cold->skin.  The source is the calibrated concentration
    factor times the hotspot power.  The radiation linearization temperature
    is made self-consistent by a short fixed-point iteration.
    """
    if hotspot_power < 0:
        raise ValueError("hotspot_power must be >= 0")

    pitch = design_pitch(design, calibration)
    cell_area = pitch**2
    leg_area = design.te_width**2
    k_spacer = layer_thermal_properties("al2o3").conductivity
    k_te = te_properties("bi2te3_thin_film").thermal_conductivity
    k_pdms = layer_thermal_properties("pdms").conductivity
    k_pi = layer_thermal_properties("polyimide").conductivity

    r_hot_cold = (
        design.spacer_thickness / (k_spacer * leg_area)
        + design.te_height / (k_te * leg_area)
    )
    r_pdms = calibration.pdms_thickness_m / (k_pdms * cell_area)
    r_cold_textile = 1.0 / (calibration.textile_coeff_w_m2k * cell_area)
    r_cold_skin = calibration.polyimide_thickness_m / (k_pi * cell_area)

    al = layer_thermal_properties("aluminum")
    spacer = layer_thermal_properties("al2o3")
    te = layer_thermal_properties("te_film")
    pi = layer_thermal_properties("polyimide")
    c_hot = (al.density * al.specific_heat * cell_area * design.metal_thickness
             + spacer.density * spacer.specific_heat * cell_area * design.spacer_thickness)
    c_cold = (te.density * te.specific_heat * leg_area * design.te_height
              + pi.density * pi.specific_heat * cell_area * calibration.polyimide_thickness_m)

    def assemble(h_rad: float) -> ThermalNetwork:
        r_top_film = 1.0 / ((env.convection_coeff + h_rad) * cell_area)
        return ThermalNetwork(
            nodes=((HOT_NODE, c_hot), (COLD_NODE, c_cold)),
            reservoirs=(
                (AMBIENT_RESERVOIR, env.ambient_temp),
                (TEXTILE_RESERVOIR, env.ambient_temp),
                (SKIN_RESERVOIR, env.skin_temp),
            ),
            edges=(
                (HOT_NODE, AMBIENT_RESERVOIR, r_pdms + r_top_film),
                (HOT_NODE, COLD_NODE, r_hot_cold),
                (COLD_NODE, TEXTILE_RESERVOIR, r_cold_textile),
                (COLD_NODE, SKIN_RESERVOIR, r_cold_skin),
            ),
            sources=((HOT_NODE, calibration.hotspot_concentration * hotspot_power),),
            hot_node=HOT_NODE,
            cold_node=COLD_NODE,
        )

    # self-consistent linearization about the mean of hot and ambient temps
    hot_estimate = env.skin_temp
    network = assemble(linearized_radiation_coeff(env.emissivity,
                                                  0.5 * (hot_estimate + env.ambient_temp)))
    for _ in range(10):
        solved = solve_steady(network)
        if abs(solved.hot_temp - hot_estimate) < 1e-12:
            break
        hot_estimate = solved.hot_temp
        network = assemble(linearized_radiation_coeff(env.emissivity,
                                                      0.5 * (hot_estimate + env.ambient_temp)))
    return network


def network_to_json_dict(network: ThermalNetwork) -> dict:
    """Debug representation of a network as plain JSON-compatible data."""
    return {
        "nodes": [{"id": n, "heat_capacity_J_K": c} for n, c in network.nodes],
        "reservoirs": [{"id": r, "temp_K": t} for r, t in network.reservoirs],
        "edges": [
            {"a": a, "b": b, "resistance_K_W": r} for a, b, r in network.edges
        ],
        "sources": [{"node": n, "power_W": p} for n, p in network.sources],
        "hot_node": network.hot_node,
        "cold_node": network.cold_node,
    }
