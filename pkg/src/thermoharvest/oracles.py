"""Self-contained validation oracles.

Each check pairs a solver output with an independent route to the same
quantity: analytic series resistance vs. the finite-volume stack, the lumped
network vs. the stack, near-interpolation of a low-noise GP, and an all-pairs
dominance scan vs. the fast non-dominated sort.  The ``validate`` subcommand
runs them all and reports a pass/fail table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import ThermalLayerProps
from .moo import dominates, non_dominated_sort
from .surrogate import gpr_fit, gpr_predict
from .thermal import (BoundaryCondition, StackModel, ThermalNetwork,
                      series_resistance_oracle, solve_steady, stack_fd_profile)


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    detail: str


def _random_props(rng) -> ThermalLayerProps:
    return ThermalLayerProps(
        density=float(rng.uniform(900, 8000)),
        specific_heat=float(rng.uniform(150, 1500)),
        conductivity=float(rng.uniform(0.1, 5.0)),
    )


def check_series_resistance(seed: int = 0, cases: int = 10, tol: float = 1e-3) -> OracleResult:
    """Source-free stacks with fixed end temperatures against flux * sum(t/k)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n_layers = int(rng.integers(1, 5))
        layers = tuple(
            (f"layer{i}", float(rng.uniform(1e-6, 5e-5)), _random_props(rng))
            for i in range(n_layers)
        )
        t_top = float(rng.uniform(300, 320))
        t_bot = float(rng.uniform(280, 300))
        stack = StackModel(
            layers=layers, area=1e-9, source_profile=(0.0,) * n_layers,
            top_bc=BoundaryCondition("fixed", t_top),
            bottom_bc=BoundaryCondition("fixed", t_bot),
        )
        solution = stack_fd_profile(stack, n_cells=8)
        resistance_per_area = sum(t / p.conductivity for _, t, p in stack.layers)
        flux = (t_top - t_bot) / resistance_per_area
        predicted = series_resistance_oracle(stack, flux)
        actual = solution.delta_T
        worst = max(worst, abs(actual - predicted) / max(abs(predicted), 1e-30))
    return OracleResult(
        "series-resistance analytic vs finite-volume",
        worst < tol,
        f"worst relative deviation {worst:.3e} (tol {tol:.0e})",
    )


def equivalent_chain_network(stack: StackModel, source_power: tuple[float, ...]):
    """Exact lumped equivalent of a 1-D stack.

    Every layer becomes two half-resistances around a mid-layer node; a
    uniformly sourced slab with its total power injected at the midpoint
    reproduces the slab's external (face) behaviour exactly.  Fixed-
    temperature faces become reservoirs; convective faces become nodes with
    a film resistance to their reservoir.
    """
    n = len(stack.layers)
    nodes: list[tuple[str, float]] = []
    edges: list[tuple[str, str, float]] = []
    reservoirs: list[tuple[str, float]] = []

    if stack.top_bc.kind == "fixed":
        reservoirs.append(("face0", stack.top_bc.temp))
    else:
        nodes.append(("face0", 1.0))
        reservoirs.append(("top_res", stack.top_bc.temp))
        edges.append(("face0", "top_res", 1.0 / (stack.top_bc.h * stack.area)))
    last_face = f"face{n}"
    if stack.bottom_bc.kind == "fixed":
        reservoirs.append((last_face, stack.bottom_bc.temp))
    else:
        nodes.append((last_face, 1.0))
        reservoirs.append(("bot_res", stack.bottom_bc.temp))
        edges.append((last_face, "bot_res", 1.0 / (stack.bottom_bc.h * stack.area)))
    for i in range(1, n):
        nodes.append((f"face{i}", 1.0))

    for i, (_, thickness, props) in enumerate(stack.layers):
        half = thickness / (2 * props.conductivity * stack.area)
        nodes.append((f"mid{i}", 1.0))
        edges.append((f"face{i}", f"mid{i}", half))
        edges.append((f"mid{i}", f"face{i + 1}", half))

    sources = tuple((f"mid{i}", p) for i, p in enumerate(source_power) if p != 0.0)
    return ThermalNetwork(
        nodes=tuple(nodes), reservoirs=tuple(reservoirs),
        edges=tuple(edges), sources=sources,
    )


def check_network_vs_stack(seed: int = 1, cases: int = 20, tol: float = 0.01) -> OracleResult:
    """Randomized sourced stacks: lumped chain vs finite volume within 1%."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        n_layers = int(rng.integers(2, 5))
        layers = []
        sources = []
        for i in range(n_layers):
            thickness = float(rng.uniform(1e-6, 4e-5))
            layers.append((f"layer{i}", thickness, _random_props(rng)))
            sources.append(0.0)
        # one sourced layer
        hot_layer = int(rng.integers(0, n_layers))
        area = 1e-9
        power = float(rng.uniform(1e-6, 1e-4))
        sources[hot_layer] = power / (area * layers[hot_layer][1])  # W/m^3
        stack = StackModel(
            layers=tuple(layers), area=area, source_profile=tuple(sources),
            top_bc=BoundaryCondition("convective", float(rng.uniform(280, 300)),
                                     h=float(rng.uniform(5, 50))),
            bottom_bc=BoundaryCondition("fixed", float(rng.uniform(290, 310))),
        )
        fd = stack_fd_profile(stack, n_cells=24)

        network = equivalent_chain_network(stack, tuple(
            p * area * layers[i][1] for i, p in enumerate(sources)
        ))
        lumped = solve_steady(network)
        temps = dict(network.reservoirs) | lumped.node_temps
        net_delta = temps["face0"] - temps[f"face{n_layers}"]
        fd_delta = fd.hot_temp - fd.cold_temp  # outer faces (no te_film layer)
        scale = max(abs(fd_delta), abs(net_delta), 1e-12)
        worst = max(worst, abs(net_delta - fd_delta) / scale)
    return OracleResult(
        "lumped network vs finite-volume stack",
        worst < tol,
        f"worst relative gradient mismatch {worst:.3e} (tol {tol})",
    )


def check_gpr_interpolation(seed: int = 2, tol: float = 1e-3) -> OracleResult:
    """Low-noise GP must reproduce its training targets nearly exactly."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(40, 3))
    y = np.sin(2 * np.pi * X[:, 0]) + X[:, 1] ** 2 + 0.5 * X[:, 2]
    model = gpr_fit(X, y, noise_variance=1e-8)
    mean, _ = gpr_predict(model, X)
    worst = float(np.max(np.abs(mean - y))) / float(np.std(y))
    return OracleResult(
        "gpr training-point interpolation",
        worst <= tol,
        f"worst |error|/std {worst:.3e} (tol {tol})",
    )


def check_pareto_bruteforce(seed: int = 3, n: int = 60) -> OracleResult:
    """Fast non-dominated sort front vs an all-pairs dominance scan."""
    rng = np.random.default_rng(seed)
    points = rng.uniform(0, 1, size=(n, 3))
    fast = set(non_dominated_sort(points)[0])
    brute = {
        i for i in range(n)
        if not any(dominates(points[j], points[i]) for j in range(n) if j != i)
    }
    return OracleResult(
        "pareto front vs brute-force scan",
        fast == brute,
        f"front sizes fast={len(fast)} brute={len(brute)}",
    )


def run_all(seed: int = 0) -> list[OracleResult]:
    return [
        check_series_resistance(seed),
        check_network_vs_stack(seed + 1),
        check_gpr_interpolation(seed + 2),
        check_pareto_bruteforce(seed + 3),
    ]
