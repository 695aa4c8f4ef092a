"""NSGA-II multi-objective search over the design space.

Objectives follow the minimization convention (-dT, -P_out, thickness).
All stochastic choices draw from per-slot generator streams derived from the
master seed, so results are bit-identical for any worker count.  An archive
of non-dominated evaluations (bounded, pruned by crowding) provides the
reported front; per-objective bests and logged hypervolume never regress
between generations.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .designs import DesignBounds, DesignPoint
from .pipeline import sample_designs

OBJECTIVE_DEDUP_TOL = 1e-12
ARCHIVE_CAP = 2000


@dataclass(frozen=True)
class Individual:
    design: DesignPoint
    objectives: np.ndarray  # minimization convention
    rank: int = 0
    crowding: float = 0.0


@dataclass(frozen=True)
class NsgaConfig:
    population: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    sbx_eta: float = 15.0
    mutation_prob_per_var: float = 1.0 / 9.0
    mutation_eta: float = 20.0
    seed: int = 0
    evaluator: str = "direct"  # "surrogate" | "direct"

    def __post_init__(self):
        if self.population < 4 or self.population % 2 != 0:
            raise ValueError("population must be even and at least 4")
        if self.generations < 1:
            raise ValueError("need at least one generation")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if not 0.0 <= self.mutation_prob_per_var <= 1.0:
            raise ValueError("mutation_prob_per_var must lie in [0, 1]")
        if self.sbx_eta <= 0 or self.mutation_eta <= 0:
            raise ValueError("distribution indices must be positive")
        if self.evaluator not in ("surrogate", "direct"):
            raise ValueError("evaluator must be 'surrogate' or 'direct'")


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[Individual, ...]
    hypervolume: float
    reference_point: np.ndarray


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    hypervolume: float  # best front hypervolume attained so far
    best_objectives: np.ndarray  # per-objective minima over all evaluations
    archive_size: int


def dominates(a, b) -> bool:
    """Pareto dominance under minimization: a <= b everywhere, < somewhere."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.shape != b.shape:
        raise ValueError(f"objective arity mismatch: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_sort(objectives) -> list[list[int]]:
    """Fast non-dominated sort; returns fronts as index lists, best first."""
    points = np.atleast_2d(np.asarray(objectives, float))
    n = points.shape[0]
    if n == 0:
        raise ValueError("population must not be empty")

    less_equal = np.all(points[:, None, :] <= points[None, :, :], axis=2)
    strictly_less = np.any(points[:, None, :] < points[None, :, :], axis=2)
    dom = less_equal & strictly_less  # dom[i, j]: i dominates j

    counts = dom.sum(axis=0)
    fronts = []
    assigned = np.zeros(n, bool)
    remaining = np.arange(n)
    while remaining.size:
        current = remaining[counts[remaining] == 0]
        if current.size == 0:
            raise RuntimeError("non-dominated sort failed to make progress")
        fronts.append(sorted(current.tolist()))
        assigned[current] = True
        counts = counts - dom[current].sum(axis=0)
        remaining = np.flatnonzero(~assigned)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """NSGA-II crowding: boundary members get inf, interior members sum the
    normalized neighbour gaps; objectives with zero range contribute 0."""
    points = np.atleast_2d(np.asarray(front, float))
    n, m = points.shape
    if n == 0:
        raise ValueError("front must not be empty")
    distance = np.zeros(n)
    if n <= 2:
        distance[:] = np.inf
        return distance
    for j in range(m):
        order = np.argsort(points[:, j], kind="stable")
        lo, hi = points[order[0], j], points[order[-1], j]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        if hi - lo <= 0:
            continue
        gaps = (points[order[2:], j] - points[order[:-2], j]) / (hi - lo)
        interior = order[1:-1]
        finite = np.isfinite(distance[interior])
        distance[interior] = np.where(finite, distance[interior] + gaps, np.inf)
    return distance


def _hv_2d(points: np.ndarray, reference: np.ndarray) -> float:
    """Vectorised 2-D hypervolume sweep; dominated points contribute nothing."""
    order = np.lexsort((points[:, 1], points[:, 0]))
    pts = points[order]
    y_running = np.minimum.accumulate(pts[:, 1])
    improving = np.ones(pts.shape[0], bool)
    improving[1:] = pts[1:, 1] < y_running[:-1]
    pts = pts[improving]
    prev_y = np.concatenate(([reference[1]], pts[:-1, 1]))
    return float(np.sum((reference[0] - pts[:, 0]) * (prev_y - pts[:, 1])))


def hypervolume(points, reference) -> float:
    """Exact hypervolume dominated by a minimization front w.r.t. a reference.

    Points at or beyond the reference in any coordinate contribute nothing;
    dimensions above two are handled by slicing on the last objective.
    """
    reference = np.asarray(reference, float)
    pts = np.atleast_2d(np.asarray(points, float))
    if pts.size == 0:
        return 0.0
    pts = pts[np.all(pts < reference, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    d = reference.size
    if d == 1:
        return float(reference[0] - pts[:, 0].min())
    if d == 2:
        return _hv_2d(pts, reference)
    order = np.argsort(pts[:, -1], kind="stable")
    pts = pts[order]
    total = 0.0
    for i in range(pts.shape[0]):
        z_lo = pts[i, -1]
        z_hi = pts[i + 1, -1] if i + 1 < pts.shape[0] else reference[-1]
        if z_hi > z_lo:
            total += hypervolume(pts[: i + 1, :-1], reference[:-1]) * (z_hi - z_lo)
    return float(total)


class _Archive:
    """Bounded non-dominated archive with objective-space deduplication."""

    def __init__(self, cap: int = ARCHIVE_CAP):
        self.cap = cap
        self.designs: list[DesignPoint] = []
        self.objs = np.empty((0, 0))

    def __len__(self) -> int:
        return len(self.designs)

    def update(self, designs, objs: np.ndarray) -> None:
        objs = np.atleast_2d(np.asarray(objs, float))
        # batch-internal non-dominated subset, deduplicated
        front0 = non_dominated_sort(objs)[0]
        keep: list[int] = []
        for i in front0:
            if all(np.max(np.abs(objs[i] - objs[j])) > OBJECTIVE_DEDUP_TOL for j in keep):
                keep.append(i)
        new_designs = [designs[i] for i in keep]
        new_objs = objs[keep]

        if not self.designs:
            self.designs = list(new_designs)
            self.objs = new_objs.copy()
        else:
            arch = self.objs
            le = np.all(arch[:, None, :] <= new_objs[None, :, :], axis=2)
            lt = np.any(arch[:, None, :] < new_objs[None, :, :], axis=2)
            dominated = np.any(le & lt, axis=0)
            duplicate = np.any(
                np.max(np.abs(arch[:, None, :] - new_objs[None, :, :]), axis=2)
                <= OBJECTIVE_DEDUP_TOL,
                axis=0,
            )
            admit = np.flatnonzero(~dominated & ~duplicate)
            if admit.size:
                incoming = new_objs[admit]
                le2 = np.all(incoming[:, None, :] <= arch[None, :, :], axis=2)
                lt2 = np.any(incoming[:, None, :] < arch[None, :, :], axis=2)
                survive = ~np.any(le2 & lt2, axis=0)
                self.designs = [d for d, s in zip(self.designs, survive) if s] + [
                    new_designs[i] for i in admit
                ]
                self.objs = np.vstack([arch[survive], incoming])

        if len(self.designs) > int(1.25 * self.cap):
            self._prune()

    def _prune(self) -> None:
        crowd = crowding_distance(self.objs)
        order = sorted(range(len(self.designs)), key=lambda i: (-crowd[i], i))
        chosen = sorted(order[: self.cap])
        self.designs = [self.designs[i] for i in chosen]
        self.objs = self.objs[chosen]


def _slot_rng(seed: int, generation: int, slot: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(generation, slot, purpose))
    )


def _tournament(rng, ranks, crowding, k):
    i, j = rng.integers(0, k), rng.integers(0, k)
    if ranks[i] != ranks[j]:
        return i if ranks[i] < ranks[j] else j
    if crowding[i] != crowding[j]:
        return i if crowding[i] > crowding[j] else j
    return i


def _sbx_pair(rng, p1, p2, lows, highs, eta, crossover_prob):
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() <= crossover_prob:
        for v in range(p1.size):
            if rng.random() > 0.5:
                continue
            u = rng.random()
            beta = (2 * u) ** (1 / (eta + 1)) if u <= 0.5 else (1 / (2 * (1 - u))) ** (1 / (eta + 1))
            c1[v] = 0.5 * ((1 + beta) * p1[v] + (1 - beta) * p2[v])
            c2[v] = 0.5 * ((1 - beta) * p1[v] + (1 + beta) * p2[v])
    return np.clip(c1, lows, highs), np.clip(c2, lows, highs)


def _polynomial_mutation(rng, x, lows, highs, eta, prob):
    y = x.copy()
    for v in range(x.size):
        if rng.random() >= prob:
            continue
        u = rng.random()
        delta = (2 * u) ** (1 / (eta + 1)) - 1 if u < 0.5 else 1 - (2 * (1 - u)) ** (1 / (eta + 1))
        y[v] = x[v] + delta * (highs[v] - lows[v])
    return np.clip(y, lows, highs)


def _evaluate_batch(objective_fn, designs, workers):
    if workers <= 1:
        return [np.asarray(objective_fn(d), float) for d in designs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [np.asarray(v, float) for v in pool.map(objective_fn, designs)]


def _rank_population(objectives: np.ndarray):
    fronts = non_dominated_sort(objectives)
    ranks = np.empty(objectives.shape[0], int)
    crowd = np.empty(objectives.shape[0])
    for r, front in enumerate(fronts):
        ranks[front] = r
        crowd[front] = crowding_distance(objectives[front])
    return fronts, ranks, crowd


def _environmental_selection(objectives, mu):
    fronts, ranks, crowd = _rank_population(objectives)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
        else:
            by_crowding = sorted(front, key=lambda i: (-crowd[i], i))
            chosen.extend(by_crowding[: mu - len(chosen)])
            break
    return chosen


def _front_from_archive(archive: _Archive, reference_point: np.ndarray) -> ParetoFront:
    objs = archive.objs
    crowd = crowding_distance(objs)
    order = sorted(range(len(archive)), key=lambda i: tuple(objs[i]))
    members = tuple(
        Individual(archive.designs[i], objs[i].copy(), rank=0, crowding=float(crowd[i]))
        for i in order
    )
    return ParetoFront(
        members=members,
        hypervolume=hypervolume(objs, reference_point),
        reference_point=reference_point,
    )


def evolve(bounds: DesignBounds, config: NsgaConfig, objective_fn,
           reference_point=None, workers: int = 1):
    """Run NSGA-II and return (ParetoFront, generation log).

    ``objective_fn`` maps a DesignPoint to a minimization objective vector;
    it must be total on the bounds box.  The reported front is the archive of
    non-dominated evaluations; the per-generation log carries the running
    best front hypervolume and per-objective minima.
    """
    lows, highs = bounds.lows(), bounds.highs()
    mu = config.population

    init_seed = int(_slot_rng(config.seed, 0, 0, 0).integers(2**31))
    population = [d.to_array() for d in sample_designs(bounds, mu, init_seed)]
    designs = [DesignPoint.from_array(x) for x in population]
    objectives = np.array(_evaluate_batch(objective_fn, designs, workers))
    n_obj = objectives.shape[1]

    if reference_point is None:
        span = objectives.max(axis=0) - objectives.min(axis=0)
        reference_point = objectives.max(axis=0) + 0.1 * np.where(span > 0, span, 1.0)
    reference_point = np.asarray(reference_point, float)
    if reference_point.shape != (n_obj,):
        raise ValueError("reference point arity must match the objectives")

    archive = _Archive()
    archive.update(designs, objectives)
    best_objectives = objectives.min(axis=0)
    best_hv = hypervolume(objectives[non_dominated_sort(objectives)[0]], reference_point)
    log = [GenerationRecord(0, best_hv, best_objectives.copy(), len(archive))]

    _, ranks, crowd = _rank_population(objectives)

    for gen in range(1, config.generations + 1):
        offspring = []
        for slot in range(mu // 2):
            rng = _slot_rng(config.seed, gen, slot, 1)
            a = _tournament(rng, ranks, crowd, mu)
            b = _tournament(rng, ranks, crowd, mu)
            c1, c2 = _sbx_pair(rng, population[a], population[b], lows, highs,
                               config.sbx_eta, config.crossover_prob)
            c1 = _polynomial_mutation(rng, c1, lows, highs,
                                      config.mutation_eta, config.mutation_prob_per_var)
            c2 = _polynomial_mutation(rng, c2, lows, highs,
                                      config.mutation_eta, config.mutation_prob_per_var)
            offspring.extend([c1, c2])

        offspring_designs = [DesignPoint.from_array(x) for x in offspring]
        offspring_objs = np.array(_evaluate_batch(objective_fn, offspring_designs, workers))

        combined_designs = population + offspring
        combined_objs = np.vstack([objectives, offspring_objs])
        chosen = _environmental_selection(combined_objs, mu)
        population = [combined_designs[i] for i in chosen]
        objectives = combined_objs[chosen]
        _, ranks, crowd = _rank_population(objectives)

        archive.update(offspring_designs, offspring_objs)
        best_objectives = np.minimum(best_objectives, offspring_objs.min(axis=0))
        gen_front = objectives[non_dominated_sort(objectives)[0]]
        best_hv = max(best_hv, hypervolume(gen_front, reference_point))
        log.append(GenerationRecord(gen, best_hv, best_objectives.copy(), len(archive)))

    return _front_from_archive(archive, reference_point), log


def extract_front_from_dataset(dataset, reference_point=None) -> ParetoFront:
    """Non-dominated rows of a dataset under (-dT, -P_out, thickness)."""
    if len(dataset) == 0:
        raise ValueError("dataset must not be empty")
    objectives = np.column_stack([
        -dataset.metric_column("dT_K"),
        -dataset.metric_column("pout_W"),
        dataset.metric_column("tdev_m"),
    ])
    if reference_point is None:
        span = objectives.max(axis=0) - objectives.min(axis=0)
        reference_point = objectives.max(axis=0) + 0.1 * np.where(span > 0, span, 1.0)
    reference_point = np.asarray(reference_point, float)
    archive = _Archive(cap=max(ARCHIVE_CAP, len(dataset)))
    archive.update(list(dataset.designs), objectives)
    return _front_from_archive(archive, reference_point)


def device_objectives(metrics) -> np.ndarray:
    """Map performance metrics to the minimization objective vector."""
    return np.array([-metrics.delta_T_eff, -metrics.p_out, metrics.device_thickness])
