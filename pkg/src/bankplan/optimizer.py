"""Differential evolution with feasibility ranking, plus a dense-grid oracle.

Both solvers maximize.  Objectives and violation functions are vectorized:
they take an (n, d) array of candidate points and return an (n,) array.  A
candidate is feasible when its total constraint violation is exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, Infeasible

Objective = Callable[[np.ndarray], np.ndarray]
Violation = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OptimizerConfig:
    """Differential-evolution hyperparameters.

    The seed fully determines the run: identical config and inputs produce
    bit-identical traces.
    """

    population: int = 48
    generations: int = 300
    mutation: float = 0.7
    crossover: float = 0.9
    seed: int = 0
    constraint_handling: str = "feasibility-ranking"  # or "penalty"
    penalty_weight: float = 1e4
    grid_budget: float = 1e8
    tol: float = 1e-9

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if not 0.0 < self.mutation <= 2.0:
            raise ValueError("mutation factor must lie in (0,2]")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValueError("crossover rate must lie in [0,1]")
        if self.constraint_handling not in ("feasibility-ranking", "penalty"):
            raise ValueError(f"unknown constraint handling {self.constraint_handling!r}")


@dataclass
class DEResult:
    point: np.ndarray
    objective: float
    violation: float
    trace: np.ndarray  # best feasible objective per generation (-inf if none)
    evaluations: int


def project_simplex_head(points: np.ndarray, head: int) -> np.ndarray:
    """Map the first ``head`` coordinates onto the probability simplex.

    Coordinates are clamped at zero and normalized; an all-zero head falls
    back to the uniform point so the map is total.
    """
    out = points.copy()
    h = np.clip(out[:, :head], 0.0, None)
    s = h.sum(axis=1, keepdims=True)
    uniform = np.full_like(h, 1.0 / head)
    out[:, :head] = np.where(s > 0.0, h / np.where(s == 0.0, 1.0, s), uniform)
    return out


def _better(obj_t, viol_t, obj_x, viol_x, mode: str, weight: float) -> np.ndarray:
    if mode == "penalty":
        return (obj_t - weight * viol_t) >= (obj_x - weight * viol_x)
    t_feas = viol_t <= 0.0
    x_feas = viol_x <= 0.0
    both_feas = t_feas & x_feas
    return (
        (both_feas & (obj_t >= obj_x))
        | (t_feas & ~x_feas)
        | (~t_feas & ~x_feas & (viol_t <= viol_x))
    )


def _coarse_grid_points(bounds: np.ndarray, per_dim: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def de_optimize(
    objective: Objective,
    violation: Violation,
    bounds: Sequence[tuple[float, float]],
    config: OptimizerConfig,
    simplex_head: int = 0,
    seeds: Optional[np.ndarray] = None,
) -> DEResult:
    """Maximize ``objective`` subject to ``violation(x) == 0`` over a box.

    ``simplex_head`` > 0 projects that many leading coordinates onto the
    simplex before every evaluation.  ``seeds`` are extra initial candidates
    (they displace random initial individuals).  Raises ``Infeasible`` when
    no feasible individual is found even after a grid-seeded restart.
    """
    bounds = np.asarray(bounds, dtype=float)
    dim = len(bounds)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if np.any(hi < lo):
        raise ValueError("inconsistent bounds")
    rng = np.random.default_rng(config.seed)

    def project(p: np.ndarray) -> np.ndarray:
        p = np.clip(p, lo, hi)
        if simplex_head > 0:
            p = project_simplex_head(p, simplex_head)
        return p

    evaluations = 0

    def evaluate(p: np.ndarray):
        nonlocal evaluations
        evaluations += len(p)
        return np.asarray(objective(p), dtype=float), np.asarray(violation(p), dtype=float)

    def init_population() -> np.ndarray:
        pop = lo + rng.random((config.population, dim)) * (hi - lo)
        if seeds is not None and len(seeds) > 0:
            k = min(len(seeds), config.population)
            pop[:k] = np.asarray(seeds, dtype=float)[:k]
        return project(pop)

    def run(pop: np.ndarray):
        obj, viol = evaluate(pop)
        trace = np.empty(config.generations)
        npop = len(pop)
        idx = np.arange(npop)
        for gen in range(config.generations):
            # Three distinct partners per individual, none equal to itself:
            # sample without replacement from npop-1 slots, then shift past self.
            perm = np.argsort(rng.random((npop, npop - 1)), axis=1, kind="stable")
            r = perm[:, :3]
            r[r >= idx[:, None]] += 1
            mutant = pop[r[:, 0]] + config.mutation * (pop[r[:, 1]] - pop[r[:, 2]])
            cross = rng.random((npop, dim)) < config.crossover
            jrand = rng.integers(0, dim, size=npop)
            cross[idx, jrand] = True
            trial = project(np.where(cross, mutant, pop))
            obj_t, viol_t = evaluate(trial)
            take = _better(obj_t, viol_t, obj, viol,
                           config.constraint_handling, config.penalty_weight)
            pop = np.where(take[:, None], trial, pop)
            obj = np.where(take, obj_t, obj)
            viol = np.where(take, viol_t, viol)
            feas = viol <= 0.0
            trace[gen] = obj[feas].max() if feas.any() else -np.inf
        return pop, obj, viol, trace

    pop, obj, viol, trace = run(init_population())
    feas = viol <= 0.0
    if not feas.any():
        # Grid-seeded restart: rank a coarse lattice by violation.
        per_dim = max(2, int(round((32 * config.population) ** (1.0 / dim))))
        grid = project(_coarse_grid_points(bounds, per_dim))
        _, gviol = evaluate(grid)
        order = np.argsort(gviol, kind="stable")[: config.population]
        seeded = grid[order]
        if len(seeded) < config.population:
            pad = lo + rng.random((config.population - len(seeded), dim)) * (hi - lo)
            seeded = np.vstack([seeded, project(pad)])
        pop, obj, viol, trace2 = run(seeded)
        trace = np.concatenate([trace, trace2])
        feas = viol <= 0.0
        if not feas.any():
            raise Infeasible("no feasible individual after grid-seeded restart")

    best = np.flatnonzero(feas)[np.argmax(obj[feas])]
    return DEResult(point=pop[best].copy(), objective=float(obj[best]),
                    violation=float(viol[best]), trace=trace, evaluations=evaluations)


def grid_oracle(
    objective: Objective,
    violation: Violation,
    bounds: Sequence[tuple[float, float]],
    steps: Sequence[float],
    budget: float = 1e8,
    projector: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    chunk: int = 200_000,
) -> tuple[np.ndarray, float]:
    """Exhaustive best feasible point on a rectangular grid (deterministic).

    Returns (point, objective).  Raises ``BudgetExceeded`` when the grid is
    larger than ``budget`` evaluations and ``Infeasible`` when no grid point
    is feasible.
    """
    bounds = np.asarray(bounds, dtype=float)
    axes = []
    for (low, high), step in zip(bounds, steps):
        if step <= 0:
            raise ValueError("grid steps must be positive")
        n = int(np.floor((high - low) / step + 1e-12)) + 1
        axes.append(low + step * np.arange(n))
    total = float(np.prod([len(a) for a in axes]))
    if total > budget:
        raise BudgetExceeded(f"grid of {total:.3g} points exceeds budget {budget:.3g}")

    sizes = [len(a) for a in axes]
    total_n = int(total)
    best_point: Optional[np.ndarray] = None
    best_obj = -np.inf

    for start in range(0, total_n, chunk):
        flat = np.arange(start, min(start + chunk, total_n))
        multi = np.unravel_index(flat, sizes)
        pts = np.stack([axes[d][multi[d]] for d in range(len(axes))], axis=1)
        if projector is not None:
            pts = projector(pts)
        viol = np.asarray(violation(pts), dtype=float)
        feas = viol <= 0.0
        if feas.any():
            obj = np.asarray(objective(pts[feas]), dtype=float)
            i = int(np.argmax(obj))
            if obj[i] > best_obj:
                best_obj = float(obj[i])
                best_point = pts[feas][i].copy()
    if best_point is None:
        raise Infeasible("no feasible grid point")
    return best_point, best_obj
