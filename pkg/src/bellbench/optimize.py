"""Grid-then-refine search over polarizer orientations.

The objective is the violation margin of a chosen inequality under the
quantum prediction (ideal or real apparatus).  A coarse exhaustive grid
over the free angles is followed by a derivative-free coordinate search
with step halving; both stages are fully deterministic, with grid ties
broken by the first (lexicographically smallest) angle tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .inequalities import FUNCTIONALS, Functional, InequalityReport, normalize_functional_id
from .model import AngleConfig, EvaluationError
from .qm import ExperimentParams, settings_table

_FREE_ORDER = ("a", "b", "a_prime", "b_prime", "r")


@dataclass(frozen=True)
class OptimizationProblem:
    """Which inequality to drive past its bound, and over which angles."""

    inequality: str
    free_angles: tuple[str, ...]
    base_config: AngleConfig
    params: Optional[ExperimentParams] = None  # None selects the ideal source

    def __post_init__(self) -> None:
        object.__setattr__(self, "inequality", normalize_functional_id(self.inequality))
        if not self.free_angles:
            raise ValueError("at least one free angle is required")
        for name in self.free_angles:
            if name not in _FREE_ORDER:
                raise ValueError(f"unknown angle {name!r}")
        if self.inequality not in FUNCTIONALS:
            raise ValueError(f"inequality {self.inequality!r} is not optimizable over angles")


@dataclass(frozen=True)
class OptimizationResult:
    best_config: AngleConfig
    best_report: InequalityReport
    best_margin: float
    canonical_differences: tuple[float, float, float, float]


def _constrain(problem: OptimizationProblem, config: AngleConfig) -> AngleConfig:
    # Two functionals are only meaningful on a restricted geometry, and the
    # search space is pinned accordingly: the symmetric ratio form needs a'
    # and b' physically along the reference direction, and the
    # three-orientation inequality shares its third direction between the
    # sides (a' = b'), which is what makes its same-angle correlation
    # perfect.
    if problem.inequality == "STRONG46":
        return config.replace(a_prime=config.r, b_prime=config.r)
    if problem.inequality == "BELL65_28":
        return config.replace(b_prime=config.a_prime)
    return config


def _margin(problem: OptimizationProblem, f: Functional, config: AngleConfig) -> float:
    table = settings_table(_constrain(problem, config), f.required_pairs, problem.params)
    try:
        return f.evaluate(table).margin
    except EvaluationError:
        return float("-inf")


def optimize(
    problem: OptimizationProblem,
    grid_step: float = 5.0,
    refine_tolerance: float = 0.01,
) -> OptimizationResult:
    """Exhaustive coarse grid, then coordinate descent with step halving.

    Refinement accepts only strict improvements, so it never returns a
    worse margin than its starting grid point, and ties stay at the
    grid winner.
    """
    if grid_step <= 0 or 180.0 % grid_step != 0:
        raise ValueError("grid_step must be positive and divide 180")
    if refine_tolerance <= 0:
        raise ValueError("refine_tolerance must be positive")
    f = FUNCTIONALS[problem.inequality]
    free = tuple(sorted(problem.free_angles, key=_FREE_ORDER.index))
    grid = [x * grid_step for x in range(int(round(180.0 / grid_step)))]

    best_angles: Optional[tuple[float, ...]] = None
    best_margin = float("-inf")
    for angles in itertools.product(grid, repeat=len(free)):
        config = problem.base_config.replace(**dict(zip(free, angles)))
        margin = _margin(problem, f, config)
        if margin > best_margin:
            best_margin = margin
            best_angles = angles

    assert best_angles is not None
    current = dict(zip(free, best_angles))
    step = grid_step / 2.0
    while step >= refine_tolerance:
        improved = False
        for name in free:
            while True:
                moved = False
                for delta in (step, -step):
                    trial = dict(current)
                    trial[name] = (current[name] + delta) % 180.0
                    margin = _margin(problem, f, problem.base_config.replace(**trial))
                    if margin > best_margin:
                        best_margin = margin
                        current = trial
                        moved = True
                        improved = True
                        break
                if not moved:
                    break
        if not improved:
            step /= 2.0

    best_config = _constrain(problem, problem.base_config.replace(**current))
    report = f.evaluate(settings_table(best_config, f.required_pairs, problem.params))
    return OptimizationResult(
        best_config, report, best_margin, best_config.canonical_differences())
