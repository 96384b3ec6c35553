"""Local-hidden-variable models and exhaustive local-bound computation.

A hidden state is represented by a :class:`ResponseFunction`: per side and
per local orientation, a pair of conditional detection probabilities.
Locality is structural; a side's response has no slot for the other
side's orientation.  Ensembles are finite weighted mixtures, and local
bounds are computed by enumerating deterministic strategies, which are
the extreme points of the response box.  The ensemble probabilities are
multilinear in the individual response probabilities, so the bound over
deterministic strategies is the bound over all mixtures.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .inequalities import FUNCTIONALS, GE, Functional
from .model import (
    EvaluationError,
    JointDistribution,
    Outcome,
    SettingLabel,
    SettingsTable,
    label_sides,
)

EQ_TOL = 1e-12

_OUTCOME_SYMBOL = {Outcome.PLUS: "+", Outcome.MINUS: "-", Outcome.NONE: "0"}


@dataclass(frozen=True)
class ResponseFunction:
    """Per-side, per-orientation conditional detection probabilities.

    Each slot maps an orientation label to (q+, q-) with q+ + q- <= 1;
    the remainder is the probability of no detection.
    """

    side1: Mapping[str, tuple[float, float]]
    side2: Mapping[str, tuple[float, float]]

    def __post_init__(self) -> None:
        for side in (self.side1, self.side2):
            for name, (qp, qm) in side.items():
                if not (0.0 <= qp <= 1.0 and 0.0 <= qm <= 1.0):
                    raise ValueError(f"response probability out of [0,1] at {name!r}")
                if qp + qm > 1.0 + EQ_TOL:
                    raise ValueError(f"q+ + q- > 1 at {name!r}")

    @classmethod
    def deterministic(
        cls,
        side1_outcomes: Mapping[str, Outcome],
        side2_outcomes: Mapping[str, Outcome],
    ) -> "ResponseFunction":
        """Extreme-point strategy: every response probability is 0 or 1."""
        def q(o: Outcome) -> tuple[float, float]:
            return (1.0, 0.0) if o is Outcome.PLUS else (0.0, 1.0) if o is Outcome.MINUS else (0.0, 0.0)
        return cls(
            {n: q(o) for n, o in side1_outcomes.items()},
            {n: q(o) for n, o in side2_outcomes.items()},
        )

    def slots(self, side: int) -> Mapping[str, tuple[float, float]]:
        return self.side1 if side == 1 else self.side2

    def response(self, side: int, orientation: str) -> tuple[float, float, float]:
        """(q+, q-, q_none) at a given slot; missing slots fail loudly."""
        side_map = self.slots(side)
        if orientation not in side_map:
            raise EvaluationError(
                f"response function has no slot for orientation {orientation!r} on side {side}")
        qp, qm = side_map[orientation]
        return (qp, qm, max(0.0, 1.0 - qp - qm))

    def detection_total(self, side: int, orientation: str) -> float:
        qp, qm, _ = self.response(side, orientation)
        return qp + qm


def check_supplementary(rf: ResponseFunction, tol: float = EQ_TOL) -> bool:
    """Each channel's detection probability at any setting is bounded by
    the total detection probability at the reference setting r, side by
    side."""
    for side in (1, 2):
        t_r = rf.detection_total(side, "r")
        for name, (qp, qm) in rf.slots(side).items():
            if name == "r":
                continue
            if qp > t_r + tol or qm > t_r + tol:
                return False
    return True


def check_gr(rf: ResponseFunction, tol: float = EQ_TOL) -> bool:
    """Stronger equality variant: total detection probability is the same
    at every orientation of a side."""
    for side in (1, 2):
        t_r = rf.detection_total(side, "r")
        for name in rf.slots(side):
            if abs(rf.detection_total(side, name) - t_r) > tol:
                return False
    return True


@dataclass(frozen=True)
class LhvModel:
    """Weighted mixture of response functions (the hidden-state ensemble)."""

    strategies: tuple[ResponseFunction, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.strategies) != len(self.weights):
            raise ValueError("strategies and weights differ in length")
        if not self.strategies:
            raise ValueError("model needs at least one strategy")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.weights) - 1.0) > EQ_TOL:
            raise ValueError("weights must sum to 1")


def ensemble_table(model: LhvModel, pairs: Iterable[SettingLabel]) -> SettingsTable:
    """Joint tables from the mixture: weighted products of per-side responses.

    The orientation labels alone identify the responses; the physical
    angles never enter a hidden-variable prediction.
    """
    entries = {}
    for label in pairs:
        n1, n2 = label
        s1, s2 = label_sides(label)
        table = np.zeros((3, 3))
        for rf, w in zip(model.strategies, model.weights):
            q1 = np.array(rf.response(s1, n1))
            q2 = np.array(rf.response(s2, n2))
            table += w * np.outer(q1, q2)
        entries[label] = JointDistribution(tuple(tuple(float(v) for v in row) for row in table))
    return SettingsTable(entries)


# ---------------------------------------------------------------------------
# Exhaustive bounds over deterministic strategies.

CONSTRAINTS = ("none", "supplementary", "gr")

# The reduced reference geometry of the symmetric ratio form sets a' and
# b' physically along r, so their responses are the r responses.
_TIED_SLOTS: dict[str, dict[str, str]] = {
    "STRONG46": {"a_prime": "r", "b_prime": "r"},
}


def _orientation_slots(f: Functional, constraint: str) -> tuple[list[str], list[str]]:
    tied = _TIED_SLOTS.get(f.id, {})
    side1: list[str] = []
    side2: list[str] = []
    for label in f.required_pairs:
        sides = label_sides(label)
        for name, side in zip(label, sides):
            name = tied.get(name, name)
            target = side1 if side == 1 else side2
            if name not in target:
                target.append(name)
    if constraint != "none" or f.is_ratio:
        for target in (side1, side2):
            if "r" not in target:
                target.append("r")
    return side1, side2


def _constraint_ok(rf: ResponseFunction, constraint: str) -> bool:
    if constraint == "none":
        return True
    if constraint == "supplementary":
        return check_supplementary(rf)
    if constraint == "gr":
        return check_gr(rf)
    raise ValueError(f"unknown constraint {constraint!r}")


@dataclass(frozen=True)
class BoundResult:
    functional: str
    constraint: str
    bound: float
    witness_side1: dict[str, str]
    witness_side2: dict[str, str]
    n_strategies: int


def local_bound(functional: str, constraint: str = "none") -> BoundResult:
    """Exact extremum of a functional over all local models.

    Enumerates every deterministic outcome assignment (at most 27 per
    side); by multilinearity this extremum equals the extremum over all
    weighted mixtures of stochastic response functions.  For ratio
    functionals, strategies with no reference coincidences are excluded:
    they contribute nothing to either side of the measured ratio.
    """
    if functional not in FUNCTIONALS:
        raise ValueError(f"unknown functional {functional!r}")
    if constraint not in CONSTRAINTS:
        raise ValueError(f"unknown constraint {constraint!r}")
    f = FUNCTIONALS[functional]
    names1, names2 = _orientation_slots(f, constraint)
    tied = _TIED_SLOTS.get(f.id, {})
    # Which tied aliases each side actually uses, per the required pairs.
    used1: set[str] = set()
    used2: set[str] = set()
    for label in f.required_pairs:
        sides = label_sides(label)
        for name, side in zip(label, sides):
            (used1 if side == 1 else used2).add(name)

    best: Optional[float] = None
    best_witness: Optional[tuple[dict, dict]] = None
    count = 0
    outcomes = (Outcome.PLUS, Outcome.MINUS, Outcome.NONE)
    for assign1 in itertools.product(outcomes, repeat=len(names1)):
        o1 = dict(zip(names1, assign1))
        for alias, target in tied.items():
            if target in o1 and alias in used1:
                o1.setdefault(alias, o1[target])
        for assign2 in itertools.product(outcomes, repeat=len(names2)):
            o2 = dict(zip(names2, assign2))
            for alias, target in tied.items():
                if target in o2 and alias in used2:
                    o2.setdefault(alias, o2[target])
            rf = ResponseFunction.deterministic(o1, o2)
            if not _constraint_ok(rf, constraint):
                continue
            model = LhvModel((rf,), (1.0,))
            try:
                report = f.evaluate(ensemble_table(model, f.required_pairs))
            except EvaluationError:
                continue  # ratio with no (r, r) coincidences
            count += 1
            value = report.value
            better = best is None or (
                (value < best) if f.direction == GE else (value > best))
            if better:
                best = value
                best_witness = (
                    {n: _OUTCOME_SYMBOL[o] for n, o in o1.items()},
                    {n: _OUTCOME_SYMBOL[o] for n, o in o2.items()},
                )
    if best is None:
        raise EvaluationError("no admissible strategy for this functional/constraint")
    return BoundResult(functional, constraint, best, best_witness[0], best_witness[1], count)


# ---------------------------------------------------------------------------
# Random model generation for property testing and the sampling CLI.

def _sample_channel(rng: np.random.Generator) -> tuple[float, float]:
    """Uniform draw from the triangle q+ >= 0, q- >= 0, q+ + q- <= 1."""
    u, v = rng.random(2)
    if u + v > 1.0:
        u, v = 1.0 - u, 1.0 - v
    return (float(u), float(v))


def sample_response_function(
    rng: np.random.Generator,
    constraint: str = "none",
    side1_orientations: Sequence[str] = ("a", "a_prime", "r"),
    side2_orientations: Sequence[str] = ("b", "b_prime", "r"),
    tie_primed_to_r: bool = False,
) -> ResponseFunction:
    """Draw one response function uniformly from the constrained region.

    The unconstrained and supplementary regions are sampled by rejection.
    The equality-constrained region has measure zero, so it is sampled by
    construction: a common per-side detection total, split independently
    per orientation.
    """
    if constraint not in CONSTRAINTS:
        raise ValueError(f"unknown constraint {constraint!r}")

    def build() -> ResponseFunction:
        sides = []
        for orientations in (side1_orientations, side2_orientations):
            # Sample r first so primed slots can alias it when tied.
            ordered = sorted(orientations, key=lambda n: n != "r")
            slots: dict[str, tuple[float, float]] = {}
            if constraint == "gr":
                total = float(rng.random())
                for name in ordered:
                    if tie_primed_to_r and name in ("a_prime", "b_prime") and "r" in slots:
                        slots[name] = slots["r"]
                        continue
                    u = float(rng.random())
                    slots[name] = (u * total, (1.0 - u) * total)
            else:
                for name in ordered:
                    if tie_primed_to_r and name in ("a_prime", "b_prime") and "r" in slots:
                        slots[name] = slots["r"]
                        continue
                    slots[name] = _sample_channel(rng)
            sides.append(slots)
        return ResponseFunction(sides[0], sides[1])

    if constraint == "supplementary":
        while True:
            rf = build()
            if check_supplementary(rf):
                return rf
    return build()


def sample_random_model(
    seed: int,
    n_strategies: int,
    constraint: str = "none",
    tie_primed_to_r: bool = False,
) -> LhvModel:
    """Deterministic function of the seed; weights from a normalized
    uniform draw."""
    if n_strategies < 1:
        raise ValueError("n_strategies must be >= 1")
    rng = np.random.default_rng(seed)
    raw = rng.random(n_strategies) + 1e-9
    weights = raw / raw.sum()
    strategies = tuple(
        sample_response_function(rng, constraint, tie_primed_to_r=tie_primed_to_r)
        for _ in range(n_strategies)
    )
    return LhvModel(strategies, tuple(float(w) for w in weights))
