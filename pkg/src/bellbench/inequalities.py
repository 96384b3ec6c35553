"""Inequality functionals and the underlying algebraic theorem.

Every functional is evaluated against a :class:`SettingsTable` and turned
into an :class:`InequalityReport` carrying value, local bound, direction
and a margin oriented so that positive margin means violation.  The
ratio ("strong") forms divide out the reference-setting coincidence rate,
which also removes the unknown emission count from experimental data.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import (
    EvaluationError,
    JointDistribution,
    Outcome,
    SettingLabel,
    SettingsTable,
    expectation,
)
from .qm import ExperimentParams

P, M = Outcome.PLUS, Outcome.MINUS

GE = ">="
LE = "<="


@dataclass(frozen=True)
class InequalityReport:
    id: str
    value: float
    bound: float
    direction: str
    violated: bool
    margin: float
    stderr: Optional[float] = None

    def as_dict(self) -> dict:
        d = {
            "id": self.id,
            "value": self.value,
            "bound": self.bound,
            "direction": self.direction,
            "violated": self.violated,
            "margin": self.margin,
        }
        if self.stderr is not None:
            d["stderr"] = self.stderr
        return d


def make_report(ineq_id: str, value: float, bound: float, direction: str,
                stderr: Optional[float] = None) -> InequalityReport:
    """Normalize the margin so that positive always means violation.

    Boundary equality counts as not violated: the inequalities are
    non-strict.
    """
    if direction == GE:
        margin = bound - value
        violated = value < bound
    elif direction == LE:
        margin = value - bound
        violated = value > bound
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return InequalityReport(ineq_id, value, bound, direction, violated, margin, stderr)


# ---------------------------------------------------------------------------
# The algebraic theorem behind the main inequality.

@dataclass(frozen=True)
class TheoremPoint:
    """Ten box-constrained reals: four x's in [0, U], four y's in [0, V]."""

    x1p: float
    x1m: float
    x2p: float
    x2m: float
    y1p: float
    y1m: float
    y2p: float
    y2m: float
    U: float
    V: float

    def __post_init__(self) -> None:
        if self.U < 0 or self.V < 0:
            raise ValueError("U and V must be non-negative")
        for v in (self.x1p, self.x1m, self.x2p, self.x2m):
            if not 0.0 <= v <= self.U:
                raise ValueError(f"x value {v!r} outside [0, {self.U}]")
        for v in (self.y1p, self.y1m, self.y2p, self.y2m):
            if not 0.0 <= v <= self.V:
                raise ValueError(f"y value {v!r} outside [0, {self.V}]")


def z_value(p: TheoremPoint) -> float:
    """The 19-term form whose non-negativity drives the main inequality."""
    return (
        p.x1p * p.y1p + p.x1m * p.y1m - p.x1p * p.y1m - p.x1m * p.y1p
        + p.y2p * p.x1p + p.y2m * p.x1m - p.y2p * p.x1m - p.y2m * p.x1p
        + p.y1p * p.x2p + p.y1m * p.x2m - p.y1p * p.x2m - p.y1m * p.x2p
        - 2.0 * p.x2p * p.y2p - 2.0 * p.x2m * p.y2m
        + p.V * p.x2p + p.V * p.x2m + p.U * p.y2p + p.U * p.y2m
        + p.U * p.V
    )


def _z_array(x: np.ndarray, U: float, V: float) -> np.ndarray:
    """Vectorized z over rows (x1p, x1m, x2p, x2m, y1p, y1m, y2p, y2m)."""
    x1p, x1m, x2p, x2m, y1p, y1m, y2p, y2m = (x[:, i] for i in range(8))
    return (
        x1p * y1p + x1m * y1m - x1p * y1m - x1m * y1p
        + y2p * x1p + y2m * x1m - y2p * x1m - y2m * x1p
        + y1p * x2p + y1m * x2m - y1p * x2m - y1m * x2p
        - 2.0 * x2p * y2p - 2.0 * x2m * y2m
        + V * x2p + V * x2m + U * y2p + U * y2m
        + U * V
    )


@dataclass(frozen=True)
class TheoremReport:
    min_vertex_value: float
    argmin_vertex: tuple[float, ...]
    min_sampled_value: Optional[float]


def verify_theorem(U: float, V: float, samples: int = 0, seed: int = 0) -> TheoremReport:
    """Check Z >= 0 over the box by vertex enumeration plus sampling.

    Z is multilinear in the eight variables, so its box minimum is
    attained at one of the 2^8 vertices; interior samples are a sanity
    check on the vectorized evaluation.
    """
    if U < 0 or V < 0:
        raise ValueError("U and V must be non-negative")
    if samples < 0:
        raise ValueError("samples must be non-negative")
    caps = np.array([U, U, U, U, V, V, V, V])
    vertices = np.array(list(itertools.product((0.0, 1.0), repeat=8))) * caps
    vz = _z_array(vertices, U, V)
    i = int(np.argmin(vz))
    min_vertex = float(vz[i])
    argmin = tuple(float(v) for v in vertices[i])
    min_sampled = None
    if samples:
        rng = np.random.default_rng(seed)
        pts = rng.random((samples, 8)) * caps
        min_sampled = float(_z_array(pts, U, V).min())
    tol = 1e-12 * max(1.0, U * V)
    worst = min_vertex if min_sampled is None else min(min_vertex, min_sampled)
    if worst < -tol:
        raise EvaluationError(f"theorem check failed: min Z = {worst!r}")
    return TheoremReport(min_vertex, argmin, min_sampled)


# ---------------------------------------------------------------------------
# Table-based functionals.

PAIR_AB: SettingLabel = ("a", "b")
PAIR_BPA: SettingLabel = ("b_prime", "a")
PAIR_BAP: SettingLabel = ("b", "a_prime")
PAIR_APBP: SettingLabel = ("a_prime", "b_prime")
PAIR_APR: SettingLabel = ("a_prime", "r")
PAIR_RBP: SettingLabel = ("r", "b_prime")
PAIR_RR: SettingLabel = ("r", "r")


def _singles_sum(d: JointDistribution) -> float:
    """p+(first) + p-(first) + p+(second) + p-(second) from the marginals."""
    return (d.first_marginal(P) + d.first_marginal(M)
            + d.second_marginal(P) + d.second_marginal(M))


def eval_ineq19(t: SettingsTable) -> InequalityReport:
    """Expectation form of the main inequality; local bound -1."""
    value = (
        expectation(t.get(PAIR_AB))
        + expectation(t.get(PAIR_BPA))
        + expectation(t.get(PAIR_BAP))
        - 2.0 * t.get(PAIR_APBP).prob(P, P)
        - 2.0 * t.get(PAIR_APBP).prob(M, M)
        + _singles_sum(t.get(PAIR_APBP))
    )
    return make_report("INEQ19", value, -1.0, GE)


def eval_ineq17(t: SettingsTable) -> InequalityReport:
    """Raw-probability form; algebraically identical to the expectation form."""
    value = 0.0
    for label in (PAIR_AB, PAIR_BPA, PAIR_BAP):
        d = t.get(label)
        value += d.prob(P, P) + d.prob(M, M) - d.prob(P, M) - d.prob(M, P)
    d = t.get(PAIR_APBP)
    value += -2.0 * d.prob(P, P) - 2.0 * d.prob(M, M) + _singles_sum(d)
    return make_report("INEQ17", value, -1.0, GE)


def eval_chsh(t: SettingsTable) -> InequalityReport:
    value = (
        expectation(t.get(PAIR_AB))
        + expectation(t.get(PAIR_BPA))
        + expectation(t.get(PAIR_BAP))
        - expectation(t.get(PAIR_APBP))
    )
    return make_report("CHSH27", value, -2.0, GE)


def eval_bell65(t: SettingsTable) -> InequalityReport:
    value = (
        expectation(t.get(PAIR_AB))
        + expectation(t.get(PAIR_BPA))
        + expectation(t.get(PAIR_BAP))
    )
    return make_report("BELL65_28", value, -1.0, GE)


def eval_strong(t: SettingsTable, form: int = 41) -> InequalityReport:
    """Ratio inequality; the reference-setting coincidence rate divides out.

    Form 41 is the general-angle version.  Form 46 is its reduction under
    the symmetry assumption with a' and b' along r, needing only the
    reference (r, r) setting besides the three expectation settings.
    """
    e_sum = (
        expectation(t.get(PAIR_AB))
        + expectation(t.get(PAIR_BPA))
        + expectation(t.get(PAIR_BAP))
    )
    rr = t.get(PAIR_RR)
    denom = rr.coincidence_sum()
    if denom <= 0.0:
        raise EvaluationError("no r,r coincidences")
    if form == 41:
        numer = (
            e_sum
            - 2.0 * t.get(PAIR_APBP).prob(P, P)
            - 2.0 * t.get(PAIR_APBP).prob(M, M)
            + t.get(PAIR_APR).coincidence_sum()
            + t.get(PAIR_RBP).coincidence_sum()
        )
        ineq_id = "STRONG41"
    elif form == 46:
        numer = e_sum + 2.0 * rr.prob(P, M) + 2.0 * rr.prob(M, P)
        ineq_id = "STRONG46"
    else:
        raise ValueError(f"form must be 41 or 46, got {form!r}")
    return make_report(ineq_id, numer / denom, -1.0, GE)


# ---------------------------------------------------------------------------
# One-channel comparison inequalities, computed analytically from the
# apparatus parameters (the "polarizer removed" rates have no sentinel
# angle; they come straight from the no-polarizer formulas).

def _single_channel_rate(params: ExperimentParams, delta_deg: float) -> float:
    """p(delta) = coincidence rate with both polarizers in, ++ channel."""
    return params.coincidence_scale() * (
        1.0 + params.f * math.cos(math.radians(2.0 * delta_deg))
    )


def eval_ch(params: ExperimentParams, phi_setting: float = 22.5) -> InequalityReport:
    """One-channel inequality needing five measured rates; bound 0 from above."""
    p1 = _single_channel_rate(params, phi_setting)
    p3 = _single_channel_rate(params, 3.0 * phi_setting)
    p_one = params.pair_rate_one_polarizer()
    p_none = params.pair_rate_no_polarizers()
    value = (3.0 * p1 - p3 - 2.0 * p_one) / p_none
    return make_report("CH47", value, 0.0, LE)


def eval_fc(params: ExperimentParams) -> InequalityReport:
    """One-channel inequality with fixed 22.5/67.5 degree settings; bound 0.25."""
    value = (
        _single_channel_rate(params, 22.5) - _single_channel_rate(params, 67.5)
    ) / params.pair_rate_no_polarizers()
    return make_report("FC48", value, 0.25, LE)


# ---------------------------------------------------------------------------
# Registry of the table-based functionals (used by the LHV bound search,
# the optimizer and the CLI).

@dataclass(frozen=True)
class Functional:
    id: str
    required_pairs: tuple[SettingLabel, ...]
    evaluate: Callable[[SettingsTable], InequalityReport]
    bound: float
    direction: str
    is_ratio: bool = False


FUNCTIONALS: dict[str, Functional] = {
    "INEQ17": Functional(
        "INEQ17", (PAIR_AB, PAIR_BPA, PAIR_BAP, PAIR_APBP), eval_ineq17, -1.0, GE),
    "INEQ19": Functional(
        "INEQ19", (PAIR_AB, PAIR_BPA, PAIR_BAP, PAIR_APBP), eval_ineq19, -1.0, GE),
    "CHSH27": Functional(
        "CHSH27", (PAIR_AB, PAIR_BPA, PAIR_BAP, PAIR_APBP), eval_chsh, -2.0, GE),
    "BELL65_28": Functional(
        "BELL65_28", (PAIR_AB, PAIR_BPA, PAIR_BAP), eval_bell65, -1.0, GE),
    "STRONG41": Functional(
        "STRONG41",
        (PAIR_AB, PAIR_BPA, PAIR_BAP, PAIR_APBP, PAIR_APR, PAIR_RBP, PAIR_RR),
        lambda t: eval_strong(t, 41), -1.0, GE, is_ratio=True),
    "STRONG46": Functional(
        "STRONG46", (PAIR_AB, PAIR_BPA, PAIR_BAP, PAIR_RR),
        lambda t: eval_strong(t, 46), -1.0, GE, is_ratio=True),
}


def normalize_functional_id(name: str) -> str:
    key = name.strip().upper()
    aliases = {
        "INEQ17": "INEQ17", "INEQ19": "INEQ19",
        "CHSH": "CHSH27", "CHSH27": "CHSH27",
        "BELL65": "BELL65_28", "BELL65_28": "BELL65_28",
        "STRONG41": "STRONG41", "STRONG46": "STRONG46",
        "CH47": "CH47", "FC48": "FC48",
    }
    if key not in aliases:
        raise ValueError(f"unknown inequality {name!r}")
    return aliases[key]
