import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from bellbench import (
    FUNCTIONALS,
    AngleConfig,
    EvaluationError,
    ExperimentParams,
    JointDistribution,
    SettingsTable,
    TheoremPoint,
    eval_bell65,
    eval_ch,
    eval_chsh,
    eval_fc,
    eval_ineq17,
    eval_ineq19,
    eval_strong,
    make_report,
    normalize_functional_id,
    settings_table,
    verify_theorem,
    z_value,
)
from conftest import ALL_PAIRS, OPTIMAL_ANGLES

SQRT2 = math.sqrt(2.0)


# --- report plumbing -------------------------------------------------------

class TestMakeReport:
    def test_ge_margin_sign(self):
        r = make_report("INEQ19", -1.5, -1.0, ">=")
        assert r.violated and r.margin == pytest.approx(0.5)

    def test_le_margin_sign(self):
        r = make_report("FC48", 0.35, 0.25, "<=")
        assert r.violated and r.margin == pytest.approx(0.10)

    def test_boundary_is_not_violation(self):
        assert not make_report("CHSH27", -2.0, -2.0, ">=").violated
        assert not make_report("FC48", 0.25, 0.25, "<=").violated

    @given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from([">=", "<="]))
    def test_violated_iff_past_bound(self, value, bound, direction):
        r = make_report("X", value, bound, direction)
        expected = value < bound if direction == ">=" else value > bound
        assert r.violated == expected
        assert r.violated == (r.margin > 0)

    def test_as_dict_includes_stderr_only_when_present(self):
        assert "stderr" not in make_report("X", 0, 1, ">=").as_dict()
        assert make_report("X", 0, 1, ">=", stderr=0.1).as_dict()["stderr"] == 0.1


# --- the algebraic theorem -------------------------------------------------

unit = st.floats(min_value=0.0, max_value=1.0)


class TestTheorem:
    def test_point_validation(self):
        with pytest.raises(ValueError):
            TheoremPoint(1.5, 0, 0, 0, 0, 0, 0, 0, U=1.0, V=1.0)

    @given(unit, unit, unit, unit, unit, unit, unit, unit)
    @hyp_settings(max_examples=300)
    def test_z_nonnegative_on_unit_box(self, a, b, c, d, e, f, g, h):
        p = TheoremPoint(a, b, c, d, e, f, g, h, U=1.0, V=1.0)
        assert z_value(p) >= -1e-12

    @given(unit, unit, unit, unit, unit, unit, unit, unit,
           st.floats(min_value=0.1, max_value=10.0),
           st.floats(min_value=0.1, max_value=10.0))
    @hyp_settings(max_examples=200)
    def test_z_nonnegative_on_scaled_box(self, a, b, c, d, e, f, g, h, U, V):
        p = TheoremPoint(a * U, b * U, c * U, d * U,
                         e * V, f * V, g * V, h * V, U=U, V=V)
        assert z_value(p) >= -1e-9 * max(1.0, U * V)

    def test_vertex_minimum_is_exactly_zero(self):
        report = verify_theorem(1.0, 1.0, samples=10_000, seed=1)
        assert report.min_vertex_value == 0.0
        assert report.min_sampled_value >= 0.0

    def test_scaled_boxes(self):
        for U, V in ((0.5, 2.0), (3.0, 0.25), (0.0, 1.0)):
            report = verify_theorem(U, V, samples=1000, seed=2)
            assert report.min_vertex_value >= -1e-12 * max(1.0, U * V)

    def test_rejects_negative_caps(self):
        with pytest.raises(ValueError):
            verify_theorem(-1.0, 1.0)


# --- functionals on settings tables ---------------------------------------

def uniform_table():
    u = JointDistribution(tuple((1 / 9.0,) * 3 for _ in range(3)))
    return SettingsTable({label: u for label in ALL_PAIRS})


def closure_tables(rng, n):
    """Random tables with every photon detected (empty NONE channel)."""
    out = []
    for _ in range(n):
        entries = {}
        for label in ALL_PAIRS:
            block = rng.random(4)
            block /= block.sum()
            pp, pm, mp, mm = block
            entries[label] = JointDistribution((
                (pp, pm, 0.0), (mp, mm, 0.0), (0.0, 0.0, 0.0)))
        out.append(SettingsTable(entries))
    return out


class TestFunctionalValues:
    def test_maximal_ideal_violation(self, optimal_ideal_table):
        assert eval_ineq19(optimal_ideal_table).value == pytest.approx(-1.5, abs=1e-12)
        assert eval_ineq17(optimal_ideal_table).value == pytest.approx(-1.5, abs=1e-12)
        assert eval_chsh(optimal_ideal_table).value == pytest.approx(-2.5, abs=1e-12)
        assert eval_bell65(optimal_ideal_table).value == pytest.approx(-1.5, abs=1e-12)
        assert eval_strong(optimal_ideal_table, 41).value == pytest.approx(-1.5, abs=1e-12)
        assert eval_strong(optimal_ideal_table, 46).value == pytest.approx(-1.5, abs=1e-12)

    def test_chsh_optimum_angles(self):
        # differences (112.5, 112.5, 112.5, 22.5): three terms at cos 225
        # degrees and one at cos 45 degrees.
        cfg = AngleConfig(67.5, 135.0, 22.5, 0.0, 0.0)
        t = settings_table(cfg, ALL_PAIRS)
        assert eval_chsh(t).value == pytest.approx(-2.0 * SQRT2, abs=1e-12)

    def test_uniform_table_value(self):
        # Three correlation terms vanish; the remaining combination is
        # -2/9 - 2/9 + 4/3 = 8/9.
        r = eval_ineq17(uniform_table())
        assert r.value == pytest.approx(8.0 / 9.0, abs=1e-12)
        assert not r.violated

    def test_forms_17_and_19_agree_everywhere(self):
        rng = np.random.default_rng(11)
        for t in closure_tables(rng, 200):
            assert eval_ineq17(t).value == pytest.approx(
                eval_ineq19(t).value, abs=1e-12)

    def test_ineq19_is_chsh_plus_one_under_closure(self):
        rng = np.random.default_rng(12)
        for t in closure_tables(rng, 200):
            assert eval_ineq19(t).value == pytest.approx(
                eval_chsh(t).value + 1.0, abs=1e-12)

    def test_strong_ratio_needs_reference_coincidences(self):
        entries = dict(uniform_table().entries)
        none_only = JointDistribution((
            (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 1.0)))
        entries[("r", "r")] = none_only
        with pytest.raises(EvaluationError):
            eval_strong(SettingsTable(entries), 46)

    def test_strong_form_argument(self):
        with pytest.raises(ValueError):
            eval_strong(uniform_table(), 40)

    def test_strong_ratio_invariant_under_common_scaling(self):
        # Shrinking every coincidence rate by the same factor (more NONE)
        # leaves both ratio forms unchanged: the emission rate divides out.
        rng = np.random.default_rng(13)
        for t in closure_tables(rng, 20):
            entries = {}
            for label, d in t.entries.items():
                cell = [[0.25 * d.p[i][j] for j in range(2)] + [0.0] for i in range(2)]
                cell.append([0.0, 0.0, 0.0])
                cell[2][2] = 1.0 - sum(v for row in cell for v in row)
                entries[label] = JointDistribution(tuple(tuple(row) for row in cell))
            scaled = SettingsTable(entries)
            for form in (41, 46):
                assert eval_strong(scaled, form).value == pytest.approx(
                    eval_strong(t, form).value, abs=1e-10)


class TestStrongRealApparatus:
    def test_value_is_one_minus_2p5_f(self):
        p = ExperimentParams(eta=0.9, phi_deg=30.0)
        t = settings_table(OPTIMAL_ANGLES, ALL_PAIRS, p)
        expected = 1.0 - 2.5 * p.f
        assert eval_strong(t, 46).value == pytest.approx(expected, abs=1e-12)
        assert eval_strong(t, 41).value == pytest.approx(expected, abs=1e-11)

    def test_perfect_contrast_recovers_ideal_violation(self):
        p = ExperimentParams(eta=0.9, phi_deg=30.0, f_override=1.0)
        t = settings_table(OPTIMAL_ANGLES, ALL_PAIRS, p)
        assert eval_strong(t, 46).value == pytest.approx(-1.5, abs=1e-12)


class TestOneChannelComparisons:
    def test_ch_at_perfect_contrast(self):
        p = ExperimentParams(eta=0.9, phi_deg=30.0, f_override=1.0)
        r = eval_ch(p)
        assert r.value == pytest.approx((SQRT2 - 1.0) / 2.0, abs=1e-12)
        assert r.violated

    def test_fc_value(self):
        p = ExperimentParams(eta=0.9, phi_deg=30.0)
        assert eval_fc(p).value == pytest.approx(p.f * SQRT2 / 4.0, abs=1e-12)

    def test_ch_independent_of_eta(self):
        # Every rate carries the same eta^2 factor, so the ratio cannot
        # depend on detector efficiency.
        a = eval_ch(ExperimentParams(eta=0.9, phi_deg=30.0)).value
        b = eval_ch(ExperimentParams(eta=0.2, phi_deg=30.0)).value
        assert a == pytest.approx(b, rel=1e-12)


class TestRegistry:
    def test_ids_match_keys(self):
        for fid, f in FUNCTIONALS.items():
            assert f.id == fid

    def test_evaluate_roundtrip(self, optimal_ideal_table):
        for f in FUNCTIONALS.values():
            r = f.evaluate(optimal_ideal_table)
            assert r.id == f.id
            assert r.bound == f.bound
            assert r.direction == f.direction

    @pytest.mark.parametrize("alias,expected", [
        ("chsh", "CHSH27"), ("CHSH27", "CHSH27"), ("bell65", "BELL65_28"),
        ("ineq19", "INEQ19"), ("strong46", "STRONG46"), ("ch47", "CH47"),
    ])
    def test_aliases(self, alias, expected):
        assert normalize_functional_id(alias) == expected

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            normalize_functional_id("nope")
