import math

import pytest

from bellbench import (
    CountTable,
    EvaluationError,
    RunSpec,
    estimate_strong46,
    ineq19_with_error,
    run_reports,
    settings_table,
    simulate,
)
from conftest import ALL_PAIRS, OPTIMAL_ANGLES


def make_spec(n=20_000, seed=42):
    return RunSpec(pairs_per_setting=n, seed=seed,
                   settings=settings_table(OPTIMAL_ANGLES, ALL_PAIRS))


class TestRunSpec:
    def test_validation(self):
        t = settings_table(OPTIMAL_ANGLES, ALL_PAIRS)
        with pytest.raises(ValueError):
            RunSpec(pairs_per_setting=0, seed=1, settings=t)
        with pytest.raises(ValueError):
            RunSpec(pairs_per_setting=10, seed=2 ** 64, settings=t)


class TestSimulate:
    def test_counts_conserve_pairs(self):
        result = simulate(make_spec())
        for label in ALL_PAIRS:
            c = result.counts[label]
            assert sum(c.flat()) == c.total_pairs == 20_000

    def test_deterministic_in_seed(self):
        a = simulate(make_spec(seed=9))
        b = simulate(make_spec(seed=9))
        c = simulate(make_spec(seed=10))
        assert all(a.counts[l].n == b.counts[l].n for l in ALL_PAIRS)
        assert any(a.counts[l].n != c.counts[l].n for l in ALL_PAIRS)

    @pytest.mark.parametrize("workers", [2, 4, 7])
    def test_worker_count_is_invisible(self, workers):
        # Chunks address the random stream by absolute pair index, so the
        # thread layout cannot change a single draw.
        n = (1 << 18) * 2 + 12345  # force several unequal chunks
        spec = make_spec(n=n)
        serial = simulate(spec, workers=1)
        threaded = simulate(spec, workers=workers)
        assert all(serial.counts[l].n == threaded.counts[l].n for l in ALL_PAIRS)

    def test_empirical_tracks_analytic(self):
        spec = make_spec(n=200_000)
        result = simulate(spec)
        for label in ALL_PAIRS:
            analytic = spec.settings.get(label).flat()
            measured = result.empirical[label].flat()
            for p, q, se in zip(analytic, measured, result.stderr[label]):
                assert abs(p - q) <= max(6.0 * se, 1e-3)


class TestErrorPropagation:
    def test_ineq19_error_scales_like_inverse_sqrt_n(self):
        small = ineq19_with_error(simulate(make_spec(n=10_000)).counts)
        large = ineq19_with_error(simulate(make_spec(n=1_000_000)).counts)
        assert small.stderr == pytest.approx(10.0 * large.stderr, rel=0.2)

    def test_ineq19_estimate_is_consistent(self):
        report = ineq19_with_error(simulate(make_spec(n=500_000)).counts)
        assert abs(report.value - (-1.5)) <= 5.0 * report.stderr

    def test_strong46_scale_invariance(self):
        counts = simulate(make_spec(n=10_000)).counts
        doubled = {
            label: CountTable(tuple(tuple(2 * v for v in row) for row in c.n),
                              2 * c.total_pairs)
            for label, c in counts.items()
        }
        assert estimate_strong46(doubled).value == estimate_strong46(counts).value

    def test_strong46_consistent_with_analytic(self):
        report = estimate_strong46(simulate(make_spec(n=500_000)).counts)
        assert abs(report.value - (-1.5)) <= 5.0 * report.stderr

    def test_strong46_needs_reference_counts(self):
        empty = CountTable(((0, 0, 0), (0, 0, 0), (0, 0, 10)), 10)
        counts = {label: empty for label in ALL_PAIRS}
        with pytest.raises(EvaluationError):
            estimate_strong46(counts)


class TestRunReports:
    def test_all_functionals_reported(self):
        reports = run_reports(simulate(make_spec()).counts)
        ids = {r.id for r in reports}
        assert ids == {"INEQ17", "INEQ19", "CHSH27", "BELL65_28",
                       "STRONG41", "STRONG46"}

    def test_error_bars_where_implemented(self):
        reports = {r.id: r for r in run_reports(simulate(make_spec()).counts)}
        assert reports["INEQ19"].stderr is not None
        assert reports["STRONG46"].stderr is not None
        assert math.isfinite(reports["INEQ19"].stderr)

    def test_partial_settings(self):
        counts = simulate(make_spec()).counts
        only_four = {l: counts[l] for l in
                     (("a", "b"), ("b_prime", "a"), ("b", "a_prime"),
                      ("a_prime", "b_prime"))}
        ids = {r.id for r in run_reports(only_four)}
        assert "STRONG41" not in ids
        assert "INEQ19" in ids
        # the symmetric ratio falls back to the (a', b') block when no
        # dedicated reference setting was recorded
        assert "STRONG46" in ids
