import io
import math

import pytest

from config import config
from helpers.errors import CapacityError, DegenerateFit, DomainError, InsufficientData
from helpers.lattice import RegionSpec
from helpers.mc_estimator import (AnnulusEstimate, ArmTrialBatch, annulus_exponent, fit_batches, fit_power_law,
                                  fit_report, monotone_decay_check, pooled_annulus_exponent, quasi_mult_check,
                                  radius_seed, read_csv, region_spec, run_trials, split_by_kind, to_csv_text,
                                  wilson_interval)

RADII = [8, 16, 32, 64, 128, 256]


def batch(successes, samples, r_in=0, r_out=8, event="bb", seed=0):
    return ArmTrialBatch(event, r_in, r_out, samples, successes, seed, (0, samples))


def test_region_spec_defaults():
    assert region_spec("bb", 5) == RegionSpec.ball(5)
    assert region_spec("bww", 3) == RegionSpec.annulus(3, 12)
    assert region_spec("bb", 3, ratio=2) == RegionSpec.annulus(3, 6)
    assert region_spec("one", (0, 7)) == RegionSpec.ball(7)
    assert region_spec("bb", (2, 9)) == RegionSpec.annulus(2, 9)


def test_certain_and_impossible_colourings():
    full = run_trials("one", [2, 3], 50, seed=1, workers=1, p=1.0)
    assert [b.successes for b in full] == [50, 50]
    empty = run_trials("bb", [2, 3], 50, seed=1, workers=1, p=0.0)
    assert [b.successes for b in empty] == [0, 0]


def test_counts_do_not_depend_on_workers():
    kwargs = dict(event="bb", radii=[2, 4], samples_per_radius=600, seed=99, chunk_trials=128)
    serial = run_trials(workers=1, **kwargs)
    parallel = run_trials(workers=2, **kwargs)
    assert [(b.r_out, b.successes, b.seed) for b in serial] == [(b.r_out, b.successes, b.seed) for b in parallel]


def test_chunk_size_does_not_change_counts():
    a = run_trials("bb", [3], 300, seed=5, workers=1, chunk_trials=7)
    b = run_trials("bb", [3], 300, seed=5, workers=1, chunk_trials=1000)
    assert a[0].successes == b[0].successes


def test_seeds_differ_per_radius():
    a, b = run_trials("bb", [2, 3], 10, seed=5, workers=1)
    assert a.seed != b.seed


def test_unit_ball_frequency_matches_exact_value():
    (result,) = run_trials("bb", [1], 20000, seed=7, workers=1)
    exact = 57 / 64
    sigma = math.sqrt(exact * (1 - exact) / result.samples)
    assert abs(result.p_hat - exact) < 4 * sigma


def test_run_trials_validation(monkeypatch):
    with pytest.raises(DomainError):
        run_trials("bb", [4], 0, workers=1)
    with pytest.raises(DomainError):
        run_trials("bb", [8, 4], 10, workers=1)
    with pytest.raises(DomainError):
        run_trials("bb", [4], 10, workers=1, p=1.5)
    with pytest.raises(DomainError):
        run_trials("bww", [(0, 4)], 10, workers=1)
    monkeypatch.setattr(config, "MAX_RADIUS", 16)
    with pytest.raises(CapacityError):
        run_trials("bb", [8, 32], 10, workers=1)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.4038, abs=1e-3)
    assert hi == pytest.approx(0.5962, abs=1e-3)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    assert 0.0 < wilson_interval(10, 10)[0] < 1.0
    with pytest.raises(DomainError):
        wilson_interval(3, 0)
    with pytest.raises(DomainError):
        wilson_interval(11, 10)


def test_batch_properties_and_merge():
    a = ArmTrialBatch("bb", 0, 8, 100, 40, 3, (0, 100))
    b = ArmTrialBatch("bb", 0, 8, 300, 80, 3, (100, 400))
    merged = a.merge(b)
    assert (merged.samples, merged.successes, merged.trial_range) == (400, 120, (0, 400))
    assert merged.p_hat == pytest.approx(0.3)
    assert merged.stderr == pytest.approx(math.sqrt(0.3 * 0.7 / 400))
    with pytest.raises(DomainError):
        a.merge(ArmTrialBatch("bb", 0, 8, 100, 40, 4, (0, 100)))
    with pytest.raises(DomainError):
        batch(11, 10)


def test_exact_power_law_is_recovered():
    points = [(n, 3.0 * n ** (-5 / 48), 0.01 * 3.0 * n ** (-5 / 48)) for n in RADII]
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(-5 / 48, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)
    assert fit.exponent == pytest.approx(5 / 48, abs=1e-10)
    assert fit.points_used == len(RADII)


def test_unweighted_fallback():
    points = [(n, n ** -0.4, 0.0) for n in RADII]
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(-0.4, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-9)


def test_jittered_fits_cover_true_slope(rng):
    sigma = 0.05
    covered = 0
    runs = 200
    for _ in range(runs):
        points = []
        for n in RADII:
            p = 0.8 * n ** -0.4 * math.exp(rng.normal(0.0, sigma))
            points.append((n, p, sigma * p))
        fit = fit_power_law(points)
        covered += abs(fit.slope + 0.4) <= 3 * fit.slope_stderr
    assert covered / runs >= 0.97


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_power_law([(8, 0.5, 0.01), (16, 0.4, 0.01)])
    with pytest.raises(DomainError):
        fit_power_law([(8, 0.5, 0.01), (16, 0.0, 0.01), (32, 0.3, 0.01)])
    with pytest.raises(DegenerateFit):
        fit_power_law([(8, 0.5, 0.01), (8, 0.4, 0.01), (8, 0.3, 0.01)])


def test_fit_batches_uses_outer_radius():
    batches = [batch(round(10000 * n ** -0.5), 10000, r_out=n) for n in (4, 16, 64)]
    assert fit_batches(batches).slope == pytest.approx(-0.5, abs=0.01)


def test_quasi_multiplicativity_holds():
    report = quasi_mult_check(batch(5000, 10000, 2, 4), batch(4000, 10000, 4, 8), batch(1800, 10000, 2, 8))
    assert report.radii == (2, 4, 8)
    assert report.c1_hat == pytest.approx(0.9)
    assert report.upper_holds


def test_quasi_multiplicativity_violation_is_reported():
    report = quasi_mult_check(batch(5000, 10000, 2, 4), batch(4000, 10000, 4, 8), batch(3000, 10000, 2, 8))
    assert not report.upper_holds
    assert report.c1_hat == pytest.approx(1.5)


def test_quasi_multiplicativity_certain_events():
    report = quasi_mult_check(batch(100, 100, 2, 4), batch(100, 100, 4, 8), batch(100, 100, 2, 8))
    assert report.c1_hat == 1.0
    assert report.slack == 0.0
    assert report.upper_holds


def test_quasi_multiplicativity_errors():
    with pytest.raises(InsufficientData):
        quasi_mult_check(batch(0, 100, 2, 4), batch(50, 100, 4, 8), batch(20, 100, 2, 8))
    with pytest.raises(DomainError):
        quasi_mult_check(batch(50, 100, 2, 3), batch(50, 100, 3, 8), batch(20, 100, 2, 8))
    with pytest.raises(DomainError):
        quasi_mult_check(batch(50, 100, 2, 4), batch(50, 100, 4, 8), batch(20, 100, 2, 9))


def test_annulus_exponent():
    estimate = annulus_exponent(batch(2500, 10000, 4, 16))
    assert estimate.xi == pytest.approx(1.0)
    assert estimate.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 10000) / (0.25 * math.log(4)))
    with pytest.raises(DomainError):
        annulus_exponent(batch(10, 100, 0, 16))
    with pytest.raises(InsufficientData):
        annulus_exponent(batch(0, 100, 4, 16))


def test_pooled_annulus_exponent():
    pooled = pooled_annulus_exponent([AnnulusEstimate(4, 16, 0.3, 0.1), AnnulusEstimate(8, 32, 0.5, 0.1)])
    assert pooled.xi == pytest.approx(0.4)
    assert pooled.stderr == pytest.approx(0.1 / math.sqrt(2))
    assert (pooled.r_in, pooled.r_out) == (4, 32)
    assert pooled_annulus_exponent([AnnulusEstimate(4, 16, 0.0, 0.0)]) is None


def test_monotone_decay_check():
    falling = [batch(9000, 10000, r_out=8), batch(8000, 10000, r_out=16), batch(7000, 10000, r_out=32)]
    assert monotone_decay_check(falling) == []
    rising = [batch(5000, 10000, r_out=8), batch(6000, 10000, r_out=16), batch(6010, 10000, r_out=32)]
    assert monotone_decay_check(rising) == [(8, 16)]


def test_fit_report_contents():
    balls = [batch(round(10000 * n ** -0.3), 10000, r_out=n) for n in (8, 16, 32)]
    annuli = [batch(2500, 10000, n, 4 * n) for n in (2, 4)]
    report = fit_report(balls, annuli, reference=0.3)
    assert report["event"] == "bb"
    assert len(report["batches"]) == 5
    assert report["fit"]["exponent"] == pytest.approx(0.3, abs=0.01)
    assert [a["xi"] for a in report["annulus"]] == pytest.approx([1.0, 1.0])
    assert report["annulus_pooled"]["xi"] == pytest.approx(1.0)
    assert report["monotone_violations"] == []
    assert report["reference_exponent"] == 0.3
    assert "fit" not in fit_report(balls[:2])


def test_csv_keeps_counts_and_provenance():
    batches = [batch(40, 100, 0, 8, seed=17), batch(7, 100, 4, 16, seed=17)]
    text = to_csv_text(batches, {"tool": "backbone-toolkit", "seed": 17})
    assert text.startswith("# tool: backbone-toolkit\n# seed: 17\nevent,r_in,r_out")
    restored, provenance = read_csv(io.StringIO(text))
    assert provenance == {"tool": "backbone-toolkit", "seed": "17"}
    assert [(b.event, b.r_in, b.r_out, b.samples, b.successes, b.seed) for b in restored] == \
        [(b.event, b.r_in, b.r_out, b.samples, b.successes, radius_seed(17, b.spec)) for b in batches]
    balls, annuli = split_by_kind(restored)
    assert [b.r_out for b in balls] == [8]
    assert [b.r_in for b in annuli] == [4]


def test_csv_batches_carry_the_simulation_seed():
    simulated = run_trials("one", [2, 3], 40, seed=23, workers=1)
    restored, _ = read_csv(io.StringIO(to_csv_text(simulated, {"seed": 23})))
    assert [b.seed for b in restored] == [b.seed for b in simulated]
    unseeded, _ = read_csv(io.StringIO(to_csv_text(simulated)))
    assert {b.seed for b in unseeded} == {-1}


def test_csv_missing_columns():
    with pytest.raises(DomainError):
        read_csv(io.StringIO("event,r_in\nbb,0\n"))


def test_simulated_batches_are_reproducible():
    a = run_trials("one", [2, 4, 8], 200, seed=3, workers=1)
    b = run_trials("one", [2, 4, 8], 200, seed=3, workers=1)
    assert to_csv_text(a) == to_csv_text(b)


# Desk-scale runs of the simulation pipeline; the radii and sample counts are
# below the full defaults, so the exponent bands are wider than theirs.


@pytest.mark.slow
def test_backbone_slope_from_simulation():
    batches = run_trials("bb", [8, 16, 32, 64], 10000, seed=2024)
    fit = fit_batches(batches)
    assert 0.27 <= fit.exponent <= 0.45
    assert monotone_decay_check(batches) == []


@pytest.mark.slow
def test_one_arm_slope_from_simulation():
    fit = fit_batches(run_trials("one", [8, 16, 32, 64], 10000, seed=2025))
    assert fit.exponent == pytest.approx(5.0 / 48.0, abs=0.05)


@pytest.mark.slow
def test_bww_slope_from_simulation():
    # a fixed inner radius cancels the annulus constant out of the slope
    fit = fit_batches(run_trials("bww", [(8, 32), (8, 64), (8, 128)], 4000, seed=2026))
    assert fit.exponent == pytest.approx(2.0 / 3.0, abs=0.12)


@pytest.mark.slow
@pytest.mark.parametrize("r1,r2,r3", [(8, 16, 64), (8, 32, 128)])
def test_quasi_multiplicativity_from_simulation(r1, r2, r3):
    (b12,) = run_trials("bb", [(r1, r2)], 4000, seed=11)
    (b23,) = run_trials("bb", [(r2, r3)], 4000, seed=11)
    (b13,) = run_trials("bb", [(r1, r3)], 4000, seed=11)
    report = quasi_mult_check(b12, b23, b13)
    assert report.radii == (r1, r2, r3)
    assert report.upper_holds
    assert report.c1_hat > 0.1
