import math

import pytest

from config import config
from helpers import suites
from helpers.errors import DomainError, NonConvergence
from helpers.suites import CheckJob, CheckRow, SuiteReport, _evaluate, run_suite, suite_jobs


def test_row_pass_and_serialisation():
    row = CheckRow("identity", {"gamma": 1.5}, 1.0, 1.0 + 1e-12, 1e-12, 1e-10)
    assert row.passed
    assert row.to_dict()["pass"] is True
    assert "PASS" in str(row)
    assert not CheckRow("identity", {}, math.nan, 1.0, math.nan, 1.0).passed
    assert not CheckRow("identity", {}, 1.0, 2.0, 1.0, 0.5).passed


def test_report_collects_failures():
    good = CheckRow("a", {}, 1.0, 1.0, 0.0, 0.0)
    bad = CheckRow("b", {}, 1.0, 2.0, 1.0, 0.1)
    report = SuiteReport("numtheory", [good, bad])
    assert not report.passed
    assert report.failures == [bad]
    assert report.to_dict()["failures"] == 1
    assert SuiteReport("numtheory", [good]).passed


def test_relative_error():
    row = _evaluate(CheckJob("scaled", lambda: (101.0, 100.0), {}, 0.02, relative=True))
    assert row.error == pytest.approx(0.01)
    assert row.passed


def test_non_converging_check_is_retried_with_larger_budget():
    budgets = []

    def flaky(max_evals):
        budgets.append(max_evals)
        if len(budgets) == 1:
            raise NonConvergence("not yet", evaluations=max_evals)
        return 2.0, 2.0

    row = _evaluate(CheckJob("flaky", flaky, {}, 1e-12, budgeted=True))
    assert row.passed
    assert budgets == [config.MAX_EVALS, 2 * config.MAX_EVALS]


def test_retries_stop_after_configured_attempts():
    calls = []

    def never(max_evals):
        calls.append(max_evals)
        raise NonConvergence("never", evaluations=max_evals)

    with pytest.raises(NonConvergence):
        _evaluate(CheckJob("never", never, {}, 1e-12, budgeted=True))
    assert len(calls) == config.RETRY_ATTEMPTS


def test_suite_definitions():
    assert len(suite_jobs("constants")) == 110
    assert {job.name for job in suite_jobs("numtheory")} == {
        "cyclotomic_products", "totient_sums", "two_cos_roots", "classification_degrees", "scan_sqrt2",
        "scan_backbone_none"}
    assert len([j for j in suite_jobs("identities") if j.name == "moment_at_exponent"]) == 50
    assert all(job.budgeted for job in suite_jobs("integrals"))
    assert {job.tol for job in suite_jobs("constants", tol=1e-6)} == {1e-6}
    with pytest.raises(DomainError):
        suite_jobs("everything")
    with pytest.raises(DomainError):
        suite_jobs("constants", tol=0.0)


@pytest.mark.parametrize("job", [
    CheckJob("totient_sums", suites.totient_sums, {"max_n": 200}, 0.0),
    CheckJob("two_cos_roots", suites.two_cos_roots, {"max_n": 30}, 0.0),
    CheckJob("classification_degrees", suites.classification_degrees, {"max_n": 60}, 0.0),
    CheckJob("scan_sqrt2", suites.scan_sqrt2, {}, 0.0),
    CheckJob("xi_kappa6", suites.kappa6_value, {}, 1e-10),
    CheckJob("kappa6_reduction", suites.kappa6_reduction, {}, 1e-12),
    CheckJob("moment_at_zero", suites.moment_at_zero, {"kappa": 6.0}, 1e-11),
    CheckJob("moment_at_unit_theta", suites.moment_at_unit_theta, {"kappa": 5.0}, 1e-11),
    CheckJob("moment_even", suites.moment_even, {"kappa": 6.0, "re": 0.3, "im": 0.2}, 1e-10),
    CheckJob("gbar_beta0_unit", suites.gbar_unit, {"gamma": 1.6}, 1e-12),
    CheckJob("c1_dual", suites.c1_dual, {"gamma": 1.7}, 1e-10, relative=True),
    CheckJob("e4_dual", suites.e4_dual, {"gamma": 1.7}, 1e-10, relative=True),
], ids=lambda job: job.name)
def test_single_checks_pass(job):
    row = _evaluate(job)
    assert row.passed, str(row)


def test_run_suite_workers_agree(monkeypatch):
    jobs = [
        CheckJob("totient_sums", suites.totient_sums, {"max_n": 100}, 0.0),
        CheckJob("two_cos_roots", suites.two_cos_roots, {"max_n": 20}, 0.0),
        CheckJob("xi_table", suites.table_value, {"q": 2.0, "expected": 0.2678678166}, 1e-9),
    ]
    monkeypatch.setitem(suites.SUITE_JOBS, "numtheory", lambda tol: jobs)
    serial = run_suite("numtheory")
    parallel = run_suite("numtheory", workers=2)
    assert serial.passed and parallel.passed
    assert [row.name for row in serial.rows] == ["totient_sums", "two_cos_roots", "xi_table"]
    assert [r.to_dict() for r in serial.rows] == [r.to_dict() for r in parallel.rows]


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["numtheory", "constants", "identities"])
def test_full_suite_passes(suite):
    report = run_suite(suite, workers=2)
    assert report.passed, [str(r) for r in report.failures]


@pytest.mark.slow
def test_integral_suite_passes():
    report = run_suite("integrals", workers=2)
    assert report.passed, [str(r) for r in report.failures]
