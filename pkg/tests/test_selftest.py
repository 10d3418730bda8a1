import math

from experiments.selftest import CHECKS, CheckResult, run_selftest


def test_all_checks_pass():
    results = run_selftest()
    assert [result.name for result in results] == [name for name, _, _ in CHECKS]
    failed = [result for result in results if not result.passed]
    assert not failed, failed


def test_nan_fails():
    assert not CheckResult("broken", math.nan, 1.0).passed
    assert CheckResult("exact", 0.0, 0.0).passed
