import numpy as np
import pytest

from lambda_lab import checks
from lambda_lab.checks import _guarded, run_suite, summary_table, thread_count


def _records(results):
    return [r.record() for r in results]


def test_properties_suite_is_deterministic(monkeypatch):
    monkeypatch.setenv("LAMBDA_LAB_THREADS", "4")
    a = run_suite("properties", seed=3)
    monkeypatch.setenv("LAMBDA_LAB_THREADS", "1")
    b = run_suite("properties", seed=3)
    assert _records(a) == _records(b)
    assert all(r.passed for r in a)


def test_unknown_suite():
    with pytest.raises(ValueError, match="unknown suite"):
        run_suite("nonsense")


def test_guarded_turns_exceptions_into_failures():
    def boom(rng):
        raise RuntimeError("exploded")

    (res,) = _guarded(boom, 0)
    assert not res.passed and np.isnan(res.measured)
    assert "RuntimeError: exploded" in res.detail


def test_guarded_seeds_the_generator():
    draw = lambda rng: [checks._result("draw", None, rng.uniform(), "-", True)]
    assert _guarded(draw, 5)[0].measured == _guarded(draw, 5)[0].measured
    assert _guarded(draw, 5)[0].measured != _guarded(draw, 6)[0].measured


def test_thread_count(monkeypatch):
    monkeypatch.setenv("LAMBDA_LAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("LAMBDA_LAB_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.delenv("LAMBDA_LAB_THREADS")
    assert thread_count() >= 1


@pytest.mark.parametrize("family", [checks.random_mobius, checks.random_laurent_perturbation])
def test_random_families_are_reproducible(family):
    a = family(np.random.default_rng(9), 0.5)
    b = family(np.random.default_rng(9), 0.5)
    assert a == b


def test_summary_table_lists_every_check():
    res = [checks._result("one", 1, 0.5, "< 1", True), checks._result("two", None, 2.0, "< 1", False)]
    lines = summary_table(res).splitlines()
    assert len(lines) == 3
    assert lines[1].rstrip().endswith("PASS") and lines[2].rstrip().endswith("FAIL")
