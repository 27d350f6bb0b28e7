"""The invariant suite runs green for every model (reduced cube size)."""

import pytest

from pathlin.suite import run_model_suite

from conftest import MODEL_NAMES


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_model_suite_all_pass(name):
    report = run_model_suite(name, seed=3, cube_n=60)
    failing = [c for c in report["checks"] if not c["passed"]]
    assert not failing, failing
    assert report["all_pass"]
