"""Acceptance criteria A1-A10 at their stated tolerances.

Each test prints one PASS/FAIL line with measured and expected values. The
grids run by A1-A4 are cached in a shared context and re-inspected by A9.
Total runtime is a few minutes on one core.
"""

import pytest

from rtslab import validation


@pytest.fixture(scope="module")
def ctx():
    return validation.Context()


def _check(ctx, capsys, key):
    result = validation.FULL_CHECKS[key](ctx)
    with capsys.disabled():
        print(f"\n[{key}] {result.line()}")
    assert result.passed, result.line()


@pytest.mark.slow
@pytest.mark.filterwarnings("ignore:cell mu=.*may need up to:RuntimeWarning")
@pytest.mark.parametrize("key", ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"])
def test_acceptance(ctx, capsys, key):
    _check(ctx, capsys, key)
