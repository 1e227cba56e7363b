"""Acceptance criteria at desk scale; one pass/fail line is printed per criterion."""

import pytest

from inertial_ch.verify import format_result, run_criterion


@pytest.mark.parametrize("k", range(1, 12))
def test_acceptance_criterion(k, capsys):
    res = run_criterion(k)
    with capsys.disabled():
        print("\n" + format_result(res))
    assert res.passed, format_result(res)
