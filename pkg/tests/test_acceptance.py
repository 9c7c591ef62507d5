"""Acceptance criteria, one test each, at their stated tolerances and time limits.

Each test prints a single ``[PASS]``/``[FAIL]`` line. A criterion passes only
if its property holds and it finishes inside its time limit.
"""

import pytest

from besicovitch.suite import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_criterion(number, capsys):
    r = run_criterion(number)
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, r.detail
    assert r.in_time, f"took {r.elapsed:.1f}s, limit {r.limit:.0f}s"
