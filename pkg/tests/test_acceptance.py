"""The eleven headline criteria, one test and one pass/fail line each.

Run with ``pytest -v -s tests/test_acceptance.py`` to see the per-criterion
lines; the same checks back ``python3 -m kamforge verify --suite acceptance``.
"""

import pytest

from kamforge.verify import ACCEPTANCE, run_check


@pytest.mark.parametrize("name", [name for name, _ in ACCEPTANCE])
def test_acceptance(name):
    result = run_check(name)
    mark = "PASS" if result.passed else "FAIL"
    print(f"[{mark}] {result.name}: {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"
