"""Acceptance criteria, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line with the measured quantity and
its tolerance; the lines are repeated in a summary section at the end of the
pytest run. Run this file directly to print only the criterion lines.
"""

import sys

import pytest

from cmsthermo.checks import CHECKS, run_check

ORDERED = sorted(CHECKS, key=lambda c: c.cid)


@pytest.mark.slow
@pytest.mark.parametrize("check", ORDERED, ids=[f"{c.cid:02d}-{c.name.replace(' ', '-')}" for c in ORDERED])
def test_criterion(check, acceptance_log):
    result = run_check(check)
    line = result.line()
    print(line)
    acceptance_log.append(line)
    assert result.passed, line


def test_every_criterion_is_registered():
    assert [c.cid for c in ORDERED] == list(range(1, 13))


if __name__ == "__main__":
    failed = 0
    for c in ORDERED:
        r = run_check(c)
        print(r.line(), flush=True)
        failed += not r.passed
    sys.exit(1 if failed else 0)
