"""The ten acceptance checks at their stated tolerances.

All checks share one run log so the aggregate checks (energy law, Jacobian
positivity, maximum principle) cover every run. Each check prints a single
PASS/FAIL line; run with ``-s`` to see them live.
"""

import pytest

from lagrangian_ac.acceptance import CHECKS, RunLog, run_checks


@pytest.fixture(scope="module")
def results():
    lines = []
    out = {r.number: r for r in run_checks(log=RunLog(), echo=lines.append)}
    print("\n" + "\n".join(lines))
    return out


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance(results, number, capsys):
    r = results[number]
    with capsys.disabled():
        print(f"\n{r.line()}  ({r.seconds:.1f}s)")
    assert r.passed, r.detail
