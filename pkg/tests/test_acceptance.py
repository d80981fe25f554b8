"""Acceptance gate: runs every shipped criterion at its stated tolerance.

One test per criterion; each prints its PASS/FAIL line so a plain
``pytest -s tests/test_acceptance.py`` doubles as the checklist.  The
same functions back the ``structopt selftest`` CLI command.
"""

import pytest

from structopt import acceptance


def _run(fn):
    res = fn()
    print(f"\n[{'PASS' if res.passed else 'FAIL'}] {res.name}: {res.detail} "
          f"({res.seconds:.1f}s)")
    assert res.passed, f"{res.name}: {res.detail}"
    return res


def test_gradient_rules_vs_finite_differences():
    res = _run(acceptance.criterion_gradient_rules)
    assert res.seconds < 30.0


def test_musimo_capacity_and_mse_vs_oracle():
    res = _run(acceptance.criterion_musimo_optimality)
    assert res.seconds < 120.0


def test_wmmse_irs_vs_oracle():
    res = _run(acceptance.criterion_wmmse_irs)
    assert res.seconds < 300.0


def test_blockdiag_reductions_and_oracle():
    _run(acceptance.criterion_blockdiag)


def test_prop2_roundtrip():
    _run(acceptance.criterion_prop2_roundtrip)


def test_algorithm1_vs_bcd_equivalence_and_speed():
    _run(acceptance.criterion_ao_vs_bcd)


def test_brute_force_grid_certification():
    _run(acceptance.criterion_grid_certification)


def test_runtime_trend():
    res = _run(acceptance.criterion_runtime_trend)
    assert res.seconds < 600.0


def test_sweep_determinism():
    _run(acceptance.criterion_determinism)
