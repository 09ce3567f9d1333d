"""Acceptance gate: the ten go/no-go checks, each with a runtime budget.

Every test calls the corresponding registered criterion at the default
seed, prints one PASS/FAIL line with the wall time, and asserts both the
verdict and the budget.  The line goes out with capture suspended so it
shows up in any pytest run, not just on failure.
"""
import subprocess
import sys
import time
from pathlib import Path

import pytest

from saddletail import verify

BUDGET = {
    1: 1.0,
    2: 10.0,
    3: 1.0,
    4: 30.0,
    5: 10.0,
    6: 60.0,
    7: 300.0,
    8: 120.0,
    9: 1.0,
    10: 10.0,
}

_REPO = Path(__file__).resolve().parent.parent


def _run(cid: int, capfd: pytest.CaptureFixture) -> None:
    t0 = time.perf_counter()
    res = verify.REGISTRY[cid](seed=verify.DEFAULT_SEED)
    dt = time.perf_counter() - t0
    line = f"criterion {cid:02d} {'PASS' if res.passed else 'FAIL'} {res.name} ({dt:.2f}s)"
    with capfd.disabled():
        print(line, flush=True)
    assert res.passed, f"{line}\ndetails: {res.details}"
    assert dt < BUDGET[cid], f"criterion {cid} took {dt:.2f}s, budget {BUDGET[cid]}s"


def test_criterion_01_derived_constant_identities(capfd):
    _run(1, capfd)


def test_criterion_02_first_integral_conservation(capfd):
    _run(2, capfd)


def test_criterion_03_axis_closed_forms(capfd):
    _run(3, capfd)


def test_criterion_04_exit_time_oracle_pair(capfd):
    _run(4, capfd)


def test_criterion_05_inversion_expansion_bands(capfd):
    _run(5, capfd)


def test_criterion_06_tail_expansion_residual(capfd):
    _run(6, capfd)


def test_criterion_07_monte_carlo_tail_exponent(capfd):
    _run(7, capfd)


def test_criterion_08_renewal_shadow_constant(capfd):
    _run(8, capfd)


def test_criterion_09_mixing_correction_structure(capfd):
    _run(9, capfd)


def test_criterion_10_report_determinism(capfd):
    _run(10, capfd)


def test_criterion_10_cli_byte_identical(tmp_path):
    """Same config and seed through the real CLI twice: identical bytes."""
    cfg = _REPO / "configs" / "default.json"
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "saddletail.cli",
                "verify",
                "--criteria",
                "1,3,9",
                "--config",
                str(cfg),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
            cwd=_REPO,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
