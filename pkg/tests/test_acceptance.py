"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

The lines are printed even under captured output so that they show up in a
plain ``pytest -v`` log. Runtime limits are part of each criterion.
"""

import subprocess
import sys
import time

import pytest

from motgv import verify

RESULTS = {}


def report(capsys, number, title, passed, metrics, seconds, limit):
    within = seconds < limit
    ok = bool(passed and within)
    shown = ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in metrics.items())
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} [{shown}; {seconds:.1f}s < {limit:g}s]"
    with capsys.disabled():
        print("\n" + line)
    RESULTS[number] = ok
    return ok


def run_suite(capsys, number, title, func, limit):
    start = time.perf_counter()
    passed, metrics = func(seed=0)
    seconds = time.perf_counter() - start
    assert report(capsys, number, title, passed, metrics, seconds, limit), metrics


def test_criterion_01_conjugate_calculus(capsys):
    run_suite(capsys, 1, "biconjugation <= 1e-5, Young inequality, Young equality <= 1e-6", verify.suite_conjugates, 5)


def test_criterion_02_closed_form_conjugates(capsys):
    run_suite(capsys, 2, "closed-form conjugate vs numeric supremum <= 1e-6", verify.suite_closed_form, 5)


def test_criterion_03_adjointness(capsys):
    run_suite(capsys, 3, "operator adjointness <= 1e-12 on 8/16/32 grids", verify.suite_adjointness, 5)


def test_criterion_04_seminorms(capsys):
    run_suite(capsys, 4, "seminorm, semimodular and sandwich checks on 100 fields", verify.suite_seminorms, 30)


def test_criterion_05_duality(capsys):
    run_suite(capsys, 5, "primal/dual TGV agreement <= 1e-3 on 5 mixed 8x8 instances", verify.suite_duality, 300)


def test_criterion_06_kernel(capsys):
    run_suite(capsys, 6, "affine TGV <= 1e-8; residual TGV >= 1e-3 ||u||", verify.suite_kernel, 120)


def test_criterion_07_decomposition(capsys):
    run_suite(capsys, 7, "strip singular part -> 1 within 5%; p=2 growth >= 1.8", verify.suite_decomposition, 120)


def test_criterion_08_solver_vs_oracle(capsys):
    pytest.importorskip("cvxpy")
    run_suite(capsys, 8, "denoise_tgv vs conic oracle <= 1e-4 on 5 instances; fixed point", verify.suite_oracle, 600)


def test_criterion_09_stability(capsys):
    run_suite(capsys, 9, "objective and solution differences non-increasing (10% slack)", verify.suite_stability, 300)


def test_criterion_10_cli_verify(capsys, tmp_path):
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "motgv", "verify"], cwd=tmp_path, capture_output=True, text=True, timeout=1200
    )
    seconds = time.perf_counter() - start
    suites_passed = proc.stdout.count("[PASS] suite")
    ok = report(
        capsys,
        10,
        "motgv verify exits 0 on suites 1-7",
        proc.returncode == 0 and suites_passed == 7,
        {"exit_code": proc.returncode, "suites_passed": suites_passed},
        seconds,
        1200,
    )
    assert ok, proc.stdout + proc.stderr
