"""One test per acceptance criterion.

Each check is a self-timed pass/fail probe; run them all from the shell
with ``loopmeasure selftest <config>``.
"""

import os

import pytest

from loopmeasure import acceptance
from loopmeasure.cli import main


def _run(name):
    check = acceptance.ALL_CHECKS[name]
    result = check()
    assert result.passed, f"{name}: {result.detail}"
    return result


def test_criterion_1_universal_constants():
    r = _run("constants")
    assert r.elapsed < 5.0


def test_criterion_2_annulus_routes():
    r = _run("annulus-routes")
    assert r.elapsed < 10.0


def test_criterion_3_quadrature_identities():
    r = _run("quadrature-identities")
    assert r.elapsed < 60.0


def test_criterion_4_spectrum_enumeration():
    _run("spectrum")


def test_criterion_5_puncture_identity():
    r = _run("puncture-identity")
    assert r.elapsed < 900.0
    assert "lower_bound=True" in r.detail
    assert "strictly_increasing=True" in r.detail


def test_criterion_6_determinant_routes():
    _run("determinant-routes")


def test_criterion_7_monte_carlo():
    r = _run("monte-carlo")
    assert r.elapsed < 600.0


def test_criterion_8_formula_coherence():
    _run("coherence")


def test_criterion_9_reproducible_selftest(tmp_path):
    cfg = os.path.join(tmp_path, "st.toml")
    with open(cfg, "w") as fh:
        fh.write('checks = ["constants", "coherence"]\n')
    d1 = os.path.join(tmp_path, "run1")
    d2 = os.path.join(tmp_path, "run2")
    assert main(["selftest", cfg, "--out-dir", d1]) == 0
    assert main(["selftest", cfg, "--out-dir", d2]) == 0
    b1 = open(os.path.join(d1, "selftest.txt"), "rb").read()
    b2 = open(os.path.join(d2, "selftest.txt"), "rb").read()
    assert b1 == b2
    assert b1.startswith(b"PASS constants")


def test_criterion_9_pipeline_reproducibility():
    _run("reproducibility")
