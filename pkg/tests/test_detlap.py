"""Determinant-of-Laplacian routes and the universal constants.

The two routes implement independent derivations and must agree within
their stated budgets on any spectrum, real or synthetic.
"""

import math
import warnings

import pytest
from scipy.integrate import quad
from scipy.special import erfc

from loopmeasure import (
    BlmParts,
    DetInputs,
    DomainError,
    ErrorBudget,
    GaussBonnetWarning,
    GroupPresentation,
    HorizonError,
    QuadratureSpec,
    S_X,
    S_X_primitive,
    TailModel,
    ValueWithBound,
    blm_decomposition,
    constant_C,
    constant_C1,
    constant_C2,
    constant_C2_via_C1,
    constant_E,
    enumerate_spectrum,
    export_record,
    li,
    li_tilde,
    logdet_via_blm,
    logdet_via_time_integrals,
    make_synthetic_table,
    model_tail_S,
    nonprimitive_mass_sum,
    time_integral_decomposition,
    universal_constants,
    zeta_prime_minus_one,
)
from loopmeasure.detlap import _two_sided_records
from loopmeasure.spectrum import SpectrumTable

EULER_GAMMA = 0.5772156649015328606


def test_zeta_prime_frozen():
    z = zeta_prime_minus_one()
    assert z.value == pytest.approx(-0.16542114370045092921, abs=1e-15)
    assert abs(z.value - (1.0 / 12.0 - math.log(1.2824271291006226369))) <= 1e-14


def test_zeta_prime_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    want = float(mpmath.zeta(-1, derivative=1))
    z = zeta_prime_minus_one()
    assert z.value == pytest.approx(want, abs=max(z.bound, 1e-15))
    # Glaisher-Kinkelin route
    want2 = float(mpmath.mpf(1) / 12 - mpmath.log(mpmath.glaisher))
    assert z.value == pytest.approx(want2, abs=1e-14)


def test_universal_constants_frozen():
    u = universal_constants()
    assert u.E == pytest.approx(0.053809688760482612155, abs=1e-13)
    assert u.C1 == pytest.approx(-0.22053424299020711098, abs=max(u.bound_C1, 1e-12))
    assert u.C2 == pytest.approx(0.93801166423412899543, abs=max(u.bound_C2, 1e-9))
    assert u.C == pytest.approx(0.36079599933259613482, abs=max(u.bound_C, 1e-9))
    assert u.euler_gamma == pytest.approx(EULER_GAMMA, abs=1e-15)
    # C is defined off C2 by the Euler constant
    assert u.C == pytest.approx(u.C2 - u.euler_gamma, abs=1e-15)


def test_constant_wrappers_match_bundle():
    u = universal_constants()
    assert constant_E().value == u.E
    assert constant_C1().value == u.C1
    assert constant_C2().value == u.C2
    assert constant_C().value == u.C


def test_c2_two_routes_agree():
    direct = constant_C2()
    via = constant_C2_via_C1()
    assert abs(direct.value - via.value) <= direct.bound + via.bound
    assert direct.value == pytest.approx(via.value, abs=1e-9)


def _sx_oracle(t, lengths, horizon, iterates=True):
    # sum over the two orientations of each length and all iterates
    pref = math.exp(-t / 4.0) / math.sqrt(4.0 * math.pi * t)
    total = 0.0
    for ell in lengths:
        m = 1
        while True:
            ml = m * ell
            expo = -(ml * ml) / (4.0 * t) - ml / 2.0
            if expo <= -745.0:
                break
            total += 2.0 * pref * ell * math.exp(expo) / (-math.expm1(-ml))
            if not iterates or ml > 50.0:
                break
            m += 1
    return total


def test_S_X_hand_oracle():
    table = SpectrumTable(
        group_name="toy",
        generators=GroupPresentation.modular_torus().generators,
        max_word_length=2,
        records=_two_sided_records([2.0]),
        reliable_horizon=3.0,
    )
    for t in (0.5, 1.0, 2.0):
        got = S_X(t, table)
        assert got.value == pytest.approx(_sx_oracle(t, [2.0], 3.0), rel=1e-15)
        assert got.bound == model_tail_S(t, 3.0)


def test_S_X_additive_over_disjoint_lengths():
    gens = GroupPresentation.modular_torus().generators
    mk = lambda lengths: SpectrumTable(
        group_name="toy",
        generators=gens,
        max_word_length=3,
        records=_two_sided_records(lengths),
        reliable_horizon=5.0,
    )
    a = S_X(1.0, mk([2.0])).value
    b = S_X(1.0, mk([3.0])).value
    both = S_X(1.0, mk([2.0, 3.0])).value
    assert both == pytest.approx(a + b, rel=1e-15)


def test_S_X_primitive_below_full():
    table = make_synthetic_table("sparse")
    full = S_X(1.0, table)
    prim = S_X_primitive(1.0, table)
    assert prim.value < full.value
    assert prim.value == pytest.approx(_sx_oracle(1.0, [2.0, 2.7, 3.5], 4.0, iterates=False), rel=1e-14)


def test_S_X_small_t_negligible():
    table = make_synthetic_table("sparse")
    got = S_X(0.01, table)
    # shortest length 2: terms carry e^{-l^2/4t} = e^{-100}
    assert got.value < 1e-40
    assert got.bound < 1e-40


def test_S_X_tolerance_gate():
    table = make_synthetic_table("sparse")
    with pytest.raises(HorizonError):
        S_X(50.0, table, tolerance=1e-6)
    ok = S_X(0.5, table, tolerance=1e-3)
    assert ok.bound <= 1e-3
    with pytest.raises(DomainError):
        S_X(0.0, table)


def test_model_tail_matches_generating_integral():
    def integrand(L, t):
        # per-class heat term times density (e^L / L) dL, exponents combined:
        # e^{-t/4 - L^2/4t} e^{L/2} / (1 - e^{-L}) = e^{-(L-t)^2/4t} / (1 - e^{-L})
        return (
            math.exp(-((L - t) ** 2) / (4.0 * t))
            / math.sqrt(4.0 * math.pi * t)
            / (-math.expm1(-L))
        )

    for t in (0.5, 1.0, 3.0):
        for h in (2.0, 4.0):
            want, err = quad(integrand, h, math.inf, args=(t,), limit=200)
            assert model_tail_S(t, h) == pytest.approx(want, rel=1e-9, abs=err * 10)


def test_model_tail_limits():
    # large t: the j = 0 erfc term saturates at 1
    assert model_tail_S(1e4, 4.0) == pytest.approx(1.0, rel=1e-3)
    # deep horizon kills the tail
    assert model_tail_S(1.0, 40.0) < 1e-150
    assert model_tail_S(1.0, 4.0) > model_tail_S(1.0, 6.0)


def test_nonprimitive_sum_toy():
    gens = GroupPresentation.modular_torus().generators
    rec = _two_sided_records([2.0])
    table = SpectrumTable(
        group_name="toy",
        generators=gens,
        max_word_length=2,
        records=rec,
        reliable_horizon=math.inf,
    )
    got = nonprimitive_mass_sum(table, horizon=50.0)
    want = 2.0 * sum((1.0 / m) / math.expm1(2.0 * m) for m in range(2, 30))
    assert got.value == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("kind", ["sparse", "dense", "li_matched"])
def test_routes_agree_on_synthetics(kind):
    table = make_synthetic_table(kind)
    inputs = DetInputs(area=4.0 * math.pi, table=table, horizon=table.reliable_horizon)
    blm, budget_blm = logdet_via_blm(inputs)
    ti, budget_ti = logdet_via_time_integrals(inputs)
    assert abs(blm - ti) <= budget_blm.total + budget_ti.total
    assert abs(blm - ti) <= 1e-10


def test_routes_agree_on_enumerated_spectrum():
    group = GroupPresentation.modular_torus()
    table = enumerate_spectrum(group, 12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GaussBonnetWarning)
        inputs = DetInputs(area=2.0 * math.pi, table=table, horizon=table.reliable_horizon)
    blm, b1 = logdet_via_blm(inputs)
    ti, b2 = logdet_via_time_integrals(inputs)
    assert abs(blm - ti) <= b1.total + b2.total


def test_routes_agree_on_empty_table():
    gens = GroupPresentation.modular_torus().generators
    table = SpectrumTable(
        group_name="empty",
        generators=gens,
        max_word_length=1,
        records=(),
        reliable_horizon=3.0,
    )
    inputs = DetInputs(area=4.0 * math.pi, table=table, horizon=3.0)
    blm, _ = logdet_via_blm(inputs)
    ti, _ = logdet_via_time_integrals(inputs)
    assert blm == pytest.approx(ti, abs=1e-12)


def test_budgets_shrink_with_horizon():
    table = make_synthetic_table("dense")
    totals = []
    for h in (3.0, 4.0, 5.0, 6.0):
        inputs = DetInputs(area=4.0 * math.pi, table=table, horizon=h)
        _, budget = logdet_via_blm(inputs)
        totals.append(budget.total)
    assert all(b > a for a, b in zip(totals[1:], totals))


def test_blm_decomposition_reconstructs():
    table = make_synthetic_table("dense")
    inputs = DetInputs(area=4.0 * math.pi, table=table, horizon=5.0)
    parts, _ = blm_decomposition(inputs)
    whole, _ = logdet_via_blm(inputs)
    # li_integral is stored positive and enters subtracted
    recon = (
        parts.area_term
        + parts.constant
        + parts.sum_primitive
        + parts.sum_nonprimitive
        - parts.li_integral
    )
    assert whole == pytest.approx(recon, rel=1e-14)


def test_time_integral_decomposition_reconstructs():
    table = make_synthetic_table("dense")
    inputs = DetInputs(area=4.0 * math.pi, table=table, horizon=5.0)
    parts, _ = time_integral_decomposition(inputs)
    whole, _ = logdet_via_time_integrals(inputs)
    recon = (
        parts.area_term
        + parts.gamma_term
        + parts.integral_small_t
        + parts.integral_large_t
    )
    assert whole == pytest.approx(recon, rel=1e-14)


def test_det_inputs_validation():
    table = make_synthetic_table("sparse")
    with pytest.raises(DomainError):
        DetInputs(area=0.0, table=table, horizon=3.0)
    with pytest.raises(HorizonError):
        DetInputs(area=4.0 * math.pi, table=table, horizon=0.5)
    with pytest.raises(HorizonError):
        DetInputs(area=4.0 * math.pi, table=table, horizon=table.reliable_horizon + 1.0)


def test_gauss_bonnet_warning():
    table = make_synthetic_table("sparse")
    with pytest.warns(GaussBonnetWarning):
        DetInputs(area=2.0 * math.pi, table=table, horizon=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        DetInputs(area=4.0 * math.pi, table=table, horizon=3.0)
        DetInputs(area=8.0 * math.pi, table=table, horizon=3.0)


def test_tail_model_kind_guard():
    with pytest.raises(DomainError):
        TailModel(kind="powerlaw")
    with pytest.raises(DomainError):
        make_synthetic_table("nope")


def test_error_budget_total():
    b = ErrorBudget(quadrature=1e-12, truncation=2e-10, model_is_unquantified=True)
    assert b.total == pytest.approx(1e-12 + 2e-10, rel=1e-15)
    assert b.model_is_unquantified is True


def test_export_record_format():
    b = ErrorBudget(quadrature=1e-12, truncation=0.5e-10, model_is_unquantified=True)
    line = export_record("blm", 0.123456789, b, TailModel())
    assert line.startswith("route=blm value=0.123456789")
    assert "tail_model=li" in line
    assert "model_is_unquantified=True" in line
    assert "\n" not in line


def test_li_helpers():
    assert li(2.0) == pytest.approx(1.0451637801174927, rel=1e-14)
    assert li_tilde(2.0) == 0.0
    assert li_tilde(1.0) == 0.0
    assert li_tilde(10.0) == pytest.approx(li(10.0) - li(2.0), rel=1e-14)
    with pytest.raises(DomainError):
        li(1.5)
