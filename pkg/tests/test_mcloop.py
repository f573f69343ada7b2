"""Sampler distribution checks and determinism contracts.

Statistical assertions use fixed seeds and 3 sigma gates, so the suite is
deterministic; the acceptance check exercises the full-size run.
"""

import dataclasses
import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from loopmeasure import (
    DomainError,
    InfiniteMassError,
    LineFamily,
    LoopSampleSpec,
    batch_estimates,
    estimate_hit_mass,
    export_batches,
    hits_geodesic,
    mass_flat_class,
    mass_torus_hit,
    path_hit_probability,
    sample_bridge,
    sample_duration,
)

HEX = dict(omega1=1.0 + 0.0j, omega2=0.5 + (math.sqrt(3.0) / 2.0) * 1j)


def _spec(**kw):
    base = dict(HEX, p=1, q=0, m=1, n_steps=64, n_samples=1000, seed=7)
    base.update(kw)
    return LoopSampleSpec(**base)


def test_spec_validation():
    with pytest.raises(DomainError):
        _spec(omega1=complex(math.inf, 0.0))
    with pytest.raises(DomainError):
        _spec(omega2=2.0 + 0.0j)  # collinear with omega1
    with pytest.raises(DomainError):
        _spec(p=0, q=0)
    with pytest.raises(InfiniteMassError):
        _spec(m=0)
    with pytest.raises(DomainError):
        _spec(n_steps=15)
    with pytest.raises(DomainError):
        _spec(n_samples=0)
    for bad_seed in (-1, 2**64, 1.0, True):
        with pytest.raises(DomainError):
            _spec(seed=bad_seed)


def test_spec_geometry():
    s = _spec(p=2, q=2)
    assert s.area == pytest.approx(math.sqrt(3.0) / 2.0, rel=1e-15)
    # (2,2) reduces to primitive (1,1); spacing = area / |primitive vector|
    lam = 2.0 * s.omega1 + 2.0 * s.omega2
    assert s.lam == lam
    prim = abs(lam) / 2.0
    assert s.line_family.spacing == pytest.approx(s.area / prim, rel=1e-14)
    assert abs(s.line_family.normal) == pytest.approx(1.0, rel=1e-14)
    # normal is orthogonal to the class direction
    dot = (s.line_family.normal.conjugate() * lam).real
    assert abs(dot) < 1e-12 * abs(lam)


def test_duration_law():
    rng = np.random.Generator(np.random.Philox(key=5))
    a = 0.25
    t = np.array([sample_duration(a, rng) for _ in range(20000)])
    assert np.all(t > 0.0)
    # 1/t is Exp(1)/a: mean 1/a, sd 1/a
    inv = 1.0 / t
    z = (inv.mean() - 1.0 / a) / (inv.std(ddof=1) / math.sqrt(len(t)))
    assert abs(z) < 3.0
    with pytest.raises(DomainError):
        sample_duration(0.0, rng)
    with pytest.raises(DomainError):
        sample_duration(-1.0, rng)


def test_duration_density_normalized():
    a = 0.25
    val, err = quad(lambda t: a * t**-2 * math.exp(-a / t), 0.0, math.inf)
    assert val == pytest.approx(1.0, abs=max(1e-10, err * 10))


def test_bridge_endpoints_and_marginals():
    rng = np.random.Generator(np.random.Philox(key=11))
    z0, z1, t, steps = 0.2 + 0.1j, -0.4 + 0.9j, 2.0, 16
    mids = np.empty(30000, dtype=complex)
    for i in range(len(mids)):
        path = sample_bridge(z0, z1, t, steps, rng)
        assert path[0] == z0 and path[-1] == z1
        assert len(path) == steps + 1
        mids[i] = path[steps // 2]
    # bridge marginal at t/2: mean is the chord midpoint, per-coordinate
    # variance is v * t * (1/2)(1/2) with v = 2
    want_mean = 0.5 * (z0 + z1)
    want_var = 2.0 * t * 0.25
    for coord, center in ((mids.real, want_mean.real), (mids.imag, want_mean.imag)):
        mu = coord.mean()
        var = coord.var(ddof=1)
        se_mu = math.sqrt(want_var / len(mids))
        assert abs(mu - center) < 3 * se_mu
        se_var = want_var * math.sqrt(2.0 / (len(mids) - 1))
        assert abs(var - want_var) < 3 * se_var


def test_bridge_validation():
    rng = np.random.Generator(np.random.Philox(key=1))
    with pytest.raises(DomainError):
        sample_bridge(0j, 1j, 0.0, 16, rng)
    # the 16-step floor is a LoopSampleSpec rule; the bridge itself only
    # needs one step
    with pytest.raises(DomainError):
        sample_bridge(0j, 1j, 1.0, 0, rng)
    one = sample_bridge(0j, 1j, 1.0, 1, rng)
    assert list(one) == [0j, 1j]


def test_path_hit_probability_straddle_and_far():
    fam = LineFamily(normal=1.0 + 0.0j, spacing=10.0)
    # crossing a line forces a hit
    path = np.array([-1.0 + 0.0j, 1.0 + 0.0j])
    assert path_hit_probability(path, 0.5, fam) == 1.0
    # a short quiet path in mid-cell almost surely misses
    far = np.array([5.0 + 0.0j, 5.0 + 0.01j, 5.0 - 0.01j])
    assert path_hit_probability(far, 1e-4, fam) < 1e-12


def test_path_hit_probability_validation():
    with pytest.raises(DomainError):
        path_hit_probability(np.array([0j, 1j]), 1.0, LineFamily(1.0 + 0j, 0.0))
    with pytest.raises(DomainError):
        path_hit_probability(np.array([0j, 1j]), 1.0, LineFamily(2.0 + 0j, 1.0))
    with pytest.raises(DomainError):
        path_hit_probability(np.array([0j]), 1.0, LineFamily(1.0 + 0j, 1.0))
    with pytest.raises(DomainError):
        path_hit_probability(np.array([0j, 1j]), 0.0, LineFamily(1.0 + 0j, 1.0))


def test_hits_geodesic_extremes():
    fam = LineFamily(normal=1.0 + 0.0j, spacing=10.0)
    rng = np.random.Generator(np.random.Philox(key=3))
    crossing = np.array([-1.0 + 0.0j, 1.0 + 0.0j])
    assert hits_geodesic(crossing, 0.5, fam, rng) is True
    far = np.array([5.0 + 0.0j, 5.0 + 0.01j])
    assert hits_geodesic(far, 1e-4, fam, rng) is False


def test_indicator_one_is_exact():
    spec = _spec(n_samples=500)
    est = estimate_hit_mass(spec, indicator="one")
    mass = mass_flat_class(spec.area, abs(spec.m) * abs(spec.lam)).value
    assert est.mean == mass
    assert est.stderr == 0.0
    assert est.n == 500
    with pytest.raises(DomainError):
        estimate_hit_mass(spec, indicator="maybe")


def test_estimate_reproducible_and_bounded():
    spec = _spec(n_samples=3000, seed=21)
    a = estimate_hit_mass(spec)
    b = estimate_hit_mass(spec)
    assert a == b
    mass = mass_flat_class(spec.area, abs(spec.m) * abs(spec.lam)).value
    assert 0.0 <= a.mean <= mass
    assert a.stderr > 0.0


def test_estimate_m_sign_symmetric():
    a = estimate_hit_mass(_spec(m=2, n_samples=2000, seed=99))
    b = estimate_hit_mass(_spec(m=-2, n_samples=2000, seed=99))
    assert a == b


def test_estimate_agrees_with_reference():
    spec = _spec(n_samples=20000, seed=7)
    est = estimate_hit_mass(spec)
    ref = mass_torus_hit(spec.area, abs(spec.lam), spec.m).value
    z = (est.mean - ref) / est.stderr
    assert abs(z) < 3.0


def test_step_refinement_stable():
    coarse = estimate_hit_mass(_spec(n_samples=20000, seed=7, n_steps=256))
    fine = estimate_hit_mass(_spec(n_samples=20000, seed=7, n_steps=512))
    denom = math.hypot(coarse.stderr, fine.stderr)
    assert abs(coarse.mean - fine.mean) / denom < 3.0


def test_stderr_scales_like_inverse_sqrt_n():
    small = estimate_hit_mass(_spec(n_samples=20000, seed=13))
    large = estimate_hit_mass(_spec(n_samples=80000, seed=13))
    ratio = large.stderr / small.stderr
    assert 0.4 < ratio < 0.6


def test_batches_pool_to_combined():
    spec = _spec(n_samples=20000, seed=42)
    combined = estimate_hit_mass(spec)
    batches = batch_estimates(spec, 4)
    assert sum(b.n for b in batches) == combined.n
    mass = mass_flat_class(spec.area, abs(spec.m) * abs(spec.lam)).value
    # each batch mean is mass * k_i/n_i with integer k_i; pooling the
    # recovered counts reproduces the combined estimate bitwise
    counts = [round(b.mean / mass * b.n) for b in batches]
    n = combined.n
    k = sum(counts)
    assert combined.mean == mass * (k / n)
    ss = k * (mass - combined.mean) ** 2 + (n - k) * combined.mean**2
    assert combined.stderr == math.sqrt(ss / (n - 1)) / math.sqrt(n)


def test_batches_validation():
    spec = _spec(n_samples=5000)  # two 4096-chunks
    with pytest.raises(DomainError):
        batch_estimates(spec, 3)
    with pytest.raises(DomainError):
        batch_estimates(spec, 0)
    two = batch_estimates(spec, 2)
    assert [b.n for b in two] == [4096, 904]


def test_export_batches_format():
    spec = _spec(n_samples=5000, seed=3)
    combined = estimate_hit_mass(spec)
    batches = batch_estimates(spec, 2)
    ref = mass_torus_hit(spec.area, abs(spec.lam), spec.m).value
    buf = io.StringIO()
    export_batches(buf, batches, combined, ref)
    text = buf.getvalue()
    buf2 = io.StringIO()
    export_batches(buf2, batches, combined, ref)
    assert text == buf2.getvalue()
    lines = text.splitlines()
    assert lines[0].startswith("# reference=")
    assert "combined_mean=" in lines[0] and " z=" in lines[0]
    assert lines[1] == "n,mean,stderr"
    assert len(lines) == 2 + len(batches)
    n, mean, stderr = lines[2].split(",")
    assert int(n) == batches[0].n
    assert float(mean) == batches[0].mean
    assert float(stderr) == batches[0].stderr
