import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sqztomo.core import AboveThresholdError, AcquisitionConfig, OpaParams, band_center
from sqztomo.opa import (apply_adc, band_noise, band_variances, lo_phase, simulate_trace,
                        simulate_vacuum_trace)
from sqztomo.spectral import band_bin_edges, band_decompose


def test_band_variances_examples(nominal):
    assert band_variances(nominal, 0.0) == pytest.approx((0.3206, 24.080), rel=1e-4)
    lo, hi = band_variances(nominal, nominal.cavity_hwhm)
    assert (lo, hi) == pytest.approx((0.4942, 2.8235), abs=5e-5)
    zero = OpaParams.from_efficiency(0.6, 0.0)
    assert band_variances(zero, 1e7) == (1.0, 1.0)


def test_above_threshold():
    with pytest.raises(AboveThresholdError):
        OpaParams.from_efficiency(1.0, 0.7)


@given(st.floats(0.001, 0.999), st.floats(0.001, 1.0), st.floats(0, 1e10))
def test_branches_bracket_vacuum(d, eff, omega):
    p = OpaParams.from_efficiency(d, eff)
    lo, hi = band_variances(p, omega)
    assert 0 <= lo <= 1 <= hi


@given(st.floats(0.01, 0.99), st.floats(0.01, 1.0))
def test_branches_relax_to_vacuum(d, eff):
    p = OpaParams.from_efficiency(d, eff)
    omega = np.geomspace(1e5, 1e13, 60)
    lo, hi = band_variances(p, omega)
    assert np.all(np.diff(lo) >= 0) and np.all(np.diff(hi) <= 0)
    assert abs(lo[-1] - 1) < 1e-6 and abs(hi[-1] - 1) < 1e-6


@given(st.floats(0.0, 0.999))
def test_unit_efficiency_limit(d):
    lo, _ = band_variances(OpaParams.from_efficiency(d, 1.0), 0.0)
    assert lo == pytest.approx(1 - 4 * d / (1 + d) ** 2, abs=1e-12)
    assert lo >= -1e-15


def test_lo_phase():
    acq = AcquisitionConfig(phase_offset=0.4)
    th = lo_phase(acq)
    assert th[0] == pytest.approx(0.4)
    half = acq.samples_per_sweep // 2
    assert th[half] == pytest.approx(0.4 + np.pi)


def test_band_noise_unit_variance_and_support():
    rng = np.random.default_rng(0)
    n = 4096
    x = band_noise(rng, n, 100, 200)
    spec = np.abs(np.fft.rfft(x))
    assert spec[:100].max() < 1e-9 and spec[200:].max() < 1e-9
    xs = [band_noise(np.random.default_rng(s), n, 0, 50).var() for s in range(200)]
    assert np.mean(xs) == pytest.approx(1.0, rel=0.03)


def test_vacuum_trace_variance_and_flatness():
    acq = AcquisitionConfig()
    v = simulate_vacuum_trace(acq, 3).samples
    n = v.size
    # n/16 independent real dof per band: relative std of the total variance ~ sqrt(2/n)
    assert v.var() == pytest.approx(acq.n_bands * 0.5, rel=5 * np.sqrt(2 / n))
    power = np.abs(np.fft.rfft(v)) ** 2
    edges = band_bin_edges(n, acq.n_bands)
    per_band = np.array([power[edges[b]:edges[b + 1]].mean() for b in range(acq.n_bands)])
    assert np.max(np.abs(per_band / per_band.mean() - 1)) < 0.05
    # phase independence
    th = lo_phase(acq)[:acq.n_full_sweep_samples]
    idx = (th / (2 * np.pi) * 16).astype(int)
    var = np.array([v[:th.size][idx == k].var() for k in range(16)])
    assert np.max(np.abs(var / 8 - 1)) < 0.05


def test_zero_pump_is_vacuum():
    acq = AcquisitionConfig()
    sig = simulate_trace(OpaParams(0.0), acq, 5)
    bands = band_decompose(sig)
    for b in bands:
        assert b.samples.var() == pytest.approx(0.5, rel=0.05)


def test_band1_antisqueezed_variance(nominal):
    acq = AcquisitionConfig()
    sig = simulate_trace(nominal, acq, 11)
    band = band_decompose(sig)[1].samples
    th = lo_phase(acq)
    near = (np.abs(np.angle(np.exp(1j * th))) < 0.05) | (np.abs(np.angle(np.exp(1j * (th - np.pi)))) < 0.05)
    _, hi = band_variances(nominal, band_center(1, acq))
    expected = np.mean(hi / 2 * np.cos(th[near]) ** 2 + 0.5 * 0.33 * np.sin(th[near]) ** 2)
    assert band[near].var() == pytest.approx(expected, rel=0.05)
    assert hi == pytest.approx(18.74, abs=0.01)


def test_simulation_determinism(nominal):
    acq = AcquisitionConfig(n_samples=2**16, sweep_period=1e-3)
    a = simulate_trace(nominal, acq, 42).samples
    b = simulate_trace(nominal, acq, 42).samples
    c = simulate_trace(nominal, acq, 43).samples
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, c)


def test_bands_are_uncorrelated(nominal):
    acq = AcquisitionConfig()
    bands = band_decompose(simulate_trace(nominal, acq, 2))
    a, b = bands[3].samples, bands[4].samples
    corr = np.mean(a * b) / np.sqrt(a.var() * b.var())
    # brick-wall bands are exactly orthogonal over the record
    assert abs(corr) < 1e-10


def test_adc_examples():
    acq = AcquisitionConfig(n_samples=2**16, sweep_period=1e-3)
    tr = simulate_vacuum_trace(acq, 0)
    fine = apply_adc(tr, 24, 100.0)
    rel = np.sqrt(np.mean((fine.samples - tr.samples) ** 2) / np.mean(tr.samples ** 2))
    assert rel < 1e-5
    zero = apply_adc(tr.replace_samples(np.zeros(acq.n_samples)), 12, 5.0).samples
    step = 10.0 / 2**12
    assert np.all(np.abs(zero) <= step / 2 + 1e-15)
    unit = tr.replace_samples(np.random.default_rng(1).standard_normal(acq.n_samples))
    q = apply_adc(unit, 12, 5.0)
    noise = np.mean((q.samples - unit.samples) ** 2)
    assert noise == pytest.approx(step**2 / 12, rel=0.05)
    with pytest.raises(ValueError):
        apply_adc(tr, 2, 1.0)


def test_adc_in_simulation(nominal):
    acq = AcquisitionConfig(n_samples=2**16, sweep_period=1e-3, adc_bits=8)
    tr = simulate_trace(nominal, acq, 0)
    assert np.unique(tr.samples).size <= 256
