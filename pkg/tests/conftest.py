import numpy as np
import pytest

from sqztomo.core import AcquisitionConfig, OpaParams, QuadratureSamples
from sqztomo.opa import simulate_trace, simulate_vacuum_trace
from sqztomo.spectral import decompose_and_calibrate, spectral_flatten


def gaussian_samples(v_plus, v_minus, n, seed, angle=0.0, band_index=1):
    """i.i.d. quadrature samples of a zero-mean Gaussian state at uniform random phases."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, n)
    var = v_plus * np.cos(theta - angle) ** 2 + v_minus * np.sin(theta - angle) ** 2
    return QuadratureSamples(band_index, 0.0, rng.standard_normal(n) * np.sqrt(var), theta)


@pytest.fixture(scope="session")
def nominal():
    return OpaParams.nominal()


@pytest.fixture(scope="session")
def run1(nominal):
    """Nominal parameters, 2**19 samples, seed 1."""
    acq = AcquisitionConfig()
    sig = simulate_trace(nominal, acq, 1)
    vac = simulate_vacuum_trace(acq, 1)
    return {"params": nominal, "acq": acq, "signal": sig, "vacuum": vac,
            "decomposition": decompose_and_calibrate(sig, vac),
            "flat": spectral_flatten(sig, vac), "flat_vacuum": spectral_flatten(vac, vac)}


@pytest.fixture(scope="session")
def vacuum_run():
    """Independent vacuum traces used as signal and as calibration."""
    acq = AcquisitionConfig()
    sig = simulate_vacuum_trace(acq, 7)
    vac = simulate_vacuum_trace(acq, 8)
    return {"acq": acq, "signal": sig, "vacuum": vac,
            "decomposition": decompose_and_calibrate(sig, vac),
            "flat": spectral_flatten(sig, vac), "flat_vacuum": spectral_flatten(vac, vac)}


ACCEPTANCE_LINES = []


def record_acceptance(key, title, ok, detail):
    line = f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
