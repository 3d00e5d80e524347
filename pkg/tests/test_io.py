import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqztomo.core import (AcquisitionConfig, BroadbandTrace, DensityMatrix, OpaParams,
                         QuadratureSamples, SqueezingSpectrum, TraceKind, WignerGrid)
from sqztomo.io import (TraceFormatError, config_hash, dumps, from_document, read_band_samples,
                       read_document, read_trace, to_document, write_band_samples,
                       write_document, write_trace)
from sqztomo.spectral import attach_phase, band_decompose


def _trace(n=1024, seed=0, kind=TraceKind.SIGNAL):
    acq = AcquisitionConfig(sample_rate=1e6, n_samples=n, sweep_period=5e-4, phase_offset=0.3)
    return BroadbandTrace(np.random.default_rng(seed).standard_normal(n), acq, kind)


def test_trace_round_trip(tmp_path):
    tr = _trace(kind=TraceKind.VACUUM)
    path = write_trace(tmp_path / "t.sqz", tr)
    back = read_trace(path)
    assert back.kind == TraceKind.VACUUM
    assert back.config == tr.config
    assert np.array_equal(back.samples, tr.samples)


def test_trace_bad_files(tmp_path):
    p = tmp_path / "bad.sqz"
    p.write_bytes(b"nope")
    with pytest.raises(TraceFormatError):
        read_trace(p)
    good = write_trace(tmp_path / "g.sqz", _trace())
    raw = good.read_bytes()
    (tmp_path / "short.sqz").write_bytes(raw[:-8])
    with pytest.raises(TraceFormatError):
        read_trace(tmp_path / "short.sqz")
    (tmp_path / "magic.sqz").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(TraceFormatError):
        read_trace(tmp_path / "magic.sqz")


def test_band_samples_round_trip(tmp_path):
    tr = _trace()
    q = attach_phase(band_decompose(tr)[3], full_sweeps=False)
    path = write_band_samples(tmp_path / "b.sqz", q, tr.config)
    back = read_band_samples(path)
    assert back.band_index == 3
    assert np.array_equal(back.x, q.x)
    np.testing.assert_allclose(back.theta, q.theta, atol=1e-12)
    with pytest.raises(TraceFormatError):
        read_trace(path)
    with pytest.raises(TraceFormatError):
        read_band_samples(write_trace(tmp_path / "t.sqz", tr))


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@settings(max_examples=30)
@given(st.lists(st.tuples(finite, finite), min_size=4, max_size=4))
def test_density_matrix_document_bit_exact(vals):
    rho = np.array([complex(a, b) for a, b in vals]).reshape(2, 2)
    dm = DensityMatrix(rho, {"band_index": 2})
    back = from_document(__import__("json").loads(dumps(to_document(dm))))
    assert np.array_equal(back.rho, dm.rho)
    assert back.metadata == {"band_index": 2}


def test_other_documents_round_trip(tmp_path):
    objs = [OpaParams.nominal(), AcquisitionConfig(n_bands=8),
            WignerGrid(np.linspace(-1, 1, 3), np.linspace(-2, 2, 4), np.arange(12.0).reshape(4, 3) / 7),
            SqueezingSpectrum([1, 2], [1.1, 2.2], [0.3, 0.5], [3.0, 2.0], [False, True]),
            QuadratureSamples(4, 12.5, np.array([0.1, -0.2]), np.array([0.0, 3.0]))]
    for i, obj in enumerate(objs):
        path = write_document(tmp_path / f"d{i}.json", to_document(obj))
        back = from_document(read_document(path))
        if isinstance(obj, (OpaParams, AcquisitionConfig)):
            assert back == obj
        else:
            for name in vars(obj):
                a, b = getattr(obj, name), getattr(back, name)
                assert np.array_equal(np.asarray(a), np.asarray(b)), name
    with pytest.raises(TypeError):
        to_document(object())
    with pytest.raises(TypeError):
        from_document({"type": "Nope"})


def test_documents_carry_conventions():
    doc = to_document(DensityMatrix(np.eye(2)))
    assert doc["conventions"]["vacuum_quadrature_variance"] == 0.5


def test_config_hash_is_order_independent():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
