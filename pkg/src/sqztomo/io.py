"""Binary trace container and structured-text documents.

Trace file layout (little-endian)::

    magic       4s   b"SQZB"
    version     u32
    sample_rate f64
    n_samples   u64
    sweep_period f64
    phase_offset f64
    kind        u8   0 signal, 1 vacuum, 0x80 | b  band-b quadrature samples
    samples     n_samples * f64

Quadrature files store only the x values; phases are implied by the header
timing, starting at t = 0.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import (AcquisitionConfig, BroadbandTrace, DensityMatrix, OpaParams,
                   QuadratureSamples, SqueezingSpectrum, TraceKind, WignerGrid)

MAGIC = b"SQZB"
VERSION = 1
_HEADER = struct.Struct("<4sIdQddB")
BAND_KIND_FLAG = 0x80

CONVENTIONS = {"vacuum_quadrature_variance": 0.5, "vacuum_noise_power": 1.0,
               "quadrature": "x_theta = (a^dag e^{i theta} + a e^{-i theta}) / sqrt(2)"}


class TraceFormatError(ValueError):
    pass


def _write(path, kind_code, config: AcquisitionConfig, samples):
    samples = np.ascontiguousarray(samples, dtype="<f8")
    header = _HEADER.pack(MAGIC, VERSION, float(config.sample_rate), samples.size,
                          float(config.sweep_period), float(config.phase_offset), kind_code)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.tobytes())
    return path


def _read(path):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TraceFormatError(f"{path}: file too short for header")
    magic, version, rate, n, period, offset, kind = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TraceFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise TraceFormatError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise TraceFormatError(f"{path}: expected {n} samples, found {len(body) / 8:g}")
    samples = np.frombuffer(body, dtype="<f8").astype(float)
    return rate, n, period, offset, kind, samples


def write_trace(path, trace: BroadbandTrace):
    return _write(path, int(trace.kind), trace.config, trace.samples)


def read_trace(path, n_bands: int = 16, adc_bits=None) -> BroadbandTrace:
    """Load a trace file. Band layout and ADC depth are not stored in the header."""
    rate, n, period, offset, kind, samples = _read(path)
    if kind & BAND_KIND_FLAG:
        raise TraceFormatError(f"{path}: holds band samples, not a broadband trace")
    config = AcquisitionConfig(sample_rate=rate, n_samples=n, sweep_period=period,
                               phase_offset=offset, adc_bits=adc_bits, n_bands=n_bands)
    return BroadbandTrace(samples, config, TraceKind(kind))


def write_band_samples(path, samples: QuadratureSamples, config: AcquisitionConfig):
    if not 0 <= samples.band_index < BAND_KIND_FLAG:
        raise ValueError("band index does not fit the kind field")
    return _write(path, BAND_KIND_FLAG | samples.band_index, config, samples.x)


def read_band_samples(path, n_bands: int = 16) -> QuadratureSamples:
    from .core import band_center

    rate, n, period, offset, kind, x = _read(path)
    if not kind & BAND_KIND_FLAG:
        raise TraceFormatError(f"{path}: not a band-sample file")
    band = kind & ~BAND_KIND_FLAG
    t = np.arange(n) / rate
    theta = np.mod(2 * np.pi * t / period + offset, 2 * np.pi)
    # the stored record may be shorter than one full config; only the timing matters here
    cfg = AcquisitionConfig(sample_rate=rate, n_samples=max(n, int(np.ceil(period * rate))),
                            sweep_period=period, phase_offset=offset, n_bands=n_bands)
    return QuadratureSamples(band, band_center(band, cfg), x, theta)


# --- structured text -------------------------------------------------------

def _floats(a):
    return [float(v) for v in np.ravel(a)]


def _complex_pairs(a):
    a = np.asarray(a, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def to_document(obj) -> dict:
    """Convert a domain object to a JSON-compatible dict (floats round-trip exactly)."""
    if isinstance(obj, OpaParams):
        return {"type": "OpaParams", **asdict(obj)}
    if isinstance(obj, AcquisitionConfig):
        return {"type": "AcquisitionConfig", **asdict(obj)}
    if isinstance(obj, DensityMatrix):
        return {"type": "DensityMatrix", "n_max": obj.n_max, "rho": _complex_pairs(obj.rho),
                "metadata": obj.metadata, "conventions": CONVENTIONS}
    if isinstance(obj, WignerGrid):
        return {"type": "WignerGrid", "x": _floats(obj.x), "p": _floats(obj.p),
                "values": [_floats(row) for row in obj.values], "conventions": CONVENTIONS}
    if isinstance(obj, SqueezingSpectrum):
        return {"type": "SqueezingSpectrum", "band_index": [int(b) for b in obj.band_index],
                "omega": _floats(obj.omega), "v_min": _floats(obj.v_min),
                "v_max": _floats(obj.v_max), "flagged": [bool(f) for f in obj.flagged]}
    if isinstance(obj, QuadratureSamples):
        return {"type": "QuadratureSamples", "band_index": obj.band_index,
                "center_frequency": float(obj.center_frequency), "x": _floats(obj.x),
                "theta": _floats(obj.theta)}
    raise TypeError(f"no document form for {type(obj).__name__}")


def from_document(doc: dict):
    kind = doc.get("type")
    body = {k: v for k, v in doc.items() if k != "type"}
    if kind == "OpaParams":
        return OpaParams(**body)
    if kind == "AcquisitionConfig":
        return AcquisitionConfig(**body)
    if kind == "DensityMatrix":
        pairs = np.asarray(doc["rho"], dtype=float)
        return DensityMatrix(pairs[..., 0] + 1j * pairs[..., 1], doc.get("metadata", {}))
    if kind == "WignerGrid":
        return WignerGrid(np.asarray(doc["x"]), np.asarray(doc["p"]), np.asarray(doc["values"]))
    if kind == "SqueezingSpectrum":
        return SqueezingSpectrum(np.asarray(doc["band_index"]), np.asarray(doc["omega"]),
                                 np.asarray(doc["v_min"]), np.asarray(doc["v_max"]),
                                 np.asarray(doc["flagged"], dtype=bool))
    if kind == "QuadratureSamples":
        return QuadratureSamples(doc["band_index"], doc["center_frequency"],
                                 np.asarray(doc["x"]), np.asarray(doc["theta"]))
    raise TypeError(f"unknown document type {kind!r}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False)


def write_document(path, doc: dict):
    path = Path(path)
    path.write_text(dumps(doc) + "\n")
    return path


def read_document(path) -> dict:
    return json.loads(Path(path).read_text())


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
