"""Run configuration: a sectioned ``key = value`` text file.

Schema (all keys optional, defaults shown)::

    [opa]
    pump_parameter = 0.7071067811865476   # d = sqrt(P / P_threshold)
    efficiency = 0.7                      # overall ξη
    escape_efficiency = 0.88
    cavity_linewidth_mhz = 17.5           # Γ / 2π, half width

    [acquisition]
    sample_rate = 60000000.0
    n_samples = 524288
    sweep_period = 0.008
    phase_offset = 0.0                    # LO phase at t = 0, rad
    n_bands = 16
    adc_bits = 0                          # 0 = no quantization

    [tomography]
    n_max = 30
    k_c = 5.0
    phase_bins = 64
    x_bins = 256
    wigner_points = 121
    wigner_half_width = 0                 # 0 = fit each band's extent

    [analysis]
    phase_bins = 64
    max_lag = 20
    fit_gamma = false
    photon_length = 64

    [run]
    seed = 1
    output = run
    workers = 1
    bands = all                           # or a list such as 1,2,5-8
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .core import AcquisitionConfig, OpaParams
from .io import config_hash


@dataclass(frozen=True)
class TomographySettings:
    n_max: int = 30
    k_c: float = 5.0
    phase_bins: int = 64
    x_bins: int = 256
    wigner_points: int = 121
    wigner_half_width: float = 0.0

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.k_c <= 0:
            raise ValueError("k_c must be positive")
        if self.phase_bins < 8 or self.x_bins < 8:
            raise ValueError("tomogram needs at least 8 phase and 8 quadrature bins")
        if self.wigner_points < 3:
            raise ValueError("wigner_points must be at least 3")
        if self.wigner_half_width < 0:
            raise ValueError("wigner_half_width must be non-negative")


@dataclass(frozen=True)
class AnalysisSettings:
    phase_bins: int = 64
    max_lag: int = 20
    fit_gamma: bool = False
    photon_length: int = 64

    def __post_init__(self):
        if self.phase_bins < 8:
            raise ValueError("analysis phase_bins must be at least 8")
        if self.max_lag < 2:
            raise ValueError("max_lag must be at least 2")
        if self.photon_length < 2:
            raise ValueError("photon_length must be at least 2")


def parse_bands(text: str, n_bands: int) -> tuple[int, ...]:
    """``all`` or a comma list with ranges, e.g. ``1,3-5``. Band 0 is never active."""
    text = text.strip().lower()
    if text in ("", "all"):
        return tuple(range(1, n_bands))
    out = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            out.update(range(lo, hi + 1))
        elif part:
            out.add(int(part))
    bad = [b for b in out if not 1 <= b < n_bands]
    if bad:
        raise ValueError(f"bands {sorted(bad)} outside 1..{n_bands - 1}")
    return tuple(sorted(out))


def format_bands(bands, n_bands: int) -> str:
    if tuple(bands) == tuple(range(1, n_bands)):
        return "all"
    return ",".join(str(b) for b in bands)


@dataclass(frozen=True)
class RunConfig:
    opa: OpaParams = field(default_factory=OpaParams.nominal)
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    tomography: TomographySettings = field(default_factory=TomographySettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    seed: int = 1
    output: str = "run"
    workers: int = 1
    bands: str = "all"

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        parse_bands(self.bands, self.acquisition.n_bands)

    @property
    def band_list(self) -> tuple[int, ...]:
        return parse_bands(self.bands, self.acquisition.n_bands)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        tomo = {k: kw.pop(k) for k in ("n_max", "k_c") if k in kw}
        cfg = replace(self, **kw)
        if tomo:
            cfg = replace(cfg, tomography=replace(cfg.tomography, **tomo))
        return cfg

    def to_dict(self) -> dict:
        return {"opa": asdict(self.opa), "acquisition": asdict(self.acquisition),
                "tomography": asdict(self.tomography), "analysis": asdict(self.analysis),
                "seed": self.seed, "output": self.output, "workers": self.workers,
                "bands": self.bands}

    def hash(self) -> str:
        """Hash of everything that affects results (output location and workers excluded)."""
        doc = self.to_dict()
        for key in ("output", "workers"):
            doc.pop(key)
        return config_hash(doc)

    def dumps(self) -> str:
        cp = _parser()
        o, a, t, n = self.opa, self.acquisition, self.tomography, self.analysis
        cp["opa"] = {"pump_parameter": repr(o.pump_parameter), "efficiency": repr(o.efficiency),
                     "escape_efficiency": repr(o.escape_efficiency),
                     "cavity_linewidth_mhz": repr(o.cavity_hwhm / (2 * math.pi * 1e6))}
        cp["acquisition"] = {"sample_rate": repr(a.sample_rate), "n_samples": str(a.n_samples),
                             "sweep_period": repr(a.sweep_period),
                             "phase_offset": repr(a.phase_offset), "n_bands": str(a.n_bands),
                             "adc_bits": str(a.adc_bits or 0)}
        cp["tomography"] = {k: repr(v) for k, v in asdict(t).items()}
        cp["analysis"] = {k: (str(v).lower() if isinstance(v, bool) else repr(v))
                          for k, v in asdict(n).items()}
        cp["run"] = {"seed": str(self.seed), "output": self.output,
                     "workers": str(self.workers), "bands": self.bands}
        lines = []
        for section in cp.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in cp[section].items())
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.dumps())
        return path

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = _parser()
        cp.read_string(text)
        known = {"opa", "acquisition", "tomography", "analysis", "run"}
        unknown = set(cp.sections()) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        base = cls()
        o = cp["opa"] if cp.has_section("opa") else {}
        _check_keys("opa", o, {"pump_parameter", "efficiency", "escape_efficiency",
                               "cavity_linewidth_mhz"})
        nominal = base.opa
        gamma = float(o.get("cavity_linewidth_mhz", nominal.cavity_hwhm / (2 * math.pi * 1e6)))
        opa = OpaParams.from_efficiency(
            float(o.get("pump_parameter", nominal.pump_parameter)),
            float(o.get("efficiency", nominal.efficiency)),
            cavity_hwhm=2 * math.pi * 1e6 * gamma,
            escape_efficiency=float(o.get("escape_efficiency", nominal.escape_efficiency)))
        a = cp["acquisition"] if cp.has_section("acquisition") else {}
        _check_keys("acquisition", a, {"sample_rate", "n_samples", "sweep_period",
                                       "phase_offset", "n_bands", "adc_bits"})
        d = base.acquisition
        bits = int(a.get("adc_bits", 0))
        acq = AcquisitionConfig(sample_rate=float(a.get("sample_rate", d.sample_rate)),
                                n_samples=int(a.get("n_samples", d.n_samples)),
                                sweep_period=float(a.get("sweep_period", d.sweep_period)),
                                phase_offset=float(a.get("phase_offset", d.phase_offset)),
                                n_bands=int(a.get("n_bands", d.n_bands)),
                                adc_bits=bits or None)
        tomo = _section(cp, "tomography", TomographySettings)
        ana = _section(cp, "analysis", AnalysisSettings)
        r = cp["run"] if cp.has_section("run") else {}
        _check_keys("run", r, {"seed", "output", "workers", "bands"})
        return cls(opa, acq, tomo, ana, seed=int(r.get("seed", base.seed)),
                   output=r.get("output", base.output), workers=int(r.get("workers", base.workers)),
                   bands=r.get("bands", base.bands))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    return cp


def _check_keys(section, mapping, allowed):
    extra = set(mapping) - allowed
    if extra:
        raise ValueError(f"unknown keys in [{section}]: {sorted(extra)}")


def _section(cp, name, kind):
    defaults = kind()
    if not cp.has_section(name):
        return defaults
    sec = cp[name]
    values = asdict(defaults)
    _check_keys(name, sec, set(values))
    kw = {}
    for key, default in values.items():
        if key not in sec:
            continue
        if isinstance(default, bool):
            kw[key] = sec.getboolean(key)
        else:
            kw[key] = type(default)(sec[key])
    return kind(**kw)
