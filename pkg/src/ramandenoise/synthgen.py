"""Synthetic Raman-like spectra, fluorescence baselines and calibrated white noise.

Every output is a pure function of ``(config, seed)``. Seeds for the parts of a
dataset pair are derived with :func:`derive_seed`, so a pair can be rebuilt
from the seed stored alongside it and serial/parallel builds agree exactly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import Dataset, Spectrum, SpectrumPair, as_array
from .errors import InvalidConfig, IoFailure, LengthMismatch, ZeroPowerSignal
from .metrics import snr_db

NO_NOISE = math.inf
SNR_MIN_DB, SNR_MAX_DB = 0.0, 80.0

SPLIT_KEYS = {"train": 0, "test": 1}
_CLEAN, _BASELINE, _NOISE = 0, 1, 2


@dataclass(frozen=True)
class PeakSpec:
    center: float
    width: float  # half width at half maximum, in samples
    amplitude: float
    shape: str = "lorentzian"

    def __post_init__(self):
        if self.width < 0.5:
            raise InvalidConfig(f"peak width {self.width} < 0.5")
        if self.amplitude <= 0:
            raise InvalidConfig("peak amplitude must be positive")
        if self.shape not in ("lorentzian", "gaussian"):
            raise InvalidConfig(f"unknown peak shape {self.shape!r}")

    def render(self, length: int) -> np.ndarray:
        u = (np.arange(length, dtype=np.float64) - self.center) / self.width
        if self.shape == "lorentzian":
            return self.amplitude / (1.0 + u * u)
        return self.amplitude * np.exp(-math.log(2.0) * u * u)


@dataclass(frozen=True)
class NoiseRecord:
    sigma: float
    target_snr_db: float
    realized_snr_db: float


@dataclass(frozen=True)
class GeneratorConfig:
    length: int = 2051
    peak_count_range: tuple[int, int] = (3, 12)
    amplitude_range: tuple[float, float] = (100.0, 1000.0)
    width_range: tuple[float, float] = (2.0, 12.0)
    lorentzian_fraction: float = 0.75
    baseline_poly_degree: int = 2
    baseline_amp_range: tuple[float, float] = (200.0, 1500.0)
    hump_count_range: tuple[int, int] = (1, 3)
    snr_grid_db: tuple[float, ...] = (9.5,)
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                object.__setattr__(self, f.name, tuple(v))
        self.validate()

    def validate(self) -> None:
        if self.length < 8:
            raise InvalidConfig(f"length {self.length} < 8")
        for name in ("peak_count_range", "amplitude_range", "width_range",
                     "baseline_amp_range", "hump_count_range"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise InvalidConfig(f"{name} must satisfy 0 <= min <= max, got {(lo, hi)}")
        if self.peak_count_range[1] > 0:
            if self.amplitude_range[0] <= 0:
                raise InvalidConfig("peak amplitudes must be positive")
            if self.width_range[0] < 0.5:
                raise InvalidConfig("peak widths must be >= 0.5 samples")
        if self.hump_count_range[1] > 3:
            raise InvalidConfig("at most 3 baseline humps")
        if not 0.0 <= self.lorentzian_fraction <= 1.0:
            raise InvalidConfig("lorentzian_fraction must lie in [0, 1]")
        if self.baseline_poly_degree < 0:
            raise InvalidConfig("baseline_poly_degree must be >= 0")
        if not self.snr_grid_db:
            raise InvalidConfig("snr_grid_db is empty")
        for t in self.snr_grid_db:
            if not SNR_MIN_DB <= t <= SNR_MAX_DB:
                raise InvalidConfig(f"SNR grid value {t} outside [0, 80] dB")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "GeneratorConfig":
        d = asdict(self)
        d.update(changes)
        return GeneratorConfig(**d)

    # plain-text key/value form; also valid TOML
    def to_text(self) -> str:
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name} = {_render_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()

    @classmethod
    def from_text(cls, text: str) -> "GeneratorConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfig(f"cannot parse config: {exc}") from exc
        known = {f.name: f for f in fields(cls)}
        unknown = set(raw) - set(known)
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in raw.items():
            if isinstance(value, list):
                value = tuple(value)
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "GeneratorConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(str(exc)) from exc
        return cls.from_text(text)


def _render_value(v) -> str:
    if isinstance(v, tuple):
        return "[" + ", ".join(_render_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed from a tuple of non-negative integers."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_peaks(cfg: GeneratorConfig, rng: np.random.Generator) -> list[PeakSpec]:
    lo, hi = cfg.peak_count_range
    count = int(rng.integers(lo, hi + 1))
    peaks = []
    for _ in range(count):
        center = float(rng.uniform(0.0, cfg.length))
        width = float(rng.uniform(*cfg.width_range))
        amp = float(rng.uniform(*cfg.amplitude_range))
        shape = "lorentzian" if rng.random() < cfg.lorentzian_fraction else "gaussian"
        peaks.append(PeakSpec(center, width, amp, shape))
    return peaks


def render_peaks(peaks: Sequence[PeakSpec], length: int) -> np.ndarray:
    out = np.zeros(length)
    for p in peaks:
        out += p.render(length)
    return out


def gen_clean_spectrum(cfg: GeneratorConfig, seed: int) -> Spectrum:
    return Spectrum(render_peaks(sample_peaks(cfg, _rng(seed)), cfg.length))


def gen_baseline(cfg: GeneratorConfig, seed: int) -> Spectrum:
    """Non-negative low-degree polynomial plus broad gaussian humps.

    The polynomial has non-negative coefficients in a unit coordinate, is
    normalised to a maximum of 1 and scaled by a drawn amplitude. Humps have a
    standard deviation of at least ``length / 8`` samples.
    """
    rng = _rng(seed)
    n = cfg.length
    amp = float(rng.uniform(*cfg.baseline_amp_range))
    coeffs = rng.uniform(0.0, 1.0, cfg.baseline_poly_degree + 1)
    u = np.linspace(0.0, 1.0, n)
    if rng.random() < 0.5:
        u = u[::-1]
    poly = np.polynomial.polynomial.polyval(u, coeffs)
    peak = poly.max()
    b = amp * poly / peak if peak > 0 else np.zeros(n)

    lo, hi = cfg.hump_count_range
    idx = np.arange(n, dtype=np.float64)
    for _ in range(int(rng.integers(lo, hi + 1))):
        center = rng.uniform(0.0, n)
        width = rng.uniform(n / 8.0, n / 4.0)
        height = amp * rng.uniform(0.2, 1.0)
        b = b + height * np.exp(-0.5 * ((idx - center) / width) ** 2)
    return Spectrum(b)


def noise_sigma(signal_power: float, target_snr_db: float) -> float:
    if math.isinf(target_snr_db) and target_snr_db > 0:
        return 0.0
    return math.sqrt(signal_power / 10.0 ** (target_snr_db / 10.0))


def _check_target(target_snr_db: float) -> None:
    if target_snr_db == NO_NOISE:
        return
    if not SNR_MIN_DB <= target_snr_db <= SNR_MAX_DB:
        raise InvalidConfig(f"target SNR {target_snr_db} dB outside [0, 80]")


def add_awgn(s, target_snr_db: float, seed: int) -> tuple[Spectrum, NoiseRecord]:
    """Add white gaussian noise scaled so that ``snr_db(s, out)`` is ``target_snr_db`` in expectation.

    ``target_snr_db = NO_NOISE`` returns an unchanged copy with ``sigma = 0``.
    """
    _check_target(target_snr_db)
    x = as_array(s)
    ps = float(np.mean(x**2))
    if ps <= 0.0:
        raise ZeroPowerSignal("cannot calibrate noise against a zero-power signal")
    sigma = noise_sigma(ps, target_snr_db)
    noisy = x + sigma * _rng(seed).standard_normal(x.size) if sigma > 0 else x.copy()
    out = s.with_values(noisy) if isinstance(s, Spectrum) else Spectrum(noisy)
    return out, NoiseRecord(sigma, float(target_snr_db), snr_db(x, noisy))


def compose_noisy(clean: Spectrum, baseline: Spectrum, target_snr_db: float, seed: int,
                  pair_id: str = "pair") -> SpectrumPair:
    """noisy = clean + baseline + AWGN, with the noise level set by the clean spectrum alone."""
    if clean.length != baseline.length:
        raise LengthMismatch(f"clean length {clean.length} != baseline length {baseline.length}")
    with_noise, rec = add_awgn(clean, target_snr_db, seed)
    noisy = clean.with_values(with_noise.intensities + baseline.intensities)
    return SpectrumPair(
        id=pair_id,
        clean=clean,
        noisy=noisy,
        target_snr_db=rec.target_snr_db,
        realized_snr_db=rec.realized_snr_db,
        seed=int(seed),
    )


def make_pair(cfg: GeneratorConfig, pair_seed: int, target_snr_db: float, pair_id: str) -> SpectrumPair:
    """Rebuild one dataset pair from its stored seed."""
    clean = gen_clean_spectrum(cfg, derive_seed(pair_seed, _CLEAN))
    baseline = gen_baseline(cfg, derive_seed(pair_seed, _BASELINE))
    pair = compose_noisy(clean, baseline, target_snr_db, derive_seed(pair_seed, _NOISE), pair_id)
    return SpectrumPair(pair.id, pair.clean, pair.noisy, pair.target_snr_db,
                        pair.realized_snr_db, pair_seed)


def build_split(cfg: GeneratorConfig, split: str, n: int) -> Dataset:
    if n < 0:
        raise InvalidConfig("pair count must be non-negative")
    key = SPLIT_KEYS[split]
    grid = cfg.snr_grid_db
    pairs = []
    for i in range(n):
        pair_seed = derive_seed(cfg.seed, key, i)
        pairs.append(make_pair(cfg, pair_seed, grid[i % len(grid)], f"{split}-{i:06d}"))
    return Dataset(tuple(pairs), split, cfg.digest())


def build_dataset(cfg: GeneratorConfig, n_train: int, n_test: int) -> tuple[Dataset, Dataset]:
    if n_train <= 0 or n_test <= 0:
        raise InvalidConfig("n_train and n_test must be positive")
    return build_split(cfg, "train", n_train), build_split(cfg, "test", n_test)
