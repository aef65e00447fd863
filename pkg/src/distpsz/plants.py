"""Acoustic plant FIRs: file I/O, synthetic room responses, propagation.

Plant arrays are stored as ``(M, L, J)``: ``bright[m, l]`` is the response
from loudspeaker ``l`` to bright-zone microphone ``m``.  All indices are
zero-based, including in plant file names.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import SignalHistory, fir_dot
from .errors import ConfigError, DataError, DimensionError, PlantFileNotFound

log = logging.getLogger(__name__)

ZONES = ("bright", "dark")
META_NAME = "plantset.meta"


@dataclass(frozen=True)
class PlantSet:
    bright: np.ndarray
    dark: np.ndarray
    sample_rate: float = 4000.0

    def __post_init__(self):
        b = np.ascontiguousarray(self.bright, dtype=np.float64)
        d = np.ascontiguousarray(self.dark, dtype=np.float64)
        if b.ndim != 3 or b.shape != d.shape:
            raise DimensionError(f"bright {b.shape} and dark {d.shape} must share shape (M, L, J)")
        if min(b.shape) < 1:
            raise DimensionError(f"empty plant set {b.shape}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(d))):
            raise DataError("plant set contains non-finite coefficients")
        b.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "bright", b)
        object.__setattr__(self, "dark", d)

    @property
    def M(self) -> int:
        return self.bright.shape[0]

    @property
    def L(self) -> int:
        return self.bright.shape[1]

    @property
    def J(self) -> int:
        return self.bright.shape[2]

    def zone(self, zone: str) -> np.ndarray:
        if zone == "bright":
            return self.bright
        if zone == "dark":
            return self.dark
        raise ConfigError(f"unknown zone {zone!r}")


# The controller's plant model has the same shape as the true plants.
PlantEstimate = PlantSet


@dataclass(frozen=True)
class SynthRirSpec:
    """Synthetic room response generator settings.

    ``gain`` scales every response (bright and dark) and ``tail_scale`` is
    the standard deviation of the reverberant tail at tap 0 of the decay
    envelope.  Loudspeakers and microphones sit on a ring; each hop of ring
    distance between them scales the response by ``ring_coupling``
    (``1.0`` disables the geometry).
    """

    J: int = 128
    direct_delay_range: tuple = (4, 24)
    decay_rate: float = 0.95
    dark_attenuation: float = 0.6
    seed: int = 0
    gain: float = 0.1
    tail_scale: float = 0.3
    ring_coupling: float = 0.5

    def validate(self) -> None:
        lo, hi = self.direct_delay_range
        if self.J < 1:
            raise ConfigError("J must be >= 1")
        if not (0 <= lo <= hi < self.J):
            raise ConfigError(f"direct_delay_range {self.direct_delay_range} must lie in [0, J)")
        if not (0 < self.decay_rate < 1):
            raise ConfigError("decay_rate must be in (0, 1)")
        if not (0 <= self.dark_attenuation < 1):
            raise ConfigError("dark_attenuation must be a linear gain below 1")
        if self.gain <= 0 or self.tail_scale < 0:
            raise ConfigError("gain must be positive and tail_scale non-negative")
        if not 0 < self.ring_coupling <= 1:
            raise ConfigError("ring_coupling must be in (0, 1]")


def ring_distance(m: int, l: int, n: int) -> int:
    d = abs(m - l) % n
    return min(d, n - d)


def _synth_one(rng, spec: SynthRirSpec) -> np.ndarray:
    lo, hi = spec.direct_delay_range
    delay = int(rng.integers(lo, hi + 1))
    draws = rng.standard_normal(spec.J)
    j = np.arange(spec.J)
    h = spec.tail_scale * spec.decay_rate ** j * draws
    h[: delay + 1] = 0.0
    h[delay] = 1.0
    return spec.gain * h


def synth_plant_set(spec: SynthRirSpec, L: int, M: int, sample_rate: float = 4000.0) -> PlantSet:
    """Random direct path plus exponentially decaying Gaussian tail per pair."""
    spec.validate()
    if L < 1 or M < 1:
        raise ConfigError("L and M must be >= 1")
    rng = np.random.default_rng(spec.seed)
    ring_size = max(L, M)
    bright = np.empty((M, L, spec.J))
    dark = np.empty((M, L, spec.J))
    for zone, scale in ((bright, 1.0), (dark, spec.dark_attenuation)):
        for m in range(M):
            for l in range(L):
                hops = ring_distance(m, l, ring_size)
                zone[m, l] = scale * spec.ring_coupling ** hops * _synth_one(rng, spec)
    return PlantSet(bright, dark, sample_rate)


def perturb_plants(plants: PlantSet, level_db: float, seed: int = 0) -> PlantSet:
    """Plant estimate with additive Gaussian error ``level_db`` below each response.

    The error power of every response is ``10**(-level_db/10)`` times the
    power of that response.
    """
    rng = np.random.default_rng(seed)
    scale = 10.0 ** (-level_db / 20.0)

    def noisy(h):
        rms = np.sqrt(np.mean(h ** 2, axis=-1, keepdims=True))
        return h + scale * rms * rng.standard_normal(h.shape)

    return PlantSet(noisy(plants.bright), noisy(plants.dark), plants.sample_rate)


def _plant_path(directory: Path, zone: str, l: int, m: int) -> Path:
    return directory / f"{zone}_{l}_{m}.f64"


def save_plant_set(plants: PlantSet, path) -> None:
    """Write one raw little-endian float64 file per (zone, l, m) plus metadata."""
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    for zone in ZONES:
        arr = plants.zone(zone)
        for m in range(plants.M):
            for l in range(plants.L):
                arr[m, l].astype("<f8").tofile(_plant_path(directory, zone, l, m))
    meta = f"L={plants.L}\nM={plants.M}\nJ={plants.J}\nsample_rate={plants.sample_rate!r}\n"
    (directory / META_NAME).write_text(meta)


def read_meta(path) -> dict:
    meta = {}
    text = (Path(path) / META_NAME).read_text()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    return meta


def load_plant_set(path, L: int, M: int, J: int) -> PlantSet:
    """Load plant files, truncating or zero-padding every response to J taps."""
    directory = Path(path)
    sample_rate = 4000.0
    if (directory / META_NAME).exists():
        sample_rate = float(read_meta(directory).get("sample_rate", sample_rate))
    out = {zone: np.zeros((M, L, J)) for zone in ZONES}
    truncated = 0
    for zone in ZONES:
        for m in range(M):
            for l in range(L):
                fp = _plant_path(directory, zone, l, m)
                if not fp.is_file():
                    raise PlantFileNotFound(zone, l, m, os.fspath(fp))
                taps = np.fromfile(fp, dtype="<f8")
                if not np.all(np.isfinite(taps)):
                    raise DataError(f"non-finite coefficient in {fp}")
                if taps.size > J:
                    truncated += 1
                n = min(J, taps.size)
                out[zone][m, l, :n] = taps[:n]
    if truncated:
        log.warning("truncated %d plant responses to %d taps", truncated, J)
    return PlantSet(out["bright"], out["dark"], sample_rate)


def propagate(u_histories, plants: PlantSet, zone: str, m: int) -> float:
    """Pressure at microphone ``m`` of ``zone``: ``sum_l h_{zone,ml}^T u_l(n)``."""
    h = plants.zone(zone)
    if not 0 <= m < plants.M:
        raise DimensionError(f"microphone index {m} out of range for M={plants.M}")
    if len(u_histories) != plants.L:
        raise DimensionError(f"{len(u_histories)} loudspeaker histories for L={plants.L}")
    total = 0.0
    for l, hist in enumerate(u_histories):
        window = hist.window(plants.J) if isinstance(hist, SignalHistory) else hist
        total += fir_dot(window, h[m, l])
    return total
