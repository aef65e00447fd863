"""Sample-level signal plumbing: delay lines, FIR inner products,
shifted-history matrices, filtered references and the band-limited
noise source.

Conventions
-----------
Windows are *newest first*: ``window[k] == x(n - k)``.  Tap vectors are
in causal order: ``taps[k]`` multiplies ``x(n - k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError


def as_taps(coeffs, name="taps") -> np.ndarray:
    """Validate and return a 1-D float64 tap vector."""
    taps = np.asarray(coeffs, dtype=np.float64)
    if taps.ndim != 1 or taps.size == 0:
        raise DimensionError(f"{name} must be a non-empty 1-D sequence, got shape {taps.shape}")
    if not np.all(np.isfinite(taps)):
        raise DimensionError(f"{name} contains non-finite coefficients")
    return taps


class SignalHistory:
    """Most-recent-first delay line with zero initial conditions.

    Backed by a doubled ring buffer so any window up to ``capacity`` is a
    contiguous view; no copying on push.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise DimensionError("capacity must be >= 1")
        self.capacity = int(capacity)
        self._buf = np.zeros(2 * self.capacity)
        self._pos = 0
        self.count = 0

    @classmethod
    def for_dims(cls, K: int, J: int) -> "SignalHistory":
        """History long enough for a J x K history matrix and a K-window."""
        return cls(max(K, J) + J - 1)

    def push(self, sample: float) -> None:
        self._pos = (self._pos - 1) % self.capacity
        self._buf[self._pos] = sample
        self._buf[self._pos + self.capacity] = sample
        self.count += 1

    def extend(self, samples) -> None:
        for s in samples:
            self.push(float(s))

    def window(self, n: int) -> np.ndarray:
        """Return ``[x(t), x(t-1), ..., x(t-n+1)]`` as a read-only view."""
        if n < 0 or n > self.capacity:
            raise DimensionError(f"window of {n} exceeds history capacity {self.capacity}")
        view = self._buf[self._pos:self._pos + n]
        view.flags.writeable = False
        return view

    def __len__(self):
        return self.capacity


def fir_dot(window, taps, counter=None) -> float:
    """Inner product ``sum_k window[k] * taps[k]``."""
    window = np.asarray(window, dtype=np.float64)
    taps = np.asarray(taps, dtype=np.float64)
    if window.shape != taps.shape or window.ndim != 1:
        raise DimensionError(f"window {window.shape} and taps {taps.shape} differ in length")
    if counter is not None:
        counter.mults += taps.size
    return float(window @ taps)


def history_matrix(history: SignalHistory, J: int, K: int) -> np.ndarray:
    """J x K matrix with entry ``(j, k) == x(n - j - k)``.

    Row ``j`` is the K-window delayed by ``j`` samples; the result is a
    strided view over the history buffer, so it must not be kept across
    pushes.
    """
    if J < 1 or K < 1:
        raise DimensionError("J and K must be positive")
    if history.capacity < J + K - 1:
        raise DimensionError(
            f"history capacity {history.capacity} < J + K - 1 = {J + K - 1}"
        )
    flat = history.window(J + K - 1)
    return np.lib.stride_tricks.sliding_window_view(flat, K)[:J]


def filtered_reference(X, h, counter=None) -> np.ndarray:
    """Return ``h^T X``: component ``k`` is ``sum_j h[j] * X[j, k]``."""
    X = np.asarray(X, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if X.ndim != 2 or h.ndim != 1 or X.shape[0] != h.size:
        raise DimensionError(f"plant length {h.shape} does not match history rows {X.shape}")
    if counter is not None:
        counter.mults += X.size
    return h @ X


@dataclass(frozen=True)
class NoiseSpec:
    sample_rate: float = 4000.0
    band_low: float = 100.0
    band_high: float = 1000.0
    seed: int = 0
    filter_order: int = 255

    def validate(self) -> None:
        if not (0 < self.band_low < self.band_high < self.sample_rate / 2):
            raise ConfigError(
                f"need 0 < band_low < band_high < fs/2, got "
                f"{self.band_low}, {self.band_high}, fs={self.sample_rate}"
            )
        if self.filter_order < 3:
            raise ConfigError("filter_order must be at least 3 taps")


def bandpass_taps(spec: NoiseSpec) -> np.ndarray:
    """Windowed-sinc linear-phase band-pass FIR (Hamming window)."""
    spec.validate()
    n = np.arange(spec.filter_order) - (spec.filter_order - 1) / 2
    f1 = spec.band_low / spec.sample_rate
    f2 = spec.band_high / spec.sample_rate
    ideal = 2 * f2 * np.sinc(2 * f2 * n) - 2 * f1 * np.sinc(2 * f1 * n)
    return ideal * np.hamming(spec.filter_order)


def bandlimited_noise(spec: NoiseSpec, count: int) -> np.ndarray:
    """Band-pass filtered white Gaussian noise with unit sample variance.

    The white source is drawn with ``filter_order - 1`` extra samples so the
    ``valid`` convolution has no start-up transient.
    """
    spec.validate()
    if count < 0:
        raise ConfigError("count must be >= 0")
    if count == 0:
        return np.zeros(0)
    taps = bandpass_taps(spec)
    rng = np.random.default_rng(spec.seed)
    white = rng.standard_normal(count + taps.size - 1)
    out = np.convolve(white, taps, mode="valid")
    std = out.std()
    if std > 0:
        out = out / std
    return out
