"""Centralized weighted pressure matching (wPM) adaptive controller.

One processor sees every microphone and updates all L control filters
with the stochastic gradient of

    kappa * ||p_B - p_T||^2 + (1 - kappa) * ||p_D||^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _engine
from .dsp import SignalHistory, fir_dot
from .errors import ConfigError, DimensionError, NumericDivergenceError
from .metrics import DEFAULT_WINDOW, LearningCurve
from .plants import PlantSet


def filter_bank(L: int, K: int) -> np.ndarray:
    """All-zero ``(L, K)`` bank of control filters."""
    return np.zeros((L, K))


def check_bank(w, L: int | None = None, K: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or (L is not None and w.shape[0] != L) or (K is not None and w.shape[1] != K):
        raise DimensionError(f"filter bank shape {w.shape} does not match (L={L}, K={K})")
    if not np.all(np.isfinite(w)):
        raise NumericDivergenceError(-1, detail="non-finite filter bank")
    return w


def check_kappa(kappa: float) -> None:
    if not 0 < kappa < 1:
        raise ConfigError(f"kappa must lie in (0, 1), got {kappa}")


@dataclass(frozen=True)
class AlgoParams:
    """Weighting and step sizes.

    ``mu`` is the per-update step of the centralized (and efficient
    diffusion) rule; ``mu1 = mu * M`` is the step of the full diffusion
    form.  Use :meth:`for_network` to derive ``mu1``.
    """

    kappa: float
    mu: float
    mu1: float | None = None
    target_delay: int = 64

    def __post_init__(self):
        check_kappa(self.kappa)
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if self.mu1 is not None and not self.mu1 > 0:
            raise ConfigError("mu1 must be positive")
        if self.target_delay < 0:
            raise ConfigError("target_delay must be >= 0")

    @classmethod
    def for_network(cls, kappa: float, mu: float, M: int, target_delay: int = 64):
        return cls(kappa, mu, mu * M, target_delay)

    def validate(self, M: int) -> None:
        if self.mu1 is not None and not np.isclose(self.mu1, self.mu * M, rtol=1e-12):
            raise ConfigError(f"mu1={self.mu1} != mu*M={self.mu * M}")


@dataclass(frozen=True)
class TargetSpec:
    source: int = 0
    delay: int = 64

    def __post_init__(self):
        if self.source < 0 or self.delay < 0:
            raise ConfigError("target source and delay must be non-negative")


def target_pressure(x_history: SignalHistory, plants: PlantSet, spec: TargetSpec, m: int) -> float:
    """``p_T,m(n) = sum_j h_B[m, source, j] * x(n - delay - j)`` through the plant model."""
    if not 0 <= spec.source < plants.L:
        raise DimensionError(f"target loudspeaker {spec.source} out of range for L={plants.L}")
    if not 0 <= m < plants.M:
        raise DimensionError(f"microphone {m} out of range for M={plants.M}")
    need = spec.delay + plants.J
    window = x_history.window(need)[spec.delay:]
    return fir_dot(window, plants.bright[m, spec.source])


def instantaneous_cost(p_b, p_t, p_d, kappa: float) -> float:
    check_kappa(kappa)
    p_b, p_t, p_d = (np.asarray(v, dtype=np.float64) for v in (p_b, p_t, p_d))
    if p_b.shape != p_t.shape:
        raise DimensionError("p_B and p_T differ in length")
    e = p_b - p_t
    return float(kappa * (e @ e) + (1 - kappa) * (p_d @ p_d))


def centralized_step(w, refs_b, refs_d, errors_b, p_d, params: AlgoParams, iteration: int = -1):
    """One LMS update of every filter.

    ``refs_b[m, l]`` is the K-sample filtered reference of loudspeaker ``l``
    at bright microphone ``m`` (likewise ``refs_d``); ``errors_b`` is
    ``p_B - p_T`` per microphone.
    """
    w = np.asarray(w, dtype=np.float64)
    refs_b = np.asarray(refs_b, dtype=np.float64)
    refs_d = np.asarray(refs_d, dtype=np.float64)
    errors_b = np.asarray(errors_b, dtype=np.float64)
    p_d = np.asarray(p_d, dtype=np.float64)
    M = errors_b.size
    if refs_b.shape != (M,) + w.shape or refs_d.shape != refs_b.shape or p_d.shape != (M,):
        raise DimensionError(
            f"inconsistent shapes: w {w.shape}, refs {refs_b.shape}/{refs_d.shape}, "
            f"errors {errors_b.shape}, p_D {p_d.shape}"
        )
    grad = (params.kappa * np.tensordot(errors_b, refs_b, axes=1)
            + (1 - params.kappa) * np.tensordot(p_d, refs_d, axes=1))
    out = w - params.mu * grad
    if not np.all(np.isfinite(out)) or np.abs(out).max(initial=0.0) > _engine.DIVERGENCE_BOUND:
        raise NumericDivergenceError(iteration)
    return out


@dataclass
class ControllerRun:
    """Outcome of one simulated run.

    ``energy[n]`` holds ``(sum e^2, sum p_T^2, sum p_B^2, sum p_D^2)`` at
    iteration ``n``; ``trajectory`` is filled only when recording was asked.
    """

    curve: LearningCurve
    filters: np.ndarray
    energy: np.ndarray
    trajectory: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))


def run_centralized(x, plants: PlantSet, params: AlgoParams, K: int, *,
                    target: TargetSpec | None = None, estimate: PlantSet | None = None,
                    w0=None, sample_rate: float | None = None, window: int = DEFAULT_WINDOW,
                    record: bool = False, backend: str | None = None, meta=None) -> ControllerRun:
    """Per-sample centralized control over the input signal ``x``."""
    target = target or TargetSpec(0, params.target_delay)
    estimate = estimate if estimate is not None else plants
    w0 = filter_bank(plants.L, K) if w0 is None else check_bank(w0, plants.L, K)
    w, energy, traj = _engine.run_kernel(
        "centralized", x, w0, plants, estimate, target.source, target.delay,
        params.kappa, params.mu, record=record, backend=backend,
    )
    fs = sample_rate or plants.sample_rate
    info = {"variant": "centralized", "kappa": params.kappa, "mu": params.mu}
    info.update(meta or {})
    curve = LearningCurve.from_energy(energy, fs, window, info)
    return ControllerRun(curve, w, energy, traj)
