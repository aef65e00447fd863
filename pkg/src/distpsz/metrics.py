"""Performance metrics and complexity/communication accounting.

MSE is the bright-zone reproduction error normalised by target power;
AC is the bright-to-dark energy ratio.  Both are computed over a trailing
window (partial at the start of a run) and reported in dB, clamped to
``+/-DB_LIMIT``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

DB_LIMIT = 200.0
DEFAULT_WINDOW = 400


@dataclass
class DbSeries:
    """dB values plus a mask of entries that hit the clamp for lack of energy."""

    db: np.ndarray
    clamped: np.ndarray

    def __getitem__(self, i):
        return self.db[i]


def trailing_sum(values, window: int) -> np.ndarray:
    """Sum of the last ``window`` samples at every index (zeros stay exact)."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise DataError("smoothing window must be >= 1")
    if values.size == 0:
        return values.copy()
    return np.convolve(values, np.ones(window))[: values.size]


def ratio_db(num, den, window: int = DEFAULT_WINDOW) -> DbSeries:
    """``10 log10`` of the trailing-window ratio of two energy series."""
    num = trailing_sum(num, window)
    den = trailing_sum(den, window)
    db = np.empty_like(num)
    clamped = den <= 0
    ok = ~clamped & (num > 0)
    db[ok] = 10.0 * np.log10(num[ok] / den[ok])
    db[~clamped & (num <= 0)] = -DB_LIMIT
    db[clamped & (num > 0)] = DB_LIMIT
    db[clamped & (num <= 0)] = -DB_LIMIT
    np.clip(db, -DB_LIMIT, DB_LIMIT, out=db)
    return DbSeries(db, clamped)


def _as_time_by_mic(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return p[None, :] if p.ndim == 1 else p


def mse_db(p_b, p_t, window: int = DEFAULT_WINDOW) -> DbSeries:
    """Normalised bright-zone error per sample; inputs are ``(time, M)`` or ``(M,)``."""
    p_b, p_t = _as_time_by_mic(p_b), _as_time_by_mic(p_t)
    if p_b.shape != p_t.shape:
        raise DataError(f"p_B {p_b.shape} and p_T {p_t.shape} differ")
    err = ((p_b - p_t) ** 2).sum(axis=1)
    return ratio_db(err, (p_t ** 2).sum(axis=1), window)


def ac_db(p_b, p_d, window: int = DEFAULT_WINDOW) -> DbSeries:
    """Bright-to-dark acoustic contrast per sample."""
    p_b, p_d = _as_time_by_mic(p_b), _as_time_by_mic(p_d)
    if p_b.shape != p_d.shape:
        raise DataError(f"p_B {p_b.shape} and p_D {p_d.shape} differ")
    return ratio_db((p_b ** 2).sum(axis=1), (p_d ** 2).sum(axis=1), window)


@dataclass
class LearningCurve:
    """Per-iteration MSE and AC in dB.

    ``mse_clamped``/``ac_clamped`` mark samples whose reference energy
    (target power, dark-zone power) was zero over the window, e.g. before
    the delayed target reaches the microphones.
    """

    iteration: np.ndarray
    time_s: np.ndarray
    mse_db: np.ndarray
    ac_db: np.ndarray
    meta: dict = field(default_factory=dict)
    mse_clamped: np.ndarray | None = None
    ac_clamped: np.ndarray | None = None

    def __len__(self):
        return self.iteration.size

    def valid_mse(self) -> np.ndarray:
        """MSE samples that were not clamped for lack of target power."""
        if self.mse_clamped is None:
            return self.mse_db
        return self.mse_db[~self.mse_clamped]

    @classmethod
    def empty(cls, meta=None) -> "LearningCurve":
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int64), z, z.copy(), z.copy(), dict(meta or {}))

    @classmethod
    def from_energy(cls, energy, sample_rate: float, window: int = DEFAULT_WINDOW, meta=None):
        """Build from per-sample ``(sum e^2, sum p_T^2, sum p_B^2, sum p_D^2)`` rows."""
        energy = np.asarray(energy, dtype=np.float64).reshape(-1, 4)
        n = energy.shape[0]
        it = np.arange(n, dtype=np.int64)
        mse = ratio_db(energy[:, 0], energy[:, 1], window)
        ac = ratio_db(energy[:, 2], energy[:, 3], window)
        return cls(it, it / float(sample_rate), mse.db, ac.db, dict(meta or {}),
                   mse.clamped, ac.clamped)


def steady_state(curve: LearningCurve, fraction: float = 0.2) -> tuple:
    """Mean ``(mse_db, ac_db)`` over the final ``fraction`` of the curve."""
    if len(curve) == 0:
        raise DataError("steady state of an empty curve")
    if not 0 < fraction <= 1:
        raise DataError("fraction must be in (0, 1]")
    count = max(1, int(round(fraction * len(curve))))
    return float(np.mean(curve.mse_db[-count:])), float(np.mean(curve.ac_db[-count:]))


# -- complexity accounting ---------------------------------------------------

def predicted_mults(variant: str, J: int, K: int, L: int, nbhd_size: int | None = None) -> int:
    """Multiplications per node per iteration of the adaptation step."""
    if variant == "full":
        blocks = L
    elif variant == "efficient":
        if nbhd_size is None:
            raise DataError("efficient variant needs the neighbourhood size")
        blocks = nbhd_size
    else:
        raise DataError(f"unknown variant {variant!r}")
    return 2 * ((J + 1) * K * blocks + 1)


def predicted_comm(variant: str, K: int, L: int, topology=None) -> int:
    """Scalars exchanged over the whole network per combine step."""
    if variant == "full":
        return K * L * L * (L - 1)
    if variant == "efficient":
        if topology is None:
            raise DataError("efficient variant needs a topology")
        return K * topology.comm_pairs()
    raise DataError(f"unknown variant {variant!r}")


@dataclass
class OpCounter:
    """Instrumentation counters bumped by the arithmetic they describe."""

    mults: int = 0
    comm: int = 0
    redistribution: int = 0

    def merge(self, other: "OpCounter") -> None:
        self.mults += other.mults
        self.comm += other.comm
        self.redistribution += other.redistribution


@dataclass
class ComplexityReport:
    """Per-iteration cost: closed-form predictions next to instrumented counts.

    Per-node lists are indexed by node; a centralized run reports a single
    processor.  ``measured_redistribution`` is the fused-filter broadcast
    of the efficient combine, which the closed form does not include.
    """

    variant: str
    mults_per_node_per_iter: list
    comm_scalars_per_iter_network: int
    measured_mults: list
    measured_comm: int
    measured_redistribution: int = 0

    @property
    def matches(self) -> bool:
        return (list(self.mults_per_node_per_iter) == list(self.measured_mults)
                and self.comm_scalars_per_iter_network == self.measured_comm)

    def to_text(self) -> str:
        def join(v):
            return ",".join(str(int(x)) for x in v)

        lines = [
            f"variant={self.variant}",
            f"mults_per_node_per_iter={join(self.mults_per_node_per_iter)}",
            f"comm_scalars_per_iter_network={self.comm_scalars_per_iter_network}",
            f"measured_mults={join(self.measured_mults)}",
            f"measured_comm={self.measured_comm}",
            f"measured_redistribution={self.measured_redistribution}",
            f"total_mults_per_iter={sum(int(x) for x in self.mults_per_node_per_iter)}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ComplexityReport":
        kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)

        def ints(s):
            return [int(x) for x in s.split(",") if x]

        return cls(
            kv["variant"],
            ints(kv["mults_per_node_per_iter"]),
            int(kv["comm_scalars_per_iter_network"]),
            ints(kv["measured_mults"]),
            int(kv["measured_comm"]),
            int(kv.get("measured_redistribution", 0)),
        )
