"""Simulation kernel backends.

The compiled kernel is used when it was built; otherwise the numpy
fallback is selected.  ``DISTPSZ_BACKEND=python`` forces the fallback.
"""

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

BACKENDS = {"python": _kernel_py.simulate}
if _kernel_c is not None:
    BACKENDS["compiled"] = _kernel_c.simulate

_requested = os.environ.get("DISTPSZ_BACKEND", "").strip().lower()
if _requested == "python" or _kernel_c is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

simulate = BACKENDS[BACKEND]


def get_simulate(name=None):
    """Return the kernel for ``name`` (default: the import-time selection)."""
    if name is None:
        return simulate
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


import numpy as np  # noqa: E402

from ..errors import DimensionError, NumericDivergenceError  # noqa: E402

MODES = {"centralized": 0, "full": 1, "efficient": 2}
DIVERGENCE_BOUND = 1e6


def run_kernel(mode, x, w0, plants, estimate, src, delay, kappa, step,
               topology=None, record=False, backend=None):
    """Validate inputs, run one kernel pass and surface divergence as an error.

    Returns ``(w, energy, traj)`` with ``energy`` and ``traj`` covering every
    completed iteration.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    w0 = np.ascontiguousarray(w0, dtype=np.float64)
    if w0.ndim != 2 or w0.shape[0] != plants.L:
        raise DimensionError(f"filter bank {w0.shape} does not match L={plants.L}")
    if estimate.bright.shape != plants.bright.shape:
        raise DimensionError("plant estimate shape differs from the true plants")
    if not 0 <= src < plants.L:
        raise DimensionError(f"target loudspeaker {src} out of range")
    if delay < 0:
        raise DimensionError("target delay must be >= 0")
    if topology is not None:
        ptr = np.zeros(topology.L + 1, dtype=np.intp)
        idx, alpha = [], []
        for l, nb in enumerate(topology.neighbors):
            idx.extend(nb)
            alpha.extend(topology.alpha[(m, l)] for m in nb)
            ptr[l + 1] = len(idx)
        idx = np.asarray(idx, dtype=np.intp)
        alpha = np.asarray(alpha, dtype=np.float64)
    else:
        ptr = np.zeros(1, dtype=np.intp)
        idx = np.zeros(0, dtype=np.intp)
        alpha = np.zeros(0)
    sim = get_simulate(backend)
    w, energy, traj, status, fail_iter, fail_node = sim(
        x, w0, plants.bright, plants.dark, estimate.bright, estimate.dark,
        int(src), int(delay), float(kappa), float(step), MODES[mode],
        ptr, idx, alpha, bool(record), DIVERGENCE_BOUND,
    )
    if status:
        node = None if mode == "centralized" else int(fail_node)
        raise NumericDivergenceError(int(fail_iter), node, "non-finite or |tap| > 1e6")
    return np.asarray(w), np.asarray(energy), np.asarray(traj)
