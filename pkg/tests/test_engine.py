import os
import subprocess
import sys

import numpy as np
import pytest

from distpsz import _engine
from distpsz import topology as topo
from distpsz.dsp import NoiseSpec, bandlimited_noise

needs_compiled = pytest.mark.skipif("compiled" not in _engine.BACKENDS,
                                    reason="extension not built")


@needs_compiled
@pytest.mark.parametrize("mode,t", [("centralized", None), ("full", None),
                                    ("efficient", topo.ring(4)), ("efficient", topo.line(4))])
def test_backends_agree(small_plants, mode, t):
    x = bandlimited_noise(NoiseSpec(seed=4, filter_order=63), 500)
    w0 = np.zeros((4, 8))
    step = 0.04 if mode == "full" else 0.01
    outs = [_engine.run_kernel(mode, x, w0, small_plants, small_plants, 2, 7, 0.3, step,
                               topology=t, record=True, backend=b) for b in ("compiled", "python")]
    for a, b in zip(outs[0], outs[1]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_unknown_backend():
    with pytest.raises(ValueError):
        _engine.get_simulate("fortran")


def test_env_forces_fallback():
    env = dict(os.environ, DISTPSZ_BACKEND="python")
    code = "from distpsz import _engine; print(_engine.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"


def test_divergence_reports_partial_energy(small_plants):
    x = bandlimited_noise(NoiseSpec(seed=4, filter_order=63), 3000)
    with pytest.raises(_engine.NumericDivergenceError) as err:
        _engine.run_kernel("centralized", x, np.zeros((4, 8)), small_plants, small_plants,
                           0, 5, 0.5, 100.0)
    assert 0 <= err.value.iteration < 3000 and err.value.node is None
