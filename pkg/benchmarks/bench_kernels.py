"""Compare the compiled simulation kernel with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--seconds 0.5] [--repeat 3]

Runs each controller mode on the eight-node preset dimensions and prints
samples per second for every available backend.
"""

import argparse
import time

import numpy as np

from distpsz import _engine
from distpsz import topology as topo
from distpsz.dsp import NoiseSpec, bandlimited_noise
from distpsz.plants import SynthRirSpec, synth_plant_set


def bench(backend, mode, x, plants, t, repeat):
    step = 0.06 if mode != "efficient" else 0.016
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        _engine.run_kernel(mode, x, np.zeros((plants.L, 128)), plants, plants, 0, 64, 0.5, step,
                           topology=t if mode == "efficient" else None, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return x.size / best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--seconds", type=float, default=0.5, help="simulated seconds per run")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    plants = synth_plant_set(SynthRirSpec(J=128), 8, 8)
    x = bandlimited_noise(NoiseSpec(), int(args.seconds * 4000))
    ring = topo.ring(8)
    print(f"{'mode':<12} {'backend':<9} {'samples/s':>12} {'speedup':>8}")
    for mode in ("centralized", "full", "efficient"):
        rates = {b: bench(b, mode, x, plants, ring, args.repeat) for b in sorted(_engine.BACKENDS)}
        base = rates["python"]
        for b, rate in rates.items():
            print(f"{mode:<12} {b:<9} {rate:12.0f} {rate / base:7.1f}x")


if __name__ == "__main__":
    main()
