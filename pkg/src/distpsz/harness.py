"""End-to-end runs: build inputs from a scenario, simulate, serialise."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .centralized import ControllerRun, run_centralized
from .diffusion import NodeNetwork, measure_complexity, predicted_node_mults, run_distributed
from .dsp import bandlimited_noise
from .errors import OutputError
from .metrics import ComplexityReport, LearningCurve, predicted_comm, predicted_mults, steady_state
from .plants import PlantSet, load_plant_set, perturb_plants, synth_plant_set
from .scenario import Scenario, format_scenario, with_value
from .topology import full

log = logging.getLogger(__name__)

CURVE_HEADER = ("iter", "time_s", "mse_db", "ac_db")


@dataclass
class RunResult:
    curve: LearningCurve
    complexity: ComplexityReport
    filters: np.ndarray
    scenario: Scenario

    @property
    def scenario_echo(self) -> str:
        return format_scenario(self.scenario)


def build_plants(sc: Scenario) -> tuple:
    """Return ``(true plants, controller's plant model)``."""
    if sc.plants_source == "path":
        plants = load_plant_set(sc.plants_path, sc.L, sc.M, sc.J)
    else:
        plants = synth_plant_set(sc.synth_spec(), sc.L, sc.M, sc.sample_rate)
    if sc.plants_estimate_error_db is None:
        return plants, plants
    return plants, perturb_plants(plants, sc.plants_estimate_error_db, sc.plants_seed + 1)


def _complexity(sc: Scenario, plants: PlantSet, net: NodeNetwork | None) -> ComplexityReport:
    params = sc.algo_params()
    if sc.variant == "centralized":
        # one processor doing every node's share of the full-variant work
        predicted = [sc.M * predicted_mults("full", sc.J, sc.K, sc.L)]
        if sc.iterations and sc.M == sc.L:
            probe = measure_complexity("full", plants, params, full(sc.L), sc.K, sc.target())
            measured = [sum(probe.measured_mults)]
        else:
            measured = [0]
        return ComplexityReport("centralized", predicted, 0, measured, 0)
    variant = sc.variant.split("-", 1)[1]
    topology = sc.build_topology() if variant == "efficient" else full(sc.L)
    if net is not None:
        return net.report()
    if sc.iterations == 0:
        return ComplexityReport(
            variant,
            predicted_node_mults(variant, sc.J, sc.K, topology),
            predicted_comm(variant, sc.K, sc.L, topology),
            [0] * sc.L, 0, 0,
        )
    return measure_complexity(variant, plants, params, topology, sc.K, sc.target())


def run(sc: Scenario, *, record: bool = False, backend: str | None = None) -> RunResult:
    """Simulate one scenario; deterministic given the scenario."""
    sc.validate()
    plants, estimate = build_plants(sc)
    x = bandlimited_noise(sc.noise_spec(), sc.iterations)
    params = sc.algo_params()
    meta = {"seed": sc.seed}
    common = dict(target=sc.target(), estimate=estimate, sample_rate=sc.sample_rate,
                  window=sc.metric_window, record=record, meta=meta)
    net = None
    if sc.variant == "centralized":
        out: ControllerRun = run_centralized(x, plants, params, sc.K, backend=backend, **common)
    else:
        variant = sc.variant.split("-", 1)[1]
        topology = sc.build_topology()
        if sc.engine == "nodes":
            net = NodeNetwork(variant, plants, params, topology, sc.K, target=sc.target(),
                              estimate=estimate, workers=sc.workers)
            energy, traj = net.run(x, record)
            info = {"variant": sc.variant, "kappa": sc.kappa,
                    "mu": params.mu1 if variant == "full" else params.mu, **meta}
            out = ControllerRun(
                LearningCurve.from_energy(energy, sc.sample_rate, sc.metric_window, info),
                net.filters(), energy, traj,
            )
        else:
            out = run_distributed(variant, x, plants, params, topology, sc.K,
                                  backend=backend, **common)
    report = _complexity(sc, plants, net)
    return RunResult(out.curve, report, np.asarray(out.filters), sc)


def write_curve(curve: LearningCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for i, t, mse, ac in zip(curve.iteration.tolist(), curve.time_s.tolist(),
                                 curve.mse_db.tolist(), curve.ac_db.tolist()):
            writer.writerow((i, repr(t), repr(mse), repr(ac)))


def read_curve(path) -> LearningCurve:
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    if not rows:
        return LearningCurve.empty()
    data = np.array(rows, dtype=np.float64)
    return LearningCurve(data[:, 0].astype(np.int64), data[:, 1], data[:, 2], data[:, 3])


def emit(result: RunResult, out_dir) -> dict:
    """Write ``curve.csv``, ``complexity.txt``, ``filters.f64`` and ``scenario.norm``."""
    out = Path(out_dir)
    paths = {
        "curve": out / "curve.csv",
        "complexity": out / "complexity.txt",
        "filters": out / "filters.f64",
        "scenario": out / "scenario.norm",
    }
    current = out
    try:
        out.mkdir(parents=True, exist_ok=True)
        current = paths["curve"]
        write_curve(result.curve, current)
        current = paths["complexity"]
        current.write_text(result.complexity.to_text())
        current = paths["filters"]
        np.ascontiguousarray(result.filters, dtype="<f8").tofile(current)
        current = paths["scenario"]
        current.write_text(result.scenario_echo)
    except OSError as exc:
        raise OutputError(f"cannot write {current}: {exc}") from exc
    return paths


def sweep(sc: Scenario, param: str, values, out_dir, *, jobs: int = 1,
          fraction: float = 0.2) -> list:
    """Run one scenario per value of ``param``; returns summary rows.

    Each entry is written to ``out_dir/<param>=<value>/`` and the summary
    (steady-state MSE/AC over the final ``fraction``) to ``summary.csv``.
    """
    entries = [(v, with_value(sc, param, v)) for v in values]
    out = Path(out_dir)

    def one(item):
        value, entry = item
        res = run(entry)
        emit(res, out / f"{param}={value}")
        if len(res.curve):
            mse, ac = steady_state(res.curve, fraction)
        else:
            mse, ac = float("nan"), float("nan")
        return (value, mse, ac)

    with ThreadPoolExecutor(max(1, jobs)) as pool:
        rows = list(pool.map(one, entries))
    try:
        with open(out / "summary.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow((param, "mse_db", "ac_db"))
            for value, mse, ac in rows:
                writer.writerow((value, repr(mse), repr(ac)))
    except OSError as exc:
        raise OutputError(f"cannot write sweep summary in {out}: {exc}") from exc
    return rows
