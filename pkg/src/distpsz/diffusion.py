"""Adapt-then-combine diffusion controllers.

Two variants share one node model (one loudspeaker, one bright and one
dark microphone per node, so M == L):

``full``
    Every node adapts the whole filter bank from its own microphones with
    step ``mu1 = mu * M``; the bank is then averaged uniformly over all
    nodes.  Algebraically identical to the centralized update.
``efficient``
    Node ``m`` only adapts the filters of its neighbourhood ``N_m`` with
    step ``mu``; each filter ``l`` is fused from the estimates of the nodes
    in ``N_l`` with weights ``alpha_{ml}`` and pushed back to them.

:func:`run_distributed` uses the compiled kernel by default.  With
``engine="nodes"`` it instead runs :class:`NodeNetwork`, an explicit
per-node simulation with message passing, operation counters and optional
thread-parallel adaptation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _engine
from .centralized import (
    AlgoParams,
    ControllerRun,
    TargetSpec,
    check_bank,
    filter_bank,
    target_pressure,
)
from .dsp import SignalHistory, filtered_reference, fir_dot, history_matrix
from .errors import ConfigError, DimensionError, NumericDivergenceError, ProtocolError
from .metrics import (
    DEFAULT_WINDOW,
    ComplexityReport,
    LearningCurve,
    OpCounter,
    predicted_comm,
    predicted_mults,
)
from .plants import PlantSet, propagate
from .topology import Topology, full

VARIANTS = ("full", "efficient")


def local_gradient_full(refs_b, refs_d, e_b: float, p_d: float, kappa: float) -> np.ndarray:
    """``v_m = kappa * R_B,m * e_B + (1 - kappa) * R_D,m * p_D`` for one node."""
    refs_b = np.asarray(refs_b, dtype=np.float64)
    refs_d = np.asarray(refs_d, dtype=np.float64)
    if refs_b.shape != refs_d.shape or refs_b.ndim != 2:
        raise DimensionError(f"reference blocks {refs_b.shape} and {refs_d.shape} differ")
    return kappa * e_b * refs_b + (1 - kappa) * p_d * refs_d


def atc_adapt_full(w, v, mu1: float, iteration: int = -1, node: int | None = None) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if w.shape != v.shape:
        raise DimensionError(f"filter bank {w.shape} and gradient {v.shape} differ")
    phi = w - mu1 * v
    if not np.all(np.isfinite(phi)):
        raise NumericDivergenceError(iteration, node)
    return phi


def atc_combine_full(estimates) -> np.ndarray:
    """Uniform average of the nodes' full-bank estimates."""
    estimates = [np.asarray(e, dtype=np.float64) for e in estimates]
    if not estimates:
        raise DimensionError("no estimates to combine")
    shape = estimates[0].shape
    if any(e.shape != shape for e in estimates):
        raise DimensionError("estimates differ in shape")
    total = np.zeros(shape)
    for e in estimates:
        total += e
    return total / len(estimates)


@dataclass
class NodeState:
    """Node ``node``'s copies of the filters in its neighbourhood.

    ``w_hat[i]`` is the filter of node ``neighbors[i]`` (ascending order).
    """

    node: int
    neighbors: tuple
    w_hat: np.ndarray

    def block(self, l: int) -> np.ndarray:
        try:
            return self.w_hat[self.neighbors.index(l)]
        except ValueError:
            raise DimensionError(f"node {self.node} holds no copy of filter {l}") from None


def init_states(topology: Topology, w) -> list:
    w = np.asarray(w, dtype=np.float64)
    return [NodeState(m, nb, w[list(nb)].copy()) for m, nb in enumerate(topology.neighbors)]


def atc_adapt_neighbor(state: NodeState, refs_b, refs_d, e_b: float, p_d: float,
                       kappa: float, mu: float) -> dict:
    """Adapt the neighbourhood filters of one node.

    ``refs_b[i]`` is the filtered reference of loudspeaker
    ``state.neighbors[i]`` at this node's bright microphone.  Returns the
    estimates keyed by filter index.
    """
    refs_b = np.asarray(refs_b, dtype=np.float64)
    refs_d = np.asarray(refs_d, dtype=np.float64)
    if refs_b.shape != state.w_hat.shape or refs_d.shape != state.w_hat.shape:
        raise DimensionError(
            f"node {state.node}: references {refs_b.shape} do not cover its "
            f"{len(state.neighbors)} neighbour filters"
        )
    v_hat = local_gradient_full(refs_b, refs_d, e_b, p_d, kappa)
    phi = state.w_hat - mu * v_hat
    return {l: phi[i] for i, l in enumerate(state.neighbors)}


def atc_combine_neighbor(topology: Topology, estimates, states=None):
    """Fuse every filter from its neighbours' estimates.

    ``estimates[m][l]`` is node ``m``'s estimate of filter ``l``.  Returns
    the fused filters as an ``(L, K)`` array; when ``states`` is given each
    node's copies are overwritten with the fused values.
    """
    fused = []
    for l, nb in enumerate(topology.neighbors):
        acc = None
        for m in nb:
            try:
                est = estimates[m][l]
            except (KeyError, IndexError):
                raise ProtocolError(m, l) from None
            term = topology.alpha[(m, l)] * np.asarray(est, dtype=np.float64)
            acc = term if acc is None else acc + term
        fused.append(acc)
    fused = np.array(fused)
    if states is not None:
        for st in states:
            st.w_hat[:] = fused[list(st.neighbors)]
    return fused


# -- instrumented node-level simulation --------------------------------------

class _Acoustics:
    """The physical side: loudspeaker delay lines and true plant propagation."""

    def __init__(self, plants: PlantSet, estimate: PlantSet, target: TargetSpec, K: int):
        J = plants.J
        self.plants = plants
        self.estimate = estimate
        self.target = target
        self.K = K
        self.x = SignalHistory(max(K + J - 1, target.delay + J, K))
        self.u = [SignalHistory(J) for _ in range(plants.L)]

    def step(self, sample: float, filters) -> tuple:
        self.x.push(sample)
        xw = self.x.window(self.K)
        for l, hist in enumerate(self.u):
            hist.push(fir_dot(xw, filters[l]))
        M = self.plants.M
        p_b = np.array([propagate(self.u, self.plants, "bright", m) for m in range(M)])
        p_d = np.array([propagate(self.u, self.plants, "dark", m) for m in range(M)])
        p_t = np.array([target_pressure(self.x, self.estimate, self.target, m) for m in range(M)])
        return p_b, p_t, p_d


class NodeProcessor:
    """One node's local processor.

    The step size is folded into the two weighting constants at setup, so
    each adaptation costs one multiply per zone for the error scaling, J*K
    per filtered reference and K per scaled reference.
    """

    def __init__(self, m: int, blocks, estimate: PlantSet, kappa: float, step: float, K: int):
        self.m = m
        self.blocks = tuple(blocks)
        self.hb = estimate.bright[m, list(self.blocks)]
        self.hd = estimate.dark[m, list(self.blocks)]
        self.kb = step * kappa
        self.kd = step * (1.0 - kappa)
        self.K = K
        self.J = estimate.J
        self.counter = OpCounter()

    def adapt(self, X, w_blocks, p_b: float, p_t: float, p_d: float) -> dict:
        c = self.counter
        cb = self.kb * (p_b - p_t)
        cd = self.kd * p_d
        c.mults += 2
        out = {}
        for i, l in enumerate(self.blocks):
            rb = filtered_reference(X, self.hb[i], c)
            rd = filtered_reference(X, self.hd[i], c)
            c.mults += 2 * self.K
            out[l] = w_blocks[i] - (cb * rb + cd * rd)
        return out


class NodeNetwork:
    """Bulk-synchronous simulation of ``L`` node processors.

    Each iteration: the acoustics advance one sample, every node adapts
    from its own microphones (optionally in a thread pool), a barrier, the
    combine exchange, a barrier.  Results do not depend on ``workers``.
    """

    def __init__(self, variant: str, plants: PlantSet, params: AlgoParams, topology: Topology,
                 K: int, *, target: TargetSpec | None = None, estimate: PlantSet | None = None,
                 w0=None, workers: int = 1):
        if variant not in VARIANTS:
            raise ConfigError(f"unknown diffusion variant {variant!r}")
        if plants.M != plants.L:
            raise ConfigError(f"distributed control needs M == L, got M={plants.M}, L={plants.L}")
        if topology.L != plants.L:
            raise ConfigError(f"topology has {topology.L} nodes for L={plants.L}")
        self.variant = variant
        self.plants = plants
        self.estimate = estimate if estimate is not None else plants
        self.params = params
        self.topology = topology if variant == "efficient" else full(plants.L)
        self.target = target or TargetSpec(0, params.target_delay)
        self.K = K
        self.L = plants.L
        self.workers = max(1, int(workers))
        w0 = filter_bank(self.L, K) if w0 is None else check_bank(w0, self.L, K)
        if variant == "full":
            step = params.mu1 if params.mu1 is not None else params.mu * plants.M
            self.copies = [w0.copy() for _ in range(self.L)]
        else:
            step = params.mu
            self.states = init_states(self.topology, w0)
        self.nodes = [
            NodeProcessor(m, self.topology.neighbors[m], self.estimate, params.kappa, step, K)
            for m in range(self.L)
        ]
        self.net = OpCounter()
        self.acoustics = _Acoustics(plants, self.estimate, self.target, K)
        self.iterations = 0

    def filters(self) -> np.ndarray:
        """The filters actually driving the loudspeakers (each node's own copy)."""
        if self.variant == "full":
            return np.array([self.copies[l][l] for l in range(self.L)])
        return np.array([st.block(st.node) for st in self.states])

    def _local_blocks(self, m: int):
        if self.variant == "full":
            return self.copies[m]
        return self.states[m].w_hat

    def step(self, sample: float) -> np.ndarray:
        """Advance one sample; returns that sample's energy row."""
        n = self.iterations
        p_b, p_t, p_d = self.acoustics.step(sample, self.filters())
        X = history_matrix(self.acoustics.x, self.plants.J, self.K).copy()

        def adapt(m):
            return self.nodes[m].adapt(X, self._local_blocks(m), p_b[m], p_t[m], p_d[m])

        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                estimates = list(pool.map(adapt, range(self.L)))
        else:
            estimates = [adapt(m) for m in range(self.L)]

        if self.variant == "full":
            self._combine_full(estimates)
        else:
            self._combine_efficient(estimates)

        w = self.filters()
        for l in range(self.L):
            if not np.all(np.isfinite(w[l])) or np.abs(w[l]).max() > _engine.DIVERGENCE_BOUND:
                raise NumericDivergenceError(n, l)
        self.iterations += 1
        e = p_b - p_t
        return np.array([e @ e, p_t @ p_t, p_b @ p_b, p_d @ p_d])

    def _combine_full(self, estimates):
        L = self.L
        for m in range(L):
            self.net.comm += estimates[m][0].size * L * (L - 1)
        bank = [np.array([estimates[m][l] for l in range(L)]) for m in range(L)]
        fused = atc_combine_full(bank)
        for m in range(L):
            self.copies[m] = fused.copy()

    def _combine_efficient(self, estimates):
        K = self.K
        inbox = {}
        for m, est in enumerate(estimates):
            for l, block in est.items():
                if l != m:
                    self.net.comm += K
                inbox.setdefault(m, {})[l] = block
        fused = atc_combine_neighbor(self.topology, inbox, self.states)
        for l in range(self.L):
            self.net.redistribution += K * (self.topology.size(l) - 1)
        return fused

    def run(self, x, record: bool = False):
        x = np.asarray(x, dtype=np.float64)
        energy = np.zeros((x.size, 4))
        traj = np.zeros((x.size if record else 0, self.L, self.K))
        for n, sample in enumerate(x):
            energy[n] = self.step(float(sample))
            if record:
                traj[n] = self.filters()
        return energy, traj

    def report(self) -> ComplexityReport:
        """Per-iteration counts averaged over the iterations run so far."""
        its = max(self.iterations, 1)
        measured = [nd.counter.mults // its for nd in self.nodes]
        return ComplexityReport(
            self.variant,
            predicted_node_mults(self.variant, self.plants.J, self.K, self.topology),
            predicted_comm(self.variant, self.K, self.L, self.topology),
            measured if self.iterations else [0] * self.L,
            self.net.comm // its,
            self.net.redistribution // its,
        )


def predicted_node_mults(variant: str, J: int, K: int, topology: Topology) -> list:
    if variant == "full":
        return [predicted_mults("full", J, K, topology.L)] * topology.L
    return [predicted_mults("efficient", J, K, topology.L, topology.size(m)) for m in range(topology.L)]


def measure_complexity(variant: str, plants: PlantSet, params: AlgoParams, topology: Topology,
                       K: int, target: TargetSpec | None = None) -> ComplexityReport:
    """Instrument one iteration of the node-level algorithm on random input."""
    net = NodeNetwork(variant, plants, params, topology, K, target=target)
    net.run(np.random.default_rng(0).standard_normal(1))
    return net.report()


def run_distributed(variant: str, x, plants: PlantSet, params: AlgoParams, topology: Topology,
                    K: int, *, target: TargetSpec | None = None, estimate: PlantSet | None = None,
                    w0=None, sample_rate: float | None = None, window: int = DEFAULT_WINDOW,
                    record: bool = False, engine: str = "fast", workers: int = 1,
                    backend: str | None = None, meta=None) -> ControllerRun:
    """Simulate a diffusion controller over the input ``x``.

    ``params.mu`` is the per-update step of the centralized form; the full
    variant adapts with ``mu1 = mu * M`` (``params.mu1`` when set) and the
    efficient variant with ``mu``.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown diffusion variant {variant!r}")
    if plants.M != plants.L:
        raise ConfigError(f"distributed control needs M == L, got M={plants.M}, L={plants.L}")
    if topology.L != plants.L:
        raise ConfigError(f"topology has {topology.L} nodes for L={plants.L}")
    params.validate(plants.M)
    target = target or TargetSpec(0, params.target_delay)
    estimate = estimate if estimate is not None else plants
    w0 = filter_bank(plants.L, K) if w0 is None else check_bank(w0, plants.L, K)
    step = (params.mu1 if params.mu1 is not None else params.mu * plants.M) if variant == "full" else params.mu
    if engine == "nodes":
        net = NodeNetwork(variant, plants, params, topology, K, target=target,
                          estimate=estimate, w0=w0, workers=workers)
        energy, traj = net.run(x, record)
        w = net.filters()
    elif engine == "fast":
        w, energy, traj = _engine.run_kernel(
            variant, x, w0, plants, estimate, target.source, target.delay,
            params.kappa, step, topology=topology if variant == "efficient" else None,
            record=record, backend=backend,
        )
    else:
        raise ConfigError(f"unknown engine {engine!r}")
    fs = sample_rate or plants.sample_rate
    info = {"variant": f"distributed-{variant}", "kappa": params.kappa, "mu": step}
    info.update(meta or {})
    return ControllerRun(LearningCurve.from_energy(energy, fs, window, info), w, energy, traj)
