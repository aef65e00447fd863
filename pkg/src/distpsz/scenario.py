"""Scenario configuration: flat ``key=value`` text with dotted section prefixes.

Example::

    variant=distributed-efficient
    L=8
    kappa=0.5
    plants.source=synthetic
    noise.band_low=100.0

``format_scenario`` writes the normalised form (every key, fixed order,
``repr`` floats) so ``parse(format(parse(text)))`` is a fixed point.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

from . import topology as topo
from .centralized import AlgoParams, TargetSpec
from .dsp import NoiseSpec
from .errors import ConfigError
from .plants import SynthRirSpec

SCENARIO_VARIANTS = ("centralized", "distributed-full", "distributed-efficient")
ENGINES = ("fast", "nodes")

PRESET_KAPPAS = (0.2, 0.5, 0.8)
PRESET_STEP_SIZES = {
    "centralized": 0.06,
    "distributed-full": 0.06,
    "distributed-efficient": 0.016,
}


@dataclass
class Scenario:
    variant: str = "distributed-efficient"
    L: int = 8
    M: int = 8
    K: int = 128
    J: int = 128
    sample_rate: float = 4000.0
    duration: float = 60.0
    kappa: float = 0.5
    mu: float = 0.016
    seed: int = 0
    metric_window: int = 400
    engine: str = "fast"
    workers: int = 1
    topology: str = "ring"
    topology_edges: str = ""
    alpha: str = "normalized"
    plants_source: str = "synthetic"
    plants_path: str = ""
    plants_direct_delay_min: int = 4
    plants_direct_delay_max: int = 24
    plants_decay_rate: float = 0.95
    plants_dark_attenuation: float = 0.6
    plants_gain: float = 0.1
    plants_tail_scale: float = 0.3
    plants_ring_coupling: float = 0.5
    plants_seed: int = 0
    plants_estimate_error_db: float | None = None
    target_source: int = 0
    target_delay: int = 64
    noise_band_low: float = 100.0
    noise_band_high: float = 1000.0
    noise_filter_order: int = 255
    sweep_kappa: tuple = field(default_factory=tuple)

    @property
    def mu1(self) -> float:
        return self.mu * self.M

    @property
    def iterations(self) -> int:
        return int(round(self.duration * self.sample_rate))

    def validate(self) -> "Scenario":
        if self.variant not in SCENARIO_VARIANTS:
            raise ConfigError(f"variant must be one of {SCENARIO_VARIANTS}, got {self.variant!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}")
        for name in ("L", "M", "K", "J", "metric_window", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.variant != "centralized" and self.M != self.L:
            raise ConfigError(f"distributed variants need M == L, got M={self.M}, L={self.L}")
        if not 0 < self.kappa < 1:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if self.duration < 0:
            raise ConfigError("duration must be >= 0")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.plants_source not in ("synthetic", "path"):
            raise ConfigError("plants.source must be 'synthetic' or 'path'")
        if self.plants_source == "path" and not self.plants_path:
            raise ConfigError("plants.path is required when plants.source=path")
        if not 0 <= self.target_source < self.L:
            raise ConfigError(f"target.source {self.target_source} out of range")
        if self.alpha not in topo.ALPHA_POLICIES:
            raise ConfigError(f"alpha must be one of {topo.ALPHA_POLICIES}")
        self.build_topology()
        self.noise_spec().validate()
        if self.plants_source == "synthetic":
            self.synth_spec().validate()
        for k in self.sweep_kappa:
            if not 0 < k < 1:
                raise ConfigError(f"sweep kappa {k} outside (0, 1)")
        return self

    def build_topology(self) -> topo.Topology:
        if self.topology == "edges":
            return topo.from_edges(self.L, parse_edges(self.topology_edges), self.alpha)
        try:
            ctor = topo.NAMED[self.topology]
        except KeyError:
            raise ConfigError(f"unknown topology {self.topology!r}") from None
        return ctor(self.L, self.alpha)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(self.sample_rate, self.noise_band_low, self.noise_band_high,
                         self.seed, self.noise_filter_order)

    def synth_spec(self) -> SynthRirSpec:
        return SynthRirSpec(
            J=self.J,
            direct_delay_range=(self.plants_direct_delay_min, self.plants_direct_delay_max),
            decay_rate=self.plants_decay_rate,
            dark_attenuation=self.plants_dark_attenuation,
            seed=self.plants_seed,
            gain=self.plants_gain,
            tail_scale=self.plants_tail_scale,
            ring_coupling=self.plants_ring_coupling,
        )

    def algo_params(self) -> AlgoParams:
        return AlgoParams.for_network(self.kappa, self.mu, self.M, self.target_delay)

    def target(self) -> TargetSpec:
        return TargetSpec(self.target_source, self.target_delay)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


def parse_edges(text: str) -> list:
    edges = []
    for tok in text.replace(" ", "").split(","):
        if not tok:
            continue
        a, sep, b = tok.partition("-")
        if not sep:
            raise ConfigError(f"bad edge {tok!r}; expected 'a-b'")
        try:
            edges.append((int(a), int(b)))
        except ValueError:
            raise ConfigError(f"bad edge {tok!r}") from None
    return edges


def _key(name: str) -> str:
    for prefix in ("plants_", "target_", "noise_", "topology_", "sweep_"):
        if name.startswith(prefix):
            return prefix[:-1] + "." + name[len(prefix):]
    return name


_FIELDS = {_key(f.name): f for f in fields(Scenario)}
_DERIVED = ("mu1",)


def _convert(f, raw: str):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", "")
    try:
        if f.name == "sweep_kappa":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if f.name == "plants_estimate_error_db":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {_key(f.name)}: {raw!r}") from None


def parse_scenario(text: str) -> Scenario:
    values = {}
    derived = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        if key in _DERIVED:
            derived[key] = raw
            continue
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        f = _FIELDS[key]
        values[f.name] = _convert(f, raw)
    sc = Scenario(**values).validate()
    if "mu1" in derived:
        try:
            mu1 = float(derived["mu1"])
        except ValueError:
            raise ConfigError(f"bad value for mu1: {derived['mu1']!r}") from None
        if abs(mu1 - sc.mu1) > 1e-12 * abs(sc.mu1):
            raise ConfigError(f"mu1={mu1} inconsistent with mu*M={sc.mu1}")
    return sc


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_scenario(sc: Scenario) -> str:
    lines = []
    for f in fields(Scenario):
        lines.append(f"{_key(f.name)}={_fmt(getattr(sc, f.name))}")
        if f.name == "mu":
            lines.append(f"mu1={_fmt(sc.mu1)}")
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def paper_preset(variant: str = "distributed-efficient", kappa: float = 0.5) -> Scenario:
    """Eight nodes on a ring, 128-tap plants and filters at 4 kHz, 100-1000 Hz noise.

    Plants are synthetic because the measured responses are not bundled.
    """
    if variant not in SCENARIO_VARIANTS:
        raise ConfigError(f"variant must be one of {SCENARIO_VARIANTS}")
    return Scenario(
        variant=variant,
        L=8, M=8, K=128, J=128,
        sample_rate=4000.0,
        duration=60.0,
        kappa=kappa,
        mu=PRESET_STEP_SIZES[variant],
        topology="ring",
        alpha="normalized",
        noise_band_low=100.0,
        noise_band_high=1000.0,
        sweep_kappa=PRESET_KAPPAS,
    ).validate()


PRESETS = {"paper": paper_preset}


def with_value(sc: Scenario, key: str, raw) -> Scenario:
    """Copy of ``sc`` with config key ``key`` set from its text form."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown scenario key {key!r}")
    f = _FIELDS[key]
    return sc.replace(**{f.name: _convert(f, str(raw))}).validate()
