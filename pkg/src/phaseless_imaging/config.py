"""Experiment configuration: YAML document -> validated dataclasses.

Example (all lengths in wavelengths)::

    seed: 7
    protocol: general          # general | symmetric | paraxial-six | full-phase-baseline
    model: born                # born | paraxial
    geometry: {n: 101, aperture: 2000.0, wavelength: 1.0, layout: linear}
    grid: {ranges: [2000, 5000, 10000], nx: 51, nz: 51}
    scene:
      positions: [[-10, -8], [0, 5], [12, 0]]   # grid offsets from the window centre
    noise: {epsilon: [0.0, 0.1, 0.2], trials: 1}
    output: {directory: out/fig4, formats: [csv, pgm]}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError

PROTOCOLS = ("general", "symmetric", "paraxial-six", "full-phase-baseline")
MODELS = ("born", "paraxial")
FORMATS = ("csv", "pgm")


@dataclass
class GeometryConfig:
    n: int = 101
    aperture: float = 2000.0
    wavelength: float = 1.0
    layout: str = "linear"  # linear | planar (n per side)


@dataclass
class GridConfig:
    ranges: list = field(default_factory=lambda: [10000.0])
    nx: int | None = None
    nz: int = 1
    hx: float | None = None
    hz: float | None = None
    window_length: float | None = None  # b; sets nx = K_opt when nx is omitted


@dataclass
class SceneConfig:
    positions: list = field(default_factory=list)
    reflectivities: list | None = None  # [[re, im], ...]; random unit phasors if omitted
    seed: int | None = None


@dataclass
class NoiseConfig:
    epsilon: list = field(default_factory=lambda: [0.0])
    seed: int | None = None
    trials: int = 1
    mode: str = "replace"


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: list = field(default_factory=lambda: ["csv"])


@dataclass
class ExperimentConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    protocol: str = "general"
    model: str = "born"
    seed: int = 0
    rank: int | None = None  # known signal rank; defaults to the scatterer count

    @property
    def scene_seed(self) -> int:
        return self.seed if self.scene.seed is None else self.scene.seed

    @property
    def noise_seed(self) -> int:
        return self.seed if self.noise.seed is None else self.noise.seed

    def to_dict(self):
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self):
        g, gr, sc, nz = self.geometry, self.grid, self.scene, self.noise
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if g.layout not in ("linear", "planar"):
            raise ConfigError(f"unknown layout {g.layout!r}")
        if g.n < 2 or g.aperture <= 0 or g.wavelength <= 0:
            raise ConfigError("geometry needs n >= 2 and positive aperture and wavelength")
        if not gr.ranges or any(float(L) <= 0 for L in gr.ranges):
            raise ConfigError("grid.ranges must be a non-empty list of positive ranges")
        if gr.nx is None and gr.window_length is None:
            raise ConfigError("grid needs nx or window_length")
        if gr.nz < 1 or (gr.nx is not None and gr.nx < 1):
            raise ConfigError("grid sizes must be positive")
        if not sc.positions:
            raise ConfigError("scene.positions is empty")
        for pos in sc.positions:
            if not 1 <= len(pos) <= 2:
                raise ConfigError(f"scene position {pos} must be [dx] or [dx, dz]")
            if len(pos) == 2 and pos[1] != 0 and gr.nz == 1:
                raise ConfigError(f"scene position {pos} has a range offset on a flat grid")
        if len({tuple(p) for p in sc.positions}) != len(sc.positions):
            raise ConfigError("scene positions must be distinct")
        if sc.reflectivities is not None and len(sc.reflectivities) != len(sc.positions):
            raise ConfigError("one reflectivity per scatterer position is required")
        n_total = g.n if g.layout == "linear" else g.n**2
        if len(sc.positions) >= n_total:
            raise ConfigError("MUSIC needs fewer scatterers than transducers")
        if self.rank is not None and not 0 < self.rank < n_total:
            raise ConfigError("rank must lie in [1, N)")
        if not nz.epsilon or any(not 0 <= float(e) < 1 for e in nz.epsilon):
            raise ConfigError("every noise level must lie in [0, 1)")
        if nz.trials < 1:
            raise ConfigError("noise.trials must be at least 1")
        if nz.mode not in ("replace", "additive"):
            raise ConfigError(f"unknown noise mode {nz.mode!r}")
        if any(f not in FORMATS for f in self.output.formats):
            raise ConfigError(f"output formats must be among {FORMATS}")
        if self.protocol == "paraxial-six" and (gr.nz != 1 or g.layout != "linear"):
            raise ConfigError("paraxial-six needs a linear array and a flat window (nz = 1)")
        if self.model == "paraxial" and gr.nz != 1:
            raise ConfigError("the paraxial model needs a flat window (nz = 1)")
        return self


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    blocks = {
        "geometry": GeometryConfig,
        "grid": GridConfig,
        "scene": SceneConfig,
        "noise": NoiseConfig,
        "output": OutputConfig,
    }
    kwargs = {k: _build(cls, data.pop(k, None), k) for k, cls in blocks.items()}
    if isinstance(kwargs["grid"].ranges, (int, float)):
        kwargs["grid"].ranges = [kwargs["grid"].ranges]
    if isinstance(kwargs["noise"].epsilon, (int, float)):
        kwargs["noise"].epsilon = [kwargs["noise"].epsilon]
    unknown = set(data) - {"protocol", "model", "seed", "rank"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    try:
        cfg = ExperimentConfig(**kwargs, **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return config_from_dict(data)
