"""
Run configuration: YAML sections parsed into pydantic models, preset merging,
and the sweep grid built on top of them.

Physical keys carry their unit in the name (f_dc_GVm, tau_fs, z_max_nm, ...).
"""

import hashlib
import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..config import settings
from ..errors import ConfigError
from ..physics import units
from ..physics.field_model import LaserPulse
from ..physics.potential import MetalModel
from ..physics.qdynamics import GridSpec, SolverSettings
from ..analysis.fn_analytic import FNParams, fn_b_constant
from .presets import get_preset, merge

logger = logging.getLogger(__name__)

TDSE_TASKS = ("yield", "modulation_scan")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MetalSection(_Section):
    v0_eV: float = -13.5
    work_function_eV: float = Field(4.5, gt=0)
    well_width_nm: Optional[float] = Field(None, gt=0)
    image_potential: bool = True
    cutoff_scale: float = Field(1.0, gt=0)
    energy_offset_eV: float = 0.0

    @model_validator(mode="after")
    def _check_depth(self):
        if not self.v0_eV < -self.work_function_eV:
            raise ValueError(f"v0_eV={self.v0_eV} must lie below -work_function_eV={-self.work_function_eV}")
        return self

    def to_model(self, well_width: Optional[float] = None) -> MetalModel:
        width = well_width
        if width is None and self.well_width_nm is not None:
            width = units.to_atomic(self.well_width_nm, "nm")
        return MetalModel(
            v0=units.to_atomic(self.v0_eV, "eV"),
            work_function=units.to_atomic(self.work_function_eV, "eV"),
            well_width=width,
            image_potential=self.image_potential,
            cutoff_scale=self.cutoff_scale,
            energy_offset=units.to_atomic(self.energy_offset_eV, "eV"),
        )


class LaserSection(_Section):
    wavelength_nm: float = Field(units.DEFAULT_WAVELENGTH_NM, gt=0)
    tau_fs: float = Field(8.0, gt=0)
    f_laser_GVm: Optional[float] = Field(None, ge=0)
    fluence_Jm2: Optional[float] = Field(None, ge=0)
    phi_rad: float = 0.0
    f_dc_GVm: float = 0.0
    enhancement: float = Field(1.0, gt=0)
    polarity: Literal[1, -1] = 1

    @model_validator(mode="after")
    def _one_amplitude(self):
        if (self.f_laser_GVm is None) == (self.fluence_Jm2 is None):
            raise ValueError("set exactly one of f_laser_GVm and fluence_Jm2")
        return self

    def to_pulse(self) -> LaserPulse:
        if self.f_laser_GVm is not None:
            return LaserPulse.from_practical(self.f_laser_GVm, self.tau_fs, self.wavelength_nm, self.phi_rad)
        return LaserPulse.from_fluence(self.fluence_Jm2, self.tau_fs, self.wavelength_nm, self.phi_rad)

    @property
    def f_dc(self) -> float:
        return units.to_atomic(self.f_dc_GVm, "GV/m")


class GridSection(_Section):
    z_max_nm: float = Field(40.0, gt=0)
    n_points: int = Field(16384, ge=8)
    points_per_well: int = Field(64, ge=8)
    z_detector_nm: float = Field(6.0, gt=0)
    absorber_width_nm: float = Field(5.0, ge=0)
    absorber_strength_Ha: float = Field(0.1, ge=0)

    @model_validator(mode="after")
    def _ordering(self):
        if not self.z_detector_nm < self.z_max_nm - self.absorber_width_nm:
            raise ValueError("detector must lie before the absorbing layer")
        return self

    def template(self) -> Dict[str, Any]:
        """GridSpec.for_well keyword arguments in atomic units."""
        return {
            "z_max": units.to_atomic(self.z_max_nm, "nm"),
            "n_points": self.n_points,
            "points_per_well": self.points_per_well,
            "z_detector": units.to_atomic(self.z_detector_nm, "nm"),
            "absorber_width": units.to_atomic(self.absorber_width_nm, "nm"),
            "absorber_strength": self.absorber_strength_Ha,
        }

    def to_grid(self, well_width: float) -> GridSpec:
        return GridSpec.for_well(well_width, **self.template())


class SolverSection(_Section):
    dt_as: Optional[float] = Field(None, gt=0)
    steps_per_period: int = Field(256, ge=200)
    tail_fs: float = Field(15.0, ge=0)
    dc_ramp_fs: float = Field(10.0, ge=0)
    record_every: int = Field(1, ge=1)

    def to_settings(self) -> SolverSettings:
        return SolverSettings(
            dt=None if self.dt_as is None else units.to_atomic(self.dt_as, "as"),
            tail=units.to_atomic(self.tail_fs, "fs"),
            dc_ramp=units.to_atomic(self.dc_ramp_fs, "fs"),
            record_every=self.record_every,
            steps_per_period=self.steps_per_period,
        )


class FNSection(_Section):
    a: float = Field(1.0, gt=0)
    b_GVm: Optional[float] = Field(None, ge=0)
    schottky_correction: bool = True
    work_function_eV: Optional[float] = Field(None, gt=0)
    tip_radius_nm: float = Field(80.0, gt=0)
    geometry_k: float = Field(5.0, gt=0)

    def to_params(self, metal: MetalSection) -> FNParams:
        phi = self.work_function_eV or metal.work_function_eV
        b = fn_b_constant(phi) if self.b_GVm is None else self.b_GVm
        return FNParams(a=self.a, b=b, schottky_correction=self.schottky_correction, work_function_eV=phi)


class IACSection(_Section):
    model: Literal["surrogate", "tdse"] = "surrogate"
    detector: Literal["fn", "power_law"] = "fn"
    order: float = Field(2.0, gt=0)
    max_delay_fs: Optional[float] = Field(None, gt=0)
    coarse_step_fs: float = Field(2.0, gt=0)


class AxisSpec(_Section):
    name: str
    min: float
    max: float
    count: int = Field(ge=1)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _range(self):
        if self.max < self.min:
            raise ValueError(f"axis {self.name}: max < min")
        if self.spacing == "log" and self.min <= 0:
            raise ValueError(f"axis {self.name}: log spacing needs positive bounds")
        return self

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.min])
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


class SweepSection(_Section):
    task: Literal["yield", "modulation_scan", "iac", "fn_fit", "peak_to_baseline", "quasi_static_modulation"] = "yield"
    model: Literal["analytic", "tdse"] = "analytic"
    axes: List[AxisSpec] = Field(default_factory=list)
    n_phases: int = Field(16, ge=8)
    fit_data: Optional[str] = None
    fit_b: bool = False
    f_laser_guess_GVm: float = Field(1.0, gt=0)
    workers: Optional[int] = Field(None, ge=1)


class OutputSection(_Section):
    directory: Optional[str] = None
    name: str = "run"
    write_traces: bool = True


class RunConfig(_Section):
    preset: Optional[str] = None
    description: str = ""
    metal: MetalSection = Field(default_factory=MetalSection)
    laser: LaserSection = Field(default_factory=lambda: LaserSection(f_laser_GVm=2.7))
    grid: GridSection = Field(default_factory=GridSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    fn: FNSection = Field(default_factory=FNSection)
    iac: IACSection = Field(default_factory=IACSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value):
        if value is not None and not get_preset(value):
            raise ValueError(f"unknown preset '{value}'")
        return value

    @model_validator(mode="after")
    def _fit_needs_data(self):
        if self.sweep.task == "fn_fit" and not self.sweep.fit_data:
            raise ValueError("task fn_fit needs sweep.fit_data")
        for axis in self.sweep.axes:
            resolve_axis(axis.name)
        return self

    def content_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def needs_tdse(self) -> bool:
        if self.sweep.task in TDSE_TASKS:
            return True
        if self.sweep.task == "iac":
            return self.iac.model == "tdse"
        if self.sweep.task == "peak_to_baseline":
            return self.sweep.model == "tdse"
        return False

    def with_overrides(self, overrides: Dict[str, float]) -> "RunConfig":
        data = self.model_dump()
        for dotted, value in overrides.items():
            section, key = dotted.split(".", 1)
            data[section][key] = value
        # amplitude axes replace each other
        laser = data["laser"]
        if "laser.fluence_Jm2" in overrides:
            laser["f_laser_GVm"] = None
        if "laser.f_laser_GVm" in overrides:
            laser["fluence_Jm2"] = None
        return RunConfig.model_validate(data)


_AXIS_SECTIONS = ("laser", "metal", "fn", "grid", "solver")
_SECTION_MODELS = {
    "laser": LaserSection,
    "metal": MetalSection,
    "fn": FNSection,
    "grid": GridSection,
    "solver": SolverSection,
}


def resolve_axis(name: str) -> str:
    """'section.key' for an axis given either qualified or as a bare key."""
    if "." in name:
        section, key = name.split(".", 1)
        if section in _SECTION_MODELS and key in _SECTION_MODELS[section].model_fields:
            return name
    else:
        for section in _AXIS_SECTIONS:
            if name in _SECTION_MODELS[section].model_fields:
                return f"{section}.{name}"
    raise ValueError(f"unknown sweep axis '{name}'")


class SweepSpec:
    """Base configuration plus the cartesian grid of axis values."""

    def __init__(self, config: RunConfig, source: Optional[str] = None):
        self.config = config
        self.source = source
        self.axes = list(config.sweep.axes)
        self.axis_keys = [resolve_axis(a.name) for a in self.axes]
        self.axis_values = [a.values() for a in self.axes]

    @property
    def task(self) -> str:
        return self.config.sweep.task

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    @property
    def total_points(self) -> int:
        return int(np.prod(self.shape)) if self.axes else 1

    @property
    def content_hash(self) -> str:
        return self.config.content_hash()

    def points(self) -> Iterator[Tuple[Tuple[int, ...], Dict[str, float]]]:
        """(index tuple, overrides) in lexicographic index order."""
        ranges = [range(a.count) for a in self.axes]
        for index in itertools.product(*ranges):
            overrides = {key: float(values[i]) for key, values, i in zip(self.axis_keys, self.axis_values, index)}
            yield tuple(index), overrides

    def resolve(self) -> List[Tuple[Tuple[int, ...], RunConfig]]:
        """Every grid point validated up front; any failure is a ConfigError."""
        resolved = []
        for index, overrides in self.points():
            try:
                resolved.append((index, self.config.with_overrides(overrides)))
            except ValidationError as e:
                raise ConfigError(f"grid point {index} {overrides} is invalid: {e}") from e
        return resolved

    def plan(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "preset": self.config.preset,
            "axes": [
                {"name": key, "spacing": a.spacing, "values": [float(v) for v in vals]}
                for key, a, vals in zip(self.axis_keys, self.axes, self.axis_values)
            ],
            "total_points": self.total_points,
            "needs_tdse": self.config.needs_tdse(),
            "config_hash": self.content_hash,
            "output_dir": output_directory(self.config),
        }


def output_directory(config: RunConfig) -> str:
    return config.output.directory or settings.output_dir


def build_config(raw: Optional[Dict[str, Any]] = None, preset: Optional[str] = None) -> RunConfig:
    """Merge preset (explicit, from the file, or from the environment) with raw values and validate."""
    raw = dict(raw or {})
    name = preset or raw.get("preset") or settings.default_preset
    if name:
        base = get_preset(name)
        if not base:
            raise ConfigError(f"unknown preset '{name}'")
        # an amplitude given in the file replaces the preset's other amplitude key
        laser = raw.get("laser") or {}
        base_laser = base.get("laser", {})
        if "fluence_Jm2" in laser and "f_laser_GVm" not in laser:
            base_laser.pop("f_laser_GVm", None)
        if "f_laser_GVm" in laser and "fluence_Jm2" not in laser:
            base_laser.pop("fluence_Jm2", None)
        raw = merge(base, raw)
        raw["preset"] = name
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_config(path: Union[str, Path], preset: Optional[str] = None) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    sweep = raw.get("sweep")
    if isinstance(sweep, dict) and sweep.get("fit_data"):
        # data paths in a file are relative to that file
        sweep["fit_data"] = str(path.parent / Path(sweep["fit_data"]).expanduser())
    logger.info(f"loaded configuration from {path}")
    return build_config(raw, preset)


def load_sweep(path: Optional[Union[str, Path]] = None, preset: Optional[str] = None) -> SweepSpec:
    config = load_config(path, preset) if path is not None else build_config({}, preset)
    spec = SweepSpec(config, source=None if path is None else str(path))
    spec.resolve()
    return spec


def revalidate(data: Dict[str, Any]) -> RunConfig:
    """Validate an edited config dump; failures are ConfigError."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
