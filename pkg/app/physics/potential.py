"""
1D model potential V(z, t): flat metal interior, image-potential barrier and a
field-tilted exterior, atomic units throughout.

    z <= 0        V = v0
    0 < z <= z_c  V = v0                       (clamp of the image singularity)
    z > z_c       V = -1/(4 z) - z F(t)        (q^2 / (16 pi eps0 z) = 1/(4 z) in atomic units)

z_c = 1 / (4 |v0|) is where the image term reaches v0, so V is continuous.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import DomainError
from . import units
from .field_model import FieldConfiguration, total_field


@dataclass(frozen=True)
class MetalModel:
    """Box-model metal surface.

    ``well_width`` is L, the distance from the hard wall at z = -L to the
    surface; None until calibrated. ``cutoff_scale`` rescales z_c for
    sensitivity studies. ``energy_offset`` is a constant added everywhere.
    """

    v0: float = units.to_atomic(-13.5, "eV")
    work_function: float = units.to_atomic(4.5, "eV")
    well_width: Optional[float] = None
    image_potential: bool = True
    cutoff_scale: float = 1.0
    energy_offset: float = 0.0

    def __post_init__(self):
        if not (self.v0 < -self.work_function < 0):
            raise DomainError(
                f"need v0 < -work_function < 0, got v0={self.v0}, work_function={self.work_function}"
            )
        if self.well_width is not None and self.well_width <= 0:
            raise DomainError(f"well width must be positive, got {self.well_width}")
        if self.cutoff_scale <= 0:
            raise DomainError(f"cutoff scale must be positive, got {self.cutoff_scale}")

    @classmethod
    def from_practical(
        cls,
        v0_eV: float = -13.5,
        work_function_eV: float = 4.5,
        well_width_nm: Optional[float] = None,
        **kwargs,
    ) -> "MetalModel":
        return cls(
            v0=units.to_atomic(v0_eV, "eV"),
            work_function=units.to_atomic(work_function_eV, "eV"),
            well_width=None if well_width_nm is None else units.to_atomic(well_width_nm, "nm"),
            **kwargs,
        )

    @property
    def image_cutoff(self) -> float:
        """z_c; zero when the image term is switched off."""
        if not self.image_potential:
            return 0.0
        return self.cutoff_scale / (4.0 * abs(self.v0))

    @property
    def fermi_target(self) -> float:
        """Ground-state energy the box is calibrated to (vacuum at energy_offset)."""
        return self.energy_offset - self.work_function

    def with_width(self, well_width: float) -> "MetalModel":
        return replace(self, well_width=well_width)

    def require_width(self) -> float:
        if self.well_width is None:
            raise DomainError("metal model has no well width; calibrate it first")
        return self.well_width


def static_potential(metal: MetalModel, z) -> np.ndarray:
    """Field-free potential on an array of positions (no domain check)."""
    z = np.asarray(z, dtype=float)
    z_c = metal.image_cutoff
    outside = z > z_c
    v = np.full(z.shape, metal.v0, dtype=float)
    if metal.image_potential:
        safe_z = np.where(outside, z, 1.0)
        v = np.where(outside, -0.25 / safe_z, v)
    else:
        v = np.where(z > 0.0, 0.0, v)
    return v + metal.energy_offset


def field_profile(metal: MetalModel, z) -> np.ndarray:
    """-z where the field acts (z > z_c), 0 inside; V(z,t) = static + profile * F(t)."""
    z = np.asarray(z, dtype=float)
    return np.where(z > metal.image_cutoff, -z, 0.0)


def potential_at(metal: MetalModel, cfg: FieldConfiguration, z: float, t: float, z_max: Optional[float] = None) -> float:
    """V(z, t) at one point of the domain [-L, z_max]."""
    L = metal.require_width()
    if z < -L or (z_max is not None and z > z_max):
        raise DomainError(f"z={z} outside the simulation domain [{-L}, {z_max}]")
    v = float(static_potential(metal, z))
    return v + float(field_profile(metal, z)) * total_field(cfg, t)


def schottky_barrier_peak(F: float) -> Tuple[float, float]:
    """Closed-form peak of -1/(4z) - zF: z* = 1/(2 sqrt(F)), V* = -sqrt(F)."""
    if F <= 0:
        raise DomainError(f"no barrier maximum for F={F}")
    return 0.5 / math.sqrt(F), -math.sqrt(F)


def barrier_maximum(metal: MetalModel, F: float) -> Tuple[float, float]:
    """Position and height of the static barrier maximum over z > z_c."""
    if F <= 0:
        raise DomainError(f"no barrier maximum for F={F}")
    z_star, _ = schottky_barrier_peak(F)
    lo = metal.image_cutoff if metal.image_potential else 0.0
    hi = max(10.0 * z_star, lo + 1.0)

    def negative_v(z):
        return -(float(static_potential(metal, z)) - z * F)

    res = minimize_scalar(negative_v, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * hi})
    z_peak = float(res.x)
    return z_peak, -float(res.fun)
