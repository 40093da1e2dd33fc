"""
Time-dependent driving field: Gaussian-envelope carrier pulses, DC bias,
delayed pulse pairs and the optical field-enhancement scalar.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from ..errors import DomainError
from . import units

TWO_PI = 2.0 * math.pi

# The envelope is truncated outside t0 +/- WINDOW_TAUS * tau.
WINDOW_TAUS = 4.0

_ENVELOPE_RATE = 2.0 * math.log(2.0)


@dataclass(frozen=True)
class LaserPulse:
    """One Gaussian-envelope carrier pulse, atomic units.

    ``tau`` is the intensity FWHM; ``phi`` is the carrier-envelope phase at the
    envelope maximum ``t0`` and is stored reduced to [0, 2 pi).
    """

    F0: float
    tau: float
    omega: float
    phi: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if self.F0 < 0:
            raise DomainError(f"F0 must be non-negative, got {self.F0}")
        if self.tau <= 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.omega <= 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @classmethod
    def from_practical(
        cls,
        f0_GVm: float,
        tau_fs: float,
        wavelength_nm: float = units.DEFAULT_WAVELENGTH_NM,
        phi: float = 0.0,
        t0_fs: float = 0.0,
    ) -> "LaserPulse":
        return cls(
            F0=units.to_atomic(f0_GVm, "GV/m"),
            tau=units.to_atomic(tau_fs, "fs"),
            omega=units.wavelength_to_omega(wavelength_nm),
            phi=phi,
            t0=units.to_atomic(t0_fs, "fs"),
        )

    @classmethod
    def from_fluence(
        cls,
        fluence_Jm2: float,
        tau_fs: float,
        wavelength_nm: float = units.DEFAULT_WAVELENGTH_NM,
        phi: float = 0.0,
        t0_fs: float = 0.0,
    ) -> "LaserPulse":
        tau = units.to_atomic(tau_fs, "fs")
        F0 = units.fluence_to_peak_field(units.to_atomic(fluence_Jm2, "J/m2"), tau)
        return cls(F0=F0, tau=tau, omega=units.wavelength_to_omega(wavelength_nm), phi=phi, t0=units.to_atomic(t0_fs, "fs"))

    @property
    def period(self) -> float:
        return units.optical_period(self.omega)

    @property
    def fluence(self) -> float:
        return units.peak_field_to_fluence(self.F0, self.tau)

    def window(self) -> Tuple[float, float]:
        half = WINDOW_TAUS * self.tau
        return self.t0 - half, self.t0 + half

    def shifted(self, dt: float) -> "LaserPulse":
        return replace(self, t0=self.t0 + dt)

    def with_phase(self, phi: float) -> "LaserPulse":
        return replace(self, phi=phi)

    def scaled(self, factor: float) -> "LaserPulse":
        return replace(self, F0=self.F0 * factor)


@dataclass(frozen=True)
class FieldConfiguration:
    """DC field plus a list of pulses.

    ``enhancement`` multiplies the optical term only. ``polarity`` is the sign
    of the optical term relative to the DC term.
    """

    f_dc: float = 0.0
    pulses: Tuple[LaserPulse, ...] = field(default_factory=tuple)
    enhancement: float = 1.0
    polarity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))
        if self.enhancement <= 0:
            raise DomainError(f"enhancement must be positive, got {self.enhancement}")
        if self.polarity not in (1, -1):
            raise DomainError(f"polarity must be +1 or -1, got {self.polarity}")

    def window(self) -> Optional[Tuple[float, float]]:
        """Union of the pulse windows, None without pulses."""
        if not self.pulses:
            return None
        starts, ends = zip(*(p.window() for p in self.pulses))
        return min(starts), max(ends)

    def shortest_period(self) -> Optional[float]:
        if not self.pulses:
            return None
        return min(p.period for p in self.pulses)

    def with_pulses(self, pulses: Sequence[LaserPulse]) -> "FieldConfiguration":
        return replace(self, pulses=tuple(pulses))

    def with_dc(self, f_dc: float) -> "FieldConfiguration":
        return replace(self, f_dc=f_dc)


def envelope(p: LaserPulse, t):
    """Untruncated field envelope F0 exp(-2 ln2 (t - t0)^2 / tau^2)."""
    s = np.asarray(t, dtype=float) - p.t0
    return p.F0 * np.exp(-_ENVELOPE_RATE * s * s / (p.tau * p.tau))


def pulse_field(p: LaserPulse, t):
    """F0 exp(-2 ln2 (t-t0)^2/tau^2) cos(omega (t-t0) + phi), zero outside the pulse window."""
    t_arr = np.asarray(t, dtype=float)
    s = t_arr - p.t0
    value = envelope(p, t_arr) * np.cos(p.omega * s + p.phi)
    value = np.where(np.abs(s) <= WINDOW_TAUS * p.tau, value, 0.0)
    return float(value) if value.ndim == 0 else value


def optical_field(cfg: FieldConfiguration, t):
    """Enhanced, signed optical part of the total field."""
    t_arr = np.asarray(t, dtype=float)
    acc = np.zeros_like(t_arr)
    for p in cfg.pulses:
        acc = acc + pulse_field(p, t_arr)
    acc = cfg.polarity * cfg.enhancement * acc
    return float(acc) if acc.ndim == 0 else acc


def total_field(cfg: FieldConfiguration, t):
    """f_dc + polarity * enhancement * sum of pulse fields."""
    total = cfg.f_dc + optical_field(cfg, t)
    return float(total) if np.ndim(total) == 0 else total


def delayed_pair(p: LaserPulse, delay: float, f_dc: float = 0.0, enhancement: float = 1.0, polarity: int = 1) -> FieldConfiguration:
    """Two identical replicas of ``p``, the second one ``delay`` later."""
    if delay < 0:
        raise DomainError(f"delay must be non-negative, got {delay}")
    return FieldConfiguration(f_dc=f_dc, pulses=(p, p.shifted(delay)), enhancement=enhancement, polarity=polarity)


def configuration_fluence(cfg: FieldConfiguration, samples_per_period: int = 64) -> float:
    """Time integral of c eps0 F_opt(t)^2 over the pulse windows (atomic units)."""
    window = cfg.window()
    if window is None:
        return 0.0
    dt = cfg.shortest_period() / samples_per_period
    t = np.arange(window[0], window[1] + dt, dt)
    f_opt = optical_field(cfg, t)
    return float(units.C_AU * units.EPS0_AU * trapezoid(f_opt * f_opt, t))
