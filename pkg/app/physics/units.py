"""
Physical constants, Hartree atomic-unit conversion and derived strong-field quantities.

Every other module works in atomic units (hbar = m_e = e = 4 pi eps0 = 1) and
converts practical units at its boundary through the helpers below.
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
import scipy.constants as const

from ..errors import DomainError


@dataclass(frozen=True)
class UnitSystem:
    """Conversion factors between practical units and Hartree atomic units.

    Each factor is "SI value of one atomic unit", so ``x_au = x_si / factor``.
    """

    q: float = const.e
    m: float = const.m_e
    hbar: float = const.hbar
    eps0: float = const.epsilon_0
    c: float = const.c

    @property
    def energy_J(self) -> float:
        return const.physical_constants["Hartree energy"][0]

    @property
    def length_m(self) -> float:
        return const.physical_constants["Bohr radius"][0]

    @property
    def time_s(self) -> float:
        return const.physical_constants["atomic unit of time"][0]

    @property
    def field_Vm(self) -> float:
        return const.physical_constants["atomic unit of electric field"][0]

    @property
    def voltage_V(self) -> float:
        return self.energy_J / self.q

    @property
    def fluence_Jm2(self) -> float:
        return self.energy_J / self.length_m**2

    @property
    def c_au(self) -> float:
        """Speed of light in atomic units (1/alpha)."""
        return 1.0 / const.fine_structure

    @property
    def eps0_au(self) -> float:
        return 1.0 / (4.0 * math.pi)

    def factors(self) -> Dict[str, float]:
        """SI value of one atomic unit for every practical unit the toolkit accepts."""
        return {
            "eV": self.energy_J / const.e,
            "J": self.energy_J,
            "nm": self.length_m / const.nano,
            "m": self.length_m,
            "fs": self.time_s / const.femto,
            "as": self.time_s / const.atto,
            "s": self.time_s,
            "GV/m": self.field_Vm / const.giga,
            "V/m": self.field_Vm,
            "J/m2": self.fluence_Jm2,
            "V": self.voltage_V,
        }


UNITS = UnitSystem()
_FACTORS = UNITS.factors()

HARTREE_EV = _FACTORS["eV"]
BOHR_NM = _FACTORS["nm"]
AU_TIME_FS = _FACTORS["fs"]
AU_FIELD_GVM = _FACTORS["GV/m"]
AU_FLUENCE_JM2 = _FACTORS["J/m2"]
C_AU = UNITS.c_au
EPS0_AU = UNITS.eps0_au

# Free-space carrier wavelength used when a config does not name one.
DEFAULT_WAVELENGTH_NM = 800.0

# Gaussian-envelope fluence factor: integral of exp(-4 ln2 t^2/tau^2) dt = tau * sqrt(pi / (4 ln 2)).
_ENVELOPE_INTEGRAL = math.sqrt(math.pi / (4.0 * math.log(2.0)))


def to_atomic(value, unit: str):
    """Convert a practical-unit value (scalar or array) to atomic units."""
    try:
        return value / _FACTORS[unit]
    except KeyError:
        raise DomainError(f"Unsupported unit '{unit}'. Known: {sorted(_FACTORS)}") from None


def from_atomic(value, unit: str):
    """Convert an atomic-unit value (scalar or array) to a practical unit."""
    try:
        return value * _FACTORS[unit]
    except KeyError:
        raise DomainError(f"Unsupported unit '{unit}'. Known: {sorted(_FACTORS)}") from None


def wavelength_to_omega(wavelength_nm: float) -> float:
    """Carrier angular frequency (atomic units) for a vacuum wavelength in nm."""
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm} nm")
    return 2.0 * math.pi * C_AU / to_atomic(wavelength_nm, "nm")


def optical_period(omega: float) -> float:
    """Carrier period 2 pi / omega (atomic units)."""
    if omega <= 0:
        raise DomainError(f"omega must be positive, got {omega}")
    return 2.0 * math.pi / omega


def peak_field_to_fluence(peak_field: float, tau: float) -> float:
    """Fluence of a Gaussian pulse with field envelope exp(-2 ln2 t^2/tau^2).

    fluence = 1/2 c eps0 F0^2 tau sqrt(pi / (4 ln 2)), all atomic units.
    """
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if peak_field < 0:
        raise DomainError(f"peak field must be non-negative, got {peak_field}")
    return 0.5 * C_AU * EPS0_AU * peak_field**2 * tau * _ENVELOPE_INTEGRAL


def fluence_to_peak_field(fluence: float, tau: float) -> float:
    """Peak field F0 of a Gaussian pulse carrying the given fluence (atomic units)."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if fluence < 0:
        raise DomainError(f"fluence must be non-negative, got {fluence}")
    return math.sqrt(fluence / (0.5 * C_AU * EPS0_AU * tau * _ENVELOPE_INTEGRAL))


def tip_voltage_to_field(voltage: float, radius: float, k: float = 5.0) -> float:
    """Apex field F = U / (k r) of a sharp tip; any consistent unit pair."""
    if radius <= 0 or k <= 0:
        raise DomainError(f"radius and k must be positive, got radius={radius}, k={k}")
    return voltage / (k * radius)


def bare_to_tip_field(bare_field: float, enhancement: float) -> float:
    """Optical field at the apex from the focal (bare) field."""
    if enhancement <= 0:
        raise DomainError(f"enhancement must be positive, got {enhancement}")
    return bare_field * enhancement


def tip_to_bare_field(tip_field: float, enhancement: float) -> float:
    if enhancement <= 0:
        raise DomainError(f"enhancement must be positive, got {enhancement}")
    return tip_field / enhancement


def keldysh_parameter(F: float, work_function: float, omega: float) -> float:
    """gamma = omega sqrt(2 m Phi) / (q F), atomic units."""
    if F <= 0:
        raise DomainError(f"Keldysh parameter diverges for F={F}")
    if work_function <= 0:
        raise DomainError(f"work function must be positive, got {work_function}")
    if omega < 0:
        raise DomainError(f"omega must be non-negative, got {omega}")
    return float(omega * np.sqrt(2.0 * work_function) / F)
