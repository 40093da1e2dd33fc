"""
Grid construction, imaginary-time ground state with well-width calibration,
Crank-Nicolson real-time propagation with an absorbing layer, and
probability-flux detection.

All quantities are atomic units. Wavefunctions live on a uniform grid whose
two endpoints are hard walls (psi = 0); only interior points are evolved.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from ..errors import CalibrationError, ConvergenceError, DomainError, NumericalError
from . import units
from .field_model import FieldConfiguration, optical_field
from .potential import MetalModel, field_profile, static_potential

logger = logging.getLogger(__name__)

MEV = units.to_atomic(1e-3, "eV")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [z_min, z_max] with detector plane and absorbing layer.

    The absorber is -i W0 sin^2(pi/2 (z - z_a)/w_a) on [z_a, z_max], z_a = z_max - w_a.
    """

    z_min: float
    z_max: float
    n_points: int
    z_detector: float
    absorber_width: float
    absorber_strength: float = 0.1

    def __post_init__(self):
        if self.n_points < 8:
            raise DomainError(f"grid needs at least 8 points, got {self.n_points}")
        if self.z_max <= self.z_min:
            raise DomainError(f"z_max={self.z_max} must exceed z_min={self.z_min}")
        if self.absorber_width < 0 or self.absorber_strength < 0:
            raise DomainError("absorber width and strength must be non-negative")

    @classmethod
    def for_well(
        cls,
        well_width: float,
        z_max: float = units.to_atomic(40.0, "nm"),
        n_points: int = 16384,
        points_per_well: int = 64,
        z_detector: float = units.to_atomic(6.0, "nm"),
        absorber_width: float = units.to_atomic(5.0, "nm"),
        absorber_strength: float = 0.1,
    ) -> "GridSpec":
        """Grid from -L to z_max with at least ``n_points`` and dz <= L / points_per_well."""
        if well_width <= 0:
            raise DomainError(f"well width must be positive, got {well_width}")
        span = z_max + well_width
        needed = int(math.ceil(span * points_per_well / well_width)) + 1
        return cls(
            z_min=-well_width,
            z_max=z_max,
            n_points=max(n_points, needed),
            z_detector=z_detector,
            absorber_width=absorber_width,
            absorber_strength=absorber_strength,
        )

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / (self.n_points - 1)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.n_points)

    @property
    def absorber_start(self) -> float:
        return self.z_max - self.absorber_width

    @property
    def detector_index(self) -> int:
        """Index i with z_i <= z_detector < z_{i+1}; the flux is taken across that link."""
        return int(math.floor((self.z_detector - self.z_min) / self.dz))

    def truncated(self, z_max: float) -> "GridSpec":
        """Same z_min and dz, shorter domain, no absorber (used for bound-state work)."""
        n = int(round((z_max - self.z_min) / self.dz)) + 1
        n = min(max(n, 8), self.n_points)
        return replace(
            self,
            z_max=self.z_min + (n - 1) * self.dz,
            n_points=n,
            z_detector=min(self.z_detector, self.z_min + (n - 2) * self.dz),
            absorber_width=0.0,
        )

    def without_absorber(self) -> "GridSpec":
        return replace(self, absorber_strength=0.0)

    def absorber(self) -> np.ndarray:
        z = self.z
        if self.absorber_width <= 0 or self.absorber_strength <= 0:
            return np.zeros_like(z)
        s = np.clip((z - self.absorber_start) / self.absorber_width, 0.0, 1.0)
        return self.absorber_strength * np.sin(0.5 * math.pi * s) ** 2

    def validate(self, metal: MetalModel) -> None:
        """z_c < z_d < z_a < z_max, absorber clear of the detector."""
        z_c = metal.image_cutoff
        if not (z_c < self.z_detector < self.z_max):
            raise DomainError(f"detector z={self.z_detector} must lie in ({z_c}, {self.z_max})")
        if self.absorber_width > 0 and not (self.z_detector < self.absorber_start):
            raise DomainError(
                f"absorber start {self.absorber_start} must lie beyond the detector {self.z_detector}"
            )

    def describe(self) -> Dict[str, float]:
        return {
            "z_min_nm": units.from_atomic(self.z_min, "nm"),
            "z_max_nm": units.from_atomic(self.z_max, "nm"),
            "n_points": self.n_points,
            "dz_pm": units.from_atomic(self.dz, "nm") * 1e3,
            "z_detector_nm": units.from_atomic(self.z_detector, "nm"),
            "absorber_width_nm": units.from_atomic(self.absorber_width, "nm"),
            "absorber_strength_Ha": self.absorber_strength,
        }


@dataclass
class QuantumState:
    grid: GridSpec
    psi: np.ndarray
    t: float = 0.0
    energy: Optional[float] = None

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.grid.n_points,):
            raise DomainError(f"psi has shape {self.psi.shape}, grid has {self.grid.n_points} points")

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dz)

    def copy(self) -> "QuantumState":
        return QuantumState(self.grid, self.psi.copy(), self.t, self.energy)


@dataclass
class FluxTrace:
    """Probability current across the detector link, one sample per recorded step."""

    times: np.ndarray
    j: np.ndarray
    z_detector: float
    metadata: Dict[str, Any] = field(default_factory=dict)
    norm_start: float = float("nan")
    norm_end: float = float("nan")
    norm_below_start: float = float("nan")
    norm_below_end: float = float("nan")

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.j = np.asarray(self.j, dtype=float)
        if self.times.shape != self.j.shape:
            raise DomainError(f"times {self.times.shape} and j {self.j.shape} differ in length")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else float("nan")

    @property
    def norm_lost_below(self) -> float:
        return self.norm_below_start - self.norm_below_end

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t_fs": units.from_atomic(self.times, "fs"),
            "j_per_fs": self.j / units.AU_TIME_FS,
        })


@dataclass(frozen=True)
class SolverSettings:
    """Real-time propagation knobs (atomic units).

    dt None means T_carrier / steps_per_period, or 0.5 a.u. without pulses.
    """

    dt: Optional[float] = None
    tail: float = units.to_atomic(15.0, "fs")
    dc_ramp: float = units.to_atomic(10.0, "fs")
    record_every: int = 1
    check_every: int = 64
    max_norm_growth: float = 1e-6
    steps_per_period: int = 256

    def describe(self) -> Dict[str, Any]:
        return {
            "dt_as": None if self.dt is None else units.from_atomic(self.dt, "as"),
            "tail_fs": units.from_atomic(self.tail, "fs"),
            "dc_ramp_fs": units.from_atomic(self.dc_ramp, "fs"),
            "record_every": self.record_every,
            "steps_per_period": self.steps_per_period,
        }


# ---------------------------------------------------------------------------
# Discrete Hamiltonian helpers
# ---------------------------------------------------------------------------

def _apply_h(psi_in: np.ndarray, diag: np.ndarray, off: float) -> np.ndarray:
    """Tridiagonal H psi on interior points with zero Dirichlet boundaries."""
    out = diag * psi_in
    out[:-1] += off * psi_in[1:]
    out[1:] += off * psi_in[:-1]
    return out


def energy_expectation(state: QuantumState, potential: np.ndarray) -> float:
    """Rayleigh quotient <psi|H|psi>/<psi|psi> of the discrete Hamiltonian."""
    dz = state.grid.dz
    psi_in = state.psi[1:-1]
    diag = 1.0 / dz**2 + np.asarray(potential, dtype=float)[1:-1]
    h_psi = _apply_h(psi_in, diag.astype(complex), -0.5 / dz**2)
    num = np.vdot(psi_in, h_psi).real
    den = np.vdot(psi_in, psi_in).real
    return float(num / den)


def norm_below(state: QuantumState, z: float) -> float:
    """Probability on grid points with z_i <= z."""
    mask = state.grid.z <= z
    return float(np.sum(np.abs(state.psi[mask]) ** 2) * state.grid.dz)


def probability_flux(state: QuantumState, z: float) -> float:
    """j = Im(psi* dpsi/dz) by central difference at the grid point nearest z."""
    grid = state.grid
    i = int(round((z - grid.z_min) / grid.dz))
    if not 1 <= i <= grid.n_points - 2:
        raise DomainError(f"z={z} is not an interior grid position")
    psi = state.psi
    dpsi = (psi[i + 1] - psi[i - 1]) / (2.0 * grid.dz)
    return float(np.imag(np.conj(psi[i]) * dpsi))


def _link_flux(psi_a: complex, psi_b: complex, dz: float) -> float:
    """Current across the link between two neighbouring points."""
    return float(np.imag(np.conj(psi_a) * psi_b) / dz)


# ---------------------------------------------------------------------------
# Ground state
# ---------------------------------------------------------------------------

def ground_state(
    metal: MetalModel,
    grid: GridSpec,
    potential: Optional[np.ndarray] = None,
    dtau: float = 50.0,
    max_steps: int = 20000,
    tol: float = 1e-12,
) -> QuantumState:
    """Lowest eigenstate by imaginary-time stepping with renormalisation.

    Each step solves (1 + dtau (H - v_min)) psi' = psi, which is unconditionally
    stable and keeps psi positive. ``potential`` overrides the field-free model
    potential (one value per grid point).
    """
    z = grid.z
    v = static_potential(metal, z) if potential is None else np.asarray(potential, dtype=float)
    if v.shape != z.shape:
        raise DomainError(f"potential has shape {v.shape}, grid has {z.shape}")
    dz = grid.dz
    v_in = v[1:-1]
    e_ref = float(v_in.min())
    off = -0.5 / dz**2
    diag = 1.0 / dz**2 + v_in

    ab = np.empty((3, v_in.size))
    ab[0, 1:] = dtau * off
    ab[1, :] = 1.0 + dtau * (diag - e_ref)
    ab[2, :-1] = dtau * off
    ab[0, 0] = ab[2, -1] = 0.0

    psi = np.where(z[1:-1] <= 0.0, 1.0, np.exp(-np.clip(z[1:-1], 0.0, None)))
    psi /= math.sqrt(np.sum(psi * psi) * dz)

    energy = float(np.dot(psi, _apply_h(psi, diag, off)) * dz)
    residuals: List[float] = []
    for step in range(1, max_steps + 1):
        psi = solve_banded((1, 1), ab, psi, check_finite=False)
        psi /= math.sqrt(np.sum(psi * psi) * dz)
        new_energy = float(np.dot(psi, _apply_h(psi, diag, off)) * dz)
        change = abs(new_energy - energy)
        energy = new_energy
        residuals.append(change)
        if change < tol:
            logger.debug(f"ground state converged in {step} steps, E = {energy:.12f} Ha")
            break
    else:
        raise ConvergenceError(
            f"imaginary-time iteration did not converge in {max_steps} steps "
            f"(last energy change {residuals[-1]:.3e} Ha)",
            residuals=residuals[-10:],
        )

    full = np.zeros(grid.n_points, dtype=complex)
    full[1:-1] = psi
    return QuantumState(grid=grid, psi=full, t=0.0, energy=energy)


def infinite_well_estimate(metal: MetalModel) -> float:
    """L = pi / sqrt(2 (E_target - v0)) for a box with infinite walls."""
    depth = metal.fermi_target - (metal.v0 + metal.energy_offset)
    return math.pi / math.sqrt(2.0 * depth)


def calibrate_well_width(
    metal: MetalModel,
    grid_template: Optional[Dict[str, Any]] = None,
    calibration_z_max: float = units.to_atomic(3.0, "nm"),
    tolerance: float = MEV,
    max_expansions: int = 6,
) -> float:
    """Box width L whose ground-state energy equals the Fermi target within ``tolerance``.

    ``grid_template`` holds GridSpec.for_well keyword arguments; the search runs on
    a domain truncated at ``calibration_z_max`` with the spacing the full grid
    would have, so the energy carries over to the full grid.
    """
    template = dict(grid_template or {})
    target = metal.fermi_target
    floor = metal.v0 + metal.energy_offset
    if not (floor < target < metal.energy_offset):
        raise CalibrationError(f"target {target} Ha must lie between v0 {floor} and vacuum {metal.energy_offset}")

    def mismatch(width: float) -> float:
        grid = GridSpec.for_well(width, **template).truncated(calibration_z_max)
        state = ground_state(metal.with_width(width), grid)
        return state.energy - target

    estimate = infinite_well_estimate(metal)
    lo, hi = 0.25 * estimate, 2.0 * estimate
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    for _ in range(max_expansions):
        if f_lo > 0 and f_hi < 0:
            break
        if f_lo <= 0:
            lo *= 0.5
            f_lo = mismatch(lo)
        if f_hi >= 0:
            hi *= 2.0
            f_hi = mismatch(hi)
    if not (f_lo > 0 and f_hi < 0):
        raise CalibrationError(
            f"no bracketing interval for E1 = {target:.6f} Ha (lo={lo:.4f} -> {f_lo:+.3e}, hi={hi:.4f} -> {f_hi:+.3e})"
        )

    width = brentq(mismatch, lo, hi, xtol=1e-9 * estimate, rtol=1e-12)
    residual = mismatch(width)
    if abs(residual) > tolerance:
        raise CalibrationError(f"calibrated L={width:.6f} misses target by {residual:.3e} Ha")
    logger.info(
        f"calibrated well width L = {units.from_atomic(width, 'nm'):.5f} nm "
        f"(infinite-well estimate {units.from_atomic(estimate, 'nm'):.5f} nm)"
    )
    return width


# ---------------------------------------------------------------------------
# Real-time propagation
# ---------------------------------------------------------------------------

def default_time_span(cfg: FieldConfiguration, settings: SolverSettings) -> Tuple[float, float]:
    window = cfg.window()
    if window is None:
        raise DomainError("a time span is required when the field has no pulses")
    start = window[0]
    if cfg.f_dc != 0.0 and settings.dc_ramp > 0:
        start -= settings.dc_ramp
    return start, window[1] + settings.tail


def dc_switch_on(t: np.ndarray, t_start: float, ramp: float) -> np.ndarray:
    """sin^2 switch-on of the DC term over ``ramp``, 1 afterwards."""
    if ramp <= 0:
        return np.ones_like(t)
    s = np.clip((t - t_start) / ramp, 0.0, 1.0)
    return np.sin(0.5 * math.pi * s) ** 2


def propagate(
    state: QuantumState,
    metal: MetalModel,
    cfg: FieldConfiguration,
    t_span: Optional[Tuple[float, float]] = None,
    dt: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[QuantumState, FluxTrace]:
    """Crank-Nicolson evolution under V(z, t) with flux recorded at the detector.

    The potential is evaluated at the half step. The static minimum of V is
    removed before stepping and restored as a global phase, so constant
    offsets of V change nothing but that phase.
    """
    settings = settings or SolverSettings()
    grid = state.grid
    grid.validate(metal)
    if t_span is None:
        t_span = default_time_span(cfg, settings)
    t_start, t_end = float(t_span[0]), float(t_span[1])
    if t_end <= t_start:
        raise DomainError(f"empty time span {t_span}")

    period = cfg.shortest_period()
    step = dt if dt is not None else settings.dt
    if step is None:
        step = period / settings.steps_per_period if period is not None else 0.5
    if period is not None and step > period / 200.0 * (1.0 + 1e-12):
        raise DomainError(f"dt={step:.4g} does not resolve the carrier (needs <= T/200 = {period / 200.0:.4g})")
    n_steps = int(math.ceil((t_end - t_start) / step - 1e-9))
    step = (t_end - t_start) / n_steps

    z = grid.z
    dz = grid.dz
    v_static = static_potential(metal, z)[1:-1]
    profile = field_profile(metal, z)[1:-1]
    e_ref = float(v_static.min())
    base = 1.0 / dz**2 + (v_static - e_ref) - 1j * grid.absorber()[1:-1]
    off = -0.5 / dz**2
    alpha = 0.5j * step

    t_mid = t_start + (np.arange(n_steps) + 0.5) * step
    fields = cfg.f_dc * dc_switch_on(t_mid, t_start, settings.dc_ramp) + optical_field(cfg, t_mid)

    psi = state.psi[1:-1].astype(complex)
    i_d = grid.detector_index - 1
    below = grid.z[1:-1] <= grid.z_detector

    norm0 = float(np.sum(np.abs(psi) ** 2) * dz)
    norm_below0 = float(np.sum(np.abs(psi[below]) ** 2) * dz)
    if norm0 <= 0:
        raise DomainError("cannot propagate a zero state")

    ab = np.empty((3, psi.size), dtype=complex)
    record_every = max(1, int(settings.record_every))
    times: List[float] = []
    flux: List[float] = []
    for n in range(n_steps):
        diag = base + profile * fields[n]
        rhs = psi - alpha * _apply_h(psi, diag, off)
        ab[0, 1:] = alpha * off
        ab[1, :] = 1.0 + alpha * diag
        ab[2, :-1] = alpha * off
        new_psi = solve_banded((1, 1), ab, rhs, check_finite=False)
        if n % record_every == 0:
            mean_a = 0.5 * (psi[i_d] + new_psi[i_d])
            mean_b = 0.5 * (psi[i_d + 1] + new_psi[i_d + 1])
            times.append(t_mid[n])
            flux.append(_link_flux(mean_a, mean_b, dz))
        psi = new_psi
        if (n + 1) % settings.check_every == 0 or n == n_steps - 1:
            norm = float(np.sum(np.abs(psi) ** 2) * dz)
            if not np.isfinite(norm) or norm > norm0 * (1.0 + settings.max_norm_growth):
                raise NumericalError(
                    f"norm grew from {norm0:.12f} to {norm:.12f} at step {n + 1}",
                    step=n + 1,
                    report={"t": t_start + (n + 1) * step, "norm": norm, "dt": step},
                )

    psi = psi * np.exp(-1j * e_ref * (t_end - t_start))
    full = np.zeros(grid.n_points, dtype=complex)
    full[1:-1] = psi
    final = QuantumState(grid=grid, psi=full, t=t_end, energy=None)

    trace = FluxTrace(
        times=np.asarray(times),
        j=np.asarray(flux),
        z_detector=grid.z_detector,
        metadata={
            "grid": grid.describe(),
            "solver": {**settings.describe(), "dt_used_as": units.from_atomic(step, "as"), "n_steps": n_steps},
            "t_start_fs": units.from_atomic(t_start, "fs"),
            "t_end_fs": units.from_atomic(t_end, "fs"),
        },
        norm_start=norm0,
        norm_end=float(np.sum(np.abs(psi) ** 2) * dz),
        norm_below_start=norm_below0,
        norm_below_end=float(np.sum(np.abs(psi[below]) ** 2) * dz),
    )
    logger.debug(f"propagated {n_steps} steps, norm {norm0:.10f} -> {trace.norm_end:.10f}")
    return final, trace
