"""
Observables derived from flux traces: emitted yield, electron-pulse width and
burst decomposition, fluence nonlinearity, peak-to-baseline prediction and
carrier-envelope phase modulation depth.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.stats import linregress

from ..config import settings
from ..errors import DomainError, FitError, SamplingError
from ..physics import units
from ..physics.field_model import TWO_PI, FieldConfiguration, LaserPulse
from ..physics.potential import MetalModel
from ..physics.qdynamics import FluxTrace, GridSpec, QuantumState, SolverSettings, ground_state, propagate
from .fn_analytic import FNParams, quasi_static_yield

logger = logging.getLogger(__name__)

# Bursts separated by a dip below this fraction of the peak flux are distinct sub-pulses.
SUB_PULSE_THRESHOLD = 0.05

DEFAULT_PHASES = 16


@dataclass
class EmissionResult:
    total_yield: float
    pulse_fwhm: float
    peak_time: float
    sub_pulse_fractions: Tuple[float, ...] = ()
    sub_pulse_peaks: Tuple[float, ...] = ()

    @property
    def dominant_fraction(self) -> float:
        return max(self.sub_pulse_fractions) if self.sub_pulse_fractions else float("nan")

    @property
    def burst_spacing(self) -> float:
        """Peak-time separation of the two largest bursts; NaN for a single burst."""
        if len(self.sub_pulse_peaks) < 2 or len(self.sub_pulse_peaks) != len(self.sub_pulse_fractions):
            return float("nan")
        first, second = np.argsort(self.sub_pulse_fractions)[::-1][:2]
        return abs(self.sub_pulse_peaks[first] - self.sub_pulse_peaks[second])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "yield": self.total_yield,
            "pulse_fwhm_as": units.from_atomic(self.pulse_fwhm, "as"),
            "peak_time_fs": units.from_atomic(self.peak_time, "fs"),
            "n_sub_pulses": len(self.sub_pulse_fractions),
            "dominant_fraction": self.dominant_fraction,
            "burst_spacing_fs": units.from_atomic(self.burst_spacing, "fs"),
        }


@dataclass
class ModulationScan:
    """Yield against carrier-envelope phase on an even grid over [0, 2 pi)."""

    phases: np.ndarray
    yields: np.ndarray
    label: str = "tdse"

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.yields = np.asarray(self.yields, dtype=float)
        if self.phases.shape != self.yields.shape:
            raise DomainError("phases and yields differ in length")

    @property
    def depth(self) -> float:
        return modulation_depth(self.yields)

    @property
    def best_phase(self) -> float:
        return float(self.phases[int(np.argmax(self.yields))])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"phase_rad": self.phases, "yield": self.yields})

    def summary(self) -> Dict[str, Any]:
        return {
            "model": self.label,
            "n_phases": int(self.phases.size),
            "depth": self.depth,
            "yield_max": float(self.yields.max()),
            "yield_min": float(self.yields.min()),
            "best_phase_rad": self.best_phase,
        }


@dataclass(frozen=True)
class OperatingPoint:
    """Everything one TDSE yield evaluation needs, atomic units throughout."""

    metal: MetalModel
    grid: GridSpec
    pulse: LaserPulse
    f_dc: float = 0.0
    enhancement: float = 1.0
    polarity: int = 1
    solver: SolverSettings = field(default_factory=SolverSettings)

    def configuration(self, phi: Optional[float] = None, peak_scale: float = 1.0) -> FieldConfiguration:
        pulse = self.pulse if phi is None else self.pulse.with_phase(phi)
        if peak_scale != 1.0:
            pulse = pulse.scaled(peak_scale)
        return FieldConfiguration(f_dc=self.f_dc, pulses=(pulse,), enhancement=self.enhancement, polarity=self.polarity)

    def with_pulse(self, pulse: LaserPulse) -> "OperatingPoint":
        return replace(self, pulse=pulse)

    def describe(self) -> Dict[str, Any]:
        return {
            "f_dc_GVm": units.from_atomic(self.f_dc, "GV/m"),
            "f_laser_GVm": units.from_atomic(self.pulse.F0, "GV/m"),
            "fluence_Jm2": units.from_atomic(self.pulse.fluence, "J/m2"),
            "tau_fs": units.from_atomic(self.pulse.tau, "fs"),
            "phi_rad": self.pulse.phi,
            "enhancement": self.enhancement,
            "polarity": self.polarity,
            "well_width_nm": units.from_atomic(self.metal.require_width(), "nm"),
        }


def _check_uniform(times: np.ndarray) -> None:
    if times.size < 2:
        return
    steps = np.diff(times)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6, atol=0.0):
        raise SamplingError("flux trace is not uniformly sampled")


def integrate_yield(trace: FluxTrace) -> float:
    """Trapezoidal time integral of the detector flux."""
    if len(trace) == 0:
        raise DomainError("cannot integrate an empty flux trace")
    _check_uniform(trace.times)
    if len(trace) == 1:
        return 0.0
    return float(trapezoid(trace.j, trace.times))


def _half_max_crossing(t: np.ndarray, j: np.ndarray, k: int, half: float, direction: int) -> float:
    i = k
    while 0 <= i + direction < len(j) and j[i + direction] > half:
        i += direction
    nxt = i + direction
    if not 0 <= nxt < len(j):
        return float(t[i])
    # linear interpolation between the last point above and the first point at/below half
    frac = (j[i] - half) / (j[i] - j[nxt])
    return float(t[i] + frac * (t[nxt] - t[i]))


def _burst_boundaries(j: np.ndarray, threshold: float) -> List[int]:
    """Indices splitting the trace at the deepest point of each sub-threshold dip."""
    above = j > threshold
    runs: List[Tuple[int, int]] = []
    start = None
    for i, flag in enumerate(above):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(j) - 1))

    cuts = [0]
    for (_, end_a), (start_b, _) in zip(runs, runs[1:]):
        gap = slice(end_a + 1, start_b)
        cuts.append(end_a + 1 + int(np.argmin(j[gap])))
    cuts.append(len(j) - 1)
    return cuts


def pulse_width(trace: FluxTrace) -> Tuple[float, Tuple[float, ...], float]:
    """FWHM of the dominant burst, per-burst yield shares and the peak time.

    The dominant burst is the contiguous region above half maximum around the
    global maximum, with linearly interpolated crossings.
    """
    if len(trace) < 3:
        raise DomainError("flux trace too short for a width")
    t, j = trace.times, trace.j
    k = int(np.argmax(j))
    j_max = float(j[k])
    if not j_max > 0:
        raise DomainError("flux trace has no positive maximum")

    half = 0.5 * j_max
    fwhm = _half_max_crossing(t, j, k, half, +1) - _half_max_crossing(t, j, k, half, -1)

    cuts = _burst_boundaries(j, SUB_PULSE_THRESHOLD * j_max)
    parts = np.array([trapezoid(j[a:b + 1], t[a:b + 1]) for a, b in zip(cuts, cuts[1:])])
    total = float(parts.sum())
    fractions = tuple(float(x) for x in parts / total) if total > 0 else ()
    return fwhm, fractions, float(t[k])


def burst_peak_times(trace: FluxTrace) -> Tuple[float, ...]:
    """Flux maximum of each burst, in the order of the shares from pulse_width."""
    t, j = trace.times, trace.j
    cuts = _burst_boundaries(j, SUB_PULSE_THRESHOLD * float(j.max()))
    return tuple(float(t[a + int(np.argmax(j[a:b + 1]))]) for a, b in zip(cuts, cuts[1:]))


def emission_result(trace: FluxTrace) -> EmissionResult:
    fwhm, fractions, peak_time = pulse_width(trace)
    return EmissionResult(
        total_yield=integrate_yield(trace),
        pulse_fwhm=fwhm,
        peak_time=peak_time,
        sub_pulse_fractions=fractions,
        sub_pulse_peaks=burst_peak_times(trace),
    )


def nonlinearity_exponent(points: Sequence[Tuple[float, float]]) -> float:
    """Least-squares slope of log(yield) against log(fluence)."""
    data = np.asarray(points, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 2:
        raise DomainError("need at least three (fluence, yield) pairs")
    if np.any(data <= 0):
        raise DomainError("fluences and yields must be positive")
    x, y = np.log(data[:, 0]), np.log(data[:, 1])
    if np.ptp(x) == 0:
        raise FitError("all fluences are identical; exponent is undetermined", residuals=list(y))
    return float(linregress(x, y).slope)


def peak_to_baseline_from_exponent(n: float) -> float:
    """2^(2n - 1): field doubling raises fluence 4x (yield 4^n), two separate pulses give 2x."""
    if n < 1:
        raise DomainError(f"exponent must be >= 1, got {n}")
    return float(2.0 ** (2.0 * n - 1.0))


def modulation_depth(yields) -> float:
    y = np.asarray(yields, dtype=float)
    if y.size == 0:
        raise DomainError("no yields to compare")
    if np.any(y < 0):
        logger.warning(f"clipping {int(np.sum(y < 0))} negative yields to zero")
        y = np.clip(y, 0.0, None)
    hi, lo = float(y.max()), float(y.min())
    if hi + lo == 0:
        return 0.0
    return (hi - lo) / (hi + lo)


def phase_grid(n_phases: int) -> np.ndarray:
    if n_phases < 8:
        raise DomainError(f"need at least 8 phases, got {n_phases}")
    return np.arange(n_phases) * (TWO_PI / n_phases)


# ---------------------------------------------------------------------------
# TDSE-backed evaluations
# ---------------------------------------------------------------------------

def prepare_state(op: OperatingPoint) -> QuantumState:
    return ground_state(op.metal, op.grid)


def simulate(op: OperatingPoint, initial: QuantumState, phi: Optional[float] = None,
             peak_scale: float = 1.0) -> Tuple[float, FluxTrace]:
    """One propagation; returns (yield, trace)."""
    _, trace = propagate(initial, op.metal, op.configuration(phi, peak_scale), settings=op.solver)
    return integrate_yield(trace), trace


def _yield_only(op: OperatingPoint, initial: QuantumState, phi: Optional[float], peak_scale: float) -> float:
    return simulate(op, initial, phi, peak_scale)[0]


def _fan_out(op: OperatingPoint, initial: QuantumState, jobs: Sequence[Tuple[Optional[float], float]],
             workers: Optional[int]) -> List[float]:
    n_jobs = settings.resolved_workers(workers)
    return Parallel(n_jobs=n_jobs)(delayed(_yield_only)(op, initial, phi, scale) for phi, scale in jobs)


def ce_modulation_scan(op: OperatingPoint, n_phases: int = DEFAULT_PHASES, workers: Optional[int] = None,
                       initial: Optional[QuantumState] = None) -> ModulationScan:
    """One propagation per phase; results are gathered in phase order."""
    phases = phase_grid(n_phases)
    initial = initial if initial is not None else prepare_state(op)
    yields = _fan_out(op, initial, [(float(phi), 1.0) for phi in phases], workers)
    scan = ModulationScan(phases=phases, yields=np.asarray(yields), label="tdse")
    logger.info(f"CE scan over {n_phases} phases: depth = {scan.depth:.4%}")
    return scan


def quasi_static_modulation_scan(pulse: LaserPulse, f_dc: float, params: FNParams, n_phases: int = DEFAULT_PHASES,
                                 enhancement: float = 1.0, polarity: int = 1) -> ModulationScan:
    """Same scan with the instantaneous Fowler-Nordheim current in place of the TDSE."""
    phases = phase_grid(n_phases)
    yields = []
    for phi in phases:
        cfg = FieldConfiguration(f_dc=f_dc, pulses=(pulse.with_phase(float(phi)),), enhancement=enhancement, polarity=polarity)
        yields.append(quasi_static_yield(cfg, params))
    return ModulationScan(phases=phases, yields=np.asarray(yields), label="quasi_static")


def local_exponent(yield_fn: Callable[[float], float], fluence: float, rel_step: float = 0.1) -> float:
    """Centred finite-difference d ln Y / d ln fluence over fluence * (1 +/- rel_step)."""
    if fluence <= 0 or not 0 < rel_step < 1:
        raise DomainError(f"need fluence > 0 and 0 < rel_step < 1, got {fluence}, {rel_step}")
    hi, lo = yield_fn(fluence * (1 + rel_step)), yield_fn(fluence * (1 - rel_step))
    if hi <= 0 or lo <= 0:
        raise DomainError("yields must be positive for a log-derivative")
    return math.log(hi / lo) / math.log((1 + rel_step) / (1 - rel_step))


@dataclass
class PeakToBaseline:
    exponent: float
    ratio_from_exponent: float
    ratio_direct: float
    yields: Dict[str, float] = field(default_factory=dict)
    # n < 1 was raised to 1 for the exponent route
    exponent_clamped: bool = False

    @property
    def route_mismatch(self) -> float:
        """Relative disagreement of the two routes."""
        return abs(self.ratio_from_exponent - self.ratio_direct) / self.ratio_direct

    def to_dict(self) -> Dict[str, Any]:
        return {
            "exponent": self.exponent,
            "ratio_from_exponent": self.ratio_from_exponent,
            "ratio_direct": self.ratio_direct,
            "route_mismatch": self.route_mismatch,
            "exponent_clamped": self.exponent_clamped,
            **{f"yield_{k}": v for k, v in self.yields.items()},
        }


def predict_peak_to_baseline(op: OperatingPoint, rel_step: float = 0.1, workers: Optional[int] = None,
                             initial: Optional[QuantumState] = None) -> PeakToBaseline:
    """Exponent route 2^(2n-1) with n from fluence * (1 +/- rel_step), plus the
    direct route Y(2 F0) / (2 Y(F0))."""
    initial = initial if initial is not None else prepare_state(op)
    scales = {
        "low": math.sqrt(1 - rel_step),
        "high": math.sqrt(1 + rel_step),
        "single": 1.0,
        "double": 2.0,
    }
    values = _fan_out(op, initial, [(None, s) for s in scales.values()], workers)
    return peak_to_baseline_from_yields(dict(zip(scales, values)), rel_step)


def peak_to_baseline_from_yields(yields: Dict[str, float], rel_step: float = 0.1) -> PeakToBaseline:
    """Both routes from the low/high/single/double yields of predict_peak_to_baseline."""
    if min(yields.values()) <= 0:
        raise DomainError(f"non-positive yield in peak-to-baseline prediction: {yields}")

    n = math.log(yields["high"] / yields["low"]) / math.log((1 + rel_step) / (1 - rel_step))
    clamped = n < 1.0
    if clamped:
        logger.warning(f"sub-linear fluence exponent n = {n:.3f}; exponent route evaluated at n = 1")
    return PeakToBaseline(
        exponent=n,
        ratio_from_exponent=peak_to_baseline_from_exponent(max(n, 1.0)),
        ratio_direct=yields["double"] / (2.0 * yields["single"]),
        yields=dict(yields),
        exponent_clamped=clamped,
    )
