"""
Interferometric autocorrelation: emitted charge against the delay between two
replica pulses, from the instantaneous-current surrogate or from full TDSE runs.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import trapezoid

from ..config import settings
from ..errors import DomainError, SamplingError
from ..physics import units
from ..physics.field_model import WINDOW_TAUS, FieldConfiguration, LaserPulse, total_field
from ..physics.qdynamics import QuantumState, propagate
from .emission_metrics import OperatingPoint, integrate_yield, prepare_state

logger = logging.getLogger(__name__)

# Baseline is taken where |delay| exceeds this many pulse durations.
BASELINE_TAUS = 5.0
MAX_PLATEAU_SPREAD = 0.02


@dataclass(frozen=True)
class PowerLawDetector:
    """n-th order intensity detector: current a F^(2n) on the emitting half-cycles."""

    order: float = 2.0
    a: float = 1.0

    def __post_init__(self):
        if self.order <= 0 or self.a <= 0:
            raise DomainError(f"order and a must be positive, got {self.order}, {self.a}")

    def current(self, F):
        F = np.asarray(F, dtype=float)
        out = np.where(F > 0, self.a * np.abs(F) ** (2.0 * self.order), 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass
class IACTrace:
    delays_fs: np.ndarray
    currents: np.ndarray
    tau_fs: float
    period_fs: float
    model: str = "surrogate"

    def __post_init__(self):
        self.delays_fs = np.asarray(self.delays_fs, dtype=float)
        self.currents = np.asarray(self.currents, dtype=float)
        if self.delays_fs.shape != self.currents.shape:
            raise DomainError("delays and currents differ in length")
        if not np.any(self._plateau_mask()):
            raise SamplingError(f"no delays beyond {BASELINE_TAUS} tau for the baseline")

    def _plateau_mask(self) -> np.ndarray:
        return np.abs(self.delays_fs) > BASELINE_TAUS * self.tau_fs

    @property
    def baseline(self) -> float:
        return float(np.mean(self.currents[self._plateau_mask()]))

    @property
    def plateau_spread(self) -> float:
        plateau = self.currents[self._plateau_mask()]
        return float(np.ptp(plateau) / np.mean(plateau)) if np.mean(plateau) != 0 else float("nan")

    @property
    def peak(self) -> float:
        """Fringe maximum."""
        return float(self.currents.max())

    @property
    def peak_to_baseline(self) -> float:
        return self.peak / self.baseline

    @property
    def fringe_averaged_peak(self) -> float:
        """Mean current over one carrier period of delay centred on zero."""
        half = 0.5 * self.period_fs
        mask = np.abs(self.delays_fs) <= half * (1 + 1e-9)
        d, c = np.abs(self.delays_fs[mask]), self.currents[mask]
        order = np.argsort(d, kind="stable")
        d, c = d[order], c[order]
        if d.size < 2 or d[-1] <= 0:
            return float("nan")
        return float(trapezoid(c, d) / d[-1])

    @property
    def fringe_averaged_ratio(self) -> float:
        return self.fringe_averaged_peak / self.baseline

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"delay_fs": self.delays_fs, "current": self.currents})

    def summary(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "peak_to_baseline": self.peak_to_baseline,
            "fringe_averaged_ratio": self.fringe_averaged_ratio,
            "baseline": self.baseline,
            "peak": self.peak,
            "plateau_spread": self.plateau_spread,
            "baseline_window_fs": [BASELINE_TAUS * self.tau_fs, float(np.abs(self.delays_fs).max())],
        }


def integration_step(pulse: LaserPulse, samples_per_period: int = 256) -> float:
    return pulse.period / samples_per_period


def build_delay_grid(
    pulse: LaserPulse,
    dt: float,
    fine_step: Optional[float] = None,
    coarse_step: float = units.to_atomic(2.0, "fs"),
    fine_extent_taus: float = WINDOW_TAUS,
    max_delay: Optional[float] = None,
) -> np.ndarray:
    """Delays (atomic units) with a fringe-resolving section up to fine_extent_taus * tau
    and a coarse section beyond, every value an integer multiple of ``dt``."""
    fine_step = pulse.period / 16.0 if fine_step is None else fine_step
    max_delay = (BASELINE_TAUS + 2.0) * pulse.tau if max_delay is None else max_delay
    fine_end = min(fine_extent_taus * pulse.tau, max_delay)
    fine = np.arange(0.0, fine_end + 0.5 * fine_step, fine_step)
    coarse = np.arange(fine[-1] + coarse_step, max_delay + 0.5 * coarse_step, coarse_step)
    steps = np.unique(np.round(np.concatenate([fine, coarse]) / dt).astype(np.int64))
    return steps * dt


def _check_delays(delays: np.ndarray, pulse: LaserPulse) -> None:
    if delays.size == 0:
        raise SamplingError("empty delay grid")
    if np.any(np.diff(delays) <= 0):
        raise SamplingError("delays must be strictly increasing")
    fringe = np.abs(delays) <= WINDOW_TAUS * pulse.tau
    spacing = np.diff(delays[fringe])
    if spacing.size and spacing.max() > pulse.period / 8.0 * (1 + 1e-9):
        raise SamplingError(
            f"delay spacing {units.from_atomic(spacing.max(), 'fs'):.3f} fs does not resolve fringes "
            f"(needs <= T/8 = {units.from_atomic(pulse.period / 8.0, 'fs'):.3f} fs)"
        )
    if np.abs(delays).max() <= BASELINE_TAUS * pulse.tau:
        raise SamplingError(f"delays must extend beyond {BASELINE_TAUS} tau for the baseline")


def pair_configuration(pulse: LaserPulse, delay: float, f_dc: float, enhancement: float = 1.0, polarity: int = 1) -> FieldConfiguration:
    """Replica pair; negative delays put the replica first."""
    return FieldConfiguration(f_dc=f_dc, pulses=(pulse, pulse.shifted(delay)), enhancement=enhancement, polarity=polarity)


def excess_charge(cfg: FieldConfiguration, detector, dt: float) -> float:
    """Sum over t = t_start + k dt of current(F_dc + F_opt) - current(F_dc), times dt (fs)."""
    start, end = cfg.window()
    t = start + dt * np.arange(int(math.floor((end - start) / dt + 1e-9)) + 1)
    f_total = units.from_atomic(total_field(cfg, t), "GV/m")
    f_dc = units.from_atomic(cfg.f_dc, "GV/m")
    excess = detector.current(f_total) - detector.current(f_dc)
    return float(np.sum(excess) * units.from_atomic(dt, "fs"))


def iac_trace_surrogate(
    pulse: LaserPulse,
    f_dc: float,
    detector,
    delays: Optional[Sequence[float]] = None,
    dt: Optional[float] = None,
    enhancement: float = 1.0,
    polarity: int = 1,
    **grid_options,
) -> IACTrace:
    """Instantaneous-current autocorrelation; ``detector`` is FNParams or PowerLawDetector.

    Delays (atomic units) are rounded to multiples of the integration step so
    both replicas are sampled at identical offsets. ``grid_options`` go to
    build_delay_grid when no delays are given.
    """
    dt = integration_step(pulse) if dt is None else dt
    grid = build_delay_grid(pulse, dt, **grid_options) if delays is None else np.round(np.asarray(delays, dtype=float) / dt) * dt
    _check_delays(grid, pulse)
    currents = np.array([excess_charge(pair_configuration(pulse, d, f_dc, enhancement, polarity), detector, dt) for d in grid])
    if not np.all(currents > 0):
        logger.warning(f"{int(np.sum(currents <= 0))} delays gave non-positive excess charge")
    return IACTrace(
        delays_fs=units.from_atomic(grid, "fs"),
        currents=currents,
        tau_fs=units.from_atomic(pulse.tau, "fs"),
        period_fs=units.from_atomic(pulse.period, "fs"),
        model="surrogate",
    )


def single_pulse_charge(pulse: LaserPulse, f_dc: float, detector, dt: Optional[float] = None,
                        enhancement: float = 1.0, polarity: int = 1) -> float:
    dt = integration_step(pulse) if dt is None else dt
    cfg = FieldConfiguration(f_dc=f_dc, pulses=(pulse,), enhancement=enhancement, polarity=polarity)
    return excess_charge(cfg, detector, dt)


def _tdse_yield(op: OperatingPoint, initial: QuantumState, delay: float) -> float:
    cfg = pair_configuration(op.pulse, delay, op.f_dc, op.enhancement, op.polarity)
    _, trace = propagate(initial, op.metal, cfg, settings=op.solver)
    return integrate_yield(trace)


def iac_trace_tdse(
    op: OperatingPoint,
    delays: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    initial: Optional[QuantumState] = None,
    **grid_options,
) -> IACTrace:
    """One propagation per delay, fanned out over workers and gathered by delay index."""
    pulse = op.pulse
    dt = op.solver.dt or pulse.period / op.solver.steps_per_period
    grid = build_delay_grid(pulse, dt, **grid_options) if delays is None else np.round(np.asarray(delays, dtype=float) / dt) * dt
    _check_delays(grid, pulse)
    initial = initial if initial is not None else prepare_state(op)
    n_jobs = settings.resolved_workers(workers)
    logger.info(f"TDSE autocorrelation: {grid.size} delays on {n_jobs} workers")
    currents = Parallel(n_jobs=n_jobs)(delayed(_tdse_yield)(op, initial, float(d)) for d in grid)
    return IACTrace(
        delays_fs=units.from_atomic(grid, "fs"),
        currents=np.asarray(currents),
        tau_fs=units.from_atomic(pulse.tau, "fs"),
        period_fs=units.from_atomic(pulse.period, "fs"),
        model="tdse",
    )
