"""
Closed-form Fowler-Nordheim emission model.

Fields are in GV/m (= V/nm) and the work function in eV, the units the
Schottky-Nordheim barrier factor is tabulated in. ``a`` carries whatever
current unit the caller wants; it cancels in every ratio.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import pandera as pa
import scipy.constants as const
from scipy.integrate import trapezoid
from scipy.optimize import least_squares

from ..errors import DegeneracyError, DomainError, FitError, OutputError
from ..physics import units
from ..physics.field_model import FieldConfiguration, total_field

logger = logging.getLogger(__name__)

# e^2 / (4 pi eps0) in eV nm: Schottky lowering is sqrt(SCHOTTKY_EV_NM * F[V/nm]) eV.
SCHOTTKY_EV_NM = const.e / (4.0 * math.pi * const.epsilon_0) / const.nano


def fn_b_constant(work_function_eV: float) -> float:
    """B = 4 sqrt(2 m) Phi^{3/2} / (3 hbar q) in GV/m (about 6.83 Phi^{3/2})."""
    if work_function_eV <= 0:
        raise DomainError(f"work function must be positive, got {work_function_eV}")
    phi_J = work_function_eV * const.e
    b_Vm = 4.0 * math.sqrt(2.0 * const.m_e) * phi_J**1.5 / (3.0 * const.hbar * const.e)
    return b_Vm / const.giga


def schottky_lowering(F):
    """Image-force barrier lowering in eV for a field in GV/m."""
    return np.sqrt(SCHOTTKY_EV_NM * np.clip(np.asarray(F, dtype=float), 0.0, None))


def nordheim_v(y):
    """Barrier-shape factor v(y) = 1 - y^2 + (y^2 / 3) ln y, clamped to 0 for y >= 1."""
    y = np.asarray(y, dtype=float)
    safe = np.where(y > 0, y, 1.0)
    v = 1.0 - safe**2 + (safe**2 / 3.0) * np.log(safe)
    v = np.where(y <= 0, 1.0, np.where(y >= 1.0, 0.0, v))
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class FNParams:
    """I = a F^2 exp(-b_eff / F); b_eff = b v(y) with the correction on, b otherwise.

    b = 0 is allowed and gives the pure quadratic detector.
    """

    a: float = 1.0
    b: float = field(default_factory=lambda: fn_b_constant(4.5))
    schottky_correction: bool = True
    work_function_eV: float = 4.5

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError(f"prefactor a must be positive, got {self.a}")
        if self.b < 0:
            raise DomainError(f"exponent constant b must be non-negative, got {self.b}")
        if self.work_function_eV <= 0:
            raise DomainError(f"work function must be positive, got {self.work_function_eV}")

    def effective_b(self, F):
        if not self.schottky_correction:
            return self.b if np.ndim(F) == 0 else np.full(np.shape(F), self.b)
        y = schottky_lowering(F) / self.work_function_eV
        return self.b * nordheim_v(y)

    def current(self, F):
        """Rectified instantaneous current: fn_current where F > 0, zero otherwise."""
        F = np.asarray(F, dtype=float)
        positive = F > 0
        safe = np.where(positive, F, 1.0)
        out = np.where(positive, self.a * safe**2 * np.exp(-self.effective_b(safe) / safe), 0.0)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> Dict[str, Any]:
        return asdict(self)


def default_fn_params(work_function_eV: float = 4.5, a: float = 1.0, schottky_correction: bool = True) -> FNParams:
    return FNParams(a=a, b=fn_b_constant(work_function_eV), schottky_correction=schottky_correction,
                    work_function_eV=work_function_eV)


def fn_current(p: FNParams, F):
    F_arr = np.asarray(F, dtype=float)
    if np.any(F_arr <= 0):
        raise DomainError(f"Fowler-Nordheim current needs F > 0, got {F}")
    return p.current(F_arr)


def barrier_suppressed(p: FNParams, F) -> bool:
    """True where image-force lowering exceeds the work function (v clamped to 0)."""
    if not p.schottky_correction:
        return False
    return bool(np.any(schottky_lowering(F) >= p.work_function_eV))


def _check_fields(f_laser, f_dc) -> None:
    if np.any(np.asarray(f_laser) < 0):
        raise DomainError(f"f_laser must be non-negative, got {f_laser}")
    if np.any(np.asarray(f_laser) + np.asarray(f_dc) <= 0):
        raise DomainError(f"total field f_laser + f_dc must be positive, got {f_laser} + {f_dc}")


def iac_baseline(p: FNParams, f_laser, f_dc):
    """Two well-separated pulses: 2 a (F_l + F_dc)^2 exp(-b / (F_l + F_dc))."""
    _check_fields(f_laser, f_dc)
    return 2.0 * fn_current(p, np.asarray(f_laser) + np.asarray(f_dc))


def iac_peak(p: FNParams, f_laser, f_dc):
    """Two perfectly overlapping pulses: a (2 F_l + F_dc)^2 exp(-b / (2 F_l + F_dc))."""
    _check_fields(f_laser, f_dc)
    return fn_current(p, 2.0 * np.asarray(f_laser) + np.asarray(f_dc))


def _log_ratio(p: FNParams, f_laser, f_dc, b: Optional[float] = None):
    b = p.b if b is None else b
    low = np.asarray(f_laser) + np.asarray(f_dc)
    high = 2.0 * np.asarray(f_laser) + np.asarray(f_dc)
    if p.schottky_correction:
        v_low = nordheim_v(schottky_lowering(low) / p.work_function_eV)
        v_high = nordheim_v(schottky_lowering(high) / p.work_function_eV)
    else:
        v_low = v_high = 1.0
    return 2.0 * np.log(high / low) - math.log(2.0) - b * v_high / high + b * v_low / low


def peak_to_baseline_ratio(p: FNParams, f_laser, f_dc):
    """iac_peak / iac_baseline without ever touching the prefactor a."""
    _check_fields(f_laser, f_dc)
    out = np.exp(_log_ratio(p, f_laser, f_dc))
    return float(out) if np.ndim(out) == 0 else out


def ratio_vs_voltage(p: FNParams, f_laser: float, voltages, tip_radius_nm: float, k: float = 5.0) -> pd.DataFrame:
    """Peak, baseline and their ratio against DC tip voltage, F_dc = U / (k r)."""
    v = np.asarray(voltages, dtype=float)
    f_dc = units.tip_voltage_to_field(v, tip_radius_nm, k)  # V / nm = GV/m
    return pd.DataFrame({
        "voltage_V": v,
        "f_dc_GVm": f_dc,
        "peak": iac_peak(p, f_laser, f_dc),
        "baseline": iac_baseline(p, f_laser, f_dc),
        "ratio": peak_to_baseline_ratio(p, f_laser, f_dc),
    })


def quasi_static_yield(cfg: FieldConfiguration, detector, samples_per_period: int = 256) -> float:
    """Time integral (fs) of the rectified instantaneous current under the total field.

    ``detector`` is anything with a ``current(F_GVm)`` method.
    """
    window = cfg.window()
    if window is None:
        raise DomainError("quasi-static yield needs at least one pulse")
    dt = cfg.shortest_period() / samples_per_period
    t = np.arange(window[0], window[1] + 0.5 * dt, dt)
    f_GVm = units.from_atomic(total_field(cfg, t), "GV/m")
    return float(trapezoid(detector.current(f_GVm), units.from_atomic(t, "fs")))


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

RATIO_SCHEMA = pa.DataFrameSchema(
    {
        "f_dc_GVm": pa.Column(float, pa.Check.ge(0.0), nullable=False),
        "ratio": pa.Column(float, pa.Check.gt(0.0), nullable=False),
    },
    coerce=True,
    strict=False,
)


@dataclass
class FitReport:
    f_laser: float
    f_laser_sigma: float
    b: float
    b_sigma: Optional[float]
    residual_norm: float
    residuals: List[float]
    n_points: int
    fit_b: bool
    nfev: int
    message: str
    suppressed_points: int = 0
    settings: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(self.to_dict(), indent=2))
        except OSError as e:
            raise OutputError(f"could not write fit report: {e}", path=str(path)) from e
        return path


def read_ratio_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Load (f_dc_GVm, ratio) rows; '#' lines are comments."""
    try:
        frame = pd.read_csv(path, comment="#")
    except OSError as e:
        raise OutputError(f"could not read ratio data: {e}", path=str(path)) from e
    try:
        return RATIO_SCHEMA.validate(frame)
    except (pa.errors.SchemaError, pa.errors.SchemaErrors) as e:
        raise DomainError(f"invalid ratio data in {path}: {e}") from e


def _as_arrays(data) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(data, pd.DataFrame):
        frame = RATIO_SCHEMA.validate(data)
        return frame["f_dc_GVm"].to_numpy(float), frame["ratio"].to_numpy(float)
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("fit data must be (f_dc, ratio) pairs")
    return arr[:, 0], arr[:, 1]


def fit_f_laser(
    data: Union[pd.DataFrame, Sequence[Tuple[float, float]]],
    p: FNParams,
    fit_b: bool = False,
    f_laser_guess: float = 1.0,
    b_guess: Optional[float] = None,
    xtol: float = 1e-10,
) -> FitReport:
    """Least-squares fit of log(peak/baseline) over F_laser (and b when ``fit_b``)."""
    f_dc, ratio = _as_arrays(data)
    n_params = 2 if fit_b else 1
    if f_dc.size < 3:
        raise DomainError(f"need at least 3 data points, got {f_dc.size}")
    if np.any(ratio <= 0):
        raise DomainError("ratios must be positive")
    log_ratio = np.log(ratio)
    if np.ptp(log_ratio) <= 1e-12 * max(1.0, float(np.abs(log_ratio).max())):
        raise DegeneracyError("ratio does not vary with f_dc; F_laser and b are unidentifiable",
                              residuals=list(log_ratio))
    if np.unique(f_dc).size < n_params + 1:
        raise DegeneracyError("too few distinct DC fields for the requested parameters", residuals=[])

    def residuals(theta):
        b = theta[1] if fit_b else p.b
        return _log_ratio(p, theta[0], f_dc, b) - log_ratio

    x0 = [f_laser_guess, p.b if b_guess is None else b_guess] if fit_b else [f_laser_guess]
    lower = [max(1e-9, float(-f_dc.min()) + 1e-9)] + ([0.0] if fit_b else [])
    result = least_squares(residuals, x0, bounds=(lower, np.inf), method="trf",
                           xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    if result.status <= 0:
        raise FitError(f"fit did not converge: {result.message}", residuals=list(result.fun))

    jac = result.jac
    if np.linalg.matrix_rank(jac) < n_params or np.linalg.cond(jac.T @ jac) > 1e14:
        raise DegeneracyError("singular Jacobian at the optimum", residuals=list(result.fun))

    dof = f_dc.size - n_params
    s2 = float(result.fun @ result.fun) / dof if dof > 0 else float("nan")
    sigma = np.sqrt(np.diag(np.linalg.inv(jac.T @ jac)) * s2)

    f_laser = float(result.x[0])
    b = float(result.x[1]) if fit_b else p.b
    suppressed = int(sum(barrier_suppressed(p, 2.0 * f_laser + x) for x in f_dc))
    if suppressed:
        logger.warning(f"barrier fully suppressed at {suppressed} of {f_dc.size} points")
    logger.info(f"fitted F_laser = {f_laser:.6g} +/- {sigma[0]:.2g} GV/m")
    return FitReport(
        f_laser=f_laser,
        f_laser_sigma=float(sigma[0]),
        b=b,
        b_sigma=float(sigma[1]) if fit_b else None,
        residual_norm=float(np.linalg.norm(result.fun)),
        residuals=[float(r) for r in result.fun],
        n_points=int(f_dc.size),
        fit_b=fit_b,
        nfev=int(result.nfev),
        message=str(result.message),
        suppressed_points=suppressed,
        settings={"f_laser_guess": f_laser_guess, "b_guess": x0[1] if fit_b else None, "xtol": xtol,
                  "schottky_correction": p.schottky_correction, "work_function_eV": p.work_function_eV},
    )
