"""
Sweep execution: per-point tasks, well calibration cache and the worker pool
"""

import logging
import time
import traceback
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from .. import __version__
from ..analysis import autocorr, emission_metrics, fn_analytic
from ..config import settings
from ..physics import units
from ..physics.qdynamics import calibrate_well_width
from ..validators.run_validator import RunValidator
from .spec import RunConfig, SweepSpec

logger = logging.getLogger(__name__)


@dataclass
class RunRecord:
    index: Tuple[int, ...]
    task: str
    axis_values: Dict[str, float]
    params: Dict[str, Any]
    config_hash: str
    status: str = "success"
    results: Dict[str, float] = field(default_factory=dict)
    anomalies: List[Dict[str, Any]] = field(default_factory=list)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    error: Optional[Dict[str, str]] = None
    wall_time_s: float = 0.0
    version: str = __version__
    artifacts: Dict[str, pd.DataFrame] = field(default_factory=dict)

    @property
    def point_id(self) -> str:
        return "-".join(str(i) for i in self.index) if self.index else "0"

    @property
    def ok(self) -> bool:
        return self.status != "failed"

    def manifest_entry(self) -> Dict[str, Any]:
        return {
            "point": self.point_id,
            "index": list(self.index),
            "task": self.task,
            "status": self.status,
            "axis_values": self.axis_values,
            "results": self.results,
            "anomalies": self.anomalies,
            "error": self.error,
            "wall_time_s": self.wall_time_s,
            "version": self.version,
            "config_hash": self.config_hash,
            "params": self.params,
            "artifacts": sorted(self.artifacts),
        }


def build_operating_point(config: RunConfig, well_width: float) -> emission_metrics.OperatingPoint:
    return emission_metrics.OperatingPoint(
        metal=config.metal.to_model(well_width),
        grid=config.grid.to_grid(well_width),
        pulse=config.laser.to_pulse(),
        f_dc=config.laser.f_dc,
        enhancement=config.laser.enhancement,
        polarity=config.laser.polarity,
        solver=config.solver.to_settings(),
    )


def _calibration_key(config: RunConfig) -> str:
    return repr((config.metal.model_dump(), config.grid.model_dump()))


def calibrate(config: RunConfig) -> float:
    if config.metal.well_width_nm is not None:
        return units.to_atomic(config.metal.well_width_nm, "nm")
    return calibrate_well_width(config.metal.to_model(), config.grid.template())


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------

def _task_yield(config: RunConfig, op) -> Tuple[Dict[str, float], Dict[str, Any], Dict[str, pd.DataFrame]]:
    initial = emission_metrics.prepare_state(op)
    total, trace = emission_metrics.simulate(op, initial)
    results = {"yield": total}
    if trace.j.max() > 0:
        results.update(emission_metrics.emission_result(trace).to_dict())
    lost = trace.norm_lost_below
    results["norm_lost_below"] = lost
    results["continuity_error"] = abs(total - lost) / lost if lost > 0 else float("nan")
    results["keldysh"] = units.keldysh_parameter(
        op.pulse.F0 * op.enhancement, op.metal.work_function, op.pulse.omega
    )
    diagnostics = {
        "norm_start": trace.norm_start,
        "norm_end": trace.norm_end,
        "continuity_error": results["continuity_error"],
        "dominant_fraction": results.get("dominant_fraction"),
        "ground_energy_eV": units.from_atomic(initial.energy, "eV"),
        **trace.metadata,
    }
    return results, diagnostics, {"flux": trace.to_frame()}


def _task_modulation(config: RunConfig, op):
    scan = emission_metrics.ce_modulation_scan(op, config.sweep.n_phases, workers=1)
    summary = scan.summary()
    results = {k: float(v) for k, v in summary.items() if isinstance(v, (int, float))}
    return results, {"grid": op.grid.describe()}, {"phase_scan": scan.to_frame()}


def _task_quasi_static(config: RunConfig, _op):
    params = config.fn.to_params(config.metal)
    scan = emission_metrics.quasi_static_modulation_scan(
        config.laser.to_pulse(), config.laser.f_dc, params, config.sweep.n_phases,
        config.laser.enhancement, config.laser.polarity,
    )
    results = {k: float(v) for k, v in scan.summary().items() if isinstance(v, (int, float))}
    return results, {}, {"phase_scan": scan.to_frame()}


def detector_for(config: RunConfig):
    if config.iac.detector == "power_law":
        return autocorr.PowerLawDetector(order=config.iac.order)
    return config.fn.to_params(config.metal)


def delay_options(config: RunConfig) -> Dict[str, float]:
    options = {"coarse_step": units.to_atomic(config.iac.coarse_step_fs, "fs")}
    if config.iac.max_delay_fs is not None:
        options["max_delay"] = units.to_atomic(config.iac.max_delay_fs, "fs")
    return options


def iac_trace(config: RunConfig, op=None, workers: Optional[int] = 1) -> autocorr.IACTrace:
    if config.iac.model == "tdse":
        return autocorr.iac_trace_tdse(op, workers=workers, **delay_options(config))
    return autocorr.iac_trace_surrogate(config.laser.to_pulse(), config.laser.f_dc, detector_for(config),
                                        enhancement=config.laser.enhancement, polarity=config.laser.polarity,
                                        **delay_options(config))


def _task_iac(config: RunConfig, op):
    pulse = config.laser.to_pulse()
    trace = iac_trace(config, op)
    summary = trace.summary()
    results = {k: float(v) for k, v in summary.items() if isinstance(v, (int, float))}
    diagnostics = {"plateau_spread": trace.plateau_spread}
    if config.iac.detector == "fn" and config.iac.model == "surrogate":
        params = detector_for(config)
        peak_field = units.from_atomic(pulse.F0 * config.laser.enhancement, "GV/m") * 2 + config.laser.f_dc_GVm
        diagnostics["barrier_suppressed"] = fn_analytic.barrier_suppressed(params, peak_field)
    return results, diagnostics, {"iac": trace.to_frame()}


def _task_fn_fit(config: RunConfig, _op):
    params = config.fn.to_params(config.metal)
    data = fn_analytic.read_ratio_csv(config.sweep.fit_data)
    report = fn_analytic.fit_f_laser(data, params, fit_b=config.sweep.fit_b, f_laser_guess=config.sweep.f_laser_guess_GVm)
    results = {
        "f_laser_GVm": report.f_laser,
        "f_laser_sigma_GVm": report.f_laser_sigma,
        "b_GVm": report.b,
        "residual_norm": report.residual_norm,
    }
    if report.b_sigma is not None:
        results["b_sigma_GVm"] = report.b_sigma
    frame = pd.DataFrame({"f_dc_GVm": data["f_dc_GVm"], "ratio": data["ratio"], "log_residual": report.residuals})
    return results, {"barrier_suppressed": report.suppressed_points > 0, "fit": report.to_dict()}, {"fit_residuals": frame}


def _task_peak_to_baseline(config: RunConfig, op):
    if config.sweep.model == "tdse":
        prediction = emission_metrics.predict_peak_to_baseline(op, workers=1)
        results = prediction.to_dict()
        results["ratio_predicted"] = prediction.ratio_from_exponent
        diagnostics = {"route_mismatch": prediction.route_mismatch}
        if prediction.exponent_clamped:
            diagnostics["sublinear_exponent"] = prediction.exponent
        return results, diagnostics, {}
    params = config.fn.to_params(config.metal)
    f_laser = units.from_atomic(config.laser.to_pulse().F0 * config.laser.enhancement, "GV/m")
    f_dc = config.laser.f_dc_GVm
    results = {
        "f_laser_GVm": f_laser,
        "peak": float(fn_analytic.iac_peak(params, f_laser, f_dc)),
        "baseline": float(fn_analytic.iac_baseline(params, f_laser, f_dc)),
        "ratio_predicted": fn_analytic.peak_to_baseline_ratio(params, f_laser, f_dc),
        "voltage_V": f_dc * config.fn.geometry_k * config.fn.tip_radius_nm,
    }
    diagnostics = {"barrier_suppressed": fn_analytic.barrier_suppressed(params, 2 * f_laser + f_dc)}
    return results, diagnostics, {}


TASK_HANDLERS = {
    "yield": _task_yield,
    "modulation_scan": _task_modulation,
    "quasi_static_modulation": _task_quasi_static,
    "iac": _task_iac,
    "fn_fit": _task_fn_fit,
    "peak_to_baseline": _task_peak_to_baseline,
}


def run_point(index: Tuple[int, ...], config: RunConfig, axis_values: Dict[str, float],
              well_width: Optional[float], config_hash: str) -> RunRecord:
    """Evaluate one grid point; every exception is captured in the record."""
    record = RunRecord(
        index=index,
        task=config.sweep.task,
        axis_values=axis_values,
        params=config.model_dump(mode="json"),
        config_hash=config_hash,
    )
    started = time.perf_counter()
    try:
        op = build_operating_point(config, well_width) if well_width is not None else None
        results, diagnostics, artifacts = TASK_HANDLERS[config.sweep.task](config, op)
        record.results = {k: float(v) for k, v in results.items() if v is not None}
        record.diagnostics = diagnostics
        record.artifacts = artifacts if config.output.write_traces else {}
        if op is not None:
            record.diagnostics.setdefault("grid", op.grid.describe())
            record.diagnostics["well_width_nm"] = units.from_atomic(well_width, "nm")
    except Exception as e:
        record.status = "failed"
        record.error = {"type": type(e).__name__, "message": str(e)}
        logger.error(f"point {record.point_id} failed: {type(e).__name__}: {e}")
        logger.debug(traceback.format_exc())
    record.wall_time_s = time.perf_counter() - started
    if record.ok:
        RunValidator().validate(record, config)
    return record


def _failed_record(index, config: RunConfig, axis_values, config_hash: str, error: Exception) -> RunRecord:
    return RunRecord(
        index=index,
        task=config.sweep.task,
        axis_values=axis_values,
        params=config.model_dump(mode="json"),
        config_hash=config_hash,
        status="failed",
        error={"type": type(error).__name__, "message": str(error)},
    )


def run_sweep(spec: SweepSpec, workers: Optional[int] = None, progress: Optional[bool] = None) -> List[RunRecord]:
    """One RunRecord per grid point, in lexicographic index order."""
    points = spec.resolve()
    config_hash = spec.content_hash
    axis_values = {
        index: {key: float(vals[i]) for key, vals, i in zip(spec.axis_keys, spec.axis_values, index)}
        for index, _ in points
    }

    widths: Dict[str, Any] = {}
    if spec.config.needs_tdse():
        for _, cfg in points:
            key = _calibration_key(cfg)
            if key in widths:
                continue
            try:
                widths[key] = calibrate(cfg)
            except Exception as e:
                logger.error(f"well calibration failed: {e}")
                widths[key] = e

    records: Dict[Tuple[int, ...], RunRecord] = {}
    jobs = []
    for index, cfg in points:
        width = widths.get(_calibration_key(cfg)) if spec.config.needs_tdse() else None
        if isinstance(width, Exception):
            records[index] = _failed_record(index, cfg, axis_values[index], config_hash, width)
        else:
            jobs.append((index, cfg, width))

    n_jobs = settings.resolved_workers(workers or spec.config.sweep.workers)
    show = settings.progress if progress is None else progress
    logger.info(f"running {len(jobs)} of {spec.total_points} points ({spec.task}) on {n_jobs} workers")
    try:
        outputs = Parallel(n_jobs=n_jobs, return_as="generator")(
            delayed(run_point)(index, cfg, axis_values[index], width, config_hash) for index, cfg, width in jobs
        )
        for record in tqdm(outputs, total=len(jobs), desc=spec.task, disable=not show):
            records[record.index] = record
    except Exception as e:
        # the pool itself died; points without a result are marked failed
        logger.error(f"worker pool failed: {type(e).__name__}: {e}")
        for index, cfg, _ in jobs:
            if index not in records:
                records[index] = _failed_record(index, cfg, axis_values[index], config_hash, e)

    ordered = [records[index] for index, _ in points]
    failed = sum(1 for r in ordered if r.status == "failed")
    flagged = sum(1 for r in ordered if r.status == "flagged")
    logger.info(f"sweep finished: {len(ordered) - failed} ok ({flagged} flagged), {failed} failed")
    return ordered
