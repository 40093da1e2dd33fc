"""
Post-run diagnostics: checks finished sweep points and attaches anomaly records
"""

import math
from typing import Any, Dict, List, Optional

from ..physics import units

# Thresholds
NORM_GROWTH_TOLERANCE = 1e-8
CONTINUITY_TOLERANCE = 0.01
PLATEAU_SPREAD_TOLERANCE = 0.02
ROUTE_MISMATCH_TOLERANCE = 0.15
MIN_DOMINANT_FRACTION = 0.5
MIN_POINTS_PER_WELL = 64


class RunValidator:
    def validate(self, record, config=None) -> Dict[str, Any]:
        """
        Runs every check that applies to the record's diagnostics and updates its status
        """
        diagnostics = record.diagnostics or {}
        anomalies: List[Dict[str, Any]] = []
        performed: List[str] = []

        if "norm_start" in diagnostics:
            anomalies.extend(self._norm_validation(diagnostics))
            performed.append("norm")

        if "grid" in diagnostics:
            anomalies.extend(self._grid_validation(diagnostics, config))
            performed.append("grid")

        if "plateau_spread" in diagnostics:
            anomalies.extend(self._plateau_validation(diagnostics["plateau_spread"]))
            performed.append("plateau")

        if "route_mismatch" in diagnostics:
            anomalies.extend(self._route_validation(diagnostics["route_mismatch"]))
            performed.append("peak_to_baseline_routes")

        if "sublinear_exponent" in diagnostics:
            n = diagnostics["sublinear_exponent"]
            anomalies.append({
                "type": "sublinear_exponent",
                "value": n,
                "message": f"Fluence exponent {n:.3f} < 1; exponent-route ratio evaluated at n = 1",
                "severity": "flagged"
            })

        if diagnostics.get("barrier_suppressed"):
            anomalies.append({
                "type": "barrier_suppressed",
                "message": "Image-force lowering exceeds the work function; Nordheim factor clamped to 0",
                "severity": "flagged"
            })
            performed.append("barrier")

        if record.results.get("keldysh", 0.0) >= 1.0:
            anomalies.append({
                "type": "multiphoton_regime",
                "value": record.results["keldysh"],
                "message": f"Keldysh parameter {record.results['keldysh']:.2f} >= 1; tunnelling picture is marginal",
                "severity": "info"
            })

        record.anomalies.extend(anomalies)
        if any(a["severity"] == "flagged" for a in record.anomalies) and record.status == "success":
            record.status = "flagged"

        return {
            "status": record.status,
            "anomalies_count": len(record.anomalies),
            "anomalies": anomalies,
            "validations_performed": performed,
        }

    def _norm_validation(self, diagnostics: Dict[str, Any]) -> List[Dict[str, Any]]:
        anomalies = []
        start, end = diagnostics["norm_start"], diagnostics["norm_end"]
        if end > start * (1 + NORM_GROWTH_TOLERANCE):
            anomalies.append({
                "type": "norm_growth",
                "message": f"Norm grew from {start:.12f} to {end:.12f}",
                "severity": "flagged"
            })

        mismatch = diagnostics.get("continuity_error")
        if mismatch is not None and not math.isnan(mismatch) and mismatch > CONTINUITY_TOLERANCE:
            anomalies.append({
                "type": "continuity_mismatch",
                "value": mismatch,
                "message": f"Integrated flux and norm loss differ by {mismatch:.2%}",
                "severity": "flagged"
            })

        fraction = diagnostics.get("dominant_fraction")
        if fraction is not None and not math.isnan(fraction) and fraction < MIN_DOMINANT_FRACTION:
            anomalies.append({
                "type": "multiple_bursts",
                "value": fraction,
                "message": f"Dominant burst carries only {fraction:.1%} of the yield",
                "severity": "flagged"
            })
        return anomalies

    def _grid_validation(self, diagnostics: Dict[str, Any], config: Optional[Any]) -> List[Dict[str, Any]]:
        anomalies = []
        grid = diagnostics["grid"]
        width_nm = diagnostics.get("well_width_nm")
        if width_nm:
            points_per_well = width_nm / (grid["dz_pm"] * 1e-3)
            if points_per_well < MIN_POINTS_PER_WELL * (1 - 1e-9):
                anomalies.append({
                    "type": "coarse_grid",
                    "value": points_per_well,
                    "message": f"Only {points_per_well:.1f} points across the well (need {MIN_POINTS_PER_WELL})",
                    "severity": "flagged"
                })

        absorber_start = grid["z_max_nm"] - grid["absorber_width_nm"]
        if grid["absorber_width_nm"] > 0 and absorber_start - grid["z_detector_nm"] < 1.0:
            anomalies.append({
                "type": "absorber_near_detector",
                "message": f"Absorber starts {absorber_start - grid['z_detector_nm']:.2f} nm beyond the detector",
                "severity": "info"
            })

        if config is not None:
            cutoff_nm = units.from_atomic(config.metal.to_model(1.0).image_cutoff, "nm")
            if grid["z_detector_nm"] <= cutoff_nm:
                anomalies.append({
                    "type": "detector_inside_barrier",
                    "message": f"Detector at {grid['z_detector_nm']} nm lies inside the image cutoff",
                    "severity": "flagged"
                })
        return anomalies

    def _plateau_validation(self, spread: float) -> List[Dict[str, Any]]:
        if spread > PLATEAU_SPREAD_TOLERANCE:
            return [{
                "type": "plateau_spread",
                "value": spread,
                "message": f"Baseline plateau varies by {spread:.2%} beyond 5 tau",
                "severity": "flagged"
            }]
        return []

    def _route_validation(self, mismatch: float) -> List[Dict[str, Any]]:
        if mismatch > ROUTE_MISMATCH_TOLERANCE:
            return [{
                "type": "route_mismatch",
                "value": mismatch,
                "message": f"Exponent and direct peak-to-baseline routes differ by {mismatch:.1%}",
                "severity": "flagged"
            }]
        return []
