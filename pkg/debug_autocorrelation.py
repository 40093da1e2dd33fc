"""
Script for the autocorrelation oracles and the closed-form peak-to-baseline curve
"""

import sys
import os

import numpy as np

# Add the project root to the path
sys.path.append(os.path.dirname(__file__))

from app.analysis import autocorr, fn_analytic
from app.physics import units
from app.physics.field_model import LaserPulse


def main():
    pulse = LaserPulse.from_practical(1.8, 8.0)
    dt = autocorr.integration_step(pulse)

    print("=== Power-law detectors ===\n")
    for order in (2, 3):
        trace = autocorr.iac_trace_surrogate(pulse, 0.0, autocorr.PowerLawDetector(order=order))
        print(f"order {order}: peak/baseline = {trace.peak_to_baseline:.4f} "
              f"(fringe-averaged {trace.fringe_averaged_ratio:.4f}, plateau spread {trace.plateau_spread:.2e})")

    print("\n=== Additivity at 100 fs ===\n")
    detector = fn_analytic.FNParams(b=14.8, schottky_correction=False)
    f_dc = units.to_atomic(0.53, "GV/m")
    single = autocorr.single_pulse_charge(pulse, f_dc, detector, dt)
    pair = autocorr.excess_charge(autocorr.pair_configuration(pulse, round(units.to_atomic(100.0, "fs") / dt) * dt, f_dc), detector, dt)
    print(f"pair / (2 single) - 1 = {pair / (2 * single) - 1:.3e}")

    print("\n=== Fowler-Nordheim surrogate against DC field ===\n")
    for f_dc_GVm in (0.2, 0.53, 1.0, 1.5):
        trace = autocorr.iac_trace_surrogate(pulse, units.to_atomic(f_dc_GVm, "GV/m"), detector)
        closed = fn_analytic.peak_to_baseline_ratio(detector, 1.8, f_dc_GVm)
        print(f"F_DC = {f_dc_GVm:4.2f} GV/m: surrogate {trace.peak_to_baseline:8.3f}, closed form {closed:8.3f}")

    print("\n=== Closed-form ratio, default B with correction ===\n")
    params = fn_analytic.default_fn_params()
    print(f"B(4.5 eV) = {params.b:.3f} GV/m")
    for f_dc_GVm in np.linspace(0.2, 1.5, 6):
        print(f"  F_DC = {f_dc_GVm:.2f}: ratio = {fn_analytic.peak_to_baseline_ratio(params, 1.8, f_dc_GVm):.3f}, "
              f"suppressed = {fn_analytic.barrier_suppressed(params, 3.6 + f_dc_GVm)}")


if __name__ == "__main__":
    main()
