"""
Script for checking the well calibration: calibrated width against the
infinite-well estimate, and the sensitivity to the image-potential cutoff
"""

import sys
import os
import time

# Add the project root to the path
sys.path.append(os.path.dirname(__file__))

from app.physics import units
from app.physics.potential import MetalModel, barrier_maximum, schottky_barrier_peak
from app.physics.qdynamics import GridSpec, calibrate_well_width, ground_state, infinite_well_estimate


def check_calibration(metal: MetalModel, label: str):
    started = time.perf_counter()
    width = calibrate_well_width(metal)
    grid = GridSpec.for_well(width)
    state = ground_state(metal.with_width(width), grid)
    estimate = infinite_well_estimate(metal)
    print(f"{label}:")
    print(f"  L = {units.from_atomic(width, 'nm'):.5f} nm (infinite-well estimate {units.from_atomic(estimate, 'nm'):.5f} nm, "
          f"ratio {width / estimate:.3f})")
    print(f"  E1 = {units.from_atomic(state.energy, 'eV'):.6f} eV on {grid.n_points} points, dz = {units.from_atomic(grid.dz, 'nm') * 1e3:.3f} pm")
    print(f"  took {time.perf_counter() - started:.1f} s")
    return width


def main():
    print("=== Well calibration ===\n")
    metal = MetalModel()
    check_calibration(metal, "default model")

    print("\n=== Image cutoff sensitivity ===\n")
    for scale in (0.5, 1.5):
        check_calibration(MetalModel(cutoff_scale=scale), f"cutoff x{scale}")

    print("\n=== Barrier maximum at 4.4 GV/m ===\n")
    F = units.to_atomic(4.4, "GV/m")
    z_num, v_num = barrier_maximum(metal, F)
    z_ref, v_ref = schottky_barrier_peak(F)
    print(f"  numerical: z = {units.from_atomic(z_num, 'nm'):.4f} nm, V = {units.from_atomic(v_num, 'eV'):.4f} eV")
    print(f"  closed form: z = {units.from_atomic(z_ref, 'nm'):.4f} nm, V = {units.from_atomic(v_ref, 'eV'):.4f} eV")


if __name__ == "__main__":
    main()
