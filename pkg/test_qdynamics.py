import math

import numpy as np
import pytest

from app.errors import ConvergenceError, DomainError, NumericalError
from app.physics import units
from app.physics.field_model import FieldConfiguration
from app.physics.potential import MetalModel, static_potential
from app.physics.qdynamics import (
    MEV,
    FluxTrace,
    GridSpec,
    QuantumState,
    calibrate_well_width,
    energy_expectation,
    ground_state,
    infinite_well_estimate,
    norm_below,
    probability_flux,
    propagate,
)
from app.analysis.emission_metrics import integrate_yield


class TestGridSpec:
    def test_spacing_spans_domain(self, small_grid):
        assert small_grid.dz * (small_grid.n_points - 1) == pytest.approx(small_grid.z_max - small_grid.z_min, rel=1e-12)
        assert small_grid.z[0] == small_grid.z_min
        assert small_grid.z[-1] == pytest.approx(small_grid.z_max, rel=1e-14)

    def test_default_resolves_the_well(self):
        width = units.to_atomic(0.2, "nm")
        grid = GridSpec.for_well(width)
        assert grid.n_points >= 16384
        assert grid.dz <= width / 64

    def test_detector_before_absorber(self, metal):
        with pytest.raises(DomainError):
            GridSpec.for_well(
                metal.well_width,
                z_max=units.to_atomic(10.0, "nm"),
                z_detector=units.to_atomic(6.0, "nm"),
                absorber_width=units.to_atomic(5.0, "nm"),
            ).validate(metal)

    def test_absorber_profile(self, small_grid):
        w = small_grid.absorber()
        assert np.all(w[small_grid.z < small_grid.absorber_start] == 0.0)
        assert w[-1] == pytest.approx(small_grid.absorber_strength)
        assert np.all(np.diff(w) >= 0)

    def test_truncated_keeps_spacing(self, small_grid):
        short = small_grid.truncated(units.to_atomic(3.0, "nm"))
        assert short.dz == pytest.approx(small_grid.dz, rel=1e-12)
        assert short.absorber_width == 0.0


class TestGroundState:
    def test_energy_is_rayleigh_quotient(self, metal, ground):
        v = static_potential(metal, ground.grid.z)
        assert energy_expectation(ground, v) == pytest.approx(ground.energy, rel=1e-10)

    def test_normalised_and_nodeless(self, ground):
        assert ground.norm() == pytest.approx(1.0, rel=1e-12)
        interior = ground.psi[1:-1]
        assert np.all(interior.real > 0)
        assert np.all(interior.imag == 0)
        assert ground.psi[0] == 0 and ground.psi[-1] == 0

    def test_bound_below_vacuum(self, metal, ground):
        assert metal.v0 < ground.energy < 0

    def test_infinite_square_well(self):
        metal = MetalModel(image_potential=False)
        width = units.to_atomic(0.2, "nm")
        grid = GridSpec(z_min=0.0, z_max=width, n_points=801, z_detector=width / 2, absorber_width=0.0)
        state = ground_state(metal, grid, potential=np.full(grid.n_points, metal.v0))
        expected = metal.v0 + math.pi**2 / (2 * width**2)
        assert state.energy - metal.v0 == pytest.approx(expected - metal.v0, rel=1e-4)

    def test_convergence_failure_reports_residuals(self, metal, small_grid):
        with pytest.raises(ConvergenceError) as info:
            ground_state(metal, small_grid, max_steps=2)
        assert len(info.value.residuals) == 2

    def test_potential_shape_mismatch(self, metal, small_grid):
        with pytest.raises(DomainError):
            ground_state(metal, small_grid, potential=np.zeros(10))


class TestCalibration:
    def test_hits_fermi_target(self, calibrated_width):
        metal = MetalModel()
        grid = GridSpec.for_well(calibrated_width).truncated(units.to_atomic(3.0, "nm"))
        state = ground_state(metal.with_width(calibrated_width), grid)
        assert abs(state.energy - metal.fermi_target) < MEV
        assert units.from_atomic(state.energy, "eV") == pytest.approx(-4.5, abs=1e-3)

    def test_full_grid_reproduces_target(self, calibrated_width):
        metal = MetalModel()
        grid = GridSpec.for_well(calibrated_width).truncated(units.to_atomic(10.0, "nm"))
        state = ground_state(metal.with_width(calibrated_width), grid)
        assert abs(state.energy - metal.fermi_target) < MEV

    def test_spill_out_narrows_the_box(self, calibrated_width):
        # the wavefunction leaks past the surface, so the box is narrower than the hard-wall estimate
        estimate = infinite_well_estimate(MetalModel())
        assert units.from_atomic(estimate, "nm") == pytest.approx(0.204, abs=1e-3)
        # calibrated L is 0.0808 nm on the default grid
        assert calibrated_width / estimate == pytest.approx(0.395, abs=0.03)

    def test_larger_work_function_needs_wider_box(self, calibrated_width):
        deeper = MetalModel(work_function=units.to_atomic(5.0, "eV"))
        assert calibrate_well_width(deeper) > calibrated_width


class TestFlux:
    def test_real_wavefunction_carries_no_current(self, ground):
        for z_nm in (-0.02, 0.5, 3.0):
            assert probability_flux(ground, units.to_atomic(z_nm, "nm")) == 0.0

    def test_plane_wave(self, small_grid):
        k = 0.5
        psi = np.exp(1j * k * small_grid.z)
        psi[0] = psi[-1] = 0.0
        state = QuantumState(small_grid, psi)
        j = probability_flux(state, 0.0)
        assert j == pytest.approx(math.sin(k * small_grid.dz) / small_grid.dz, rel=1e-12)
        assert j == pytest.approx(k, rel=1e-2)

    def test_global_phase_invariance(self, small_grid):
        z = small_grid.z
        psi = np.exp(1j * 0.3 * z - 0.01 * z**2)
        psi[0] = psi[-1] = 0.0
        a = QuantumState(small_grid, psi)
        b = QuantumState(small_grid, psi * np.exp(1.234j))
        z_plane = units.to_atomic(1.0, "nm")
        assert probability_flux(b, z_plane) == pytest.approx(probability_flux(a, z_plane), rel=1e-12)

    def test_endpoint_is_not_interior(self, ground):
        with pytest.raises(DomainError):
            probability_flux(ground, ground.grid.z_max)


class TestPropagation:
    def test_zero_field_is_stationary(self, metal, ground):
        final, trace = propagate(ground, metal, FieldConfiguration(), t_span=(0.0, units.to_atomic(20.0, "fs")))
        v = static_potential(metal, ground.grid.z)
        assert final.norm() == pytest.approx(ground.norm(), rel=1e-8)
        assert energy_expectation(final, v) == pytest.approx(ground.energy, rel=1e-8)
        assert np.max(np.abs(trace.j)) < 1e-10

    def test_unitary_without_absorber(self, metal, ground, emitting_field):
        closed = QuantumState(ground.grid.without_absorber(), ground.psi)
        final, _ = propagate(closed, metal, emitting_field)
        assert final.norm() == pytest.approx(closed.norm(), rel=1e-8)

    def test_continuity_with_absorber(self, metal, ground, emitting_field):
        final, trace = propagate(ground, metal, emitting_field)
        emitted = integrate_yield(trace)
        assert trace.norm_lost_below > 1e-8
        assert emitted == pytest.approx(trace.norm_lost_below, rel=1e-2)
        assert trace.norm_end <= trace.norm_start
        assert trace.norm_below_end == pytest.approx(norm_below(final, ground.grid.z_detector), rel=1e-10)

    def test_trace_sampling(self, metal, ground, emitting_field):
        _, trace = propagate(ground, metal, emitting_field)
        period = emitting_field.shortest_period()
        assert trace.dt <= period / 200
        np.testing.assert_allclose(np.diff(trace.times), trace.dt, rtol=1e-9)
        frame = trace.to_frame()
        assert list(frame.columns) == ["t_fs", "j_per_fs"]
        assert trace.metadata["grid"]["z_detector_nm"] == pytest.approx(3.0)

    def test_energy_offset_is_a_global_phase(self, metal, ground, emitting_field):
        shifted_metal = MetalModel(well_width=metal.well_width, energy_offset=0.1)
        shifted = ground_state(shifted_metal, ground.grid)
        assert shifted.energy - ground.energy == pytest.approx(0.1, rel=1e-9)
        final_a, trace_a = propagate(ground, metal, emitting_field)
        final_b, trace_b = propagate(shifted, shifted_metal, emitting_field)
        np.testing.assert_allclose(np.abs(final_b.psi) ** 2, np.abs(final_a.psi) ** 2, rtol=0, atol=1e-10)
        assert integrate_yield(trace_b) == pytest.approx(integrate_yield(trace_a), rel=1e-9)

    def test_coarse_time_step_rejected(self, metal, ground, emitting_field):
        with pytest.raises(DomainError):
            propagate(ground, metal, emitting_field, dt=emitting_field.shortest_period() / 100)

    def test_span_required_without_pulses(self, metal, ground):
        with pytest.raises(DomainError):
            propagate(ground, metal, FieldConfiguration(f_dc=0.001))

    def test_instability_is_reported(self, metal, ground):
        psi = ground.psi.copy()
        psi[100] = np.nan
        with pytest.raises(NumericalError) as info:
            propagate(QuantumState(ground.grid, psi), metal, FieldConfiguration(), t_span=(0.0, 100.0))
        assert info.value.step is not None


def test_flux_trace_length_check():
    with pytest.raises(DomainError):
        FluxTrace(times=np.arange(3.0), j=np.zeros(4), z_detector=1.0)


@pytest.mark.slow
def test_grid_convergence_at_sub_cycle_operating_point():
    from app.analysis import emission_metrics
    from app.sweeps import runner
    from app.sweeps.spec import build_config

    config = build_config({}, preset="subcycle_pulse")
    width = runner.calibrate(config)
    coarse = runner.build_operating_point(config, width)
    fine_config = build_config({"grid": {"points_per_well": 128, "n_points": 32768}, "solver": {"steps_per_period": 512}},
                               preset="subcycle_pulse")
    fine = runner.build_operating_point(fine_config, width)
    y_coarse, t_coarse = emission_metrics.simulate(coarse, emission_metrics.prepare_state(coarse))
    y_fine, t_fine = emission_metrics.simulate(fine, emission_metrics.prepare_state(fine))
    assert y_fine == pytest.approx(y_coarse, rel=1e-2)
    w_coarse = emission_metrics.pulse_width(t_coarse)[0]
    w_fine = emission_metrics.pulse_width(t_fine)[0]
    assert w_fine == pytest.approx(w_coarse, rel=5e-2)
