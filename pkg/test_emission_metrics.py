import logging
import math

import numpy as np
import pytest

from app.analysis import emission_metrics
from app.analysis.emission_metrics import (
    EmissionResult,
    ModulationScan,
    OperatingPoint,
    integrate_yield,
    local_exponent,
    modulation_depth,
    nonlinearity_exponent,
    peak_to_baseline_from_exponent,
    peak_to_baseline_from_yields,
    phase_grid,
    pulse_width,
    quasi_static_modulation_scan,
)
from app.analysis.fn_analytic import FNParams, default_fn_params
from app.errors import DomainError, FitError, SamplingError
from app.physics import units
from app.physics.field_model import LaserPulse
from app.physics.qdynamics import FluxTrace

FWHM = units.to_atomic(660.0, "as")


def gaussian_trace(centers, fwhm=FWHM, spacing=units.to_atomic(10.0, "as"), scale=1.0, shift=0.0):
    t = np.arange(-60.0, 150.0, spacing) + shift
    j = sum(np.exp(-4 * math.log(2) * (t - c - shift) ** 2 / fwhm**2) for c in centers)
    return FluxTrace(times=t, j=scale * j, z_detector=1.0)


class TestIntegrateYield:
    def test_zero_trace(self):
        trace = FluxTrace(times=np.arange(10.0), j=np.zeros(10), z_detector=1.0)
        assert integrate_yield(trace) == 0.0

    def test_constant_flux(self):
        t = np.linspace(0.0, 50.0, 101)
        trace = FluxTrace(times=t, j=np.full(t.shape, 0.02), z_detector=1.0)
        assert integrate_yield(trace) == pytest.approx(0.02 * 50.0, rel=1e-12)

    def test_empty_trace(self):
        with pytest.raises(DomainError):
            integrate_yield(FluxTrace(times=np.array([]), j=np.array([]), z_detector=1.0))

    def test_non_uniform_sampling(self):
        t = np.array([0.0, 1.0, 2.0, 4.0])
        with pytest.raises(SamplingError):
            integrate_yield(FluxTrace(times=t, j=np.ones(4), z_detector=1.0))


class TestPulseWidth:
    def test_single_gaussian(self):
        trace = gaussian_trace([0.0])
        fwhm, fractions, peak = pulse_width(trace)
        assert abs(fwhm - FWHM) < units.to_atomic(10.0, "as")
        assert fractions == pytest.approx((1.0,))
        assert abs(peak) < units.to_atomic(10.0, "as")

    def test_scale_and_shift_invariance(self):
        reference = pulse_width(gaussian_trace([0.0]))[0]
        assert pulse_width(gaussian_trace([0.0], scale=1e-7))[0] == pytest.approx(reference, rel=1e-9)
        assert pulse_width(gaussian_trace([0.0], shift=17.3))[0] == pytest.approx(reference, rel=1e-6)

    def test_two_separated_bursts(self):
        single = pulse_width(gaussian_trace([0.0]))[0]
        fwhm, fractions, _ = pulse_width(gaussian_trace([0.0, 80.0]))
        assert fwhm == pytest.approx(single, rel=1e-6)
        assert len(fractions) == 2
        assert fractions == pytest.approx((0.5, 0.5), abs=1e-3)
        assert sum(fractions) == pytest.approx(1.0, abs=1e-9)

    def test_unequal_bursts(self):
        t = np.arange(-40.0, 80.0, 0.4)
        j = np.exp(-((t) ** 2) / 8.0) + 0.25 * np.exp(-((t - 40.0) ** 2) / 8.0)
        result = emission_metrics.emission_result(FluxTrace(times=t, j=j, z_detector=1.0))
        assert result.dominant_fraction == pytest.approx(0.8, abs=1e-6)
        assert result.to_dict()["n_sub_pulses"] == 2
        assert result.burst_spacing == pytest.approx(40.0, abs=0.4)
        assert result.to_dict()["burst_spacing_fs"] == pytest.approx(units.from_atomic(result.burst_spacing, "fs"))

    def test_single_burst_has_no_spacing(self):
        result = emission_metrics.emission_result(gaussian_trace([0.0]))
        assert len(result.sub_pulse_peaks) == 1
        assert math.isnan(result.burst_spacing)

    def test_burst_peak_times(self):
        peaks = emission_metrics.burst_peak_times(gaussian_trace([0.0, 80.0]))
        assert len(peaks) == 2
        assert peaks[0] == pytest.approx(0.0, abs=10.0)
        assert peaks[1] == pytest.approx(80.0, abs=10.0)

    def test_needs_positive_maximum(self):
        t = np.arange(10.0)
        with pytest.raises(DomainError):
            pulse_width(FluxTrace(times=t, j=-np.ones(10), z_detector=1.0))


class TestNonlinearity:
    fluences = np.array([2.0, 4.0, 8.0, 16.0])

    def test_cubic_power_law(self):
        points = list(zip(self.fluences, 0.3 * self.fluences**3))
        assert nonlinearity_exponent(points) == pytest.approx(3.0, abs=1e-10)

    def test_offset_invariance(self):
        base = nonlinearity_exponent(list(zip(self.fluences, self.fluences**2.4)))
        scaled = nonlinearity_exponent(list(zip(self.fluences, 1e-9 * self.fluences**2.4)))
        assert scaled == pytest.approx(base, rel=1e-12)

    def test_fowler_nordheim_exponent(self):
        # fluence ~ F^2, so n = (2 + B/F) / 2
        p = FNParams(b=14.8, schottky_correction=False)
        F0 = 2.0
        fields = F0 * np.array([0.999, 1.0, 1.001])
        points = list(zip(fields**2, p.current(fields)))
        assert nonlinearity_exponent(points) == pytest.approx(1 + 14.8 / (2 * F0), rel=1e-5)

    def test_degenerate_abscissae(self):
        with pytest.raises(FitError):
            nonlinearity_exponent([(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)])

    def test_needs_three_points(self):
        with pytest.raises(DomainError):
            nonlinearity_exponent([(1.0, 1.0), (2.0, 2.0)])

    def test_local_exponent(self):
        assert local_exponent(lambda f: 3.0 * f**2.5, 7.0) == pytest.approx(2.5, rel=1e-12)


@pytest.mark.parametrize("n, ratio", [(1, 2.0), (2, 8.0), (3, 32.0)])
def test_peak_to_baseline_from_exponent(n, ratio):
    assert peak_to_baseline_from_exponent(n) == ratio


def test_exponent_below_one():
    with pytest.raises(DomainError):
        peak_to_baseline_from_exponent(0.5)


def power_law_yields(n, rel_step=0.1):
    # yield ~ fluence^n with fluence ~ peak_scale^2
    return {"low": (1 - rel_step) ** n, "high": (1 + rel_step) ** n, "single": 1.0, "double": 4.0 ** n}


class TestPeakToBaselineFromYields:
    def test_power_law_routes_agree(self):
        prediction = peak_to_baseline_from_yields(power_law_yields(3.0))
        assert prediction.exponent == pytest.approx(3.0, rel=1e-12)
        assert prediction.ratio_from_exponent == pytest.approx(32.0, rel=1e-10)
        assert prediction.ratio_direct == pytest.approx(32.0, rel=1e-12)
        assert prediction.route_mismatch < 1e-10
        assert prediction.exponent_clamped is False

    def test_sublinear_exponent_is_recorded(self, caplog):
        with caplog.at_level(logging.WARNING):
            prediction = peak_to_baseline_from_yields(power_law_yields(0.5))
        assert prediction.exponent == pytest.approx(0.5, rel=1e-12)
        assert prediction.exponent_clamped is True
        assert prediction.ratio_from_exponent == 2.0
        assert prediction.to_dict()["exponent_clamped"] is True
        assert "sub-linear" in caplog.text

    def test_non_positive_yield(self):
        yields = power_law_yields(2.0)
        yields["low"] = 0.0
        with pytest.raises(DomainError):
            peak_to_baseline_from_yields(yields)


class TestModulationDepth:
    def test_flat_yields(self):
        assert modulation_depth(np.full(16, 3.2)) == 0.0

    def test_closed_form(self):
        assert modulation_depth([1.0, 3.0, 2.0]) == pytest.approx(0.5)

    def test_scale_invariance(self):
        y = np.array([1.0, 1.3, 0.7, 1.1])
        assert modulation_depth(1e-6 * y) == pytest.approx(modulation_depth(y), rel=1e-12)

    def test_negative_yields_are_clipped(self, caplog):
        with caplog.at_level(logging.WARNING):
            depth = modulation_depth([-1e-12, 1.0])
        assert depth == pytest.approx(1.0)
        assert "clipping" in caplog.text

    def test_phase_grid(self):
        phases = phase_grid(16)
        assert phases[0] == 0.0
        assert phases[-1] < 2 * math.pi
        assert np.diff(phases) == pytest.approx(np.full(15, 2 * math.pi / 16))
        with pytest.raises(DomainError):
            phase_grid(4)

    def test_scan_summary(self):
        phases = phase_grid(8)
        scan = ModulationScan(phases=phases, yields=1.0 + 0.1 * np.cos(phases - phases[3]))
        assert scan.best_phase == phases[3]
        assert 0 < scan.depth < 1
        assert list(scan.to_frame().columns) == ["phase_rad", "yield"]


class TestQuasiStaticScan:
    def test_shorter_pulse_modulates_more(self):
        params = default_fn_params()
        f_dc = units.to_atomic(0.2, "GV/m")
        short = LaserPulse.from_fluence(10.0, 5.3)
        long = LaserPulse.from_fluence(10.0, 8.0)
        depth_short = quasi_static_modulation_scan(short, f_dc, params).depth
        depth_long = quasi_static_modulation_scan(long, f_dc, params).depth
        assert 0 < depth_long < depth_short < 1

    def test_label(self):
        scan = quasi_static_modulation_scan(LaserPulse.from_practical(3.0, 5.3), 0.0, default_fn_params(), n_phases=8)
        assert scan.label == "quasi_static"
        assert scan.yields.shape == (8,)


def test_emission_result_keys():
    result = EmissionResult(total_yield=1e-3, pulse_fwhm=FWHM, peak_time=0.0, sub_pulse_fractions=(0.7, 0.3))
    summary = result.to_dict()
    assert summary["pulse_fwhm_as"] == pytest.approx(660.0)
    assert summary["dominant_fraction"] == 0.7


class TestTDSEOperatingPoint:
    @pytest.fixture
    def op(self, metal, small_grid, short_pulse):
        return OperatingPoint(metal=metal, grid=small_grid, pulse=short_pulse)

    def test_simulate_matches_direct_propagation(self, op, ground):
        from app.physics.qdynamics import propagate

        total, trace = emission_metrics.simulate(op, ground)
        _, direct = propagate(ground, op.metal, op.configuration(), settings=op.solver)
        assert total == integrate_yield(direct)
        assert total > 0

    def test_describe(self, op):
        summary = op.describe()
        assert summary["f_laser_GVm"] == pytest.approx(8.0)
        assert summary["tau_fs"] == pytest.approx(3.0)

    @pytest.mark.slow
    def test_ce_scan_is_deterministic(self, op, ground):
        first = emission_metrics.ce_modulation_scan(op, n_phases=8, workers=1, initial=ground)
        second = emission_metrics.ce_modulation_scan(op, n_phases=8, workers=2, initial=ground)
        np.testing.assert_array_equal(first.yields, second.yields)
        assert 0 <= first.depth <= 1

    @pytest.mark.slow
    def test_prediction_routes(self, op, ground):
        prediction = emission_metrics.predict_peak_to_baseline(op, workers=1, initial=ground)
        assert prediction.exponent > 1
        assert set(prediction.yields) == {"low", "high", "single", "double"}
