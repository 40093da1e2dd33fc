import numpy as np
import pytest

from app.analysis import autocorr
from app.analysis.autocorr import (
    IACTrace,
    PowerLawDetector,
    build_delay_grid,
    excess_charge,
    iac_trace_surrogate,
    integration_step,
    pair_configuration,
    single_pulse_charge,
)
from app.analysis.fn_analytic import FNParams
from app.errors import DomainError, SamplingError
from app.physics import units
from app.physics.field_model import FieldConfiguration, LaserPulse

EFFECTIVE = FNParams(b=14.8, schottky_correction=False)


@pytest.fixture
def pulse():
    return LaserPulse.from_practical(1.8, 8.0)


@pytest.fixture
def dt(pulse):
    return integration_step(pulse)


class TestPowerLawOracles:
    def test_second_order(self, pulse):
        trace = iac_trace_surrogate(pulse, 0.0, PowerLawDetector(order=2))
        assert trace.peak_to_baseline == pytest.approx(8.0, abs=0.05)
        assert trace.plateau_spread < autocorr.MAX_PLATEAU_SPREAD

    def test_third_order(self, pulse):
        trace = iac_trace_surrogate(pulse, 0.0, PowerLawDetector(order=3))
        assert trace.peak_to_baseline == pytest.approx(32.0, abs=0.3)

    def test_fringe_average_below_fringe_maximum(self, pulse):
        trace = iac_trace_surrogate(pulse, 0.0, PowerLawDetector(order=2))
        assert 1.0 < trace.fringe_averaged_ratio < trace.peak_to_baseline

    def test_detector_rejects_bad_order(self):
        with pytest.raises(DomainError):
            PowerLawDetector(order=0)


class TestPairCharge:
    def test_additive_at_100_fs(self, pulse, dt):
        f_dc = units.to_atomic(0.53, "GV/m")
        delay = round(units.to_atomic(100.0, "fs") / dt) * dt
        pair = excess_charge(pair_configuration(pulse, delay, f_dc), EFFECTIVE, dt)
        single = single_pulse_charge(pulse, f_dc, EFFECTIVE, dt)
        assert pair == pytest.approx(2 * single, rel=1e-6)

    def test_zero_delay_is_doubled_pulse(self, pulse, dt):
        f_dc = units.to_atomic(0.53, "GV/m")
        pair = excess_charge(pair_configuration(pulse, 0.0, f_dc), EFFECTIVE, dt)
        doubled = excess_charge(FieldConfiguration(f_dc=f_dc, pulses=(pulse.scaled(2.0),)), EFFECTIVE, dt)
        assert pair == pytest.approx(doubled, rel=1e-12)

    def test_even_in_delay(self, pulse, dt):
        f_dc = units.to_atomic(0.53, "GV/m")
        for k in (3, 17, 40, 250):
            plus = excess_charge(pair_configuration(pulse, k * dt, f_dc), EFFECTIVE, dt)
            minus = excess_charge(pair_configuration(pulse, -k * dt, f_dc), EFFECTIVE, dt)
            assert minus == pytest.approx(plus, rel=1e-9)

    def test_charge_positive(self, pulse, dt):
        assert single_pulse_charge(pulse, 0.0, EFFECTIVE, dt) > 0


class TestSurrogateTrace:
    def test_ratio_falls_with_dc_field(self, pulse):
        ratios = [
            iac_trace_surrogate(pulse, units.to_atomic(f, "GV/m"), EFFECTIVE).peak_to_baseline
            for f in (0.3, 0.75, 1.2)
        ]
        assert ratios[0] > ratios[1] > ratios[2] > 1

    def test_reversed_polarity_same_trace_for_phase_averaged_pulses(self, pulse):
        # averaging phi over {0, pi} makes the pair field set symmetric under sign reversal
        def averaged(polarity):
            return sum(
                iac_trace_surrogate(pulse.with_phase(phi), 0.0, PowerLawDetector(order=2), polarity=polarity).currents
                for phi in (0.0, np.pi)
            )

        np.testing.assert_allclose(averaged(-1), averaged(1), rtol=1e-9)

    def test_delays_are_step_multiples(self, pulse, dt):
        delays = build_delay_grid(pulse, dt)
        np.testing.assert_allclose(delays / dt, np.round(delays / dt), atol=1e-9)
        assert delays[0] == 0.0
        assert delays[-1] > autocorr.BASELINE_TAUS * pulse.tau

    def test_coarse_delays_rejected(self, pulse):
        delays = units.to_atomic(np.arange(0.0, 60.0, 1.0), "fs")
        with pytest.raises(SamplingError):
            iac_trace_surrogate(pulse, 0.0, EFFECTIVE, delays=delays)

    def test_short_delay_range_rejected(self, pulse):
        delays = units.to_atomic(np.arange(0.0, 30.0, 0.1), "fs")
        with pytest.raises(SamplingError):
            iac_trace_surrogate(pulse, 0.0, EFFECTIVE, delays=delays)

    def test_explicit_symmetric_delays(self, pulse, dt):
        positive = build_delay_grid(pulse, dt)
        delays = np.concatenate([-positive[:0:-1], positive])
        trace = iac_trace_surrogate(pulse, units.to_atomic(0.53, "GV/m"), EFFECTIVE, delays=delays)
        mid = positive.size - 1
        np.testing.assert_allclose(trace.currents[mid:], trace.currents[mid::-1], rtol=1e-9)

    def test_frame_and_summary(self, pulse):
        trace = iac_trace_surrogate(pulse, 0.0, PowerLawDetector(order=2))
        assert list(trace.to_frame().columns) == ["delay_fs", "current"]
        summary = trace.summary()
        assert summary["model"] == "surrogate"
        assert summary["baseline_window_fs"][0] == pytest.approx(40.0)


def test_trace_needs_baseline_delays():
    with pytest.raises(SamplingError):
        IACTrace(delays_fs=np.linspace(0.0, 20.0, 50), currents=np.ones(50), tau_fs=8.0, period_fs=2.67)


@pytest.mark.slow
def test_tdse_trace_matches_power_law_surrogate(metal, small_grid):
    from app.analysis.emission_metrics import OperatingPoint, predict_peak_to_baseline, simulate

    pulse = LaserPulse.from_practical(1.8, 8.0)
    op = OperatingPoint(metal=metal, grid=small_grid, pulse=pulse, f_dc=units.to_atomic(0.53, "GV/m"))
    initial = autocorr.prepare_state(op)
    trace = autocorr.iac_trace_tdse(op, workers=4, initial=initial, coarse_step=units.to_atomic(4.0, "fs"))
    assert trace.model == "tdse"

    # well separated replicas emit independently
    single, _ = simulate(op, initial)
    assert trace.baseline == pytest.approx(2.0 * single, rel=0.01)
    assert trace.plateau_spread < autocorr.MAX_PLATEAU_SPREAD

    # a power-law detector with the TDSE fluence exponent stands in for the instantaneous model
    exponent = predict_peak_to_baseline(op, workers=1, initial=initial).exponent
    surrogate = iac_trace_surrogate(pulse, 0.0, PowerLawDetector(order=exponent))
    assert trace.peak_to_baseline == pytest.approx(surrogate.peak_to_baseline, rel=0.3)
