import math

import numpy as np
import pytest

from app.errors import DomainError
from app.physics import units
from app.physics.field_model import (
    FieldConfiguration,
    LaserPulse,
    configuration_fluence,
    delayed_pair,
    envelope,
    pulse_field,
    total_field,
)


@pytest.fixture
def pulse():
    return LaserPulse.from_practical(2.7, 8.0, t0_fs=3.0)


class TestPulseField:
    def test_peak_at_center(self, pulse):
        assert pulse_field(pulse, pulse.t0) == pytest.approx(pulse.F0, rel=1e-15)

    def test_phase_pi_flips_sign(self, pulse):
        assert pulse_field(pulse.with_phase(math.pi), pulse.t0) == pytest.approx(-pulse.F0, rel=1e-15)

    def test_phase_half_pi_is_zero(self, pulse):
        assert abs(pulse_field(pulse.with_phase(math.pi / 2), pulse.t0)) < 1e-12 * pulse.F0

    def test_time_reversal_symmetry(self, pulse):
        s = np.linspace(0.0, 3 * pulse.tau, 101)
        np.testing.assert_allclose(pulse_field(pulse, pulse.t0 + s), pulse_field(pulse, pulse.t0 - s), rtol=0, atol=1e-12 * pulse.F0)

    def test_two_pi_shift(self, pulse):
        t = np.linspace(*pulse.window(), 257)
        shifted = pulse.with_phase(0.4 + 2 * math.pi)
        np.testing.assert_allclose(pulse_field(shifted, t), pulse_field(pulse.with_phase(0.4), t), rtol=0, atol=1e-12 * pulse.F0)

    def test_zero_outside_window(self, pulse):
        start, end = pulse.window()
        assert pulse_field(pulse, end + 1.0) == 0.0
        assert pulse_field(pulse, start - 1.0) == 0.0

    def test_envelope_maximal_at_center(self, pulse):
        t = np.linspace(*pulse.window(), 1001)
        assert envelope(pulse, t).max() <= envelope(pulse, pulse.t0)

    def test_intensity_fwhm_is_tau(self, pulse):
        half = envelope(pulse, pulse.t0 + pulse.tau / 2) ** 2
        assert half == pytest.approx(0.5 * pulse.F0**2, rel=1e-12)

    def test_invalid_pulse(self):
        with pytest.raises(DomainError):
            LaserPulse(F0=-1.0, tau=10.0, omega=0.05)
        with pytest.raises(DomainError):
            LaserPulse(F0=1.0, tau=0.0, omega=0.05)
        with pytest.raises(DomainError):
            LaserPulse(F0=1.0, tau=10.0, omega=0.0)


class TestTotalField:
    def test_dc_only(self):
        cfg = FieldConfiguration(f_dc=units.to_atomic(0.53, "GV/m"))
        t = np.linspace(-500.0, 500.0, 11)
        np.testing.assert_array_equal(total_field(cfg, t), np.full(t.shape, cfg.f_dc))

    def test_superposition(self, pulse):
        t = np.linspace(*pulse.window(), 513)
        single = FieldConfiguration(pulses=(pulse,))
        double = FieldConfiguration(pulses=(pulse, pulse))
        np.testing.assert_allclose(total_field(double, t), 2 * total_field(single, t), rtol=1e-15, atol=0)

    def test_enhancement_acts_on_optical_part_only(self, pulse):
        t = np.linspace(*pulse.window(), 513)
        f_dc = units.to_atomic(0.2, "GV/m")
        bare = FieldConfiguration(f_dc=f_dc, pulses=(pulse,))
        enhanced = FieldConfiguration(f_dc=f_dc, pulses=(pulse,), enhancement=4.0)
        np.testing.assert_allclose(total_field(enhanced, t) - f_dc, 4 * (total_field(bare, t) - f_dc), rtol=1e-12, atol=1e-18)

    def test_polarity_flips_optical_part(self, pulse):
        t = np.linspace(*pulse.window(), 129)
        f_dc = units.to_atomic(0.2, "GV/m")
        forward = FieldConfiguration(f_dc=f_dc, pulses=(pulse,))
        reverse = FieldConfiguration(f_dc=f_dc, pulses=(pulse,), polarity=-1)
        np.testing.assert_allclose(total_field(reverse, t) - f_dc, -(total_field(forward, t) - f_dc), rtol=1e-12, atol=1e-18)

    def test_invalid_configuration(self, pulse):
        with pytest.raises(DomainError):
            FieldConfiguration(pulses=(pulse,), enhancement=0.0)
        with pytest.raises(DomainError):
            FieldConfiguration(pulses=(pulse,), polarity=2)


class TestDelayedPair:
    def test_zero_delay_is_doubled_pulse(self, pulse):
        t = np.linspace(*pulse.window(), 513)
        pair = delayed_pair(pulse, 0.0)
        doubled = FieldConfiguration(pulses=(pulse.scaled(2.0),))
        np.testing.assert_allclose(total_field(pair, t), total_field(doubled, t), rtol=1e-15, atol=1e-18)

    def test_long_delay_envelopes_do_not_overlap(self, pulse):
        delay = units.to_atomic(100.0, "fs")
        pair = delayed_pair(pulse, delay)
        t = np.linspace(pulse.t0 - 2 * pulse.tau, pulse.t0 + delay + 2 * pulse.tau, 20001)
        overlap = envelope(pair.pulses[0], t) * envelope(pair.pulses[1], t)
        assert overlap.max() < 1e-10 * pulse.F0**2

    def test_half_period_delay_cancels_at_center(self, pulse):
        half = pulse.period / 2
        pair = delayed_pair(pulse, half)
        assert abs(total_field(pair, pulse.t0 + half / 2)) < 1e-9 * pulse.F0

    def test_energy_additivity(self, pulse):
        single = configuration_fluence(FieldConfiguration(pulses=(pulse,)))
        pair = configuration_fluence(delayed_pair(pulse, units.to_atomic(100.0, "fs")))
        assert pair == pytest.approx(2 * single, rel=1e-9)

    def test_negative_delay(self, pulse):
        with pytest.raises(DomainError):
            delayed_pair(pulse, -1.0)


def test_configuration_fluence_matches_closed_form(pulse):
    cfg = FieldConfiguration(pulses=(pulse,))
    assert configuration_fluence(cfg) == pytest.approx(pulse.fluence, rel=1e-3)


def test_from_fluence_round_trip():
    pulse = LaserPulse.from_fluence(10.0, 5.3)
    assert units.from_atomic(pulse.fluence, "J/m2") == pytest.approx(10.0, rel=1e-12)
