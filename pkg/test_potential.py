import numpy as np
import pytest

from app.errors import DomainError
from app.physics import units
from app.physics.field_model import FieldConfiguration, LaserPulse, total_field
from app.physics.potential import (
    MetalModel,
    barrier_maximum,
    potential_at,
    schottky_barrier_peak,
    static_potential,
)

ZERO_FIELD = FieldConfiguration()


def test_interior_is_flat(metal):
    v = potential_at(metal, ZERO_FIELD, -metal.well_width / 2, 0.0)
    assert units.from_atomic(v, "eV") == pytest.approx(-13.5, rel=1e-12)


def test_image_term_at_one_nanometre(metal):
    v = potential_at(metal, ZERO_FIELD, units.to_atomic(1.0, "nm"), 0.0)
    assert units.from_atomic(v, "eV") == pytest.approx(-0.36, abs=5e-3)


def test_vacuum_level_far_away(metal):
    v = static_potential(metal, np.array([units.to_atomic(1e4, "nm")]))
    assert abs(v[0]) < 1e-5


def test_image_potential_is_increasing(metal):
    z = np.linspace(metal.image_cutoff * 1.01, units.to_atomic(40.0, "nm"), 1000)
    v = static_potential(metal, z)
    assert np.all(v < 0)
    assert np.all(np.diff(v) > 0)


def test_continuous_at_cutoff(metal):
    z_c = metal.image_cutoff
    assert units.from_atomic(z_c, "nm") == pytest.approx(0.027, abs=1e-3)
    below, above = static_potential(metal, np.array([z_c * (1 - 1e-9), z_c * (1 + 1e-9)]))
    assert below == pytest.approx(metal.v0)
    assert above == pytest.approx(metal.v0, rel=1e-8)


def test_time_dependence_is_linear_in_field(metal):
    pulse = LaserPulse.from_practical(2.0, 5.3)
    cfg = FieldConfiguration(f_dc=units.to_atomic(0.3, "GV/m"), pulses=(pulse,))
    z = units.to_atomic(1.5, "nm")
    for t in np.linspace(-pulse.tau, pulse.tau, 7):
        static = potential_at(metal, ZERO_FIELD, z, t)
        assert potential_at(metal, cfg, z, t) - static == pytest.approx(-z * total_field(cfg, t), rel=1e-10, abs=1e-14)


def test_field_screened_inside(metal):
    cfg = FieldConfiguration(f_dc=units.to_atomic(5.0, "GV/m"))
    assert potential_at(metal, cfg, -0.5 * metal.well_width, 0.0) == pytest.approx(metal.v0)


def test_outside_domain(metal):
    with pytest.raises(DomainError):
        potential_at(metal, ZERO_FIELD, -2 * metal.well_width, 0.0)
    with pytest.raises(DomainError):
        potential_at(metal, ZERO_FIELD, 100.0, 0.0, z_max=50.0)


def test_uncalibrated_model_has_no_domain():
    with pytest.raises(DomainError):
        potential_at(MetalModel(), ZERO_FIELD, 1.0, 0.0)


def test_fermi_level_must_lie_in_well():
    with pytest.raises(DomainError):
        MetalModel(v0=units.to_atomic(-3.0, "eV"))


def test_image_term_can_be_switched_off():
    metal = MetalModel(well_width=1.0, image_potential=False)
    assert metal.image_cutoff == 0.0
    np.testing.assert_array_equal(static_potential(metal, np.array([0.5, 10.0])), [0.0, 0.0])


class TestBarrierMaximum:
    F = units.to_atomic(4.4, "GV/m")

    def test_schottky_peak(self):
        z_star, v_star = schottky_barrier_peak(self.F)
        assert units.from_atomic(z_star, "nm") == pytest.approx(0.286, abs=1e-3)
        assert units.from_atomic(v_star, "eV") == pytest.approx(-2.52, abs=5e-3)

    def test_numerical_matches_closed_form(self, metal):
        z_num, v_num = barrier_maximum(metal, self.F)
        z_ref, v_ref = schottky_barrier_peak(self.F)
        assert z_num == pytest.approx(z_ref, rel=1e-4)
        assert v_num == pytest.approx(v_ref, rel=1e-8)

    def test_barrier_below_vacuum(self, metal):
        assert barrier_maximum(metal, self.F)[1] < 0

    def test_scaling(self):
        z1, v1 = schottky_barrier_peak(self.F)
        z4, v4 = schottky_barrier_peak(4 * self.F)
        assert z4 == pytest.approx(z1 / 2, rel=1e-12)
        assert v4 == pytest.approx(2 * v1, rel=1e-12)

    def test_needs_positive_field(self, metal):
        with pytest.raises(DomainError):
            barrier_maximum(metal, 0.0)
        with pytest.raises(DomainError):
            schottky_barrier_peak(-1.0)
