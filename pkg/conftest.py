"""
Shared fixtures: the calibrated box model on a small grid that keeps every
propagation in the second range. Full-resolution grids are only used by tests
marked slow.
"""

import pytest

from app.physics import units
from app.physics.field_model import FieldConfiguration, LaserPulse
from app.physics.potential import MetalModel
from app.physics.qdynamics import GridSpec, calibrate_well_width, ground_state


@pytest.fixture(scope="session")
def calibrated_width():
    return calibrate_well_width(MetalModel())


@pytest.fixture(scope="session")
def metal(calibrated_width):
    return MetalModel(well_width=calibrated_width)


@pytest.fixture(scope="session")
def small_grid(metal):
    return GridSpec.for_well(
        metal.well_width,
        z_max=units.to_atomic(12.0, "nm"),
        n_points=8,
        points_per_well=24,
        z_detector=units.to_atomic(3.0, "nm"),
        absorber_width=units.to_atomic(4.0, "nm"),
    )


@pytest.fixture(scope="session")
def ground(metal, small_grid):
    return ground_state(metal, small_grid)


@pytest.fixture
def short_pulse():
    return LaserPulse.from_practical(8.0, 3.0)


@pytest.fixture
def emitting_field(short_pulse):
    return FieldConfiguration(pulses=(short_pulse,))
