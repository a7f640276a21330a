import numpy as np
import pytest

from services.core_model import (FORWARD, INVERSE, Q_OMEGA, Q_T, SPACE, TIME, X_OMEGA, X_T,
                                 Field, FieldPair, make_grid, to_direct, to_spectral, transform)
from services.errors import ConfigurationError, LogicError, NumericError


def test_make_grid_lattices():
    grid = make_grid(1024, 4e-6, 64, 0.1e-12)
    assert grid.shape == (64, 1024)
    assert grid.x[512] == 0.0
    assert grid.t[32] == 0.0
    assert grid.dq == pytest.approx(2 * np.pi / (1024 * 4e-6))
    assert grid.q_max == pytest.approx(np.pi / 4e-6)
    assert grid.q[0] == 0.0


def test_make_grid_accepts_single_time_sample():
    grid = make_grid(1024, 4e-6, 1, 1.0)
    assert grid.shape == (1, 1024)
    assert grid.omega.tolist() == [0.0]


@pytest.mark.parametrize("n_x, dx, n_t, dt, key", [
    (1000, 4e-6, 64, 1e-13, "n_x"),
    (1024, 4e-6, 48, 1e-13, "n_t"),
    (1024, 0.0, 64, 1e-13, "dx"),
    (1024, 4e-6, 64, -1.0, "dt"),
])
def test_make_grid_rejects_bad_values(n_x, dx, n_t, dt, key):
    with pytest.raises(ConfigurationError) as info:
        make_grid(n_x, dx, n_t, dt)
    assert info.value.key == key


def test_mirror_map_pairs_opposite_frequencies():
    grid = make_grid(16, 1.0, 8, 1.0)
    # self-paired at zero and Nyquist
    assert grid.mirror_x[0] == 0
    assert grid.mirror_x[8] == 8
    np.testing.assert_allclose(grid.q[grid.mirror_x][1:8], -grid.q[1:8])
    values = np.arange(128).reshape(8, 16)
    assert grid.mirror(grid.mirror(values)).tolist() == values.tolist()


def test_transform_round_trip_and_parseval(rng):
    grid = make_grid(64, 1e-6, 8, 1e-13)
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    field = Field(values, X_T, grid)
    spectral = to_spectral(field)
    assert spectral.domain == Q_OMEGA
    assert spectral.power() == pytest.approx(field.power(), rel=1e-12)
    back = to_direct(spectral)
    np.testing.assert_allclose(back.values, values, atol=1e-12)


def test_plane_wave_lands_on_its_lattice_mode():
    grid = make_grid(64, 1e-6, 1, 1.0)
    k = 5
    field = Field(np.exp(1j * grid.q[k] * grid.x)[np.newaxis, :], X_T, grid)
    spectrum = transform(field, SPACE, FORWARD)
    assert spectrum.domain == Q_T
    power = np.abs(spectrum.values[0]) ** 2
    assert int(np.argmax(power)) == k
    assert power[k] == pytest.approx(64.0)


def test_transform_checks_domain_tag():
    grid = make_grid(8, 1.0, 2, 1.0)
    field = Field(np.zeros(grid.shape), X_OMEGA, grid)
    with pytest.raises(LogicError):
        transform(field, TIME, FORWARD)
    with pytest.raises(LogicError):
        transform(field, SPACE, INVERSE)


def test_field_rejects_non_finite_and_wrong_shape():
    grid = make_grid(8, 1.0, 2, 1.0)
    bad = np.zeros(grid.shape, dtype=complex)
    bad[1, 3] = np.nan
    with pytest.raises(NumericError) as info:
        Field(bad, X_T, grid)
    assert info.value.where == (1, 3)
    with pytest.raises(LogicError):
        Field(np.zeros((3, 8)), X_T, grid)


def test_field_pair_requires_common_domain():
    grid = make_grid(8, 1.0, 2, 1.0)
    with pytest.raises(LogicError):
        FieldPair(Field(np.zeros(grid.shape), X_T, grid), Field(np.zeros(grid.shape), Q_OMEGA, grid))


def test_time_window():
    grid = make_grid(8, 1.0, 16, 1.0)
    assert grid.time_window(16.0).all()
    assert np.count_nonzero(grid.time_window(4.0)) == 5
    # narrower than one sample still keeps t = 0
    assert np.count_nonzero(grid.time_window(0.1)) == 1
    with pytest.raises(ConfigurationError):
        grid.time_window(17.0)
    with pytest.raises(ConfigurationError):
        grid.time_window(float("nan"))


def test_x_index_rejects_non_finite_positions():
    grid = make_grid(8, 1.0, 2, 1.0)
    assert grid.x_index(0.0) == 4
    for position in (float("nan"), float("inf")):
        with pytest.raises(ConfigurationError):
            grid.x_index(position)
