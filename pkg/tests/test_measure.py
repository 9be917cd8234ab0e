"""Measures: total variation, deposition, mollification, splitting."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stlab import (
    Measure,
    build_interval,
    callable_density,
    density_measure,
    dirac,
    power_distance_density,
    table_density,
    total_variation,
    uniform_density,
)
from stlab.measure import (
    MeasureError,
    deposit,
    is_nonnegative,
    load_vector,
    mollify,
    split_signed,
)


def test_total_variation_single_atom():
    assert total_variation(dirac([0.5])) == pytest.approx(1.0)


def test_total_variation_signed_atoms():
    m = dirac([0.25], 2.0) + dirac([0.75], -3.0)
    assert total_variation(m) == pytest.approx(5.0)


def test_total_variation_unit_density(interval64):
    m = density_measure(uniform_density(1.0))
    assert total_variation(m, interval64) == pytest.approx(1.0, rel=0.01)


def test_total_variation_nonintegrable_density_is_infinite(interval64):
    m = density_measure(power_distance_density(1.5))
    assert total_variation(m, interval64) == np.inf


def test_zero_measure():
    z = Measure()
    assert z.is_zero()
    assert total_variation(z) == 0.0


def test_atom_must_be_interior(interval64):
    with pytest.raises(MeasureError):
        load_vector(dirac([1.0]), interval64)
    with pytest.raises(MeasureError):
        load_vector(dirac([1.25]), interval64)


def test_deposit_atom_on_node(interval64):
    d = interval64
    x = d.interior_points[10]
    rhs = deposit(dirac(x, 1.0), d)
    expected = np.zeros(d.n_interior)
    expected[10] = 1.0 / d.volumes[10]
    np.testing.assert_allclose(rhs, expected, atol=1e-12)


def test_deposit_atom_midway_splits_evenly(interval64):
    d = interval64
    x = d.interior_points[10, 0] + d.h / 2
    rhs = deposit(dirac([x], 1.0), d)
    nz = np.nonzero(rhs)[0]
    np.testing.assert_array_equal(nz, [10, 11])
    np.testing.assert_allclose(rhs[nz] * d.volumes[nz], [0.5, 0.5], atol=1e-12)


@given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=-3, max_value=3))
def test_atom_load_conserves_mass(x, weight):
    d = build_interval(32)
    lv = load_vector(dirac([x], weight), d)
    assert lv.sum() == pytest.approx(weight, abs=1e-12)


def test_density_load_is_quadrature(interval64):
    d = interval64
    lv = load_vector(density_measure(uniform_density(2.0)), d)
    np.testing.assert_allclose(lv, 2.0 * d.volumes, atol=1e-14)


def test_load_is_additive(interval64):
    d = interval64
    m1 = dirac([0.3], 1.5)
    m2 = density_measure(uniform_density(0.5))
    np.testing.assert_allclose(
        load_vector(m1 + m2, d),
        load_vector(m1, d) + load_vector(m2, d),
        atol=1e-14,
    )


def test_mollify_preserves_mass_and_support(interval64):
    d = interval64
    rho = mollify(dirac([0.5], 1.0), 8, d)
    mass = float(np.sum(rho.values * d.volumes))
    assert mass == pytest.approx(1.0, abs=1e-10)
    x = d.interior_points[:, 0]
    outside = np.abs(x - 0.5) > 1 / 8 + d.h
    assert np.all(rho.values[outside] == 0)


def test_mollify_zero_measure_is_zero(interval64):
    rho = mollify(Measure(), 8, interval64)
    assert np.all(rho.values == 0)


def test_mollify_radius_must_clear_boundary(interval64):
    with pytest.raises(MeasureError):
        mollify(dirac([0.05]), 10, interval64)


def test_mollified_uniform_density_approaches_one(interval64):
    d = interval64
    rho = mollify(density_measure(uniform_density(1.0)), 64, d)
    x = d.interior_points[:, 0]
    inner = (x > 0.2) & (x < 0.8)
    np.testing.assert_allclose(rho.values[inner], 1.0, atol=0.05)


def test_split_signed(interval64):
    d = interval64
    m = dirac([0.25], 2.0) + dirac([0.75], -3.0)
    pos, neg = split_signed(m, d)
    assert is_nonnegative(pos, d)
    assert is_nonnegative(neg, d)
    assert total_variation(pos, d) + total_variation(neg, d) == pytest.approx(5.0)
    np.testing.assert_allclose(
        load_vector(m, d),
        load_vector(pos, d) - load_vector(neg, d),
        atol=1e-14,
    )


def test_is_nonnegative(interval64):
    assert is_nonnegative(dirac([0.5]), interval64)
    assert not is_nonnegative(dirac([0.5], -1.0), interval64)
    assert is_nonnegative(density_measure(uniform_density(0.0)), interval64)


def test_table_density_shape_check(interval64):
    with pytest.raises(MeasureError):
        load_vector(density_measure(table_density(np.ones(5))), interval64)


def test_callable_density_sampled_at_nodes(interval64):
    d = interval64
    m = density_measure(callable_density(lambda p: p[..., 0] ** 2))
    lv = load_vector(m, d)
    x = d.interior_points[:, 0]
    np.testing.assert_allclose(lv, x ** 2 * d.volumes, atol=1e-14)
