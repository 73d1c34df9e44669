import math

import mpmath
import numpy as np
import pytest
import scipy.constants as sc

from planarvdw.em_core import Layer, Stack
from planarvdw.kernel import (
    MatsubaraSpec,
    ProbeGeometry,
    QuadratureSpec,
    SeriesTruncationError,
    gap_closure_derivative,
    kernel_Kn,
    matsubara_frequency,
    matsubara_series,
    stress_tensor_avg,
    work_to_close_gap,
)
from planarvdw.materials import VACUUM, MaterialModel
from planarvdw.pressure import pressure_in_layer

KT300 = sc.k * 300.0


def half_spaces(left, right, z_v):
    return ProbeGeometry.split(Stack(left, (), right), 0, z_v)


def geometric_terms(ratio):
    xi1 = matsubara_frequency(1, 300.0)

    def terms(xi):
        n = np.asarray(xi) / xi1
        return ratio**n, np.zeros_like(n)

    return terms


def test_first_matsubara_frequency():
    assert matsubara_frequency(1, 300.0) == pytest.approx(2 * math.pi * sc.k * 300.0 / sc.hbar, rel=1e-15)
    assert matsubara_frequency(1, 300.0) == pytest.approx(2.4678e14, rel=1e-4)
    assert list(matsubara_frequency(np.arange(3), 300.0)) == pytest.approx([0.0, 2.4678e14, 4.9356e14], rel=1e-4)


def test_primed_sum_of_geometric_series():
    r = 0.5
    res = matsubara_series(geometric_terms(r), MatsubaraSpec(300.0, rel_tol=1e-14))
    assert res.value == pytest.approx(KT300 * (0.5 + r / (1 - r)), rel=1e-13)
    assert res.per_n[0][2] == pytest.approx(0.5 * KT300)
    assert math.fsum(t for *_, t in res.per_n) == pytest.approx(res.value, rel=1e-15)
    assert res.truncation_error < 1e-12 * res.value


def test_n_max_truncates_and_zero_keeps_only_static_term():
    res = matsubara_series(geometric_terms(0.9), MatsubaraSpec(), n_max=0)
    assert res.n_used == 1 and res.value == pytest.approx(0.5 * KT300)
    res = matsubara_series(geometric_terms(0.9), MatsubaraSpec(), n_max=4)
    assert [n for n, *_ in res.per_n] == [0, 1, 2, 3, 4]


def test_min_terms_respected():
    res = matsubara_series(geometric_terms(1e-3), MatsubaraSpec(min_terms=40))
    assert res.n_used == 40


def test_nonconvergence_raises_with_partial_sum():
    with pytest.raises(SeriesTruncationError) as info:
        matsubara_series(geometric_terms(0.999), MatsubaraSpec(max_terms=50))
    assert info.value.partial.n_used == 50


def test_vacuum_everywhere_gives_zero():
    g = half_spaces(VACUUM, VACUUM, 1e-9)
    assert kernel_Kn(g, 0, 300.0) == 0.0
    assert stress_tensor_avg(g).value == 0.0


def test_static_term_matches_polylog(dielectric):
    z = 5e-9
    delta = (3.0 - 1.0) / (3.0 + 1.0)
    expected = float(mpmath.polylog(3, delta**2)) / (4 * math.pi * z**3)
    assert kernel_Kn(half_spaces(dielectric, dielectric, z), 0, 300.0) == pytest.approx(expected, rel=1e-10)


def test_high_temperature_is_static_term_only(dielectric):
    z, temp = 1e-6, 1e4
    res = stress_tensor_avg(half_spaces(dielectric, dielectric, z), MatsubaraSpec(temp))
    delta = 0.5
    static = sc.k * temp * float(mpmath.polylog(3, delta**2)) / (8 * math.pi * z**3)
    assert res.value == pytest.approx(static, rel=1e-12)
    assert abs(res.per_n[1][2]) < 1e-20 * res.value


def test_stress_is_kt_times_primed_kernel_sum(silica, water):
    g = half_spaces(silica, water, 3e-9)
    res = stress_tensor_avg(g, MatsubaraSpec(300.0))
    for n in (0, 1, 7, 40):
        w = 0.5 if n == 0 else 1.0
        assert res.per_n[n][2] == pytest.approx(w * KT300 * kernel_Kn(g, n, 300.0), rel=1e-14)


def test_left_right_symmetry(silica, water):
    a = stress_tensor_avg(half_spaces(silica, water, 4e-9)).value
    b = stress_tensor_avg(half_spaces(water, silica, 4e-9)).value
    assert a == pytest.approx(b, rel=1e-13)


def test_stress_diverges_as_inverse_cube(silica):
    zs = np.array([2e-11, 4e-11, 8e-11])
    vals = [stress_tensor_avg(half_spaces(silica, silica, z), keep_terms=False).value for z in zs]
    slopes = np.diff(np.log(vals)) / np.diff(np.log(zs))
    assert slopes == pytest.approx([-3.0, -3.0], abs=2e-3)


def test_stress_decays_monotonically(silica, water):
    vals = [stress_tensor_avg(half_spaces(silica, water, z), keep_terms=False).value for z in np.logspace(-9, -6, 8)]
    assert all(v > 0 for v in vals)
    assert np.all(np.diff(vals) < 0)


def test_work_derivative_is_stress(silica, water):
    g = half_spaces(silica, water, 0.0)
    d, h = 5e-9, 5e-13
    mats = MatsubaraSpec(300.0, min_terms=3000)  # all three stop at the same n
    wp = work_to_close_gap(g, d + h, mats, QuadratureSpec(rel_tol=1e-12))
    wm = work_to_close_gap(g, d - h, mats, QuadratureSpec(rel_tol=1e-12))
    s = stress_tensor_avg(g.with_gap(d), mats, QuadratureSpec(rel_tol=1e-12))
    assert wp.n_used == wm.n_used == s.n_used
    assert (wp.value - wm.value) / (2 * h) == pytest.approx(s.value, rel=1e-6)
    with pytest.raises(ValueError):
        work_to_close_gap(g, 0.0)


def test_probe_geometry_bookkeeping(silica, water):
    layers = (Layer(water, 1e-9), Layer(VACUUM, 2e-9), Layer(silica, 3e-9))
    g = ProbeGeometry.split(Stack(silica, layers, water), 2, 1e-10)
    assert g.k == 2 and g.n_layers == 3
    assert g.locate(1) == ("left", 1) and g.locate(2) == ("left", 0) and g.locate(3) == ("right", 0)
    assert g.layer(1) == layers[0]
    g2 = g.with_thickness(1, 5e-9)
    assert g2.layer(1).thickness == 5e-9 and g.layer(1).thickness == 1e-9
    with pytest.raises(IndexError):
        g.locate(4)
    with pytest.raises(ValueError):
        stress_tensor_avg(g.with_gap(0.0))


@pytest.mark.parametrize("k, r", [(0, 1), (0, 3), (1, 2), (1, 3), (2, 1), (3, 2)])
def test_layer_pressure_splits_into_substack_plus_gap_closure(k, r, silica, water):
    """Pressure in layer r = pressure with everything across the probe removed + gap closure term."""
    alumina = MaterialModel.lorentz([(2.0, 1.9e16, 1e15), (7.0, 1e14)])
    layers = (Layer(water, 8e-9), Layer(silica, 5e-9), Layer(alumina, 12e-9))
    stack = Stack(alumina, layers, MaterialModel.constant(2.5))
    mats = MatsubaraSpec(300.0, rel_tol=1e-12)
    full = pressure_in_layer(stack, r, mats, keep_terms=False)
    if r <= k:
        sub, r_sub = Stack(stack.left, layers[:k], VACUUM), r
    else:
        sub, r_sub = Stack(VACUUM, layers[k:], stack.right), r - k
    own = pressure_in_layer(sub, r_sub, mats, keep_terms=False)
    closure = gap_closure_derivative(ProbeGeometry.split(stack, k), r, mats, keep_terms=False)
    assert own.value + closure.value == pytest.approx(full.value, rel=1e-7)


def test_regularised_gap_closure_is_linear_in_delta(silica, water):
    g = ProbeGeometry.split(Stack(silica, (Layer(water, 2e-8),), silica), 0)
    mats = MatsubaraSpec(300.0)
    base = gap_closure_derivative(g, 1, mats, keep_terms=False)
    fixed = MatsubaraSpec(300.0, min_terms=base.n_used)
    d1 = gap_closure_derivative(g, 1, fixed, delta=1e-12, keep_terms=False).value - base.value
    d2 = gap_closure_derivative(g, 1, fixed, delta=2e-12, keep_terms=False).value - base.value
    assert d2 / d1 == pytest.approx(2.0, rel=1e-3)
