import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planarvdw.constants import C
from planarvdw.em_core import (
    POLARIZATIONS,
    DegenerateCompositionError,
    Layer,
    Polarization,
    ReflectionSide,
    Stack,
    composition,
    fresnel,
    generalized_reflection,
    kz,
    static_fresnel,
)
from planarvdw.materials import VACUUM, MaterialModel, eval_permittivity

E, H = Polarization.E, Polarization.H

media = st.builds(
    MaterialModel.lorentz,
    st.lists(st.tuples(st.floats(0.0, 20.0), st.floats(1e14, 1e17), st.floats(0.0, 1e15)), min_size=1, max_size=2),
    st.floats(0.0, 3.0),
    st.floats(1.0, 3.0),
)
xis = st.floats(1e12, 1e18)
krhos = st.floats(1e3, 1e11)


def transfer_matrix_reflection(pol, xi, krho, media_seq, thicknesses):
    """Field propagation from the backing to the front face, one cosh/sinh step per layer.

    State is (F, F'/p) with p = mu (TE) or eps (TM); in the backing only
    the wave decaying away from the stack exists.
    """

    def params(m):
        eps = eval_permittivity(m, xi)
        mu = m.permeability
        return math.sqrt(krho**2 + eps * mu * (xi / C) ** 2), (mu if pol is E else eps)

    k_t, p_t = params(media_seq[-1])
    f, v = 1.0, -k_t / p_t
    for m, d in zip(reversed(media_seq[1:-1]), reversed(thicknesses)):
        k, p = params(m)
        ch, sh = math.cosh(k * d), math.sinh(k * d)
        f, v = f * ch - p * v / k * sh, v * ch - k / p * f * sh
    k_a, p_a = params(media_seq[0])
    y = p_a * (v / f) / k_a
    return (1.0 + y) / (1.0 - y)


def test_kz_by_hand():
    assert kz(3e15, 2e7, 4.0, 1.0) == pytest.approx(math.sqrt(4e14 + 4.0 * (3e15 / C) ** 2), rel=1e-15)


@pytest.mark.parametrize("pol", POLARIZATIONS)
def test_fresnel_by_hand(pol):
    a = MaterialModel.constant(2.0, permeability=1.5)
    b = MaterialModel.constant(5.0, permeability=1.2)
    xi, krho = 2e15, 1e7
    ka = math.sqrt(krho**2 + 3.0 * (xi / C) ** 2)
    kb = math.sqrt(krho**2 + 6.0 * (xi / C) ** 2)
    pa, pb = (1.5, 1.2) if pol is E else (2.0, 5.0)
    assert fresnel(pol, xi, krho, a, b) == pytest.approx((pb * ka - pa * kb) / (pb * ka + pa * kb), rel=1e-13)


def test_identical_media_do_not_reflect(silica):
    for pol in POLARIZATIONS:
        assert fresnel(pol, 1e15, 1e7, silica, silica) == 0.0


def test_fresnel_accepts_arrays(silica):
    krho = np.logspace(4, 10, 5)
    arr = fresnel(H, 1e15, krho, silica, VACUUM)
    assert arr.shape == (5,)
    assert list(arr) == pytest.approx([fresnel(H, 1e15, float(k), silica, VACUUM) for k in krho], rel=1e-15)


@settings(max_examples=300, deadline=None)
@given(media, media, xis, krhos, st.sampled_from(POLARIZATIONS))
def test_fresnel_antisymmetric_and_bounded(a, b, xi, krho, pol):
    r_ab = fresnel(pol, xi, krho, a, b)
    r_ba = fresnel(pol, xi, krho, b, a)
    assert r_ab == pytest.approx(-r_ba, abs=1e-15)
    assert abs(r_ab) <= 1.0


@settings(max_examples=300, deadline=None)
@given(media, media, media, xis, krhos, st.sampled_from(POLARIZATIONS))
def test_composition_through_vanishing_layer(a, b, c, xi, krho, pol):
    lhs = composition(fresnel(pol, xi, krho, a, b), fresnel(pol, xi, krho, b, c))
    assert lhs == pytest.approx(fresnel(pol, xi, krho, a, c), abs=1e-13)


def test_composition_degenerate():
    with pytest.raises(DegenerateCompositionError):
        composition(1.0, -1.0)
    assert composition(np.array([0.2, 0.5]), np.array([0.1, -0.3])) == pytest.approx([0.3 / 1.02, 0.2 / 0.85])


def test_static_limits(silica):
    metal = MaterialModel.drude(1.4e16, 5e13)
    magnetic = MaterialModel.constant(3.0, permeability=2.0)
    assert static_fresnel(H, VACUUM, metal) == 1.0
    assert static_fresnel(H, metal, VACUUM) == -1.0
    assert static_fresnel(E, VACUUM, metal) == 0.0
    assert static_fresnel(E, VACUUM, magnetic) == pytest.approx(1.0 / 3.0)
    eps0 = 1.0 + 1.098
    assert static_fresnel(H, VACUUM, silica) == pytest.approx((eps0 - 1.0) / (eps0 + 1.0))
    # two conductors of the same order: ratio of the divergent parts
    m2 = MaterialModel.drude(2.8e16, 5e13)
    assert static_fresnel(H, metal, m2) == pytest.approx((4.0 - 1.0) / (4.0 + 1.0))
    assert fresnel(H, 0.0, np.ones(3), VACUUM, metal).tolist() == [1.0, 1.0, 1.0]


@pytest.mark.parametrize("pol", POLARIZATIONS)
def test_static_limit_is_continuous_for_dielectrics(pol, silica):
    magnetic = MaterialModel.lorentz([(3.0, 1e16)], permeability=1.7)
    r0 = static_fresnel(pol, silica, magnetic)
    assert fresnel(pol, 1e6, 1e7, silica, magnetic) == pytest.approx(r0, rel=1e-12)


def test_drude_tm_tends_to_one_at_small_xi():
    metal = MaterialModel.drude(1.4e16, 5e13)
    assert fresnel(H, 1e8, 1e7, VACUUM, metal) == pytest.approx(1.0, abs=1e-6)


def test_generalized_reflection_without_layers_is_fresnel(silica, water):
    side = ReflectionSide(water, (), silica)
    for pol in POLARIZATIONS:
        assert generalized_reflection(pol, 2e15, 3e7, side) == pytest.approx(fresnel(pol, 2e15, 3e7, water, silica), rel=1e-14)


def test_single_layer_airy_formula(silica, water):
    xi, krho, d = 4e15, 2e7, 7e-9
    side = ReflectionSide(VACUUM, (Layer(water, d),), silica)
    for pol in POLARIZATIONS:
        r1 = fresnel(pol, xi, krho, VACUUM, water)
        r2 = fresnel(pol, xi, krho, water, silica)
        e = math.exp(-2 * kz(xi, krho, eval_permittivity(water, xi), 1.0) * d)
        assert generalized_reflection(pol, xi, krho, side) == pytest.approx((r1 + r2 * e) / (1 + r1 * r2 * e), rel=1e-13)


layered = st.lists(st.tuples(media, st.floats(1e-10, 5e-8)), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(media, layered, media, st.floats(1e13, 5e16), st.floats(1e5, 1e8), st.sampled_from(POLARIZATIONS))
def test_generalized_reflection_matches_transfer_matrix(adj, layers, term, xi, krho, pol):
    side = ReflectionSide(adj, tuple(Layer(m, d) for m, d in layers), term)
    expected = transfer_matrix_reflection(pol, xi, krho, side.media, [d for _, d in layers])
    got = generalized_reflection(pol, xi, krho, side)
    assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert abs(got) <= 1.0


def test_thick_layer_hides_backing(silica, water):
    side = ReflectionSide(VACUUM, (Layer(water, 1e-3),), silica)
    assert generalized_reflection(E, 1e15, 1e8, side) == pytest.approx(fresnel(E, 1e15, 1e8, VACUUM, water), rel=1e-14)


def test_vanishing_layer_is_transparent(silica, water):
    side = ReflectionSide(VACUUM, (Layer(water, 1e-30),), silica)
    for pol in POLARIZATIONS:
        assert generalized_reflection(pol, 1e15, 1e7, side) == pytest.approx(fresnel(pol, 1e15, 1e7, VACUUM, silica), rel=1e-12)


def test_stack_sides(silica, water):
    l1, l2, l3 = Layer(water, 1e-9), Layer(VACUUM, 2e-9), Layer(silica, 3e-9)
    stack = Stack(silica, (l1, l2, l3), water)
    left, right = stack.sides_of(2)
    assert left.adjacent == VACUUM and left.remainder == (l1,) and left.terminal == silica
    assert right.remainder == (l3,) and right.terminal == water
    left, right = stack.sides_of(3)
    assert left.remainder == (l2, l1)
    with pytest.raises(IndexError):
        stack.sides_of(0)
    with pytest.raises(ValueError):
        Layer(water, 0.0)


def test_derivative_of_generalized_reflection(silica, water):
    """rho, g, E returned with deriv=j give dR/dt_j = -2 kz_j g E."""
    from planarvdw.em_core import Evaluator

    xi, krho = 3e15, 4e7
    layers = [Layer(water, 4e-9), Layer(silica, 6e-9), Layer(MaterialModel.constant(4.0), 3e-9)]
    for j in range(3):
        for pol in POLARIZATIONS:
            ev = Evaluator(xi, np.array(krho**2))
            rho, g, e = ev.side(pol, ReflectionSide(VACUUM, tuple(layers), water), deriv=j)
            kz_j = ev.kz(layers[j].material)
            h = 1e-6 * layers[j].thickness
            vals = []
            for sgn in (1, -1):
                mod = list(layers)
                mod[j] = Layer(mod[j].material, mod[j].thickness + sgn * h)
                vals.append(generalized_reflection(pol, xi, krho, ReflectionSide(VACUUM, tuple(mod), water)))
            fd = (vals[0] - vals[1]) / (2 * h)
            assert float(-2 * kz_j * g * e) == pytest.approx(fd, rel=1e-6)
