"""Van der Waals pressure inside a film or inside any layer of a stack.

Sign convention: a positive value means the media bounding the layer
attract each other (the layer tends to thin).  Pressures are derivatives of
the free energy with respect to the layer thickness, ``p = dU/dz``.
"""

from __future__ import annotations

import math

import numpy as np

from .constants import C
from .em_core import POLARIZATIONS, Evaluator, Layer, Stack
from .kernel import (
    MatsubaraSpec,
    PressureResult,
    QuadratureSpec,
    SeriesResult,
    layer_term_block,
    log_integrand,
    matsubara_series,
    stress_integrand,
)
from .materials import VACUUM, MaterialModel, eval_permittivity
from .quadrature import integrate_rows

__all__ = [
    "PressureResult",
    "pressure_vv",
    "pressure_lv",
    "pressure_lr",
    "pressure_lr_dlp",
    "pressure_in_layer",
    "free_energy_lr",
    "film_terms",
]


def _check_gap(z_m):
    if not (z_m > 0 and math.isfinite(z_m)):
        raise ValueError(f"film thickness must be finite and > 0, got {z_m}")


def _film_series(product, film, z_m, mats, quad, keep_terms):
    _check_gap(z_m)
    terms = layer_term_block(stress_integrand(product), film, z_m, 1.0 / (8.0 * math.pi * z_m**3), quad)
    return matsubara_series(terms, mats, keep_terms)


def pressure_vv(
    film: MaterialModel,
    z_m: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
) -> PressureResult:
    """Free-standing film in vacuum: integrand R_mv^2 e^{-2kz z}/(1 - R_mv^2 e^{-2kz z})."""

    def product(ev: Evaluator, pol):
        r = ev.fresnel(pol, film, VACUUM)
        return r * r

    return _film_series(product, film, z_m, mats, quad, keep_terms)


def pressure_lv(
    left: MaterialModel,
    film: MaterialModel,
    z_m: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
) -> PressureResult:
    """Film on a substrate ``left`` with vacuum on the other face."""
    return _film_series(
        lambda ev, pol: ev.fresnel(pol, film, left) * ev.fresnel(pol, film, VACUUM),
        film, z_m, mats, quad, keep_terms,
    )


def film_terms(left, film, right, z_m, quad):
    """Per-frequency pressure/k_BT of the three-media film (vectorised in xi)."""
    _check_gap(z_m)
    return layer_term_block(
        stress_integrand(lambda ev, pol: ev.fresnel(pol, film, left) * ev.fresnel(pol, film, right)),
        film, z_m, 1.0 / (8.0 * math.pi * z_m**3), quad,
    )


def pressure_lr(
    left: MaterialModel,
    film: MaterialModel,
    right: MaterialModel,
    z_m: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
) -> PressureResult:
    """Film ``film`` of thickness ``z_m`` between half-spaces ``left`` and ``right``.

    ``k_B T/pi sum' int sum_p R_mL R_mR e^{-2kz_m z_m} / (1 - R_mL R_mR e^{-2kz_m z_m}) kz_m krho dkrho``
    """
    return matsubara_series(film_terms(left, film, right, z_m, quad), mats, keep_terms)


_DLP_BREAKS = np.array([0.0, 1 / 64, 1 / 16, 1 / 4, 1 / 2, 1.0])


def pressure_lr_dlp(
    left: MaterialModel,
    film: MaterialModel,
    right: MaterialModel,
    z_m: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
) -> PressureResult:
    """Same pressure in the dimensionless ``q = kz_m c / (xi sqrt(eps_m mu_m))`` form.

    ``k_B T/(pi c^3) sum' (eps_m mu_m)^{3/2} xi^3 int_1^inf q^2 sum_p (e^{2 q a}/(R_mL R_mR) - 1)^{-1} dq``
    with ``a = xi sqrt(eps_m mu_m) z_m / c``.  The substitution is singular at
    xi = 0, so the n = 0 term is taken from the krho form.
    """
    _check_gap(z_m)
    static_terms = film_terms(left, film, right, z_m, quad)
    cutoff = quad.tail_cutoff

    def dynamic(xi_rows: np.ndarray):
        n_index = np.sqrt(eval_permittivity(film, xi_rows) * film.permeability)
        k0 = xi_rows * n_index / C
        a = k0 * z_m
        q_span = cutoff / (2.0 * a)  # q - 1 range reaching e^-cutoff
        scale = k0**3 / math.pi * q_span

        def f(t, rows):
            span = q_span[rows][:, None]
            q = 1.0 + span * t
            k0r = k0[rows][:, None]
            kzm = q * k0r
            krho2 = (q - 1.0) * (q + 1.0) * k0r**2
            ev = Evaluator(xi_rows[rows][:, None], krho2)
            ev.pin_kz(film, kzm)
            growth = np.exp(2.0 * q * a[rows][:, None])
            acc = 0.0
            with np.errstate(divide="ignore"):
                for pol in POLARIZATIONS:
                    x = ev.fresnel(pol, film, left) * ev.fresnel(pol, film, right)
                    acc = acc + 1.0 / (growth / x - 1.0)
            return np.broadcast_to(acc * q * q, t.shape)

        vals, errs = integrate_rows(f, len(xi_rows), _DLP_BREAKS, quad.rel_tol, quad.abs_tol, quad.max_depth)
        return scale * vals, scale * errs

    def terms(xi):
        xi = np.asarray(xi, dtype=float)
        vals = np.empty(xi.size)
        errs = np.empty(xi.size)
        zero = xi == 0
        if np.any(zero):
            vals[zero], errs[zero] = static_terms(xi[zero])
        if np.any(~zero):
            vals[~zero], errs[~zero] = dynamic(xi[~zero])
        return vals, errs

    return matsubara_series(terms, mats, keep_terms)


def layer_terms(stack: Stack, r: int, quad: QuadratureSpec):
    left, right = stack.sides_of(r)
    layer = stack.layers[r - 1]
    others = [l.thickness for i, l in enumerate(stack.layers) if i != r - 1]
    return layer_term_block(
        stress_integrand(lambda ev, pol: ev.side(pol, left) * ev.side(pol, right)),
        layer.material, layer.thickness, 1.0 / (8.0 * math.pi * layer.thickness**3), quad, others,
    )


def pressure_in_layer(
    stack: Stack,
    r: int,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
    n_max: int | None = None,
) -> PressureResult:
    """Pressure in layer ``r`` (1-based) of a multilayer stack.

    Uses the generalised reflection coefficients of the two half-stacks seen
    from inside layer ``r``.  ``n_max`` truncates the Matsubara sum after
    that index instead of testing for convergence.
    """
    if not 1 <= r <= len(stack.layers):
        raise IndexError(f"layer index {r} out of range 1..{len(stack.layers)}")
    return matsubara_series(layer_terms(stack, r, quad), mats, keep_terms, n_max)


def free_energy_lr(
    left: MaterialModel,
    film: MaterialModel,
    right: MaterialModel,
    z_m: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = False,
) -> SeriesResult:
    """Thickness-dependent free energy per area (J/m^2) of the film; dU/dz_m = pressure_lr."""
    _check_gap(z_m)
    terms = layer_term_block(
        log_integrand(lambda ev, pol: ev.fresnel(pol, film, left) * ev.fresnel(pol, film, right)),
        film, z_m, 1.0 / (8.0 * math.pi * z_m**2), quad,
    )
    return matsubara_series(terms, mats, keep_terms)


def single_layer_stack(left, film, right, z_m) -> Stack:
    return Stack(left, (Layer(film, z_m),), right)
