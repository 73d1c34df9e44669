"""Wavevectors and reflection coefficients at imaginary frequency.

Subscript order follows incidence: ``R_ab`` is the amplitude reflection of a
wave travelling in medium ``a`` off the interface with medium ``b``.  At
``xi = i*omega`` all quantities are real; for polarisation ``e`` (TE)

    R_ab = (kz_a mu_b - kz_b mu_a) / (kz_a mu_b + kz_b mu_a)

and for ``h`` (TM) ``mu`` is replaced by ``eps``.  The z-wavevector in a
medium is ``kz = sqrt(krho^2 + eps mu xi^2 / c^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import C
from .materials import MaterialModel, eval_permeability, eval_permittivity

__all__ = [
    "Polarization",
    "POLARIZATIONS",
    "Layer",
    "Stack",
    "ReflectionSide",
    "DegenerateCompositionError",
    "kz",
    "fresnel",
    "static_fresnel",
    "generalized_reflection",
    "composition",
]


class Polarization(str, Enum):
    E = "e"  # transverse electric
    H = "h"  # transverse magnetic


POLARIZATIONS = (Polarization.E, Polarization.H)


class DegenerateCompositionError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class Layer:
    material: MaterialModel
    thickness: float  # m

    def __post_init__(self):
        if not (self.thickness > 0 and math.isfinite(self.thickness)):
            raise ValueError(f"layer thickness must be finite and > 0, got {self.thickness}")


@dataclass(frozen=True)
class Stack:
    """Semi-infinite ``left`` | layers 1..N | semi-infinite ``right``."""

    left: MaterialModel
    layers: tuple[Layer, ...]
    right: MaterialModel

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def __len__(self):
        return len(self.layers)

    def sides_of(self, r: int) -> tuple["ReflectionSide", "ReflectionSide"]:
        """Reflection sides seen from inside layer ``r`` (1-based)."""
        if not 1 <= r <= len(self.layers):
            raise IndexError(f"layer index {r} out of range 1..{len(self.layers)}")
        here = self.layers[r - 1].material
        left = ReflectionSide(here, tuple(reversed(self.layers[: r - 1])), self.left)
        right = ReflectionSide(here, self.layers[r:], self.right)
        return left, right


@dataclass(frozen=True)
class ReflectionSide:
    """Half-stack seen from a layer.

    ``adjacent`` is the medium the wave travels in (the probe or film layer
    itself), ``remainder`` the finite layers ordered outward from it, and
    ``terminal`` the semi-infinite backing.
    """

    adjacent: MaterialModel
    remainder: tuple[Layer, ...]
    terminal: MaterialModel

    def __post_init__(self):
        object.__setattr__(self, "remainder", tuple(self.remainder))

    @property
    def media(self) -> list[MaterialModel]:
        return [self.adjacent, *(l.material for l in self.remainder), self.terminal]


def kz(xi, krho, eps, mu):
    """z-component of the wavevector at imaginary frequency (1/m)."""
    return np.sqrt(np.square(krho) + eps * mu * np.square(np.divide(xi, C)))


def _interface(kza, kzb, pa, pb, krho2, wa, wb):
    """(pb kza - pa kzb) / (pb kza + pa kzb) without cancellation.

    ``w = eps mu xi^2/c^2``, so that ``kz^2 = krho^2 + w``.  The numerator is
    rewritten as ``(pb^2 kza^2 - pa^2 kzb^2) / (pb kza + pa kzb)``, which
    stays accurate for nearly index-matched media, where the direct
    difference of the two kz would lose most of its digits.
    """
    den = kza * pb + kzb * pa
    num = (pb * pb - pa * pa) * krho2 + (pb * pb * wa - pa * pa * wb)
    return num / (den * den)


def _static_order(model: MaterialModel) -> tuple[int, float]:
    # eps(i xi) ~ A xi^-k as xi -> 0
    if model.kind == "drude":
        if model.drude_damping > 0:
            return 1, model.plasma_frequency**2 / model.drude_damping
        return 2, model.plasma_frequency**2
    return 0, eval_permittivity(model, 0.0)


def static_fresnel(pol: Polarization, a: MaterialModel, b: MaterialModel) -> float:
    """xi -> 0 limit of R_ab.

    All kz equal krho there, so the coefficient depends only on the static
    mu (TE) or eps (TM).  Drude media enter through the limiting ratio of
    their divergent permittivities, which gives +1/-1 against a
    non-conductor.
    """
    if Polarization(pol) is Polarization.E:
        ma, mb = a.permeability, b.permeability
        return (mb - ma) / (mb + ma)
    ka, aa = _static_order(a)
    kb, ab = _static_order(b)
    if kb > ka:
        return 1.0
    if ka > kb:
        return -1.0
    return (ab - aa) / (ab + aa)


def fresnel(pol: Polarization, xi, krho, mat_a: MaterialModel, mat_b: MaterialModel):
    """Two-media coefficient R_ab; scalar or array in ``krho``."""
    pol = Polarization(pol)
    if xi == 0:
        r = static_fresnel(pol, mat_a, mat_b)
        return r if np.ndim(krho) == 0 else np.full(np.shape(krho), r)
    ea, eb = eval_permittivity(mat_a, xi), eval_permittivity(mat_b, xi)
    ma, mb = eval_permeability(mat_a), eval_permeability(mat_b)
    krho2 = np.square(krho)
    k0sq = (xi / C) ** 2
    wa, wb = ea * ma * k0sq, eb * mb * k0sq
    kza, kzb = np.sqrt(krho2 + wa), np.sqrt(krho2 + wb)
    if pol is Polarization.E:
        return _interface(kza, kzb, ma, mb, krho2, wa, wb)
    return _interface(kza, kzb, ea, eb, krho2, wa, wb)


def composition(r_ab, r_bc):
    """Combine two reflections through a vanishing middle layer (scalar or array)."""
    den = 1.0 + np.multiply(r_ab, r_bc)
    if np.any(den == 0):
        raise DegenerateCompositionError("1 + r_ab r_bc = 0")
    out = np.add(r_ab, r_bc) / den
    return float(out) if np.ndim(out) == 0 else out


class Evaluator:
    """Vectorised response of a set of media on a (xi, krho) node grid.

    ``xi`` has shape (P, 1) (one frequency per quadrature panel, or a
    scalar), ``krho2`` shape (P, Q).  In ``static`` mode (xi = 0) every kz
    is krho and interface coefficients are the static limits.
    """

    def __init__(self, xi, krho2, static: bool = False):
        self.xi = xi
        self.krho2 = krho2
        self.static = static
        self._cache: dict[MaterialModel, tuple] = {}
        self._krho = None

    def pin_kz(self, model: MaterialModel, kz_values):
        """Use exact precomputed kz for ``model`` (the quadrature layer)."""
        eps, mu, _, w = self._response(model)
        self._cache[model] = (eps, mu, kz_values, w)

    def _response(self, model):
        hit = self._cache.get(model)
        if hit is None:
            if self.static:
                if self._krho is None:
                    self._krho = np.sqrt(self.krho2)
                hit = (None, model.permeability, self._krho, 0.0)
            else:
                eps = eval_permittivity(model, self.xi)
                mu = model.permeability
                w = eps * mu * np.square(self.xi / C)
                hit = (eps, mu, np.sqrt(self.krho2 + w), w)
            self._cache[model] = hit
        return hit

    def kz(self, model):
        return self._response(model)[2]

    def fresnel(self, pol, a, b):
        if a == b:
            return 0.0
        if self.static:
            return static_fresnel(pol, a, b)
        ea, ma, ka, wa = self._response(a)
        eb, mb, kb, wb = self._response(b)
        if pol is Polarization.E:
            return _interface(ka, kb, ma, mb, self.krho2, wa, wb)
        return _interface(ka, kb, ea, eb, self.krho2, wa, wb)

    def side(self, pol, side: ReflectionSide, deriv: int | None = None):
        """Generalised reflection of ``side``.

        Recursion runs from the terminal backing inward, one Moebius update
        per layer.  With ``deriv = j`` (0-based into ``side.remainder``)
        also returns ``g`` and the layer-j decay factor ``E`` such that
        dR/dt_j = -2 kz_j g E.
        """
        media = side.media
        k = len(side.remainder)
        rho = self.fresnel(pol, media[k], media[k + 1])
        g = None
        e_deriv = None
        for j in range(k, 0, -1):
            layer = side.remainder[j - 1]
            f = self.fresnel(pol, media[j - 1], media[j])
            e = np.exp(-2.0 * self.kz(layer.material) * layer.thickness)
            re = rho * e
            den = 1.0 + f * re
            if deriv is not None:
                if j - 1 == deriv:
                    g = rho * (1.0 - f * f) / (den * den)
                    e_deriv = e
                elif j - 1 < deriv:
                    g = g * e * (1.0 - f * f) / (den * den)
            rho = (f + re) / den
        if deriv is not None:
            if g is None:
                raise IndexError(f"layer {deriv} not in side with {k} layers")
            return rho, g, e_deriv
        return rho


def generalized_reflection(pol: Polarization, xi, krho, side: ReflectionSide):
    """Reflection of a multilayer half-stack seen from ``side.adjacent``."""
    pol = Polarization(pol)
    krho2 = np.square(np.asarray(krho, dtype=float))
    ev = Evaluator(float(xi), krho2, static=(xi == 0))
    r = ev.side(pol, side)
    if np.ndim(krho) == 0:
        return float(np.asarray(r))
    return np.broadcast_to(r, krho2.shape).astype(float)
