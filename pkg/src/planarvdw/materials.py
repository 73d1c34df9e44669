"""Dielectric response on the positive imaginary frequency axis.

Every quantity of the Lifshitz formalism is evaluated at imaginary frequency
``i*xi``, where causal response functions are real and monotonically
decreasing.  The models here are the usual oscillator parameterisations
written directly in ``xi``:

    lorentz:  eps(i xi) = 1 + offset + sum_j C_j / (1 + (xi/w_j)^2 + g_j xi / w_j^2)
    drude:    eps(i xi) = 1 + wp^2 / (xi (xi + gamma))   (plus optional offset/oscillators)
    constant: eps(i xi) = 1 + offset
    vacuum:   eps = mu = 1

Permeability is frequency independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "KINDS",
    "OscillatorTerm",
    "MaterialModel",
    "StaticDivergenceError",
    "VACUUM",
    "eval_permittivity",
    "eval_permeability",
    "static_permittivity",
]

KINDS = ("constant", "lorentz", "drude", "vacuum")


class StaticDivergenceError(ValueError):
    """Raised when a Drude permittivity is requested at xi = 0."""


@dataclass(frozen=True)
class OscillatorTerm:
    """One damped oscillator: strength C, resonance w0 (rad/s), damping g (rad/s)."""

    strength: float
    resonance: float
    damping: float = 0.0

    def __post_init__(self):
        if not (self.strength >= 0 and math.isfinite(self.strength)):
            raise ValueError(f"oscillator strength must be finite and >= 0, got {self.strength}")
        if not (self.resonance > 0 and math.isfinite(self.resonance)):
            raise ValueError(f"oscillator resonance must be finite and > 0, got {self.resonance}")
        if not (self.damping >= 0 and math.isfinite(self.damping)):
            raise ValueError(f"oscillator damping must be finite and >= 0, got {self.damping}")


@dataclass(frozen=True)
class MaterialModel:
    """Permittivity/permeability model for one medium.

    Use the classmethod constructors rather than filling fields by hand;
    ``__post_init__`` rejects field combinations that do not belong to
    ``kind``.
    """

    kind: str = "vacuum"
    static_offset: float = 0.0
    oscillators: tuple[OscillatorTerm, ...] = ()
    plasma_frequency: float = 0.0
    drude_damping: float = 0.0
    permeability: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown material kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        for value, label in (
            (self.static_offset, "static_offset"),
            (self.plasma_frequency, "plasma_frequency"),
            (self.drude_damping, "drude_damping"),
        ):
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{label} must be finite and >= 0, got {value}")
        if not (self.permeability > 0 and math.isfinite(self.permeability)):
            raise ValueError(f"permeability must be finite and > 0, got {self.permeability}")
        if self.kind == "vacuum":
            if self.static_offset or self.oscillators or self.plasma_frequency or self.permeability != 1.0:
                raise ValueError("vacuum takes no parameters")
        if self.kind == "constant" and (self.oscillators or self.plasma_frequency):
            raise ValueError("constant material takes only static_offset and permeability")
        if self.kind == "lorentz" and self.plasma_frequency:
            raise ValueError("plasma_frequency is only valid for kind 'drude'")
        if self.kind == "drude" and not self.plasma_frequency > 0:
            raise ValueError("drude material needs plasma_frequency > 0")

    @classmethod
    def vacuum(cls) -> "MaterialModel":
        return cls("vacuum", name="vacuum")

    @classmethod
    def constant(cls, epsilon: float, permeability: float = 1.0, name: str = "") -> "MaterialModel":
        if not epsilon >= 1:
            raise ValueError(f"constant permittivity must be >= 1, got {epsilon}")
        return cls("constant", static_offset=epsilon - 1.0, permeability=permeability, name=name)

    @classmethod
    def lorentz(
        cls,
        oscillators: Sequence[OscillatorTerm | tuple[float, float] | tuple[float, float, float]],
        static_offset: float = 0.0,
        permeability: float = 1.0,
        name: str = "",
    ) -> "MaterialModel":
        terms = tuple(o if isinstance(o, OscillatorTerm) else OscillatorTerm(*o) for o in oscillators)
        return cls("lorentz", static_offset, terms, permeability=permeability, name=name)

    @classmethod
    def drude(
        cls,
        plasma_frequency: float,
        damping: float = 0.0,
        oscillators: Sequence[OscillatorTerm] = (),
        static_offset: float = 0.0,
        permeability: float = 1.0,
        name: str = "",
    ) -> "MaterialModel":
        return cls(
            "drude",
            static_offset,
            tuple(oscillators),
            plasma_frequency=plasma_frequency,
            drude_damping=damping,
            permeability=permeability,
            name=name,
        )

    @property
    def is_vacuum(self) -> bool:
        return self.kind == "vacuum" or (
            self.static_offset == 0 and not self.oscillators and self.plasma_frequency == 0 and self.permeability == 1
        )


VACUUM = MaterialModel.vacuum()


def eval_permittivity(model: MaterialModel, xi, static: bool = False):
    """Relative permittivity eps(i*xi).

    ``xi`` may be a scalar or an array (rad/s, >= 0).  A Drude model at
    ``xi == 0`` raises :class:`StaticDivergenceError` unless ``static=True``,
    in which case ``inf`` is returned there.
    """
    scalar = np.ndim(xi) == 0
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise ValueError("imaginary frequency must be >= 0")
    if model.kind == "vacuum":
        eps = np.ones_like(xi)
    else:
        eps = np.full_like(xi, 1.0 + model.static_offset)
        for osc in model.oscillators:
            w = osc.resonance
            eps = eps + osc.strength / (1.0 + (xi / w) ** 2 + osc.damping * xi / (w * w))
        if model.kind == "drude":
            zero = xi == 0
            if np.any(zero) and not static:
                raise StaticDivergenceError("Drude permittivity diverges at xi = 0")
            with np.errstate(divide="ignore"):
                eps = eps + model.plasma_frequency**2 / (xi * (xi + model.drude_damping))
    return float(eps) if scalar else eps


def eval_permeability(model: MaterialModel, xi=0.0):
    """Relative permeability mu(i*xi); constant in xi."""
    if np.ndim(xi) == 0:
        return float(model.permeability)
    return np.full(np.shape(xi), float(model.permeability))


def static_permittivity(model: MaterialModel) -> float:
    """eps(0), ``inf`` for Drude media."""
    return eval_permittivity(model, 0.0, static=True)
