"""Matsubara-summed stress tensor in a vacuum probe layer and its integrals.

All layer integrals share one form.  For a layer of thickness ``z`` and
medium (eps, mu), substitute ``u = 2 kz z``; with ``kz dkz = krho dkrho``

    int_0^inf F(krho) kz krho dkrho = 1/(8 z^3) int_{u0}^inf F u^2 du,
    u0 = 2 xi sqrt(eps mu) z / c.

The integration runs over ``s = u - u0`` in ``[0, tail_cutoff]`` so that
``krho^2 = s (s + 2 u0) / (4 z^2)`` is formed without cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .constants import C, HBAR, KB
from .em_core import POLARIZATIONS, Evaluator, Layer, ReflectionSide, Stack
from .materials import VACUUM, MaterialModel, eval_permittivity
from .quadrature import QuadratureError, integrate_rows

__all__ = [
    "MatsubaraSpec",
    "QuadratureSpec",
    "ProbeGeometry",
    "SeriesResult",
    "PressureResult",
    "SeriesTruncationError",
    "QuadratureError",
    "matsubara_frequency",
    "matsubara_series",
    "kernel_Kn",
    "stress_tensor_avg",
    "work_to_close_gap",
    "gap_closure_derivative",
]


@dataclass(frozen=True)
class MatsubaraSpec:
    temperature: float = 300.0
    rel_tol: float = 1e-9
    min_terms: int = 10
    max_terms: int = 100_000

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if not 0 < self.rel_tol < 1:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.min_terms < 1 or self.max_terms < self.min_terms:
            raise ValueError("need 1 <= min_terms <= max_terms")


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-300
    max_depth: int = 60
    tail_cutoff: float = 60.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.tail_cutoff > 0):
            raise ValueError("quadrature tolerances and tail_cutoff must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class SeriesResult:
    """Primed Matsubara sum with diagnostics.

    ``per_n`` holds ``(n, xi_n, contribution)`` with the n = 0 entry already
    half-weighted, so ``value == sum(c for *_, c in per_n)``.
    """

    value: float
    n_used: int
    truncation_error: float
    quadrature_error: float
    per_n: list[tuple[int, float, float]] | None = None


PressureResult = SeriesResult


class SeriesTruncationError(ArithmeticError):
    def __init__(self, message, partial: SeriesResult | None = None):
        super().__init__(message)
        self.partial = partial


def matsubara_frequency(n, temperature: float):
    """xi_n = 2 pi n k_B T / hbar (rad/s)."""
    step = 2.0 * math.pi * KB * temperature / HBAR
    return step * np.asarray(n, dtype=float) if np.ndim(n) else step * n


TermBlock = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def matsubara_series(
    terms: TermBlock,
    mats: MatsubaraSpec,
    keep_terms: bool = True,
    n_max: int | None = None,
) -> SeriesResult:
    """Primed sum ``k_B T sum' f(xi_n)`` of a vectorised term function.

    ``terms(xi)`` returns ``(values, errors)`` for an array of frequencies.
    Terms are accumulated in ascending ``n`` with Neumaier compensation; the
    series stops once three consecutive terms are below
    ``rel_tol * |partial sum|`` (and at least ``min_terms`` were used), or
    at ``n_max`` if given.  Blocks are evaluated ahead, but only terms up to
    the stopping index contribute.
    """
    kt = KB * mats.temperature
    total = comp = 0.0
    qerr = 0.0
    per_n: list[tuple[int, float, float]] = []
    small_run = 0
    prev = None
    last = 0.0
    start = 0
    block = 16
    limit = mats.max_terms if n_max is None else min(mats.max_terms, n_max + 1)
    while start < limit:
        stop = min(start + block, limit)
        ns = np.arange(start, stop)
        xi = matsubara_frequency(ns, mats.temperature)
        vals, errs = terms(xi)
        for i, n in enumerate(ns):
            w = 0.5 * kt if n == 0 else kt
            t = w * float(vals[i])
            prev, last = last, t
            s = total + t
            comp += (total - s) + t if abs(total) >= abs(t) else (t - s) + total
            total = s
            qerr += w * float(errs[i])
            if keep_terms:
                per_n.append((int(n), float(xi[i]), t))
            psum = total + comp
            small_run = small_run + 1 if abs(t) <= mats.rel_tol * abs(psum) else 0
            used = int(n) + 1
            if n_max is not None and n == n_max:
                return _finish(total + comp, used, prev, last, qerr, per_n, keep_terms)
            if small_run >= 3 and used >= mats.min_terms:
                return _finish(total + comp, used, prev, last, qerr, per_n, keep_terms)
        start = stop
        block = min(block * 2, 4096)
    partial = _finish(total + comp, start, prev, last, qerr, per_n, keep_terms)
    if n_max is not None:
        return partial
    raise SeriesTruncationError(
        f"Matsubara series not converged after {start} terms "
        f"(last term {last:.3e}, partial sum {partial.value:.6e})",
        partial,
    )


def _finish(value, used, prev, last, qerr, per_n, keep):
    tail = 0.0
    if last != 0.0:
        q = abs(last / prev) if prev else 0.0
        tail = abs(last) * q / (1.0 - q) if q < 1.0 else abs(last) * used
    return SeriesResult(float(value), used, tail, qerr, per_n if keep else None)


# ---------------------------------------------------------------------------
# shared layer-integral machinery


def _breakpoints(z: float, other_thicknesses: Sequence[float], cutoff: float) -> np.ndarray:
    pts = {0.0, cutoff}
    pts.update(p for p in (0.5, 2.0, 6.0, 15.0, 30.0) if p < cutoff)
    for t in other_thicknesses:
        # decay of exp(-2 kz_j t) sets an s-scale of z / t
        for k in (0.25, 1.0, 4.0):
            p = k * z / t
            if 0 < p < 0.5 * cutoff:
                pts.add(p)
    return np.array(sorted(pts))


@dataclass
class LayerNodes:
    """Quadrature nodes expressed for a layer of thickness ``z``."""

    s: np.ndarray
    u: np.ndarray
    krho2: np.ndarray
    kz: np.ndarray
    xi: np.ndarray | float
    static: bool


def layer_nodes(s, xi_rows, medium: MaterialModel, z: float, static: bool) -> LayerNodes:
    if static:
        u = s
        krho2 = (s / (2.0 * z)) ** 2
        return LayerNodes(s, u, krho2, s / (2.0 * z), 0.0, True)
    xi = xi_rows[:, None]
    n_index = np.sqrt(eval_permittivity(medium, xi) * medium.permeability)
    u0 = 2.0 * xi * n_index * z / C
    u = s + u0
    krho2 = s * (s + 2.0 * u0) / (4.0 * z * z)
    return LayerNodes(s, u, krho2, u / (2.0 * z), xi, False)


def evaluator_for(nodes: LayerNodes, medium: MaterialModel) -> Evaluator:
    ev = Evaluator(nodes.xi, nodes.krho2, static=nodes.static)
    ev.pin_kz(medium, nodes.kz)
    return ev


def layer_term_block(
    integrand: Callable[[LayerNodes, Evaluator], np.ndarray],
    medium: MaterialModel,
    z: float,
    prefactor: float,
    quad: QuadratureSpec,
    other_thicknesses: Sequence[float] = (),
) -> TermBlock:
    """Vectorised per-frequency integral ``prefactor * int integrand ds``."""
    bps = _breakpoints(z, other_thicknesses, quad.tail_cutoff)

    def run(xi_rows: np.ndarray, static: bool):
        def f(s, rows):
            nodes = layer_nodes(s, xi_rows[rows], medium, z, static)
            return integrand(nodes, evaluator_for(nodes, medium))

        return integrate_rows(f, len(xi_rows), bps, quad.rel_tol, quad.abs_tol, quad.max_depth)

    def terms(xi: np.ndarray):
        xi = np.asarray(xi, dtype=float)
        vals = np.empty(xi.size)
        errs = np.empty(xi.size)
        zero = xi == 0
        if np.any(zero):
            v, e = run(xi[zero], True)
            vals[zero], errs[zero] = v, e
        if np.any(~zero):
            v, e = run(xi[~zero], False)
            vals[~zero], errs[~zero] = v, e
        return prefactor * vals, prefactor * errs

    return terms


def stress_integrand(product: Callable[[Evaluator, object], np.ndarray]):
    """u^2 sum_p x e^-u / (1 - x e^-u), x = product(ev, pol)."""

    def integrand(nodes: LayerNodes, ev: Evaluator):
        e = np.exp(-nodes.u)
        acc = 0.0
        for pol in POLARIZATIONS:
            xe = product(ev, pol) * e
            acc = acc + xe / (1.0 - xe)
        return np.broadcast_to(acc * nodes.u**2, nodes.s.shape)

    return integrand


def log_integrand(product: Callable[[Evaluator, object], np.ndarray]):
    """u sum_p ln(1 - x e^-u)."""

    def integrand(nodes: LayerNodes, ev: Evaluator):
        e = np.exp(-nodes.u)
        acc = 0.0
        for pol in POLARIZATIONS:
            acc = acc + np.log1p(-product(ev, pol) * e)
        return np.broadcast_to(acc * nodes.u, nodes.s.shape)

    return integrand


def _thicknesses(*sides: ReflectionSide) -> list[float]:
    return [l.thickness for s in sides for l in s.remainder]


# ---------------------------------------------------------------------------
# probe geometry


@dataclass(frozen=True)
class ProbeGeometry:
    """Two half-stacks facing each other across a probe gap of width ``z_v``.

    Layers are numbered as in the parent stack: the left side holds layers
    1..k (``left_side.remainder`` lists them from k down to 1), the right
    side holds k+1..N.
    """

    left_side: ReflectionSide
    right_side: ReflectionSide
    z_v: float = 0.0

    def __post_init__(self):
        if not self.z_v >= 0:
            raise ValueError("probe gap z_v must be >= 0")
        if self.left_side.adjacent != self.right_side.adjacent:
            raise ValueError("both sides must face the same probe medium")

    @classmethod
    def split(cls, stack: Stack, k: int, z_v: float = 0.0, probe: MaterialModel = VACUUM) -> "ProbeGeometry":
        """Insert a probe layer between layers k and k+1 of ``stack``."""
        if not 0 <= k <= len(stack.layers):
            raise IndexError(f"split position {k} out of range 0..{len(stack.layers)}")
        left = ReflectionSide(probe, tuple(reversed(stack.layers[:k])), stack.left)
        right = ReflectionSide(probe, stack.layers[k:], stack.right)
        return cls(left, right, z_v)

    @property
    def probe(self) -> MaterialModel:
        return self.left_side.adjacent

    @property
    def k(self) -> int:
        return len(self.left_side.remainder)

    @property
    def n_layers(self) -> int:
        return self.k + len(self.right_side.remainder)

    def with_gap(self, z_v: float) -> "ProbeGeometry":
        return replace(self, z_v=z_v)

    def locate(self, r: int) -> tuple[str, int]:
        """Map stack layer index r (1-based) to (side, index into remainder)."""
        if not 1 <= r <= self.n_layers:
            raise IndexError(f"layer index {r} out of range 1..{self.n_layers}")
        if r <= self.k:
            return "left", self.k - r
        return "right", r - self.k - 1

    def layer(self, r: int) -> Layer:
        side, j = self.locate(r)
        return (self.left_side if side == "left" else self.right_side).remainder[j]

    def with_thickness(self, r: int, thickness: float) -> "ProbeGeometry":
        side, j = self.locate(r)
        s = self.left_side if side == "left" else self.right_side
        layers = list(s.remainder)
        layers[j] = Layer(layers[j].material, thickness)
        s = replace(s, remainder=tuple(layers))
        return replace(self, **{f"{side}_side": s})


def _probe_product(geom: ProbeGeometry):
    return lambda ev, pol: ev.side(pol, geom.left_side) * ev.side(pol, geom.right_side)


def _stress_terms(geom: ProbeGeometry, quad: QuadratureSpec) -> TermBlock:
    if not geom.z_v > 0:
        raise ValueError("stress tensor needs z_v > 0 (it diverges as z_v^-3)")
    z = geom.z_v
    return layer_term_block(
        stress_integrand(_probe_product(geom)),
        geom.probe,
        z,
        1.0 / (8.0 * math.pi * z**3),
        quad,
        _thicknesses(geom.left_side, geom.right_side),
    )


def kernel_Kn(geom: ProbeGeometry, n: int, temperature: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """K_n (1/m^3) such that T_zz^avg = k_B T sum'_n K_n."""
    xi = matsubara_frequency(np.array([n]), temperature)
    vals, _ = _stress_terms(geom, quad)(xi)
    return float(vals[0])


def stress_tensor_avg(
    geom: ProbeGeometry,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = True,
) -> SeriesResult:
    """zz stress tensor (Pa) in the probe gap of width ``geom.z_v``."""
    return matsubara_series(_stress_terms(geom, quad), mats, keep_terms)


def work_to_close_gap(
    geom: ProbeGeometry,
    delta: float,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    keep_terms: bool = False,
) -> SeriesResult:
    """Work (J/m^2) to bring the two half-stacks from infinity to gap ``delta``.

    Logarithmic form ``k_B T/(2 pi) sum' int krho sum_p ln(1 - R_L R_R e^{-2 kz delta}) dkrho``;
    its derivative with respect to ``delta`` is the stress tensor at ``delta``.
    Diverges as delta^-2, so ``delta`` must be positive.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    terms = layer_term_block(
        log_integrand(_probe_product(geom)),
        geom.probe,
        delta,
        1.0 / (8.0 * math.pi * delta**2),
        quad,
        _thicknesses(geom.left_side, geom.right_side),
    )
    return matsubara_series(terms, mats, keep_terms)


def gap_closure_terms(geom: ProbeGeometry, r: int, quad: QuadratureSpec, delta: float = 0.0) -> TermBlock:
    side_name, j = geom.locate(r)
    layer = geom.layer(r)
    own = geom.left_side if side_name == "left" else geom.right_side
    other = geom.right_side if side_name == "left" else geom.left_side
    probe = geom.probe
    zr = layer.thickness

    def integrand(nodes: LayerNodes, ev: Evaluator):
        if delta > 0:
            ed = np.exp(-2.0 * ev.kz(probe) * delta)
        else:
            ed = 1.0
        acc = 0.0
        for pol in POLARIZATIONS:
            rho, g, e_r = ev.side(pol, own, deriv=j)
            r_other = ev.side(pol, other)
            acc = acc + r_other * g * e_r * ed / (1.0 - rho * r_other * ed)
        return np.broadcast_to(acc * nodes.u**2, nodes.s.shape)

    others = [t for t in _thicknesses(geom.left_side, geom.right_side)]
    others.remove(zr)
    return layer_term_block(integrand, layer.material, zr, 1.0 / (8.0 * math.pi * zr**3), quad, others)


def gap_closure_derivative(
    geom: ProbeGeometry,
    r: int,
    mats: MatsubaraSpec = MatsubaraSpec(),
    quad: QuadratureSpec = QuadratureSpec(),
    delta: float = 0.0,
    keep_terms: bool = True,
) -> SeriesResult:
    """int_inf^0 dT_zz^avg/dz_r dz_v (Pa), closed form.

    With d(R_L R_R)/dz_r = -2 kz_r (N/D) e^{-2 kz_r z_r} the z_v integral is
    done analytically, leaving
    ``k_B T/pi sum' int krho kz_r sum_p (N/D) e^{-2 kz_r z_r} / (1 - R_L R_R) dkrho``.
    The e^{-2 kz_r z_r} factor keeps this finite with the probe closed
    (``delta = 0``); ``delta > 0`` gives the regularised form with an extra
    e^{-2 kz_v delta} in numerator and denominator.
    """
    return matsubara_series(gap_closure_terms(geom, r, quad, delta), mats, keep_terms)
