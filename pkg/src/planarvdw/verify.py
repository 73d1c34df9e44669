"""Independent numerical oracles for the closed-form pressures.

Each ``check_*`` function returns a :class:`VerificationReport`.  Random
inputs come from a seeded ``numpy.random.Generator`` whose seed is stored
in the report, so a suite rerun with the same seed reproduces it exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .constants import C, HBAR, KB
from .em_core import POLARIZATIONS, Layer, Stack, composition, fresnel
from .kernel import (
    LayerNodes,
    MatsubaraSpec,
    ProbeGeometry,
    QuadratureSpec,
    gap_closure_derivative,
    layer_term_block,
    matsubara_series,
)
from .materials import VACUUM, MaterialModel, OscillatorTerm, eval_permittivity
from .pressure import (
    free_energy_lr,
    pressure_in_layer,
    pressure_lr,
    pressure_lr_dlp,
    pressure_lv,
    pressure_vv,
)
from .quadrature import integrate_rows

DEFAULT_SEED = 20240601
SUITES = ("fd", "gap", "dlp", "hamaker", "idealmetal", "reduction")

TIGHT_QUAD = QuadratureSpec(rel_tol=1e-12)


@dataclass
class Case:
    description: str
    expected: float
    actual: float
    relative_error: float
    tolerance: float
    passed: bool


@dataclass
class VerificationReport:
    suite: str
    seed: int | None = None
    cases: list[Case] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.cases)

    def add(self, description: str, expected: float, actual: float, tolerance: float, absolute: bool = False):
        err = abs(actual - expected)
        if not absolute:
            scale = max(abs(expected), abs(actual))
            err = err / scale if scale > 0 else 0.0
        self.cases.append(Case(description, float(expected), float(actual), float(err), tolerance, bool(err <= tolerance)))
        return self.cases[-1]

    def extend(self, other: "VerificationReport"):
        self.cases.extend(other.cases)
        return self

    def to_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "overall": self.overall, "cases": [asdict(c) for c in self.cases]}

    def format(self) -> str:
        lines = [f"== {self.suite} (seed {self.seed}) : {'PASS' if self.overall else 'FAIL'}"]
        for c in self.cases:
            flag = "ok  " if c.passed else "FAIL"
            lines.append(
                f"  [{flag}] {c.description}: expected {c.expected:.12e} actual {c.actual:.12e} "
                f"err {c.relative_error:.3e} tol {c.tolerance:.1e}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# random media


def random_dielectric(rng: np.random.Generator, magnetic: bool = False, dissipative: bool | None = None) -> MaterialModel:
    """Oscillator dielectric with static eps - 1 in [0.5, 10] and resonances in [1e15, 1e17] rad/s."""
    total = math.exp(rng.uniform(math.log(0.5), math.log(10.0)))
    n_osc = int(rng.integers(1, 3))
    split = rng.dirichlet(np.ones(n_osc)) if n_osc > 1 else np.ones(1)
    if dissipative is None:
        dissipative = bool(rng.random() < 0.5)
    terms = []
    for share in split:
        w0 = math.exp(rng.uniform(math.log(1e15), math.log(1e17)))
        g = w0 * rng.uniform(0.0, 0.1) if dissipative else 0.0
        terms.append(OscillatorTerm(total * float(share), w0, g))
    mu = float(rng.uniform(1.0, 3.0)) if magnetic else 1.0
    return MaterialModel.lorentz(terms, permeability=mu)


def random_temperature(rng) -> float:
    return float(rng.uniform(100.0, 600.0))


def random_gap(rng, lo=1e-9, hi=1e-6) -> float:
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _fixed_terms(fns: Sequence[Callable[[MatsubaraSpec], object]], mats: MatsubaraSpec):
    """Run several series with a common number of Matsubara terms."""
    results = [fn(mats) for fn in fns]
    for _ in range(5):
        n = max(r.n_used for r in results)
        if all(r.n_used == n for r in results):
            return results
        spec = MatsubaraSpec(mats.temperature, mats.rel_tol, n, mats.max_terms)
        results = [fn(spec) for fn in fns]
    raise RuntimeError("could not align Matsubara truncation")


# ---------------------------------------------------------------------------
# energy <-> pressure


def check_finite_difference(
    left: MaterialModel,
    film: MaterialModel,
    right: MaterialModel,
    z_m: float,
    h_rel: float = 1e-4,
    temperature: float = 300.0,
    tolerance: float = 1e-6,
    quad: QuadratureSpec = TIGHT_QUAD,
    report: VerificationReport | None = None,
) -> VerificationReport:
    """Central difference of the free energy against the pressure.

    All three series are evaluated with the same number of Matsubara terms,
    so the comparison is term-by-term consistent.
    """
    if not (z_m > 0 and 0 < h_rel < 0.1):
        raise ValueError("need z_m > 0 and 0 < h_rel < 0.1")
    report = report or VerificationReport("fd")
    mats = MatsubaraSpec(temperature)
    h = h_rel * z_m
    p, fp, fm = _fixed_terms(
        [
            lambda s: pressure_lr(left, film, right, z_m, s, quad, keep_terms=False),
            lambda s: free_energy_lr(left, film, right, z_m + h, s, quad),
            lambda s: free_energy_lr(left, film, right, z_m - h, s, quad),
        ],
        mats,
    )
    fd = (fp.value - fm.value) / (2.0 * h)
    report.add(f"dU/dz vs p_LR, z={z_m:.3e} m, T={temperature:.1f} K, h_rel={h_rel:g}", p.value, fd, tolerance)
    return report


def fd_convergence_order(left, film, right, z_m, temperature=300.0, h_coarse=0.05) -> float:
    """Observed order of the central-difference error between h and h/2."""
    mats = MatsubaraSpec(temperature)

    def fd(hr):
        h = hr * z_m
        fp, fm = _fixed_terms(
            [
                lambda s: free_energy_lr(left, film, right, z_m + h, s, TIGHT_QUAD),
                lambda s: free_energy_lr(left, film, right, z_m - h, s, TIGHT_QUAD),
            ],
            mats,
        )
        return (fp.value - fm.value) / (2 * h), fp.n_used

    d1, n = fd(h_coarse)
    d2, _ = fd(h_coarse / 2)
    p = pressure_lr(left, film, right, z_m, MatsubaraSpec(temperature, min_terms=n), TIGHT_QUAD).value
    return math.log2(abs(d1 - p) / abs(d2 - p))


# ---------------------------------------------------------------------------
# gap-closure derivative against a two-level numerical oracle


def _side_secant(ev, pol, side, j: int, h_abs: float):
    """Generalised reflection of ``side`` with layer ``j`` at t + h and t - h.

    Returns ``(rho_plus, rho_minus, rho_plus - rho_minus)``.  The difference
    is carried through the Moebius recursion as an exact divided difference,
    ``M(a) - M(b) = (1 - f^2) e (a - b) / ((1 + f a e)(1 + f b e))``, so it
    keeps full relative precision however small it is.
    """
    media = side.media
    k = len(side.remainder)
    rho_p = rho_m = ev.fresnel(pol, media[k], media[k + 1])
    d_rho = 0.0
    for i in range(k, 0, -1):
        layer = side.remainder[i - 1]
        f = ev.fresnel(pol, media[i - 1], media[i])
        two_kz = 2.0 * ev.kz(layer.material)
        if i - 1 == j:
            e = np.exp(-two_kz * layer.thickness)
            e_p, e_m = e * np.exp(-two_kz * h_abs), e * np.exp(two_kz * h_abs)
            den_p, den_m = 1.0 + f * rho_p * e_p, 1.0 + f * rho_m * e_m
            d_rho = rho_p * (1.0 - f * f) * (-2.0 * e * np.sinh(two_kz * h_abs)) / (den_p * den_m)
        else:
            e_p = e_m = np.exp(-two_kz * layer.thickness)
            den_p, den_m = 1.0 + f * rho_p * e_p, 1.0 + f * rho_m * e_m
            d_rho = (1.0 - f * f) * e_p * d_rho / (den_p * den_m)
        rho_p, rho_m = (f + rho_p * e_p) / den_p, (f + rho_m * e_m) / den_m
    return rho_p, rho_m, d_rho


def stress_derivative_terms(geom: ProbeGeometry, r: int, h_rel: float, quad: QuadratureSpec):
    """Per-frequency dT_zz/dz_r / k_BT at probe gap ``geom.z_v`` by central differences.

    The secant [T(z_r + h) - T(z_r - h)] / 2h is formed pointwise under the
    krho integral, and the difference itself is propagated exactly (see
    :func:`_side_secant`).  Subtracting the two stress values directly would
    leave rounding noise of order 1e-12 of the full, z_v^-3 divergent stress
    in every node, which near z_v = 0 swamps the e^{-2 kz_r z_r}-suppressed
    difference at large krho.
    """
    side_name, j = geom.locate(r)
    zr = geom.layer(r).thickness
    h = h_rel * zr
    own = geom.left_side if side_name == "left" else geom.right_side
    other = geom.right_side if side_name == "left" else geom.left_side
    probe, zv = geom.probe, geom.z_v

    def integrand(nodes: LayerNodes, ev):
        kzv = ev.kz(probe)
        decay = np.exp(-2.0 * kzv * zv)
        acc = 0.0
        for pol in POLARIZATIONS:
            rho_p, rho_m, d_rho = _side_secant(ev, pol, own, j, h)
            r_other = ev.side(pol, other) * decay
            # x/(1-x) at x+ minus at x-, with x = r_other * rho
            acc = acc + r_other * d_rho / ((1.0 - r_other * rho_p) * (1.0 - r_other * rho_m))
        return np.broadcast_to(kzv * acc / (2.0 * h) * nodes.u, nodes.s.shape)

    others = [l.thickness for s in (geom.left_side, geom.right_side) for l in s.remainder]
    others.remove(zr)
    others.append(zv)
    return layer_term_block(integrand, geom.layer(r).material, zr, 1.0 / (4.0 * math.pi * zr**2), quad, others)


def numeric_gap_integral(
    geom: ProbeGeometry,
    r: int,
    n_terms: int,
    temperature: float,
    z_grid: Sequence[float],
    h_rel: float = 1e-4,
    quad: QuadratureSpec = QuadratureSpec(rel_tol=1e-9),
    outer_rel_tol: float = 1e-8,
    scale: float | None = None,
) -> float:
    """-int_0^inf dT_zz/dz_r dz_v by adaptive quadrature in log z_v.

    The integrand is finite as z_v -> 0, so [0, z_min] is added from a
    straight line through D(z_min/2) and D(z_min); beyond z_max D decays as a power law whose exponent is
    estimated from the last grid points.

    Differences at high Matsubara index are far below the result; pass
    ``scale`` (the expected magnitude of the result, Pa) to give the inner
    quadrature an absolute floor of 1e-10 of it.
    """
    if scale:
        z_r = geom.layer(r).thickness
        per_row = 4.0 * math.pi * z_r**2 / (KB * temperature)
        quad = QuadratureSpec(quad.rel_tol, 1e-10 * abs(scale) / z_r * per_row, quad.max_depth, quad.tail_cutoff)
    grid = np.sort(np.asarray(z_grid, dtype=float))
    mats = MatsubaraSpec(temperature, min_terms=n_terms, max_terms=max(n_terms, 1))

    def deriv(zv: float) -> float:
        terms = stress_derivative_terms(geom.with_gap(zv), r, h_rel, quad)
        return matsubara_series(terms, mats, keep_terms=False, n_max=n_terms - 1).value

    def f(w, rows):
        out = np.empty_like(w)
        for idx in np.ndindex(w.shape):
            zv = math.exp(w[idx])
            out[idx] = zv * deriv(zv)
        return out

    logs = np.log(grid)
    body, _ = integrate_rows(f, 1, logs, rel_tol=outer_rel_tol, abs_tol=1e-300, max_depth=20)
    zmin, zmax = grid[0], grid[-1]
    d_min, d_half = deriv(zmin), deriv(zmin / 2)
    slope = (d_min - d_half) / (zmin / 2)
    head = (d_min - slope * zmin) * zmin + 0.5 * slope * zmin**2
    d_hi, d_lo = deriv(zmax), deriv(zmax / 1.5)
    alpha = math.log(abs(d_lo / d_hi)) / math.log(1.5) if d_hi != 0 and d_lo != 0 else math.inf
    tail = zmax * d_hi / (alpha - 1.0) if alpha > 1 else 0.0
    return -(head + float(body[0]) + tail)


def check_gap_derivative(
    geom: ProbeGeometry,
    r: int,
    z_grid: Sequence[float] | None = None,
    temperature: float = 300.0,
    tolerance: float = 1e-5,
    delta: float = 1e-12,
    delta_tolerance: float = 1e-9,
    report: VerificationReport | None = None,
) -> VerificationReport:
    """Closed-form gap-closure derivative vs finite-difference dT/dz_r integrated over z_v."""
    if z_grid is None:
        z_grid = np.logspace(-11, -5, 25)
    report = report or VerificationReport("gap")
    mats = MatsubaraSpec(temperature)
    closed = gap_closure_derivative(geom, r, mats, TIGHT_QUAD, keep_terms=False)
    oracle = numeric_gap_integral(geom, r, closed.n_used, temperature, z_grid, scale=closed.value)
    z_r = geom.layer(r).thickness
    report.add(f"closed form vs numeric z_v integral, layer {r}, z_r={z_r:.3e} m", closed.value, oracle, tolerance)
    fixed = MatsubaraSpec(temperature, min_terms=closed.n_used)
    reg = gap_closure_derivative(geom, r, fixed, TIGHT_QUAD, delta=delta, keep_terms=False)
    if reg.n_used == closed.n_used:
        report.add(f"delta={delta:g} m regularised vs delta=0, layer {r}", closed.value, reg.value, delta_tolerance)
    else:
        raise RuntimeError("regularised series truncated at a different term")
    return report


def four_layer_geometry(left, film, right, z_m) -> ProbeGeometry:
    """L | vacuum probe | film | R, the film being layer 1."""
    return ProbeGeometry.split(Stack(left, (Layer(film, z_m),), right), 0)


# ---------------------------------------------------------------------------
# formulation equivalence


def check_dlp_equivalence(
    seed: int = DEFAULT_SEED,
    count: int = 10,
    tolerance: float = 1e-9,
    stacks: Iterable[tuple] | None = None,
) -> VerificationReport:
    """krho-form pressure against the dimensionless q-form, per stack."""
    if count < 1:
        raise ValueError("count must be >= 1")
    report = VerificationReport("dlp", seed)
    for desc, (left, film, right, z, temp) in _dlp_cases(seed, count) if stacks is None else stacks:
        mats = MatsubaraSpec(temp)
        a = pressure_lr(left, film, right, z, mats, keep_terms=False)
        b = pressure_lr_dlp(left, film, right, z, mats, keep_terms=False)
        report.add(desc, a.value, b.value, tolerance)
    return report


def _dlp_cases(seed, count):
    rng = np.random.default_rng(seed)
    d = MaterialModel.lorentz([(2.0, 1e16, 0.0)])
    yield "vacuum film between identical dielectrics", (d, VACUUM, d, 20e-9, 300.0)
    yield "dissipative film between unlike media", (
        MaterialModel.lorentz([(3.0, 5e15, 3e14)]),
        MaterialModel.lorentz([(1.0, 2e16, 1e15)]),
        MaterialModel.lorentz([(6.0, 8e15, 0.0)]),
        15e-9,
        300.0,
    )
    yield "magnetic half-space (mu=2)", (
        MaterialModel.lorentz([(2.5, 1e16, 0.0)], permeability=2.0), VACUUM, d, 30e-9, 300.0,
    )
    for i in range(count):
        magnetic = i % 3 == 0
        left = random_dielectric(rng, magnetic=magnetic)
        film = VACUUM if i % 4 == 1 else random_dielectric(rng, magnetic=i % 5 == 0)
        right = random_dielectric(rng)
        z, temp = random_gap(rng), random_temperature(rng)
        yield f"random stack {i} (z={z:.3e} m, T={temp:.0f} K)", (left, film, right, z, temp)


# ---------------------------------------------------------------------------
# physical limits


def li3(x: float) -> float:
    if abs(x) < 1e-6:
        return x + x * x / 8.0 + x**3 / 27.0
    return float(mpmath.polylog(3, x))


def hamaker_sum(eps_model: MaterialModel, temperature: float = 300.0, rel_tol: float = 1e-13, max_terms: int = 10**7) -> float:
    """A = (3 k_B T / 2) sum'_n Li3(Delta_n^2), Delta_n = (eps - 1)/(eps + 1), vacuum gap."""
    kt = KB * temperature
    xi1 = 2 * math.pi * kt / HBAR
    total = 0.0
    for n in range(max_terms):
        eps = eval_permittivity(eps_model, n * xi1, static=True)
        delta = 1.0 if math.isinf(eps) else (eps - 1.0) / (eps + 1.0)
        term = li3(delta * delta) * (0.5 if n == 0 else 1.0)
        total += term
        if n > 10 and term <= rel_tol * total:
            # n^-4 tail
            total += term * n / 3.0
            return 1.5 * kt * total
    raise ArithmeticError("Hamaker sum does not converge (eps must tend to 1 at high frequency)")


def check_hamaker_limit(
    eps_model: MaterialModel,
    z_small: float = 5e-10,
    temperature: float = 300.0,
    tolerance: float = 0.02,
    report: VerificationReport | None = None,
) -> VerificationReport:
    """Nonretarded limit 6 pi z^3 p(z) -> A for a vacuum gap between identical half-spaces."""
    report = report or VerificationReport("hamaker")
    if eps_model.kind == "constant" and eps_model.static_offset > 0:
        raise ValueError("constant permittivity != 1 has no finite Hamaker sum")
    a = hamaker_sum(eps_model, temperature)
    p = pressure_lr(eps_model, VACUUM, eps_model, z_small, MatsubaraSpec(temperature), keep_terms=False)
    report.add(f"6 pi z^3 p vs Hamaker sum, z={z_small:.2e} m", a, 6 * math.pi * z_small**3 * p.value, tolerance)
    return report


def ideal_metal_pressure(z: float) -> float:
    return math.pi**2 * HBAR * C / (240.0 * z**4)


def check_ideal_metal(
    z: float = 1e-8,
    temperature: float = 300.0,
    epsilon: float = 1e8,
    tolerance: float = 0.02,
    report: VerificationReport | None = None,
) -> VerificationReport:
    report = report or VerificationReport("idealmetal")
    metal = MaterialModel.constant(epsilon)
    p = pressure_lr(metal, VACUUM, metal, z, MatsubaraSpec(temperature), keep_terms=False)
    report.add(
        f"|p| vs pi^2 hbar c/(240 z^4), eps={epsilon:g}, z={z:.2e} m, T={temperature:g} K",
        ideal_metal_pressure(z), abs(p.value), tolerance,
    )
    return report


# ---------------------------------------------------------------------------
# reduction chain


def check_reduction_chain(seed: int = DEFAULT_SEED, count: int = 10, tolerance: float = 1e-10) -> VerificationReport:
    """p_VV, p_LV and the N = 1 layer pressure as special cases of p_LR."""
    if count < 1:
        raise ValueError("count must be >= 1")
    report = VerificationReport("reduction", seed)
    rng = np.random.default_rng(seed)
    for i in range(count):
        left = random_dielectric(rng, magnetic=i % 4 == 3)
        film = VACUUM if i == 0 else random_dielectric(rng, magnetic=i % 5 == 4)
        right = random_dielectric(rng)
        z, temp = random_gap(rng), random_temperature(rng)
        mats = MatsubaraSpec(temp)
        tag = f"stack {i} (z={z:.3e} m, T={temp:.0f} K)"
        lr_vv = pressure_lr(VACUUM, film, VACUUM, z, mats, keep_terms=False).value
        report.add(f"p_VV == p_LR(v,m,v), {tag}", lr_vv, pressure_vv(film, z, mats, keep_terms=False).value, tolerance)
        lr_lv = pressure_lr(left, film, VACUUM, z, mats, keep_terms=False).value
        report.add(f"p_LV == p_LR(L,m,v), {tag}", lr_lv, pressure_lv(left, film, z, mats, keep_terms=False).value, tolerance)
        lr = pressure_lr(left, film, right, z, mats, keep_terms=False).value
        layer = pressure_in_layer(Stack(left, (Layer(film, z),), right), 1, mats, keep_terms=False).value
        report.add(f"N=1 layer pressure == p_LR, {tag}", lr, layer, tolerance)
    report.extend(check_composition(seed, tolerance=1e-12))
    return report


def check_composition(seed: int = DEFAULT_SEED, grid: int = 100, n_materials: int = 3, tolerance: float = 1e-12) -> VerificationReport:
    """(R_mv + R_vL)/(1 + R_mv R_vL) == R_mL over a (xi, krho) grid.

    Errors are absolute: |R| <= 1 everywhere, while the TM coefficient
    changes sign inside the grid, where a relative error is meaningless.
    """
    report = VerificationReport("composition", seed)
    rng = np.random.default_rng(seed + 1)
    xi = np.logspace(12, 18, grid)[:, None]
    krho = np.logspace(5, 10, grid)[None, :]
    for i in range(n_materials):
        m = random_dielectric(rng, magnetic=bool(i % 2))
        left = random_dielectric(rng, magnetic=True)
        for pol in POLARIZATIONS:
            worst = 0.0
            for row in range(grid):
                x = float(xi[row, 0])
                lhs = composition(fresnel(pol, x, krho, m, VACUUM), fresnel(pol, x, krho, VACUUM, left))
                rhs = fresnel(pol, x, krho, m, left)
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            report.add(f"composition identity, material set {i}, pol {pol.value}, {grid}x{grid} grid", 0.0, worst, tolerance, absolute=True)
    return report


# ---------------------------------------------------------------------------


def run_suite(name: str, seed: int = DEFAULT_SEED, count: int = 5) -> VerificationReport:
    rng = np.random.default_rng(seed)
    if name == "fd":
        report = VerificationReport("fd", seed)
        check_finite_difference(VACUUM, VACUUM, VACUUM, 10e-9, report=report)
        for _ in range(count):
            l, m, rgt = random_dielectric(rng), random_dielectric(rng), random_dielectric(rng)
            check_finite_difference(l, m, rgt, random_gap(rng), temperature=random_temperature(rng), report=report)
        return report
    if name == "gap":
        report = VerificationReport("gap", seed)
        for _ in range(max(1, count // 5)):
            l, m, rgt = random_dielectric(rng), random_dielectric(rng), random_dielectric(rng)
            z = random_gap(rng, 5e-9, 1e-7)
            check_gap_derivative(four_layer_geometry(l, m, rgt, z), 1, report=report)
        return report
    if name == "dlp":
        return check_dlp_equivalence(seed, count)
    if name == "hamaker":
        report = VerificationReport("hamaker", seed)
        check_hamaker_limit(MaterialModel.lorentz([(2.0, 1e16, 0.0)]), report=report)
        check_hamaker_limit(MaterialModel.lorentz([(2.0, 1e16, 0.0)]), z_small=1e-10, tolerance=0.005, report=report)
        return report
    if name == "idealmetal":
        report = VerificationReport("idealmetal", seed)
        check_ideal_metal(report=report)
        return report
    if name == "reduction":
        return check_reduction_chain(seed, count)
    raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")


def run_suites(names: Sequence[str], seed: int = DEFAULT_SEED, count: int = 5, tolerance: float | None = None) -> list[VerificationReport]:
    reports = [run_suite(n, seed, count) for n in names]
    if tolerance is not None:
        for rep in reports:
            for c in rep.cases:
                c.tolerance = tolerance
                c.passed = c.relative_error <= tolerance
    return reports


def reports_json(reports: Sequence[VerificationReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)
