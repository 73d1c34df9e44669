"""Command-line front end.

    planarvdw pressure --config run.yaml --layer 1
    planarvdw sweep    --config run.yaml --csv sweep.csv
    planarvdw spectrum --config run.yaml --layer 1 --n-max 200 --csv terms.csv
    planarvdw material --config run.yaml --name silica --csv eps.csv
    planarvdw verify   --suite all --seed 20240601

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical
non-convergence, 3 verification failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .em_core import Stack
from .kernel import PressureResult, SeriesTruncationError
from .materials import eval_permeability, eval_permittivity, static_permittivity
from .pressure import pressure_in_layer
from .quadrature import QuadratureError
from .verify import DEFAULT_SEED, SUITES, reports_json, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

SWEEP_COLUMNS = ("z_m_m", "pressure_Pa", "n_terms", "truncation_error_Pa", "quadrature_error_Pa")
SPECTRUM_COLUMNS = ("n", "xi_rad_per_s", "contribution_Pa")
MATERIAL_COLUMNS = ("xi_rad_per_s", "epsilon", "mu")

log = logging.getLogger("planarvdw")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17e" % float(v)


@contextlib.contextmanager
def _csv_out(path: str | None):
    """CSV writer on ``path`` (stdout for None or '-'); I/O failures map to exit 1."""
    if path in (None, "-"):
        yield csv.writer(sys.stdout, lineterminator="\n")
        sys.stdout.flush()
        return
    try:
        fh = open(path, "w", newline="", encoding="ascii")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}", EXIT_CONFIG) from None
    with fh:
        yield csv.writer(fh, lineterminator="\n")


def _write(writer, header, rows):
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _layer_index(cfg: RunConfig, layer: int) -> int:
    n = len(cfg.stack.layers)
    if not 1 <= layer <= n:
        raise CliError(f"--layer {layer} out of range: the stack has {n} layer(s)", EXIT_CONFIG)
    return layer


def _compute(stack: Stack, layer: int, cfg: RunConfig, keep_terms=False, n_max=None) -> PressureResult:
    try:
        return pressure_in_layer(stack, layer, cfg.matsubara, cfg.quadrature, keep_terms, n_max)
    except SeriesTruncationError as exc:
        p = exc.partial
        raise CliError(
            f"Matsubara sum did not converge: {exc} (raise numerics.matsubara.max_terms or relax rel_tol;"
            f" partial value {p.value:.6e} Pa from {p.n_used} terms)",
            EXIT_NUMERIC,
        ) from None
    except QuadratureError as exc:
        raise CliError(
            f"wavevector integral did not converge: {exc} (estimate {exc.value!r}, error {exc.error!r});"
            " relax numerics.quadrature.rel_tol or raise max_depth",
            EXIT_NUMERIC,
        ) from None


def _result_row(z, res: PressureResult):
    return (z, res.value, res.n_used, res.truncation_error, res.quadrature_error)


# ---------------------------------------------------------------------------
# subcommands


def cmd_pressure(cfg: RunConfig, layer: int = 1, csv_path: str | None = None) -> int:
    layer = _layer_index(cfg, layer)
    res = _compute(cfg.stack, layer, cfg)
    z = cfg.stack.layers[layer - 1].thickness
    if csv_path is not None:
        with _csv_out(csv_path) as w:
            _write(w, SWEEP_COLUMNS, [_result_row(z, res)])
        return EXIT_OK
    print(f"layer              {layer}")
    print(f"thickness_m        {_fmt(z)}")
    print(f"pressure_Pa        {_fmt(res.value)}")
    print(f"n_terms            {res.n_used}")
    print(f"truncation_error   {_fmt(res.truncation_error)}")
    print(f"quadrature_error   {_fmt(res.quadrature_error)}")
    return EXIT_OK


def _sweep_point(args):
    stack, layer, cfg = args
    return _compute(stack, layer, cfg)


def cmd_sweep(cfg: RunConfig, csv_path: str | None = None, jobs: int | None = None) -> int:
    if cfg.sweep is None:
        raise CliError("config has no 'sweep' section", EXIT_CONFIG)
    sw = cfg.sweep
    zs = sw.thicknesses_m()
    stacks = []
    for z in zs:
        layers = list(cfg.stack.layers)
        layers[sw.layer - 1] = replace(layers[sw.layer - 1], thickness=z)
        stacks.append(replace(cfg.stack, layers=tuple(layers)))
    jobs = min(jobs or os.cpu_count() or 1, len(zs))
    with _csv_out(csv_path) as w:
        work = [(s, sw.layer, cfg) for s in stacks]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                results = list(pool.map(_sweep_point, work))
        else:
            results = [_sweep_point(a) for a in work]
        _write(w, SWEEP_COLUMNS, [_result_row(z, r) for z, r in zip(zs, results)])
    log.info("sweep: %d points on %d worker(s)", len(zs), jobs)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, layer: int = 1, n_max: int | None = None, csv_path: str | None = None) -> int:
    layer = _layer_index(cfg, layer)
    if n_max is not None and n_max < 0:
        raise CliError(f"--n-max must be >= 0, got {n_max}", EXIT_CONFIG)
    with _csv_out(csv_path) as w:
        res = _compute(cfg.stack, layer, cfg, keep_terms=True, n_max=n_max)
        _write(w, SPECTRUM_COLUMNS, res.per_n)
    return EXIT_OK


def material_grid(model, points=60, xi_min=1e11, xi_max=1e19):
    """(xi, eps, mu) rows; xi = 0 leads unless the model is a Drude conductor."""
    xi = np.logspace(np.log10(xi_min), np.log10(xi_max), points)
    eps = eval_permittivity(model, xi)
    rows = [(float(x), float(e), eval_permeability(model, float(x))) for x, e in zip(xi, eps)]
    if model.kind != "drude":
        rows.insert(0, (0.0, static_permittivity(model), eval_permeability(model, 0.0)))
    return rows


def cmd_material(cfg: RunConfig, name: str, points=60, xi_min=1e11, xi_max=1e19, csv_path=None) -> int:
    if name not in cfg.materials:
        raise CliError(f"unknown material '{name}' (defined: {', '.join(sorted(cfg.materials))})", EXIT_CONFIG)
    if points < 2 or not 0 < xi_min < xi_max:
        raise CliError("need --points >= 2 and 0 < --xi-min < --xi-max", EXIT_CONFIG)
    with _csv_out(csv_path) as w:
        _write(w, MATERIAL_COLUMNS, material_grid(cfg.materials[name], points, xi_min, xi_max))
    return EXIT_OK


def cmd_verify(suite="all", seed=DEFAULT_SEED, count=5, tolerance=None, report_path=None) -> int:
    names = SUITES if suite == "all" else (suite,)
    reports = run_suites(names, seed, count, tolerance)
    for rep in reports:
        print(rep.format())
    if report_path:
        try:
            with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(reports_json(reports) + "\n")
        except OSError as exc:
            raise CliError(f"cannot write {report_path}: {exc.strerror}", EXIT_CONFIG) from None
    failed = [(r.suite, c) for r in reports for c in r.cases if not c.passed]
    if failed:
        print(f"{len(failed)} case(s) failed:", file=sys.stderr)
        for suite_name, c in failed:
            print(f"  {suite_name}: {c.description} (err {c.relative_error:.3e} > tol {c.tolerance:.1e})", file=sys.stderr)
        return EXIT_VERIFY
    print("all suites passed")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planarvdw", description="Van der Waals pressure in planar multilayers.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", required=True, help="YAML run configuration")
        return sp

    sp = with_config(sub.add_parser("pressure", help="pressure inside one layer"))
    sp.add_argument("--layer", type=int, default=1, help="1-based layer index (default 1)")
    sp.add_argument("--csv", help="write a one-row CSV here instead of printing")

    sp = with_config(sub.add_parser("sweep", help="pressure against the thickness of the sweep layer"))
    sp.add_argument("--csv", help="output path (default stdout)")
    sp.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")

    sp = with_config(sub.add_parser("spectrum", help="per-Matsubara-term contributions"))
    sp.add_argument("--layer", type=int, default=1)
    sp.add_argument("--n-max", type=int, help="last Matsubara index (default: until converged)")
    sp.add_argument("--csv", help="output path (default stdout)")

    sp = with_config(sub.add_parser("material", help="tabulate eps(i xi) and mu of a material"))
    sp.add_argument("--name", required=True)
    sp.add_argument("--points", type=int, default=60)
    sp.add_argument("--xi-min", type=float, default=1e11)
    sp.add_argument("--xi-max", type=float, default=1e19)
    sp.add_argument("--csv", help="output path (default stdout)")

    sp = sub.add_parser("verify", help="run the numerical verification suites")
    sp.add_argument("--suite", default="all", choices=("all",) + SUITES)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--count", type=int, default=5, help="random cases per suite")
    sp.add_argument("--tolerance", type=float, help="override every case tolerance (0 forces failure)")
    sp.add_argument("--report", help="also write the report as JSON")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.suite, args.seed, args.count, args.tolerance, args.report)
        cfg = parse_config(args.config)
        if args.command == "pressure":
            return cmd_pressure(cfg, args.layer, args.csv)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.csv, args.jobs)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.layer, args.n_max, args.csv)
        return cmd_material(cfg, args.name, args.points, args.xi_min, args.xi_max, args.csv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
