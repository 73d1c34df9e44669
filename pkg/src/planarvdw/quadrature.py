"""Batched adaptive Gauss-Kronrod (10/21) quadrature.

Integrates many related integrands (one per *row*) at once.  Every round
evaluates all unconverged panels of all rows in a single vectorised call,
so the per-call Python overhead is shared across a whole block of
Matsubara frequencies.  Refinement decisions for a row depend only on that
row's own panels, which keeps each row's result independent of how rows
are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["QuadratureError", "integrate_rows", "gk21"]

# QUADPACK qk21 abscissae/weights on [-1, 1] (non-negative half).
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077923229802590, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # ascending, 21 points
KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS = np.zeros(21)
GAUSS[1:10:2] = _WG
GAUSS[-2:-11:-2] = _WG


class QuadratureError(ArithmeticError):
    """Adaptive subdivision hit ``max_depth`` before meeting the tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


def gk21(f: Callable, a: float, b: float) -> tuple[float, float]:
    """Single-panel Kronrod estimate and |K21 - G10| error of ``f`` on [a, b]."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    y = f(mid + half * NODES)
    k = half * float(KRONROD @ y)
    g = half * float(GAUSS @ y)
    return k, abs(k - g)


@dataclass
class _Panels:
    a: np.ndarray
    b: np.ndarray
    row: np.ndarray
    depth: np.ndarray


def integrate_rows(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_rows: int,
    breakpoints,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-300,
    max_depth: int = 60,
    max_panels: int = 5000,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``n_rows`` functions over the common interval ``breakpoints[0]..[-1]``.

    ``f(x, rows)`` receives ``x`` of shape (P, 21) and ``rows`` of shape
    (P,) and returns values shaped like ``x``.  A panel is accepted when its
    error estimate is below its length-share of
    ``max(abs_tol, rel_tol * |row total|)``.

    Returns ``(values, errors)``, each of shape (n_rows,).  Rows that need
    more than ``max_depth`` bisections, or more than ``max_panels`` panels,
    raise :class:`QuadratureError`.
    """
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must be strictly increasing with at least two entries")
    span = bp[-1] - bp[0]
    npan = bp.size - 1
    act = _Panels(
        a=np.tile(bp[:-1], n_rows),
        b=np.tile(bp[1:], n_rows),
        row=np.repeat(np.arange(n_rows), npan),
        depth=np.zeros(n_rows * npan, dtype=int),
    )
    done_a, done_row, done_val, done_err = [], [], [], []
    # running totals of accepted panels, per row
    acc_val = np.zeros(n_rows)
    acc_err = np.zeros(n_rows)
    failed = np.zeros(n_rows, dtype=bool)
    done_count = np.zeros(n_rows, dtype=int)

    while act.a.size:
        mid = 0.5 * (act.a + act.b)
        half = 0.5 * (act.b - act.a)
        x = mid[:, None] + half[:, None] * NODES
        y = f(x, act.row)
        kv = half * (y @ KRONROD)
        gv = half * (y @ GAUSS)
        err = np.abs(kv - gv)
        bad = ~np.isfinite(kv)
        if np.any(bad):
            rows = np.unique(act.row[bad])
            raise QuadratureError(f"non-finite integrand in rows {rows.tolist()}")

        est = acc_val + np.bincount(act.row, weights=kv, minlength=n_rows)
        tol = np.maximum(abs_tol, rel_tol * np.abs(est))
        ok = err <= tol[act.row] * (2.0 * half) / span
        split = ~ok & (act.depth < max_depth)
        give_up = ~ok & ~split
        count = np.bincount(act.row[split], minlength=n_rows) * 2 + done_count
        over = count > max_panels
        if np.any(over):
            give_up |= split & over[act.row]
            split &= ~over[act.row]
        if np.any(give_up):
            failed[act.row[give_up]] = True
        keep = ok | give_up

        done_a.append(act.a[keep])
        done_row.append(act.row[keep])
        done_val.append(kv[keep])
        done_err.append(err[keep])
        done_count += np.bincount(act.row[keep], minlength=n_rows)
        acc_val += np.bincount(act.row[keep], weights=kv[keep], minlength=n_rows)
        acc_err += np.bincount(act.row[keep], weights=err[keep], minlength=n_rows)

        s_a, s_b, s_m = act.a[split], act.b[split], mid[split]
        s_row, s_d = act.row[split], act.depth[split] + 1
        act = _Panels(
            a=np.concatenate([s_a, s_m]),
            b=np.concatenate([s_m, s_b]),
            row=np.concatenate([s_row, s_row]),
            depth=np.concatenate([s_d, s_d]),
        )

    a = np.concatenate(done_a)
    row = np.concatenate(done_row)
    val = np.concatenate(done_val)
    errs = np.concatenate(done_err)
    order = np.lexsort((a, row))
    row, val, errs = row[order], val[order], errs[order]
    bounds = np.searchsorted(row, np.arange(n_rows + 1))
    values = np.array([math.fsum(val[bounds[i]:bounds[i + 1]]) for i in range(n_rows)])
    errors = np.array([math.fsum(errs[bounds[i]:bounds[i + 1]]) for i in range(n_rows)])
    if np.any(failed):
        rows = np.flatnonzero(failed)
        raise QuadratureError(
            f"no convergence within {max_depth} bisections / {max_panels} panels in rows {rows.tolist()}",
            value=values,
            error=errors,
        )
    return values, errors
