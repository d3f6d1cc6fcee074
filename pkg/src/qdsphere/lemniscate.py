"""Lemniscates |r(z)| = c of a rational map r = p/q, seen as trajectories
of the differential -(r'/r)^2 dz^2."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, EmptyLevel
from .contour import marching_squares
from .polyalg import Polynomial
from .qdiff import critical_points, lemniscate_qd
from .tracer import TraceOptions, trace_horizontal

QR_IMAG_TOL = 1e-8
STREBEL_BUDGET_FACTOR = 10.0
CROSS_CHECK_POINTS = 5


@dataclass
class LemniscateReport:
    finite_critical_points: list
    double_poles: list          # (location, quadratic residue)
    critical_levels: list       # |r| at each finite critical point
    strebel_samples: list       # (sample point, closed flag)


def _abs_r(p: Polynomial, q: Polynomial, z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(p.eval_array(z) / q.eval_array(z))


def analyze_lemniscate(p: Polynomial, q: Polynomial, samples: int,
                       *, seed: int = 0) -> LemniscateReport:
    """Critical structure and random closure samples of -(r'/r)^2, r = p/q.

    Finite critical points are the zeros of the logarithmic derivative
    r'/r = sum of m_a/(z - a); every finite pole of the differential is a
    double pole whose quadratic residue must have negative real part.
    """
    qd = lemniscate_qd(p, q)
    finite_cps = [c.location for c in qd.zeros]

    # cross-validate: the numerator p'q - pq' reduced by pq vanishes there
    raw = p.derivative() * q + p * (q.derivative() * -1.0)
    for z in finite_cps:
        if abs(raw(z)) > 1e-6 * raw.magnitude_bound(z):
            raise ConvergenceFailure(
                f"critical point {z} fails the logarithmic-derivative check")

    double_poles = []
    for cp in critical_points(qd):
        if cp.signed_order >= 0:
            continue
        if cp.signed_order != -2:
            raise ConvergenceFailure(
                f"pole of order {cp.signed_order} in a lemniscate differential")
        qr = cp.quadratic_residue
        if qr.real >= 0.0 or abs(qr.imag) > QR_IMAG_TOL * (1.0 + abs(qr)):
            raise ConvergenceFailure(
                f"double pole at {cp.at} has quadratic residue {qr}, "
                "expected negative real")
        loc = None if cp.at.is_infinite else cp.at.value
        double_poles.append((loc, qr))

    levels = [float(abs(p(z) / q(z))) for z in finite_cps]

    opts = TraceOptions.for_qd(qd)
    opts.max_phi_length *= STREBEL_BUDGET_FACTOR
    x0, y0, x1, y1 = opts.window
    # sample inside the default window but trace in a wider one: a closed
    # lemniscate through an edge sample can bulge past the sampling box
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    hw, hh = 4.0 * (x1 - cx), 4.0 * (y1 - cy)
    opts.window = (cx - hw, cy - hh, cx + hw, cy + hh)
    rng = np.random.default_rng(seed)
    guards = [(c.location, qd.guard_radius(c.location))
              for c in qd.zeros + qd.poles]
    out = []
    while len(out) < samples:
        z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
        if any(abs(z - g) < 10 * r for g, r in guards):
            continue
        ray = trace_horizontal(qd, z, opts=opts)
        out.append((z, ray.termination.kind == "Closed"))
    return LemniscateReport(finite_cps, double_poles, levels, out)


def lemniscate_level_curve(p: Polynomial, q: Polynomial, c: float,
                           window, n: int, *,
                           cross_check: bool = True) -> list[np.ndarray]:
    """Polylines of |r| = c in the window, from an n x n marching-squares
    grid. When cross_check is set, trajectories of the lemniscate
    differential traced from a few contour points must stay near the
    extracted contour; the curves are the same object seen two ways."""
    if not c > 0.0:
        raise ValueError("level must be positive")
    x0, y0, x1, y1 = (float(v) for v in window)
    xs = np.linspace(x0, x1, int(n))
    ys = np.linspace(y0, y1, int(n))
    zx, zy = np.meshgrid(xs, ys)
    field = _abs_r(p, q, zx + 1j * zy)
    polylines = marching_squares(xs, ys, field, float(c))
    if not polylines:
        raise EmptyLevel(f"no |r| = {c} contour inside {window}")
    if cross_check:
        _cross_check(p, q, polylines, window, n)
    return polylines


def _cross_check(p, q, polylines, window, n):
    qd = lemniscate_qd(p, q)
    x0, y0, x1, y1 = window
    cell = math.hypot((x1 - x0) / max(n - 1, 1), (y1 - y0) / max(n - 1, 1))
    tol = max(1e-3 * qd.diameter(), 2.0 * cell)
    flat = np.concatenate(polylines)
    longest = max(polylines, key=len)
    idx = np.linspace(0, len(longest) - 2, CROSS_CHECK_POINTS).astype(int)
    opts = TraceOptions.for_qd(qd)
    opts.max_phi_length = min(opts.max_phi_length, 40.0)
    for i in idx:
        z0 = complex(longest[i])
        ray = trace_horizontal(qd, z0, opts=opts)
        take = np.linspace(0, len(ray.points) - 1, 24).astype(int)
        for w in np.asarray(ray.points)[take]:
            if np.abs(flat - w).min() > tol:
                raise ConvergenceFailure(
                    f"trajectory from {z0} strays {np.abs(flat - w).min():.3g} "
                    f"from the |r| = c contour (tol {tol:.3g})")
