"""Numerical trajectory tracing in the natural parameter.

A horizontal trajectory solves dz/dtau = orientation / w(z) where w is a
branch-continuous square root of phi; tau then advances phi-length at unit
speed and Im of the integral of w dz stays constant. The integrator is an
embedded Cash-Karp 4(5) pair with the branch threaded through every stage
evaluation, the step additionally clamped so a single step can neither jump
over a critical point nor wind phi by more than a fraction of a turn.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DriftExceeded, DirectionIndexError, PoleOnPath, StartTooClose
from .qdiff import (
    CriticalPoint,
    QuadraticDifferential,
    continue_sqrt,
    critical_directions,
    critical_points,
    principal_sqrt,
)

SNAP_FACTOR = 1e-6
SEED_FACTOR = 10.0           # trace_from_critical seeds at 10 * snap_radius
DEFAULT_RK_TOL = 1e-10
DEFAULT_MAX_STEPS = 10 ** 6
LENGTH_FACTOR = 100.0
CLOSURE_ANGLE_TOL = 1e-3
DRIFT_PER_100 = 1e-5

CLOSED = "Closed"
HIT_CRITICAL = "HitCritical"
ESCAPED_WINDOW = "EscapedWindow"
PHI_LENGTH_BUDGET = "PhiLengthBudget"
STEP_BUDGET = "StepBudget"

# Cash-Karp tableau
_CK_C = (0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8)
_CK_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
)
_CK_B5 = (37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771)
_CK_B4 = (2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass
class TraceOptions:
    max_phi_length: float
    window: tuple[float, float, float, float]
    snap_radius: float
    rk_tol: float = DEFAULT_RK_TOL
    max_steps: int = DEFAULT_MAX_STEPS

    @classmethod
    def for_qd(cls, qd: QuadraticDifferential, *, max_phi_length=None, window=None,
               snap_radius=None, rk_tol=None, max_steps=None) -> "TraceOptions":
        """Defaults derived from the finite critical set: budget 100 * diam,
        window = bounding box inflated 4x, snap 1e-6 * diam."""
        diam = qd.diameter()
        pos = qd.finite_critical_positions()
        if pos:
            xs = [p.real for p in pos]
            ys = [p.imag for p in pos]
            cx, cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
            hx = max(1.0, (max(xs) - min(xs)) / 2)
            hy = max(1.0, (max(ys) - min(ys)) / 2)
        else:
            cx = cy = 0.0
            hx = hy = 1.0
        win = (cx - 4 * hx, cy - 4 * hy, cx + 4 * hx, cy + 4 * hy)
        return cls(
            max_phi_length=LENGTH_FACTOR * diam if max_phi_length is None else max_phi_length,
            window=win if window is None else tuple(window),
            snap_radius=SNAP_FACTOR * diam if snap_radius is None else snap_radius,
            rk_tol=DEFAULT_RK_TOL if rk_tol is None else rk_tol,
            max_steps=DEFAULT_MAX_STEPS if max_steps is None else int(max_steps),
        )

    def replace(self, **kw) -> "TraceOptions":
        d = dict(max_phi_length=self.max_phi_length, window=self.window,
                 snap_radius=self.snap_radius, rk_tol=self.rk_tol, max_steps=self.max_steps)
        d.update(kw)
        return TraceOptions(**d)


@dataclass(frozen=True)
class Termination:
    kind: str
    cp_index: int | None = None
    incoming_angle: float | None = None


@dataclass
class TrajectoryRay:
    points: np.ndarray                # complex polyline, first point is the seed
    sqrt_values: np.ndarray           # branch-continuous sqrt(phi) at the points
    taus: np.ndarray                  # accumulated phi-length at each point
    phi_length: float
    imag_drift: float
    termination: Termination
    direction_seed: complex
    orientation: int
    work: dict = field(default_factory=dict)


class _Scene:
    """Per-trace cache of critical-point geometry."""

    __slots__ = ("positions", "orders", "guards", "pole_guard", "alphas", "index")

    def __init__(self, qd: QuadraticDifferential):
        cps = critical_points(qd)
        self.positions = []
        self.orders = []
        self.guards = []
        self.pole_guard = []
        self.alphas = []
        self.index = []
        for i, cp in enumerate(cps):
            if cp.at.is_infinite:
                continue
            z = cp.at.value
            self.positions.append(z)
            self.orders.append(cp.signed_order)
            g = qd.guard_radius(z)
            self.guards.append(g)
            self.pole_guard.append(g if cp.signed_order <= -2 else 0.0)
            # step clamp: small enough for accuracy and so arg(phi) moves < ~0.7 rad
            self.alphas.append(min(0.1, 0.7 / max(1, abs(cp.signed_order))))
            self.index.append(i)


def _max_step_z(scene: _Scene, z: complex) -> float:
    best = math.inf
    for p, a in zip(scene.positions, scene.alphas):
        d = abs(z - p) * a
        if d < best:
            best = d
    return best


def _nearest_cp(scene: _Scene, z: complex) -> tuple[int, float]:
    best, bd = -1, math.inf
    for k, p in enumerate(scene.positions):
        d = abs(z - p)
        if d < bd:
            best, bd = k, d
    return best, bd


def trace_horizontal(qd: QuadraticDifferential, z0: complex, orientation: int = 1,
                     opts: TraceOptions | None = None, *,
                     seed_sqrt: complex | None = None) -> TrajectoryRay:
    """Trace the horizontal trajectory through the regular point z0."""
    opts = opts or TraceOptions.for_qd(qd)
    return _trace(qd, complex(z0), int(orientation), opts, seed_sqrt)


def trace_vertical(qd: QuadraticDifferential, z0: complex, orientation: int = 1,
                   opts: TraceOptions | None = None) -> TrajectoryRay:
    """Vertical trajectories of phi are horizontal trajectories of -phi."""
    opts = opts or TraceOptions.for_qd(qd)
    return _trace(qd.negated(), complex(z0), int(orientation), opts, None)


def trace_from_critical(qd: QuadraticDifferential, cp: CriticalPoint,
                        direction_index: int, opts: TraceOptions | None = None) -> TrajectoryRay:
    """Launch the critical trajectory leaving cp along its k-th direction.

    Seeds at 10 * snap_radius from the point and picks the orientation that
    moves away from it.
    """
    opts = opts or TraceOptions.for_qd(qd)
    dirs = critical_directions(qd, cp)
    if not 0 <= direction_index < len(dirs):
        raise DirectionIndexError(
            f"direction {direction_index} out of range 0..{len(dirs) - 1}")
    u = dirs[direction_index]
    z0 = cp.at.value + SEED_FACTOR * opts.snap_radius * u
    w0 = principal_sqrt(qd.phi(z0))
    tangent = 1.0 / w0
    orientation = 1 if (tangent / u).real > 0 else -1
    ray = _trace(qd, z0, orientation, opts, w0, launch_from=cp)
    return ray


def _trace(qd, z0, orientation, opts, seed_sqrt, launch_from=None):
    scene = _Scene(qd)
    snap = opts.snap_radius
    x0, y0, x1, y1 = opts.window

    _k_home, d_home = _nearest_cp(scene, z0)
    if launch_from is None and d_home < snap:
        raise StartTooClose(f"{z0} is within snap radius of a critical point")

    num_desc = qd.num.coeffs[::-1]
    den_desc = qd.den.coeffs[::-1]

    def phival(z):
        a = 0j
        for c in num_desc:
            a = a * z + c
        b = 0j
        for c in den_desc:
            b = b * z + c
        return a / b

    def f(z, hint):
        w = continue_sqrt(phival(z), hint)
        return orientation / w, w

    w0 = seed_sqrt if seed_sqrt is not None else principal_sqrt(phival(z0))
    dir0 = (orientation / w0)
    dir0 /= abs(dir0)

    pts = [z0]
    sqs = [w0]
    taus = [0.0]
    z, w, tau = z0, w0, 0.0
    accepted = rejected = 0
    left_home = False
    termination = None

    h = min(0.01 * (1.0 + abs(z0)) * abs(w0),
            _max_step_z(scene, z0) * abs(w0) if scene.positions else math.inf,
            opts.max_phi_length)
    h = max(h, 1e-12)
    attempts_cap = 4 * opts.max_steps

    while termination is None:
        if accepted >= opts.max_steps or accepted + rejected >= attempts_cap:
            termination = Termination(STEP_BUDGET)
            break
        remaining = opts.max_phi_length - tau
        if remaining <= 1e-13 * max(1.0, opts.max_phi_length):
            termination = Termination(PHI_LENGTH_BUDGET)
            break
        h = min(h, remaining)
        if scene.positions:
            h = min(h, _max_step_z(scene, z) * abs(w))
        if h <= 1e-15 * max(1.0, tau):
            termination = Termination(STEP_BUDGET)
            break

        # Cash-Karp stages, branch hint chained through the stages
        ks = []
        hint = w
        ok = True
        for s in range(6):
            zs = z
            for j, a in enumerate(_CK_A[s]):
                zs += h * a * ks[j]
            try:
                k_s, hint = f(zs, hint)
            except ZeroDivisionError:
                ok = False
                break
            ks.append(k_s)
        if not ok:
            h *= 0.25
            rejected += 1
            continue
        z5 = z
        z4 = z
        for j in range(6):
            z5 += h * _CK_B5[j] * ks[j]
            z4 += h * _CK_B4[j] * ks[j]
        err = abs(z5 - z4)
        tol = opts.rk_tol * (1.0 + abs(z5))
        if err > tol:
            rejected += 1
            h *= max(0.2, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
            continue

        z_prev, w_prev, tau_prev = z, w, tau
        z = z5
        try:
            w = continue_sqrt(phival(z), hint)
        except ZeroDivisionError:
            w = hint
        tau = tau_prev + h
        accepted += 1
        pts.append(z)
        sqs.append(w)
        taus.append(tau)
        grow = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        h = h * grow

        # termination checks
        kc, dc = _nearest_cp(scene, z)
        if kc >= 0 and dc < snap:
            tangent = orientation / w
            ang = cmath.phase(tangent / abs(tangent))
            termination = Termination(HIT_CRITICAL, cp_index=scene.index[kc],
                                      incoming_angle=ang)
            break
        hit_pole = False
        for k, g in enumerate(scene.pole_guard):
            if g > 0.0 and abs(z - scene.positions[k]) < g:
                tangent = orientation / w
                ang = cmath.phase(tangent / abs(tangent))
                termination = Termination(HIT_CRITICAL, cp_index=scene.index[k],
                                          incoming_angle=ang)
                hit_pole = True
                break
        if hit_pole:
            break
        if not (x0 <= z.real <= x1 and y0 <= z.imag <= y1):
            termination = Termination(ESCAPED_WINDOW)
            break

        if not left_home:
            if abs(z - z0) > SEED_FACTOR * snap:
                left_home = True
        else:
            seg = z - z_prev
            d_seg = _point_segment_distance(z0, z_prev, z)
            if d_seg <= max(4.0 * snap, 0.35 * abs(seg)):
                hit = _closure_refine(f, z0, dir0, tau_prev, z_prev, w_prev, tau, snap)
                if hit is not None:
                    tau_star, z_star, w_star = hit
                    pts[-1] = z_star
                    sqs[-1] = w_star
                    taus[-1] = tau_star
                    tau = tau_star
                    termination = Termination(CLOSED)
                    break

    points = np.asarray(pts, dtype=complex)
    sqrt_values = np.asarray(sqs, dtype=complex)
    taus_arr = np.asarray(taus, dtype=float)
    ray = TrajectoryRay(
        points=points, sqrt_values=sqrt_values, taus=taus_arr,
        phi_length=float(tau), imag_drift=0.0, termination=termination,
        direction_seed=dir0, orientation=orientation,
        work={"accepted_steps": accepted, "rejected_steps": rejected},
    )
    ray.imag_drift = imag_drift_of(qd, ray)
    allow = DRIFT_PER_100 * max(1.0, ray.phi_length / 100.0) * max(1.0, opts.rk_tol / DEFAULT_RK_TOL)
    if ray.imag_drift > allow:
        raise DriftExceeded(
            f"imaginary drift {ray.imag_drift:.3e} exceeds {allow:.3e} "
            f"over phi-length {ray.phi_length:.3f}")
    return ray


def _point_segment_distance(p: complex, a: complex, b: complex) -> float:
    ab = b - a
    L2 = ab.real * ab.real + ab.imag * ab.imag
    if L2 == 0.0:
        return abs(p - a)
    t = ((p - a).real * ab.real + (p - a).imag * ab.imag) / L2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * ab))


def _closure_refine(f, z0, dir0, tau_a, z_a, w_a, tau_b, snap):
    """Locate the closest approach to z0 on [tau_a, tau_b] by bisecting the
    derivative of the squared distance; returns (tau*, z*, w*) if the pass
    is a genuine closure (position within snap, direction within tolerance)."""

    def integrate_to(tau_t):
        n = 16
        hh = (tau_t - tau_a) / n
        z, w = z_a, w_a
        if hh == 0.0:
            return z, w
        for _ in range(n):
            k1, w = f(z, w)
            k2, w = f(z + 0.5 * hh * k1, w)
            k3, w = f(z + 0.5 * hh * k2, w)
            k4, w = f(z + hh * k3, w)
            z = z + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return z, w

    def s(tau_t):
        z, w = integrate_to(tau_t)
        d, _ = f(z, w)
        return ((z - z0).real * d.real + (z - z0).imag * d.imag), z, w

    sa, _, _ = s(tau_a + 1e-15 * max(1.0, abs(tau_a)))
    sb, zb, wb = s(tau_b)
    if sa >= 0.0 or sb <= 0.0:
        # no interior stationary point: closest approach is an endpoint
        cand = [(abs(z_a - z0), tau_a, z_a, w_a), (abs(zb - z0), tau_b, zb, wb)]
        dist, tau_s, z_s, w_s = min(cand, key=lambda t: t[0])
    else:
        lo, hi = tau_a, tau_b
        z_s, w_s = z_a, w_a
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            sm, zm, wm = s(mid)
            if sm <= 0.0:
                lo = mid
            else:
                hi = mid
            z_s, w_s = zm, wm
            if hi - lo < 1e-13 * max(1.0, abs(tau_b)):
                break
        tau_s = 0.5 * (lo + hi)
        z_s, w_s = integrate_to(tau_s)
        dist = abs(z_s - z0)
    if dist >= snap:
        return None
    d, _ = f(z_s, w_s)
    u = d / abs(d)
    if abs(cmath.phase(u / dir0)) > CLOSURE_ANGLE_TOL:
        return None
    return tau_s, z_s, w_s


def phi_length_of(qd: QuadraticDifferential, points) -> float:
    """Composite 8-node Gauss-Legendre integral of sqrt|phi| |dz| along the
    polyline. Raises PoleOnPath if a quadrature node sits on a pole."""
    pts = np.asarray([complex(p) for p in points], dtype=complex)
    if len(pts) < 2:
        return 0.0
    den_scale = max(qd.den.scale(), 1e-300)
    total = 0.0
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if a == b:
            continue
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        zs = mid + half * _GL_NODES
        dv = qd.den.eval_array(zs)
        lim = 1e-13 * den_scale * np.maximum(1.0, np.abs(zs)) ** max(qd.den.degree, 0)
        if np.any(np.abs(dv) <= lim):
            raise PoleOnPath(f"quadrature node on segment {i} hits a pole")
        vals = np.sqrt(np.abs(qd.num.eval_array(zs) / dv))
        total += float(np.sum(vals * _GL_WEIGHTS)) * abs(half)
    return total


def imag_drift_of(qd: QuadraticDifferential, ray: TrajectoryRay) -> float:
    """Max over checkpoints of |Im integral of w dz| along the recorded
    polyline, with w branch-continuous; the correctness certificate."""
    pts = ray.points
    if len(pts) < 2:
        return 0.0
    num, den = qd.num, qd.den
    hint = complex(ray.sqrt_values[0])
    acc = 0.0
    worst = 0.0
    for i in range(len(pts) - 1):
        a, b = complex(pts[i]), complex(pts[i + 1])
        if a == b:
            continue
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        zs = mid + half * _GL_NODES
        vals = num.eval_array(zs) / den.eval_array(zs)
        seg = 0j
        for k in range(len(zs)):
            wk = continue_sqrt(complex(vals[k]), hint)
            hint = wk
            seg += _GL_WEIGHTS[k] * wk
        acc += (seg * half).imag
        worst = max(worst, abs(acc))
    return worst
