"""Level function Im of the integral of sqrt(p)/q from the first paired zero.

The integrand is branch-continued along explicit polyline paths that detour
around pole guards and around the ends of short-trajectory cuts. Around a
cut end the sweep direction is forced (the one not crossing the cut), so
cut detours never change the branch; around poles the two probe paths take
opposite sides, and a residue with nonzero real part then shows up as a
path disagreement in the imaginary part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyLevel, GuardViolation, PathBlocked, ResidueObstruction, WrongProvenance
from .graph import Pairing
from .qdiff import QuadraticDifferential, continue_sqrt, principal_sqrt
from .tracer import _GL_NODES, _GL_WEIGHTS

GAP_REL_TOL = 1e-6
OBSTACLE_FACTOR = 2.0
MAX_DETOURS = 16
ARC_STEP = math.pi / 6


@dataclass
class LevelField:
    base_point: complex
    cuts: list
    grid: np.ndarray              # row-major, rows along y
    window: tuple
    undefined_mask: np.ndarray
    n: int


@dataclass
class VerificationReport:
    passed_i: bool
    passed_ii: bool
    passed_iii: bool
    details: dict


def _pq_of(qd: QuadraticDifferential):
    if qd.provenance is None or "p_eff" not in qd.provenance.polys:
        raise WrongProvenance("level function requires a p/q^2 style construction")
    return qd.provenance.polys["p_eff"], qd.provenance.polys["q_eff"]


def _base_point(qd: QuadraticDifferential, pairing) -> complex:
    if isinstance(pairing, Pairing) and pairing.pairs:
        return complex(qd.zeros[pairing.pairs[0][0]].location)
    if qd.zeros:
        return complex(qd.zeros[0].location)
    # anchor at unit distance from the pole centroid, deterministic
    ps = [c.location for c in qd.poles]
    ctr = sum(ps) / len(ps) if ps else 0j
    return ctr + 1.0


def _cuts_of(qd: QuadraticDifferential, pairing) -> list[np.ndarray]:
    """Detected short-trajectory polylines, extended to the exact zeros."""
    if not isinstance(pairing, Pairing):
        return []
    cuts = []
    for (a, b), poly in zip(pairing.pairs, pairing.polylines):
        za, zb = qd.zeros[a].location, qd.zeros[b].location
        head, tail = complex(poly[0]), complex(poly[-1])
        if abs(head - za) + abs(tail - zb) > abs(head - zb) + abs(tail - za):
            za, zb = zb, za
        cuts.append(np.concatenate(([za], poly, [zb])))
    return cuts


def _obstacles(qd: QuadraticDifferential) -> list[tuple[complex, float]]:
    return [(c.location, OBSTACLE_FACTOR * qd.guard_radius(c.location))
            for c in qd.poles]


def _route_obstacles(qd: QuadraticDifferential) -> list[tuple[complex, float, str]]:
    """Routing obstacles: pole neighborhoods rounded on the probe's side,
    plus tiny disks at zeros rounded always counterclockwise. Paths through
    a zero would make the branch continuation degenerate, but the detour
    sweep there must not depend on the probe side or the two probes would
    differ by a branch flip instead of a residue loop."""
    obs = [(c, r, "side") for c, r in _obstacles(qd)]
    rz = 1e-5 * max(1.0, qd.diameter())
    for c in qd.zeros:
        obs.append((c.location, rz, "ccw"))
    return obs


def _cross(o, a, b):
    return (a.real - o.real) * (b.imag - o.imag) - (a.imag - o.imag) * (b.real - o.real)


def _proper_crossing(a, b, c, d) -> bool:
    d1 = _cross(c, d, a)
    d2 = _cross(c, d, b)
    d3 = _cross(a, b, c)
    d4 = _cross(a, b, d)
    return d1 * d2 < 0.0 and d3 * d4 < 0.0


def _segment_circle_hit(a: complex, b: complex, c: complex, r: float):
    """Smallest t in (0,1) where segment a->b enters the disk |z-c|<r."""
    d = b - a
    L2 = d.real * d.real + d.imag * d.imag
    if L2 == 0.0:
        return None
    t = max(0.0, min(1.0, ((c - a).real * d.real + (c - a).imag * d.imag) / L2))
    if abs(a + t * d - c) >= r:
        return None
    # quadratic |a + t d - c|^2 = r^2
    f = a - c
    A = L2
    B = 2.0 * (f.real * d.real + f.imag * d.imag)
    C = f.real * f.real + f.imag * f.imag - r * r
    disc = B * B - 4 * A * C
    if disc <= 0.0:
        return None
    s = math.sqrt(disc)
    t1 = (-B - s) / (2 * A)
    t2 = (-B + s) / (2 * A)
    if t2 <= 0.0 or t1 >= 1.0:
        return None
    return max(t1, 0.0), min(t2, 1.0)


def _arc(c: complex, r: float, th1: float, th2: float, ccw: bool) -> list[complex]:
    if ccw:
        while th2 <= th1:
            th2 += 2 * math.pi
        sweep = th2 - th1
    else:
        while th2 >= th1:
            th2 -= 2 * math.pi
        sweep = th1 - th2
    n = max(2, int(math.ceil(sweep / ARC_STEP)))
    sign = 1.0 if ccw else -1.0
    return [c + r * cmath.exp(1j * (th1 + sign * sweep * k / n)) for k in range(n + 1)]


def _route(start: complex, end: complex, obstacles, cuts, side: int) -> list[complex]:
    """Polyline from start to end avoiding pole disks and cut crossings.

    Pole disks are rounded on the side given by `side`; cut ends are rounded
    with the unique sweep that does not cross the cut itself.
    """
    path = [start, end]
    for _ in range(MAX_DETOURS):
        fixed = False
        for i in range(len(path) - 1):
            a, b = path[i], path[i + 1]
            # earliest obstacle-disk entry on this segment
            best = None
            for c, r, mode in obstacles:
                if abs(a - c) <= r or abs(b - c) <= r:
                    continue  # endpoints tangent-close: treat as passable
                hit = _segment_circle_hit(a, b, c, r)
                if hit is not None and (best is None or hit[0] < best[0]):
                    best = (hit[0], hit[1], c, r, mode)
            if best is not None:
                t1, t2, c, r, mode = best
                p1 = a + t1 * (b - a)
                p2 = a + t2 * (b - a)
                ccw = side > 0 if mode == "side" else True
                pts = _arc(c, r, cmath.phase(p1 - c), cmath.phase(p2 - c), ccw=ccw)
                path[i + 1:i + 1] = pts
                fixed = True
                break
            # cut crossings: round the nearest end of the slit
            hit_cut = None
            for poly in cuts:
                for j in range(len(poly) - 1):
                    c0, c1 = complex(poly[j]), complex(poly[j + 1])
                    if _proper_crossing(a, b, c0, c1):
                        num_t = _cross(c0, c1, a)
                        den_t = _cross(c0, c1, a) - _cross(c0, c1, b)
                        t = num_t / den_t if den_t != 0 else 0.5
                        x = a + t * (b - a)
                        if hit_cut is None or t < hit_cut[0]:
                            hit_cut = (t, x, poly)
            if hit_cut is not None:
                _t, x, poly = hit_cut
                e0, e1 = complex(poly[0]), complex(poly[-1])
                e, nb = (e0, complex(poly[1])) if abs(x - e0) <= abs(x - e1) \
                    else (e1, complex(poly[-2]))
                r = max(abs(x - e) * 1.5, 1e-12)
                # round the slit end outside any obstacle disk sitting on it
                for c, ro, _mode in obstacles:
                    if abs(c - e) < ro:
                        r = max(r, 1.25 * ro)
                th1 = cmath.phase(a - e)
                th2 = cmath.phase(b - e)
                thc = cmath.phase(nb - e)   # direction the slit leaves e
                ccw_pts = _arc(e, r, th1, th2, True)
                cw_pts = _arc(e, r, th1, th2, False)
                # pick the sweep whose angular range avoids the slit direction
                def hits_slit(ccw):
                    lo, hi = (th1, th2) if ccw else (th2, th1)
                    span = (hi - lo) % (2 * math.pi)
                    rel = (thc - lo) % (2 * math.pi)
                    return rel <= span
                pts = cw_pts if hits_slit(True) else ccw_pts
                path[i + 1:i + 1] = pts
                fixed = True
                break
        if not fixed:
            return path
    raise PathBlocked(f"no route from {start} to {end} after {MAX_DETOURS} detours")


def _panel(p, q, a, b, hint, singular, depth):
    """One adaptively bisected quadrature panel; splits until the panel is
    short against its distance to the nearest pole or zero."""
    mid = 0.5 * (a + b)
    d = min((abs(mid - s) for s in singular), default=math.inf)
    if abs(b - a) <= 0.4 * d or depth >= 26:
        half = 0.5 * (b - a)
        zs = mid + half * _GL_NODES
        pv = p.eval_array(zs)
        qv = q.eval_array(zs)
        seg = 0j
        for k in range(len(zs)):
            v = continue_sqrt(complex(pv[k]), hint)
            hint = v
            seg += _GL_WEIGHTS[k] * v / complex(qv[k])
        return seg * half, hint
    s1, hint = _panel(p, q, a, mid, hint, singular, depth + 1)
    s2, hint = _panel(p, q, mid, b, hint, singular, depth + 1)
    return s1 + s2, hint


def _integrate(p, q, path: list[complex], seed_hint: complex | None, singular):
    """Gauss-Legendre integral of branch-continued sqrt(p)/q along path.
    Returns (integral, final branch hint)."""
    hint = seed_hint
    total = 0j
    for i in range(len(path) - 1):
        a, b = path[i], path[i + 1]
        if a == b:
            continue
        seg, hint = _panel(p, q, a, b, hint, singular, 0)
        total += seg
    return total, hint


def _seed_probe(qd, base: complex, cuts) -> complex:
    """Fixed point near the base where the branch is seeded. Leaves the base
    in the direction farthest from any cut emanating from it."""
    r0 = 1e-3 * max(1.0, qd.diameter())
    away = []
    for cut in cuts:
        for end, nxt in ((0, 1), (-1, -2)):
            if abs(complex(cut[end]) - base) < 0.5 * r0:
                away.append(cmath.phase(complex(cut[nxt]) - base))
    if not away:
        return base + r0
    best, best_score = 0.0, -1.0
    for k in range(16):
        th = math.pi * k / 8.0
        score = min(abs((th - a + math.pi) % (2 * math.pi) - math.pi) for a in away)
        if score > best_score + 1e-12:
            best, best_score = th, score
    return base + r0 * cmath.exp(1j * best)


def _level_eval(qd, p, q, base, cuts, pole_obs, route_obs, z: complex):
    """Level value at z plus the two-path disagreement of the imaginary part."""
    z = complex(z)
    for c, r in pole_obs:
        if abs(z - c) < r:
            raise GuardViolation(f"{z} lies inside the pole neighborhood of {c}")
    if z == base:
        return 0.0, 0.0
    singular = [c.location for c in qd.poles] + [c.location for c in qd.zeros]
    # target-independent first leg: the branch seed must not depend on z,
    # or targets on opposite sides of a cut get opposite global signs
    probe = _seed_probe(qd, base, cuts)
    first = [base, probe]
    leg, hint0 = _integrate(p, q, first, None, singular)
    vals = []
    for side in (1, -1):
        path = _route(probe, z, route_obs, cuts, side)
        seg, _ = _integrate(p, q, path, hint0, singular)
        vals.append((leg + seg).imag)
    gap = abs(vals[0] - vals[1])
    return vals[0], gap


def level_function(qd: QuadraticDifferential, pairing, z: complex) -> float:
    """Im of the path integral of sqrt(p)/q from the base zero to z.

    Raises ResidueObstruction when two homotopically different routes
    disagree beyond 1e-6 * (1 + |value|): the level function is then not
    well defined. A PairingFailure or None pairing is accepted with no
    cuts, which is the diagnostic mode for exactly that situation.
    """
    p, q = _pq_of(qd)
    base = _base_point(qd, pairing)
    cuts = _cuts_of(qd, pairing)
    val, gap = _level_eval(qd, p, q, base, cuts, _obstacles(qd),
                           _route_obstacles(qd), z)
    if gap > GAP_REL_TOL * (1.0 + abs(val)):
        raise ResidueObstruction(
            f"level function path-dependent at {z}: two-path gap {gap:.6e}",
            gap=gap, at=z)
    return float(val)


def level_grid(qd: QuadraticDifferential, pairing, window, n: int) -> LevelField:
    """Sample level_function on an n x n grid; pole neighborhoods masked."""
    x0, y0, x1, y1 = (float(v) for v in window)
    n = int(n)
    p, q = _pq_of(qd)
    base = _base_point(qd, pairing)
    cuts = _cuts_of(qd, pairing)
    pole_obs = _obstacles(qd)
    route_obs = _route_obstacles(qd)
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    grid = np.zeros((n, n), dtype=float)
    mask = np.zeros((n, n), dtype=bool)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            z = complex(x, y)
            if any(abs(z - c) < r for c, r in pole_obs):
                mask[iy, ix] = True
                continue
            val, gap = _level_eval(qd, p, q, base, cuts, pole_obs, route_obs, z)
            if gap > GAP_REL_TOL * (1.0 + abs(val)):
                raise ResidueObstruction(
                    f"level grid path-dependent at {z}: gap {gap:.6e}",
                    gap=gap, at=z)
            grid[iy, ix] = val
    return LevelField(base, cuts, grid, (x0, y0, x1, y1), mask, n)


def verify_level(field: LevelField, rays, qd: QuadraticDifferential) -> VerificationReport:
    """Check the three defining properties on a sampled field.

    (i) continuity: adjacent unmasked samples away from cuts jump by at
    most 4 * spacing * local integrand bound. (ii) trajectory constancy:
    the level values along each ray have standard deviation at most
    1e-5 * (1 + |mean|). (iii) no open constancy: every unmasked 2x2 block
    has positive value spread.
    """
    if not rays:
        raise EmptyLevel("verification needs at least one ray")
    p, q = _pq_of(qd)
    pole_obs = _obstacles(qd)
    route_obs = _route_obstacles(qd)

    ray_stats = []
    ok_ii = True
    for ray in rays:
        pts = np.asarray(ray.points, dtype=complex)
        take = np.linspace(0, len(pts) - 1, min(len(pts), 120)).astype(int)
        take = np.unique(take)
        vals = []
        for z in pts[take]:
            z = complex(z)
            if any(abs(z - c) < r for c, r in pole_obs):
                continue
            v, _gap = _level_eval(qd, p, q, field.base_point, field.cuts,
                                  pole_obs, route_obs, z)
            vals.append(v)
        if len(vals) < 2:
            ok_ii = False
            ray_stats.append({"samples": len(vals), "std": None, "pass": False})
            continue
        arr = np.asarray(vals)
        std = float(arr.std())
        mean = float(arr.mean())
        good = std <= 1e-5 * (1.0 + abs(mean))
        ok_ii = ok_ii and good
        ray_stats.append({"samples": int(len(vals)), "std": std,
                          "mean": mean, "pass": bool(good)})

    g, m = field.grid, field.undefined_mask
    n = field.n
    degenerate = 0
    for iy in range(n - 1):
        for ix in range(n - 1):
            blk_m = m[iy:iy + 2, ix:ix + 2]
            if blk_m.any():
                continue
            blk = g[iy:iy + 2, ix:ix + 2]
            if float(blk.max() - blk.min()) <= 0.0:
                degenerate += 1
    ok_iii = degenerate == 0

    x0, y0, x1, y1 = field.window
    hx = (x1 - x0) / max(n - 1, 1)
    hy = (y1 - y0) / max(n - 1, 1)
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    worst = 0.0
    for iy in range(n):
        for ix in range(n):
            if m[iy, ix]:
                continue
            za = complex(xs[ix], ys[iy])
            for jy, jx, h in ((iy, ix + 1, hx), (iy + 1, ix, hy)):
                if jy >= n or jx >= n or m[jy, jx]:
                    continue
                zb = complex(xs[jx], ys[jy])
                if any(_crosses_cut(za, zb, cut) for cut in field.cuts):
                    continue
                ga = abs(principal_sqrt(p(za)) / q(za))
                gb = abs(principal_sqrt(p(zb)) / q(zb))
                bound = 4.0 * h * max(ga, gb)
                jump = abs(g[iy, ix] - g[jy, jx])
                if bound > 0:
                    worst = max(worst, jump / bound)
    ok_i = worst <= 1.0

    return VerificationReport(
        bool(ok_i), bool(ok_ii), bool(ok_iii),
        {"rays": ray_stats, "degenerate_blocks": degenerate,
         "continuity_worst_ratio": worst})


def _crosses_cut(a: complex, b: complex, cut) -> bool:
    for j in range(len(cut) - 1):
        if _proper_crossing(a, b, complex(cut[j]), complex(cut[j + 1])):
            return True
    return False
