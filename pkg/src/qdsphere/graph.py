"""Critical graph assembly and trajectory-level diagnostics.

Launches the n+2 critical trajectories from every finite critical point,
collects the rays into a graph whose short edges are the finite critical
trajectories, pairs zeros along short edges, and probes for recurrence by
counting crossings of a long ray with an orthogonal transversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import WrongProvenance
from .qdiff import (
    CriticalPoint,
    QuadraticDifferential,
    critical_points,
    local_leading_coefficient,
    order_at_infinity,
)
from .tracer import (
    CLOSED,
    ESCAPED_WINDOW,
    HIT_CRITICAL,
    SEED_FACTOR,
    TraceOptions,
    TrajectoryRay,
    trace_from_critical,
    trace_horizontal,
    trace_vertical,
)

K_MIN_DEFAULT = 20
TRANSVERSAL_FACTOR = 0.05
DEDUP_FACTOR = 10.0
WINDOW_WIDEN = 1.0e4

SUSPECTED_RECURRENT = "SuspectedRecurrent"
NOT_RECURRENT = "NotRecurrent"
UNDETERMINED = "Undetermined"


@dataclass
class CriticalEdge:
    from_node: int
    to_node: int
    polyline: np.ndarray
    phi_length: float              # math.inf for rays that leave the finite part
    is_short: bool
    ray: TrajectoryRay


@dataclass
class CriticalGraph:
    nodes: list[CriticalPoint]
    edges: list[CriticalEdge]
    unresolved: list[TrajectoryRay]
    work: dict = field(default_factory=dict)


def _endpoint_tail(qd: QuadraticDifferential, cp: CriticalPoint, gap: float) -> float:
    """phi-length of the omitted arc between cp and a point at distance gap,
    integrated in the local model |phi| ~ |a| r^n."""
    if gap <= 0.0:
        return 0.0
    a = abs(local_leading_coefficient(qd, cp))
    e = 0.5 * cp.signed_order + 1.0
    return math.sqrt(a) * gap ** e / e


def _phi_midpoint(ray: TrajectoryRay) -> tuple[complex, float]:
    """Linear interpolation of the point at half the ray's phi-length;
    also returns the bracketing sample spacing (the locate uncertainty)."""
    t = 0.5 * ray.phi_length
    i = int(np.searchsorted(ray.taus, t))
    if i <= 0:
        return complex(ray.points[0]), 0.0
    if i >= len(ray.points):
        return complex(ray.points[-1]), 0.0
    t0, t1 = ray.taus[i - 1], ray.taus[i]
    a, b = complex(ray.points[i - 1]), complex(ray.points[i])
    lam = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    return a + lam * (b - a), abs(b - a)


def _point_polyline_distance(p: complex, poly: np.ndarray) -> float:
    a, b = poly[:-1], poly[1:]
    ab = b - a
    L2 = (ab.real ** 2 + ab.imag ** 2)
    L2 = np.where(L2 == 0.0, 1.0, L2)
    t = ((p - a).real * ab.real + (p - a).imag * ab.imag) / L2
    t = np.clip(t, 0.0, 1.0)
    proj = a + t * ab
    return float(np.min(np.abs(p - proj))) if len(a) else abs(p - poly[0])


def build_critical_graph(qd: QuadraticDifferential,
                         opts: TraceOptions | None = None) -> CriticalGraph:
    """Trace every critical direction of every finite critical point.

    Rays hitting another finite critical point become short edges (their
    length includes the analytic tail corrections for the seed and snap
    gaps); rays falling into a pole guard or escaping toward a critical
    point at infinity become infinite edges; rays that exhaust a budget, or
    escape while infinity is regular, are reported unresolved. Edges traced
    from both ends are deduplicated by endpoint pair plus midpoint proximity.
    """
    opts = opts or TraceOptions.for_qd(qd)
    nodes = critical_points(qd)
    inf_id = next((i for i, cp in enumerate(nodes) if cp.at.is_infinite), None)

    edges: list[CriticalEdge] = []
    unresolved: list[TrajectoryRay] = []
    launched = 0
    for i, cp in enumerate(nodes):
        if cp.at.is_infinite or not cp.is_finite_critical:
            continue
        for k in range(cp.signed_order + 2):
            ray = trace_from_critical(qd, cp, k, opts)
            launched += 1
            t = ray.termination
            if t.kind == HIT_CRITICAL:
                tgt = nodes[t.cp_index]
                if tgt.signed_order <= -2:
                    edges.append(CriticalEdge(i, t.cp_index, ray.points,
                                              math.inf, False, ray))
                else:
                    L = (ray.phi_length
                         + _endpoint_tail(qd, cp, abs(ray.points[0] - cp.at.value))
                         + _endpoint_tail(qd, tgt, abs(ray.points[-1] - tgt.at.value)))
                    edges.append(CriticalEdge(i, t.cp_index, ray.points, L, True, ray))
            elif t.kind == CLOSED:
                edges.append(CriticalEdge(i, i, ray.points, ray.phi_length, True, ray))
            elif t.kind == ESCAPED_WINDOW:
                if inf_id is not None:
                    edges.append(CriticalEdge(i, inf_id, ray.points,
                                              math.inf, False, ray))
                else:
                    unresolved.append(ray)
            else:
                unresolved.append(ray)

    kept: list[CriticalEdge] = []
    thr = DEDUP_FACTOR * opts.snap_radius
    for e in edges:
        if e.is_short:
            key = frozenset((e.from_node, e.to_node))
            mid, step = _phi_midpoint(e.ray)
            dup = False
            for f in kept:
                if not f.is_short or frozenset((f.from_node, f.to_node)) != key:
                    continue
                _fmid, fstep = _phi_midpoint(f.ray)
                tol = max(thr, 0.35 * (step + fstep))
                if _point_polyline_distance(mid, f.polyline) <= tol:
                    dup = True
                    break
            if dup:
                continue
        kept.append(e)

    return CriticalGraph(nodes, kept, unresolved, work={"launched_rays": launched})


def find_short_trajectories(qd: QuadraticDifferential,
                            opts: TraceOptions | None = None) -> list[CriticalEdge]:
    """The is_short edges of the critical graph."""
    return [e for e in build_critical_graph(qd, opts).edges if e.is_short]


@dataclass
class Pairing:
    pairs: list[tuple[int, int]]                 # indices into the zero clusters
    locations: list[tuple[complex, complex]]
    polylines: list[np.ndarray]
    lengths: list[float]
    method: str                                  # vacuous | exhaustive | greedy


@dataclass
class PairingFailure:
    unmatched: list[int]
    locations: list[complex]
    reason: str


EXHAUSTIVE_LIMIT = 10


def pair_zeros_by_short_trajectories(qd: QuadraticDifferential,
                                     opts: TraceOptions | None = None,
                                     graph: CriticalGraph | None = None):
    """Match the zeros into pairs joined by detected short trajectories.

    Exhaustive search below 11 zeros (lexicographically first matching),
    greedy by ascending length above. Returns Pairing or PairingFailure.
    """
    if qd.provenance is None:
        raise WrongProvenance("pairing requires a p/q^2 style construction")
    zeros = qd.zeros
    if not zeros:
        return Pairing([], [], [], [], "vacuous")
    if len(zeros) % 2 == 1:
        return PairingFailure(list(range(len(zeros))),
                              [c.location for c in zeros],
                              "odd number of zeros")

    g = graph if graph is not None else build_critical_graph(qd, opts)
    node_to_zero: dict[int, int] = {}
    for zi, c in enumerate(zeros):
        for ni, cp in enumerate(g.nodes):
            if not cp.at.is_infinite and abs(cp.at.value - c.location) <= 1e-9 * (
                    1.0 + abs(c.location)):
                node_to_zero[ni] = zi
                break

    cand: dict[tuple[int, int], CriticalEdge] = {}
    for e in g.edges:
        if not e.is_short or e.from_node == e.to_node:
            continue
        if e.from_node in node_to_zero and e.to_node in node_to_zero:
            a, b = sorted((node_to_zero[e.from_node], node_to_zero[e.to_node]))
            if (a, b) not in cand or e.phi_length < cand[(a, b)].phi_length:
                cand[(a, b)] = e

    n = len(zeros)
    adj = {i: sorted(j for j in range(n) if (min(i, j), max(i, j)) in cand)
           for i in range(n)}

    if n <= EXHAUSTIVE_LIMIT:
        matched = _match_exhaustive(n, adj)
        method = "exhaustive"
    else:
        matched = _match_greedy(n, cand)
        method = "greedy"

    if matched is None or len(matched) * 2 < n:
        used = set()
        for a, b in (matched or []):
            used.update((a, b))
        left = [i for i in range(n) if i not in used]
        return PairingFailure(left, [zeros[i].location for i in left],
                              "no perfect matching over detected short trajectories")
    pairs = sorted(matched)
    return Pairing(
        pairs,
        [(zeros[a].location, zeros[b].location) for a, b in pairs],
        [cand[p].polyline for p in pairs],
        [cand[p].phi_length for p in pairs],
        method,
    )


def _match_exhaustive(n: int, adj: dict[int, list[int]]):
    pairs: list[tuple[int, int]] = []
    free = set(range(n))

    def rec() -> bool:
        if not free:
            return True
        i = min(free)
        free.discard(i)
        for j in adj[i]:
            if j in free:
                free.discard(j)
                pairs.append((i, j))
                if rec():
                    return True
                pairs.pop()
                free.add(j)
        free.add(i)
        return False

    return pairs if rec() else None


def _match_greedy(n: int, cand: dict[tuple[int, int], CriticalEdge]):
    order = sorted(cand.items(), key=lambda kv: (kv[1].phi_length, kv[0]))
    free = set(range(n))
    pairs = []
    for (a, b), _e in order:
        if a in free and b in free:
            pairs.append((a, b))
            free.discard(a)
            free.discard(b)
    return pairs


@dataclass
class RecurrenceReport:
    crossings: int
    closed: bool
    verdict: str
    reason: str | None
    transversal: np.ndarray
    ray: TrajectoryRay


def detect_recurrence(qd: QuadraticDifferential, z0: complex,
                      opts: TraceOptions | None = None, K_min: int = K_MIN_DEFAULT,
                      transversal_halflength: float | None = None) -> RecurrenceReport:
    """Trace the horizontal ray through z0 and count its proper crossings
    with the orthogonal trajectory segment through the same point.

    Closed rays are not recurrent; K_min or more crossings of a non-closed
    ray are reported SuspectedRecurrent; rays that end at a critical point
    or leave the window are not recurrent; exhausted budgets with few
    crossings leave the question undetermined.
    """
    opts = opts or TraceOptions.for_qd(qd)
    if order_at_infinity(qd) == 0:
        # infinity is a regular point, so leaving any finite window is never
        # dynamically terminal: the ray passes the far region at phi-cost
        # ~ 1/R and returns. Widen the window so the probe survives that.
        x0, y0, x1, y1 = opts.window
        w = WINDOW_WIDEN * max(x1 - x0, y1 - y0, 1.0)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        opts = opts.replace(window=(cx - w, cy - w, cx + w, cy + w))
    hl = (TRANSVERSAL_FACTOR * qd.diameter()
          if transversal_halflength is None else float(transversal_halflength))
    topts = opts.replace(max_phi_length=hl)
    up = trace_vertical(qd, z0, +1, topts)
    dn = trace_vertical(qd, z0, -1, topts)
    transversal = np.concatenate([dn.points[::-1], up.points[1:]])

    ray = trace_horizontal(qd, complex(z0), +1, opts)
    crossings = _count_crossings(ray.points, transversal, complex(z0),
                                 SEED_FACTOR * opts.snap_radius)
    closed = ray.termination.kind == CLOSED
    if closed:
        verdict, reason = NOT_RECURRENT, CLOSED
    elif crossings >= K_min:
        verdict, reason = SUSPECTED_RECURRENT, None
    elif ray.termination.kind in (HIT_CRITICAL, ESCAPED_WINDOW):
        verdict, reason = NOT_RECURRENT, ray.termination.kind
    else:
        verdict, reason = UNDETERMINED, ray.termination.kind
    return RecurrenceReport(crossings, closed, verdict, reason, transversal, ray)


def _count_crossings(path: np.ndarray, transversal: np.ndarray,
                     z0: complex, exclude_radius: float) -> int:
    """Proper segment crossings of path with transversal, skipping path
    segments inside the exclusion disk around z0 (the shared start point)."""
    if len(path) < 2 or len(transversal) < 2:
        return 0
    A, B = path[:-1], path[1:]
    keep = np.minimum(np.abs(A - z0), np.abs(B - z0)) > exclude_radius
    # transversal bounding box prefilter
    tx0, tx1 = transversal.real.min(), transversal.real.max()
    ty0, ty1 = transversal.imag.min(), transversal.imag.max()
    keep &= (np.minimum(A.real, B.real) <= tx1) & (np.maximum(A.real, B.real) >= tx0)
    keep &= (np.minimum(A.imag, B.imag) <= ty1) & (np.maximum(A.imag, B.imag) >= ty0)
    A, B = A[keep], B[keep]
    if len(A) == 0:
        return 0
    C, D = transversal[:-1], transversal[1:]

    def cross(o, a, b):
        return ((a.real - o.real) * (b.imag - o.imag)
                - (a.imag - o.imag) * (b.real - o.real))

    total = 0
    chunk = 2048
    for s in range(0, len(A), chunk):
        a = A[s:s + chunk][:, None]
        b = B[s:s + chunk][:, None]
        c = C[None, :]
        d = D[None, :]
        d1 = cross(c, d, a)
        d2 = cross(c, d, b)
        d3 = cross(a, b, c)
        d4 = cross(a, b, d)
        proper = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)
        total += int(np.count_nonzero(proper))
    return total
