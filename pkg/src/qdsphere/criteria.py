"""Certificates for the absence of recurrent trajectories.

Two exact counting criteria (pole count, odd-order count) can outright
certify; the remaining three rest on traced short trajectories and are
capped at NumericallySupported. The Teichmuller polygon identity is checked
in exact rational arithmetic.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from fractions import Fraction

from .errors import WrongProvenance
from .graph import (
    CriticalGraph,
    Pairing,
    PairingFailure,
    build_critical_graph,
    pair_zeros_by_short_trajectories,
)
from .polyalg import poly_roots
from .qdiff import QuadraticDifferential, critical_points, principal_sqrt

CERTIFIED = "CertifiedNoRecurrence"
SUPPORTED = "NumericallySupported"
INCONCLUSIVE = "Inconclusive"
_STRENGTH = {CERTIFIED: 2, SUPPORTED: 1, INCONCLUSIVE: 0}

IMAG_REL_TOL = 1e-8


@dataclass
class CriterionVerdict:
    criterion: str
    verdict: str
    evidence: dict


def stronger(a: str, b: str) -> str:
    return a if _STRENGTH[a] >= _STRENGTH[b] else b


def _pole_list(qd: QuadraticDifferential):
    return [cp for cp in critical_points(qd) if cp.signed_order < 0]


def three_pole(qd: QuadraticDifferential) -> CriterionVerdict:
    """At most three distinct poles leave no room for a recurrent
    trajectory; the count includes the point at infinity."""
    poles = _pole_list(qd)
    ev = {"poles": [[_c(cp.at), cp.signed_order] for cp in poles],
          "count": len(poles)}
    verdict = CERTIFIED if len(poles) <= 3 else INCONCLUSIVE
    return CriterionVerdict("ThreePole", verdict, ev)


def odd_multiplicity(qd: QuadraticDifferential) -> CriterionVerdict:
    """At most three critical points of odd order (zeros or poles,
    infinity included) also exclude recurrence."""
    odd = [cp for cp in critical_points(qd) if cp.signed_order % 2 != 0]
    ev = {"odd_points": [[_c(cp.at), cp.signed_order] for cp in odd],
          "count": len(odd)}
    verdict = CERTIFIED if len(odd) <= 3 else INCONCLUSIVE
    return CriterionVerdict("OddMultiplicity", verdict, ev)


def no_short_trajectory_criterion(qd: QuadraticDifferential,
                                  graph: CriticalGraph) -> CriterionVerdict:
    """With at least one pole of order two or more present, a differential
    without finite critical trajectories has no recurrent ones. Tracing can
    only support this: unresolved rays block the conclusion."""
    has_inf_cp = any(cp.signed_order <= -2 for cp in graph.nodes)
    shorts = sum(1 for e in graph.edges if e.is_short)
    ev = {"infinite_critical_present": has_inf_cp,
          "short_edges": shorts,
          "unresolved_rays": len(graph.unresolved)}
    if has_inf_cp and shorts == 0 and not graph.unresolved:
        return CriterionVerdict("NoShortTrajectory", SUPPORTED, ev)
    return CriterionVerdict("NoShortTrajectory", INCONCLUSIVE, ev)


def _pairing_evidence(pairing) -> dict:
    if isinstance(pairing, PairingFailure):
        return {"pairing": "failed", "reason": pairing.reason,
                "unmatched": [_c(z) for z in pairing.locations]}
    return {"pairing": pairing.method,
            "pairs": [[_c(a), _c(b)] for a, b in pairing.locations]}


def parity_pairs(qd: QuadraticDifferential, pairing) -> CriterionVerdict:
    """Paired zeros must carry multiplicities of equal parity."""
    _require_pq_form(qd)
    ev = _pairing_evidence(pairing)
    if isinstance(pairing, PairingFailure):
        return CriterionVerdict("ParityPairs", INCONCLUSIVE, ev)
    mism = []
    for a, b in pairing.pairs:
        ma, mb = qd.zeros[a].multiplicity, qd.zeros[b].multiplicity
        if (ma - mb) % 2 != 0:
            mism.append([a, b, ma, mb])
    ev["parity_mismatches"] = mism
    verdict = SUPPORTED if not mism else INCONCLUSIVE
    return CriterionVerdict("ParityPairs", verdict, ev)


def residue_criterion(qd: QuadraticDifferential, pairing) -> CriterionVerdict:
    """Each zero b of q must give a purely imaginary residue of sqrt(p)/q,
    computed as sqrt(p(b))/q'(b) and tested under both branch signs."""
    p, q = _require_pq_form(qd)
    ev = _pairing_evidence(pairing)
    qroots = poly_roots(q) if q.degree >= 1 else []
    if any(c.multiplicity > 1 for c in qroots):
        ev["note"] = "q has a multiple zero; the simple-pole residue test does not apply"
        return CriterionVerdict("ResidueCriterion", INCONCLUSIVE, ev)
    dq = q.derivative()
    residues = []
    worst = 0.0
    all_imag = True
    for c in qroots:
        b = c.location
        for s in (1.0, -1.0):
            res = s * principal_sqrt(p(b)) / dq(b)
            ratio = abs(res.real) / max(abs(res), 1e-300) if res != 0 else 0.0
            worst = max(worst, ratio)
            if ratio > IMAG_REL_TOL:
                all_imag = False
        res0 = principal_sqrt(p(b)) / dq(b)
        residues.append([_c(b), [res0.real, res0.imag]])
    ev["residues"] = residues
    ev["max_real_ratio"] = worst
    if all_imag and not isinstance(pairing, PairingFailure):
        return CriterionVerdict("ResidueCriterion", SUPPORTED, ev)
    return CriterionVerdict("ResidueCriterion", INCONCLUSIVE, ev)


def _require_pq_form(qd: QuadraticDifferential):
    if qd.provenance is None or "p_eff" not in qd.provenance.polys:
        raise WrongProvenance("criterion requires a p/q^2 style construction")
    return qd.provenance.polys["p_eff"], qd.provenance.polys["q_eff"]


@dataclass(frozen=True)
class QdPolygon:
    """Vertices carry (order n_j, interior angle t_j as a Fraction multiple
    of pi); interior_orders lists the orders of enclosed critical points."""
    vertices: tuple
    interior_orders: tuple

    @classmethod
    def build(cls, vertices, interior_orders) -> "QdPolygon":
        vs = []
        for n, t in vertices:
            t = Fraction(t)
            if not (0 < t <= 2):
                raise ValueError(f"angle {t} pi outside (0, 2 pi]")
            vs.append((int(n), t))
        return cls(tuple(vs), tuple(int(m) for m in interior_orders))


def teichmuller_check(polygon: QdPolygon) -> Fraction:
    """LHS - RHS of the polygon identity
    sum_j (1 - (n_j + 2) t_j / 2 pi) = 2 + sum_i m_i, exactly."""
    lhs = Fraction(0)
    for n, t in polygon.vertices:
        lhs += 1 - Fraction(n + 2) * t / 2
    rhs = 2 + sum(polygon.interior_orders)
    return lhs - rhs


def run_all(qd: QuadraticDifferential, opts=None,
            graph: CriticalGraph | None = None) -> list[CriterionVerdict]:
    """Every applicable criterion, strongest verdict first; the graph is
    built once and shared."""
    g = graph if graph is not None else build_critical_graph(qd, opts)
    out = [three_pole(qd), odd_multiplicity(qd),
           no_short_trajectory_criterion(qd, g)]
    if qd.provenance is not None and "p_eff" in qd.provenance.polys:
        pairing = pair_zeros_by_short_trajectories(qd, opts, graph=g)
        out.append(parity_pairs(qd, pairing))
        out.append(residue_criterion(qd, pairing))
    order = {"ThreePole": 0, "OddMultiplicity": 1, "NoShortTrajectory": 2,
             "ParityPairs": 3, "ResidueCriterion": 4}
    out.sort(key=lambda v: (-_STRENGTH[v.verdict], order[v.criterion]))
    return out


def overall_verdict(verdicts: list[CriterionVerdict]) -> str:
    v = INCONCLUSIVE
    for x in verdicts:
        v = stronger(v, x.verdict)
    return v


def _c(z) -> list[float] | None:
    """Complex (or SpherePoint) to a JSON-ready [re, im]; None marks infinity."""
    v = getattr(z, "value", z)
    if v is None:
        return None
    v = complex(v)
    return [v.real, v.imag]
