"""Rational quadratic differentials phi(z) dz^2 on the Riemann sphere.

phi = num/den with coprime polynomials. A point with signed order n carries
n + 2 distinguished directions when it is a finite critical point (zero or
simple pole); poles of order >= 2 are infinite critical points. The point at
infinity is handled through the explicit chart u = 1/z, under which the
differential picks up u^-4: its signed order is -(deg num - deg den + 4).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import (
    BranchAmbiguity,
    ConstantRational,
    GuardViolation,
    NotCoprime,
    NotFiniteCritical,
    WrongOrder,
    WrongProvenance,
    ZeroPolynomial,
)
from .polyalg import Polynomial, RootCluster, coprime_check, poly_roots

ROOT_TOL = 1e-8
ANGULAR_TOL = 1e-9
GUARD_FACTOR = 1e-3
DIAM_FLOOR = 10.0

CIRCULAR = "Circular"
RADIAL = "Radial"
SPIRAL = "Spiral"


@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere; value None encodes infinity."""

    value: complex | None = None

    @classmethod
    def finite(cls, z) -> "SpherePoint":
        return cls(complex(z))

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_infinite else f"SpherePoint({self.value!r})"


@dataclass(frozen=True)
class CriticalPoint:
    at: SpherePoint
    signed_order: int          # > 0 zero, < 0 pole; never 0
    quadratic_residue: complex | None = None   # only for order -2 poles

    @property
    def is_finite_critical(self) -> bool:
        return self.signed_order >= -1

    @property
    def is_infinite_critical(self) -> bool:
        return self.signed_order <= -2


@dataclass(frozen=True)
class BranchState:
    """Continuation record for the two-valued sqrt(phi); value semantics."""

    last_point: complex
    last_sqrt: complex


@dataclass
class _Provenance:
    kind: str
    polys: dict = field(default_factory=dict)


class QuadraticDifferential:
    """phi = num/den in lowest terms, with cached root clusters."""

    def __init__(self, num: Polynomial, den: Polynomial,
                 zeros: list[RootCluster], poles: list[RootCluster],
                 provenance: _Provenance | None = None):
        self.num = num
        self.den = den
        self.zeros = zeros
        self.poles = poles
        self.provenance = provenance
        self._critical: list[CriticalPoint] | None = None
        self._neg: QuadraticDifferential | None = None

    # -- evaluation ----------------------------------------------------

    def phi(self, z: complex) -> complex:
        return self.num(z) / self.den(z)

    def phi_array(self, z):
        return self.num.eval_array(z) / self.den.eval_array(z)

    def negated(self) -> "QuadraticDifferential":
        """The differential -phi dz^2 (its horizontals are our verticals)."""
        if self._neg is None:
            neg = QuadraticDifferential(self.num * -1, self.den, self.zeros,
                                        self.poles, provenance=None)
            neg._critical = [
                CriticalPoint(c.at, c.signed_order,
                              None if c.quadratic_residue is None else -c.quadratic_residue)
                for c in critical_points(self)
            ]
            neg._neg = self
            self._neg = neg
        return self._neg

    # -- geometry of the finite critical set ---------------------------

    def finite_critical_positions(self) -> list[complex]:
        return [c.at.value for c in critical_points(self) if not c.at.is_infinite]

    def diameter(self) -> float:
        """Diameter of the finite critical set, floored for degenerate sets."""
        pos = self.finite_critical_positions()
        d = 0.0
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                d = max(d, abs(pos[i] - pos[j]))
        return max(d, DIAM_FLOOR)

    def guard_radius(self, at: complex) -> float:
        pos = self.finite_critical_positions()
        others = [abs(p - at) for p in pos if abs(p - at) > 1e-12]
        scale = min(others) if others else self.diameter()
        return GUARD_FACTOR * scale

    def __repr__(self):
        return f"QuadraticDifferential(num={self.num!r}, den={self.den!r})"


def qd_new(num: Polynomial, den: Polynomial) -> QuadraticDifferential:
    """Construct phi = num/den, cancelling common root clusters.

    Raises ZeroPolynomial for a zero denominator (or numerator: phi = 0 has
    no trajectory structure), NotCoprime when clusters of the two overlap
    only partially so cancellation would be ambiguous.
    """
    if den.is_zero():
        raise ZeroPolynomial("denominator is the zero polynomial")
    if num.is_zero():
        raise ZeroPolynomial("numerator is the zero polynomial")

    zeros = poly_roots(num) if num.degree >= 1 else []
    poles = poly_roots(den) if den.degree >= 1 else []

    rmax = max((abs(c.location) for c in zeros + poles), default=0.0)
    tol = ROOT_TOL * max(1.0, rmax)

    cancelled = False
    new_zeros, new_poles = [], []
    used = [False] * len(poles)
    for zc in zeros:
        hit = None
        for j, pc in enumerate(poles):
            d = abs(zc.location - pc.location)
            if used[j]:
                continue
            if d <= tol:
                hit = j
                break
            if d <= 3.0 * (zc.radius + pc.radius + tol) and d > tol:
                raise NotCoprime(
                    f"clusters at {zc.location} and {pc.location} overlap partially")
        if hit is None:
            new_zeros.append(zc)
        else:
            used[hit] = True
            pc = poles[hit]
            m = min(zc.multiplicity, pc.multiplicity)
            cancelled = True
            loc = (zc.location + pc.location) / 2.0
            if zc.multiplicity > m:
                new_zeros.append(RootCluster(loc, zc.multiplicity - m, zc.radius))
            if pc.multiplicity > m:
                new_poles.append(RootCluster(loc, pc.multiplicity - m, pc.radius))
    for j, pc in enumerate(poles):
        if not used[j]:
            new_poles.append(pc)

    if cancelled:
        lead_n = num.coeffs[-1]
        lead_d = den.coeffs[-1]
        num = Polynomial.from_roots(
            [c.location for c in new_zeros for _ in range(c.multiplicity)], lead_n)
        den = Polynomial.from_roots(
            [c.location for c in new_poles for _ in range(c.multiplicity)], lead_d)
    new_zeros.sort(key=lambda c: (c.location.real, c.location.imag))
    new_poles.sort(key=lambda c: (c.location.real, c.location.imag))
    return QuadraticDifferential(num, den, new_zeros, new_poles)


def infinity_chart(qd: QuadraticDifferential) -> tuple[Polynomial, Polynomial]:
    """phi in the chart u = 1/z: returns (Pu, Qu) with psi(u) = Pu/Qu.

    psi(u) = phi(1/u) / u^4, computed by coefficient reversal plus a
    monomial shift of 4; Pu(0) and Qu(0) stay nonzero except for the
    deliberate u-power carrying the order at infinity.
    """
    rp = qd.num.reversed_coeffs()
    rq = qd.den.reversed_coeffs()
    shift = qd.den.degree - qd.num.degree - 4
    if shift >= 0:
        pu = Polynomial([0j] * shift + list(rp.coeffs))
        qu = rq
    else:
        pu = rp
        qu = Polynomial([0j] * (-shift) + list(rq.coeffs))
    return pu, qu


def order_at_infinity(qd: QuadraticDifferential) -> int:
    return -(qd.num.degree - qd.den.degree + 4)


def critical_points(qd: QuadraticDifferential) -> list[CriticalPoint]:
    """Zeros and poles with signed orders; infinity included when critical.

    Finite points are sorted by (re, im); infinity, if present, comes last.
    The signed orders over the sphere always sum to -4.
    """
    if qd._critical is not None:
        return qd._critical
    pts: list[CriticalPoint] = []
    for c in qd.zeros:
        pts.append(CriticalPoint(SpherePoint.finite(c.location), c.multiplicity))
    for c in qd.poles:
        qr = None
        if c.multiplicity == 2:
            qtail = qd.den
            for _ in range(2):
                qtail, _rem = qtail.deflated(c.location)
            qr = qd.num(c.location) / qtail(c.location)
        pts.append(CriticalPoint(SpherePoint.finite(c.location), -c.multiplicity, qr))
    pts.sort(key=lambda p: (p.at.value.real, p.at.value.imag))

    n_inf = order_at_infinity(qd)
    if n_inf != 0:
        qr = None
        if n_inf == -2:
            pu, qu = infinity_chart(qd)
            tail = Polynomial(qu.coeffs[2:])
            qr = pu(0j) / tail(0j)
        pts.append(CriticalPoint(SpherePoint.infinity(), n_inf, qr))
    qd._critical = pts
    return pts


def classify_double_pole(qd: QuadraticDifferential, at: SpherePoint | complex) -> str:
    """Circular, Radial or Spiral, from the quadratic residue's argument."""
    if not isinstance(at, SpherePoint):
        at = SpherePoint.finite(at)
    cp = _find_critical(qd, at)
    if cp.signed_order != -2:
        raise WrongOrder(f"point has order {cp.signed_order}, need a double pole")
    c = cp.quadratic_residue
    if abs(cmath.phase(-c)) <= ANGULAR_TOL:
        return CIRCULAR
    if abs(cmath.phase(c)) <= ANGULAR_TOL:
        return RADIAL
    return SPIRAL


def _find_critical(qd: QuadraticDifferential, at: SpherePoint) -> CriticalPoint:
    pts = critical_points(qd)
    if at.is_infinite:
        for p in pts:
            if p.at.is_infinite:
                return p
        raise WrongOrder("infinity is a regular point here")
    tol = ROOT_TOL * max(1.0, abs(at.value))
    best, bd = None, math.inf
    for p in pts:
        if p.at.is_infinite:
            continue
        d = abs(p.at.value - at.value)
        if d < bd:
            best, bd = p, d
    if best is None or bd > max(tol, 1e-6):
        raise WrongOrder(f"no critical point at {at.value}")
    return best


def local_leading_coefficient(qd: QuadraticDifferential, cp: CriticalPoint) -> complex:
    """a with phi(z) ~ a (z - z0)^n near the finite critical point z0."""
    z0 = cp.at.value
    num, den = qd.num, qd.den
    n = cp.signed_order
    if n > 0:
        for _ in range(n):
            num, _ = num.deflated(z0)
    else:
        for _ in range(-n):
            den, _ = den.deflated(z0)
    return num(z0) / den(z0)


def critical_directions(qd: QuadraticDifferential, cp: CriticalPoint) -> list[complex]:
    """The n + 2 unit directions of trajectories emanating from a finite
    critical point of signed order n: theta_k = (2 pi k - arg a) / (n + 2)."""
    if cp.at.is_infinite or not cp.is_finite_critical:
        raise NotFiniteCritical(f"signed order {cp.signed_order} at {cp.at}")
    a = local_leading_coefficient(qd, cp)
    n = cp.signed_order
    arg_a = cmath.phase(a)
    out = []
    for k in range(n + 2):
        theta = (2.0 * math.pi * k - arg_a) / (n + 2)
        theta %= 2.0 * math.pi
        out.append(cmath.exp(1j * theta))
    return out


def principal_sqrt(v: complex) -> complex:
    # +0.0 normalizes a negative-zero imaginary part, keeping branch choice deterministic
    return cmath.sqrt(complex(v.real + 0.0, v.imag + 0.0))


def continue_sqrt(v: complex, hint: complex | None) -> complex:
    s = principal_sqrt(v)
    if hint is None:
        return s
    return s if abs(s - hint) <= abs(s + hint) else -s


def sqrt_phi_step(qd: QuadraticDifferential, z: complex,
                  state: BranchState | None = None) -> tuple[complex, BranchState]:
    """One branch-continuous evaluation of sqrt(phi) at z.

    With no prior state the principal square root seeds the branch;
    otherwise the sign closer to the previous value is kept. Points inside
    a critical point's guard radius are rejected (GuardViolation) because
    the branch becomes ill-conditioned there.
    """
    z = complex(z)
    for cp in critical_points(qd):
        if cp.at.is_infinite:
            continue
        if abs(z - cp.at.value) < qd.guard_radius(cp.at.value):
            raise GuardViolation(f"{z} is within the guard radius of {cp.at.value}")
    w = continue_sqrt(qd.phi(z), state.last_sqrt if state else None)
    return w, BranchState(z, w)


# -- constructors for the special families ------------------------------


def qd_from_p_over_q_squared(p: Polynomial, q: Polynomial, sign: int = 1) -> QuadraticDifferential:
    """phi = sign * p / q^2 with the (p, q) provenance retained."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if p.is_zero() or q.is_zero():
        raise ZeroPolynomial("p and q must be nonzero")
    if p.degree >= 1 and q.degree >= 1 and not coprime_check(p, q):
        raise NotCoprime("p and q share a root cluster")
    zeros = poly_roots(p) if p.degree >= 1 else []
    qroots = poly_roots(q) if q.degree >= 1 else []
    poles = [RootCluster(c.location, 2 * c.multiplicity, c.radius) for c in qroots]
    qd = QuadraticDifferential(p * sign, q * q, zeros, poles,
                               _Provenance("p_over_q_squared",
                                           {"p": p, "q": q, "sign": sign,
                                            "p_eff": p * sign, "q_eff": q}))
    return qd


def lemniscate_qd(p: Polynomial, q: Polynomial) -> QuadraticDifferential:
    """phi = -((p'q - pq')/(pq))^2, whose horizontal trajectories are the
    level curves |p/q| = const."""
    if p.is_zero() or q.is_zero():
        raise ZeroPolynomial("p and q must be nonzero")
    if p.degree >= 1 and q.degree >= 1 and not coprime_check(p, q):
        raise NotCoprime("p and q share a root cluster")
    num_ld = p.derivative() * q - p * q.derivative()
    den_ld = p * q
    if num_ld.is_zero():
        raise ConstantRational("p/q is constant: the logarithmic derivative vanishes")
    # reduce the logarithmic derivative: shared clusters sit at multiple roots of p*q
    nroots = poly_roots(num_ld) if num_ld.degree >= 1 else []
    droots = poly_roots(den_ld) if den_ld.degree >= 1 else []
    rmax = max((abs(c.location) for c in nroots + droots), default=0.0)
    tol = ROOT_TOL * max(1.0, rmax)
    red_n, red_d = list(nroots), []
    for dc in droots:
        matched = None
        for i, nc in enumerate(red_n):
            if abs(nc.location - dc.location) <= tol:
                matched = i
                break
        if matched is None:
            red_d.append(dc)
        else:
            nc = red_n.pop(matched)
            m = min(nc.multiplicity, dc.multiplicity)
            if nc.multiplicity > m:
                red_n.append(RootCluster(nc.location, nc.multiplicity - m, nc.radius))
            if dc.multiplicity > m:
                red_d.append(RootCluster(dc.location, dc.multiplicity - m, dc.radius))
    lead = num_ld.coeffs[-1] / den_ld.coeffs[-1]
    n_red = Polynomial.from_roots(
        [c.location for c in red_n for _ in range(c.multiplicity)], 1.0)
    d_red = Polynomial.from_roots(
        [c.location for c in red_d for _ in range(c.multiplicity)], 1.0)
    num = (n_red * n_red) * (-(lead * lead))
    den = d_red * d_red
    zeros = [RootCluster(c.location, 2 * c.multiplicity, c.radius) for c in red_n]
    poles = [RootCluster(c.location, 2 * c.multiplicity, c.radius) for c in red_d]
    zeros.sort(key=lambda c: (c.location.real, c.location.imag))
    poles.sort(key=lambda c: (c.location.real, c.location.imag))
    return QuadraticDifferential(num, den, zeros, poles,
                                 _Provenance("lemniscate",
                                             {"p": p, "q": q,
                                              "p_eff": num, "q_eff": d_red}))


def cauchy_qd(p: Polynomial, q: Polynomial, r: Polynomial) -> QuadraticDifferential:
    """phi = -(q^2 - 4 p r) / p^2, the discriminant differential of the
    quadratic equation p C^2 + q C + r = 0."""
    if p.is_zero():
        raise ZeroPolynomial("p must be nonzero")
    disc = q * q - (p * r) * 4.0
    if disc.is_zero():
        raise ZeroPolynomial("q^2 - 4 p r vanishes identically")
    qd = qd_new(disc * -1.0, p * p)
    qd.provenance = _Provenance("cauchy", {"p": p, "q": q, "r": r,
                                           "p_eff": disc * -1.0, "q_eff": p})
    return qd


def measure_density(qd: QuadraticDifferential, points) -> list[complex]:
    """(1/2 pi i) sqrt(q^2 - 4 p r) / p along the given oriented polyline.

    Branch-continuous along the points; the global sign is fixed so the
    middle value is real and nonnegative (BranchAmbiguity if neither sign
    achieves that within 1e-6 relative).
    """
    if qd.provenance is None or qd.provenance.kind != "cauchy":
        raise WrongProvenance("measure density requires cauchy provenance")
    p = qd.provenance.polys["p"]
    q = qd.provenance.polys["q"]
    r = qd.provenance.polys["r"]
    disc = q * q - (p * r) * 4.0
    pts = [complex(z) for z in points]
    if not pts:
        return []
    vals = []
    hint = None
    for z in pts:
        w = continue_sqrt(disc(z), hint)
        hint = w
        vals.append(w / (2j * math.pi * p(z)))
    mid = vals[len(vals) // 2]
    sign = None
    for s in (1.0, -1.0):
        v = s * mid
        if abs(v.imag) <= 1e-6 * abs(v) and v.real >= -1e-6 * abs(v):
            sign = s
            break
    if sign is None:
        raise BranchAmbiguity(f"midpoint density {mid} is not real under either branch")
    return [sign * v for v in vals]


def measure_mass(qd: QuadraticDifferential, points, max_step: float | None = None) -> float:
    """Trapezoid integral of the measure density along a polyline.

    max_step linearly resamples long segments before integrating; traced
    polylines are adaptive and can be sparse where the density is smooth.
    """
    pts = [complex(z) for z in points]
    if max_step is not None and max_step > 0:
        fine = [pts[0]]
        for i in range(len(pts) - 1):
            a, b = pts[i], pts[i + 1]
            k = max(1, int(math.ceil(abs(b - a) / max_step)))
            fine.extend(a + (b - a) * j / k for j in range(1, k + 1))
        pts = fine
    vals = measure_density(qd, pts)
    total = 0.0
    for i in range(len(pts) - 1):
        total += 0.5 * (vals[i].real + vals[i + 1].real) * abs(pts[i + 1] - pts[i])
    return total
