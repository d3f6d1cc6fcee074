import math

import numpy as np
import pytest

from qdsphere.contour import marching_squares
from qdsphere.errors import EmptyLevel
from qdsphere.lemniscate import analyze_lemniscate, lemniscate_level_curve
from qdsphere.polyalg import Polynomial

ONE = Polynomial([1.0])
Z2M1 = Polynomial([-1.0, 0.0, 1.0])     # z^2 - 1


def test_report_bernoulli():
    rep = analyze_lemniscate(Z2M1, ONE, samples=20)
    # r = z^2 - 1: critical point of r'/r at 0, level |r(0)| = 1
    assert len(rep.finite_critical_points) == 1
    assert abs(rep.finite_critical_points[0]) < 1e-9
    assert rep.critical_levels == pytest.approx([1.0], rel=1e-12)
    # double poles of phi at the roots +-1 with residue -1, plus infinity
    finite = {(round(loc.real), round(loc.imag)): qr
              for loc, qr in rep.double_poles if loc is not None}
    assert set(finite) == {(-1, 0), (1, 0)}
    for qr in finite.values():
        assert qr == pytest.approx(-1.0, rel=1e-9)
    inf = [qr for loc, qr in rep.double_poles if loc is None]
    assert inf == [pytest.approx(-4.0, rel=1e-9)]


def test_all_samples_close():
    rep = analyze_lemniscate(Z2M1, ONE, samples=20)
    assert len(rep.strebel_samples) == 20
    assert all(closed for _, closed in rep.strebel_samples)


def test_sampling_seeded_and_deterministic():
    a = analyze_lemniscate(Z2M1, ONE, samples=6, seed=4)
    b = analyze_lemniscate(Z2M1, ONE, samples=6, seed=4)
    assert [p for p, _ in a.strebel_samples] == [p for p, _ in b.strebel_samples]
    c = analyze_lemniscate(Z2M1, ONE, samples=6, seed=5)
    assert [p for p, _ in a.strebel_samples] != [p for p, _ in c.strebel_samples]


def test_monomial_circles():
    rep = analyze_lemniscate(Polynomial([0.0, 1.0]), ONE, samples=12)
    assert rep.finite_critical_points == []
    assert all(closed for _, closed in rep.strebel_samples)
    finite = [loc for loc, _ in rep.double_poles if loc is not None]
    assert len(finite) == 1 and abs(finite[0]) < 1e-12


def test_rational_ratio_poles():
    # r = (z - 1)/(z + 1): double poles of phi at both roots, residue -1
    rep = analyze_lemniscate(Polynomial([-1.0, 1.0]), Polynomial([1.0, 1.0]), samples=8)
    finite = {(round(loc.real), round(loc.imag)): qr
              for loc, qr in rep.double_poles if loc is not None}
    assert set(finite) == {(-1, 0), (1, 0)}
    for qr in finite.values():
        assert qr == pytest.approx(-1.0, rel=1e-9)


def test_level_curve_tracks_modulus():
    curves = lemniscate_level_curve(Z2M1, ONE, 1.3, (-2.5, -2.0, 2.5, 2.0), 160)
    assert curves
    for poly in curves:
        for z in poly[:: max(1, len(poly) // 50)]:
            assert abs(abs(z * z - 1) - 1.3) < 2e-2


def test_level_curve_component_counts():
    # |z^2 - 1| = c: two ovals below the critical level, one curve above
    win = (-2.5, -2.0, 2.5, 2.0)
    low = lemniscate_level_curve(Z2M1, ONE, 0.5, win, 220)
    assert len(low) == 2
    high = lemniscate_level_curve(Z2M1, ONE, 1.7, win, 220)
    assert len(high) == 1
    for poly in low + high:
        assert abs(poly[0] - poly[-1]) < 1e-9      # closed loops


def test_level_curve_empty_raises():
    with pytest.raises(EmptyLevel):
        lemniscate_level_curve(Z2M1, ONE, 9.0, (-2.0, -2.0, 2.0, 2.0), 64)


def test_level_curve_cross_check_toggle():
    # the traced cross-check must agree with marching squares and not
    # change the returned curves
    win = (-2.5, -2.0, 2.5, 2.0)
    a = lemniscate_level_curve(Z2M1, ONE, 0.8, win, 150, cross_check=True)
    b = lemniscate_level_curve(Z2M1, ONE, 0.8, win, 150, cross_check=False)
    assert len(a) == len(b)
    for pa, pb in zip(a, b):
        assert np.allclose(pa, pb)


def test_marching_squares_circle():
    xs = np.linspace(-2, 2, 201)
    ys = np.linspace(-2, 2, 201)
    X, Y = np.meshgrid(xs, ys)
    field = np.hypot(X, Y)
    curves = marching_squares(xs, ys, field, 1.0)
    assert len(curves) == 1
    loop = curves[0]
    assert abs(loop[0] - loop[-1]) < 1e-12
    radii = np.abs(loop)
    assert np.max(np.abs(radii - 1.0)) < 5e-4


def test_marching_squares_empty():
    xs = np.linspace(-1, 1, 11)
    field = np.zeros((11, 11))
    assert marching_squares(xs, xs, field, 0.5) == []


def test_marching_squares_open_curve_hits_boundary():
    xs = np.linspace(-1, 1, 41)
    X, Y = np.meshgrid(xs, xs)
    curves = marching_squares(xs, xs, Y, 0.0)      # the line y = 0
    assert len(curves) == 1
    line = curves[0]
    assert abs(line[0] - line[-1]) > 1.5           # open, spans the window
    assert np.max(np.abs(line.imag)) < 1e-12
