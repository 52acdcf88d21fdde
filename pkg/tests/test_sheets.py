import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from cylres import BoundaryChart, LambdaChart, R1Chart, RampChart, Sheet, SurfacePoint
from cylres.exceptions import CutError, RamificationPoint
from cylres.sheets import (PHYSICAL, Side, all_roots, branch_r, cross_cut, involution_w, local_sheets_at,
                           physical)

N_THR = 8
sheets = st.frozensets(st.integers(1, N_THR), max_size=N_THR).map(Sheet)
off_axis = st.tuples(st.floats(-20, 80), st.floats(0.01, 20), st.booleans()).map(
    lambda t: complex(t[0], t[1] if t[2] else -t[1]))


@pytest.fixture(scope="module")
def cs():
    from cylres import Interval, build_catalog
    return build_catalog(Interval(np.pi), truncate=N_THR)


@given(sheets)
def test_sheet_text_round_trip(s):
    assert Sheet.parse(str(s)) == s


@given(sheets, sheets)
def test_xor_is_an_involution(s, e):
    assert (s ^ e) ^ e == s


@given(sheets, off_axis)
def test_roots_square_and_sign(cs, s, lam):
    r = all_roots(cs, SurfacePoint(s, lam))
    np.testing.assert_allclose(r ** 2, lam - cs.nu_sq, rtol=1e-12, atol=1e-12)
    assert {j + 1 for j in np.flatnonzero(r.imag < 0)} == set(s.flipped)


@given(sheets, sheets, off_axis)
def test_involution_flips_exactly_E(cs, s, e, lam):
    p = SurfacePoint(s, lam)
    q = involution_w(p, e.flipped)
    np.testing.assert_array_equal(all_roots(cs, q), all_roots(cs, p) * e.signs(N_THR))
    assert involution_w(q, e.flipped) == p


@given(st.integers(1, N_THR - 1), st.floats(0.01, 0.99))
def test_cross_cut_is_continuous(cs, k, frac):
    lam = cs.nu_sq[k - 1] + frac * (cs.nu_sq[k] - cs.nu_sq[k - 1])
    above = SurfacePoint(PHYSICAL, lam, Side.FROM_ABOVE)
    below = cross_cut(cs, above, k)
    assert below.sheet == Sheet.first(k) and below.side is Side.FROM_BELOW
    np.testing.assert_allclose(all_roots(cs, below), all_roots(cs, above))
    # nearby off-cut points: above the cut on the physical sheet
    eps = 1e-9
    np.testing.assert_allclose(all_roots(cs, physical(lam + 1j * eps)), all_roots(cs, above), atol=1e-4)


def test_cut_and_branch_point_errors(cs):
    with pytest.raises(CutError):
        physical(5.0).check(cs)
    with pytest.raises(CutError):
        SurfacePoint(PHYSICAL, 5 + 1j, Side.FROM_ABOVE).check(cs)
    with pytest.raises(RamificationPoint):
        branch_r(cs, SurfacePoint(PHYSICAL, 4.0, Side.FROM_ABOVE), 2)
    with pytest.raises(CutError):
        cross_cut(cs, SurfacePoint(PHYSICAL, 5.0, Side.FROM_ABOVE), 1)
    # below the bottom threshold the real axis is not a cut
    assert physical(0.5).check(cs)


@given(st.integers(1, N_THR - 1), st.sampled_from([1, -1]), st.floats(0.05, 0.95), st.floats(0.05, 6.2))
def test_ramp_chart_agrees_with_sheet_roots(cs, m, side, rfrac, th):
    ch = RampChart(cs, m, side)
    w = rfrac * ch.branch_radius() * np.exp(1j * th)
    assume(min(abs(w.real), abs(w.imag)) > 1e-3)
    r = ch.roots(np.array([w]), N_THR)[0]
    assert r[m - 1] == w
    assert ch.lam(w) == pytest.approx(cs.nu_sq[m - 1] + w * w)
    p = ch.point(w)
    np.testing.assert_allclose(all_roots(cs, p), r, rtol=1e-12, atol=1e-12)
    assert p.sheet in local_sheets_at(cs, m)


@pytest.mark.parametrize("m", [1, 2, 5])
@pytest.mark.parametrize("side", [1, -1])
def test_quadrants_cover_the_local_sheets(cs, m, side):
    ch = RampChart(cs, m, side)
    q = ch.quadrant_sheets()
    assert set(q) == set(local_sheets_at(cs, m))
    assert q[0 if side > 0 else 1] == PHYSICAL


@given(st.integers(0, N_THR - 1), off_axis)
def test_boundary_chart_halves(cs, J, lam):
    ch = BoundaryChart(cs, J, 1)
    p = ch.point(lam)
    assert p.sheet == (PHYSICAL if lam.imag > 0 else Sheet.first(J))
    np.testing.assert_allclose(all_roots(cs, p), ch.roots(np.array([lam]), N_THR)[0], rtol=1e-12, atol=1e-12)


@given(sheets, off_axis)
def test_lambda_chart_matches_sheet(cs, s, lam):
    ch = LambdaChart(cs, s)
    np.testing.assert_allclose(ch.roots(np.array([lam]), N_THR)[0], all_roots(cs, SurfacePoint(s, lam)))


@given(st.floats(-5, 5), st.floats(0.01, 5))
def test_r1_chart_lower_half_plane(cs, x, y):
    E = Sheet.of(1, 3)
    ch = R1Chart(cs, E)
    w = complex(x, -y)
    p = ch.point(w)
    assume(p.lam.imag != 0)
    assert p.sheet == E
    np.testing.assert_allclose(all_roots(cs, p), ch.roots(np.array([w]), N_THR)[0], rtol=1e-10, atol=1e-12)
