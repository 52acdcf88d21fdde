import numpy as np
import pytest
from hypothesis import given, strategies as st

from cylres import PHYSICAL, Discretization, Interval, LambdaChart, Profile, Sheet, SurfacePoint, build_catalog, separable
from cylres.exceptions import CutError
from cylres.kernels import HALF_LINE
from cylres.oracle import scattering_1d, scattering_half
from cylres.sheets import Side
from cylres.smatrix import (SolverParams, assemble_S, check_inverse_identity, smatrix_csv, smatrix_multiplicity,
                            unitarity_defect)

off_cut = st.tuples(st.floats(0.5, 15.0), st.floats(0.2, 4.0), st.booleans()).map(
    lambda t: complex(t[0], t[1] if t[2] else -t[1]))
sheets = st.sampled_from([Sheet(), Sheet.of(1), Sheet.of(1, 2), Sheet.of(2), Sheet.of(1, 2, 3)])


@given(st.floats(1.05, 24.9).filter(lambda x: min(abs(x - j * j) for j in range(1, 6)) > 0.05))
def test_boundary_matrix_is_the_1d_scattering_data(two_ended_cs, barrier, barrier_pot, lam):
    J = int(np.floor(np.sqrt(lam)))
    s = assemble_S(two_ended_cs, barrier_pot, Sheet.first(J), SurfacePoint(PHYSICAL, lam, Side.FROM_ABOVE))
    assert len(s.modes) == 2 * J
    S = s.entries
    for j in range(J):
        RL, T, RR = scattering_1d(np.sqrt(lam - (j + 1) ** 2), barrier)
        blk = S[2 * j:2 * j + 2, 2 * j:2 * j + 2]
        np.testing.assert_allclose(blk, [[RL, T], [T, RR]], rtol=0, atol=1e-5)
    # separable: no cross-threshold scattering
    off = S.copy()
    for j in range(J):
        off[2 * j:2 * j + 2, 2 * j:2 * j + 2] = 0
    assert np.abs(off).max() < 1e-9
    assert unitarity_defect(s, two_ended_cs) < 1e-8


@given(st.floats(1.05, 8.9).filter(lambda x: abs(x - 4) > 0.05))
def test_half_line_matrix(lam):
    cs = build_catalog(Interval(np.pi), truncate=12)
    prof = Profile.step(4.0, 0.2, 1.0)
    J = int(np.floor(np.sqrt(lam)))
    s = assemble_S(cs, separable(prof, HALF_LINE), Sheet.first(J), SurfacePoint(PHYSICAL, lam, Side.FROM_ABOVE))
    want = [scattering_half(np.sqrt(lam - (j + 1) ** 2), prof) for j in range(J)]
    np.testing.assert_allclose(np.diag(s.entries), want, rtol=0, atol=1e-5)


@given(sheets, off_cut)
def test_inverse_identity(two_ended_cs, barrier_pot, E, lam):
    assert check_inverse_identity(two_ended_cs, barrier_pot, E, SurfacePoint(E, lam)) < 1e-8


def test_zero_potential_transmits(two_ended_cs):
    from cylres import zero_potential
    s = assemble_S(two_ended_cs, zero_potential(), Sheet.of(1), SurfacePoint(Sheet.of(1), 3 - 1j))
    np.testing.assert_allclose(s.entries, [[0, 1], [1, 0]], atol=1e-7)


def test_empty_channel_set(two_ended_cs, barrier_pot):
    s = assemble_S(two_ended_cs, barrier_pot, Sheet(), SurfacePoint(Sheet(), 3 + 1j))
    assert s.entries.shape == (0, 0)
    assert check_inverse_identity(two_ended_cs, barrier_pot, Sheet(), SurfacePoint(Sheet(), 3 + 1j)) == 0.0


def test_side_flag_required_on_the_cut(two_ended_cs, barrier_pot):
    with pytest.raises(CutError):
        assemble_S(two_ended_cs, barrier_pot, Sheet.of(1), SurfacePoint(PHYSICAL, 2.5))


def test_refinement_keeps_residual_small(two_ended_cs, barrier_pot):
    E = Sheet.of(1, 2)
    p = SurfacePoint(E, 6 - 1.5j)
    r1 = check_inverse_identity(two_ended_cs, barrier_pot, E, p)
    r2 = check_inverse_identity(two_ended_cs, barrier_pot, E, p, SolverParams().refined())
    assert r2 <= 1e-6 and r2 <= r1 + 1e-9


def test_multiplicity_matches_fredholm(interval_cs, two_ended_cs, barrier_pot):
    E = Sheet.of(1)
    lam = 4.223496131767808 - 6.8007689072832465j
    mu = smatrix_multiplicity(two_ended_cs, barrier_pot, E, LambdaChart(two_ended_cs, E), lam, 1.0,
                              check_with=(LambdaChart(interval_cs, E), Discretization()))
    assert mu == 1
    # a circle without resonances
    assert smatrix_multiplicity(two_ended_cs, barrier_pot, E, LambdaChart(two_ended_cs, E), 10 - 2j, 1.0) == 0


def test_csv_has_one_row_per_entry(two_ended_cs, barrier_pot):
    s = assemble_S(two_ended_cs, barrier_pot, Sheet.of(1, 2), SurfacePoint(Sheet.of(1, 2), 5 + 1j))
    rows = smatrix_csv([s]).strip().splitlines()
    assert rows[0].split(",")[:3] == ["re_lambda", "im_lambda", "sheet"]
    assert len(rows) == 1 + 16


def test_entries_converge_at_fourth_order(two_ended_cs, barrier, barrier_pot):
    lam = 20.5
    p = SurfacePoint(PHYSICAL, lam, Side.FROM_ABOVE)
    RL, T, _ = scattering_1d(np.sqrt(lam - 1), barrier)
    errs = []
    for h in (1 / 16, 1 / 32):
        s = assemble_S(two_ended_cs, barrier_pot, Sheet.first(4), p, SolverParams(h=h))
        errs.append(abs(s.entries[0, 0] - RL) + abs(s.entries[1, 0] - T))
    assert errs[1] < errs[0] / 10
