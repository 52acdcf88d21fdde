import numpy as np
import pytest
from hypothesis import given, strategies as st

from cylres.exceptions import IdenticallySingular, IndeterminateOrder
from cylres.smith import (LaurentMatrixGerm, conjugate, conjugated_germ, local_smith, mu_d_via_det,
                          random_unit_germ, read_germ, write_germ)

TRUNC = 40
exps = st.lists(st.integers(-3, 3), min_size=1, max_size=5)


@given(exps, st.integers(0, 2 ** 32 - 1))
def test_exponents_recovered_and_invariant(es, seed):
    rng = np.random.default_rng(seed)
    d, n = len(es), TRUNC + 1
    g = conjugated_germ(es, random_unit_germ(rng, d, n), random_unit_germ(rng, d, n), TRUNC)
    sd = local_smith(g)
    if not sd.certified:
        return
    assert sd.exponents == tuple(sorted(es))
    assert sd.mu_d == mu_d_via_det(g) == -sum(es)
    assert sd.mu_m == sum(-e for e in es if e < 0)
    h = conjugate(g, random_unit_germ(rng, d, n), random_unit_germ(rng, d, n))
    sh = local_smith(h)
    if sh.certified:
        assert sh.exponents == sd.exponents


def test_certified_fraction_is_high():
    rng = np.random.default_rng(7)
    ok = 0
    for _ in range(50):
        es = list(rng.integers(-3, 4, size=rng.integers(1, 6)))
        d = len(es)
        g = conjugated_germ(es, random_unit_germ(rng, d, TRUNC + 1), random_unit_germ(rng, d, TRUNC + 1), TRUNC)
        ok += local_smith(g).certified
    assert ok >= 45


def test_diagonal_germ():
    C = np.zeros((6, 2, 2))
    C[0, 0, 0] = 1.0          # z^-2
    C[3, 1, 1] = 2.0          # z^1
    sd = local_smith(LaurentMatrixGerm(0j, -2, C))
    assert sd.exponents == (-2, 1) and sd.pole_exps == (2,) and sd.zero_exps == (1,)
    assert sd.mu_m == 2 and sd.mu_d == 1 and sd.certified


def test_accumulated_factors_reproduce_the_germ():
    rng = np.random.default_rng(3)
    es, n = [0, 1, 2], 12
    g = conjugated_germ(es, random_unit_germ(rng, 3, n), random_unit_germ(rng, 3, n), n - 1)
    sd = local_smith(g, accumulate=True)
    assert sd.exponents == (0, 1, 2)
    # left @ A @ right is diagonal up to the valid window
    from cylres.smith import series_matmul
    M = series_matmul(series_matmul(sd.left, g.series(), n), sd.right, n)
    off = M.copy()
    off[np.arange(3), np.arange(3)] = 0
    assert np.abs(off[:, :, :sd.window_left]).max() < 1e-8


def test_zero_germ_is_singular():
    with pytest.raises(IdenticallySingular):
        local_smith(LaurentMatrixGerm(0j, 0, np.zeros((4, 2, 2))))


def test_short_window_is_indeterminate():
    # rank-one constant term with the second exponent beyond the window
    C = np.zeros((3, 2, 2))
    C[0, 0, 0] = 1.0
    with pytest.raises((IndeterminateOrder, IdenticallySingular)):
        local_smith(LaurentMatrixGerm(0j, 0, C))
    with pytest.raises(IndeterminateOrder):
        mu_d_via_det(LaurentMatrixGerm(0j, 0, C))


@given(st.integers(1, 4), st.integers(-3, 3), st.integers(0, 6), st.integers(0, 2 ** 32 - 1))
def test_germ_file_round_trip(d, low, trunc, seed):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((trunc + 1, d, d)) + 1j * rng.standard_normal((trunc + 1, d, d))
    g = LaurentMatrixGerm(complex(rng.standard_normal(), rng.standard_normal()), low, C)
    h = read_germ(write_germ(g))
    assert h.z0 == g.z0 and h.low == g.low
    np.testing.assert_array_equal(h.coeffs, g.coeffs)


def test_germ_file_errors():
    with pytest.raises(ValueError):
        read_germ("d = 2\nlow = 0\ntrunc = 0\n")
    with pytest.raises(ValueError):
        read_germ("z0 = 0\nd = 2\nlow = 0\ntrunc = 0\npower 0\n1 0\n")
    with pytest.raises(ValueError):
        read_germ("z0 = 0\nd = 1\nlow = 0\ntrunc = 0\npower 5\n1\n")
