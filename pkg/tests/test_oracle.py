import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from cylres import Profile
from cylres.oracle import (bound_state_count, jost_half, jost_w, scattering_1d, scattering_half,
                           transmission_denominator, zeros_1d)

profiles = st.lists(st.floats(-20, 20), min_size=1, max_size=4).map(
    lambda vs: Profile.steps(list(np.linspace(0.0, 1.0, len(vs) + 1)), vs))
real_k = st.floats(0.05, 15.0)


@given(profiles, real_k)
def test_full_line_flux_conservation(prof, k):
    RL, T, RR = scattering_1d(k, prof)
    assert abs(RL) ** 2 + abs(T) ** 2 == pytest.approx(1.0, abs=1e-10)
    assert abs(RR) ** 2 + abs(T) ** 2 == pytest.approx(1.0, abs=1e-10)


@given(profiles, real_k)
def test_half_line_scattering_is_a_phase(prof, k):
    assert abs(scattering_half(k, prof)) == pytest.approx(1.0, abs=1e-10)


@given(st.tuples(st.floats(-5, 5), st.floats(-3, 3)).map(lambda t: complex(*t)))
def test_free_jost_functions(k):
    assume(abs(k) > 1e-3)
    free = Profile.step(0.0)
    assert jost_w(k, free) == pytest.approx(2j * k)
    assert jost_half(k, free) == pytest.approx(1.0)
    assert transmission_denominator(k, free) == pytest.approx(1.0)


@given(st.floats(0.5, 200.0))
def test_square_well_bound_states(v0):
    # a well of depth v0 and width 1 binds ceil(sqrt(v0)/pi) states
    x = math.sqrt(v0) / math.pi
    assume(abs(x - round(x)) > 1e-3)
    assert bound_state_count(Profile.step(-v0)) == math.ceil(x)


def test_barrier_binds_nothing():
    assert bound_state_count(Profile.step(4.0)) == 0


def test_zeros_are_zeros_and_reflect():
    prof = Profile.step(4.0)
    zs = zeros_1d(prof, 12.0)
    assert len(zs) >= 4
    for k, n in zs:
        assert n == 1
        assert k.imag < 0
        assert abs(jost_w(k, prof)) < 1e-9 * max(1.0, abs(k))
        # V real: zeros come in pairs k, -conj(k)
        assert min(abs(q + k.conjugate()) for q, _ in zs) < 1e-9
