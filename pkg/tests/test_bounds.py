import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rolloutid.bounds import (
    check_proposition,
    corollary2_bound,
    proposition_threshold,
    theorem1_bound,
)
from rolloutid.errors import InvalidInputError
from rolloutid.experiments import random_system, rescale_to_radius
from rolloutid.lti import NoiseConfig, SystemModel

NOISY = NoiseConfig(1.0, 0.2, 0.5)


def test_zero_noise_bound_is_zero(newton):
    assert theorem1_bound(newton, NoiseConfig(1.0), 10, 500, 0.1).bound_value == 0.0


def test_c1_hand_value(newton):
    # ||Dv|| = 1, m = l = 1, T = 10, delta = 0.05
    rep = theorem1_bound(newton, NOISY, 10, 500, 0.05)
    assert rep.C1 == pytest.approx(8 * math.sqrt(2 * 10 * 11 * 2 * math.log(5400)), rel=1e-12)
    assert rep.C1 == pytest.approx(491.9, abs=0.05)


def test_theorem1_threshold_and_c2(newton):
    rep = theorem1_bound(newton, NOISY, 10, 100, 0.1)
    assert rep.N_threshold == math.ceil(80 + 4 * 7 * math.log(300))
    assert not rep.valid
    # F of the newton system is [0, 0, 0.2, ..., 1.6]
    F_norm = math.sqrt(sum((0.2 * k) ** 2 for k in range(9)))
    assert rep.F_norm == pytest.approx(F_norm, rel=1e-12)
    cubic = 1000 / 3 + 50 + 10 / 6
    assert rep.C2 == pytest.approx(16 * F_norm * math.sqrt(cubic * 4 * math.log(2700)), rel=1e-12)


def test_quarter_ratio(unstable):
    a = theorem1_bound(unstable, NOISY, 10, 100, 0.1).bound_value
    b = theorem1_bound(unstable, NOISY, 10, 400, 0.1).bound_value
    assert b / a == pytest.approx(0.5, rel=1e-12)


def test_corollary2_example(newton):
    noise = NoiseConfig(1.0, 0.0, 0.0, 1.0)
    rep = corollary2_bound(newton, noise, 4, 300, 0.1)
    # H = [C, CA, CA^2, CA^3] = [1 0 1 0.2 1 0.4 1 0.6]
    H_norm = math.sqrt(4 + 0.04 + 0.16 + 0.36)
    C0 = 16 * H_norm * math.sqrt(4 * 5 * 3 * math.log(36 * 4 / 0.1))
    assert rep.H_norm == pytest.approx(H_norm, rel=1e-12)
    assert rep.bound_value == pytest.approx(C0 / math.sqrt(300), rel=1e-12)
    assert rep.N_threshold == math.ceil(32 + 4 * 9 * math.log(160))


def test_corollary2_without_initial_state(newton):
    rep = corollary2_bound(newton, NOISY, 10, 500, 0.1)
    lg = math.log(3600)
    assert rep.C1 == pytest.approx(8 * math.sqrt(2 * 110 * 2 * lg), rel=1e-12)
    assert rep.bound_value == pytest.approx((0.5 * rep.C1 + 0.2 * rep.C2) / math.sqrt(500), rel=1e-12)


def test_corollary2_monotone_in_N(unstable):
    noise = NoiseConfig(1.0, 0.2, 0.5, 1.0)
    vals = [corollary2_bound(unstable, noise, 10, N, 0.1).bound_value for N in (50, 100, 200, 800)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.5, 2.0])
def test_delta_range(newton, delta):
    with pytest.raises(InvalidInputError):
        theorem1_bound(newton, NOISY, 10, 100, delta)
    with pytest.raises(InvalidInputError):
        corollary2_bound(newton, NOISY, 10, 100, delta)


def test_constants_monotone(unstable):
    noise = NoiseConfig(1.0, 0.2, 0.5, 1.0)
    by_T = [corollary2_bound(unstable, noise, T, 1000, 0.1) for T in (3, 5, 8)]
    for key in ("C0", "C1", "C2"):
        vals = [getattr(r, key) for r in by_T]
        assert vals[0] < vals[1] < vals[2]
    by_delta = [corollary2_bound(unstable, noise, 5, 1000, d) for d in (0.01, 0.1, 0.5)]
    for key in ("C0", "C1", "C2"):
        vals = [getattr(r, key) for r in by_delta]
        assert vals[0] > vals[1] > vals[2]


def test_c2_grows_with_radius():
    base = random_system(0)
    c2 = [theorem1_bound(rescale_to_radius(base, rho), NOISY, 6, 500, 0.1).C2 for rho in (1.0, 2.0, 4.0)]
    assert c2[0] < c2[1] < c2[2]


def test_proposition_thresholds(newton, unstable):
    lg = math.log(10 / 0.1)
    assert proposition_threshold("P1", newton, 10, 0.1) == math.ceil(80 + 16 * lg)
    assert proposition_threshold("P2", newton, 10, 0.1) == math.ceil(4 * lg)
    assert proposition_threshold("P3", unstable, 10, 0.1) == math.ceil(24 * lg)
    assert proposition_threshold("P4", unstable, 10, 0.1) == math.ceil(24 * lg)


def test_p2_without_measurement_noise(newton):
    chk = check_proposition("P2", newton, NoiseConfig(1.0, 0.2, 0.0), 10, 20, 0.1, 10)
    assert chk.hold_fraction == 1.0
    assert max(chk.lhs) == 0.0


def test_p1_example(newton):
    N = proposition_threshold("P1", newton, 10, 0.1)
    chk = check_proposition("P1", newton, NOISY, 10, N, 0.1, 200, seed=1)
    assert chk.trials == 200 and len(chk.lhs) == 200
    assert chk.threshold_inequality_satisfied
    assert chk.hold_fraction >= 0.9


def test_p3_example(unstable):
    chk = check_proposition("3", unstable, NOISY, 10, 400, 0.1, 200, seed=2)
    assert chk.proposition_id == "P3"
    assert chk.hold_fraction >= 0.9


def test_check_below_threshold_still_runs(newton):
    chk = check_proposition("P1", newton, NOISY, 10, 30, 0.1, 5)
    assert not chk.threshold_inequality_satisfied
    assert chk.trials == 5


def test_check_rejects_bad_input(newton):
    with pytest.raises(InvalidInputError):
        check_proposition("P1", newton, NOISY, 10, 200, 0.1, 0)
    with pytest.raises(InvalidInputError):
        check_proposition("P7", newton, NOISY, 10, 200, 0.1, 3)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(1, 12),
    st.floats(1e-4, 0.99),
    st.integers(1, 10**6),
    st.integers(1, 10**6),
    st.booleans(),
)
def test_bound_times_sqrt_n_constant(seed, T, delta, N1, N2, cor2):
    r = np.random.default_rng(seed)
    sys = SystemModel.from_matrices(r.standard_normal((2, 2)) * 0.5, r.standard_normal((2, 1)), r.standard_normal((1, 2)))
    noise = NoiseConfig(r.uniform(0.1, 2), r.uniform(0, 1), r.uniform(0, 1), r.uniform(0, 1))
    fn = corollary2_bound if cor2 else theorem1_bound
    a = fn(sys, noise, T, N1, delta).bound_value * math.sqrt(N1)
    b = fn(sys, noise, T, N2, delta).bound_value * math.sqrt(N2)
    assert a == pytest.approx(b, rel=1e-12)
