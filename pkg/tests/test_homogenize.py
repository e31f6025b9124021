"""Limit lines, the uniform O(eps) bound, non-uniqueness and both BVPs."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
from maupertuis import dynamics as D
from maupertuis import homogenize as H
from maupertuis import potential as P
from maupertuis import quadrature as Q
from maupertuis.errors import BracketFailure, NoRoot


def test_limit_solution(cos1d):
    assert H.limit_solution(P.zero(), 0.5, 0.0).slope == pytest.approx(1.0)
    line = H.limit_solution(P.zero(), 2.0, 1.0)
    assert (line.slope, line.intercept) == pytest.approx((2.0, 1.0))
    assert H.limit_solution(cos1d, 1.0, 0.0).slope == pytest.approx(1 / frozen.SIGMA_COS1D[1.0], rel=1e-13)
    assert line(np.array([0.0, 1.0])) == pytest.approx([1.0, 3.0])


def test_zero_potential_has_no_error():
    rep = H.ivp_convergence_experiment(P.zero(), 0.7, 0.2, [0.1, 0.05])
    assert np.all(rep.sup_error <= 1e-12)


def test_rate_and_bound(cos1d):
    eps = [0.1, 0.05, 0.025, 0.0125]
    rep = H.ivp_convergence_experiment(cos1d, 1.0, 0.0, eps)
    assert 0.8 <= rep.slope <= 1.2
    bound = 2 / math.sqrt(2.0) * np.array(eps) / frozen.SIGMA_COS1D[1.0]
    assert np.allclose(rep.bound, bound, rtol=1e-12)
    assert np.all(rep.sup_error <= bound + 1e-7)
    assert np.all(rep.within_bound)
    assert rep.horizon == pytest.approx(10 * frozen.SIGMA_COS1D[1.0])
    rows = list(rep.rows())
    assert set(rows[0]) == {"eps", "sup_error", "bound", "ratio"}


def test_eps_list_validation(cos1d):
    with pytest.raises(ValueError):
        H.ivp_convergence_experiment(cos1d, 1.0, 0.0, [0.05, 0.1])
    with pytest.raises(ValueError):
        H.ivp_convergence_experiment(cos1d, 1.0, 0.0, [0.1, -0.05])


def test_fit_slope():
    x = np.array([1.0, 0.5, 0.25])
    assert H.fit_loglog_slope(x, 3 * x**2) == pytest.approx(2.0)
    assert math.isnan(H.fit_loglog_slope(x, np.zeros(3)))


def test_nonuniqueness_boundary_case(cos1d):
    seq = H.nonuniqueness_sequence(cos1d, 1.0, 1.0, 0.5)
    assert seq.level_point == pytest.approx(1.0)
    assert seq.eps(3) == pytest.approx(1.0 / 4.0)


def test_nonuniqueness_level_point(cos1d):
    seq = H.nonuniqueness_sequence(cos1d, 1.0, 1.0, 0.3)
    # (cos 2 pi x - 1)/2 = -0.2
    assert seq.level_point == pytest.approx(math.acos(0.6) / (2 * math.pi), abs=1e-13)
    assert 0 < seq.level_point < 0.5


def test_nonuniqueness_energy_exact(cos1d):
    for E in (0.5, 0.25, 0.3):
        seq = H.nonuniqueness_sequence(cos1d, 1.0, 1.0, E)
        for k in range(1, 41):
            assert seq.initial_energy(cos1d, k) == pytest.approx(E, abs=1e-12)
            p = D.initial_momentum_for_energy(cos1d, E, 1.0, seq.eps(k))
            assert p == pytest.approx(1.0, abs=1e-12)


def test_nonuniqueness_distinct_limits(cos1d):
    a = H.nonuniqueness_sequence(cos1d, 1.0, 1.0, 0.5)
    b = H.nonuniqueness_sequence(cos1d, 1.0, 1.0, 0.25)
    assert a.slope == pytest.approx(1 / frozen.SIGMA_COS1D[0.5], rel=1e-13)
    assert b.slope == pytest.approx(1 / frozen.SIGMA_COS1D[0.25], rel=1e-13)
    assert abs(a.slope - b.slope) > 0.1


def test_nonuniqueness_negative_start(cos1d):
    seq = H.nonuniqueness_sequence(cos1d, -1.0, 1.0, 0.3)
    for k in (1, 5, 20):
        assert seq.eps(k) > 0
        assert seq.initial_energy(cos1d, k) == pytest.approx(0.3, abs=1e-12)


def test_nonuniqueness_rejects_inadmissible(cos1d):
    with pytest.raises(NoRoot):
        H.nonuniqueness_sequence(cos1d, 1.0, 1.0, 0.6)
    with pytest.raises(NoRoot):
        H.nonuniqueness_sequence(cos1d, 1.0, 3.0, 0.1)
    with pytest.raises(ValueError):
        H.nonuniqueness_sequence(cos1d, 0.0, 1.0, 0.3)


def test_slope_family(cos1d):
    fam = H.slope_family(cos1d, 1.0)
    assert fam.inf_slope_zero
    assert (fam.lower, fam.upper) == (0.0, 0.5)
    assert np.all(np.diff(fam.slopes) > 0) and np.all(fam.slopes > 0)
    assert not H.slope_family(cos1d, 2.0).inf_slope_zero
    # constant V: only E = p_a^2/2 has a level point
    free = H.slope_family(P.zero(), 1.0)
    assert free.upper == 0.5
    assert list(free.energies) == [0.5]
    assert free.slopes[-1] == pytest.approx(1.0)


def test_bvp_fixed_energy(cos1d):
    r = H.bvp_fixed_energy(P.zero(), 0.5, 0.0, 1.0, 0.1)
    assert r.arrival_time == pytest.approx(1.0) and r.limit_time == pytest.approx(1.0)
    r = H.bvp_fixed_energy(cos1d, 1.0, 0.0, 1.0, 0.05)
    assert r.deviation <= 0.1 / math.sqrt(2) + 1e-8


def test_bvp_fixed_energy_rate(cos1d):
    # q_b chosen off the lattice so the deviation is not identically zero
    eps = np.array([0.1, 0.05, 0.025, 0.0125])
    dev = [H.bvp_fixed_energy(cos1d, 1.0, 0.0, 1.0 + 0.3 * e, e).deviation for e in eps]
    assert H.fit_loglog_slope(eps, dev) == pytest.approx(1.0, abs=0.2)


@given(E=st.floats(0.1, 4), eps=st.floats(0.01, 0.2), q_b=st.floats(0.2, 3))
def test_equicontinuity_surrogate(E, eps, q_b):
    V = P.cos1d()
    r = H.bvp_fixed_energy(V, E, 0.0, q_b, eps)
    a = D.solve_1d_closed_form(V, E, eps, 0.0, r.arrival_time)
    b = D.solve_1d_closed_form(V, E, eps, 0.0, r.limit_time)
    assert abs(a - b) <= math.sqrt(2 * (E - V.min_value)) * r.deviation + 1e-12


def test_bvp_fixed_time_free():
    assert H.bvp_fixed_time(P.zero(), 1.0, 0.0, 1.0, 0.1) == pytest.approx(0.5, abs=1e-9)
    assert H.bvp_fixed_time(P.zero(), 2.0, 0.0, 1.0, 0.1) == pytest.approx(0.125, abs=1e-9)


def test_bvp_fixed_time_consistency(cos1d):
    T = frozen.SIGMA_COS1D[1.0]
    lo, hi = H.fixed_time_energy_bounds(cos1d, T, 0.0, 1.0)
    k = 0.5 / T**2
    for eps in (0.1, 0.05, 0.01, 0.005):
        E = H.bvp_fixed_time(cos1d, T, 0.0, 1.0, eps)
        assert abs(Q.tau_eps(cos1d, E, eps, 0.0, 1.0) - T) <= 1e-10
        assert lo <= E <= hi
        # the looser interval [0, k - min V] also holds
        assert 0 < E <= k - cos1d.min_value
    assert E == pytest.approx(1.0, abs=1e-3)


def test_bvp_fixed_time_bracket_failure(cos1d):
    with pytest.raises(BracketFailure):
        H.bvp_fixed_time(cos1d, 1e9, 0.0, 1.0, 0.1)
