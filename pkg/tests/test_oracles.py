"""
The frozen reference values reproduce from their independent sources.

Elliptic-integral closed forms are cross-checked against mpmath
quadrature, so neither source alone is trusted.
"""

import math

import mpmath as mp
import numpy as np
import pytest

import frozen
import oracles


@pytest.mark.parametrize("E", sorted(frozen.SIGMA_COS1D))
def test_sigma_closed_form_matches_mpmath_quadrature(E):
    direct = oracles.sigma_mp(((1, 0.5),), E)
    assert oracles.sigma_cos1d(E) == pytest.approx(direct, rel=1e-14)
    assert frozen.SIGMA_COS1D[E] == pytest.approx(float(oracles.sigma_cos1d_mp(E)), rel=1e-15)


@pytest.mark.parametrize("k", sorted(frozen.SIGMA_COS1D_SMALL))
def test_sigma_small_energy_frozen(k):
    assert frozen.SIGMA_COS1D_SMALL[k] == pytest.approx(float(oracles.sigma_cos1d_mp(10.0**-k)), rel=1e-15)
    assert oracles.sigma_cos1d(10.0**-k) == pytest.approx(frozen.SIGMA_COS1D_SMALL[k], rel=1e-13)


@pytest.mark.parametrize("alpha", sorted(frozen.P_COS1D))
def test_p_closed_form_matches_mpmath_quadrature(alpha):
    assert oracles.p_cos1d(alpha) == pytest.approx(oracles.p_mp(((1, 0.5),), alpha), rel=1e-14)
    assert frozen.P_COS1D[alpha] == pytest.approx(oracles.p_cos1d(alpha), rel=1e-15)


def test_p_crit_closed_form():
    assert oracles.p_crit_mp(((1, 0.5),)) == pytest.approx(oracles.P_CRIT_COS1D, rel=1e-14)


def test_two_mode_values_frozen():
    V, maxima = oracles._mp_potential(frozen.TWO_MODE)
    assert [float(x) for x in maxima] == pytest.approx(frozen.TWO_MODE_MAXIMIZERS, abs=1e-15)
    for E, s in frozen.TWO_MODE_SIGMA.items():
        assert oracles.sigma_mp(frozen.TWO_MODE, E) == pytest.approx(s, rel=1e-15)
    for a, p in frozen.TWO_MODE_P.items():
        assert oracles.p_mp(frozen.TWO_MODE, a) == pytest.approx(p, rel=1e-15)
    assert oracles.p_crit_mp(frozen.TWO_MODE) == pytest.approx(frozen.TWO_MODE_P_CRIT, rel=1e-15)
    assert oracles.travel_time_mp(frozen.TWO_MODE, 1.0, 0.1, 0.03, 0.77) == pytest.approx(
        frozen.TWO_MODE_TRAVEL, rel=1e-15)
    x0 = min((mp.mpf(i) / 2000 for i in range(2000)), key=V)
    xmin = mp.findroot(lambda x: mp.diff(V, x), x0)
    assert float(V(xmin)) == pytest.approx(frozen.TWO_MODE_MIN, abs=1e-14)


def test_dop853_action_frozen():
    sol = oracles.dop853_cos1d(1.0, 0.1, 0.0, 1.0)
    assert sol.y[2, -1] == pytest.approx(frozen.ACTION_COS1D_T1, abs=1e-10)
    assert sol.y[0, -1] == pytest.approx(frozen.POSITION_COS1D_T1, abs=1e-10)
    # energy conservation checks the oracle itself
    q, p = sol.y[0], sol.y[1]
    E = 0.5 * p**2 + 0.5 * (np.cos(2 * math.pi * q / 0.1) - 1.0)
    assert np.max(np.abs(E - 1.0)) < 1e-11
