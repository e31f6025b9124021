"""Verlet integration and the exact 1D travel-time inverse."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
import oracles
from maupertuis import dynamics as D
from maupertuis import potential as P
from maupertuis import quadrature as Q
from maupertuis.errors import StepTooLarge


def test_initial_momentum(cos1d):
    assert D.initial_momentum_for_energy(P.zero(), 0.5, 0.3, 0.1) == pytest.approx(1.0)
    assert D.initial_momentum_for_energy(cos1d, 1.0, 0.05, 0.1) == pytest.approx(2.0)
    k = 7
    eps = 1.0 / (k + 0.25)
    assert D.initial_momentum_for_energy(cos1d, 0.8, 1.0, eps) == pytest.approx(
        math.sqrt(2 * (0.8 - cos1d.value(0.25))), rel=1e-12)


def test_energy(cos1d):
    assert D.energy(P.zero(), 0.1, 0.3, 1.0) == pytest.approx(0.5)
    assert D.energy(cos1d, 0.1, 0.05, 2.0) == pytest.approx(1.0)


def test_free_flight():
    tr = D.integrate_verlet(P.zero(), 0.1, [0.0], [1.0], 2.0, 0.001)
    assert tr.q[-1, 0] == pytest.approx(2.0, abs=1e-13)
    assert tr.t[0] == 0.0 and tr.t[-1] == 2.0
    assert np.all(np.diff(tr.t) > 0)


def test_step_guard(cos1d):
    with pytest.raises(StepTooLarge):
        D.integrate_verlet(cos1d, 0.1, [0.0], [1.0], 1.0, 0.1 / 49)
    D.integrate_verlet(cos1d, 0.1, [0.0], [1.0], 0.01, 0.1 / 50)


def _verlet_endpoint_error(V, eps, dt, t_end=1.0):
    p0 = D.initial_momentum_for_energy(V, 1.0, 0.0, eps)
    tr = D.integrate_verlet(V, eps, [0.0], [p0], t_end, dt)
    return abs(tr.q[-1, 0] - D.solve_1d_closed_form(V, 1.0, eps, 0.0, t_end))


def test_verlet_matches_closed_form(cos1d):
    eps = 0.1
    coarse = _verlet_endpoint_error(cos1d, eps, eps / 200)
    fine = _verlet_endpoint_error(cos1d, eps, eps / 2000)
    # global error is second order in dt; 1e-6 at t = 1 needs dt ~ eps/2000
    assert coarse / fine == pytest.approx(100, rel=0.05)
    assert fine <= 1e-6


def test_verlet_energy_drift_is_second_order(cos1d):
    eps = 0.1
    p0 = D.initial_momentum_for_energy(cos1d, 1.0, 0.0, eps)
    drifts = [D.integrate_verlet(cos1d, eps, [0.0], [p0], 10.0, dt).max_energy_drift
              for dt in (eps / 50, eps / 100, eps / 200)]
    assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.2)
    slope = np.polyfit(np.log([eps / 50, eps / 100, eps / 200]), np.log(drifts), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_verlet_2d_conserves_energy(cos2d):
    eps = 0.2
    q0 = np.array([0.1, 0.2])
    p0 = np.array([1.0, 0.4])
    tr = D.integrate_verlet(cos2d, eps, q0, p0, 3.0, eps / 200)
    assert tr.dim == 2
    assert tr.max_energy_drift < 1e-4


def test_closed_form_free():
    assert D.solve_1d_closed_form(P.zero(), 0.5, 0.1, 0.0, 3.0) == pytest.approx(3.0, abs=1e-12)


def test_closed_form_against_dop853(cos1d):
    q = D.solve_1d_closed_form(cos1d, 1.0, 0.02, 0.0, 1.0)
    assert q == pytest.approx(frozen.POSITION_COS1D_EPS002, abs=1e-9)


def test_closed_form_dense_against_dop853(cos1d):
    t = np.linspace(0, 2, 201)
    sol = oracles.dop853_cos1d(1.3, 0.07, 0.21, 2.0, t_eval=t)
    q = D.solve_1d_closed_form(cos1d, 1.3, 0.07, 0.21, t)
    assert np.max(np.abs(q - sol.y[0])) < 1e-9


def test_round_trip(cos1d):
    rng = np.random.default_rng(3)
    t = rng.uniform(0, 5, 50)
    q = D.solve_1d_closed_form(cos1d, 0.7, 0.03, 0.4, t)
    assert np.max(np.abs(Q.t_eps(cos1d, 0.7, 0.03, 0.4, q) - t)) <= 1e-10


@given(E=st.floats(0.01, 10), eps=st.floats(0.005, 0.3), q_a=st.floats(-1, 1))
def test_monotone_and_energy_conserving(E, eps, q_a):
    V = P.cos1d()
    tr = D.closed_form_trajectory(V, E, eps, q_a, np.linspace(0, 3, 64))
    assert np.all(np.diff(tr.q[:, 0]) > 0)
    assert np.max(np.abs(tr.energy - E)) <= 1e-9


def test_trajectory_csv(tmp_path, cos2d):
    tr = D.integrate_verlet(cos2d, 0.2, [0.0, 0.0], [1.0, 0.0], 0.01, 0.001)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,q1,q2,p1,p2,E"
    assert len(lines) == len(tr.t) + 1
    assert float(lines[-1].split(",")[0]) == 0.01
