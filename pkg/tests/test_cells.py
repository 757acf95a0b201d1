import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spike_energetics import cells
from spike_energetics.cells import (CELL_IDS, CellState, all_cells, ionic_currents, make_state, registry,
                                    resting_state, state_derivative, steady_state_vector)
from spike_energetics.kinetics import Family

REST_CELL1 = -70.38698766012324


@pytest.mark.parametrize(
    "cell_id, expected",
    [
        (9, dict(g_Na=3.0, g_K=5.0, g_T=5.0, E_T=0.0, C=1.0)),
        (5, dict(g_leak=0.038, g_Na=58.0, g_K=3.9, g_M=0.0787, tau_max=502.0)),
        (10, dict(E_leak=-65.0, E_Na=55.0, phi=5.0)),
    ],
)
def test_registry_entries(cell_id, expected):
    p = registry(cell_id)
    for name, value in expected.items():
        assert getattr(p, name) == pytest.approx(value), name


@pytest.mark.parametrize("bad", [0, 11, -1, 99])
def test_unknown_cell_rejected(bad):
    with pytest.raises(ValueError):
        registry(bad)


def test_registry_is_complete():
    assert CELL_IDS == tuple(range(1, 11))
    fams = [p.family for p in all_cells()]
    assert fams.count(Family.NEOCORTICAL) == 8
    assert registry(9).family is Family.TCR
    assert registry(10).family is Family.RHI


def test_calcium_reversal_only_with_l_current():
    for p in all_cells():
        if p.family is Family.NEOCORTICAL:
            assert (p.E_Ca == 120.0) == (p.g_L > 0)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        dataclasses.replace(registry(1), C=0.0)
    with pytest.raises(ValueError):
        dataclasses.replace(registry(1), g_K=-1.0)


@pytest.mark.parametrize("cell_id", CELL_IDS)
def test_sodium_current_vanishes_at_reversal(cell_id):
    p = registry(cell_id)
    rng = np.random.default_rng(cell_id)
    y = np.r_[p.E_Na, rng.uniform(0, 1, len(p.state_names) - 1)]
    assert ionic_currents(CellState(p, y)).I_Na == pytest.approx(0.0, abs=1e-12)


def test_unit_driving_force_full_activation():
    p = registry(1)
    s = make_state(p, p.E_Na + 1.0, m=1.0, h=1.0)
    assert ionic_currents(s).I_Na == pytest.approx(p.g_Na)


def test_make_state_rejects_foreign_gate():
    with pytest.raises(ValueError):
        make_state(registry(9), -60.0, m=0.5)


@pytest.mark.parametrize("cell_id", CELL_IDS)
@settings(max_examples=20, deadline=None)
@given(V=st.floats(-100, 60), delta=st.floats(-5, 5))
def test_derivative_linear_in_stimulus(cell_id, V, delta):
    p = registry(cell_id)
    s = make_state(p, V)
    d0 = state_derivative(s, I_stim=0.0)
    d1 = state_derivative(s, I_stim=delta)
    assert d1[0] - d0[0] == pytest.approx(delta / p.C, rel=1e-9, abs=1e-9)
    np.testing.assert_array_equal(d1[1:], d0[1:])


@pytest.mark.parametrize("cell_id", CELL_IDS)
def test_voltage_derivative_is_current_balance(cell_id):
    p = registry(cell_id)
    s = make_state(p, -55.0)
    total = ionic_currents(s).total()
    assert state_derivative(s, I_stim=1.0)[0] == pytest.approx((1.0 - total) / p.C)


@pytest.mark.parametrize("cell_id", CELL_IDS)
def test_resting_state_is_fixed_point(cell_id):
    rest = resting_state(registry(cell_id))
    assert rest.converged
    assert np.linalg.norm(state_derivative(rest)) < 1e-6


def test_cell1_resting_golden():
    assert resting_state(registry(1)).V == pytest.approx(REST_CELL1, abs=1e-6)


@pytest.mark.parametrize("cell_id", CELL_IDS)
def test_rest_gates_at_steady_state(cell_id):
    p = registry(cell_id)
    rest = resting_state(p)
    np.testing.assert_allclose(rest.y, steady_state_vector(p, rest.V), atol=1e-6)


@pytest.mark.parametrize("cell_id", CELL_IDS)
def test_rest_independent_of_start(cell_id):
    p = registry(cell_id)
    a, b = resting_state(p, V0=-80.0), resting_state(p, V0=-60.0)
    np.testing.assert_allclose(a.y, b.y, atol=1e-4)


def test_cell9_resting_currents_balance():
    rest = resting_state(registry(9))
    assert ionic_currents(rest).total() == pytest.approx(0.0, abs=1e-8)


def test_inactive_gates_do_not_matter():
    p = registry(1)  # no L-current
    s = make_state(p, -60.0)
    moved = s.copy()
    names = p.state_names
    moved.y[names.index("q")] = 0.7
    moved.y[names.index("r")] = 0.3
    assert ionic_currents(moved) == ionic_currents(s)
    np.testing.assert_array_equal(state_derivative(moved)[[0, 1, 2, 3]], state_derivative(s)[[0, 1, 2, 3]])


def test_default_rest_is_a_copy():
    p = registry(3)
    a = cells.default_resting_state(p)
    a.y[0] = 0.0
    assert cells.default_resting_state(p).V != 0.0


def test_gate_view_lists_active_gates():
    assert tuple(resting_state(registry(5)).gates) == ("m", "h", "n", "p")
    assert tuple(resting_state(registry(9)).gates) == ("h", "r")
