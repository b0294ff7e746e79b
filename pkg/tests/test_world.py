import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetuav.config import ScenarioConfig
from hetuav.world import (FleetState, boundary_violation, clamp_to_area, collision_pairs, fleet_energy_objective,
                          propulsion_power, slot_energy, step_kinematics)
from oracles import energy_double_loop, propulsion_power_ref

CFG = ScenarioConfig()
ROTOR = dict(P0=CFG.P0, P1=CFG.P1, v_tip=CFG.v_tip, v0=CFG.v0, d0=CFG.d0, rho=CFG.rho_a, s=CFG.s_sol,
             A=CFG.disc_area)


def test_step_kinematics_examples():
    assert np.allclose(step_kinematics((0, 0), 0.0, 1.234), (0, 0))
    assert np.allclose(step_kinematics((10, 10), 5.0, 0.0), (15, 10))
    assert np.allclose(step_kinematics((10, 10), 5.0, np.pi / 2), (10, 15), atol=1e-12)


def test_fleet_altitude_fixed():
    f = FleetState([[1, 2], [3, 4]], altitude=100.0)
    assert np.all(f.pos[:, 2] == 100.0)


@pytest.mark.parametrize("pos,D,want", [((0, 0), 400, False), ((400, 400), 400, False), ((401, 200), 400, True)])
def test_boundary_violation(pos, D, want):
    assert boundary_violation(pos, D) is want


def test_clamp_to_area():
    assert np.array_equal(clamp_to_area((-5, 200), 400), (0, 200))
    assert np.array_equal(clamp_to_area((450, 450), 400), (400, 400))
    assert np.array_equal(clamp_to_area((100, 100), 400), (100, 100))


def test_collision_pairs_examples():
    assert collision_pairs([[0, 0], [0, 0]], 10) == {(0, 1)}
    assert collision_pairs([[0, 0], [10, 0]], 10) == set()
    assert collision_pairs([[0, 0], [5, 0], [100, 0]], 10) == {(0, 1)}


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=6), st.randoms())
def test_collision_pairs_order_independent(points, rnd):
    perm = list(range(len(points)))
    rnd.shuffle(perm)
    base = collision_pairs(points, 10.0)
    shuffled = collision_pairs([points[p] for p in perm], 10.0)
    mapped = {tuple(sorted((perm[a], perm[b]))) for a, b in shuffled}
    assert mapped == base


def test_propulsion_power_hover_exact():
    assert propulsion_power(0.0, CFG) == CFG.P0 + CFG.P1


def test_propulsion_power_at_v0():
    v0 = CFG.v0
    want = (CFG.P0 * (1 + 3 * v0**2 / CFG.v_tip**2) + CFG.P1 * np.sqrt(np.sqrt(1.25) - 0.5)
            + 0.5 * CFG.d0 * CFG.rho_a * CFG.s_sol * CFG.disc_area * v0**3)
    assert propulsion_power(v0, CFG) == pytest.approx(want, rel=1e-12)


def test_propulsion_power_matches_reference():
    for v in np.linspace(0, 25, 26):
        assert propulsion_power(v, CFG) == pytest.approx(propulsion_power_ref(v, **ROTOR), rel=1e-12)


def test_propulsion_power_increases_at_high_speed():
    assert propulsion_power(25.0, CFG) > propulsion_power(20.0, CFG)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 25))
def test_propulsion_power_positive(v):
    assert propulsion_power(v, CFG) > 0


def test_slot_energy():
    assert slot_energy(0.0, 1.0, CFG) == CFG.P0 + CFG.P1
    assert slot_energy(10.0, 2.0, CFG) == pytest.approx(2 * propulsion_power(10.0, CFG), rel=1e-15)
    with pytest.raises(ValueError):
        slot_energy(1.0, 0.0, CFG)


def test_fleet_energy_examples():
    assert fleet_energy_objective([[0.0]], CFG) == pytest.approx((CFG.P0 + CFG.P1) * CFG.slot_duration)
    row = [0.0, 4.0, 25.0]
    assert fleet_energy_objective([row, row], CFG) == pytest.approx(2 * fleet_energy_objective([row], CFG), rel=1e-15)


def test_fleet_energy_matches_double_loop():
    rng = np.random.default_rng(3)
    speeds = rng.uniform(0, 25, size=(4, 30))
    got = fleet_energy_objective(speeds, CFG, dt=0.5)
    want = energy_double_loop(speeds.tolist(), 0.5, **ROTOR)
    assert abs(got - want) <= 1e-12 * abs(want)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.floats(0, 25), min_size=3, max_size=3), min_size=2, max_size=4))
def test_fleet_energy_additive(speeds):
    total = fleet_energy_objective(speeds, CFG)
    parts = sum(fleet_energy_objective([s], CFG) for s in speeds)
    by_slot = sum(fleet_energy_objective([[r[t]] for r in speeds], CFG) for t in range(3))
    assert total == pytest.approx(parts, rel=1e-12)
    assert total == pytest.approx(by_slot, rel=1e-12)
