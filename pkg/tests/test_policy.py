import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boca.gp import TrainingSet, fit, predict_target
from boca.kernels import KernelSpec
from boca.policy import (
    C_MAX,
    C_MIN,
    BocaState,
    adapt_multiplier,
    beta_t,
    candidate_fidelities,
    cheapest,
    farthest_fidelity,
    fidelity_grid,
    filter_conditions,
    gamma_threshold,
    select_next,
    state_beta,
    ucb,
    update,
)

from oracles import filter_by_hand


def quad_cost(Z):
    return 0.1 + np.atleast_2d(Z)[:, 0] ** 2


def make_state(points=(), y=(), spec=None, noise=0.01, mean=0.0, grid=None, c=1.0, **kw):
    spec = spec or KernelSpec(1.0, (0.2,), (0.3,))
    p, d = spec.p, spec.d
    pts = np.asarray(points, dtype=float).reshape(-1, p + d)
    data = TrainingSet(pts[:, :p], pts[:, p:], np.asarray(y, dtype=float))
    grid = fidelity_grid(p, 11) if grid is None else grid
    return BocaState(fit(spec, data, noise, mean), np.ones(p), quad_cost, grid, c=c, **kw)


def test_beta_values():
    assert beta_t(1, 1, 1.0) == pytest.approx(0.5 * math.log(3), abs=1e-15)
    assert beta_t(1, 1, 1.0) == pytest.approx(0.5493061443340549, abs=1e-15)
    assert beta_t(7, 4, 2.5) == 2 * beta_t(7, 2, 2.5)
    with pytest.raises(ValueError):
        beta_t(0, 1, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10_000), st.integers(1, 6), st.floats(0.1, 100))
def test_beta_increasing_in_t(t, d, ell):
    assert beta_t(t + 1, d, ell) > beta_t(t, d, ell)


def test_fidelity_grid_includes_top_and_corners():
    g = fidelity_grid(2, 5)
    assert g.shape == (25, 2)
    assert any(np.all(g == 1.0, axis=1))
    assert any(np.all(g == 0.0, axis=1))
    np.testing.assert_array_equal(farthest_fidelity(np.ones(3)), np.zeros(3))


def test_ucb_prior_slice():
    state = make_state(spec=KernelSpec(2.0, (0.2,), (0.3,)))
    vals = ucb(state, np.linspace(0, 1, 7)[:, None])
    np.testing.assert_allclose(vals, math.sqrt(state_beta(state) * 2.0), rtol=1e-14)


def test_ucb_noiseless_at_training_point():
    state = make_state([[1.0, 0.4]], [2.0], noise=1e-10)
    assert ucb(state, np.array([[0.4]]))[0] == pytest.approx(2.0, abs=1e-4)


def test_ucb_composes_prediction():
    rng = np.random.default_rng(0)
    state = make_state(rng.uniform(size=(6, 2)), rng.normal(size=6))
    x = rng.uniform(size=(10, 1))
    mu, sd = predict_target(state.posterior, x, state.z_star)
    np.testing.assert_allclose(ucb(state, x), mu + math.sqrt(state_beta(state)) * sd, atol=1e-12)


def test_gamma_examples():
    state = make_state()
    assert gamma_threshold([1.0], state) == 0.0
    flat = make_state(grid=[[0.5], [1.0]])
    flat.cost = lambda Z: np.full(len(np.atleast_2d(Z)), 1.0)
    xi = math.sqrt(1 - math.exp(-(0.5 / 0.3) ** 2))
    assert gamma_threshold([0.5], flat) == pytest.approx(xi, abs=1e-14)


def test_gamma_increases_with_cost():
    state = make_state()
    out = []
    for k in np.linspace(0.05, 1.0, 20):
        state.cost = lambda Z, k=k: np.where(np.atleast_2d(Z)[:, 0] == 1.0, 1.0, k)
        out.append(gamma_threshold([0.4], state))
    assert np.all(np.diff(out) > 0)


def test_gamma_rejects_nonpositive_top_cost():
    state = make_state()
    state.cost = lambda Z: np.zeros(len(np.atleast_2d(Z)))
    with pytest.raises(ValueError):
        gamma_threshold([0.5], state)


def test_expensive_fidelities_excluded():
    state = make_state(grid=fidelity_grid(1, 11))
    state.cost = lambda Z: 2.0 - np.atleast_2d(Z)[:, 0]  # cheapest at z_star
    assert len(candidate_fidelities(state, [0.5])) == 0


def test_empty_when_variance_below_threshold():
    # dense data plus the largest c: gamma dominates tau away from z_star
    dense = [[z, 0.5] for z in np.linspace(0, 1, 11) for _ in range(5)]
    state = make_state(dense, np.zeros(len(dense)), c=C_MAX)
    assert not filter_conditions(state, [0.5])[:-1, 1].any()
    assert len(candidate_fidelities(state, [0.5])) == 0


SINGLE_PASS = dict(
    points=[[0.0, 0.5]] * 5 + [[1.0, 0.5]] * 3, y=[0.1] * 8, spec=KernelSpec(1.0, (0.2,), (0.3,)),
    noise=0.01, grid=np.array([[0.0], [0.3], [0.97], [1.0]]),
)


def test_single_point_grid_brute_force():
    state = make_state(**SINGLE_PASS)
    oracle = [
        filter_by_hand([z], [0.5], points=SINGLE_PASS["points"], y=SINGLE_PASS["y"], scale=1.0, hz=[0.3],
                       hx=[0.2], noise=0.01, mean=0.0, z_star=[1.0], cost=lambda z: 0.1 + z[0] ** 2,
                       c=1.0, t=9, d=1, p=1)[:3]
        for z in (0.0, 0.3, 0.97, 1.0)
    ]
    assert [all(o) for o in oracle] == [False, True, False, False]
    np.testing.assert_array_equal(filter_conditions(state, [0.5]), np.array(oracle))
    np.testing.assert_array_equal(candidate_fidelities(state, [0.5]), [[0.3]])


def test_cheapest_prefers_low_cost_then_proximity():
    state = make_state()
    assert cheapest(np.array([[0.5], [0.2]]), state)[0] == 0.2
    state.cost = lambda Z: np.full(len(np.atleast_2d(Z)), 0.3)
    assert cheapest(np.array([[0.2], [0.7], [0.4]]), state)[0] == 0.7


def test_cheapest_two_costs():
    state = make_state()
    state.cost = lambda Z: np.where(np.atleast_2d(Z)[:, 0] < 0.5, 0.2, 0.5)
    assert cheapest(np.array([[0.6], [0.1]]), state)[0] == 0.1


def test_select_next_falls_back_to_top():
    dense = [[z, x] for z in np.linspace(0, 1, 11) for x in np.linspace(0, 1, 11)]
    state = make_state(dense, np.zeros(len(dense)), c=C_MAX, acq_budget=100)
    decision = select_next(state)
    assert not decision.candidates_nonempty
    np.testing.assert_array_equal(decision.z, [1.0])


def test_select_next_picks_cheapest_candidate_and_is_deterministic():
    state = make_state([[1.0, 0.2]], [0.3], acq_budget=200)
    a, b = select_next(state), select_next(state)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.x, b.x)
    cands = candidate_fidelities(state, a.x)
    assert a.candidates_nonempty
    assert quad_cost(a.z)[0] == quad_cost(cands).min()


@pytest.mark.parametrize("top,expected", [(16, 0.5), (4, 2.0), (15, 1.0), (5, 1.0), (10, 1.0)])
def test_adaptation_at_boundary(top, expected):
    state = make_state(relearn_period=None)
    flags = [True] * top + [False] * (20 - top)
    for f in flags:
        update(state, [1.0] if f else [0.3], [0.5], 0.0)
    assert state.c == expected


def test_halving_clipped_at_floor():
    assert adapt_multiplier(0.1, 0.8) == C_MIN
    assert adapt_multiplier(16.0, 0.0) == C_MAX


def test_c_within_bounds_over_long_random_run():
    rng = np.random.default_rng(1)
    c = 1.0
    for _ in range(10_000):
        c = adapt_multiplier(c, rng.uniform())
        assert C_MIN <= c <= C_MAX


def test_update_rejects_wrong_shapes():
    with pytest.raises(ValueError):
        update(make_state(), [1.0, 1.0], [0.5], 0.0)


def test_update_relearns_on_schedule():
    rng = np.random.default_rng(2)
    state = make_state(rng.uniform(size=(5, 2)), rng.normal(size=5), relearn_period=3)
    for _ in range(6):
        update(state, [rng.uniform()], [rng.uniform()], rng.normal())
    assert [e["t"] for e in state.relearn_events] == [9, 12]
