"""Centralized algorithm tests: parameter defaults, step algebra, reductions."""

import math

import numpy as np
import pytest

from delayfw.delay import DelaySchedule, gen_delays
from delayfw.delmfw import AlgoParams, DelmfwState, centralized_params, delmfw_run
from delayfw.geometry import ConstraintSet
from delayfw.losses import LossStream, QuadraticLoss, estimate_constants, synth_quadratic_stream

from _reference import meta_fw_run

L1 = ConstraintSet("l1_ball", 1.0, 2)


def quad_stream(thetas):
    return LossStream([[QuadraticLoss(th) for th in thetas]])


# -- parameters ---------------------------------------------------------------


def test_default_params():
    p = centralized_params(T=100, G=1.0, beta=1.0, D=2.0, B_est=7.0)
    assert p.K == 10
    assert p.A == 3.0  # G/(beta*D) = 0.5 < 3
    assert p.zeta == pytest.approx(1.0 / math.sqrt(7.0))
    assert centralized_params(T=10, G=1.0, beta=1.0, D=2.0, B_est=4.0).K == 4  # ceil


def test_param_overrides_and_validation():
    p = centralized_params(T=100, G=1.0, beta=1.0, D=2.0, B_est=7.0, K=3, A=5.0, zeta=0.1)
    assert (p.K, p.A, p.zeta) == (3, 5.0, 0.1)
    with pytest.raises(ValueError):
        AlgoParams(T=10, K=0, A=3.0, zeta=0.1, B_est=1.0)
    with pytest.raises(ValueError):
        AlgoParams(T=10, K=2, A=2.0, zeta=0.1, B_est=1.0)
    with pytest.raises(ValueError):
        AlgoParams(T=10, K=2, A=3.0, zeta=0.0, B_est=1.0)
    with pytest.raises(ValueError):
        centralized_params(T=10, G=0.0, beta=1.0, D=1.0, B_est=1.0)


def test_eta_schedule():
    p = AlgoParams(T=10, K=8, A=3.0, zeta=0.1, B_est=1.0)
    assert [p.eta(k) for k in range(1, 9)] == [1.0, 1.0, 1.0, 3 / 4, 3 / 5, 3 / 6, 3 / 7, 3 / 8]


# -- predict ------------------------------------------------------------------


def params_for(K, zeta=1.0, A=3.0, T=10):
    return AlgoParams(T=T, K=K, A=A, zeta=zeta, B_est=1.0)


def test_predict_k1_plays_oracle_output():
    state = DelmfwState(L1, params_for(K=1), seed=0)
    want = state.oracles[0].query()
    np.testing.assert_array_equal(state.predict(1), want)


def test_predict_identical_oracles_returns_common_vertex():
    state = DelmfwState(L1, params_for(K=4), seed=0)
    for o in state.oracles:
        o.noise = np.array([0.3, 0.6])
    np.testing.assert_array_equal(state.predict(1), [0.0, -1.0])


def test_predict_k2_hand_unroll():
    # A=3 makes eta_1 = eta_2 = 1: x_{t,2} = v_1, x_t = v_2
    state = DelmfwState(L1, params_for(K=2), seed=5)
    state.oracles[0].noise = np.array([0.2, 0.5])
    state.oracles[1].noise = np.array([0.9, 0.1])
    x = state.predict(1)
    np.testing.assert_array_equal(x, [-1.0, 0.0])  # lmo of second noise
    np.testing.assert_array_equal(state.history[1][0], [1.0, 0.0])  # x_{1,1} = start vertex
    np.testing.assert_array_equal(state.history[1][1], [0.0, -1.0])  # x_{1,2} = v_1


def test_predict_fractional_eta_hand_unroll():
    # A=3, K=5: eta_4 = 3/4, eta_5 = 3/5; replay the recursion by hand
    state = DelmfwState(L1, params_for(K=5), seed=7)
    x = state.predict(1)
    vs = [o.query() for o in state.oracles]
    want = vs[2]  # after three eta=1 steps
    want = 0.25 * want + 0.75 * vs[3]
    want = 0.4 * want + 0.6 * vs[4]
    np.testing.assert_array_equal(x, want)


def test_predict_order_enforced():
    state = DelmfwState(L1, params_for(K=1), seed=0)
    state.predict(1)
    with pytest.raises(ValueError):
        state.predict(1)
    with pytest.raises(ValueError):
        state.predict(3)


def test_predict_feasible_and_stores_history():
    cset = ConstraintSet("simplex", 2.0, 4)
    state = DelmfwState(cset, params_for(K=6), seed=3)
    for t in range(1, 6):
        x = state.predict(t)
        assert cset.contains(x, tol=1e-9)
        assert state.history[t].shape == (6, 4)
        assert all(cset.contains(s, tol=1e-9) for s in state.history[t])


def test_x_init_policies():
    state = DelmfwState(L1, params_for(K=2), seed=1, x_init_policy="previous")
    x1 = state.predict(1)
    np.testing.assert_array_equal(state.x_init(), x1)
    state.predict(2)
    np.testing.assert_array_equal(state.history[2][0], x1)
    with pytest.raises(ValueError):
        DelmfwState(L1, params_for(K=1), seed=0, x_init_policy="restart")


# -- absorb ---------------------------------------------------------------------


def test_absorb_empty_is_noop():
    state = DelmfwState(L1, params_for(K=3), seed=2)
    state.predict(1)
    before = [o.accum.copy() for o in state.oracles]
    state.absorb(1, [])
    for o, b in zip(state.oracles, before):
        np.testing.assert_array_equal(o.accum, b)
    assert 1 in state.history


def test_absorb_single_quadratic():
    state = DelmfwState(L1, params_for(K=2), seed=4)
    state.predict(1)
    theta = np.array([0.25, -0.5])
    subs = state.history[1].copy()
    state.absorb(1, [(1, QuadraticLoss(theta))])
    for k in range(2):
        np.testing.assert_array_equal(state.oracles[k].accum, subs[k] - theta)
    assert state.history == {}


def test_absorb_sums_release_set():
    state = DelmfwState(L1, params_for(K=3), seed=6)
    losses = {t: QuadraticLoss(np.array([0.1 * t, -0.2 * t])) for t in range(1, 6)}
    for t in range(1, 6):
        state.predict(t)
    subs = {t: state.history[t].copy() for t in (2, 5)}
    state.absorb(5, [(2, losses[2]), (5, losses[5])])
    for k in range(3):
        want = losses[2].grad(subs[2][k]) + losses[5].grad(subs[5][k])
        np.testing.assert_array_equal(state.oracles[k].accum, want)


def test_absorb_unknown_or_double_release():
    state = DelmfwState(L1, params_for(K=1), seed=0)
    state.predict(1)
    state.absorb(1, [(1, QuadraticLoss(np.zeros(2)))])
    with pytest.raises(ValueError):
        state.absorb(2, [(1, QuadraticLoss(np.zeros(2)))])
    with pytest.raises(ValueError):
        state.absorb(2, [(3, QuadraticLoss(np.zeros(2)))])


# -- full runs -------------------------------------------------------------------


def run_setup(T, dmax, seed, dim=3, scale=0.8):
    cset = ConstraintSet("l1_ball", 1.0, dim)
    stream = synth_quadratic_stream(seed=seed + 1000, T=T, dim=dim, scale=scale)
    schedule = gen_delays(T, dmax, seed=seed + 2000)
    G, beta = estimate_constants(stream, cset)
    params = centralized_params(T, G, beta, cset.diameter(), B_est=schedule.B)
    return cset, stream, schedule, params


def test_run_no_delay_matches_reference_bitwise():
    cset, stream, schedule, params = run_setup(T=40, dmax=1, seed=0)
    trace = delmfw_run(cset, stream, schedule, params, seed=0)
    ref_dec, ref_inst = meta_fw_run(cset, stream, params, seed=0)
    assert np.array_equal(trace.decisions, ref_dec)
    assert np.array_equal(trace.inst_loss, ref_inst)


def test_run_no_delay_matches_reference_previous_policy():
    cset, stream, schedule, params = run_setup(T=25, dmax=1, seed=3)
    trace = delmfw_run(cset, stream, schedule, params, seed=3, x_init_policy="previous")
    ref_dec, _ = meta_fw_run(cset, stream, params, seed=3, x_init_policy="previous")
    assert np.array_equal(trace.decisions, ref_dec)


def test_run_deterministic():
    cset, stream, schedule, params = run_setup(T=30, dmax=5, seed=1)
    a = delmfw_run(cset, stream, schedule, params, seed=1)
    b = delmfw_run(cset, stream, schedule, params, seed=1)
    assert np.array_equal(a.decisions, b.decisions)
    c = delmfw_run(cset, stream, schedule, params, seed=2)
    assert not np.array_equal(a.decisions, c.decisions)


def test_run_feasibility_and_metadata():
    cset, stream, schedule, params = run_setup(T=30, dmax=4, seed=5)
    trace = delmfw_run(cset, stream, schedule, params, seed=5)
    for x in trace.decisions:
        assert cset.contains(x, tol=1e-9)
    assert trace.metadata["B"] == schedule.B
    assert trace.metadata["K"] == params.K
    np.testing.assert_allclose(trace.cum_loss, np.cumsum(trace.inst_loss), atol=1e-9)


def test_history_size_tracks_outstanding_count():
    cset, stream, schedule, params = run_setup(T=40, dmax=7, seed=9)
    state = DelmfwState(cset, params, seed=9)
    for t in range(1, 41):
        state.predict(t)
        state.buffer.push(t, schedule.delay(t))
        released = state.buffer.release(t)
        state.absorb(t, [(s, stream.loss(0, s)) for s in released])
        assert len(state.history) == schedule.outstanding_count(t)


def test_delayed_feedback_reaches_oracles_late():
    # single round-1 loss delayed by 3 rounds: accumulators stay zero until then
    cset = ConstraintSet("l1_ball", 1.0, 2)
    stream = quad_stream([np.array([0.5, 0.0])] * 4)
    schedule = DelaySchedule(np.array([3, 1, 1, 1]), dmax=3)
    params = params_for(K=2, zeta=0.5, T=4)
    state = DelmfwState(cset, params, seed=0)
    buf_grads = {}
    for t in range(1, 5):
        state.predict(t)
        if t < 3:
            buf_grads[t] = [o.accum.copy() for o in state.oracles]
        state.buffer.push(t, schedule.delay(t))
        rel = state.buffer.release(t)
        state.absorb(t, [(s, stream.loss(0, s)) for s in rel])
    np.testing.assert_array_equal(buf_grads[1][0], np.zeros(2))
    np.testing.assert_array_equal(buf_grads[2][0], np.zeros(2))  # round 1 still pending
    # releases: F_2={2}, F_3={1,3} (one summed feedback), F_4={4}
    assert state.oracles[0].feedback_count == 3


def test_run_input_validation():
    cset, stream, schedule, params = run_setup(T=30, dmax=4, seed=5)
    bad = gen_delays(29, 4, seed=0)
    with pytest.raises(ValueError):
        delmfw_run(cset, stream, bad, params, seed=5)
    two_agent = synth_quadratic_stream(seed=0, T=30, dim=3, n_agents=2)
    with pytest.raises(ValueError):
        delmfw_run(cset, two_agent, schedule, params, seed=5)
