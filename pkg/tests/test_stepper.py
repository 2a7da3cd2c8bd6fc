import numpy as np
import pytest

from archemo import (
    Event,
    EventKind,
    Grid,
    ModelParams,
    StepPolicy,
    initial_state,
    integrate,
    rhs,
    run,
    stable_dt,
    step,
)
from archemo.scenarios import build_state, get

from oracle_utils import rel_err, slow_rhs, slow_stable_dt


def _state_from(grid, u, v, w):
    return initial_state(grid, u, v, w)


def test_rhs_all_zero():
    g = Grid(8, 8)
    z = np.zeros(g.shape)
    p = ModelParams(mu=1.0)
    du, dv, dw = rhs(_state_from(g, z, z, z), p)
    assert np.all(du == 0.0) and np.all(dv == 0.0) and np.all(dw == 0.0)


def test_rhs_uniform_hand_value():
    # u == 1 on the unit-area domain has unit mass, so the source vanishes;
    # all gradients vanish, leaving dv = dw = f(1) = 1.
    g = Grid(16, 16)
    u = np.ones(g.shape)
    z = np.zeros(g.shape)
    p = ModelParams(mu=1.0)
    du, dv, dw = rhs(_state_from(g, u, z, z), p)
    assert np.all(du == 0.0)
    assert np.all(dv == 1.0)
    assert np.all(dw == 1.0)


@pytest.mark.parametrize("mu,k,l,m", [(0.0, 1.0, 1.0, 1.0), (1.0, 1.5, 0.4, 1.8)])
def test_rhs_matches_term_by_term_oracle(mu, k, l, m):
    g = Grid(8, 8)
    rng = np.random.default_rng(9)
    u = np.abs(rng.standard_normal(g.shape)) + 0.1
    v = np.abs(rng.standard_normal(g.shape))
    w = np.abs(rng.standard_normal(g.shape))
    p = ModelParams(mu=mu, k_exp=k, l_exp=l, m_exp=m, d2=0.7, d3=1.3, chi=0.9, xi=1.1)
    got = rhs(_state_from(g, u, v, w), p)
    want = slow_rhs(g, u, v, w, p)
    for a, b in zip(got, want):
        assert rel_err(a, b) <= 1e-13


def test_stable_dt_pure_diffusion_limit():
    g = Grid(8, 8)
    z = np.zeros(g.shape)
    state = _state_from(g, np.ones(g.shape), z, z)
    p = ModelParams()
    policy = StepPolicy(safety=1.0, dt_max=float("inf"))
    assert stable_dt(state, p, policy) == g.dx * g.dx / 4.0
    # safety scales the estimate
    assert stable_dt(state, p, StepPolicy(safety=0.5, dt_max=float("inf"))) == (
        0.5 * g.dx * g.dx / 4.0
    )


def test_stable_dt_dt_max_clamp_after_safety():
    g = Grid(8, 8)
    z = np.zeros(g.shape)
    state = _state_from(g, np.ones(g.shape), z, z)
    policy = StepPolicy(safety=0.4, dt_max=1e-9)
    assert stable_dt(state, ModelParams(), policy) == 1e-9


def test_stable_dt_matches_oracle_on_bell_data():
    g = Grid(101, 101)
    s = get("ex4_1_mu0")
    state = build_state(s, g)
    policy = StepPolicy()
    got = stable_dt(state, s.params, policy)
    want = slow_stable_dt(g, state.u, state.v, state.w, s.params, policy)
    assert got == pytest.approx(want, rel=1e-13)
    assert 0.0 < got < g.dx * g.dx / 4.0
    # fractional-k variant exercises the face scaling
    s9 = get("ex4_9_mu0")
    state9 = build_state(s9, g)
    got9 = stable_dt(state9, s9.params, policy)
    want9 = slow_stable_dt(g, state9.u, state9.v, state9.w, s9.params, policy)
    assert got9 == pytest.approx(want9, rel=1e-13)


def test_step_converges_at_discrete_fixed_point():
    # c|Omega| = 1 with f(c)/alpha = f(c)/beta = 1 is an exact equilibrium
    g = Grid(16, 16)
    ones = np.ones(g.shape)
    state = _state_from(g, ones.copy(), ones.copy(), ones.copy())
    p = ModelParams(mu=1.0)
    policy = StepPolicy(steady_patience=5)
    for i in range(4):
        state = step(state, p, policy)
        assert not isinstance(state, Event)
        assert state.last_linf_diff == 0.0
    result = step(state, p, policy)
    assert isinstance(result, Event)
    assert result.kind is EventKind.CONVERGED


def test_mass_conserved_without_source():
    g = Grid(32, 32)
    s = get("ex4_1_mu0")
    state = build_state(s, g)
    policy = StepPolicy()
    m0 = integrate(g, state.u)
    for _ in range(2000):
        state = step(state, s.params, policy)
        assert not isinstance(state, Event)
    drift = abs(integrate(g, state.u) - m0) / m0
    assert drift <= 1e-12


def test_mass_identity_with_source():
    # one Euler step changes the mass by exactly dt * mu * I(u^m) * (1 - M)
    g = Grid(32, 32)
    s = get("ex4_1", mu=1.0)
    p = ModelParams(mu=1.0, m_exp=1.8, l_exp=1.0, k_exp=1.0)
    state = build_state(s, g)
    policy = StepPolicy()
    for _ in range(100):
        M = integrate(g, state.u)
        expected_rate = p.mu * integrate(g, state.u**p.m_exp) * (1.0 - M)
        new = step(state, p, policy)
        assert not isinstance(new, Event)
        dt = new.t - state.t
        dM = integrate(g, new.u) - M
        assert dM == pytest.approx(dt * expected_rate, abs=1e-11 * max(1.0, abs(M)))
        state = new


def _assert_state_symmetric(state, tol=1e-10):
    for f in (state.u, state.v, state.w):
        scale = max(1.0, float(np.max(np.abs(f))))
        assert np.max(np.abs(f - np.flip(f, 0))) <= tol * scale
        assert np.max(np.abs(f - np.flip(f, 1))) <= tol * scale
        assert np.max(np.abs(f - f.T)) <= tol * scale


def test_symmetry_preserved_under_stepping():
    g = Grid(32, 32)
    s = get("ex4_9_mu1")
    state = build_state(s, g)
    policy = StepPolicy()
    for _ in range(300):
        result = step(state, s.params, policy)
        if isinstance(result, Event):
            break
        state = result
        _assert_state_symmetric(state)


def test_determinism_bitwise():
    g = Grid(32, 32)
    s = get("ex4_2_mu1")

    def march(n):
        st = build_state(s, g)
        policy = StepPolicy()
        out = []
        for _ in range(n):
            st = step(st, s.params, policy)
            out.append((st.t, float(st.u[16, 16]), float(st.last_linf_diff)))
        return out

    assert march(50) == march(50)


def test_imaginary_event_from_poisoned_state():
    # fractional production of a negative cell makes NaNs; the detector must
    # classify that as an imaginary state, not a blowup
    g = Grid(16, 16)
    u = np.full(g.shape, 0.5)
    u[8, 8] = -0.25  # single cell; face means stay positive
    v = g.sample(lambda X, Y: np.exp(-X**2 - Y**2))
    w = np.zeros(g.shape)
    p = ModelParams(mu=0.0, k_exp=1.0, l_exp=0.4)
    result = step(_state_from(g, u, v, w), p, StepPolicy())
    assert isinstance(result, Event)
    assert result.kind is EventKind.IMAGINARY_STATE


def test_imaginary_event_reports_offending_cell():
    g = Grid(64, 64)
    s = get("ex4_9_mu0")
    state = build_state(s, g)
    policy = StepPolicy()
    for _ in range(10000):
        result = step(state, s.params, policy)
        if isinstance(result, Event):
            break
        state = result
    assert isinstance(result, Event)
    assert result.kind is EventKind.IMAGINARY_STATE
    assert "u[" in result.detail


def test_clip_negative_suppresses_imaginary_state():
    # without the negative-undershoot escape the run proceeds (here into a
    # genuine aggregation blowup), never reporting an imaginary state
    g = Grid(64, 64)
    s = get("ex4_9_mu0")
    report = run(
        build_state(s, g), s.params, StepPolicy(clip_negative=True), t_end=s.t_end
    )
    assert report.event.kind is not EventKind.IMAGINARY_STATE
    assert all(sample.min_u >= 0.0 for sample in report.series)


def test_blowup_event_on_threshold():
    g = Grid(16, 16)
    s = get("ex4_1_mu0")
    state = build_state(s, g)
    result = step(state, s.params, StepPolicy(blowup_threshold=500.0))
    assert isinstance(result, Event)
    assert result.kind is EventKind.BLOWUP
    assert "threshold" in result.detail


def test_run_degenerate_horizon():
    g = Grid(16, 16)
    s = get("ex4_1_mu0")
    report = run(build_state(s, g), s.params, StepPolicy(), t_end=0.0)
    assert report.event.kind is EventKind.TIME_LIMIT
    assert len(report.series) == 1
    assert report.series[0].t == 0.0


def test_run_decay_of_balanced_attraction_repulsion():
    # identical chemical data cancels the taxis exactly; u relaxes like heat
    g = Grid(33, 33)  # odd count puts a cell center at the bump peak
    s = get("ex4_1_mu0")
    report = run(build_state(s, g), s.params, StepPolicy(), t_end=0.5)
    assert report.event.kind in (EventKind.TIME_LIMIT, EventKind.CONVERGED)
    assert report.series[0].max_u == pytest.approx(1000.0, rel=1e-12)
    assert report.final.max_u < 100.0
    assert report.final.mass == pytest.approx(report.series[0].mass, rel=1e-11)


def test_run_rejects_backwards_horizon():
    g = Grid(8, 8)
    s = get("ex4_1_mu0")
    with pytest.raises(ValueError):
        run(build_state(s, g), s.params, StepPolicy(), t_end=-1.0)
