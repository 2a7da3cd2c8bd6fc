"""Adaptive forward-Euler time integration with terminal-event detection.

One accepted step advances (u, v, w) by the assembled right-hand side at a
CFL-limited dt, then runs the detectors in fixed order: imaginary state
(negative u meeting fractional exponents), blowup (norm threshold or
non-finite values), steady state (small successive change with patience).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from numba import njit

from . import diagnostics
from .grid import Grid, ImaginaryStateError, chemo_divergence, integrate, laplacian
from .model import ModelParams, nonlocal_source, production

__all__ = [
    "EventKind",
    "Event",
    "StepPolicy",
    "SimState",
    "initial_state",
    "rhs",
    "stable_dt",
    "step",
    "run",
]

_SPEED_EPS = 1e-30


class EventKind(str, Enum):
    CONVERGED = "Converged"
    BLOWUP = "Blowup"
    IMAGINARY_STATE = "ImaginaryState"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class Event:
    """Terminal outcome of a simulation.

    t_event is the time at which the offending state first exists, i.e. the
    time after the step that produced it.  The terminal state rides along for
    reporting when its values are still meaningful.
    """

    kind: EventKind
    t_event: float
    detail: str
    state: "SimState | None" = None


@dataclass(frozen=True)
class StepPolicy:
    """Stepping and detection thresholds.

    The safety factor scales the CFL estimate before the dt_max clamp is
    applied.  clip_negative is an exploration switch that zeroes undershoots
    instead of letting the imaginary-state detector see them; it is off for
    every result that claims fidelity.
    """

    safety: float = 0.4
    dt_max: float = 1e-3
    blowup_threshold: float = 1e10
    steady_tol: float = 1e-8
    steady_patience: int = 100
    clip_negative: bool = False

    def __post_init__(self):
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety must be in (0, 1]")
        for name in ("dt_max", "blowup_threshold", "steady_tol"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.steady_patience < 1:
            raise ValueError("steady_patience must be >= 1")


@dataclass(frozen=True)
class SimState:
    """Fields plus bookkeeping for one simulation instant."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float = 0.0
    step: int = 0
    M0: float = 0.0
    last_linf_diff: float = 0.0
    steady_count: int = 0


def initial_state(grid: Grid, u, v, w) -> SimState:
    """Freeze t = 0 state; M0 is the quadrature of the initial u."""
    u = np.ascontiguousarray(u, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    return SimState(grid=grid, u=u, v=v, w=w, t=0.0, step=0, M0=integrate(grid, u))


def rhs(state: SimState, params: ModelParams, forcing=None):
    """Assembled right-hand side (du, dv, dw) of the three-field system.

    forcing, when given, is a callable t -> (Fu, Fv, Fw) of additive source
    arrays; it exists for manufactured-solution verification and is None in
    production runs.
    """
    g = state.grid
    u, v, w = state.u, state.v, state.w
    k = params.k_exp
    du = (
        params.d1 * laplacian(g, u)
        - params.chi * chemo_divergence(g, u, v, k)
        + params.xi * chemo_divergence(g, u, w, k)
    )
    if params.mu > 0.0:
        du = du + nonlocal_source(g, u, params)
    prod = production(u, params)
    dv = params.d2 * laplacian(g, v) - params.alpha * v + prod
    dw = params.d3 * laplacian(g, w) - params.beta * w + prod
    if forcing is not None:
        fu, fv, fw = forcing(state.t)
        du = du + fu
        dv = dv + fv
        dw = dw + fw
    return du, dv, dw


@njit(cache=True)
def _max_face_speed(u, v, w, chi, xi, k, inv_dx, inv_dy):
    # taxis speed per face: k * u_face^(k-1) * (chi |ds_v| + xi |ds_w|) / h
    nx, ny = u.shape
    sx = 0.0
    for i in range(nx - 1):
        for j in range(ny):
            g = (
                chi * abs(v[i + 1, j] - v[i, j]) + xi * abs(w[i + 1, j] - w[i, j])
            ) * inv_dx
            if k != 1.0:
                um = 0.5 * (u[i, j] + u[i + 1, j])
                if um < 0.0:
                    um = 0.0
                g *= k * um ** (k - 1.0)
            if g > sx:
                sx = g
    sy = 0.0
    for i in range(nx):
        for j in range(ny - 1):
            g = (
                chi * abs(v[i, j + 1] - v[i, j]) + xi * abs(w[i, j + 1] - w[i, j])
            ) * inv_dy
            if k != 1.0:
                um = 0.5 * (u[i, j] + u[i, j + 1])
                if um < 0.0:
                    um = 0.0
                g *= k * um ** (k - 1.0)
            if g > sy:
                sy = g
    return sx, sy


def stable_dt(state: SimState, params: ModelParams, policy: StepPolicy) -> float:
    """CFL-limited step size: safety * min(diffusive, advective), clamped to dt_max.

    Diffusive limit: dx^2 dy^2 / (2 (dx^2 + dy^2) max(d1, d2, d3)).  Advective
    limit per direction: cell width over the largest taxis face speed, where
    the face speed is chi |dv/dn| + xi |dw/dn| scaled by k u^(k-1) at the face
    (face values clamped at zero for the estimate).
    """
    g = state.grid
    dx2, dy2 = g.dx**2, g.dy**2
    d_max = max(params.d1, params.d2, params.d3)
    dt_diff = dx2 * dy2 / (2.0 * (dx2 + dy2) * d_max)
    sx, sy = _max_face_speed(
        state.u, state.v, state.w,
        params.chi, params.xi, params.k_exp,
        1.0 / g.dx, 1.0 / g.dy,
    )
    dt_adv = min(g.dx / (sx + _SPEED_EPS), g.dy / (sy + _SPEED_EPS))
    return min(policy.safety * min(dt_diff, dt_adv), policy.dt_max)


def step(state: SimState, params: ModelParams, policy: StepPolicy, forcing=None):
    """Advance one accepted step, or return the first triggered terminal Event.

    Detector order is imaginary -> blowup -> steady, so a failure caused by
    fractional powers is never misreported as blowup.
    """
    dt = stable_dt(state, params, policy)
    # overflow/invalid values near a terminal event become Events, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            du, dv, dw = rhs(state, params, forcing)
        except ImaginaryStateError as err:
            return Event(EventKind.IMAGINARY_STATE, state.t, str(err), state)
        u_old = state.u
        u = u_old + dt * du
        v = state.v + dt * dv
        w = state.w + dt * dw
        if policy.clip_negative:
            u = np.maximum(u, 0.0)
        linf = float(np.max(np.abs(u - u_old)))
    t_new = state.t + dt
    steady_count = state.steady_count + 1 if linf < policy.steady_tol else 0
    new = SimState(
        grid=state.grid,
        u=u,
        v=v,
        w=w,
        t=t_new,
        step=state.step + 1,
        M0=state.M0,
        last_linf_diff=linf,
        steady_count=steady_count,
    )

    finite = bool(
        np.isfinite(u).all() and np.isfinite(v).all() and np.isfinite(w).all()
    )
    if params.has_fractional_powers:
        neg = u < 0.0
        if neg.any() or not finite:
            mask = neg if neg.any() else ~np.isfinite(u)
            if not mask.any():  # non-finite values sit in v or w
                detail = "non-finite chemical value produced under fractional exponents"
            else:
                i, j = np.unravel_index(int(np.argmax(mask)), u.shape)
                detail = (
                    f"u[{i}, {j}] = {u[i, j]:.6e} requires a fractional power "
                    f"of a negative number"
                )
            return Event(EventKind.IMAGINARY_STATE, t_new, detail, new)
    if not finite:
        return Event(EventKind.BLOWUP, t_new, "non-finite value in the state", new)
    max_abs_u = float(np.max(np.abs(u)))
    if max_abs_u > policy.blowup_threshold:
        return Event(
            EventKind.BLOWUP,
            t_new,
            f"max |u| = {max_abs_u:.6e} exceeds threshold {policy.blowup_threshold:.3e}",
            new,
        )
    if steady_count >= policy.steady_patience:
        return Event(
            EventKind.CONVERGED,
            t_new,
            f"linf step difference < {policy.steady_tol:g} for "
            f"{policy.steady_patience} consecutive steps",
            new,
        )
    return new


def run(
    initial: SimState,
    params: ModelParams,
    policy: StepPolicy,
    t_end: float,
    observers=(),
    forcing=None,
    p_norms=(1.0, 2.0),
    sample_every: int | None = None,
    n_dims: int = 2,
    config_echo: str = "",
):
    """March from the initial state until a terminal event or t >= t_end.

    Diagnostics are sampled every `sample_every` accepted steps (by default
    scaled so a run yields about 2000 samples) plus the final step; observers
    are called on the same cadence with (state, dt_of_last_step).  Returns the
    assembled RunReport.
    """
    if t_end < initial.t:
        raise ValueError("t_end must not precede the initial time")
    recorder = diagnostics.SeriesRecorder(initial.grid, p_norms)
    if sample_every is None:
        dt0 = stable_dt(initial, params, policy)
        est_steps = max(1, int((t_end - initial.t) / dt0))
        sample_every = max(1, est_steps // 2000)

    def emit(st: SimState, dt: float):
        recorder.record(st, dt)
        for obs in observers:
            obs(st, dt)

    emit(initial, 0.0)
    state = initial
    event = None
    dt_used = 0.0
    while event is None:
        if state.t >= t_end:
            event = Event(
                EventKind.TIME_LIMIT, state.t, f"reached t_end = {t_end:g}", state
            )
            break
        result = step(state, params, policy, forcing)
        if isinstance(result, Event):
            event = result
            if event.state is not None:
                recorder.note_dt(event.state.t - state.t)
            break
        dt_used = result.t - state.t
        recorder.note_dt(dt_used)
        state = result
        if state.step % sample_every == 0:
            emit(state, dt_used)

    final = event.state
    if final is not None and bool(
        np.isfinite(final.u).all()
        and np.isfinite(final.v).all()
        and np.isfinite(final.w).all()
    ):
        emit(final, final.t - state.t if final is not state else dt_used)
    return diagnostics.assemble_report(
        event, recorder, params, n_dims=n_dims, config_echo=config_echo
    )
