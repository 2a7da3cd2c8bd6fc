"""Norms, time-series recording, report assembly and verification machinery.

The verification half hosts slow loop-based reference operators and a
manufactured-solution problem with analytically assembled forcing, used by
the convergence studies and the `verify` command.  The forcing is additive
and only wired in for verification runs, so the production right-hand side
stays exactly the modeled system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, integrate
from .model import (
    EnvelopeReport,
    ModelParams,
    Theorem1Result,
    mass_envelope_check,
    theorem1_predicate,
)

__all__ = [
    "Sample",
    "SeriesRecorder",
    "RunReport",
    "norms",
    "convergence_order",
    "assemble_report",
    "reference_laplacian",
    "reference_chemo_divergence",
    "ManufacturedSolution",
    "ConvergenceStudy",
    "mms_default_params",
    "mms_spatial_study",
    "mms_temporal_study",
]


def norms(grid: Grid, f: np.ndarray, p_list=(1.0, 2.0)):
    """Max, min und the discrete L^p norms (dx dy sum |f|^p)^(1/p)."""
    f = np.asarray(f, dtype=float)
    area = grid.cell_area
    lp = []
    for p in p_list:
        p = float(p)
        if p < 1.0:
            raise ValueError("p must be >= 1")
        if p == 1.0:
            lp.append(float(area * np.sum(np.abs(f))))
        elif p == 2.0:
            lp.append(float(math.sqrt(area * np.sum(f * f))))
        else:
            lp.append(float((area * np.sum(np.abs(f) ** p)) ** (1.0 / p)))
    return float(f.max()), float(f.min()), lp


@dataclass(frozen=True)
class Sample:
    """One recorded diagnostics row."""

    t: float
    max_u: float
    min_u: float
    mass: float
    linf_diff: float
    lp: tuple[float, ...]
    dt: float
    step: int


class SeriesRecorder:
    """Collects Samples at the stepping loop's cadence; deduplicates by step."""

    def __init__(self, grid: Grid, p_list=(1.0, 2.0)):
        self.grid = grid
        self.p_list = tuple(float(p) for p in p_list)
        self.samples: list[Sample] = []
        self.max_dt = 0.0
        self._last_step = -1

    def note_dt(self, dt: float):
        if dt > self.max_dt:
            self.max_dt = dt

    def record(self, state, dt: float):
        if state.step == self._last_step:
            return
        self._last_step = state.step
        mx, mn, lp = norms(self.grid, state.u, self.p_list)
        self.samples.append(
            Sample(
                t=float(state.t),
                max_u=mx,
                min_u=mn,
                mass=integrate(self.grid, state.u),
                linf_diff=float(state.last_linf_diff),
                lp=tuple(lp),
                dt=float(dt),
                step=int(state.step),
            )
        )


@dataclass(frozen=True)
class RunReport:
    """Everything a finished run reports: event, series, analytic checks, config."""

    event: object
    series: tuple[Sample, ...]
    envelope_check: EnvelopeReport | None
    theorem1: Theorem1Result
    config_echo: str
    p_list: tuple[float, ...]

    @property
    def final(self) -> Sample:
        return self.series[-1]


def assemble_report(
    event, recorder: SeriesRecorder, params: ModelParams, n_dims: int = 2,
    config_echo: str = "",
) -> RunReport:
    """Build the RunReport; the mass envelope is only checked for runs where
    the bound's premises hold (active source, no terminal blowup/imaginary)."""
    series = tuple(recorder.samples)
    envelope = None
    # string comparison keeps this module independent of the stepper's enum
    if params.mu > 0.0 and series and event.kind.value in ("Converged", "TimeLimit"):
        M0 = series[0].mass
        tol = 10.0 * recorder.max_dt * (1.0 + M0)
        envelope = mass_envelope_check(
            [(s.t, s.mass) for s in series], M0, params.m_exp, tol
        )
    return RunReport(
        event=event,
        series=series,
        envelope_check=envelope,
        theorem1=theorem1_predicate(n_dims, params),
        config_echo=config_echo,
        p_list=recorder.p_list,
    )


def convergence_order(samples) -> float:
    """Least-squares slope of log(error) against log(h).

    Any exactly-zero error denotes an exact scheme and reports +inf.
    """
    pts = [(float(h), float(e)) for h, e in samples]
    if len(pts) < 2:
        raise ValueError("need at least two (h, error) samples")
    if any(h <= 0.0 for h, _ in pts):
        raise ValueError("h values must be positive")
    if any(e < 0.0 for _, e in pts):
        raise ValueError("errors must be nonnegative")
    if any(e == 0.0 for _, e in pts):
        return math.inf
    logs_h = np.log([h for h, _ in pts])
    logs_e = np.log([e for _, e in pts])
    slope = np.polyfit(logs_h, logs_e, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# slow reference operators (verification-only, independent of the kernels)
# ---------------------------------------------------------------------------


def _ghost_pad(f: np.ndarray) -> np.ndarray:
    nx, ny = f.shape
    g = np.empty((nx + 2, ny + 2))
    g[1:-1, 1:-1] = f
    g[0, 1:-1] = f[0, :]
    g[-1, 1:-1] = f[-1, :]
    g[1:-1, 0] = f[:, 0]
    g[1:-1, -1] = f[:, -1]
    g[0, 0] = f[0, 0]
    g[0, -1] = f[0, -1]
    g[-1, 0] = f[-1, 0]
    g[-1, -1] = f[-1, -1]
    return g


def reference_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Plain-python stencil over an explicitly built ghost layer."""
    f = np.asarray(f, dtype=float)
    g = _ghost_pad(f)
    out = np.empty_like(f)
    dx2, dy2 = grid.dx**2, grid.dy**2
    for i in range(grid.nx):
        for j in range(grid.ny):
            gi, gj = i + 1, j + 1
            out[i, j] = (g[gi + 1, gj] + g[gi - 1, gj] - 2.0 * g[gi, gj]) / dx2 + (
                g[gi, gj + 1] + g[gi, gj - 1] - 2.0 * g[gi, gj]
            ) / dy2
    return out


def reference_chemo_divergence(grid: Grid, u, s, k: float) -> np.ndarray:
    """Explicit face-array build of div(u^k grad s) with zero boundary flux."""
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    nx, ny = grid.nx, grid.ny
    fx = np.zeros((nx + 1, ny))
    for i in range(1, nx):
        for j in range(ny):
            um = 0.5 * (u[i - 1, j] + u[i, j])
            fx[i, j] = um**k * (s[i, j] - s[i - 1, j]) / grid.dx
    fy = np.zeros((nx, ny + 1))
    for i in range(nx):
        for j in range(1, ny):
            um = 0.5 * (u[i, j - 1] + u[i, j])
            fy[i, j] = um**k * (s[i, j] - s[i, j - 1]) / grid.dy
    out = np.empty((nx, ny))
    for i in range(nx):
        for j in range(ny):
            out[i, j] = (fx[i + 1, j] - fx[i, j]) / grid.dx + (
                fy[i, j + 1] - fy[i, j]
            ) / grid.dy
    return out


# ---------------------------------------------------------------------------
# manufactured-solution verification
# ---------------------------------------------------------------------------


def mms_default_params() -> ModelParams:
    """Distinct coefficients plus fractional exponents so no term degenerates."""
    return ModelParams(
        d1=1.0, d2=0.8, d3=0.6,
        chi=1.0, xi=0.7,
        alpha=0.9, beta=1.1,
        mu=1.0, K_coef=1.0,
        l_exp=0.5, k_exp=1.5, m_exp=1.8,
    )


class ManufacturedSolution:
    """Smooth exact triple plus the forcing that makes it solve the system.

    The profile cos(2 pi x) cos(2 pi y) has zero normal derivative and zero
    third normal derivative on the centered unit square, so the discrete
    operators keep second-order accuracy up to the boundary.  Its integral
    vanishes, making the exact total mass the constant base offset of u.
    """

    def __init__(
        self,
        grid: Grid,
        params: ModelParams,
        u_base: float = 2.0,
        u_amp: float = 0.5,
        v_base: float = 1.5,
        v_amp: float = 0.25,
        w_base: float = 1.25,
        w_amp: float = 0.125,
    ):
        self.grid = grid
        self.params = params
        self.bases = (u_base, v_base, w_base)
        self.amps = (u_amp, v_amp, w_amp)
        X, Y = grid.mesh()
        tp = 2.0 * math.pi
        self._phi = np.cos(tp * X) * np.cos(tp * Y)
        px = -tp * np.sin(tp * X) * np.cos(tp * Y)
        py = -tp * np.cos(tp * X) * np.sin(tp * Y)
        self._grad2 = px * px + py * py
        self._lap_factor = -2.0 * tp * tp  # Lap(phi) = -8 pi^2 phi
        area = (grid.x_max - grid.x_min) * (grid.y_max - grid.y_min)
        self.exact_mass = u_base * area

    def fields(self, t: float):
        s = math.exp(-t)
        ub, vb, wb = self.bases
        ua, va, wa = self.amps
        return (
            ub + ua * s * self._phi,
            vb + va * s * self._phi,
            wb + wa * s * self._phi,
        )

    def forcing(self, t: float):
        p = self.params
        s = math.exp(-t)
        ub, vb, wb = self.bases
        ua, va, wa = self.amps
        phi = self._phi
        us = ub + ua * s * phi
        vs = vb + va * s * phi
        ws = wb + wa * s * phi
        lap_u = self._lap_factor * ua * s * phi
        lap_v = self._lap_factor * va * s * phi
        lap_w = self._lap_factor * wa * s * phi
        k = p.k_exp
        ukm1 = us ** (k - 1.0)
        uk = ukm1 * us
        div_uv = k * ukm1 * (ua * va * s * s * self._grad2) + uk * lap_v
        div_uw = k * ukm1 * (ua * wa * s * s * self._grad2) + uk * lap_w
        prod = p.K_coef * us**p.l_exp
        source = p.mu * us**p.m_exp * (1.0 - self.exact_mass)
        fu = (-ua * s * phi) - (
            p.d1 * lap_u - p.chi * div_uv + p.xi * div_uw + source
        )
        fv = (-va * s * phi) - (p.d2 * lap_v - p.alpha * vs + prod)
        fw = (-wa * s * phi) - (p.d3 * lap_w - p.beta * ws + prod)
        return fu, fv, fw


@dataclass(frozen=True)
class ConvergenceStudy:
    """Refinement levels, measured max-norm errors and the fitted order."""

    values: tuple[float, ...]
    errors: tuple[float, ...]
    order: float


def _mms_march(grid: Grid, params: ModelParams, dt: float, t_final: float):
    """Drive the real stepper at a fixed binary-fraction dt; returns the final state."""
    from . import stepper  # local import; stepper imports this module

    mms = ManufacturedSolution(grid, params)
    u0, v0, w0 = mms.fields(0.0)
    state = stepper.initial_state(grid, u0, v0, w0)
    policy = stepper.StepPolicy(
        safety=1.0, dt_max=dt, steady_tol=1e-300, steady_patience=10**9
    )
    while state.t < t_final:
        result = stepper.step(state, params, policy, forcing=mms.forcing)
        if isinstance(result, stepper.Event):
            raise RuntimeError(f"manufactured run hit {result.kind}: {result.detail}")
        if result.t - state.t != dt:
            raise RuntimeError("stability limit undercut the requested fixed dt")
        state = result
    return state, mms


def mms_spatial_study(resolutions=(32, 64, 128), params: ModelParams | None = None):
    """Grid-refinement study at dt = h^2/8; expected order is 2."""
    params = params or mms_default_params()
    hs = []
    errs = []
    t_final = 2.0**-6
    for n in resolutions:
        grid = Grid(n, n)
        dt = grid.dx**2 / 8.0
        state, mms = _mms_march(grid, params, dt, t_final)
        u_exact, _, _ = mms.fields(state.t)
        hs.append(grid.dx)
        errs.append(float(np.max(np.abs(state.u - u_exact))))
    return ConvergenceStudy(tuple(hs), tuple(errs), convergence_order(zip(hs, errs)))


def mms_temporal_study(
    n: int = 64,
    dts=(2.0**-15, 2.0**-16, 2.0**-17),
    params: ModelParams | None = None,
    t_final: float = 2.0**-8,
    ref_refine: int = 16,
):
    """dt-refinement study at a fixed grid against a fine-dt reference run.

    All step sizes are binary fractions of t_final, so every run lands on
    t_final exactly and the fixed spatial error cancels in the comparison;
    expected order is 1 for the forward-Euler march.
    """
    params = params or mms_default_params()
    grid = Grid(n, n)
    ref_state, _ = _mms_march(grid, params, min(dts) / ref_refine, t_final)
    errs = []
    for dt in dts:
        state, _ = _mms_march(grid, params, dt, t_final)
        if state.t != ref_state.t:
            raise RuntimeError("refinement runs must end at the identical time")
        errs.append(float(np.max(np.abs(state.u - ref_state.u))))
    return ConvergenceStudy(tuple(dts), tuple(errs), convergence_order(zip(dts, errs)))
