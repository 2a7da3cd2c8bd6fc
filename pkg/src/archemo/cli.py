"""Command-line front end: run / sweep / verify subcommands and on-disk output.

Configuration is a flat key=value text file with command-line flags taking
precedence over file values, which take precedence over defaults (a named
scenario supplies the defaults for everything it defines).  Exit status
encodes the terminal event: 0 converged or horizon reached, 10 blowup,
11 imaginary state, 2 configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import diagnostics
from .grid import Grid, chemo_divergence, integrate, laplacian
from .model import ModelParams, theorem1_predicate
from .scenarios import (
    GaussianBump,
    Scenario,
    build_state,
    get as get_scenario,
    scenario_from_config,
)
from .stepper import EventKind, StepPolicy, run

__all__ = ["main", "console_main", "ConfigError"]

WORKERS_ENV = "ARCHEMO_WORKERS"

EXIT_OK = 0
EXIT_BLOWUP = 10
EXIT_IMAGINARY = 11
EXIT_CONFIG = 2

_EXIT_BY_KIND = {
    EventKind.CONVERGED: EXIT_OK,
    EventKind.TIME_LIMIT: EXIT_OK,
    EventKind.BLOWUP: EXIT_BLOWUP,
    EventKind.IMAGINARY_STATE: EXIT_IMAGINARY,
}

SWEEP_AXES = ("k", "l", "m", "mu", "amplitude")

_SCENARIO_KEYS = (
    "mu", "k", "l", "m", "K",
    "d1", "d2", "d3", "chi", "xi", "alpha", "beta",
    "u0_amp", "u0_width", "v0_amp", "v0_width", "w0_amp", "w0_width",
    "t_end", "nx", "ny",
)

_FLOAT_KEYS = {
    "mu", "k", "l", "m", "K", "d1", "d2", "d3", "chi", "xi", "alpha", "beta",
    "u0_amp", "u0_width", "v0_amp", "v0_width", "w0_amp", "w0_width",
    "t_end", "safety", "dt_max", "blowup_threshold", "steady_tol",
}
_INT_KEYS = {"nx", "ny", "snapshots", "series_every", "steady_patience"}
_BOOL_KEYS = {"clip_negative"}

_CUSTOM_DEFAULTS = {
    "mu": 0.0, "k": 1.0, "l": 1.0, "m": 1.0, "K": 1.0,
    "d1": 1.0, "d2": 1.0, "d3": 1.0, "chi": 1.0, "xi": 1.0,
    "alpha": 1.0, "beta": 1.0,
    "u0_amp": 1000.0, "u0_width": 100.0,
    "v0_amp": 500.0, "v0_width": 50.0,
    "w0_amp": 500.0, "w0_width": 50.0,
    "t_end": 10.0, "nx": 201, "ny": 201,
}

_POLICY_DEFAULTS = {
    "safety": 0.4,
    "dt_max": 1e-3,
    "blowup_threshold": 1e10,
    "steady_tol": 1e-8,
    "steady_patience": 100,
    "clip_negative": False,
}

_OUTPUT_DEFAULTS = {
    "out": "",
    "snapshots": 2,
    "series_every": 0,   # 0 = automatic cadence
    "p_norms": "1,2",
}

_ECHO_ORDER = (
    ["mode", "scenario"]
    + list(_SCENARIO_KEYS)
    + list(_POLICY_DEFAULTS)
    + list(_OUTPUT_DEFAULTS)
    + [f"sweep_{a}" for a in SWEEP_AXES]
)


class ConfigError(ValueError):
    """Unusable configuration; reported on stderr with exit status 2."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _coerce(key: str, value):
    if isinstance(value, str):
        try:
            if key in _FLOAT_KEYS:
                return float(value)
            if key in _INT_KEYS:
                return int(value)
            if key in _BOOL_KEYS:
                return _parse_bool(value)
        except ValueError as err:
            raise ConfigError(f"bad value for {key}: {value!r} ({err})") from None
    return value


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; '#' starts a comment, blank lines are skipped."""
    pairs = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ResolvedConfig:
    mode: str
    scenario: Scenario
    grid: Grid
    policy: StepPolicy
    t_end: float
    out: str
    snapshots: int
    series_every: int
    p_norms: tuple[float, ...]
    sweeps: dict
    echo: str


def resolve_config(mode: str, args: argparse.Namespace) -> ResolvedConfig:
    """Merge defaults, config file and flags into one total configuration."""
    explicit = {}
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config).items():
            explicit[key] = value
    flag_map = {
        "scenario": args.scenario,
        "mu": args.mu,
        "t_end": args.t_end,
        "nx": args.nx,
        "ny": args.ny,
        "safety": args.safety,
        "dt_max": args.dt_max,
        "out": args.out,
        "snapshots": args.snapshots,
        "p_norms": args.p_norms,
    }
    if getattr(args, "clip_negative", False):
        flag_map["clip_negative"] = True
    for key, value in flag_map.items():
        if value is not None:
            explicit[key] = value
    for axis_value in getattr(args, "sweep", None) or []:
        if "=" not in axis_value:
            raise ConfigError(f"--sweep expects AXIS=V1,V2,... got {axis_value!r}")
        axis, values = axis_value.split("=", 1)
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r} (use one of {SWEEP_AXES})")
        explicit[f"sweep_{axis}"] = values

    explicit = {k: _coerce(k, v) for k, v in explicit.items()}

    name = str(explicit.get("scenario", "custom"))
    if name == "custom":
        base = dict(_CUSTOM_DEFAULTS)
        base.update({k: v for k, v in explicit.items() if k in _SCENARIO_KEYS})
        scenario = scenario_from_config(
            {
                "name": "custom",
                "mu": base["mu"], "k": base["k"], "l": base["l"], "m": base["m"],
                "K": base["K"], "d1": base["d1"], "d2": base["d2"], "d3": base["d3"],
                "chi": base["chi"], "xi": base["xi"],
                "alpha": base["alpha"], "beta": base["beta"],
                "u0_amp": base["u0_amp"], "u0_width": base["u0_width"],
                "v0_amp": base["v0_amp"], "v0_width": base["v0_width"],
                "w0_amp": base["w0_amp"], "w0_width": base["w0_width"],
                "t_end": base["t_end"], "nx": base["nx"], "ny": base["ny"],
            }
        )
    else:
        try:
            scenario = get_scenario(name, mu=explicit.get("mu"))
        except KeyError:
            raise ConfigError(f"unknown scenario {name!r}") from None
        scenario = _apply_scenario_overrides(scenario, explicit)

    try:
        policy = StepPolicy(
            safety=float(explicit.get("safety", _POLICY_DEFAULTS["safety"])),
            dt_max=float(explicit.get("dt_max", _POLICY_DEFAULTS["dt_max"])),
            blowup_threshold=float(
                explicit.get("blowup_threshold", _POLICY_DEFAULTS["blowup_threshold"])
            ),
            steady_tol=float(explicit.get("steady_tol", _POLICY_DEFAULTS["steady_tol"])),
            steady_patience=int(
                explicit.get("steady_patience", _POLICY_DEFAULTS["steady_patience"])
            ),
            clip_negative=bool(
                explicit.get("clip_negative", _POLICY_DEFAULTS["clip_negative"])
            ),
        )
        grid = Grid(scenario.nx, scenario.ny)
    except ValueError as err:
        raise ConfigError(str(err)) from None

    p_norms_text = str(explicit.get("p_norms", _OUTPUT_DEFAULTS["p_norms"]))
    try:
        p_norms = tuple(float(p) for p in p_norms_text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"bad p_norms list: {p_norms_text!r}") from None
    if not p_norms or any(p < 1.0 for p in p_norms):
        raise ConfigError("p_norms must list values >= 1")

    sweeps = {}
    for axis in SWEEP_AXES:
        key = f"sweep_{axis}"
        if key not in explicit:
            continue
        raw = explicit[key]
        if isinstance(raw, str):
            try:
                # an explicitly empty range is honored: it yields zero rows
                sweeps[axis] = tuple(float(v) for v in raw.split(",") if v.strip())
            except ValueError:
                raise ConfigError(f"bad sweep values for {axis}: {raw!r}") from None
        else:
            sweeps[axis] = tuple(raw)

    resolved = {
        "mode": mode,
        "scenario": scenario.name,
        "mu": scenario.params.mu,
        "k": scenario.params.k_exp,
        "l": scenario.params.l_exp,
        "m": scenario.params.m_exp,
        "K": scenario.params.K_coef,
        "d1": scenario.params.d1, "d2": scenario.params.d2, "d3": scenario.params.d3,
        "chi": scenario.params.chi, "xi": scenario.params.xi,
        "alpha": scenario.params.alpha, "beta": scenario.params.beta,
        "u0_amp": scenario.u0.amplitude, "u0_width": scenario.u0.width,
        "v0_amp": scenario.v0.amplitude, "v0_width": scenario.v0.width,
        "w0_amp": scenario.w0.amplitude, "w0_width": scenario.w0.width,
        "t_end": scenario.t_end, "nx": scenario.nx, "ny": scenario.ny,
        "safety": policy.safety, "dt_max": policy.dt_max,
        "blowup_threshold": policy.blowup_threshold,
        "steady_tol": policy.steady_tol,
        "steady_patience": policy.steady_patience,
        "clip_negative": policy.clip_negative,
        "out": str(explicit.get("out", _OUTPUT_DEFAULTS["out"])),
        "snapshots": int(explicit.get("snapshots", _OUTPUT_DEFAULTS["snapshots"])),
        "series_every": int(
            explicit.get("series_every", _OUTPUT_DEFAULTS["series_every"])
        ),
        "p_norms": ",".join(f"{p:g}" for p in p_norms),
    }
    for axis in SWEEP_AXES:
        resolved[f"sweep_{axis}"] = ",".join(
            repr(v) for v in sweeps.get(axis, ())
        )
    echo = "\n".join(f"{key}={_fmt(resolved[key])}" for key in _ECHO_ORDER) + "\n"

    return ResolvedConfig(
        mode=mode,
        scenario=scenario,
        grid=grid,
        policy=policy,
        t_end=float(resolved["t_end"]),
        out=resolved["out"],
        snapshots=resolved["snapshots"],
        series_every=resolved["series_every"],
        p_norms=p_norms,
        sweeps=sweeps,
        echo=echo,
    )


def _apply_scenario_overrides(scenario: Scenario, explicit: dict) -> Scenario:
    params = scenario.params
    param_updates = {}
    for key, attr in (
        ("k", "k_exp"), ("l", "l_exp"), ("m", "m_exp"), ("K", "K_coef"),
        ("d1", "d1"), ("d2", "d2"), ("d3", "d3"),
        ("chi", "chi"), ("xi", "xi"), ("alpha", "alpha"), ("beta", "beta"),
    ):
        if key in explicit:
            param_updates[attr] = float(explicit[key])
    if param_updates:
        try:
            params = replace(params, **param_updates)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    bumps = {}
    for tag in ("u0", "v0", "w0"):
        bump = getattr(scenario, tag)
        amp = float(explicit.get(f"{tag}_amp", bump.amplitude))
        width = float(explicit.get(f"{tag}_width", bump.width))
        bumps[tag] = GaussianBump(amp, width)
    return replace(
        scenario,
        params=params,
        u0=bumps["u0"],
        v0=bumps["v0"],
        w0=bumps["w0"],
        t_end=float(explicit.get("t_end", scenario.t_end)),
        nx=int(explicit.get("nx", scenario.nx)),
        ny=int(explicit.get("ny", scenario.ny)),
    )


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------


class SnapshotWriter:
    """Writes u/v/w CSV snapshots when the run crosses evenly spaced times."""

    def __init__(self, outdir: Path, grid: Grid, count: int, t_end: float):
        self.outdir = outdir
        self.grid = grid
        if count >= 2:
            self.targets = list(np.linspace(0.0, t_end, count))
        elif count == 1:
            self.targets = [t_end]
        else:
            self.targets = []
        self._idx = 0
        self.written: list[float] = []

    def __call__(self, state, dt):
        crossed = False
        while self._idx < len(self.targets) and state.t >= self.targets[self._idx]:
            self._idx += 1
            crossed = True
        if crossed:
            self.write(state)

    def write(self, state):
        t = float(state.t)
        if self.written and self.written[-1] == t:
            return
        self.written.append(t)
        for name, values in (("u", state.u), ("v", state.v), ("w", state.w)):
            write_snapshot(self.outdir / f"{name}_{t!r}.csv", self.grid, name, t, values)


def write_snapshot(path: Path, grid: Grid, field: str, t: float, values: np.ndarray):
    """Two-line header (grid metadata, column names), then row-major x,y,value."""
    xc, yc = grid.xc, grid.yc
    lines = [
        f"# nx={grid.nx} ny={grid.ny} x_min={grid.x_min!r} x_max={grid.x_max!r} "
        f"y_min={grid.y_min!r} y_max={grid.y_max!r} t={t!r} field={field}",
        f"x,y,{field}",
    ]
    for i in range(grid.nx):
        xi = repr(float(xc[i]))
        row = values[i]
        for j in range(grid.ny):
            lines.append(f"{xi},{float(yc[j])!r},{float(row[j])!r}")
    path.write_text("\n".join(lines) + "\n")


def read_snapshot(path: Path):
    """Inverse of write_snapshot; returns (meta dict, values array)."""
    text = Path(path).read_text().splitlines()
    meta = {}
    for token in text[0].lstrip("# ").split():
        key, value = token.split("=", 1)
        meta[key] = value
    nx, ny = int(meta["nx"]), int(meta["ny"])
    values = np.empty((nx, ny))
    for row, line in enumerate(text[2:]):
        i, j = divmod(row, ny)
        values[i, j] = float(line.rsplit(",", 1)[1])
    return meta, values


def write_series(path: Path, report) -> None:
    cols = ["t", "max_u", "min_u", "mass", "linf_diff"] + [
        f"L{p:g}" for p in report.p_list
    ]
    lines = [",".join(cols)]
    for s in report.series:
        row = [repr(s.t), repr(s.max_u), repr(s.min_u), repr(s.mass), repr(s.linf_diff)]
        row += [repr(v) for v in s.lp]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def report_as_dict(report, exit_code: int) -> dict:
    env = report.envelope_check
    first, last = report.series[0], report.series[-1]
    return {
        "event": {
            "kind": report.event.kind.value,
            "t_event": report.event.t_event,
            "detail": report.event.detail,
        },
        "envelope_check": None
        if env is None
        else {
            "passed": env.passed,
            "worst_violation": env.worst_violation,
            "n_flagged": len(env.flagged),
            "n_samples": env.n_samples,
            "tol": env.tol,
        },
        "theorem1": {
            "satisfied": report.theorem1.satisfied,
            "clauses": {name: ok for name, ok in report.theorem1.clauses},
            "explanation": list(report.theorem1.lines),
        },
        "series_summary": {
            "n_samples": len(report.series),
            "mass_initial": first.mass,
            "t_final": last.t,
            "max_u_final": last.max_u,
            "mass_final": last.mass,
        },
        "config": report.config_echo,
        "exit_code": exit_code,
    }


def report_as_text(report, exit_code: int) -> str:
    last = report.series[-1]
    lines = [
        f"event: {report.event.kind.value} at t = {report.event.t_event!r}",
        f"detail: {report.event.detail}",
        f"exit code: {exit_code}",
        f"samples: {len(report.series)}",
        f"final: t={last.t!r} max_u={last.max_u!r} min_u={last.min_u!r} "
        f"mass={last.mass!r} linf_diff={last.linf_diff!r}",
        "mass envelope: "
        + ("not checked" if report.envelope_check is None else report.envelope_check.summary()),
        f"boundedness predicate: {'satisfied' if report.theorem1.satisfied else 'not satisfied'}",
    ]
    lines += [f"  {line}" for line in report.theorem1.lines]
    lines.append("config:")
    lines += [f"  {line}" for line in report.config_echo.rstrip("\n").splitlines()]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def run_command(cfg: ResolvedConfig) -> int:
    state = build_state(cfg.scenario, cfg.grid)
    observers = []
    outdir = None
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        if cfg.snapshots > 0:
            observers.append(SnapshotWriter(outdir, cfg.grid, cfg.snapshots, cfg.t_end))
    report = run(
        state,
        cfg.scenario.params,
        cfg.policy,
        cfg.t_end,
        observers=observers,
        p_norms=cfg.p_norms,
        sample_every=cfg.series_every or None,
        config_echo=cfg.echo,
    )
    code = _EXIT_BY_KIND[report.event.kind]
    if outdir is not None:
        write_series(outdir / "series.csv", report)
        (outdir / "report.json").write_text(
            json.dumps(report_as_dict(report, code), indent=2, sort_keys=True) + "\n"
        )
        (outdir / "report.txt").write_text(report_as_text(report, code))
    print(
        f"{cfg.scenario.name}: {report.event.kind.value} at t={report.event.t_event:.6e} "
        f"(max_u={report.final.max_u:.6e}, mass={report.final.mass:.6e})"
    )
    return code


def _sweep_row(payload: dict) -> dict:
    """One isolated sweep run; exceptions are folded into the row."""
    cfg_pairs = dict(payload["pairs"])
    values = payload["values"]
    row = {axis: values[axis] for axis in SWEEP_AXES}
    try:
        scenario = scenario_from_config(cfg_pairs)
        scenario = replace(
            scenario,
            params=replace(
                scenario.params,
                k_exp=values["k"],
                l_exp=values["l"],
                m_exp=values["m"],
                mu=values["mu"],
            ),
        )
        scale = values["amplitude"] / scenario.u0.amplitude
        scenario = replace(
            scenario,
            u0=GaussianBump(scenario.u0.amplitude * scale, scenario.u0.width),
            v0=GaussianBump(scenario.v0.amplitude * scale, scenario.v0.width),
            w0=GaussianBump(scenario.w0.amplitude * scale, scenario.w0.width),
        )
        grid = Grid(scenario.nx, scenario.ny)
        policy = StepPolicy(**payload["policy"])
        report = run(
            build_state(scenario, grid),
            scenario.params,
            policy,
            scenario.t_end,
            p_norms=(1.0, 2.0),
        )
        row.update(
            event=report.event.kind.value,
            t_event=report.event.t_event,
            final_max_u=report.final.max_u,
            theorem1=report.theorem1.satisfied,
            detail="",
        )
    except Exception as err:  # per-row isolation: a bad row must not kill the sweep
        row.update(
            event="Error",
            t_event=float("nan"),
            final_max_u=float("nan"),
            theorem1=theorem1_predicate(
                2,
                ModelParams(
                    mu=values["mu"], k_exp=max(values["k"], 1.0),
                    l_exp=max(values["l"], 1e-12), m_exp=max(values["m"], 1.0),
                ),
            ).satisfied
            if values["k"] >= 1 and values["m"] >= 1
            else False,
            detail=f"{type(err).__name__}: {err}",
        )
    return row


def sweep_command(cfg: ResolvedConfig) -> int:
    base = cfg.scenario
    axis_values = {
        "k": cfg.sweeps.get("k", (base.params.k_exp,)),
        "l": cfg.sweeps.get("l", (base.params.l_exp,)),
        "m": cfg.sweeps.get("m", (base.params.m_exp,)),
        "mu": cfg.sweeps.get("mu", (base.params.mu,)),
        "amplitude": cfg.sweeps.get("amplitude", (base.u0.amplitude,)),
    }
    combos = [
        dict(zip(SWEEP_AXES, combo))
        for combo in itertools.product(*(axis_values[a] for a in SWEEP_AXES))
    ]
    pairs = {
        "name": base.name,
        "mu": base.params.mu, "k": base.params.k_exp, "l": base.params.l_exp,
        "m": base.params.m_exp, "K": base.params.K_coef,
        "d1": base.params.d1, "d2": base.params.d2, "d3": base.params.d3,
        "chi": base.params.chi, "xi": base.params.xi,
        "alpha": base.params.alpha, "beta": base.params.beta,
        "u0_amp": base.u0.amplitude, "u0_width": base.u0.width,
        "v0_amp": base.v0.amplitude, "v0_width": base.v0.width,
        "w0_amp": base.w0.amplitude, "w0_width": base.w0.width,
        "t_end": cfg.t_end, "nx": base.nx, "ny": base.ny,
    }
    policy_fields = {
        "safety": cfg.policy.safety,
        "dt_max": cfg.policy.dt_max,
        "blowup_threshold": cfg.policy.blowup_threshold,
        "steady_tol": cfg.policy.steady_tol,
        "steady_patience": cfg.policy.steady_patience,
        "clip_negative": cfg.policy.clip_negative,
    }
    payloads = [
        {"pairs": pairs, "policy": policy_fields, "values": combo} for combo in combos
    ]

    workers = int(os.environ.get(WORKERS_ENV, "1") or "1")
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, payloads))
    else:
        rows = [_sweep_row(p) for p in payloads]
    rows.sort(key=lambda r: tuple(r[a] for a in SWEEP_AXES))

    cols = list(SWEEP_AXES) + ["event", "t_event", "final_max_u", "theorem1", "detail"]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(
            ",".join(
                [repr(float(row[a])) for a in SWEEP_AXES]
                + [
                    row["event"],
                    repr(float(row["t_event"])),
                    repr(float(row["final_max_u"])),
                    "true" if row["theorem1"] else "false",
                    str(row["detail"]).replace(",", ";"),
                ]
            )
        )
    table = "\n".join(lines) + "\n"
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "phase.csv").write_text(table)
    else:
        sys.stdout.write(table)
    print(f"sweep: {len(rows)} rows", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check_laplacian_oracle() -> str:
    rng = np.random.default_rng(20240801)
    worst = 0.0
    for grid in (Grid(8, 8), Grid(32, 32), Grid(8, 12)):
        f = rng.standard_normal(grid.shape)
        fast = laplacian(grid, f)
        ref = diagnostics.reference_laplacian(grid, f)
        scale = max(1.0, float(np.max(np.abs(ref))))
        worst = max(worst, float(np.max(np.abs(fast - ref))) / scale)
    if worst > 1e-13:
        raise AssertionError(f"laplacian deviates from the ghost-layer oracle: {worst:.3e}")
    return f"max relative deviation {worst:.3e}"


def _check_chemo_oracle() -> str:
    rng = np.random.default_rng(20240802)
    worst = 0.0
    for grid in (Grid(8, 8), Grid(32, 32), Grid(8, 12)):
        u = np.abs(rng.standard_normal(grid.shape)) + 0.1
        s = rng.standard_normal(grid.shape)
        for k in (1.0, 1.5, 2.0):
            fast = chemo_divergence(grid, u, s, k)
            ref = diagnostics.reference_chemo_divergence(grid, u, s, k)
            scale = max(1.0, float(np.max(np.abs(ref))))
            worst = max(worst, float(np.max(np.abs(fast - ref))) / scale)
    if worst > 1e-13:
        raise AssertionError(f"taxis divergence deviates from the face oracle: {worst:.3e}")
    return f"max relative deviation {worst:.3e}"


def _check_conservation() -> str:
    rng = np.random.default_rng(20240803)
    worst = 0.0
    for grid in (Grid(16, 16), Grid(32, 32)):
        f = rng.standard_normal(grid.shape)
        u = np.abs(rng.standard_normal(grid.shape)) + 0.1
        s = rng.standard_normal(grid.shape)
        flux_scale = float(np.max(np.abs(np.diff(f, axis=0)))) / grid.dx
        tol = 1e-12 * max(flux_scale, 1.0) * grid.nx * grid.ny
        val = abs(integrate(grid, laplacian(grid, f)))
        worst = max(worst, val / tol)
        flux_scale = (
            float(np.max(u) ** 1.5) * float(np.max(np.abs(np.diff(s, axis=0)))) / grid.dx
        )
        tol = 1e-12 * max(flux_scale, 1.0) * grid.nx * grid.ny
        val = abs(integrate(grid, chemo_divergence(grid, u, s, 1.5)))
        worst = max(worst, val / tol)
    if worst > 1.0:
        raise AssertionError(f"conservative operators leak mass: {worst:.3e}x tolerance")
    return f"worst leak at {worst:.3e} of tolerance"


def _check_mms_spatial() -> str:
    study = diagnostics.mms_spatial_study()
    if not 1.8 <= study.order <= 2.2:
        raise AssertionError(f"spatial order {study.order:.3f} outside [1.8, 2.2]")
    return f"order {study.order:.3f} over grids {tuple(round(1/h) for h in study.values)}"


def _check_mms_temporal() -> str:
    study = diagnostics.mms_temporal_study()
    if not 0.8 <= study.order <= 1.2:
        raise AssertionError(f"temporal order {study.order:.3f} outside [0.8, 1.2]")
    return f"order {study.order:.3f} over dt {study.values}"


def _check_mass_envelope() -> str:
    scenario = get_scenario("ex4_1", mu=1.0)
    grid = Grid(64, 64)
    report = run(
        build_state(scenario, grid), scenario.params, StepPolicy(), t_end=0.5
    )
    env = report.envelope_check
    if env is None or not env.passed:
        raise AssertionError(
            "mass envelope violated: " + ("missing" if env is None else env.summary())
        )
    return env.summary()


def verify_command(cfg: ResolvedConfig, quick: bool) -> int:
    checks = [
        ("laplacian_oracle", _check_laplacian_oracle),
        ("chemo_divergence_oracle", _check_chemo_oracle),
        ("discrete_conservation", _check_conservation),
    ]
    if not quick:
        checks += [
            ("mms_spatial_order", _check_mms_spatial),
            ("mms_temporal_order", _check_mms_temporal),
            ("mass_envelope", _check_mass_envelope),
        ]
    failures = []
    report_lines = []
    for name, fn in checks:
        try:
            detail = fn()
            line = f"ok {name}: {detail}"
        except Exception as err:
            failures.append(name)
            line = f"FAIL {name}: {err}"
        report_lines.append(line)
        print(line)
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "verify.txt").write_text("\n".join(report_lines) + "\n")
    if failures:
        print(f"verification failed at: {failures[0]}", file=sys.stderr)
        return 1
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--scenario", help="catalog name (e.g. ex4_1) or 'custom'")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--mu", type=float, help="nonlocal source rate override")
    p.add_argument("--t-end", dest="t_end", type=float, help="simulation horizon")
    p.add_argument("--nx", type=int, help="cells in x")
    p.add_argument("--ny", type=int, help="cells in y")
    p.add_argument("--safety", type=float, help="CFL safety factor in (0, 1]")
    p.add_argument("--dt-max", dest="dt_max", type=float, help="upper bound on dt")
    p.add_argument("--out", help="output directory")
    p.add_argument("--snapshots", type=int, help="snapshot count over the horizon")
    p.add_argument("--p-norms", dest="p_norms", help="comma list of L^p exponents")
    p.add_argument(
        "--clip-negative",
        dest="clip_negative",
        action="store_true",
        default=False,
        help="zero negative u after each step (exploration only)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archemo",
        description="Finite-difference runs of the attraction-repulsion "
        "chemotaxis system with a nonlocal logistic source",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_common_flags(p_run)
    p_sweep = sub.add_parser("sweep", help="grid of runs over parameter ranges")
    _add_common_flags(p_sweep)
    p_sweep.add_argument(
        "--sweep",
        action="append",
        metavar="AXIS=V1,V2,...",
        help=f"range for one axis of {SWEEP_AXES}; repeatable",
    )
    p_verify = sub.add_parser("verify", help="operator oracles and convergence studies")
    _add_common_flags(p_verify)
    p_verify.add_argument(
        "--quick", action="store_true", help="operator oracles only (seconds)"
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.mode, args)
        if args.mode == "run":
            return run_command(cfg)
        if args.mode == "sweep":
            return sweep_command(cfg)
        return verify_command(cfg, quick=args.quick)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
