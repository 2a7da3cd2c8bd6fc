"""Named experiment setups: Gaussian-bump initial data plus exponents and horizons.

Each catalog entry reproduces one of the published test cases on the unit
square with all transport coefficients equal to one, in a mu = 0 and a mu = 1
variant where both were run (case 4.6 only ships the mu = 1 variant).  The
`expected` tag records the published outcome class and drives regression
checks; see the acceptance suite for which of those the conservative scheme
actually reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid
from .model import ModelParams
from .stepper import SimState, initial_state

__all__ = [
    "GaussianBump",
    "Scenario",
    "build_state",
    "catalog",
    "get",
    "scenario_to_config",
    "scenario_from_config",
    "event_matches_expected",
]

EXPECTED_CONVERGED = "converged"
EXPECTED_BLOWUP = "blowup"
EXPECTED_IMAGINARY = "imaginary"

PAPER_GRID_N = 201

_T_END = {
    EXPECTED_CONVERGED: 10.0,
    EXPECTED_BLOWUP: 1e-4,
    EXPECTED_IMAGINARY: 5e-6,
}


@dataclass(frozen=True)
class GaussianBump:
    """Radially symmetric bell A * exp(-width * (x^2 + y^2))."""

    amplitude: float
    width: float

    def __post_init__(self):
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")
        if not self.width > 0.0:
            raise ValueError("width must be positive")

    def sample(self, grid: Grid) -> np.ndarray:
        X, Y = grid.mesh()
        return self.amplitude * np.exp(-self.width * (X * X + Y * Y))


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    u0: GaussianBump
    v0: GaussianBump
    w0: GaussianBump
    t_end: float
    nx: int = PAPER_GRID_N
    ny: int = PAPER_GRID_N
    expected: str | None = None


def build_state(scenario: Scenario, grid: Grid) -> SimState:
    """Sample the three bumps at cell centers; time starts at zero."""
    return initial_state(
        grid,
        scenario.u0.sample(grid),
        scenario.v0.sample(grid),
        scenario.w0.sample(grid),
    )


def _entry(num, exps, u0, v0, w0, expected, mus):
    l, k, m = exps
    out = []
    for mu in mus:
        out.append(
            Scenario(
                name=f"ex4_{num}_mu{mu}",
                params=ModelParams(mu=float(mu), l_exp=l, k_exp=k, m_exp=m),
                u0=GaussianBump(*u0),
                v0=GaussianBump(*v0),
                w0=GaussianBump(*w0),
                t_end=_T_END[expected],
                expected=expected,
            )
        )
    return out


_LINEAR = (1.0, 1.0, 1.0)        # f(u) = u, k = m = 1
_SUBLINEAR = (0.5, 1.0, 1.8)     # f(u) = sqrt(u), k = 1, m = 1.8
_SUPERLINEAR_K = (0.4, 1.5, 1.8)  # f(u) = u^0.4, k = 1.5, m = 1.8


def catalog() -> tuple[Scenario, ...]:
    """All published cases; 21 entries (ten in two mu variants, 4.6 in one)."""
    entries = []
    entries += _entry(1, _LINEAR, (1000, 100), (500, 50), (500, 50),
                      EXPECTED_CONVERGED, (0, 1))
    entries += _entry(2, _LINEAR, (1000, 100), (500, 50), (250, 25),
                      EXPECTED_CONVERGED, (0, 1))
    entries += _entry(3, _LINEAR, (1000, 100), (250, 25), (500, 50),
                      EXPECTED_BLOWUP, (0, 1))
    entries += _entry(4, _LINEAR, (100, 10), (25, 2.5), (50, 5),
                      EXPECTED_CONVERGED, (0, 1))
    entries += _entry(5, _SUBLINEAR, (1000, 100), (500, 50), (500, 50),
                      EXPECTED_CONVERGED, (0, 1))
    entries += _entry(6, _SUBLINEAR, (1000, 100), (500, 50), (250, 25),
                      EXPECTED_CONVERGED, (1,))
    entries += _entry(7, _SUBLINEAR, (1000, 100), (250, 25), (500, 50),
                      EXPECTED_BLOWUP, (0, 1))
    entries += _entry(8, _SUBLINEAR, (100, 10), (25, 2.5), (50, 5),
                      EXPECTED_CONVERGED, (0, 1))
    entries += _entry(9, _SUPERLINEAR_K, (1000, 100), (500, 50), (250, 25),
                      EXPECTED_IMAGINARY, (0, 1))
    entries += _entry(10, _SUPERLINEAR_K, (1000, 100), (250, 25), (500, 50),
                      EXPECTED_IMAGINARY, (0, 1))
    entries += _entry(11, _SUPERLINEAR_K, (10, 10), (5, 5), (2.5, 2.5),
                      EXPECTED_CONVERGED, (0, 1))
    return tuple(entries)


def get(name: str, mu: float | None = None) -> Scenario:
    """Look up a catalog entry by full name or by base name plus mu.

    A bare base name picks the mu = 0 variant when it exists, else the single
    cataloged variant.  A mu override on a full or base name rebuilds the
    entry with that rate.
    """
    entries = catalog()
    by_name = {s.name: s for s in entries}
    if name in by_name:
        s = by_name[name]
    else:
        variants = [s for s in entries if s.name.rsplit("_mu", 1)[0] == name]
        if not variants:
            raise KeyError(f"unknown scenario {name!r}")
        s = variants[0]
    if mu is not None and mu != s.params.mu:
        s = replace(
            s,
            name=f"{s.name.rsplit('_mu', 1)[0]}_mu{mu:g}",
            params=replace(s.params, mu=float(mu)),
        )
    return s


def event_matches_expected(kind_value: str, expected: str) -> bool:
    """Map terminal event kinds onto the catalog's outcome classes.

    A run that reaches its horizon without blowup or imaginary state counts
    as converged-class.
    """
    if expected == EXPECTED_CONVERGED:
        return kind_value in ("Converged", "TimeLimit")
    if expected == EXPECTED_BLOWUP:
        return kind_value == "Blowup"
    if expected == EXPECTED_IMAGINARY:
        return kind_value == "ImaginaryState"
    raise ValueError(f"unknown expected class {expected!r}")


# --- serialization (same flat key=value format the CLI config uses) ---------

_PARAM_KEYS = {
    "d1": "d1", "d2": "d2", "d3": "d3",
    "chi": "chi", "xi": "xi", "alpha": "alpha", "beta": "beta",
    "mu": "mu", "K": "K_coef", "l": "l_exp", "k": "k_exp", "m": "m_exp",
}


def scenario_to_config(s: Scenario) -> str:
    """Flat key=value text; floats use repr so round-trips are bit-identical."""
    lines = [f"name={s.name}"]
    for key, attr in _PARAM_KEYS.items():
        lines.append(f"{key}={getattr(s.params, attr)!r}")
    for tag, bump in (("u0", s.u0), ("v0", s.v0), ("w0", s.w0)):
        lines.append(f"{tag}_amp={bump.amplitude!r}")
        lines.append(f"{tag}_width={bump.width!r}")
    lines.append(f"t_end={s.t_end!r}")
    lines.append(f"nx={s.nx}")
    lines.append(f"ny={s.ny}")
    if s.expected is not None:
        lines.append(f"expected={s.expected}")
    return "\n".join(lines) + "\n"


def scenario_from_config(pairs: dict) -> Scenario:
    """Inverse of scenario_to_config; unknown keys are ignored."""
    params = ModelParams(
        **{attr: float(pairs[key]) for key, attr in _PARAM_KEYS.items() if key in pairs}
    )
    bumps = {}
    for tag in ("u0", "v0", "w0"):
        bumps[tag] = GaussianBump(
            amplitude=float(pairs[f"{tag}_amp"]), width=float(pairs[f"{tag}_width"])
        )
    return Scenario(
        name=str(pairs.get("name", "custom")),
        params=params,
        u0=bumps["u0"],
        v0=bumps["v0"],
        w0=bumps["w0"],
        t_end=float(pairs.get("t_end", 10.0)),
        nx=int(pairs.get("nx", PAPER_GRID_N)),
        ny=int(pairs.get("ny", PAPER_GRID_N)),
        expected=pairs.get("expected"),
    )
