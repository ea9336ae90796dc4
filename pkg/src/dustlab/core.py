"""Domain types, initial-data profiles, and scenario validation.

A scenario describes pressureless self-gravitating dust in a 1-D slab or a
radially symmetric ball: geometry, dimension N, background constant lambda,
the assumed volume bound v_sup, and the initial density/velocity profiles.
Validation discretizes the initial data into Lagrangian markers whose fixed
mass weights are midpoint quadratures of the density over each marker's
initial cell, so the total mass is conserved by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import yaml

from .errors import ValidationError


class Geometry(Enum):
    SLAB1D = "slab1d"
    RADIALND = "radialnd"


def unit_sphere_area(n: int) -> float:
    """Surface measure of the unit (n-1)-sphere, sigma = 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, radius: float) -> float:
    return unit_sphere_area(n) * radius**n / n


# ---------------------------------------------------------------------------
# Initial profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformDensity:
    value: float
    lo: float
    hi: float

    @property
    def support(self):
        return (self.lo, self.hi)

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)


@dataclass(frozen=True)
class GaussianDensity:
    """Gaussian bump truncated to [lo, hi] (density is zero outside)."""

    amplitude: float
    center: float
    width: float
    lo: float
    hi: float

    @property
    def support(self):
        return (self.lo, self.hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class TabulatedDensity:
    """Sampled density, linearly interpolated; support is the sample range."""

    xs: tuple
    values: tuple

    @property
    def support(self):
        return (self.xs[0], self.xs[-1])

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)


@dataclass(frozen=True)
class ZeroVelocity:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class UniformVelocity:
    value: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HubbleVelocity:
    """u = rate * x (slab) or rate * r (radial)."""

    rate: float

    def __call__(self, x):
        return self.rate * np.asarray(x, dtype=float)

    def gradient(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.rate)


@dataclass(frozen=True)
class TabulatedVelocity:
    xs: tuple
    values: tuple

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)

    def gradient(self, x):
        xs = np.asarray(self.xs)
        vs = np.asarray(self.values)
        slopes = np.diff(vs) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, np.asarray(x, dtype=float), side="right") - 1,
                      0, len(slopes) - 1)
        return slopes[idx]


# ---------------------------------------------------------------------------
# Settings and marker/state types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NumericalSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    div_blowup_threshold: float = 1e8
    rho_blowup_threshold: float = 1e12
    crossing_gap_threshold: float = 1e-12
    max_steps: int = 500_000
    # Step cap keeps the midpoint finite differences used by the proof-chain
    # residuals second-order-accurate below the 1e-6 reporting floor.
    max_step: float = 4e-3

    def check(self):
        bad = []
        for name in ("rel_tol", "abs_tol", "div_blowup_threshold",
                     "rho_blowup_threshold", "crossing_gap_threshold", "max_step"):
            if getattr(self, name) <= 0:
                bad.append(("BadSettings", name, "must be strictly positive"))
        if self.max_steps <= 0:
            bad.append(("BadSettings", "max_steps", "must be strictly positive"))
        return bad


@dataclass(frozen=True)
class LagrangianMarker:
    """One characteristic: position, velocity, density, velocity-gradient
    eigenvalues, and a mass weight that is fixed at t=0."""

    position: float
    velocity: float
    density: float
    eig_radial: float
    mass_weight: float
    eig_tangential: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    geometry: Geometry
    dimension: int
    lam: float
    v_sup: float
    density: object
    velocity: object
    marker_count: int
    t_end: float
    settings: NumericalSettings = field(default_factory=NumericalSettings)


@dataclass(frozen=True)
class ValidatedScenario:
    """Normalized scenario plus its initial marker discretization."""

    scenario: Scenario
    positions: np.ndarray
    velocities: np.ndarray
    densities: np.ndarray
    eig_radial: np.ndarray
    eig_tangential: Optional[np.ndarray]
    masses: np.ndarray
    initial_volume: float
    total_mass: float
    h0: float

    @property
    def geometry(self):
        return self.scenario.geometry

    @property
    def dimension(self):
        return self.scenario.dimension

    @property
    def lam(self):
        return self.scenario.lam

    @property
    def v_sup(self):
        return self.scenario.v_sup

    @property
    def t_end(self):
        return self.scenario.t_end

    @property
    def settings(self):
        return self.scenario.settings


def _volume_median_radii(edges: np.ndarray, n: int) -> np.ndarray:
    """Radius splitting each shell [r_i, r_{i+1}] into equal volumes.

    Placing the marker at the volume median (rather than the arithmetic
    midpoint) makes the enclosed mass at the marker exact for uniform
    density, so the uniform self-gravitating equilibrium has exactly zero
    discrete force.
    """
    lo = edges[:-1] ** n
    hi = edges[1:] ** n
    return (0.5 * (lo + hi)) ** (1.0 / n)


def validate_scenario(raw) -> ValidatedScenario:
    """Check all scenario invariants and build the marker discretization.

    Idempotent: a ValidatedScenario passes through unchanged.
    Raises ValidationError carrying every violation found.
    """
    if isinstance(raw, ValidatedScenario):
        return raw

    violations = []
    s = raw
    if s.geometry is Geometry.SLAB1D and s.dimension != 1:
        s = replace(s, dimension=1)  # forced to 1 for the slab
    if s.geometry is Geometry.RADIALND and s.dimension < 2:
        violations.append(("BadDimension", "dimension",
                           f"radial geometry needs dimension >= 2, got {s.dimension}"))
    if s.marker_count < 2:
        violations.append(("BadMarkerCount", "marker_count", "need at least 2 markers"))
    if s.v_sup <= 0:
        violations.append(("BadVolumeBound", "v_sup", "must be strictly positive"))
    if s.t_end <= 0:
        violations.append(("BadHorizon", "t_end", "must be strictly positive"))
    violations.extend(s.settings.check())

    lo, hi = s.density.support
    if s.geometry is Geometry.RADIALND and lo < 0:
        violations.append(("BadSupport", "density", "radial support must have lo >= 0"))
    if hi <= lo:
        violations.append(("BadSupport", "density", "empty support"))

    if violations:
        raise ValidationError(violations)

    # Density non-negativity on a fine sample of the support.
    grid = np.linspace(lo, hi, max(4 * s.marker_count + 1, 101))
    rho_grid = np.asarray(s.density(grid), dtype=float)
    if np.any(rho_grid < 0):
        bad = grid[np.argmin(rho_grid)]
        violations.append(("NegativeDensity", "density",
                           f"density sample {rho_grid.min():g} < 0 near x={bad:g}"))

    if s.geometry is Geometry.SLAB1D:
        initial_volume = hi - lo
    else:
        initial_volume = ball_volume(s.dimension, hi)
    if initial_volume > s.v_sup * (1 + 1e-12):
        violations.append(("VolumeExceedsBound", "v_sup",
                           f"initial support volume {initial_volume:g} exceeds v_sup {s.v_sup:g}"))

    if violations:
        raise ValidationError(violations)

    edges = np.linspace(lo, hi, s.marker_count + 1)
    if s.geometry is Geometry.SLAB1D:
        pos = 0.5 * (edges[:-1] + edges[1:])
        cell_vol = np.diff(edges)
    else:
        n = s.dimension
        pos = _volume_median_radii(edges, n)
        cell_vol = unit_sphere_area(n) * np.diff(edges**n) / n

    rho = np.asarray(s.density(pos), dtype=float)
    masses = rho * cell_vol

    # Vacuum cells carry no mass measure and are not represented by markers.
    keep = masses > 0
    pos, rho, masses = pos[keep], rho[keep], masses[keep]
    if pos.size < 2:
        raise ValidationError([("NegativeDensity", "density",
                                "fewer than 2 markers with positive mass")])

    vel = np.asarray(s.velocity(pos), dtype=float)
    eig1 = np.asarray(s.velocity.gradient(pos), dtype=float)
    if s.geometry is Geometry.RADIALND:
        eig2 = np.where(pos > 0, vel / np.where(pos > 0, pos, 1.0), eig1)
        div0 = eig1 + (s.dimension - 1) * eig2
    else:
        eig2 = None
        div0 = eig1

    total_mass = float(masses.sum())
    h0 = float(np.sum(masses * div0))
    return ValidatedScenario(
        scenario=s,
        positions=pos,
        velocities=vel,
        densities=rho,
        eig_radial=eig1,
        eig_tangential=eig2,
        masses=masses,
        initial_volume=initial_volume,
        total_mass=total_mass,
        h0=h0,
    )


def initial_vorticity_satisfied(vs: ValidatedScenario):
    """Confirm the zero-initial-vorticity hypothesis, with the reason.

    In 1-D the antisymmetric part of the 1x1 velocity gradient vanishes
    identically; a radial field u(r) x/r has a symmetric gradient. Both
    supported geometries therefore satisfy the hypothesis by construction;
    this exists so certificates can record that fact.
    """
    vs = validate_scenario(vs)
    if vs.geometry is Geometry.SLAB1D:
        return True, "1-D: condition automatic"
    return True, "radial gradient is symmetric"


# ---------------------------------------------------------------------------
# Diagnostics and trajectory containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    h_value: float
    total_mass: float
    support_volume: float
    cs_divergence_margin: float
    cs_density_margin: float
    riccati_residual: float
    min_density: float
    max_density: float
    max_abs_div: float


@dataclass
class Trajectory:
    """Time-ordered accepted states of one run plus its termination record."""

    validated: ValidatedScenario
    states: list
    event: object = None  # detector.BlowupEvent when one fired
    termination: str = "t_end"

    @property
    def masses(self):
        return self.validated.masses

    @property
    def times(self):
        return np.array([st.time for st in self.states])

    def __len__(self):
        return len(self.states)


# ---------------------------------------------------------------------------
# Scenario file ingestion (YAML; one document per scenario)
# ---------------------------------------------------------------------------

_DENSITY_KINDS = {"uniform", "gaussian", "table"}
_VELOCITY_KINDS = {"zero", "uniform", "hubble", "table"}


def _build_density(spec: dict):
    kind = spec.get("kind")
    if kind == "uniform":
        lo, hi = spec["support"]
        return UniformDensity(value=float(spec["value"]), lo=float(lo), hi=float(hi))
    if kind == "gaussian":
        lo, hi = spec["support"]
        return GaussianDensity(amplitude=float(spec["amplitude"]),
                               center=float(spec.get("center", 0.0)),
                               width=float(spec["width"]), lo=float(lo), hi=float(hi))
    if kind == "table":
        return TabulatedDensity(xs=tuple(float(v) for v in spec["x"]),
                                values=tuple(float(v) for v in spec["values"]))
    raise ValidationError([("BadProfile", "density",
                            f"unknown density kind {kind!r}, expected one of {sorted(_DENSITY_KINDS)}")])


def _build_velocity(spec: dict):
    kind = spec.get("kind")
    if kind == "zero":
        return ZeroVelocity()
    if kind == "uniform":
        return UniformVelocity(value=float(spec["value"]))
    if kind == "hubble":
        return HubbleVelocity(rate=float(spec["rate"]))
    if kind == "table":
        return TabulatedVelocity(xs=tuple(float(v) for v in spec["x"]),
                                 values=tuple(float(v) for v in spec["values"]))
    raise ValidationError([("BadProfile", "velocity",
                            f"unknown velocity kind {kind!r}, expected one of {sorted(_VELOCITY_KINDS)}")])


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        geometry = Geometry(str(doc["geometry"]).lower())
        settings = NumericalSettings(**doc.get("tolerances", {}))
        return Scenario(
            geometry=geometry,
            dimension=int(doc.get("dimension", 1)),
            lam=float(doc.get("lambda", 0.0)),
            v_sup=float(doc["v_sup"]),
            density=_build_density(doc["initial_profile"]["density"]),
            velocity=_build_velocity(doc["initial_profile"]["velocity"]),
            marker_count=int(doc["marker_count"]),
            t_end=float(doc["t_end"]),
            settings=settings,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError([("BadScenarioFile", "scenario", str(exc))]) from exc


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ValidationError([("BadScenarioFile", "scenario", "expected a mapping at top level")])
    return scenario_from_dict(doc)
