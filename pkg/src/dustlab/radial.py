"""Lagrangian shell solver for radially symmetric dust in N >= 2 dimensions.

Under radial symmetry the velocity gradient has eigenvalue du/dr (radial,
simple) and u/r (tangential, multiplicity N-1), and their evolution along a
shell is exact:

    dr/dt       = u
    du/dt       = -Phi_r
    drho/dt     = -rho (l1 + (N-1) l2)
    dl1/dt      = -l1^2 - Phi_rr
    dl2/dt      = -l2^2 - Phi_r / r

with the radial Poisson field (no 4 pi: dimensionless normalization
Delta Phi = rho - lambda, sigma the unit-sphere surface measure)

    Phi_r(r)  = m_enc(r) / (sigma r^(N-1)) - lambda r / N
    Phi_rr    = (rho - lambda) - (N-1) Phi_r / r.

The background decomposition Phi = Phi_rho - lambda |x|^2 / (2N) is the
unique radially symmetric particular solution for the -lambda source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _integrate
from .core import (Geometry, LagrangianMarker, Trajectory, ValidatedScenario,
                   unit_sphere_area, validate_scenario)
from .errors import CrossedShells, EmptyState, ValidationError, ZeroRadius

_R_FLOOR = 1e-300  # keeps trial RK stages finite if a radius touches zero


@dataclass(frozen=True)
class ShellState:
    time: float
    positions: np.ndarray  # radii, strictly increasing
    velocities: np.ndarray
    densities: np.ndarray
    eig_radial: np.ndarray  # l1 = du/dr
    eig_tangential: np.ndarray  # l2 = u/r
    masses: np.ndarray
    dimension: int
    lam: float = 0.0

    include_origin_gap = True

    def div_u(self):
        return self.eig_radial + (self.dimension - 1) * self.eig_tangential

    def support_volume(self):
        n = self.dimension
        return float(unit_sphere_area(n) * self.positions[-1] ** n / n)

    def support_volume_upper(self):
        """Ball volume through the outer shell plus half that shell's cell
        volume (m/rho); exact for uniform density thanks to volume-median
        shell placement, an upper support estimate otherwise."""
        rho = self.densities[-1]
        if rho <= 0.0:
            return self.support_volume()
        return float(self.support_volume() + 0.5 * self.masses[-1] / rho)

    def marker(self, j: int) -> LagrangianMarker:
        return LagrangianMarker(position=float(self.positions[j]),
                                velocity=float(self.velocities[j]),
                                density=float(self.densities[j]),
                                eig_radial=float(self.eig_radial[j]),
                                eig_tangential=float(self.eig_tangential[j]),
                                mass_weight=float(self.masses[j]))


def _check_state(state: ShellState):
    if state.positions.size == 0:
        raise EmptyState("shell state has no shells")
    if np.any(state.positions < 0):
        raise ZeroRadius("negative shell radius")
    if np.any(np.diff(state.positions) <= 0):
        raise CrossedShells("shell radii are not strictly increasing")


def enclosed_mass(state: ShellState, r: float) -> float:
    """Mass strictly inside radius r, plus half of any shell at exactly r."""
    inside = state.masses[state.positions < r].sum()
    at = 0.5 * state.masses[state.positions == r].sum()
    return float(inside + at)


def _phi_r(masses, radii, lam, n, sigma):
    """Radial potential gradient at every shell, half-self-mass convention.

    Odd in r (field of the enclosed mass mirrored through the origin) so
    trial integrator stages that momentarily cross r=0 stay finite-valued.
    """
    m_enc = np.cumsum(masses) - 0.5 * masses
    r_abs = np.maximum(np.abs(radii), _R_FLOOR)
    grad = np.sign(radii) * m_enc / (sigma * r_abs ** (n - 1))
    return grad - lam * radii / n


def radial_force(state: ShellState, at_shell: int) -> float:
    """-Phi_r at the shell; a shell at r=0 feels zero force by symmetry."""
    _check_state(state)
    if state.positions[at_shell] == 0.0:
        return 0.0
    sigma = unit_sphere_area(state.dimension)
    return float(-_phi_r(state.masses, state.positions, state.lam,
                         state.dimension, sigma)[at_shell])


def radial_rhs(state: ShellState):
    """Time derivatives (dr, du, drho, dl1, dl2) of all shell fields."""
    _check_state(state)
    n = state.dimension
    sigma = unit_sphere_area(n)
    phi_r = _phi_r(state.masses, state.positions, state.lam, n, sigma)
    return _derivatives(state.positions, state.velocities, state.densities,
                        state.eig_radial, state.eig_tangential, phi_r,
                        state.lam, n)


def _derivatives(r, u, rho, l1, l2, phi_r, lam, n):
    r_abs = np.maximum(np.abs(r), _R_FLOOR)
    phi_r_over_r = phi_r / np.where(r == 0.0, _R_FLOOR, r)
    # at the exact center the tangential direction degenerates into the
    # radial one (removable singularity); continue l2 by l1 there
    phi_rr = (rho - lam) - (n - 1) * phi_r_over_r
    du = np.where(r_abs <= _R_FLOOR, 0.0, -phi_r)
    dl1 = -l1 * l1 - phi_rr
    dl2 = -l2 * l2 - phi_r_over_r
    dl2 = np.where(r_abs <= _R_FLOOR, dl1, dl2)
    drho = -rho * (l1 + (n - 1) * l2)
    return u, du, drho, dl1, dl2


def _make_model(vs: ValidatedScenario):
    masses = vs.masses
    lam = vs.lam
    n_dim = vs.dimension
    sigma = unit_sphere_area(n_dim)
    n = masses.size

    def rhs(t, y):
        r, u, rho, l1, l2 = (y[:n], y[n:2 * n], y[2 * n:3 * n],
                             y[3 * n:4 * n], y[4 * n:])
        phi_r = _phi_r(masses, r, lam, n_dim, sigma)
        return np.concatenate(_derivatives(r, u, rho, l1, l2, phi_r, lam, n_dim))

    def unpack(t, y):
        return ShellState(time=float(t), positions=y[:n].copy(),
                          velocities=y[n:2 * n].copy(),
                          densities=y[2 * n:3 * n].copy(),
                          eig_radial=y[3 * n:4 * n].copy(),
                          eig_tangential=y[4 * n:].copy(),
                          masses=masses, dimension=n_dim, lam=lam)

    y0 = np.concatenate((vs.positions, vs.velocities, vs.densities,
                         vs.eig_radial, vs.eig_tangential))
    return rhs, y0, unpack


def integrate_radial(scenario) -> Trajectory:
    """Adaptive RK4(5) integration to t_end or the first detector event."""
    vs = validate_scenario(scenario)
    if vs.geometry is not Geometry.RADIALND:
        raise ValidationError([("BadGeometry", "geometry",
                                "integrate_radial needs a RadialND scenario")])
    rhs, y0, unpack = _make_model(vs)
    return _integrate.run_characteristics(vs, rhs, y0, unpack)


def sample_radial(scenario, times) -> Trajectory:
    """States at the requested times via dense sampling (no event scan)."""
    vs = validate_scenario(scenario)
    rhs, y0, unpack = _make_model(vs)
    return _integrate.sample_states(vs, rhs, y0, unpack, times)
