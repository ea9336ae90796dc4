"""Weighted divergence functional H(t) and the integral-inequality checks.

H = sum_j m_j div(u)_j is the exact Lagrangian quadrature of the
mass-measure-weighted total divergence, because the fixed weights m_j are
the conserved mass measure. Likewise sum_j m_j rho_j quadratures the
density square integral (m_j = rho_j dV_j) without any remeshing.

All inequality margins are oriented (large side minus small side), so
nonnegative means "holds". Checks are reported, never enforced: a
violation is a flagged report line or a test failure, not a runtime abort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import DiagnosticsRecord, Geometry, Trajectory
from .errors import HypothesisViolated

RESIDUAL_FLOOR = 1e-6
NEAR_SINGULAR_FRACTION = 0.01  # last 1% before an event: informational only


def total_mass(state) -> float:
    return float(np.sum(state.masses))


def weighted_divergence_functional(state) -> float:
    """H = sum_j m_j div(u)_j."""
    return float(np.sum(state.masses * state.div_u()))


def support_volume(state) -> float:
    return state.support_volume()


def cauchy_schwarz_check_divergence(state) -> float:
    """M * integral of (div u)^2 dmu  minus  (integral of div u dmu)^2."""
    m = state.masses
    d = state.div_u()
    big = total_mass(state) * float(np.sum(m * d * d))
    small = float(np.sum(m * d)) ** 2
    return big - small


def cauchy_schwarz_check_density(state, v_sup: float) -> float:
    """v_sup * integral of rho^2 dx  minus  M^2, valid while the support
    volume stays within v_sup.

    The gate uses the upper support estimate (marker extent plus boundary
    half-cells): asserting the inequality needs the whole continuum support
    inside v_sup, and the bare marker extent lags it by the half-cells.
    """
    vol = state.support_volume_upper()
    if vol > v_sup * (1 + 1e-12):
        raise HypothesisViolated(
            f"support volume {vol:g} exceeds v_sup {v_sup:g}")
    mass = total_mass(state)
    rho_sq_integral = float(np.sum(state.masses * state.densities))
    return v_sup * rho_sq_integral - mass * mass


def _div_rate(state):
    """Material derivative of div u per marker, from the exact
    characteristic ODEs."""
    from . import geometry1d, radial

    if state.eig_tangential is None:
        _, _, _, dw = geometry1d.slab_rhs(state)
        return dw
    _, _, _, dl1, dl2 = radial.radial_rhs(state)
    return dl1 + (state.dimension - 1) * dl2


def transport_theorem_residual(trajectory: Trajectory, step: int) -> float:
    """|dH/dt - sum_j m_j D(div u)/Dt| over the step (step, step+1),
    both sides taken at the step midpoint (finite difference vs trapezoid);
    expected O(dt^2) on smooth intervals."""
    a, b = trajectory.states[step], trajectory.states[step + 1]
    dt = b.time - a.time
    dh = (weighted_divergence_functional(b) - weighted_divergence_functional(a)) / dt
    rate = 0.5 * (float(np.sum(a.masses * _div_rate(a)))
                  + float(np.sum(b.masses * _div_rate(b))))
    return abs(dh - rate)


def riccati_inequality_residual(trajectory: Trajectory, step: int,
                                v_sup: Optional[float] = None) -> float:
    """dH/dt + H^2/(MN) + M^2/v_sup - lambda M at the step midpoint.

    Nonpositive (within tolerance) while the support stays within v_sup;
    negative values are slack. Raises HypothesisViolated when the support
    bound fails at either end of the step.
    """
    if v_sup is None:
        v_sup = trajectory.validated.v_sup
    a, b = trajectory.states[step], trajectory.states[step + 1]
    for st in (a, b):
        vol = st.support_volume_upper()
        if vol > v_sup * (1 + 1e-12):
            raise HypothesisViolated(
                f"support volume {vol:g} exceeds v_sup {v_sup:g} at t={st.time:g}")
    mass = total_mass(a)
    n = trajectory.validated.dimension
    lam = trajectory.validated.lam
    dt = b.time - a.time
    h_a = weighted_divergence_functional(a)
    h_b = weighted_divergence_functional(b)
    h_mid = 0.5 * (h_a + h_b)
    return (h_b - h_a) / dt + h_mid**2 / (mass * n) + mass**2 / v_sup - lam * mass


def residual_tolerance(state) -> float:
    """Reporting tolerance, scaled to stay meaningful near blowup."""
    h = weighted_divergence_functional(state)
    mass = total_mass(state)
    return RESIDUAL_FLOOR * max(1.0, h * h, mass * mass)


# ---------------------------------------------------------------------------
# Per-step diagnostics and the proof-chain report
# ---------------------------------------------------------------------------


def diagnostics_record(trajectory: Trajectory, i: int) -> DiagnosticsRecord:
    """Diagnostics at accepted step i; the step residuals pair i with i-1
    and are NaN on the first record."""
    st = trajectory.states[i]
    v_sup = trajectory.validated.v_sup
    try:
        cs_rho = cauchy_schwarz_check_density(st, v_sup)
    except HypothesisViolated:
        cs_rho = math.nan
    if i == 0:
        riccati = math.nan
    else:
        try:
            riccati = riccati_inequality_residual(trajectory, i - 1, v_sup)
        except HypothesisViolated:
            riccati = math.nan
    return DiagnosticsRecord(
        time=st.time,
        h_value=weighted_divergence_functional(st),
        total_mass=total_mass(st),
        support_volume=support_volume(st),
        cs_divergence_margin=cauchy_schwarz_check_divergence(st),
        cs_density_margin=cs_rho,
        riccati_residual=riccati,
        min_density=float(np.min(st.densities)),
        max_density=float(np.max(st.densities)),
        max_abs_div=float(np.max(np.abs(st.div_u()))),
    )


@dataclass(frozen=True)
class ProofChainStep:
    time: float
    transport_residual: float
    cs_divergence_margin: float
    cs_density_margin: float
    riccati_residual: float
    hypothesis_ok: bool
    informational: bool  # inside the near-singular window; not asserted


@dataclass(frozen=True)
class ProofChainReport:
    steps: List[ProofChainStep]
    worst_cs_divergence: float
    worst_cs_density: float
    worst_riccati: float
    first_violation_time: Optional[float]

    @property
    def holds(self) -> bool:
        return self.first_violation_time is None

    def summary_text(self) -> str:
        lines = [
            f"steps checked:        {sum(1 for s in self.steps if not s.informational)}",
            f"informational steps:  {sum(1 for s in self.steps if s.informational)}",
            f"worst cs divergence margin: {self.worst_cs_divergence:.6e}",
            f"worst cs density margin:    {self.worst_cs_density:.6e}",
            f"worst riccati residual:     {self.worst_riccati:.6e}",
        ]
        if self.first_violation_time is None:
            lines.append("proof chain: all inequalities hold within tolerance")
        else:
            lines.append(f"proof chain: FIRST VIOLATION at t={self.first_violation_time:.9g}")
        return "\n".join(lines)


def proof_chain_report(trajectory: Trajectory,
                       v_sup: Optional[float] = None) -> ProofChainReport:
    """Verify the full inequality chain on every accepted step of a run.

    The last 1% of the time horizon before an event is marked informational:
    the finite-difference dH/dt degrades near the singularity and is not
    asserted there.
    """
    if v_sup is None:
        v_sup = trajectory.validated.v_sup
    cutoff = math.inf
    if trajectory.event is not None:
        cutoff = (1.0 - NEAR_SINGULAR_FRACTION) * trajectory.event.t_lo

    steps: List[ProofChainStep] = []
    worst_div = math.inf
    worst_rho = math.inf
    worst_ric = -math.inf
    first_violation = None
    for i in range(len(trajectory) - 1):
        a, b = trajectory.states[i], trajectory.states[i + 1]
        info = b.time > cutoff
        hypothesis_ok = True
        cs_div = cauchy_schwarz_check_divergence(b)
        try:
            cs_rho = cauchy_schwarz_check_density(b, v_sup)
            ric = riccati_inequality_residual(trajectory, i, v_sup)
        except HypothesisViolated:
            hypothesis_ok = False
            cs_rho = math.nan
            ric = math.nan
        transport = transport_theorem_residual(trajectory, i)
        steps.append(ProofChainStep(time=b.time, transport_residual=transport,
                                    cs_divergence_margin=cs_div,
                                    cs_density_margin=cs_rho,
                                    riccati_residual=ric,
                                    hypothesis_ok=hypothesis_ok,
                                    informational=info))
        if info:
            continue
        tol = residual_tolerance(b)
        worst_div = min(worst_div, cs_div)
        violated = cs_div < -tol
        if hypothesis_ok:
            worst_rho = min(worst_rho, cs_rho)
            worst_ric = max(worst_ric, ric)
            violated = violated or cs_rho < -tol or ric > tol
        if violated and first_violation is None:
            first_violation = b.time
    return ProofChainReport(steps=steps,
                            worst_cs_divergence=worst_div,
                            worst_cs_density=worst_rho,
                            worst_riccati=worst_ric,
                            first_violation_time=first_violation)
