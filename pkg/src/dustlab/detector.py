"""Blowup-event detection, bisection bracketing, and escape reporting.

A C^2 breakdown has no single observable; it is detected through three
redundant triggers, checked in fixed priority order so classification is
deterministic when several fire within one step:

  1. ShellCrossing      adjacent characteristic gap below crossing_gap_threshold
                        (a swap shows up as a negative gap);
  2. DivergenceThreshold |div u| exceeding div_blowup_threshold;
  3. DensityThreshold   rho exceeding rho_blowup_threshold.

Along dust characteristics div u -> -inf and rho -> +inf together at shell
crossing, so the triggers guard each other. Integration stops at the event;
there is no continuation past the singularity.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import BracketStall, DustLabError
from .core import NumericalSettings, Trajectory

BRACKET_REL_WIDTH = 1e-8


class Trigger(Enum):
    SHELL_CROSSING = "ShellCrossing"
    DIVERGENCE_THRESHOLD = "DivergenceThreshold"
    DENSITY_THRESHOLD = "DensityThreshold"


@dataclass(frozen=True)
class BlowupEvent:
    time_bracket: Tuple[float, float]
    trigger: Trigger
    marker_index: int
    values_at_t_lo: object  # field state at the bracket's lower edge

    @property
    def t_lo(self):
        return self.time_bracket[0]

    @property
    def t_hi(self):
        return self.time_bracket[1]


def _gaps(state):
    pos = state.positions
    if getattr(state, "include_origin_gap", False):
        pos = np.concatenate(([0.0], pos))
    return np.diff(pos)


def _crossing_holds(state, settings):
    return bool(np.min(_gaps(state)) < settings.crossing_gap_threshold)


def _divergence_holds(state, settings):
    return bool(np.max(np.abs(state.div_u())) > settings.div_blowup_threshold)


def _density_holds(state, settings):
    return bool(np.max(state.densities) > settings.rho_blowup_threshold)


_CONDITIONS = (
    (Trigger.SHELL_CROSSING, _crossing_holds),
    (Trigger.DIVERGENCE_THRESHOLD, _divergence_holds),
    (Trigger.DENSITY_THRESHOLD, _density_holds),
)


def trigger_condition(trigger: Trigger) -> Callable:
    return dict(_CONDITIONS)[trigger]


def trigger_marker_index(state, trigger: Trigger) -> int:
    if trigger is Trigger.SHELL_CROSSING:
        return int(np.argmin(_gaps(state)))
    if trigger is Trigger.DIVERGENCE_THRESHOLD:
        return int(np.argmax(np.abs(state.div_u())))
    return int(np.argmax(state.densities))


def scan_step(prev_state, next_state, settings: NumericalSettings) -> Optional[Trigger]:
    """First trigger (in priority order) holding at next_state but not prev_state."""
    for trig, holds in _CONDITIONS:
        if holds(next_state, settings) and not holds(prev_state, settings):
            return trig
    return None


def bracket_event(reintegrate, unpack, t_prev, y_prev, t_next, trigger: Trigger,
                  settings: NumericalSettings, max_iter: int = 200) -> BlowupEvent:
    """Bisect the trigger time within one accepted step.

    reintegrate(t0, y0, t1) -> y1 re-runs the solver over a sub-interval;
    unpack(t, y) -> field state. Precondition: the trigger holds at t_next
    and not at t_prev.
    """
    holds = trigger_condition(trigger)
    state_prev = unpack(t_prev, y_prev)
    if holds(state_prev, settings):
        raise DustLabError("bracket_event precondition: trigger already holds at t_prev")
    lo, hi = t_prev, t_next
    y_lo = y_prev
    width_goal = BRACKET_REL_WIDTH * max(1.0, abs(t_next))
    it = 0
    while hi - lo > width_goal:
        it += 1
        if it > max_iter:
            raise BracketStall(f"bracket did not shrink below {width_goal:g} in {max_iter} bisections")
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # floating-point exhaustion; bracket is as tight as possible
        y_mid = reintegrate(lo, y_lo, mid)
        if holds(unpack(mid, y_mid), settings):
            hi = mid
        else:
            lo, y_lo = mid, y_mid
    state_lo = unpack(lo, y_lo)
    y_hi = reintegrate(lo, y_lo, hi)
    idx = trigger_marker_index(unpack(hi, y_hi), trigger)
    return BlowupEvent(time_bracket=(lo, hi), trigger=trigger,
                       marker_index=idx, values_at_t_lo=state_lo)


# ---------------------------------------------------------------------------
# Escape reporting (Corollary-3 logic)
# ---------------------------------------------------------------------------


class EscapeStatus(Enum):
    CERTIFICATE_HONORED = "certificate honored"
    HYPOTHESIS_VIOLATED = "hypothesis violated: support escaped V_sup"
    CONTRADICTION = "CONTRADICTION -- investigate"
    INCONCLUSIVE = "horizon ended before the certified bound"
    NO_PREDICTION = "no prediction"


@dataclass(frozen=True)
class EscapeReport:
    status: EscapeStatus
    message: str


def escape_report(trajectory: Trajectory, v_sup: float, certificate) -> EscapeReport:
    """Reconcile a run against its analytic certificate.

    A certified run whose support stayed within v_sup must blow up by the
    certified bound; if instead the support escaped v_sup first, the outcome
    is the alternative allowed by the escape corollary. A certified run that
    neither blew up nor escaped is a contradiction and must never occur.
    """
    event = trajectory.event
    volumes = np.array([st.support_volume() for st in trajectory.states])
    times = trajectory.times
    escaped = volumes > v_sup * (1 + 1e-12)
    t_escape = float(times[escaped][0]) if np.any(escaped) else None

    certified = certificate is not None and certificate.t_bound is not None
    if not certified:
        if event is not None:
            return EscapeReport(EscapeStatus.NO_PREDICTION,
                               f"no prediction; event observed at t={event.t_hi:.6g}")
        return EscapeReport(EscapeStatus.NO_PREDICTION, "no prediction, no event")

    t_bound = certificate.t_bound
    tol = 1e-6
    if event is not None:
        if event.t_hi <= t_bound + tol:
            return EscapeReport(EscapeStatus.CERTIFICATE_HONORED,
                               f"event at t={event.t_hi:.6g} <= certified bound {t_bound:.6g}")
        if t_escape is not None and t_escape < t_bound:
            return EscapeReport(EscapeStatus.HYPOTHESIS_VIOLATED,
                               f"support escaped V_sup at t={t_escape:.6g} before the bound "
                               f"{t_bound:.6g}; late event is consistent with the escape corollary")
        return EscapeReport(EscapeStatus.CONTRADICTION,
                            f"event at t={event.t_hi:.6g} after bound {t_bound:.6g} "
                            "with support bounded throughout")
    # no event
    if t_escape is not None and t_escape < t_bound:
        return EscapeReport(EscapeStatus.HYPOTHESIS_VIOLATED,
                           f"support escaped V_sup at t={t_escape:.6g} before the bound "
                           f"{t_bound:.6g} -- consistent with the escape corollary")
    if times[-1] < t_bound:
        return EscapeReport(EscapeStatus.INCONCLUSIVE,
                           f"run ended at t={times[-1]:.6g} before the bound {t_bound:.6g}")
    return EscapeReport(EscapeStatus.CONTRADICTION,
                        f"no event by t={times[-1]:.6g} >= bound {t_bound:.6g} "
                        "with support bounded throughout")
