"""Shared adaptive Runge-Kutta driver for both geometries.

Steps an embedded RK4(5) pair, records every accepted state, scans each
accepted step for detector triggers, and localizes the first trigger by
bisection on re-integrated sub-steps. Deterministic for fixed settings.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import RK45, solve_ivp

from . import detector
from .core import Trajectory, ValidatedScenario
from .errors import MaxStepsExceeded, StepUnderflow


def run_characteristics(vs: ValidatedScenario, rhs, y0, unpack) -> Trajectory:
    settings = vs.settings
    t_end = vs.t_end

    def reintegrate(t0, y0_, t1):
        if t1 <= t0:
            return np.array(y0_, copy=True)
        sol = solve_ivp(rhs, (t0, t1), y0_, method="RK45",
                        rtol=settings.rel_tol, atol=settings.abs_tol,
                        max_step=settings.max_step, dense_output=False)
        if not sol.success:
            raise StepUnderflow(f"re-integration failed on [{t0:g}, {t1:g}]: {sol.message}")
        return sol.y[:, -1]

    stepper = RK45(rhs, 0.0, np.asarray(y0, dtype=float), t_bound=t_end,
                   rtol=settings.rel_tol, atol=settings.abs_tol,
                   max_step=settings.max_step)
    states = [unpack(0.0, stepper.y)]
    event = None
    steps = 0
    while stepper.status == "running":
        steps += 1
        if steps > settings.max_steps:
            raise MaxStepsExceeded(f"exceeded {settings.max_steps} accepted steps")
        t_prev = stepper.t
        y_prev = stepper.y.copy()
        stepper.step()
        if stepper.status == "failed":
            raise StepUnderflow(f"step size collapsed at t={t_prev:g}")
        state = unpack(stepper.t, stepper.y)
        trigger = detector.scan_step(states[-1], state, settings)
        if trigger is not None:
            event = detector.bracket_event(reintegrate, unpack, t_prev, y_prev,
                                           stepper.t, trigger, settings)
            if event.t_lo > states[-1].time:
                states.append(event.values_at_t_lo)
            break
        states.append(state)

    termination = "event" if event is not None else "t_end"
    return Trajectory(validated=vs, states=states, event=event, termination=termination)


def sample_states(vs: ValidatedScenario, rhs, y0, unpack, times) -> Trajectory:
    """States interpolated at the requested times (dense output), for
    fixed-step diagnostics such as convergence studies. No event scanning;
    the caller is responsible for staying inside the smooth interval."""
    times = np.asarray(times, dtype=float)
    settings = vs.settings
    sol = solve_ivp(rhs, (0.0, float(times[-1])), np.asarray(y0, dtype=float),
                    method="RK45", rtol=settings.rel_tol, atol=settings.abs_tol,
                    max_step=settings.max_step, t_eval=times, dense_output=False)
    if not sol.success:
        raise StepUnderflow(f"sampling integration failed: {sol.message}")
    states = [unpack(t, sol.y[:, k]) for k, t in enumerate(sol.t)]
    return Trajectory(validated=vs, states=states, event=None, termination="t_end")
