"""Command-line front door: simulate, certify, verify, and sweep.

All runs are seed-free and deterministic: re-running a manifest reproduces
every output file byte-for-byte (timestamps are isolated in the manifest
echo). Time series are CSV with 17-significant-digit floats; certificates
and reports are YAML/plain-text documents.

Exit codes: 0 success; 1 validation; 2 hypothesis violation (support
escaped V_sup); 3 numeric failure or proof-chain violation; 4
CONTRADICTION (certificate unsatisfied with bounded support).
"""

from __future__ import annotations

import csv
import datetime
import math
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__, functional, riccati, simulate
from .core import (Geometry, initial_vorticity_satisfied, load_scenario,
                   validate_scenario)
from .detector import EscapeStatus, escape_report
from .errors import (DustLabError, MaxStepsExceeded, NoPoleInHorizon,
                     StepUnderflow, ValidationError)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERIC = 3
EXIT_CONTRADICTION = 4


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.17g}"


def _write_manifest(out: Path, command: str, scenario_path: str):
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "scenario": str(scenario_path),
        "output_dir": str(out),
        "tool_version": __version__,
        "deterministic": True,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "manifest.yaml").write_text(yaml.safe_dump(doc, sort_keys=False))


def _load(scenario_path):
    try:
        return validate_scenario(load_scenario(scenario_path))
    except ValidationError as exc:
        click.echo(f"scenario invalid: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _write_trajectory_csv(out: Path, traj):
    cols = ["time", "h_value", "total_mass", "support_volume",
            "cs_divergence_margin", "cs_density_margin", "riccati_residual",
            "min_density", "max_density", "max_abs_div"]
    with open(out / "trajectory.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(len(traj)):
            rec = functional.diagnostics_record(traj, i)
            writer.writerow([_fmt(getattr(rec, c)) for c in cols])


def _write_marker_dump(out: Path, traj, times):
    """Per-marker dump at the accepted step nearest each requested time."""
    traj_times = traj.times
    radialnd = traj.validated.geometry is Geometry.RADIALND
    for t_req in times:
        i = int(np.argmin(np.abs(traj_times - t_req)))
        st = traj.states[i]
        name = f"markers_t{st.time:.6f}.csv"
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["position", "velocity", "density", "eig_radial", "mass_weight"]
            if radialnd:
                header.insert(4, "eig_tangential")
            writer.writerow(header)
            for j in range(st.positions.size):
                row = [st.positions[j], st.velocities[j], st.densities[j],
                       st.eig_radial[j], st.masses[j]]
                if radialnd:
                    row.insert(4, st.eig_tangential[j])
                writer.writerow([_fmt(v) for v in row])


def _write_event(out: Path, event):
    doc = {
        "trigger": event.trigger.value,
        "t_lo": float(event.t_lo),
        "t_hi": float(event.t_hi),
        "marker_index": int(event.marker_index),
    }
    (out / "event.yaml").write_text(yaml.safe_dump(doc, sort_keys=False))


def _certificate_doc(vs):
    cert = riccati.check_blowup_conditions(vs.total_mass, vs.v_sup, vs.lam,
                                           vs.dimension, vs.h0)
    ok, reason = initial_vorticity_satisfied(vs)
    doc = {
        "inputs": {k: float(v) if k != "N" else int(v) for k, v in cert.inputs.items()},
        "case": cert.case.value,
        "threshold_case2": cert.threshold_case2,
        "t_bound": cert.t_bound,
        "initial_vorticity_zero": ok,
        "vorticity_reason": reason,
    }
    if cert.note:
        doc["note"] = cert.note
    if cert.t_bound is not None:
        params = riccati.RiccatiParams.from_macroscopic(
            vs.total_mass, vs.v_sup, vs.lam, vs.dimension, vs.h0)
        doc["formula"] = ("arctan" if params.b > 0
                          else "rational" if params.b == 0 else "arcoth")
        try:
            path = riccati.integrate_comparison_ode(params, until=10.0 * cert.t_bound + 1.0)
            agree = abs(path.pole_time - cert.t_bound) <= 1e-6 * max(1.0, cert.t_bound)
            doc["oracle_cross_check"] = {
                "pole_bracket": [float(path.pole_bracket[0]), float(path.pole_bracket[1])],
                "agrees": bool(agree),
            }
        except NoPoleInHorizon:
            doc["oracle_cross_check"] = {"pole_bracket": None, "agrees": False}
    if vs.lam == 0.0:
        bounds = []
        n_markers = vs.masses.size
        for j in range(n_markers):
            div0 = vs.eig_radial[j]
            if vs.eig_tangential is not None:
                div0 += (vs.dimension - 1) * vs.eig_tangential[j]
            if vs.densities[j] > 0 and div0 < 0:
                bounds.append(-vs.dimension / float(div0))
        doc["chae_tadmor"] = {
            "applicable_markers": len(bounds),
            "min_bound": min(bounds) if bounds else None,
        }
    return cert, doc


def _run_or_exit(vs):
    try:
        return simulate(vs)
    except (StepUnderflow, MaxStepsExceeded) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


_ESCAPE_EXIT = {
    EscapeStatus.CERTIFICATE_HONORED: EXIT_OK,
    EscapeStatus.NO_PREDICTION: EXIT_OK,
    EscapeStatus.INCONCLUSIVE: EXIT_OK,
    EscapeStatus.HYPOTHESIS_VIOLATED: EXIT_HYPOTHESIS,
    EscapeStatus.CONTRADICTION: EXIT_CONTRADICTION,
}


@click.group()
def main():
    """Dust-collapse laboratory: simulation, proof-chain verification,
    and analytic blowup certificates."""


_scenario_opt = click.option("--scenario", "scenario_path", required=True,
                             type=click.Path(exists=True, dir_okay=False))
_out_opt = click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))


@main.command("simulate")
@_scenario_opt
@_out_opt
@click.option("--snapshot-times", default="", help="comma-separated times for per-marker dumps")
def simulate_cmd(scenario_path, out_dir, snapshot_times):
    """Run one scenario and write trajectory, diagnostics, and any event."""
    out = Path(out_dir)
    _write_manifest(out, "simulate", scenario_path)
    vs = _load(scenario_path)
    traj = _run_or_exit(vs)
    _write_trajectory_csv(out, traj)
    if snapshot_times:
        _write_marker_dump(out, traj, [float(s) for s in snapshot_times.split(",")])
    if traj.event is not None:
        _write_event(out, traj.event)
        click.echo(f"event: {traj.event.trigger.value} at "
                   f"t in [{traj.event.t_lo:.9g}, {traj.event.t_hi:.9g}]")
    else:
        click.echo(f"no event; reached t={traj.times[-1]:.9g}")
    cert, _ = _certificate_doc(vs)
    report = escape_report(traj, vs.v_sup, cert)
    click.echo(f"{report.status.value}: {report.message}")
    sys.exit(_ESCAPE_EXIT[report.status])


@main.command()
@_scenario_opt
@_out_opt
def certify(scenario_path, out_dir):
    """Evaluate the blowup conditions and write the certificate document."""
    out = Path(out_dir)
    _write_manifest(out, "certify", scenario_path)
    vs = _load(scenario_path)
    _, doc = _certificate_doc(vs)
    (out / "certificate.yaml").write_text(yaml.safe_dump(doc, sort_keys=False))
    click.echo(f"case: {doc['case']}; t_bound: "
               + (_fmt(doc["t_bound"]) if doc["t_bound"] is not None else "none"))
    sys.exit(EXIT_OK)


@main.command()
@_scenario_opt
@_out_opt
def verify(scenario_path, out_dir):
    """Run a scenario and verify the full inequality chain step by step."""
    out = Path(out_dir)
    _write_manifest(out, "verify", scenario_path)
    vs = _load(scenario_path)
    traj = _run_or_exit(vs)
    report = functional.proof_chain_report(traj)
    with open(out / "proof_chain.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "transport_residual", "cs_divergence_margin",
                         "cs_density_margin", "riccati_residual",
                         "hypothesis_ok", "informational"])
        for s in report.steps:
            writer.writerow([_fmt(s.time), _fmt(s.transport_residual),
                             _fmt(s.cs_divergence_margin), _fmt(s.cs_density_margin),
                             _fmt(s.riccati_residual), s.hypothesis_ok, s.informational])
    (out / "report.txt").write_text(report.summary_text() + "\n")
    click.echo(report.summary_text())
    hypothesis_violations = sum(1 for s in report.steps if not s.hypothesis_ok)
    if hypothesis_violations:
        click.echo(f"HypothesisViolated on {hypothesis_violations} steps "
                   "(support exceeded V_sup; inequalities not asserted there)")
    sys.exit(EXIT_OK if report.holds else EXIT_NUMERIC)


def _parse_grid(spec: str):
    lo, hi, n = spec.split(":")
    return np.linspace(float(lo), float(hi), int(n))


@main.command()
@_scenario_opt
@_out_opt
@click.option("--lambda-grid", "lambda_grid", default=None, help="a:b:n grid over lambda")
@click.option("--h0-grid", "h0_grid", default=None, help="a:b:n grid over H(0)")
def sweep(scenario_path, out_dir, lambda_grid, h0_grid):
    """One certify+simulate row per grid point along lambda or H(0)."""
    from dataclasses import replace

    from .core import HubbleVelocity

    if (lambda_grid is None) == (h0_grid is None):
        click.echo("provide exactly one of --lambda-grid / --h0-grid", err=True)
        sys.exit(EXIT_VALIDATION)
    out = Path(out_dir)
    _write_manifest(out, "sweep", scenario_path)
    base = _load(scenario_path)
    axis = "lambda" if lambda_grid is not None else "h0"
    grid = _parse_grid(lambda_grid if lambda_grid is not None else h0_grid)

    rows = []
    any_contradiction = False
    for value in grid:
        scenario = base.scenario
        if axis == "lambda":
            scenario = replace(scenario, lam=float(value))
        else:
            # retarget H(0) = h0 through the Hubble rate: H = N * rate * M
            rate = float(value) / (base.dimension * base.total_mass)
            scenario = replace(scenario, velocity=HubbleVelocity(rate=rate))
        row = {"axis": axis, "value": float(value)}
        try:
            vs = validate_scenario(scenario)
            cert = riccati.check_blowup_conditions(vs.total_mass, vs.v_sup, vs.lam,
                                                   vs.dimension, vs.h0)
            traj = simulate(vs)
            rep = escape_report(traj, vs.v_sup, cert)
            volumes = [st.support_volume() for st in traj.states]
            row.update(case=cert.case.value, t_bound=cert.t_bound,
                       event_time=(traj.event.t_hi if traj.event else None),
                       support_volume_max=max(volumes), status=rep.status.value)
            any_contradiction |= rep.status is EscapeStatus.CONTRADICTION
        except DustLabError as exc:
            row.update(case="", t_bound=None, event_time=None,
                       support_volume_max=None, status=f"error: {exc}")
        rows.append(row)

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "case", "t_bound", "event_time",
                         "support_volume_max", "status"])
        for row in rows:
            writer.writerow([row["axis"], _fmt(row["value"]), row["case"],
                             _fmt(row["t_bound"]), _fmt(row["event_time"]),
                             _fmt(row["support_volume_max"]), row["status"]])
    click.echo(f"{len(rows)} rows -> {out / 'sweep.csv'}")
    sys.exit(EXIT_CONTRADICTION if any_contradiction else EXIT_OK)


if __name__ == "__main__":
    main()
