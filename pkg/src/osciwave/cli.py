"""Command line entry point: ``osciwave <stage|run> SCENARIO``.

A scenario is a bundled name (``osciwave run free-wave``) or a path to a TOML
file; the format is described in :mod:`osciwave.scenario`. Exit codes: 0 on
success, 2 for configuration and contract errors, 3 when a hypothesis check
fails (all reports are still written), 4 for numerical failures.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import click
import numpy as np

from . import __version__
from .decayfit import boundedness_report, fit_exponent, kappa0_scan
from .diag import build_hierarchy, find_n0, hyperbolic_grid, interzone_residual_integral, symbol_scan
from .errors import (
    ConfigError,
    ContractViolation,
    HierarchyBreakdown,
    HypothesisViolated,
    NumericalFailure,
)
from .hypotheses import hypothesis_report
from .modes import (
    energy_identity_residual,
    fundamental_matrix,
    integrate_mode,
    log_time_grid,
    resolve_threads,
)
from .scenario import STAGES, Scenario, bundled_names, check_stages, load_scenario
from .spectral import cut_radius, radial_grid, total_energy, zone_split
from .volterra import DEFAULT_MAX_PHASE, eta_functions, picard_solve, series_bound_check, wronskian_defect
from .zones import ZonePartition, boundary_table

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4

ZONE_CURVE_POINTS = 121


def _cell(x: Any) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _jsonable(obj: Any) -> Any:
    """Plain JSON: non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n", encoding="utf-8")


class Context:
    """Everything a stage needs; stages record whether a hypothesis failed."""

    def __init__(self, scn: Scenario, out: Path, threads: int | None) -> None:
        self.scn = scn
        self.out = out
        self.threads = threads
        self.hypothesis_failed = False

    @property
    def zones(self) -> ZonePartition:
        return ZonePartition(self.scn.run.N, self.scn.coefficient.principal, self.scn.rates, self.scn.weight)

    def wants(self, fmt: str) -> bool:
        return fmt in self.scn.formats

    def log(self, msg: str) -> None:
        click.echo(f"[{self.scn.name}] {msg}", err=True)


def stage_verify(ctx: Context) -> None:
    scn = ctx.scn
    report = hypothesis_report(scn.coefficient, scn.rates, scn.weight)
    doc = {"scenario": scn.name, "holds": report.holds, **report.to_dict()}
    write_json(ctx.out / "verify.json", doc)
    ctx.log(f"verify: hypotheses {'hold' if report.holds else 'FAIL'}")
    if not report.holds:
        ctx.hypothesis_failed = True


def stage_zones(ctx: Context) -> None:
    zp = ctx.zones
    r = zp.N * np.logspace(-2.0, 2.0, ZONE_CURVE_POINTS)
    if ctx.wants("csv"):
        write_csv(ctx.out / "zones.csv", ["r", "t_D", "t_H"], boundary_table(zp, r))
    ctx.log(f"zones: {r.size} boundary points")


def stage_simulate(ctx: Context) -> None:
    scn, run = ctx.scn, ctx.scn.run
    ts = log_time_grid(run.t_end, run.samples)
    summary = []
    for xi in run.xi:
        traj = integrate_mode(scn.coefficient, xi, run.t_end, rtol=run.rtol, samples=ts, max_phase=run.max_phase)
        if ctx.wants("csv"):
            rows = (
                (t, v[0].real, v[0].imag, v[1].real, v[1].imag, e)
                for t, v, e in zip(traj.t, traj.V, traj.energy)
            )
            write_csv(
                ctx.out / f"mode_xi={xi!r}.csv",
                ["t", "re_v1", "im_v1", "re_v2", "im_v2", "energy_density"],
                rows,
            )
        summary.append({
            "xi": xi,
            "energy_ratio_end": traj.energy[-1] / traj.energy[0],
            "max_energy_drift": float(np.abs(traj.energy / traj.energy[0] - 1.0).max()),
            "energy_identity_residual": energy_identity_residual(traj) if xi > 0 else 0.0,
            "steps": traj.stats.steps,
            "switch_time": traj.stats.switch_time,
            "averaging_error": traj.stats.averaging_error,
        })
    if ctx.wants("json"):
        write_json(ctx.out / "simulate.json", {"scenario": scn.name, "modes": summary})
    ctx.log(f"simulate: {len(run.xi)} modes")


def stage_volterra(ctx: Context) -> None:
    scn, run = ctx.scn, ctx.scn.run
    c, zp = scn.coefficient, ctx.zones
    max_phase = run.max_phase or DEFAULT_MAX_PHASE
    ef = eta_functions(c)
    rows, summary = [], []
    for xi in run.volterra_xi:
        t_d = zp.t_dissipative(xi)
        if t_d is None or t_d <= 0.0:
            raise ConfigError(f"volterra mode |xi|={xi} has an empty dissipative zone for N={zp.N}")
        t_end = min(t_d, run.t_end)
        sol = picard_solve(c, xi, t_end, N=zp.N, max_phase=max_phase)
        rk = fundamental_matrix(c, xi, sol.t, max_phase=max_phase)
        diff = np.linalg.norm(sol.Phi - rk, axis=(1, 2)) / np.linalg.norm(rk, axis=(1, 2))
        rows.extend((xi, t, d) for t, d in zip(sol.t, diff))
        bounds = series_bound_check(sol, ef, zp.N)
        summary.append({
            "xi": xi,
            "t_end": t_end,
            "iterations": sol.iterations,
            "max_relative_error": float(diff.max()),
            "wronskian_defect": wronskian_defect(sol, ef),
            "series_bound_ratios": bounds.ratios,
            "series_bounds_hold": bounds.all_within,
        })
    if ctx.wants("csv"):
        write_csv(ctx.out / "volterra.csv", ["xi", "t", "relative_error"], rows)
    if ctx.wants("json"):
        write_json(ctx.out / "volterra.json", {"scenario": scn.name, "N": zp.N, "modes": summary})
    ctx.log(f"volterra: {len(run.volterra_xi)} modes compared")


def stage_diag(ctx: Context) -> None:
    scn, run = ctx.scn, ctx.scn.run
    c, zp = scn.coefficient, ctx.zones
    m = c.m
    g = run.diag_grid
    n0 = find_n0(c, zp, m, g, g)
    if not math.isfinite(n0):
        raise HierarchyBreakdown(f"no N <= 2^16 keeps the hierarchy admissible for m={m}")
    zn = zp if zp.N >= n0 else ZonePartition(n0, zp.principal, zp.theta, zp.weight)
    rows = []
    for t, xi in hyperbolic_grid(zn, g, g, 64.0):
        levels = build_hierarchy(c, t, xi, m)
        Xi = float(zn.theta.xi(t))
        for lv in levels:
            d = abs(lv.delta.value) if lv.delta is not None else math.nan
            r = abs(lv.r.value)
            rows.append((lv.k, t, xi, d, r, r * xi**lv.k / Xi ** (lv.k + 1)))
    scan = symbol_scan(c, zn, m, g, g)
    residuals = []
    for xi in run.xi:
        ri = interzone_residual_integral(c, zp, xi, run.max_phase or DEFAULT_MAX_PHASE)
        residuals.append({"xi": xi, "from_tD": ri.from_tD, "from_tH": ri.from_tH,
                          "tail_bound": ri.tail_bound, "divergent": ri.divergent})
    if ctx.wants("csv"):
        write_csv(ctx.out / "diag.csv", ["k", "t", "xi", "abs_delta", "abs_r", "bound_ratio"], rows)
    if ctx.wants("json"):
        write_json(ctx.out / "diag.json", {
            "scenario": scn.name,
            "m": m,
            "N": zn.N,
            "N0": n0,
            "r_sup": scan.r_sup,
            "delta_sup": scan.delta_sup,
            "delta_max": scan.delta_max,
            "interzone_residuals": residuals,
        })
    ctx.log(f"diag: N0={n0:g}, {len(rows)} level samples")


def stage_decay(ctx: Context) -> None:
    scn, run = ctx.scn, ctx.scn.run
    c, zp = scn.coefficient, ctx.zones
    ts = log_time_grid(run.t_end, run.samples)[1:]
    grid = radial_grid(cut_radius(scn.data), run.nodes, n=scn.data.n)
    series = total_energy(
        scn.data, c, ts, mode_grid=grid, threads=ctx.threads, rtol=run.rtol, max_phase=run.max_phase
    )
    bounds = boundedness_report(series.t, series.energy, c, series.E0, start=run.bound_start)
    window = (run.window[0], min(run.window[1], run.t_end))
    notes = []
    try:
        fit = fit_exponent(series.t, series.energy, window)
        slope, stderr = fit.slope, fit.stderr
    except ContractViolation as exc:
        slope = stderr = math.nan
        notes.append(f"no exponent fit: {exc}")
    scan = kappa0_scan(series.t, series.energy, c, scn.data, scn.weight, run.kappa_cap, run.bound_start)
    if ctx.wants("csv"):
        splits = [zone_split(series, zp, k) for k in range(series.t.size)]
        rows = (
            (t, e, *parts, ratio)
            for t, e, parts, ratio in zip(series.t, series.energy, splits, bounds.ratio)
        )
        write_csv(ctx.out / "energy.csv", ["t", "E", "I1", "I2", "I3", "I4", "bound_ratio"], rows)
    if ctx.wants("json"):
        write_json(ctx.out / "decay.json", {
            "scenario": scn.name,
            "slope": slope,
            "stderr": stderr,
            "sup_ratio": bounds.sup_ratio,
            "trend": bounds.trend,
            "kappa0_scan": scan.to_dict(),
            "window": window,
            "E0": series.E0,
            "tail_bound": series.tail_bound,
            "averaging_error": series.averaging_error,
            "notes": notes + series.notes,
        })
    ctx.log(f"decay: slope={slope:.4g} sup_ratio={bounds.sup_ratio:.4g} trend={bounds.trend:.3g}")


STAGE_FUNCTIONS: dict[str, Callable[[Context], None]] = {
    "verify": stage_verify,
    "zones": stage_zones,
    "simulate": stage_simulate,
    "volterra": stage_volterra,
    "diag": stage_diag,
    "decay": stage_decay,
}


def run_scenario(
    source: str | Path | Scenario,
    out: str | Path | None = None,
    stages: Sequence[str] | None = None,
    threads: int | None = None,
    rtol: float | None = None,
) -> int:
    """Validate, run the requested stages in order and write artifacts; returns the exit code.

    Nothing is written unless the scenario and the stage selection validate.
    """
    try:
        scn = source if isinstance(source, Scenario) else load_scenario(source)
        if rtol is not None:
            if not 0 < rtol < 1:
                raise ConfigError(f"rtol must lie in (0, 1), got {rtol}")
            scn = replace(scn, run=replace(scn.run, rtol=rtol))
        selected = tuple(s for s in STAGES if s in (scn.run.stages if stages is None else stages))
        check_stages(scn.coefficient, tuple(stages or selected))
        n_threads = resolve_threads(threads)
    except (ConfigError, ContractViolation) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    target = Path(out if out is not None else scn.directory or Path("out") / scn.name)
    target.mkdir(parents=True, exist_ok=True)
    ctx = Context(scn, target, n_threads)
    try:
        for name in selected:
            try:
                STAGE_FUNCTIONS[name](ctx)
            except HypothesisViolated as exc:
                ctx.log(f"{name}: hypothesis violated: {exc}")
                ctx.hypothesis_failed = True
    except NumericalFailure as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return EXIT_NUMERICAL
    except (ConfigError, ContractViolation) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    return EXIT_HYPOTHESIS if ctx.hypothesis_failed else EXIT_OK


def _options(f):
    f = click.option("--rtol", type=float, default=None, help="Relative tolerance of the mode integrator.")(f)
    f = click.option(
        "--threads", type=int, default=None, help="Worker threads for mode sweeps (default: OSCIWAVE_THREADS or 1)."
    )(f)
    f = click.option(
        "--out", type=click.Path(file_okay=False), default=None, help="Output directory (default: out/<name>)."
    )(f)
    return click.argument("scenario")(f)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="osciwave")
def main() -> None:
    """Experiments for wave equations with oscillating time-dependent damping.

    SCENARIO is a TOML file or one of the bundled scenarios (see `osciwave list`).
    """


@main.command("run")
@_options
def run_command(scenario: str, out: str | None, threads: int | None, rtol: float | None) -> None:
    """Run every stage listed in the scenario."""
    sys.exit(run_scenario(scenario, out, None, threads, rtol))


def _stage_command(name: str, doc: str) -> None:
    @_options
    def command(scenario: str, out: str | None, threads: int | None, rtol: float | None) -> None:
        sys.exit(run_scenario(scenario, out, (name,), threads, rtol))

    command.__doc__ = doc
    main.command(name)(command)


_stage_command("verify", "Check the structural hypotheses and write verify.json.")
_stage_command("zones", "Write the zone boundary curves t_D(r), t_H(r) to zones.csv.")
_stage_command("simulate", "Integrate single modes; one CSV per mode plus simulate.json.")
_stage_command("volterra", "Compare the Picard solution with the integrator in the dissipative zone.")
_stage_command("diag", "Scan the diagonalization hierarchy in the hyperbolic zone.")
_stage_command("decay", "Assemble the total energy, fit its decay and scan kappa0.")


@main.command("list")
def list_command() -> None:
    """List the bundled scenarios."""
    for name in bundled_names():
        click.echo(name)


if __name__ == "__main__":
    main()
