"""surgeplan command line: validate, solve, sweep, compare, fit-los, calibrate, score, synth, serve."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from surgeplan import analysis, io
from surgeplan import forecast as fc
from surgeplan import solver as solver_mod
from surgeplan.domain import validate_scenario
from surgeplan.dynamics import DegenerateFit, fit_los
from surgeplan.model import NoSolution, solve_scenario
from surgeplan.synth import generate_synthetic_case_study

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _load_or_exit(path: str):
    try:
        return io.load_scenario(path)
    except io.ScenarioError as exc:
        _echo_json({"valid": False, "violations": [v.as_dict() for v in exc.violations]})
        sys.exit(EXIT_VALIDATION)


def _apply_overrides(scenario, robust, gamma1, gamma2, transfers, max_transfers,
                     unit_order, occupancy_cap, headroom, backend, seed, time_limit):
    changes = {}
    if robust:
        changes["robust"] = True
    if gamma1 is not None:
        changes["gamma1"] = gamma1
    if gamma2 is not None:
        changes["gamma2"] = gamma2
    if transfers:
        changes["allow_transfers"] = True
    if max_transfers is not None:
        changes["allow_transfers"] = True
        changes["transfer_limits"] = replace(scenario.options.transfer_limits, total=max_transfers)
    if unit_order:
        changes["enforce_unit_order"] = True
    if occupancy_cap is not None:
        changes["occupancy_fraction_cap"] = occupancy_cap
    if headroom is not None:
        changes["occupancy_headroom"] = headroom
    if backend is not None:
        changes["solver_backend"] = backend
    if seed is not None:
        changes["seed"] = seed
    if time_limit is not None:
        changes["time_limit_seconds"] = time_limit
    return scenario.with_options(**changes) if changes else scenario


def _revalidate_or_exit(scenario):
    violations = validate_scenario(scenario)
    if violations:
        _echo_json({"valid": False, "violations": [v.as_dict() for v in violations]})
        sys.exit(EXIT_VALIDATION)


solve_options = [
    click.option("--robust", is_flag=True, help="Solve against the demand uncertainty set."),
    click.option("--gamma1", type=float, default=None, help="Total-deviation budget."),
    click.option("--gamma2", type=float, default=None, help="Day-over-day step-ratio budget (>= 1)."),
    click.option("--transfers", is_flag=True, help="Enable inter-hospital patient transfers."),
    click.option("--max-transfers", type=int, default=None, help="Global transfer cap (implies --transfers)."),
    click.option("--unit-order", is_flag=True, help="Allocate units strictly in priority order."),
    click.option("--occupancy-cap", type=float, default=None, help="Maximum occupancy fraction z."),
    click.option("--headroom", type=float, default=None, help="Required spare beds z'."),
    click.option("--backend", type=str, default=None, help="builtin | highs | external:<command>."),
    click.option("--seed", type=int, default=None, help="Seed recorded in provenance."),
    click.option("--time-limit", type=float, default=None, help="Solver time limit in seconds."),
]


def _with_solve_options(fn):
    for opt in reversed(solve_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Surge capacity allocation and patient-transfer planning."""


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
def validate(scenario_path):
    """Validate a scenario file; exit 2 when violations are found."""
    try:
        scenario = io.load_scenario(scenario_path)
    except io.ScenarioError as exc:
        _echo_json({"valid": False, "violations": [v.as_dict() for v in exc.violations]})
        sys.exit(EXIT_VALIDATION)
    _echo_json({"valid": True, "hospitals": len(scenario.hospitals),
                "units": len(scenario.units), "horizon": scenario.horizon})


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@_with_solve_options
@click.option("--out", type=click.Path(), default="runs", help="Run directory root.")
def solve(scenario_path, out, robust, gamma1, gamma2, transfers, max_transfers,
          unit_order, occupancy_cap, headroom, backend, seed, time_limit):
    """Solve the allocation (and transfer) model and persist the plan."""
    scenario = _load_or_exit(scenario_path)
    scenario = _apply_overrides(scenario, robust, gamma1, gamma2, transfers, max_transfers,
                                unit_order, occupancy_cap, headroom, backend, seed, time_limit)
    _revalidate_or_exit(scenario)
    try:
        plan = solve_scenario(scenario)
    except NoSolution as exc:
        _echo_json({"status": exc.status, "error": str(exc)})
        sys.exit(EXIT_INFEASIBLE if exc.status == "infeasible" else EXIT_SOLVER)
    except (solver_mod.BackendUnavailable, solver_mod.SimplexError) as exc:
        _echo_json({"status": "backend_failure", "error": str(exc)})
        sys.exit(EXIT_SOLVER)
    payloads = analysis.plan_plot_payloads(scenario, plan)
    plots = {f"{name}.csv": analysis.payload_to_csv(p) for name, p in payloads.items()}
    run_id, run_dir = io.save_run(out, scenario, plan, kind="solve", plots=plots)
    io.atomic_write_text(Path(run_dir) / "payload.json", io.canonical_json(payloads))
    _echo_json({"run_id": run_id, "run_dir": str(run_dir), "status": plan.status,
                "objective": plan.objective, "metrics": plan.metrics})


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--s-values", required=True, help="Comma-separated global transfer caps, e.g. 0,4,8.")
@click.option("--point-time-limit", type=float, default=90.0)
@click.option("--backend", type=str, default=None)
@click.option("--out", type=click.Path(), default="runs")
def sweep(scenario_path, s_values, point_time_limit, backend, out):
    """Trade-off sweep: one surge-minimizing solve per transfer budget."""
    scenario = _load_or_exit(scenario_path)
    try:
        values = [int(v) for v in s_values.split(",") if v.strip() != ""]
    except ValueError:
        _echo_json({"error": f"bad --s-values {s_values!r}"})
        sys.exit(EXIT_VALIDATION)
    scenario = scenario.with_options(allow_transfers=True)
    _revalidate_or_exit(scenario)
    try:
        curve = analysis.pareto_sweep(scenario, values, backend=backend,
                                      point_time_limit=point_time_limit)
    except (solver_mod.BackendUnavailable, solver_mod.SimplexError) as exc:
        _echo_json({"status": "backend_failure", "error": str(exc)})
        sys.exit(EXIT_SOLVER)
    payload = analysis.pareto_payload(curve)
    run_dir = None
    if curve.plans:
        last_plan = curve.plans[max(curve.plans)]
        run_id, run_dir = io.save_run(out, scenario, last_plan, kind="sweep",
                                      extra_payload={"pareto": payload},
                                      plots={"pareto.csv": analysis.payload_to_csv(payload)})
        payload["run_id"] = run_id
        run_dir = str(run_dir)
    _echo_json({"run_dir": run_dir, **payload})


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True))
@click.option("--time-limit", type=float, default=120.0, help="Per-strategy solve limit.")
@click.option("--backend", type=str, default=None)
@click.option("--out", type=click.Path(), default="runs")
def compare(scenario_path, time_limit, backend, out):
    """Compare allocation strategies by required dedicated bed-days."""
    scenario = _load_or_exit(scenario_path)
    _revalidate_or_exit(scenario)
    try:
        results = analysis.compare_strategies(scenario, backend=backend, time_limit=time_limit)
    except (solver_mod.BackendUnavailable, solver_mod.SimplexError) as exc:
        _echo_json({"status": "backend_failure", "error": str(exc)})
        sys.exit(EXIT_SOLVER)
    payload = analysis.strategy_payload(results)
    plans = [r.plan for r in results if r.plan is not None]
    if plans:
        _, run_dir = io.save_run(out, scenario, plans[0], kind="compare",
                                 extra_payload={"comparison": payload},
                                 plots={"strategies.csv": analysis.payload_to_csv(payload)})
        payload["run_dir"] = str(run_dir)
    _echo_json(payload)


@main.command("fit-los")
@click.argument("series_csv", type=click.Path(exists=True))
@click.option("--family", type=click.Choice(["nonparametric", "geometric", "discretized_gamma"]),
              default="nonparametric")
@click.option("--l-max", type=int, default=30)
def fit_los_cmd(series_csv, family, l_max):
    """Estimate a LOS distribution from aggregate admissions and census series."""
    try:
        series = io.read_series_csv(series_csv)
    except io.ScenarioError as exc:
        _echo_json({"error": [v.as_dict() for v in exc.violations]})
        sys.exit(EXIT_VALIDATION)
    out = {}
    for hid, data in sorted(series.items()):
        if not data["admissions"] or not data["census"]:
            out[hid] = {"error": "needs both admissions and census columns"}
            continue
        try:
            los, report = fit_los(data["admissions"], data["census"], family=family, l_max=l_max)
        except DegenerateFit as exc:
            out[hid] = {"error": str(exc)}
            continue
        out[hid] = {"pmf": list(los.pmf), **report}
    _echo_json(out)


@main.command()
@click.argument("forecasts_csv", type=click.Path(exists=True))
@click.argument("actuals_csv", type=click.Path(exists=True))
@click.option("--level", type=float, default=0.9, help="Central interval level to calibrate.")
@click.option("--split", type=float, default=0.25, help="Fraction of issue dates used for calibration.")
@click.option("--out", type=click.Path(), default=None, help="Write calibrated forecasts CSV here.")
def calibrate(forecasts_csv, actuals_csv, level, split, out):
    """Conformal calibration of forecast intervals against actuals."""
    try:
        forecasts = fc.read_forecast_csv(forecasts_csv)
        actuals = fc.read_actuals_csv(actuals_csv)
        calibrated, report = fc.conformal_calibrate(forecasts, actuals, interval_level=level, split=split)
    except (ValueError, fc.MissingQuantile, fc.InsufficientCalibrationData) as exc:
        _echo_json({"error": str(exc)})
        sys.exit(EXIT_VALIDATION)
    if out:
        fc.write_forecast_csv(out, calibrated)
        report["calibrated_csv"] = out
    report["coverage_before"] = fc.empirical_coverage(forecasts, actuals, level)
    report["coverage_after"] = fc.empirical_coverage(calibrated, actuals, level)
    _echo_json(report)


@main.command()
@click.argument("forecasts_csv", type=click.Path(exists=True))
@click.argument("actuals_csv", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None, help="Also write metrics JSON here.")
@click.option("--csv", "csv_out", type=click.Path(), default=None, help="Also write a by-days-out metrics CSV here.")
def score(forecasts_csv, actuals_csv, out, csv_out):
    """Score forecasts: WIS, MAE, RMSE, sMAPE, MAPE, overall and by days out."""
    try:
        forecasts = fc.read_forecast_csv(forecasts_csv)
        actuals = fc.read_actuals_csv(actuals_csv)
        metrics = fc.score_forecast(forecasts, actuals)
    except (ValueError, fc.MissingQuantile) as exc:
        _echo_json({"error": str(exc)})
        sys.exit(EXIT_VALIDATION)
    if out:
        io.atomic_write_text(Path(out), io.canonical_json(metrics))
    if csv_out:
        lines = ["days_out,n,WIS,MAE,RMSE,sMAPE,MAPE"]
        rows = {"overall": metrics["overall"], **{str(k): v for k, v in metrics["by_days_out"].items()}}
        for key, m in rows.items():
            lines.append(f"{key},{m['n']},{m['WIS']},{m['MAE']},{m['RMSE']},{m['sMAPE']},{m['MAPE']}")
        io.atomic_write_text(Path(csv_out), "\n".join(lines) + "\n")
    _echo_json(metrics)


@main.command()
@click.option("--seed", type=int, default=42)
@click.option("--horizon", type=int, default=63)
@click.option("--forecast", "with_forecast", is_flag=True,
              help="Emit quantile-forecast demand instead of observed arrivals.")
@click.option("--out", type=click.Path(), default=None)
def synth(seed, horizon, with_forecast, out):
    """Generate the bundled synthetic case study scenario."""
    scenario = generate_synthetic_case_study(seed=seed, horizon=horizon, with_forecast=with_forecast)
    doc = io.scenario_to_dict(scenario)
    if out:
        io.atomic_write_text(Path(out), io.canonical_json(doc))
        _echo_json({"path": out, "scenario_hash": io.scenario_hash(scenario),
                    "hospitals": len(scenario.hospitals), "units": len(scenario.units)})
    else:
        _echo_json(doc)


@main.command()
@click.option("--port", type=int, default=8000)
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--data-dir", type=click.Path(), default="surgeplan-data")
@click.option("--frontend", "frontend_dir", type=click.Path(), default=None,
              help="Static UI bundle to serve at / (defaults to ./frontend/dist when present).")
def serve(port, host, data_dir, frontend_dir):
    """Start the HTTP planning service."""
    import uvicorn

    from surgeplan.service.app import create_app

    if frontend_dir is None and Path("frontend/dist").is_dir():
        frontend_dir = "frontend/dist"
    uvicorn.run(create_app(data_dir, frontend_dir=frontend_dir), host=host, port=port)


if __name__ == "__main__":
    main()
