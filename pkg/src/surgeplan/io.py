"""Scenario/run persistence: strict JSON schema, series CSV, content hashes, run dirs."""

from __future__ import annotations

import csv
import hashlib
import json
import os
import secrets
import subprocess
import time
from dataclasses import asdict
from datetime import date, datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from surgeplan.domain import (DEMAND_KINDS, CapacityUnit, DemandInput, Hospital,
                              LosDistribution, ScenarioInstance, SolveOptions,
                              TransferLimits, Violation, validate_scenario)
from surgeplan.forecast import QuantileForecast
from surgeplan.model import SolutionPlan

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(f"{v.code}@{v.path}" for v in violations[:8]))
        self.violations = violations


def canonical_json(obj: Any) -> str:
    """Stable byte representation: sorted keys, compact separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False) + "\n"


def content_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def new_ulid(now_ms: Optional[int] = None) -> str:
    ts = int(time.time() * 1000) if now_ms is None else now_ms
    rand = int.from_bytes(secrets.token_bytes(10), "big")
    value = (ts << 80) | rand
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))


# ---------------------------------------------------------------------------
# scenario <-> dict

class _Reader:
    """Strict walker over JSON-shaped data; collects coded violations, never raises."""

    def __init__(self):
        self.violations: list[Violation] = []

    def bad(self, code: str, message: str, path: str) -> None:
        self.violations.append(Violation(code, message, path))

    def obj(self, value, path, allowed: set[str]) -> Optional[dict]:
        if not isinstance(value, dict):
            self.bad("BadType", f"expected object at {path or 'root'}", path)
            return None
        for key in value:
            if key not in allowed:
                self.bad("UnknownField", f"unknown field {key!r}", f"{path}.{key}" if path else key)
        return value

    def string(self, value, path, default=None, required=False):
        if value is None:
            if required:
                self.bad("MissingField", "required string missing", path)
            return default
        if not isinstance(value, str):
            self.bad("BadType", "expected string", path)
            return default
        return value

    def integer(self, value, path, default=None, required=False):
        if value is None:
            if required:
                self.bad("MissingField", "required integer missing", path)
            return default
        if isinstance(value, bool) or not isinstance(value, int):
            self.bad("BadType", "expected integer", path)
            return default
        return value

    def number(self, value, path, default=None):
        if value is None:
            return default
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.bad("BadType", "expected number", path)
            return default
        return float(value)

    def boolean(self, value, path, default=False):
        if value is None:
            return default
        if not isinstance(value, bool):
            self.bad("BadType", "expected boolean", path)
            return default
        return value

    def series(self, value, path):
        if value is None:
            return None
        if not isinstance(value, list):
            self.bad("BadType", "expected array of numbers", path)
            return None
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.bad("BadSeries", f"non-numeric entry at index {i}", path)
                return None
            out.append(float(v))
        return tuple(out)

    def isodate(self, value, path, default=None, required=False):
        raw = self.string(value, path, required=required)
        if raw is None:
            return default
        try:
            return date.fromisoformat(raw)
        except ValueError:
            self.bad("BadDate", f"not an ISO date: {raw!r}", path)
            return default


def _parse_forecast(r: _Reader, obj, path, hospital_id: str) -> Optional[QuantileForecast]:
    data = r.obj(obj, path, {"target", "issue_date", "horizon_days", "quantile_levels", "values"})
    if data is None:
        return None
    target = r.string(data.get("target"), f"{path}.target", required=True)
    issue = r.isodate(data.get("issue_date"), f"{path}.issue_date", required=True)
    horizon = r.integer(data.get("horizon_days"), f"{path}.horizon_days", required=True)
    levels = r.series(data.get("quantile_levels"), f"{path}.quantile_levels")
    raw_values = data.get("values")
    values = None
    if isinstance(raw_values, list):
        rows = []
        ok = True
        for i, row in enumerate(raw_values):
            parsed = r.series(row, f"{path}.values[{i}]")
            if parsed is None:
                ok = False
                break
            rows.append(parsed)
        values = tuple(rows) if ok else None
    else:
        r.bad("BadType", "expected array of rows", f"{path}.values")
    if None in (target, issue, horizon, levels, values):
        return None
    if target not in ("census", "admissions"):
        r.bad("BadTarget", f"forecast target must be census or admissions, got {target!r}", f"{path}.target")
        return None
    if len(values) != horizon:
        r.bad("SeriesLengthMismatch", "forecast values rows must equal horizon_days", f"{path}.values")
        return None
    if any(len(row) != len(levels) for row in values):
        r.bad("SeriesLengthMismatch", "forecast rows must match quantile_levels length", f"{path}.values")
        return None
    return QuantileForecast(hospital_id=hospital_id, target=target, issue_date=issue,
                            horizon_days=horizon, quantile_levels=levels, values=values)


def _parse_weight(r: _Reader, value, path):
    if value is None:
        return 1.0
    if isinstance(value, bool):
        r.bad("BadType", "expected number or map", path)
        return 1.0
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if isinstance(v, bool):
                r.bad("BadType", "expected number", f"{path}.{k}")
            elif isinstance(v, (int, float)):
                out[k] = float(v)
            elif isinstance(v, list):
                series = r.series(v, f"{path}.{k}")
                if series is not None:
                    out[k] = series
            elif isinstance(v, dict):
                inner = {}
                for k2, v2 in v.items():
                    if isinstance(v2, bool) or not isinstance(v2, (int, float)):
                        r.bad("BadType", "expected number", f"{path}.{k}.{k2}")
                    else:
                        inner[k2] = float(v2)
                out[k] = inner
            else:
                r.bad("BadType", "expected number, array, or map", f"{path}.{k}")
        return out
    r.bad("BadType", "expected number or map", path)
    return 1.0


_OPTION_FIELDS = {
    "allow_transfers", "robust", "gamma1", "gamma2", "interval_level",
    "occupancy_fraction_cap", "occupancy_headroom", "enforce_unit_order",
    "w1", "w4", "transfer_limits", "initial_unit_state", "time_limit_seconds",
    "solver_backend", "seed",
}


def _parse_options(r: _Reader, obj, path) -> SolveOptions:
    data = r.obj(obj or {}, path, _OPTION_FIELDS)
    if data is None:
        return SolveOptions()
    tl_data = r.obj(data.get("transfer_limits") or {}, f"{path}.transfer_limits",
                    {"pair", "per_hospital", "total"}) or {}
    pair = {}
    raw_pair = tl_data.get("pair") or {}
    if isinstance(raw_pair, dict):
        for h, inner in raw_pair.items():
            if isinstance(inner, dict):
                pair[h] = {g: v for g, v in inner.items()
                           if isinstance(v, int) and not isinstance(v, bool)}
                for g, v in inner.items():
                    if isinstance(v, bool) or not isinstance(v, int):
                        r.bad("BadTransferLimit", "pair limit must be integer", f"{path}.transfer_limits.pair.{h}.{g}")
            else:
                r.bad("BadType", "expected map", f"{path}.transfer_limits.pair.{h}")
    per_hospital = {}
    raw_ph = tl_data.get("per_hospital") or {}
    if isinstance(raw_ph, dict):
        for h, v in raw_ph.items():
            if isinstance(v, bool) or not isinstance(v, int):
                r.bad("BadTransferLimit", "hospital limit must be integer", f"{path}.transfer_limits.per_hospital.{h}")
            else:
                per_hospital[h] = v
    total = tl_data.get("total")
    if total is not None and (isinstance(total, bool) or not isinstance(total, int)):
        r.bad("BadTransferLimit", "total limit must be integer", f"{path}.transfer_limits.total")
        total = None

    init_state = {}
    raw_init = data.get("initial_unit_state") or {}
    if isinstance(raw_init, dict):
        for uid, flag in raw_init.items():
            if isinstance(flag, bool):
                init_state[uid] = flag
            else:
                r.bad("BadInitialState", "expected boolean", f"{path}.initial_unit_state.{uid}")
    seed = r.integer(data.get("seed"), f"{path}.seed", default=0)
    return SolveOptions(
        allow_transfers=r.boolean(data.get("allow_transfers"), f"{path}.allow_transfers"),
        robust=r.boolean(data.get("robust"), f"{path}.robust"),
        gamma1=r.number(data.get("gamma1"), f"{path}.gamma1", default=0.0),
        gamma2=r.number(data.get("gamma2"), f"{path}.gamma2"),
        interval_level=r.number(data.get("interval_level"), f"{path}.interval_level", default=0.9),
        occupancy_fraction_cap=r.number(data.get("occupancy_fraction_cap"), f"{path}.occupancy_fraction_cap"),
        occupancy_headroom=r.number(data.get("occupancy_headroom"), f"{path}.occupancy_headroom"),
        enforce_unit_order=r.boolean(data.get("enforce_unit_order"), f"{path}.enforce_unit_order"),
        w1=_parse_weight(r, data.get("w1"), f"{path}.w1"),
        w4=_parse_weight(r, data.get("w4"), f"{path}.w4"),
        transfer_limits=TransferLimits(pair=pair, per_hospital=per_hospital, total=total),
        initial_unit_state=init_state,
        time_limit_seconds=r.number(data.get("time_limit_seconds"), f"{path}.time_limit_seconds"),
        solver_backend=r.string(data.get("solver_backend"), f"{path}.solver_backend"),
        seed=seed if seed is not None else 0,
    )


def parse_scenario(obj: Any) -> tuple[Optional[ScenarioInstance], list[Violation]]:
    """Total scenario parser: any malformed input maps to coded violations."""
    r = _Reader()
    data = r.obj(obj, "", {"schema_version", "name", "start_date", "horizon",
                           "hospitals", "units", "demand", "options"})
    if data is None:
        return None, r.violations
    version = r.integer(data.get("schema_version"), "schema_version", default=SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        r.bad("SchemaVersionMismatch", f"schema_version {version} unsupported (expected {SCHEMA_VERSION})",
              "schema_version")
        return None, r.violations

    name = r.string(data.get("name"), "name", default="scenario")
    start = r.isodate(data.get("start_date"), "start_date", default=date(2021, 12, 15))
    horizon = r.integer(data.get("horizon"), "horizon", required=True)

    hospitals = []
    raw_hospitals = data.get("hospitals")
    if isinstance(raw_hospitals, list):
        for i, h in enumerate(raw_hospitals):
            hobj = r.obj(h, f"hospitals[{i}]", {"id", "name"})
            if hobj is None:
                continue
            hid = r.string(hobj.get("id"), f"hospitals[{i}].id", required=True)
            if hid is not None:
                hospitals.append(Hospital(id=hid, name=r.string(hobj.get("name"), f"hospitals[{i}].name", default="") or ""))
    else:
        r.bad("MissingField", "hospitals must be an array", "hospitals")

    units = []
    raw_units = data.get("units")
    unit_fields = {"id", "hospital", "beds", "surge_level", "priority_rank",
                   "setup_days", "teardown_days", "reserve_cost_per_day", "conversion_cost"}
    if isinstance(raw_units, list):
        for i, u in enumerate(raw_units):
            uobj = r.obj(u, f"units[{i}]", unit_fields)
            if uobj is None:
                continue
            uid = r.string(uobj.get("id"), f"units[{i}].id", required=True)
            hid = r.string(uobj.get("hospital"), f"units[{i}].hospital", required=True)
            beds = r.integer(uobj.get("beds"), f"units[{i}].beds", required=True)
            if None in (uid, hid, beds):
                continue
            units.append(CapacityUnit(
                id=uid, hospital=hid, beds=beds,
                surge_level=r.string(uobj.get("surge_level"), f"units[{i}].surge_level", default="baseline") or "baseline",
                priority_rank=r.integer(uobj.get("priority_rank"), f"units[{i}].priority_rank", default=i + 1) or i + 1,
                setup_days=r.integer(uobj.get("setup_days"), f"units[{i}].setup_days", default=0) or 0,
                teardown_days=r.integer(uobj.get("teardown_days"), f"units[{i}].teardown_days", default=0) or 0,
                reserve_cost_per_day=r.number(uobj.get("reserve_cost_per_day"), f"units[{i}].reserve_cost_per_day", default=0.0),
                conversion_cost=r.number(uobj.get("conversion_cost"), f"units[{i}].conversion_cost", default=0.0),
            ))
    else:
        r.bad("MissingField", "units must be an array", "units")

    demand = {}
    raw_demand = data.get("demand")
    demand_fields = {"kind", "census", "arrivals", "forecast", "los", "initial_census"}
    if isinstance(raw_demand, dict):
        for hid, d in raw_demand.items():
            path = f"demand.{hid}"
            dobj = r.obj(d, path, demand_fields)
            if dobj is None:
                continue
            kind = r.string(dobj.get("kind"), f"{path}.kind", required=True)
            if kind not in DEMAND_KINDS:
                r.bad("UnknownDemandKind", f"unknown demand kind {kind!r}", f"{path}.kind")
                continue
            los = None
            if dobj.get("los") is not None:
                lobj = r.obj(dobj["los"], f"{path}.los", {"pmf"})
                if lobj is not None:
                    pmf = r.series(lobj.get("pmf"), f"{path}.los.pmf")
                    if pmf:
                        los = LosDistribution(pmf=pmf)
                    else:
                        r.bad("EmptyPmf", "los.pmf must be a non-empty array", f"{path}.los.pmf")
            forecast = None
            if dobj.get("forecast") is not None:
                forecast = _parse_forecast(r, dobj["forecast"], f"{path}.forecast", hid)
            demand[hid] = DemandInput(
                kind=kind,
                census=r.series(dobj.get("census"), f"{path}.census"),
                arrivals=r.series(dobj.get("arrivals"), f"{path}.arrivals"),
                forecast=forecast,
                los=los,
                initial_census=r.number(dobj.get("initial_census"), f"{path}.initial_census", default=0.0),
            )
    else:
        r.bad("MissingField", "demand must be a map of hospital id to demand input", "demand")

    options = _parse_options(r, data.get("options"), "options")
    if horizon is None:
        return None, r.violations
    scenario = ScenarioInstance(
        name=name or "scenario", start_date=start, horizon=horizon,
        hospitals=tuple(hospitals), units=tuple(units), demand=demand, options=options,
    )
    violations = r.violations + validate_scenario(scenario)
    if violations:
        return scenario, violations
    return scenario, []


def scenario_to_dict(s: ScenarioInstance) -> dict:
    def demand_dict(d: DemandInput) -> dict:
        out: dict[str, Any] = {"kind": d.kind}
        if d.census is not None:
            out["census"] = list(d.census)
        if d.arrivals is not None:
            out["arrivals"] = list(d.arrivals)
        if d.los is not None:
            out["los"] = {"pmf": list(d.los.pmf)}
        if d.forecast is not None:
            f = d.forecast
            out["forecast"] = {
                "target": f.target,
                "issue_date": f.issue_date.isoformat(),
                "horizon_days": f.horizon_days,
                "quantile_levels": list(f.quantile_levels),
                "values": [list(row) for row in f.values],
            }
        if d.initial_census:
            out["initial_census"] = d.initial_census
        return out

    o = s.options
    options = {
        "allow_transfers": o.allow_transfers,
        "robust": o.robust,
        "gamma1": o.gamma1,
        "gamma2": o.gamma2,
        "interval_level": o.interval_level,
        "occupancy_fraction_cap": o.occupancy_fraction_cap,
        "occupancy_headroom": o.occupancy_headroom,
        "enforce_unit_order": o.enforce_unit_order,
        "w1": o.w1 if isinstance(o.w1, (int, float)) else _weight_dict(o.w1),
        "w4": o.w4 if isinstance(o.w4, (int, float)) else _weight_dict(o.w4),
        "transfer_limits": {
            "pair": {h: dict(v) for h, v in o.transfer_limits.pair.items()},
            "per_hospital": dict(o.transfer_limits.per_hospital),
            "total": o.transfer_limits.total,
        },
        "initial_unit_state": dict(o.initial_unit_state),
        "time_limit_seconds": o.time_limit_seconds,
        "solver_backend": o.solver_backend,
        "seed": o.seed,
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "name": s.name,
        "start_date": s.start_date.isoformat(),
        "horizon": s.horizon,
        "hospitals": [{"id": h.id, "name": h.name} for h in s.hospitals],
        "units": [
            {
                "id": u.id, "hospital": u.hospital, "beds": u.beds,
                "surge_level": u.surge_level, "priority_rank": u.priority_rank,
                "setup_days": u.setup_days, "teardown_days": u.teardown_days,
                "reserve_cost_per_day": u.reserve_cost_per_day,
                "conversion_cost": u.conversion_cost,
            }
            for u in s.units
        ],
        "demand": {hid: demand_dict(d) for hid, d in sorted(s.demand.items())},
        "options": options,
    }


def _weight_dict(w) -> dict:
    out = {}
    for k, v in w.items():
        if isinstance(v, (int, float)):
            out[k] = v
        elif isinstance(v, dict):
            out[k] = dict(v)
        else:
            out[k] = list(v)
    return out


def scenario_hash(s: ScenarioInstance) -> str:
    data = scenario_to_dict(s)
    data.pop("options", None)
    return content_hash(data)


def options_hash(o: SolveOptions) -> str:
    sample = ScenarioInstance(name="", start_date=date(2000, 1, 1), horizon=1,
                              hospitals=(), units=(), demand={}, options=o)
    return content_hash(scenario_to_dict(sample)["options"])


def load_scenario(path) -> ScenarioInstance:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([Violation("ParseError", f"invalid JSON: line {exc.lineno} column {exc.colno}", "")])
    scenario, violations = parse_scenario(obj)
    if violations:
        raise ScenarioError(violations)
    return scenario


def save_scenario(path, s: ScenarioInstance) -> None:
    atomic_write_text(Path(path), canonical_json(scenario_to_dict(s)))


# ---------------------------------------------------------------------------
# plan / run persistence

def plan_to_dict(plan: SolutionPlan) -> dict:
    data = asdict(plan)
    # wall-clock timing lives in the run record; the canonical plan document must
    # be byte-identical across reruns of the same scenario+options+seed
    data.pop("runtime_seconds", None)
    data["transfers"] = list(data["transfers"])
    data["hospitals"] = list(data["hospitals"])
    for key in ("allocations", "committed", "conversions"):
        data[key] = {k: list(v) for k, v in data[key].items()}
    for key in ("capacity", "demand_bound"):
        data[key] = {k: list(v) for k, v in data[key].items()}
    return data


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@lru_cache(maxsize=1)
def _git_describe() -> Optional[str]:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        )
    except (OSError, subprocess.TimeoutExpired):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


def provenance(scenario: ScenarioInstance, plan: SolutionPlan) -> dict:
    from surgeplan import __version__

    return {
        "surgeplan_version": __version__,
        "git_describe": _git_describe(),
        "scenario_hash": scenario_hash(scenario),
        "options_hash": options_hash(scenario.options),
        "seed": scenario.options.seed,
        "solver": plan.solver_backend,
    }


def save_run(
    runs_dir,
    scenario: ScenarioInstance,
    plan: SolutionPlan,
    kind: str = "solve",
    extra_payload: Optional[dict] = None,
    run_id: Optional[str] = None,
    plots: Optional[dict[str, str]] = None,
) -> tuple[str, Path]:
    """Persist a run under runs/<ulid>/ (plan.json + metrics.json are canonical)."""
    run_id = run_id or new_ulid()
    run_path = Path(runs_dir) / run_id
    run_path.mkdir(parents=True, exist_ok=True)
    plan_doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "provenance": provenance(scenario, plan),
        "plan": plan_to_dict(plan),
    }
    if extra_payload:
        plan_doc.update(extra_payload)
    atomic_write_text(run_path / "plan.json", canonical_json(plan_doc))
    atomic_write_text(run_path / "metrics.json", canonical_json(plan.metrics))
    record = {
        "run_id": run_id,
        "kind": kind,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "scenario_hash": plan_doc["provenance"]["scenario_hash"],
        "options_hash": plan_doc["provenance"]["options_hash"],
        "status": plan.status,
        "objective": plan.objective,
        "runtime_seconds": plan.runtime_seconds,
    }
    atomic_write_text(run_path / "run.json", canonical_json(record))
    for name, text in (plots or {}).items():
        atomic_write_text(run_path / "plots" / name, text)
    return run_id, run_path


# ---------------------------------------------------------------------------
# series CSV

SERIES_CSV_COLUMNS = ("hospital_id", "date", "census", "admissions")


def read_series_csv(path) -> dict[str, dict[str, list[float]]]:
    """hospital_id,date,census,admissions rows -> per-hospital date-ordered series."""
    rows: dict[str, list[tuple[date, Optional[float], Optional[float]]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        if "hospital_id" not in fields or "date" not in fields:
            raise ScenarioError([Violation("ParseError", "series CSV needs hospital_id and date columns", "")])
        for i, row in enumerate(reader, start=2):
            try:
                d = date.fromisoformat(row["date"])
            except (ValueError, TypeError):
                raise ScenarioError([Violation("ParseError", f"line {i}: bad date {row.get('date')!r}", "")])
            values = []
            for col in ("census", "admissions"):
                raw = row.get(col)
                if raw is None or raw == "":
                    values.append(None)
                    continue
                try:
                    v = float(raw)
                except ValueError:
                    raise ScenarioError([Violation("ParseError", f"line {i}: bad {col} value {raw!r}", "")])
                if v < 0:
                    raise ScenarioError([Violation("NegativeValue", f"line {i}: negative {col} value {v}", "")])
                values.append(v)
            rows.setdefault(row["hospital_id"], []).append((d, values[0], values[1]))
    out = {}
    for hid, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        out[hid] = {
            "dates": [e[0].isoformat() for e in entries],
            "census": [e[1] for e in entries if e[1] is not None],
            "admissions": [e[2] for e in entries if e[2] is not None],
        }
    return out
