"""Shared domain types for surge capacity planning scenarios."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from typing import Mapping, Optional, Union

from surgeplan.forecast import QuantileForecast

SURGE_LEVELS = ("baseline", "level1", "level2", "level3", "max")

DEMAND_KINDS = ("census_series", "arrivals_series", "arrivals_forecast")


def level_index(level: str) -> int:
    return SURGE_LEVELS.index(level)


@dataclass(frozen=True)
class Hospital:
    id: str
    name: str = ""


@dataclass(frozen=True)
class CapacityUnit:
    """A group of beds that is allocated and converted as one block."""

    id: str
    hospital: str
    beds: int
    surge_level: str = "baseline"
    priority_rank: int = 1
    setup_days: int = 0
    teardown_days: int = 0
    reserve_cost_per_day: float = 0.0
    conversion_cost: float = 0.0


@dataclass(frozen=True)
class LosDistribution:
    """Probability mass function over integer lengths of stay 0..L_max."""

    pmf: tuple[float, ...]

    @property
    def l_max(self) -> int:
        return len(self.pmf) - 1

    def survival(self, tau: int) -> float:
        """P(stay > tau); zero beyond the modeled maximum."""
        if tau < 0:
            return 1.0
        return float(sum(self.pmf[tau + 1 :]))

    def survival_curve(self, length: int) -> tuple[float, ...]:
        cum = 0.0
        out = []
        for tau in range(length):
            if tau < len(self.pmf):
                cum += self.pmf[tau]
            surv = 1.0 - cum
            # snap float dust: survival beyond the support is exactly zero
            out.append(surv if surv > 1e-12 else 0.0)
        return tuple(out)


@dataclass(frozen=True)
class DemandInput:
    """Per-hospital demand: an observed census, an arrivals series, or a quantile forecast."""

    kind: str
    census: Optional[tuple[float, ...]] = None
    arrivals: Optional[tuple[float, ...]] = None
    forecast: Optional[QuantileForecast] = None
    los: Optional[LosDistribution] = None
    initial_census: float = 0.0


@dataclass(frozen=True)
class TransferLimits:
    pair: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    per_hospital: Mapping[str, int] = field(default_factory=dict)
    total: Optional[int] = None

    def pair_limit(self, h: str, g: str) -> Optional[int]:
        return self.pair.get(h, {}).get(g)

    def hospital_limit(self, h: str) -> Optional[int]:
        return self.per_hospital.get(h)

    def __eq__(self, other):
        if not isinstance(other, TransferLimits):
            return NotImplemented
        return (
            {k: dict(v) for k, v in self.pair.items()} == {k: dict(v) for k, v in other.pair.items()}
            and dict(self.per_hospital) == dict(other.per_hospital)
            and self.total == other.total
        )


Weight = Union[float, Mapping[str, float], Mapping[str, tuple]]


@dataclass(frozen=True)
class SolveOptions:
    allow_transfers: bool = False
    robust: bool = False
    gamma1: float = 0.0
    gamma2: Optional[float] = None
    interval_level: float = 0.9
    occupancy_fraction_cap: Optional[float] = None
    occupancy_headroom: Optional[float] = None
    enforce_unit_order: bool = False
    w1: Weight = 1.0
    w4: Weight = 1.0
    transfer_limits: TransferLimits = field(default_factory=TransferLimits)
    initial_unit_state: Mapping[str, bool] = field(default_factory=dict)
    time_limit_seconds: Optional[float] = None
    solver_backend: Optional[str] = None
    seed: int = 0

    def w1_at(self, hospital: str, t: int) -> float:
        return _resolve_weight(self.w1, hospital, t)

    def w4_at(self, origin: str, dest: str) -> float:
        w = self.w4
        if isinstance(w, (int, float)):
            return float(w)
        inner = w.get(origin, 0.0)
        if isinstance(inner, (int, float)):
            return float(inner)
        return float(inner.get(dest, 0.0))

    def __eq__(self, other):
        if not isinstance(other, SolveOptions):
            return NotImplemented
        return _options_key(self) == _options_key(other)


def _resolve_weight(w, hospital: str, t: int) -> float:
    if isinstance(w, (int, float)):
        return float(w)
    val = w.get(hospital, 0.0)
    if isinstance(val, (int, float)):
        return float(val)
    return float(val[t])


def _plain(value):
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _options_key(o: SolveOptions):
    return (
        o.allow_transfers, o.robust, o.gamma1, o.gamma2, o.interval_level,
        o.occupancy_fraction_cap, o.occupancy_headroom, o.enforce_unit_order,
        _plain(o.w1), _plain(o.w4),
        _plain(o.transfer_limits.pair), _plain(o.transfer_limits.per_hospital),
        o.transfer_limits.total, _plain(o.initial_unit_state),
        o.time_limit_seconds, o.solver_backend, o.seed,
    )


@dataclass(frozen=True)
class ScenarioInstance:
    """Full problem input: hospitals, units, horizon, demand, and solve options."""

    name: str
    start_date: date
    horizon: int
    hospitals: tuple[Hospital, ...]
    units: tuple[CapacityUnit, ...]
    demand: Mapping[str, DemandInput]
    options: SolveOptions = field(default_factory=SolveOptions)

    def hospital_ids(self) -> tuple[str, ...]:
        return tuple(h.id for h in self.hospitals)

    def units_of(self, hospital_id: str) -> tuple[CapacityUnit, ...]:
        units = [u for u in self.units if u.hospital == hospital_id]
        units.sort(key=lambda u: u.priority_rank)
        return tuple(units)

    def baseline_capacity(self, hospital_id: str) -> int:
        return sum(u.beds for u in self.units if u.hospital == hospital_id and u.surge_level == "baseline")

    def with_options(self, **changes) -> "ScenarioInstance":
        return replace(self, options=replace(self.options, **changes))

    def __eq__(self, other):
        if not isinstance(other, ScenarioInstance):
            return NotImplemented
        return (
            self.name == other.name
            and self.start_date == other.start_date
            and self.horizon == other.horizon
            and self.hospitals == other.hospitals
            and self.units == other.units
            and dict(self.demand) == dict(other.demand)
            and self.options == other.options
        )


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    path: str = ""

    def as_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "path": self.path}


def _check_series(values, path: str, horizon: int, out: list[Violation]) -> None:
    if values is None:
        return
    try:
        n = len(values)
    except TypeError:
        out.append(Violation("BadSeries", "series is not a sequence", path))
        return
    if horizon is not None and n != horizon:
        out.append(Violation("SeriesLengthMismatch", f"series has length {n}, expected horizon {horizon}", path))
    for i, v in enumerate(values):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            out.append(Violation("BadSeries", f"non-numeric entry at index {i}", path))
            return
        if v < 0:
            out.append(Violation("NegativeValue", f"negative value {v} at index {i}", path))
            return


def _check_los(los: LosDistribution, path: str, out: list[Violation]) -> None:
    if not los.pmf:
        out.append(Violation("EmptyPmf", "LOS pmf is empty", path))
        return
    if any((not isinstance(p, (int, float))) or p < 0 for p in los.pmf):
        out.append(Violation("PmfNegativeEntry", "LOS pmf has a negative or non-numeric entry", path))
        return
    total = sum(los.pmf)
    if abs(total - 1.0) > 1e-9:
        out.append(Violation("PmfNotNormalized", f"LOS pmf sums to {total!r}, expected 1", path))


def validate_scenario(s: ScenarioInstance) -> list[Violation]:
    """Collect every invariant violation; an empty list means the scenario is valid.

    Violations are data, not exceptions: malformed values are reported with a
    machine-readable code and the offending path.
    """
    out: list[Violation] = []
    if not isinstance(s.horizon, int) or s.horizon < 1:
        out.append(Violation("BadHorizon", f"horizon must be a positive integer, got {s.horizon!r}", "horizon"))

    seen_h = set()
    for h in s.hospitals:
        if not h.id or not isinstance(h.id, str):
            out.append(Violation("BadHospitalId", "hospital id must be a non-empty string", "hospitals"))
            continue
        if h.id in seen_h:
            out.append(Violation("DuplicateHospitalId", f"hospital id {h.id!r} appears more than once", f"hospitals.{h.id}"))
        seen_h.add(h.id)
    if not s.hospitals:
        out.append(Violation("NoHospitals", "scenario has no hospitals", "hospitals"))

    seen_u = set()
    by_hospital: dict[str, list[CapacityUnit]] = {}
    for u in s.units:
        path = f"units.{u.id}"
        if u.id in seen_u:
            out.append(Violation("DuplicateUnitId", f"unit id {u.id!r} appears more than once", path))
        seen_u.add(u.id)
        if u.hospital not in seen_h:
            out.append(Violation("UnknownHospitalRef", f"unit {u.id!r} references unknown hospital {u.hospital!r}", path))
        if not isinstance(u.beds, int) or u.beds < 1:
            out.append(Violation("NonPositiveBeds", f"unit {u.id!r} must have at least 1 bed", path))
        if u.surge_level not in SURGE_LEVELS:
            out.append(Violation("UnknownSurgeLevel", f"unit {u.id!r} has unknown surge level {u.surge_level!r}", path))
        if not isinstance(u.priority_rank, int) or u.priority_rank < 1:
            out.append(Violation("BadPriorityRank", f"unit {u.id!r} priority_rank must be a positive integer", path))
        if not isinstance(u.setup_days, int) or u.setup_days < 0 or not isinstance(u.teardown_days, int) or u.teardown_days < 0:
            out.append(Violation("BadConversionDelay", f"unit {u.id!r} setup/teardown days must be nonnegative integers", path))
        if not isinstance(u.reserve_cost_per_day, (int, float)) or u.reserve_cost_per_day < 0:
            out.append(Violation("NegativeCost", f"unit {u.id!r} reserve_cost_per_day must be nonnegative", path))
        if not isinstance(u.conversion_cost, (int, float)) or u.conversion_cost < 0:
            out.append(Violation("NegativeCost", f"unit {u.id!r} conversion_cost must be nonnegative", path))
        by_hospital.setdefault(u.hospital, []).append(u)

    for hid in seen_h:
        units = by_hospital.get(hid, [])
        if not units:
            out.append(Violation("HospitalWithoutUnits", f"hospital {hid!r} has no capacity units", f"hospitals.{hid}"))
            continue
        ranks = [u.priority_rank for u in units if isinstance(u.priority_rank, int)]
        if len(set(ranks)) != len(ranks):
            out.append(Violation("DuplicatePriorityRank", f"hospital {hid!r} has duplicate unit priority ranks", f"hospitals.{hid}"))
        ordered = sorted(units, key=lambda u: u.priority_rank)
        levels = [level_index(u.surge_level) for u in ordered if u.surge_level in SURGE_LEVELS]
        if any(levels[i] > levels[i + 1] for i in range(len(levels) - 1)):
            out.append(Violation(
                "PriorityOrderInconsistent",
                f"hospital {hid!r}: priority order must not place a higher surge level before a lower one",
                f"hospitals.{hid}",
            ))

    horizon = s.horizon if isinstance(s.horizon, int) and s.horizon >= 1 else None
    for hid in seen_h:
        d = s.demand.get(hid)
        path = f"demand.{hid}"
        if d is None:
            out.append(Violation("MissingDemand", f"hospital {hid!r} has no demand input", path))
            continue
        if d.kind not in DEMAND_KINDS:
            out.append(Violation("UnknownDemandKind", f"unknown demand kind {d.kind!r}", path))
            continue
        if d.kind == "census_series":
            if d.census is None:
                out.append(Violation("MissingSeries", "census_series demand must provide a census vector", path))
            else:
                _check_series(d.census, path + ".census", horizon, out)
        elif d.kind == "arrivals_series":
            if d.arrivals is None:
                out.append(Violation("MissingSeries", "arrivals_series demand must provide an arrivals vector", path))
            else:
                _check_series(d.arrivals, path + ".arrivals", horizon, out)
            if d.los is None:
                out.append(Violation("MissingLos", "arrivals demand requires a LOS distribution", path))
        elif d.kind == "arrivals_forecast":
            if d.forecast is None:
                out.append(Violation("MissingForecast", "arrivals_forecast demand must provide a quantile forecast", path))
            else:
                if horizon is not None and d.forecast.horizon_days != horizon:
                    out.append(Violation("SeriesLengthMismatch", "forecast horizon does not match scenario horizon", path))
                if 0.5 not in d.forecast.quantile_levels:
                    out.append(Violation("MissingQuantile", "forecast must include the median (level 0.5)", path))
            if d.forecast is not None and d.forecast.target == "admissions" and d.los is None:
                out.append(Violation("MissingLos", "admissions forecasts require a LOS distribution", path))
        if d.los is not None:
            _check_los(d.los, path + ".los", out)
        if not isinstance(d.initial_census, (int, float)) or d.initial_census < 0:
            out.append(Violation("NegativeValue", "initial_census must be nonnegative", path))

    for hid in s.demand:
        if hid not in seen_h:
            out.append(Violation("UnknownHospitalRef", f"demand entry references unknown hospital {hid!r}", f"demand.{hid}"))

    o = s.options
    if o.gamma1 is None or o.gamma1 < 0:
        out.append(Violation("BadGamma", "gamma1 must be nonnegative", "options.gamma1"))
    if o.gamma2 is not None and o.gamma2 < 1:
        # a step-ratio budget below 1 excludes the nominal trajectory itself
        out.append(Violation("BadGamma", "gamma2 must be at least 1 when set", "options.gamma2"))
    if o.occupancy_fraction_cap is not None and not (0 < o.occupancy_fraction_cap <= 1):
        out.append(Violation("BadOccupancyCap", "occupancy_fraction_cap must lie in (0, 1]", "options.occupancy_fraction_cap"))
    if o.occupancy_headroom is not None and o.occupancy_headroom < 0:
        out.append(Violation("BadOccupancyCap", "occupancy_headroom must be nonnegative", "options.occupancy_headroom"))
    if not (0 < o.interval_level < 1):
        out.append(Violation("BadIntervalLevel", "interval_level must lie in (0, 1)", "options.interval_level"))
    if o.robust:
        for hid in seen_h:
            d = s.demand.get(hid)
            if d is not None and d.kind != "arrivals_forecast":
                out.append(Violation(
                    "RobustWithoutInterval",
                    f"robust mode requires interval information (quantile forecast) for hospital {hid!r}",
                    f"demand.{hid}",
                ))
    if o.allow_transfers:
        for hid in seen_h:
            d = s.demand.get(hid)
            if d is None:
                continue
            if d.kind == "census_series" or (d.kind == "arrivals_forecast" and d.forecast is not None and d.forecast.target == "census"):
                out.append(Violation(
                    "TransfersNeedArrivals",
                    f"transfer mode requires arrivals-based demand with a LOS distribution for hospital {hid!r}",
                    f"demand.{hid}",
                ))
    for uid, flag in o.initial_unit_state.items():
        if uid not in seen_u:
            out.append(Violation("UnknownUnitRef", f"initial_unit_state references unknown unit {uid!r}", "options.initial_unit_state"))
        if not isinstance(flag, bool):
            out.append(Violation("BadInitialState", f"initial_unit_state[{uid!r}] must be boolean", "options.initial_unit_state"))
    tl = o.transfer_limits
    for h, inner in tl.pair.items():
        for g, lim in inner.items():
            if not isinstance(lim, int) or lim < 0:
                out.append(Violation("BadTransferLimit", f"pair limit {h!r}->{g!r} must be a nonnegative integer", "options.transfer_limits"))
    for h, lim in tl.per_hospital.items():
        if not isinstance(lim, int) or lim < 0:
            out.append(Violation("BadTransferLimit", f"hospital limit for {h!r} must be a nonnegative integer", "options.transfer_limits"))
    if tl.total is not None and (not isinstance(tl.total, int) or tl.total < 0):
        out.append(Violation("BadTransferLimit", "total transfer limit must be a nonnegative integer", "options.transfer_limits"))

    return out


def total_system_capacity(s: ScenarioInstance) -> dict:
    """Bed totals per hospital split by surge level, plus system-wide sums."""
    hospitals: dict[str, dict] = {}
    for h in s.hospitals:
        by_level = {lvl: 0 for lvl in SURGE_LEVELS}
        for u in s.units_of(h.id):
            by_level[u.surge_level] += u.beds
        hospitals[h.id] = {
            "total": sum(by_level.values()),
            "baseline": by_level["baseline"],
            "surge": sum(v for lvl, v in by_level.items() if lvl != "baseline"),
            "by_level": by_level,
        }
    system_by_level = {lvl: sum(info["by_level"][lvl] for info in hospitals.values()) for lvl in SURGE_LEVELS}
    return {
        "hospitals": hospitals,
        "system": {
            "total": sum(system_by_level.values()),
            "baseline": system_by_level["baseline"],
            "surge": sum(v for lvl, v in system_by_level.items() if lvl != "baseline"),
            "by_level": system_by_level,
        },
    }
