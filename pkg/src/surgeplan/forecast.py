"""Quantile-forecast ingestion, split-conformal calibration, and scoring."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence


class MissingQuantile(ValueError):
    pass


class InsufficientCalibrationData(ValueError):
    pass


@dataclass(frozen=True)
class QuantileForecast:
    """Per-hospital daily quantile bands issued on a given date.

    values[d][q] is the forecast for day d (0-based offset from issue_date)
    at quantile_levels[q]. Levels must include the median 0.5.
    """

    hospital_id: str
    target: str  # census | admissions
    issue_date: date
    horizon_days: int
    quantile_levels: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def level_column(self, level: float) -> tuple[float, ...]:
        try:
            idx = self.quantile_levels.index(level)
        except ValueError:
            raise MissingQuantile(f"quantile level {level} not present in forecast")
        return tuple(row[idx] for row in self.values)

    def median_series(self) -> tuple[float, ...]:
        return self.level_column(0.5)

    def interval_levels(self, level: float) -> tuple[float, float]:
        """The symmetric quantile pair enclosing the central `level` interval."""
        lo = round((1.0 - level) / 2.0, 6)
        hi = round(1.0 - lo, 6)
        if lo not in self.quantile_levels or hi not in self.quantile_levels:
            raise MissingQuantile(f"levels {lo}/{hi} for central {level} interval not present")
        return lo, hi

    def target_dates(self) -> tuple[date, ...]:
        return tuple(self.issue_date + timedelta(days=d + 1) for d in range(self.horizon_days))


def _sorted_rows(values: Sequence[Sequence[float]]) -> tuple[tuple[float, ...], ...]:
    # restores per-day monotonicity across quantile levels (rearrangement)
    return tuple(tuple(sorted(row)) for row in values)


def symmetric_pairs(levels: Sequence[float]) -> list[tuple[float, float, float]]:
    """(alpha, low, high) for each symmetric quantile pair around the median."""
    pairs = []
    for lo in sorted(levels):
        if lo >= 0.5:
            continue
        hi = round(1.0 - lo, 6)
        if hi in levels:
            pairs.append((round(2 * lo, 6), lo, hi))
    return pairs


def interval_score(y: float, lower: float, upper: float, alpha: float) -> float:
    """Interval score: width plus 2/alpha penalties for falling outside."""
    return (upper - lower) + (2.0 / alpha) * max(0.0, lower - y) + (2.0 / alpha) * max(0.0, y - upper)


def weighted_interval_score(y: float, median: float, intervals: Sequence[tuple[float, float, float]]) -> float:
    """WIS over (alpha, lower, upper) intervals; equals |y - median| when none given."""
    k = len(intervals)
    total = 0.5 * abs(y - median)
    for alpha, lower, upper in intervals:
        total += (alpha / 2.0) * interval_score(y, lower, upper, alpha)
    return total / (k + 0.5)


@dataclass(frozen=True)
class ForecastCase:
    """One aligned (forecast, actual) pair for a single target day."""

    hospital_id: str
    target: str
    issue_date: date
    target_date: date
    days_out: int
    quantiles: Mapping[float, float]
    actual: float


def align_cases(forecasts: Iterable[QuantileForecast], actuals: Mapping[tuple[str, str, date], float]) -> list[ForecastCase]:
    """Join forecasts against actuals keyed by (hospital_id, target, date)."""
    cases = []
    for f in forecasts:
        for offset, target_date in enumerate(f.target_dates()):
            key = (f.hospital_id, f.target, target_date)
            if key not in actuals:
                continue
            quantiles = {lvl: f.values[offset][i] for i, lvl in enumerate(f.quantile_levels)}
            cases.append(ForecastCase(
                hospital_id=f.hospital_id,
                target=f.target,
                issue_date=f.issue_date,
                target_date=target_date,
                days_out=offset + 1,
                quantiles=quantiles,
                actual=float(actuals[key]),
            ))
    return cases


def conformity_quantile(scores: Sequence[float], alpha: float) -> float:
    """Empirical ceil((1-alpha)(n+1))/n quantile of the conformity scores."""
    n = len(scores)
    rank = math.ceil((1.0 - alpha) * (n + 1))
    ordered = sorted(scores)
    if rank > n:
        return ordered[-1]
    return ordered[rank - 1]


def conformal_calibrate(
    forecasts: Sequence[QuantileForecast],
    actuals: Mapping[tuple[str, str, date], float],
    interval_level: float = 0.9,
    split: float = 0.25,
) -> tuple[list[QuantileForecast], dict]:
    """Widen (or narrow) interval endpoints by the conformity-score quantile.

    The calibration split is the last `split` fraction of issue dates. For each
    symmetric quantile pair the conformity score is E = max(q_low - y, y - q_high);
    both endpoints shift outward by the ceil((1-alpha)(n+1))/n empirical quantile
    of E, which guarantees >= 1-alpha coverage on the calibration split.
    """
    if not forecasts:
        raise InsufficientCalibrationData("no forecasts supplied")
    issue_dates = sorted({f.issue_date for f in forecasts})
    n_cal = max(1, int(round(split * len(issue_dates))))
    cal_dates = set(issue_dates[-n_cal:])
    cal_cases = [c for c in align_cases(forecasts, actuals) if c.issue_date in cal_dates]
    if len(cal_cases) < 20:
        raise InsufficientCalibrationData(
            f"need at least 20 aligned calibration pairs, got {len(cal_cases)}"
        )

    levels = forecasts[0].quantile_levels
    pairs = symmetric_pairs(levels)
    if interval_level is not None:
        want = round(1.0 - interval_level, 6)
        if not any(abs(alpha - want) < 1e-9 for alpha, _, _ in pairs):
            raise MissingQuantile(f"no symmetric quantile pair for central {interval_level} interval")

    adjustments: dict[float, float] = {}
    for alpha, lo, hi in pairs:
        scores = [max(c.quantiles[lo] - c.actual, c.actual - c.quantiles[hi]) for c in cal_cases]
        adjustments[alpha] = conformity_quantile(scores, alpha)

    lo_of = {lo: alpha for alpha, lo, hi in pairs}
    hi_of = {hi: alpha for alpha, lo, hi in pairs}
    calibrated = []
    for f in forecasts:
        rows = []
        for row in f.values:
            new_row = []
            for lvl, v in zip(f.quantile_levels, row):
                if lvl in lo_of:
                    v = v - adjustments[lo_of[lvl]]
                elif lvl in hi_of:
                    v = v + adjustments[hi_of[lvl]]
                new_row.append(max(0.0, v))
            rows.append(new_row)
        calibrated.append(replace(f, values=_sorted_rows(rows)))

    report = {
        "n_calibration_pairs": len(cal_cases),
        "calibration_issue_dates": [d.isoformat() for d in sorted(cal_dates)],
        "adjustment_by_alpha": {str(a): adj for a, adj in sorted(adjustments.items())},
    }
    return calibrated, report


def empirical_coverage(
    forecasts: Sequence[QuantileForecast],
    actuals: Mapping[tuple[str, str, date], float],
    interval_level: float = 0.9,
) -> float:
    cases = align_cases(forecasts, actuals)
    if not cases:
        return float("nan")
    lo = round((1.0 - interval_level) / 2.0, 6)
    hi = round(1.0 - lo, 6)
    hits = sum(1 for c in cases if c.quantiles[lo] - 1e-12 <= c.actual <= c.quantiles[hi] + 1e-12)
    return hits / len(cases)


def _metrics_for(cases: Sequence[ForecastCase]) -> dict:
    if not cases:
        return {"n": 0, "WIS": None, "MAE": None, "RMSE": None, "sMAPE": None, "MAPE": None}
    abs_errors = []
    sq_errors = []
    smape_terms = []
    mape_terms = []
    wis_values = []
    for c in cases:
        m = c.quantiles.get(0.5)
        if m is None:
            raise MissingQuantile("median (level 0.5) required for scoring")
        y = c.actual
        abs_errors.append(abs(y - m))
        sq_errors.append((y - m) ** 2)
        if abs(y) + abs(m) > 0:
            smape_terms.append(2.0 * abs(y - m) / (abs(y) + abs(m)))
        if abs(y) > 0:
            mape_terms.append(abs(y - m) / abs(y))
        intervals = [
            (alpha, c.quantiles[lo], c.quantiles[hi])
            for alpha, lo, hi in symmetric_pairs(sorted(c.quantiles.keys()))
        ]
        wis_values.append(weighted_interval_score(y, m, intervals))
    n = len(cases)
    return {
        "n": n,
        "WIS": sum(wis_values) / n,
        "MAE": sum(abs_errors) / n,
        "RMSE": math.sqrt(sum(sq_errors) / n),
        "sMAPE": sum(smape_terms) / len(smape_terms) if smape_terms else 0.0,
        "MAPE": sum(mape_terms) / len(mape_terms) if mape_terms else 0.0,
    }


def score_forecast(
    forecasts: Sequence[QuantileForecast],
    actuals: Mapping[tuple[str, str, date], float],
    max_days_out: int = 14,
) -> dict:
    """WIS/MAE/RMSE/sMAPE/MAPE overall and broken down by days out (1..max)."""
    cases = align_cases(forecasts, actuals)
    by_days_out = {}
    for d in range(1, max_days_out + 1):
        subset = [c for c in cases if c.days_out == d]
        if subset:
            by_days_out[d] = _metrics_for(subset)
    return {"overall": _metrics_for(cases), "by_days_out": by_days_out}


FORECAST_CSV_COLUMNS = ("hospital_id", "issue_date", "target_date", "target", "quantile_level", "value")


def read_forecast_csv(path) -> list[QuantileForecast]:
    """Read the long-format forecast CSV into QuantileForecast objects."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FORECAST_CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"forecast CSV missing columns: {sorted(missing)}")
        for i, row in enumerate(reader, start=2):
            try:
                rows.append((
                    row["hospital_id"],
                    date.fromisoformat(row["issue_date"]),
                    date.fromisoformat(row["target_date"]),
                    row["target"],
                    float(row["quantile_level"]),
                    float(row["value"]),
                ))
            except (ValueError, KeyError) as exc:
                raise ValueError(f"forecast CSV line {i}: {exc}") from exc

    grouped: dict[tuple[str, str, date], dict[date, dict[float, float]]] = {}
    for hid, issue, target_date, target, level, value in rows:
        grouped.setdefault((hid, target, issue), {}).setdefault(target_date, {})[level] = value

    forecasts = []
    for (hid, target, issue), days in sorted(grouped.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        dates = sorted(days)
        horizon = (dates[-1] - issue).days
        levels = tuple(sorted(days[dates[0]]))
        values = []
        for offset in range(horizon):
            d = issue + timedelta(days=offset + 1)
            if d not in days:
                raise ValueError(f"forecast for {hid} issued {issue} is missing target date {d}")
            per_level = days[d]
            if set(per_level) != set(levels):
                raise ValueError(f"forecast for {hid} issued {issue} has inconsistent quantile levels on {d}")
            values.append(tuple(per_level[lvl] for lvl in levels))
        forecasts.append(QuantileForecast(
            hospital_id=hid, target=target, issue_date=issue,
            horizon_days=horizon, quantile_levels=levels, values=tuple(values),
        ))
    return forecasts


def write_forecast_csv(path, forecasts: Sequence[QuantileForecast]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FORECAST_CSV_COLUMNS)
        for f in forecasts:
            for offset, target_date in enumerate(f.target_dates()):
                for i, lvl in enumerate(f.quantile_levels):
                    writer.writerow([
                        f.hospital_id, f.issue_date.isoformat(), target_date.isoformat(),
                        f.target, lvl, f.values[offset][i],
                    ])


def read_actuals_csv(path) -> dict[tuple[str, str, date], float]:
    """Read actuals keyed by (hospital_id, target, date) from the series CSV."""
    out: dict[tuple[str, str, date], float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        if "hospital_id" not in fields or "date" not in fields:
            raise ValueError("actuals CSV requires hospital_id and date columns")
        targets = [t for t in ("census", "admissions") if t in fields]
        if not targets:
            raise ValueError("actuals CSV requires a census or admissions column")
        for i, row in enumerate(reader, start=2):
            try:
                d = date.fromisoformat(row["date"])
                for target in targets:
                    raw = row.get(target, "")
                    if raw is None or raw == "":
                        continue
                    value = float(raw)
                    if value < 0:
                        raise ValueError(f"negative {target} value {value}")
                    out[(row["hospital_id"], target, d)] = value
            except ValueError as exc:
                raise ValueError(f"actuals CSV line {i}: {exc}") from exc
    return out
