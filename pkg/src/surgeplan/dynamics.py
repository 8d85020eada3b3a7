"""Census/admission/discharge dynamics and LOS estimation from aggregate data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, stats

from surgeplan.domain import LosDistribution


class TransferExceedsArrivals(ValueError):
    pass


class DegenerateFit(ValueError):
    pass


@dataclass(frozen=True)
class FlowSeries:
    admissions: tuple[float, ...]
    discharges: tuple[float, ...]
    census: tuple[float, ...]


def admissions_from_arrivals(arrivals: Sequence[float], transfers_in: Sequence[float], transfers_out: Sequence[float]) -> np.ndarray:
    """a_t = arrivals_t + transfers_in_t - transfers_out_t.

    Outgoing transfers may only take patients from the day's arrivals.
    """
    i = np.asarray(arrivals, dtype=float)
    inc = np.asarray(transfers_in, dtype=float)
    out = np.asarray(transfers_out, dtype=float)
    if not (len(i) == len(inc) == len(out)):
        raise ValueError("arrivals and transfer series must have equal length")
    over = np.nonzero(out > i + 1e-9)[0]
    if len(over):
        t = int(over[0])
        raise TransferExceedsArrivals(f"outgoing transfers {out[t]} exceed arrivals {i[t]} at t={t}")
    return i + inc - out


def expected_discharges(admissions: Sequence[float], los: LosDistribution) -> np.ndarray:
    """d_t = sum over t' <= t of P(L = t - t') * a_{t'}."""
    a = np.asarray(admissions, dtype=float)
    pmf = np.asarray(los.pmf, dtype=float)
    full = np.convolve(a, pmf)
    return full[: len(a)]


def initial_census_decay(initial_census: float, los: LosDistribution, horizon: int) -> np.ndarray:
    """Occupancy trajectory of patients already present at t=0.

    The pre-horizon cohort is assumed to empty along the LOS survival curve:
    day t retains S(t)/S(0) of the initial census (everything gone after day 0
    if same-day discharge is certain).
    """
    out = np.zeros(horizon)
    if initial_census <= 0 or horizon == 0:
        return out
    surv = np.array(los.survival_curve(horizon))
    out[0] = initial_census
    if surv[0] > 0:
        out[1:] = initial_census * surv[1:] / surv[0]
    return out


def census_from_flows(
    admissions: Sequence[float],
    los: LosDistribution,
    initial_census_decay_series: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """o_t = sum over t' <= t of S(t - t') * a_{t'}, plus any initial-cohort decay.

    S is the LOS survival function, so this equals the cumulative
    (admissions - discharges) form.
    """
    a = np.asarray(admissions, dtype=float)
    surv = np.array(los.survival_curve(len(a)))
    o = np.convolve(a, surv)[: len(a)]
    if initial_census_decay_series is not None:
        init = np.asarray(initial_census_decay_series, dtype=float)
        if len(init) != len(a):
            raise ValueError("initial census decay series must match admissions length")
        o = o + init
    return o


def flows_from_arrivals(
    arrivals: Sequence[float],
    los: LosDistribution,
    transfers_in: Optional[Sequence[float]] = None,
    transfers_out: Optional[Sequence[float]] = None,
    initial_census: float = 0.0,
) -> FlowSeries:
    n = len(arrivals)
    zeros = np.zeros(n)
    a = admissions_from_arrivals(
        arrivals,
        zeros if transfers_in is None else transfers_in,
        zeros if transfers_out is None else transfers_out,
    )
    d = expected_discharges(a, los)
    o = census_from_flows(a, los, initial_census_decay(initial_census, los, n))
    return FlowSeries(tuple(a.tolist()), tuple(d.tolist()), tuple(o.tolist()))


def _census_design_matrix(admissions: np.ndarray, l_max: int) -> np.ndarray:
    """W[t, l] = sum of admissions over the last l days up to t, so census = W @ pmf."""
    T = len(admissions)
    W = np.zeros((T, l_max + 1))
    for ell in range(1, l_max + 1):
        for t in range(T):
            lo = max(0, t - ell + 1)
            W[t, ell] = admissions[lo : t + 1].sum()
    return W


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _fit_nonparametric(W: np.ndarray, census: np.ndarray, l_max: int, ridge: float = 1e-6) -> np.ndarray:
    # projected gradient on ||W p - o||^2 + ridge * ||D2 p||^2 over the simplex
    n = l_max + 1
    D2 = np.zeros((max(n - 2, 0), n))
    for r in range(n - 2):
        D2[r, r : r + 3] = (1.0, -2.0, 1.0)
    H = 2.0 * (W.T @ W + ridge * (D2.T @ D2))
    b = 2.0 * (W.T @ census)
    L = np.linalg.eigvalsh(H).max()
    step = 1.0 / max(L, 1e-12)
    p = np.full(n, 1.0 / n)
    for _ in range(5000):
        grad = H @ p - b
        p_new = _project_simplex(p - step * grad)
        if np.max(np.abs(p_new - p)) < 1e-10:
            p = p_new
            break
        p = p_new
    return p


def geometric_pmf(q: float, l_max: int) -> np.ndarray:
    """Geometric LOS on support 1..l_max (renormalized truncation)."""
    pmf = np.zeros(l_max + 1)
    ell = np.arange(1, l_max + 1)
    pmf[1:] = q * (1.0 - q) ** (ell - 1)
    s = pmf.sum()
    if s <= 0:
        pmf[1] = 1.0
        return pmf
    return pmf / s


def discretized_gamma_pmf(shape: float, scale: float, l_max: int) -> np.ndarray:
    """Gamma LOS discretized to whole days, with the tail mass lumped at l_max."""
    edges = np.arange(l_max + 2, dtype=float)
    cdf = stats.gamma.cdf(edges, a=shape, scale=scale)
    pmf = np.diff(cdf)
    pmf[-1] += 1.0 - cdf[-1]
    pmf = np.maximum(pmf, 0.0)
    return pmf / pmf.sum()


def fit_los(
    admissions: Sequence[float],
    census: Sequence[float],
    family: str = "nonparametric",
    l_max: int = 30,
) -> tuple[LosDistribution, dict]:
    """Estimate the LOS pmf that best reproduces the observed census.

    Minimizes the sum of squared errors between census_from_flows(admissions, pmf)
    and the observed census over pmf >= 0 with sum(pmf) = 1. The report carries
    the fit RMSE and, for parametric families, the fitted parameters.
    """
    a = np.asarray(admissions, dtype=float)
    o = np.asarray(census, dtype=float)
    if len(a) != len(o):
        raise ValueError("admissions and census must have equal length")
    if not np.any(a > 0):
        raise DegenerateFit("admissions are all zero; LOS is unidentifiable")
    ill_posed = len(a) < l_max

    W = _census_design_matrix(a, l_max)
    params: dict = {}

    if family == "nonparametric":
        pmf = _fit_nonparametric(W, o, l_max)
    elif family == "geometric":
        def sse_geo(q):
            return float(np.sum((W @ geometric_pmf(q, l_max) - o) ** 2))
        grid = np.linspace(0.01, 0.99, 197)
        q0 = grid[int(np.argmin([sse_geo(q) for q in grid]))]
        res = optimize.minimize_scalar(sse_geo, bounds=(max(0.005, q0 - 0.02), min(0.995, q0 + 0.02)), method="bounded")
        q = float(res.x)
        pmf = geometric_pmf(q, l_max)
        params = {"p": q}
    elif family == "discretized_gamma":
        def sse_gamma(logx):
            shape, scale = np.exp(logx)
            return float(np.sum((W @ discretized_gamma_pmf(shape, scale, l_max) - o) ** 2))
        best = None
        for shape in (0.5, 1.0, 2.0, 4.0, 8.0):
            for mean in (1.0, 2.0, 4.0, 8.0, min(16.0, l_max)):
                x0 = np.log([shape, mean / shape])
                val = sse_gamma(x0)
                if best is None or val < best[0]:
                    best = (val, x0)
        res = optimize.minimize(sse_gamma, best[1], method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-10})
        shape, scale = np.exp(res.x)
        pmf = discretized_gamma_pmf(shape, scale, l_max)
        params = {"shape": float(shape), "scale": float(scale)}
    else:
        raise ValueError(f"unknown LOS family {family!r}")

    pmf = np.maximum(pmf, 0.0)
    pmf = pmf / pmf.sum()
    rmse = float(np.sqrt(np.mean((W @ pmf - o) ** 2)))
    report = {"family": family, "rmse": rmse, "ill_posed": ill_posed, "params": params}
    return LosDistribution(pmf=tuple(pmf.tolist())), report
