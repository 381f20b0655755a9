"""Kinetic input power at turbine locations and aggregate power series.

All power values are carried in watts, energies in watt-hours, areas in m².
Aggregation over hours and turbines uses compensated (Kahan) summation over a
fixed partition of the fleet into chunks, so results are bit-identical
regardless of how many workers evaluate the chunks.
"""

from __future__ import annotations

import calendar
import csv
import io
import multiprocessing
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .fleet import Fleet, TurbineRecord, operating_weight, rotor_swept_area
from .series import AnnualSeries
from .windgrid import REFERENCE_HEIGHT, WindGrid, cell_weights, note_calm_events

#: air density, kg/m³ (constant; not configurable)
RHO = 1.225
#: upper bound on single-turbine conversion efficiency
BETZ_LIMIT = 16.0 / 27.0
#: fixed turbine-chunk size of the deterministic reduction
CHUNK_TURBINES = 64

#: a period is a calendar year or a (year, month) pair, UTC
Period = int | tuple[int, int]


class BetzLimitWarning(UserWarning):
    """System efficiency above the Betz limit signals inconsistent inputs."""


@dataclass
class PowerAggregates:
    """Aligned aggregate series over a list of periods."""

    period: list
    p_in: list[float]
    p_out: list[float]
    area: list[float]
    n: list[float]
    capacity: list[float]

    def __post_init__(self):
        lengths = {len(self.period), len(self.p_in), len(self.p_out),
                   len(self.area), len(self.n), len(self.capacity)}
        if len(lengths) != 1:
            raise ValueError("aggregate fields must have equal lengths")
        if any(v < 0 for v in self.p_in) or any(v < 0 for v in self.area) \
                or any(v < 0 for v in self.n):
            raise ValueError("p_in, area and n must be nonnegative")


def period_bounds(period) -> tuple[int, int]:
    """Unix-second bounds [start, end) of a year or (year, month), UTC."""
    if isinstance(period, int):
        return (calendar.timegm((period, 1, 1, 0, 0, 0)),
                calendar.timegm((period + 1, 1, 1, 0, 0, 0)))
    year, month = period
    if not 1 <= month <= 12:
        raise ValueError(f"month {month} outside 1..12")
    if month == 12:
        end = calendar.timegm((year + 1, 1, 1, 0, 0, 0))
    else:
        end = calendar.timegm((year, month + 1, 1, 0, 0, 0))
    return calendar.timegm((year, month, 1, 0, 0, 0)), end


def hours_in_period(period) -> int:
    start, end = period_bounds(period)
    return (end - start) // 3600


def period_year(period) -> int:
    return period if isinstance(period, int) else period[0]


def kinetic_power(v: float, area: float) -> float:
    """Kinetic power of air moving at ``v`` through ``area``: ½·rho·A·v³."""
    if v < 0 or area < 0:
        raise ValueError("speed and area must be nonnegative")
    return 0.5 * RHO * area * v ** 3


# ---------------------------------------------------------------------------
# fleet-level aggregation
# ---------------------------------------------------------------------------

# State shared with forked chunk workers; set immediately before mapping.
_TASK = None


@dataclass
class _PinTask:
    #: wind components sliced to the evaluation stamps and transposed to
    #: [lat][lon][time], so a turbine's time series is a contiguous gather
    tvars: dict | None
    cells: list          # per-turbine cell_weights tuples
    areas: np.ndarray
    heights: np.ndarray
    weights: np.ndarray
    n_steps: int
    mean_cube: np.ndarray | None


def _transpose_slice(grid: WindGrid, k0: int, k1: int) -> dict:
    """Copy stamps [k0, k1) into time-contiguous layout, one pass per variable."""
    return {name: np.ascontiguousarray(grid.variable(name)[k0:k1].transpose(1, 2, 0))
            for name in ("u10", "v10", "u100", "v100")}


# Per-process scratch buffers keyed by stamp count; avoids allocating ~35
# temporaries per turbine, which turns the kernel memory-bandwidth-bound.
_WS: dict = {}


def _workspace(n: int) -> dict:
    ws = _WS.get(n)
    if ws is None:
        _WS.clear()
        ws = {name: np.empty(n) for name in ("a", "b", "s10", "s100", "tmp")}
        ws["calm"] = np.empty(n, dtype=bool)
        ws["keep"] = np.empty(n, dtype=bool)
        _WS[n] = ws
    return ws


def _turbine_mean_cube(tvars: dict, cell, height: float, n_steps: int) -> tuple[float, int]:
    """Mean of the cubed hub-height speed over the task stamps at one point.

    Payload is f32; everything is lifted to f64 before arithmetic.  Calm
    stamps (zero speed at either reference height) use the zero-shear
    fallback and are counted.
    """
    j0, j1, i0, i1 = cell[:4]
    w00, w01, w10, w11 = (np.float64(w) for w in cell[4:])
    ws = _workspace(n_steps)
    a, b, tmp = ws["a"], ws["b"], ws["tmp"]

    def blend(name, out):
        arr = tvars[name]
        np.multiply(arr[j0, i0], w00, out=out)
        np.multiply(arr[j0, i1], w01, out=tmp)
        out += tmp
        np.multiply(arr[j1, i0], w10, out=tmp)
        out += tmp
        np.multiply(arr[j1, i1], w11, out=tmp)
        out += tmp

    blend("u10", a)
    blend("v10", b)
    s10 = np.hypot(a, b, out=ws["s10"])
    blend("u100", a)
    blend("v100", b)
    s100 = np.hypot(a, b, out=ws["s100"])

    calm, keep = ws["calm"], ws["keep"]
    np.less_equal(s10, 0.0, out=calm)
    np.less_equal(s100, 0.0, out=keep)
    np.logical_or(calm, keep, out=calm)
    n_calm = int(np.count_nonzero(calm))
    np.logical_not(calm, out=keep)

    alpha = a  # reuse: ratio, then its log
    alpha.fill(1.0)
    np.divide(s100, s10, out=alpha, where=keep)
    np.log10(alpha, out=alpha)
    vh = np.power(np.float64(height / REFERENCE_HEIGHT), alpha, out=b)
    vh *= s100
    np.multiply(vh, vh, out=tmp)
    tmp *= vh
    return float(np.sum(tmp)) / n_steps, n_calm


def _run_chunk(bounds: tuple[int, int]) -> tuple[float, int]:
    """Kahan-sum the contributions of one fixed turbine chunk."""
    a, b = bounds
    task = _TASK
    s = c = 0.0
    calm = 0
    for idx in range(a, b):
        w = float(task.weights[idx])
        if w == 0.0:
            continue
        if task.mean_cube is not None:
            m = float(task.mean_cube[idx])
        else:
            m, n_calm = _turbine_mean_cube(task.tvars, task.cells[idx],
                                           float(task.heights[idx]), task.n_steps)
            calm += n_calm
        y = w * 0.5 * RHO * float(task.areas[idx]) * m - c
        t = s + y
        c = (t - s) - y
        s = t
    return s, calm


def _run_mean_chunk(bounds: tuple[int, int]):
    """Per-turbine mean cubed speeds for one chunk (no cross-turbine reduction)."""
    a, b = bounds
    task = _TASK
    means = np.empty(b - a)
    calm = 0
    for idx in range(a, b):
        means[idx - a], n_calm = _turbine_mean_cube(
            task.tvars, task.cells[idx], float(task.heights[idx]), task.n_steps)
        calm += n_calm
    return means, calm


def _chunk_bounds(n: int) -> list[tuple[int, int]]:
    return [(a, min(a + CHUNK_TURBINES, n)) for a in range(0, n, CHUNK_TURBINES)]


def _map_chunks(fn, bounds, workers: int):
    if workers <= 1 or len(bounds) <= 1:
        return [fn(b) for b in bounds]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:  # platform without fork: results are identical anyway
        return [fn(b) for b in bounds]
    with ctx.Pool(processes=min(workers, len(bounds))) as pool:
        return pool.map(fn, bounds)


def _combine(results) -> tuple[float, int]:
    """Kahan-combine chunk sums in chunk order."""
    s = c = 0.0
    calm = 0
    for chunk_sum, chunk_calm in results:
        y = chunk_sum - c
        t = s + y
        c = (t - s) - y
        s = t
        calm += chunk_calm
    return s, calm


def _stamp_slice(grid: WindGrid, start_ts: int, end_ts: int) -> tuple[int, int]:
    if (start_ts - grid.t0) % grid.step != 0 or (end_ts - start_ts) % grid.step != 0:
        raise DataError("period not aligned with grid time step")
    k0 = (start_ts - grid.t0) // grid.step
    k1 = k0 + (end_ts - start_ts) // grid.step
    if k0 < 0 or k1 > grid.n_time:
        raise DataError(
            f"period not covered by wind grid (needs steps {k0}..{k1}, have {grid.n_time})")
    return k0, k1


def _study_slice(grid: WindGrid, study_span) -> tuple[int, int]:
    if study_span is None:
        return 0, grid.n_time
    y0, y1 = study_span
    start = period_bounds(y0)[0]
    end = period_bounds(y1)[1]
    return _stamp_slice(grid, start, end)


def _turbine_heights(turbines: list[TurbineRecord], height_mode) -> np.ndarray:
    if isinstance(height_mode, str):
        if height_mode != "hub":
            raise ValueError(f"unknown height mode {height_mode!r}")
        heights = []
        for r in turbines:
            if r.hub_height is None:
                raise DataError(f"turbine {r.id} has no hub height")
            heights.append(r.hub_height)
        return np.asarray(heights)
    h = float(height_mode)
    if h <= 0:
        raise ValueError("fixed height must be positive")
    return np.full(len(turbines), h)


def _prepare_task(grid: WindGrid, turbines: list[TurbineRecord], height_mode):
    """Bounds-check turbines against the grid and collect per-turbine arrays."""
    bad = [r.id for r in turbines
           if not (grid.lons[0] <= r.lon <= grid.lons[-1]
                   and grid.lats[0] <= r.lat <= grid.lats[-1])]
    if bad:
        shown = ", ".join(bad[:10])
        more = f" (+{len(bad) - 10} more)" if len(bad) > 10 else ""
        raise DataError(f"turbines outside wind grid: {shown}{more}")
    cells = [cell_weights(grid, r.lon, r.lat) for r in turbines]
    areas = []
    for r in turbines:
        if r.rotor_diameter is None:
            raise DataError(f"turbine {r.id} has no rotor diameter")
        areas.append(rotor_swept_area(r.rotor_diameter))
    return cells, np.asarray(areas), _turbine_heights(turbines, height_mode)


def _check_climate_mode(climate_mode: str) -> None:
    if climate_mode not in ("actual", "long_term_average"):
        raise ValueError(f"unknown climate mode {climate_mode!r}")


def _mean_cube_array(grid, cells, areas, heights, k0, k1, workers) -> tuple[np.ndarray, int]:
    global _TASK
    n = len(cells)
    _TASK = _PinTask(_transpose_slice(grid, k0, k1), cells, areas, heights,
                     np.ones(n), k1 - k0, None)
    results = _map_chunks(_run_mean_chunk, _chunk_bounds(n), workers)
    _TASK = None
    calm = sum(r[1] for r in results)
    return np.concatenate([r[0] for r in results]) if results else np.empty(0), calm


def _weighted_total(grid, cells, areas, heights, weights, k0, k1,
                    mean_cube, workers) -> tuple[float, int]:
    global _TASK
    tvars = None if mean_cube is not None else _transpose_slice(grid, k0, k1)
    _TASK = _PinTask(tvars, cells, areas, heights, weights, k1 - k0, mean_cube)
    results = _map_chunks(_run_chunk, _chunk_bounds(len(areas)), workers)
    _TASK = None
    return _combine(results)


def aggregate_pin(grid: WindGrid, fleet: Fleet, period,
                  height_mode="hub", climate_mode: str = "actual",
                  study_span: tuple[int, int] | None = None,
                  workers: int = 1) -> float:
    """Fleet kinetic input power over ``period``: mean over hours of the sum
    over turbines of ½·rho·A·v³ at the evaluation height, in watts.

    ``height_mode`` is ``"hub"`` (per-turbine hub height) or a fixed height
    in meters.  ``climate_mode`` ``"actual"`` evaluates hour by hour;
    ``"long_term_average"`` replaces each location's cubed speed with its
    mean over ``study_span`` (whole grid coverage when not given).  Turbines
    in their commissioning year contribute with weight 0.5.
    """
    _check_climate_mode(climate_mode)
    turbines = fleet.turbines
    start_ts, end_ts = period_bounds(period)
    if not turbines:
        return 0.0
    cells, areas, heights = _prepare_task(grid, turbines, height_mode)
    k0, k1 = _stamp_slice(grid, start_ts, end_ts)
    year = period_year(period)
    weights = np.asarray([operating_weight(r, year) for r in turbines])

    if climate_mode == "long_term_average":
        sk0, sk1 = _study_slice(grid, study_span)
        mean_cube, calm = _mean_cube_array(grid, cells, areas, heights, sk0, sk1, workers)
        note_calm_events(calm)
        total, _ = _weighted_total(grid, cells, areas, heights, weights,
                                   k0, k1, mean_cube, workers)
    else:
        total, calm = _weighted_total(grid, cells, areas, heights, weights,
                                      k0, k1, None, workers)
        note_calm_events(calm)
    return float(total)


def annual_pin_series(grid: WindGrid, fleet: Fleet, years,
                      height_mode="hub", climate_mode: str = "actual",
                      study_span: tuple[int, int] | None = None,
                      workers: int = 1) -> AnnualSeries:
    """Per-year ``aggregate_pin`` values; the long-term climate mean is
    computed once and reused across years."""
    _check_climate_mode(climate_mode)
    ys = list(years)
    if not ys:
        raise ValueError("years must be nonempty")
    turbines = fleet.turbines
    if not turbines:
        return AnnualSeries(ys[0], [0.0] * len(ys), "W")
    cells, areas, heights = _prepare_task(grid, turbines, height_mode)

    mean_cube = None
    if climate_mode == "long_term_average":
        sk0, sk1 = _study_slice(grid, study_span)
        mean_cube, calm = _mean_cube_array(grid, cells, areas, heights, sk0, sk1, workers)
        note_calm_events(calm)

    values = []
    for y in ys:
        k0, k1 = _stamp_slice(grid, *period_bounds(y))
        weights = np.asarray([operating_weight(r, y) for r in turbines])
        total, calm = _weighted_total(grid, cells, areas, heights, weights,
                                      k0, k1, mean_cube, workers)
        if mean_cube is None:
            note_calm_events(calm)
        values.append(float(total))
    return AnnualSeries(ys[0], values, "W")


# ---------------------------------------------------------------------------
# generation ingestion and derived ratios
# ---------------------------------------------------------------------------

@dataclass
class MonthlySeries:
    """Dense month-indexed energies in MWh starting at ``start`` (year, month)."""

    start: tuple[int, int]
    values: list[float]

    def months(self):
        y, m = self.start
        for v in self.values:
            yield (y, m), v
            y, m = _next_month(y, m)

    def value(self, year: int, month: int) -> float:
        y0, m0 = self.start
        k = (year - y0) * 12 + (month - m0)
        if not 0 <= k < len(self.values):
            raise DataError(f"missing generation for {year}-{month:02d}")
        return self.values[k]

    def covers(self, year: int, month: int) -> bool:
        y0, m0 = self.start
        k = (year - y0) * 12 + (month - m0)
        return 0 <= k < len(self.values)


def _next_month(y: int, m: int) -> tuple[int, int]:
    return (y + 1, 1) if m == 12 else (y, m + 1)


def parse_generation_csv(data: bytes) -> MonthlySeries:
    """Parse monthly net generation: CSV ``year,month,net_generation_mwh``.

    The covered span must be dense: duplicate or missing months are errors.
    """
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["year", "month", "net_generation_mwh"]:
        raise DataError("generation CSV header must be year,month,net_generation_mwh")
    rows: dict[tuple[int, int], float] = {}
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != 3:
            raise DataError(f"expected 3 columns, got {len(row)}, row {row_no}")
        try:
            y, m, mwh = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            raise DataError(f"non-numeric value, row {row_no}") from None
        if not 1 <= m <= 12:
            raise DataError(f"month {m} outside 1..12, row {row_no}")
        if not np.isfinite(mwh):
            raise DataError(f"non-finite energy, row {row_no}")
        if (y, m) in rows:
            raise DataError(f"duplicate month {y}-{m:02d}, row {row_no}")
        rows[(y, m)] = mwh
    if not rows:
        raise DataError("no generation data")

    first = min(rows)
    last = max(rows)
    values = []
    cur = first
    while True:
        if cur not in rows:
            raise DataError(f"missing month {cur[0]}-{cur[1]:02d} inside covered span")
        values.append(rows[cur])
        if cur == last:
            break
        cur = _next_month(*cur)
    return MonthlySeries(first, values)


def pout_series(energy: MonthlySeries, period) -> float:
    """Average generated power over ``period`` in watts.

    Energy is summed over the period's months and divided by the exact UTC
    hour count (leap years included).
    """
    if isinstance(period, int):
        months = [(period, m) for m in range(1, 13)]
    else:
        months = [period]
    total_mwh = 0.0
    for y, m in months:
        if not energy.covers(y, m):
            raise DataError(f"missing generation for {y}-{m:02d}")
        total_mwh += energy.value(y, m)
    return total_mwh * 1e6 / hours_in_period(period)


def input_power_density(p_in: float, area: float) -> float:
    """Kinetic input power per unit rotor swept area, W/m²."""
    if area <= 0:
        raise ValueError("area must be positive")
    return p_in / area


def output_power_density(p_out: float, area: float) -> float:
    """Generated power per unit rotor swept area, W/m²."""
    if area <= 0:
        raise ValueError("area must be positive")
    return p_out / area


def system_efficiency(p_out: float, p_in: float) -> float:
    """Share of kinetic input power converted to electricity.

    Values above the Betz limit are physically impossible for the fleet as a
    whole and signal inconsistent input data; they warn but do not fail.
    """
    if p_in <= 0:
        raise ValueError("input power must be positive")
    ratio = p_out / p_in
    if ratio > BETZ_LIMIT:
        warnings.warn(
            f"system efficiency {ratio:.4f} exceeds the Betz limit {BETZ_LIMIT:.4f}; "
            "input data are likely inconsistent", BetzLimitWarning, stacklevel=2)
    return ratio


def capacity_factor(p_out: float, capacity: float) -> float:
    """Average output power relative to installed capacity."""
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    return p_out / capacity
