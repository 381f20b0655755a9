"""Command-line interface: synth, convert-grid, pin, decompose, trends,
validate and report subcommands over the intermediate CSV/WGRD artifacts."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import decomp, pipeline, powerflux, synth, trends, validate, windgrid
from . import fleet as fleet_mod
from .errors import (EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL, EXIT_OK,
                     ConfigError, DataError, InvariantError)
from .pipeline import PipelineError
from .series import AnnualSeries

log = logging.getLogger(__name__)


def _year_span(raw: str) -> tuple[int, int]:
    try:
        a, _, b = raw.partition(":")
        start, end = int(a), int(b)
    except ValueError:
        raise ConfigError(f"bad year span {raw!r}, expected START:END") from None
    if start > end:
        raise ConfigError(f"bad year span {raw!r}, start after end")
    return start, end


def _pair(raw: str, what: str) -> tuple[float, float]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise ConfigError(f"bad {what} {raw!r}, expected A,B")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"bad {what} {raw!r}") from None


def _wind_model(raw: str) -> synth.WindModel:
    kind, _, rest = raw.partition(":")
    try:
        params = tuple(float(p) for p in rest.split(",")) if rest else ()
        return synth.WindModel(kind, params)
    except ValueError as exc:
        raise ConfigError(f"bad wind model {raw!r}: {exc}") from None


def _parse_timestamp(raw: str) -> int:
    """ISO date/datetime (UTC) or raw Unix seconds."""
    try:
        return int(raw)
    except ValueError:
        pass
    from datetime import datetime, timezone
    for fmt in ("%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d"):
        try:
            dt = datetime.strptime(raw.removesuffix("Z"), fmt)
            return int(dt.replace(tzinfo=timezone.utc).timestamp())
        except ValueError:
            continue
    raise ConfigError(f"bad timestamp {raw!r}")


def _read_series_csv(path) -> AnnualSeries:
    """Read a ``year,value,unit`` series; years must be dense ascending."""
    rows = []
    unit = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["year", "value", "unit"]:
            raise DataError(f"{path}: header must be year,value,unit")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}: expected 3 columns")
            rows.append((int(row[0]), float(row[1])))
            unit = row[2]
    if not rows:
        raise DataError(f"{path}: empty series")
    rows.sort()
    years = [y for y, _ in rows]
    if years != list(range(years[0], years[-1] + 1)):
        raise DataError(f"{path}: years must be dense")
    return AnnualSeries(years[0], [v for _, v in rows], unit)


def _write_series_csv(path, series: AnnualSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "value", "unit"])
        for year, value in series.items():
            writer.writerow([year, repr(value), series.unit])


def _load_fleet(args) -> fleet_mod.Fleet:
    records = fleet_mod.parse_turbine_csv(Path(args.turbines).read_bytes())
    if getattr(args, "extension", None):
        records = fleet_mod.merge_extension(
            records, fleet_mod.parse_turbine_csv(Path(args.extension).read_bytes()))
    exclusions = set()
    if getattr(args, "exclusions", None):
        exclusions = fleet_mod.parse_exclusion_ids(
            Path(args.exclusions).read_text(encoding="utf-8"))
    return fleet_mod.preprocess(records, exclusions)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n_turbines=args.n_turbines,
        years=_year_span(args.years),
        wind=_wind_model(args.wind),
        n_lat=args.grid[0], n_lon=args.grid[1],
        bbox=tuple(args.bbox),
        hub_trend=_pair(args.hub, "hub trend"),
        rotor_trend=_pair(args.rotor, "rotor trend"),
        efficiency=_pair(args.efficiency, "efficiency"),
        specific_power_w_m2=args.specific_power,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    turbine_bytes = synth.generate_fleet(spec, args.seed)
    (out / "turbines.csv").write_bytes(turbine_bytes)
    grid_bytes = synth.generate_windgrid(spec, args.seed + 1)
    (out / "wind.wgrd").write_bytes(grid_bytes)

    fleet = fleet_mod.preprocess(fleet_mod.parse_turbine_csv(turbine_bytes), set())
    grid = windgrid.grid_from_bytes(grid_bytes)
    gen_bytes = synth.generate_generation(fleet, grid, spec.true_efficiency, spec.years)
    (out / "generation.csv").write_bytes(gen_bytes)

    years = range(spec.years[0], spec.years[1] + 1)
    capacity = fleet_mod.annual_capacity(fleet, years)
    energy = powerflux.parse_generation_csv(gen_bytes)
    with open(out / "reference.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "installed_capacity_mw", "generation_gwh"])
        for year, cap in capacity.items():
            gwh = powerflux.pout_series(energy, year) \
                * powerflux.hours_in_period(year) / 1e9
            writer.writerow([year, repr(cap), repr(gwh)])

    conf = "\n".join([
        "turbines = turbines.csv",
        "windgrid = wind.wgrd",
        "generation = generation.csv",
        "reference = reference.csv",
        f"start_year = {spec.years[0]}",
        f"end_year = {spec.years[1]}",
        f"base_year = {spec.years[0]}",
        "out = out",
    ]) + "\n"
    (out / "run.conf").write_text(conf, encoding="utf-8")
    print(f"wrote synthetic bundle to {out}")
    return EXIT_OK


def _cmd_convert_grid(args) -> int:
    text = Path(args.csv).read_text(encoding="utf-8")
    grid = windgrid.grid_from_csv(text, t0=_parse_timestamp(args.start_time),
                                  step=args.step)
    windgrid.write_windgrid(grid, args.out)
    print(f"wrote {args.out}: {grid.n_time} steps, "
          f"{len(grid.lats)}x{len(grid.lons)} cells")
    return EXIT_OK


def _cmd_pin(args) -> int:
    fleet = _load_fleet(args)
    grid = windgrid.load_windgrid(args.windgrid)
    start, end = _year_span(args.years)
    height = "hub" if args.height == "hub" else float(args.height)
    climate = {"actual": "actual", "average": "long_term_average"}[args.climate]
    study = _year_span(args.study_span) if args.study_span else (start, end)
    series = powerflux.annual_pin_series(grid, fleet, range(start, end + 1),
                                         height, climate, study, args.workers)
    _write_series_csv(args.out, series)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    n = _read_series_csv(args.n)
    area = _read_series_csv(args.area)
    p_in = _read_series_csv(args.pin)
    p_out = _read_series_csv(args.pout)
    base_year = args.base_year if args.base_year else n.start_year
    result = decomp.multiplicative_decomposition(n, area, p_in, p_out)
    decomp.indexed_factors(result, base_year)
    payload = {
        "years": result.years,
        "factors": {
            "n": result.factors.n.values,
            "area_per_turbine": result.factors.area_per_turbine.values,
            "input_density": result.factors.input_density.values,
            "efficiency": result.factors.efficiency.values,
        },
        "indexed_factors": {
            "n": result.indexed_factors.n.values,
            "area_per_turbine": result.indexed_factors.area_per_turbine.values,
            "input_density": result.indexed_factors.input_density.values,
            "efficiency": result.indexed_factors.efficiency.values,
        },
    }
    if args.pin_avg and args.pin_ref_avg:
        additive = decomp.additive_pin_decomposition(
            p_in, _read_series_csv(args.pin_avg), _read_series_csv(args.pin_ref_avg),
            area, base_year)
        payload["additive"] = {
            "baseline_w_m2": additive.additive.baseline,
            "new_locations": additive.additive.new_locations.values,
            "hub_height": additive.additive.hub_height.values,
            "annual_variation": additive.additive.annual_variation.values,
        }
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_trends(args) -> int:
    if args.efficiency and args.density:
        e = _read_series_csv(args.efficiency)
        d = _read_series_csv(args.density)
        counterfactual = trends.counterfactual_efficiency(e, d)
        fit = trends.ols_fit(list(counterfactual.years), counterfactual.values)
        payload = {"counterfactual": pipeline._fit_json(fit)}
        if args.out_csv:
            _write_series_csv(args.out_csv, counterfactual)
    elif args.series:
        s = _read_series_csv(args.series)
        payload = {"trend": pipeline._fit_json(trends.ols_fit(list(s.years), s.values))}
    else:
        raise ConfigError("trends needs --series or both --efficiency and --density")
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    fleet = _load_fleet(args)
    start, end = _year_span(args.years)
    years = range(start, end + 1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    labels = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    with open(out / "scenarios.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scenario", "year", "capacity_mw"])
        for label in labels:
            series = validate.scenario_capacity(fleet, years,
                                                pipeline.parse_scenario(label))
            for year, v in series.items():
                writer.writerow([label, year, repr(v)])

    with open(out / "missingness.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "field", "share"])
        for fname, series in validate.missingness_report(fleet.turbines).items():
            for year, v in series.items():
                writer.writerow([year, fname, repr(v)])

    if args.reference:
        reference = validate.parse_reference_csv(Path(args.reference).read_bytes())
        if reference.capacity_mw is not None:
            ref = reference.capacity_mw
            lo, hi = max(ref.start_year, start), min(ref.end_year, end)
            if lo > hi:
                raise DataError("reference years do not overlap the study period")
            with open(out / "relative_difference.csv", "w", newline="",
                      encoding="utf-8") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["scenario", "year", "percent"])
                for label in labels:
                    series = validate.scenario_capacity(fleet, years,
                                                        pipeline.parse_scenario(label))
                    diff = validate.relative_difference(series.slice(lo, hi),
                                                        ref.slice(lo, hi))
                    for year, v in diff.items():
                        writer.writerow([label, year, repr(v)])
    print(f"wrote validation tables to {out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    values = pipeline.load_config_file(args.config) if args.config else {}
    overrides = {
        "turbines": args.turbines, "extension": args.extension,
        "exclusions": args.exclusions, "windgrid": args.windgrid,
        "generation": args.generation, "reference": args.reference,
        "start_year": args.start_year, "end_year": args.end_year,
        "base_year": args.base_year, "reference_height": args.reference_height,
        "scenarios": args.scenarios, "out": args.out, "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = str(value)
    config = pipeline.config_from_mapping(values)
    bundle = pipeline.run_pipeline(config)
    print(f"wrote {len(bundle.files)} files to {bundle.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windfleet",
        description="Wind fleet power decomposition pipeline")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("synth", help="generate a deterministic synthetic bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--n-turbines", type=int, default=30)
    p.add_argument("--years", default="2010:2012")
    p.add_argument("--wind", default="constant:8,8",
                   help="constant:v10,v100 | sinusoidal:mean,amp,period | noise:mean,sd")
    p.add_argument("--grid", type=lambda s: tuple(int(x) for x in s.split("x")),
                   default=(3, 3), help="ROWSxCOLS lat/lon nodes")
    p.add_argument("--bbox", type=float, nargs=4,
                   default=[-100.0, -95.0, 35.0, 40.0],
                   metavar=("LON0", "LON1", "LAT0", "LAT1"))
    p.add_argument("--hub", default="80,0", help="start,per-year")
    p.add_argument("--rotor", default="100,0", help="start,per-year")
    p.add_argument("--efficiency", default="0.3,0", help="base,per-year")
    p.add_argument("--specific-power", type=float, default=300.0)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("convert-grid", help="build a WGRD file from CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--start-time", default="2010-01-01",
                   help="first timestamp, ISO date/datetime UTC or Unix seconds")
    p.add_argument("--step", type=int, default=3600)
    p.set_defaults(handler=_cmd_convert_grid)

    p = sub.add_parser("pin", help="annual kinetic input power series")
    p.add_argument("--turbines", required=True)
    p.add_argument("--extension")
    p.add_argument("--exclusions")
    p.add_argument("--windgrid", required=True)
    p.add_argument("--years", required=True, help="START:END")
    p.add_argument("--height", default="hub", help="'hub' or meters")
    p.add_argument("--climate", choices=("actual", "average"), default="actual")
    p.add_argument("--study-span", help="START:END years for the climate mean")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_pin)

    p = sub.add_parser("decompose", help="multiplicative/additive decomposition")
    p.add_argument("--n", required=True)
    p.add_argument("--area", required=True)
    p.add_argument("--pin", required=True)
    p.add_argument("--pout", required=True)
    p.add_argument("--pin-avg")
    p.add_argument("--pin-ref-avg")
    p.add_argument("--base-year", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_decompose)

    p = sub.add_parser("trends", help="trend fit or counterfactual efficiency")
    p.add_argument("--series")
    p.add_argument("--efficiency")
    p.add_argument("--density")
    p.add_argument("--out", required=True)
    p.add_argument("--out-csv")
    p.set_defaults(handler=_cmd_trends)

    p = sub.add_parser("validate", help="scenario capacities and reference checks")
    p.add_argument("--turbines", required=True)
    p.add_argument("--extension")
    p.add_argument("--exclusions")
    p.add_argument("--years", required=True, help="START:END")
    p.add_argument("--reference")
    p.add_argument("--scenarios",
                   default="default,drop-flagged,"
                           + ",".join(f"lifetime-{n}" for n in validate.DEFAULT_LIFETIMES))
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("report", help="run the full pipeline")
    p.add_argument("--config")
    p.add_argument("--turbines")
    p.add_argument("--extension")
    p.add_argument("--exclusions")
    p.add_argument("--windgrid")
    p.add_argument("--generation")
    p.add_argument("--reference")
    p.add_argument("--start-year", type=int)
    p.add_argument("--end-year", type=int)
    p.add_argument("--base-year", type=int)
    p.add_argument("--reference-height", type=float)
    p.add_argument("--scenarios")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except PipelineError as exc:
        print(f"{exc.stage}: {exc.message}", file=sys.stderr)
        return exc.exit_code
    except ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"internal: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (DataError, ValueError, OSError) as exc:
        print(f"data: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
