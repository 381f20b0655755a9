import math
import random

import numpy as np
import pytest

from conftest import const_grid, fleet_of, grid_from_field, turbine
from windfleet.errors import DataError
from windfleet.powerflux import (BETZ_LIMIT, RHO, BetzLimitWarning,
                                 MonthlySeries, PowerAggregates, aggregate_pin,
                                 annual_pin_series, capacity_factor,
                                 hours_in_period, input_power_density,
                                 kinetic_power, output_power_density,
                                 parse_generation_csv, period_bounds,
                                 pout_series, system_efficiency)

UNIT_ROTOR = 2.0 / math.sqrt(math.pi)  # swept area exactly ~1 m²


def gen_csv(rows):
    return ("year,month,net_generation_mwh\n"
            + "\n".join(f"{y},{m},{v}" for y, m, v in rows) + "\n").encode()


class TestPeriods:
    def test_year_hours(self):
        assert hours_in_period(2010) == 8760
        assert hours_in_period(2012) == 8784  # leap

    def test_month_hours(self):
        assert hours_in_period((2010, 1)) == 744
        assert hours_in_period((2010, 2)) == 672
        assert hours_in_period((2012, 2)) == 696

    def test_bounds_contiguous(self):
        for m in range(1, 12):
            assert period_bounds((2011, m))[1] == period_bounds((2011, m + 1))[0]

    def test_bad_month(self):
        with pytest.raises(ValueError):
            period_bounds((2010, 13))


class TestKineticPower:
    def test_unit_inputs(self):
        assert kinetic_power(1.0, 1.0) == pytest.approx(0.6125, rel=1e-15)

    def test_worked_example(self):
        assert kinetic_power(10.0, 7853.98) == pytest.approx(4810562.75, rel=1e-12)

    def test_zero_speed(self):
        assert kinetic_power(0.0, 100.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            kinetic_power(-1.0, 1.0)
        with pytest.raises(ValueError):
            kinetic_power(1.0, -1.0)

    def test_cubic_scaling(self):
        rng = random.Random(1)
        for _ in range(50):
            v, a, c = rng.uniform(0, 20), rng.uniform(0, 1e4), rng.uniform(0.1, 4)
            assert kinetic_power(c * v, a) == pytest.approx(
                c ** 3 * kinetic_power(v, a), rel=1e-12)


class TestAggregatePin:
    def grid_2010(self, n_days=366):
        return const_grid(v10=8.0, v100=8.0, n_time=24 * n_days)

    def test_constant_field_closed_form_all_modes(self):
        grid = self.grid_2010()
        fleet = fleet_of([turbine("A", year=2009, rotor=UNIT_ROTOR)])
        expected = 0.6125 * 512  # 313.6 for one fully weighted unit-area turbine
        for height in ("hub", 76.0):
            for climate in ("actual", "long_term_average"):
                pin = aggregate_pin(grid, fleet, 2010, height, climate)
                assert pin == pytest.approx(expected, rel=1e-12)

    def test_empty_fleet(self):
        assert aggregate_pin(self.grid_2010(), fleet_of([]), 2010) == 0.0

    def test_colocated_turbines_double(self):
        grid = self.grid_2010()
        one = fleet_of([turbine("A", year=2009)])
        two = fleet_of([turbine("A", year=2009), turbine("B", year=2009)])
        assert aggregate_pin(grid, two, 2010) == pytest.approx(
            2 * aggregate_pin(grid, one, 2010), rel=1e-12)

    def test_commissioning_weight_half(self):
        grid = self.grid_2010()
        fleet = fleet_of([turbine("A", year=2010, rotor=UNIT_ROTOR)])
        assert aggregate_pin(grid, fleet, 2010) == pytest.approx(0.5 * 0.6125 * 512,
                                                                 rel=1e-12)

    def test_additive_and_order_invariant(self):
        rng = random.Random(8)
        u10 = rng.uniform(4, 8) + np.zeros((31 * 24, 2, 2))
        u10 += np.linspace(0, 2, u10.size).reshape(u10.shape)
        grid = grid_from_field(u10, np.zeros_like(u10), 1.7 * u10,
                               np.zeros_like(u10), lons=[-100.0, -95.0],
                               lats=[35.0, 40.0])
        recs = [turbine(f"T{i}", lon=rng.uniform(-100, -95),
                        lat=rng.uniform(35, 40), year=2009 + (i % 2),
                        rotor=rng.uniform(60, 120)) for i in range(9)]
        whole = aggregate_pin(grid, fleet_of(recs), (2010, 1))
        part = (aggregate_pin(grid, fleet_of(recs[:4]), (2010, 1))
                + aggregate_pin(grid, fleet_of(recs[4:]), (2010, 1)))
        assert whole == pytest.approx(part, rel=1e-12)
        shuffled = recs[::-1]
        assert aggregate_pin(grid, fleet_of(shuffled), (2010, 1)) == pytest.approx(
            whole, rel=1e-12)

    def test_time_constant_field_climate_modes_agree(self):
        grid = const_grid(v10=5.0, v100=10.0, n_time=31 * 24)
        fleet = fleet_of([turbine("A", year=2009, hub=90.0)])
        actual = aggregate_pin(grid, fleet, (2010, 1), "hub", "actual")
        avg = aggregate_pin(grid, fleet, (2010, 1), "hub", "long_term_average")
        assert avg == pytest.approx(actual, rel=1e-12)

    def test_turbine_outside_grid(self):
        grid = self.grid_2010()
        fleet = fleet_of([turbine("FAR", lon=-50.0, lat=37.0, year=2009)])
        with pytest.raises(DataError, match="outside wind grid: FAR"):
            aggregate_pin(grid, fleet, 2010)

    def test_period_not_covered(self):
        grid = const_grid(n_time=24)  # one day of 2010
        fleet = fleet_of([turbine("A", year=2009)])
        with pytest.raises(DataError, match="not covered"):
            aggregate_pin(grid, fleet, 2011)

    def test_annual_series_matches_per_year_calls(self):
        grid = const_grid(v10=6.0, v100=9.0, n_time=2 * 8760)
        recs = [turbine(f"T{i}", lon=-97.0 - i / 2, lat=36.0 + i / 2, year=2010 + i % 2,
                        hub=70.0 + 5 * i) for i in range(5)]
        fleet = fleet_of(recs)
        span = (2010, 2011)
        for climate in ("actual", "long_term_average"):
            series = annual_pin_series(grid, fleet, range(2010, 2012), "hub",
                                       climate, span)
            for year in (2010, 2011):
                assert series.value(year) == aggregate_pin(grid, fleet, year, "hub",
                                                           climate, span)

    def test_workers_bit_identical(self):
        rng = random.Random(4)
        n = 24 * 31
        u10 = np.fromiter((rng.uniform(3, 9) for _ in range(n * 4)), float).reshape(n, 2, 2)
        grid = grid_from_field(u10, np.zeros_like(u10), 1.4 * u10,
                               np.zeros_like(u10), lons=[-100.0, -95.0],
                               lats=[35.0, 40.0])
        recs = [turbine(f"T{i}", lon=rng.uniform(-100, -95), lat=rng.uniform(35, 40),
                        year=2009, hub=60.0 + i) for i in range(150)]
        fleet = fleet_of(recs)
        serial = aggregate_pin(grid, fleet, (2010, 1), workers=1)
        parallel = aggregate_pin(grid, fleet, (2010, 1), workers=3)
        assert serial == parallel  # bitwise

    def test_calm_hours_counted(self):
        from windfleet.windgrid import calm_fallback_count, reset_calm_fallback_count
        u10 = np.full((744, 2, 2), 5.0)
        u10[:3] = 0.0  # three calm hours
        grid = grid_from_field(u10, np.zeros_like(u10), u10, np.zeros_like(u10),
                               lons=[-100.0, -95.0], lats=[35.0, 40.0])
        fleet = fleet_of([turbine("A", year=2009)])
        reset_calm_fallback_count()
        aggregate_pin(grid, fleet, (2010, 1))
        assert calm_fallback_count() == 3
        reset_calm_fallback_count()


class TestGenerationCsv:
    def test_two_months(self):
        series = parse_generation_csv(gen_csv([(2010, 1, 9000), (2010, 2, 8000)]))
        assert series.start == (2010, 1)
        assert series.values == [9000.0, 8000.0]

    def test_duplicate_month(self):
        with pytest.raises(DataError, match="duplicate"):
            parse_generation_csv(gen_csv([(2010, 1, 9000), (2010, 1, 8000)]))

    def test_empty(self):
        with pytest.raises(DataError, match="no generation data"):
            parse_generation_csv(b"year,month,net_generation_mwh\n")

    def test_gap_rejected(self):
        with pytest.raises(DataError, match="missing month 2010-02"):
            parse_generation_csv(gen_csv([(2010, 1, 9000), (2010, 3, 8000)]))

    def test_rows_any_order(self):
        series = parse_generation_csv(gen_csv([(2010, 2, 8000), (2010, 1, 9000)]))
        assert series.values == [9000.0, 8000.0]


class TestPoutSeries:
    def test_non_leap_year(self):
        series = MonthlySeries((2010, 1), [730.0] * 12)
        total = 730.0 * 12  # 8760 MWh
        assert pout_series(series, 2010) == pytest.approx(total * 1e6 / 8760)

    def test_leap_year_exact_megawatt(self):
        values = [hours_in_period((2012, m)) * 1.0 for m in range(1, 13)]  # MWh at 1 MW
        series = MonthlySeries((2012, 1), values)
        assert sum(values) == 8784.0
        assert pout_series(series, 2012) == pytest.approx(1e6, rel=1e-12)

    def test_single_month(self):
        series = MonthlySeries((2010, 1), [744.0])
        assert pout_series(series, (2010, 1)) == pytest.approx(1e6, rel=1e-12)

    def test_missing_month(self):
        series = MonthlySeries((2010, 1), [744.0] * 3)
        with pytest.raises(DataError, match="missing generation for 2010-05"):
            pout_series(series, (2010, 5))
        with pytest.raises(DataError, match="missing generation"):
            pout_series(series, 2010)


class TestRatios:
    def test_densities(self):
        assert input_power_density(313.6, 1.0) == 313.6
        assert output_power_density(313.6, 1.0) == 313.6

    def test_density_scale_invariance(self):
        assert input_power_density(500.0, 10.0) == input_power_density(1000.0, 20.0)

    def test_density_zero_area(self):
        with pytest.raises(ValueError):
            input_power_density(1.0, 0.0)
        with pytest.raises(ValueError):
            output_power_density(1.0, -2.0)

    def test_system_efficiency(self):
        assert system_efficiency(100.0, 1000.0) == pytest.approx(0.1)

    def test_betz_warning(self):
        with pytest.warns(BetzLimitWarning):
            assert system_efficiency(1000.0, 1000.0) == 1.0

    def test_no_warning_below_betz(self):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            system_efficiency(0.59 * 1000, 1000.0)

    def test_efficiency_bad_pin(self):
        with pytest.raises(ValueError):
            system_efficiency(1.0, 0.0)

    def test_density_ratio_identity(self):
        # efficiency computed from densities times area equals the density ratio
        rng = random.Random(6)
        for _ in range(100):
            p_in = rng.uniform(100, 1000)
            p_out = rng.uniform(0.01, 0.5) * p_in
            area = rng.uniform(1, 1e5)
            d_out = output_power_density(p_out, area)
            d_in = input_power_density(p_in, area)
            assert system_efficiency(d_out * area, d_in * area) == pytest.approx(
                d_out / d_in, rel=1e-12)

    def test_capacity_factor(self):
        assert capacity_factor(50e6, 200e6) == pytest.approx(0.25)
        assert capacity_factor(0.0, 100.0) == 0.0
        with pytest.raises(ValueError):
            capacity_factor(1.0, 0.0)

    def test_betz_limit_value(self):
        assert BETZ_LIMIT == pytest.approx(16 / 27)
        assert RHO == 1.225


class TestPowerAggregates:
    def test_misaligned_lengths(self):
        with pytest.raises(ValueError, match="equal lengths"):
            PowerAggregates(period=[2010], p_in=[1.0, 2.0], p_out=[1.0],
                            area=[1.0], n=[1.0], capacity=[1.0])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            PowerAggregates(period=[2010], p_in=[-1.0], p_out=[1.0],
                            area=[1.0], n=[1.0], capacity=[1.0])
