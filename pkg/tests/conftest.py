import numpy as np
import pytest

from windfleet.fleet import Fleet, ImputationReport, TurbineRecord
from windfleet.windgrid import WindGrid


def turbine(tid="T1", lon=-97.0, lat=37.0, year=2010, hub=80.0, rotor=100.0,
            cap=2000.0, flagged=False, d_year=None, imputed=()):
    return TurbineRecord(
        id=tid, lon=lon, lat=lat, commissioning_year=year, hub_height=hub,
        rotor_diameter=rotor, capacity=cap, decommissioned_flag=flagged,
        decommissioning_year=d_year, imputed_fields=set(imputed))


def fleet_of(records):
    """Wrap complete records in a Fleet without running preprocessing."""
    return Fleet(turbines=list(records), provenance={},
                 imputation=ImputationReport({}, {}, {}))


def const_grid(v10=8.0, v100=8.0, t0=1262304000, n_time=24,
               lons=(-100.0, -95.0), lats=(35.0, 40.0), step=3600):
    """Spatially and temporally constant wind field written to u components.

    Default t0 is 2010-01-01T00:00Z.
    """
    shape = (n_time, len(lats), len(lons))
    return WindGrid(
        lons=np.asarray(lons, dtype=np.float64),
        lats=np.asarray(lats, dtype=np.float64),
        t0=t0, step=step,
        u10=np.full(shape, v10, dtype=np.float32),
        v10=np.zeros(shape, dtype=np.float32),
        u100=np.full(shape, v100, dtype=np.float32),
        v100=np.zeros(shape, dtype=np.float32))


def grid_from_field(u10, v10, u100, v100, lons, lats, t0=1262304000, step=3600):
    return WindGrid(
        lons=np.asarray(lons, dtype=np.float64),
        lats=np.asarray(lats, dtype=np.float64),
        t0=t0, step=step,
        u10=np.asarray(u10, dtype=np.float32),
        v10=np.asarray(v10, dtype=np.float32),
        u100=np.asarray(u100, dtype=np.float32),
        v100=np.asarray(v100, dtype=np.float32))


@pytest.fixture
def hours_2010():
    """Unix timestamp of 2010-01-01T00:00Z (grid epoch used in most tests)."""
    return 1262304000
