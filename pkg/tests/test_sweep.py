import csv
import io
import json

import numpy as np
import pytest

from spike_energetics.energetics import energy_report
from spike_energetics.integrator import Protocol
from spike_energetics.sweep import (CSV_FIELDS, DEFAULT_STIMS, DEFAULT_TEMPS, NO_SPIKES, OK, SweepGrid, dump_json,
                                    fold_change, parse_axis, run_sweep, write_rows)

SHORT = dict(duration=1000.0)


def test_default_axes():
    assert DEFAULT_TEMPS[0] == 20 and DEFAULT_TEMPS[-1] == 40 and DEFAULT_TEMPS.size == 21
    assert DEFAULT_STIMS[0] == 2.25 and DEFAULT_STIMS[-1] == 10 and DEFAULT_STIMS.size == 32


def test_single_point_matches_report():
    grid = run_sweep(9, [36.0], [0.44], **SHORT)
    rep = energy_report(9, Protocol(0.44, T=36.0, **SHORT))
    assert grid.status[0, 0] == OK
    assert grid.value("ionic_nJ", 36, 0.44) == rep.ionic_energy
    assert grid.value("freq_Hz", 36, 0.44) == rep.mean_frequency
    assert grid.value("overlap_nC", 36, 0.44) == rep.Q_overlap


def test_order_does_not_matter():
    temps, stims = [25.0, 35.0], [3.0, 6.0]
    a = run_sweep(10, temps, stims, **SHORT)
    b = run_sweep(10, temps, stims, order=[3, 1, 2, 0], **SHORT)
    for name in a.values:
        np.testing.assert_array_equal(a.values[name], b.values[name])


def test_no_spike_points_marked():
    grid = run_sweep(9, [36.0], [0.0, 0.44], **SHORT)
    assert list(grid.status[0]) == [NO_SPIKES, OK]
    assert np.isnan(grid.values["ionic_nJ"][0, 0])
    with pytest.raises(ValueError):
        fold_change(grid, "ionic_nJ", (36, 0.0), (36, 0.44))


def test_fold_change_identity():
    grid = run_sweep(9, [36.0], [0.44], **SHORT)
    assert fold_change(grid, "ionic_nJ", (36, 0.44), (36, 0.44)) == 1.0


def test_off_grid_lookup():
    grid = SweepGrid(1, [20.0], [2.25])
    with pytest.raises(KeyError):
        grid.index(21.0, 2.25)


@pytest.mark.parametrize("axis", [[], [2.0, 1.0], [[1.0]]])
def test_bad_axes(axis):
    with pytest.raises(ValueError):
        SweepGrid(1, axis, [1.0])


def test_csv_layout():
    grid = run_sweep(9, [30.0, 36.0], [0.44], **SHORT)
    buf = io.StringIO()
    write_rows(buf, [grid])
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["cell_id", "temp_C", "stim_uA_cm2", "freq_Hz", "ionic_nJ", "metabolic_nJ",
                       "hydrolysis_kJ_mol", "overlap_nC", "status"]
    assert len(rows) == 3
    assert rows[1][:3] == ["9", "30", "0.44"]
    assert len(CSV_FIELDS) == 5


def test_csv_append(tmp_path):
    grid = run_sweep(9, [36.0], [0.44], **SHORT)
    path = tmp_path / "grid.csv"
    grid.write_csv(path)
    grid.write_csv(path, append=True)
    lines = path.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("cell_id")


def test_json_roundtrip():
    grid = run_sweep(9, [36.0], [0.0, 0.44], **SHORT)
    data = json.loads(dump_json([grid]))
    assert data[0]["cell_id"] == 9
    assert data[0]["ionic_nJ"][0][0] is None
    assert data[0]["status"] == [[NO_SPIKES, OK]]


@pytest.mark.parametrize("text, expected", [
    ("36", [36.0]),
    ("20:22", [20.0, 21.0, 22.0]),
    ("2.25:3:0.25", [2.25, 2.5, 2.75, 3.0]),
    ("36:36", [36.0]),
])
def test_parse_axis(text, expected):
    np.testing.assert_allclose(parse_axis(text, 1.0), expected)


@pytest.mark.parametrize("text", ["5:4", "1:2:0", "1:2:-1", "1:2:3:4", "abc"])
def test_parse_axis_rejects(text):
    with pytest.raises(ValueError):
        parse_axis(text, 1.0)


@pytest.mark.slow
def test_parallel_matches_serial():
    temps, stims = [25.0, 35.0], [3.0, 6.0]
    a = run_sweep(10, temps, stims, **SHORT)
    b = run_sweep(10, temps, stims, jobs=2, **SHORT)
    for name in a.values:
        np.testing.assert_array_equal(a.values[name], b.values[name])
