import csv
import io
import json
import time

import pytest

from spike_energetics.cli import EXIT_ACCEPTANCE, EXIT_OK, EXIT_VALIDATION, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_cells_lists_registry(capsys):
    code, out, _ = run(capsys, "cells")
    assert code == EXIT_OK
    assert len(rows(out)) == 10


def test_cells_json(capsys):
    _, out, _ = run(capsys, "cells", "--format", "json")
    data = json.loads(out)
    assert [d["cell_id"] for d in data] == list(range(1, 11))
    assert data[8]["family"] == "TCR"


def test_cells_single(capsys):
    _, out, _ = run(capsys, "cells", "--cell", "9")
    (row,) = rows(out)
    assert float(row["g_T"]) == 5.0


def test_unknown_cell_is_validation_error(capsys):
    code, _, err = run(capsys, "cells", "--cell", "11")
    assert code == EXIT_VALIDATION
    assert "11" in err


def test_simulate_rest(capsys, tmp_path):
    out_file = tmp_path / "t.csv"
    code, out, _ = run(capsys, "simulate", "--cell", "9", "--stim", "0", "--duration", "500",
                       "--out", str(out_file), "--every", "100")
    assert code == EXIT_OK
    assert "0 spikes" in out
    assert len(out_file.read_text().splitlines()) == 1 + 501


def test_simulate_needs_one_cell(capsys):
    assert run(capsys, "simulate", "--cell", "1,2")[0] == EXIT_VALIDATION
    assert run(capsys, "simulate")[0] == EXIT_VALIDATION


def test_simulate_bad_temperature(capsys):
    assert run(capsys, "simulate", "--cell", "9", "--temp", "80")[0] == EXIT_VALIDATION


def test_report_fatp_scaling(capsys):
    _, out50, _ = run(capsys, "report", "--cell", "9", "--format", "json")
    _, out46, _ = run(capsys, "report", "--cell", "9", "--fatp", "46", "--format", "json")
    a, b = json.loads(out50)[0], json.loads(out46)[0]
    assert b["metabolic_energy_nJ_cm2"] == pytest.approx(a["metabolic_energy_nJ_cm2"] * 46 / 50, rel=1e-5)
    assert b["ionic_energy_nJ_cm2"] == a["ionic_energy_nJ_cm2"]


def test_report_cell5(capsys):
    _, out, _ = run(capsys, "report", "--cell", "5")
    (row,) = rows(out)
    assert float(row["Na_load_nC_cm2"]) == pytest.approx(217, rel=0.15)
    assert float(row["ATP_pmol_cm2"]) == pytest.approx(0.75, rel=0.15)
    assert row["status"] == "ok"


def test_report_no_spikes_row(capsys):
    code, out, _ = run(capsys, "report", "--cell", "9", "--stim", "0", "--duration", "500")
    assert code == EXIT_OK
    assert rows(out)[0]["status"] == "no-spikes"


def test_report_fatp_out_of_range_warns(capsys):
    code, _, err = run(capsys, "report", "--cell", "9", "--fatp", "70", "--duration", "1000")
    assert code == EXIT_OK
    assert "outside" in err


def test_sweep_single_point(capsys):
    code, out, _ = run(capsys, "sweep", "--cell", "9", "--temp", "36:36", "--stim", "7:7", "--duration", "1000")
    assert code == EXIT_OK
    (row,) = rows(out)
    assert row["status"] == "ok"
    assert float(row["ionic_nJ"]) == pytest.approx(8.42, abs=1.5)


@pytest.mark.parametrize("axis", [["--temp", "40:20"], ["--stim", "5:4"], ["--stim", "1:2:0"]])
def test_sweep_empty_axis(capsys, axis):
    code, _, err = run(capsys, "sweep", "--cell", "9", *axis)
    assert code == EXIT_VALIDATION
    assert "axis" in err


def test_verify_quick(capsys):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--quick")
    assert time.perf_counter() - t0 < 30
    assert code == EXIT_OK, out
    assert "checks passed" in out


def test_verify_flags_perturbed_conductance(capsys):
    code, out, _ = run(capsys, "verify", "--quick", "--perturb-gna", "0.5")
    assert code == EXIT_ACCEPTANCE
    assert "failed: cell" in out and "Q_Na" in out
