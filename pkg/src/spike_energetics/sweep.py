"""Temperature x stimulus grids of per-spike observables."""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energetics import F_ATP_DEFAULT, NoSpikesError, energy_report
from .integrator import DEFAULT_DT, DEFAULT_DURATION, DEFAULT_TRANSIENT, IntegrationError, Protocol

DEFAULT_TEMPS = np.arange(20.0, 40.0 + 0.5, 1.0)
DEFAULT_STIMS = np.arange(2.25, 10.0 + 0.125, 0.25)

OK, NO_SPIKES, FAILED = "ok", "no-spikes", "integration-failure"

# observable name -> EnergyReport attribute
OBSERVABLES = {
    "freq_Hz": "mean_frequency",
    "ionic_nJ": "ionic_energy",
    "metabolic_nJ": "metabolic_energy",
    "hydrolysis_kJ_mol": "hydrolysis",
    "overlap_nC": "Q_overlap",
    "Na_load_nC": "Q_Na",
    "K_load_nC": "Q_K",
}
CSV_FIELDS = ("freq_Hz", "ionic_nJ", "metabolic_nJ", "hydrolysis_kJ_mol", "overlap_nC")


@dataclass
class SweepGrid:
    cell_id: int
    temps: np.ndarray
    stims: np.ndarray
    values: dict[str, np.ndarray] = field(default_factory=dict)  # each (n_temps, n_stims)
    status: np.ndarray | None = None

    def __post_init__(self):
        self.temps = np.asarray(self.temps, dtype=float)
        self.stims = np.asarray(self.stims, dtype=float)
        for axis in (self.temps, self.stims):
            if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ValueError("grid axes must be non-empty and strictly increasing")
        shape = (self.temps.size, self.stims.size)
        for name in OBSERVABLES:
            self.values.setdefault(name, np.full(shape, np.nan))
        if self.status is None:
            self.status = np.full(shape, "", dtype=object)

    def index(self, temp: float, stim: float) -> tuple[int, int]:
        i = np.flatnonzero(np.isclose(self.temps, temp))
        j = np.flatnonzero(np.isclose(self.stims, stim))
        if i.size == 0 or j.size == 0:
            raise KeyError(f"({temp}, {stim}) is not a grid point")
        return int(i[0]), int(j[0])

    def value(self, observable: str, temp: float, stim: float) -> float:
        return float(self.values[observable][self.index(temp, stim)])

    def rows(self):
        for i, T in enumerate(self.temps):
            for j, I in enumerate(self.stims):
                yield (self.cell_id, T, I, *(self.values[f][i, j] for f in CSV_FIELDS), self.status[i, j])

    def write_csv(self, path: str | Path, append: bool = False) -> None:
        path = Path(path)
        header = not (append and path.exists() and path.stat().st_size)
        with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
            write_rows(fh, [self], header=header)

    def to_json(self) -> dict:
        return {
            "cell_id": self.cell_id,
            "temp_C": self.temps.tolist(),
            "stim_uA_cm2": self.stims.tolist(),
            "status": self.status.tolist(),
            **{name: [[None if np.isnan(x) else float(f"{x:.6g}") for x in row] for row in arr]
               for name, arr in self.values.items()},
        }


def write_rows(fh, grids, header: bool = True) -> None:
    w = csv.writer(fh)
    if header:
        w.writerow(["cell_id", "temp_C", "stim_uA_cm2", *CSV_FIELDS, "status"])
    for grid in grids:
        for row in grid.rows():
            cid, T, I, *vals, status = row
            w.writerow([cid, f"{T:.6g}", f"{I:.6g}", *("" if np.isnan(v) else f"{v:.6g}" for v in vals), status])


def _evaluate(args):
    cell_id, T, I, duration, dt, transient, F_ATP = args
    try:
        rep = energy_report(cell_id, Protocol(I, T=T, duration=duration, dt=dt, transient=transient), F_ATP)
    except NoSpikesError:
        return NO_SPIKES, None
    except IntegrationError:
        return FAILED, None
    return OK, {name: float(getattr(rep, attr)) for name, attr in OBSERVABLES.items()}


def run_sweep(cell_id: int, temps=DEFAULT_TEMPS, stims=DEFAULT_STIMS, *,
              duration: float = DEFAULT_DURATION, dt: float = DEFAULT_DT,
              transient: float = DEFAULT_TRANSIENT, F_ATP: float = F_ATP_DEFAULT,
              jobs: int = 1, order=None) -> SweepGrid:
    """Evaluate every (temperature, stimulus) point independently.

    ``order`` optionally permutes the evaluation sequence; results land in
    fixed slots, so the grid does not depend on it. Failed points are
    recorded in ``status`` rather than raised.
    """
    grid = SweepGrid(cell_id, temps, stims)
    Protocol(float(grid.stims[0]), T=float(grid.temps[0]), duration=duration, dt=dt, transient=transient)
    slots = [(i, j) for i in range(grid.temps.size) for j in range(grid.stims.size)]
    if order is not None:
        slots = [slots[k] for k in order]
    tasks = [(cell_id, float(grid.temps[i]), float(grid.stims[j]), duration, dt, transient, F_ATP)
             for i, j in slots]
    jobs = jobs if jobs > 0 else (os.cpu_count() or 1)
    if jobs == 1 or len(tasks) == 1:
        results = map(_evaluate, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * jobs)))
    try:
        for (i, j), (status, vals) in zip(slots, results):
            grid.status[i, j] = status
            if vals:
                for name, v in vals.items():
                    grid.values[name][i, j] = v
    finally:
        if jobs != 1 and len(tasks) > 1:
            pool.shutdown()
    return grid


def fold_change(grid: SweepGrid, observable: str, point_a: tuple[float, float],
                point_b: tuple[float, float]) -> float:
    """observable(a) / observable(b) for two (temperature, stimulus) grid points."""
    for point in (point_a, point_b):
        if grid.status[grid.index(*point)] != OK:
            raise ValueError(f"grid point {point} has status {grid.status[grid.index(*point)]!r}")
    return grid.value(observable, *point_a) / grid.value(observable, *point_b)


def parse_axis(text: str, default_step: float) -> np.ndarray:
    """``"a:b"`` or ``"a:b:step"`` (inclusive) or a single value."""
    parts = [float(x) for x in text.split(":")]
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) not in (2, 3):
        raise ValueError(f"bad axis specification {text!r}")
    lo, hi = parts[0], parts[1]
    step = parts[2] if len(parts) == 3 else default_step
    if hi < lo or step <= 0:
        raise ValueError(f"empty axis {text!r}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def dump_json(grids, path: str | Path | None = None) -> str:
    text = json.dumps([g.to_json() for g in grids], indent=1)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
