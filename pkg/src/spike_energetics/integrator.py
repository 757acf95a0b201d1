"""Fixed-step RK4 integration, trace recording and spike analysis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from . import cells
from .cells import CURRENT_NAMES, CellParams, CellState
from .kinetics import temperature_factor

DEFAULT_DT = 0.01
DEFAULT_DURATION = 4000.0
DEFAULT_TRANSIENT = 0.0
# the TCR cell peaks near -6 mV and fast RHI firing at 40 degC troughs near -48 mV
SPIKE_THRESHOLD = -20.0
SPIKE_RESET = -40.0


class IntegrationError(RuntimeError):
    """The state became non-finite; ``time`` is when it was first seen."""

    def __init__(self, time: float, cell_id: int | None = None):
        self.time = time
        self.cell_id = cell_id
        where = f"cell {cell_id}: " if cell_id is not None else ""
        super().__init__(f"{where}non-finite state at t = {time:.3f} ms")


@dataclass(frozen=True)
class Protocol:
    I_stim: float
    T: float = 36.0
    duration: float = DEFAULT_DURATION
    dt: float = DEFAULT_DT
    transient: float = DEFAULT_TRANSIENT

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.duration > self.transient >= 0:
            raise ValueError("need duration > transient >= 0")
        temperature_factor(self.T)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def window(self) -> tuple[float, float]:
        return (self.transient, self.duration)


@dataclass
class Trace:
    params: CellParams
    protocol: Protocol
    t: np.ndarray
    y: np.ndarray  # (n_samples, n_state)
    currents: np.ndarray  # (n_samples, 6), columns as CURRENT_NAMES
    energy_rate: np.ndarray  # channel dissipation, nW/cm^2
    rest: CellState | None = field(default=None, repr=False)

    @property
    def V(self) -> np.ndarray:
        return self.y[:, 0]

    def gate(self, name: str) -> np.ndarray:
        return self.y[:, self.params.state_names.index(name)]

    def current(self, name: str) -> np.ndarray:
        return self.currents[:, CURRENT_NAMES.index(name)]

    def window_mask(self) -> np.ndarray:
        lo, hi = self.protocol.window
        return (self.t >= lo - 1e-9) & (self.t <= hi + 1e-9)

    def to_csv(self, path: str | Path, every: int = 1) -> None:
        gates = self.params.gate_names
        idx = [self.params.state_names.index(g) for g in gates]
        header = ["t_ms", "V_mV", *gates, *CURRENT_NAMES, "E_rate_nW"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(0, len(self.t), every):
                row = [self.t[i], self.y[i, 0], *self.y[i, idx], *self.currents[i], self.energy_rate[i]]
                w.writerow([f"{x:.6g}" for x in row])


@dataclass(frozen=True)
class SpikeTrain:
    times: np.ndarray
    window: tuple[float, float]

    @property
    def count(self) -> int:
        return int(self.times.size)


@njit(cache=True, error_model="numpy")
def _rk4_kernel(y0, par, family, istim, k, dt, n_steps):
    """Fixed-step RK4 recording every state together with its six currents.

    The first stage of each step evaluates the derivative at the recorded
    state, so its currents are stored rather than recomputed afterwards.
    Returns (Y, currents, first failing step or -1).
    """
    n = y0.size
    Y = np.empty((n_steps + 1, n))
    C = np.empty((n_steps + 1, 6))
    Y[0] = y0
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    cur = np.empty(6)
    scratch = np.empty(6)
    for step in range(n_steps):
        cells._derivative(y, par, family, istim, k, k1, cur)
        C[step] = cur
        for j in range(n):
            tmp[j] = y[j] + 0.5 * dt * k1[j]
        cells._derivative(tmp, par, family, istim, k, k2, scratch)
        for j in range(n):
            tmp[j] = y[j] + 0.5 * dt * k2[j]
        cells._derivative(tmp, par, family, istim, k, k3, scratch)
        for j in range(n):
            tmp[j] = y[j] + dt * k3[j]
        cells._derivative(tmp, par, family, istim, k, k4, scratch)
        for j in range(n):
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            Y[step + 1, j] = y[j]
        # a non-finite gate reaches V through the currents within one step
        if not math.isfinite(y[0]):
            return Y[: step + 1], C[: step + 1], step + 1
    for j in range(n):
        if not math.isfinite(y[j]):
            return Y, C, n_steps
    cells._fill_currents(y, par, family, cur)
    C[n_steps] = cur
    return Y, C, -1


@njit(cache=True, error_model="numpy")
def _dissipation(Y, currents, reversal):
    out = np.empty(Y.shape[0])
    for i in range(Y.shape[0]):
        acc = 0.0
        for c in range(currents.shape[1]):
            acc += currents[i, c] * (Y[i, 0] - reversal[c])
        out[i] = acc
    return out


def channel_energy_rates(y: np.ndarray, currents: np.ndarray, params: CellParams) -> np.ndarray:
    """Channel dissipation sum of I_i * (V - E_i) for each sample, nW/cm^2."""
    reversal = np.array([params.E_leak, params.E_Na, params.E_K, params.E_K, params.E_Ca, params.E_T])
    return _dissipation(np.ascontiguousarray(y, dtype=float), np.ascontiguousarray(currents, dtype=float), reversal)


def integrate(params: CellParams, protocol: Protocol, initial: CellState | None = None) -> Trace:
    """Integrate from rest (or ``initial``) under a constant step current."""
    rest = initial if initial is not None else cells.default_resting_state(params)
    par = params.vector()
    fam = int(params.family)
    k = temperature_factor(protocol.T)
    Y, currents, failed_at = _rk4_kernel(np.asarray(rest.y, dtype=float), par, fam, float(protocol.I_stim),
                                         k, float(protocol.dt), protocol.n_steps)
    if failed_at >= 0:
        raise IntegrationError(failed_at * protocol.dt, params.cell_id)
    t = np.arange(Y.shape[0]) * protocol.dt
    return Trace(params, protocol, t, Y, currents, channel_energy_rates(Y, currents, params), rest)


def detect_spikes(trace: Trace, threshold: float = SPIKE_THRESHOLD, reset: float = SPIKE_RESET,
                  window: tuple[float, float] | None = None) -> SpikeTrain:
    """Upward threshold crossings, re-armed only once V drops below ``reset``."""
    if threshold <= reset:
        raise ValueError("threshold must exceed reset")
    window = window if window is not None else trace.protocol.window
    times = _crossings(trace.t, trace.V, threshold, reset)
    keep = (times >= window[0]) & (times <= window[1])
    return SpikeTrain(times[keep], window)


def _crossings(t: np.ndarray, V: np.ndarray, threshold: float, reset: float) -> np.ndarray:
    above = V >= threshold
    below = V < reset
    out = []
    armed = not above[0]
    # candidate events only where state flips, so the Python loop stays short
    events = np.flatnonzero(np.diff(above.astype(np.int8)) > 0) + 1
    rearm = np.flatnonzero(below)
    last = -1
    for i in events:
        if not armed:
            # find a sub-reset sample between the previous spike and this crossing
            j = np.searchsorted(rearm, last + 1)
            armed = j < rearm.size and rearm[j] < i
        if armed:
            # linear interpolation of the crossing time
            v0, v1 = V[i - 1], V[i]
            frac = (threshold - v0) / (v1 - v0) if v1 != v0 else 0.0
            out.append(t[i - 1] + frac * (t[i] - t[i - 1]))
            last = i
            armed = False
    return np.asarray(out, dtype=float)


def interspike_frequencies(spikes: SpikeTrain) -> list[tuple[float, float]]:
    """Instantaneous rate 1000 / ISI (Hz), stamped at the later spike."""
    ts = spikes.times
    if ts.size < 2:
        return []
    return [(float(b), 1000.0 / float(b - a)) for a, b in zip(ts[:-1], ts[1:])]


def mean_frequency(spikes: SpikeTrain) -> float:
    lo, hi = spikes.window
    if hi <= lo:
        raise ValueError("analysis window has no length")
    return spikes.count * 1000.0 / (hi - lo)
