"""Per-spike energy budgets: channel dissipation and ion counting.

Units on the sampled traces: currents in uA/cm^2, time in ms, so a time
integral of current is nC/cm^2 and a time integral of the dissipation rate
(nW/cm^2) is pJ/cm^2.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from numpy import trapezoid

from . import cells
from .cells import CellParams, CellState
from .integrator import Protocol, SpikeTrain, Trace, detect_spikes, integrate, mean_frequency

ELEMENTARY_CHARGE = 1.602e-19  # C
AVOGADRO = 6.022e23  # 1/mol
NA_PER_ATP = 3
F_ATP_DEFAULT = 50.0  # kJ/mol
F_ATP_RANGE = (46.0, 62.0)


class NoSpikesError(ValueError):
    """A per-spike quantity was requested for a window without spikes."""

    def __init__(self, protocol: Protocol | None = None, cell_id: int | None = None):
        self.protocol = protocol
        self.cell_id = cell_id
        msg = "no spikes in the analysis window"
        if cell_id is not None:
            msg = f"cell {cell_id}: {msg}"
        if protocol is not None:
            msg += f" ({protocol})"
        super().__init__(msg)


# -- instantaneous rates -----------------------------------------------------


def _reversals(params: CellParams) -> np.ndarray:
    return np.array([params.E_leak, params.E_Na, params.E_K, params.E_K, params.E_Ca, params.E_T])


def channel_energy_rate(state: CellState, params: CellParams | None = None) -> float:
    """Power dissipated in the ion channels, sum of g * gating * (V - E)^2, nW/cm^2.

    The TCR potassium term carries the fourth power of 0.75 (1 - h), the
    same gating product as its current.
    """
    params = params or state.params
    cur = np.array(cells.ionic_currents(state, params).as_tuple())
    return float(np.sum(cur * (state.V - _reversals(params))))


def total_energy_rate(state: CellState, params: CellParams | None = None, I_stim: float = 0.0) -> float:
    """Rate of change of the stored electrochemical energy: V * I_stim - channel dissipation."""
    params = params or state.params
    return state.V * I_stim - channel_energy_rate(state, params)


def energy_rate_forms(trace: Trace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The energy rate along a trace computed two ways.

    First from the capacitor and batteries, ``C V dV/dt + sum_i I_i E_i``
    with dV/dt taken from the compiled state derivative; second as
    ``V I_stim - dissipation``. Also returns the summed magnitude of the
    individual terms, the natural scale for comparing the two.
    """
    p = trace.params
    E = _reversals(p)
    dY = cells.batch_derivative(trace.y, p.vector(), int(p.family), float(trace.protocol.I_stim), 1.0)
    V = trace.V
    capacitor = p.C * V * dY[:, 0]
    storage_form = capacitor + trace.currents @ E
    stim_power = V * trace.protocol.I_stim
    dissipation_form = stim_power - trace.energy_rate
    scale = np.maximum(np.abs(capacitor) + np.abs(trace.currents) @ np.abs(E),
                       np.abs(stim_power) + np.abs(trace.currents * (V[:, None] - E)).sum(axis=1))
    return storage_form, dissipation_form, scale


def energy_rate_mismatch(trace: Trace) -> float:
    """Largest disagreement between the two energy-rate forms, relative to term magnitude."""
    a, b, scale = energy_rate_forms(trace)
    return float(np.max(np.abs(a - b) / np.maximum(scale, 1e-300)))


# -- window integrals --------------------------------------------------------


def _window(trace: Trace, spikes: SpikeTrain):
    """Contiguous sample range of the analysis window, its times and its length."""
    if spikes.count < 1:
        raise NoSpikesError(trace.protocol, trace.params.cell_id)
    lo, hi = spikes.window
    sl = slice(int(np.searchsorted(trace.t, lo - 1e-9)), int(np.searchsorted(trace.t, hi + 1e-9, side="right")))
    t = trace.t[sl]
    return sl, t, t[-1] - t[0]


def _rest_currents(trace: Trace) -> np.ndarray:
    rest = trace.rest if trace.rest is not None else cells.default_resting_state(trace.params)
    return np.array(cells.ionic_currents(rest, trace.params).as_tuple())


def _na_k(currents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # potassium load counts the delayed rectifier only; I_M is a separate slow current
    return np.abs(currents[..., 1]), currents[..., 2]


def sodium_load(trace: Trace, spikes: SpikeTrain, baseline: bool = False) -> float:
    """Na+ charge per spike (nC/cm^2): area under |I_Na| over the window / spike count.

    With ``baseline`` the resting |I_Na| over the window length is removed first.
    """
    sl, t, width = _window(trace, spikes)
    na, _ = _na_k(trace.currents[sl])
    q = trapezoid(na, t)
    if baseline:
        q -= _na_k(_rest_currents(trace))[0] * width
    return float(q / spikes.count)


def potassium_load(trace: Trace, spikes: SpikeTrain, baseline: bool = False) -> float:
    """K+ charge per spike carried by the delayed-rectifier current, nC/cm^2."""
    sl, t, width = _window(trace, spikes)
    _, k = _na_k(trace.currents[sl])
    q = trapezoid(np.abs(k), t)
    if baseline:
        q -= abs(_na_k(_rest_currents(trace))[1]) * width
    return float(q / spikes.count)


def _split(na: np.ndarray, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise split of |I_Na| into the part cancelled by outward K+ and the rest."""
    outward = np.maximum(k, 0.0)
    overlap = np.minimum(na, outward)
    return na - overlap, overlap


def overlap_decomposition(trace: Trace, spikes: SpikeTrain, baseline: bool = False) -> tuple[float, float]:
    """(Q_min, Q_overlap) per spike in nC/cm^2; they sum to :func:`sodium_load`."""
    sl, t, width = _window(trace, spikes)
    na, k = _na_k(trace.currents[sl])
    unbalanced, overlap = _split(na, k)
    q_min = trapezoid(unbalanced, t)
    q_ov = trapezoid(overlap, t)
    if baseline:
        rna, rk = _na_k(_rest_currents(trace))
        r_min, r_ov = _split(np.atleast_1d(rna), np.atleast_1d(rk))
        q_min -= float(r_min[0]) * width
        q_ov -= float(r_ov[0]) * width
    return float(q_min / spikes.count), float(q_ov / spikes.count)


def capacitive_minimum(trace: Trace, spikes: SpikeTrain) -> float:
    """Alternative Q_min: C times the mean spike excursion (peak minus preceding trough), nC/cm^2.

    Exposed for comparison with the pointwise definition only.
    """
    _window(trace, spikes)
    V = trace.V
    idx = np.searchsorted(trace.t, spikes.times)
    start = np.searchsorted(trace.t, spikes.window[0])
    # trough: minimum since the previous spike; peak: maximum until the next one
    troughs = np.minimum.reduceat(V, np.r_[start, idx])[: idx.size]
    peaks = np.maximum.reduceat(V, idx)
    # uF/cm^2 * mV = nC/cm^2
    return float(trace.params.C * np.mean(peaks - troughs))


def charge_separation(Q_min: float, Q_Na: float) -> float:
    if Q_Na <= 0:
        raise ValueError("charge separation needs a positive sodium load")
    return Q_min / Q_Na


def atp_moles(Q_Na: float) -> float:
    """ATP (pmol/cm^2) needed to pump out ``Q_Na`` nC/cm^2 at 3 Na+ per ATP."""
    if Q_Na < 0:
        raise ValueError("sodium load must be non-negative")
    mol = Q_Na * 1e-9 / (NA_PER_ATP * ELEMENTARY_CHARGE * AVOGADRO)
    return mol * 1e12


def metabolic_energy(atp: float, F_ATP: float = F_ATP_DEFAULT) -> float:
    """Energy in nJ/cm^2 released by hydrolysing ``atp`` pmol/cm^2 at ``F_ATP`` kJ/mol."""
    if atp < 0:
        raise ValueError("ATP amount must be non-negative")
    lo, hi = F_ATP_RANGE
    if not lo <= F_ATP <= hi:
        warnings.warn(f"F_ATP = {F_ATP} kJ/mol outside the physiological range [{lo}, {hi}]",
                      stacklevel=2)
    # pmol * kJ/mol = 1e-12 mol * 1e3 J/mol = 1e-9 J
    return atp * F_ATP


def ionic_energy_per_spike(trace: Trace, spikes: SpikeTrain) -> float:
    """Channel dissipation integrated over the window, per spike, nJ/cm^2."""
    sl, t, _ = _window(trace, spikes)
    # nW * ms = pJ
    return float(trapezoid(trace.energy_rate[sl], t) / 1000.0 / spikes.count)


def hydrolysis_free_energy(ionic_energy: float, atp: float) -> float:
    """Energy released per mole of ATP implied by the two methods, kJ/mol."""
    if atp <= 0:
        raise ValueError("ATP amount must be positive")
    # nJ / pmol = kJ/mol
    return ionic_energy / atp


# -- reports -----------------------------------------------------------------

REPORT_COLUMNS = {
    "cell_id": "cell_id",
    "stimulus": "stimulus_uA_cm2",
    "temperature": "temperature_C",
    "mean_frequency": "frequency_Hz",
    "Q_Na": "Na_load_nC_cm2",
    "Q_K": "K_load_nC_cm2",
    "Q_min": "capacitive_minimum_nC_cm2",
    "Q_overlap": "overlap_load_nC_cm2",
    "charge_separation": "charge_separation",
    "atp": "ATP_pmol_cm2",
    "metabolic_energy": "metabolic_energy_nJ_cm2",
    "ionic_energy": "ionic_energy_nJ_cm2",
    "hydrolysis": "ATP_hydrolysis_kJ_mol",
    "relative_difference": "metabolic_vs_ionic_rel_diff",
    "Q_min_capacitive": "capacitive_minimum_CdV_nC_cm2",
    "spike_count": "spike_count",
}


@dataclass(frozen=True)
class EnergyReport:
    cell_id: int
    stimulus: float
    temperature: float
    mean_frequency: float
    Q_Na: float
    Q_K: float
    Q_min: float
    Q_overlap: float
    charge_separation: float
    atp: float
    metabolic_energy: float
    ionic_energy: float
    hydrolysis: float
    spike_count: int
    F_ATP: float = F_ATP_DEFAULT
    # C * spike excursion; a cross-check on the pointwise Q_min, not a Table value
    Q_min_capacitive: float = float("nan")

    @property
    def relative_difference(self) -> float:
        return (self.metabolic_energy - self.ionic_energy) / self.ionic_energy

    def check_invariants(self, rtol: float = 1e-6) -> None:
        assert abs(self.Q_min + self.Q_overlap - self.Q_Na) <= rtol * abs(self.Q_Na)
        assert -rtol <= self.charge_separation <= 1 + rtol
        assert abs(self.metabolic_energy - self.atp * self.F_ATP) <= rtol * abs(self.metabolic_energy)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relative_difference"] = self.relative_difference
        return {REPORT_COLUMNS[k]: d[k] for k in REPORT_COLUMNS}


def report_from_trace(trace: Trace, spikes: SpikeTrain | None = None, F_ATP: float = F_ATP_DEFAULT,
                      baseline: bool = False) -> EnergyReport:
    spikes = spikes if spikes is not None else detect_spikes(trace)
    q_na = sodium_load(trace, spikes, baseline)
    q_min, q_ov = overlap_decomposition(trace, spikes, baseline)
    atp = atp_moles(max(q_na, 0.0))
    ionic = ionic_energy_per_spike(trace, spikes)
    return EnergyReport(
        cell_id=trace.params.cell_id,
        stimulus=trace.protocol.I_stim,
        temperature=trace.protocol.T,
        mean_frequency=mean_frequency(spikes),
        Q_Na=q_na,
        Q_K=potassium_load(trace, spikes, baseline),
        Q_min=q_min,
        Q_overlap=q_ov,
        charge_separation=charge_separation(q_min, q_na),
        atp=atp,
        metabolic_energy=metabolic_energy(atp, F_ATP),
        ionic_energy=ionic,
        hydrolysis=hydrolysis_free_energy(ionic, atp),
        spike_count=spikes.count,
        F_ATP=F_ATP,
        Q_min_capacitive=capacitive_minimum(trace, spikes),
    )


def energy_report(cell: int | CellParams, protocol: Protocol, F_ATP: float = F_ATP_DEFAULT,
                  baseline: bool = False) -> EnergyReport:
    """Simulate one protocol and assemble every per-spike metric."""
    params = cell if isinstance(cell, CellParams) else cells.registry(cell)
    trace = integrate(params, protocol)
    return report_from_trace(trace, F_ATP=F_ATP, baseline=baseline)
