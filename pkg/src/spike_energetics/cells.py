"""Cell registry, ionic currents and the membrane state derivative.

State vectors are flat float arrays laid out per family:

* neocortical: ``[V, m, h, n, p, q, r]``
* TCR:         ``[V, h, r]``
* RHI:         ``[V, h, n]``

Neocortical cells without an M- or L-current still carry the ``p`` or
``q, r`` slots; those gates are held at zero and never touch ``V``
because the matching conductance is zero.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import root

from . import kinetics as kin
from .kinetics import Family

# parameter-vector slots shared by the compiled kernels
C_, G_LEAK, G_NA, G_K, G_M, G_L, G_T = 0, 1, 2, 3, 4, 5, 6
E_LEAK, E_NA, E_K, E_CA, E_T, V_T_, TAU_MAX, PHI = 7, 8, 9, 10, 11, 12, 13, 14
N_PARAMS = 15

STATE_NAMES: dict[Family, tuple[str, ...]] = {
    Family.NEOCORTICAL: ("V", "m", "h", "n", "p", "q", "r"),
    Family.TCR: ("V", "h", "r"),
    Family.RHI: ("V", "h", "n"),
}

CURRENT_NAMES = ("I_l", "I_Na", "I_K", "I_M", "I_L", "I_T")


@dataclass(frozen=True)
class CellParams:
    cell_id: int
    family: Family
    label: str
    C: float
    g_leak: float
    g_Na: float
    g_K: float
    g_M: float = 0.0
    g_L: float = 0.0
    g_T: float = 0.0
    E_leak: float = -70.0
    E_Na: float = 50.0
    E_K: float = -90.0
    E_Ca: float = 0.0
    E_T: float = 0.0
    V_T: float = 0.0
    tau_max: float = 0.0
    phi: float = 1.0
    # carried for completeness; no rate function uses it
    V_x: float | None = None

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"cell {self.cell_id}: capacitance must be positive")
        for name in ("g_leak", "g_Na", "g_K", "g_M", "g_L", "g_T"):
            if getattr(self, name) < 0:
                raise ValueError(f"cell {self.cell_id}: {name} must be >= 0")
        if self.family is Family.NEOCORTICAL and self.g_M > 0 and self.tau_max <= 0:
            raise ValueError(f"cell {self.cell_id}: M-current needs tau_max > 0")

    @property
    def state_names(self) -> tuple[str, ...]:
        return STATE_NAMES[self.family]

    @property
    def gate_names(self) -> tuple[str, ...]:
        """Gates that actually shape this cell's currents."""
        if self.family is not Family.NEOCORTICAL:
            return STATE_NAMES[self.family][1:]
        gates = ["m", "h", "n"]
        if self.g_M > 0:
            gates.append("p")
        if self.g_L > 0:
            gates += ["q", "r"]
        return tuple(gates)

    def vector(self) -> np.ndarray:
        par = np.zeros(N_PARAMS)
        par[C_] = self.C
        par[G_LEAK], par[G_NA], par[G_K] = self.g_leak, self.g_Na, self.g_K
        par[G_M], par[G_L], par[G_T] = self.g_M, self.g_L, self.g_T
        par[E_LEAK], par[E_NA], par[E_K] = self.E_leak, self.E_Na, self.E_K
        par[E_CA], par[E_T] = self.E_Ca, self.E_T
        par[V_T_], par[TAU_MAX], par[PHI] = self.V_T, self.tau_max, self.phi
        return par

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.name
        return d


def _neo(cell_id, label, C, g_leak, g_Na, g_K, g_M, g_L, E_leak, V_T, tau_max):
    return CellParams(
        cell_id=cell_id, family=Family.NEOCORTICAL, label=label, C=C,
        g_leak=g_leak, g_Na=g_Na, g_K=g_K, g_M=g_M, g_L=g_L,
        E_leak=E_leak, E_Na=50.0, E_K=-90.0, E_Ca=120.0 if g_L else 0.0,
        V_T=V_T, tau_max=tau_max,
    )


_REGISTRY: dict[int, CellParams] = {
    1: _neo(1, "RS cell as observed from ferret Visual Cortex in vitro",
            0.29, 0.1, 50, 5, 0.07, 0, -70, -61.5, 4000),
    2: _neo(2, "RS excitatory cell as observed from somatosensory cortex in vitro",
            1, 0.0205, 56, 6, 0.075, 0, -70.3, -56.2, 608),
    3: _neo(3, "RS inhibitory cell as observed from somatosensory cortex in vitro",
            1, 0.0133, 10, 21, 0.098, 0, -56.2, -65.4, 934),
    4: _neo(4, "FS cell as observed from ferret Visual Cortex in vitro",
            0.14, 0.15, 50, 10, 0, 0, -70, -61.5, 0),
    5: _neo(5, "FS cell as observed from somatosensory cortex in vitro",
            1, 0.038, 58, 3.9, 0.0787, 0, -70.4, -57.9, 502),
    6: _neo(6, "IB cell as observed from guinea pig somatosensory cortex in vitro "
               "(initial burst followed by adaptive action potentials)",
            0.29, 0.01, 50, 5, 0.03, 0.1, -70, -56.2, 4000),
    7: _neo(7, "IB cell as observed from guinea pig somatosensory cortex in vitro "
               "(repetitive bursting)",
            0.29, 0.01, 50, 5, 0.03, 0.2, -70, -56.2, 4000),
    8: _neo(8, "IB cell as observed from cat visual cortex",
            0.29, 0.1, 50, 4.2, 0.042, 0.12, -75, -58, 1000),
    9: CellParams(
        cell_id=9, family=Family.TCR,
        label="TCR cell as observed from Mouse thalamocortical relay neuron",
        C=1, g_leak=0.05, g_Na=3, g_K=5, g_T=5,
        E_leak=-70, E_Na=50, E_K=-90, E_T=0,
    ),
    # the tabulated g_T = 5 for this cell is dropped: the RHI model has no T-current
    10: CellParams(
        cell_id=10, family=Family.RHI,
        label="RHI cell as observed from Rat hippocampal interneuron",
        C=1, g_leak=0.1, g_Na=35, g_K=9,
        E_leak=-65, E_Na=55, E_K=-90, phi=5, V_x=5,
    ),
}

CELL_IDS = tuple(sorted(_REGISTRY))


def registry(cell_id: int) -> CellParams:
    try:
        return _REGISTRY[int(cell_id)]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"unknown cell id {cell_id!r}; expected 1-10") from None


def all_cells() -> list[CellParams]:
    return [_REGISTRY[i] for i in CELL_IDS]


@dataclass
class CellState:
    """Membrane voltage plus the family's gate values."""

    params: CellParams
    y: np.ndarray
    converged: bool = True
    residual: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def V(self) -> float:
        return float(self.y[0])

    @property
    def gates(self) -> dict[str, float]:
        names = self.params.state_names
        return {name: float(self.y[names.index(name)]) for name in self.params.gate_names
                if name in names}

    def copy(self) -> "CellState":
        return CellState(self.params, self.y.copy(), self.converged, self.residual)


@dataclass(frozen=True)
class CurrentBreakdown:
    I_l: float | np.ndarray = 0.0
    I_Na: float | np.ndarray = 0.0
    I_K: float | np.ndarray = 0.0
    I_M: float | np.ndarray = 0.0
    I_L: float | np.ndarray = 0.0
    I_T: float | np.ndarray = 0.0

    def total(self):
        return self.I_l + self.I_Na + self.I_K + self.I_M + self.I_L + self.I_T

    def as_tuple(self):
        return (self.I_l, self.I_Na, self.I_K, self.I_M, self.I_L, self.I_T)


# -- compiled kernels --------------------------------------------------------


@njit(cache=True, error_model="numpy", inline="always")
def _fill_currents(y, par, family, out):
    """Write the six current densities (uA/cm^2) for state ``y`` into ``out``."""
    V = y[0]
    out[0] = par[G_LEAK] * (V - par[E_LEAK])
    out[3] = 0.0
    out[4] = 0.0
    out[5] = 0.0
    if family == 0:
        m, h, n, p, q, r = y[1], y[2], y[3], y[4], y[5], y[6]
        out[1] = par[G_NA] * m * m * m * h * (V - par[E_NA])
        out[2] = par[G_K] * n * n * n * n * (V - par[E_K])
        out[3] = par[G_M] * p * (V - par[E_K])
        out[4] = par[G_L] * q * q * r * (V - par[E_CA])
    elif family == 1:
        h, r = y[1], y[2]
        m = kin.tcr_m_inf(V)
        nk = 0.75 * (1.0 - h)
        pt = kin.tcr_p_inf(V)
        out[1] = par[G_NA] * m * m * m * h * (V - par[E_NA])
        out[2] = par[G_K] * nk * nk * nk * nk * (V - par[E_K])
        out[5] = par[G_T] * pt * pt * r * (V - par[E_T])
    else:
        h, n = y[1], y[2]
        m = kin.rhi_m_inf(V)
        out[1] = par[G_NA] * m * m * m * h * (V - par[E_NA])
        out[2] = par[G_K] * n * n * n * n * (V - par[E_K])


@njit(cache=True, error_model="numpy", inline="always")
def _exprel_inv_fast(x, ex):
    # x / (e^x - 1) from a precomputed e^x; exp is cheaper than expm1 and
    # loses < 3e-12 relative accuracy outside the Taylor band
    if abs(x) < kin._TAYLOR_CUTOFF:
        return 1.0 - 0.5 * x
    return x / (ex - 1.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_spike_rates(V, V_T):
    """alpha/beta of m, h, n in one pass, reusing shared exponentials."""
    w = (V - V_T - 40.0) / 5.0
    ew = math.exp(w)
    bm = 1.4 * _exprel_inv_fast(w, ew)
    bh = 4.0 * ew / (1.0 + ew) if ew < 1e300 else 4.0
    xm = -(V - V_T - 13.0) / 4.0
    xn = -(V - V_T - 15.0) / 5.0
    am = 1.28 * _exprel_inv_fast(xm, math.exp(xm))
    an = 0.16 * _exprel_inv_fast(xn, math.exp(xn))
    return am, bm, kin.neo_alpha_h(V, V_T), bh, an, kin.neo_beta_n(V, V_T)


@njit(cache=True, error_model="numpy", inline="always")
def _derivative(y, par, family, istim, k, out, cur):
    _fill_currents(y, par, family, cur)
    V = y[0]
    out[0] = (istim - (cur[0] + cur[1] + cur[2] + cur[3] + cur[4] + cur[5])) / par[C_]
    if family == 0:
        am, bm, ah, bh, an, bn = neo_spike_rates(V, par[V_T_])
        out[1] = kin.gate_derivative(y[1], am, bm, k)
        out[2] = kin.gate_derivative(y[2], ah, bh, k)
        out[3] = kin.gate_derivative(y[3], an, bn, k)
        # absent channels: their gates are frozen, which cannot affect V
        if par[G_M] > 0.0:
            z = math.exp((V + 35.0) / 20.0)
            p_inf = z * z / (1.0 + z * z)
            tau_p = par[TAU_MAX] / (3.3 * z + 1.0 / z)
            out[4] = kin.relaxation_derivative(y[4], p_inf, tau_p, k)
        else:
            out[4] = 0.0
        if par[G_L] > 0.0:
            xq = (-27.0 - V) / 3.8
            out[5] = kin.gate_derivative(y[5], 0.209 * _exprel_inv_fast(xq, math.exp(xq)), kin.neo_beta_q(V), k)
            out[6] = kin.gate_derivative(y[6], kin.neo_alpha_r(V), kin.neo_beta_r(V), k)
        else:
            out[5] = 0.0
            out[6] = 0.0
    elif family == 1:
        out[1] = kin.relaxation_derivative(y[1], kin.tcr_h_inf(V), kin.tcr_tau_h(V), k)
        out[2] = kin.relaxation_derivative(y[2], kin.tcr_r_inf(V), kin.tcr_tau_r(V), k)
    else:
        kp = k * par[PHI]
        out[1] = kin.gate_derivative(y[1], kin.rhi_alpha_h(V), kin.rhi_beta_h(V), kp)
        out[2] = kin.gate_derivative(y[2], kin.rhi_alpha_n(V), kin.rhi_beta_n(V), kp)


@njit(cache=True, error_model="numpy")
def batch_derivative(Y, par, family, istim, k):
    """Derivative of every row of ``Y``."""
    out = np.empty_like(Y)
    cur = np.empty(6)
    for i in range(Y.shape[0]):
        _derivative(Y[i], par, family, istim, k, out[i], cur)
    return out


@njit(cache=True, error_model="numpy")
def batch_currents(Y, par, family):
    out = np.empty((Y.shape[0], 6))
    for i in range(Y.shape[0]):
        _fill_currents(Y[i], par, family, out[i])
    return out


@njit(cache=True, error_model="numpy")
def relax_kernel(y0, par, family, k, dt, max_steps, tol):
    """RK4 with zero input until the derivative norm drops below ``tol``."""
    y = y0.copy()
    n = y.size
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    cur = np.empty(6)
    norm = np.inf
    for step in range(max_steps):
        _derivative(y, par, family, 0.0, k, k1, cur)
        norm = math.sqrt(np.sum(k1 * k1))
        if norm < tol:
            return y, step, norm
        for j in range(n):
            tmp[j] = y[j] + 0.5 * dt * k1[j]
        _derivative(tmp, par, family, 0.0, k, k2, cur)
        for j in range(n):
            tmp[j] = y[j] + 0.5 * dt * k2[j]
        _derivative(tmp, par, family, 0.0, k, k3, cur)
        for j in range(n):
            tmp[j] = y[j] + dt * k3[j]
        _derivative(tmp, par, family, 0.0, k, k4, cur)
        for j in range(n):
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    _derivative(y, par, family, 0.0, k, k1, cur)
    return y, max_steps, math.sqrt(np.sum(k1 * k1))


# -- Python surface ----------------------------------------------------------


def ionic_currents(state: CellState, params: CellParams | None = None) -> CurrentBreakdown:
    params = params or state.params
    cur = np.empty(6)
    _fill_currents(np.asarray(state.y, dtype=float), params.vector(), int(params.family), cur)
    return CurrentBreakdown(*(float(c) for c in cur))


def state_derivative(state: CellState, params: CellParams | None = None,
                     I_stim: float = 0.0, k: float = 1.0) -> np.ndarray:
    params = params or state.params
    y = np.asarray(state.y, dtype=float)
    out = np.empty_like(y)
    _derivative(y, params.vector(), int(params.family), float(I_stim), float(k), out, np.empty(6))
    return out


def steady_state_vector(params: CellParams, V: float) -> np.ndarray:
    """State with every gate at its steady state for voltage ``V``."""
    fam = params.family
    y = [V]
    active = params.gate_names
    for name in STATE_NAMES[fam][1:]:
        y.append(kin.steady_state(fam, name, V, params.V_T) if name in active else 0.0)
    return np.array(y, dtype=float)


def make_state(params: CellParams, V: float, **gates: float) -> CellState:
    """State at ``V`` with unspecified gates at steady state."""
    y = steady_state_vector(params, V)
    names = params.state_names
    for name, value in gates.items():
        if name not in names:
            raise ValueError(f"cell {params.cell_id} has no state variable {name!r}")
        y[names.index(name)] = value
    return CellState(params, y)


def resting_state(params: CellParams, tol: float = 1e-9, V0: float = -70.0,
                  dt: float = 0.01, max_time: float = 3000.0, k: float = 1.0) -> CellState:
    """Zero-input fixed point reached by relaxation from ``V0``.

    The relaxed state is polished with a root solve on the full derivative
    so slow gates (tau up to seconds) settle well below ``tol``. A state
    that does not meet ``tol`` is still returned, flagged ``converged=False``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    par = params.vector()
    fam = int(params.family)
    y, _, norm = relax_kernel(steady_state_vector(params, V0), par, fam, k, dt,
                              int(round(max_time / dt)), tol)
    if norm >= tol:
        sol = root(lambda z: batch_derivative(z[None, :], par, fam, 0.0, k)[0], y,
                   method="hybr", options={"xtol": 1e-14})
        polished = batch_derivative(sol.x[None, :], par, fam, 0.0, k)[0]
        pnorm = float(np.linalg.norm(polished))
        # accept the polish only if it stayed near the relaxed state
        if np.all(np.isfinite(sol.x)) and pnorm < norm and abs(sol.x[0] - y[0]) < 5.0:
            y, norm = sol.x, pnorm
    return CellState(params, np.asarray(y, dtype=float), converged=bool(norm < tol),
                     residual=float(norm))


@functools.lru_cache(maxsize=64)
def _cached_rest(params: CellParams) -> CellState:
    return resting_state(params)


def default_resting_state(params: CellParams) -> CellState:
    """Memoised ``resting_state(params)``; temperature only rescales gate rates,
    so the fixed point is shared by every protocol."""
    return _cached_rest(params).copy()
