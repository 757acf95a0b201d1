"""Voltage-dependent gating kinetics for the three model families.

Every rate is expressed at the 36 degC reference temperature in ms^-1.
Temperature enters through a single factor ``k`` which multiplies each
alpha/beta pair and divides each relaxation time constant.

The scalar functions are compiled with numba so the integrator kernels can
call them directly; they remain ordinary callables from Python.
"""

from __future__ import annotations

import enum
import math

from numba import njit

REFERENCE_TEMPERATURE = 36.0
Q10 = 2.78

# |x| below which x / (exp(x) - 1) switches to its Taylor expansion
_TAYLOR_CUTOFF = 1e-4


class Family(enum.IntEnum):
    NEOCORTICAL = 0
    TCR = 1
    RHI = 2


class GateForm(str, enum.Enum):
    ALPHA_BETA = "alpha-beta"
    STEADY_TAU = "steady-state-tau"
    INSTANTANEOUS = "instantaneous"


GATE_FORMS: dict[Family, dict[str, GateForm]] = {
    Family.NEOCORTICAL: {
        "m": GateForm.ALPHA_BETA,
        "h": GateForm.ALPHA_BETA,
        "n": GateForm.ALPHA_BETA,
        "p": GateForm.STEADY_TAU,
        "q": GateForm.ALPHA_BETA,
        "r": GateForm.ALPHA_BETA,
    },
    Family.TCR: {
        "m": GateForm.INSTANTANEOUS,
        "h": GateForm.STEADY_TAU,
        "p": GateForm.INSTANTANEOUS,
        "r": GateForm.STEADY_TAU,
    },
    Family.RHI: {
        "m": GateForm.INSTANTANEOUS,
        "h": GateForm.ALPHA_BETA,
        "n": GateForm.ALPHA_BETA,
    },
}

# inactivation gates; everything else in GATE_FORMS activates with depolarisation
INACTIVATION_GATES = frozenset({"h", "r"})


def gate_form(family: Family, gate: str) -> GateForm:
    try:
        return GATE_FORMS[Family(family)][gate]
    except KeyError:
        raise ValueError(f"no gate {gate!r} in the {Family(family).name} family") from None


@njit(cache=True, error_model="numpy", inline="always")
def exprel_inv(x):
    """x / (exp(x) - 1), finite through x = 0."""
    if abs(x) < _TAYLOR_CUTOFF:
        return 1.0 - 0.5 * x
    return x / math.expm1(x)


@njit(cache=True, error_model="numpy", inline="always")
def _sigmoid(x):
    return 1.0 / (math.exp(-x) + 1.0)


# -- neocortical (m, h, n relative to the threshold shift V_T) --------------


@njit(cache=True, error_model="numpy", inline="always")
def neo_alpha_m(V, V_T):
    return 1.28 * exprel_inv(-(V - V_T - 13.0) / 4.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_beta_m(V, V_T):
    return 1.4 * exprel_inv((V - V_T - 40.0) / 5.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_alpha_h(V, V_T):
    return 0.128 * math.exp(-(V - V_T - 17.0) / 18.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_beta_h(V, V_T):
    return 4.0 / (math.exp(-(V - V_T - 40.0) / 5.0) + 1.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_alpha_n(V, V_T):
    return 0.16 * exprel_inv(-(V - V_T - 15.0) / 5.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_beta_n(V, V_T):
    return 0.5 * math.exp(-(V - V_T - 10.0) / 40.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_p_inf(V):
    return _sigmoid((V + 35.0) / 10.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_tau_p(V, tau_max):
    return tau_max / (3.3 * math.exp((V + 35.0) / 20.0) + math.exp(-(V + 35.0) / 20.0))


@njit(cache=True, error_model="numpy", inline="always")
def neo_alpha_q(V):
    return 0.209 * exprel_inv((-27.0 - V) / 3.8)


@njit(cache=True, error_model="numpy", inline="always")
def neo_beta_q(V):
    return 0.94 * math.exp((-75.0 - V) / 17.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_alpha_r(V):
    return 0.000457 * math.exp((-13.0 - V) / 50.0)


@njit(cache=True, error_model="numpy", inline="always")
def neo_beta_r(V):
    return 0.0065 / (math.exp((-15.0 - V) / 28.0) + 1.0)


# -- thalamocortical relay ---------------------------------------------------


@njit(cache=True, error_model="numpy", inline="always")
def tcr_m_inf(V):
    return _sigmoid((V + 37.0) / 7.0)


@njit(cache=True, error_model="numpy", inline="always")
def tcr_h_inf(V):
    return 1.0 / (math.exp((V + 41.0) / 4.0) + 1.0)


@njit(cache=True, error_model="numpy", inline="always")
def tcr_tau_h(V):
    a1 = 0.128 * math.exp(-(V + 46.0) / 18.0)
    b1 = 4.0 / (1.0 + math.exp(-(V + 23.0) / 5.0))
    return 1.0 / (a1 + b1)


@njit(cache=True, error_model="numpy", inline="always")
def tcr_p_inf(V):
    return _sigmoid((V + 60.0) / 6.2)


@njit(cache=True, error_model="numpy", inline="always")
def tcr_r_inf(V):
    return 1.0 / (math.exp((V + 84.0) / 4.0) + 1.0)


@njit(cache=True, error_model="numpy", inline="always")
def tcr_tau_r(V):
    return 0.4 * (math.exp(-(V + 25.0) / 10.5) + 28.0)


# -- hippocampal interneuron -------------------------------------------------


@njit(cache=True, error_model="numpy", inline="always")
def rhi_alpha_m(V):
    return exprel_inv(-0.1 * (V + 35.0))


@njit(cache=True, error_model="numpy", inline="always")
def rhi_beta_m(V):
    return 4.0 * math.exp(-(V + 60.0) / 18.0)


@njit(cache=True, error_model="numpy", inline="always")
def rhi_m_inf(V):
    a = rhi_alpha_m(V)
    return a / (a + rhi_beta_m(V))


@njit(cache=True, error_model="numpy", inline="always")
def rhi_alpha_h(V):
    return 0.07 * math.exp(-(V + 58.0) / 20.0)


@njit(cache=True, error_model="numpy", inline="always")
def rhi_beta_h(V):
    return 1.0 / (math.exp(-0.1 * (V + 28.0)) + 1.0)


@njit(cache=True, error_model="numpy", inline="always")
def rhi_alpha_n(V):
    return 0.1 * exprel_inv(-0.1 * (V + 34.0))


@njit(cache=True, error_model="numpy", inline="always")
def rhi_beta_n(V):
    return 0.125 * math.exp(-(V + 44.0) / 80.0)


# -- generic dynamics --------------------------------------------------------


@njit(cache=True, error_model="numpy", inline="always")
def gate_derivative(x, alpha, beta, k):
    return k * (alpha * (1.0 - x) - beta * x)


@njit(cache=True, error_model="numpy", inline="always")
def relaxation_derivative(x, x_inf, tau, k):
    return k * (x_inf - x) / tau


def temperature_factor(T: float) -> float:
    """Scaling ``2.78 ** ((T - 36) / 10)`` applied to all gating kinetics."""
    if not 0.0 < T < 50.0:
        raise ValueError(f"temperature {T} degC outside (0, 50)")
    return Q10 ** ((T - REFERENCE_TEMPERATURE) / 10.0)


_RATE_PAIRS = {
    (Family.NEOCORTICAL, "m"): lambda V, V_T: (neo_alpha_m(V, V_T), neo_beta_m(V, V_T)),
    (Family.NEOCORTICAL, "h"): lambda V, V_T: (neo_alpha_h(V, V_T), neo_beta_h(V, V_T)),
    (Family.NEOCORTICAL, "n"): lambda V, V_T: (neo_alpha_n(V, V_T), neo_beta_n(V, V_T)),
    (Family.NEOCORTICAL, "q"): lambda V, V_T: (neo_alpha_q(V), neo_beta_q(V)),
    (Family.NEOCORTICAL, "r"): lambda V, V_T: (neo_alpha_r(V), neo_beta_r(V)),
    (Family.RHI, "m"): lambda V, V_T: (rhi_alpha_m(V), rhi_beta_m(V)),
    (Family.RHI, "h"): lambda V, V_T: (rhi_alpha_h(V), rhi_beta_h(V)),
    (Family.RHI, "n"): lambda V, V_T: (rhi_alpha_n(V), rhi_beta_n(V)),
}


def rate_pair(family: Family, gate: str, V: float, V_T: float = 0.0) -> tuple[float, float]:
    """Opening and closing rates (ms^-1) of an alpha-beta gate at ``V`` mV.

    RHI ``m`` is instantaneous in the dynamics but is built from an
    alpha/beta pair, so its rates are exposed here as well.
    """
    try:
        fn = _RATE_PAIRS[(Family(family), gate)]
    except KeyError:
        raise ValueError(f"{Family(family).name} gate {gate!r} has no alpha/beta form") from None
    return fn(float(V), float(V_T))


def steady_tau(family: Family, gate: str, V: float, tau_max: float = 0.0) -> tuple[float, float]:
    """Steady state and time constant (ms) of a relaxation gate."""
    family = Family(family)
    V = float(V)
    if family is Family.NEOCORTICAL and gate == "p":
        if tau_max <= 0:
            raise ValueError("the slow potassium gate needs tau_max > 0")
        return neo_p_inf(V), neo_tau_p(V, tau_max)
    if family is Family.TCR and gate == "h":
        return tcr_h_inf(V), tcr_tau_h(V)
    if family is Family.TCR and gate == "r":
        return tcr_r_inf(V), tcr_tau_r(V)
    raise ValueError(f"{family.name} gate {gate!r} has no steady-state/tau form")


def steady_state(family: Family, gate: str, V: float, V_T: float = 0.0) -> float:
    """Steady-state open fraction of any gate, whatever its form."""
    family = Family(family)
    form = gate_form(family, gate)
    if form is GateForm.ALPHA_BETA:
        a, b = rate_pair(family, gate, V, V_T)
        return a / (a + b)
    if form is GateForm.STEADY_TAU:
        return steady_tau(family, gate, V, 1.0)[0]
    if family is Family.TCR:
        return tcr_m_inf(V) if gate == "m" else tcr_p_inf(V)
    return rhi_m_inf(V)
