"""Closed-form noise budget for the three-fold coincidence and the predicted fidelity.

Three coincidence channels are counted per experimental run:

* ``s``: one input photon, one anti-Stokes photon and a retrieved Stokes photon,
  ``s = p_as p_0 gamma eta**3 / 2``;
* ``n_wcp``: two input photons plus any Stokes photon,
  ``kappa p_0**2 p_s eta**3 / 4`` (``kappa`` is 0 for H/V inputs, whose photon
  pairs never give a Psi signature);
* ``n_double``: two anti-Stokes photons and at least one retrieved Stokes photon,
  ``p_as**2 (2 gamma eta - (gamma eta)**2) eta**2 / 4``.

Signal events score ``(1 + v)/2``, noise events ``1/2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from .errors import EmptyGrid, ParamOutOfRange
from .memory import gamma_at
from .sources import (
    VISIBILITY_PM,
    ExperimentParams,
    anti_stokes_probability,
    retrieved_stokes_probability,
)

VISIBILITY_HV_ORACLE = 0.88
CLASSICAL_LIMIT = 2 / 3

# inputs whose two-photon component never produces a Psi signature
KAPPA = {"H": 0, "V": 0, "+": 1, "-": 1, "R": 1, "L": 1}


@dataclass(frozen=True)
class NoiseBudget:
    input_label: str
    s: float
    n_wcp: float
    n_double: float
    kappa: int
    v_eff: float
    fidelity_pred: float
    herald_confidence: float

    @property
    def noise(self) -> float:
        return self.n_wcp + self.n_double


def _check_unit(**values):
    for name, v in values.items():
        if not 0.0 <= v <= 1.0 or math.isnan(v):
            raise ParamOutOfRange(name, f"{v} outside [0, 1]")


def compute_budget(p_as: float, p_0: float, p_s: float, gamma: float, eta: float,
                   v: float = VISIBILITY_HV_ORACLE, zeta: float = 1.0, input_label: str = "H",
                   v_pm: float = VISIBILITY_PM) -> NoiseBudget:
    """Noise budget and predicted fidelity for one input state.

    ``v`` is the HV-basis entanglement visibility, used as-is for H/V inputs.
    Inputs on the equator of the Bloch sphere use ``zeta**2 * v_pm``: the
    PM-basis visibility degraded by the two-photon interference visibility.
    """
    _check_unit(p_as=p_as, p_0=p_0, p_s=p_s, gamma=gamma, eta=eta, v=v, zeta=zeta, v_pm=v_pm)
    if input_label not in KAPPA:
        raise ValueError(f"unknown input label {input_label!r}")
    kappa = KAPPA[input_label]
    ge = gamma * eta
    s = 0.5 * p_as * p_0 * gamma * eta**3
    n_wcp = 0.25 * p_0**2 * p_s * eta**3 * kappa
    n_double = 0.25 * p_as**2 * (2 * ge - ge**2) * eta**2
    v_eff = v if kappa == 0 else zeta**2 * v_pm
    total = s + n_wcp + n_double
    fidelity = (s * (1 + v_eff) / 2 + (n_wcp + n_double) / 2) / total if total > 0 else 0.5

    # two-fold versions: no Stokes photon required
    s2 = 0.5 * p_as * p_0 * eta**2
    n2 = 0.25 * p_0**2 * eta**2 * kappa + 0.25 * p_as**2 * eta**2
    confidence = s2 / (s2 + n2) if s2 + n2 > 0 else 0.0
    return NoiseBudget(input_label, float(s), float(n_wcp), float(n_double), kappa, float(v_eff),
                       float(fidelity), float(confidence))


def budget_inputs(params: ExperimentParams, t: float = 0.0) -> dict:
    """Map simulator parameters onto the rates the budget formula consumes."""
    gamma = gamma_at(t, params)
    retrieved = retrieved_stokes_probability(params.chi, gamma)
    return dict(
        p_as=anti_stokes_probability(params.chi),
        p_0=params.mu * math.exp(-params.mu),
        p_s=1 - (1 - params.background_s) * (1 - retrieved),
        gamma=gamma,
        eta=params.eta,
        zeta=params.zeta,
    )


def budget_from_params(params: ExperimentParams, input_label: str, t: float = 0.5,
                       v: float = VISIBILITY_HV_ORACLE, v_pm: float = VISIBILITY_PM) -> NoiseBudget:
    return compute_budget(**budget_inputs(params, t), v=v, v_pm=v_pm, input_label=input_label)


def predict_fidelity_vs_time(params: ExperimentParams, input_label: str, times: Sequence[float],
                             v: float = VISIBILITY_HV_ORACLE, v_pm: float = VISIBILITY_PM) -> list[tuple[float, float]]:
    """Predicted fidelity along storage time, with the retrieval efficiency decaying as a Gaussian."""
    if len(times) == 0:
        raise ParamOutOfRange("times", "need at least one storage time")
    return [(float(t), budget_from_params(params, input_label, t, v, v_pm).fidelity_pred) for t in times]


def sweep(grid: Mapping[str, Sequence], base: Mapping | None = None) -> list[tuple[dict, NoiseBudget]]:
    """Evaluate :func:`compute_budget` on the Cartesian product of the grid axes.

    Rows follow ``itertools.product`` order over the axes as given, so the
    last axis varies fastest.
    """
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise EmptyGrid("every grid axis needs at least one value")
    base = dict(base or {})
    axes = list(grid)
    rows = []
    for point in itertools.product(*(grid[a] for a in axes)):
        args = {**base, **dict(zip(axes, point))}
        rows.append((dict(zip(axes, point)), compute_budget(**args)))
    return rows


def gamma_at_classical_limit(params: ExperimentParams, input_label: str = "R",
                             v: float = VISIBILITY_HV_ORACLE, v_pm: float = VISIBILITY_PM) -> float:
    """Retrieval efficiency at which the predicted fidelity falls to 2/3.

    Returns 0 when the fidelity never drops that far and ``gamma0`` when it
    starts below the limit.
    """
    def excess(gamma):
        inputs = budget_inputs(params, 0.0)
        retrieved = retrieved_stokes_probability(params.chi, gamma)
        inputs.update(gamma=gamma, p_s=1 - (1 - params.background_s) * (1 - retrieved))
        return compute_budget(**inputs, v=v, v_pm=v_pm, input_label=input_label).fidelity_pred - CLASSICAL_LIMIT

    lo = 1e-12
    if excess(lo) > 0:
        return 0.0
    if excess(params.gamma0) <= 0:
        return params.gamma0
    return optimize.brentq(excess, lo, params.gamma0, xtol=1e-15)


def calibrate_tau_mem(params: ExperimentParams, crossing_time: float = 9.0, input_label: str = "R") -> float:
    """Memory decay time that puts the 2/3 crossing of the predicted fidelity at ``crossing_time``."""
    g_star = gamma_at_classical_limit(params, input_label)
    if not 0 < g_star < params.gamma0:
        raise ParamOutOfRange("tau_mem", "the predicted fidelity never crosses 2/3")
    return crossing_time / math.sqrt(math.log(params.gamma0 / g_star))


def crossing_time(params: ExperimentParams, input_label: str = "R") -> float:
    """Storage time at which the predicted fidelity reaches the classical limit (``inf`` if never)."""
    g_star = gamma_at_classical_limit(params, input_label)
    if g_star == 0.0:
        return math.inf
    return params.tau_mem * math.sqrt(math.log(params.gamma0 / g_star))


def fit_decay_time(times: Sequence[float], fidelities: Sequence[float], params: ExperimentParams,
                   input_label: str = "R", sigma: Sequence[float] | None = None) -> float:
    """Least-squares fit of the memory decay time to measured fidelities.

    The model is the predicted fidelity with ``gamma0 exp(-t**2/tau**2)``;
    only ``tau`` is free.
    """
    times = np.asarray(times, dtype=float)
    fidelities = np.asarray(fidelities, dtype=float)
    sigma = np.ones_like(fidelities) if sigma is None else np.maximum(np.asarray(sigma, float), 1e-12)

    def cost(log_tau):
        p = params.replace(tau_mem=math.exp(log_tau))
        model = np.array([f for _, f in predict_fidelity_vs_time(p, input_label, times)])
        return float(np.sum(((model - fidelities) / sigma) ** 2))

    res = optimize.minimize_scalar(cost, bounds=(math.log(0.1), math.log(1e3)), method="bounded",
                                   options={"xatol": 1e-10})
    return math.exp(res.x)
