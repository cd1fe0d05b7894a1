"""Storage, readout and feed-forward of the two-ensemble memory qubit.

The memory qubit is dual-rail: an excitation in ensemble D is ``|H~>`` and is
read out as an H-polarized Stokes photon, an excitation in U is ``|V~>`` and
reads out as V.
"""

from __future__ import annotations

import math

import numpy as np

from .detection import BsmOutcome
from .errors import MissingSpinModes, NoResultOutcome
from .fock import (
    Bin,
    FockState,
    Mode,
    ModeLabel,
    apply_pauli_x,
    apply_pauli_z,
    apply_phase,
)
from .sources import ExperimentParams

PAULIS = ("I", "X", "Y", "Z")
READOUT_MAP = {Mode.SPIN_D: Mode.S_H, Mode.SPIN_U: Mode.S_V}


def gamma_at(t: float, params: ExperimentParams) -> float:
    """Retrieval efficiency after storing for ``t`` microseconds (Gaussian decay)."""
    if t < 0:
        raise ValueError("storage time must be >= 0")
    return params.gamma0 * math.exp(-((t / params.tau_mem) ** 2))


def _require_spins(state: FockState):
    if not (state.has(Mode.SPIN_U) and state.has(Mode.SPIN_D)):
        raise MissingSpinModes("state has no SPIN_U/SPIN_D modes")


def apply_memory_pauli(state: FockState, pauli: str) -> FockState:
    """Pauli operator on the memory qubit (``Y`` up to a global phase)."""
    _require_spins(state)
    if pauli in ("Z", "Y"):
        state = apply_pauli_z(state, Mode.SPIN_D, Mode.SPIN_U)
    if pauli in ("X", "Y"):
        state = apply_pauli_x(state, Mode.SPIN_D, Mode.SPIN_U)
    return state


def pauli_probabilities(depolarization: float) -> np.ndarray:
    """Pauli-twirl weights of a depolarizing channel of strength ``depolarization``."""
    q = depolarization / 4
    return np.array([1 - 3 * q, q, q, q])


def dephasing_sigma(t: float, params: ExperimentParams) -> float:
    """Random spin-wave phase spread giving coherence ``exp(-t**2 / T**2)``."""
    if math.isinf(params.dephasing_time):
        return 0.0
    return math.sqrt(2) * t / params.dephasing_time


def loss_branches(state: FockState, gamma: float) -> list[FockState]:
    """Kraus branches of independent per-excitation survival on both spin modes.

    Each returned state is unnormalized; its squared norm is the probability
    of that loss outcome.  Branches are ordered by ``(lost_U, lost_D)``.
    """
    _require_spins(state)
    iu, idd = state.index(Mode.SPIN_U), state.index(Mode.SPIN_D)
    branches: dict[tuple, dict] = {}
    for occ, amp in state.amplitudes.items():
        nu, nd = occ[iu], occ[idd]
        for ku in range(nu + 1):
            wu = math.comb(nu, ku) * gamma ** (nu - ku) * (1 - gamma) ** ku
            for kd in range(nd + 1):
                w = wu * math.comb(nd, kd) * gamma ** (nd - kd) * (1 - gamma) ** kd
                if w == 0:
                    continue
                new = list(occ)
                new[iu], new[idd] = nu - ku, nd - kd
                bucket = branches.setdefault((ku, kd), {})
                key = tuple(new)
                bucket[key] = bucket.get(key, 0) + amp * math.sqrt(w)
    return [FockState(state.modes, branches[k], state.n_max) for k in sorted(branches)]


def convert_to_stokes(state: FockState) -> FockState:
    """Read pulses map the spin modes onto Stokes polarization modes."""
    _require_spins(state)
    return state.relabel(READOUT_MAP)


def add_background_photon(state: FockState, polarization: str) -> FockState:
    """Add one uncorrelated Stokes photon, temporally distinct from the retrieved one."""
    mode = ModeLabel(Mode.S_H if polarization == "H" else Mode.S_V, Bin.MISMATCHED)
    state = state.with_modes([ModeLabel(Mode.S_H, Bin.MISMATCHED), ModeLabel(Mode.S_V, Bin.MISMATCHED)])
    i = state.index(mode)
    amps = {}
    for occ, amp in state.amplitudes.items():
        new = list(occ)
        new[i] += 1
        amps[tuple(new)] = amp * math.sqrt(new[i])
    return FockState(state.modes, amps, max(state.n_max, 3))


def readout_branches(state: FockState, t: float, params: ExperimentParams, pauli: str = "I",
                     background: str | None = None, extra_phase: float = 0.0) -> list[tuple[float, FockState]]:
    """Every loss outcome of one readout, given the sampled Pauli error and background photon.

    Returns ``(probability, normalized Stokes state)`` pairs whose
    probabilities sum to the input norm.
    """
    state = apply_memory_pauli(state, pauli)
    if extra_phase:
        state = apply_phase(state, Mode.SPIN_D, extra_phase)
    out = []
    for branch in loss_branches(state, gamma_at(t, params)):
        p = branch.norm()
        if p <= 0:
            continue
        stokes = convert_to_stokes(branch.scaled(1 / math.sqrt(p)))
        stokes = stokes.with_modes([Mode.S_H, Mode.S_V])
        # a polarization rotation can gather every photon in one mode
        stokes = stokes.with_n_max(max(stokes.n_max, max(sum(o) for o in stokes.amplitudes) + 1))
        if background is not None:
            stokes = add_background_photon(stokes, background)
        out.append((p, stokes))
    return out


def sample_readout_noise(t: float, params: ExperimentParams, rng: np.random.Generator) -> tuple[str, str | None, float]:
    """Draw the classical noise of one readout: Pauli error, background photon, spin-wave phase."""
    pauli = PAULIS[int(rng.choice(4, p=pauli_probabilities(params.spin_depolarization)))]
    background = None
    if params.background_s > 0 and rng.random() < params.background_s:
        background = "H" if rng.random() < 0.5 else "V"
    sigma = dephasing_sigma(t, params)
    phase = float(rng.normal(0.0, sigma)) if sigma > 0 else 0.0
    return pauli, background, phase


def apply_storage_and_readout(state: FockState, t: float, params: ExperimentParams,
                              rng: np.random.Generator) -> FockState:
    """Store for ``t``, then read out: a sampled trajectory of the noisy memory.

    Depolarization, background and per-excitation loss are drawn from their
    exact probabilities; the returned Stokes state is normalized.
    """
    _require_spins(state)
    if state.norm() == 0:
        raise ValueError("cannot read out an empty state")
    state = state.normalized()
    pauli, background, phase = sample_readout_noise(t, params, rng)
    branches = readout_branches(state, t, params, pauli, background, phase)
    p = np.array([b[0] for b in branches])
    k = int(rng.choice(len(branches), p=p / p.sum()))
    return branches[k][1]


def apply_feed_forward(state: FockState, outcome: BsmOutcome) -> FockState:
    """Psi+ needs no correction; Psi- is undone by a Pauli-z on the Stokes photon."""
    outcome = BsmOutcome(outcome)
    if outcome is BsmOutcome.NO_RESULT:
        raise NoResultOutcome("feed-forward is undefined without a Bell-measurement result")
    if outcome is BsmOutcome.PSI_PLUS:
        return state
    return apply_pauli_z(state, Mode.S_H, Mode.S_V)
