"""Threshold detectors, Bell-state classification and polarization analysis."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingStokesModes
from .fock import FockState, Mode, PolarizationQubit, apply_polarization_unitary, NAMED_QUBITS
from .sources import ExperimentParams


class Detector(str, enum.Enum):
    B1H = "B1H"
    B1V = "B1V"
    B2H = "B2H"
    B2V = "B2V"
    AT = "AT"
    AR = "AR"


BSM_DETECTORS = frozenset({Detector.B1H, Detector.B1V, Detector.B2H, Detector.B2V})
ANALYZER_DETECTORS = frozenset({Detector.AT, Detector.AR})

# polarization-resolved outputs of the Bell-measurement beam splitter
BSM_MONITOR = (
    (Mode.OUT1_H, Detector.B1H),
    (Mode.OUT1_V, Detector.B1V),
    (Mode.OUT2_H, Detector.B2H),
    (Mode.OUT2_V, Detector.B2V),
)
# after the analyzer rotation S_H carries the transmitted port, S_V the reflected one
ANALYZER_MONITOR = ((Mode.S_H, Detector.AT), (Mode.S_V, Detector.AR))


@dataclass(frozen=True)
class ClickPattern:
    fired: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "fired", frozenset(Detector(d) for d in self.fired))

    @classmethod
    def of(cls, *detectors) -> "ClickPattern":
        return cls(frozenset(detectors))

    def __contains__(self, detector):
        return Detector(detector) in self.fired

    def __len__(self):
        return len(self.fired)

    def restricted(self, detectors: Iterable) -> "ClickPattern":
        return ClickPattern(self.fired & frozenset(detectors))

    def __str__(self):
        return "{" + ",".join(sorted(d.value for d in self.fired)) + "}"


class BsmOutcome(str, enum.Enum):
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    NO_RESULT = "NoResult"

    @property
    def heralded(self) -> bool:
        return self is not BsmOutcome.NO_RESULT


class Basis(str, enum.Enum):
    HV = "HV"
    PM = "PM"
    RL = "RL"

    @property
    def transmitted(self) -> PolarizationQubit:
        """Polarization routed to the transmitted detector ``AT``."""
        return {"HV": NAMED_QUBITS["H"], "PM": NAMED_QUBITS["+"], "RL": NAMED_QUBITS["R"]}[self.value]


def click_probability(n: int, eta: float, dark: float) -> float:
    """Threshold detector: fires unless every photon is missed and no dark count occurs."""
    return 1.0 - (1.0 - dark) * (1.0 - eta) ** n


def _groups(state: FockState, monitored: Sequence) -> tuple[list[Detector], list[list[int]]]:
    detectors: list[Detector] = []
    groups: list[list[int]] = []
    for mode, det in monitored:
        det = Detector(det)
        idx = state.bins_of(mode)
        if det in detectors:
            groups[detectors.index(det)].extend(idx)
        else:
            detectors.append(det)
            groups.append(list(idx))
    return detectors, groups


def _pattern_likelihoods(counts: Sequence[int], eta: float, dark: float) -> np.ndarray:
    """P(pattern | photon counts) for every pattern in ``itertools.product((0, 1), ...)`` order."""
    p = np.array([click_probability(n, eta, dark) for n in counts])
    fire = np.array(list(itertools.product((0, 1), repeat=len(counts))), dtype=bool)
    return np.prod(np.where(fire, p, 1 - p), axis=1)


def click_distribution(state: FockState, monitored: Sequence, eta: float, dark: float,
                       ) -> dict[ClickPattern, float]:
    """Exact distribution over click patterns of the monitored detectors.

    Each photon is detected independently with probability ``eta``; every
    temporal bin of a monitored mode feeds the same detector.
    """
    detectors, groups = _groups(state, monitored)
    counts: dict[tuple, float] = {}
    for occ, amp in state.amplitudes.items():
        key = tuple(sum(occ[i] for i in g) for g in groups)
        counts[key] = counts.get(key, 0.0) + abs(amp) ** 2
    total = sum(counts.values())
    probs = np.zeros(2 ** len(detectors))
    for key, w in counts.items():
        probs += w * _pattern_likelihoods(key, eta, dark)
    if total > 0:
        probs /= total
    out = {}
    for fire, p in zip(itertools.product((0, 1), repeat=len(detectors)), probs):
        out[ClickPattern(frozenset(d for d, f in zip(detectors, fire) if f))] = float(p)
    return out


def occupation_posterior(state: FockState, monitored: Sequence, pattern: ClickPattern, eta: float,
                         dark: float) -> list[tuple[tuple, float]]:
    """Posterior over full occupation tuples given an observed pattern (unnormalized weights)."""
    detectors, groups = _groups(state, monitored)
    out = []
    for occ, amp in state.amplitudes.items():
        lik = 1.0
        for det, g in zip(detectors, groups):
            p = click_probability(sum(occ[i] for i in g), eta, dark)
            lik *= p if det in pattern.fired else 1 - p
        if lik > 0:
            out.append((occ, abs(amp) ** 2 * lik))
    return out


def _sample_pattern(dist: Mapping[ClickPattern, float], rng: np.random.Generator) -> ClickPattern:
    patterns = list(dist)
    p = np.array([dist[k] for k in patterns])
    return patterns[int(rng.choice(len(patterns), p=p / p.sum()))]


def sample_clicks(state: FockState, monitored: Sequence, params: ExperimentParams,
                  rng: np.random.Generator) -> ClickPattern:
    return _sample_pattern(click_distribution(state, monitored, params.eta, params.dark_prob), rng)


_PSI_MINUS = {frozenset({Detector.B1H, Detector.B2V}), frozenset({Detector.B1V, Detector.B2H})}
_PSI_PLUS = {frozenset({Detector.B1H, Detector.B1V}), frozenset({Detector.B2H, Detector.B2V})}


def classify_bsm(pattern: ClickPattern) -> BsmOutcome:
    """Orthogonal polarizations in different ports -> Psi-, in the same port -> Psi+."""
    fired = pattern.fired & BSM_DETECTORS
    if fired in _PSI_MINUS:
        return BsmOutcome.PSI_MINUS
    if fired in _PSI_PLUS:
        return BsmOutcome.PSI_PLUS
    return BsmOutcome.NO_RESULT


def analyzer_matrix(basis, leak: float = 0.0) -> np.ndarray:
    """Map (H, V) amplitudes to (transmitted, reflected) amplitudes for the given basis."""
    e0 = basis if isinstance(basis, PolarizationQubit) else Basis(basis).transmitted
    e1 = e0.orthogonal()
    u = np.array([e0.vector.conj(), e1.vector.conj()])
    if leak > 0:
        s, c = math.sqrt(leak), math.sqrt(1 - leak)
        u = np.array([[c, -s], [s, c]]) @ u
    return u


def rotate_to_analyzer(state: FockState, basis, params: ExperimentParams) -> FockState:
    if not (state.has(Mode.S_H) and state.has(Mode.S_V)):
        raise MissingStokesModes("polarization analysis needs S_H and S_V")
    return apply_polarization_unitary(state, Mode.S_H, Mode.S_V, analyzer_matrix(basis, params.leak_analyzer))


def analyzer_distribution(state: FockState, basis, params: ExperimentParams) -> dict[ClickPattern, float]:
    rotated = rotate_to_analyzer(state, basis, params)
    return click_distribution(rotated, ANALYZER_MONITOR, params.eta, params.dark_prob)


def analyze_polarization(state: FockState, basis, params: ExperimentParams,
                         rng: np.random.Generator) -> ClickPattern:
    """Measure the Stokes photon in ``basis``; ``AT`` fires for the basis' first state."""
    return _sample_pattern(analyzer_distribution(state, basis, params), rng)
