"""Teleportation and entanglement-verification trials, importance-weighted estimators.

Two sampling modes are offered for teleportation trials:

``raw``
    Every random element of a run is drawn from its physical distribution and
    the weight is 1.  Three-fold coincidences are rare (about 1e-6 per run).
``conditioned``
    The photon number, Bell-measurement pattern and memory branch are drawn
    jointly in proportion to their exact probability times the exact
    probability that the analyzer fires at all; the analyzer pattern is then
    drawn from its distribution restricted to at least one click.  Every
    record carries the total three-fold coincidence probability as its weight,
    so weighted averages over scored records estimate the same quantities as
    raw sampling.
"""

from __future__ import annotations

import enum
import math
import multiprocessing
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize

from .detection import (
    BSM_MONITOR,
    ANALYZER_MONITOR,
    Basis,
    BsmOutcome,
    ClickPattern,
    Detector,
    analyzer_distribution,
    analyzer_matrix,
    classify_bsm,
    click_distribution,
    occupation_posterior,
    rotate_to_analyzer,
)
from .errors import NoHeraldedTrials, ParamOutOfRange
from .fock import (
    NAMED_QUBITS,
    FockState,
    Mode,
    PolarizationQubit,
    apply_beam_splitter,
    apply_phase,
    apply_polarization_unitary,
    bell_project,
    project_modes,
)
from .memory import (
    gamma_at,
    apply_feed_forward,
    apply_storage_and_readout,
    pauli_probabilities,
    readout_branches,
    sample_readout_noise,
    PAULIS,
)
from .sources import (
    SNR_HV,
    VISIBILITY_PM,
    ExperimentParams,
    build_entangled_resource,
    ideal_params,
    poisson_weights,
    sample_phase,
    wcp_state,
)

BSM_N_MAX = 4
CHUNK_SIZE = 1000


class AnalyzerClick(str, enum.Enum):
    CORRECT = "correct-port"
    WRONG = "wrong-port"
    NONE = "none"
    BOTH = "both"


class SamplingMode(str, enum.Enum):
    RAW = "raw"
    CONDITIONED = "conditioned"


def input_qubit(label) -> PolarizationQubit:
    if isinstance(label, PolarizationQubit):
        return label
    return NAMED_QUBITS[label]


def input_label(qubit: PolarizationQubit) -> str:
    for name, q in NAMED_QUBITS.items():
        if q == qubit:
            return name
    return f"custom({qubit.alpha:.6g},{qubit.beta:.6g})"


def eigenbasis(qubit: PolarizationQubit):
    """Analyzer basis whose transmitted port projects onto ``qubit``."""
    for basis in Basis:
        if basis.transmitted == qubit:
            return basis
    return qubit


@dataclass(frozen=True)
class TrialRecord:
    input_label: str
    storage_time: float
    bsm: BsmOutcome
    analyzer_basis: str | None = None
    analyzer_click: AnalyzerClick | None = None
    weight: float = 1.0
    n_input_photons: int = 0
    true_pair: bool = False

    @property
    def heralded(self) -> bool:
        return self.bsm.heralded


@dataclass(frozen=True)
class FidelityEstimate:
    n_correct: float
    n_wrong: float
    fidelity: float
    std_err: float
    n_effective: float


# Bell-measurement stage, exact and cached


@dataclass(frozen=True)
class BsmBranch:
    """Memory state left by one photon-number outcome behind the Bell-measurement detectors."""

    probability: float
    spin_state: FockState
    true_pair: bool


@dataclass(frozen=True)
class BsmStage:
    n_wcp: int
    patterns: dict
    branches: dict = field(repr=False)

    @property
    def herald_probability(self) -> float:
        return sum(p for pat, p in self.patterns.items() if classify_bsm(pat).heralded)


def bsm_input_state(params: ExperimentParams, qubit: PolarizationQubit, n_wcp: int) -> FockState:
    """Input pulse and atom-photon resource after the 50:50 beam splitter."""
    resource = build_entangled_resource(params, 0.0).with_n_max(BSM_N_MAX)
    pulse = wcp_state(n_wcp, qubit).with_n_max(BSM_N_MAX)
    state = pulse.tensor(resource)
    state = apply_beam_splitter(state, Mode.IN_H, Mode.AS_H, out_a=Mode.OUT1_H, out_b=Mode.OUT2_H)
    return apply_beam_splitter(state, Mode.IN_V, Mode.AS_V, out_a=Mode.OUT1_V, out_b=Mode.OUT2_V)


@lru_cache(maxsize=256)
def _bsm_stage(key: tuple, alpha: complex, beta: complex, n_wcp: int) -> BsmStage:
    chi, zeta, leak_pbs, eta, dark = key
    params = ideal_params(chi=chi, zeta=zeta, leak_pbs=leak_pbs, eta_coll=1.0, eta_det=eta, dark_prob=dark)
    state = bsm_input_state(params, PolarizationQubit(alpha, beta), n_wcp)
    patterns = click_distribution(state, BSM_MONITOR, eta, dark)
    bsm_labels = [m for m in state.modes if m.name not in (Mode.SPIN_U, Mode.SPIN_D)]
    branches = {}
    for pattern, prob in patterns.items():
        if prob <= 0 or not classify_bsm(pattern).heralded:
            continue
        posterior = occupation_posterior(state, BSM_MONITOR, pattern, eta, dark)
        grouped: dict[tuple, float] = {}
        for occ, w in posterior:
            key_occ = tuple(occ[state.index(m)] for m in bsm_labels)
            grouped[key_occ] = grouped.get(key_occ, 0.0) + w
        total = sum(grouped.values())
        out = []
        for key_occ, w in sorted(grouped.items()):
            spins = project_modes(state, dict(zip(bsm_labels, key_occ))).normalized()
            true_pair = n_wcp == 1 and sum(key_occ) == 2
            out.append(BsmBranch(w / total, spins.reorder((Mode.SPIN_U, Mode.SPIN_D)).with_n_max(2), true_pair))
        branches[pattern] = tuple(out)
    return BsmStage(n_wcp, patterns, branches)


def bsm_stage(params: ExperimentParams, qubit: PolarizationQubit, n_wcp: int) -> BsmStage:
    key = (params.chi, params.zeta, params.leak_pbs, params.eta, params.dark_prob)
    return _bsm_stage(key, qubit.alpha, qubit.beta, n_wcp)


def herald_confidence(params: ExperimentParams, qubit: PolarizationQubit, n_max: int = 2) -> float:
    """Probability that a two-fold Bell-measurement herald came from one input photon and one resource photon."""
    weights = poisson_weights(params.mu, n_max)
    total = true = 0.0
    for n, pn in enumerate(weights):
        stage = bsm_stage(params, qubit, n)
        for pattern, branches in stage.branches.items():
            p = pn * stage.patterns[pattern]
            total += p
            true += p * sum(b.probability for b in branches if b.true_pair)
    return true / total


# teleportation trials


class TeleportationSampler:
    """Precomputed exact distributions for one (params, input, storage time) configuration."""

    def __init__(self, params: ExperimentParams, qubit: PolarizationQubit, t: float, n_max: int = 2):
        if t < 0:
            raise ParamOutOfRange("storage_time", f"{t} must be >= 0")
        self.params, self.qubit, self.t = params, qubit, float(t)
        self.label = input_label(qubit)
        self.basis = eigenbasis(qubit)
        self.basis_name = self.basis.value if isinstance(self.basis, Basis) else "custom"
        self.n_weights = poisson_weights(params.mu, n_max)
        self.stages = [bsm_stage(params, qubit, n) for n in range(n_max + 1)]
        # raw: every pattern for each photon number
        self.raw_patterns = [list(s.patterns) for s in self.stages]
        self.raw_probs = [np.array([s.patterns[k] for k in pats]) for s, pats in zip(self.stages, self.raw_patterns)]
        # conditioned: joint (photon number, heralding pattern, memory branch), each weighted by
        # the probability that the analyzer fires at all.  That probability depends only on the
        # number of Stokes photons, so Pauli errors and phases do not change it.
        joint = []
        for n, (pn, s) in enumerate(zip(self.n_weights, self.stages)):
            for pat, branches in s.branches.items():
                for k, b in enumerate(branches):
                    p = pn * s.patterns[pat] * b.probability
                    if p > 0:
                        joint.append(((n, pat, k), p, self._acceptance(b.spin_state)))
        self.herald_choices = [c for c, _, _ in joint]
        self.acceptance = np.array([a for _, _, a in joint])
        probs = np.array([p * a for _, p, a in joint])
        self.herald_probability = float(sum(p for _, p, _ in joint))
        self.coincidence_probability = float(probs.sum())
        self.herald_probs = probs / self.coincidence_probability if self.coincidence_probability > 0 else probs

    def _background_acceptance(self, spins: FockState) -> list[tuple[str | None, float]]:
        """``P(background) * P(analyzer fires | background)`` for each background option.

        Each stored excitation yields a detected photon with probability
        ``gamma * eta`` independently, so only the excitation numbers matter.
        """
        gamma, eta, dark, b = gamma_at(self.t, self.params), self.params.eta, self.params.dark_prob, self.params.background_s
        iu, idd = spins.index(Mode.SPIN_U), spins.index(Mode.SPIN_D)
        none_from_spins = sum(abs(a) ** 2 * (1 - gamma * eta) ** (occ[iu] + occ[idd]) for occ, a in spins.amplitudes.items())
        none_from_spins /= spins.norm()
        out = [(None, (1 - b) * (1 - (1 - dark) ** 2 * none_from_spins))]
        if b > 0:
            fire = 1 - (1 - dark) ** 2 * (1 - eta) * none_from_spins
            out += [("H", b / 2 * fire), ("V", b / 2 * fire)]
        return out

    def _acceptance(self, spins: FockState) -> float:
        return float(sum(a for _, a in self._background_acceptance(spins)))

    def _branch(self, n: int, pattern: ClickPattern, rng) -> BsmBranch:
        branches = self.stages[n].branches[pattern]
        if len(branches) == 1:
            return branches[0]
        p = np.array([b.probability for b in branches])
        return branches[int(rng.choice(len(branches), p=p / p.sum()))]

    def _classify_analyzer(self, pattern: ClickPattern) -> AnalyzerClick:
        t, r = Detector.AT in pattern, Detector.AR in pattern
        if t and r:
            return AnalyzerClick.BOTH
        if t:
            return AnalyzerClick.CORRECT
        if r:
            return AnalyzerClick.WRONG
        return AnalyzerClick.NONE

    def _record(self, outcome, click=None, weight=1.0, n=0, true_pair=False) -> TrialRecord:
        heralded = outcome.heralded
        return TrialRecord(self.label, self.t, outcome, self.basis_name if heralded else None,
                           click if heralded else None, weight, n, true_pair)

    def raw_trial(self, rng: np.random.Generator) -> TrialRecord:
        n = int(rng.choice(len(self.n_weights), p=self.n_weights))
        probs = self.raw_probs[n]
        pattern = self.raw_patterns[n][int(rng.choice(len(probs), p=probs / probs.sum()))]
        outcome = classify_bsm(pattern)
        if not outcome.heralded:
            return self._record(outcome, n=n)
        branch = self._branch(n, pattern, rng)
        spins = apply_phase(branch.spin_state, Mode.SPIN_D, sample_phase(self.params.phase_sigma, rng))
        stokes = apply_feed_forward(apply_storage_and_readout(spins, self.t, self.params, rng), outcome)
        dist = analyzer_distribution(stokes, self.basis, self.params)
        pats = list(dist)
        p = np.array([dist[k] for k in pats])
        click = pats[int(rng.choice(len(pats), p=p / p.sum()))]
        return self._record(outcome, self._classify_analyzer(click), 1.0, n, branch.true_pair)

    def conditioned_trial(self, rng: np.random.Generator) -> TrialRecord:
        if self.coincidence_probability <= 0:
            raise NoHeraldedTrials("no heralding pattern can lead to an analyzer click")
        i = int(rng.choice(len(self.herald_choices), p=self.herald_probs))
        n, pattern, k = self.herald_choices[i]
        outcome = classify_bsm(pattern)
        branch = self.stages[n].branches[pattern][k]
        spins = apply_phase(branch.spin_state, Mode.SPIN_D, sample_phase(self.params.phase_sigma, rng))
        pauli, _, dephase = sample_readout_noise(self.t, self.params, rng)
        options = self._background_acceptance(branch.spin_state)
        q = np.array([a for _, a in options])
        j = int(rng.choice(len(options), p=q / q.sum()))
        candidates = []
        for p_loss, stokes in readout_branches(spins, self.t, self.params, pauli, options[j][0], dephase):
            dist = analyzer_distribution(apply_feed_forward(stokes, outcome), self.basis, self.params)
            candidates.extend((pat, p_loss * p) for pat, p in dist.items() if len(pat) and p > 0)
        p = np.array([c[1] for c in candidates])
        click = candidates[int(rng.choice(len(candidates), p=p / p.sum()))][0]
        # ratio of the exact target to the proposal; it is 1 because the acceptance does not
        # depend on the Pauli error or the phases, but it is evaluated rather than assumed
        ratio = float(p.sum()) * (1 - self.params.background_s if options[j][0] is None else self.params.background_s / 2) / q[j]
        return self._record(outcome, self._classify_analyzer(click), self.coincidence_probability * ratio, n,
                            branch.true_pair)

    def trial(self, rng: np.random.Generator, mode=SamplingMode.CONDITIONED) -> TrialRecord:
        if SamplingMode(mode) is SamplingMode.RAW:
            return self.raw_trial(rng)
        return self.conditioned_trial(rng)


@lru_cache(maxsize=64)
def _sampler(params: ExperimentParams, qubit: PolarizationQubit, t: float) -> TeleportationSampler:
    return TeleportationSampler(params, qubit, t)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trial ``index`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def run_teleportation_trial(params: ExperimentParams, input, t: float, sampling_mode="conditioned",
                            rng: np.random.Generator | None = None) -> TrialRecord:
    rng = np.random.default_rng() if rng is None else rng
    return _sampler(params, input_qubit(input), float(t)).trial(rng, sampling_mode)


def _run_range(args) -> list[TrialRecord]:
    params, qubit, t, mode, seed, start, stop = args
    sampler = _sampler(params, qubit, t)
    return [sampler.trial(trial_rng(seed, i), mode) for i in range(start, stop)]


def _map_chunks(tasks: list, workers: int) -> list[list[TrialRecord]]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_range(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(min(workers, len(tasks))) as pool:
        return pool.map(_run_range, tasks)


def run_trials(params: ExperimentParams, input, t: float, n_trials: int, sampling_mode="conditioned",
               seed: int = 0, workers: int = 1, start: int = 0) -> list[TrialRecord]:
    """Trials ``start .. start + n_trials - 1``; output is independent of ``workers``."""
    qubit = input_qubit(input)
    bounds = list(range(start, start + n_trials, CHUNK_SIZE)) + [start + n_trials]
    tasks = [(params, qubit, float(t), SamplingMode(sampling_mode), seed, a, b) for a, b in zip(bounds, bounds[1:])]
    return [r for chunk in _map_chunks(tasks, workers) for r in chunk]


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or w.sum() == 0:
        return 0.0
    return float(w.sum() ** 2 / np.sum(w**2))


def run_until(params: ExperimentParams, input, t: float, target_effective: float, sampling_mode="conditioned",
              seed: int = 0, workers: int = 1, max_trials: int = 10**8) -> list[TrialRecord]:
    """Run chunks in index order until the scored records reach ``target_effective`` effective trials."""
    records: list[TrialRecord] = []
    batch = CHUNK_SIZE * max(1, workers)
    while len(records) < max_trials:
        new = run_trials(params, input, t, batch, sampling_mode, seed, workers, start=len(records))
        for i in range(0, len(new), CHUNK_SIZE):
            records.extend(new[i:i + CHUNK_SIZE])
            if effective_sample_size([r.weight for r in records if _scored(r)]) >= target_effective:
                return records
    return records


def _scored(r: TrialRecord) -> bool:
    return r.heralded and r.analyzer_click in (AnalyzerClick.CORRECT, AnalyzerClick.WRONG)


def estimate_fidelity(records: Sequence[TrialRecord]) -> FidelityEstimate:
    """Weighted fraction of correct-port clicks among three-fold coincidences.

    The standard error uses the Kish effective sample size of the scored
    records.  Four-fold events (both analyzer detectors) are not scored.
    """
    if {(r.input_label, r.storage_time) for r in records}.__len__() > 1:
        raise ValueError("records mix inputs or storage times")
    scored = [r for r in records if _scored(r)]
    if not scored:
        raise NoHeraldedTrials("no three-fold coincidences among the records")
    w = np.array([r.weight for r in scored])
    correct = np.array([r.analyzer_click is AnalyzerClick.CORRECT for r in scored])
    n_correct, n_wrong = float(w[correct].sum()), float(w[~correct].sum())
    f = n_correct / (n_correct + n_wrong)
    n_eff = effective_sample_size(w)
    return FidelityEstimate(n_correct, n_wrong, f, math.sqrt(f * (1 - f) / n_eff), n_eff)


def coincidence_probability(records: Sequence[TrialRecord]) -> float:
    """Per-run probability of a scored three-fold coincidence (valid for either sampling mode)."""
    return float(sum(r.weight for r in records if _scored(r)) / len(records))


def mc_herald_confidence(records: Sequence[TrialRecord]) -> float:
    """Fraction of Bell-measurement heralds from a true photon pair; needs raw-mode records."""
    heralded = [r for r in records if r.heralded]
    w = np.array([r.weight for r in heralded])
    true = np.array([r.true_pair for r in heralded])
    return float(w[true].sum() / w.sum())


# entanglement verification

_COINCIDENCE_MONITOR = (
    (Mode.OUT1_H, Detector.B1H),
    (Mode.OUT1_V, Detector.B1V),
    *ANALYZER_MONITOR,
)
_AS_T, _AS_R = Detector.B1H, Detector.B1V


def _desired_pairs(basis: Basis):
    if basis is Basis.HV:
        return [(_AS_T, Detector.AR), (_AS_R, Detector.AT)], [(_AS_T, Detector.AT), (_AS_R, Detector.AR)]
    return [(_AS_T, Detector.AT), (_AS_R, Detector.AR)], [(_AS_T, Detector.AR), (_AS_R, Detector.AT)]


def _coincidences(params: ExperimentParams, basis: Basis, phase: float, pauli: str, background) -> tuple[float, float]:
    """Exact desired/unwanted coincidence probabilities for fixed classical noise, loss summed."""
    state = build_entangled_resource(params, phase, split_bins=False).with_n_max(BSM_N_MAX)
    state = apply_polarization_unitary(state, Mode.AS_H, Mode.AS_V, analyzer_matrix(basis, params.leak_analyzer))
    state = state.relabel({Mode.AS_H: Mode.OUT1_H, Mode.AS_V: Mode.OUT1_V})
    desired, unwanted = _desired_pairs(basis)
    n_d = n_u = 0.0
    for p_loss, stokes in readout_branches(state, 0.0, params, pauli, background):
        rotated = rotate_to_analyzer(stokes, basis, params)
        dist = click_distribution(rotated, _COINCIDENCE_MONITOR, params.eta, params.dark_prob)
        for pattern, p in dist.items():
            for a, s in desired:
                if a in pattern and s in pattern:
                    n_d += p_loss * p
            for a, s in unwanted:
                if a in pattern and s in pattern:
                    n_u += p_loss * p
    return n_d, n_u


@dataclass(frozen=True)
class VerificationResult:
    basis: str
    visibility: float
    snr: float
    n_desired: float
    n_unwanted: float
    std_err: float = 0.0


def _result(basis, n_d, n_u, std_err=0.0) -> VerificationResult:
    return VerificationResult(basis.value, (n_d - n_u) / (n_d + n_u), n_d / n_u if n_u > 0 else math.inf,
                              n_d, n_u, std_err)


def verification_exact(params: ExperimentParams, basis="HV") -> VerificationResult:
    """Coincidence visibility with all classical noise integrated out.

    Stored states carry at most two excitations per ensemble, so every
    coincidence probability is a trigonometric polynomial of degree two in
    the phase.  Five equispaced phases recover it exactly and the Gaussian
    average of ``cos(k phi)`` is ``exp(-k**2 sigma**2 / 2)``.
    """
    basis = Basis(basis)
    phases = 2 * np.pi * np.arange(5) / 5 if params.phase_sigma > 0 else np.zeros(1)
    b = params.background_s
    backgrounds = [(None, 1 - b), ("H", b / 2), ("V", b / 2)]
    d = np.zeros(len(phases))
    u = np.zeros(len(phases))
    for j, phase in enumerate(phases):
        for pauli, wq in zip(PAULIS, pauli_probabilities(params.spin_depolarization)):
            for bg, wb in backgrounds:
                if wq * wb == 0:
                    continue
                dj, uj = _coincidences(params, basis, float(phase), pauli, bg)
                d[j] += wq * wb * dj
                u[j] += wq * wb * uj
    if len(phases) == 1:
        return _result(basis, float(d[0]), float(u[0]))
    damping = [1.0] + [math.exp(-(k * params.phase_sigma) ** 2 / 2) for k in (1, 2)]

    def average(values):
        coeffs = np.fft.rfft(values) / len(values)
        return float(coeffs[0].real + sum(2 * coeffs[k].real * damping[k] for k in (1, 2)))

    return _result(basis, average(d), average(u))


def run_entanglement_verification(params: ExperimentParams, basis="HV", n_trials: int = 20000,
                                  rng: np.random.Generator | None = None) -> VerificationResult:
    """Monte Carlo over phase, Pauli error and background; detection probabilities are exact per trial."""
    basis = Basis(basis)
    if basis is Basis.RL:
        raise ValueError("verification is defined in the HV and PM bases")
    rng = np.random.default_rng() if rng is None else rng
    d = np.empty(n_trials)
    u = np.empty(n_trials)
    for i in range(n_trials):
        phase = sample_phase(params.phase_sigma, rng)
        pauli, background, _ = sample_readout_noise(0.0, params, rng)
        d[i], u[i] = _coincidences(params, basis, phase, pauli, background)
    n_d, n_u = float(d.mean()), float(u.mean())
    # delta-method error of the visibility ratio
    grad_d = 2 * n_u / (n_d + n_u) ** 2
    grad_u = -2 * n_d / (n_d + n_u) ** 2
    var = np.var(grad_d * d + grad_u * u, ddof=1) / n_trials if n_trials > 1 else 0.0
    return _result(basis, n_d, n_u, math.sqrt(var))


def calibrate_entanglement(params: ExperimentParams, snr_target: float = SNR_HV,
                           v_pm_target: float = VISIBILITY_PM) -> tuple[float, float]:
    """Spin depolarization and phase jitter reproducing the measured HV SNR and PM visibility.

    Coarse grid to bracket each root, then bisection.  The HV visibility does
    not depend on the phase jitter, so the two knobs are solved in sequence.
    """
    def snr(eps):
        return verification_exact(params.replace(spin_depolarization=eps, phase_sigma=0.0), "HV").snr - snr_target

    grid = np.linspace(0.0, 0.5, 11)
    vals = [snr(e) for e in grid]
    k = next(i for i in range(len(grid) - 1) if vals[i] > 0 >= vals[i + 1])
    eps = optimize.brentq(snr, grid[k], grid[k + 1], xtol=1e-10)

    def vpm(sigma):
        p = params.replace(spin_depolarization=eps, phase_sigma=sigma)
        return verification_exact(p, "PM").visibility - v_pm_target

    grid = np.linspace(0.0, 1.5, 16)
    vals = [vpm(s) for s in grid]
    k = next(i for i in range(len(grid) - 1) if vals[i] > 0 >= vals[i + 1])
    sigma = optimize.brentq(vpm, grid[k], grid[k + 1], xtol=1e-10)
    return float(eps), float(sigma)


# algebraic teleportation identity


def _memory_qubit(alpha: complex, beta: complex) -> FockState:
    # |H~> = excitation in D, |V~> = excitation in U; modes ordered (SPIN_U, SPIN_D)
    return FockState((Mode.SPIN_U, Mode.SPIN_D), {(0, 1): alpha, (1, 0): beta})


def ideal_resource() -> FockState:
    """One anti-Stokes photon entangled with one spin excitation, equal weights, zero phase."""
    state = build_entangled_resource(ideal_params(chi=0.01, zeta=1.0), 0.0, split_bins=False)
    kept = {o: a for o, a in state.amplitudes.items() if o[0] + o[1] == 1}
    return FockState(state.modes, kept, state.n_max).normalized()


@dataclass(frozen=True)
class BellIdentityReport:
    n_random: int
    max_state_error: float
    max_probability_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_state_error <= self.tolerance and self.max_probability_error <= self.tolerance


def verify_bell_identity(n_random: int = 100, seed: int = 0, tolerance: float = 1e-10) -> BellIdentityReport:
    """Check that each Bell projection leaves the Pauli-rotated input on the memory, with probability 1/4."""
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    rng = np.random.default_rng(seed)
    resource = ideal_resource()
    worst_state = worst_prob = 0.0
    for _ in range(n_random):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        a, b = complex(v[0]), complex(v[1])
        joint = FockState((Mode.IN_H, Mode.IN_V), {(1, 0): a, (0, 1): b}).tensor(resource)
        expected = {
            "PhiPlus": _memory_qubit(b, a),
            "PhiMinus": _memory_qubit(-b, a),
            "PsiPlus": _memory_qubit(a, b),
            "PsiMinus": _memory_qubit(a, -b),
        }
        for name, target in expected.items():
            rest = bell_project(joint, which=name).reorder((Mode.SPIN_U, Mode.SPIN_D))
            prob = rest.norm()
            worst_prob = max(worst_prob, abs(prob - 0.25))
            diff = max(abs(rest.amplitude(o) - 0.5 * target.amplitude(o)) for o in set(rest.amplitudes) | set(target.amplitudes))
            worst_state = max(worst_state, diff)
    return BellIdentityReport(n_random, worst_state, worst_prob, tolerance)
