import math

import numpy as np
import pytest

from memtele.detection import BsmOutcome
from memtele.errors import MissingSpinModes, NoResultOutcome
from memtele.fock import NAMED_QUBITS, FockState, Mode, apply_pauli_z, qubit_state
from memtele.memory import (
    add_background_photon,
    apply_feed_forward,
    apply_memory_pauli,
    apply_storage_and_readout,
    dephasing_sigma,
    gamma_at,
    loss_branches,
    pauli_probabilities,
    readout_branches,
)
from memtele.sources import ideal_params, default_params

SPINS = (Mode.SPIN_U, Mode.SPIN_D)


def memory(alpha, beta):
    # |H~> is the D excitation, |V~> the U excitation
    return FockState(SPINS, {(0, 1): alpha, (1, 0): beta})


class TestGamma:
    def test_initial(self):
        assert gamma_at(0.0, default_params()) == 0.30

    def test_one_over_e(self):
        p = default_params()
        assert abs(gamma_at(p.tau_mem, p) - 0.30 / math.e) < 1e-12

    def test_long_time(self):
        assert gamma_at(1e4, default_params()) < 1e-300

    def test_negative_time(self):
        with pytest.raises(ValueError):
            gamma_at(-1.0, default_params())


class TestReadout:
    def test_lossless_dictionary(self):
        p = ideal_params()
        out = apply_storage_and_readout(memory(1, 0), 0.0, p, np.random.default_rng(0))
        assert out.number_distribution([Mode.S_H, Mode.S_V]) == pytest.approx({(1, 0): 1.0})

    @pytest.mark.parametrize("label", list(NAMED_QUBITS))
    def test_qubit_transferred(self, label):
        q = NAMED_QUBITS[label]
        out = apply_storage_and_readout(memory(q.alpha, q.beta), 0.0, ideal_params(), np.random.default_rng(0))
        assert out.reorder((Mode.S_H, Mode.S_V)).allclose(qubit_state(q))

    def test_retrieval_frequency(self):
        p = default_params(spin_depolarization=0.0, background_s=0.0)
        rng = np.random.default_rng(3)
        n = 100_000
        retrieved = 0
        for _ in range(n):
            out = apply_storage_and_readout(memory(1, 0), 0.0, p, rng)
            retrieved += any(sum(o) for o in out.amplitudes)
        assert retrieved / n == pytest.approx(0.30, abs=0.01)

    def test_loss_branch_probabilities(self):
        s = FockState(SPINS, {(1, 1): 1.0})
        probs = [b.norm() for b in loss_branches(s, 0.3)]
        assert probs == pytest.approx([0.09, 0.21, 0.21, 0.49])

    def test_readout_branches_sum_to_one(self):
        p = default_params()
        branches = readout_branches(memory(0.6, 0.8), 2.0, p, "Y", "H", 0.3)
        assert sum(b[0] for b in branches) == pytest.approx(1.0)

    def test_missing_spins(self):
        with pytest.raises(MissingSpinModes):
            apply_storage_and_readout(qubit_state(NAMED_QUBITS["H"]), 0.0, ideal_params(), np.random.default_rng())

    def test_background_lands_in_other_bin(self):
        s = add_background_photon(qubit_state(NAMED_QUBITS["H"]), "V")
        assert s.norm() == pytest.approx(1)
        assert len(s.bins_of(Mode.S_V)) == 2


class TestNoise:
    def test_pauli_weights(self):
        w = pauli_probabilities(0.2)
        assert w.sum() == pytest.approx(1)
        assert w[0] == pytest.approx(0.85)

    def test_pauli_z_on_memory(self):
        out = apply_memory_pauli(memory(0.6, 0.8), "Z")
        assert out.allclose(memory(0.6, -0.8))

    def test_dephasing_off_by_default(self):
        assert dephasing_sigma(5.0, default_params()) == 0.0
        assert dephasing_sigma(5.0, default_params(dephasing_time=10.0)) == pytest.approx(math.sqrt(2) / 2)


class TestFeedForward:
    def test_psi_plus_identity(self):
        s = qubit_state(NAMED_QUBITS["R"])
        assert apply_feed_forward(s, BsmOutcome.PSI_PLUS) is s

    def test_psi_minus_recovers(self):
        s = qubit_state(NAMED_QUBITS["+"])
        flipped = apply_pauli_z(s, Mode.S_H, Mode.S_V)
        assert apply_feed_forward(flipped, BsmOutcome.PSI_MINUS).allclose(s)

    def test_involution(self):
        s = qubit_state(NAMED_QUBITS["R"])
        twice = apply_feed_forward(apply_feed_forward(s, "PsiMinus"), "PsiMinus")
        assert twice.allclose(s)

    def test_no_result(self):
        with pytest.raises(NoResultOutcome):
            apply_feed_forward(qubit_state(NAMED_QUBITS["H"]), BsmOutcome.NO_RESULT)
