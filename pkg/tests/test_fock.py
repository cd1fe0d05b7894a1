import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memtele.errors import NotTwoQubit, TruncationOverflow, UnknownMode
from memtele.fock import (
    BELL_STATES,
    Bin,
    FockState,
    Mode,
    ModeLabel,
    NAMED_QUBITS,
    PolarizationQubit,
    apply_beam_splitter,
    apply_pauli_x,
    apply_pauli_z,
    apply_pbs,
    apply_phase,
    bell_decompose,
    bell_project,
    beam_splitter_matrix,
    project_and_renormalize,
    qubit_state,
)
from memtele.sources import split_temporal_bins

A, B = Mode.IN_H, Mode.AS_H


def coincidence(state, a=A, b=B):
    ia, ib = state.bins_of(a), state.bins_of(b)
    return sum(abs(amp) ** 2 for occ, amp in state.amplitudes.items()
               if sum(occ[i] for i in ia) and sum(occ[i] for i in ib))


def hom_state(zeta):
    state = FockState.basis((A, B), (1, 1))
    state = split_temporal_bins(state, A, 1.0)
    state = split_temporal_bins(state, B, zeta)
    return apply_beam_splitter(state, A, B)


def first_quantized_coincidence(zeta):
    """Two labelled photons in four single-particle modes (a, b) x (matched, mismatched)."""
    bs = beam_splitter_matrix()
    u = np.kron(bs, np.eye(2))  # ordering: a_m, a_mm, b_m, b_mm
    photon_a = u @ np.array([1, 0, 0, 0], dtype=complex)
    photon_b = u @ np.array([0, 0, zeta, math.sqrt(1 - zeta**2)], dtype=complex)
    p = 0.0
    for i in (0, 1):
        for j in (2, 3):
            p += abs(photon_a[i] * photon_b[j] + photon_a[j] * photon_b[i]) ** 2
    return p


random_qubits = st.tuples(st.floats(0, math.pi), st.floats(0, 2 * math.pi)).map(
    lambda a: PolarizationQubit.from_angles(*a))


class TestFockState:
    def test_vacuum_and_basis(self):
        vac = FockState.vacuum((A, B))
        assert vac.amplitude((0, 0)) == 1
        one = FockState.basis((A, B), (1, 0))
        assert one.norm() == pytest.approx(1)
        assert one.inner(vac) == 0

    def test_overflow_rejected_at_construction(self):
        with pytest.raises(TruncationOverflow):
            FockState.basis((A,), (3,))

    def test_unknown_mode(self):
        with pytest.raises(UnknownMode):
            FockState.vacuum((A,)).index(Mode.S_H)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            FockState.vacuum((A, A))

    def test_tensor_orders_modes(self):
        s = FockState.basis((A,), (1,)).tensor(FockState.basis((B,), (0,)))
        assert [m.name for m in s.modes] == [A, B]
        assert s.amplitude((1, 0)) == 1

    def test_allclose_up_to_phase(self):
        s = qubit_state(NAMED_QUBITS["R"])
        assert s.allclose(s.scaled(1j), up_to_phase=True)
        assert not s.allclose(s.scaled(1j))


class TestPolarizationQubit:
    def test_normalization_enforced(self):
        with pytest.raises(ValueError):
            PolarizationQubit(1, 1)

    def test_orthogonal(self):
        for q in NAMED_QUBITS.values():
            assert abs(np.vdot(q.vector, q.orthogonal().vector)) < 1e-12

    @given(random_qubits)
    def test_fidelity_with_self(self, q):
        assert q.fidelity(q) == pytest.approx(1)


class TestBeamSplitter:
    def test_single_photon_split(self):
        out = apply_beam_splitter(FockState.basis((A, B), (1, 0)), A, B)
        assert abs(out.amplitude((1, 0))) ** 2 == pytest.approx(0.5)
        assert abs(out.amplitude((0, 1))) ** 2 == pytest.approx(0.5)

    def test_hom_dip(self):
        out = apply_beam_splitter(FockState.basis((A, B), (1, 1)), A, B)
        assert set(out.amplitudes) == {(2, 0), (0, 2)}
        assert out.amplitude((1, 1)) == 0

    def test_distinguishable_photons(self):
        assert coincidence(hom_state(0.0)) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("zeta", [0.0, 0.3, 0.5, 0.9, 0.95, 1.0])
    def test_partial_overlap_matches_first_quantization(self, zeta):
        assert abs(coincidence(hom_state(zeta)) - first_quantized_coincidence(zeta)) < 1e-10

    def test_two_passes_convention(self):
        # symmetric convention: two 50:50 passes give i times a swap, a pass and its inverse give identity
        state = FockState((A, B), {(1, 0): 0.6, (0, 1): 0.8j})
        twice = apply_beam_splitter(apply_beam_splitter(state, A, B), A, B)
        assert twice.amplitude((0, 1)) == pytest.approx(1j * 0.6)
        assert twice.amplitude((1, 0)) == pytest.approx(1j * 0.8j)
        back = apply_beam_splitter(apply_beam_splitter(state, A, B), A, B, inverse=True)
        assert back.allclose(state)

    def test_overflow(self):
        state = FockState.basis((A, B), (2, 1), n_max=2)
        with pytest.raises(TruncationOverflow):
            apply_beam_splitter(state, A, B)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False, allow_infinity=False), min_size=6, max_size=6),
           st.floats(0, 1))
    def test_unitarity_and_number_conservation(self, amps, r):
        occs = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)]
        total = math.sqrt(sum(abs(a) ** 2 for a in amps))
        if total < 1e-6:
            return
        state = FockState((A, B), {o: a / total for o, a in zip(occs, amps)}, n_max=2)
        out = apply_beam_splitter(state, A, B, reflectivity=r)
        assert out.norm() == pytest.approx(state.norm(), abs=1e-10)

        def totals(s):
            d = {}
            for o, a in s.amplitudes.items():
                d[sum(o)] = d.get(sum(o), 0) + abs(a) ** 2
            return d

        before, after = totals(state), totals(out)
        for n in set(before) | set(after):
            assert before.get(n, 0) == pytest.approx(after.get(n, 0), abs=1e-10)


class TestPolarizationElements:
    def test_pbs_routes(self):
        state = FockState((Mode.IN_H, Mode.IN_V), {(1, 0): 0.6, (0, 1): 0.8})
        out = apply_pbs(state, Mode.IN_H, Mode.IN_V, Mode.OUT1_H, Mode.OUT2_V)
        assert out.amplitude((1, 0)) == 0.6 and out.amplitude((0, 1)) == 0.8
        assert [m.name for m in out.modes] == [Mode.OUT1_H, Mode.OUT2_V]
        assert out.norm() == pytest.approx(1)

    def test_pauli_z(self):
        h, v = Mode.S_H, Mode.S_V
        assert apply_pauli_z(qubit_state(NAMED_QUBITS["H"]), h, v).allclose(qubit_state(NAMED_QUBITS["H"]))
        assert apply_pauli_z(qubit_state(NAMED_QUBITS["V"]), h, v).allclose(qubit_state(NAMED_QUBITS["V"]).scaled(-1))
        assert apply_pauli_z(qubit_state(NAMED_QUBITS["+"]), h, v).allclose(qubit_state(NAMED_QUBITS["-"]))

    def test_pauli_x_swaps(self):
        out = apply_pauli_x(qubit_state(NAMED_QUBITS["H"]), Mode.S_H, Mode.S_V)
        assert out.allclose(qubit_state(NAMED_QUBITS["V"]))

    @given(random_qubits, st.floats(-10, 10))
    def test_phase_preserves_norm(self, q, phi):
        s = apply_phase(qubit_state(q), Mode.S_V, phi)
        assert s.norm() == pytest.approx(1, abs=1e-10)
        assert s.amplitude((0, 1)) == pytest.approx(q.beta * np.exp(1j * phi))


class TestProjection:
    def test_vacuum_projection(self):
        vac = FockState.vacuum((A, B))
        out, p = project_and_renormalize(vac, A, 0)
        assert p == pytest.approx(1) and out.allclose(vac)

    def test_half_projection(self):
        s = FockState((A,), {(0,): 1 / math.sqrt(2), (1,): 1 / math.sqrt(2)})
        _, p = project_and_renormalize(s, A, 1)
        assert p == pytest.approx(0.5)

    def test_hom_coincidence_projection(self):
        out = apply_beam_splitter(FockState.basis((A, B), (1, 1)), A, B)
        s, p = project_and_renormalize(out, A, 1)
        _, p2 = project_and_renormalize(s, B, 1) if p > 0 else (None, 0.0)
        assert p * p2 == 0


class TestBell:
    def two_photon(self, amps):
        modes = (Mode.IN_H, Mode.IN_V, Mode.AS_H, Mode.AS_V)
        return FockState(modes, amps)

    def test_hv_expansion(self):
        c = bell_decompose(self.two_photon({(1, 0, 0, 1): 1.0}))
        assert c["PsiPlus"] == pytest.approx(1 / math.sqrt(2))
        assert c["PsiMinus"] == pytest.approx(1 / math.sqrt(2))
        assert c["PhiPlus"] == 0 and c["PhiMinus"] == 0

    @pytest.mark.parametrize("name", list(BELL_STATES))
    def test_idempotent(self, name):
        c = bell_decompose(self.two_photon(BELL_STATES[name]))
        for other, value in c.items():
            assert value == pytest.approx(1.0 if other == name else 0.0)

    def test_requires_four_modes(self):
        with pytest.raises(NotTwoQubit):
            bell_decompose(FockState.vacuum((Mode.IN_H, Mode.IN_V)))

    def test_rejects_non_qubit_occupation(self):
        with pytest.raises(NotTwoQubit):
            bell_project(self.two_photon({(2, 0, 0, 0): 1.0}))
